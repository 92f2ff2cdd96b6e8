//! JSON schedule documents:
//! `{mode?, h1?, w1?, stages: [...] | named: {kind, params} | symmetrized: {...}}`.

use serde::{Deserialize, Serialize};

use super::named::NamedSchedule;
use super::schedule::{symmetrize, Schedule, Source, StageParams};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ScalarMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<Scalar>,
    #[serde(flatten)]
    pub body: ScheduleBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleBody {
    Stages(Vec<StageParams>),
    Named(NamedSchedule),
    Symmetrized(Box<ScheduleDoc>),
}

impl ScheduleDoc {
    pub fn named(spec: NamedSchedule) -> Self {
        ScheduleDoc { mode: None, h1: None, w1: None, body: ScheduleBody::Named(spec) }
    }

    pub fn build(&self) -> Result<Schedule> {
        let sched = match &self.body {
            ScheduleBody::Stages(stages) => {
                let h1 = self.h1.clone().unwrap_or_else(Scalar::one);
                let w1 = self.w1.clone().unwrap_or_else(Scalar::one);
                return match self.mode {
                    Some(m) => Schedule::explicit_with_mode(h1, w1, stages.clone(), m),
                    None => Schedule::explicit(h1, w1, stages.clone()),
                };
            }
            ScheduleBody::Named(spec) => spec.build()?,
            ScheduleBody::Symmetrized(inner) => symmetrize(&inner.build()?),
        };
        let sched = match (&self.h1, &self.w1) {
            (None, None) => sched,
            (h, w) => sched.with_base(
                h.clone().unwrap_or_else(|| sched.base_height().clone()),
                w.clone().unwrap_or_else(|| sched.base_width().clone()),
            )?,
        };
        match self.mode {
            Some(m) if m != sched.mode() => sched.with_mode(m),
            _ => Ok(sched),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("schedule document: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule documents always serialize")
    }
}

impl Schedule {
    /// Document that rebuilds this schedule.
    pub fn to_doc(&self) -> ScheduleDoc {
        let body = match &self.source {
            Source::Explicit(v) => ScheduleBody::Stages(v.clone()),
            Source::Named(n) => ScheduleBody::Named(n.clone()),
            Source::Symmetrized(inner) => ScheduleBody::Symmetrized(Box::new(inner.to_doc())),
        };
        ScheduleDoc { mode: Some(self.mode), h1: Some(self.h1.clone()), w1: Some(self.w1.clone()), body }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_document() {
        let text = r#"{"h1": 1, "w1": 1, "stages": [{"r": 2, "spacer": {"variant": "explicit", "values": [0, 1]}}]}"#;
        let s = ScheduleDoc::from_json(text).unwrap().build().unwrap();
        assert_eq!(s.height(2).unwrap(), Scalar::int(3));
        assert_eq!(s.tower_measure(2).unwrap(), Scalar::ratio(3, 2));
    }

    #[test]
    fn named_and_symmetrized_round_trip() {
        let text = r#"{"symmetrized": {"named": {"kind": "staircase34", "params": {"depth": 4}}}}"#;
        let doc = ScheduleDoc::from_json(text).unwrap();
        let s = doc.build().unwrap();
        assert!(s.is_symmetric());
        assert_eq!(s.stage(1).unwrap().r(), 7);
        let again = ScheduleDoc::from_json(&s.to_doc().to_json()).unwrap().build().unwrap();
        assert_eq!(again.height(4).unwrap(), s.height(4).unwrap());
    }

    #[test]
    fn sqrt2_in_rational_mode_is_a_mode_error() {
        let text =
            r#"{"mode": "exact-rational", "stages": [{"r": 2, "spacer": {"variant": "constant", "value": "sqrt2"}}]}"#;
        let s = ScheduleDoc::from_json(text).unwrap().build().unwrap();
        assert!(matches!(s.stage(1), Err(Error::Mode { stage: 1, .. })));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ScheduleDoc::from_json(r#"{"named": {"kind": "flat", "params": {}}, "bogus": 1}"#).is_err());
    }
}
