use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::named::NamedSchedule;
use super::spacer::SpacerMap;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};

/// Default cap on the bit length of any exact height or width.
pub const DEFAULT_DIGIT_BUDGET: u64 = 1 << 16;

/// Cut number and spacer map of one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    pub r: u64,
    pub spacer: SpacerMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bottom_spacer: Option<Scalar>,
}

impl StageParams {
    pub fn new(r: u64, spacer: SpacerMap) -> Self {
        StageParams { r, spacer, bottom_spacer: None }
    }

    pub fn flat(r: u64) -> Self {
        Self::new(r, SpacerMap::flat())
    }
}

/// Geometry of tower `X_n` together with the placement of its `r_n` copies
/// inside `X_{n+1}`.
#[derive(Clone, Debug)]
pub struct TowerStage {
    pub n: usize,
    pub params: StageParams,
    pub height: Scalar,
    pub width: Scalar,
    /// `offsets[j]` is the bottom of copy `j + 1` inside `X_{n+1}`.
    pub offsets: Vec<Scalar>,
    pub bottom_spacer: Scalar,
    /// `s_n(1..=r_n)`.
    pub spacers: Vec<Scalar>,
    /// Common offset step when the copies are evenly spaced.
    pub period: Option<Scalar>,
    pub next_height: Scalar,
    pub next_width: Scalar,
}

impl TowerStage {
    pub fn r(&self) -> u64 {
        self.params.r
    }

    /// `μ(X_n) = h_n · w_n`.
    pub fn tower_measure(&self) -> Scalar {
        &self.height * &self.width
    }

    pub fn total_spacer(&self) -> Scalar {
        self.spacers.iter().fold(self.bottom_spacer.clone(), |acc, s| &acc + s)
    }

    /// Measure of the spacers added when building `X_{n+1}`.
    pub fn spacer_mass_added(&self) -> Scalar {
        &self.next_width * &self.total_spacer()
    }

    /// `o_{n,j}` with 1-based `j`.
    pub fn offset(&self, j: usize) -> &Scalar {
        &self.offsets[j - 1]
    }
}

pub(crate) enum Source {
    Explicit(Vec<StageParams>),
    Named(NamedSchedule),
    Symmetrized(Arc<Schedule>),
}

/// A cutting-and-stacking schedule `n ↦ (r_n, s_n)` with its base tower.
///
/// Stage geometry is computed on demand, sequentially, and cached; lookups
/// from several threads are safe.
pub struct Schedule {
    pub(crate) h1: Scalar,
    pub(crate) w1: Scalar,
    pub(crate) mode: ScalarMode,
    pub(crate) source: Source,
    pub(crate) depth: usize,
    pub(crate) digit_budget: u64,
    cache: RwLock<Vec<Arc<TowerStage>>>,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            Source::Explicit(v) => format!("explicit({} stages)", v.len()),
            Source::Named(n) => format!("named({})", n.kind()),
            Source::Symmetrized(inner) => format!("symmetrized({:?})", inner),
        };
        f.debug_struct("Schedule")
            .field("source", &kind)
            .field("h1", &self.h1)
            .field("w1", &self.w1)
            .field("mode", &self.mode)
            .field("depth", &self.depth)
            .finish()
    }
}

impl Clone for Schedule {
    fn clone(&self) -> Self {
        Schedule {
            h1: self.h1.clone(),
            w1: self.w1.clone(),
            mode: self.mode,
            source: match &self.source {
                Source::Explicit(v) => Source::Explicit(v.clone()),
                Source::Named(n) => Source::Named(n.clone()),
                Source::Symmetrized(s) => Source::Symmetrized(s.clone()),
            },
            depth: self.depth,
            digit_budget: self.digit_budget,
            cache: RwLock::new(self.cache.read().clone()),
        }
    }
}

impl Schedule {
    pub(crate) fn from_source(h1: Scalar, w1: Scalar, mode: ScalarMode, source: Source, depth: usize) -> Result<Self> {
        if h1.signum() <= 0 || w1.signum() <= 0 {
            return Err(Error::config("base height and width must be positive"));
        }
        let h1 = h1.in_mode(mode).map_err(|d| Error::Mode { stage: 1, detail: d })?;
        let w1 = w1.in_mode(mode).map_err(|d| Error::Mode { stage: 1, detail: d })?;
        Ok(Schedule { h1, w1, mode, source, depth, digit_budget: DEFAULT_DIGIT_BUDGET, cache: RwLock::new(Vec::new()) })
    }

    /// Schedule from an explicit list of stage parameters; stage `n` exists
    /// for `1 <= n <= stages.len()`. The mode is quadratic when any spacer
    /// needs √2 and exact-rational otherwise.
    pub fn explicit(h1: Scalar, w1: Scalar, stages: Vec<StageParams>) -> Result<Self> {
        let mode = if stages.iter().any(params_need_sqrt2) || h1.involves_sqrt2() {
            ScalarMode::QuadraticSqrt2
        } else {
            ScalarMode::ExactRational
        };
        Self::explicit_with_mode(h1, w1, stages, mode)
    }

    pub fn explicit_with_mode(h1: Scalar, w1: Scalar, stages: Vec<StageParams>, mode: ScalarMode) -> Result<Self> {
        if let Some(p) = stages.iter().find(|p| p.r < 2) {
            return Err(Error::config(format!("cut number r = {} must exceed 1", p.r)));
        }
        let depth = stages.len();
        Self::from_source(h1, w1, mode, Source::Explicit(stages), depth)
    }

    pub fn named(spec: NamedSchedule) -> Result<Self> {
        spec.build()
    }

    pub fn mode(&self) -> ScalarMode {
        self.mode
    }

    /// Number of stages whose parameters are available.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn base_height(&self) -> &Scalar {
        &self.h1
    }

    pub fn base_width(&self) -> &Scalar {
        &self.w1
    }

    pub fn named_spec(&self) -> Option<&NamedSchedule> {
        match &self.source {
            Source::Named(n) => Some(n),
            _ => None,
        }
    }

    pub fn symmetrized_inner(&self) -> Option<&Schedule> {
        match &self.source {
            Source::Symmetrized(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self.source, Source::Symmetrized(_))
    }

    pub fn with_digit_budget(mut self, bits: u64) -> Self {
        self.digit_budget = bits;
        self.cache.write().clear();
        self
    }

    /// Same schedule restricted to its first `depth` stages.
    pub fn truncated(&self, depth: usize) -> Self {
        let mut s = self.clone();
        s.depth = s.depth.min(depth);
        s.cache.write().truncate(s.depth);
        s
    }

    /// Same stage rule over a different base tower.
    pub fn with_base(&self, h1: Scalar, w1: Scalar) -> Result<Self> {
        let source = match &self.source {
            Source::Symmetrized(inner) => Source::Symmetrized(Arc::new(inner.with_base(h1.clone(), w1.clone())?)),
            Source::Explicit(v) => Source::Explicit(v.clone()),
            Source::Named(n) => Source::Named(n.clone()),
        };
        let mut s = Self::from_source(h1, w1, self.mode, source, self.depth)?;
        s.digit_budget = self.digit_budget;
        Ok(s)
    }

    /// Same schedule evaluated in another scalar mode.
    pub fn with_mode(&self, mode: ScalarMode) -> Result<Self> {
        if mode == ScalarMode::Float {
            return Ok(self.clone().into_float());
        }
        let source = match &self.source {
            Source::Symmetrized(inner) => Source::Symmetrized(Arc::new(inner.with_mode(mode)?)),
            Source::Explicit(v) => Source::Explicit(v.clone()),
            Source::Named(n) => Source::Named(n.clone()),
        };
        let mut s = Self::from_source(self.h1.clone(), self.w1.clone(), mode, source, self.depth)?;
        s.digit_budget = self.digit_budget;
        Ok(s)
    }

    /// Converts every value to float mode.
    pub fn into_float(self) -> Self {
        let mut s = self;
        s.mode = ScalarMode::Float;
        s.h1 = s.h1.to_float();
        s.w1 = s.w1.to_float();
        if let Source::Symmetrized(inner) = &s.source {
            s.source = Source::Symmetrized(Arc::new((**inner).clone().into_float()));
        }
        s.cache.write().clear();
        s
    }

    /// Parameters `(r_n, s_n)` of stage `n`, given the height of `X_n`.
    fn params_for(&self, n: usize, height: &Scalar) -> Result<StageParams> {
        match &self.source {
            Source::Explicit(v) => Ok(v[n - 1].clone()),
            Source::Named(spec) => spec.params(n, height),
            Source::Symmetrized(inner) => {
                let p = &inner.stage(n)?.params;
                Ok(symmetrize_params(p))
            }
        }
    }

    /// Exact geometry of stage `n` (1-based).
    pub fn stage(&self, n: usize) -> Result<Arc<TowerStage>> {
        if n == 0 {
            return Err(Error::Range("stage indices start at 1".into()));
        }
        if n > self.depth {
            return Err(Error::Range(format!("stage {n} is beyond the schedule horizon of {} stages", self.depth)));
        }
        if let Some(s) = self.cache.read().get(n - 1) {
            return Ok(s.clone());
        }
        let mut cache = self.cache.write();
        while cache.len() < n {
            let next_n = cache.len() + 1;
            let (h, w) = match cache.last() {
                Some(prev) => (prev.next_height.clone(), prev.next_width.clone()),
                None => (self.h1.clone(), self.w1.clone()),
            };
            let stage = self.build_stage(next_n, h, w)?;
            cache.push(Arc::new(stage));
        }
        Ok(cache[n - 1].clone())
    }

    fn build_stage(&self, n: usize, height: Scalar, width: Scalar) -> Result<TowerStage> {
        let params = self.params_for(n, &height)?;
        if params.r < 2 {
            return Err(Error::config(format!("stage {n}: cut number must exceed 1")));
        }
        let layout = params.spacer.layout(params.r).map_err(|e| match e {
            Error::Invalid(d) => Error::Invalid(format!("stage {n}: {d}")),
            other => other,
        })?;
        let to_mode = |s: &Scalar| s.in_mode(self.mode).map_err(|detail| Error::Mode { stage: n, detail });
        let mut bottom = to_mode(&layout.bottom)?;
        if let Some(b) = &params.bottom_spacer {
            if b.signum() < 0 {
                return Err(Error::invalid(format!("stage {n}: negative bottom spacer")));
            }
            bottom = &bottom + &to_mode(b)?;
        }
        let spacers = layout.above.iter().map(to_mode).collect::<Result<Vec<_>>>()?;

        let mut offsets = Vec::with_capacity(spacers.len());
        let mut pos = bottom.clone();
        for s in &spacers {
            offsets.push(pos.clone());
            pos = &(&pos + &height) + s;
        }
        let next_height = pos;
        let next_width = &width / &Scalar::int(params.r as i64);

        let period = {
            let first = &spacers[0];
            spacers[..spacers.len() - 1].iter().all(|s| s == first).then(|| &height + first)
        };

        for (what, v) in [("height", &next_height), ("width", &next_width)] {
            if v.bits() > self.digit_budget {
                return Err(Error::Resource {
                    stage: n + 1,
                    detail: format!("{what} needs {} bits, over the digit budget of {}", v.bits(), self.digit_budget),
                });
            }
        }

        Ok(TowerStage {
            n,
            params,
            height,
            width,
            offsets,
            bottom_spacer: bottom,
            spacers,
            period,
            next_height,
            next_width,
        })
    }

    /// Height of `X_n`; also valid for `n = depth + 1`.
    pub fn height(&self, n: usize) -> Result<Scalar> {
        if n == 1 {
            return Ok(self.h1.clone());
        }
        Ok(self.stage(n - 1)?.next_height.clone())
    }

    pub fn width(&self, n: usize) -> Result<Scalar> {
        if n == 1 {
            return Ok(self.w1.clone());
        }
        Ok(self.stage(n - 1)?.next_width.clone())
    }

    /// `μ(X_n)`.
    pub fn tower_measure(&self, n: usize) -> Result<Scalar> {
        Ok(&self.height(n)? * &self.width(n)?)
    }
}

fn params_need_sqrt2(p: &StageParams) -> bool {
    fn map(m: &SpacerMap) -> bool {
        match m {
            SpacerMap::Explicit { values } => values.iter().any(Scalar::involves_sqrt2),
            SpacerMap::Constant { value } | SpacerMap::FractionSplit { value, .. } => value.involves_sqrt2(),
            SpacerMap::Staircase { step } => step.involves_sqrt2(),
            SpacerMap::PairedGaps { gaps, separators, .. } => gaps.iter().chain(separators).any(Scalar::involves_sqrt2),
            SpacerMap::Symmetrized { inner } => map(inner),
        }
    }
    map(&p.spacer) || p.bottom_spacer.as_ref().is_some_and(Scalar::involves_sqrt2)
}

/// `r' = 2r - 1` with the palindromic spacer map.
pub fn symmetrize_params(p: &StageParams) -> StageParams {
    // A bottom spacer on the inner stage is folded into the inner map so the
    // symmetrized layout can place it at both ends.
    let inner = match &p.bottom_spacer {
        None => p.spacer.clone(),
        Some(b) => match p.spacer.layout(p.r) {
            Ok(l) => SpacerMap::Explicit { values: l.above },
            Err(_) => p.spacer.clone(),
        }
        .with_bottom(b.clone()),
    };
    StageParams { r: 2 * p.r - 1, spacer: SpacerMap::Symmetrized { inner: Box::new(inner) }, bottom_spacer: None }
}

impl SpacerMap {
    fn with_bottom(self, bottom: Scalar) -> SpacerMap {
        // Encoded by adding the bottom spacer to the top inner value: the
        // symmetrized layout then carries it on both ends of the palindrome.
        match self {
            SpacerMap::Explicit { mut values } => {
                if let Some(last) = values.last_mut() {
                    *last = &*last + &bottom;
                }
                SpacerMap::Explicit { values }
            }
            other => other,
        }
    }
}

/// Flow obtained by the palindromic respacing of every stage of `schedule`.
/// The result is conjugate to its time reverse by reflecting each tower.
pub fn symmetrize(schedule: &Schedule) -> Schedule {
    Schedule {
        h1: schedule.h1.clone(),
        w1: schedule.w1.clone(),
        mode: schedule.mode,
        source: Source::Symmetrized(Arc::new(schedule.clone())),
        depth: schedule.depth,
        digit_budget: schedule.digit_budget,
        cache: RwLock::new(Vec::new()),
    }
}
