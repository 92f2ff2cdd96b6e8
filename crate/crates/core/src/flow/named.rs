//! Named schedule builders.
//!
//! Each builder is a deterministic rule `n ↦ (r_n, s_n)` that may look at the
//! current tower height. Cut numbers that grow without bound are capped at
//! desk scale; the limits studied on these flows only need `r_n → ∞` along
//! the relevant subsequences, which the caps keep visible up to the horizon.

use serde::{Deserialize, Serialize};

use super::schedule::{Schedule, Source, StageParams};
use super::spacer::SpacerMap;
use crate::error::{Error, Result};
use crate::scalar::{exact_isqrt, Rational, Scalar, ScalarMode};

fn default_depth() -> usize {
    12
}

fn default_two() -> u64 {
    2
}

fn default_cap() -> u64 {
    4096
}

fn default_every() -> usize {
    2
}

fn default_base() -> u64 {
    4
}

fn default_asym_cap() -> u64 {
    64
}

fn default_growth() -> u64 {
    10
}

fn one() -> Scalar {
    Scalar::one()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum NamedSchedule {
    /// `r_n = r`, no spacers.
    Flat {
        #[serde(default = "default_two")]
        r: u64,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    /// `r_n = min(r + (n-1) r_step, r_max)` with every spacer equal to `spacer`.
    Constant {
        #[serde(default = "default_two")]
        r: u64,
        #[serde(default)]
        r_step: u64,
        #[serde(default = "default_cap")]
        r_max: u64,
        spacer: Scalar,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    /// Flat stages interleaved with staircase roofs: `r_n = min(base^n, r_max)`;
    /// every `every`-th stage `n_k` carries `s(j) = (j-1) u_k` with
    /// `u_k = r_{n_k}^{-1/2}` (`1/ceil(sqrt r)` when `r` is not a square).
    Staircase34 {
        #[serde(default = "default_base")]
        base: u64,
        #[serde(default = "default_cap")]
        r_max: u64,
        #[serde(default = "default_every")]
        every: usize,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    /// Stages partitioned round-robin into rigidity classes and pair-layout
    /// classes over a finite set of scales.
    Thm44(Thm44Params),
    /// Stages `l_i = 1 + (i-1) every` with `r = 5` and spacers `(0,1,1,2,2)`,
    /// followed by flat stages with `r = min(2^(i+3), r_cap)`.
    Asym49 {
        #[serde(default = "default_every")]
        every: usize,
        #[serde(default = "default_asym_cap")]
        r_cap: u64,
        #[serde(default = "default_depth")]
        depth: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm44Params {
    /// Finite set of scales from the group, strictly positive.
    pub scales: Vec<Scalar>,
    #[serde(default = "default_two")]
    pub q_max: u64,
    #[serde(default = "one_usize")]
    pub k_max: usize,
    #[serde(default = "default_cap")]
    pub r_max: u64,
    /// Ratio between consecutive pair separators.
    #[serde(default = "default_growth")]
    pub growth: u64,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "one")]
    pub h1: Scalar,
}

fn one_usize() -> usize {
    1
}

/// Stage classes of the round-robin partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Thm44Class {
    /// All spacers `√2 s`; `U(-h_n) → U(√2 s)`.
    L1 { scale: usize, q: u64 },
    /// Bottom `1/q` of spacers zero, the rest `s`; `U(-h_n) → I/q + (q-1)/q U(s)`.
    L2 { scale: usize, q: u64 },
    /// `2k` copies in pairs; indices into the sorted scale list, `l0` 1-based.
    M { tuple: Vec<usize>, l0: usize },
}

impl Thm44Class {
    pub fn label(&self, scales: &[Scalar]) -> String {
        match self {
            Thm44Class::L1 { scale, q } => format!("L1(s={}, q={q})", scales[*scale]),
            Thm44Class::L2 { scale, q } => format!("L2(s={}, q={q})", scales[*scale]),
            Thm44Class::M { tuple, l0 } => {
                let s: Vec<String> = tuple.iter().map(|&i| scales[i].to_string()).collect();
                format!("M(l0={l0}; {})", s.join(", "))
            }
        }
    }
}

/// Where a stage sits in the thm44 partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thm44Slot {
    pub class_index: usize,
    pub class: Thm44Class,
    /// 1-based occurrence of the class among stages `1..=n`.
    pub occurrence: usize,
}

impl Thm44Params {
    fn sorted_scales(&self) -> Vec<Scalar> {
        let mut s = self.scales.clone();
        s.sort_by(|a, b| a.total_cmp(b));
        s
    }

    /// Classes in enumeration order: L¹/L² per scale and q, then pair classes
    /// by tuple size, tuple, and distinguished index.
    pub fn classes(&self) -> Vec<Thm44Class> {
        let n_scales = self.scales.len();
        let mut out = Vec::new();
        for scale in 0..n_scales {
            for q in 2..=self.q_max {
                out.push(Thm44Class::L1 { scale, q });
                out.push(Thm44Class::L2 { scale, q });
            }
        }
        for k in 1..=self.k_max.min(n_scales) {
            for tuple in combinations(n_scales, k) {
                for l0 in 1..=k {
                    out.push(Thm44Class::M { tuple: tuple.clone(), l0 });
                }
            }
        }
        out
    }

    pub fn slot(&self, n: usize) -> Thm44Slot {
        let classes = self.classes();
        let c = classes.len();
        let idx = (n - 1) % c;
        Thm44Slot { class_index: idx, class: classes[idx].clone(), occurrence: (n - 1) / c + 1 }
    }

    /// Stages `n <= depth` that belong to `class`.
    pub fn stages_of(&self, class: &Thm44Class) -> Vec<usize> {
        let classes = self.classes();
        let Some(idx) = classes.iter().position(|c| c == class) else {
            return Vec::new();
        };
        (idx + 1..=self.depth).step_by(classes.len()).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::config("thm44: empty generator set"));
        }
        if self.scales.iter().any(|s| s.signum() <= 0) {
            return Err(Error::config("thm44: scales must be positive"));
        }
        let sorted = self.sorted_scales();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("thm44: scales must be distinct"));
        }
        if self.q_max < 2 {
            return Err(Error::config("thm44: q_max must be at least 2"));
        }
        if self.k_max == 0 {
            return Err(Error::config("thm44: k_max must be at least 1"));
        }
        if self.r_max < 2 {
            return Err(Error::config("thm44: r_max must be at least 2"));
        }
        if self.growth < 2 {
            return Err(Error::config("thm44: growth must be at least 2"));
        }
        let classes = self.classes();
        if self.depth < classes.len() {
            let missing: Vec<String> = classes[self.depth..].iter().map(|c| c.label(&sorted)).collect();
            return Err(Error::config(format!(
                "thm44: depth {} leaves classes unreachable: {}",
                self.depth,
                missing.join("; ")
            )));
        }
        Ok(())
    }

    /// Pair-layout time `t_j` for an M stage of height `height`: the smallest
    /// power of two that is at least `2^j` and keeps every pair gap at least
    /// twice the tower height plus the largest scale, measured in units of
    /// the smallest scale difference.
    pub fn pair_time(&self, tuple: &[usize], occurrence: usize, height: &Scalar) -> Scalar {
        let sorted = self.sorted_scales();
        let s: Vec<&Scalar> = tuple.iter().map(|&i| &sorted[i]).collect();
        let s_max = s[s.len() - 1];
        let mut d_min = s[0].clone();
        for w in s.windows(2) {
            d_min = d_min.min(&(w[1] - w[0]));
        }
        let need = &Scalar::int(2) * &(height + s_max);
        let mut e = occurrence as u32;
        loop {
            let t = pow2(e);
            if !(&t * &d_min).lt(&need) {
                return t;
            }
            e += 1;
        }
    }

    fn params(&self, n: usize, height: &Scalar) -> StageParams {
        let sorted = self.sorted_scales();
        let slot = self.slot(n);
        match slot.class {
            Thm44Class::L1 { scale, .. } => {
                let r = capped_factorial(n as u64, self.r_max);
                StageParams::new(r, SpacerMap::Constant { value: &Scalar::sqrt2() * &sorted[scale] })
            }
            Thm44Class::L2 { scale, q } => {
                let r = capped_factorial(n as u64, self.r_max);
                StageParams::new(r, SpacerMap::FractionSplit { q, value: sorted[scale].clone() })
            }
            Thm44Class::M { tuple, l0 } => {
                let j = slot.occurrence;
                let t = self.pair_time(&tuple, j, height);
                let k = tuple.len();
                let s_max = &sorted[tuple[k - 1]];
                let s_l0 = &sorted[tuple[l0 - 1]];
                let mut gaps = Vec::with_capacity(k);
                let mut separators = Vec::with_capacity(k);
                let mut g_pow = Scalar::one();
                for (i, &si) in tuple.iter().enumerate() {
                    // Copy bottoms of pair i sit t·s_i apart (t·s_l0 - s_l0 for l0).
                    let mut gap = &(&t * &sorted[si]) - height;
                    if i + 1 == l0 {
                        gap = &gap - s_l0;
                    }
                    gaps.push(gap);
                    g_pow = &g_pow * &Scalar::int(self.growth as i64);
                    separators.push(&(&(&Scalar::int(j as i64) * &t) * s_max) * &g_pow);
                }
                StageParams::new(2 * k as u64, SpacerMap::PairedGaps { k, gaps, separators })
            }
        }
    }
}

fn pow2(e: u32) -> Scalar {
    let mut r = Rational::one();
    let two = Rational::from_integer(2);
    for _ in 0..e {
        r = &r * &two;
    }
    Scalar::from_rational(r)
}

fn capped_factorial(n: u64, cap: u64) -> u64 {
    let mut f: u64 = 1;
    for i in 2..=n {
        f = f.saturating_mul(i);
        if f >= cap {
            return cap.max(2);
        }
    }
    f.clamp(2, cap.max(2))
}

fn capped_pow(base: u64, e: u32, cap: u64) -> u64 {
    base.checked_pow(e).map_or(cap, |p| p.min(cap))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// The asymmetric stage: five copies with spacers `0, 1, 1, 2, 2`.
pub fn asymmetric_stage() -> StageParams {
    StageParams::new(5, SpacerMap::Explicit { values: [0, 1, 1, 2, 2].map(Scalar::int).to_vec() })
}

impl NamedSchedule {
    pub fn kind(&self) -> &'static str {
        match self {
            NamedSchedule::Flat { .. } => "flat",
            NamedSchedule::Constant { .. } => "constant",
            NamedSchedule::Staircase34 { .. } => "staircase34",
            NamedSchedule::Thm44(_) => "thm44",
            NamedSchedule::Asym49 { .. } => "asym49",
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            NamedSchedule::Flat { depth, .. }
            | NamedSchedule::Constant { depth, .. }
            | NamedSchedule::Staircase34 { depth, .. }
            | NamedSchedule::Asym49 { depth, .. } => *depth,
            NamedSchedule::Thm44(p) => p.depth,
        }
    }

    pub fn staircase34(depth: usize) -> Self {
        NamedSchedule::Staircase34 { base: 4, r_max: 4096, every: 2, depth }
    }

    pub fn asym49(depth: usize) -> Self {
        NamedSchedule::Asym49 { every: 2, r_cap: 64, depth }
    }

    pub fn flat(r: u64, depth: usize) -> Self {
        NamedSchedule::Flat { r, depth }
    }

    fn validate(&self) -> Result<()> {
        match self {
            NamedSchedule::Flat { r, .. } if *r < 2 => Err(Error::config("flat: r must exceed 1")),
            NamedSchedule::Constant { r, r_max, spacer, .. } => {
                if *r < 2 || *r_max < 2 {
                    Err(Error::config("constant: r and r_max must exceed 1"))
                } else if spacer.signum() < 0 {
                    Err(Error::config("constant: spacer must be non-negative"))
                } else {
                    Ok(())
                }
            }
            NamedSchedule::Staircase34 { base, r_max, every, .. } => {
                if *base < 2 || *r_max < 2 {
                    Err(Error::config("staircase34: base and r_max must exceed 1"))
                } else if *every < 2 {
                    Err(Error::config("staircase34: every must be at least 2 so each staircase follows a flat stage"))
                } else {
                    Ok(())
                }
            }
            NamedSchedule::Asym49 { every, r_cap, .. } => {
                if *every < 2 {
                    Err(Error::config("asym49: every must be at least 2"))
                } else if *r_cap < 2 {
                    Err(Error::config("asym49: r_cap must exceed 1"))
                } else {
                    Ok(())
                }
            }
            NamedSchedule::Thm44(p) => p.validate(),
            _ => Ok(()),
        }
    }

    /// Stages `n_k` carrying a staircase roof (staircase34 only).
    pub fn staircase_stages(&self) -> Vec<usize> {
        match self {
            NamedSchedule::Staircase34 { every, depth, .. } => (1..=*depth).filter(|n| n % every == 0).collect(),
            _ => Vec::new(),
        }
    }

    /// Stages `l_i` with the five-copy asymmetric layout (asym49 only).
    pub fn asymmetric_stages(&self) -> Vec<usize> {
        match self {
            NamedSchedule::Asym49 { every, depth, .. } => (1..=*depth).filter(|n| (n - 1) % every == 0).collect(),
            _ => Vec::new(),
        }
    }

    /// Parameters of stage `n` given the height of `X_n`.
    pub fn params(&self, n: usize, height: &Scalar) -> Result<StageParams> {
        Ok(match self {
            NamedSchedule::Flat { r, .. } => StageParams::flat(*r),
            NamedSchedule::Constant { r, r_step, r_max, spacer, .. } => {
                let rn = r.saturating_add(r_step.saturating_mul(n as u64 - 1)).min(*r_max);
                StageParams::new(rn.max(2), SpacerMap::Constant { value: spacer.clone() })
            }
            NamedSchedule::Staircase34 { base, r_max, every, .. } => {
                let r = capped_pow(*base, n as u32, *r_max).max(2);
                if n.is_multiple_of(*every) {
                    let root = exact_isqrt(r).unwrap_or_else(|| (r as f64).sqrt().ceil() as u64);
                    StageParams::new(r, SpacerMap::Staircase { step: Scalar::ratio(1, root as i64) })
                } else {
                    StageParams::flat(r)
                }
            }
            NamedSchedule::Asym49 { every, r_cap, .. } => {
                let pos = (n - 1) % every;
                if pos == 0 {
                    asymmetric_stage()
                } else if pos == 1 {
                    let i = (n - 2) / every + 1;
                    StageParams::flat(capped_pow(2, i as u32 + 3, *r_cap).max(2))
                } else {
                    StageParams::flat(2)
                }
            }
            NamedSchedule::Thm44(p) => p.params(n, height),
        })
    }

    fn base_height(&self) -> Scalar {
        match self {
            NamedSchedule::Thm44(p) => p.h1.clone(),
            _ => Scalar::one(),
        }
    }

    fn mode(&self) -> ScalarMode {
        match self {
            NamedSchedule::Thm44(_) => ScalarMode::QuadraticSqrt2,
            NamedSchedule::Constant { spacer, .. } if spacer.involves_sqrt2() => ScalarMode::QuadraticSqrt2,
            _ => ScalarMode::ExactRational,
        }
    }

    pub fn build(&self) -> Result<Schedule> {
        self.validate()?;
        Schedule::from_source(self.base_height(), Scalar::one(), self.mode(), Source::Named(self.clone()), self.depth())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_cap() {
        assert_eq!(capped_factorial(1, 4096), 2);
        assert_eq!(capped_factorial(5, 4096), 120);
        assert_eq!(capped_factorial(7, 4096), 4096);
        assert_eq!(capped_factorial(30, 4096), 4096);
    }

    #[test]
    fn thm44_classes_enumerated() {
        let p = Thm44Params {
            scales: vec![Scalar::int(2), Scalar::int(4)],
            q_max: 2,
            k_max: 2,
            r_max: 4096,
            growth: 10,
            depth: 20,
            h1: Scalar::one(),
        };
        let c = p.classes();
        // 2 scales × (L1 + L2) + M over {2}, {4}, and (2,4) with two l0.
        assert_eq!(c.len(), 4 + 1 + 1 + 2);
        assert_eq!(p.slot(1).class, Thm44Class::L1 { scale: 0, q: 2 });
        assert_eq!(p.slot(9).occurrence, 2);
        assert_eq!(p.stages_of(&Thm44Class::M { tuple: vec![0, 1], l0: 2 }), vec![8, 16]);
    }

    #[test]
    fn thm44_unreachable_class_reported() {
        let p = Thm44Params {
            scales: vec![Scalar::int(2)],
            q_max: 3,
            k_max: 1,
            r_max: 64,
            growth: 10,
            depth: 3,
            h1: Scalar::one(),
        };
        let err = NamedSchedule::Thm44(p).build().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unreachable"), "{msg}");
        assert!(msg.contains("M(l0=1; 2/1)"), "{msg}");
    }

    #[test]
    fn thm44_empty_scales() {
        let p = Thm44Params { scales: vec![], q_max: 2, k_max: 1, r_max: 64, growth: 10, depth: 12, h1: Scalar::one() };
        assert!(matches!(NamedSchedule::Thm44(p).build(), Err(Error::Config(_))));
    }

    #[test]
    fn staircase_u_is_inverse_root() {
        let s = NamedSchedule::staircase34(6);
        let p = s.params(4, &Scalar::one()).unwrap();
        assert_eq!(p.r, 256);
        assert_eq!(p.spacer, SpacerMap::Staircase { step: Scalar::ratio(1, 16) });
        let p = s.params(3, &Scalar::one()).unwrap();
        assert_eq!(p.spacer, SpacerMap::flat());
    }

    #[test]
    fn json_named_round_trip() {
        let s = NamedSchedule::asym49(8);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"kind":"asym49","params":{"every":2,"r_cap":64,"depth":8}}"#);
        let back: NamedSchedule = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let partial: NamedSchedule = serde_json::from_str(r#"{"kind":"flat","params":{"r":3}}"#).unwrap();
        assert_eq!(partial, NamedSchedule::Flat { r: 3, depth: 12 });
    }
}
