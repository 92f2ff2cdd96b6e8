use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Spacer heights placed above the `r` copies of a tower when it is cut and
/// restacked. Indices are 1-based: `s(j)` sits on top of copy `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum SpacerMap {
    /// One value per copy, `values.len() == r`.
    Explicit {
        values: Vec<Scalar>,
    },
    Constant {
        value: Scalar,
    },
    /// `s(j) = (j - 1) * step`.
    Staircase {
        step: Scalar,
    },
    /// `s(j) = 0` for `j <= ceil(r / q)` and `s(j) = value` above that.
    FractionSplit {
        q: u64,
        value: Scalar,
    },
    /// `r = 2k` copies in adjacent pairs: `gaps[i]` sits above copy `2i+1`
    /// and `separators[i]` above copy `2i+2` (0-based `i`), the last
    /// separator being the top spacer.
    PairedGaps {
        k: usize,
        gaps: Vec<Scalar>,
        separators: Vec<Scalar>,
    },
    /// Palindromic respacing of `inner` for `r = 2 r_inner - 1` copies with an
    /// extra spacer underneath the stack.
    Symmetrized {
        inner: Box<SpacerMap>,
    },
}

/// Resolved spacer layout of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacerLayout {
    pub bottom: Scalar,
    /// `s(1..=r)`.
    pub above: Vec<Scalar>,
}

impl SpacerMap {
    pub fn flat() -> Self {
        SpacerMap::Constant { value: Scalar::zero() }
    }

    /// Bottom spacer and the `r` spacers above the copies.
    pub fn layout(&self, r: u64) -> Result<SpacerLayout> {
        let r_us = r as usize;
        let above = match self {
            SpacerMap::Explicit { values } => {
                if values.len() != r_us {
                    return Err(Error::invalid(format!(
                        "explicit spacer list has {} entries for r = {r}",
                        values.len()
                    )));
                }
                values.clone()
            }
            SpacerMap::Constant { value } => vec![value.clone(); r_us],
            SpacerMap::Staircase { step } => (0..r).map(|j| step * Scalar::int(j as i64)).collect(),
            SpacerMap::FractionSplit { q, value } => {
                if *q == 0 {
                    return Err(Error::invalid("fraction split with q = 0"));
                }
                let zeros = r.div_ceil(*q);
                (1..=r).map(|j| if j <= zeros { Scalar::zero() } else { value.clone() }).collect()
            }
            SpacerMap::PairedGaps { k, gaps, separators } => {
                if r_us != 2 * k || gaps.len() != *k || separators.len() != *k {
                    return Err(Error::invalid(format!(
                        "paired gaps need r = 2k = {} with k gaps and k separators (got r = {r}, {} gaps, {} separators)",
                        2 * k,
                        gaps.len(),
                        separators.len()
                    )));
                }
                gaps.iter().zip(separators).flat_map(|(g, a)| [g.clone(), a.clone()]).collect()
            }
            SpacerMap::Symmetrized { inner } => {
                if r.is_multiple_of(2) {
                    return Err(Error::invalid(format!("symmetrized spacer map needs odd r, got {r}")));
                }
                let r_in = r.div_ceil(2);
                let inner = inner.layout(r_in)?;
                return Ok(symmetrize_layout(&inner));
            }
        };
        if let Some(bad) = above.iter().find(|s| s.signum() < 0) {
            return Err(Error::invalid(format!("negative spacer {bad}")));
        }
        Ok(SpacerLayout { bottom: Scalar::zero(), above })
    }
}

/// Bottom-to-top the result reads `s(r), s(r-1), …, s(1) | s(1), …, s(r)`
/// around the centre copy, with `s(r)` as the bottom spacer. A nonzero inner
/// bottom spacer is added to both ends so the stack stays a palindrome.
fn symmetrize_layout(inner: &SpacerLayout) -> SpacerLayout {
    let s = &inner.above;
    let r = s.len();
    let mut above = Vec::with_capacity(2 * r - 1);
    above.extend(s[..r - 1].iter().rev().cloned());
    above.extend(s.iter().cloned());
    let bottom = &s[r - 1] + &inner.bottom;
    if let Some(top) = above.last_mut() {
        *top = &*top + &inner.bottom;
    }
    SpacerLayout { bottom, above }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&x| Scalar::int(x)).collect()
    }

    #[test]
    fn staircase_values() {
        let m = SpacerMap::Staircase { step: Scalar::ratio(1, 2) };
        let l = m.layout(3).unwrap();
        assert_eq!(l.above, vec![Scalar::zero(), Scalar::ratio(1, 2), Scalar::int(1)]);
    }

    #[test]
    fn fraction_split_counts() {
        let m = SpacerMap::FractionSplit { q: 3, value: Scalar::int(2) };
        let l = m.layout(7).unwrap();
        // ceil(7/3) = 3 zeros.
        assert_eq!(l.above, ints(&[0, 0, 0, 2, 2, 2, 2]));
    }

    #[test]
    fn paired_gaps_interleave() {
        let m = SpacerMap::PairedGaps { k: 2, gaps: ints(&[5, 7]), separators: ints(&[100, 1000]) };
        assert_eq!(m.layout(4).unwrap().above, ints(&[5, 100, 7, 1000]));
        assert!(m.layout(5).is_err());
    }

    #[test]
    fn symmetrized_two_copies() {
        let inner = SpacerMap::Explicit { values: ints(&[3, 5]) };
        let m = SpacerMap::Symmetrized { inner: Box::new(inner) };
        let l = m.layout(3).unwrap();
        assert_eq!(l.bottom, Scalar::int(5));
        assert_eq!(l.above, ints(&[3, 3, 5]));
    }

    #[test]
    fn symmetrized_is_palindrome() {
        let inner = SpacerMap::Explicit { values: ints(&[0, 1, 1, 2, 2]) };
        let l = SpacerMap::Symmetrized { inner: Box::new(inner) }.layout(9).unwrap();
        let mut seq = vec![l.bottom.clone()];
        seq.extend(l.above.iter().cloned());
        let rev: Vec<_> = seq.iter().rev().cloned().collect();
        assert_eq!(seq, rev);
    }

    #[test]
    fn explicit_length_checked() {
        let m = SpacerMap::Explicit { values: ints(&[0, 1]) };
        assert!(m.layout(3).is_err());
        let neg = SpacerMap::Explicit { values: ints(&[0, -1]) };
        assert!(neg.layout(2).is_err());
    }

    #[test]
    fn json_shape() {
        let m = SpacerMap::FractionSplit { q: 2, value: Scalar::int(2) };
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(j, r#"{"variant":"fraction-split","q":2,"value":"2/1"}"#);
        let back: SpacerMap = serde_json::from_str(&j).unwrap();
        assert_eq!(back, m);
    }
}
