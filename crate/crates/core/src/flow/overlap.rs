//! Copy-pair overlaps: which pairs of copies of `X_n` inside `X_{n+1}` still
//! overlap after a vertical shift, and by how much.

use std::hash::{BuildHasher, Hash, Hasher};

use indexmap::IndexMap;
use num_traits::ToPrimitive;

use super::schedule::TowerStage;
use crate::error::{Error, Result};
use crate::scalar::{QuadSqrt2, Scalar};

/// Default cap on the number of distinct shifts kept per stage.
pub const DEFAULT_BLOWUP_GUARD: usize = 1_000_000;

/// Hashable identity of a shift. Exact shifts are their own key; float
/// shifts are quantized at `1e-12 · h_n` so roundoff cannot split a group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum ShiftKey {
    Exact(QuadSqrt2),
    Quantized(i64),
}

pub(crate) fn shift_key(shift: &Scalar, height: &Scalar) -> ShiftKey {
    match shift {
        Scalar::Exact(q) => ShiftKey::Exact(q.clone()),
        Scalar::Float(x) => {
            let quantum = 1e-12 * height.to_f64().abs().max(f64::MIN_POSITIVE);
            ShiftKey::Quantized((x / quantum).round() as i64)
        }
    }
}

/// Candidate copy-index differences `m` with `|shift + m·period| < h`.
fn ap_candidates(shift: &Scalar, period: &Scalar, h: &Scalar, r: u64) -> Vec<(i64, Scalar)> {
    let m0 = (-shift / period).floor();
    let mut out = Vec::with_capacity(2);
    for dm in 0..2i64 {
        let Some(m) = m0.to_i64().and_then(|m| m.checked_add(dm)) else {
            continue;
        };
        if m.unsigned_abs() >= r {
            continue;
        }
        let delta = shift + &(period * &Scalar::int(m));
        if delta.abs().lt(h) {
            out.push((m, delta));
        }
    }
    out
}

/// Calls `emit(delta, count)` for the copy pairs `(j, j')` with
/// `|shift + o_{j'} - o_j| < h_n`. A delta may be emitted more than once;
/// callers group.
pub(crate) fn visit_pairs(stage: &TowerStage, shift: &Scalar, mut emit: impl FnMut(Scalar, u64)) {
    let h = &stage.height;
    let r = stage.r();
    if let Some(p) = &stage.period {
        for (m, delta) in ap_candidates(shift, p, h, r) {
            emit(delta, r - m.unsigned_abs());
        }
        return;
    }
    let o = &stage.offsets;
    let lo_shift = &(-shift) - h;
    let hi_shift = &(-shift) + h;
    let mut p = 0usize;
    for oj in o {
        let lo = oj + &lo_shift;
        while p < o.len() && !lo.lt(&o[p]) {
            p += 1;
        }
        let hi = oj + &hi_shift;
        let mut q = p;
        while q < o.len() && o[q].lt(&hi) {
            emit(&(shift + &o[q]) - oj, 1);
            q += 1;
        }
    }
}

/// Tuple version: for shifts `τ_1..τ_{m-1}` calls `emit(δ⃗, count)` for the
/// copy tuples `(j_0, j_1, …)` with `δ_i = τ_i + o_{j_i} - o_{j_0}`, every
/// `|δ_i| < h_n` and every `|δ_i - δ_l| < h_n`. Copy `j_0` carries the
/// unshifted function, which is the implicit `δ_0 = 0`.
pub(crate) fn visit_tuples(stage: &TowerStage, shifts: &[Scalar], mut emit: impl FnMut(Vec<Scalar>, u64)) {
    if shifts.len() == 1 {
        visit_pairs(stage, &shifts[0], |d, c| emit(vec![d], c));
        return;
    }
    let h = &stage.height;
    let r = stage.r();
    let fits =
        |deltas: &[Scalar]| deltas.iter().enumerate().all(|(i, a)| deltas[i + 1..].iter().all(|b| (a - b).abs().lt(h)));
    if let Some(p) = &stage.period {
        let cands: Vec<_> = shifts.iter().map(|s| ap_candidates(s, p, h, r)).collect();
        for_each_product(&cands, |choice| {
            let deltas: Vec<Scalar> = choice.iter().map(|(_, d)| d.clone()).collect();
            if !fits(&deltas) {
                return;
            }
            let hi = choice.iter().map(|(m, _)| *m).max().unwrap_or(0).max(0);
            let lo = choice.iter().map(|(m, _)| *m).min().unwrap_or(0).min(0);
            let spread = (hi - lo) as u64;
            if spread < r {
                emit(deltas, r - spread);
            }
        });
        return;
    }
    let o = &stage.offsets;
    let bounds: Vec<(Scalar, Scalar)> = shifts.iter().map(|s| (&(-s) - h, &(-s) + h)).collect();
    let mut ptr = vec![0usize; shifts.len()];
    for oj in o {
        let mut cands: Vec<Vec<Scalar>> = Vec::with_capacity(shifts.len());
        for (i, (lo_shift, hi_shift)) in bounds.iter().enumerate() {
            let lo = oj + lo_shift;
            while ptr[i] < o.len() && !lo.lt(&o[ptr[i]]) {
                ptr[i] += 1;
            }
            let hi = oj + hi_shift;
            let mut list = Vec::new();
            let mut q = ptr[i];
            while q < o.len() && o[q].lt(&hi) {
                list.push(&(&shifts[i] + &o[q]) - oj);
                q += 1;
            }
            if list.is_empty() {
                break;
            }
            cands.push(list);
        }
        if cands.len() < shifts.len() {
            continue;
        }
        for_each_product(&cands, |choice| {
            let deltas: Vec<Scalar> = choice.iter().map(|d| (*d).clone()).collect();
            if fits(&deltas) {
                emit(deltas, 1);
            }
        });
    }
}

fn for_each_product<T>(lists: &[Vec<T>], mut f: impl FnMut(&[&T])) {
    if lists.iter().any(|l| l.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; lists.len()];
    let mut buf: Vec<&T> = lists.iter().map(|l| &l[0]).collect();
    loop {
        f(&buf);
        let mut k = lists.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                buf[k] = &lists[k][idx[k]];
                break;
            }
            idx[k] = 0;
            buf[k] = &lists[k][0];
        }
    }
}

/// Multiply-rotate hasher for shift keys. Keys are not attacker-controlled,
/// and SipHash was a tenth of the runtime on deep towers.
#[derive(Clone, Copy, Default)]
pub(crate) struct FastHash;

pub(crate) struct FastHasher(u64);

impl FastHasher {
    #[inline]
    fn mix(&mut self, word: u64) {
        self.0 = (self.0.rotate_left(5) ^ word).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }
}

impl Hasher for FastHasher {
    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut b = [0u8; 8];
            b[..chunk.len()].copy_from_slice(chunk);
            self.mix(u64::from_le_bytes(b));
        }
    }
    fn write_u8(&mut self, i: u8) {
        self.mix(i as u64);
    }
    fn write_u32(&mut self, i: u32) {
        self.mix(i as u64);
    }
    fn write_u64(&mut self, i: u64) {
        self.mix(i);
    }
    fn write_usize(&mut self, i: usize) {
        self.mix(i as u64);
    }
    fn write_u128(&mut self, i: u128) {
        self.mix(i as u64);
        self.mix((i >> 64) as u64);
    }
    fn write_i128(&mut self, i: i128) {
        self.write_u128(i as u128);
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

impl BuildHasher for FastHash {
    type Hasher = FastHasher;
    fn build_hasher(&self) -> FastHasher {
        FastHasher(0)
    }
}

/// Groups emitted `(key, value, count)` triples in first-seen order.
pub(crate) struct Grouper<K: Hash + Eq, V> {
    map: IndexMap<K, (V, u64), FastHash>,
}

impl<K: Hash + Eq, V> Grouper<K, V> {
    pub(crate) fn new() -> Self {
        Grouper { map: IndexMap::with_hasher(FastHash) }
    }

    pub(crate) fn add(&mut self, key: K, value: V, count: u64) {
        self.map.entry(key).and_modify(|e| e.1 += count).or_insert((value, count));
    }

    pub(crate) fn len(&self) -> usize {
        self.map.len()
    }

    pub(crate) fn into_values(self) -> impl Iterator<Item = (V, u64)> {
        self.map.into_values()
    }
}

/// Distinct values `δ = shift + o_{n,j'} - o_{n,j}` with `|δ| < h_n`, each
/// with the number of copy pairs realizing it, in ascending order of `δ`.
pub fn overlap_pairs(stage: &TowerStage, shift: &Scalar) -> Result<Vec<(Scalar, u64)>> {
    overlap_pairs_guarded(stage, shift, DEFAULT_BLOWUP_GUARD)
}

pub fn overlap_pairs_guarded(stage: &TowerStage, shift: &Scalar, guard: usize) -> Result<Vec<(Scalar, u64)>> {
    let mut g = Grouper::new();
    visit_pairs(stage, shift, |d, c| g.add(shift_key(&d, &stage.height), d, c));
    if g.len() > guard {
        return Err(Error::Resource {
            stage: stage.n,
            detail: format!("{} distinct overlap shifts exceed the guard of {guard}", g.len()),
        });
    }
    let mut out: Vec<(Scalar, u64)> = g.into_values().collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Tuple overlaps grouped by the shift vector, in first-seen order.
pub fn overlap_tuples(stage: &TowerStage, shifts: &[Scalar]) -> Result<Vec<(Vec<Scalar>, u64)>> {
    if shifts.is_empty() {
        return Err(Error::invalid("overlap_tuples needs at least one shift"));
    }
    let mut g = Grouper::new();
    visit_tuples(stage, shifts, |d, c| {
        let key: Vec<ShiftKey> = d.iter().map(|x| shift_key(x, &stage.height)).collect();
        g.add(key, d, c)
    });
    if g.len() > DEFAULT_BLOWUP_GUARD {
        return Err(Error::Resource {
            stage: stage.n,
            detail: format!("{} distinct overlap tuples exceed the guard", g.len()),
        });
    }
    Ok(g.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Schedule, SpacerMap, StageParams};

    fn single(h: i64, params: StageParams) -> Schedule {
        Schedule::explicit(Scalar::int(h), Scalar::one(), vec![params]).unwrap()
    }

    #[test]
    fn flat_zero_shift() {
        let s = single(1, StageParams::flat(4));
        let st = s.stage(1).unwrap();
        assert_eq!(overlap_pairs(&st, &Scalar::zero()).unwrap(), vec![(Scalar::zero(), 4)]);
    }

    #[test]
    fn flat_shift_by_height() {
        let s = single(2, StageParams::flat(4));
        let st = s.stage(1).unwrap();
        assert_eq!(overlap_pairs(&st, &Scalar::int(2)).unwrap(), vec![(Scalar::zero(), 3)]);
    }

    #[test]
    fn staircase_shift_one() {
        let s = single(1, StageParams::new(3, SpacerMap::Staircase { step: Scalar::ratio(1, 2) }));
        let st = s.stage(1).unwrap();
        assert!(st.period.is_none());
        let got = overlap_pairs(&st, &Scalar::one()).unwrap();
        assert_eq!(got, vec![(Scalar::ratio(-1, 2), 1), (Scalar::zero(), 1)]);
    }

    #[test]
    fn ap_and_sweep_agree() {
        // Same geometry once with a detected period and once forced through
        // the sweep by an explicit, unequal top spacer.
        let ap = single(3, StageParams::new(6, SpacerMap::Constant { value: Scalar::ratio(1, 3) }));
        let mut vals = vec![Scalar::ratio(1, 3); 5];
        vals.push(Scalar::int(7));
        let sw = single(3, StageParams::new(6, SpacerMap::Explicit { values: vals }));
        let (a, b) = (ap.stage(1).unwrap(), sw.stage(1).unwrap());
        assert!(a.period.is_some());
        for k in -40..40 {
            let t = Scalar::ratio(k, 3);
            assert_eq!(overlap_pairs(&a, &t).unwrap(), overlap_pairs(&b, &t).unwrap(), "t={t}");
        }
    }

    #[test]
    fn guard_trips() {
        let s = single(1, StageParams::new(50, SpacerMap::Staircase { step: Scalar::ratio(1, 7) }));
        let st = s.stage(1).unwrap();
        let err = overlap_pairs_guarded(&st, &Scalar::int(1), 3).unwrap_err();
        assert!(matches!(err, Error::Resource { stage: 1, .. }));
    }
}
