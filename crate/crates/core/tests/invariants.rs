mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rank1_core::flow::{partial_sums, symmetrize, SpacerMap, StageParams};
use rank1_core::koopman::{correlate, m_correlate, permanent, reflect};
use rank1_core::{NamedSchedule, Scalar, Schedule};

use common::{random_step, random_time};

fn stage_params() -> impl Strategy<Value = StageParams> {
    (2u64..6, prop::collection::vec(0i64..6, 6), 1i64..4).prop_map(|(r, raw, q)| {
        let values = raw[..r as usize].iter().map(|&p| Scalar::ratio(p, q)).collect();
        StageParams::new(r, SpacerMap::Explicit { values })
    })
}

fn schedule() -> impl Strategy<Value = Schedule> {
    prop::collection::vec(stage_params(), 1..5)
        .prop_map(|stages| Schedule::explicit(Scalar::one(), Scalar::one(), stages).unwrap())
}

fn cmp_close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn offsets_heights_and_measure(s in schedule()) {
        for n in 1..=s.depth() {
            let st = s.stage(n).unwrap();
            prop_assert_eq!(st.offsets[0].clone(), st.bottom_spacer.clone());
            for j in 1..st.offsets.len() {
                let gap = &st.offsets[j] - &st.offsets[j - 1];
                prop_assert_eq!(gap, &st.height + &st.spacers[j - 1]);
            }
            let total = st.spacers.iter().fold(st.bottom_spacer.clone(), |a, b| &a + b);
            prop_assert_eq!(st.next_height.clone(), &(&st.height * &Scalar::int(st.r() as i64)) + &total);
            prop_assert_eq!(&st.next_width * &Scalar::int(st.r() as i64), st.width.clone());
            let grown = &s.tower_measure(n + 1).unwrap() - &s.tower_measure(n).unwrap();
            prop_assert_eq!(grown, &total * &st.next_width);
        }
    }

    #[test]
    fn criterion_partial_sums_increase(s in schedule()) {
        let sums = partial_sums(&s, s.depth()).unwrap();
        for w in sums.windows(2) {
            prop_assert!(!w[1].lt(&w[0]));
        }
    }

    #[test]
    fn symmetrized_stages_are_palindromes(s in schedule()) {
        let sym = symmetrize(&s);
        for n in 1..=s.depth() {
            let st = sym.stage(n).unwrap();
            prop_assert_eq!(st.r(), 2 * s.stage(n).unwrap().r() - 1);
            let inner = &st.spacers[..st.spacers.len() - 1];
            let rev: Vec<Scalar> = inner.iter().rev().cloned().collect();
            prop_assert_eq!(inner.to_vec(), rev);
        }
    }

    #[test]
    fn hermitian_symmetry(seed in 0u64..10_000) {
        let s = NamedSchedule::Staircase34 { base: 2, r_max: 16, every: 2, depth: 6 }.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1 + (seed % 2) as usize;
        let f = random_step(&mut rng, &s, k);
        let g = random_step(&mut rng, &s, k);
        let t = random_time(&mut rng, &s.height(k).unwrap(), 3);
        let a = correlate(&s, &f, &g, &t).unwrap();
        let b = correlate(&s, &g, &f, &-t.clone()).unwrap();
        prop_assert!(cmp_close(a.value, b.value.conj(), a.error_bound + b.error_bound + 1e-12));
    }

    #[test]
    fn cauchy_schwarz(seed in 0u64..10_000) {
        let s = NamedSchedule::Asym49 { every: 2, r_cap: 16, depth: 6 }.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_step(&mut rng, &s, 2);
        let g = random_step(&mut rng, &s, 2);
        let t = random_time(&mut rng, &s.height(2).unwrap(), 4);
        let c = correlate(&s, &f, &g, &t).unwrap();
        let nf = f.norm_sq(&s).unwrap().sqrt();
        let ng = g.norm_sq(&s).unwrap().sqrt();
        prop_assert!(c.value.norm() <= nf * ng + c.error_bound + 1e-12);
    }

    #[test]
    fn two_point_case_is_correlate(seed in 0u64..10_000) {
        let s = NamedSchedule::flat(3, 6).build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_step(&mut rng, &s, 1);
        let g = random_step(&mut rng, &s, 2);
        let t = random_time(&mut rng, &s.height(2).unwrap(), 2);
        let a = correlate(&s, &f, &g, &t).unwrap();
        let b = m_correlate(&s, &[g.conj(), f.clone()], &[Scalar::zero(), t]).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert_eq!(a.stage_used, b.stage_used);
    }

    #[test]
    fn reflection_on_symmetrized_flow(seed in 0u64..10_000) {
        let inner = NamedSchedule::Staircase34 { base: 2, r_max: 8, every: 2, depth: 5 }.build().unwrap();
        let s = symmetrize(&inner);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_step(&mut rng, &s, 2);
        let g = random_step(&mut rng, &s, 2);
        let t = random_time(&mut rng, &s.height(2).unwrap(), 2);
        let a = correlate(&s, &f, &g, &t).unwrap();
        let b = correlate(&s, &reflect(&f), &reflect(&g), &-t.clone()).unwrap();
        prop_assert!(cmp_close(a.value, b.value, a.error_bound + b.error_bound + 1e-12));
    }

    #[test]
    fn permanent_ignores_row_order(vals in prop::collection::vec(-3i32..4, 16), swap in 0usize..4) {
        let m: Vec<Vec<Complex64>> = vals.chunks(4)
            .map(|row| row.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect())
            .collect();
        let mut p = m.clone();
        p.swap(0, swap);
        let mut tr = m.clone();
        for (i, row) in tr.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = m[j][i];
            }
        }
        let base = permanent(&m).unwrap();
        prop_assert_eq!(base, permanent(&p).unwrap());
        prop_assert_eq!(base, permanent(&tr).unwrap());
    }
}
