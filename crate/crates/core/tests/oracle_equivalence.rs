mod common;

use common::{oracle_correlate, oracle_multi, random_step, random_time};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rank1_core::koopman::{correlate, correlate_with, m_correlate, CorrelateOptions, StepFunction};
use rank1_core::{NamedSchedule, Scalar, Schedule, SpacerMap, StageParams};

fn small_schedules() -> Vec<(&'static str, Schedule)> {
    let explicit = Schedule::explicit(
        Scalar::one(),
        Scalar::one(),
        vec![
            StageParams::new(
                3,
                SpacerMap::Explicit { values: vec![Scalar::ratio(1, 2), Scalar::zero(), Scalar::one()] },
            ),
            StageParams::new(2, SpacerMap::Staircase { step: Scalar::ratio(1, 3) }),
            StageParams::new(4, SpacerMap::FractionSplit { q: 2, value: Scalar::ratio(2, 3) }),
            StageParams::flat(2),
            StageParams::new(3, SpacerMap::Constant { value: Scalar::ratio(1, 4) }),
        ],
    )
    .unwrap();
    vec![
        ("flat", Schedule::named(NamedSchedule::flat(2, 5)).unwrap()),
        ("staircase", Schedule::named(NamedSchedule::Staircase34 { base: 2, r_max: 16, every: 2, depth: 5 }).unwrap()),
        ("asym", Schedule::named(NamedSchedule::Asym49 { every: 2, r_cap: 16, depth: 5 }).unwrap()),
        ("explicit", explicit),
    ]
}

#[test]
fn correlate_matches_exact_lift_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, s) in small_schedules() {
        for case in 0..40 {
            let k = rng.gen_range(1..=2);
            let f = random_step(&mut rng, &s, k);
            let g = random_step(&mut rng, &s, k);
            let t = random_time(&mut rng, &s.height(k).unwrap(), 2);
            let got = correlate(&s, &f, &g, &t).unwrap();
            let deeper = (got.stage_used + 1).min(s.depth() + 1);
            let want = oracle_correlate(&s, &f, &g, &t, deeper);
            let gap = (got.value - want).norm();
            assert!(
                gap <= got.error_bound + 1e-9,
                "{name} case {case}: engine {} oracle {want} bound {}",
                got.value,
                got.error_bound
            );
        }
    }
}

#[test]
fn same_stage_agreement_is_tight() {
    // At the stage the engine picked, the oracle evaluates the same integral.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, s) in small_schedules() {
        for _ in 0..20 {
            let f = random_step(&mut rng, &s, 1);
            let g = random_step(&mut rng, &s, 1);
            let t = random_time(&mut rng, &s.height(1).unwrap(), 3);
            let got = correlate(&s, &f, &g, &t).unwrap();
            let want = oracle_correlate(&s, &f, &g, &t, got.stage_used);
            assert!((got.value - want).norm() < 1e-9, "{name}: {} vs {want}", got.value);
        }
    }
}

#[test]
fn flat_half_indicator_at_half() {
    let s = Schedule::named(NamedSchedule::flat(2, 10)).unwrap();
    let f = StepFunction::indicator(&s, 1, Scalar::zero(), Scalar::ratio(1, 2)).unwrap();
    let c = correlate(&s, &f, &f, &Scalar::ratio(1, 2)).unwrap();
    assert!(c.value.norm() <= c.error_bound + 1e-15);
    assert!(c.error_bound <= 0.5f64.powi(c.stage_used as i32 + 1) * 2.0);
    let oracle = oracle_correlate(&s, &f, &f, &Scalar::ratio(1, 2), 8);
    assert!((c.value - oracle).norm() <= c.error_bound + 1e-9);
}

#[test]
fn three_point_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, s) in small_schedules() {
        for _ in 0..15 {
            let fs: Vec<StepFunction> = (0..3).map(|_| random_step(&mut rng, &s, 1)).collect();
            let h = s.height(1).unwrap();
            let times = vec![Scalar::zero(), random_time(&mut rng, &h, 1), random_time(&mut rng, &h, 2)];
            let got = m_correlate(&s, &fs, &times).unwrap();
            let want = oracle_multi(&s, &fs, &times, got.stage_used);
            assert!((got.value - want).norm() < 1e-9, "{name}: {} vs {want}", got.value);
        }
    }
}

#[test]
fn stage_stability() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, s) in small_schedules() {
        for _ in 0..25 {
            let f = random_step(&mut rng, &s, 1);
            let g = random_step(&mut rng, &s, 1);
            let t = random_time(&mut rng, &s.height(1).unwrap(), 2);
            let a = correlate(&s, &f, &g, &t).unwrap();
            let deeper = CorrelateOptions { min_stage: Some(a.stage_used + 2), ..Default::default() };
            let Ok(b) = correlate_with(&s, &f, &g, &t, &deeper) else { continue };
            assert!(
                (a.value - b.value).norm() <= a.error_bound + b.error_bound + 1e-12,
                "{name}: {} vs {}",
                a.value,
                b.value
            );
        }
    }
}

#[test]
fn constants_on_flat_flow_are_invariant() {
    let s = Schedule::named(NamedSchedule::flat(2, 12)).unwrap();
    let one = StepFunction::constant(&s, 1, Complex64::new(1.0, 0.0)).unwrap();
    let lifted = rank1_core::koopman::lift(&s, &one, 4).unwrap();
    for t in [Scalar::ratio(1, 3), Scalar::int(5), Scalar::int(-7)] {
        let c = correlate(&s, &lifted, &lifted, &t).unwrap();
        // μ(X) = 1 on the flat flow; the correlation misses at most the bound.
        assert!((c.value.re - 1.0).abs() <= c.error_bound + 1e-12);
    }
}
