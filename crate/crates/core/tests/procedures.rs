use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqdiag::models::{gaussian_mean_shift, gaussian_multichannel};
use seqdiag::procedures::{decide, pathwise_stop_times, run, Procedure, StatPath, StepOutcome, StopRule, StopTime};
use seqdiag::{ChangeModel, ProcedureSpec, Scenario, Variant};

const FAMILY: [Variant; 5] = [
    Variant::Matrix,
    Variant::Adaptive,
    Variant::Vector,
    Variant::Generalized { window: 5 },
    Variant::GeneralizedFull,
];

fn simultaneous() -> ChangeModel {
    gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, true).unwrap()
}

fn scenario(p: u64, k: usize) -> Scenario {
    if p % 5 == 4 {
        Scenario::NO_CHANGE
    } else {
        Scenario::change_at(p % 30, p as usize % k)
    }
}

#[test]
fn grid_evaluator_matches_per_point_runs() {
    let model = simultaneous();
    let b = [0.5, 1.5, 3.0, 4.5];
    let h = [0.0, 1.0, 2.5, 4.0];
    let len = 200;
    for variant in FAMILY.into_iter().chain([Variant::MinCusum]) {
        for p in 0..50u64 {
            let sc = scenario(p, model.k());
            let path = StatPath::simulate(
                &model,
                variant.isolation_kind(),
                sc,
                len,
                &mut ChaCha8Rng::seed_from_u64(p),
            )
            .unwrap();
            let grid = pathwise_stop_times(variant.stop_rule(), &path, &b, &h).unwrap();
            for (bi, &bb) in b.iter().enumerate() {
                for (hi, &hh) in h.iter().enumerate() {
                    let spec = ProcedureSpec::new(variant, bb, hh).unwrap();
                    let out = run(&spec, &model, sc, len, &mut ChaCha8Rng::seed_from_u64(p)).unwrap();
                    let direct = match out.stop {
                        StopTime::At(t) => Some((t, out.decision.unwrap())),
                        StopTime::Censored(_) => None,
                    };
                    assert_eq!(grid.get(bi, hi), direct, "{variant} path {p} b={bb} h={hh}");
                }
            }
        }
    }
}

fn first_stop(rule: StopRule, path: &StatPath, b: f64, h: f64) -> Option<(u64, usize)> {
    (1..=path.len()).find_map(|n| match decide(rule, b, h, path.y_at(n), path.w_at(n)) {
        StepOutcome::Stopped(d) => Some((n as u64, d)),
        StepOutcome::Continue => None,
    })
}

fn stop_time(s: Option<(u64, usize)>) -> u64 {
    s.map_or(u64::MAX, |(t, _)| t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stopping_time_monotone_and_dominates_min_cusum(
        seed in any::<u64>(),
        v in 0usize..5,
        b in prop::collection::vec(0.0f64..6.0, 2),
        h in prop::collection::vec(0.0f64..6.0, 2),
    ) {
        let model = simultaneous();
        let variant = FAMILY[v];
        let sc = scenario(seed % 97, model.k());
        let path = StatPath::simulate(&model, variant.isolation_kind(), sc, 150, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (b_lo, b_hi) = (b[0].min(b[1]), b[0].max(b[1]));
        let (h_lo, h_hi) = (h[0].min(h[1]), h[0].max(h[1]));
        let t = |bb, hh| stop_time(first_stop(StopRule::Family, &path, bb, hh));
        prop_assert!(t(b_lo, h_lo) <= t(b_hi, h_lo));
        prop_assert!(t(b_lo, h_lo) <= t(b_lo, h_hi));
        let sigma = stop_time(first_stop(StopRule::MinCusum, &path, b_lo, 0.0));
        prop_assert!(t(b_lo, h_lo) >= sigma);
    }

    #[test]
    fn single_alternative_family_is_plain_cusum(seed in any::<u64>(), v in 0usize..5, b in 0.0f64..6.0, h in 0.0f64..50.0) {
        let model = gaussian_mean_shift(&[1.0]).unwrap();
        let variant = FAMILY[v];
        let sc = if seed % 2 == 0 { Scenario::change_at(seed % 40, 0) } else { Scenario::NO_CHANGE };
        let path = StatPath::simulate(&model, variant.isolation_kind(), sc, 200, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(
            first_stop(StopRule::Family, &path, b, h),
            first_stop(StopRule::Single(0), &path, b, 0.0)
        );
    }
}

#[test]
fn decision_uses_no_future_observations() {
    let model = simultaneous();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for variant in FAMILY.into_iter().chain([Variant::MinCusum]) {
        let spec = ProcedureSpec::new(variant, 3.0, 2.0).unwrap();
        for p in 0..100u64 {
            let sc = scenario(p, model.k());
            let xs: Vec<Vec<f64>> = (1..=400)
                .map(|n| {
                    let mut x = vec![0.0; model.dim()];
                    sc.sample(&model, n, &mut rng, &mut x);
                    x
                })
                .collect();
            let stop = |stream: &[Vec<f64>]| {
                let mut proc = Procedure::new(spec, &model).unwrap();
                stream.iter().enumerate().find_map(|(n, x)| match proc.step(x).unwrap() {
                    StepOutcome::Stopped(d) => Some((n + 1, d)),
                    StepOutcome::Continue => None,
                })
            };
            let Some((t, d)) = stop(&xs) else { continue };
            assert_eq!(stop(&xs[..t]), Some((t, d)));
            let mut altered = xs.clone();
            for x in &mut altered[t..] {
                x.iter_mut().for_each(|v| *v = -*v + 5.0);
            }
            assert_eq!(stop(&altered), Some((t, d)));
        }
    }
}

#[test]
fn min_cusum_ties_go_to_smallest_index() {
    assert_eq!(decide(StopRule::MinCusum, 1.0, 0.0, &[2.0, 2.0, 1.0], &[]), StepOutcome::Stopped(0));
    assert_eq!(decide(StopRule::MinCusum, 1.0, 0.0, &[0.5, 2.0, 2.0], &[]), StepOutcome::Stopped(1));
    assert_eq!(decide(StopRule::MinCusum, 3.0, 0.0, &[0.5, 2.0, 2.0], &[]), StepOutcome::Continue);
}

#[test]
fn family_rule_picks_first_qualifying_index() {
    let y = [3.0, 4.0, 5.0];
    let w = [0.5, 2.0, 3.0];
    assert_eq!(decide(StopRule::Family, 2.0, 1.0, &y, &w), StepOutcome::Stopped(1));
    assert_eq!(decide(StopRule::Family, 2.0, 3.5, &y, &w), StepOutcome::Continue);
}
