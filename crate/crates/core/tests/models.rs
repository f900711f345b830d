use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqdiag::models::{gaussian_mean_shift, gaussian_multichannel};
use seqdiag::ChangeModel;

fn models() -> Vec<ChangeModel> {
    vec![
        gaussian_mean_shift(&[0.5, 1.0, 2.0]).unwrap(),
        gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, false).unwrap(),
        gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, true).unwrap(),
        gaussian_multichannel(3, 0.5, 2.0, -1.0, 1.0, false).unwrap(),
    ]
}

proptest! {
    #[test]
    fn pair_llr_antisymmetric_and_consistent(which in 0usize..4, xs in prop::collection::vec(-6.0f64..6.0, 3)) {
        let model = &models()[which];
        let x = &xs[..model.dim()];
        for i in 0..model.k() {
            for j in (0..model.k()).filter(|&j| j != i) {
                let ij = model.llr_pair(i, j, x).unwrap();
                let ji = model.llr_pair(j, i, x).unwrap();
                prop_assert!((ij + ji).abs() <= 1e-12 * ij.abs().max(1.0));
                let diff = model.llr_vs_f(i, x).unwrap() - model.llr_vs_f(j, x).unwrap();
                prop_assert!((ij - diff).abs() <= 1e-12 * diff.abs().max(1.0));
            }
        }
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn sampled_llr_means_match_kl_numbers() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for model in models() {
        let mut x = vec![0.0; model.dim()];
        for i in 0..model.k() {
            let llr: Vec<f64> = (0..100_000)
                .map(|_| {
                    model.sample_post(i, &mut rng, &mut x);
                    model.llr_vs_f(i, &x).unwrap()
                })
                .collect();
            let (mean, se) = mean_se(&llr);
            let kl = model.kl().to_pre(i);
            assert!((mean - kl).abs() <= 4.0 * se, "alternative {i}: mean {mean} vs I_i {kl} (se {se})");
        }
    }
}

#[test]
fn pre_change_llr_drift_is_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for model in models() {
        let mut x = vec![0.0; model.dim()];
        let mut llr = vec![0.0; model.k()];
        let mut samples = vec![Vec::new(); model.k()];
        for _ in 0..100_000 {
            model.sample_pre(&mut rng, &mut x);
            model.llrs_into(&x, &mut llr).unwrap();
            for (s, &l) in samples.iter_mut().zip(&llr) {
                s.push(l);
            }
        }
        for s in &samples {
            let (mean, se) = mean_se(s);
            assert!(mean + 4.0 * se < 0.0, "mean {mean} se {se}");
        }
    }
}

#[test]
fn kl_table_min_pair() {
    for model in models() {
        let kl = model.kl();
        for i in 0..model.k() {
            let min = (0..model.k())
                .filter(|&j| j != i)
                .map(|j| kl.pair(i, j))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(kl.min_pair(i), min);
            assert!(kl.to_pre(i) > 0.0 && kl.to_pre(i).is_finite());
        }
    }
}
