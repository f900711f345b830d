//! Acceptance gate. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line each and exits non-zero if any fails.
//!
//! `cargo test -p seqdiag --test acceptance` (optionally followed by
//! criterion numbers, e.g. `-- 1 6`, to run a subset).

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

use seqdiag::cli::{Command, RunConfig};
use seqdiag::design::{
    build_mask, calibrate_all, estimate_region_inputs, max_optimal_delay, select_thresholds, ThresholdGrid,
};
use seqdiag::models::{gaussian_mean_shift, gaussian_multichannel};
use seqdiag::montecarlo::{estimate_arl_false_alarm, estimate_misid, McConfig};
use seqdiag::procedures::{decide, pathwise_stop_times, StatPath, StepOutcome, StopRule};
use seqdiag::statistics::oracle::batch_cusum_oracle;
use seqdiag::statistics::{IsolationKind, LlrPath, PairVariant, StatisticBank};
use seqdiag::{ChangeModel, ProcedureSpec, Scenario, Variant};

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn load(name: &str) -> RunConfig {
    RunConfig::from_path(&config_path(name))
        .and_then(|c| c.resolve(None))
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn calibration(report: &Value, i: usize) -> (f64, f64, f64) {
    let c = &report["results"]["calibrations"][i];
    (
        c["b"].as_f64().unwrap(),
        c["optimal_delay"]["estimate"].as_f64().unwrap(),
        c["optimal_delay"]["se"].as_f64().unwrap(),
    )
}

fn run_json(cmd: Command, cfg: &RunConfig) -> Value {
    let report = cmd.run(cfg).expect("command runs");
    serde_json::from_str(&report.to_json().unwrap()).unwrap()
}

// 1. single-fault calibration table, L = 5e4
fn table_single_fault() -> Outcome {
    let cfg = load("single_fault.cfg");
    assert_eq!(cfg.mc.as_ref().unwrap().num_paths, 50_000);
    let r = run_json(Command::Calibrate, &cfg);
    let (b, delay, se) = calibration(&r, 0);
    let tol = 3.0 * 0.0166;
    let pass = (2.80..=2.90).contains(&b) && (delay - 6.0797).abs() <= tol;
    outcome(
        pass,
        format!("b_1 = {b} (need [2.80, 2.90]); E_1[σ_1] = {delay:.4} ± {se:.4} (need 6.0797 ± {tol:.4})"),
    )
}

// 2. simultaneous-fault calibration table, L = 5e4
fn table_simultaneous() -> Outcome {
    let cfg = load("simultaneous.cfg");
    assert_eq!(cfg.mc.as_ref().unwrap().num_paths, 50_000);
    let r = run_json(Command::Calibrate, &cfg);
    let (b1, d1, se1) = calibration(&r, 0);
    let (b3, d3, se3) = calibration(&r, 2);
    let (tol1, tol3) = (3.0 * 0.0165, 3.0 * 0.0097);
    let pass = (2.99..=3.09).contains(&b3) && (d3 - 3.7450).abs() <= tol3 && (d1 - 6.0965).abs() <= tol1;
    outcome(
        pass,
        format!(
            "b_3 = {b3} (need [2.99, 3.09]); E_3[σ_3] = {d3:.4} ± {se3:.4} (need 3.7450 ± {tol3:.4}); \
             b_1 = {b1}, E_1[σ_1] = {d1:.4} ± {se1:.4} (need 6.0965 ± {tol1:.4})"
        ),
    )
}

/// Worst-over-j misidentification of designed thresholds, per change point.
struct Curves {
    nu: Vec<u64>,
    /// `(variant, [(p, se)] per ν)`
    curves: Vec<(Variant, Vec<(f64, f64)>)>,
    selections: Vec<String>,
}

fn simultaneous_curves() -> &'static Curves {
    use std::sync::OnceLock;
    static CURVES: OnceLock<Curves> = OnceLock::new();
    CURVES.get_or_init(|| {
        let model = gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, true).unwrap();
        let mut mc = McConfig::new(10_000, SEED);
        mc.exploit_symmetry = true;
        let alpha = 0.01;
        let grid = ThresholdGrid::default_for(alpha, model.k()).unwrap();
        let cals = calibrate_all(&model, alpha, &grid.b, &mc).unwrap();
        let max_delay = max_optimal_delay(&cals);
        let nu: Vec<u64> = (0..=50).step_by(10).collect();
        let mut curves = Vec::new();
        let mut selections = Vec::new();
        for variant in [Variant::Matrix, Variant::Adaptive, Variant::MinCusum] {
            let inputs = estimate_region_inputs(variant, &model, &grid, &mc).unwrap();
            let mask = build_mask(&inputs, alpha, 2.0, max_delay, false).unwrap();
            let sel = select_thresholds(&mask).expect("feasible set is non-empty");
            selections.push(format!("{variant}: b = {}, h = {:?}", sel.b, sel.h));
            let spec = ProcedureSpec::new(variant, sel.b, sel.h_or_zero()).unwrap();
            let curve = nu
                .iter()
                .map(|&v| {
                    (0..model.k())
                        .filter(|&j| model.mirror_of(j) == j)
                        .map(|j| estimate_misid(&spec, &model, v, j, &mc).unwrap())
                        .map(|m| (m.probability, m.se))
                        .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a })
                })
                .collect();
            curves.push((variant, curve));
        }
        Curves {
            nu,
            curves,
            selections,
        }
    })
}

fn curve(c: &Curves, v: Variant) -> &[(f64, f64)] {
    &c.curves.iter().find(|(x, _)| *x == v).unwrap().1
}

// 3. ordering at ν = 50, r = 2, L = 1e4
fn ordering_at_late_change() -> Outcome {
    let c = simultaneous_curves();
    let last = c.nu.len() - 1;
    let (m, _) = curve(c, Variant::Matrix)[last];
    let (a, a_se) = curve(c, Variant::Adaptive)[last];
    let (mc, mc_se) = curve(c, Variant::MinCusum)[last];
    let between = a <= mc && mc <= m;
    let tied = (mc - a).abs() <= 2.0 * (a_se.hypot(mc_se));
    let pass = m >= 0.8 && a <= 0.3 && (between || tied);
    outcome(
        pass,
        format!(
            "ν = 50: matrix {m:.4} (need ≥ 0.8), adaptive {a:.4} ± {a_se:.4} (need ≤ 0.3), \
             min_cusum {mc:.4} ± {mc_se:.4} (between or tied); {}",
            c.selections.join("; ")
        ),
    )
}

// 4. flatness of the adaptive curve, growth of the matrix curve
fn flatness() -> Outcome {
    let c = simultaneous_curves();
    let a = curve(c, Variant::Adaptive);
    let (lo, hi) = a.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (p, _)| {
        (lo.min(*p), hi.max(*p))
    });
    let se_max = a.iter().map(|(_, s)| *s).fold(0.0, f64::max);
    let m = curve(c, Variant::Matrix);
    let rise = m[m.len() - 1].0 - m[0].0;
    let pass = hi - lo < 0.1 + 2.0 * se_max && rise > 0.3;
    let fmt = |v: &[(f64, f64)]| v.iter().map(|(p, _)| format!("{p:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        pass,
        format!(
            "adaptive range {:.4} (need < {:.4}) [{}]; matrix rise {rise:.4} (need > 0.3) [{}]",
            hi - lo,
            0.1 + 2.0 * se_max,
            fmt(a),
            fmt(m)
        ),
    )
}

// 5. E_∞[σ(b)] ≥ e^b/K − 4 SE
fn arl_lower_bound() -> Outcome {
    let models: [(&str, ChangeModel); 2] = [
        ("K=1", gaussian_mean_shift(&[1.0]).unwrap()),
        ("K=3", gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, true).unwrap()),
    ];
    // L/10 = 10⁴ no-change paths
    let mc = McConfig::new(100_000, SEED);
    let b = [1.0, 2.0, 3.0];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, model) in &models {
        let t = estimate_arl_false_alarm(Variant::MinCusum, model, &b, &[], &mc).unwrap();
        for (idx, &bb) in b.iter().enumerate() {
            let c = t.get(idx, 0);
            let bound = bb.exp() / model.k() as f64;
            let ok = c.estimate >= bound - 4.0 * c.se;
            pass &= ok;
            parts.push(format!("{name} b={bb}: {:.2}±{:.2} vs {bound:.2}", c.estimate, c.se));
        }
    }
    outcome(pass, parts.join("; "))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

// 6. recursive statistics equal the batch definitions
fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let windows = [Some(1), Some(3), Some(5)];
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for p in 0..200 {
        let k = 1 + p % 4;
        let steps = 12;
        let llr: Vec<f64> = (0..steps * k)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * 1.5 + rng.random_range(-0.5..0.5))
            .collect();
        let path = LlrPath::from_llrs(k, llr);
        let oracle = batch_cusum_oracle(&path, &windows);
        let mut banks: Vec<StatisticBank> = [
            IsolationKind::Pair(PairVariant::Matrix),
            IsolationKind::Pair(PairVariant::Adaptive),
            IsolationKind::Pair(PairVariant::Vector),
        ]
        .into_iter()
        .chain(windows.iter().map(|&w| IsolationKind::Generalized(w)))
        .map(|kind| StatisticBank::new(k, kind).unwrap())
        .collect();
        for n in 1..=steps {
            for bank in &mut banks {
                bank.update(path.llr_at(n)).unwrap();
            }
            let at = n - 1;
            for i in 0..k {
                let mut eq = vec![
                    close(banks[0].cusums()[i], oracle.cusum[at][i]),
                    banks[1].reset_times()[i] == oracle.reset[at][i],
                ];
                for j in (0..k).filter(|&j| j != i) {
                    let ij = i * k + j;
                    eq.push(close(banks[0].pair_matrix().unwrap().get(i, j), oracle.matrix[at][ij]));
                    eq.push(close(banks[1].pair_matrix().unwrap().get(i, j), oracle.adaptive[at][ij]));
                    eq.push(close(banks[2].pair_matrix().unwrap().get(i, j), oracle.vector[at][ij]));
                }
                for (w, (_, ow)) in oracle.generalized.iter().enumerate() {
                    let got = banks[3 + w].isolation()[i];
                    eq.push(if k == 1 { got == f64::INFINITY } else { close(got, ow[at][i]) });
                }
                checked += eq.len();
                mismatches += eq.iter().filter(|&&e| !e).count();
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{checked} values over 200 paths of length 12 (K = 1..4); {mismatches} mismatches"),
    )
}

// 7. pathwise inequalities on simulated paths
fn pathwise_inequalities() -> Outcome {
    let model = gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, true).unwrap();
    let k = model.k();
    let b: Vec<f64> = (0..12).map(|i| 0.5 * i as f64).collect();
    let h: Vec<f64> = (0..12).map(|i| 0.5 * i as f64).collect();
    let len = 150u64;
    let mut violations = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for p in 0..1000u64 {
        let scenario = if p % 4 == 3 {
            Scenario::NO_CHANGE
        } else {
            Scenario::change_at(rng.random_range(0..60), (p % 3) as usize)
        };
        let mut matrix = StatisticBank::new(k, IsolationKind::Pair(PairVariant::Matrix)).unwrap();
        let mut adaptive = StatisticBank::new(k, IsolationKind::Pair(PairVariant::Adaptive)).unwrap();
        let mut general = StatisticBank::new(k, IsolationKind::Generalized(Some(10))).unwrap();
        let mut x = vec![0.0; model.dim()];
        let mut llr = vec![0.0; k];
        let mut ys = Vec::new();
        let mut ws = Vec::new();
        for n in 1..=len {
            scenario.sample(&model, n, &mut rng, &mut x);
            model.llrs_into(&x, &mut llr).unwrap();
            matrix.update(&llr).unwrap();
            adaptive.update(&llr).unwrap();
            general.update(&llr).unwrap();
            let y = matrix.cusums();
            let (m, a) = (matrix.pair_matrix().unwrap(), adaptive.pair_matrix().unwrap());
            for i in 0..k {
                violations += (y[i] < 0.0) as usize;
                violations += (general.isolation()[i] < 0.0) as usize;
                for j in (0..k).filter(|&j| j != i) {
                    violations += (a.get(i, j) > m.get(i, j)) as usize;
                    violations += (y[i] - y[j] > m.get(i, j) + 1e-12) as usize;
                    violations += (m.get(i, j) < 0.0 || a.get(i, j) < 0.0) as usize;
                }
            }
            ys.extend_from_slice(adaptive.cusums());
            ws.extend_from_slice(adaptive.isolation());
        }
        let path = StatPath { k, y: ys, w: ws };
        // τ per cell by direct rule evaluation; censored = ∞
        let stop = |rule: StopRule, bb: f64, hh: f64| {
            (1..=path.len())
                .find(|&n| decide(rule, bb, hh, path.y_at(n), path.w_at(n)) != StepOutcome::Continue)
                .map_or(u64::MAX, |n| n as u64)
        };
        let tau: Vec<Vec<u64>> = h
            .iter()
            .map(|&hh| b.iter().map(|&bb| stop(StopRule::Family, bb, hh)).collect())
            .collect();
        let grid = pathwise_stop_times(StopRule::Family, &path, &b, &h).unwrap();
        for (hi, row) in tau.iter().enumerate() {
            for (bi, &t) in row.iter().enumerate() {
                let sigma = stop(StopRule::MinCusum, b[bi], 0.0);
                violations += (t < sigma) as usize;
                violations += (grid.get(bi, hi).map_or(u64::MAX, |(n, _)| n) != t) as usize;
                if bi + 1 < b.len() {
                    violations += (tau[hi][bi + 1] < t) as usize;
                }
                if hi + 1 < h.len() {
                    violations += (tau[hi + 1][bi] < t) as usize;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("1000 paths × {len} steps, adaptive family on a 12×12 grid; {violations} violations"),
    )
}

// 8. P_∞(Y_i(n) ≥ x) ≤ e^{−x} + 4 SE
fn tail_bound() -> Outcome {
    let model = gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, true).unwrap();
    let k = model.k();
    let paths = 10_000usize;
    let times = [10u64, 50];
    let xs = [1.0, 2.0, 3.0];
    let mut counts = vec![0u64; times.len() * xs.len() * k];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut x = vec![0.0; model.dim()];
    let mut llr = vec![0.0; k];
    for _ in 0..paths {
        let mut bank = StatisticBank::new(k, IsolationKind::None).unwrap();
        for n in 1..=50 {
            Scenario::NO_CHANGE.sample(&model, n, &mut rng, &mut x);
            model.llrs_into(&x, &mut llr).unwrap();
            bank.update(&llr).unwrap();
            if let Some(t) = times.iter().position(|&t| t == n) {
                for (xi, &level) in xs.iter().enumerate() {
                    for i in 0..k {
                        counts[(t * xs.len() + xi) * k + i] += (bank.cusums()[i] >= level) as u64;
                    }
                }
            }
        }
    }
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    for (t, &n) in times.iter().enumerate() {
        for (xi, &level) in xs.iter().enumerate() {
            for i in 0..k {
                let p = counts[(t * xs.len() + xi) * k + i] as f64 / paths as f64;
                let se = (p * (1.0 - p) / paths as f64).sqrt();
                let slack = p - (-level).exp() - 4.0 * se;
                worst = worst.max(slack);
                if slack > 0.0 {
                    pass = false;
                    eprintln!("tail bound violated: n={n} x={level} i={i} p={p}");
                }
            }
        }
    }
    outcome(
        pass,
        format!("n ∈ {{10, 50}}, x ∈ {{1, 2, 3}}, K = 3, 10⁴ paths; max(p̂ − e^−x − 4SE) = {worst:.4}"),
    )
}

// 9. identical reports for different worker counts
fn determinism() -> Outcome {
    let base = "[model]\nkind = \"multichannel_simultaneous\"\n\
        [procedure]\nvariants = [\"adaptive\", \"matrix\", \"min_cusum\", \"generalized_m5\"]\n\
        [grid]\nb_max = 4.0\nh_max = 3.0\nb_step = 0.05\nh_step = 0.25\nnu = [0, 20]\n\
        [mc]\nnum_paths = 600\nbase_seed = 11\n\
        [design]\nr = [2.0]\nselection = \"misid_optimal\"\n\
        [demo]\nlength = 60\npartial_sum_at = 40\n";
    let explicit = base.replace("[procedure]\n", "[procedure]\nb = 2.5\nh = 1.0\n");
    let mut differing = Vec::new();
    for cmd in [
        Command::Calibrate,
        Command::Design,
        Command::Evaluate,
        Command::MisidSweep,
        Command::DemoPaths,
    ] {
        let text = if cmd == Command::Evaluate { &explicit } else { base };
        let reports: Vec<(String, Vec<String>)> = [1usize, 3]
            .iter()
            .map(|&workers| {
                let mut cfg = RunConfig::from_toml_str(text).unwrap().resolve(None).unwrap();
                cfg.mc.as_mut().unwrap().workers = workers;
                let r = cmd.run(&cfg).unwrap();
                (r.to_json().unwrap(), r.tables.iter().map(|t| t.contents.clone()).collect())
            })
            .collect();
        if reports[0] != reports[1] {
            differing.push(cmd.name());
        }
    }
    outcome(
        differing.is_empty(),
        format!("all five subcommands with 1 and 3 workers; differing: {differing:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("single-fault calibration table", table_single_fault),
        ("simultaneous-fault calibration table", table_simultaneous),
        ("misidentification ordering at ν = 50", ordering_at_late_change),
        ("misidentification flatness in ν", flatness),
        ("min-CuSum false-alarm lower bound", arl_lower_bound),
        ("recursive/batch oracle equivalence", oracle_equivalence),
        ("pathwise inequalities", pathwise_inequalities),
        ("no-change tail bound", tail_bound),
        ("determinism across worker counts", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (idx, (name, f)) in criteria.iter().enumerate() {
        let number = idx + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {number} ({name}) [{:.1}s]: {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
