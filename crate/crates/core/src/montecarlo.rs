//! Monte Carlo estimation of false-alarm, delay and misidentification
//! metrics over threshold grids.
//!
//! One simulated path yields stopping data for every `(b, h)` cell at once
//! (statistic paths do not depend on thresholds), so all grid points share
//! common random numbers. Each path draws from its own ChaCha stream keyed
//! by `(scenario seed, path index)`, and per-cell accumulators are integer
//! sums; estimates are therefore identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ChangeModel;
use crate::procedures::{GridTracker, ProcedureSpec, Scenario, StopRule, Variant, DEFAULT_HORIZON};
use crate::statistics::{IsolationKind, StatisticBank};

pub const DEFAULT_PATHS: usize = 50_000;
/// Fewer retained paths than this flags a misidentification estimate.
pub const MIN_RETAINED: u64 = 100;
/// Horizons beyond this trigger a warning for the full Generalized CuSum.
const FULL_GENERALIZED_WARN_HORIZON: u64 = 10_000;

fn default_paths() -> usize {
    DEFAULT_PATHS
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// `L`: paths per post-change scenario. No-change scenarios use `L/10`.
    #[serde(default = "default_paths")]
    pub num_paths: usize,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    pub base_seed: u64,
    /// Thread count hint (0 = all cores). Does not affect results, so it
    /// is left out of serialized output.
    #[serde(default, skip_serializing)]
    pub workers: usize,
    /// Reuse results of a mirrored alternative instead of simulating it.
    #[serde(default)]
    pub exploit_symmetry: bool,
}

impl McConfig {
    pub fn new(num_paths: usize, base_seed: u64) -> Self {
        McConfig {
            num_paths,
            horizon: DEFAULT_HORIZON,
            base_seed,
            workers: 0,
            exploit_symmetry: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            return Err(Error::param("num_paths", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        Ok(())
    }

    /// Paths used under no change: `⌈L/10⌉`.
    pub fn no_change_paths(&self) -> usize {
        self.num_paths.div_ceil(10).max(1)
    }
}

/// Reproducible random stream for one path.
pub fn rng_stream(base_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(path_index);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for all paths of one scenario. Procedures evaluated under the same
/// scenario see the same observations.
pub fn scenario_seed(base_seed: u64, scenario: Scenario) -> u64 {
    let tag = match scenario.change_point {
        None => 0,
        Some(nu) => splitmix64(nu.wrapping_add(1)) ^ (scenario.post as u64 + 1).rotate_left(32),
    };
    splitmix64(base_seed ^ splitmix64(tag))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    /// `E_∞[T]`.
    ArlFalseAlarm,
    /// `E_i[T]` with the change at time zero. `lorden` is true when that
    /// equals the worst-case delay for the procedure.
    DelayAtZero { alternative: usize, lorden: bool },
    /// `P_{ν,j}(D ≠ j | T > ν)`.
    Misidentification { change_point: u64, alternative: usize },
    /// `E_{ν,j}[T − ν | T > ν]`.
    ConditionalDelay { change_point: u64, alternative: usize },
}

impl Metric {
    /// Short label used in CSV output (alternatives 1-based).
    pub fn label(&self) -> String {
        match *self {
            Metric::ArlFalseAlarm => "arl".into(),
            Metric::DelayAtZero { alternative, lorden } => {
                format!("{}_{}", if lorden { "lorden_delay" } else { "delay_nu0" }, alternative + 1)
            }
            Metric::Misidentification {
                change_point,
                alternative,
            } => format!("misid_nu{change_point}_j{}", alternative + 1),
            Metric::ConditionalDelay {
                change_point,
                alternative,
            } => format!("cond_delay_nu{change_point}_j{}", alternative + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellEstimate {
    /// Mean time or probability; NaN when no path qualified.
    pub estimate: f64,
    pub se: f64,
    /// Paths censored at the horizon.
    pub censored: u64,
    /// Paths the estimate is based on.
    pub n: u64,
    /// Over half the paths censored, or too few retained paths.
    pub unreliable: bool,
}

/// Estimates over a `(b, h)` grid. Rules that ignore `h` have one row and
/// an empty `h` axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateTable {
    pub metric: Metric,
    pub b: Vec<f64>,
    pub h: Vec<f64>,
    pub cells: Vec<CellEstimate>,
}

impl EstimateTable {
    pub fn rows(&self) -> usize {
        self.h.len().max(1)
    }

    pub fn get(&self, b_idx: usize, h_idx: usize) -> &CellEstimate {
        let row = if self.h.is_empty() { 0 } else { h_idx };
        &self.cells[row * self.b.len() + b_idx]
    }

    pub fn any_unreliable(&self) -> bool {
        self.cells.iter().any(|c| c.unreliable)
    }

    /// CSV with columns `b,h,metric,estimate,se,censored,n`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "b,h,metric,estimate,se,censored,n")?;
        }
        let label = self.metric.label();
        for row in 0..self.rows() {
            let h = self.h.get(row).map(|h| fmt_num(*h)).unwrap_or_default();
            for (col, b) in self.b.iter().enumerate() {
                let c = &self.cells[row * self.b.len() + col];
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    fmt_num(*b),
                    h,
                    label,
                    fmt_num(c.estimate),
                    fmt_num(c.se),
                    c.censored,
                    c.n
                )?;
            }
        }
        Ok(())
    }
}

/// Formats with the shortest round-trip representation; NaN as empty.
pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Per-cell integer accumulators, stored as per-row difference arrays so a
/// run of newly stopped cells costs O(1).
#[derive(Clone, Debug)]
struct GridCounters {
    rows: usize,
    cols: usize,
    paths: u64,
    stopped: Vec<u64>,
    sum_t: Vec<u64>,
    sum_t2: Vec<u64>,
    censored: Vec<u64>,
    retained: Vec<u64>,
    wrong: Vec<u64>,
    sum_delay: Vec<u64>,
    sum_delay2: Vec<u64>,
}

impl GridCounters {
    fn new(rows: usize, cols: usize) -> Self {
        let z = vec![0u64; rows * (cols + 1)];
        GridCounters {
            rows,
            cols,
            paths: 0,
            stopped: z.clone(),
            sum_t: z.clone(),
            sum_t2: z.clone(),
            censored: z.clone(),
            retained: z.clone(),
            wrong: z.clone(),
            sum_delay: z.clone(),
            sum_delay2: z,
        }
    }

    #[inline]
    fn add(diff: &mut [u64], base: usize, lo: usize, hi: usize, v: u64) {
        diff[base + lo] = diff[base + lo].wrapping_add(v);
        diff[base + hi] = diff[base + hi].wrapping_sub(v);
    }

    fn merge(mut self, other: GridCounters) -> GridCounters {
        self.paths += other.paths;
        for (a, b) in [
            (&mut self.stopped, &other.stopped),
            (&mut self.sum_t, &other.sum_t),
            (&mut self.sum_t2, &other.sum_t2),
            (&mut self.censored, &other.censored),
            (&mut self.retained, &other.retained),
            (&mut self.wrong, &other.wrong),
            (&mut self.sum_delay, &other.sum_delay),
            (&mut self.sum_delay2, &other.sum_delay2),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x = x.wrapping_add(*y));
        }
        self
    }

    fn finish(self) -> GridTotals {
        let prefix = |diff: &[u64]| -> Vec<u64> {
            let mut out = Vec::with_capacity(self.rows * self.cols);
            for row in 0..self.rows {
                let mut acc = 0u64;
                for col in 0..self.cols {
                    acc = acc.wrapping_add(diff[row * (self.cols + 1) + col]);
                    out.push(acc);
                }
            }
            out
        };
        GridTotals {
            paths: self.paths,
            stopped: prefix(&self.stopped),
            sum_t: prefix(&self.sum_t),
            sum_t2: prefix(&self.sum_t2),
            censored: prefix(&self.censored),
            retained: prefix(&self.retained),
            wrong: prefix(&self.wrong),
            sum_delay: prefix(&self.sum_delay),
            sum_delay2: prefix(&self.sum_delay2),
        }
    }
}

/// Exact per-cell sums over all simulated paths.
#[derive(Clone, Debug)]
struct GridTotals {
    paths: u64,
    #[allow(dead_code)]
    stopped: Vec<u64>,
    sum_t: Vec<u64>,
    sum_t2: Vec<u64>,
    censored: Vec<u64>,
    retained: Vec<u64>,
    wrong: Vec<u64>,
    sum_delay: Vec<u64>,
    sum_delay2: Vec<u64>,
}

fn mean_and_se(sum: u64, sum_sq: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n == 1 {
        return (mean, 0.0);
    }
    // sum² / n computed in u128 to keep the variance exact enough
    let centered = sum_sq as f64 - (sum as u128 * sum as u128) as f64 / nf;
    let var = (centered / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

impl GridTotals {
    fn mean_time(&self, c: usize) -> CellEstimate {
        let (estimate, se) = mean_and_se(self.sum_t[c], self.sum_t2[c], self.paths);
        CellEstimate {
            estimate,
            se,
            censored: self.censored[c],
            n: self.paths,
            unreliable: 2 * self.censored[c] > self.paths,
        }
    }

    fn misid(&self, c: usize) -> CellEstimate {
        let n = self.retained[c];
        let (estimate, se) = if n == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let p = self.wrong[c] as f64 / n as f64;
            (p, (p * (1.0 - p) / n as f64).sqrt())
        };
        CellEstimate {
            estimate,
            se,
            censored: self.censored[c],
            n,
            unreliable: n < MIN_RETAINED,
        }
    }

    fn conditional_delay(&self, c: usize) -> CellEstimate {
        let n = self.retained[c];
        let (estimate, se) = mean_and_se(self.sum_delay[c], self.sum_delay2[c], n);
        CellEstimate {
            estimate,
            se,
            censored: self.censored[c],
            n,
            unreliable: n < MIN_RETAINED,
        }
    }
}

/// What to simulate: statistics, stopping rule, scenario and grid.
struct GridJob<'a> {
    model: &'a ChangeModel,
    kind: IsolationKind,
    rule: StopRule,
    scenario: Scenario,
    b: &'a [f64],
    h: &'a [f64],
    paths: usize,
}

struct Worker {
    bank: StatisticBank,
    tracker: GridTracker,
    x: Vec<f64>,
    llr: Vec<f64>,
    counters: GridCounters,
}

fn simulate_grid(job: &GridJob<'_>, mc: &McConfig) -> Result<GridTotals> {
    mc.validate()?;
    if job.kind == IsolationKind::Generalized(None) && mc.horizon > FULL_GENERALIZED_WARN_HORIZON {
        log::warn!(
            "full Generalized CuSum costs O(n) per step; horizon {} may be slow",
            mc.horizon
        );
    }
    let probe = GridTracker::new(job.rule, job.b, job.h)?;
    let (rows, cols) = (probe.rows(), probe.cols());
    let k = job.model.k();
    StatisticBank::new(k, job.kind)?;
    let seed = scenario_seed(mc.base_seed, job.scenario);
    let horizon = mc.horizon;

    let new_worker = || Worker {
        bank: StatisticBank::new(k, job.kind).expect("validated above"),
        tracker: probe.clone(),
        x: vec![0.0; job.model.dim()],
        llr: vec![0.0; k],
        counters: GridCounters::new(rows, cols),
    };

    let run = || {
        (0..job.paths)
            .into_par_iter()
            .with_min_len(32)
            .try_fold(new_worker, |mut w, idx| -> Result<Worker> {
                simulate_path(job, seed, idx as u64, horizon, &mut w)?;
                Ok(w)
            })
            .map(|w| w.map(|w| w.counters))
            .try_reduce(|| GridCounters::new(rows, cols), |a, b| Ok(a.merge(b)))
    };
    let counters = if mc.workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(mc.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?
    };
    Ok(counters.finish())
}

fn simulate_path(job: &GridJob<'_>, seed: u64, idx: u64, horizon: u64, w: &mut Worker) -> Result<()> {
    let mut rng = rng_stream(seed, idx);
    w.bank.reset();
    w.tracker.reset();
    let cols = w.counters.cols;
    let stride = cols + 1;
    let nu = job.scenario.change_point;
    let post = job.scenario.post;
    let c = &mut w.counters;
    c.paths += 1;
    for n in 1..=horizon {
        job.scenario.sample(job.model, n, &mut rng, &mut w.x);
        job.model.llrs_into(&w.x, &mut w.llr)?;
        w.bank.update(&w.llr)?;
        w.tracker.observe(w.bank.cusums(), w.bank.isolation(), |row, lo, hi, d| {
            let base = row * stride;
            GridCounters::add(&mut c.stopped, base, lo, hi, 1);
            GridCounters::add(&mut c.sum_t, base, lo, hi, n);
            GridCounters::add(&mut c.sum_t2, base, lo, hi, n * n);
            if let Some(nu) = nu {
                if n > nu {
                    let delay = n - nu;
                    GridCounters::add(&mut c.retained, base, lo, hi, 1);
                    GridCounters::add(&mut c.sum_delay, base, lo, hi, delay);
                    GridCounters::add(&mut c.sum_delay2, base, lo, hi, delay * delay);
                    if d != post {
                        GridCounters::add(&mut c.wrong, base, lo, hi, 1);
                    }
                }
            }
        });
        if w.tracker.is_complete() {
            return Ok(());
        }
    }
    // Cells still running are censored; the horizon enters mean times as
    // a lower bound.
    for (row, &covered) in w.tracker.covered().iter().enumerate() {
        if covered < cols {
            let base = row * stride;
            GridCounters::add(&mut c.censored, base, covered, cols, 1);
            GridCounters::add(&mut c.sum_t, base, covered, cols, horizon);
            GridCounters::add(&mut c.sum_t2, base, covered, cols, horizon * horizon);
        }
    }
    Ok(())
}

fn table(metric: Metric, rule: StopRule, b: &[f64], h: &[f64], f: impl Fn(usize) -> CellEstimate) -> EstimateTable {
    let h = if rule == StopRule::Family { h.to_vec() } else { Vec::new() };
    let cells = (0..h.len().max(1) * b.len()).map(f).collect();
    EstimateTable {
        metric,
        b: b.to_vec(),
        h,
        cells,
    }
}

/// `E_∞[τ(b, h)]` over the grid from `⌈L/10⌉` no-change paths.
pub fn estimate_arl_false_alarm(
    variant: Variant,
    model: &ChangeModel,
    b: &[f64],
    h: &[f64],
    mc: &McConfig,
) -> Result<EstimateTable> {
    let job = GridJob {
        model,
        kind: variant.isolation_kind(),
        rule: variant.stop_rule(),
        scenario: Scenario::NO_CHANGE,
        b,
        h,
        paths: mc.no_change_paths(),
    };
    let totals = simulate_grid(&job, mc)?;
    Ok(table(Metric::ArlFalseAlarm, job.rule, b, h, |c| totals.mean_time(c)))
}

/// `E_i[τ(b, h)]` with the change at time zero, from `L` paths.
pub fn estimate_delay_at_zero(
    variant: Variant,
    model: &ChangeModel,
    i: usize,
    b: &[f64],
    h: &[f64],
    mc: &McConfig,
) -> Result<EstimateTable> {
    check_alternative(model, i)?;
    let job = GridJob {
        model,
        kind: variant.isolation_kind(),
        rule: variant.stop_rule(),
        scenario: Scenario::change_at(0, i),
        b,
        h,
        paths: mc.num_paths,
    };
    let totals = simulate_grid(&job, mc)?;
    let metric = Metric::DelayAtZero {
        alternative: i,
        lorden: variant.worst_case_at_zero(),
    };
    Ok(table(metric, job.rule, b, h, |c| totals.mean_time(c)))
}

/// `E_∞[σ_i(b)]` for the single CuSum `Y_i`, from `⌈L/10⌉` paths.
pub fn estimate_cusum_arl(model: &ChangeModel, i: usize, b: &[f64], mc: &McConfig) -> Result<EstimateTable> {
    check_alternative(model, i)?;
    let job = GridJob {
        model,
        kind: IsolationKind::None,
        rule: StopRule::Single(i),
        scenario: Scenario::NO_CHANGE,
        b,
        h: &[],
        paths: mc.no_change_paths(),
    };
    let totals = simulate_grid(&job, mc)?;
    Ok(table(Metric::ArlFalseAlarm, job.rule, b, &[], |c| totals.mean_time(c)))
}

/// `E_i[σ_i(b)]` for the single CuSum `Y_i` with the change at zero.
pub fn estimate_cusum_delay(model: &ChangeModel, i: usize, b: &[f64], mc: &McConfig) -> Result<EstimateTable> {
    check_alternative(model, i)?;
    let job = GridJob {
        model,
        kind: IsolationKind::None,
        rule: StopRule::Single(i),
        scenario: Scenario::change_at(0, i),
        b,
        h: &[],
        paths: mc.num_paths,
    };
    let totals = simulate_grid(&job, mc)?;
    let metric = Metric::DelayAtZero {
        alternative: i,
        lorden: true,
    };
    Ok(table(metric, job.rule, b, &[], |c| totals.mean_time(c)))
}

fn check_alternative(model: &ChangeModel, i: usize) -> Result<()> {
    if i >= model.k() {
        return Err(Error::param(
            "alternative",
            format!("index {i} out of range for K = {}", model.k()),
        ));
    }
    Ok(())
}

/// Misidentification and conditional-delay tables for one `(ν, j)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisidTables {
    pub misid: EstimateTable,
    pub conditional_delay: EstimateTable,
}

/// `P_{ν,j}(D ≠ j | T > ν)` over the grid from `L` paths. Paths that stop
/// at or before `ν`, or are censored, are not retained.
pub fn estimate_misid_grid(
    variant: Variant,
    model: &ChangeModel,
    nu: u64,
    j: usize,
    b: &[f64],
    h: &[f64],
    mc: &McConfig,
) -> Result<MisidTables> {
    check_alternative(model, j)?;
    let job = GridJob {
        model,
        kind: variant.isolation_kind(),
        rule: variant.stop_rule(),
        scenario: Scenario::change_at(nu, j),
        b,
        h,
        paths: mc.num_paths,
    };
    let totals = simulate_grid(&job, mc)?;
    let m = Metric::Misidentification {
        change_point: nu,
        alternative: j,
    };
    let d = Metric::ConditionalDelay {
        change_point: nu,
        alternative: j,
    };
    Ok(MisidTables {
        misid: table(m, job.rule, b, h, |c| totals.misid(c)),
        conditional_delay: table(d, job.rule, b, h, |c| totals.conditional_delay(c)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MisidEstimate {
    pub probability: f64,
    pub se: f64,
    /// Paths with `T > ν` that were not censored.
    pub retained: u64,
    pub low_power: bool,
}

impl From<&CellEstimate> for MisidEstimate {
    fn from(c: &CellEstimate) -> Self {
        MisidEstimate {
            probability: c.estimate,
            se: c.se,
            retained: c.n,
            low_power: c.unreliable,
        }
    }
}

/// Misidentification probability of one procedure under `P_{ν,j}`.
pub fn estimate_misid(spec: &ProcedureSpec, model: &ChangeModel, nu: u64, j: usize, mc: &McConfig) -> Result<MisidEstimate> {
    let t = estimate_misid_grid(spec.variant, model, nu, j, &[spec.b], &[spec.h], mc)?;
    Ok(t.misid.get(0, 0).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{gaussian_mean_shift, gaussian_multichannel};
    use rand::RngCore;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(rng_stream(9, 3), |r, _: u64| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(rng_stream(9, 3), |r, _: u64| Some(r.next_u64())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(rng_stream(9, 4), |r, _: u64| Some(r.next_u64())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(
            scenario_seed(1, Scenario::change_at(0, 0)),
            scenario_seed(1, Scenario::change_at(10, 0))
        );
        assert_ne!(
            scenario_seed(1, Scenario::change_at(0, 0)),
            scenario_seed(1, Scenario::change_at(0, 1))
        );
    }

    #[test]
    fn zero_thresholds_give_unit_arl() {
        let model = gaussian_multichannel(2, 0.0, 1.0, 1.0, 1.0, true).unwrap();
        let mc = McConfig::new(200, 5);
        let t = estimate_arl_false_alarm(Variant::Adaptive, &model, &[0.0], &[0.0], &mc).unwrap();
        let c = t.get(0, 0);
        assert_eq!(c.estimate, 1.0);
        assert_eq!(c.se, 0.0);
        assert_eq!(c.n, 20);
    }

    #[test]
    fn tiny_threshold_delay_is_one() {
        let model = gaussian_mean_shift(&[1.0]).unwrap();
        let mc = McConfig::new(100, 5);
        let t = estimate_delay_at_zero(Variant::MinCusum, &model, 0, &[0.0], &[], &mc).unwrap();
        assert_eq!(t.get(0, 0).estimate, 1.0);
    }

    #[test]
    fn single_alternative_never_misidentifies() {
        let model = gaussian_mean_shift(&[1.0]).unwrap();
        let mc = McConfig::new(300, 5);
        let spec = ProcedureSpec::new(Variant::Adaptive, 2.0, 1.0).unwrap();
        let m = estimate_misid(&spec, &model, 0, 0, &mc).unwrap();
        assert_eq!(m.probability, 0.0);
        assert_eq!(m.retained, 300);
    }

    #[test]
    fn censoring_is_flagged() {
        let model = gaussian_mean_shift(&[1.0, 2.0]).unwrap();
        let mut mc = McConfig::new(50, 5);
        mc.horizon = 5;
        let t = estimate_arl_false_alarm(Variant::Matrix, &model, &[50.0], &[1.0], &mc).unwrap();
        let c = t.get(0, 0);
        assert_eq!(c.censored, 5);
        assert!(c.unreliable);
        assert_eq!(c.estimate, 5.0);
    }

    #[test]
    fn invalid_inputs() {
        let model = gaussian_mean_shift(&[1.0]).unwrap();
        let mc = McConfig::new(0, 1);
        assert!(estimate_cusum_arl(&model, 0, &[1.0], &mc).is_err());
        let mc = McConfig::new(10, 1);
        assert!(estimate_cusum_arl(&model, 3, &[1.0], &mc).is_err());
    }

    #[test]
    fn csv_layout() {
        let model = gaussian_mean_shift(&[1.0, 2.0]).unwrap();
        let mc = McConfig::new(20, 5);
        let t = estimate_arl_false_alarm(Variant::Adaptive, &model, &[0.0, 0.5], &[0.05, 0.1], &mc).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "b,h,metric,estimate,se,censored,n");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,0.05,arl,"));
    }
}
