//! Sequential change diagnosis procedures `(T, D)`.
//!
//! Family procedures stop at the first `n` where some `i` has
//! `Y_i(n) ≥ b` and `W_i(n) ≥ h`, and decide the smallest such `i`. The
//! min-CuSum stops when `max_i Y_i(n) ≥ b` and decides the (smallest)
//! argmax; it ignores `h`.
//!
//! [`GridTracker`] evaluates a whole `(b, h)` grid on one path at once.
//! Stopping times are non-decreasing in both thresholds, so for each `h`
//! row it is enough to remember how many `b` cells are already stopped.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::models::ChangeModel;
use crate::statistics::{IsolationKind, PairVariant, StatisticBank};

/// Default cap on the number of observations in one run.
pub const DEFAULT_HORIZON: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    MinCusum,
    Matrix,
    Adaptive,
    Vector,
    /// Window-limited Generalized CuSum over the last `window` observations.
    Generalized { window: usize },
    /// Generalized CuSum over the full history (`O(n)` per step).
    GeneralizedFull,
}

impl Variant {
    pub fn isolation_kind(self) -> IsolationKind {
        match self {
            Variant::MinCusum => IsolationKind::None,
            Variant::Matrix => IsolationKind::Pair(PairVariant::Matrix),
            Variant::Adaptive => IsolationKind::Pair(PairVariant::Adaptive),
            Variant::Vector => IsolationKind::Pair(PairVariant::Vector),
            Variant::Generalized { window } => IsolationKind::Generalized(Some(window)),
            Variant::GeneralizedFull => IsolationKind::Generalized(None),
        }
    }

    pub fn stop_rule(self) -> StopRule {
        match self {
            Variant::MinCusum => StopRule::MinCusum,
            _ => StopRule::Family,
        }
    }

    /// True for procedures whose worst-case (Lorden) delay is attained at
    /// change-point zero, so `E_i[T]` is the Lorden delay.
    pub fn worst_case_at_zero(self) -> bool {
        matches!(self, Variant::MinCusum | Variant::Matrix | Variant::Adaptive)
    }

    pub fn uses_isolation_threshold(self) -> bool {
        self != Variant::MinCusum
    }

    /// Parses a variant name, using `window` for a bare `generalized`.
    pub fn parse(name: &str, window: Option<usize>) -> Result<Self> {
        match name {
            "generalized" => match window {
                Some(m) if m >= 1 => Ok(Variant::Generalized { window: m }),
                _ => Err(Error::param("window", "`generalized` needs a window of at least 1")),
            },
            other => other.parse(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::MinCusum => f.write_str("min_cusum"),
            Variant::Matrix => f.write_str("matrix"),
            Variant::Adaptive => f.write_str("adaptive"),
            Variant::Vector => f.write_str("vector"),
            Variant::Generalized { window } => write!(f, "generalized_m{window}"),
            Variant::GeneralizedFull => f.write_str("generalized_full"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "min_cusum" => Variant::MinCusum,
            "matrix" => Variant::Matrix,
            "adaptive" => Variant::Adaptive,
            "vector" => Variant::Vector,
            "generalized_full" => Variant::GeneralizedFull,
            other => match other.strip_prefix("generalized_m").map(str::parse::<usize>) {
                Some(Ok(window)) if window >= 1 => Variant::Generalized { window },
                _ => {
                    return Err(Error::param(
                        "variant",
                        format!(
                            "unknown variant `{other}` (expected min_cusum, matrix, adaptive, vector, generalized_m<window>, generalized_full)"
                        ),
                    ))
                }
            },
        })
    }
}

impl Serialize for Variant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How stopping and identification are decided from `(Y, W)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// `τ(b, h)`: first `i` with `Y_i ≥ b` and `W_i ≥ h`.
    Family,
    /// `σ(b)`: `max_i Y_i ≥ b`, decide argmax.
    MinCusum,
    /// `σ_i(b)`: the single CuSum `Y_i` crosses `b`.
    Single(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcedureSpec {
    pub variant: Variant,
    /// Detection threshold in nats.
    pub b: f64,
    /// Isolation threshold in nats; ignored by the min-CuSum.
    pub h: f64,
}

impl ProcedureSpec {
    pub fn new(variant: Variant, b: f64, h: f64) -> Result<Self> {
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::param("b", format!("must be finite and non-negative, got {b}")));
        }
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::param("h", format!("must be finite and non-negative, got {h}")));
        }
        if let Variant::Generalized { window: 0 } = variant {
            return Err(Error::param("window", "must be at least 1"));
        }
        Ok(ProcedureSpec { variant, b, h })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Stopped(usize),
}

/// Applies the stopping/identification rule to the current statistics.
pub fn decide(rule: StopRule, b: f64, h: f64, y: &[f64], w: &[f64]) -> StepOutcome {
    match rule {
        StopRule::Family => y
            .iter()
            .zip(w)
            .position(|(&yi, &wi)| yi >= b && wi >= h)
            .map_or(StepOutcome::Continue, StepOutcome::Stopped),
        StopRule::MinCusum => {
            let (arg, max) = argmax(y);
            if max >= b {
                StepOutcome::Stopped(arg)
            } else {
                StepOutcome::Continue
            }
        }
        StopRule::Single(i) => {
            if y[i] >= b {
                StepOutcome::Stopped(i)
            } else {
                StepOutcome::Continue
            }
        }
    }
}

/// Smallest index attaining the maximum.
fn argmax(y: &[f64]) -> (usize, f64) {
    let mut best = (0, y[0]);
    for (i, &v) in y.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// A procedure bound to a model, fed one observation at a time.
#[derive(Clone, Debug)]
pub struct Procedure<'m> {
    spec: ProcedureSpec,
    model: &'m ChangeModel,
    bank: StatisticBank,
    llr: Vec<f64>,
}

impl<'m> Procedure<'m> {
    pub fn new(spec: ProcedureSpec, model: &'m ChangeModel) -> Result<Self> {
        let k = model.k();
        Ok(Procedure {
            spec,
            model,
            bank: StatisticBank::new(k, spec.variant.isolation_kind())?,
            llr: vec![0.0; k],
        })
    }

    pub fn spec(&self) -> &ProcedureSpec {
        &self.spec
    }

    pub fn bank(&self) -> &StatisticBank {
        &self.bank
    }

    pub fn step(&mut self, x: &[f64]) -> Result<StepOutcome> {
        self.model.llrs_into(x, &mut self.llr)?;
        self.bank.update(&self.llr)?;
        Ok(decide(
            self.spec.variant.stop_rule(),
            self.spec.b,
            self.spec.h,
            self.bank.cusums(),
            self.bank.isolation(),
        ))
    }

    pub fn reset(&mut self) {
        self.bank.reset();
    }
}

/// Data-generating scenario: observations `1..=ν` come from `f`, the rest
/// from `g_post`. `change_point = None` means no change (`ν = ∞`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub change_point: Option<u64>,
    pub post: usize,
}

impl Scenario {
    pub const NO_CHANGE: Scenario = Scenario {
        change_point: None,
        post: 0,
    };

    pub fn change_at(change_point: u64, post: usize) -> Self {
        Scenario {
            change_point: Some(change_point),
            post,
        }
    }

    pub fn is_post_change(&self, n: u64) -> bool {
        self.change_point.is_some_and(|nu| n > nu)
    }

    /// Draws observation `n` (1-based) into `out`.
    pub fn sample<R: RngCore + ?Sized>(&self, model: &ChangeModel, n: u64, rng: &mut R, out: &mut [f64]) {
        if self.is_post_change(n) {
            model.sample_post(self.post, rng, out)
        } else {
            model.sample_pre(rng, out)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopTime {
    At(u64),
    Censored(u64),
}

impl StopTime {
    /// The stopping time, or the horizon for a censored run.
    pub fn value(self) -> u64 {
        match self {
            StopTime::At(t) | StopTime::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, StopTime::Censored(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunOutcome {
    pub stop: StopTime,
    /// `None` iff the run was censored.
    pub decision: Option<usize>,
    /// `T > ν` (false for `ν = ∞`).
    pub stopped_after_change: bool,
}

/// Simulates one run of `spec` under `scenario`, up to `horizon` steps.
pub fn run<R: RngCore + ?Sized>(
    spec: &ProcedureSpec,
    model: &ChangeModel,
    scenario: Scenario,
    horizon: u64,
    rng: &mut R,
) -> Result<RunOutcome> {
    if horizon == 0 {
        return Err(Error::param("horizon", "must be at least 1"));
    }
    let mut proc = Procedure::new(*spec, model)?;
    let mut x = vec![0.0; model.dim()];
    for n in 1..=horizon {
        scenario.sample(model, n, rng, &mut x);
        if let StepOutcome::Stopped(d) = proc.step(&x)? {
            return Ok(RunOutcome {
                stop: StopTime::At(n),
                decision: Some(d),
                stopped_after_change: scenario.is_post_change(n),
            });
        }
    }
    Ok(RunOutcome {
        stop: StopTime::Censored(horizon),
        decision: None,
        stopped_after_change: false,
    })
}

/// Tracks which cells of a `(b, h)` grid have stopped on one path.
///
/// Family rules use one row per `h` value; the other rules ignore `h` and
/// use a single row. `covered[row]` is the number of leading `b` cells
/// already stopped, and is non-increasing in `row`.
#[derive(Clone, Debug)]
pub struct GridTracker {
    rule: StopRule,
    b: Vec<f64>,
    h: Vec<f64>,
    covered: Vec<usize>,
}

impl GridTracker {
    /// `b` and `h` must be sorted ascending.
    pub fn new(rule: StopRule, b: &[f64], h: &[f64]) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::param("b", "threshold grid is empty"));
        }
        if !is_sorted(b) || !is_sorted(h) {
            return Err(Error::param("grid", "thresholds must be sorted ascending"));
        }
        let rows = match rule {
            StopRule::Family => {
                if h.is_empty() {
                    return Err(Error::param("h", "threshold grid is empty"));
                }
                h.len()
            }
            _ => 1,
        };
        Ok(GridTracker {
            rule,
            b: b.to_vec(),
            h: h.to_vec(),
            covered: vec![0; rows],
        })
    }

    pub fn rows(&self) -> usize {
        self.covered.len()
    }

    pub fn cols(&self) -> usize {
        self.b.len()
    }

    pub fn covered(&self) -> &[usize] {
        &self.covered
    }

    pub fn is_complete(&self) -> bool {
        self.covered[self.covered.len() - 1] == self.b.len()
    }

    pub fn reset(&mut self) {
        self.covered.iter_mut().for_each(|c| *c = 0);
    }

    /// Feeds the statistics at time `n`. For every newly stopped run of
    /// cells calls `sink(row, first_col, end_col, decision)`.
    pub fn observe(&mut self, y: &[f64], w: &[f64], mut sink: impl FnMut(usize, usize, usize, usize)) {
        let crossed = |b: &[f64], v: f64| b.partition_point(|&t| t <= v);
        match self.rule {
            StopRule::Family => {
                // ascending i so that simultaneous crossings go to the smallest index
                for i in 0..y.len() {
                    let cnt = crossed(&self.b, y[i]);
                    if cnt == 0 {
                        continue;
                    }
                    let live_rows = crossed(&self.h, w[i]);
                    let first = self.covered[..live_rows].partition_point(|&c| c >= cnt);
                    for row in first..live_rows {
                        sink(row, self.covered[row], cnt, i);
                        self.covered[row] = cnt;
                    }
                }
            }
            StopRule::MinCusum => {
                let (arg, max) = argmax(y);
                let cnt = crossed(&self.b, max);
                if cnt > self.covered[0] {
                    sink(0, self.covered[0], cnt, arg);
                    self.covered[0] = cnt;
                }
            }
            StopRule::Single(i) => {
                let cnt = crossed(&self.b, y[i]);
                if cnt > self.covered[0] {
                    sink(0, self.covered[0], cnt, i);
                    self.covered[0] = cnt;
                }
            }
        }
    }
}

fn is_sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(|x| !x.is_nan())
}

/// Per-step `(Y_i(n), W_i(n))` of one path, `n = 1..=len`.
#[derive(Clone, Debug, PartialEq)]
pub struct StatPath {
    pub k: usize,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

impl StatPath {
    pub fn len(&self) -> usize {
        self.y.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y_at(&self, n: usize) -> &[f64] {
        &self.y[(n - 1) * self.k..n * self.k]
    }

    pub fn w_at(&self, n: usize) -> &[f64] {
        &self.w[(n - 1) * self.k..n * self.k]
    }

    /// Simulates and records a path of `len` steps.
    pub fn simulate<R: RngCore + ?Sized>(
        model: &ChangeModel,
        kind: IsolationKind,
        scenario: Scenario,
        len: u64,
        rng: &mut R,
    ) -> Result<Self> {
        let k = model.k();
        let mut bank = StatisticBank::new(k, kind)?;
        let mut x = vec![0.0; model.dim()];
        let mut llr = vec![0.0; k];
        let mut path = StatPath {
            k,
            y: Vec::with_capacity(len as usize * k),
            w: Vec::with_capacity(len as usize * k),
        };
        for n in 1..=len {
            scenario.sample(model, n, rng, &mut x);
            model.llrs_into(&x, &mut llr)?;
            bank.update(&llr)?;
            path.y.extend_from_slice(bank.cusums());
            path.w.extend_from_slice(bank.isolation());
        }
        Ok(path)
    }
}

/// Stopping times and decisions over a `(b, h)` grid for one path.
#[derive(Clone, Debug, PartialEq)]
pub struct StopMatrix {
    rows: usize,
    cols: usize,
    pub time: Vec<Option<u64>>,
    pub decision: Vec<Option<usize>>,
}

impl StopMatrix {
    /// `(T, D)` at `(b[b_idx], h[h_idx])`; `None` when the path ended
    /// before that cell stopped. For rules that ignore `h`, every `h_idx`
    /// maps to the same row.
    pub fn get(&self, b_idx: usize, h_idx: usize) -> Option<(u64, usize)> {
        let row = if self.rows == 1 { 0 } else { h_idx };
        let at = row * self.cols + b_idx;
        let t = self.time[at]?;
        Some((t, self.decision[at]?))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

/// Evaluates `(T, D)` for every `(b, h)` in the grid on a recorded path.
pub fn pathwise_stop_times(rule: StopRule, path: &StatPath, b: &[f64], h: &[f64]) -> Result<StopMatrix> {
    let mut tracker = GridTracker::new(rule, b, h)?;
    let (rows, cols) = (tracker.rows(), tracker.cols());
    let mut time = vec![None; rows * cols];
    let mut decision = vec![None; rows * cols];
    for n in 1..=path.len() {
        tracker.observe(path.y_at(n), path.w_at(n), |row, lo, hi, d| {
            for c in lo..hi {
                time[row * cols + c] = Some(n as u64);
                decision[row * cols + c] = Some(d);
            }
        });
        if tracker.is_complete() {
            break;
        }
    }
    Ok(StopMatrix {
        rows,
        cols,
        time,
        decision,
    })
}
