//! Running detection and isolation statistics, updated one observation at a
//! time.
//!
//! * [`CusumVector`]: `Y_i(n) = (Y_i(n−1) + ℓ_i(n))⁺`.
//! * [`ResetClock`]: `R_i(n)`, the last time `Y_i` sat at zero.
//! * [`PairMatrix`]: pairwise isolation statistics in three flavours:
//!   Matrix CuSum `Y_ij`, adaptive Matrix CuSum `Y'_ij` (reset whenever
//!   `Y_i` hits zero) and Vector CuSum `Y_i − Y_j`.
//! * [`GeneralizedBuffer`]: (window-limited) Generalized CuSum `W_i`.
//!
//! [`StatisticBank`] ties them together in the order the adaptive update
//! needs: CuSums first, then reset clock, then pairwise statistics.
//!
//! Pairwise quantities are stored row-major as `K×K` slices; entry
//! `i * K + j` holds the `(i, j)` value and the diagonal is unused.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod oracle;

/// Per-alternative CuSum statistics `Y_i(n)` in nats.
#[derive(Clone, Debug, PartialEq)]
pub struct CusumVector {
    pub y: Vec<f64>,
    pub n: u64,
}

impl CusumVector {
    pub fn new(k: usize) -> Self {
        CusumVector { y: vec![0.0; k], n: 0 }
    }

    pub fn k(&self) -> usize {
        self.y.len()
    }

    /// Advances to time `n + 1` given `llrs[i] = ℓ_i(n + 1)`.
    pub fn update(&mut self, llrs: &[f64]) -> Result<()> {
        debug_assert_eq!(llrs.len(), self.y.len());
        let step = self.n + 1;
        if llrs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "log-likelihood ratio",
                step,
            });
        }
        for (y, &l) in self.y.iter_mut().zip(llrs) {
            *y = positive_part(*y + l);
        }
        self.n = step;
        Ok(())
    }

    pub fn reset(&mut self) {
        self.y.iter_mut().for_each(|y| *y = 0.0);
        self.n = 0;
    }
}

/// `(x)⁺`, returning a literal `0.0` when `x ≤ 0`.
#[inline]
pub fn positive_part(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// `R_i(n) = max{0 ≤ t ≤ n : Y_i(t) = 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResetClock {
    pub r: Vec<u64>,
}

impl ResetClock {
    pub fn new(k: usize) -> Self {
        ResetClock { r: vec![0; k] }
    }

    /// `cusums` must already be at time `n`.
    pub fn update(&mut self, cusums: &CusumVector, n: u64) {
        for (r, &y) in self.r.iter_mut().zip(&cusums.y) {
            if y == 0.0 {
                *r = n;
            }
        }
    }

    pub fn reset(&mut self) {
        self.r.iter_mut().for_each(|r| *r = 0);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairVariant {
    /// `Y_ij(n) = (Y_ij(n−1) + ℓ_ij(n))⁺`.
    Matrix,
    /// `Y'_ij(n) = (Y'_ij(n−1) + ℓ_ij(n))⁺ · 1{Y_i(n) > 0}`.
    Adaptive,
    /// `Y_i(n) − Y_j(n)`.
    Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairMatrix {
    variant: PairVariant,
    k: usize,
    pub w: Vec<f64>,
}

impl PairMatrix {
    pub fn new(variant: PairVariant, k: usize) -> Self {
        PairMatrix {
            variant,
            k,
            w: vec![0.0; k * k],
        }
    }

    pub fn variant(&self) -> PairVariant {
        self.variant
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.k + j]
    }

    /// Applies one step. `cusums` must already be advanced to the current
    /// time; `pair_llrs[i * K + j] = ℓ_ij(n)`.
    pub fn update(&mut self, cusums: &CusumVector, pair_llrs: &[f64]) {
        let k = self.k;
        match self.variant {
            PairVariant::Matrix => {
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            let e = &mut self.w[i * k + j];
                            *e = positive_part(*e + pair_llrs[i * k + j]);
                        }
                    }
                }
            }
            PairVariant::Adaptive => {
                for i in 0..k {
                    let alive = cusums.y[i] > 0.0;
                    for j in 0..k {
                        if i != j {
                            let e = &mut self.w[i * k + j];
                            *e = if alive {
                                positive_part(*e + pair_llrs[i * k + j])
                            } else {
                                0.0
                            };
                        }
                    }
                }
            }
            PairVariant::Vector => {
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            self.w[i * k + j] = cusums.y[i] - cusums.y[j];
                        }
                    }
                }
            }
        }
    }

    /// `min_{j≠i} W_ij`; `+∞` when `K == 1`.
    pub fn row_min(&self, i: usize) -> f64 {
        let k = self.k;
        (0..k)
            .filter(|&j| j != i)
            .map(|j| self.w[i * k + j])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn reset(&mut self) {
        self.w.iter_mut().for_each(|w| *w = 0.0);
    }
}

/// History buffer for the Generalized CuSum
///
/// `W_i(n) = max_{M(n) ≤ t ≤ n} min(Σ_{u>t} ℓ_i(u), min_{j≠i} Σ_{u>t} ℓ_ij(u))`
/// with `M(n) = max(0, n − m)` for a window `m`, or `M(n) = 0` when the
/// window is unbounded. An unbounded buffer keeps the whole history and
/// costs `O(n)` per step.
#[derive(Clone, Debug)]
pub struct GeneralizedBuffer {
    k: usize,
    window: Option<usize>,
    // Each record is `K` values of ℓ_i followed by `K²` values of ℓ_ij.
    records: Vec<f64>,
    len: usize,
    head: usize,
    suffix: Vec<f64>,
    pub w: Vec<f64>,
}

impl GeneralizedBuffer {
    /// `window = None` keeps the full history.
    pub fn new(k: usize, window: Option<usize>) -> Result<Self> {
        if window == Some(0) {
            return Err(Error::param("window", "must be at least 1"));
        }
        let stride = k + k * k;
        Ok(GeneralizedBuffer {
            k,
            window,
            records: Vec::with_capacity(stride * window.unwrap_or(64)),
            len: 0,
            head: 0,
            suffix: vec![0.0; stride],
            w: vec![0.0; k],
        })
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn stride(&self) -> usize {
        self.k + self.k * self.k
    }

    fn push(&mut self, llr: &[f64], pair_llrs: &[f64]) {
        let stride = self.stride();
        match self.window {
            Some(m) if self.len == m => {
                // overwrite the oldest record
                let at = self.head * stride;
                self.records[at..at + self.k].copy_from_slice(llr);
                self.records[at + self.k..at + stride].copy_from_slice(pair_llrs);
                self.head = (self.head + 1) % m;
            }
            _ => {
                self.records.extend_from_slice(llr);
                self.records.extend_from_slice(pair_llrs);
                self.len += 1;
            }
        }
    }

    /// Record `age` steps back from the newest (`age = 0` is the newest).
    fn record(&self, age: usize) -> &[f64] {
        let stride = self.stride();
        let slot = match self.window {
            Some(m) if self.len == m => (self.head + m - 1 - age) % m,
            _ => self.len - 1 - age,
        };
        &self.records[slot * stride..(slot + 1) * stride]
    }

    /// Appends `ℓ(n)` and recomputes every `W_i(n)`.
    pub fn update(&mut self, llr: &[f64], pair_llrs: &[f64]) -> &[f64] {
        self.push(llr, pair_llrs);
        let k = self.k;
        let mut suffix = std::mem::take(&mut self.suffix);
        for i in 0..k {
            suffix.iter_mut().for_each(|s| *s = 0.0);
            // t = n contributes min(0, 0, ...) = 0
            let mut best = 0.0_f64;
            for age in 0..self.len {
                let rec = self.record(age);
                suffix[i] += rec[i];
                let mut v = suffix[i];
                for j in 0..k {
                    if j != i {
                        let idx = k + i * k + j;
                        suffix[idx] += rec[idx];
                        v = v.min(suffix[idx]);
                    }
                }
                best = best.max(v);
            }
            self.w[i] = best;
        }
        self.suffix = suffix;
        &self.w
    }

    pub fn reset(&mut self) {
        self.records.clear();
        self.len = 0;
        self.head = 0;
        self.w.iter_mut().for_each(|w| *w = 0.0);
    }
}

/// Which isolation statistic a [`StatisticBank`] maintains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsolationKind {
    /// CuSums only (min-CuSum and single-CuSum procedures).
    None,
    Pair(PairVariant),
    /// Generalized CuSum with an optional window.
    Generalized(Option<usize>),
}

/// All running statistics of one monitored stream.
///
/// `isolation()` returns `W_i(n)`: `min_{j≠i} W_ij(n)` for pairwise
/// variants and the Generalized CuSum value otherwise. With a single
/// alternative every isolation statistic is `+∞`, so any family procedure
/// reduces to the plain CuSum.
#[derive(Clone, Debug)]
pub struct StatisticBank {
    k: usize,
    kind: IsolationKind,
    cusum: CusumVector,
    clock: ResetClock,
    pair: Option<PairMatrix>,
    generalized: Option<GeneralizedBuffer>,
    pair_llrs: Vec<f64>,
    isolation: Vec<f64>,
}

impl StatisticBank {
    pub fn new(k: usize, kind: IsolationKind) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "at least one alternative is required"));
        }
        let pair = match kind {
            IsolationKind::Pair(v) => Some(PairMatrix::new(v, k)),
            _ => None,
        };
        let generalized = match kind {
            IsolationKind::Generalized(m) => Some(GeneralizedBuffer::new(k, m)?),
            _ => None,
        };
        let initial = if k == 1 || kind == IsolationKind::None {
            f64::INFINITY
        } else {
            0.0
        };
        Ok(StatisticBank {
            k,
            kind,
            cusum: CusumVector::new(k),
            clock: ResetClock::new(k),
            pair,
            generalized,
            pair_llrs: vec![0.0; k * k],
            isolation: vec![initial; k],
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> IsolationKind {
        self.kind
    }

    pub fn n(&self) -> u64 {
        self.cusum.n
    }

    pub fn cusums(&self) -> &[f64] {
        &self.cusum.y
    }

    pub fn cusum_vector(&self) -> &CusumVector {
        &self.cusum
    }

    pub fn reset_times(&self) -> &[u64] {
        &self.clock.r
    }

    pub fn pair_matrix(&self) -> Option<&PairMatrix> {
        self.pair.as_ref()
    }

    pub fn generalized(&self) -> Option<&GeneralizedBuffer> {
        self.generalized.as_ref()
    }

    pub fn isolation(&self) -> &[f64] {
        &self.isolation
    }

    /// Advances every statistic given `llrs[i] = ℓ_i(n)`. Pairwise LLRs are
    /// derived as `ℓ_ij = ℓ_i − ℓ_j`.
    pub fn update(&mut self, llrs: &[f64]) -> Result<()> {
        let k = self.k;
        self.cusum.update(llrs)?;
        let n = self.cusum.n;
        self.clock.update(&self.cusum, n);
        if self.kind == IsolationKind::None {
            return Ok(());
        }
        for i in 0..k {
            for j in 0..k {
                self.pair_llrs[i * k + j] = if i == j { 0.0 } else { llrs[i] - llrs[j] };
            }
        }
        if let Some(pair) = self.pair.as_mut() {
            pair.update(&self.cusum, &self.pair_llrs);
            if k > 1 {
                for i in 0..k {
                    self.isolation[i] = pair.row_min(i);
                }
            }
        }
        if let Some(generalized) = self.generalized.as_mut() {
            let w = generalized.update(llrs, &self.pair_llrs);
            if k > 1 {
                self.isolation.copy_from_slice(w);
            }
        }
        if self.isolation.iter().any(|w| w.is_nan()) {
            return Err(Error::NonFinite {
                what: "isolation statistic",
                step: n,
            });
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.cusum.reset();
        self.clock.reset();
        if let Some(p) = self.pair.as_mut() {
            p.reset();
        }
        if let Some(g) = self.generalized.as_mut() {
            g.reset();
        }
        let initial = if self.k == 1 || self.kind == IsolationKind::None {
            f64::INFINITY
        } else {
            0.0
        };
        self.isolation.iter_mut().for_each(|w| *w = initial);
    }
}

/// A sequence of per-step LLRs: `llr[(n−1)·K + i] = ℓ_i(n)` and
/// `pair[(n−1)·K² + i·K + j] = ℓ_ij(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrPath {
    pub k: usize,
    pub llr: Vec<f64>,
    pub pair: Vec<f64>,
}

impl LlrPath {
    /// Builds a path from per-alternative LLRs, deriving `ℓ_ij = ℓ_i − ℓ_j`.
    pub fn from_llrs(k: usize, llr: Vec<f64>) -> Self {
        assert_eq!(llr.len() % k, 0);
        let steps = llr.len() / k;
        let mut pair = vec![0.0; steps * k * k];
        for n in 0..steps {
            let l = &llr[n * k..(n + 1) * k];
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        pair[n * k * k + i * k + j] = l[i] - l[j];
                    }
                }
            }
        }
        LlrPath { k, llr, pair }
    }

    pub fn len(&self) -> usize {
        self.llr.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.llr.is_empty()
    }

    /// LLRs at time `n` (1-based).
    pub fn llr_at(&self, n: usize) -> &[f64] {
        &self.llr[(n - 1) * self.k..n * self.k]
    }

    pub fn pair_at(&self, n: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.pair[(n - 1) * kk..n * kk]
    }
}
