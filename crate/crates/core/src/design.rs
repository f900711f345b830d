//! Threshold design.
//!
//! 1. Calibrate each single CuSum: `b_i(α)` is the smallest grid `b` with
//!    estimated `E_∞[σ_i(b)] ≥ 1/α`, and `L_i(α) = E_i[σ_i(b_i(α))]`.
//! 2. Over a `(b, h)` grid, estimate `E_∞[τ(b,h)]` and `E_i[τ(b,h)]`, and
//!    build `A(α) = {E_∞[τ] ≥ 1/α}`, `D_i(α,r) = {E_i[τ] ≤ r·max_j L_j(α)}`
//!    and `S(α,r) = A ∩ ⋂ D_i`.
//! 3. Select the largest `h` with a feasible `b`, then the largest feasible
//!    `b` at that `h`; or minimise the simulated worst-case
//!    misidentification over the feasible set.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ChangeModel;
use crate::montecarlo::{
    estimate_arl_false_alarm, estimate_cusum_arl, estimate_cusum_delay, estimate_delay_at_zero,
    estimate_misid_grid, CellEstimate, EstimateTable, McConfig, MisidTables,
};
use crate::procedures::Variant;

pub const DEFAULT_B_STEP: f64 = 0.01;
pub const DEFAULT_H_START: f64 = 0.05;
pub const DEFAULT_H_STEP: f64 = 0.05;

/// Ascending detection (`b`) and isolation (`h`) threshold axes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdGrid {
    pub b: Vec<f64>,
    pub h: Vec<f64>,
}

fn axis(name: &'static str, start: f64, step: f64, max: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::param(name, format!("step must be positive, got {step}")));
    }
    if !(start.is_finite() && max.is_finite() && start >= 0.0 && max >= start) {
        return Err(Error::param(name, format!("need 0 ≤ start ≤ max, got {start}..{max}")));
    }
    let count = ((max - start) / step + 1e-9).floor() as usize + 1;
    // rounding keeps values like 2.85 exact in reports
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// `|log α| + log K + 2`, the default upper end of both axes.
pub fn default_max_threshold(alpha: f64, k: usize) -> f64 {
    alpha.ln().abs() + (k as f64).ln() + 2.0
}

impl ThresholdGrid {
    pub fn uniform(b_start: f64, b_step: f64, b_max: f64, h_start: f64, h_step: f64, h_max: f64) -> Result<Self> {
        Ok(ThresholdGrid {
            b: axis("b", b_start, b_step, b_max)?,
            h: axis("h", h_start, h_step, h_max)?,
        })
    }

    /// `b = 0, 0.01, …` and `h = 0.05, 0.10, …`, both up to
    /// [`default_max_threshold`].
    pub fn default_for(alpha: f64, k: usize) -> Result<Self> {
        let max = default_max_threshold(alpha, k);
        Self::uniform(0.0, DEFAULT_B_STEP, max, DEFAULT_H_START, DEFAULT_H_STEP, max)
    }

    /// The `h` axis a variant uses (empty for the min-CuSum).
    pub fn h_for(&self, variant: Variant) -> &[f64] {
        if variant.uses_isolation_threshold() {
            &self.h
        } else {
            &[]
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Smallest `b` in `b_grid` with estimated `E_∞[σ_i(b)] ≥ 1/α`, and the
/// ARL estimate there.
pub fn calibrate_cusum(
    model: &ChangeModel,
    i: usize,
    alpha: f64,
    b_grid: &[f64],
    mc: &McConfig,
) -> Result<(f64, CellEstimate)> {
    check_alpha(alpha)?;
    let target = 1.0 / alpha;
    let arl = estimate_cusum_arl(model, i, b_grid, mc)?;
    for (idx, &b) in b_grid.iter().enumerate() {
        let c = arl.get(idx, 0);
        if c.estimate >= target {
            return Ok((b, *c));
        }
    }
    let largest_arl = arl.cells.iter().map(|c| c.estimate).fold(f64::NEG_INFINITY, f64::max);
    Err(Error::GridExhausted { largest_arl, target })
}

/// `L_i(α) = E_i[σ_i(b_i)]` with the change at time zero.
pub fn optimal_lorden(model: &ChangeModel, i: usize, b_i: f64, mc: &McConfig) -> Result<CellEstimate> {
    Ok(*estimate_cusum_delay(model, i, &[b_i], mc)?.get(0, 0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// 0-based alternative index.
    pub alternative: usize,
    /// `b_i(α)`.
    pub b: f64,
    /// `E_∞[σ_i(b_i(α))]`.
    pub arl: CellEstimate,
    /// `L_i(α)`.
    pub optimal_delay: CellEstimate,
    /// Set when the values were copied from a mirrored alternative.
    pub mirrored_from: Option<usize>,
}

/// Calibrates every alternative. With `mc.exploit_symmetry`, mirrored
/// alternatives reuse their canonical alternative's results.
pub fn calibrate_all(model: &ChangeModel, alpha: f64, b_grid: &[f64], mc: &McConfig) -> Result<Vec<Calibration>> {
    let mut out: Vec<Calibration> = Vec::with_capacity(model.k());
    for i in 0..model.k() {
        let canonical = model.mirror_of(i);
        if mc.exploit_symmetry && canonical != i {
            let mut c = out[canonical].clone();
            c.alternative = i;
            c.mirrored_from = Some(canonical);
            out.push(c);
            continue;
        }
        let (b, arl) = calibrate_cusum(model, i, alpha, b_grid, mc)?;
        let optimal_delay = optimal_lorden(model, i, b, mc)?;
        out.push(Calibration {
            alternative: i,
            b,
            arl,
            optimal_delay,
            mirrored_from: None,
        });
    }
    Ok(out)
}

/// `max_j L_j(α)`.
pub fn max_optimal_delay(calibrations: &[Calibration]) -> f64 {
    calibrations
        .iter()
        .map(|c| c.optimal_delay.estimate)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Grid estimates a region computation needs; independent of `r`.
#[derive(Clone, Debug, Serialize)]
pub struct RegionInputs {
    pub variant: Variant,
    pub arl: EstimateTable,
    /// One table per alternative.
    pub delays: Vec<EstimateTable>,
}

pub fn estimate_region_inputs(
    variant: Variant,
    model: &ChangeModel,
    grid: &ThresholdGrid,
    mc: &McConfig,
) -> Result<RegionInputs> {
    let h = grid.h_for(variant);
    let arl = estimate_arl_false_alarm(variant, model, &grid.b, h, mc)?;
    let mut delays: Vec<EstimateTable> = Vec::with_capacity(model.k());
    for i in 0..model.k() {
        let canonical = model.mirror_of(i);
        if mc.exploit_symmetry && canonical != i {
            let mut t = delays[canonical].clone();
            if let crate::montecarlo::Metric::DelayAtZero { alternative, .. } = &mut t.metric {
                *alternative = i;
            }
            delays.push(t);
        } else {
            delays.push(estimate_delay_at_zero(variant, model, i, &grid.b, h, mc)?);
        }
    }
    Ok(RegionInputs { variant, arl, delays })
}

/// Feasibility masks over a grid, row-major (`h` rows, `b` columns).
/// Variants that ignore `h` have an empty `h` axis and a single row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionMask {
    pub b: Vec<f64>,
    pub h: Vec<f64>,
    /// `A(α)`.
    pub false_alarm: Vec<bool>,
    /// `D_i(α, r)`, one per alternative.
    pub delay: Vec<Vec<bool>>,
    /// `S(α, r)`.
    pub feasible: Vec<bool>,
    /// The delay masks use `E_i[τ]` at change-point zero as a stand-in for
    /// the worst-case delay (variants without that equality).
    pub delay_proxy: bool,
}

impl RegionMask {
    pub fn rows(&self) -> usize {
        self.h.len().max(1)
    }

    pub fn cols(&self) -> usize {
        self.b.len()
    }

    pub fn is_feasible(&self, b_idx: usize, h_idx: usize) -> bool {
        self.feasible[h_idx * self.cols() + b_idx]
    }

    pub fn is_empty(&self) -> bool {
        !self.feasible.iter().any(|&f| f)
    }

    /// `(b_idx, h_idx)` of every feasible cell.
    pub fn feasible_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols();
        self.feasible
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(move |(at, _)| (at % cols, at / cols))
    }
}

/// Builds the masks from grid estimates. In conservative mode each
/// constraint must hold with a 2·SE margin.
pub fn build_mask(
    inputs: &RegionInputs,
    alpha: f64,
    r: f64,
    max_optimal_delay: f64,
    conservative: bool,
) -> Result<RegionMask> {
    check_alpha(alpha)?;
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::param("r", format!("must be greater than 1, got {r}")));
    }
    let margin = if conservative { 2.0 } else { 0.0 };
    let target = 1.0 / alpha;
    let delay_cap = r * max_optimal_delay;
    let false_alarm: Vec<bool> = inputs
        .arl
        .cells
        .iter()
        .map(|c| c.estimate - margin * c.se >= target)
        .collect();
    let delay: Vec<Vec<bool>> = inputs
        .delays
        .iter()
        .map(|t| t.cells.iter().map(|c| c.estimate + margin * c.se <= delay_cap).collect())
        .collect();
    let feasible = (0..false_alarm.len())
        .map(|at| false_alarm[at] && delay.iter().all(|d| d[at]))
        .collect();
    Ok(RegionMask {
        b: inputs.arl.b.clone(),
        h: inputs.arl.h.clone(),
        false_alarm,
        delay,
        feasible,
        delay_proxy: !inputs.variant.worst_case_at_zero(),
    })
}

/// Estimates the grid tables and builds the masks in one go.
#[allow(clippy::too_many_arguments)]
pub fn compute_regions(
    variant: Variant,
    model: &ChangeModel,
    alpha: f64,
    r: f64,
    grid: &ThresholdGrid,
    calibrations: &[Calibration],
    mc: &McConfig,
    conservative: bool,
) -> Result<RegionMask> {
    let inputs = estimate_region_inputs(variant, model, grid, mc)?;
    build_mask(&inputs, alpha, r, max_optimal_delay(calibrations), conservative)
}

/// An operating point. `h` is `None` for variants that ignore it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Selection {
    pub b: f64,
    pub h: Option<f64>,
    pub b_idx: usize,
    pub h_idx: usize,
}

impl Selection {
    fn at(mask: &RegionMask, b_idx: usize, h_idx: usize) -> Self {
        Selection {
            b: mask.b[b_idx],
            h: mask.h.get(h_idx).copied(),
            b_idx,
            h_idx,
        }
    }

    /// `h` to run the procedure with (0 where it is ignored).
    pub fn h_or_zero(&self) -> f64 {
        self.h.unwrap_or(0.0)
    }
}

/// Largest `h` with any feasible `b`, then the largest feasible `b` there.
/// `None` when `S` is empty.
pub fn select_thresholds(mask: &RegionMask) -> Option<Selection> {
    let cols = mask.cols();
    (0..mask.rows()).rev().find_map(|row| {
        (0..cols)
            .rev()
            .find(|&col| mask.feasible[row * cols + col])
            .map(|col| Selection::at(mask, col, row))
    })
}

/// Worst misidentification over a set of `(ν, j)` tables at one cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WorstMisid {
    pub probability: f64,
    pub se: f64,
    pub change_point: u64,
    /// 0-based alternative attaining the maximum.
    pub alternative: usize,
    pub retained: u64,
    pub low_power: bool,
}

/// Maximum over `tables` of the misidentification estimate at a cell.
/// Cells with no retained path are skipped; `None` if all are.
pub fn worst_misid(tables: &[MisidTables], b_idx: usize, h_idx: usize) -> Option<WorstMisid> {
    let mut worst: Option<WorstMisid> = None;
    let mut low_power = false;
    for t in tables {
        let c = t.misid.get(b_idx, h_idx);
        low_power |= c.unreliable;
        if c.estimate.is_nan() {
            continue;
        }
        if let crate::montecarlo::Metric::Misidentification {
            change_point,
            alternative,
        } = t.misid.metric
        {
            if worst.is_none_or(|w| c.estimate > w.probability) {
                worst = Some(WorstMisid {
                    probability: c.estimate,
                    se: c.se,
                    change_point,
                    alternative,
                    retained: c.n,
                    low_power: false,
                });
            }
        }
    }
    worst.map(|mut w| {
        w.low_power = low_power;
        w
    })
}

/// Misidentification tables for every alternative and every `ν` in
/// `nu_grid`, over the given axes.
pub fn misid_tables(
    variant: Variant,
    model: &ChangeModel,
    nu_grid: &[u64],
    b: &[f64],
    h: &[f64],
    mc: &McConfig,
) -> Result<Vec<MisidTables>> {
    let mut out = Vec::with_capacity(nu_grid.len() * model.k());
    for &nu in nu_grid {
        for j in 0..model.k() {
            if mc.exploit_symmetry && model.mirror_of(j) != j {
                continue;
            }
            out.push(estimate_misid_grid(variant, model, nu, j, b, h, mc)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisidOptimum {
    pub selection: Selection,
    pub worst: WorstMisid,
    /// Number of feasible cells compared.
    pub candidates: usize,
}

/// Candidate cells for the misidentification search: the largest feasible
/// `b` in each row plus the largest feasible `h` in each column, or every
/// feasible cell when `exhaustive`.
pub fn candidate_cells(mask: &RegionMask, exhaustive: bool) -> Vec<(usize, usize)> {
    if exhaustive {
        return mask.feasible_cells().collect();
    }
    let (rows, cols) = (mask.rows(), mask.cols());
    let mut cells = Vec::new();
    for row in 0..rows {
        if let Some(col) = (0..cols).rev().find(|&c| mask.feasible[row * cols + c]) {
            cells.push((col, row));
        }
    }
    for col in 0..cols {
        if let Some(row) = (0..rows).rev().find(|&r| mask.feasible[r * cols + col]) {
            cells.push((col, row));
        }
    }
    cells.sort_unstable();
    cells.dedup();
    cells
}

/// Feasible point minimising the worst-case misidentification over
/// `(ν, j)`. Ties go to the lexicographic (largest `h`, then largest `b`)
/// preference.
pub fn misid_optimal_thresholds(
    variant: Variant,
    model: &ChangeModel,
    mask: &RegionMask,
    nu_grid: &[u64],
    mc: &McConfig,
    exhaustive: bool,
) -> Result<Option<MisidOptimum>> {
    if mask.is_empty() {
        return Ok(None);
    }
    if nu_grid.is_empty() {
        return Err(Error::param("nu", "change-point grid is empty"));
    }
    let tables = misid_tables(variant, model, nu_grid, &mask.b, &mask.h, mc)?;
    Ok(misid_optimum_from_tables(mask, &tables, exhaustive))
}

/// [`misid_optimal_thresholds`] with precomputed grid tables, which must
/// share the mask's axes.
pub fn misid_optimum_from_tables(mask: &RegionMask, tables: &[MisidTables], exhaustive: bool) -> Option<MisidOptimum> {
    let mut cells = candidate_cells(mask, exhaustive);
    // preference order: larger h first, then larger b
    cells.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(b.0.cmp(&a.0)));
    let mut best: Option<(usize, usize, WorstMisid)> = None;
    for &(bi, hi) in &cells {
        let Some(w) = worst_misid(tables, bi, hi) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, _, bw)| w.probability < bw.probability) {
            best = Some((bi, hi, w));
        }
    }
    best.map(|(bi, hi, worst)| MisidOptimum {
        selection: Selection::at(mask, bi, hi),
        worst,
        candidates: cells.len(),
    })
}
