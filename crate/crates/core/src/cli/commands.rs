use serde::Serialize;
use serde_json::json;

use super::config::{DesignSection, RunConfig, SelectionMode};
use super::report::{cell_fields, num, opt_num, push_table, r_tag, CsvBuilder, CsvTable, Report, ESTIMATE_HEADER};
use crate::design::{
    build_mask, calibrate_all, estimate_region_inputs, max_optimal_delay, misid_optimum_from_tables, misid_tables,
    select_thresholds, worst_misid, Calibration, RegionInputs, RegionMask, Selection, ThresholdGrid, WorstMisid,
};
use crate::error::{Error, Result};
use crate::models::ChangeModel;
use crate::montecarlo::{rng_stream, scenario_seed, CellEstimate, McConfig, Metric, MisidTables};
use crate::procedures::{ProcedureSpec, Scenario, Variant};
use crate::statistics::{IsolationKind, PairVariant, StatisticBank};

// ---------------------------------------------------------------- calibrate

pub fn cmd_calibrate(cfg: &RunConfig) -> Result<Report> {
    const CMD: &str = "calibrate";
    let model = cfg.require_model(CMD)?;
    let mc = cfg.require_mc(CMD)?;
    let design = cfg.require_design(CMD)?;
    let grid = cfg.grid.thresholds()?;
    let cals = calibrate_all(&model, design.alpha, &grid.b, &mc)?;

    let mut report = Report::new(CMD, cfg);
    report.status.unreliable = calibrations_unreliable(&cals);
    report.results = json!({
        "calibrations": cals,
        "max_optimal_delay": max_delay_summary(&cals),
        "kl": kl_summary(&model),
    });
    report.tables.push(calibration_csv(&cals));
    Ok(report)
}

fn calibrations_unreliable(cals: &[Calibration]) -> bool {
    cals.iter().any(|c| c.arl.unreliable || c.optimal_delay.unreliable)
}

#[derive(Serialize)]
struct MaxDelay {
    estimate: f64,
    /// SE of the maximising `L_j`; a caveat on the delay constraint, not
    /// propagated into it.
    se: f64,
    n: u64,
    alternative: usize,
}

fn max_delay_summary(cals: &[Calibration]) -> MaxDelay {
    let estimate = max_optimal_delay(cals);
    let at = cals
        .iter()
        .find(|c| c.optimal_delay.estimate == estimate)
        .expect("calibrations are non-empty");
    MaxDelay {
        estimate,
        se: at.optimal_delay.se,
        n: at.optimal_delay.n,
        alternative: at.alternative,
    }
}

fn kl_summary(model: &ChangeModel) -> serde_json::Value {
    let kl = model.kl();
    let k = model.k();
    json!({
        "to_pre": (0..k).map(|i| kl.to_pre(i)).collect::<Vec<_>>(),
        "pair": (0..k).map(|i| (0..k).map(|j| kl.pair(i, j)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn calibration_csv(cals: &[Calibration]) -> CsvTable {
    let mut csv = CsvBuilder::new(
        "calibration.csv",
        &[
            "alternative",
            "b",
            "arl",
            "arl_se",
            "arl_censored",
            "arl_n",
            "optimal_delay",
            "optimal_delay_se",
            "optimal_delay_censored",
            "optimal_delay_n",
            "mirrored_from",
        ],
    );
    for c in cals {
        let [a, a_se, a_c, a_n] = cell_fields(&c.arl);
        let [d, d_se, d_c, d_n] = cell_fields(&c.optimal_delay);
        let mirrored = c.mirrored_from.map(|m| (m + 1).to_string()).unwrap_or_default();
        csv.row([
            (c.alternative + 1).to_string(),
            num(c.b),
            a,
            a_se,
            a_c,
            a_n,
            d,
            d_se,
            d_c,
            d_n,
            mirrored,
        ]);
    }
    csv.finish()
}

// ------------------------------------------------------------------- design

#[derive(Clone, Debug, Serialize)]
pub struct RegionSizes {
    pub cells: usize,
    pub false_alarm: usize,
    pub delay: Vec<usize>,
    pub feasible: usize,
}

impl RegionSizes {
    fn of(mask: &RegionMask) -> Self {
        let count = |m: &[bool]| m.iter().filter(|&&x| x).count();
        RegionSizes {
            cells: mask.feasible.len(),
            false_alarm: count(&mask.false_alarm),
            delay: mask.delay.iter().map(|d| count(d)).collect(),
            feasible: count(&mask.feasible),
        }
    }
}

/// Grid estimates at a selected cell.
#[derive(Clone, Debug, Serialize)]
pub struct PointEstimates {
    pub arl: CellEstimate,
    /// `E_i[τ]` at change-point zero, one per alternative.
    pub delays: Vec<CellEstimate>,
}

impl PointEstimates {
    fn unreliable(&self) -> bool {
        self.arl.unreliable || self.delays.iter().any(|d| d.unreliable)
    }
}

/// Design outcome for one `(variant, r)`.
#[derive(Clone, Debug, Serialize)]
pub struct DesignPoint {
    pub variant: Variant,
    pub r: f64,
    pub feasible: bool,
    pub regions: RegionSizes,
    /// The delay constraint uses `E_i[τ]` at change-point zero, which is
    /// not the worst-case delay for this variant.
    pub delay_proxy: bool,
    pub selection: Option<Selection>,
    pub estimates: Option<PointEstimates>,
    /// Worst-case misidentification at the selection (`misid_optimal`
    /// mode only).
    pub worst_misid: Option<WorstMisid>,
    /// Cells compared by the misidentification search.
    pub candidates: Option<usize>,
    /// The selection sits on the largest `b` or `h` of the grid, so a
    /// larger grid may select differently.
    pub on_grid_edge: bool,
}

struct VariantDesign {
    inputs: RegionInputs,
    points: Vec<(DesignPoint, RegionMask)>,
}

fn design_variant(
    variant: Variant,
    model: &ChangeModel,
    grid: &ThresholdGrid,
    nu: &[u64],
    design: &DesignSection,
    max_delay: f64,
    mc: &McConfig,
) -> Result<VariantDesign> {
    log::info!("estimating regions for {variant}");
    let inputs = estimate_region_inputs(variant, model, grid, mc)?;
    let tables = match design.selection {
        SelectionMode::MisidOptimal => {
            if nu.is_empty() {
                return Err(Error::Config("grid.nu is empty".into()));
            }
            log::info!("estimating misidentification grid for {variant}");
            Some(misid_tables(variant, model, nu, &inputs.arl.b, &inputs.arl.h, mc)?)
        }
        SelectionMode::Lexicographic => None,
    };
    let mut points = Vec::with_capacity(design.r.len());
    for &r in &design.r {
        let mask = build_mask(&inputs, design.alpha, r, max_delay, design.conservative)?;
        let (selection, worst, candidates) = match &tables {
            None => (select_thresholds(&mask), None, None),
            Some(t) => match misid_optimum_from_tables(&mask, t, design.exhaustive) {
                Some(o) => (Some(o.selection), Some(o.worst), Some(o.candidates)),
                None => (None, None, None),
            },
        };
        let estimates = selection.map(|s| PointEstimates {
            arl: *inputs.arl.get(s.b_idx, s.h_idx),
            delays: inputs.delays.iter().map(|d| *d.get(s.b_idx, s.h_idx)).collect(),
        });
        let on_grid_edge = selection.is_some_and(|s| {
            s.b_idx + 1 == mask.cols() || (!mask.h.is_empty() && s.h_idx + 1 == mask.h.len())
        });
        if on_grid_edge {
            log::warn!("{variant} at r = {r}: selection lies on the grid edge; consider raising grid.b_max / grid.h_max");
        }
        let point = DesignPoint {
            variant,
            r,
            feasible: !mask.is_empty(),
            regions: RegionSizes::of(&mask),
            delay_proxy: mask.delay_proxy,
            selection,
            estimates,
            worst_misid: worst,
            candidates,
            on_grid_edge,
        };
        points.push((point, mask));
    }
    Ok(VariantDesign { inputs, points })
}

fn mask_csv(variant: Variant, r: f64, mask: &RegionMask) -> CsvTable {
    let k = mask.delay.len();
    let mut header = vec!["b".to_string(), "h".to_string(), "false_alarm".to_string()];
    header.extend((1..=k).map(|i| format!("delay_{i}")));
    header.push("feasible".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvBuilder::new(format!("regions_{variant}_r{}.csv", r_tag(r)), &header);
    let flag = |x: bool| if x { "1" } else { "0" }.to_string();
    for row in 0..mask.rows() {
        let h = opt_num(mask.h.get(row).copied());
        for (col, b) in mask.b.iter().enumerate() {
            let at = row * mask.cols() + col;
            let mut fields = vec![num(*b), h.clone(), flag(mask.false_alarm[at])];
            fields.extend(mask.delay.iter().map(|d| flag(d[at])));
            fields.push(flag(mask.feasible[at]));
            csv.row(fields);
        }
    }
    csv.finish()
}

fn selection_csv(points: &[DesignPoint]) -> CsvTable {
    let mut csv = CsvBuilder::new(
        "selection.csv",
        &[
            "variant",
            "r",
            "feasible",
            "b",
            "h",
            "arl",
            "arl_se",
            "max_delay",
            "max_delay_se",
            "worst_misid",
            "worst_misid_se",
        ],
    );
    for p in points {
        let (b, h) = p
            .selection
            .map(|s| (num(s.b), opt_num(s.h)))
            .unwrap_or_default();
        let (arl, arl_se, d, d_se) = match &p.estimates {
            Some(e) => {
                let worst = e
                    .delays
                    .iter()
                    .max_by(|a, b| a.estimate.total_cmp(&b.estimate))
                    .expect("at least one alternative");
                (num(e.arl.estimate), num(e.arl.se), num(worst.estimate), num(worst.se))
            }
            None => Default::default(),
        };
        let (m, m_se) = p
            .worst_misid
            .map(|w| (num(w.probability), num(w.se)))
            .unwrap_or_default();
        csv.row([
            p.variant.to_string(),
            num(p.r),
            p.feasible.to_string(),
            b,
            h,
            arl,
            arl_se,
            d,
            d_se,
            m,
            m_se,
        ]);
    }
    csv.finish()
}

pub fn cmd_design(cfg: &RunConfig) -> Result<Report> {
    const CMD: &str = "design";
    let model = cfg.require_model(CMD)?;
    let mc = cfg.require_mc(CMD)?;
    let design = cfg.require_design(CMD)?;
    let variants = cfg.require_procedure(CMD)?.parsed_variants()?;
    let grid = cfg.grid.thresholds()?;

    let cals = calibrate_all(&model, design.alpha, &grid.b, &mc)?;
    let max_delay = max_optimal_delay(&cals);
    let mut report = Report::new(CMD, cfg);
    report.tables.push(calibration_csv(&cals));
    let mut estimates = CsvBuilder::new("grid_estimates.csv", &ESTIMATE_HEADER);
    let mut points = Vec::new();
    for &variant in &variants {
        let vd = design_variant(variant, &model, &grid, &cfg.grid.nu, design, max_delay, &mc)?;
        let name = variant.to_string();
        push_table(&mut estimates, &name, &vd.inputs.arl);
        for d in &vd.inputs.delays {
            push_table(&mut estimates, &name, d);
        }
        for (point, mask) in vd.points {
            report.tables.push(mask_csv(variant, point.r, &mask));
            points.push(point);
        }
    }
    report.tables.push(estimates.finish());
    report.tables.push(selection_csv(&points));

    report.status.infeasible = points.iter().any(|p| !p.feasible);
    report.status.unreliable = calibrations_unreliable(&cals)
        || points.iter().any(|p| {
            p.estimates.as_ref().is_some_and(PointEstimates::unreliable)
                || p.worst_misid.is_some_and(|w| w.low_power)
        });
    report.results = json!({
        "calibrations": cals,
        "max_optimal_delay": max_delay_summary(&cals),
        "designs": points,
    });
    Ok(report)
}

// ----------------------------------------------------------------- evaluate

#[derive(Clone, Debug, Serialize)]
struct MisidCell {
    change_point: u64,
    alternative: usize,
    misid: CellEstimate,
    conditional_delay: CellEstimate,
}

#[derive(Clone, Debug, Serialize)]
struct Evaluation {
    variant: Variant,
    b: f64,
    h: Option<f64>,
    arl: CellEstimate,
    delays: Vec<CellEstimate>,
    misid: Vec<MisidCell>,
    worst_misid: Option<WorstMisid>,
}

fn misid_cells(tables: &[MisidTables]) -> Vec<MisidCell> {
    tables
        .iter()
        .filter_map(|t| match t.misid.metric {
            Metric::Misidentification {
                change_point,
                alternative,
            } => Some(MisidCell {
                change_point,
                alternative,
                misid: *t.misid.get(0, 0),
                conditional_delay: *t.conditional_delay.get(0, 0),
            }),
            _ => None,
        })
        .collect()
}

fn h_axis(variant: Variant, h: f64) -> Vec<f64> {
    if variant.uses_isolation_threshold() {
        vec![h]
    } else {
        Vec::new()
    }
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Report> {
    const CMD: &str = "evaluate";
    let model = cfg.require_model(CMD)?;
    let mc = cfg.require_mc(CMD)?;
    let procedure = cfg.require_procedure(CMD)?;
    let variants = procedure.parsed_variants()?;
    let (b, h) = procedure
        .explicit_thresholds(&variants)?
        .ok_or_else(|| Error::Config("`evaluate` needs procedure.b (and procedure.h)".into()))?;

    let mut report = Report::new(CMD, cfg);
    let mut csv = CsvBuilder::new("evaluate.csv", &ESTIMATE_HEADER);
    let mut evaluations = Vec::new();
    for &variant in &variants {
        let spec = ProcedureSpec::new(variant, b, h)?;
        let hs = h_axis(variant, spec.h);
        let grid = ThresholdGrid {
            b: vec![spec.b],
            h: hs.clone(),
        };
        let inputs = estimate_region_inputs(variant, &model, &grid, &mc)?;
        let tables = misid_tables(variant, &model, &cfg.grid.nu, &[spec.b], &hs, &mc)?;
        let name = variant.to_string();
        push_table(&mut csv, &name, &inputs.arl);
        for d in &inputs.delays {
            push_table(&mut csv, &name, d);
        }
        for t in &tables {
            push_table(&mut csv, &name, &t.misid);
            push_table(&mut csv, &name, &t.conditional_delay);
        }
        let e = Evaluation {
            variant,
            b: spec.b,
            h: hs.first().copied(),
            arl: *inputs.arl.get(0, 0),
            delays: inputs.delays.iter().map(|d| *d.get(0, 0)).collect(),
            misid: misid_cells(&tables),
            worst_misid: worst_misid(&tables, 0, 0),
        };
        report.status.unreliable |= e.arl.unreliable
            || e.delays.iter().any(|d| d.unreliable)
            || e.misid.iter().any(|m| m.misid.unreliable);
        evaluations.push(e);
    }
    report.tables.push(csv.finish());
    report.results = json!({ "evaluations": evaluations });
    Ok(report)
}

// ------------------------------------------------------------- misid-sweep

#[derive(Clone, Debug, Serialize)]
struct SweepNu {
    change_point: u64,
    worst: Option<WorstMisid>,
}

#[derive(Clone, Debug, Serialize)]
struct Sweep {
    variant: Variant,
    /// `None` for explicit thresholds.
    r: Option<f64>,
    b: f64,
    h: Option<f64>,
    by_change_point: Vec<SweepNu>,
    /// Worst over all alternatives and change points.
    worst: Option<WorstMisid>,
    misid: Vec<MisidCell>,
}

struct Setting {
    variant: Variant,
    r: Option<f64>,
    b: f64,
    h: f64,
}

pub fn cmd_misid_sweep(cfg: &RunConfig) -> Result<Report> {
    const CMD: &str = "misid-sweep";
    let model = cfg.require_model(CMD)?;
    let mc = cfg.require_mc(CMD)?;
    let procedure = cfg.require_procedure(CMD)?;
    let variants = procedure.parsed_variants()?;
    let nu = &cfg.grid.nu;
    if nu.is_empty() {
        return Err(Error::Config("grid.nu is empty".into()));
    }
    let mut report = Report::new(CMD, cfg);

    let mut settings = Vec::new();
    let mut designs = Vec::new();
    let mut calibrations = None;
    if let Some((b, h)) = procedure.explicit_thresholds(&variants)? {
        for &variant in &variants {
            ProcedureSpec::new(variant, b, h)?;
            settings.push(Setting {
                variant,
                r: None,
                b,
                h,
            });
        }
    } else {
        let design = cfg.require_design(CMD)?;
        let grid = cfg.grid.thresholds()?;
        let cals = calibrate_all(&model, design.alpha, &grid.b, &mc)?;
        report.status.unreliable |= calibrations_unreliable(&cals);
        let max_delay = max_optimal_delay(&cals);
        for &variant in &variants {
            let vd = design_variant(variant, &model, &grid, nu, design, max_delay, &mc)?;
            for (point, _) in vd.points {
                match point.selection {
                    Some(s) => settings.push(Setting {
                        variant,
                        r: Some(point.r),
                        b: s.b,
                        h: s.h_or_zero(),
                    }),
                    None => report.status.infeasible = true,
                }
                designs.push(point);
            }
        }
        report.tables.push(calibration_csv(&cals));
        report.tables.push(selection_csv(&designs));
        calibrations = Some(cals);
    }

    let mut by_nu_csv = CsvBuilder::new(
        "misid_by_nu.csv",
        &["variant", "r", "b", "h", "nu", "worst_j", "misid", "se", "retained", "low_power"],
    );
    let mut by_r_csv = CsvBuilder::new(
        "misid_worst.csv",
        &["variant", "r", "b", "h", "worst_nu", "worst_j", "misid", "se", "retained", "low_power"],
    );
    let mut detail_csv = CsvBuilder::new("misid_detail.csv", &ESTIMATE_HEADER);
    let worst_fields = |w: &Option<WorstMisid>| match w {
        Some(w) => [
            w.change_point.to_string(),
            (w.alternative + 1).to_string(),
            num(w.probability),
            num(w.se),
            w.retained.to_string(),
            w.low_power.to_string(),
        ],
        None => Default::default(),
    };

    let mut sweeps = Vec::new();
    for s in &settings {
        log::info!("misidentification sweep for {} at b = {}, h = {}", s.variant, s.b, s.h);
        let hs = h_axis(s.variant, s.h);
        let tables = misid_tables(s.variant, &model, nu, &[s.b], &hs, &mc)?;
        let name = s.variant.to_string();
        let r = opt_num(s.r);
        let h = opt_num(hs.first().copied());
        let mut by_change_point = Vec::with_capacity(nu.len());
        for &v in nu {
            let group: Vec<MisidTables> = tables
                .iter()
                .filter(|t| matches!(t.misid.metric, Metric::Misidentification { change_point, .. } if change_point == v))
                .cloned()
                .collect();
            let worst = worst_misid(&group, 0, 0);
            let [_, j, m, se, n, lp] = worst_fields(&worst);
            by_nu_csv.row([name.clone(), r.clone(), num(s.b), h.clone(), v.to_string(), j, m, se, n, lp]);
            by_change_point.push(SweepNu {
                change_point: v,
                worst,
            });
        }
        for t in &tables {
            push_table(&mut detail_csv, &name, &t.misid);
            push_table(&mut detail_csv, &name, &t.conditional_delay);
        }
        let worst = worst_misid(&tables, 0, 0);
        let [wnu, j, m, se, n, lp] = worst_fields(&worst);
        by_r_csv.row([name.clone(), r.clone(), num(s.b), h.clone(), wnu, j, m, se, n, lp]);
        report.status.unreliable |= worst.is_some_and(|w| w.low_power);
        sweeps.push(Sweep {
            variant: s.variant,
            r: s.r,
            b: s.b,
            h: hs.first().copied(),
            by_change_point,
            worst,
            misid: misid_cells(&tables),
        });
    }
    report.tables.push(by_nu_csv.finish());
    report.tables.push(by_r_csv.finish());
    report.tables.push(detail_csv.finish());
    report.results = json!({
        "calibrations": calibrations,
        "designs": designs,
        "sweeps": sweeps,
    });
    Ok(report)
}

// -------------------------------------------------------------- demo-paths

pub fn cmd_demo_paths(cfg: &RunConfig) -> Result<Report> {
    const CMD: &str = "demo-paths";
    let model = cfg.require_model(CMD)?;
    let mc = cfg.require_mc(CMD)?;
    let demo = cfg.demo.clone().unwrap_or_default();
    let k = model.k();
    let alternative = demo.alternative.unwrap_or(k);
    if !(1..=k).contains(&alternative) {
        return Err(Error::Config(format!("demo.alternative must lie in 1..={k}, got {alternative}")));
    }
    if demo.length == 0 {
        return Err(Error::Config("demo.length must be at least 1".into()));
    }
    if !(1..=demo.length).contains(&demo.partial_sum_at) {
        return Err(Error::Config(format!(
            "demo.partial_sum_at must lie in 1..={}, got {}",
            demo.length, demo.partial_sum_at
        )));
    }
    if demo.window == 0 {
        return Err(Error::Config("demo.window must be at least 1".into()));
    }

    let j = alternative - 1;
    let scenario = Scenario::change_at(demo.change_point, j);
    let mut rng = rng_stream(scenario_seed(mc.base_seed, scenario), 0);
    let windowed = format!("generalized_m{}", demo.window);
    let mut banks = [
        ("matrix".to_string(), StatisticBank::new(k, IsolationKind::Pair(PairVariant::Matrix))?),
        ("adaptive".to_string(), StatisticBank::new(k, IsolationKind::Pair(PairVariant::Adaptive))?),
        (windowed, StatisticBank::new(k, IsolationKind::Generalized(Some(demo.window)))?),
        ("generalized_full".to_string(), StatisticBank::new(k, IsolationKind::Generalized(None))?),
    ];

    let mut trace = CsvBuilder::new("trace.csv", &["n", "statistic", "i", "j", "value"]);
    let mut x = vec![0.0; model.dim()];
    let mut llr = vec![0.0; k];
    let mut llr_path = Vec::with_capacity(demo.length as usize * k);
    let mut at_change = serde_json::Map::new();
    for n in 1..=demo.length {
        scenario.sample(&model, n, &mut rng, &mut x);
        model.llrs_into(&x, &mut llr)?;
        llr_path.extend_from_slice(&llr);
        for (_, bank) in banks.iter_mut() {
            bank.update(&llr)?;
        }
        let ns = n.to_string();
        for (c, v) in x.iter().enumerate() {
            trace.row([ns.as_str(), "x", &(c + 1).to_string(), "", &num(*v)]);
        }
        for (i, v) in llr.iter().enumerate() {
            trace.row([ns.as_str(), "llr", &(i + 1).to_string(), "", &num(*v)]);
        }
        let base = &banks[1].1;
        for i in 0..k {
            let is = (i + 1).to_string();
            trace.row([ns.as_str(), "cusum", &is, "", &num(base.cusums()[i])]);
            trace.row([ns.as_str(), "reset", &is, "", &base.reset_times()[i].to_string()]);
        }
        for (name, bank) in &banks {
            if let Some(pm) = bank.pair_matrix() {
                for i in 0..k {
                    for jj in (0..k).filter(|&jj| jj != i) {
                        trace.row([
                            ns.as_str(),
                            name,
                            &(i + 1).to_string(),
                            &(jj + 1).to_string(),
                            &num(pm.get(i, jj)),
                        ]);
                    }
                }
            } else {
                for (i, w) in bank.isolation().iter().enumerate() {
                    trace.row([ns.as_str(), name, &(i + 1).to_string(), "", &num(*w)]);
                }
            }
        }
        if n == demo.change_point {
            for (name, bank) in &banks {
                at_change.insert(name.clone(), json!(bank.isolation()));
            }
        }
    }

    let at = demo.partial_sum_at as usize;
    let mut sums = CsvBuilder::new("partial_sums.csv", &["n", "k", "statistic", "i", "j", "value"]);
    let ns = at.to_string();
    // Σ_{u=k+1}^{n} for k = n−1 down to 0, accumulated backwards
    let mut acc = vec![0.0; k];
    let mut rows = Vec::with_capacity(at);
    for lower in (0..at).rev() {
        for (a, v) in acc.iter_mut().zip(&llr_path[lower * k..(lower + 1) * k]) {
            *a += v;
        }
        rows.push((lower, acc.clone()));
    }
    rows.push((at, vec![0.0; k]));
    rows.sort_by_key(|(lower, _)| *lower);
    for (lower, s) in &rows {
        let ks = lower.to_string();
        for (i, v) in s.iter().enumerate() {
            sums.row([ns.as_str(), &ks, "llr_sum", &(i + 1).to_string(), "", &num(*v)]);
        }
        for i in 0..k {
            for jj in (0..k).filter(|&jj| jj != i) {
                let v = s[i] - s[jj];
                sums.row([ns.as_str(), &ks, "pair_sum", &(i + 1).to_string(), &(jj + 1).to_string(), &num(v)]);
            }
        }
    }

    let final_values: serde_json::Map<String, serde_json::Value> = banks
        .iter()
        .map(|(name, bank)| (name.clone(), json!(bank.isolation())))
        .collect();
    let mut report = Report::new(CMD, cfg);
    report.results = json!({
        "change_point": demo.change_point,
        "alternative": j,
        "length": demo.length,
        "partial_sum_at": demo.partial_sum_at,
        "window": demo.window,
        "isolation_at_change_point": at_change,
        "isolation_final": final_values,
        "cusum_final": banks[0].1.cusums(),
    });
    report.tables.push(trace.finish());
    report.tables.push(sums.finish());
    Ok(report)
}
