//! Run configuration, read from a TOML file.
//!
//! Every section has explicit defaults except `model` and the random seed.
//! `RunConfig::resolve` fills in the values that depend on other sections
//! (grid upper ends, demo alternative, seed override) so that the resolved
//! config, echoed into every report, reproduces a run exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::{default_max_threshold, ThresholdGrid, DEFAULT_B_STEP, DEFAULT_H_START, DEFAULT_H_STEP};
use crate::error::{Error, Result};
use crate::models::{ChangeModel, ModelSpec};
use crate::montecarlo::{McConfig, DEFAULT_PATHS};
use crate::procedures::{Variant, DEFAULT_HORIZON};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub procedure: Option<ProcedureSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<DemoSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcedureSection {
    /// Variant names; a bare `generalized` takes its window from `window`.
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Explicit detection threshold for `evaluate` and `misid-sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Explicit isolation threshold; required with `b` for variants that
    /// use it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

fn default_variants() -> Vec<String> {
    ["adaptive", "matrix", "min_cusum"].map(String::from).to_vec()
}

impl Default for ProcedureSection {
    fn default() -> Self {
        ProcedureSection {
            variants: default_variants(),
            window: None,
            b: None,
            h: None,
        }
    }
}

impl ProcedureSection {
    pub fn parsed_variants(&self) -> Result<Vec<Variant>> {
        if self.variants.is_empty() {
            return Err(Error::Config("procedure.variants is empty".into()));
        }
        self.variants.iter().map(|v| Variant::parse(v, self.window)).collect()
    }

    /// `(b, h)` when thresholds are given explicitly.
    pub fn explicit_thresholds(&self, variants: &[Variant]) -> Result<Option<(f64, f64)>> {
        match (self.b, self.h) {
            (None, None) => Ok(None),
            (None, Some(_)) => Err(Error::Config("procedure.h is set but procedure.b is missing".into())),
            (Some(b), h) => {
                if h.is_none() && variants.iter().any(|v| v.uses_isolation_threshold()) {
                    return Err(Error::Config(
                        "procedure.h is required when a listed variant uses an isolation threshold".into(),
                    ));
                }
                Ok(Some((b, h.unwrap_or(0.0))))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub b_start: f64,
    #[serde(default = "default_b_step")]
    pub b_step: f64,
    /// Defaults to `|log α| + log K + 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_max: Option<f64>,
    #[serde(default = "default_h_start")]
    pub h_start: f64,
    #[serde(default = "default_h_step")]
    pub h_step: f64,
    /// Defaults to `b_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
    /// Change points for misidentification estimates.
    #[serde(default = "default_nu")]
    pub nu: Vec<u64>,
}

fn default_b_step() -> f64 {
    DEFAULT_B_STEP
}

fn default_h_start() -> f64 {
    DEFAULT_H_START
}

fn default_h_step() -> f64 {
    DEFAULT_H_STEP
}

fn default_nu() -> Vec<u64> {
    (0..=50).step_by(10).collect()
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            b_start: 0.0,
            b_step: DEFAULT_B_STEP,
            b_max: None,
            h_start: DEFAULT_H_START,
            h_step: DEFAULT_H_STEP,
            h_max: None,
            nu: default_nu(),
        }
    }
}

impl GridSection {
    /// Threshold axes; call after [`RunConfig::resolve`].
    pub fn thresholds(&self) -> Result<ThresholdGrid> {
        let b_max = self.b_max.ok_or_else(|| Error::Config("grid.b_max is unresolved".into()))?;
        let h_max = self.h_max.unwrap_or(b_max);
        ThresholdGrid::uniform(self.b_start, self.b_step, b_max, self.h_start, self.h_step, h_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_paths")]
    pub num_paths: usize,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    /// Mandatory unless `--seed` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    /// Thread count (0 = all cores). Results do not depend on it, so it is
    /// not echoed into reports.
    #[serde(default, skip_serializing)]
    pub workers: usize,
    #[serde(default)]
    pub exploit_symmetry: bool,
}

fn default_paths() -> usize {
    DEFAULT_PATHS
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            num_paths: DEFAULT_PATHS,
            horizon: DEFAULT_HORIZON,
            base_seed: None,
            workers: 0,
            exploit_symmetry: false,
        }
    }
}

impl McSection {
    pub fn to_mc(&self) -> Result<McConfig> {
        let seed = self
            .base_seed
            .ok_or_else(|| Error::Config("missing field `mc.base_seed` (or pass --seed)".into()))?;
        let mc = McConfig {
            num_paths: self.num_paths,
            horizon: self.horizon,
            base_seed: seed,
            workers: self.workers,
            exploit_symmetry: self.exploit_symmetry,
        };
        mc.validate()?;
        Ok(mc)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Largest feasible `h`, then largest feasible `b`.
    #[default]
    Lexicographic,
    /// Feasible point with the smallest simulated worst-case
    /// misidentification over `grid.nu` and all alternatives.
    MisidOptimal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_r")]
    pub r: Vec<f64>,
    #[serde(default)]
    pub conservative: bool,
    #[serde(default)]
    pub selection: SelectionMode,
    /// Search every feasible cell in `misid_optimal` mode instead of the
    /// feasible frontier.
    #[serde(default)]
    pub exhaustive: bool,
}

fn default_alpha() -> f64 {
    0.01
}

fn default_r() -> Vec<f64> {
    vec![2.0]
}

impl Default for DesignSection {
    fn default() -> Self {
        DesignSection {
            alpha: default_alpha(),
            r: default_r(),
            conservative: false,
            selection: SelectionMode::default(),
            exhaustive: false,
        }
    }
}

impl DesignSection {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("design.alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.r.is_empty() {
            return Err(Error::Config("design.r is empty".into()));
        }
        if let Some(r) = self.r.iter().find(|r| !(**r > 1.0 && r.is_finite())) {
            return Err(Error::Config(format!("design.r values must be greater than 1, got {r}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSection {
    #[serde(default = "default_demo_change_point")]
    pub change_point: u64,
    /// 1-based post-change alternative; defaults to the last one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<usize>,
    #[serde(default = "default_demo_length")]
    pub length: u64,
    /// Time at which partial sums are taken as a function of the lower limit.
    #[serde(default = "default_demo_partial")]
    pub partial_sum_at: u64,
    /// Window of the window-limited Generalized CuSum trace.
    #[serde(default = "default_demo_window")]
    pub window: usize,
}

fn default_demo_change_point() -> u64 {
    50
}

fn default_demo_length() -> u64 {
    100
}

fn default_demo_partial() -> u64 {
    75
}

fn default_demo_window() -> usize {
    15
}

impl Default for DemoSection {
    fn default() -> Self {
        DemoSection {
            change_point: default_demo_change_point(),
            alternative: None,
            length: default_demo_length(),
            partial_sum_at: default_demo_partial(),
            window: default_demo_window(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Report directory; `--out` takes precedence.
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("seqdiag-out")
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_out_dir() }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// A config with every section present and every default spelled out.
    pub fn example() -> Self {
        RunConfig {
            model: Some(ModelSpec::MultichannelSimultaneous {
                channels: 2,
                pre_mean: 0.0,
                pre_sd: 1.0,
                post_mean: 1.0,
                post_sd: 1.0,
            }),
            procedure: Some(ProcedureSection::default()),
            grid: GridSection::default(),
            mc: Some(McSection {
                base_seed: Some(1),
                ..McSection::default()
            }),
            design: Some(DesignSection::default()),
            demo: Some(DemoSection::default()),
            output: OutputSection::default(),
        }
    }

    pub fn require_model(&self, command: &str) -> Result<ChangeModel> {
        self.model
            .as_ref()
            .ok_or_else(|| missing("model", command))?
            .build()
    }

    pub fn require_mc(&self, command: &str) -> Result<McConfig> {
        self.mc.as_ref().ok_or_else(|| missing("mc", command))?.to_mc()
    }

    pub fn require_design(&self, command: &str) -> Result<&DesignSection> {
        let d = self.design.as_ref().ok_or_else(|| missing("design", command))?;
        d.validate()?;
        Ok(d)
    }

    pub fn require_procedure(&self, command: &str) -> Result<&ProcedureSection> {
        self.procedure.as_ref().ok_or_else(|| missing("procedure", command))
    }

    /// Applies the seed override and fills in derived defaults.
    pub fn resolve(mut self, seed: Option<u64>) -> Result<Self> {
        if let Some(seed) = seed {
            self.mc.get_or_insert_with(McSection::default).base_seed = Some(seed);
        }
        if let Some(d) = &self.design {
            d.validate()?;
        }
        if let Some(spec) = &self.model {
            let k = spec.build()?.k();
            let alpha = self.design.as_ref().map_or_else(default_alpha, |d| d.alpha);
            let b_max = *self.grid.b_max.get_or_insert_with(|| round_to_step(default_max_threshold(alpha, k)));
            self.grid.h_max.get_or_insert(b_max);
            if let Some(demo) = &mut self.demo {
                demo.alternative.get_or_insert(k);
            }
        }
        if let Some(p) = &self.procedure {
            p.parsed_variants()?;
        }
        Ok(self)
    }

    /// The config as echoed into reports.
    pub fn echo(&self) -> Self {
        let mut c = self.clone();
        if let Some(mc) = &mut c.mc {
            mc.workers = 0;
        }
        c
    }
}

fn round_to_step(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn missing(section: &str, command: &str) -> Error {
    Error::Config(format!("missing section [{section}] (required by `{command}`)"))
}
