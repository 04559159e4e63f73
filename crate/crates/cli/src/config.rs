//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! scales = [1, 3, 6, 12]
//! methods = ["SMI-A", "SMI-N"]
//! weights = [1.0, 1.0, 2.0]
//!
//! [dataset]
//! files = ["observations.csv"]
//! start = "1961-01"
//! end = "2010-12"
//! bbox = { west = -11.0, east = 32.0, south = 35.0, north = 71.0 }
//! variables = [
//!   { name = "VPD", orientation = -1 },
//!   { name = "PET", orientation = -1 },
//!   { name = "PRE" },
//! ]
//!
//! [arma.PRE]
//! p = 1
//! q = 1
//!
//! [vine]
//! matrix = [[3, 0, 0], [2, 2, 0], [1, 1, 1]]
//! families = ["Gaussian", "t", "Clayton", "Clayton180", "Frank"]
//! alpha = 0.05
//!
//! [analyze]
//! area = ["SI_PRE_l6.csv"]
//! categories = ["D3", "D4"]
//! windows = [{ start = "1975-06", end = "1976-12" }]
//! tau = [["SI_PRE_l6.csv", "SMI-N_l6.csv"]]
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use drought_core::analytics::DROUGHT_CATEGORIES;
use drought_core::copula::FamilyTag;
use drought_core::index::{Category, IndexMethod};
use drought_core::ingest::{DatasetSpec, IngestError};
use drought_core::series::TimeStamp;
use drought_core::vine::RVineMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmaOrder {
    #[serde(default = "one")]
    pub p: usize,
    #[serde(default)]
    pub q: usize,
}

impl Default for ArmaOrder {
    fn default() -> Self {
        Self { p: 1, q: 0 }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VineConfig {
    /// Defaults to the canonical vine rooted at the first variable.
    #[serde(default)]
    pub matrix: Option<RVineMatrix>,
    #[serde(default)]
    pub families: Option<Vec<FamilyTag>>,
    /// Level of the independence pre-test; `0` disables it.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for VineConfig {
    fn default() -> Self {
        Self {
            matrix: None,
            families: None,
            alpha: DEFAULT_ALPHA,
        }
    }
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

impl VineConfig {
    pub fn candidates(&self) -> Vec<FamilyTag> {
        self.families.clone().unwrap_or_else(FamilyTag::default_candidates)
    }

    pub fn pretest(&self) -> Option<f64> {
        (self.alpha > 0.0).then_some(self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start: TimeStamp,
    pub end: TimeStamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Index files for area fractions and event peaks.
    #[serde(default)]
    pub area: Vec<PathBuf>,
    #[serde(default = "default_categories")]
    pub categories: Vec<Category>,
    #[serde(default)]
    pub windows: Vec<Window>,
    /// Pairs of index files for per-pixel Kendall's tau maps.
    #[serde(default)]
    pub tau: Vec<[PathBuf; 2]>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            area: Vec::new(),
            categories: default_categories(),
            windows: Vec::new(),
            tau: Vec::new(),
        }
    }
}

fn default_categories() -> Vec<Category> {
    DROUGHT_CATEGORIES.to_vec()
}

fn default_scales() -> Vec<usize> {
    vec![1]
}

fn default_methods() -> Vec<IndexMethod> {
    vec![IndexMethod::SmiA, IndexMethod::SmiM, IndexMethod::SmiN]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dataset: Option<DatasetSpec>,
    #[serde(default = "default_scales")]
    pub scales: Vec<usize>,
    /// Multivariate variants emitted by `smi`.
    #[serde(default = "default_methods")]
    pub methods: Vec<IndexMethod>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// ARMA orders per variable name; unlisted variables use `p = 1, q = 0`.
    #[serde(default)]
    pub arma: BTreeMap<String, ArmaOrder>,
    #[serde(default)]
    pub vine: VineConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub analyze: AnalyzeConfig,
}

fn field(name: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field: name.into(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let reason = e.message().to_string();
            let location = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<config>".into());
            field(location, reason)
        })
    }

    /// Reads, parses and path-resolves a config file. Validation is separate
    /// because the required sections depend on the subcommand.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| field("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(d) = self.dataset.as_mut() {
            d.resolve_paths(base);
        }
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.analyze.area.iter_mut().for_each(fix);
        self.analyze.tau.iter_mut().flat_map(|pair| pair.iter_mut()).for_each(fix);
    }

    pub fn dataset(&self) -> Result<&DatasetSpec, CliError> {
        self.dataset.as_ref().ok_or_else(|| field("dataset", "section is required"))
    }

    pub fn arma_order(&self, variable: &str) -> ArmaOrder {
        self.arma.get(variable).copied().unwrap_or_default()
    }

    fn validate_common(&self) -> Result<(), CliError> {
        if self.threads == Some(0) {
            return Err(field("threads", "must be at least 1"));
        }
        Ok(())
    }

    fn validate_dataset(&self) -> Result<&DatasetSpec, CliError> {
        let ds = self.dataset()?;
        ds.validate().map_err(|e| match e {
            IngestError::InvalidSpec { field: f, reason } => field(f, reason),
            other => field("dataset", other.to_string()),
        })?;
        if self.scales.is_empty() {
            return Err(field("scales", "at least one time scale is required"));
        }
        if let Some(i) = self.scales.iter().position(|&l| l == 0) {
            return Err(field(format!("scales[{i}]"), "time scales must be positive"));
        }
        let names = ds.variable_names();
        for (name, order) in &self.arma {
            if !names.contains(name) {
                return Err(field(format!("arma.{name}"), "not a configured variable"));
            }
            if order.p > 12 || order.q > 12 {
                return Err(field(format!("arma.{name}"), "orders above 12 are not supported"));
            }
        }
        Ok(ds)
    }

    pub fn validate_si(&self) -> Result<(), CliError> {
        self.validate_common()?;
        self.validate_dataset()?;
        Ok(())
    }

    pub fn validate_smi(&self) -> Result<(), CliError> {
        self.validate_common()?;
        let d = self.validate_dataset()?.variables.len();
        if d < 2 {
            return Err(field("dataset.variables", "multivariate indices need at least two variables"));
        }
        if self.methods.is_empty() {
            return Err(field("methods", "at least one method is required"));
        }
        if let Some(i) = self.methods.iter().position(|m| *m == IndexMethod::Si) {
            return Err(field(format!("methods[{i}]"), "SI is univariate; use the si subcommand"));
        }
        if let Some(w) = &self.weights {
            if self.methods.contains(&IndexMethod::SmiM) {
                return Err(field("weights", "method SMI-M does not allow weights"));
            }
            if w.len() != d {
                return Err(field("weights", format!("{} weights for {d} variables", w.len())));
            }
            if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(field(format!("weights[{i}]"), "weights must be finite and positive"));
            }
        }
        if let Some(m) = &self.vine.matrix {
            if m.dim() != d {
                return Err(field("vine.matrix", format!("dimension {} but {d} variables", m.dim())));
            }
        }
        if self.vine.families.as_ref().is_some_and(|f| f.is_empty()) {
            return Err(field("vine.families", "candidate list is empty"));
        }
        if !(0.0..1.0).contains(&self.vine.alpha) {
            return Err(field("vine.alpha", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn validate_analyze(&self) -> Result<(), CliError> {
        self.validate_common()?;
        for (i, w) in self.analyze.windows.iter().enumerate() {
            if w.start > w.end {
                return Err(field(format!("analyze.windows[{i}]"), "start is after end"));
            }
        }
        if self.analyze.categories.is_empty() {
            return Err(field("analyze.categories", "at least one category is required"));
        }
        Ok(())
    }

    pub fn structure(&self, d: usize) -> RVineMatrix {
        self.vine.matrix.clone().unwrap_or_else(|| RVineMatrix::default_structure(d))
    }

    /// Weights for methods A and N; equal weights when none are configured.
    pub fn weights_or_equal(&self, d: usize) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| vec![1.0; d])
    }
}
