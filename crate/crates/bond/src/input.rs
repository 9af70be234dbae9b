//! Analysis input files.
//!
//! ```toml
//! outcome = "binary"
//!
//! [analysis]
//! alpha = 0.025
//! theta1 = 0.15
//!
//! [radius]
//! policy = "fixed"
//! rho = 0.0
//!
//! [[current]]
//! label = "control"
//! n = 470
//! successes = 60
//!
//! [[current]]
//! label = "treatment"
//! n = 468
//! successes = 133
//!
//! [[historical]]
//! label = "external"
//! [[historical.arms]]
//! arm = 0
//! n = 610
//! successes = 224
//! ```
//!
//! Continuous arms give `mean` and `variance` instead of `successes`; any
//! arm may give raw `samples` instead, which data-driven radii require.

use bond_core::summary::summarize;
use bond_core::transport::estimate_radii;
use bond_core::{
    ArmSummary, BorrowConfig, Caps, Correction, Error, HistoricalSource, OutcomeKind, RadiusSpec, Result,
    SampleSet, TrialLayout,
};
use serde::{Deserialize, Serialize};

/// The whole document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisFile {
    /// `"binary"` or `"continuous"`.
    pub outcome: String,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub radius: RadiusSection,
    pub current: Vec<ArmEntry>,
    #[serde(default)]
    pub historical: Vec<SourceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_cap")]
    pub cap: f64,
    #[serde(default)]
    pub ridge: f64,
    /// `plugin`, `oracle` or `universal`.
    #[serde(default = "default_correction")]
    pub correction: String,
    /// Per-arm centers for the oracle correction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_centers: Option<Vec<f64>>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            alpha: default_alpha(),
            theta1: None,
            grid_points: default_grid(),
            cap: default_cap(),
            ridge: 0.0,
            correction: default_correction(),
            oracle_centers: None,
        }
    }
}

fn default_alpha() -> f64 {
    0.025
}
fn default_grid() -> usize {
    201
}
fn default_cap() -> f64 {
    1.0
}
fn default_correction() -> String {
    "plugin".into()
}
fn default_policy() -> String {
    "fixed".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSection {
    /// `fixed` or `data`.
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Rho>,
    /// Inflation for data-driven radii.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl Default for RadiusSection {
    fn default() -> Self {
        RadiusSection { policy: default_policy(), rho: None, c: None }
    }
}

/// One radius for every cell, or one per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rho {
    Uniform(f64),
    PerArm(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Arm index; required in historical entries, implied by position in `current`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub successes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceEntry {
    pub label: String,
    #[serde(default)]
    pub arms: Vec<ArmEntry>,
}

/// A resolved analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub layout: TrialLayout,
    pub radii: RadiusSpec,
    pub config: BorrowConfig,
    /// Arm labels, `current` order.
    pub arm_labels: Vec<String>,
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Invalid(m) => Error::Invalid(format!("{path}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{path}: {m}")),
    }
}

fn field(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("{path}: {msg}"))
}

impl AnalysisFile {
    /// Parses TOML text. Syntax errors carry the line and key.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(e.to_string().trim_end().to_string()))
    }

    /// Renders back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("analysis file is always serialisable")
    }

    fn kind(&self) -> Result<OutcomeKind> {
        match self.outcome.as_str() {
            "binary" => Ok(OutcomeKind::Binary),
            "continuous" => Ok(OutcomeKind::Continuous),
            o => Err(field("outcome", format!("expected \"binary\" or \"continuous\", got {o:?}"))),
        }
    }

    /// Builds the layout, radii and calibration settings. `theta1` falls back to
    /// the CLI value when the file has none.
    pub fn resolve(&self, theta1: Option<f64>) -> Result<Analysis> {
        let kind = self.kind()?;
        let arms = self.current.len();
        if arms < 1 {
            return Err(field("current", "at least one arm is required"));
        }
        let mut current = Vec::with_capacity(arms);
        let mut current_samples = Vec::with_capacity(arms);
        for (a, e) in self.current.iter().enumerate() {
            let path = format!("current[{a}]");
            if let Some(i) = e.arm.filter(|&i| i != a) {
                return Err(field(&format!("{path}.arm"), format!("current arms are positional; found {i} at {a}")));
            }
            let (s, raw) = arm_summary(e, kind, &path)?;
            current.push(s);
            current_samples.push(raw);
        }
        let mut historical = Vec::with_capacity(self.historical.len());
        let mut hist_samples = Vec::with_capacity(self.historical.len());
        for (k, src) in self.historical.iter().enumerate() {
            let mut cells = vec![None; arms];
            let mut raws = vec![None; arms];
            for (j, e) in src.arms.iter().enumerate() {
                let path = format!("historical[{k}].arms[{j}]");
                let a = e.arm.ok_or_else(|| field(&format!("{path}.arm"), "missing"))?;
                if a >= arms {
                    return Err(field(&format!("{path}.arm"), format!("arm {a} does not exist ({arms} current arms)")));
                }
                if cells[a].is_some() {
                    return Err(field(&format!("{path}.arm"), format!("arm {a} given twice")));
                }
                let (s, raw) = arm_summary(e, kind, &path)?;
                cells[a] = Some(s);
                raws[a] = raw;
            }
            historical.push(HistoricalSource::new(src.label.clone(), cells));
            hist_samples.push(raws);
        }
        let layout = TrialLayout::new(kind, current, historical);
        layout.validate()?;

        let radii = match self.radius.policy.as_str() {
            "fixed" => {
                if self.radius.c.is_some() {
                    return Err(field("radius.c", "only used with policy = \"data\""));
                }
                match &self.radius.rho {
                    None => return Err(field("radius.rho", "missing (required for policy = \"fixed\")")),
                    Some(Rho::Uniform(r)) => RadiusSpec::uniform(&layout, *r),
                    Some(Rho::PerArm(r)) => RadiusSpec::per_arm(&layout, r),
                }
                .map_err(|e| at("radius.rho", e))?
            }
            "data" => {
                if self.radius.rho.is_some() {
                    return Err(field("radius.rho", "not used with policy = \"data\""));
                }
                let c = self.radius.c.ok_or_else(|| field("radius.c", "missing (required for policy = \"data\")"))?;
                let mut set = SampleSet { current: Vec::new(), historical: Vec::new() };
                for (a, raw) in current_samples.into_iter().enumerate() {
                    set.current.push(raw.ok_or_else(|| field(&format!("current[{a}].samples"), "needed for data-driven radii"))?);
                }
                for (k, raws) in hist_samples.into_iter().enumerate() {
                    let mut row = Vec::with_capacity(arms);
                    for (a, raw) in raws.into_iter().enumerate() {
                        if layout.cell(k, a).is_some() && raw.is_none() {
                            return Err(field(&format!("historical[{k}] arm {a}.samples"), "needed for data-driven radii"));
                        }
                        row.push(raw);
                    }
                    set.historical.push(row);
                }
                estimate_radii(&set, c).map_err(|e| at("radius.c", e))?
            }
            p => return Err(field("radius.policy", format!("expected \"fixed\" or \"data\", got {p:?}"))),
        };

        let an = &self.analysis;
        let theta1 = an.theta1.or(theta1).ok_or_else(|| field("analysis.theta1", "missing"))?;
        // Fields are applied one at a time so a failure names the offending key.
        let mut config = BorrowConfig::new(an.alpha, 1.0).map_err(|e| at("analysis.alpha", e))?;
        config.theta1 = theta1;
        config.validate().map_err(|e| at("analysis.theta1", e))?;
        config.grid_points = an.grid_points;
        config.validate().map_err(|e| at("analysis.grid_points", e))?;
        config.caps = Caps::Uniform(an.cap);
        config.validate().map_err(|e| at("analysis.cap", e))?;
        config.ridge = an.ridge;
        config.validate().map_err(|e| at("analysis.ridge", e))?;
        config.correction = parse_correction(&an.correction, an.oracle_centers.as_deref(), arms)
            .map_err(|e| at("analysis.correction", e))?;
        config.validate().map_err(|e| at("analysis.correction", e))?;

        let arm_labels = self
            .current
            .iter()
            .enumerate()
            .map(|(a, e)| e.label.clone().unwrap_or_else(|| format!("arm{a}")))
            .collect();
        Ok(Analysis { layout, radii, config, arm_labels })
    }
}

/// `plugin`, `universal`, or `oracle` with one center per arm.
pub fn parse_correction(name: &str, centers: Option<&[f64]>, arms: usize) -> Result<Correction> {
    match name {
        "plugin" => Ok(Correction::PlugIn),
        "universal" => Ok(Correction::Universal),
        "oracle" => {
            let c = centers.ok_or_else(|| Error::Invalid("oracle correction needs oracle_centers".into()))?;
            if c.len() != arms {
                return Err(Error::Invalid(format!("{} oracle centers for {arms} arms", c.len())));
            }
            Ok(Correction::Oracle(c.to_vec()))
        }
        other => Err(Error::Invalid(format!("expected plugin, oracle or universal, got {other:?}"))),
    }
}

fn arm_summary(e: &ArmEntry, kind: OutcomeKind, path: &str) -> Result<(ArmSummary, Option<Vec<f64>>)> {
    if let Some(xs) = &e.samples {
        for (name, given) in [("n", e.n.is_some()), ("mean", e.mean.is_some()), ("variance", e.variance.is_some()), ("successes", e.successes.is_some())] {
            if given {
                return Err(field(&format!("{path}.{name}"), "give either samples or summaries, not both"));
            }
        }
        let s = summarize(xs, kind).map_err(|err| at(&format!("{path}.samples"), err))?;
        return Ok((s, Some(xs.clone())));
    }
    let n = e.n.ok_or_else(|| field(&format!("{path}.n"), "missing"))?;
    let s = match kind {
        OutcomeKind::Binary => {
            if e.mean.is_some() || e.variance.is_some() {
                return Err(field(&format!("{path}.successes"), "binary arms are given by n and successes"));
            }
            let k = e.successes.ok_or_else(|| field(&format!("{path}.successes"), "missing"))?;
            ArmSummary::binary(n, k).map_err(|err| at(&format!("{path}.successes"), err))?
        }
        OutcomeKind::Continuous => {
            if e.successes.is_some() {
                return Err(field(&format!("{path}.successes"), "not valid for continuous outcomes"));
            }
            let mean = e.mean.ok_or_else(|| field(&format!("{path}.mean"), "missing"))?;
            ArmSummary::new(n, mean, e.variance).map_err(|err| at(&format!("{path}.variance"), err))?
        }
    };
    Ok((s, None))
}
