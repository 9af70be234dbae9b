//! Arbitrary arm sets, several historical sources and linear contrasts.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::calibrate::{self, BorrowConfig, CalibrationResult};
use crate::ebw::{self, BorrowParams, Variance, VarianceSource};
use crate::error::{invalid, Result};
use crate::robust::{self, Correction, RobustTestResult, Sidedness, TestInputs};
use crate::summary::{SampleSet, TrialLayout};
use crate::transport::RadiusSpec;

/// Coefficients `c_a` of the target `Σ_a c_a μ_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contrast {
    coeffs: Vec<f64>,
}

impl Contrast {
    /// Finite coefficients, at least one nonzero.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid!("contrast coefficients must be finite"));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(invalid!("contrast needs a nonzero coefficient"));
        }
        Ok(Contrast { coeffs })
    }

    /// Treatment minus control, `(−1, +1)`.
    pub fn two_arm() -> Self {
        Contrast { coeffs: vec![-1.0, 1.0] }
    }

    /// Coefficients.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `−c`.
    pub fn negated(&self) -> Self {
        Contrast { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    fn check(&self, layout: &TrialLayout) -> Result<()> {
        calibrate::check_coeffs(layout, &self.coeffs)
    }
}

/// `θ̂(λ; c) = Σ_a c_a μ̂_a(λ)`.
pub fn contrast_effect(params: &BorrowParams, layout: &TrialLayout, contrast: &Contrast) -> Result<f64> {
    contrast.check(layout)?;
    let w = ebw::weights(params, layout)?;
    Ok(contrast
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(a, &c)| c * ebw::arm_mean(&w, layout, a))
        .sum())
}

/// `b₊(λ; c) = Σ_a Σ_k c_a w_{k,a} Δ^{sgn(c_a)}_{k,a}` with `sgn(0) = +`.
pub fn contrast_bias_plus(
    params: &BorrowParams,
    layout: &TrialLayout,
    contrast: &Contrast,
    radii: &RadiusSpec,
    correction: &Correction,
) -> Result<f64> {
    contrast.check(layout)?;
    let w = ebw::weights(params, layout)?;
    Ok(robust::corrections_for(&w, layout, radii, &contrast.coeffs, correction)?.b_plus)
}

/// Lower-direction counterpart of [`contrast_bias_plus`].
pub fn contrast_bias_minus(
    params: &BorrowParams,
    layout: &TrialLayout,
    contrast: &Contrast,
    radii: &RadiusSpec,
    correction: &Correction,
) -> Result<f64> {
    contrast.check(layout)?;
    let w = ebw::weights(params, layout)?;
    Ok(robust::corrections_for(&w, layout, radii, &contrast.coeffs, correction)?.b_minus)
}

/// `s²(λ; c) = Σ_a c_a² [w_{C,a}² σ²_{C,a}/n_{C,a} + Σ_k w_{k,a}² σ²_{k,a}/n_{k,a}]`.
pub fn contrast_variance(
    params: &BorrowParams,
    layout: &TrialLayout,
    contrast: &Contrast,
    src: VarianceSource<'_>,
) -> Result<Variance> {
    contrast.check(layout)?;
    let w = ebw::weights(params, layout)?;
    ebw::contrast_variance_of(&w, layout, &contrast.coeffs, src)
}

fn contrast_run(
    params: &BorrowParams,
    layout: &TrialLayout,
    contrast: &Contrast,
    radii: &RadiusSpec,
    alpha: f64,
    correction: &Correction,
    sidedness: Sidedness,
) -> Result<RobustTestResult> {
    contrast.check(layout)?;
    let t = TestInputs {
        layout,
        params,
        radii,
        coeffs: &contrast.coeffs,
        alpha,
        correction,
        variances: VarianceSource::PlugIn,
    };
    robust::run_test(&t, sidedness)
}

/// Robust one-sided test of `Σ c_a μ_a ≤ 0`.
pub fn contrast_test(
    params: &BorrowParams,
    layout: &TrialLayout,
    contrast: &Contrast,
    radii: &RadiusSpec,
    alpha: f64,
    correction: &Correction,
) -> Result<RobustTestResult> {
    contrast_run(params, layout, contrast, radii, alpha, correction, Sidedness::OneSided)
}

/// Robust two-sided contrast test and interval.
pub fn contrast_test_two_sided(
    params: &BorrowParams,
    layout: &TrialLayout,
    contrast: &Contrast,
    radii: &RadiusSpec,
    alpha: f64,
    correction: &Correction,
) -> Result<RobustTestResult> {
    contrast_run(params, layout, contrast, radii, alpha, correction, Sidedness::TwoSided)
}

/// Grid calibration over every `(source, arm)` coordinate of a contrast.
pub fn select_lambda_contrast(
    layout: &TrialLayout,
    radii: &RadiusSpec,
    contrast: &Contrast,
    config: &BorrowConfig,
) -> Result<CalibrationResult> {
    calibrate::select_contrast(layout, radii, &contrast.coeffs, config)
}

/// Contrast analogue of [`calibrate::run_bond`].
pub fn run_bond_contrast(
    layout: &TrialLayout,
    radii: &RadiusSpec,
    contrast: &Contrast,
    config: &BorrowConfig,
) -> Result<(CalibrationResult, RobustTestResult)> {
    calibrate::run_contrast(layout, radii, &contrast.coeffs, config)
}

/// Raw treatment label before coarsening.
#[derive(Debug, Clone, PartialEq)]
pub enum TreatmentLabel {
    /// Opaque token, e.g. a regimen name.
    Token(String),
    /// Numeric dose.
    Dose(f64),
}

/// Where a raw record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordSource {
    /// Current trial.
    Current,
    /// Historical source by index.
    Historical(usize),
}

/// One subject's outcome with its raw treatment label.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    /// Origin.
    pub source: RecordSource,
    /// Uncoarsened treatment.
    pub label: TreatmentLabel,
    /// Outcome.
    pub outcome: f64,
}

/// Map from raw labels onto the finite arm set `0..arms`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoarseningMap {
    /// Token lookup.
    Labels(BTreeMap<String, usize>),
    /// Dose bins `[e₀, e₁), …, [e_last, ∞)`; doses below `e₀` are unmapped.
    DoseBins(Vec<f64>),
}

impl CoarseningMap {
    /// Validated dose bins.
    pub fn dose_bins(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid!("dose bin edges must be finite and strictly increasing"));
        }
        Ok(CoarseningMap::DoseBins(edges))
    }

    /// Number of arms in the image.
    pub fn arms(&self) -> usize {
        match self {
            CoarseningMap::Labels(m) => m.values().max().map_or(0, |m| m + 1),
            CoarseningMap::DoseBins(e) => e.len(),
        }
    }

    /// Arm of a label, if mapped.
    pub fn arm_of(&self, label: &TreatmentLabel) -> Option<usize> {
        match (self, label) {
            (CoarseningMap::Labels(m), TreatmentLabel::Token(t)) => m.get(t).copied(),
            (CoarseningMap::DoseBins(e), TreatmentLabel::Dose(d)) => {
                if !d.is_finite() || *d < e[0] {
                    None
                } else {
                    Some(e.partition_point(|x| x <= d) - 1)
                }
            }
            _ => None,
        }
    }
}

/// Regroups raw records by coarsened arm. Every label must be mapped.
pub fn coarsen(records: &[RawRecord], map: &CoarseningMap, sources: usize) -> Result<SampleSet> {
    let arms = map.arms();
    let mut offenders = Vec::new();
    let mut set = SampleSet { current: vec![Vec::new(); arms], historical: vec![vec![None; arms]; sources] };
    for (i, r) in records.iter().enumerate() {
        let Some(a) = map.arm_of(&r.label) else {
            offenders.push(alloc::format!("{i}:{:?}", r.label));
            continue;
        };
        match r.source {
            RecordSource::Current => set.current[a].push(r.outcome),
            RecordSource::Historical(k) if k < sources => {
                set.historical[k][a].get_or_insert_with(Vec::new).push(r.outcome)
            }
            RecordSource::Historical(k) => return Err(invalid!("record {i} names missing source {k}")),
        }
    }
    if !offenders.is_empty() {
        return Err(invalid!("unmapped treatment labels: {}", offenders.join(", ")));
    }
    Ok(set)
}
