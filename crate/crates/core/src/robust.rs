//! Worst-case bias corrections and robust Wald tests.
//!
//! Only the one-sided test reports a p-value. Two-sided inference is the
//! robust confidence interval and the decision `0 ∉ CI`.

use alloc::vec::Vec;

use crate::ebw::{self, BorrowParams, VarianceSource, WeightProfile};
use crate::error::{invalid, Cell, Result};
use crate::normal;
use crate::summary::{OutcomeKind, TrialLayout};
use crate::transport::{shift_bounds, RadiusSpec};

/// How the centers of binary ambiguity balls are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrectionMode {
    /// True current-arm means supplied by the caller.
    Oracle,
    /// Current-arm sample means.
    PlugIn,
    /// Ignore the `[0, 1]` clamp and use `±ρ` for every outcome kind.
    Universal,
}

/// A correction mode together with any data it needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Correction {
    /// Centers are the current-arm sample means.
    #[default]
    PlugIn,
    /// Centers are known per-arm means.
    Oracle(Vec<f64>),
    /// Unclamped bounds `±ρ`.
    Universal,
}

impl Correction {
    /// Mode tag.
    pub fn mode(&self) -> CorrectionMode {
        match self {
            Correction::PlugIn => CorrectionMode::PlugIn,
            Correction::Oracle(_) => CorrectionMode::Oracle,
            Correction::Universal => CorrectionMode::Universal,
        }
    }

    pub(crate) fn centers(&self, layout: &TrialLayout) -> Result<Option<Vec<f64>>> {
        match self {
            Correction::Universal => Ok(None),
            Correction::PlugIn => Ok(Some(layout.current.iter().map(|s| s.mean()).collect())),
            Correction::Oracle(c) => {
                if c.len() != layout.arms() {
                    return Err(invalid!("oracle correction needs {} centers, got {}", layout.arms(), c.len()));
                }
                Ok(Some(c.clone()))
            }
        }
    }
}

/// Worst-case biases in each direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasCorrections {
    /// Bias in the rejection direction, `≥ 0`.
    pub b_plus: f64,
    /// Bias in the opposite direction, `≤ 0`.
    pub b_minus: f64,
    /// Mode used.
    pub mode: CorrectionMode,
}

/// One- or two-sided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    /// `H₀: θ ≤ 0` against `θ > 0`.
    OneSided,
    /// `H₀: θ = 0`.
    TwoSided,
}

/// Outcome of a robust Wald test.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustTestResult {
    /// Point estimate.
    pub theta_hat: f64,
    /// Plug-in standard error.
    pub s_hat: f64,
    /// Bias corrections applied.
    pub corrections: BiasCorrections,
    /// `(θ̂ − b₊)/ŝ`.
    pub statistic_upper: f64,
    /// `(θ̂ − b₋)/ŝ`, reported for two-sided tests only.
    pub statistic_lower: Option<f64>,
    /// Decision.
    pub reject: bool,
    /// `1 − Φ(statistic_upper)`.
    pub p_one_sided: f64,
    /// Lower end of the robust `(1 − α)` interval.
    pub ci_lower: f64,
    /// Upper end of the robust `(1 − α)` interval.
    pub ci_upper: f64,
    /// Level.
    pub alpha: f64,
    /// Which test was run.
    pub sidedness: Sidedness,
}

/// Shift bound selected by the sign of a contrast coefficient.
fn signed_shift(kind: OutcomeKind, center: Option<f64>, rho: f64, upward: bool) -> Result<f64> {
    let b = match center {
        Some(mu) => shift_bounds(kind, mu, rho)?,
        None => shift_bounds(OutcomeKind::Continuous, 0.0, rho)?,
    };
    Ok(if upward { b.delta_plus } else { b.delta_minus })
}

/// `Σ_a Σ_k c_a w_{k,a} Δ^{±sgn(c_a)}_{k,a}`, with `+` for `b₊` and `−` for `b₋`.
pub(crate) fn contrast_bias(
    w: &WeightProfile,
    radii: &RadiusSpec,
    kind: OutcomeKind,
    centers: Option<&[f64]>,
    coeffs: &[f64],
    upper: bool,
) -> Result<f64> {
    let mut total = 0.0;
    for (a, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let center = match (centers, kind) {
            (Some(cs), _) => Some(*cs.get(a).ok_or_else(|| invalid!("no center for arm {a}"))?),
            (None, _) => None,
        };
        let upward = (c >= 0.0) == upper;
        for (k, row) in w.historical.iter().enumerate() {
            let wk = row[a];
            if wk == 0.0 {
                continue;
            }
            let rho = radii.get(k, a).ok_or_else(|| invalid!("no radius for {}", Cell::new(k, a)))?;
            total += c * wk * signed_shift(kind, center, rho, upward)?;
        }
    }
    Ok(total)
}

fn resolve_centers(kind: OutcomeKind, centers: Option<&[f64]>, mode: CorrectionMode) -> Result<Option<&[f64]>> {
    match mode {
        CorrectionMode::Universal => Ok(None),
        _ if kind == OutcomeKind::Continuous => Ok(None),
        _ => centers.map(Some).ok_or_else(|| invalid!("binary {mode:?} correction needs per-arm centers")),
    }
}

/// Two-arm `b₊ = w₁Δ₁⁺ − w₀Δ₀⁻` (summed over sources).
pub fn bias_plus(
    weights: &WeightProfile,
    radii: &RadiusSpec,
    kind: OutcomeKind,
    centers: Option<&[f64]>,
    mode: CorrectionMode,
) -> Result<f64> {
    let centers = resolve_centers(kind, centers, mode)?;
    contrast_bias(weights, radii, kind, centers, &[-1.0, 1.0], true)
}

/// Two-arm `b₋ = w₁Δ₁⁻ − w₀Δ₀⁺` (summed over sources).
pub fn bias_minus(
    weights: &WeightProfile,
    radii: &RadiusSpec,
    kind: OutcomeKind,
    centers: Option<&[f64]>,
    mode: CorrectionMode,
) -> Result<f64> {
    let centers = resolve_centers(kind, centers, mode)?;
    contrast_bias(weights, radii, kind, centers, &[-1.0, 1.0], false)
}

pub(crate) fn corrections_for(
    w: &WeightProfile,
    layout: &TrialLayout,
    radii: &RadiusSpec,
    coeffs: &[f64],
    correction: &Correction,
) -> Result<BiasCorrections> {
    let centers = correction.centers(layout)?;
    let centers = resolve_centers(layout.kind, centers.as_deref(), correction.mode())?;
    Ok(BiasCorrections {
        b_plus: contrast_bias(w, radii, layout.kind, centers, coeffs, true)?,
        b_minus: contrast_bias(w, radii, layout.kind, centers, coeffs, false)?,
        mode: correction.mode(),
    })
}

pub(crate) struct TestInputs<'a> {
    pub layout: &'a TrialLayout,
    pub params: &'a BorrowParams,
    pub radii: &'a RadiusSpec,
    pub coeffs: &'a [f64],
    pub alpha: f64,
    pub correction: &'a Correction,
    pub variances: VarianceSource<'a>,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

pub(crate) fn run_test(t: &TestInputs<'_>, sidedness: Sidedness) -> Result<RobustTestResult> {
    check_alpha(t.alpha)?;
    let w = ebw::weights(t.params, t.layout)?;
    let theta_hat: f64 = t
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(a, &c)| c * ebw::arm_mean(&w, t.layout, a))
        .sum();
    let s_hat = ebw::contrast_variance_of(&w, t.layout, t.coeffs, t.variances)?.s;
    let corrections = corrections_for(&w, t.layout, t.radii, t.coeffs, t.correction)?;
    let upper = (theta_hat - corrections.b_plus) / s_hat;
    let lower = (theta_hat - corrections.b_minus) / s_hat;
    let z_ci = normal::z_upper(t.alpha / 2.0);
    let ci_lower = theta_hat - corrections.b_plus - z_ci * s_hat;
    let ci_upper = theta_hat - corrections.b_minus + z_ci * s_hat;
    let (reject, statistic_lower) = match sidedness {
        Sidedness::OneSided => (upper >= normal::z_upper(t.alpha), None),
        Sidedness::TwoSided => (ci_lower > 0.0 || ci_upper < 0.0, Some(lower)),
    };
    Ok(RobustTestResult {
        theta_hat,
        s_hat,
        corrections,
        statistic_upper: upper,
        statistic_lower,
        reject,
        p_one_sided: normal::sf(upper),
        ci_lower,
        ci_upper,
        alpha: t.alpha,
        sidedness,
    })
}

/// Robust one-sided test of `θ ≤ 0`: reject iff `(θ̂ − b₊)/ŝ ≥ z_{1−α}`.
///
/// The interval fields hold the robust two-sided `(1 − α)` interval.
pub fn test_one_sided(
    layout: &TrialLayout,
    params: &BorrowParams,
    radii: &RadiusSpec,
    alpha: f64,
    correction: &Correction,
) -> Result<RobustTestResult> {
    layout.require_two_arms()?;
    let t = TestInputs {
        layout,
        params,
        radii,
        coeffs: &[-1.0, 1.0],
        alpha,
        correction,
        variances: VarianceSource::PlugIn,
    };
    run_test(&t, Sidedness::OneSided)
}

/// Robust two-sided test at `z_{1−α/2}`; rejects iff `0 ∉ [θ̂ − b₊ − zŝ, θ̂ − b₋ + zŝ]`.
pub fn test_two_sided(
    layout: &TrialLayout,
    params: &BorrowParams,
    radii: &RadiusSpec,
    alpha: f64,
    correction: &Correction,
) -> Result<RobustTestResult> {
    layout.require_two_arms()?;
    let t = TestInputs {
        layout,
        params,
        radii,
        coeffs: &[-1.0, 1.0],
        alpha,
        correction,
        variances: VarianceSource::PlugIn,
    };
    run_test(&t, Sidedness::TwoSided)
}
