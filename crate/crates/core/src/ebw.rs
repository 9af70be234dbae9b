//! Effective borrowing weights, the borrowing estimators and their variance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, numerical, Cell, Result};
use crate::summary::{ArmSummary, TrialLayout};

/// Effective borrowing weight `λ n_H / (n_C + λ n_H)`.
pub fn weight(lambda: f64, n_c: usize, n_h: usize) -> Result<f64> {
    if n_c == 0 {
        return Err(invalid!("weight needs n_C >= 1"));
    }
    check_lambda(lambda)?;
    let h = lambda * n_h as f64;
    Ok(h / (n_c as f64 + h))
}

/// Inverse of [`weight`]: `λ = (n_C/n_H) · w/(1 − w)`.
pub fn weight_inverse(w: f64, n_c: usize, n_h: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&w) {
        return Err(invalid!("weight must lie in [0, 1), got {w}"));
    }
    if n_c == 0 || n_h == 0 {
        return Err(invalid!("weight inverse needs n_C >= 1 and n_H >= 1"));
    }
    Ok(n_c as f64 / n_h as f64 * w / (1.0 - w))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid!("lambda must be finite and >= 0, got {lambda}"));
    }
    Ok(())
}

/// Borrowing parameters `λ[source][arm]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BorrowParams {
    lambda: Vec<Vec<f64>>,
}

impl BorrowParams {
    /// Validated parameter table.
    pub fn new(lambda: Vec<Vec<f64>>) -> Result<Self> {
        for row in &lambda {
            for &l in row {
                check_lambda(l)?;
            }
        }
        Ok(BorrowParams { lambda })
    }

    /// All-zero parameters shaped like `layout`.
    pub fn zeros(layout: &TrialLayout) -> Self {
        BorrowParams { lambda: vec![vec![0.0; layout.arms()]; layout.sources()] }
    }

    /// Single-source parameters, one λ per arm.
    pub fn per_arm(lambdas: &[f64]) -> Result<Self> {
        Self::new(vec![lambdas.to_vec()])
    }

    /// Applies `value` to each present historical cell and 0 elsewhere.
    pub fn uniform(layout: &TrialLayout, value: f64) -> Result<Self> {
        let lambda = layout
            .historical
            .iter()
            .map(|s| s.arms.iter().map(|c| if c.is_some() { value } else { 0.0 }).collect())
            .collect();
        Self::new(lambda)
    }

    /// `λ` at `(source, arm)`; zero when out of range.
    pub fn get(&self, source: usize, arm: usize) -> f64 {
        self.lambda.get(source).and_then(|r| r.get(arm)).copied().unwrap_or(0.0)
    }

    /// Raw table.
    pub fn table(&self) -> &[Vec<f64>] {
        &self.lambda
    }

    pub(crate) fn set(&mut self, source: usize, arm: usize, value: f64) {
        self.lambda[source][arm] = value;
    }

    fn check_shape(&self, layout: &TrialLayout) -> Result<()> {
        let ok = self.lambda.len() == layout.sources()
            && self.lambda.iter().all(|r| r.len() == layout.arms());
        if !ok {
            return Err(invalid!(
                "borrowing parameters must be {} sources x {} arms",
                layout.sources(),
                layout.arms()
            ));
        }
        Ok(())
    }
}

/// Weights on the current arm and each historical cell.
///
/// For each arm `current[a] + Σ_k historical[k][a] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    /// `w_{C,a}` per arm.
    pub current: Vec<f64>,
    /// `w_{k,a}` indexed `[source][arm]`; zero for absent cells.
    pub historical: Vec<Vec<f64>>,
}

impl WeightProfile {
    /// Total historical weight on arm `a`.
    pub fn borrowed(&self, arm: usize) -> f64 {
        self.historical.iter().map(|r| r[arm]).sum()
    }
}

/// Multi-source weights `w_{k,a} = λ_{k,a} n_{k,a} / (n_{C,a} + Σ_l λ_{l,a} n_{l,a})`.
///
/// λ on absent cells is ignored.
pub fn weights(params: &BorrowParams, layout: &TrialLayout) -> Result<WeightProfile> {
    params.check_shape(layout)?;
    let arms = layout.arms();
    let mut historical = vec![vec![0.0; arms]; layout.sources()];
    let mut current = Vec::with_capacity(arms);
    for a in 0..arms {
        let mut denom = layout.current[a].n() as f64;
        for k in 0..layout.sources() {
            if let Some(h) = layout.cell(k, a) {
                denom += params.get(k, a) * h.n() as f64;
            }
        }
        let mut borrowed = 0.0;
        for (k, row) in historical.iter_mut().enumerate() {
            if let Some(h) = layout.cell(k, a) {
                row[a] = params.get(k, a) * h.n() as f64 / denom;
                borrowed += row[a];
            }
        }
        current.push(1.0 - borrowed);
    }
    Ok(WeightProfile { current, historical })
}

/// Σ λ_{k,a} n_{k,a} over present cells of `arm`.
pub fn borrowed_size(params: &BorrowParams, layout: &TrialLayout, arm: usize) -> f64 {
    (0..layout.sources())
        .filter_map(|k| layout.cell(k, arm).map(|h| params.get(k, arm) * h.n() as f64))
        .sum()
}

/// Borrowing estimator for one arm from per-source λ and the arm's cells.
pub fn estimate_mean(lambdas: &[f64], current: &ArmSummary, historical: &[Option<&ArmSummary>]) -> Result<f64> {
    if lambdas.len() != historical.len() {
        return Err(invalid!("{} lambdas for {} historical cells", lambdas.len(), historical.len()));
    }
    let mut denom = current.n() as f64;
    for (&l, h) in lambdas.iter().zip(historical) {
        check_lambda(l)?;
        if let Some(h) = h {
            denom += l * h.n() as f64;
        }
    }
    let mut borrowed = 0.0;
    let mut acc = 0.0;
    for (&l, h) in lambdas.iter().zip(historical) {
        if let Some(h) = h {
            let w = l * h.n() as f64 / denom;
            borrowed += w;
            acc += w * h.mean();
        }
    }
    Ok((1.0 - borrowed) * current.mean() + acc)
}

pub(crate) fn arm_mean(w: &WeightProfile, layout: &TrialLayout, arm: usize) -> f64 {
    let mut acc = w.current[arm] * layout.current[arm].mean();
    for (k, row) in w.historical.iter().enumerate() {
        if let Some(h) = layout.cell(k, arm) {
            acc += row[arm] * h.mean();
        }
    }
    acc
}

/// Two-arm effect `μ̂₁(λ₁) − μ̂₀(λ₀)`.
pub fn estimate_effect(params: &BorrowParams, layout: &TrialLayout) -> Result<f64> {
    layout.require_two_arms()?;
    let w = weights(params, layout)?;
    Ok(arm_mean(&w, layout, 1) - arm_mean(&w, layout, 0))
}

/// Outcome variances per cell, shaped like a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVariances {
    /// Current arms.
    pub current: Vec<f64>,
    /// `[source][arm]`; `None` for absent cells.
    pub historical: Vec<Vec<Option<f64>>>,
}

/// Which outcome variances enter the variance formula.
#[derive(Debug, Clone, Copy)]
pub enum VarianceSource<'a> {
    /// Sample variances from the layout.
    PlugIn,
    /// Known variances, for benchmark analyses.
    Known(&'a CellVariances),
}

impl VarianceSource<'_> {
    fn current(&self, layout: &TrialLayout, arm: usize) -> Result<f64> {
        let v = match self {
            VarianceSource::PlugIn => layout.current[arm].variance(),
            VarianceSource::Known(k) => k.current.get(arm).copied(),
        };
        v.ok_or_else(|| invalid!("no variance for current[{arm}]"))
    }

    fn historical(&self, layout: &TrialLayout, source: usize, arm: usize) -> Result<f64> {
        let v = match self {
            VarianceSource::PlugIn => layout.cell(source, arm).and_then(ArmSummary::variance),
            VarianceSource::Known(k) => k.historical.get(source).and_then(|r| r.get(arm)).copied().flatten(),
        };
        v.ok_or_else(|| invalid!("no variance for {}", Cell::new(source, arm)))
    }
}

/// Variance of an estimator and its square root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variance {
    /// `s²`.
    pub s2: f64,
    /// `s`, strictly positive.
    pub s: f64,
}

/// Variance contribution of one arm: `w_C² σ_C²/n_C + Σ_k w_k² σ_k²/n_k`.
pub(crate) fn arm_variance(w: &WeightProfile, layout: &TrialLayout, arm: usize, src: VarianceSource<'_>) -> Result<f64> {
    let c = &layout.current[arm];
    let mut v = w.current[arm] * w.current[arm] * src.current(layout, arm)? / c.n() as f64;
    for (k, row) in w.historical.iter().enumerate() {
        if let Some(h) = layout.cell(k, arm) {
            if row[arm] != 0.0 {
                v += row[arm] * row[arm] * src.historical(layout, k, arm)? / h.n() as f64;
            }
        }
    }
    Ok(v)
}

pub(crate) fn contrast_variance_of(
    w: &WeightProfile,
    layout: &TrialLayout,
    coeffs: &[f64],
    src: VarianceSource<'_>,
) -> Result<Variance> {
    let mut s2 = 0.0;
    for (a, &c) in coeffs.iter().enumerate() {
        if c != 0.0 {
            s2 += c * c * arm_variance(w, layout, a, src)?;
        }
    }
    finish_variance(s2)
}

pub(crate) fn finish_variance(s2: f64) -> Result<Variance> {
    if !(s2.is_finite() && s2 > 0.0) {
        return Err(numerical!("estimator variance is degenerate (s^2 = {s2})"));
    }
    Ok(Variance { s2, s: libm::sqrt(s2) })
}

/// Variance of the two-arm effect estimator at `params`.
pub fn variance(params: &BorrowParams, layout: &TrialLayout, src: VarianceSource<'_>) -> Result<Variance> {
    layout.require_two_arms()?;
    let w = weights(params, layout)?;
    contrast_variance_of(&w, layout, &[-1.0, 1.0], src)
}
