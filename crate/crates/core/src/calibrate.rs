//! Robust-power calibration of λ by exhaustive grid search.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::ebw::{self, BorrowParams, CellVariances, VarianceSource, WeightProfile};
use crate::error::{invalid, numerical, Cell, Result};
use crate::normal;
use crate::robust::{self, Correction, RobustTestResult, Sidedness, TestInputs};
use crate::summary::{OutcomeKind, TrialLayout};
use crate::transport::{drift_range, RadiusSpec};

/// Upper bounds Λ on λ.
#[derive(Debug, Clone, PartialEq)]
pub enum Caps {
    /// One cap for every coordinate.
    Uniform(f64),
    /// `caps[source][arm]`.
    PerCell(Vec<Vec<f64>>),
}

impl Caps {
    fn get(&self, source: usize, arm: usize) -> f64 {
        match self {
            Caps::Uniform(c) => *c,
            Caps::PerCell(t) => t.get(source).and_then(|r| r.get(arm)).copied().unwrap_or(0.0),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = |c: f64| c.is_finite() && c >= 0.0;
        let fine = match self {
            Caps::Uniform(c) => ok(*c),
            Caps::PerCell(t) => t.iter().flatten().all(|&c| ok(c)),
        };
        if !fine {
            return Err(invalid!("caps must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Calibration settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BorrowConfig {
    /// One-sided level.
    pub alpha: f64,
    /// Target alternative in outcome units.
    pub theta1: f64,
    /// Caps Λ; default 1 everywhere.
    pub caps: Caps,
    /// Points per axis when at most `max_fine_coordinates` are active.
    pub grid_points: usize,
    /// Ridge η on `‖λ‖²`; 0 disables it.
    pub ridge: f64,
    /// Bias correction used for the drift ranges and the final test.
    pub correction: Correction,
    /// Known variances instead of plug-in ones.
    pub known_variances: Option<CellVariances>,
    /// Keep the full objective surface in the result.
    pub keep_surface: bool,
    /// Above this many active coordinates the coarse grid is used.
    pub max_fine_coordinates: usize,
    /// Points per axis on the coarse grid.
    pub coarse_grid_points: usize,
    /// Refuse grids larger than this.
    pub max_evaluations: u64,
}

impl BorrowConfig {
    /// Defaults: Λ = 1, 201 points, no ridge, plug-in correction.
    pub fn new(alpha: f64, theta1: f64) -> Result<Self> {
        let c = BorrowConfig {
            alpha,
            theta1,
            caps: Caps::Uniform(1.0),
            grid_points: 201,
            ridge: 0.0,
            correction: Correction::PlugIn,
            known_variances: None,
            keep_surface: false,
            max_fine_coordinates: 4,
            coarse_grid_points: 21,
            max_evaluations: 2_000_000_000,
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks every field.
    pub fn validate(&self) -> Result<()> {
        robust::check_alpha(self.alpha)?;
        if !(self.theta1.is_finite() && self.theta1 > 0.0) {
            return Err(invalid!("theta1 must be finite and > 0, got {}", self.theta1));
        }
        if self.grid_points < 2 || self.coarse_grid_points < 2 {
            return Err(invalid!("grids need at least 2 points per axis"));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(invalid!("ridge must be finite and >= 0, got {}", self.ridge));
        }
        self.caps.check()
    }

    fn variances(&self) -> VarianceSource<'_> {
        match &self.known_variances {
            Some(v) => VarianceSource::Known(v),
            None => VarianceSource::PlugIn,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    /// λ on the active coordinates, in [`SelectionDiagnostics::coordinates`] order.
    pub lambda: Vec<f64>,
    /// `κ̂(λ)`.
    pub kappa: f64,
    /// `κ̂(λ) − η‖λ‖²`.
    pub objective: f64,
}

/// How the argmax was found.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDiagnostics {
    /// Free coordinates, source-major.
    pub coordinates: Vec<Cell>,
    /// Points per axis actually used.
    pub points_per_axis: usize,
    /// Grid points evaluated.
    pub evaluated: u64,
    /// Grid points skipped because `ŝ = 0`.
    pub degenerate: u64,
    /// Size of the maximising set.
    pub argmax_set_size: u64,
    /// `argmax_set_size − 1`.
    pub tie_count: u64,
}

/// Output of [`select_lambda`].
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// Selected λ̂.
    pub lambda: BorrowParams,
    /// Weights at λ̂.
    pub weights: WeightProfile,
    /// `κ̂(λ̂)`.
    pub kappa: f64,
    /// `κ̂(λ̂) − η‖λ̂‖²`.
    pub objective: f64,
    /// `1 − Φ(z_{1−α} − κ̂)`.
    pub power_proxy: f64,
    /// Full surface when requested.
    pub surface: Option<Vec<SurfacePoint>>,
    /// Search bookkeeping.
    pub diagnostics: SelectionDiagnostics,
}

/// Per-arm ingredients of `κ̂`: contrast weight, current cell, historical cells.
struct ArmModel {
    abs_c: f64,
    c2: f64,
    n_c: f64,
    var_c: f64,
    /// (source, n, variance, drift range) for each present historical cell.
    cells: Vec<(usize, f64, Option<f64>, Option<f64>)>,
}

impl ArmModel {
    fn build(layout: &TrialLayout, radii: &RadiusSpec, arm: usize, coeff: f64, config: &BorrowConfig) -> Result<Self> {
        let src = config.variances();
        let var_c = match src {
            VarianceSource::PlugIn => layout.current[arm].variance(),
            VarianceSource::Known(k) => k.current.get(arm).copied(),
        }
        .ok_or_else(|| invalid!("no variance for current[{arm}]"))?;
        let (kind, center) = match &config.correction {
            Correction::Universal => (OutcomeKind::Continuous, 0.0),
            Correction::PlugIn => (layout.kind, layout.current[arm].mean()),
            Correction::Oracle(cs) => (
                layout.kind,
                *cs.get(arm).ok_or_else(|| invalid!("oracle correction has no center for arm {arm}"))?,
            ),
        };
        let mut cells = Vec::new();
        for k in 0..layout.sources() {
            if let Some(h) = layout.cell(k, arm) {
                let var = match src {
                    VarianceSource::PlugIn => h.variance(),
                    VarianceSource::Known(kv) => kv.historical.get(k).and_then(|r| r.get(arm)).copied().flatten(),
                };
                let d = match radii.get(k, arm) {
                    Some(r) => Some(drift_range(kind, center, r)?),
                    None => None,
                };
                cells.push((k, h.n() as f64, var, d));
            }
        }
        Ok(ArmModel { abs_c: coeff.abs(), c2: coeff * coeff, n_c: layout.current[arm].n() as f64, var_c, cells })
    }

    /// Returns `(|c| Σ_k w_k D_k, c² · variance term)` for λ given per present cell.
    fn eval(&self, lambdas: &[f64], arm: usize) -> Result<(f64, f64)> {
        let mut denom = self.n_c;
        for (cell, &l) in self.cells.iter().zip(lambdas) {
            denom += l * cell.1;
        }
        let mut borrowed = 0.0;
        let mut drift = 0.0;
        let mut hist_var = 0.0;
        for (&(k, n, var, d), &l) in self.cells.iter().zip(lambdas) {
            let w = l * n / denom;
            if w == 0.0 {
                continue;
            }
            borrowed += w;
            let d = d.ok_or_else(|| invalid!("no radius for {}", Cell::new(k, arm)))?;
            let var = var.ok_or_else(|| invalid!("no variance for {}", Cell::new(k, arm)))?;
            drift += w * d;
            hist_var += w * w * var / n;
        }
        let wc = 1.0 - borrowed;
        let v = wc * wc * self.var_c / self.n_c + hist_var;
        Ok((self.abs_c * drift, self.c2 * v))
    }
}

fn models(layout: &TrialLayout, radii: &RadiusSpec, coeffs: &[f64], config: &BorrowConfig) -> Result<Vec<Option<ArmModel>>> {
    coeffs
        .iter()
        .enumerate()
        .map(|(a, &c)| if c == 0.0 { Ok(None) } else { ArmModel::build(layout, radii, a, c, config).map(Some) })
        .collect()
}

fn combine(theta1: f64, terms: &[(f64, f64)]) -> Option<f64> {
    let mut drift = 0.0;
    let mut var = 0.0;
    for &(d, v) in terms {
        drift += d;
        var += v;
    }
    (var > 0.0 && var.is_finite()).then(|| (theta1 - drift) / libm::sqrt(var))
}

pub(crate) fn kappa_contrast(
    params: &BorrowParams,
    layout: &TrialLayout,
    radii: &RadiusSpec,
    coeffs: &[f64],
    config: &BorrowConfig,
) -> Result<f64> {
    config.validate()?;
    check_coeffs(layout, coeffs)?;
    ebw::weights(params, layout)?;
    let ms = models(layout, radii, coeffs, config)?;
    let mut terms = Vec::with_capacity(ms.len());
    for (a, m) in ms.iter().enumerate() {
        if let Some(m) = m {
            let lams: Vec<f64> = m.cells.iter().map(|c| params.get(c.0, a)).collect();
            terms.push(m.eval(&lams, a)?);
        }
    }
    combine(config.theta1, &terms).ok_or_else(|| numerical!("estimator variance is degenerate"))
}

/// Plug-in robust noncentrality `κ̂(λ) = (θ₁ − Σ_a w_a D̂_a)/ŝ(λ)` for two arms.
///
/// Drift ranges use the centers of the configured correction; universal
/// mode uses `2ρ`.
pub fn kappa_hat(params: &BorrowParams, layout: &TrialLayout, radii: &RadiusSpec, config: &BorrowConfig) -> Result<f64> {
    layout.require_two_arms()?;
    kappa_contrast(params, layout, radii, &[-1.0, 1.0], config)
}

pub(crate) fn check_coeffs(layout: &TrialLayout, coeffs: &[f64]) -> Result<()> {
    if coeffs.len() != layout.arms() {
        return Err(invalid!("contrast has {} coefficients for {} arms", coeffs.len(), layout.arms()));
    }
    Ok(())
}

fn axis(cap: f64, points: usize) -> Vec<f64> {
    let last = points - 1;
    (0..points).map(|i| if i == last { cap } else { cap * i as f64 / last as f64 }).collect()
}

/// Mixed-radix enumeration of index tuples.
fn advance(idx: &mut [usize], radix: &[usize]) -> bool {
    for (i, r) in idx.iter_mut().zip(radix).rev() {
        *i += 1;
        if *i < *r {
            return true;
        }
        *i = 0;
    }
    false
}

struct ArmGrid {
    /// Indices into the global coordinate list.
    coords: Vec<usize>,
    /// Per sub-grid point: drift term, variance term, squared norm, axis indices.
    points: Vec<(f64, f64, f64, Vec<usize>)>,
}

pub(crate) fn select_contrast(
    layout: &TrialLayout,
    radii: &RadiusSpec,
    coeffs: &[f64],
    config: &BorrowConfig,
) -> Result<CalibrationResult> {
    config.validate()?;
    layout.validate()?;
    check_coeffs(layout, coeffs)?;
    if let Caps::PerCell(t) = &config.caps {
        if t.len() != layout.sources() || t.iter().any(|r| r.len() != layout.arms()) {
            return Err(invalid!("per-cell caps must be {} sources x {} arms", layout.sources(), layout.arms()));
        }
    }
    let ms = models(layout, radii, coeffs, config)?;

    let mut coords = Vec::new();
    for k in 0..layout.sources() {
        for (a, &c) in coeffs.iter().enumerate() {
            if c != 0.0 && layout.cell(k, a).is_some() && config.caps.get(k, a) > 0.0 {
                coords.push(Cell::new(k, a));
            }
        }
    }
    let points = if coords.len() <= config.max_fine_coordinates { config.grid_points } else { config.coarse_grid_points };
    let total = (points as u64).checked_pow(coords.len() as u32).filter(|&t| t <= config.max_evaluations);
    let total = total.ok_or_else(|| {
        invalid!("{} active coordinates at {points} points exceed the evaluation budget", coords.len())
    })?;
    let axes: Vec<Vec<f64>> = coords.iter().map(|c| axis(config.caps.get(c.source, c.arm), points)).collect();

    // Arms decouple: tabulate each arm's sub-grid once, then combine.
    let mut grids = Vec::new();
    for (a, m) in ms.iter().enumerate() {
        let Some(m) = m else { continue };
        let own: Vec<usize> = (0..coords.len()).filter(|&i| coords[i].arm == a).collect();
        let radix = vec![points; own.len()];
        let mut idx = vec![0usize; own.len()];
        let mut pts = Vec::new();
        loop {
            let mut lams = vec![0.0; m.cells.len()];
            let mut norm2 = 0.0;
            for (j, &ci) in own.iter().enumerate() {
                let l = axes[ci][idx[j]];
                let slot = m.cells.iter().position(|c| c.0 == coords[ci].source).expect("coordinate has a cell");
                lams[slot] = l;
                norm2 += l * l;
            }
            let (d, v) = m.eval(&lams, a)?;
            pts.push((d, v, norm2, idx.clone()));
            if !advance(&mut idx, &radix) {
                break;
            }
        }
        grids.push(ArmGrid { coords: own, points: pts });
    }

    let radix: Vec<usize> = grids.iter().map(|g| g.points.len()).collect();
    let eval_at = |pick: &[usize], terms: &mut Vec<(f64, f64)>| -> (Option<f64>, f64) {
        terms.clear();
        let mut norm2 = 0.0;
        for (g, &p) in grids.iter().zip(pick) {
            let (d, v, n2, _) = g.points[p];
            terms.push((d, v));
            norm2 += n2;
        }
        (combine(config.theta1, terms), norm2)
    };
    let full_lambda = |pick: &[usize]| -> Vec<f64> {
        let mut out = vec![0.0; coords.len()];
        for (g, &p) in grids.iter().zip(pick) {
            for (j, &ci) in g.coords.iter().enumerate() {
                out[ci] = axes[ci][g.points[p].3[j]];
            }
        }
        out
    };

    let mut terms = Vec::with_capacity(grids.len());
    let mut surface = config.keep_surface.then(Vec::new);
    let mut best = f64::NEG_INFINITY;
    let mut degenerate = 0u64;
    let mut pick = vec![0usize; grids.len()];
    loop {
        let (kappa, norm2) = eval_at(&pick, &mut terms);
        match kappa {
            Some(k) => {
                let obj = k - config.ridge * norm2;
                if obj > best {
                    best = obj;
                }
                if let Some(s) = surface.as_mut() {
                    s.push(SurfacePoint { lambda: full_lambda(&pick), kappa: k, objective: obj });
                }
            }
            None => degenerate += 1,
        }
        if !advance(&mut pick, &radix) {
            break;
        }
    }
    if degenerate == total || !best.is_finite() {
        return Err(numerical!("every grid point has a degenerate variance"));
    }

    // Resolve the argmax set: smallest norm, then lexicographic order.
    let tol = 4.0 * f64::EPSILON * best.abs().max(1.0);
    let mut chosen: Option<(f64, Vec<f64>)> = None;
    let mut set_size = 0u64;
    pick.iter_mut().for_each(|p| *p = 0);
    loop {
        let (kappa, norm2) = eval_at(&pick, &mut terms);
        if let Some(k) = kappa {
            if k - config.ridge * norm2 >= best - tol {
                set_size += 1;
                let lam = full_lambda(&pick);
                let better = match &chosen {
                    None => true,
                    Some((n0, l0)) => match norm2.total_cmp(n0) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => lex_less(&lam, l0),
                    },
                };
                if better {
                    chosen = Some((norm2, lam));
                }
            }
        }
        if !advance(&mut pick, &radix) {
            break;
        }
    }
    let (norm2, lam) = chosen.expect("best value is attained");

    let mut lambda = BorrowParams::zeros(layout);
    for (c, &l) in coords.iter().zip(&lam) {
        lambda.set(c.source, c.arm, l);
    }
    let weights = ebw::weights(&lambda, layout)?;
    let kappa = kappa_contrast(&lambda, layout, radii, coeffs, config)?;
    Ok(CalibrationResult {
        lambda,
        weights,
        kappa,
        objective: kappa - config.ridge * norm2,
        power_proxy: normal::cdf(kappa - normal::z_upper(config.alpha)),
        surface,
        diagnostics: SelectionDiagnostics {
            coordinates: coords,
            points_per_axis: points,
            evaluated: total,
            degenerate,
            argmax_set_size: set_size,
            tie_count: set_size.saturating_sub(1),
        },
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

/// Selects λ̂ maximising `κ̂(λ) − η‖λ‖²` over the grid on `[0, Λ]`.
///
/// Only coordinates with historical data and a positive cap are searched;
/// the rest stay at 0. Ties go to the smallest Euclidean norm, then to the
/// lexicographically smallest λ, so the result does not depend on the
/// enumeration order.
pub fn select_lambda(layout: &TrialLayout, radii: &RadiusSpec, config: &BorrowConfig) -> Result<CalibrationResult> {
    layout.require_two_arms()?;
    select_contrast(layout, radii, &[-1.0, 1.0], config)
}

pub(crate) fn run_contrast(
    layout: &TrialLayout,
    radii: &RadiusSpec,
    coeffs: &[f64],
    config: &BorrowConfig,
) -> Result<(CalibrationResult, RobustTestResult)> {
    let cal = select_contrast(layout, radii, coeffs, config)?;
    let test = robust::run_test(
        &TestInputs {
            layout,
            params: &cal.lambda,
            radii,
            coeffs,
            alpha: config.alpha,
            correction: &config.correction,
            variances: config.variances(),
        },
        Sidedness::OneSided,
    )?;
    Ok((cal, test))
}

/// Full pipeline: select λ̂ then run the robust one-sided test at λ̂.
pub fn run_bond(
    layout: &TrialLayout,
    radii: &RadiusSpec,
    config: &BorrowConfig,
) -> Result<(CalibrationResult, RobustTestResult)> {
    layout.require_two_arms()?;
    run_contrast(layout, radii, &[-1.0, 1.0], config)
}

/// One row of a radius sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    /// Radius applied to every historical cell.
    pub rho: f64,
    /// Calibration at this radius.
    pub calibration: CalibrationResult,
    /// Robust test at λ̂.
    pub test: RobustTestResult,
}

/// Runs [`run_bond`] once per radius in an ascending grid.
pub fn sensitivity_sweep(layout: &TrialLayout, rhos: &[f64], config: &BorrowConfig) -> Result<Vec<SensitivityRow>> {
    if rhos.is_empty() {
        return Err(invalid!("radius grid is empty"));
    }
    if rhos.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid!("radius grid must be sorted ascending"));
    }
    rhos.iter()
        .map(|&rho| {
            let radii = RadiusSpec::uniform(layout, rho)?;
            let (calibration, test) = run_bond(layout, &radii, config)?;
            Ok(SensitivityRow { rho, calibration, test })
        })
        .collect()
}
