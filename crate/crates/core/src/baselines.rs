//! Classical borrowing rules expressed through their effective weights.
//!
//! Frequentist rules (`current_only`, `naive_pool`, `fixed_lambda`, `ttp`)
//! decide with a plain Wald statistic on the borrowing estimator. Bayesian
//! rules decide with the normal approximation to `P(θ > 0 | data)` built
//! from their own posterior means and variances.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ebw::WeightProfile;
use crate::error::{invalid, numerical, Result};
use crate::normal;
use crate::summary::{ArmSummary, OutcomeKind, TrialLayout};

/// A borrowing rule and its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineSpec {
    /// Ignore historical data.
    CurrentOnly,
    /// Pool at full weight (λ = 1).
    NaivePool,
    /// Fixed discount λ.
    FixedLambda {
        /// λ ≥ 0.
        lambda: f64,
    },
    /// Pool with `lambda_pool` iff a two-sample Wald screen at `alpha_pool` fails to reject.
    TestThenPool {
        /// Screening level.
        alpha_pool: f64,
        /// Discount applied when pooling.
        lambda_pool: f64,
    },
    /// Power prior with fixed discount.
    PowerPrior {
        /// λ ∈ [0, 1].
        lambda: f64,
    },
    /// Commensurate prior with precision τ.
    Commensurate {
        /// τ > 0.
        tau: f64,
    },
    /// Robust mixture prior: informative discounted components plus a vague one.
    RobustMap {
        /// Prior weight of the vague component, in (0, 1).
        epsilon: f64,
        /// Discounts of the equally weighted informative components.
        discounts: Vec<f64>,
    },
    /// Elastic prior with `g(T) = exp(−T²/(2·scale²))`.
    Elastic {
        /// Width of `g`.
        scale: f64,
    },
    /// Unit-information prior carrying `m` subjects' worth of information.
    Uip {
        /// M ≥ 0.
        m: f64,
    },
    /// Two-model exchangeability average.
    Mem {
        /// Prior probability that the source is exchangeable.
        inclusion: f64,
    },
}

impl BaselineSpec {
    /// The hyperparameters used in the reference comparison.
    pub fn reference_set() -> Vec<BaselineSpec> {
        vec![
            BaselineSpec::CurrentOnly,
            BaselineSpec::NaivePool,
            BaselineSpec::FixedLambda { lambda: 0.5 },
            BaselineSpec::TestThenPool { alpha_pool: 0.1, lambda_pool: 1.0 },
            BaselineSpec::PowerPrior { lambda: 0.5 },
            BaselineSpec::Commensurate { tau: 1.0 },
            BaselineSpec::RobustMap { epsilon: 0.2, discounts: vec![0.25, 1.0] },
            BaselineSpec::Elastic { scale: 1.0 },
            BaselineSpec::Uip { m: 100.0 },
            BaselineSpec::Mem { inclusion: 0.5 },
        ]
    }

    /// True for rules whose decision is a posterior tail probability.
    pub fn is_bayesian(&self) -> bool {
        !matches!(
            self,
            BaselineSpec::CurrentOnly
                | BaselineSpec::NaivePool
                | BaselineSpec::FixedLambda { .. }
                | BaselineSpec::TestThenPool { .. }
        )
    }

    /// Checks hyperparameter ranges.
    pub fn validate(&self) -> Result<()> {
        let fin = |x: f64| x.is_finite();
        let ok = match self {
            BaselineSpec::CurrentOnly | BaselineSpec::NaivePool => true,
            BaselineSpec::FixedLambda { lambda } => fin(*lambda) && *lambda >= 0.0,
            BaselineSpec::TestThenPool { alpha_pool, lambda_pool } => {
                *alpha_pool > 0.0 && *alpha_pool < 1.0 && fin(*lambda_pool) && *lambda_pool >= 0.0
            }
            BaselineSpec::PowerPrior { lambda } => (0.0..=1.0).contains(lambda),
            BaselineSpec::Commensurate { tau } => fin(*tau) && *tau > 0.0,
            BaselineSpec::RobustMap { epsilon, discounts } => {
                *epsilon > 0.0 && *epsilon < 1.0 && !discounts.is_empty() && discounts.iter().all(|&d| fin(d) && d > 0.0)
            }
            BaselineSpec::Elastic { scale } => fin(*scale) && *scale > 0.0,
            BaselineSpec::Uip { m } => fin(*m) && *m >= 0.0,
            BaselineSpec::Mem { inclusion } => (0.0..=1.0).contains(inclusion),
        };
        if !ok {
            return Err(invalid!("hyperparameters out of range for {self}"));
        }
        Ok(())
    }
}

impl fmt::Display for BaselineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineSpec::CurrentOnly => write!(f, "current_only"),
            BaselineSpec::NaivePool => write!(f, "naive_pool"),
            BaselineSpec::FixedLambda { lambda } => write!(f, "fixed_lambda({lambda})"),
            BaselineSpec::TestThenPool { alpha_pool, .. } => write!(f, "ttp({alpha_pool})"),
            BaselineSpec::PowerPrior { lambda } => write!(f, "power_prior({lambda})"),
            BaselineSpec::Commensurate { tau } => write!(f, "commensurate({tau})"),
            BaselineSpec::RobustMap { epsilon, .. } => write!(f, "robust_map({epsilon})"),
            BaselineSpec::Elastic { scale } => write!(f, "elastic({scale})"),
            BaselineSpec::Uip { m } => write!(f, "uip({m})"),
            BaselineSpec::Mem { inclusion } => write!(f, "mem({inclusion})"),
        }
    }
}

/// What a rule does to one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmBorrowing {
    /// Weight `w` in `(1 − w)Ȳ_C + w·center`.
    pub weight: f64,
    /// Effective external center (historical data, possibly blended with prior pseudo-data).
    pub center: f64,
    /// Part of the weight owed to historical observations alone.
    pub historical_weight: f64,
    /// `n_C · w/(1 − w)`, the λ·n_H implied by the weight.
    pub borrowed_size: f64,
    /// Arm estimate, equal to `(1 − w)Ȳ_C + w·center`.
    pub mean: f64,
    /// Sampling or posterior variance of the arm estimate.
    pub variance: f64,
    /// Posterior weight of the vague component (robust mixture only).
    pub vague_posterior: Option<f64>,
}

/// Rule output.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    /// Rule label.
    pub method: String,
    /// Per-arm borrowing.
    pub arms: Vec<ArmBorrowing>,
    /// `mean₁ − mean₀`.
    pub theta_hat: f64,
    /// Standard deviation of `theta_hat`.
    pub sd: f64,
    /// `theta_hat / sd`.
    pub statistic: f64,
    /// `1 − Φ(statistic)` (posterior `P(θ ≤ 0)` for Bayesian rules).
    pub p_value: f64,
    /// One-sided decision at α.
    pub reject: bool,
    /// Set when the rule needed historical data and the layout had none.
    pub degraded: bool,
}

impl BaselineResult {
    /// Total `Σ_a borrowed_size`.
    pub fn borrowed_size(&self) -> f64 {
        self.arms.iter().map(|a| a.borrowed_size).sum()
    }
}

/// Rejection region of the screen: pool iff `|t| ≤ z_{1−α/2}`.
pub fn pooling_indicator(t: f64, alpha_pool: f64) -> bool {
    t.abs() <= normal::z_upper(alpha_pool / 2.0)
}

/// Two-sample Wald statistic `(Ȳ_H − Ȳ_C)/sqrt(σ̂²_H/n_H + σ̂²_C/n_C)`.
pub fn conflict_statistic(current: &ArmSummary, hist: &ArmSummary) -> Result<f64> {
    let vc = gaussian_var(current, "current")? / current.n() as f64;
    let vh = gaussian_var(hist, "historical")? / hist.n() as f64;
    let d = hist.mean() - current.mean();
    let se = libm::sqrt(vc + vh);
    Ok(if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(d)
    })
}

/// Test-then-pool screen on the control arm (arm 0) of source 0.
pub fn ttp_screen(layout: &TrialLayout, alpha_pool: f64) -> Result<bool> {
    if !(alpha_pool > 0.0 && alpha_pool < 1.0) {
        return Err(invalid!("alpha_pool must lie in (0, 1)"));
    }
    let c = layout.current.first().ok_or_else(|| invalid!("layout has no control arm"))?;
    let h = layout.cell(0, 0).ok_or_else(|| invalid!("no historical control cell"))?;
    Ok(pooling_indicator(conflict_statistic(c, h)?, alpha_pool))
}

/// Commensurate-prior discount `σ²τ/(σ²τ + n_H)`.
pub fn commensurate_lambda(sigma2: f64, tau: f64, n_h: usize) -> f64 {
    let st = sigma2 * tau;
    st / (st + n_h as f64)
}

/// Elastic map `g(T) = exp(−T²/(2·scale²))`.
pub fn elastic_g(t: f64, scale: f64) -> f64 {
    libm::exp(-t * t / (2.0 * scale * scale))
}

fn gaussian_var(s: &ArmSummary, what: &str) -> Result<f64> {
    s.variance().ok_or_else(|| invalid!("{what} cell needs n >= 2 for this rule"))
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

fn beta_moments(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (a / s, a * b / (s * s * (s + 1.0)))
}

fn arm(weight: f64, center: f64, historical_weight: f64, mean: f64, variance: f64, n_c: usize) -> ArmBorrowing {
    ArmBorrowing {
        weight,
        center,
        historical_weight,
        borrowed_size: n_c as f64 * weight / (1.0 - weight),
        mean,
        variance,
        vague_posterior: None,
    }
}

/// Frequentist borrowing estimator at fixed λ.
fn ebw_arm(c: &ArmSummary, h: Option<&ArmSummary>, lambda: f64) -> Result<ArmBorrowing> {
    let vc = gaussian_var(c, "current")? / c.n() as f64;
    let Some(h) = h.filter(|_| lambda > 0.0) else {
        return Ok(arm(0.0, h.map_or(c.mean(), ArmSummary::mean), 0.0, c.mean(), vc, c.n()));
    };
    let bh = lambda * h.n() as f64;
    let w = bh / (c.n() as f64 + bh);
    let vh = gaussian_var(h, "historical")? / h.n() as f64;
    let mean = (1.0 - w) * c.mean() + w * h.mean();
    Ok(arm(w, h.mean(), w, mean, (1.0 - w) * (1.0 - w) * vc + w * w * vh, c.n()))
}

/// Beta(1, 1)-based power-prior posterior for a binary arm.
fn beta_power_arm(c: &ArmSummary, h: Option<&ArmSummary>, lambda: f64) -> ArmBorrowing {
    let s_c = c.n() as f64 * c.mean();
    let (bh, s_h) = match h {
        Some(h) => (lambda * h.n() as f64, lambda * h.n() as f64 * h.mean()),
        None => (0.0, 0.0),
    };
    let a = 1.0 + s_c + s_h;
    let b = 1.0 + (c.n() as f64 - s_c) + (bh - s_h);
    let (mean, var) = beta_moments(a, b);
    let total = a + b;
    let w = (bh + 2.0) / total;
    arm(w, (s_h + 1.0) / (bh + 2.0), bh / total, mean, var, c.n())
}

/// Flat-prior normal posterior with precision `(n_C + λ n_H)/σ̂²_C`.
fn normal_power_arm(c: &ArmSummary, h: Option<&ArmSummary>, lambda: f64) -> Result<ArmBorrowing> {
    let s2 = gaussian_var(c, "current")?;
    let Some(h) = h else {
        return Ok(arm(0.0, c.mean(), 0.0, c.mean(), s2 / c.n() as f64, c.n()));
    };
    let bh = lambda * h.n() as f64;
    let w = bh / (c.n() as f64 + bh);
    let mean = (1.0 - w) * c.mean() + w * h.mean();
    Ok(arm(w, h.mean(), w, mean, s2 / (c.n() as f64 + bh), c.n()))
}

fn power_arm(kind: OutcomeKind, c: &ArmSummary, h: Option<&ArmSummary>, lambda: f64) -> Result<ArmBorrowing> {
    match kind {
        OutcomeKind::Binary => Ok(beta_power_arm(c, h, lambda)),
        OutcomeKind::Continuous => normal_power_arm(c, h, lambda),
    }
}

/// Conjugate component posterior: prior weight, log marginal, weight, center,
/// historical weight, posterior mean and variance.
struct Component {
    log_prior: f64,
    log_marginal: f64,
    w: f64,
    center: f64,
    hist_w: f64,
    mean: f64,
    var: f64,
    vague: bool,
}

fn robust_map_arm(
    kind: OutcomeKind,
    c: &ArmSummary,
    h: Option<&ArmSummary>,
    epsilon: f64,
    discounts: &[f64],
) -> Result<ArmBorrowing> {
    let Some(h) = h else {
        return power_arm(kind, c, None, 0.0);
    };
    let k = discounts.len() as f64;
    let log_inf = libm::log((1.0 - epsilon) / k);
    let n_c = c.n() as f64;
    let mut comps = Vec::with_capacity(discounts.len() + 1);
    match kind {
        OutcomeKind::Binary => {
            let s_c = n_c * c.mean();
            let f_c = n_c - s_c;
            let mut push = |a: f64, b: f64, log_prior: f64, hist: f64, vague: bool| {
                let total = a + b + n_c;
                let (mean, var) = beta_moments(a + s_c, b + f_c);
                comps.push(Component {
                    log_prior,
                    log_marginal: ln_beta(a + s_c, b + f_c) - ln_beta(a, b),
                    w: (a + b) / total,
                    center: a / (a + b),
                    hist_w: hist / total,
                    mean,
                    var,
                    vague,
                });
            };
            let n_h = h.n() as f64;
            let s_h = n_h * h.mean();
            for &d in discounts {
                push(1.0 + d * s_h, 1.0 + d * (n_h - s_h), log_inf, d * n_h, false);
            }
            push(1.0, 1.0, libm::log(epsilon), 0.0, true);
        }
        OutcomeKind::Continuous => {
            let v_c = gaussian_var(c, "current")? / n_c;
            let s2_h = gaussian_var(h, "historical")?;
            let mut push = |v: f64, log_prior: f64, vague: bool| {
                let w = v_c / (v + v_c);
                comps.push(Component {
                    log_prior,
                    log_marginal: normal::ln_pdf(c.mean(), h.mean(), v + v_c),
                    w,
                    center: h.mean(),
                    hist_w: if vague { 0.0 } else { w },
                    mean: (1.0 - w) * c.mean() + w * h.mean(),
                    var: v * v_c / (v + v_c),
                    vague,
                });
            };
            for &d in discounts {
                push(s2_h / (d * h.n() as f64), log_inf, false);
            }
            // Unit-information vague component.
            push(v_c * n_c, libm::log(epsilon), true);
        }
    }
    let top = comps.iter().map(|c| c.log_prior + c.log_marginal).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = comps.iter().map(|c| libm::exp(c.log_prior + c.log_marginal - top)).collect();
    let z: f64 = raw.iter().sum();
    let post: Vec<f64> = raw.iter().map(|r| r / z).collect();
    if !post.iter().all(|p| p.is_finite()) {
        return Err(numerical!("robust mixture posterior weights are not finite"));
    }
    let mut w = 0.0;
    let mut wm = 0.0;
    let mut hist_w = 0.0;
    let mut mean = 0.0;
    let mut vague = 0.0;
    for (comp, &p) in comps.iter().zip(&post) {
        w += p * comp.w;
        wm += p * comp.w * comp.center;
        hist_w += p * comp.hist_w;
        mean += p * comp.mean;
        if comp.vague {
            vague += p;
        }
    }
    let var: f64 = comps.iter().zip(&post).map(|(c, &p)| p * (c.var + (c.mean - mean) * (c.mean - mean))).sum();
    let center = if w > 0.0 { wm / w } else { h.mean() };
    let mut out = arm(w, center, hist_w, mean, var, c.n());
    out.vague_posterior = Some(vague);
    Ok(out)
}

fn uip_arm(kind: OutcomeKind, c: &ArmSummary, h: Option<&ArmSummary>, m: f64) -> Result<ArmBorrowing> {
    let Some(h) = h else {
        return power_arm(kind, c, None, 0.0);
    };
    let n_c = c.n() as f64;
    match kind {
        OutcomeKind::Continuous => {
            let s2_c = gaussian_var(c, "current")?;
            let s2_h = gaussian_var(h, "historical")?;
            if s2_h <= 0.0 {
                return Err(numerical!("unit-information prior needs a positive historical variance"));
            }
            let n0 = m * s2_c / s2_h;
            let w = n0 / (n_c + n0);
            let mean = (1.0 - w) * c.mean() + w * h.mean();
            Ok(arm(w, h.mean(), w, mean, s2_c / (n_c + n0), c.n()))
        }
        OutcomeKind::Binary => {
            if m <= 1.0 {
                return Err(invalid!("binary unit-information prior needs M > 1, got {m}"));
            }
            // Moment matching with η² = μ(1−μ)/M gives α + β = M − 1.
            let n0 = m - 1.0;
            let s_c = n_c * c.mean();
            let (a, b) = (h.mean() * n0 + s_c, (1.0 - h.mean()) * n0 + (n_c - s_c));
            let (mean, var) = beta_moments(a, b);
            let w = n0 / (n_c + n0);
            Ok(arm(w, h.mean(), w, mean, var, c.n()))
        }
    }
}

fn commensurate_arm(c: &ArmSummary, h: Option<&ArmSummary>, tau: f64) -> Result<ArmBorrowing> {
    let s2 = gaussian_var(c, "current")?;
    let lambda = h.map_or(0.0, |h| commensurate_lambda(s2, tau, h.n()));
    normal_power_arm(c, h, lambda)
}

fn elastic_arm(kind: OutcomeKind, c: &ArmSummary, h: Option<&ArmSummary>, scale: f64) -> Result<ArmBorrowing> {
    let Some(h) = h else {
        return power_arm(kind, c, None, 0.0);
    };
    let g = elastic_g(conflict_statistic(c, h)?, scale);
    match kind {
        OutcomeKind::Binary => Ok(beta_power_arm(c, Some(h), g)),
        OutcomeKind::Continuous => {
            let s2_h = gaussian_var(h, "historical")?;
            if s2_h <= 0.0 {
                return Err(numerical!("elastic prior needs a positive historical variance"));
            }
            normal_power_arm(c, Some(h), g * gaussian_var(c, "current")? / s2_h)
        }
    }
}

fn mem_arm(c: &ArmSummary, h: Option<&ArmSummary>, inclusion: f64) -> Result<ArmBorrowing> {
    let v_c = gaussian_var(c, "current")? / c.n() as f64;
    let Some(h) = h else {
        return Ok(arm(0.0, c.mean(), 0.0, c.mean(), v_c, c.n()));
    };
    let v_h = gaussian_var(h, "historical")? / h.n() as f64;
    let v = v_c + v_h;
    if v <= 0.0 {
        return Err(numerical!("exchangeability model has zero variance"));
    }
    // Marginal of the separate model integrates to one under flat priors.
    let log_odds = libm::log(inclusion) - libm::log(1.0 - inclusion) + normal::ln_pdf(h.mean(), c.mean(), v);
    let omega = if log_odds >= 0.0 {
        1.0 / (1.0 + libm::exp(-log_odds))
    } else {
        let e = libm::exp(log_odds);
        e / (1.0 + e)
    };
    let w1 = v_c / v;
    let m1 = (1.0 - w1) * c.mean() + w1 * h.mean();
    let var1 = v_c * v_h / v;
    let mean = omega * m1 + (1.0 - omega) * c.mean();
    let var = omega * (var1 + (m1 - mean) * (m1 - mean)) + (1.0 - omega) * (v_c + (c.mean() - mean) * (c.mean() - mean));
    let w = omega * w1;
    Ok(arm(w, h.mean(), w, mean, var, c.n()))
}

fn arm_for(spec: &BaselineSpec, kind: OutcomeKind, c: &ArmSummary, h: Option<&ArmSummary>) -> Result<ArmBorrowing> {
    match spec {
        BaselineSpec::CurrentOnly => ebw_arm(c, h, 0.0),
        BaselineSpec::NaivePool => ebw_arm(c, h, 1.0),
        BaselineSpec::FixedLambda { lambda } => ebw_arm(c, h, *lambda),
        BaselineSpec::TestThenPool { alpha_pool, lambda_pool } => {
            let pool = match h {
                Some(h) => pooling_indicator(conflict_statistic(c, h)?, *alpha_pool),
                None => false,
            };
            ebw_arm(c, h, if pool { *lambda_pool } else { 0.0 })
        }
        BaselineSpec::PowerPrior { lambda } => power_arm(kind, c, h, *lambda),
        BaselineSpec::Commensurate { tau } => commensurate_arm(c, h, *tau),
        BaselineSpec::RobustMap { epsilon, discounts } => robust_map_arm(kind, c, h, *epsilon, discounts),
        BaselineSpec::Elastic { scale } => elastic_arm(kind, c, h, *scale),
        BaselineSpec::Uip { m } => uip_arm(kind, c, h, *m),
        BaselineSpec::Mem { inclusion } => mem_arm(c, h, *inclusion),
    }
}

/// Runs one rule on a two-arm, at most single-source layout.
pub fn run_baseline(spec: &BaselineSpec, layout: &TrialLayout, alpha: f64) -> Result<BaselineResult> {
    spec.validate()?;
    crate::robust::check_alpha(alpha)?;
    layout.require_two_arms()?;
    layout.validate()?;
    if layout.sources() > 1 {
        return Err(invalid!("baseline rules take at most one historical source, got {}", layout.sources()));
    }
    let degraded = *spec != BaselineSpec::CurrentOnly && layout.has_no_history();
    let effective = if degraded { &BaselineSpec::CurrentOnly } else { spec };
    let mut arms = Vec::with_capacity(2);
    for a in 0..2 {
        arms.push(arm_for(effective, layout.kind, &layout.current[a], layout.cell(0, a))?);
    }
    let theta_hat = arms[1].mean - arms[0].mean;
    let var = arms[0].variance + arms[1].variance;
    if !(var.is_finite() && var > 0.0) {
        return Err(numerical!("{spec}: degenerate variance {var}"));
    }
    let sd = libm::sqrt(var);
    let statistic = theta_hat / sd;
    Ok(BaselineResult {
        method: alloc::format!("{spec}"),
        arms,
        theta_hat,
        sd,
        statistic,
        p_value: normal::sf(statistic),
        reject: statistic >= normal::z_upper(alpha),
        degraded,
    })
}

/// Historical weights implied by a rule, as a [`WeightProfile`].
pub fn effective_weight_of(spec: &BaselineSpec, layout: &TrialLayout) -> Result<WeightProfile> {
    let r = run_baseline(spec, layout, 0.025)?;
    let hist: Vec<f64> = r.arms.iter().map(|a| a.historical_weight).collect();
    Ok(WeightProfile {
        current: hist.iter().map(|w| 1.0 - w).collect(),
        historical: if layout.sources() == 1 { vec![hist] } else { Vec::new() },
    })
}
