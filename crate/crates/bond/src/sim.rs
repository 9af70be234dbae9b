//! Simulated current/historical trials and Monte Carlo operating characteristics.

use std::fmt;
use std::str::FromStr;

use bond_core::transport::estimate_radii;
use bond_core::{
    run_baseline, run_bond, BaselineSpec, BorrowConfig, Error, OutcomeKind, RadiusProvenance, RadiusSpec,
    Result, SampleSet, TrialLayout,
};
use rayon::prelude::*;

use crate::rng::{derive_seed, Stream};

/// Heterogeneity pattern between the historical and current populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Same population, both historical arms.
    Commensurate,
    /// Historical covariates shifted by `γ·1` with treatment-covariate interaction.
    CovshiftEffectmod,
    /// Historical controls only, shifted by `γ`.
    ControlDrift,
}

impl Scenario {
    /// Every scenario in reporting order.
    pub const ALL: [Scenario; 3] = [Scenario::Commensurate, Scenario::CovshiftEffectmod, Scenario::ControlDrift];

    fn id(self) -> u64 {
        match self {
            Scenario::Commensurate => 0,
            Scenario::CovshiftEffectmod => 1,
            Scenario::ControlDrift => 2,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Commensurate => "commensurate",
            Scenario::CovshiftEffectmod => "covshift_effectmod",
            Scenario::ControlDrift => "control_drift",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "commensurate" => Ok(Scenario::Commensurate),
            "covshift_effectmod" | "covshift" => Ok(Scenario::CovshiftEffectmod),
            "control_drift" | "drift" => Ok(Scenario::ControlDrift),
            _ => Err(Error::Invalid(format!("unknown scenario {s:?}"))),
        }
    }
}

/// Parameters of the linear-predictor model
/// `η = β₀ + Xᵀβ + θA + A·Xᵀη_mod + u₀ + (u₁ − u₀)A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub kind: OutcomeKind,
    pub gamma: f64,
    pub n_current: usize,
    pub n_historical: usize,
    /// P(A = 1) in sources with both arms.
    pub allocation: f64,
    pub beta0: f64,
    pub beta: [f64; 2],
    /// Effect modification `η_mod`.
    pub eta: [f64; 2],
    /// Direction `m` of the historical covariate shift `γm`.
    pub shift: [f64; 2],
    /// Historical drifts `(u_{H,0}, u_{H,1})`.
    pub drift: [f64; 2],
    /// Noise sd for continuous outcomes.
    pub sigma: f64,
    /// Treatment main effect on the link scale.
    pub theta: f64,
    pub historical_treatment: bool,
}

impl ScenarioConfig {
    /// Standard design: `n_C = 200`, `n_H = 500`, 1:1 allocation, `β = (0.5, 0.5)`,
    /// `β₀ = 0` (continuous, `σ = 1`) or `−1` (binary), `θ = 0`.
    pub fn new(scenario: Scenario, kind: OutcomeKind, gamma: f64) -> Result<Self> {
        let (shift, eta, drift, historical_treatment) = match scenario {
            Scenario::Commensurate => ([0.0; 2], [0.0; 2], [0.0; 2], true),
            Scenario::CovshiftEffectmod => ([1.0; 2], [0.3; 2], [0.0; 2], true),
            Scenario::ControlDrift => ([0.0; 2], [0.0; 2], [gamma, 0.0], false),
        };
        let c = ScenarioConfig {
            scenario,
            kind,
            gamma,
            n_current: 200,
            n_historical: 500,
            allocation: 0.5,
            beta0: if kind == OutcomeKind::Binary { -1.0 } else { 0.0 },
            beta: [0.5, 0.5],
            eta,
            shift,
            drift,
            sigma: 1.0,
            theta: 0.0,
            historical_treatment,
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks ranges and the scenario's structural constraints.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("scenario config: {m}")));
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad("gamma must be finite and >= 0");
        }
        if self.n_current < 4 || self.n_historical < 2 {
            return bad("need n_current >= 4 and n_historical >= 2");
        }
        if !(self.allocation > 0.0 && self.allocation < 1.0) {
            return bad("allocation must lie in (0, 1)");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad("sigma must be finite and > 0");
        }
        let finite = [self.beta0, self.theta]
            .iter()
            .chain(&self.beta)
            .chain(&self.eta)
            .chain(&self.shift)
            .chain(&self.drift)
            .all(|v| v.is_finite());
        if !finite {
            return bad("coefficients must be finite");
        }
        match self.scenario {
            Scenario::ControlDrift if self.historical_treatment || self.drift != [self.gamma, 0.0] => {
                bad("control_drift needs historical controls only and drift (gamma, 0)")
            }
            Scenario::CovshiftEffectmod if self.shift != [1.0; 2] || self.eta != [0.3; 2] => {
                bad("covshift_effectmod needs shift (1, 1) and effect modification (0.3, 0.3)")
            }
            Scenario::Commensurate if self.shift != [0.0; 2] || self.eta != [0.0; 2] || self.drift != [0.0; 2] => {
                bad("commensurate needs no shift, no effect modification and no drift")
            }
            _ => Ok(()),
        }
    }

    /// Linear predictor for a subject; `historical` selects the shifted population.
    fn predictor(&self, x: [f64; 2], treated: bool, historical: bool) -> f64 {
        let mut eta = self.beta0 + x[0] * self.beta[0] + x[1] * self.beta[1];
        if treated {
            eta += self.theta + x[0] * self.eta[0] + x[1] * self.eta[1];
        }
        if historical {
            eta += if treated { self.drift[1] } else { self.drift[0] };
        }
        eta
    }

    fn covariates(&self, s: &mut Stream, historical: bool) -> [f64; 2] {
        let off = if historical { self.gamma } else { 0.0 };
        [s.normal() + off * self.shift[0], s.normal() + off * self.shift[1]]
    }

    fn outcome(&self, s: &mut Stream, eta: f64) -> f64 {
        match self.kind {
            OutcomeKind::Continuous => eta + self.sigma * s.normal(),
            OutcomeKind::Binary => s.bernoulli(expit(eta)) as u8 as f64,
        }
    }

    /// Law of the linear predictor in one (population, arm) cell: `N(μ, s²)`.
    fn cell_moments(&self, treated: bool, historical: bool) -> (f64, f64) {
        let t = treated as u8 as f64;
        let coef = [self.beta[0] + t * self.eta[0], self.beta[1] + t * self.eta[1]];
        let mean_x = if historical { self.gamma } else { 0.0 };
        let mu = self.predictor([mean_x * self.shift[0], mean_x * self.shift[1]], treated, historical);
        (mu, (coef[0] * coef[0] + coef[1] * coef[1]).sqrt())
    }
}

/// Logistic function.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// One simulated data set with its summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub samples: SampleSet,
    pub layout: TrialLayout,
}

/// Draws a current two-arm trial and one historical source.
pub fn generate_trial(config: &ScenarioConfig, seed: u64) -> Result<Trial> {
    config.validate()?;
    let mut s = Stream::new(seed);
    let mut current = vec![Vec::new(), Vec::new()];
    for _ in 0..config.n_current {
        let treated = s.bernoulli(config.allocation);
        let x = config.covariates(&mut s, false);
        let y = config.outcome(&mut s, config.predictor(x, treated, false));
        current[treated as usize].push(y);
    }
    let mut hist = vec![Vec::new(), Vec::new()];
    for _ in 0..config.n_historical {
        let treated = config.historical_treatment && s.bernoulli(config.allocation);
        let x = config.covariates(&mut s, true);
        let y = config.outcome(&mut s, config.predictor(x, treated, true));
        hist[treated as usize].push(y);
    }
    if current.iter().any(|a| a.len() < 2) {
        return Err(Error::Numerical("a current arm received fewer than 2 subjects".into()));
    }
    let samples = SampleSet {
        current,
        historical: vec![hist.into_iter().map(|h| (!h.is_empty()).then_some(h)).collect()],
    };
    let layout = samples.summarize(config.kind)?;
    Ok(Trial { samples, layout })
}

const ORACLE_TAG: u64 = 0x0AC1E;
const THETA_TAG: u64 = 0x7E7A;

/// `E[expit(μ + sZ)]` by Monte Carlo with a fixed stream.
fn expit_mean(mu: f64, sd: f64, draws: usize, seed: u64) -> f64 {
    let mut s = Stream::new(seed);
    (0..draws).map(|_| expit(mu + sd * s.normal())).sum::<f64>() / draws as f64
}

/// Marginal risk difference in the current population at link offset `theta`,
/// evaluated on a fixed set of covariate draws.
fn risk_difference(config: &ScenarioConfig, theta: f64, xs: &[[f64; 2]]) -> f64 {
    let c = ScenarioConfig { theta, ..config.clone() };
    let total: f64 = xs.iter().map(|&x| expit(c.predictor(x, true, false)) - expit(c.predictor(x, false, false))).sum();
    total / xs.len() as f64
}

/// Link-scale `θ` whose marginal current-trial risk difference equals `target`.
///
/// Bisection on `[−20, 20]` over a fixed Monte Carlo sample of covariates, so
/// the map from `θ` to the risk difference is smooth and monotone.
pub fn calibrate_binary_theta(config: &ScenarioConfig, target: f64, mc_draws: usize, tol: f64, seed: u64) -> Result<f64> {
    config.validate()?;
    if target.is_nan() || target.abs() >= 1.0 {
        return Err(Error::Invalid(format!("target risk difference {target} is not achievable")));
    }
    if mc_draws < 100_000 {
        return Err(Error::Invalid(format!("need at least 1e5 draws, got {mc_draws}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Invalid("tolerance must be > 0".into()));
    }
    if target == 0.0 && config.eta == [0.0; 2] {
        return Ok(0.0);
    }
    let mut s = Stream::new(derive_seed(&[THETA_TAG, seed]));
    let xs: Vec<[f64; 2]> = (0..mc_draws).map(|_| [s.normal(), s.normal()]).collect();
    let (mut lo, mut hi) = (-20.0, 20.0);
    let f = |t: f64| risk_difference(config, t, &xs) - target;
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::Numerical(format!("risk difference {target} is not bracketed by [-20, 20]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() <= tol || hi - lo < 1e-12 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-arm population means `(current, historical)`; historical is `None`
/// for an absent arm.
pub fn population_means(config: &ScenarioConfig, mc_draws: usize) -> [(f64, Option<f64>); 2] {
    let mean = |treated: bool, historical: bool| {
        let (mu, sd) = config.cell_moments(treated, historical);
        match config.kind {
            OutcomeKind::Continuous => mu,
            OutcomeKind::Binary => {
                let seed = derive_seed(&[ORACLE_TAG, mu.to_bits(), sd.to_bits()]);
                expit_mean(mu, sd, mc_draws, seed)
            }
        }
    };
    [
        (mean(false, false), Some(mean(false, true))),
        (mean(true, false), config.historical_treatment.then(|| mean(true, true))),
    ]
}

/// Oracle radii `ρ_a = |μ_H^a − μ_C^a|` under the given configuration.
pub fn oracle_radii(config: &ScenarioConfig, mc_draws: usize) -> Result<RadiusSpec> {
    let means = population_means(config, mc_draws);
    let row = means.iter().map(|(c, h)| h.map(|h| (h - c).abs())).collect();
    RadiusSpec::new(vec![row], RadiusProvenance::Fixed)
}

/// How BOND gets its radii inside a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusPolicy {
    /// True mean gaps under the null.
    Oracle,
    /// `c` times the empirical W1 distance.
    DataDriven { c: f64 },
}

impl fmt::Display for RadiusPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusPolicy::Oracle => f.write_str("oracle"),
            RadiusPolicy::DataDriven { c } => write!(f, "data:{c}"),
        }
    }
}

impl FromStr for RadiusPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "oracle" {
            return Ok(RadiusPolicy::Oracle);
        }
        let c = s
            .strip_prefix("data:")
            .and_then(|c| c.parse::<f64>().ok())
            .ok_or_else(|| Error::Invalid(format!("radius policy must be oracle or data:<c>, got {s:?}")))?;
        if !(c.is_finite() && c >= 1.0) {
            return Err(Error::Invalid(format!("inflation c must be >= 1, got {c}")));
        }
        Ok(RadiusPolicy::DataDriven { c })
    }
}

/// A method compared in the simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// BOND with the run's radius policy.
    Bond,
    /// A classical borrowing rule.
    Baseline(BaselineSpec),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Bond => f.write_str("bond"),
            Method::Baseline(b) => b.fmt(f),
        }
    }
}

impl Method {
    /// BOND followed by the reference baselines.
    pub fn all() -> Vec<Method> {
        std::iter::once(Method::Bond).chain(BaselineSpec::reference_set().into_iter().map(Method::Baseline)).collect()
    }

    /// Parses a comma-separated list such as `bond,current_only,fixed_lambda(0.25)`.
    ///
    /// A bare name takes its reference hyperparameter; `all` expands to [`Method::all`].
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if tok == "all" {
                out.extend(Method::all());
            } else {
                out.push(tok.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Invalid("method list is empty".into()));
        }
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(tok: &str) -> Result<Self> {
        let (name, arg) = match tok.split_once('(') {
            Some((n, rest)) => {
                let v = rest
                    .strip_suffix(')')
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::Invalid(format!("bad method argument in {tok:?}")))?;
                (n, Some(v))
            }
            None => (tok, None),
        };
        let or = |d: f64| arg.unwrap_or(d);
        let spec = match name {
            "bond" if arg.is_none() => return Ok(Method::Bond),
            "current_only" if arg.is_none() => BaselineSpec::CurrentOnly,
            "naive_pool" if arg.is_none() => BaselineSpec::NaivePool,
            "fixed_lambda" => BaselineSpec::FixedLambda { lambda: or(0.5) },
            "ttp" => BaselineSpec::TestThenPool { alpha_pool: or(0.1), lambda_pool: 1.0 },
            "power_prior" => BaselineSpec::PowerPrior { lambda: or(0.5) },
            "commensurate" => BaselineSpec::Commensurate { tau: or(1.0) },
            "robust_map" => BaselineSpec::RobustMap { epsilon: or(0.2), discounts: vec![0.25, 1.0] },
            "elastic" => BaselineSpec::Elastic { scale: or(1.0) },
            "uip" => BaselineSpec::Uip { m: or(100.0) },
            "mem" => BaselineSpec::Mem { inclusion: or(0.5) },
            _ => return Err(Error::Invalid(format!("unknown method {tok:?}"))),
        };
        spec.validate()?;
        Ok(Method::Baseline(spec))
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OcConfig {
    pub scenario: Scenario,
    pub kind: OutcomeKind,
    pub gammas: Vec<f64>,
    pub methods: Vec<Method>,
    pub reps_null: usize,
    pub reps_alt: usize,
    pub master_seed: u64,
    pub radius: RadiusPolicy,
    pub alpha: f64,
    /// Target effect; a risk difference for binary outcomes.
    pub theta1: f64,
    pub grid_points: usize,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    pub n_current: usize,
    pub n_historical: usize,
    /// Draws behind binary oracle means and the θ calibration.
    pub mc_draws: usize,
}

impl OcConfig {
    /// Desk-scale defaults: 4000/2000 reps, γ ∈ {0, 0.5, 1, 1.5, 2}, data-driven radii with c = 1.5.
    pub fn new(scenario: Scenario, kind: OutcomeKind) -> Self {
        OcConfig {
            scenario,
            kind,
            gammas: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            methods: Method::all(),
            reps_null: 4000,
            reps_alt: 2000,
            master_seed: 20240601,
            radius: RadiusPolicy::DataDriven { c: 1.5 },
            alpha: 0.025,
            theta1: 0.3,
            grid_points: 201,
            workers: 0,
            n_current: 200,
            n_historical: 500,
            mc_draws: 1_000_000,
        }
    }
}

/// An empirical rate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub hits: usize,
    pub reps: usize,
}

impl Rate {
    /// `hits / reps`.
    pub fn value(&self) -> f64 {
        self.hits as f64 / self.reps as f64
    }

    /// `sqrt(p̂(1 − p̂)/R)`.
    pub fn se(&self) -> f64 {
        let p = self.value();
        (p * (1.0 - p) / self.reps as f64).sqrt()
    }
}

/// Operating characteristics of one method at one γ.
#[derive(Debug, Clone, PartialEq)]
pub struct OcCell {
    pub gamma: f64,
    pub method: String,
    pub type1: Rate,
    pub power: Rate,
    /// Mean selected λ per arm over null replications (BOND only).
    pub mean_lambda: Option<[f64; 2]>,
    /// Mean historical weight per arm over null replications.
    pub mean_weight: [f64; 2],
}

/// All cells of a run, γ-major in grid order, methods in list order.
#[derive(Debug, Clone, PartialEq)]
pub struct OcResult {
    pub scenario: Scenario,
    pub kind: OutcomeKind,
    pub radius: RadiusPolicy,
    pub cells: Vec<OcCell>,
}

#[derive(Clone, Copy)]
struct Decision {
    reject: bool,
    lambda: [f64; 2],
    weight: [f64; 2],
}

struct Experiment<'a> {
    oc: &'a OcConfig,
    trial: ScenarioConfig,
    oracle: Option<RadiusSpec>,
    bond: BorrowConfig,
}

impl Experiment<'_> {
    fn decide(&self, seed: u64) -> Result<Vec<Decision>> {
        let t = generate_trial(&self.trial, seed)?;
        let mut radii = None;
        let mut out = Vec::with_capacity(self.oc.methods.len());
        for m in &self.oc.methods {
            out.push(match m {
                Method::Bond => {
                    let r = match (&radii, &self.oracle) {
                        (Some(r), _) => r,
                        (None, Some(o)) => o,
                        (None, None) => {
                            let c = match self.oc.radius {
                                RadiusPolicy::DataDriven { c } => c,
                                RadiusPolicy::Oracle => unreachable!(),
                            };
                            radii.insert(estimate_radii(&t.samples, c)?)
                        }
                    };
                    let (cal, test) = run_bond(&t.layout, r, &self.bond)?;
                    let lam = |a| cal.lambda.get(0, a);
                    Decision {
                        reject: test.reject,
                        lambda: [lam(0), lam(1)],
                        weight: [cal.weights.historical[0][0], cal.weights.historical[0][1]],
                    }
                }
                Method::Baseline(spec) => {
                    let r = run_baseline(spec, &t.layout, self.oc.alpha)?;
                    Decision {
                        reject: r.reject,
                        lambda: [f64::NAN; 2],
                        weight: [r.arms[0].historical_weight, r.arms[1].historical_weight],
                    }
                }
            });
        }
        Ok(out)
    }
}

fn scenario_for(oc: &OcConfig, gamma: f64) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::new(oc.scenario, oc.kind, gamma)?;
    c.n_current = oc.n_current;
    c.n_historical = oc.n_historical;
    c.validate()?;
    Ok(c)
}

/// Link-scale effects for the null and alternative experiments. The current
/// population does not depend on γ, so one calibration serves the whole grid.
fn thetas(oc: &OcConfig) -> Result<[f64; 2]> {
    match oc.kind {
        OutcomeKind::Continuous => Ok([0.0, oc.theta1]),
        OutcomeKind::Binary => {
            let base = scenario_for(oc, 0.0)?;
            let draws = oc.mc_draws.max(100_000);
            Ok([
                calibrate_binary_theta(&base, 0.0, draws, 1e-5, oc.master_seed)?,
                calibrate_binary_theta(&base, oc.theta1, draws, 1e-5, oc.master_seed)?,
            ])
        }
    }
}

/// Runs every (γ, method) cell.
///
/// Replication `r` of experiment `e` (0 = null, 1 = alternative) at γ draws
/// its data from a seed derived from `(master_seed, scenario, γ, e, r)`, and
/// every method sees the same data. Averages are accumulated in replication
/// order, so the result is the same for any worker count.
pub fn run_oc(oc: &OcConfig) -> Result<OcResult> {
    if oc.reps_null < 100 || oc.reps_alt < 100 {
        return Err(Error::Invalid("need at least 100 replications per experiment".into()));
    }
    if oc.gammas.is_empty() || oc.methods.is_empty() {
        return Err(Error::Invalid("gamma grid and method list must be nonempty".into()));
    }
    let mut bond = BorrowConfig::new(oc.alpha, oc.theta1)?;
    bond.grid_points = oc.grid_points;
    bond.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(oc.workers)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;

    let th = thetas(oc)?;
    let mut cells = Vec::with_capacity(oc.gammas.len() * oc.methods.len());
    for &gamma in &oc.gammas {
        let base = scenario_for(oc, gamma)?;
        let null = ScenarioConfig { theta: th[0], ..base.clone() };
        let oracle = match oc.radius {
            RadiusPolicy::Oracle => Some(oracle_radii(&null, oc.mc_draws)?),
            RadiusPolicy::DataDriven { .. } => None,
        };
        let mut per_exp = Vec::with_capacity(2);
        for (e, reps) in [oc.reps_null, oc.reps_alt].into_iter().enumerate() {
            let ex = Experiment {
                oc,
                trial: ScenarioConfig { theta: th[e], ..base.clone() },
                oracle: oracle.clone(),
                bond: bond.clone(),
            };
            let seeds: Vec<u64> = (0..reps as u64)
                .map(|r| derive_seed(&[oc.master_seed, oc.scenario.id(), gamma.to_bits(), e as u64, r]))
                .collect();
            let reps: Vec<Vec<Decision>> =
                pool.install(|| seeds.par_iter().map(|&s| ex.decide(s)).collect::<Result<_>>())?;
            per_exp.push(reps);
        }
        for (m, method) in oc.methods.iter().enumerate() {
            let hits = |e: usize| per_exp[e].iter().filter(|d| d[m].reject).count();
            let mut lam = [0.0; 2];
            let mut wt = [0.0; 2];
            for d in &per_exp[0] {
                for a in 0..2 {
                    lam[a] += d[m].lambda[a];
                    wt[a] += d[m].weight[a];
                }
            }
            let r = per_exp[0].len() as f64;
            cells.push(OcCell {
                gamma,
                method: method.to_string(),
                type1: Rate { hits: hits(0), reps: oc.reps_null },
                power: Rate { hits: hits(1), reps: oc.reps_alt },
                mean_lambda: matches!(method, Method::Bond).then(|| [lam[0] / r, lam[1] / r]),
                mean_weight: [wt[0] / r, wt[1] / r],
            });
        }
    }
    Ok(OcResult { scenario: oc.scenario, kind: oc.kind, radius: oc.radius, cells })
}

/// Worst case of one method over the γ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub method: String,
    pub max_type1: Rate,
    pub gamma_max_type1: f64,
    pub min_power: Rate,
    pub gamma_min_power: f64,
}

/// Maximum type I error and minimum power per method; ties keep the first γ.
pub fn worst_case_summary(result: &OcResult) -> Vec<WorstCase> {
    let mut out: Vec<WorstCase> = Vec::new();
    for c in &result.cells {
        match out.iter_mut().find(|w| w.method == c.method) {
            None => out.push(WorstCase {
                method: c.method.clone(),
                max_type1: c.type1,
                gamma_max_type1: c.gamma,
                min_power: c.power,
                gamma_min_power: c.gamma,
            }),
            Some(w) => {
                if c.type1.value() > w.max_type1.value() {
                    w.max_type1 = c.type1;
                    w.gamma_max_type1 = c.gamma;
                }
                if c.power.value() < w.min_power.value() {
                    w.min_power = c.power;
                    w.gamma_min_power = c.gamma;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_trial() {
        let c = ScenarioConfig::new(Scenario::CovshiftEffectmod, OutcomeKind::Binary, 0.5).unwrap();
        assert_eq!(generate_trial(&c, 9).unwrap(), generate_trial(&c, 9).unwrap());
        assert_ne!(generate_trial(&c, 9).unwrap(), generate_trial(&c, 10).unwrap());
    }

    #[test]
    fn drift_scenario_has_no_historical_treatment() {
        let c = ScenarioConfig::new(Scenario::ControlDrift, OutcomeKind::Continuous, 0.7).unwrap();
        let t = generate_trial(&c, 1).unwrap();
        assert!(t.layout.cell(0, 1).is_none());
        assert_eq!(t.layout.cell(0, 0).unwrap().n(), 500);
        let mut bad = c.clone();
        bad.historical_treatment = true;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn oracle_radii_vanish_at_zero() {
        for s in Scenario::ALL {
            for kind in [OutcomeKind::Continuous, OutcomeKind::Binary] {
                let c = ScenarioConfig::new(s, kind, 0.0).unwrap();
                let r = oracle_radii(&c, 100_000).unwrap();
                assert!(r.cells()[0].iter().flatten().all(|&v| v == 0.0), "{s} {kind}");
            }
        }
        let c = ScenarioConfig::new(Scenario::CovshiftEffectmod, OutcomeKind::Continuous, 1.0).unwrap();
        let r = oracle_radii(&c, 0).unwrap();
        assert!((r.get(0, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!((r.get(0, 1).unwrap() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn method_lists() {
        let m = Method::parse_list("bond, current_only,fixed_lambda(0.25)").unwrap();
        assert_eq!(m[2], Method::Baseline(BaselineSpec::FixedLambda { lambda: 0.25 }));
        assert_eq!(Method::parse_list("all").unwrap().len(), 11);
        assert!(Method::parse_list("bogus").is_err());
        assert!(Method::parse_list("power_prior(2)").is_err());
        assert_eq!("data:1.5".parse::<RadiusPolicy>().unwrap(), RadiusPolicy::DataDriven { c: 1.5 });
        assert!("data:0.5".parse::<RadiusPolicy>().is_err());
    }

    #[test]
    fn worst_case_keeps_first_tie() {
        let cell = |gamma, t1, pw| OcCell {
            gamma,
            method: "m".into(),
            type1: Rate { hits: t1, reps: 100 },
            power: Rate { hits: pw, reps: 100 },
            mean_lambda: None,
            mean_weight: [0.0; 2],
        };
        let r = OcResult {
            scenario: Scenario::Commensurate,
            kind: OutcomeKind::Continuous,
            radius: RadiusPolicy::Oracle,
            cells: vec![cell(0.0, 2, 50), cell(1.0, 5, 40), cell(2.0, 5, 40)],
        };
        let w = &worst_case_summary(&r)[0];
        assert_eq!((w.gamma_max_type1, w.gamma_min_power), (1.0, 1.0));
        assert_eq!(w.max_type1.hits, 5);
    }
}
