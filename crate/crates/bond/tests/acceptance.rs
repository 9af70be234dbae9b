//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::path::PathBuf;
use std::time::Instant;

use bond::cli;
use bond::input::{Analysis, AnalysisFile};
use bond::rng::Stream;
use bond::sim::{self, Method, OcConfig, RadiusPolicy, Scenario};
use bond_core::ebw::{self, weight, weight_inverse, BorrowParams, VarianceSource};
use bond_core::multisource::{self, Contrast};
use bond_core::normal;
use bond_core::robust::{bias_minus, bias_plus, test_one_sided, test_two_sided};
use bond_core::summary::summarize;
use bond_core::transport::{shift_bounds, w1_empirical};
use bond_core::{
    run_baseline, run_bond, select_lambda, sensitivity_sweep, ArmSummary, BaselineSpec, Correction, CorrectionMode,
    HistoricalSource, OutcomeKind, RadiusProvenance, RadiusSpec, TrialLayout, WeightProfile,
};
use minilp::{ComparisonOp, OptimizationDirection, Problem};

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, checks: &[(String, bool)], started: Instant) {
        let ok = checks.iter().all(|c| c.1);
        if !ok {
            self.failed.push(id);
        }
        println!("criterion {id} [{}] {name} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, started.elapsed().as_secs_f64());
        for (what, pass) in checks {
            println!("    {} {what}", if *pass { "ok  " } else { "FAIL" });
        }
    }
}

fn check(what: impl Into<String>, pass: bool) -> (String, bool) {
    (what.into(), pass)
}

fn within(label: &str, got: f64, target: f64, tol: f64) -> (String, bool) {
    check(format!("{label} = {got:.6} (target {target} ± {tol})"), (got - target).abs() <= tol)
}

struct Gen(Stream);

impl Gen {
    fn f(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.uniform()
    }
    fn n(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.uniform() * (hi - lo) as f64) as usize
    }
    fn coin(&mut self, p: f64) -> bool {
        self.0.bernoulli(p)
    }
    fn kind(&mut self) -> OutcomeKind {
        if self.coin(0.5) {
            OutcomeKind::Binary
        } else {
            OutcomeKind::Continuous
        }
    }
    /// Summaries with `n ≥ 2` and, for binary, successes strictly inside `(0, n)`.
    fn arm(&mut self, kind: OutcomeKind) -> ArmSummary {
        let n = self.n(20, 400);
        match kind {
            OutcomeKind::Binary => ArmSummary::binary(n, self.n(1, n)).unwrap(),
            OutcomeKind::Continuous => ArmSummary::new(n, self.f(-1.0, 1.0), Some(self.f(0.1, 3.0))).unwrap(),
        }
    }
    fn layout(&mut self, kind: OutcomeKind, arms: usize, sources: usize, p_cell: f64) -> TrialLayout {
        let current = (0..arms).map(|_| self.arm(kind)).collect();
        let historical = (0..sources)
            .map(|k| HistoricalSource::new(format!("h{k}"), (0..arms).map(|_| self.coin(p_cell).then(|| self.arm(kind))).collect()))
            .collect();
        TrialLayout::new(kind, current, historical)
    }
    fn radii(&mut self, layout: &TrialLayout, max: f64) -> RadiusSpec {
        let cells = layout.historical.iter().map(|s| s.arms.iter().map(|c| c.map(|_| self.f(0.0, max))).collect()).collect();
        RadiusSpec::new(cells, RadiusProvenance::Fixed).unwrap()
    }
    fn params(&mut self, layout: &TrialLayout) -> BorrowParams {
        BorrowParams::new((0..layout.sources()).map(|_| (0..layout.arms()).map(|_| self.f(0.0, 1.5)).collect()).collect())
            .unwrap()
    }
}

fn fixture() -> Analysis {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/orr_real_world.toml");
    AnalysisFile::parse(&std::fs::read_to_string(path).unwrap()).unwrap().resolve(None).unwrap()
}

/// Extremes of `Σ c_a w_{k,a} Δ_{k,a}` over the shift box, by visiting its vertices.
fn vertex_extremes(w: &WeightProfile, layout: &TrialLayout, radii: &RadiusSpec, coeffs: &[f64], plug_in: bool) -> (f64, f64) {
    let mut terms = Vec::new();
    for (k, row) in w.historical.iter().enumerate() {
        for (a, &wk) in row.iter().enumerate() {
            if wk == 0.0 || coeffs[a] == 0.0 {
                continue;
            }
            let (kind, mu) = if plug_in { (layout.kind, layout.current[a].mean()) } else { (OutcomeKind::Continuous, 0.0) };
            let b = shift_bounds(kind, mu, radii.get(k, a).unwrap()).unwrap();
            terms.push((coeffs[a] * wk, b.delta_minus, b.delta_plus));
        }
    }
    if terms.is_empty() {
        return (0.0, 0.0);
    }
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for mask in 0u32..1 << terms.len() {
        let v: f64 = terms.iter().enumerate().map(|(i, t)| t.0 * if mask >> i & 1 == 1 { t.2 } else { t.1 }).sum();
        hi = hi.max(v);
        lo = lo.min(v);
    }
    (hi, lo)
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let mut g = Gen(Stream::new(101));
    let mut worst_cont = 0.0f64;
    let mut attain_cont = 0.0f64;
    for _ in 0..10_000 {
        let n = g.n(1, 12);
        let xs: Vec<f64> = (0..n).map(|_| g.f(-3.0, 3.0)).collect();
        let rho = g.f(0.0, 1.5);
        let b = shift_bounds(OutcomeKind::Continuous, 0.0, rho).unwrap();
        let raw: Vec<f64> = (0..n).map(|_| g.f(-1.0, 1.0)).collect();
        let l1 = raw.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        let u = g.f(0.0, 1.0);
        let ys: Vec<f64> = xs.iter().zip(&raw).map(|(x, t)| x + t / l1 * u * rho).collect();
        let shift = ys.iter().sum::<f64>() / n as f64 - xs.iter().sum::<f64>() / n as f64;
        assert!(w1_empirical(&xs, &ys).unwrap() <= rho + 1e-12);
        worst_cont = worst_cont.max(shift - b.delta_plus).max(b.delta_minus - shift);
        for (sign, bound) in [(1.0, b.delta_plus), (-1.0, b.delta_minus)] {
            let ys: Vec<f64> = xs.iter().map(|x| x + sign * rho).collect();
            let shift = ys.iter().sum::<f64>() / n as f64 - xs.iter().sum::<f64>() / n as f64;
            attain_cont = attain_cont.max((shift - bound).abs());
        }
    }
    let mut worst_bin = 0.0f64;
    let mut attain_bin = 0.0f64;
    for _ in 0..10_000 {
        let mu = if g.coin(0.05) { [0.0, 1.0][g.n(0, 2)] } else { g.f(0.0, 1.0) };
        let rho = g.f(0.0, 1.2);
        let b = shift_bounds(OutcomeKind::Binary, mu, rho).unwrap();
        let budget = g.f(0.0, 1.0) * rho;
        let split = g.f(0.0, 1.0);
        let q1 = if mu < 1.0 { (split * budget / (1.0 - mu)).min(1.0) } else { 0.0 };
        let q0 = if mu > 0.0 { ((1.0 - split) * budget / mu).min(1.0) } else { 0.0 };
        assert!((1.0 - mu) * q1 + mu * q0 <= rho + 1e-12);
        let shift = (1.0 - mu) * q1 - mu * q0;
        worst_bin = worst_bin.max(shift - b.delta_plus).max(b.delta_minus - shift);
        let up = if mu < 1.0 { (rho / (1.0 - mu)).min(1.0) } else { 0.0 };
        let down = if mu > 0.0 { (rho / mu).min(1.0) } else { 0.0 };
        attain_bin = attain_bin.max(((1.0 - mu) * up - b.delta_plus).abs()).max((-mu * down - b.delta_minus).abs());
    }

    let mut roundtrip = 0.0f64;
    for i in 0..1000 {
        let lambda = i as f64 / 999.0 * 3.0;
        let back = weight_inverse(weight(lambda, 470, 610).unwrap(), 470, 610).unwrap();
        roundtrip = roundtrip.max((back - lambda).abs() / lambda.max(1.0));
    }

    let (mut two_arm, mut ci, mut multi) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let kind = g.kind();
        let l = g.layout(kind, 2, 1, 0.8);
        let radii = g.radii(&l, 0.5);
        let params = g.params(&l);
        let w = ebw::weights(&params, &l).unwrap();
        let centers = [l.current[0].mean(), l.current[1].mean()];
        let (hi, lo) = vertex_extremes(&w, &l, &radii, &[-1.0, 1.0], true);
        let bp = bias_plus(&w, &radii, kind, Some(&centers), CorrectionMode::PlugIn).unwrap();
        let bm = bias_minus(&w, &radii, kind, Some(&centers), CorrectionMode::PlugIn).unwrap();
        two_arm = two_arm.max((bp - hi).abs()).max((bm - lo).abs());
        let alpha = g.f(0.01, 0.2);
        let t = test_two_sided(&l, &params, &radii, alpha, &Correction::PlugIn).unwrap();
        let z = normal::z_upper(alpha / 2.0);
        ci = ci.max((t.ci_lower - (t.theta_hat - hi - z * t.s_hat)).abs()).max((t.ci_upper - (t.theta_hat - lo + z * t.s_hat)).abs());

        let arms = g.n(2, 5);
        let kind = g.kind();
        let sources = g.n(1, 4);
        let l = g.layout(kind, arms, sources, 0.7);
        let radii = g.radii(&l, 0.5);
        let params = g.params(&l);
        let w = ebw::weights(&params, &l).unwrap();
        let coeffs: Vec<f64> = (0..arms).map(|_| [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0][g.n(0, 6)]).collect();
        let coeffs = if coeffs.iter().all(|&c| c == 0.0) { vec![1.0; arms] } else { coeffs };
        let c = Contrast::new(coeffs.clone()).unwrap();
        for (corr, plug) in [(Correction::PlugIn, true), (Correction::Universal, false)] {
            let (hi, lo) = vertex_extremes(&w, &l, &radii, &coeffs, plug);
            let bp = multisource::contrast_bias_plus(&params, &l, &c, &radii, &corr).unwrap();
            let bm = multisource::contrast_bias_minus(&params, &l, &c, &radii, &corr).unwrap();
            multi = multi.max((bp - hi).abs()).max((bm - lo).abs());
        }
    }
    r.line(
        1,
        "closed-form correctness",
        &[
            check(format!("continuous probes: max excess {worst_cont:.2e}, attainment gap {attain_cont:.2e} (≤ 1e-12)"), worst_cont <= 1e-12 && attain_cont <= 1e-12),
            check(format!("binary probes: max excess {worst_bin:.2e}, attainment gap {attain_bin:.2e} (≤ 1e-12)"), worst_bin <= 1e-12 && attain_bin <= 1e-12),
            check(format!("λ ↔ w round trip on 1000 values: {roundtrip:.2e} (≤ 1e-10)"), roundtrip <= 1e-10),
            check(format!("two-arm b± vs enumeration: {two_arm:.2e} (≤ 1e-12)"), two_arm <= 1e-12),
            check(format!("two-sided CI vs enumeration: {ci:.2e} (≤ 1e-12)"), ci <= 1e-12),
            check(format!("multi-source contrast bias vs enumeration: {multi:.2e} (≤ 1e-12)"), multi <= 1e-12),
            check(format!("runtime {:.2}s (< 1 s)", t.elapsed().as_secs_f64()), t.elapsed().as_secs_f64() < 1.0),
        ],
        t,
    );
}

fn lp_w1(x: &[f64], y: &[f64]) -> f64 {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> =
        x.iter().map(|a| y.iter().map(|b| p.add_var((a - b).abs(), (0.0, f64::INFINITY))).collect()).collect();
    for row in &vars {
        let e: Vec<_> = row.iter().map(|&v| (v, 1.0)).collect();
        p.add_constraint(e.as_slice(), ComparisonOp::Eq, 1.0 / x.len() as f64);
    }
    for j in 0..y.len() {
        let e: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        p.add_constraint(e.as_slice(), ComparisonOp::Eq, 1.0 / y.len() as f64);
    }
    p.solve().unwrap().objective()
}

fn criterion_2(r: &mut Report) {
    let t = Instant::now();
    let mut g = Gen(Stream::new(202));
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let draw = |g: &mut Gen| {
            let n = g.n(1, 7);
            (0..n).map(|_| if g.coin(0.2) { g.n(0, 3) as f64 } else { g.f(-2.0, 2.0) }).collect::<Vec<f64>>()
        };
        let (x, y) = (draw(&mut g), draw(&mut g));
        worst = worst.max((w1_empirical(&x, &y).unwrap() - lp_w1(&x, &y)).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    r.line(
        2,
        "transport oracle equivalence",
        &[
            check(format!("500 instances, sizes ≤ 6: max |W1 − LP| = {worst:.2e} (≤ 1e-9)"), worst <= 1e-9),
            check(format!("runtime {secs:.2}s (< 10 s)"), secs < 10.0),
        ],
        t,
    );
}

fn criterion_3(r: &mut Report) {
    let t = Instant::now();
    let mut g = Gen(Stream::new(303));
    let mut worst_steps = 0.0f64;
    for _ in 0..50 {
        let (n_c, n_h) = (g.n(50, 300), g.n(50, 300));
        let (vc, vh) = (g.f(0.5, 2.0), g.f(0.5, 2.0));
        let s = |n, m, v| ArmSummary::new(n, m, Some(v)).unwrap();
        let l = TrialLayout::new(
            OutcomeKind::Continuous,
            vec![s(n_c, 0.0, vc), s(n_c, 0.3, vc)],
            vec![HistoricalSource::new("h", vec![Some(s(n_h, 0.1, vh)), Some(s(n_h, 0.2, vh))])],
        );
        let config = bond_core::BorrowConfig::new(0.025, 0.3).unwrap();
        let cal = select_lambda(&l, &RadiusSpec::uniform(&l, 0.0).unwrap(), &config).unwrap();
        let (a, b) = (vc / n_c as f64, vh / n_h as f64);
        let w_star = a / (a + b);
        let lam_star = weight_inverse(w_star, n_c, n_h).unwrap().min(1.0);
        let w_at = weight(lam_star, n_c, n_h).unwrap();
        let w_step = weight((lam_star + 0.005).min(1.0), n_c, n_h).unwrap() - weight((lam_star - 0.005).max(0.0), n_c, n_h).unwrap();
        for arm in 0..2 {
            worst_steps = worst_steps.max((cal.weights.historical[0][arm] - w_at).abs() / (w_step / 2.0).max(1e-300));
        }
    }
    let f = fixture();
    let cal = select_lambda(&f.layout, &RadiusSpec::uniform(&f.layout, 0.0).unwrap(), &f.config).unwrap();
    let lam = cal.lambda.get(0, 0);
    let size = ebw::borrowed_size(&cal.lambda, &f.layout, 0);
    let secs = t.elapsed().as_secs_f64();
    r.line(
        3,
        "inverse-variance optimum",
        &[
            check(format!("50 layouts: weight error ≤ {worst_steps:.3} grid steps (≤ 1)"), worst_steps <= 1.0),
            within("fixture λ̂₀", lam, 0.482, 0.01),
            within("fixture borrowed size", size, 294.0, 6.0),
            check(format!("runtime {secs:.2}s (< 1 s)"), secs < 1.0),
        ],
        t,
    );
}

fn criterion_4(r: &mut Report) {
    let t = Instant::now();
    let mut f = fixture();
    f.config.theta1 = 0.15;
    let radii0 = RadiusSpec::uniform(&f.layout, 0.0).unwrap();
    let (cal, test) = run_bond(&f.layout, &radii0, &f.config).unwrap();
    let mu0 = ebw::estimate_mean(&[cal.lambda.get(0, 0)], &f.layout.current[0], &[f.layout.cell(0, 0)]).unwrap();
    let s0 = ebw::variance(&BorrowParams::zeros(&f.layout), &f.layout, VarianceSource::PlugIn).unwrap().s;
    let ratio = test.s_hat / s0;
    let rows = sensitivity_sweep(&f.layout, &[0.1, 0.15, 0.2], &f.config).unwrap();
    let mut exact = true;
    for row in &rows {
        let radii = RadiusSpec::uniform(&f.layout, row.rho).unwrap();
        let plain = test_one_sided(&f.layout, &BorrowParams::zeros(&f.layout), &radii, f.config.alpha, &f.config.correction).unwrap();
        exact &= row.calibration.lambda.get(0, 0) == 0.0 && row.test == plain;
    }
    let secs = t.elapsed().as_secs_f64();
    r.line(
        4,
        "real-world reproduction (θ₁ = 0.15)",
        &[
            within("μ̂₀", mu0, 0.220, 0.002),
            within("θ̂", test.theta_hat, 0.065, 0.002),
            within("width ratio", ratio, 0.930, 0.01),
            check(format!("one-sided p = {:.5} (in [0.002, 0.008])", test.p_one_sided), (0.002..=0.008).contains(&test.p_one_sided)),
            check("ρ ∈ {0.1, 0.15, 0.2}: λ̂₀ = 0 and the current-only report exactly", exact),
            check(format!("runtime {secs:.2}s (< 1 s)"), secs < 1.0),
        ],
        t,
    );
}

/// Normal current arms at mean 0 and historical arms shifted by `(d0, d1)`,
/// tested at λ = (0.5, 0.5) with radius `rho`; returns (rejections at b₊, rejections at `scale·b₊`).
fn size_run(d: [f64; 2], rho: f64, scale: f64, reps: usize, seed: u64) -> (usize, usize) {
    let params = BorrowParams::per_arm(&[0.5, 0.5]).unwrap();
    let z = normal::z_upper(0.025);
    let (mut full, mut part) = (0, 0);
    for rep in 0..reps {
        let mut s = Stream::new(bond::rng::derive_seed(&[seed, rep as u64]));
        let mut draw = |n: usize, mean: f64| summarize(&(0..n).map(|_| mean + s.normal()).collect::<Vec<_>>(), OutcomeKind::Continuous).unwrap();
        let cur = vec![draw(100, 0.0), draw(100, 0.0)];
        let hist = vec![Some(draw(250, d[0])), Some(draw(250, d[1]))];
        let l = TrialLayout::new(OutcomeKind::Continuous, cur, vec![HistoricalSource::new("h", hist)]);
        let radii = RadiusSpec::uniform(&l, rho).unwrap();
        let t = test_one_sided(&l, &params, &radii, 0.025, &Correction::PlugIn).unwrap();
        full += t.reject as usize;
        part += ((t.theta_hat - scale * t.corrections.b_plus) / t.s_hat >= z) as usize;
    }
    (full, part)
}

fn criterion_5(r: &mut Report) {
    let t = Instant::now();
    let reps = 4000;
    let rho = 0.1;
    let se = (0.025 * 0.975 / reps as f64).sqrt();
    // Control drifts down and treatment up: both push θ̂ towards rejection.
    let (lf, under) = size_run([-rho, rho], rho, 0.5, reps, 51);
    let (inner, _) = size_run([-0.5 * rho, 0.5 * rho], rho, 1.0, reps, 52);
    let rate = |k: usize| k as f64 / reps as f64;
    r.line(
        5,
        "size control and tightness (4000 reps, λ = 0.5)",
        &[
            check(format!("least favourable null: {:.4} (0.025 ± {:.4})", rate(lf), 3.0 * se), (rate(lf) - 0.025).abs() <= 3.0 * se),
            check(format!("interior null: {:.4} (≤ {:.4})", rate(inner), 0.025 + 3.0 * se), rate(inner) <= 0.025 + 3.0 * se),
            check(format!("correction 0.5·b₊: {:.4} (> 0.05)", rate(under)), rate(under) > 0.05),
        ],
        t,
    );
}

fn criterion_6(r: &mut Report) {
    let t = Instant::now();
    let mut checks = Vec::new();
    for scenario in Scenario::ALL {
        let mut oc = OcConfig::new(scenario, OutcomeKind::Continuous);
        oc.methods = Method::parse_list("bond,current_only,naive_pool").unwrap();
        oc.radius = RadiusPolicy::DataDriven { c: 1.5 };
        let res = sim::run_oc(&oc).unwrap();
        let worst = sim::worst_case_summary(&res);
        let get = |m: &str| worst.iter().find(|w| w.method == m).unwrap();
        let (bond, cur, naive) = (get("bond"), get("current_only"), get("naive_pool"));
        let tag = scenario.to_string();
        checks.push(check(format!("{tag}: current-only max type I {:.4} (≤ 0.035)", cur.max_type1.value()), cur.max_type1.value() <= 0.035));
        // Effect modification widens the treated-arm variance, so the current-only power there is 0.326.
        let cur_target = if scenario == Scenario::CovshiftEffectmod { 0.326 } else { 0.40 };
        checks.push(within(&format!("{tag}: current-only min power"), cur.min_power.value(), cur_target, 0.04));
        match scenario {
            Scenario::Commensurate => {
                checks.push(check(format!("{tag}: BOND max type I {:.4} (≤ 0.035)", bond.max_type1.value()), bond.max_type1.value() <= 0.035));
                checks.push(within(&format!("{tag}: BOND min power"), bond.min_power.value(), 0.773, 0.05));
            }
            Scenario::CovshiftEffectmod => {
                checks.push(check(format!("{tag}: naive pooling max type I {:.4} (≥ 0.95)", naive.max_type1.value()), naive.max_type1.value() >= 0.95));
                checks.push(check(format!("{tag}: BOND max type I {:.4} (≤ 0.035)", bond.max_type1.value()), bond.max_type1.value() <= 0.035));
                checks.push(within(&format!("{tag}: BOND min power"), bond.min_power.value(), 0.326, 0.05));
            }
            Scenario::ControlDrift => {
                checks.push(within(&format!("{tag}: BOND min power"), bond.min_power.value(), 0.400, 0.05));
            }
        }
        let lam: Vec<String> = res
            .cells
            .iter()
            .filter(|c| c.method == "bond")
            .map(|c| format!("γ={} λ̄=({:.3},{:.3})", c.gamma, c.mean_lambda.unwrap()[0], c.mean_lambda.unwrap()[1]))
            .collect();
        println!("    info {tag}: {}", lam.join(", "));
    }
    r.line(6, "desk-scale operating characteristics (4000/2000 reps, data-driven c = 1.5)", &checks, t);
}

fn criterion_7(r: &mut Report) {
    let t = Instant::now();
    let args = |workers: &'static str| {
        vec![
            "bond", "simulate", "--scenario", "covshift_effectmod", "--outcome", "continuous", "--gamma-grid", "0,1",
            "--reps", "200", "--reps-alt", "100", "--seed", "77", "--methods", "all", "--workers", workers,
        ]
    };
    let a = cli::run(args("1")).unwrap().report;
    let b = cli::run(args("1")).unwrap().report;
    let c = cli::run(args("4")).unwrap().report;
    let mut bin = args("2");
    bin[5] = "binary";
    let d = cli::run(bin.clone()).unwrap().report;
    let e = cli::run(bin).unwrap().report;
    r.line(
        7,
        "determinism",
        &[
            check("same seed, two runs: byte-identical", a == b),
            check("1 vs 4 workers: byte-identical", a == c),
            check("binary outcome, two runs: byte-identical", d == e),
            check("report is nonempty", a.lines().count() == 1 + 2 * 11),
        ],
        t,
    );
}

fn criterion_8(r: &mut Report) {
    let t = Instant::now();
    let mut g = Gen(Stream::new(808));
    let mut specs = BaselineSpec::reference_set();
    specs.extend([BaselineSpec::FixedLambda { lambda: 0.25 }, BaselineSpec::FixedLambda { lambda: 0.75 }]);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..1000 {
        let kind = g.kind();
        let mut l = g.layout(kind, 2, 1, 0.6);
        if l.cell(0, 0).is_none() {
            l.historical[0].arms[0] = Some(g.arm(kind));
        }
        for spec in &specs {
            match run_baseline(spec, &l, 0.025) {
                Ok(res) => {
                    for (a, arm) in res.arms.iter().enumerate() {
                        let rebuilt = (1.0 - arm.weight) * l.current[a].mean() + arm.weight * arm.center;
                        worst = worst.max((arm.mean - rebuilt).abs());
                    }
                    worst = worst.max((res.theta_hat - (res.arms[1].mean - res.arms[0].mean)).abs());
                }
                Err(_) => failures += 1,
            }
        }
    }
    let f = fixture();
    let fixed = run_baseline(&BaselineSpec::FixedLambda { lambda: 0.5 }, &f.layout, 0.025).unwrap();
    let secs = t.elapsed().as_secs_f64();
    r.line(
        8,
        "baseline representability",
        &[
            check(format!("{} rules × 1000 layouts: max |estimate − EBW form| = {worst:.2e} (≤ 1e-12), {failures} errors", specs.len()), worst <= 1e-12 && failures == 0),
            within("fixture fixed λ = 0.5 θ̂", fixed.theta_hat, 0.063, 0.002),
            within("fixture fixed λ = 0.5 borrowed size", fixed.borrowed_size(), 305.0, 2.0),
            check(format!("runtime {secs:.2}s (< 1 s)"), secs < 1.0),
        ],
        t,
    );
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    if r.failed.is_empty() {
        println!("acceptance: all 8 criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", r.failed);
        std::process::exit(1);
    }
}
