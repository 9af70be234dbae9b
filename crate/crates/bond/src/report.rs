//! Flat CSV reports.

use bond_core::ebw::{self, BorrowParams, VarianceSource};
use bond_core::{CalibrationResult, Result, RobustTestResult, TrialLayout};

use crate::sim::{OcResult, WorstCase};

/// Six significant digits, `%g` style: fixed notation for exponents in
/// `[-4, 6)`, scientific otherwise, trailing zeros dropped.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// A header plus string rows rendered as one CSV document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

fn present_cells(layout: &TrialLayout) -> Vec<(usize, usize)> {
    (0..layout.sources())
        .flat_map(|k| (0..layout.arms()).map(move |a| (k, a)))
        .filter(|&(k, a)| layout.cell(k, a).is_some())
        .collect()
}

/// Header of analysis reports; λ and weight columns exist for every
/// historical cell present in `layout`.
pub fn analysis_header(layout: &TrialLayout) -> Vec<String> {
    let cells = present_cells(layout);
    let mut h = vec!["label".to_string(), "rho".to_string()];
    h.extend(cells.iter().map(|(k, a)| format!("lambda_s{k}_a{a}")));
    h.extend(cells.iter().map(|(k, a)| format!("weight_s{k}_a{a}")));
    for c in [
        "borrowed_size", "mu_hat_0", "mu_hat_1", "theta_hat", "s_hat", "b_plus", "b_minus", "statistic",
        "p_one_sided", "ci_lower", "ci_upper", "width_ratio", "kappa_hat", "power_proxy", "reject",
    ] {
        h.push(c.into());
    }
    h
}

/// One analysis row. `rho` is the sweep radius, blank for per-cell radii.
#[allow(clippy::too_many_arguments)]
pub fn analysis_row(
    label: &str,
    rho: Option<f64>,
    layout: &TrialLayout,
    params: &BorrowParams,
    kappa: f64,
    power_proxy: f64,
    test: &RobustTestResult,
    variances: VarianceSource<'_>,
) -> Result<Vec<String>> {
    let cells = present_cells(layout);
    let w = ebw::weights(params, layout)?;
    let mut row = vec![label.to_string(), rho.map_or_else(String::new, fmt_sig)];
    row.extend(cells.iter().map(|&(k, a)| fmt_sig(params.get(k, a))));
    row.extend(cells.iter().map(|&(k, a)| fmt_sig(w.historical[k][a])));
    let borrowed: f64 = (0..layout.arms()).map(|a| ebw::borrowed_size(params, layout, a)).sum();
    let mu = |a: usize| {
        let lams: Vec<f64> = (0..layout.sources()).map(|k| params.get(k, a)).collect();
        let hist: Vec<_> = (0..layout.sources()).map(|k| layout.cell(k, a)).collect();
        ebw::estimate_mean(&lams, &layout.current[a], &hist)
    };
    let s0 = ebw::variance(&BorrowParams::zeros(layout), layout, variances)?.s;
    for v in [
        borrowed,
        mu(0)?,
        mu(1)?,
        test.theta_hat,
        test.s_hat,
        test.corrections.b_plus,
        test.corrections.b_minus,
        test.statistic_upper,
        test.p_one_sided,
        test.ci_lower,
        test.ci_upper,
        test.s_hat / s0,
        kappa,
        power_proxy,
    ] {
        row.push(fmt_sig(v));
    }
    row.push(test.reject.to_string());
    Ok(row)
}

/// Grid surface kept by a calibration, one row per point.
pub fn surface_table(cal: &CalibrationResult) -> Table {
    let mut header: Vec<String> =
        cal.diagnostics.coordinates.iter().map(|c| format!("lambda_s{}_a{}", c.source, c.arm)).collect();
    header.extend(["kappa_hat".to_string(), "objective".to_string()]);
    let rows = cal
        .surface
        .iter()
        .flatten()
        .map(|p| {
            let mut r: Vec<String> = p.lambda.iter().map(|&l| fmt_sig(l)).collect();
            r.push(fmt_sig(p.kappa));
            r.push(fmt_sig(p.objective));
            r
        })
        .collect();
    Table { header, rows }
}

/// Operating characteristics, one row per (γ, method).
pub fn oc_table(result: &OcResult) -> Table {
    let header = [
        "scenario", "outcome", "radius", "gamma", "method", "reps_null", "type1", "type1_se", "reps_alt", "power",
        "power_se", "mean_lambda_0", "mean_lambda_1", "mean_weight_0", "mean_weight_1",
    ]
    .map(String::from)
    .to_vec();
    let rows = result
        .cells
        .iter()
        .map(|c| {
            let lam = |a: usize| c.mean_lambda.map_or_else(String::new, |l| fmt_sig(l[a]));
            vec![
                result.scenario.to_string(),
                result.kind.to_string(),
                result.radius.to_string(),
                fmt_sig(c.gamma),
                c.method.clone(),
                c.type1.reps.to_string(),
                fmt_sig(c.type1.value()),
                fmt_sig(c.type1.se()),
                c.power.reps.to_string(),
                fmt_sig(c.power.value()),
                fmt_sig(c.power.se()),
                lam(0),
                lam(1),
                fmt_sig(c.mean_weight[0]),
                fmt_sig(c.mean_weight[1]),
            ]
        })
        .collect();
    Table { header, rows }
}

/// Worst case over γ, one row per method.
pub fn summary_table(result: &OcResult, worst: &[WorstCase]) -> Table {
    let header = [
        "scenario", "outcome", "radius", "method", "max_type1", "max_type1_se", "gamma_max_type1", "min_power",
        "min_power_se", "gamma_min_power",
    ]
    .map(String::from)
    .to_vec();
    let rows = worst
        .iter()
        .map(|w| {
            vec![
                result.scenario.to_string(),
                result.kind.to_string(),
                result.radius.to_string(),
                w.method.clone(),
                fmt_sig(w.max_type1.value()),
                fmt_sig(w.max_type1.se()),
                fmt_sig(w.gamma_max_type1),
                fmt_sig(w.min_power.value()),
                fmt_sig(w.min_power.se()),
                fmt_sig(w.gamma_min_power),
            ]
        })
        .collect();
    Table { header, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig(294.4567891), "294.457");
        assert_eq!(fmt_sig(-0.000123456789), "-0.000123457");
        assert_eq!(fmt_sig(123456789.0), "1.23457e+08");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig(999999.7), "1e+06");
        assert_eq!(fmt_sig(-1e-300 * 1e-300), "0");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
    }

    #[test]
    fn csv_quotes_when_needed() {
        let t = Table { header: vec!["method".into()], rows: vec![vec!["a,b".into()]] };
        assert_eq!(t.to_csv(), "method\n\"a,b\"\n");
    }
}
