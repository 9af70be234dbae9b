//! The `bond` command line.
//!
//! [`run`] does all the work and returns the report text, so the binary is a
//! thin wrapper and tests can drive commands in-process.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bond_core::ebw::{BorrowParams, VarianceSource};
use bond_core::normal;
use bond_core::robust::test_one_sided;
use bond_core::transport::w1_empirical;
use bond_core::{kappa_hat, run_bond, sensitivity_sweep, Error, OutcomeKind};
use clap::{Args, Parser, Subcommand};

use crate::input::{parse_correction, Analysis, AnalysisFile};
use crate::report::{self, fmt_sig, Table};
use crate::sim::{self, Method, OcConfig, RadiusPolicy, Scenario};

/// Failure with its exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid files (exit 2).
    #[error("{0}")]
    Validation(String),
    /// A computation degenerated (exit 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_) => CliError::Validation(e.to_string()),
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "bond", version, about = "Distributionally robust borrowing of historical controls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate λ and run the robust one-sided test.
    Test(TestArgs),
    /// Repeat the analysis over a grid of uniform radii.
    Sensitivity(SensitivityArgs),
    /// Monte Carlo operating characteristics.
    Simulate(SimulateArgs),
    /// Data-driven radii from raw samples.
    Radius(RadiusArgs),
}

#[derive(Debug, Args)]
pub struct AnalysisFlags {
    /// Analysis file (TOML).
    pub input: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// plugin, oracle or universal.
    #[arg(long)]
    pub correction: Option<String>,
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub common: AnalysisFlags,
    /// Skip calibration and test at this λ on every cell.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Write the κ̂ grid surface to this CSV.
    #[arg(long)]
    pub surface: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: AnalysisFlags,
    /// Comma-separated ascending radii.
    #[arg(long, default_value = "0,0.01,0.02,0.05,0.1,0.15,0.2")]
    pub rho_grid: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "commensurate")]
    pub scenario: String,
    #[arg(long, default_value = "continuous")]
    pub outcome: String,
    #[arg(long, default_value = "0,0.5,1,1.5,2")]
    pub gamma_grid: String,
    /// Null replications.
    #[arg(long, default_value_t = 4000)]
    pub reps: usize,
    /// Alternative replications; defaults to half of --reps (at least 100).
    #[arg(long)]
    pub reps_alt: Option<usize>,
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    /// oracle or data:<c>.
    #[arg(long, default_value = "data:1.5")]
    pub radius: String,
    /// Comma-separated methods, or all.
    #[arg(long, default_value = "all")]
    pub methods: String,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value_t = 0.025)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.3)]
    pub theta1: f64,
    #[arg(long, default_value_t = 201)]
    pub grid_points: usize,
    /// Also write the worst case over γ to this CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RadiusArgs {
    /// CSV with columns source,arm,y; source is `current` or a historical label.
    pub samples: PathBuf,
    #[arg(long, default_value_t = 1.5)]
    pub c: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// Main report as CSV.
    pub report: String,
    /// Where it was written; `None` means it belongs on standard output.
    pub written_to: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<Output>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Validation(e.to_string()))?;
    execute(cli.command)
}

/// Runs an already parsed command.
pub fn execute(command: Command) -> Result<Output> {
    let (report, out) = match command {
        Command::Test(a) => (cmd_test(&a)?, a.common.out),
        Command::Sensitivity(a) => (cmd_sensitivity(&a)?, a.common.out),
        Command::Simulate(a) => (cmd_simulate(&a)?, a.out),
        Command::Radius(a) => (cmd_radius(&a)?, a.out),
    };
    if let Some(p) = &out {
        write(p, &report)?;
    }
    Ok(Output { report, written_to: out })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn parse_grid(s: &str, flag: &str) -> Result<Vec<f64>> {
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(CliError::Validation(format!("{flag}: expected comma-separated numbers, got {s:?}"))),
    }
}

fn load(flags: &AnalysisFlags) -> Result<(AnalysisFile, Analysis)> {
    let file = AnalysisFile::parse(&read(&flags.input)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", flags.input.display())))?;
    let mut a = file.resolve(flags.theta1).map_err(|e| match e {
        Error::Invalid(m) => CliError::Validation(format!("{}: {m}", flags.input.display())),
        other => other.into(),
    })?;
    if let Some(alpha) = flags.alpha {
        a.config.alpha = alpha;
    }
    if let Some(t) = flags.theta1 {
        a.config.theta1 = t;
    }
    if let Some(g) = flags.grid_points {
        a.config.grid_points = g;
    }
    if let Some(r) = flags.ridge {
        a.config.ridge = r;
    }
    if let Some(c) = &flags.correction {
        a.config.correction = parse_correction(c, file.analysis.oracle_centers.as_deref(), a.layout.arms())
            .map_err(|e| CliError::Validation(format!("--correction: {e}")))?;
    }
    a.config.validate()?;
    Ok((file, a))
}

fn cmd_test(args: &TestArgs) -> Result<String> {
    let (_, mut a) = load(&args.common)?;
    let mut table = Table { header: report::analysis_header(&a.layout), rows: Vec::new() };
    match args.lambda {
        Some(l) => {
            if args.surface.is_some() {
                return Err(CliError::Validation("--surface needs calibration; drop --lambda".into()));
            }
            let params = BorrowParams::uniform(&a.layout, l)?;
            let test = test_one_sided(&a.layout, &params, &a.radii, a.config.alpha, &a.config.correction)?;
            let kappa = kappa_hat(&params, &a.layout, &a.radii, &a.config)?;
            let proxy = normal::cdf(kappa - normal::z_upper(a.config.alpha));
            let label = format!("fixed_lambda({l})");
            table.rows.push(report::analysis_row(&label, None, &a.layout, &params, kappa, proxy, &test, VarianceSource::PlugIn)?);
        }
        None => {
            a.config.keep_surface = args.surface.is_some();
            let (cal, test) = run_bond(&a.layout, &a.radii, &a.config)?;
            table.rows.push(report::analysis_row(
                "bond",
                None,
                &a.layout,
                &cal.lambda,
                cal.kappa,
                cal.power_proxy,
                &test,
                VarianceSource::PlugIn,
            )?);
            if let Some(p) = &args.surface {
                write(p, &report::surface_table(&cal).to_csv())?;
            }
        }
    }
    Ok(table.to_csv())
}

fn cmd_sensitivity(args: &SensitivityArgs) -> Result<String> {
    let (_, a) = load(&args.common)?;
    let rhos = parse_grid(&args.rho_grid, "--rho-grid")?;
    let rows = sensitivity_sweep(&a.layout, &rhos, &a.config)?;
    let mut table = Table { header: report::analysis_header(&a.layout), rows: Vec::new() };
    for r in &rows {
        table.rows.push(report::analysis_row(
            "bond",
            Some(r.rho),
            &a.layout,
            &r.calibration.lambda,
            r.calibration.kappa,
            r.calibration.power_proxy,
            &r.test,
            VarianceSource::PlugIn,
        )?);
    }
    Ok(table.to_csv())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let scenario: Scenario = args.scenario.parse()?;
    let kind = match args.outcome.as_str() {
        "continuous" => OutcomeKind::Continuous,
        "binary" => OutcomeKind::Binary,
        o => return Err(CliError::Validation(format!("--outcome: expected continuous or binary, got {o:?}"))),
    };
    let mut oc = OcConfig::new(scenario, kind);
    oc.gammas = parse_grid(&args.gamma_grid, "--gamma-grid")?;
    oc.methods = Method::parse_list(&args.methods)?;
    oc.reps_null = args.reps;
    oc.reps_alt = args.reps_alt.unwrap_or((args.reps / 2).max(100));
    oc.master_seed = args.seed;
    oc.radius = args.radius.parse::<RadiusPolicy>()?;
    oc.workers = args.workers;
    oc.alpha = args.alpha;
    oc.theta1 = args.theta1;
    oc.grid_points = args.grid_points;
    let result = sim::run_oc(&oc)?;
    if let Some(p) = &args.summary {
        write(p, &report::summary_table(&result, &sim::worst_case_summary(&result)).to_csv())?;
    }
    Ok(report::oc_table(&result).to_csv())
}

fn cmd_radius(args: &RadiusArgs) -> Result<String> {
    if !(args.c.is_finite() && args.c >= 1.0) {
        return Err(CliError::Validation(format!("--c must be >= 1, got {}", args.c)));
    }
    let text = read(&args.samples)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let bad = |m: String| CliError::Validation(format!("{}: {m}", args.samples.display()));
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name).ok_or_else(|| bad(format!("missing column {name:?}")));
    let (cs, ca, cy) = (col("source")?, col("arm")?, col("y")?);
    let mut current: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut sources: Vec<(String, BTreeMap<usize, Vec<f64>>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let line = i + 2;
        let get = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let arm: usize = get(ca).parse().map_err(|_| bad(format!("line {line}: arm {:?} is not an index", get(ca))))?;
        let y: f64 = get(cy).parse().map_err(|_| bad(format!("line {line}: y {:?} is not a number", get(cy))))?;
        let target = match get(cs) {
            "" => return Err(bad(format!("line {line}: empty source"))),
            "current" => &mut current,
            name => {
                let k = match sources.iter().position(|s| s.0 == name) {
                    Some(k) => k,
                    None => {
                        sources.push((name.to_string(), BTreeMap::new()));
                        sources.len() - 1
                    }
                };
                &mut sources[k].1
            }
        };
        target.entry(arm).or_default().push(y);
    }
    let header = ["source", "arm", "n_current", "n_historical", "w1", "rho"].map(String::from).to_vec();
    let mut table = Table { header, rows: Vec::new() };
    for (name, arms) in &sources {
        for (&a, ys) in arms {
            let Some(xs) = current.get(&a) else { continue };
            let d = w1_empirical(xs, ys)?;
            table.rows.push(vec![
                name.clone(),
                a.to_string(),
                xs.len().to_string(),
                ys.len().to_string(),
                fmt_sig(d),
                fmt_sig(args.c * d),
            ]);
        }
    }
    Ok(table.to_csv())
}
