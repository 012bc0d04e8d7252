use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use dgue::checks::{self, CheckOutcome};
use dgue::config::{Overrides, ProfileName, ResolvedConfig, RunConfig};
use dgue::experiment::{fractal_dimension, scan_sizes, with_threads, ScanResult, ScanRun};
use dgue::output::{self, RunInfo};
use dgue::{Error, Result};
use dgue_core::{
    build_profile, component_law, density_of_states, finite_n_oracle, moment_prediction,
    scaling_regime, solve_saddle, validity_ratio, zero_energy_moments, Family, ScalingFamily,
};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Eigenvector statistics of deformed GUE matrices: analytic predictions and
/// Monte Carlo verification.
#[derive(Parser, Debug)]
#[command(name = "dgue", version, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Saddle point and density of states over an energy grid.
    Solve(Flags),
    /// Predicted moments, component rates, scaling regime and validity ratio.
    Predict(Flags),
    /// Monte Carlo finite-size scan with log-log fits and plots.
    Scan(Flags),
    /// Run the invariant suite; exit code 3 if any check fails.
    Check(Flags),
    /// Finite-N zero-energy moments from the α-integral.
    Oracle(Flags),
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// TOML config, or a JSON/CSV result file to re-run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// constant | power_law | exponential | explicit
    #[arg(long)]
    profile: Option<String>,
    /// Power-law exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Exponential base.
    #[arg(long)]
    base: Option<f64>,
    /// Explicit profile values, comma separated.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Matrix size.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Scan sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    energy: Option<f64>,
    /// Energy grid for solve, as start:stop:step.
    #[arg(long = "energy-grid")]
    energy_grid: Option<String>,
    /// Moment orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Realizations per size, or "default".
    #[arg(long)]
    realizations: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// nearest_k:<k>, halfwidth:<δ> or "default".
    #[arg(long)]
    window: Option<String>,
    /// One-based components for per-component reports, comma separated.
    #[arg(long, value_delimiter = ',')]
    components: Option<Vec<usize>>,
    /// Worker cap (0 = all cores). Does not affect results.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "validity-threshold")]
    validity_threshold: Option<f64>,
    /// Multiplies every tolerance of the check suite.
    #[arg(long = "tolerance-scale")]
    tolerance_scale: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            profile: self.profile.clone(),
            p: self.p,
            base: self.base,
            values: self.values.clone(),
            n: self.n,
            sizes: self.sizes.clone(),
            energy: self.energy,
            energy_grid: self.energy_grid.clone(),
            q: self.q.clone(),
            realizations: self.realizations.clone(),
            seed: self.seed,
            window: self.window.clone(),
            components: self.components.clone(),
            out: self.out.clone(),
            validity_threshold: self.validity_threshold,
            tolerance_scale: self.tolerance_scale,
            threads: self.threads,
        }
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
    ChecksFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::ChecksFailed) => ExitCode::from(EXIT_CHECK_FAILED),
    }
}

fn run(command: Command) -> std::result::Result<(), Failure> {
    let (name, flags) = match &command {
        Command::Solve(f) => ("solve", f),
        Command::Predict(f) => ("predict", f),
        Command::Scan(f) => ("scan", f),
        Command::Check(f) => ("check", f),
        Command::Oracle(f) => ("oracle", f),
    };
    let resolved = ResolvedConfig::load(flags.config.as_deref(), &flags.overrides())?;
    let config = resolved.config;
    let info = RunInfo::new(name, &config);
    output::create_dir(&config.out)?;
    output::write_config(&config.out.join("config.toml"), &config)?;
    let threads = config.threads;
    with_threads(threads, || match command {
        Command::Solve(_) => cmd_solve(&config, &info),
        Command::Predict(_) => cmd_predict(&config, &info),
        Command::Scan(_) => cmd_scan(&config, &info),
        Command::Check(_) => cmd_check(&config, &info),
        Command::Oracle(_) => cmd_oracle(&config, &info),
    })?
}

fn profile_of(config: &RunConfig) -> Result<dgue_core::DeformationProfile> {
    Ok(build_profile(&config.family(), config.n)?)
}

fn scaling_family(family: &Family) -> Option<ScalingFamily> {
    match *family {
        Family::Constant => Some(ScalingFamily::PowerLaw(0.0)),
        Family::PowerLaw(p) => Some(ScalingFamily::PowerLaw(p)),
        Family::Exponential(_) => Some(ScalingFamily::Exponential),
        Family::Explicit(_) => None,
    }
}

fn written(paths: &[&Path]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SolveRow {
    energy: f64,
    t: Option<f64>,
    s: Option<f64>,
    rho: f64,
    in_support: bool,
    residual: Option<f64>,
    iterations: Option<usize>,
}

fn cmd_solve(config: &RunConfig, info: &RunInfo) -> std::result::Result<(), Failure> {
    let profile = profile_of(config)?;
    let mut rows = Vec::new();
    out!("{:>10} {:>14} {:>14} {:>14}  support", "E", "t", "s", "rho");
    for energy in config.energies() {
        let row = match solve_saddle(&profile, energy) {
            Ok(sp) => SolveRow {
                energy,
                t: Some(sp.t),
                s: Some(sp.s),
                rho: density_of_states(&profile, &sp).rho,
                in_support: true,
                residual: Some(sp.residual),
                iterations: Some(sp.iterations),
            },
            Err(dgue_core::Error::NoBulkSolution { .. }) => SolveRow {
                energy,
                t: None,
                s: None,
                rho: 0.0,
                in_support: false,
                residual: None,
                iterations: None,
            },
            Err(e) => return Err(Error::from(e).into()),
        };
        let show = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.8}"));
        out!(
            "{:>10.4} {:>14} {:>14} {:>14.6e}  {}",
            row.energy,
            show(row.t),
            show(row.s),
            row.rho,
            if row.in_support { "yes" } else { "no" }
        );
        rows.push(row);
    }
    let csv = config.out.join("solve.csv");
    let json = config.out.join("solve.json");
    output::write_csv(&csv, info, &rows)?;
    output::write_json(&json, info, &rows)?;
    written(&[&csv, &json]);
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ScalingReport {
    regime: String,
    exponent: f64,
    log_correction: bool,
    d_q: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MomentReport {
    q: f64,
    total: f64,
    /// Zero-energy closed form, when the energy is 0.
    zero_energy_total: Option<f64>,
    scaling: Option<ScalingReport>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictSummary {
    energy: f64,
    t: f64,
    s: f64,
    rho: f64,
    rho_zero: f64,
    validity_ratio: f64,
    validity_ok: bool,
    moments: Vec<MomentReport>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ComponentRow {
    component: usize,
    v: f64,
    rate: f64,
    q: f64,
    moment: f64,
}

fn cmd_predict(config: &RunConfig, info: &RunInfo) -> std::result::Result<(), Failure> {
    let profile = profile_of(config)?;
    let family = config.family();
    let saddle = solve_saddle(&profile, config.energy).map_err(Error::from)?;
    let rho = density_of_states(&profile, &saddle);
    let rho_zero = if config.energy == 0.0 {
        rho.rho
    } else {
        density_of_states(&profile, &solve_saddle(&profile, 0.0).map_err(Error::from)?).rho
    };
    let ratio = validity_ratio(&profile, rho_zero).map_err(Error::from)?;

    let rates = (1..=profile.size())
        .map(|n| component_law(&profile, &saddle, &rho, n).map(|law| law.rate))
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(Error::from)?;
    let mut moments = Vec::new();
    let mut rows = Vec::new();
    for &q in &config.q {
        let prediction = moment_prediction(&profile, &saddle, &rho, q).map_err(Error::from)?;
        let zero_energy_total = if config.energy == 0.0 {
            Some(zero_energy_moments(&profile, q).map_err(Error::from)?.total)
        } else {
            None
        };
        let scaling = match scaling_family(&family) {
            Some(f) => {
                let law = scaling_regime(f, q).map_err(Error::from)?;
                Some(ScalingReport {
                    regime: law.regime.as_str().to_string(),
                    exponent: law.exponent,
                    log_correction: law.log_correction,
                    d_q: law.d_q,
                })
            }
            None => None,
        };
        for (k, (&m, (&v, &rate))) in
            prediction.per_component.iter().zip(profile.values().iter().zip(&rates)).enumerate()
        {
            rows.push(ComponentRow { component: k + 1, v, rate, q, moment: m });
        }
        moments.push(MomentReport { q, total: prediction.total, zero_energy_total, scaling });
    }
    let summary = PredictSummary {
        energy: config.energy,
        t: saddle.t,
        s: saddle.s,
        rho: rho.rho,
        rho_zero,
        validity_ratio: ratio,
        validity_ok: ratio <= config.validity_threshold,
        moments,
    };

    out!("E = {}  t = {:.10}  s = {:.10}  rho = {:.10}", summary.energy, summary.t, summary.s, summary.rho);
    out!(
        "validity ratio {:.4e} (threshold {}): {}",
        ratio,
        config.validity_threshold,
        if summary.validity_ok { "ok" } else { "exceeds threshold" }
    );
    for m in &summary.moments {
        print!("q = {:<5} total I_q = {:.10e}", m.q, m.total);
        if let Some(s) = &m.scaling {
            let d = s.d_q.map_or_else(|| "undefined".to_string(), |d| format!("{d:.6}"));
            let log = if s.log_correction { " x ln N" } else { "" };
            print!("  regime {}  I_q ~ N^{:.6}{log}  d_q {d}", s.regime, s.exponent);
        }
        out!();
    }
    for k in config.report_components() {
        out!("component {k}: v = {:.6e}  rate = {:.6e}", profile.values()[k - 1], rates[k - 1]);
    }
    let csv = config.out.join("predict_components.csv");
    let json = config.out.join("predict.json");
    output::write_csv(&csv, info, &rows)?;
    output::write_json(&json, info, &summary)?;
    written(&[&csv, &json]);
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct FitRow {
    q: f64,
    slope: f64,
    slope_stderr: f64,
    intercept: f64,
    predicted_slope: Option<f64>,
    d_q: Option<f64>,
    d_q_stderr: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScanSummary {
    fits: Vec<FitRow>,
    scans: Vec<ScanResult>,
}

fn cmd_scan(config: &RunConfig, info: &RunInfo) -> std::result::Result<(), Failure> {
    let family = config.family();
    if config.profile == ProfileName::Explicit {
        return Err(Failure::Usage("scan needs a profile family defined at every size; explicit profiles have one size".into()));
    }
    for &n in &config.sizes {
        build_profile(&family, n).map_err(Error::from)?;
    }
    eprintln!("scanning sizes {:?} at E = {} for q = {:?}", config.sizes, config.energy, config.q);
    let scans = scan_sizes(&ScanRun {
        family: family.clone(),
        sizes: config.sizes.clone(),
        energy: config.energy,
        qs: config.q.clone(),
        schedule: config.realizations.schedule(),
        window: config.window.policy(),
        seed: config.seed,
    })?;

    let mut fits = Vec::new();
    let mut paths = Vec::new();
    for scan in &scans {
        let predicted_slope = match scaling_family(&family) {
            Some(f) => Some(scaling_regime(f, scan.q).map_err(Error::from)?.exponent),
            None => None,
        };
        let (d_q, d_q_stderr) = match fractal_dimension(scan) {
            Ok((d, se)) => (Some(d), Some(se)),
            Err(_) => (None, None),
        };
        out!("q = {}", scan.q);
        out!("{:>8} {:>16} {:>12} {:>9}", "N", "I_q", "std_error", "samples");
        for e in &scan.estimates {
            out!("{:>8} {:>16.8e} {:>12.3e} {:>9}", e.n, e.total_iq, e.std_error, e.samples_used);
        }
        let predicted = predicted_slope.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
        out!("slope {:.4} ± {:.4} (predicted {predicted})", scan.slope, scan.slope_stderr);
        let svg = config.out.join(format!("scan_q{}.svg", scan.q));
        let title = format!("{} profile, E = {}", profile_label(config), config.energy);
        output::plot_scan(&svg, scan, predicted_slope, &title)?;
        paths.push(svg);
        fits.push(FitRow {
            q: scan.q,
            slope: scan.slope,
            slope_stderr: scan.slope_stderr,
            intercept: scan.intercept,
            predicted_slope,
            d_q,
            d_q_stderr,
        });
    }
    let rows: Vec<_> = scans.iter().flat_map(|s| s.estimates.iter().cloned()).collect();
    let csv = config.out.join("scan.csv");
    let fits_csv = config.out.join("scan_fits.csv");
    let json = config.out.join("scan.json");
    output::write_csv(&csv, info, &rows)?;
    output::write_csv(&fits_csv, info, &fits)?;
    output::write_json(&json, info, &ScanSummary { fits, scans })?;
    written(&[&csv, &fits_csv, &json]);
    written(&paths.iter().map(PathBuf::as_path).collect::<Vec<_>>());
    Ok(())
}

fn profile_label(config: &RunConfig) -> String {
    match config.profile {
        ProfileName::Constant => "constant".into(),
        ProfileName::PowerLaw => format!("power-law p = {}", config.p),
        ProfileName::Exponential => format!("exponential base {}", config.base),
        ProfileName::Explicit => "explicit".into(),
    }
}

fn cmd_check(config: &RunConfig, info: &RunInfo) -> std::result::Result<(), Failure> {
    let outcomes: Vec<CheckOutcome> = checks::run_all(config.seed, config.tolerance_scale)?;
    for c in &outcomes {
        out!(
            "[{}] {:<36} measured {:<12.4e} tolerance {:.4e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        );
    }
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    out!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
    let csv = config.out.join("check.csv");
    let json = config.out.join("check.json");
    output::write_csv(&csv, info, &outcomes)?;
    output::write_json(&json, info, &outcomes)?;
    written(&[&csv, &json]);
    if failed > 0 {
        Err(Failure::ChecksFailed)
    } else {
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct OracleRow {
    component: usize,
    q: f64,
    finite_n: f64,
    asymptotic: f64,
    ratio: f64,
}

fn cmd_oracle(config: &RunConfig, info: &RunInfo) -> std::result::Result<(), Failure> {
    if config.energy != 0.0 {
        return Err(Failure::Usage("oracle evaluates zero-energy moments; set energy = 0".into()));
    }
    let profile = profile_of(config)?;
    let mut rows = Vec::new();
    out!("{:>9} {:>6} {:>16} {:>16} {:>10}", "component", "q", "finite N", "asymptotic", "ratio");
    for &q in &config.q {
        let asymptotic = zero_energy_moments(&profile, q).map_err(Error::from)?;
        for k in config.report_components() {
            let finite_n = finite_n_oracle(&profile, q, k).map_err(Error::from)?;
            let a = asymptotic.per_component[k - 1];
            let row = OracleRow { component: k, q, finite_n, asymptotic: a, ratio: finite_n / a };
            out!("{:>9} {:>6} {:>16.8e} {:>16.8e} {:>10.6}", k, q, finite_n, a, row.ratio);
            rows.push(row);
        }
    }
    let csv = config.out.join("oracle.csv");
    let json = config.out.join("oracle.json");
    output::write_csv(&csv, info, &rows)?;
    output::write_json(&json, info, &rows)?;
    written(&[&csv, &json]);
    Ok(())
}
