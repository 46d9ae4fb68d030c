//! Command-line front end for the overfitting toolkit.
//!
//! Exit codes: 0 success, 2 parameter validation failure, 3 numeric failure
//! (including a failing `verify`). Errors go to stderr as a single JSON
//! record; data goes to stdout or `--output`.

mod config;
mod output;

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use offlab::mc::metric;
use offlab::{
    grid_evaluate, mc_vs_analytic, min_backtest_years, normal, overfit_report, sharpe_noise_scale,
    Density, Error as CoreError, GridAxis, GridSpec, McOverlay, McResult, Params, SamplingMode,
    Sides, SimConfig, SliceScheme, SweepParam, DEFAULT_MAX_ATTEMPTS,
};

use config::ConfigFile;
use output::{json_document, write_json, Cell, Table};

// ---------------------------------------------------------------------------
// errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn validation<S: Into<String>>(msg: S) -> Self {
        CliError::Validation(msg.into())
    }
    fn numeric<S: Into<String>>(msg: S) -> Self {
        CliError::Numeric(msg.into())
    }
    fn io<E: std::fmt::Display>(e: E) -> Self {
        CliError::Io(e.to_string())
    }
    fn io_msg(msg: String) -> Self {
        CliError::Io(msg)
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

// ---------------------------------------------------------------------------
// argument surface
// ---------------------------------------------------------------------------

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    PathLevel,
    GaussianSlice,
}

impl From<ModeArg> for SamplingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PathLevel => SamplingMode::PathLevel,
            ModeArg::GaussianSlice => SamplingMode::GaussianSlice,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeArg {
    Contiguous,
    Strided,
    RandomAssignment,
}

impl From<SchemeArg> for SliceScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Contiguous => SliceScheme::Contiguous,
            SchemeArg::Strided => SliceScheme::Strided,
            SchemeArg::RandomAssignment => SliceScheme::RandomAssignment,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PolicyArg {
    OneOff,
    UntilClear,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum SidesArg {
    One,
    Two,
}

impl From<SidesArg> for Sides {
    fn from(s: SidesArg) -> Self {
        match s {
            SidesArg::One => Sides::OneSided,
            SidesArg::Two => Sides::TwoSided,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum PresetArg {
    Figure2,
    Figure3,
    Figure4,
    Figure5,
}

impl PresetArg {
    fn spec(self) -> GridSpec<f64> {
        match self {
            PresetArg::Figure2 => GridSpec::figure2(),
            PresetArg::Figure3 => GridSpec::figure3(),
            PresetArg::Figure4 => GridSpec::figure4(),
            PresetArg::Figure5 => GridSpec::figure5(),
        }
    }
}

/// Model parameter flags shared by the analytic subcommands.
#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    /// True annualized Sharpe ratio of the strategy
    #[arg(long, value_name = "SR")]
    sr_true: Option<f64>,

    /// Sharpe threshold the investment committee requires
    #[arg(long, value_name = "SR")]
    theta: Option<f64>,

    /// Fraction of slices whose sign a tweak flips
    #[arg(long, value_name = "FRACTION")]
    f: Option<f64>,

    /// Backtest length in years
    #[arg(long, value_name = "YEARS")]
    t_years: Option<f64>,

    /// Trading days per year [default: 252]
    #[arg(long, value_name = "DAYS")]
    days_per_year: Option<u32>,

    /// Keep the SR_daily^2/2 term in the Sharpe noise scale [default: true]
    #[arg(long, value_name = "BOOL")]
    sr_correction: Option<bool>,
}

impl ModelArgs {
    /// Flags, then config file, then defaults; missing required values name
    /// the flag to set. Parameters covered by a sweep axis fall back to the
    /// axis start value (the first grid point) when not given explicitly.
    fn resolve(&self, cfg: &ConfigFile, swept: &[(SweepParam, f64)]) -> Result<Params, CliError> {
        let pick = |flag: Option<f64>, key: &str, param: SweepParam| -> Result<f64, CliError> {
            if let Some(v) = flag {
                return Ok(v);
            }
            if let Some(v) = cfg.f64(key)? {
                return Ok(v);
            }
            if let Some(&(_, start)) = swept.iter().find(|(p, _)| *p == param) {
                return Ok(start);
            }
            Err(CliError::validation(format!(
                "missing required parameter --{key} (set it on the command line or in the config file)"
            )))
        };
        let sr_true = pick(self.sr_true, "sr-true", SweepParam::SrTrue)?;
        let theta = pick(self.theta, "theta", SweepParam::Theta)?;
        let f = pick(self.f, "f", SweepParam::F)?;
        let t_years = pick(self.t_years, "t-years", SweepParam::TYears)?;

        let days = match self.days_per_year {
            Some(v) => v,
            None => cfg.u32("days-per-year")?.unwrap_or(252),
        };
        let correction = match self.sr_correction {
            Some(v) => v,
            None => cfg.bool("sr-correction")?.unwrap_or(true),
        };
        let params = Params::new(sr_true, theta, f, t_years)
            .with_days_per_year(days)
            .with_sr_correction(correction);
        // Swept fields are overridden at every grid point and may legally
        // start outside the valid region (the rows report their own status);
        // validate everything else now.
        let mut check = params;
        for &(param, _) in swept {
            match param {
                SweepParam::SrTrue => check.sr_true = 0.0,
                SweepParam::Theta => check.theta = 0.0,
                SweepParam::F => check.f = 0.25,
                SweepParam::TYears => check.t_years = 1.0,
            }
        }
        check.validate().map_err(CliError::from)?;
        Ok(params)
    }
}

/// Simulation flags shared by `simulate`, `grid` overlays and `verify`.
#[derive(Args, Debug, Clone, Default)]
struct SimArgs {
    /// Number of simulated paths [default: 100000]
    #[arg(long, value_name = "N")]
    n_paths: Option<u64>,

    /// Number of slices N per path [default: 40]
    #[arg(long, value_name = "N")]
    n_buckets: Option<usize>,

    /// Daily volatility of the simulated PnL [default: 0.01]
    #[arg(long, value_name = "VOL")]
    daily_vol: Option<f64>,

    /// Sampling mode [default: gaussian-slice]
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    /// Binning scheme for path-level slicing [default: contiguous]
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,

    /// Cap on tweak attempts per path under until-clear [default: 10000]
    #[arg(long, value_name = "N")]
    max_attempts: Option<u32>,
}

struct ResolvedSim {
    n_paths: u64,
    n_buckets: usize,
    daily_vol: f64,
    mode: ModeArg,
    scheme: SchemeArg,
    max_attempts: u32,
}

impl SimArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<ResolvedSim, CliError> {
        let mode = match self.mode {
            Some(m) => m,
            None => match cfg.string("mode") {
                None => ModeArg::GaussianSlice,
                Some("path-level") => ModeArg::PathLevel,
                Some("gaussian-slice") => ModeArg::GaussianSlice,
                Some(other) => {
                    return Err(CliError::validation(format!(
                        "config key `mode`: expected path-level or gaussian-slice, got `{other}`"
                    )))
                }
            },
        };
        let scheme = match self.scheme {
            Some(s) => s,
            None => match cfg.string("scheme") {
                None => SchemeArg::Contiguous,
                Some("contiguous") => SchemeArg::Contiguous,
                Some("strided") => SchemeArg::Strided,
                Some("random-assignment") => SchemeArg::RandomAssignment,
                Some(other) => {
                    return Err(CliError::validation(format!(
                        "config key `scheme`: expected contiguous, strided or \
                         random-assignment, got `{other}`"
                    )))
                }
            },
        };
        Ok(ResolvedSim {
            n_paths: match self.n_paths {
                Some(v) => v,
                None => cfg.u64("n-paths")?.unwrap_or(100_000),
            },
            n_buckets: match self.n_buckets {
                Some(v) => v,
                None => cfg.usize("n-buckets")?.unwrap_or(40),
            },
            daily_vol: match self.daily_vol {
                Some(v) => v,
                None => cfg.f64("daily-vol")?.unwrap_or(0.01),
            },
            mode,
            scheme,
            max_attempts: match self.max_attempts {
                Some(v) => v,
                None => cfg.u32("max-attempts")?.unwrap_or(DEFAULT_MAX_ATTEMPTS),
            },
        })
    }

    fn to_sim_config(
        &self,
        cfg: &ConfigFile,
        model: Params,
        seed: u64,
    ) -> Result<(SimConfig, ResolvedSim), CliError> {
        let r = self.resolve(cfg)?;
        let mut config = SimConfig::gaussian_slice(model, r.n_buckets, seed)
            .with_daily_vol(r.daily_vol)
            .with_scheme(r.scheme.into());
        config.mode = r.mode.into();
        Ok((config, r))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "offlab",
    version,
    about = "Quantify in-sample backtest overfitting: closed forms and Monte Carlo",
    propagate_version = true
)]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: FormatArg,

    /// Output path ("-" for stdout)
    #[arg(long, global = true, default_value = "-")]
    output: String,

    /// Master seed for simulations
    #[arg(long, global = true, env = "OFFLAB_SEED")]
    seed: Option<u64>,

    /// Plain key=value config file; flags override file values
    #[arg(long, global = true)]
    config: Option<String>,

    /// Include a timestamp in JSON metadata (off by default so identical
    /// invocations produce identical bytes)
    #[arg(long, global = true)]
    timestamp: bool,

    /// Print progress diagnostics to stderr
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Overfitting factor and the full closed-form report at one point
    Off {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Closed-form report plus the Sharpe noise scale
    Report {
        #[command(flatten)]
        model: ModelArgs,
        /// Also report the per-slice noise for this many buckets
        #[arg(long, value_name = "N")]
        n_buckets: Option<usize>,
    },
    /// Conditioned density of the tweaked Sharpe at given points
    Density {
        #[command(flatten)]
        model: ModelArgs,
        /// Evaluation point (repeatable)
        #[arg(long = "y", value_name = "SR", required = true)]
        ys: Vec<f64>,
    },
    /// Probability of one-off overfitting, p(SR_m > theta | SR < theta)
    Poof {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Probability a one-off attempt is accepted
    Poa {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Minimum backtest length for statistical significance
    MinYears {
        /// Annualized Sharpe ratio to test
        #[arg(long, value_name = "SR")]
        sr: Option<f64>,
        /// Confidence level, e.g. 0.999
        #[arg(long, value_name = "P")]
        confidence: Option<f64>,
        /// Sidedness convention [default: two]
        #[arg(long, value_enum)]
        sides: Option<SidesArg>,
    },
    /// Monte Carlo simulation of the researcher policies
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Researcher policy [default: one-off]
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
    },
    /// Parameter-grid sweep of the closed-form report
    Grid {
        #[command(flatten)]
        model: ModelArgs,
        /// Figure-style preset grid
        #[arg(long, value_enum, conflicts_with = "axes")]
        preset: Option<PresetArg>,
        /// Sweep axis "name:start:stop:count" with name one of sr_true,
        /// theta, f, t_years (repeat for a second axis)
        #[arg(long = "axis", value_name = "NAME:START:STOP:COUNT")]
        axes: Vec<String>,
        /// Comma-separated report metrics to emit [default: all]
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        /// Attach a Monte Carlo overlay with this many paths per point
        #[arg(long, value_name = "N")]
        mc_paths: Option<u64>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run the MC-vs-analytic self-check at a documented parameter point
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            let record = json!({
                "error": {
                    "kind": e.kind(),
                    "message": e.message(),
                    "exit_code": e.exit_code(),
                }
            });
            eprintln!("{record}");
            std::process::exit(e.exit_code());
        }
    }
}

const DEFAULT_SEED: u64 = 0x0FF1AB;

fn timestamp_if(requested: bool) -> Option<String> {
    if !requested {
        return None;
    }
    // Seconds since the epoch; enough to identify a run without pulling in
    // a clock/formatting dependency.
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Some(secs.to_string())
}

fn advisory_warnings(params: &Params) {
    if params.f > 0.1 && params.f < 0.5 {
        eprintln!(
            "warning: f = {} exceeds 0.1; the tweaked strategy is less than 80% \
             correlated with the original",
            params.f
        );
    }
    if params.f >= 0.5 {
        eprintln!(
            "warning: f = {} is at or above 1/2; the expected out-of-sample Sharpe \
             can cross zero and the overfitting factor may be undefined",
            params.f
        );
    }
}

fn emit(cli: &Cli, bytes: &[u8]) -> Result<(), CliError> {
    if cli.output == "-" {
        std::io::stdout().write_all(bytes).map_err(CliError::io)
    } else {
        std::fs::write(&cli.output, bytes).map_err(CliError::io)
    }
}

fn model_cells(p: &Params) -> (Vec<&'static str>, Vec<Cell>) {
    (
        vec![
            "sr_true",
            "theta",
            "f",
            "t_years",
            "days_per_year",
            "sr_correction",
        ],
        vec![
            Cell::Num(p.sr_true),
            Cell::Num(p.theta),
            Cell::Num(p.f),
            Cell::Num(p.t_years),
            Cell::Int(u64::from(p.days_per_year)),
            Cell::Text(p.include_sr_correction.to_string()),
        ],
    )
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.u64("seed")?.unwrap_or(DEFAULT_SEED),
    };
    let timestamp = timestamp_if(cli.timestamp);
    let config_file = cfg.path.clone();

    let mut buffer: Vec<u8> = Vec::new();

    match &cli.command {
        Command::Off { model } => {
            let params = model.resolve(&cfg, &[])?;
            advisory_warnings(&params);
            let report = overfit_report(&params)?;
            match cli.format {
                FormatArg::Json => {
                    let doc = json_document(
                        "off",
                        &params,
                        &report,
                        None,
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    let (mut header, mut row) = model_cells(&params);
                    for name in offlab::Report::METRICS {
                        header.push(name);
                        row.push(Cell::Num(report.metric(name).unwrap()));
                    }
                    let mut t = Table::new(header);
                    t.push(row);
                    t.write_csv(&mut buffer)?;
                }
            }
        }

        Command::Report { model, n_buckets } => {
            let params = model.resolve(&cfg, &[])?;
            advisory_warnings(&params);
            let report = overfit_report(&params)?;
            let noise = sharpe_noise_scale(&params)?;
            let sigma_slice = n_buckets.map(|n| noise.sigma_slice(n));
            let results = json!({
                "report": report,
                "noise": {
                    "sigma_tot": noise.sigma_tot,
                    "n_buckets": n_buckets,
                    "sigma_slice": sigma_slice,
                },
            });
            match cli.format {
                FormatArg::Json => {
                    let doc = json_document(
                        "report",
                        &params,
                        &results,
                        None,
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    let (mut header, mut row) = model_cells(&params);
                    header.push("sigma_tot");
                    row.push(Cell::Num(noise.sigma_tot));
                    if let Some(s) = sigma_slice {
                        header.push("sigma_slice");
                        row.push(Cell::Num(s));
                    }
                    for name in offlab::Report::METRICS {
                        header.push(name);
                        row.push(Cell::Num(report.metric(name).unwrap()));
                    }
                    let mut t = Table::new(header);
                    t.push(row);
                    t.write_csv(&mut buffer)?;
                }
            }
        }

        Command::Density { model, ys } => {
            let params = model.resolve(&cfg, &[])?;
            advisory_warnings(&params);
            let density = Density::new(params)?;
            let points: Vec<serde_json::Value> = ys
                .iter()
                .map(|&y| -> Result<serde_json::Value, CliError> {
                    let pdf = density.pdf(y);
                    let cdf = density.cdf(y)?;
                    Ok(json!({"y": y, "pdf": pdf, "cdf": cdf}))
                })
                .collect::<Result<_, _>>()?;
            match cli.format {
                FormatArg::Json => {
                    let results = json!({ "points": points });
                    let doc = json_document(
                        "density",
                        &params,
                        &results,
                        None,
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    let (mut header, base) = model_cells(&params);
                    header.extend(["y", "pdf", "cdf"]);
                    let mut t = Table::new(header);
                    for p in &points {
                        let mut row = base.clone();
                        row.push(Cell::Num(p["y"].as_f64().unwrap()));
                        row.push(Cell::Num(p["pdf"].as_f64().unwrap()));
                        row.push(Cell::Num(p["cdf"].as_f64().unwrap()));
                        t.push(row);
                    }
                    t.write_csv(&mut buffer)?;
                }
            }
        }

        Command::Poof { model } => {
            let params = model.resolve(&cfg, &[])?;
            advisory_warnings(&params);
            let poof = offlab::rho_tail_prob(&params)?;
            match cli.format {
                FormatArg::Json => {
                    let results = json!({ "poof": poof });
                    let doc = json_document(
                        "poof",
                        &params,
                        &results,
                        None,
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    let (mut header, mut row) = model_cells(&params);
                    header.push("poof");
                    row.push(Cell::Num(poof));
                    let mut t = Table::new(header);
                    t.push(row);
                    t.write_csv(&mut buffer)?;
                }
            }
        }

        Command::Poa { model } => {
            let params = model.resolve(&cfg, &[])?;
            advisory_warnings(&params);
            let report = overfit_report(&params)?;
            match cli.format {
                FormatArg::Json => {
                    let results = json!({
                        "poa": report.poa,
                        "p_clear": report.p_clear,
                        "poof": report.poof,
                    });
                    let doc = json_document(
                        "poa",
                        &params,
                        &results,
                        None,
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    let (mut header, mut row) = model_cells(&params);
                    header.extend(["p_clear", "poof", "poa"]);
                    row.push(Cell::Num(report.p_clear));
                    row.push(Cell::Num(report.poof));
                    row.push(Cell::Num(report.poa));
                    let mut t = Table::new(header);
                    t.push(row);
                    t.write_csv(&mut buffer)?;
                }
            }
        }

        Command::MinYears {
            sr,
            confidence,
            sides,
        } => {
            let sr = match sr {
                Some(v) => *v,
                None => cfg
                    .f64("sr")?
                    .ok_or_else(|| CliError::validation("missing required parameter --sr"))?,
            };
            let confidence = match confidence {
                Some(v) => *v,
                None => cfg.f64("confidence")?.ok_or_else(|| {
                    CliError::validation("missing required parameter --confidence")
                })?,
            };
            let sides_arg = match sides {
                Some(s) => *s,
                None => match cfg.string("sides") {
                    None | Some("two") => SidesArg::Two,
                    Some("one") => SidesArg::One,
                    Some(other) => {
                        return Err(CliError::validation(format!(
                            "config key `sides`: expected one or two, got `{other}`"
                        )))
                    }
                },
            };
            let years = min_backtest_years(sr, confidence, sides_arg.into())?;
            let z = normal::z_value(confidence, sides_arg.into())?;
            let sides_name = match sides_arg {
                SidesArg::One => "one",
                SidesArg::Two => "two",
            };
            let params = json!({"sr": sr, "confidence": confidence, "sides": sides_name});
            match cli.format {
                FormatArg::Json => {
                    let results = json!({"years": years, "z": z});
                    let doc = json_document(
                        "min-years",
                        &params,
                        &results,
                        None,
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    let mut t = Table::new(vec!["sr", "confidence", "sides", "z", "years"]);
                    t.push(vec![
                        Cell::Num(sr),
                        Cell::Num(confidence),
                        Cell::Text(sides_name.to_string()),
                        Cell::Num(z),
                        Cell::Num(years),
                    ]);
                    t.write_csv(&mut buffer)?;
                }
            }
        }

        Command::Simulate { model, sim, policy } => {
            let params = model.resolve(&cfg, &[])?;
            advisory_warnings(&params);
            let (config, resolved) = sim.to_sim_config(&cfg, params, seed)?;
            let policy = match policy {
                Some(p) => *p,
                None => match cfg.string("policy") {
                    None | Some("one-off") => PolicyArg::OneOff,
                    Some("until-clear") => PolicyArg::UntilClear,
                    Some(other) => {
                        return Err(CliError::validation(format!(
                            "config key `policy`: expected one-off or until-clear, got `{other}`"
                        )))
                    }
                },
            };
            if cli.verbose > 0 {
                eprintln!(
                    "simulating {} paths ({:?}, {:?})",
                    resolved.n_paths, resolved.mode, policy
                );
            }
            let result: McResult = match policy {
                PolicyArg::OneOff => offlab::run_one_off(&config, resolved.n_paths)?,
                PolicyArg::UntilClear => {
                    offlab::run_until_clear(&config, resolved.n_paths, resolved.max_attempts)?
                }
            };
            let params_echo = json!({
                "model": params,
                "n_buckets": resolved.n_buckets,
                "daily_vol": resolved.daily_vol,
                "mode": resolved.mode,
                "scheme": resolved.scheme,
                "policy": policy,
                "n_paths": resolved.n_paths,
                "max_attempts": resolved.max_attempts,
                "seed": seed,
            });
            match cli.format {
                FormatArg::Json => {
                    let doc = json_document(
                        "simulate",
                        &params_echo,
                        &result,
                        Some(seed),
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    let (mut header, base) = model_cells(&params);
                    header.extend([
                        "n_buckets",
                        "daily_vol",
                        "mode",
                        "policy",
                        "n_paths",
                        "seed",
                        "n_conditioned",
                        "n_exhausted",
                        "metric",
                        "mean",
                        "std_error",
                    ]);
                    let mut t = Table::new(header);
                    let mode_name = match resolved.mode {
                        ModeArg::PathLevel => "path-level",
                        ModeArg::GaussianSlice => "gaussian-slice",
                    };
                    let policy_name = match policy {
                        PolicyArg::OneOff => "one-off",
                        PolicyArg::UntilClear => "until-clear",
                    };
                    for (name, est) in &result.estimates {
                        let mut row = base.clone();
                        row.push(Cell::Int(resolved.n_buckets as u64));
                        row.push(Cell::Num(resolved.daily_vol));
                        row.push(Cell::Text(mode_name.to_string()));
                        row.push(Cell::Text(policy_name.to_string()));
                        row.push(Cell::Int(resolved.n_paths));
                        row.push(Cell::Int(seed));
                        row.push(Cell::Int(result.n_conditioned));
                        row.push(Cell::Int(result.n_exhausted));
                        row.push(Cell::Text(name.clone()));
                        row.push(Cell::Num(est.mean));
                        row.push(Cell::Num(est.std_error));
                        t.push(row);
                    }
                    t.write_csv(&mut buffer)?;
                }
            }
        }

        Command::Grid {
            model,
            preset,
            axes,
            metrics,
            mc_paths,
            sim,
        } => {
            let mut spec = match preset {
                Some(p) => {
                    let mut s = p.spec();
                    // Explicit fixed-model flags override the preset.
                    let swept: Vec<(SweepParam, f64)> =
                        s.axes.iter().map(|a| (a.param, a.start)).collect();
                    if model.sr_true.is_some()
                        || model.theta.is_some()
                        || model.f.is_some()
                        || model.t_years.is_some()
                        || model.days_per_year.is_some()
                        || model.sr_correction.is_some()
                    {
                        let base = ModelArgs {
                            sr_true: model.sr_true.or(Some(s.fixed.sr_true)),
                            theta: model.theta.or(Some(s.fixed.theta)),
                            f: model.f.or(Some(s.fixed.f)),
                            t_years: model.t_years.or(Some(s.fixed.t_years)),
                            days_per_year: model.days_per_year.or(Some(s.fixed.days_per_year)),
                            sr_correction: model
                                .sr_correction
                                .or(Some(s.fixed.include_sr_correction)),
                        };
                        s.fixed = base.resolve(&cfg, &swept)?;
                    }
                    if !metrics.is_empty() {
                        s.metrics = metrics.clone();
                    }
                    s
                }
                None => {
                    if axes.is_empty() {
                        return Err(CliError::validation(
                            "grid needs --preset or at least one --axis",
                        ));
                    }
                    let parsed: Vec<GridAxis<f64>> = axes
                        .iter()
                        .map(|s| parse_axis(s))
                        .collect::<Result<_, _>>()?;
                    let swept: Vec<(SweepParam, f64)> =
                        parsed.iter().map(|a| (a.param, a.start)).collect();
                    let fixed = model.resolve(&cfg, &swept)?;
                    GridSpec::new(fixed, parsed).with_metrics(metrics.clone())
                }
            };
            if let Some(n_paths) = mc_paths {
                let resolved = sim.resolve(&cfg)?;
                spec = spec.with_mc_overlay(McOverlay {
                    n_buckets: resolved.n_buckets,
                    n_paths: *n_paths,
                    mode: resolved.mode.into(),
                    seed,
                    max_attempts: resolved.max_attempts,
                });
            }
            spec.validate().map_err(CliError::from)?;
            if cli.verbose > 0 {
                let points: usize = spec.axes.iter().map(|a| a.count).product();
                eprintln!("evaluating {points} grid points");
            }
            let mut result = grid_evaluate(&spec)?;
            result.metadata.timestamp = timestamp.clone();
            match cli.format {
                FormatArg::Json => {
                    let params_echo = json!({
                        "fixed": spec.fixed,
                        "axes": spec.axes,
                        "metrics": result.metrics,
                        "mc_overlay": spec.mc_overlay,
                    });
                    let doc = json_document(
                        "grid",
                        &params_echo,
                        &result,
                        spec.mc_overlay.map(|o| o.seed),
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    grid_csv(&spec, &result, &mut buffer)?;
                }
            }
        }

        Command::Verify { model, sim } => {
            // Documented self-check point: a sub-threshold strategy with a
            // small tweak fraction, short backtest, correction off.
            let defaults = ModelArgs {
                sr_true: model.sr_true.or(Some(0.3)),
                theta: model.theta.or(Some(0.7)),
                f: model.f.or(Some(0.025)),
                t_years: model.t_years.or(Some(10.0)),
                days_per_year: model.days_per_year,
                sr_correction: model.sr_correction.or(Some(false)),
            };
            let params = defaults.resolve(&cfg, &[])?;
            let (config, resolved) = sim.to_sim_config(&cfg, params, seed)?;
            if cli.verbose > 0 {
                eprintln!(
                    "verifying with {} paths at ({}, {}, {}, {})",
                    resolved.n_paths, params.sr_true, params.theta, params.f, params.t_years
                );
            }
            let report = mc_vs_analytic(&config, resolved.n_paths, resolved.max_attempts)?;
            let params_echo = json!({
                "model": params,
                "n_buckets": resolved.n_buckets,
                "mode": resolved.mode,
                "n_paths": resolved.n_paths,
                "max_attempts": resolved.max_attempts,
                "seed": seed,
            });
            match cli.format {
                FormatArg::Json => {
                    let doc = json_document(
                        "verify",
                        &params_echo,
                        &report,
                        Some(seed),
                        timestamp,
                        config_file.as_deref(),
                    );
                    write_json(&mut buffer, &doc)?;
                }
                FormatArg::Csv => {
                    let (mut header, base) = model_cells(&params);
                    header.extend([
                        "n_paths",
                        "seed",
                        "metric",
                        "analytic",
                        "mc",
                        "std_error",
                        "z",
                        "pass",
                    ]);
                    let mut t = Table::new(header);
                    for row in &report.rows {
                        let mut cells = base.clone();
                        cells.push(Cell::Int(resolved.n_paths));
                        cells.push(Cell::Int(seed));
                        cells.push(Cell::Text(row.metric.clone()));
                        cells.push(Cell::Num(row.analytic));
                        cells.push(Cell::Num(row.mc));
                        cells.push(Cell::Num(row.std_error));
                        cells.push(Cell::Num(row.z));
                        cells.push(Cell::Text(
                            (row.z.is_finite() && row.z.abs() < report.z_threshold).to_string(),
                        ));
                        t.push(cells);
                    }
                    t.write_csv(&mut buffer)?;
                }
            }
            emit(cli, &buffer)?;
            if !report.pass {
                return Err(CliError::numeric(format!(
                    "verification failed: at least one |z| >= {}",
                    report.z_threshold
                )));
            }
            return Ok(());
        }
    }

    emit(cli, &buffer)
}

fn parse_axis(text: &str) -> Result<GridAxis<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::validation(format!(
            "--axis `{text}`: expected NAME:START:STOP:COUNT"
        )));
    }
    let param = SweepParam::parse(parts[0]).ok_or_else(|| {
        CliError::validation(format!(
            "--axis `{text}`: name must be one of sr_true, theta, f, t_years"
        ))
    })?;
    let start: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::validation(format!("--axis `{text}`: bad start value")))?;
    let stop: f64 = parts[2]
        .parse()
        .map_err(|_| CliError::validation(format!("--axis `{text}`: bad stop value")))?;
    let count: usize = parts[3]
        .parse()
        .map_err(|_| CliError::validation(format!("--axis `{text}`: bad count")))?;
    Ok(GridAxis::new(param, start, stop, count))
}

/// CSV rendering of a grid: swept columns, parameter echo, status, metrics,
/// and MC overlay columns when present. Unavailable cells print as "nan",
/// never as silent blanks.
fn grid_csv(
    spec: &GridSpec<f64>,
    result: &offlab::GridResult<f64>,
    out: &mut Vec<u8>,
) -> Result<(), CliError> {
    let axis_names: Vec<&'static str> = spec.axes.iter().map(|a| a.param.name()).collect();
    let mut header: Vec<String> = axis_names.iter().map(|s| s.to_string()).collect();
    // Echo the fixed parameters; swept ones already lead the row.
    let echo_params: Vec<&'static str> = [
        "sr_true",
        "theta",
        "f",
        "t_years",
        "days_per_year",
        "sr_correction",
    ]
    .into_iter()
    .filter(|name| !axis_names.contains(name))
    .collect();
    header.extend(echo_params.iter().map(|s| s.to_string()));
    header.push("status".to_string());
    for m in &result.metrics {
        header.push(m.clone());
    }
    let overlay_metrics: Vec<String> = if spec.mc_overlay.is_some() {
        let mut v: Vec<String> = result
            .metrics
            .iter()
            .filter(|m| {
                matches!(
                    m.as_str(),
                    "p_clear" | "poof" | "poa" | "e_in" | "e_out" | "off"
                )
            })
            .cloned()
            .collect();
        v.push(metric::CORR_SR_SRM.to_string());
        v
    } else {
        Vec::new()
    };
    for m in &overlay_metrics {
        header.push(format!("mc_{m}"));
        header.push(format!("mc_{m}_se"));
    }

    let mut t = Table::new(header.iter().map(String::as_str).collect());
    for row in &result.rows {
        let mut cells: Vec<Cell> = Vec::with_capacity(header.len());
        for axis in &spec.axes {
            let v = match axis.param {
                SweepParam::SrTrue => row.params.sr_true,
                SweepParam::Theta => row.params.theta,
                SweepParam::F => row.params.f,
                SweepParam::TYears => row.params.t_years,
            };
            cells.push(Cell::Num(v));
        }
        for name in &echo_params {
            cells.push(match *name {
                "sr_true" => Cell::Num(row.params.sr_true),
                "theta" => Cell::Num(row.params.theta),
                "f" => Cell::Num(row.params.f),
                "t_years" => Cell::Num(row.params.t_years),
                "days_per_year" => Cell::Int(u64::from(row.params.days_per_year)),
                _ => Cell::Text(row.params.include_sr_correction.to_string()),
            });
        }
        cells.push(Cell::Text(row.status.clone()));
        for m in &result.metrics {
            let v = row
                .report
                .as_ref()
                .and_then(|r| r.metric(m))
                .unwrap_or(f64::NAN);
            cells.push(Cell::Num(v));
        }
        for m in &overlay_metrics {
            match row.mc.as_ref().and_then(|mc| mc.get(m)) {
                Some(e) => {
                    cells.push(Cell::Num(e.mean));
                    cells.push(Cell::Num(e.std_error));
                }
                None => {
                    cells.push(Cell::Num(f64::NAN));
                    cells.push(Cell::Num(f64::NAN));
                }
            }
        }
        t.push(cells);
    }
    t.write_csv(out)
}
