use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecomplexity::commands::{compare, regress, RegressArgs};
use ecomplexity::config::{parse_year_range, PipelineConfig, Settings};
use ecomplexity::error::CliError;
use ecomplexity::pipeline::{run_pipeline, PipelineReport};
use ecomplexity::selftest::{run_selftest, Fault};

#[derive(Parser)]
#[command(name = "ecomplexity", version, about = "Economic complexity and fitness metrics from trade data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every enabled metric for every year, plus cross-year tables and regressions.
    Pipeline(RunArgs),
    /// RCA and incidence matrices only.
    Rca(RunArgs),
    /// ECI and PCI.
    Eci(RunArgs),
    /// Fitness and complexity by one fixed-point method.
    Fitness {
        #[arg(long, value_parser = ["fcm", "mfcm"], default_value = "mfcm")]
        method: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Yearly Spearman correlation between two score series.
    Compare {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        left_metric: String,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        right_metric: String,
    },
    /// Growth regression on a GDP series and covariate files.
    Regress {
        #[arg(long)]
        gdp: PathBuf,
        /// NAME=PATH, repeatable.
        #[arg(long, value_name = "NAME=PATH")]
        covariate: Vec<String>,
        /// Comma list of start-end periods.
        #[arg(long)]
        periods: String,
        /// Comma list of regressors; log_initial_gdp is always available.
        #[arg(long)]
        regressors: String,
        #[arg(long)]
        exclusions: Option<PathBuf>,
        #[arg(long)]
        no_period_fe: bool,
        #[arg(long)]
        no_cluster: bool,
        /// Normal instead of Student-t p-values.
        #[arg(long)]
        normal: bool,
        /// Also write the result as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Built-in invariant checks.
    Selftest {
        #[arg(long, value_parser = ["normalization"])]
        inject_fault: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trade: Option<String>,
    #[arg(long)]
    incidence: Option<String>,
    /// triangular or nested
    #[arg(long)]
    fixture: Option<String>,
    #[arg(long)]
    kinds: Option<String>,
    #[arg(long)]
    gdp: Option<String>,
    /// NAME=PATH, repeatable.
    #[arg(long, value_name = "NAME=PATH")]
    covariate: Vec<String>,
    #[arg(long)]
    allow_list: Option<String>,
    #[arg(long)]
    exclusions: Option<String>,
    /// 1995-2010 or a single year.
    #[arg(long)]
    years: Option<String>,
    /// all, none, or a comma list of eci, fcm, mfcm.
    #[arg(long)]
    metric: Option<String>,
    /// joint or concatenated
    #[arg(long)]
    rca_variant: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// Link on RCA > threshold instead of ≥.
    #[arg(long)]
    strict_threshold: bool,
    #[arg(long)]
    spectral_tol: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    zero_floor: Option<String>,
    #[arg(long)]
    boundary_margin: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    periods: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl RunArgs {
    fn settings(&self, forced_metric: Option<&str>) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        if let Some(p) = &self.config {
            s.load_file(p)?;
        }
        let flags = [
            ("trade", &self.trade),
            ("incidence", &self.incidence),
            ("fixture", &self.fixture),
            ("kinds", &self.kinds),
            ("gdp", &self.gdp),
            ("allow_list", &self.allow_list),
            ("exclusions", &self.exclusions),
            ("years", &self.years),
            ("metric", &self.metric),
            ("rca_variant", &self.rca_variant),
            ("threshold", &self.threshold),
            ("spectral_tol", &self.spectral_tol),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("zero_floor", &self.zero_floor),
            ("boundary_margin", &self.boundary_margin),
            ("window", &self.window),
            ("horizon", &self.horizon),
            ("periods", &self.periods),
            ("threads", &self.threads),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, v.as_str())?;
            }
        }
        if self.strict_threshold {
            s.set("strict_threshold", "true")?;
        }
        for (name, path) in covariate_pairs(&self.covariate)? {
            s.set(&format!("covariate.{name}"), path.display().to_string())?;
        }
        if let Some(m) = forced_metric {
            s.set("metric", m)?;
        }
        Ok(s)
    }
}

fn covariate_pairs(raw: &[String]) -> Result<Vec<(String, PathBuf)>, CliError> {
    raw.iter()
        .map(|c| match c.split_once('=') {
            Some((n, p)) if !n.is_empty() && !p.is_empty() => Ok((n.to_string(), PathBuf::from(p))),
            _ => Err(CliError::Config(format!("--covariate expects NAME=PATH, got `{c}`"))),
        })
        .collect()
}

fn run(args: &RunArgs, forced_metric: Option<&str>) -> Result<i32, CliError> {
    let cfg = PipelineConfig::from_settings(&args.settings(forced_metric)?)?;
    let report = run_pipeline(&cfg)?;
    summarize(&cfg, &report);
    Ok(report.exit_code)
}

fn summarize(cfg: &PipelineConfig, report: &PipelineReport) {
    let years = match (report.years.first(), report.years.last()) {
        (Some(a), Some(b)) if a != b => format!("{a}-{b}"),
        (Some(a), _) => a.to_string(),
        _ => "none".into(),
    };
    println!(
        "years {years}: {} files in {}",
        report.files.len(),
        cfg.out_dir.display()
    );
    for ((year, stage), status) in &report.stages {
        if status != "ok" && status != "converged" {
            println!("{year} {stage}: {status}");
        }
    }
    for f in &report.failures {
        eprintln!("error: {f}");
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Pipeline(a) => run(&a, None),
        Command::Rca(a) => run(&a, Some("none")),
        Command::Eci(a) => run(&a, Some("eci")),
        Command::Fitness { method, run: a } => run(&a, Some(&method)),
        Command::Compare {
            left,
            left_metric,
            right,
            right_metric,
        } => {
            print!("{}", compare(&left, &left_metric, &right, &right_metric)?);
            Ok(0)
        }
        Command::Regress {
            gdp,
            covariate,
            periods,
            regressors,
            exclusions,
            no_period_fe,
            no_cluster,
            normal,
            json,
        } => {
            let periods = periods
                .split(',')
                .map(|p| match parse_year_range(p) {
                    Some((a, b)) if a < b => Ok((a, b)),
                    _ => Err(CliError::Config(format!("bad period `{p}` (expected start-end)"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let args = RegressArgs {
                gdp,
                covariates: covariate_pairs(&covariate)?.into_iter().collect(),
                periods,
                regressors: regressors.split(',').map(|r| r.trim().to_string()).collect(),
                exclusions,
                period_fe: !no_period_fe,
                cluster: !no_cluster,
                normal_p_values: normal,
            };
            let out = regress(&args)?;
            print!("{}", out.text);
            if let Some(path) = json {
                let mut bytes = serde_json::to_vec_pretty(&out.json).map_err(|e| CliError::Config(e.to_string()))?;
                bytes.push(b'\n');
                std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            }
            Ok(0)
        }
        Command::Selftest { inject_fault } => {
            let fault = inject_fault.as_deref().and_then(Fault::parse);
            let results = run_selftest(fault);
            let mut failed = 0;
            for r in &results {
                println!("{}", r.line());
                failed += usize::from(r.outcome.is_err());
            }
            println!("{} checks, {failed} failed", results.len());
            Ok(i32::from(failed > 0))
        }
    }
}

fn main() -> ExitCode {
    let code = match dispatch(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
