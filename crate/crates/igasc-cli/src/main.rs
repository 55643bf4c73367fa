//! Batch CLI for score-driven volatility and duration models.
//!
//! Subcommands: fit, simulate, forecast, diagnose, mc-study,
//! innovation-curve, volatility-path. Data goes to files (with --out) or to
//! standard output; notes and errors go to standard error. Errors are a
//! single machine-parseable line `error: ...` with a nonzero exit code.
//! The IGASC_THREADS environment variable caps worker threads (default:
//! hardware concurrency).

mod ingest;
mod params;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use igasc::diagnostics::{ks_uniform_test, pit_series};
use igasc::estimate::{
    fit, fit_mv, initial_values_mv, initial_values_with_offset, FitOptions, FitReport,
};
use igasc::filter::{filter, filter_mv};
use igasc::forecast::{forecast_table, mv_forecast};
use igasc::garch::{garch_filter, garch_fit, garch_pit, GarchConditional};
use igasc::obs::{Family, ObsModel, Theta, DEFAULT_OFFSET};
use igasc::simulate::{mc_study, simulate, simulate_mv, SimConfig};
use igasc::specfun;

use ingest::{read_joined, read_series, DataKind};
use params::ParamFile;

#[derive(Parser)]
#[command(
    name = "igasc",
    version,
    about = "Score-driven volatility and duration models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Model families addressable from the command line; the GARCH(1,1)
/// benchmarks share the fit/diagnose surfaces.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CliFamily {
    GaussVol,
    TVol,
    ExpDur,
    WeibullDur,
    MvGaussVol,
    Garch,
    GarchT,
}

impl CliFamily {
    fn univariate(self) -> Option<Family> {
        match self {
            CliFamily::GaussVol => Some(Family::GaussVol),
            CliFamily::TVol => Some(Family::TVol),
            CliFamily::ExpDur => Some(Family::ExpDur),
            CliFamily::WeibullDur => Some(Family::WeibullDur),
            _ => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            CliFamily::GaussVol => "gauss-vol",
            CliFamily::TVol => "t-vol",
            CliFamily::ExpDur => "exp-dur",
            CliFamily::WeibullDur => "weibull-dur",
            CliFamily::MvGaussVol => "mv-gauss-vol",
            CliFamily::Garch => "garch",
            CliFamily::GarchT => "garch-t",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model by maximum likelihood and emit the estimate table and a
    /// reusable parameter file.
    Fit {
        #[arg(long, value_enum)]
        family: CliFamily,
        /// Input CSV(s): date column then value column. Several files
        /// (inner-joined on dates) for the multivariate family.
        #[arg(long, num_args = 1.., required = true)]
        data: Vec<PathBuf>,
        #[arg(long, default_value = "returns")]
        kind: String,
        /// Innovation-map offset added to squared standardized returns.
        #[arg(long)]
        offset: Option<f64>,
        /// Label recorded in reports (e.g. daily, weekly).
        #[arg(long, default_value = "")]
        frequency: String,
        /// Output directory (fit.csv, theta.txt); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optimizer budget per stage.
        #[arg(long, default_value_t = 20_000)]
        max_evals: usize,
    },
    /// Simulate a path from the model and emit it as CSV.
    Simulate {
        #[arg(long, value_enum)]
        family: CliFamily,
        #[arg(long = "T")]
        length: usize,
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parameter file from a previous fit (alternative to the explicit
        /// parameter flags).
        #[arg(long)]
        theta_file: Option<PathBuf>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        psi: Option<f64>,
        /// Family shape: degrees of freedom nu (t-vol) or Weibull k.
        #[arg(long)]
        shape: Option<f64>,
        #[arg(long)]
        offset: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// h-step predictive summaries (mean, sd, quantiles) from fitted
    /// parameters and data.
    Forecast {
        #[arg(long, value_enum)]
        family: CliFamily,
        #[arg(long, num_args = 1.., required = true)]
        data: Vec<PathBuf>,
        #[arg(long, default_value = "returns")]
        kind: String,
        #[arg(long)]
        theta_file: PathBuf,
        /// Comma-separated horizons, e.g. 1,5,20.
        #[arg(long, default_value = "1,5,20")]
        horizon: String,
        /// Gauss-Hermite nodes for the univariate mixture.
        #[arg(long, default_value_t = 50)]
        nodes: usize,
        /// Simulation paths for the multivariate forecast.
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// PIT residual diagnostics: Kolmogorov-Smirnov uniformity and the
    /// model log-likelihood at the supplied parameters.
    Diagnose {
        #[arg(long, value_enum)]
        family: CliFamily,
        #[arg(long, num_args = 1.., required = true)]
        data: Vec<PathBuf>,
        #[arg(long, default_value = "returns")]
        kind: String,
        #[arg(long)]
        theta_file: PathBuf,
        #[arg(long, default_value = "")]
        frequency: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo study: simulate at the given parameters, refit, report
    /// mean/variance/bias/MSE per parameter over a grid of lengths.
    McStudy {
        #[arg(long, value_enum)]
        family: CliFamily,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        /// Comma-separated series lengths, e.g. 1000,5000.
        #[arg(long = "T", default_value = "1000")]
        lengths: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        mu: f64,
        #[arg(long, default_value_t = 0.2)]
        phi: f64,
        #[arg(long, default_value_t = 0.7)]
        psi: f64,
        #[arg(long)]
        shape: Option<f64>,
        #[arg(long)]
        offset: Option<f64>,
        #[arg(long, default_value_t = 20_000)]
        max_evals: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The innovation map η(ε) on a grid, one curve per shape value.
    InnovationCurve {
        #[arg(long, value_enum)]
        family: CliFamily,
        /// Weibull shape values, e.g. 2,3,4.
        #[arg(long)]
        k: Option<String>,
        /// t degrees of freedom values, e.g. 5,10,20.
        #[arg(long)]
        nu: Option<String>,
        #[arg(long, default_value_t = 4.0)]
        eps_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Offset inside the volatility innovation map (0 shows the pure
        /// curve).
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filtered volatility path σ_t from fitted parameters and data.
    VolatilityPath {
        #[arg(long, value_enum)]
        family: CliFamily,
        #[arg(long, num_args = 1.., required = true)]
        data: Vec<PathBuf>,
        #[arg(long, default_value = "returns")]
        kind: String,
        #[arg(long)]
        theta_file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let cap = std::env::var("IGASC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    let outcome = igasc::par::with_thread_cap(cap, || run(cli.command));
    if let Err(e) = outcome {
        let msg = format!("{e:#}").replace('\n', " ");
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}

fn write_output(out: Option<&Path>, name: &str, content: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
            let path = dir.join(name);
            std::fs::write(&path, content)
                .with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn parse_kind(kind: &str, family: CliFamily) -> Result<DataKind> {
    let k: DataKind = kind.parse()?;
    let duration_family = matches!(family, CliFamily::ExpDur | CliFamily::WeibullDur);
    if duration_family != (k == DataKind::Durations) {
        bail!("family {} cannot model kind '{kind}'", family.label());
    }
    Ok(k)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| anyhow!("cannot parse {what} entry '{v}'"))
        })
        .collect()
}

fn fit_table(report: &FitReport) -> String {
    let mut s = String::from("parameter,estimate,std_error,ci_lo,ci_hi\n");
    for (i, name) in report.param_names.iter().enumerate() {
        let est = report.estimates[i];
        match (&report.std_errors, &report.ci95) {
            (Some(se), Some(ci)) => {
                let _ = writeln!(s, "{name},{est},{},{},{}", se[i], ci[i].0, ci[i].1);
            }
            _ => {
                let _ = writeln!(s, "{name},{est},,,");
            }
        }
    }
    let _ = writeln!(s, "loglik,{},,,", report.loglik);
    let _ = writeln!(s, "converged,{},,,", u8::from(report.converged));
    s
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit {
            family,
            data,
            kind,
            offset,
            frequency,
            out,
            max_evals,
        } => cmd_fit(
            family,
            &data,
            &kind,
            offset,
            &frequency,
            out.as_deref(),
            max_evals,
        ),
        Command::Simulate {
            family,
            length,
            burn_in,
            seed,
            theta_file,
            mu,
            phi,
            psi,
            shape,
            offset,
            out,
        } => cmd_simulate(
            family,
            length,
            burn_in,
            seed,
            theta_file,
            mu,
            phi,
            psi,
            shape,
            offset,
            out.as_deref(),
        ),
        Command::Forecast {
            family,
            data,
            kind,
            theta_file,
            horizon,
            nodes,
            paths,
            seed,
            out,
        } => cmd_forecast(
            family,
            &data,
            &kind,
            &theta_file,
            &horizon,
            nodes,
            paths,
            seed,
            out.as_deref(),
        ),
        Command::Diagnose {
            family,
            data,
            kind,
            theta_file,
            frequency,
            out,
        } => cmd_diagnose(
            family,
            &data,
            &kind,
            &theta_file,
            &frequency,
            out.as_deref(),
        ),
        Command::McStudy {
            family,
            reps,
            lengths,
            seed,
            mu,
            phi,
            psi,
            shape,
            offset,
            max_evals,
            out,
        } => cmd_mc_study(
            family,
            reps,
            &lengths,
            seed,
            mu,
            phi,
            psi,
            shape,
            offset,
            max_evals,
            out.as_deref(),
        ),
        Command::InnovationCurve {
            family,
            k,
            nu,
            eps_max,
            points,
            offset,
            out,
        } => cmd_innovation_curve(family, k, nu, eps_max, points, offset, out.as_deref()),
        Command::VolatilityPath {
            family,
            data,
            kind,
            theta_file,
            out,
        } => cmd_volatility_path(family, &data, &kind, &theta_file, out.as_deref()),
    }
}

fn load_params(path: &Path) -> Result<ParamFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    ParamFile::parse(&text).with_context(|| format!("bad parameter file {}", path.display()))
}

fn expect_family(pf: &ParamFile, family: CliFamily) -> Result<()> {
    if pf.family_label() != family.label() {
        bail!(
            "parameter file is for family {}, command asked for {}",
            pf.family_label(),
            family.label()
        );
    }
    Ok(())
}

fn cmd_fit(
    family: CliFamily,
    data: &[PathBuf],
    kind: &str,
    offset: Option<f64>,
    frequency: &str,
    out: Option<&Path>,
    max_evals: usize,
) -> Result<()> {
    let kind = parse_kind(kind, family)?;
    let opts = FitOptions {
        max_evals_per_stage: max_evals,
        ..FitOptions::default()
    };
    let offset = offset.unwrap_or(DEFAULT_OFFSET);
    let (table, theta_text) = match family {
        CliFamily::MvGaussVol => {
            let panel = read_joined(data, kind)?;
            eprintln!(
                "joined {} series on {} common dates ({})",
                panel.labels.len(),
                panel.rows.len(),
                frequency
            );
            let init = initial_values_mv(&panel.rows, offset)?;
            let res = fit_mv(&panel.rows, Some(init), &opts)?;
            let text =
                ParamFile::Multivariate { theta: res.theta }.to_text(Some(res.report.loglik));
            (fit_table(&res.report), text)
        }
        CliFamily::Garch | CliFamily::GarchT => {
            if data.len() != 1 {
                bail!("{} takes exactly one data file", family.label());
            }
            let ds = read_series(&data[0], kind)?;
            let conditional = if family == CliFamily::GarchT {
                GarchConditional::StudentT
            } else {
                GarchConditional::Gaussian
            };
            let res = garch_fit(&ds.values, conditional, &opts)?;
            let text = ParamFile::Garch { theta: res.theta }.to_text(Some(res.report.loglik));
            (fit_table(&res.report), text)
        }
        _ => {
            if data.len() != 1 {
                bail!("{} takes exactly one data file", family.label());
            }
            let fam = family.univariate().expect("univariate");
            let ds = read_series(&data[0], kind)?;
            let init = initial_values_with_offset(fam, &ds.values, offset)?;
            let res = fit(fam, &ds.values, Some(init), &opts)?;
            if res.report.short_data {
                eprintln!("note: series shorter than 30; standard errors unreliable");
            }
            let text = ParamFile::Univariate {
                family: fam,
                theta: res.theta,
            }
            .to_text(Some(res.report.loglik));
            (fit_table(&res.report), text)
        }
    };
    write_output(out, "fit.csv", &table)?;
    if out.is_some() {
        write_output(out, "theta.txt", &theta_text)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    family: CliFamily,
    length: usize,
    burn_in: usize,
    seed: u64,
    theta_file: Option<PathBuf>,
    mu: Option<f64>,
    phi: Option<f64>,
    psi: Option<f64>,
    shape: Option<f64>,
    offset: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    if matches!(family, CliFamily::Garch | CliFamily::GarchT) {
        bail!("simulation covers the score-driven families, not the GARCH benchmarks");
    }
    if family == CliFamily::MvGaussVol {
        let path =
            theta_file.ok_or_else(|| anyhow!("mv-gauss-vol simulation needs --theta-file"))?;
        let pf = load_params(&path)?;
        expect_family(&pf, family)?;
        let ParamFile::Multivariate { theta } = pf else {
            bail!("expected multivariate parameters");
        };
        let sim = simulate_mv(&theta, length, burn_in, seed)?;
        let n = theta.dim();
        let mut s = String::from("t");
        for i in 1..=n {
            let _ = write!(s, ",y_{i}");
        }
        for i in 1..=n {
            let _ = write!(s, ",alpha_{i}");
        }
        s.push('\n');
        for t in 0..length {
            let _ = write!(s, "{}", t + 1);
            for i in 0..n {
                let _ = write!(s, ",{}", sim.y[t][i]);
            }
            for i in 0..n {
                let _ = write!(s, ",{}", sim.alpha[t][i]);
            }
            s.push('\n');
        }
        return write_output(out, "simulated.csv", &s);
    }

    let fam = family.univariate().expect("univariate");
    let theta = match theta_file {
        Some(path) => {
            let pf = load_params(&path)?;
            expect_family(&pf, family)?;
            let ParamFile::Univariate { theta, .. } = pf else {
                bail!("expected univariate parameters");
            };
            theta
        }
        None => {
            let mut t = Theta::ar(
                mu.ok_or_else(|| anyhow!("--mu required without --theta-file"))?,
                phi.ok_or_else(|| anyhow!("--phi required without --theta-file"))?,
                psi.ok_or_else(|| anyhow!("--psi required without --theta-file"))?,
            )
            .map_err(|e| anyhow!("{e}"))?;
            if let Some(s) = shape {
                t = t.with_shape(s);
            }
            if let Some(o) = offset {
                t = t.with_offset(o);
            }
            t
        }
    };
    let mut cfg = SimConfig::new(fam, theta, length, seed);
    cfg.burn_in = burn_in;
    let sim = simulate(&cfg)?;
    let mut s = String::from("t,y,alpha,eta,u\n");
    for t in 0..length {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            t + 1,
            sim.y[t],
            sim.alpha[t],
            sim.eta[t],
            sim.u[t]
        );
    }
    write_output(out, "simulated.csv", &s)
}

#[allow(clippy::too_many_arguments)]
fn cmd_forecast(
    family: CliFamily,
    data: &[PathBuf],
    kind: &str,
    theta_file: &Path,
    horizon: &str,
    nodes: usize,
    paths: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let kind = parse_kind(kind, family)?;
    let horizons: Vec<usize> = parse_list(horizon, "horizon")?;
    if horizons.is_empty() {
        bail!("no horizons given");
    }
    let pf = load_params(theta_file)?;
    expect_family(&pf, family)?;
    match pf {
        ParamFile::Univariate { family: fam, theta } => {
            if data.len() != 1 {
                bail!("{} takes exactly one data file", fam.label());
            }
            let ds = read_series(&data[0], kind)?;
            let out_filter = filter(fam, &ds.values, &theta)?;
            let rows = forecast_table(fam, &theta, out_filter.alpha_next, &horizons, nodes)?;
            let mut s = String::from("horizon,mean,sd,q05,q50,q95\n");
            for (h, mean, sd, q05, q50, q95) in rows {
                let _ = writeln!(s, "{h},{mean},{sd},{q05},{q50},{q95}");
            }
            write_output(out, "forecast.csv", &s)
        }
        ParamFile::Multivariate { theta } => {
            let panel = read_joined(data, kind)?;
            if panel.rows[0].len() != theta.dim() {
                bail!(
                    "parameter file has {} series, data has {}",
                    theta.dim(),
                    panel.rows[0].len()
                );
            }
            let out_filter = filter_mv(&panel.rows, &theta)?;
            let mut s = String::from("horizon,series,mean,sd,q05,q50,q95\n");
            for &h in &horizons {
                let sample = mv_forecast(&theta, &out_filter.alpha_next, h, paths, seed)?;
                for i in 0..theta.dim() {
                    let mut col: Vec<f64> = sample.iter().map(|r| r[i]).collect();
                    col.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                    let n = col.len();
                    let mean = col.iter().sum::<f64>() / n as f64;
                    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                    let q = |p: f64| col[((p * n as f64) as usize).min(n - 1)];
                    let _ = writeln!(
                        s,
                        "{h},{},{mean},{},{},{},{}",
                        panel.labels[i],
                        var.sqrt(),
                        q(0.05),
                        q(0.50),
                        q(0.95)
                    );
                }
            }
            write_output(out, "forecast.csv", &s)
        }
        ParamFile::Garch { .. } => {
            bail!("forecasting covers the score-driven families, not the GARCH benchmarks")
        }
    }
}

fn cmd_diagnose(
    family: CliFamily,
    data: &[PathBuf],
    kind: &str,
    theta_file: &Path,
    frequency: &str,
    out: Option<&Path>,
) -> Result<()> {
    let kind = parse_kind(kind, family)?;
    let pf = load_params(theta_file)?;
    expect_family(&pf, family)?;
    let mut s = String::from("family,frequency,series,n,loglik,ks_statistic,ks_pvalue\n");
    match pf {
        ParamFile::Univariate { family: fam, theta } => {
            let ds = read_series(&data[0], kind)?;
            let loglik = filter(fam, &ds.values, &theta)?.loglik;
            let u = pit_series(fam, &ds.values, &theta)?;
            let ks = ks_uniform_test(&u).map_err(|e| anyhow!("{e}"))?;
            let _ = writeln!(
                s,
                "{},{frequency},{},{},{loglik},{},{}",
                fam.label(),
                ds.label,
                ks.n,
                ks.statistic_d,
                ks.p_value
            );
        }
        ParamFile::Garch { theta } => {
            let ds = read_series(&data[0], kind)?;
            let loglik = garch_filter(&ds.values, &theta)?.loglik;
            let u = garch_pit(&ds.values, &theta)?;
            let ks = ks_uniform_test(&u).map_err(|e| anyhow!("{e}"))?;
            let label = if theta.nu.is_some() {
                "garch-t"
            } else {
                "garch"
            };
            let _ = writeln!(
                s,
                "{label},{frequency},{},{},{loglik},{},{}",
                ds.label, ks.n, ks.statistic_d, ks.p_value
            );
        }
        ParamFile::Multivariate { theta } => {
            let panel = read_joined(data, kind)?;
            let outf = filter_mv(&panel.rows, &theta)?;
            for i in 0..theta.dim() {
                let u: Vec<f64> = outf
                    .eps
                    .iter()
                    .map(|row| specfun::std_normal_cdf(row[i]))
                    .collect();
                let ks = ks_uniform_test(&u).map_err(|e| anyhow!("{e}"))?;
                let _ = writeln!(
                    s,
                    "mv-gauss-vol,{frequency},{},{},{},{},{}",
                    panel.labels[i], ks.n, outf.loglik, ks.statistic_d, ks.p_value
                );
            }
        }
    }
    write_output(out, "diagnostics.csv", &s)
}

#[allow(clippy::too_many_arguments)]
fn cmd_mc_study(
    family: CliFamily,
    reps: usize,
    lengths: &str,
    seed: u64,
    mu: f64,
    phi: f64,
    psi: f64,
    shape: Option<f64>,
    offset: Option<f64>,
    max_evals: usize,
    out: Option<&Path>,
) -> Result<()> {
    let fam = family
        .univariate()
        .ok_or_else(|| anyhow!("mc-study covers the univariate score-driven families"))?;
    let t_grid: Vec<usize> = parse_list(lengths, "T")?;
    let mut theta = Theta::ar(mu, phi, psi).map_err(|e| anyhow!("{e}"))?;
    if let Some(s) = shape {
        theta = theta.with_shape(s);
    }
    if let Some(o) = offset {
        theta = theta.with_offset(o);
    }
    let opts = FitOptions {
        max_evals_per_stage: max_evals,
        ..FitOptions::default()
    };
    let res = mc_study(fam, &theta, &t_grid, reps, seed, &opts)?;
    write_output(out, "mc_study.csv", &res.to_csv())
}

fn cmd_innovation_curve(
    family: CliFamily,
    k: Option<String>,
    nu: Option<String>,
    eps_max: f64,
    points: usize,
    offset: f64,
    out: Option<&Path>,
) -> Result<()> {
    let fam = family
        .univariate()
        .ok_or_else(|| anyhow!("innovation curves cover the univariate families"))?;
    if points < 2 || !(eps_max > 0.0) {
        bail!("need at least 2 points and a positive eps range");
    }
    let shapes: Vec<Option<f64>> = match fam {
        Family::GaussVol | Family::ExpDur => vec![None],
        Family::TVol => parse_list::<f64>(nu.as_deref().unwrap_or("5,10,20"), "nu")?
            .into_iter()
            .map(Some)
            .collect(),
        Family::WeibullDur => parse_list::<f64>(k.as_deref().unwrap_or("2,3,4"), "k")?
            .into_iter()
            .map(Some)
            .collect(),
    };
    let mut s = String::from("family,shape,eps,eta\n");
    for shape in shapes {
        let mut theta = Theta::ar(0.0, 0.0, 1.0)
            .map_err(|e| anyhow!("{e}"))?
            .with_offset(offset);
        if let Some(v) = shape {
            theta = theta.with_shape(v);
        }
        let obs = ObsModel::new(fam, &theta).map_err(|e| anyhow!("{e}"))?;
        let shape_col = shape.map(|v| v.to_string()).unwrap_or_default();
        for i in 1..=points {
            // eps grid over (0, eps_max]: abs standardized return for the
            // volatility families, standardized duration otherwise
            let eps = eps_max * i as f64 / points as f64;
            let (_, eta) = obs.innovation(eps, 0.0);
            let _ = writeln!(s, "{},{shape_col},{eps},{eta}", fam.label());
        }
    }
    write_output(out, "innovation_curve.csv", &s)
}

fn cmd_volatility_path(
    family: CliFamily,
    data: &[PathBuf],
    kind: &str,
    theta_file: &Path,
    out: Option<&Path>,
) -> Result<()> {
    let kind = parse_kind(kind, family)?;
    let pf = load_params(theta_file)?;
    expect_family(&pf, family)?;
    let mut s = String::new();
    match pf {
        ParamFile::Univariate { family: fam, theta } => {
            if !fam.is_volatility() {
                bail!("volatility paths cover the volatility families");
            }
            let ds = read_series(&data[0], kind)?;
            let outf = filter(fam, &ds.values, &theta)?;
            s.push_str("t,date,y,alpha,sigma\n");
            for t in 0..ds.values.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    t + 1,
                    ds.dates[t],
                    ds.values[t],
                    outf.alpha[t],
                    (0.5 * outf.alpha[t]).exp()
                );
            }
        }
        ParamFile::Garch { theta } => {
            let ds = read_series(&data[0], kind)?;
            let outf = garch_filter(&ds.values, &theta)?;
            s.push_str("t,date,y,sigma2,sigma\n");
            for t in 0..ds.values.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    t + 1,
                    ds.dates[t],
                    ds.values[t],
                    outf.sigma2[t],
                    outf.sigma2[t].sqrt()
                );
            }
        }
        ParamFile::Multivariate { theta } => {
            let panel = read_joined(data, kind)?;
            let outf = filter_mv(&panel.rows, &theta)?;
            s.push_str("t,date");
            for label in &panel.labels {
                let _ = write!(s, ",sigma_{label}");
            }
            s.push('\n');
            for t in 0..panel.rows.len() {
                let _ = write!(s, "{},{}", t + 1, panel.dates[t]);
                for i in 0..theta.dim() {
                    let _ = write!(s, ",{}", (0.5 * outf.alpha[t][i]).exp());
                }
                s.push('\n');
            }
        }
    }
    write_output(out, "volatility_path.csv", &s)
}
