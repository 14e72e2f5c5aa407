//! `hsm-lab`: batch front-end for the weighted inequality verifier.

mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hsm_core::exponents::{admissible_interval, parse_rational, rational_to_f64, ExtendedExponent};
use hsm_core::hardy1d::{default_xi_grid, ok_criterion};
use hsm_core::verifier::Report;
use serde::Serialize;

use config::{Format, Param, SuiteConfig};
use run::Row;

#[derive(Parser)]
#[command(name = "hsm-lab", version, about = "Run weighted Sobolev inequality suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the grid seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report path (default: config `output.path`, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (field, case) pair of the config.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep one parameter over every (field, case) pair.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: Param,
        /// `lo:hi:n` or `a,b,c`; defaults to the config sweeps for `--param`.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
    },
    /// Print the A·B profile of the one-dimensional criterion.
    Criterion {
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long = "N")]
        n: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Verify { config } => {
            let cfg = SuiteConfig::load(config)?;
            let rows = run::verify(&cfg, &grid_config(cli, &cfg))?;
            emit_rows(cli, &cfg, &rows, false)?;
            Ok(exit_code(&rows))
        }
        Command::Scan { config, param, range } => {
            let cfg = SuiteConfig::load(config)?;
            let values = match range {
                Some(r) => run::parse_range(*param, r)?,
                None => run::sweep_values(&cfg, *param)?,
            };
            if values.is_empty() {
                anyhow::bail!("no values to scan for `{}`: pass --range or add a sweep", param.name());
            }
            let rows = run::scan(&cfg, &grid_config(cli, &cfg), *param, &values)?;
            emit_rows(cli, &cfg, &rows, true)?;
            Ok(exit_code(&rows))
        }
        Command::Criterion { s, p, q, n } => criterion(cli, s, p, q, *n),
    }
}

fn grid_config(cli: &Cli, cfg: &SuiteConfig) -> hsm_core::fields::GridConfig {
    let mut g = cfg.grid;
    if let Some(seed) = cli.seed {
        g.seed = seed;
    }
    g
}

fn exit_code(rows: &[Row]) -> u8 {
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{} [{}]: {}", r.field, r.verdict, r.error.as_deref().unwrap_or_default());
    }
    if rows.iter().any(Row::is_divergent) {
        2
    } else if rows.iter().any(Row::is_failure) {
        1
    } else {
        0
    }
}

fn write_out(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn emit_rows(cli: &Cli, cfg: &SuiteConfig, rows: &[Row], scan: bool) -> Result<()> {
    let format = cli.format.unwrap_or(cfg.output.format);
    let path = cli.out.as_ref().or(cfg.output.path.as_ref());
    let bytes = match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows)?;
            v.push(b'\n');
            v
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header: Vec<&str> = Vec::new();
            if scan {
                header.extend(["param", "value"]);
            }
            header.extend(Report::CSV_HEADER);
            w.write_record(&header)?;
            for r in rows {
                let mut rec = Vec::new();
                if scan {
                    rec.push(r.param.unwrap_or_default().to_string());
                    rec.push(r.value.clone().unwrap_or_default());
                }
                rec.extend(r.csv_record());
                w.write_record(&rec)?;
            }
            w.into_inner()?
        }
    };
    write_out(path, &bytes)
}

#[derive(Serialize)]
struct CriterionOut {
    s: String,
    p: ExtendedExponent,
    q: ExtendedExponent,
    #[serde(rename = "N")]
    n: usize,
    verdict: String,
    interval: String,
    q_in_interval: bool,
    sup_estimate: f64,
    profile: Vec<(f64, f64, f64, f64)>,
}

fn criterion(cli: &Cli, s: &str, p: &str, q: &str, n: usize) -> Result<u8> {
    let s_exact = parse_rational(s)?;
    let p: ExtendedExponent = p.parse()?;
    let q: ExtendedExponent = q.parse()?;
    let interval = admissible_interval(1, p, n);
    let report = ok_criterion(rational_to_f64(s_exact), p, q, n, &default_xi_grid())?;
    let out = CriterionOut {
        s: s_exact.to_string(),
        p,
        q,
        n,
        verdict: report.verdict.to_string(),
        interval: interval.to_string(),
        q_in_interval: interval.contains(q),
        sup_estimate: report.sup_estimate,
        profile: report.profile,
    };
    let bytes = match cli.format.unwrap_or_default() {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(&out)?;
            v.push(b'\n');
            v
        }
        Format::Csv => {
            eprintln!("verdict: {}", out.verdict);
            eprintln!("I_{{1,p}} = {} (q = {} inside: {})", out.interval, q, out.q_in_interval);
            eprintln!("sup A·B ≈ {:e}", out.sup_estimate);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["xi", "A", "B", "AB"])?;
            for (xi, a, b, ab) in &out.profile {
                w.write_record([xi, a, b, ab].map(|x| format!("{x:e}")))?;
            }
            w.into_inner()?
        }
    };
    write_out(cli.out.as_ref(), &bytes)?;
    Ok(0)
}
