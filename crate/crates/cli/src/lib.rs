//! Command-line front end: slice sweeps, portrait bundles, crisis traces,
//! property verification and single-point queries.

pub mod config;
pub mod portrait;
pub mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bcnf::bifurcation::find_cycle;
use bcnf::region::{phi_violation, DEFAULT_N_MAX};
use bcnf::verify::{run_suites, Scope, VerifyOptions};
use bcnf::Params;
use clap::{Args, Parser, Subcommand};

use config::ConfigFile;
use portrait::{run_portrait, PortraitOptions};
use sweep::{classify_row, run_trace, sweep_rows, write_sweep, write_trace, Range, SliceConfig, TraceConfig};

#[derive(Debug, Parser)]
#[command(name = "bcnf", version, about = "Border-collision normal form lab")]
pub struct Cli {
    /// `key = value` file supplying any long flag; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for all random sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default, Clone)]
pub struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub tau_l: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_l: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau_r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_r: Option<f64>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct TauLRange {
    #[arg(long, allow_hyphen_values = true)]
    pub tau_l_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau_l_max: Option<f64>,
    #[arg(long)]
    pub tau_l_steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Region membership and chaos indices at one point, as JSON.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Classify every cell of a (tau_L, tau_R) grid; CSV.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        delta_l: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta_r: Option<f64>,
        #[command(flatten)]
        tau_l: TauLRange,
        #[arg(long, allow_hyphen_values = true)]
        tau_r_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        tau_r_max: Option<f64>,
        #[arg(long)]
        tau_r_steps: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fixed points, trapping region, manifolds, attractor and cycles; JSON.
    Portrait {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        unstable_depth: Option<usize>,
        #[arg(long)]
        stable_depth: Option<usize>,
        /// Itinerary of a periodic cycle to include, e.g. LRR.
        #[arg(long)]
        word: Option<String>,
        #[arg(long)]
        cycle_depth: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heteroclinic crisis value of tau_R along a tau_L grid; CSV.
    HtTrace {
        #[arg(long, allow_hyphen_values = true)]
        delta_l: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta_r: Option<f64>,
        #[command(flatten)]
        tau_l: TauLRange,
        /// Bisection tolerance in tau_R.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the property suites at one point (all four parameters given) or
    /// over random draws; JSON report, nonzero exit if any suite fails.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        /// Number of random parameter draws per suite.
        #[arg(long)]
        random: Option<usize>,
        /// Inner random draws per suite at a single point.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Negate every tolerance so that the run must fail.
        #[arg(long, hide = true)]
        corrupt_tolerances: bool,
    },
    /// Periodic orbit with a given itinerary; JSON.
    Cycle {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        word: Option<String>,
    },
}

fn params(cfg: &ConfigFile, a: &ParamArgs) -> Result<Params> {
    Ok(Params::new(
        cfg.require("tau-l", a.tau_l)?,
        cfg.require("delta-l", a.delta_l)?,
        cfg.require("tau-r", a.tau_r)?,
        cfg.require("delta-r", a.delta_r)?,
    ))
}

fn params_in_phi(cfg: &ConfigFile, a: &ParamArgs) -> Result<Params> {
    let xi = params(cfg, a)?;
    if let Some(why) = phi_violation(&xi) {
        bail!("{xi} is outside the saddle-saddle region: violates {why}");
    }
    Ok(xi)
}

fn tau_l_range(cfg: &ConfigFile, r: &TauLRange) -> Result<Range> {
    Range::new(
        cfg.require("tau-l-min", r.tau_l_min)?,
        cfg.require("tau-l-max", r.tau_l_max)?,
        cfg.require("tau-l-steps", r.tau_l_steps)?,
    )
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = output(path)?;
    let ctx = || match path {
        Some(p) => format!("writing {}", p.display()),
        None => "writing to stdout".to_string(),
    };
    serde_json::to_writer_pretty(&mut w, value).with_context(ctx)?;
    writeln!(w).with_context(ctx)?;
    w.flush().with_context(ctx)
}

fn with_path_context(r: Result<()>, path: Option<&Path>) -> Result<()> {
    r.with_context(|| match path {
        Some(p) => format!("writing {}", p.display()),
        None => "writing to stdout".to_string(),
    })
}

/// Runs a parsed command line; the returned code is the process exit status.
pub fn run(cli: Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let seed: u64 = cfg.resolve("seed", cli.seed)?.unwrap_or(0);
    if let Some(jobs) = cfg.resolve::<usize>("jobs", cli.jobs)? {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        // fails only if a pool already exists, as in repeated in-process runs
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    match &cli.command {
        Command::Classify { params: p, n_max } => {
            let xi = params(&cfg, p)?;
            let n_max = cfg.resolve("n-max", *n_max)?.unwrap_or(DEFAULT_N_MAX);
            write_json(&classify_row(&xi, n_max), None)?;
        }
        Command::Sweep {
            delta_l,
            delta_r,
            tau_l,
            tau_r_min,
            tau_r_max,
            tau_r_steps,
            n_max,
            out,
        } => {
            let sc = SliceConfig {
                delta_l: cfg.require("delta-l", *delta_l)?,
                delta_r: cfg.require("delta-r", *delta_r)?,
                tau_l: tau_l_range(&cfg, tau_l)?,
                tau_r: Range::new(
                    cfg.require("tau-r-min", *tau_r_min)?,
                    cfg.require("tau-r-max", *tau_r_max)?,
                    cfg.require("tau-r-steps", *tau_r_steps)?,
                )?,
                n_max: cfg.resolve("n-max", *n_max)?.unwrap_or(DEFAULT_N_MAX),
            };
            if sc.tau_l.steps == 0 || sc.tau_r.steps == 0 {
                bail!("sweep grids need at least one step in each direction");
            }
            let out = cfg.path("out", out.clone());
            let rows = sweep_rows(&sc);
            with_path_context(write_sweep(&rows, output(out.as_deref())?), out.as_deref())?;
        }
        Command::Portrait {
            params: p,
            unstable_depth,
            stable_depth,
            word,
            cycle_depth,
            samples,
            out,
        } => {
            let xi = params_in_phi(&cfg, p)?;
            let d = PortraitOptions::default();
            let opts = PortraitOptions {
                unstable_depth: cfg.resolve("unstable-depth", *unstable_depth)?.unwrap_or(d.unstable_depth),
                stable_depth: cfg.resolve("stable-depth", *stable_depth)?.unwrap_or(d.stable_depth),
                word: cfg.resolve("word", word.clone())?,
                cycle_depth: cfg.resolve("cycle-depth", *cycle_depth)?.unwrap_or(d.cycle_depth),
                samples: cfg.resolve("samples", *samples)?.unwrap_or(d.samples),
                seed,
            };
            let bundle = run_portrait(&xi, &opts)?;
            write_json(&bundle, cfg.path("out", out.clone()).as_deref())?;
        }
        Command::HtTrace {
            delta_l,
            delta_r,
            tau_l,
            tol,
            depth,
            out,
        } => {
            let tc = TraceConfig {
                delta_l: cfg.require("delta-l", *delta_l)?,
                delta_r: cfg.require("delta-r", *delta_r)?,
                tau_l: tau_l_range(&cfg, tau_l)?,
                tol: cfg.resolve("tol", *tol)?.unwrap_or(1e-5),
                depth: cfg.resolve("depth", *depth)?.unwrap_or(25),
            };
            let trace = run_trace(&tc)?;
            let out = cfg.path("out", out.clone());
            with_path_context(write_trace(&trace, output(out.as_deref())?), out.as_deref())?;
        }
        Command::Verify {
            params: p,
            random,
            samples,
            out,
            corrupt_tolerances,
        } => {
            let any_param = [p.tau_l, p.delta_l, p.tau_r, p.delta_r].iter().any(Option::is_some)
                || cfg.keys().any(|k| matches!(k, "tau-l" | "delta-l" | "tau-r" | "delta-r"));
            let random = cfg.resolve("random", *random)?;
            let scope = match (any_param, random) {
                (true, Some(_)) => bail!("give either parameters or --random, not both"),
                (true, None) => Scope::Point {
                    xi: params(&cfg, p)?,
                    n: cfg.resolve("samples", *samples)?.unwrap_or(100),
                },
                (false, n) => Scope::Random { n: n.unwrap_or(1000) },
            };
            let mut opts = VerifyOptions::new(scope, seed);
            if *corrupt_tolerances {
                opts.tolerance_scale = -1.0;
            }
            let report = run_suites(&opts);
            for s in &report.suites {
                eprintln!(
                    "{} {:55} samples {:5} worst {:>12} tol {:e}",
                    if s.pass { "ok  " } else { "FAIL" },
                    s.name,
                    s.samples,
                    s.worst.map_or("-".to_string(), |w| format!("{w:.3e}")),
                    s.tol
                );
            }
            write_json(&report, cfg.path("out", out.clone()).as_deref())?;
            if !report.pass {
                return Ok(1);
            }
        }
        Command::Cycle { params: p, word } => {
            let xi = params_in_phi(&cfg, p)?;
            let word: String = cfg.require("word", word.clone())?;
            write_json(&find_cycle(&xi, &word)?, None)?;
        }
    }
    Ok(0)
}
