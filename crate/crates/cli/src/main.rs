//! `geoflow`: geodesics, verification suites and convergence studies on
//! the built-in model spaces.

mod config;
mod output;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use geoflow::convergence::DEFAULT_LADDER;
use geoflow::exponential::exp_r;
use geoflow::flows::{flow, Integrator, Trajectory, TrajectorySample};
use geoflow::models::{load, model_names, ModelDescriptor};
use geoflow::verify::{self, Status, Suite};
use geoflow::{CotangentVec, GeoError, Hamiltonian, Point};
use output::Outputs;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "geoflow", version, about = "Sub-Riemannian and Riemannian geodesic flows on model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the registered models and their declared properties.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Integrate one Hamiltonian flow and write its trajectory.
    Geodesic(Common),
    /// Run verification suites and compare verdicts with declarations.
    Verify {
        /// commute, factorization, projection, foliation, gauge, lcpb, geodesic or all.
        suite: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Residual against step for one suite, with the fitted order.
    Convergence {
        suite: Option<String>,
        #[command(flatten)]
        common: Common,
        /// Comma-separated ladder of steps.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<f64>>,
    },
}

/// Flags shared by the run commands. Every flag overrides the config file.
#[derive(Args, Debug, Default)]
struct Common {
    /// TOML run configuration; flags take precedence over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "suite")]
    suite_flag: Option<String>,
    /// h, v or g.
    #[arg(long)]
    hamiltonian: Option<String>,
    /// Start point in chart coordinates; defaults to the model's canonical point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    #[arg(long)]
    chart: Option<usize>,
    /// Initial covector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Option<Vec<f64>>,
    /// Initial velocity (Riemannian geodesic, implies `--hamiltonian g`).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v: Option<Vec<f64>>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long)]
    step: Option<f64>,
    /// rk4, rk45 or implicit_midpoint.
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    covectors: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol_identity: Option<f64>,
    #[arg(long)]
    tol_foliation: Option<f64>,
    #[arg(long)]
    tol_energy: Option<f64>,
    #[arg(long)]
    tol_lift: Option<f64>,
    #[arg(long)]
    tol_frame: Option<f64>,
    #[arg(long)]
    tol_violation: Option<f64>,
    #[arg(long)]
    tol_cross_check: Option<f64>,
    /// Output directory; defaults to `$GEOFLOW_OUT`, then `geoflow-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the text summary.
    #[arg(long)]
    json: bool,
}

impl Common {
    fn resolve(&self, command: &str, positional_suite: Option<&str>) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        c.command = command.to_string();
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$($field).+ = v.clone().into(); })*
            };
        }
        set!(
            model => model,
            hamiltonian => hamiltonian,
            x => x,
            chart => chart,
            p => p,
            v => v,
            t => t,
            t_grid => t_grid,
            step => flow.step,
            seed => seed,
            states => states,
            covectors => covectors,
            samples => samples,
            tol_identity => tolerances.identity_tol,
            tol_foliation => tolerances.foliation_tol,
            tol_energy => tolerances.energy_tol,
            tol_lift => tolerances.lift_tol,
            tol_frame => tolerances.frame_tol,
            tol_violation => tolerances.violation_tol,
            tol_cross_check => tolerances.cross_check_tol,
        );
        if let Some(s) = positional_suite.or(self.suite_flag.as_deref()) {
            c.suite = Some(s.to_string());
        }
        if let Some(i) = &self.integrator {
            c.flow.integrator = Integrator::parse(i).ok_or_else(|| anyhow!("unknown integrator `{i}`"))?;
        }
        if self.v.is_some() && self.hamiltonian.is_none() {
            c.hamiltonian = "g".into();
        }
        c.out = self
            .out
            .clone()
            .or(c.out)
            .or_else(|| std::env::var_os("GEOFLOW_OUT").map(PathBuf::from))
            .or_else(|| Some(PathBuf::from("geoflow-out")));
        c.validate()?;
        Ok(c)
    }
}

/// Failure classes mapped onto the exit-code contract.
enum Failure {
    /// Verdicts disagree with declarations.
    Mismatch,
    /// Bad input or a runtime failure.
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::List { json } => cmd_list(*json),
        Command::Geodesic(c) => c.resolve("geodesic", None).map_err(Failure::Runtime).and_then(|cfg| cmd_geodesic(&cfg, c.json)),
        Command::Verify { suite, common } => common
            .resolve("verify", suite.as_deref())
            .map_err(Failure::Runtime)
            .and_then(|cfg| cmd_verify(&cfg, common.json)),
        Command::Convergence { suite, common, steps } => common
            .resolve("convergence", suite.as_deref())
            .map(|mut cfg| {
                if let Some(s) = steps {
                    cfg.steps = s.clone();
                }
                cfg
            })
            .map_err(Failure::Runtime)
            .and_then(|cfg| cmd_convergence(&cfg, common.json)),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_list(json: bool) -> Result<(), Failure> {
    let mut descs = Vec::new();
    for name in model_names() {
        descs.push(ModelDescriptor::of(&geoflow::models::model_by_name(name)?));
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&descs)?);
        return Ok(());
    }
    println!("{:<20} {:>3} {:>3} {:>3}  declared", "model", "dim", "H", "V");
    for d in &descs {
        let p = d.declared;
        let flags: Vec<&str> = [
            (p.orthogonal, "orthogonal"),
            (p.v_integrable, "v_integrable"),
            (p.totally_geodesic, "totally_geodesic"),
            (p.riemannian_foliation, "riemannian_foliation"),
            (p.principal_bundle, "principal_bundle"),
        ]
        .into_iter()
        .filter_map(|(b, n)| b.then_some(n))
        .collect();
        println!("{:<20} {:>3} {:>3} {:>3}  {}", d.name, d.dim, d.h_rank, d.v_rank, flags.join(","));
    }
    Ok(())
}

#[derive(Serialize)]
struct GeodesicSummary {
    model: String,
    hamiltonian: Hamiltonian,
    start: Point,
    end: Point,
    end_covector: Vec<f64>,
    energy_start: f64,
    energy_drift: f64,
    chart_switches: usize,
    samples: usize,
}

fn chart_switches(samples: &[TrajectorySample]) -> usize {
    samples.windows(2).filter(|w| w[0].x.chart != w[1].x.chart).count()
}

fn cmd_geodesic(cfg: &RunConfig, json: bool) -> Result<(), Failure> {
    let model = load(&cfg.model, &cfg.tolerances, 8)?;
    let geo = &model.geometry;
    let which = Hamiltonian::parse(&cfg.hamiltonian).ok_or_else(|| anyhow!("unknown hamiltonian `{}`", cfg.hamiltonian))?;
    let x = match &cfg.x {
        Some(x) => Point::new(cfg.chart, x.clone()),
        None => model.canonical.x.clone(),
    };
    if x.x.len() != model.dim() || x.chart >= geo.atlas.charts.len() {
        return Err(anyhow!("start point must have {} coordinates in one of {} charts", model.dim(), geo.atlas.charts.len()).into());
    }
    geo.atlas.check_point(&x)?;
    let traj = match (&cfg.v, &cfg.p) {
        (Some(v), _) => {
            if which != Hamiltonian::G {
                return Err(anyhow!("--v gives a Riemannian geodesic; use --p for the `{}` flow", cfg.hamiltonian).into());
            }
            check_len("v", v, model.dim())?;
            let run = exp_r(geo, &x, v, cfg.t, &[], &cfg.flow, true)?;
            let e0 = run.samples[0].energy;
            Trajectory {
                hamiltonian: Hamiltonian::G,
                energy_drift: run.samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max),
                switches: Vec::new(),
                samples: run.samples,
            }
        }
        (None, p) => {
            let p = p.clone().unwrap_or_else(|| model.canonical.p.clone());
            check_len("p", &p, model.dim())?;
            flow(geo, which, &CotangentVec::new(x.clone(), p), cfg.t, &cfg.flow)?
        }
    };
    let last = traj.last();
    let summary = GeodesicSummary {
        model: cfg.model.clone(),
        hamiltonian: which,
        start: x,
        end: last.x.clone(),
        end_covector: last.p.clone(),
        energy_start: traj.samples[0].energy,
        energy_drift: traj.energy_drift,
        chart_switches: chart_switches(&traj.samples),
        samples: traj.samples.len(),
    };
    let out = Outputs::new(cfg)?;
    let csv = out.trajectory_csv("trajectory.csv", &traj.samples)?;
    let report = out.report("geodesic.json", cfg, &summary)?;
    out.meta(&[&csv, &report])?;
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!(
            "{} H^{} t={} end={:?} (chart {}) drift={:.3e} switches={}",
            cfg.model, cfg.hamiltonian, cfg.t, last.x.x, last.x.chart, traj.energy_drift, summary.chart_switches
        );
        println!("wrote {} and {}", csv.path.display(), report.path.display());
    }
    Ok(())
}

fn check_len(what: &str, v: &[f64], n: usize) -> anyhow::Result<()> {
    if v.len() != n {
        return Err(anyhow!("--{what} needs {n} components, got {}", v.len()));
    }
    Ok(())
}

fn parse_suite(cfg: &RunConfig) -> anyhow::Result<Suite> {
    let s = cfg.suite.as_deref().ok_or_else(|| anyhow!("no suite given"))?;
    Suite::parse(s).ok_or_else(|| anyhow!("unknown suite `{s}`"))
}

fn cmd_verify(cfg: &RunConfig, json: bool) -> Result<(), Failure> {
    let suite = parse_suite(cfg)?;
    let model = load(&cfg.model, &cfg.tolerances, cfg.samples.min(16))?;
    let report = verify::verify(&model, suite, &cfg.verify_settings())?;
    let out = Outputs::new(cfg)?;
    let file = out.report(&format!("verify-{}-{}.json", suite.name(), cfg.model), cfg, &report)?;
    out.meta(&[&file])?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for s in &report.suites {
            for v in &s.verdicts {
                let tag = if v.status == Status::Match { "MATCH" } else { "MISMATCH" };
                println!(
                    "{tag:<8} {:<14} {:<42} residual {:.3e} (threshold {:.1e}): {}",
                    s.suite.name(),
                    v.identity,
                    v.residual,
                    v.threshold,
                    v.summary
                );
            }
        }
        for s in &report.skipped {
            println!("SKIPPED  {:<14} {}", s.suite.name(), s.reason);
        }
        println!("wrote {}", file.path.display());
    }
    if report.all_match {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn cmd_convergence(cfg: &RunConfig, json: bool) -> Result<(), Failure> {
    let suite = parse_suite(cfg)?;
    let model = load(&cfg.model, &cfg.tolerances, 8)?;
    let steps = if cfg.steps.is_empty() { DEFAULT_LADDER.to_vec() } else { cfg.steps.clone() };
    let rep = verify::convergence(&model, suite, &steps, &cfg.verify_settings()).map_err(|e| match e {
        GeoError::InvalidConfig(m) => anyhow!("{m}"),
        e => e.into(),
    })?;
    let mut table = format!("{}: {} on {}\n{:>12}  {:>14}\n", suite.name(), rep.quantity, rep.model, "step", "residual");
    for r in &rep.study.rungs {
        table.push_str(&format!("{:>12.4e}  {:>14.6e}\n", r.step, r.residual));
    }
    table.push_str(&format!("fitted order {:.3}", rep.study.fitted_order));
    if rep.study.roundoff_limited {
        table.push_str(" (roundoff limited)");
    }
    if rep.non_vanishing_limit {
        table.push_str(" (non-vanishing limit)");
    }
    table.push('\n');
    let out = Outputs::new(cfg)?;
    let stem = format!("convergence-{}-{}", suite.name(), cfg.model);
    let file = out.report(&format!("{stem}.json"), cfg, &rep)?;
    let txt = out.text(&format!("{stem}.txt"), &table)?;
    out.meta(&[&file, &txt])?;
    if json {
        println!("{}", serde_json::to_string_pretty(&rep)?);
    } else {
        print!("{table}");
    }
    Ok(())
}
