use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use sitsim::harness::{
    derive_seed, dispatch_regime, emit, hydrodynamic_check, hydrostatic_check, initial_sample,
    reproduce_appendix_b, ExperimentConfig, Report, RunInfo, SnapshotFormat,
};
use sitsim::kmc::Simulator;
use sitsim::measures::{coarse_grain, indicator_field};
use sitsim::pde::{check_conditions, stationary_solve_with, PdeProblem, StationaryOptions};
use sitsim::{Error, Lattice};

#[derive(Parser)]
#[command(
    name = "sitsim",
    version,
    about = "Sterile insect technique: particle system and limiting PDE"
)]
struct Cli {
    /// Experiment config (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the particle system once per lattice size and write block-averaged profiles.
    Simulate,
    /// Integrate the PDE up to `t_end`.
    Solve,
    /// Integrate the PDE from both extremal states until they settle.
    Stationary,
    /// Compare particle pairings with the PDE across lattice sizes.
    HydroCheck,
    /// Compare stationary particle marginals with the stationary PDE profile.
    HydrostaticCheck,
    /// Reproduce the two reference runs on `[0, 1]` with insulated faces.
    AppendixB,
    /// Print the three structural conditions for the configured parameters.
    Conditions,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidConfig(_)
            | Error::InvalidParams(_)
            | Error::InvalidLattice(_)
            | Error::RegimeMismatch(_)
            | Error::Refused(_)
            | Error::Cfl { .. },
        ) => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Returns whether the command's check passed (always true for commands
/// without one).
fn run(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the thread pool")?;
    }
    let cfg = load_config(cli)?;
    let started = Instant::now();
    let report = match cli.command {
        Command::Simulate => simulate(&cfg, &cli.out)?,
        Command::Solve => solve(&cfg, &cli.out)?,
        Command::Stationary => stationary(&cfg, &cli.out)?,
        Command::HydroCheck => hydrodynamic_check(&cfg)?.to_report(),
        Command::HydrostaticCheck => hydrostatic_check(&cfg)?.to_report(),
        Command::AppendixB => reproduce_appendix_b()?.to_report(),
        Command::Conditions => {
            let c = check_conditions(&cfg.params, cfg.dim, cfg.delta1.value(cfg.dim))?;
            println!("{}", serde_json::to_string_pretty(&c)?);
            let mut r = Report::new("conditions");
            r.set("conditions", c);
            r
        }
    };
    let info = RunInfo {
        seed: Some(cfg.seed),
        config: Some(serde_json::to_value(&cfg)?),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest = emit(&report, &info, &cli.out)?;
    let passed = report.passed.unwrap_or(true);
    if report.passed.is_some() {
        println!(
            "{}: {}",
            report.command,
            if passed { "passed" } else { "failed" }
        );
    }
    println!("wrote {}", manifest.display());
    Ok(passed)
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Report> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let grid = cfg.grid.build()?;
    let gamma = cfg.initial.resolve(&cfg.params, cfg.grid.interval)?;
    let b = cfg.boundary_data()?;
    let mut times = cfg.snapshot_times();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut report = Report::new("simulate");
    let mut events = Vec::new();
    for &n in &cfg.lattice_sizes {
        let lat = Lattice::new(n, cfg.dim)?;
        let ell = cfg.block_radius(n);
        let seed = derive_seed(cfg.seed, n, 0);
        let initial = initial_sample(&lat, &|u| gamma(u), seed);
        let mut sim = Simulator::new(&lat, &cfg.params, &b, initial, seed)?;
        let mut profiles = Vec::new();
        sim.advance_to(
            cfg.t_end,
            &times,
            |t, c| profiles.push((t, coarse_grain(&lat, &indicator_field(c), &grid, ell))),
            None,
        )?;
        for (k, (t, prof)) in profiles.into_iter().enumerate() {
            let name = format!("profile_N{n}_{k:04}.csv");
            prof?.write_csv(&out.join(&name))?;
            report.set(&format!("{name}_time"), t);
            report.files.push(name);
        }
        let (name, format) = match cfg.snapshot_format {
            SnapshotFormat::Text => (format!("config_N{n}.txt"), SnapshotFormat::Text),
            SnapshotFormat::Binary => (format!("config_N{n}.bin"), SnapshotFormat::Binary),
        };
        let path = out.join(&name);
        let w = BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        match format {
            SnapshotFormat::Text => sim.config().write_text(&lat, w),
            SnapshotFormat::Binary => sim.config().write_binary(&lat, w),
        }
        .with_context(|| format!("writing {}", path.display()))?;
        report.files.push(name);
        events.push((n, sim.event_count()));
    }
    report.set("events", events);
    report.set("snapshot_times", times);
    Ok(report)
}

fn solve(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Report> {
    let regime = dispatch_regime(cfg)?;
    let problem = PdeProblem::new(cfg.grid.build()?, cfg.params, regime, cfg.boundary_data()?)?;
    let dt = cfg.dt.unwrap_or_else(|| problem.auto_dt());
    let solved = problem.solve(
        &cfg.initial_profile()?,
        cfg.t_end,
        dt,
        &cfg.snapshot_times(),
    )?;
    solved.write(out, "solution")?;
    let mut report = Report::new("solve");
    report.set("regime", regime.label());
    report.set("dt", solved.dt);
    report.set("steps", solved.steps);
    report.set("stability_bound", problem.stability_bound());
    report
        .files
        .extend((0..solved.snapshots.len()).map(|i| format!("solution_{i:04}.csv")));
    report.files.push("solution_final.csv".into());
    report.files.push("solution_manifest.json".into());
    Ok(report)
}

fn stationary(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Report> {
    let regime = dispatch_regime(cfg)?;
    let problem = PdeProblem::new(cfg.grid.build()?, cfg.params, regime, cfg.boundary_data()?)?;
    let st = stationary_solve_with(
        &problem,
        StationaryOptions {
            tol: cfg.tol,
            t_max: cfg.t_max,
            dt: cfg.dt,
            ..Default::default()
        },
    )?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    st.profile.write_csv(&out.join("stationary.csv"))?;
    st.lower.write_csv(&out.join("lower.csv"))?;
    st.upper.write_csv(&out.join("upper.csv"))?;
    let mut report = Report::new("stationary");
    report.passed = Some(st.converged);
    report.set("regime", regime.label());
    report.set("converged", st.converged);
    report.set("distinct_limits", st.distinct_limits);
    report.set("time", st.time);
    report.set("gap", st.gap);
    report.files = vec![
        "stationary.csv".into(),
        "lower.csv".into(),
        "upper.csv".into(),
    ];
    Ok(report)
}
