use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand};
use pbc_core::analysis::{
    audit_trajectory, check_dissipativity, performance_metrics, PerformanceMetrics, TrajectoryAudit,
};
use pbc_core::sector::{
    admissible_interval, design_sector, synthesize_certificate_search, verify_certificate,
};
use pbc_core::{simulate, sliding_fraction, DissipativityTriple, PbcError, Trajectory};

use crate::config::{self, ControllerSpec, ScenarioConfig};
use crate::error::CliError;
use crate::trajectory_csv::write_trajectory;

#[derive(Debug, Parser)]
#[command(
    name = "pbc",
    version,
    about = "Projection-based controller design and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a sector and multiplier for a dissipativity triple.
    DesignSector(DesignArgs),
    /// Simulate a scenario, audit the run and optionally write a CSV trajectory.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run several scenarios on the same plant and rank their performance.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
    },
    /// Sample the dissipation inequality of the plant in a scenario.
    CheckDissipativity(CheckArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub r: f64,
    /// Relative placement of the sector inside the admissible interval.
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    /// Use the grid search instead of the analytic design.
    #[arg(long)]
    pub search: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::DesignSector(args) => cmd_design_sector(&args, out),
        Command::Simulate { config, output } => cmd_simulate(&config, output.as_deref(), out),
        Command::Compare { configs } => cmd_compare(&configs, out),
        Command::CheckDissipativity(args) => cmd_check_dissipativity(&args, out),
    }
}

pub fn cmd_design_sector(args: &DesignArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let triple = DissipativityTriple::new(args.q, args.s, args.r);
    writeln!(out, "supply: q={} s={} r={}", triple.q, triple.s, triple.r)?;
    let interval = admissible_interval(&triple);
    if let Ok(iv) = &interval {
        let upper = iv.upper.map_or("inf".to_string(), |u| u.to_string());
        writeln!(out, "case: {:?}", iv.case)?;
        writeln!(out, "interval: ({}, {upper})", iv.lower)?;
    }
    let cert = if args.search {
        synthesize_certificate_search(&triple)
    } else {
        interval.and_then(|_| design_sector(&triple, args.margin))
    };
    let cert = match cert {
        Ok(c) => c,
        Err(e @ (PbcError::NotSectorDesignable { .. } | PbcError::CertificateSearchFailed(_))) => {
            writeln!(out, "design: FAIL")?;
            return Err(CliError::Failed(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    let (a, b, d) = cert.shifted_supply();
    writeln!(out, "k1: {}", cert.bounds.k1())?;
    writeln!(out, "k2: {}", cert.bounds.k2())?;
    writeln!(out, "lambda: {}", cert.lambda)?;
    writeln!(out, "minor1: {a:e}")?;
    writeln!(out, "minor2: {:e}", a * d - b * b)?;
    if verify_certificate(&cert) {
        writeln!(out, "design: PASS")?;
        Ok(())
    } else {
        writeln!(out, "design: FAIL")?;
        Err(CliError::Failed("certificate does not verify".into()))
    }
}

/// Outcome of one scenario run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub trajectory: Trajectory,
    pub audit: TrajectoryAudit,
    pub metrics: PerformanceMetrics,
    pub sliding_fraction: f64,
}

pub fn run_config(config: &ScenarioConfig) -> Result<RunReport, CliError> {
    let scenario = config.scenario()?;
    let trajectory = simulate(&scenario);
    let audit = audit_trajectory(&trajectory, &config.bounds);
    let metrics = performance_metrics(&trajectory, &config.metrics)?;
    Ok(RunReport {
        sliding_fraction: sliding_fraction(&trajectory),
        config: config.clone(),
        trajectory,
        audit,
        metrics,
    })
}

fn write_summary(out: &mut dyn Write, r: &RunReport) -> std::io::Result<()> {
    let a = &r.audit;
    let m = &r.metrics;
    writeln!(out, "scenario: {}", r.config.name)?;
    writeln!(
        out,
        "controller: {} (projection {})",
        r.config.controller.label(),
        projection_label(&r.config)
    )?;
    writeln!(out, "samples: {}", r.trajectory.len())?;
    writeln!(out, "max sector residual: {:e}", a.max_residual)?;
    writeln!(out, "max repair: {:e}", r.trajectory.max_repair)?;
    let storage = match a.storage_monotone {
        None => "n/a".to_string(),
        Some(ok) => format!(
            "{} (largest step increase {:e}, cumulative {:e})",
            if ok { "non-increasing" } else { "INCREASING" },
            a.max_storage_increment,
            a.total_storage_increase
        ),
    };
    writeln!(out, "storage: {storage}")?;
    writeln!(out, "sliding fraction: {:.4}", r.sliding_fraction)?;
    writeln!(out, "settling time: {}", m.settling_time)?;
    writeln!(out, "overshoot: {}", m.overshoot)?;
    writeln!(
        out,
        "zero crossings: y={} state[{}]={}",
        m.zero_crossings, r.config.metrics.designated_state, m.state_zero_crossings
    )?;
    writeln!(out, "final norm: {:e}", m.final_norm)?;
    writeln!(out, "converged: {}", yes_no(m.converged))?;
    if let Some(d) = &r.trajectory.divergence {
        writeln!(out, "diverged at t={}", d.time)?;
    }
    writeln!(out, "audit: {}", if a.pass { "PASS" } else { "FAIL" })
}

fn projection_label(c: &ScenarioConfig) -> &'static str {
    match (&c.controller, c.projection) {
        (ControllerSpec::StaticGain { .. }, _) => "bypassed",
        (_, true) => "on",
        (_, false) => "off",
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn cmd_simulate(
    config_path: &Path,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let config = config::load(config_path)?;
    let report = run_config(&config)?;
    if let Some(path) = output {
        let file =
            File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_trajectory(BufWriter::new(file), &report.trajectory)?;
    }
    write_summary(out, &report)?;
    if let Some(d) = &report.trajectory.divergence {
        return Err(CliError::Diverged { time: d.time });
    }
    if !report.audit.pass {
        return Err(CliError::Failed(format!(
            "audit failed for {}",
            config.name
        )));
    }
    Ok(())
}

/// Ranks runs: non-diverged and converged first, then by settling time,
/// overshoot and designated-state zero crossings. Ties keep input order.
pub fn rank(reports: &[RunReport]) -> Vec<usize> {
    let key = |r: &RunReport| {
        (
            r.trajectory.diverged(),
            !r.metrics.converged,
            r.metrics.settling_time,
            r.metrics.overshoot,
            r.metrics.state_zero_crossings,
        )
    };
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&i, &j| {
        key(&reports[i])
            .partial_cmp(&key(&reports[j]))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ranks = vec![0; reports.len()];
    for (pos, idx) in order.into_iter().enumerate() {
        ranks[idx] = pos + 1;
    }
    ranks
}

pub fn compare_configs(configs: &[ScenarioConfig]) -> Result<Vec<RunReport>, CliError> {
    if configs.len() < 2 {
        return Err(CliError::Usage("compare needs at least two configs".into()));
    }
    let first = &configs[0];
    for c in &configs[1..] {
        if c.plant != first.plant {
            return Err(CliError::Config(format!(
                "{}: plant differs from {}",
                c.name, first.name
            )));
        }
        if c.initial.x != first.initial.x {
            return Err(CliError::Config(format!(
                "{}: initial.x differs from {}",
                c.name, first.name
            )));
        }
    }
    thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run_config(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

pub fn cmd_compare(paths: &[PathBuf], out: &mut dyn Write) -> Result<(), CliError> {
    let configs = paths
        .iter()
        .map(|p| config::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let reports = compare_configs(&configs)?;
    let ranks = rank(&reports);
    writeln!(
        out,
        "{:<4} {:<24} {:<22} {:<8} {:>12} {:>12} {:>8} {:>8} {:>12} {:<9}",
        "rank",
        "scenario",
        "controller",
        "proj",
        "settling",
        "overshoot",
        "zc(y)",
        "zc(state)",
        "final_norm",
        "status"
    )?;
    for (r, rank) in reports.iter().zip(&ranks) {
        let m = &r.metrics;
        let status = match &r.trajectory.divergence {
            Some(d) => format!("diverged@{:.3}", d.time),
            None if m.converged => "converged".into(),
            None => "running".into(),
        };
        writeln!(
            out,
            "{:<4} {:<24} {:<22} {:<8} {:>12.4} {:>12.6} {:>8} {:>8} {:>12.3e} {:<9}",
            rank,
            r.config.name,
            r.config.controller.label(),
            projection_label(&r.config),
            m.settling_time,
            m.overshoot,
            m.zero_crossings,
            m.state_zero_crossings,
            m.final_norm,
            status
        )?;
    }
    if let Some(d) = reports
        .iter()
        .filter_map(|r| r.trajectory.divergence.as_ref())
        .next()
    {
        return Err(CliError::Diverged { time: d.time });
    }
    Ok(())
}

pub fn cmd_check_dissipativity(args: &CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = config::load(&args.config)?;
    let Some(spec) = &config.dissipativity else {
        return Err(CliError::Config(format!(
            "{}: dissipativity.s: missing, no claim to check",
            args.config.display()
        )));
    };
    let triple = DissipativityTriple::new(
        args.q.unwrap_or(spec.triple.q),
        args.s.unwrap_or(spec.triple.s),
        args.r.unwrap_or(spec.triple.r),
    );
    let plant = config.build_plant()?;
    let report = check_dissipativity(
        plant.as_ref(),
        &triple,
        &spec.sample_box,
        args.samples.unwrap_or(spec.samples),
        args.tol.unwrap_or(spec.tol),
    )?;
    writeln!(out, "supply: q={} s={} r={}", triple.q, triple.s, triple.r)?;
    writeln!(out, "samples: {}", report.n_samples)?;
    writeln!(out, "max scaled residual: {:e}", report.max_residual)?;
    writeln!(
        out,
        "raw residual at worst point: {:e}",
        report.worst_raw_residual
    )?;
    let (x, u) = &report.worst_point;
    writeln!(out, "worst point: x={x:?} u={u}")?;
    writeln!(out, "tolerance: {:e}", report.tol)?;
    writeln!(
        out,
        "dissipativity: {}",
        if report.pass { "PASS" } else { "FAIL" }
    )?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "dissipation inequality violated by {:e} at x={x:?}, u={u}",
            report.worst_raw_residual
        )))
    }
}
