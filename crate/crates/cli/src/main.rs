//! Command-line front end: distribution tables, capacity sweeps, intensity
//! optimization, maximal-distance root finds, and the Monte Carlo report, all
//! emitted as full-precision CSV.

mod config;

use clap::{Parser, Subcommand};
use config::{LegOpt, ModeOpt, ProtocolOpt, RunConfig};
use qsdc_core::{
    capacity, dl04_capacity, heralded_dist, max_distance, optimal_mu, poisson_dist, CapacityPoint,
    Error as CoreError, HeraldEvent, McConfig, Mode, Protocol, CAPACITY_FLOOR,
};
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
enum CliError {
    /// Exit code 2: configuration or validation problem.
    Config(String),
    /// Exit code 3: numerical failure.
    Numeric(String),
    /// Exit code 4: I/O failure.
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        match e {
            CoreError::InvalidParam { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qsdc",
    version,
    about = "Secrecy capacity engine for passive decoy-state QSDC"
)]
struct Cli {
    /// TOML configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Decoy-state regime.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeOpt>,
    /// Protocol selection.
    #[arg(long, global = true, value_enum)]
    protocol: Option<ProtocolOpt>,
    /// Source intensity override.
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Monte Carlo seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Truncation order override.
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Photon-number distribution table of the heralded classes and the
    /// Poisson reference.
    Dist,
    /// Capacity versus channel attenuation as CSV.
    Sweep {
        #[arg(long)]
        alpha_min: Option<f64>,
        #[arg(long)]
        alpha_max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Interpret the attenuation axis as one-way instead of round-trip.
        #[arg(long)]
        one_way: bool,
    },
    /// Optimal source intensity at fixed attenuation (or over the sweep grid).
    Optimize {
        /// Round-trip attenuation in dB; sweeps the grid when omitted.
        #[arg(long)]
        alpha_bab: Option<f64>,
    },
    /// Largest attenuation/distance with positive capacity.
    Maxdist {
        /// Capacity floor for the root find.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Monte Carlo validation report (quantity, model, mc, sigma, z).
    Mc {
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, value_enum)]
        leg: Option<LegOpt>,
        /// Round-trip attenuation in dB for the simulated link.
        #[arg(long)]
        alpha_bab: Option<f64>,
    },
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            RunConfig::parse(&text).map_err(CliError::Config)
        }
    }
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        None => Box::new(std::io::stdout().lock()),
        Some(p) => Box::new(std::fs::File::create(p)?),
    })
}

fn cmd_dist(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let mut sp = cfg.source.to_params();
    if let Some(mu) = cli.mu {
        sp.mu = mu;
    }
    sp.validate()?;
    let n_max = cli.n_max.unwrap_or(cfg.n_max());
    let poisson = poisson_dist(sp.mu, n_max.max(2))?;
    let events = [HeraldEvent::X2, HeraldEvent::X3, HeraldEvent::X4];
    let dists: Vec<_> = events
        .iter()
        .map(|&ev| heralded_dist(&sp, ev, n_max.max(2)))
        .collect::<Result<_, _>>()?;
    for (ev, d) in events.iter().zip(&dists) {
        if d.event_prob() <= 0.0 {
            eprintln!("warning: event {ev:?} has zero probability; columns are NaN");
        }
    }
    let rows = if sp.mu == 0.0 { 0..=0 } else { 0..=n_max };
    let mut w = csv::Writer::from_writer(open_out(&cli.out)?);
    w.write_record(["n", "q_x2_norm", "q_x3_norm", "q_x4_norm", "poisson"])?;
    for n in rows {
        let mut rec = vec![n.to_string()];
        for d in &dists {
            let v = if d.event_prob() > 0.0 {
                d.normalized(n)
            } else {
                f64::NAN
            };
            rec.push(fmt(v));
        }
        rec.push(fmt(poisson.weight(n)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

struct SweepRow {
    axis_db: f64,
    distance_km: f64,
    point: CapacityPoint,
}

fn sweep_row(rec: &mut Vec<String>, mode: ModeOpt, protocol: ProtocolOpt, row: &SweepRow) {
    let p = &row.point;
    let zero = qsdc_core::EventCapacity {
        iab: 0.0,
        iae: 0.0,
        cs: 0.0,
        q_bab: 0.0,
        e_bab: 0.0,
    };
    let x3 = p.x3.as_ref().unwrap_or(&zero);
    rec.push(fmt(row.axis_db));
    rec.push(fmt(row.distance_km));
    rec.push(fmt(p.mu));
    rec.push(mode.as_str().to_string());
    rec.push(protocol.as_str().to_string());
    rec.push(fmt(p.cs));
    rec.push(fmt(p.x2.cs));
    rec.push(fmt(x3.cs));
    rec.push(fmt(p.x2.iab));
    rec.push(fmt(x3.iab));
    rec.push(fmt(p.x2.iae));
    rec.push(fmt(x3.iae));
    for b in [
        p.bounds.map(|b| b.y1_l),
        p.bounds.map(|b| b.y2_l),
        p.bounds.map(|b| b.e1_u),
        p.bounds.map(|b| b.e2_u),
    ] {
        rec.push(fmt(b.unwrap_or(f64::NAN)));
    }
    rec.push(fmt(p.x2.q_bab));
    rec.push(fmt(p.x2.e_bab));
    rec.push(fmt(x3.q_bab));
    rec.push(fmt(x3.e_bab));
}

fn cmd_sweep(
    cli: &Cli,
    cfg: &RunConfig,
    alpha_min: Option<f64>,
    alpha_max: Option<f64>,
    step: Option<f64>,
    one_way: bool,
) -> Result<(), CliError> {
    let lo = alpha_min.unwrap_or(cfg.sweep.alpha_min_db);
    let hi = alpha_max.unwrap_or(cfg.sweep.alpha_max_db);
    let step = step.unwrap_or(cfg.sweep.step_db);
    if !step.is_finite() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::Config(format!(
            "sweep.step_db = {step} must be positive and bounds finite"
        )));
    }
    if hi < lo {
        return Err(CliError::Config(format!(
            "empty sweep grid: alpha_min_db = {lo} exceeds alpha_max_db = {hi}"
        )));
    }
    let mus: Vec<f64> = match cli.mu {
        Some(mu) => vec![mu],
        None => cfg
            .sweep
            .mu_values
            .clone()
            .unwrap_or_else(|| vec![cfg.source.mu]),
    };
    if mus.is_empty() || mus.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(CliError::Config(
            "sweep.mu_values must be non-empty, finite and non-negative".into(),
        ));
    }
    let n_alpha = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let mode = cli.mode.unwrap_or(cfg.mode());
    let protocol = cli.protocol.unwrap_or(cfg.protocol());
    let ratio = cfg.eve_ratio();
    let n_max = cli.n_max.unwrap_or(cfg.n_max());

    // rows ordered by attenuation then intensity
    let jobs: Vec<(f64, f64)> = (0..n_alpha)
        .flat_map(|i| {
            let axis = lo + i as f64 * step;
            mus.iter().map(move |&mu| (axis, mu))
        })
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(axis, mu)| -> Result<SweepRow, CliError> {
            let lp = cfg.link.to_params(axis, one_way);
            let sp = cfg.source.to_params().with_mu(mu);
            let point = match protocol {
                ProtocolOpt::Hsps => capacity(&sp, &lp, Mode::from(mode), ratio, n_max)?,
                ProtocolOpt::Dl04 => dl04_capacity(mu, &lp, Mode::from(mode), ratio, n_max)?,
            };
            let distance_km = if one_way { axis / 0.2 } else { axis / 0.4 };
            Ok(SweepRow {
                axis_db: axis,
                distance_km,
                point,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut w = csv::Writer::from_writer(open_out(&cli.out)?);
    let alpha_col = if one_way {
        "alpha_ba_db"
    } else {
        "alpha_bab_db"
    };
    w.write_record([
        alpha_col,
        "distance_km",
        "mu",
        "mode",
        "protocol",
        "cs",
        "cs_x2",
        "cs_x3",
        "iab_x2",
        "iab_x3",
        "iae_x2",
        "iae_x3",
        "y1_l",
        "y2_l",
        "e1_u",
        "e2_u",
        "q_bab_x2",
        "e_bab_x2",
        "q_bab_x3",
        "e_bab_x3",
    ])?;
    for row in &rows {
        let mut rec = Vec::with_capacity(20);
        sweep_row(&mut rec, mode, protocol, row);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_optimize(cli: &Cli, cfg: &RunConfig, alpha_bab: Option<f64>) -> Result<(), CliError> {
    let mode = cli.mode.unwrap_or(cfg.mode());
    let protocol = cli.protocol.unwrap_or(cfg.protocol());
    let sp = cfg.source.to_params();
    let lp = cfg.link.to_params(cfg.link.alpha_db, false);
    let n_max = cli.n_max.unwrap_or(cfg.n_max());
    let mut w = csv::Writer::from_writer(open_out(&cli.out)?);
    w.write_record([
        "alpha_bab_db",
        "distance_km",
        "protocol",
        "mode",
        "mu_star",
        "cs_star",
        "evaluations",
    ])?;
    let alphas: Vec<f64> = match alpha_bab {
        Some(a) => vec![a],
        None => {
            let s = &cfg.sweep;
            let n = ((s.alpha_max_db - s.alpha_min_db) / s.step_db + 1e-9).floor() as usize + 1;
            (0..n)
                .map(|i| s.alpha_min_db + i as f64 * s.step_db)
                .collect()
        }
    };
    let single = alphas.len() == 1;
    for alpha in alphas {
        let res = optimal_mu(
            alpha,
            Protocol::from(protocol),
            &sp,
            &lp,
            (1e-4, 1.0),
            Mode::from(mode),
            cfg.eve_ratio(),
            n_max,
        );
        let (mu_star, cs_star, evals) = match res {
            Ok(r) => (r.mu_star, r.cs_star, r.evaluations),
            Err(CoreError::NoPositiveCapacity) if !single => (f64::NAN, 0.0, 0),
            Err(e) => return Err(e.into()),
        };
        w.write_record([
            fmt(alpha),
            fmt(alpha / 0.4),
            protocol.as_str().to_string(),
            mode.as_str().to_string(),
            fmt(mu_star),
            fmt(cs_star),
            evals.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_maxdist(cli: &Cli, cfg: &RunConfig, floor: Option<f64>) -> Result<(), CliError> {
    let mode = cli.mode.unwrap_or(cfg.mode());
    let protocol = cli.protocol.unwrap_or(cfg.protocol());
    let mut sp = cfg.source.to_params();
    if let Some(mu) = cli.mu {
        sp.mu = mu;
    }
    let lp = cfg.link.to_params(cfg.link.alpha_db, false);
    let root = max_distance(
        sp.mu,
        Protocol::from(protocol),
        &sp,
        &lp,
        floor.unwrap_or(CAPACITY_FLOOR),
        Mode::from(mode),
        cfg.eve_ratio(),
        cli.n_max.unwrap_or(cfg.n_max()),
    )?;
    let mut w = csv::Writer::from_writer(open_out(&cli.out)?);
    w.write_record([
        "protocol",
        "mode",
        "mu",
        "alpha_star_db",
        "distance_km",
        "iterations",
    ])?;
    w.write_record([
        protocol.as_str().to_string(),
        mode.as_str().to_string(),
        fmt(sp.mu),
        fmt(root.alpha_star_db),
        fmt(root.distance_km),
        root.iterations.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn cmd_mc(
    cli: &Cli,
    cfg: &RunConfig,
    shots: Option<u64>,
    leg: Option<LegOpt>,
    alpha_bab: Option<f64>,
) -> Result<(), CliError> {
    let mut sp = cfg.source.to_params();
    if let Some(mu) = cli.mu {
        sp.mu = mu;
    }
    let mc = McConfig {
        shots: shots.unwrap_or(cfg.mc.shots),
        seed: cli.seed.unwrap_or(cfg.mc.seed),
        sp,
        lp: cfg
            .link
            .to_params(alpha_bab.unwrap_or(cfg.link.alpha_db), false),
        leg: leg.unwrap_or(cfg.mc.leg).into(),
    };
    if mc.shots == 0 {
        return Err(CliError::Config("mc.shots must be at least 1".into()));
    }
    let rows = qsdc_core::estimate_vs_model(&mc)?;
    let mut out = open_out(&cli.out)?;
    writeln!(
        out,
        "# rng: {}, seed: {}, shots: {}",
        qsdc_core::mc::RNG_ALGORITHM,
        mc.seed,
        mc.shots
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "model", "mc", "sigma", "z"])?;
    for r in &rows {
        w.write_record([
            r.quantity.clone(),
            fmt(r.model),
            fmt(r.mc),
            fmt(r.sigma),
            fmt(r.z),
        ])?;
        if r.flagged() {
            eprintln!("warning: |z| > 4 for {}: z = {}", r.quantity, r.z);
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.config)?;
    match &cli.cmd {
        Cmd::Dist => cmd_dist(cli, &cfg),
        Cmd::Sweep {
            alpha_min,
            alpha_max,
            step,
            one_way,
        } => cmd_sweep(cli, &cfg, *alpha_min, *alpha_max, *step, *one_way),
        Cmd::Optimize { alpha_bab } => cmd_optimize(cli, &cfg, *alpha_bab),
        Cmd::Maxdist { floor } => cmd_maxdist(cli, &cfg, *floor),
        Cmd::Mc {
            shots,
            leg,
            alpha_bab,
        } => cmd_mc(cli, &cfg, *shots, *leg, *alpha_bab),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
