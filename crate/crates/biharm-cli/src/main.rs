//! Experiment driver: forward simulation, measurement synthesis, Kaczmarz
//! inversion, and ergodic band averaging, with CSV/PGM artifacts and a
//! reproducibility manifest per run.

mod config;
mod manifest;
mod pgm;
mod selftest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biharm::error::{Error, Result};
use biharm::estimators::{
    ergodic_average, measurement_mc, reference_td, MeasurementTable,
};
use biharm::forward::sweep;
use biharm::inverse::{assemble_block, invert, invert_ergodic, BlockSystem};
use biharm::Dim;
use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use manifest::Manifest;

#[derive(Parser)]
#[command(name = "biharm", version, about = "Stochastic biharmonic wave experiments")]
struct Cli {
    /// JSON experiment configuration; defaults reproduce the single-frequency
    /// Gaussian-bump setup when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Inclusive integer frequency range shorthand, e.g. 1:5
    #[arg(long, global = true)]
    frequencies: Option<String>,
    /// Override the configured path count
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Override the regularization parameter
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Override the Kaczmarz sweep count per frequency
    #[arg(long, global = true)]
    sweeps: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate wave samples and write them as CSV
    Forward,
    /// Monte Carlo measurement synthesis across all configured frequencies
    Measure,
    /// Reconstruct the strength from measurement data
    Invert {
        /// Measurement CSV from a previous `measure` run; synthesized inline
        /// when omitted
        #[arg(long)]
        measurements: Option<PathBuf>,
    },
    /// Single-realization frequency-band averages against the T_d reference
    Ergodic,
    /// Fast invariant suite
    Selftest,
}

fn parse_frequencies(text: &str) -> Result<Vec<f64>> {
    let err = || Error::Config(format!("frequency range '{text}' is not of the form a:b"));
    let (a, b) = text.split_once(':').ok_or_else(err)?;
    let a: u64 = a.trim().parse().map_err(|_| err())?;
    let b: u64 = b.trim().parse().map_err(|_| err())?;
    if a == 0 || b < a {
        return Err(err());
    }
    Ok((a..=b).map(|k| k as f64).collect())
}

fn effective_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(text) = &cli.frequencies {
        cfg.frequencies = parse_frequencies(text)?;
    }
    if let Some(paths) = cli.paths {
        cfg.paths = paths;
    }
    if let Some(gamma) = cli.gamma {
        cfg.inversion.gamma = gamma;
    }
    if let Some(sweeps) = cli.sweeps {
        cfg.inversion.sweeps = sweeps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_forward(cfg: &ExperimentConfig, out: &Path, man: &mut Manifest) -> Result<()> {
    let dim = cfg.dim()?;
    let grid = cfg.source_grid()?;
    let recv = cfg.receivers(dim)?;
    let field = cfg.strength()?;
    let path = out.join("waves.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    // one frequency at a time bounds memory at one (receiver x path) block
    for (fi, &k) in cfg.frequencies.iter().enumerate() {
        let samples = sweep(&recv, &[k], &field, &grid, cfg.paths, cfg.seed)?;
        let mut buf = Vec::new();
        samples.write_csv(&mut buf)?;
        let text = std::str::from_utf8(&buf).expect("csv is utf-8");
        let skip = if fi == 0 { 0 } else { 1 };
        for line in text.lines().skip(skip) {
            writeln!(file, "{line}")?;
        }
    }
    file.flush()?;
    drop(file);
    man.record(&path)?;
    println!(
        "forward: {} receivers x {} paths x {} frequencies -> {}",
        recv.len(),
        cfg.paths,
        cfg.frequencies.len(),
        path.display()
    );
    Ok(())
}

fn synthesize_measurements(cfg: &ExperimentConfig) -> Result<MeasurementTable> {
    let dim = cfg.dim()?;
    let grid = cfg.source_grid()?;
    let recv = cfg.receivers(dim)?;
    let field = cfg.strength()?;
    let kind = cfg.inversion.kind();
    let tables: Vec<MeasurementTable> = cfg
        .frequencies
        .iter()
        .map(|&k| {
            let samples = sweep(&recv, &[k], &field, &grid, cfg.paths, cfg.seed)?;
            measurement_mc(&samples, kind)
        })
        .collect::<Result<_>>()?;
    MeasurementTable::merge(&tables)
}

fn run_measure(cfg: &ExperimentConfig, out: &Path, man: &mut Manifest) -> Result<()> {
    let table = synthesize_measurements(cfg)?;
    let path = out.join("measurements.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    table.write_csv(&cfg.domain_grids()?, &mut file)?;
    file.flush()?;
    drop(file);
    man.record(&path)?;
    println!(
        "measure: {} receivers x {} frequencies -> {}",
        table.receivers,
        table.frequencies.len(),
        path.display()
    );
    Ok(())
}

fn run_invert(
    cfg: &ExperimentConfig,
    out: &Path,
    measurements: Option<&Path>,
    man: &mut Manifest,
) -> Result<()> {
    if cfg.dim()? != Dim::Two {
        return Err(Error::Config("inversion from measurement data is 2D".into()));
    }
    let table = match measurements {
        Some(path) => {
            let file = std::fs::File::open(path)?;
            MeasurementTable::read_csv(cfg.inversion.kind(), std::io::BufReader::new(file))?
        }
        None => synthesize_measurements(cfg)?,
    };
    let grid = cfg.source_grid()?;
    let recv = cfg.receivers(Dim::Two)?;
    let field = cfg.strength()?;
    let groups: Vec<Vec<BlockSystem>> = cfg
        .frequencies
        .iter()
        .map(|&k| {
            (0..recv.domain_count())
                .map(|d| assemble_block(&recv, d, &grid, k, &table))
                .collect()
        })
        .collect::<Result<_>>()?;
    let rec = invert(
        groups,
        cfg.inversion.gamma,
        cfg.inversion.sweeps,
        &vec![0.0; grid.num_nodes()],
        cfg.inversion.clamp,
        cfg.seed,
    )?;
    let truth = field.sample_on(&grid);
    println!("invert: relative l2 error {:.6}", rec.relative_l2_error(&truth));

    let rec_path = out.join("reconstruction.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&rec_path)?);
    rec.write_csv(&grid, &field, &mut file)?;
    file.flush()?;
    drop(file);
    man.record(&rec_path)?;
    let res_path = out.join("residuals.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&res_path)?);
    rec.write_residual_csv(&mut file)?;
    file.flush()?;
    drop(file);
    man.record(&res_path)?;
    let true_pgm = out.join("mu_true.pgm");
    pgm::write_heatmap(&true_pgm, &grid, &truth)?;
    man.record(&true_pgm)?;
    let rec_pgm = out.join("mu_rec.pgm");
    pgm::write_heatmap(&rec_pgm, &grid, &rec.q)?;
    man.record(&rec_pgm)?;
    Ok(())
}

fn run_ergodic(cfg: &ExperimentConfig, out: &Path, man: &mut Manifest) -> Result<()> {
    let dim = cfg.dim()?;
    let grid = cfg.source_grid()?;
    let recv = cfg.receivers(dim)?;
    let field = cfg.strength()?;
    let e = &cfg.ergodic;
    if e.nodes < 2 || !(e.t_band > 0.0) {
        return Err(Error::Config("ergodic band needs t_band > 0 and at least 2 nodes".into()));
    }
    let ks: Vec<f64> = (0..e.nodes)
        .map(|i| e.t_band + e.t_band * i as f64 / (e.nodes - 1) as f64)
        .collect();
    let samples = sweep(&recv, &ks, &field, &grid, 1, cfg.seed)?;
    let est = ergodic_average(&samples, 0, e.m, dim, e.t_band)?;
    println!(
        "ergodic: band [{}, {}], spectral exponent m + 7 - d = {}",
        est.band.0, est.band.1, est.exponent
    );
    let refs: Vec<f64> = (0..recv.len())
        .map(|i| reference_td(recv.point(i), &field, &grid, dim))
        .collect::<Result<_>>()?;
    let path = out.join("ergodic.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    est.write_csv(&recv, &refs, &mut file)?;
    file.flush()?;
    drop(file);
    man.record(&path)?;
    if e.invert {
        let rec = invert_ergodic(
            &est,
            &grid,
            &recv,
            dim,
            cfg.inversion.gamma,
            cfg.inversion.sweeps,
            cfg.inversion.clamp,
            cfg.seed,
        )?;
        let truth = field.sample_on(&grid);
        println!(
            "ergodic invert: relative l2 error {:.6}",
            rec.relative_l2_error(&truth)
        );
        let rec_path = out.join("reconstruction.csv");
        let mut file = std::io::BufWriter::new(std::fs::File::create(&rec_path)?);
        rec.write_csv(&grid, &field, &mut file)?;
        file.flush()?;
        drop(file);
        man.record(&rec_path)?;
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 3,
        Error::LinearSolve { .. } | Error::Assembly(_) | Error::Io(_) => 4,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<()> {
    if matches!(cli.cmd, Cmd::Selftest) {
        return if selftest::run() {
            Ok(())
        } else {
            Err(Error::LinearSolve {
                block: "selftest".into(),
                reason: "invariant failures reported above".into(),
            })
        };
    }
    let cfg = effective_config(cli)?;
    std::fs::create_dir_all(&cli.out)?;
    let name = match &cli.cmd {
        Cmd::Forward => "forward",
        Cmd::Measure => "measure",
        Cmd::Invert { .. } => "invert",
        Cmd::Ergodic => "ergodic",
        Cmd::Selftest => unreachable!(),
    };
    let mut man = Manifest::new(name);
    match &cli.cmd {
        Cmd::Forward => run_forward(&cfg, &cli.out, &mut man)?,
        Cmd::Measure => run_measure(&cfg, &cli.out, &mut man)?,
        Cmd::Invert { measurements } => {
            run_invert(&cfg, &cli.out, measurements.as_deref(), &mut man)?
        }
        Cmd::Ergodic => run_ergodic(&cfg, &cli.out, &mut man)?,
        Cmd::Selftest => unreachable!(),
    }
    man.write(&cli.out.join("manifest.txt"), &cfg, cfg.seed)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
