use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use evtobs::analyze::{analyze_series, SeriesObservable, SeriesOptions, TargetRows};
use evtobs::config::{ExperimentConfig, Method};
use evtobs::experiments::{run_method, write_trajectory};
use evtobs::ingest::{ingest, write_series, DelimitedFormat};
use evtobs::output::{num, RunDir};
use evtobs::presets::{run_preset, Scale, PRESETS};
use evtobs::synthetic::{synthetic_grid, SyntheticGrid};
use evtobs_core::dynsys::orbit;

#[derive(Parser)]
#[command(name = "evtobs", version, about = "Extreme-value statistics of observables along chaotic orbits")]
struct Cli {
    /// Seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true, default_value = "evtobs-out")]
    out: PathBuf,
    /// TOML experiment description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Record an orbit of the configured system, or a synthetic gridded series.
    Simulate(SimulateArgs),
    /// Local dimension from block maxima.
    Dimension,
    /// Extremal index from exceedances.
    Ei,
    /// Number of visits to a small ball against the limiting laws.
    Visits,
    /// Generalized dimensions of the image measure.
    Spectrum,
    /// Dimension of delay observables of increasing length.
    Embed,
    /// Analyse a delimited-text series.
    Ingest(IngestArgs),
    /// Run a named preset; `list` prints the names.
    Preset(PresetArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of recorded states.
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    /// Starting point; a settled random state when absent.
    #[arg(long, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
    /// Write a synthetic gridded series of ROWS x COLS instead of an orbit.
    #[arg(long, value_name = "ROWSxCOLS")]
    grid: Option<String>,
}

#[derive(Args)]
struct IngestArgs {
    path: PathBuf,
    #[arg(long, default_value = ",")]
    delimiter: char,
    #[arg(long)]
    no_header: bool,
    /// `mean` or a column index.
    #[arg(long, default_value = "mean")]
    observable: String,
    #[arg(long, default_value_t = 50)]
    block: usize,
    #[arg(long, default_value_t = 0.99)]
    quantile: f64,
    /// Number of sampled target rows.
    #[arg(long, default_value_t = 20)]
    targets: usize,
}

#[derive(Args)]
struct PresetArgs {
    name: String,
    /// Long orbits instead of desk scale.
    #[arg(long)]
    full: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("this command needs --config")?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// `Ok(false)` when a preset check failed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    let method = match &cli.cmd {
        Cmd::Dimension => Some("dimension"),
        Cmd::Ei => Some("ei"),
        Cmd::Visits => Some("visits"),
        Cmd::Spectrum => Some("spectrum"),
        Cmd::Embed => Some("embed"),
        _ => None,
    };
    if let Some(name) = method {
        let cfg = load_config(&cli)?;
        if let Some(p) = &cfg.preset {
            return preset(&cli, p, cfg.full_scale, cfg.seed);
        }
        let m: Method = cfg.method_for(name)?;
        let dir = RunDir::create(&cli.out)?;
        let summary = run_method(&cfg, &m, &dir)?;
        println!("{}", serde_json::to_string_pretty(&summary["result"])?);
        return Ok(true);
    }
    match &cli.cmd {
        Cmd::Simulate(a) => simulate(&cli, a),
        Cmd::Ingest(a) => ingest_cmd(&cli, a),
        Cmd::Preset(a) if a.name == "list" => {
            for p in PRESETS {
                println!("{p}");
            }
            Ok(true)
        }
        Cmd::Preset(a) => preset(&cli, &a.name, a.full, cli.seed.unwrap_or(1)),
        _ => unreachable!(),
    }
}

fn preset(cli: &Cli, name: &str, full: bool, seed: u64) -> anyhow::Result<bool> {
    let dir = RunDir::create(&cli.out)?;
    let scale = if full { Scale::Full } else { Scale::Desk };
    let m = run_preset(name, scale, seed, &dir)?;
    for c in &m.checks {
        println!(
            "{} {}: computed {} reference {} ({:?}, tolerance {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            num(c.computed),
            num(c.reference),
            c.relation,
            num(c.tolerance)
        );
    }
    Ok(m.all_pass)
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> anyhow::Result<bool> {
    let dir = RunDir::create(&cli.out)?;
    if let Some(g) = &a.grid {
        let (rows, cols) = g
            .split_once(['x', 'X'])
            .context("--grid expects ROWSxCOLS")?;
        let spec = SyntheticGrid {
            rows: rows.trim().parse()?,
            cols: cols.trim().parse()?,
            seed: cli.seed.unwrap_or(0),
            ..SyntheticGrid::default()
        };
        let s = synthetic_grid(&spec)?;
        write_series(&dir.file("grid.csv"), &s)?;
        return Ok(true);
    }
    let cfg = load_config(cli)?;
    let sys = cfg.system.clone().context("config has no system")?;
    let compiled = sys.compile()?;
    let x0 = match &a.x0 {
        Some(v) => {
            if v.len() != sys.dim() {
                bail!("--x0 needs {} values", sys.dim());
            }
            let mut x = [0.0; 3];
            x[..v.len()].copy_from_slice(v);
            x
        }
        None => compiled.settled_state(&mut evtobs_core::SimRng::derived(cfg.seed, 0, 2)),
    };
    let t = orbit(&sys, x0, a.steps, cfg.seed)?;
    write_trajectory(&dir, "orbit.csv", &t)?;
    dir.write_config(&cfg)?;
    Ok(true)
}

fn ingest_cmd(cli: &Cli, a: &IngestArgs) -> anyhow::Result<bool> {
    if !a.delimiter.is_ascii() {
        bail!("the delimiter must be a single ASCII character");
    }
    let fmt = DelimitedFormat {
        delimiter: a.delimiter as u8,
        header: !a.no_header,
        ..DelimitedFormat::default()
    };
    let series = ingest(&a.path, &fmt)?;
    let observable = match a.observable.as_str() {
        "mean" => SeriesObservable::SpatialMean,
        idx => SeriesObservable::Coordinate {
            index: idx.parse().context("--observable is `mean` or a column index")?,
        },
    };
    let opts = SeriesOptions {
        observable,
        n: a.block,
        quantile: a.quantile,
        targets: TargetRows::Sampled {
            count: a.targets,
            seed: cli.seed.unwrap_or(0),
        },
    };
    let res = analyze_series(&series, &opts)?;
    let dir = RunDir::create(&cli.out)?;
    dir.write_csv(
        "targets.csv",
        &["row", "f0", "kappa", "sigma", "xi", "d", "theta0", "n_exceedances"],
        res.targets.iter().map(|t| {
            vec![
                t.row.to_string(),
                num(t.f0),
                num(t.fit.kappa),
                num(t.fit.sigma),
                num(t.fit.xi),
                num(t.d),
                num(t.theta0),
                t.n_exceedances.to_string(),
            ]
        }),
    )?;
    let summary = serde_json::json!({
        "source": a.path,
        "rows": series.rows,
        "columns": series.labels,
        "dropped_rows": series.dropped(),
        "options": opts,
        "d_mean": res.d_mean,
        "d_sd": res.d_sd,
        "theta0_mean": res.theta0_mean,
        "theta0_sd": res.theta0_sd,
    });
    dir.write_json("summary.json", &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(true)
}
