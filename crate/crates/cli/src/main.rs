use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cdhoc::decomp::Method;
use cdhoc::harness::{
    accuracy_with_tolerance, common_samples, format_report_table, load_dataset, load_model,
    run_benchmark, save_dataset, save_model, write_components, write_lag_sweep, write_prediction,
    write_report, write_series, Dataset, EvalReport, RunConfig, SavedModel,
};
use cdhoc::lag::select_lag;
use cdhoc::predictor::{predict, train, LagPolicy};
use cdhoc::series::SampledSeries;
use cdhoc::sim::{preset, RoomModel, PRESETS};
use cdhoc::svr::{fit_svr, predict_svr, SvrConfig};
use cdhoc::Error;

#[derive(Parser)]
#[command(
    name = "cdhoc",
    version,
    about = "Indoor occupancy counting from CO2 concentration"
)]
struct Cli {
    /// Random seed; overrides the seeds listed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Accuracy tolerance in occupants; repeat or comma-separate for several.
    #[arg(long, global = true, value_delimiter = ',')]
    tolerance: Vec<f64>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV from a room preset.
    Simulate(SimulateArgs),
    /// Split the CO2 series into trend, seasonal and irregular components.
    Decompose(DecomposeArgs),
    /// Fit the CO2 to occupancy line at every candidate lag.
    Lagsweep(LagsweepArgs),
    /// Train a model on a labelled dataset and save it.
    Train(TrainArgs),
    /// Predict occupancy from CO2 with a saved model.
    Predict(PredictArgs),
    /// Run the incremental-split benchmark.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "office", value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: String,
    /// Number of days; defaults to the preset's length.
    #[arg(long)]
    days: Option<usize>,
    /// Air changes per hour; defaults to the preset's ventilation.
    #[arg(long)]
    ach: Option<f64>,
    /// Sensor noise standard deviation in ppm; 0 disables noise.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// std or stl; defaults to the config method.
    #[arg(long)]
    method: Option<Method>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct LagsweepArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Largest lag in samples; defaults to the config lag bound.
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// std, stl or svr; defaults to the config method.
    #[arg(long)]
    method: Option<String>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(short, long)]
    model: PathBuf,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Labelled dataset; exclusive with --preset.
    #[arg(short, long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// Simulate this preset once per seed instead of reading a file.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    /// Report CSV; with several seeds one file per seed is written.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Directory for the per-split prediction CSVs.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

/// Exit 1 for bad input, 2 when a model could not be trained or evaluated.
enum Failure {
    Validation(String),
    Training(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Training(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Training(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if !cli.tolerance.is_empty() {
        cfg.tolerances = cli.tolerance.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn read_input(path: &Path, cfg: &RunConfig) -> Result<Dataset, Failure> {
    load_dataset(path, &cfg.ingest).map_err(|e| match e {
        Error::Io(io) => Failure::Validation(format!("{}: {io}", path.display())),
        other => Failure::Validation(format!("{}: {other}", path.display())),
    })
}

fn labelled(data: Dataset) -> Result<(SampledSeries, SampledSeries, i64), Failure> {
    let offset = data.utc_offset;
    let pair = data.into_pair()?;
    Ok((pair.co2, pair.occupancy, offset))
}

fn run(cli: &Cli) -> Outcome {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Simulate(a) => simulate(a, &cfg),
        Command::Decompose(a) => decompose(a, &cfg),
        Command::Lagsweep(a) => lagsweep(a, &cfg),
        Command::Train(a) => train_model(a, &cfg),
        Command::Predict(a) => predict_file(a, &cfg),
        Command::Evaluate(a) => evaluate(a, &cfg),
    }
}

fn simulate(a: &SimulateArgs, cfg: &RunConfig) -> Outcome {
    let mut p = preset(&a.preset)?;
    if let Some(days) = a.days {
        if days == 0 {
            return Err(Failure::Validation("--days must be at least 1".into()));
        }
        p.days = days;
    }
    if let Some(ach) = a.ach {
        p.room = RoomModel::with_air_changes(p.room.geometry, ach, p.room.inlet_concentration);
        p.room.validate()?;
    }
    let seed = cfg.seeds[0];
    let schedule = p.template.generate(p.start, p.days, seed);
    let noise = a.noise.unwrap_or(p.noise_sigma);
    if !(noise >= 0.0) {
        return Err(Failure::Validation("--noise must be >= 0".into()));
    }
    p.noise_sigma = noise;
    let (co2, occ) = cdhoc::sim::simulate(&p.room, &schedule, &p.sim_config(seed, noise > 0.0))?;
    save_dataset(&a.output, &co2, Some(&occ), p.utc_offset)?;
    log::info!("wrote {} samples to {}", co2.len(), a.output.display());
    Ok(())
}

fn decompose(a: &DecomposeArgs, cfg: &RunConfig) -> Outcome {
    let data = read_input(&a.input, cfg)?;
    let mut train = cfg.train_config(data.co2.interval(), data.utc_offset)?;
    if let Some(m) = a.method {
        train.method = m;
    }
    let period = train.period_for(data.co2.interval());
    let components = train.decomp_config(period).decompose(&data.co2)?;
    write_components(create(&a.output)?, &data.co2, &components, data.utc_offset)?;
    Ok(())
}

fn lag_bound(policy: LagPolicy) -> usize {
    match policy {
        LagPolicy::Search { max } | LagPolicy::Fixed(max) => max,
    }
}

fn lagsweep(a: &LagsweepArgs, cfg: &RunConfig) -> Outcome {
    let (co2, occ, _) = labelled(read_input(&a.input, cfg)?)?;
    let max = match a.max_lag {
        Some(m) => m,
        None => lag_bound(cfg.lag_policy(co2.interval())?),
    };
    let sweep = select_lag(&co2, &occ, max)?;
    let interval = co2.interval();
    write_lag_sweep(create(&a.output)?, &sweep, interval)?;
    println!(
        "selected lag {} samples ({} min)",
        sweep.best_lag,
        sweep.best_lag as f64 * interval as f64 / 60.0
    );
    Ok(())
}

fn svr_lag(policy: LagPolicy, co2: &SampledSeries, occ: &SampledSeries) -> cdhoc::Result<usize> {
    match policy {
        LagPolicy::Fixed(k) => Ok(k),
        LagPolicy::Search { max } => Ok(select_lag(co2, occ, max)?.best_lag),
    }
}

fn train_model(a: &TrainArgs, cfg: &RunConfig) -> Outcome {
    let (co2, occ, offset) = labelled(read_input(&a.input, cfg)?)?;
    let mut train_cfg = cfg.train_config(co2.interval(), offset)?;
    let method = a.method.as_deref().map(str::to_ascii_lowercase);
    let saved = match method.as_deref() {
        Some("svr") => {
            let lag = svr_lag(train_cfg.lag, &co2, &occ)
                .map_err(|e| Failure::Training(format!("lag: {e}")))?;
            let svr_cfg = SvrConfig {
                lag,
                seed: cfg.seeds[0],
                ..cfg.svr.clone()
            };
            SavedModel::Svr(fit_svr(&co2, &occ, &svr_cfg)?)
        }
        other => {
            if let Some(m) = other {
                train_cfg.method = m.parse::<Method>()?;
            }
            let model = train(&co2, &occ, &train_cfg)?;
            for w in &model.warnings {
                log::warn!("{w}");
            }
            SavedModel::Occupancy(Box::new(model))
        }
    };
    save_model(&a.output, &saved)?;
    Ok(())
}

fn predict_file(a: &PredictArgs, cfg: &RunConfig) -> Outcome {
    let model = load_model(&a.model)?;
    let data = read_input(&a.input, cfg)?;
    let mut out = create(&a.output)?;
    let predicted = match &model {
        SavedModel::Occupancy(m) => {
            let result = predict(m, &data.co2)?;
            write_prediction(&mut out, &result, data.utc_offset)?;
            result.occupancy
        }
        SavedModel::Svr(m) => {
            let occupancy = predict_svr(m, &data.co2)?;
            write_series(&mut out, "occupancy", &occupancy, None, data.utc_offset)?;
            occupancy
        }
    };
    out.flush()?;
    if let Some(actual) = &data.occupancy {
        let (p, a) = common_samples(&predicted, actual)?;
        for &x in &cfg.tolerances {
            println!(
                "accuracy at tolerance {x}: {:.2}%",
                accuracy_with_tolerance(&p, &a, x)?
            );
        }
    }
    Ok(())
}

fn with_seed(path: &Path, seed: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_seed{seed}.{ext}"))
}

fn evaluate(a: &EvaluateArgs, cfg: &RunConfig) -> Outcome {
    let file = match (&a.input, &a.preset) {
        (Some(path), None) => Some(read_input(path, cfg)?),
        (None, Some(_)) => None,
        _ => {
            return Err(Failure::Validation(
                "evaluate needs --input or --preset".into(),
            ))
        }
    };
    let several = cfg.seeds.len() > 1;
    let mut failed = 0;
    let mut reports: Vec<EvalReport> = Vec::new();
    for &seed in &cfg.seeds {
        let data = match (&file, &a.preset) {
            (Some(d), _) => d.clone(),
            (None, Some(name)) => {
                let p = preset(name)?;
                let (co2, occ) = p.generate(seed)?;
                Dataset {
                    co2,
                    occupancy: Some(occ),
                    utc_offset: p.utc_offset,
                }
            }
            (None, None) => unreachable!("checked above"),
        };
        let offset = data.utc_offset;
        let interval = data.co2.interval();
        let mut eval = cfg.eval_config(interval, offset)?;
        eval.svr.seed = seed;
        let report = run_benchmark(&data.into_pair()?, &eval)?;

        if several {
            println!("seed {seed}");
        }
        print!("{}", format_report_table(&report));
        if let Some(path) = &a.output {
            let path = if several {
                with_seed(path, seed)
            } else {
                path.clone()
            };
            write_report(create(&path)?, &report)?;
        }
        if let Some(dir) = &a.predictions {
            let dir = if several {
                dir.join(format!("seed{seed}"))
            } else {
                dir.clone()
            };
            std::fs::create_dir_all(&dir)?;
            for cell in &report.predictions {
                cell.write_csv(create(&dir.join(cell.file_name()))?, offset)?;
            }
        }
        failed += report.failures.len();
        reports.push(report);
    }
    if several {
        println!("mean over {} seeds", cfg.seeds.len());
        for (method, x, _) in reports[0].averages() {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.average(method, x))
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            println!("{method} x={x}: {mean:.2}");
        }
    }
    if failed > 0 {
        return Err(Failure::Training(format!(
            "{failed} benchmark cells failed"
        )));
    }
    Ok(())
}
