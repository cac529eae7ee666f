use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use forage_core::environment::{generate_environment, Environment};
use forage_core::metrics::{self, ACTIVITY_WINDOW, DEFAULT_WINDOW};
use forage_core::population::Simulation;
use forage_core::rng::{stream, Stream};
use forage_core::runlog::{RunLog, RunStatus};
use forage_core::textmodel::{bootstrap, Classifier};
use forage_core::RunConfig;

/// Exit code of a run whose population died out.
const EXIT_EXTINCT: u8 = 3;

#[derive(Parser)]
#[command(name = "forage", version, about = "News forager population simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the environment and classifier snapshots for a seed.
    Generate(RunArgs),
    /// Run the simulation and write its run log and final state.
    Run(RunArgs),
    /// Compute CSV tables from a run log.
    Metrics(MetricsArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Config file; defaults apply to every key it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config's.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root. Falls back to FORAGE_OUT, then to the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run length in virtual days.
    #[arg(long)]
    days: Option<u64>,
    /// Multiplies the per-send cost, both in profit and in life value.
    #[arg(long)]
    cost_scale: Option<f64>,
    /// Inclusive seed range `a..b`, run in parallel.
    #[arg(long, conflicts_with = "seed")]
    seeds: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Table {
    All,
    Ratios,
    Compartment,
    Population,
    Twostep,
}

#[derive(Args)]
struct MetricsArgs {
    /// Run log to analyze.
    runlog: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    which: Table,
    /// Directory for the CSV files; defaults to the run log's directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Window width in ticks for every table. Without it, ratios use 75 and
    /// the compartmentalization tables use 1250.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    window: Option<u64>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => {
            for cfg in configs(&args)? {
                let dir = generate(&cfg)?;
                println!("{}", dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => run_all(configs(&args)?),
        Command::Metrics(args) => {
            write_metrics(&args)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_seeds(text: &str) -> Result<std::ops::RangeInclusive<u64>> {
    let (a, b) = text
        .split_once("..")
        .with_context(|| format!("seed range `{text}` is not of the form a..b"))?;
    let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
    if a > b {
        bail!("empty seed range `{text}`");
    }
    Ok(a..=b)
}

/// One config per requested seed, with command-line overrides applied.
fn configs(args: &RunArgs) -> Result<Vec<RunConfig>> {
    let mut base = match &args.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(out) = args.out.clone().or_else(|| std::env::var_os("FORAGE_OUT").map(PathBuf::from)) {
        base.output_dir = out;
    }
    if let Some(days) = args.days {
        base.virtual_days = days;
    }
    if let Some(scale) = args.cost_scale {
        base.cost_scale = scale;
    }
    let seeds: Vec<u64> = match (&args.seeds, args.seed) {
        (Some(range), _) => parse_seeds(range)?.collect(),
        (None, Some(seed)) => vec![seed],
        (None, None) => vec![base.seed],
    };
    seeds
        .into_iter()
        .map(|seed| {
            let cfg = RunConfig { seed, ..base.clone() };
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

fn run_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join(format!("seed-{}", cfg.seed))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn write_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# forage {}", env!("CARGO_PKG_VERSION"))?;
    w.write_all(cfg.to_text().as_bytes())?;
    w.flush()?;
    Ok(())
}

fn generate(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = run_dir(cfg);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let env = generate_environment(&cfg.env_config(), &mut stream(cfg.seed, Stream::Environment))?;
    let model = bootstrap(
        env.topic_model(),
        cfg.bootstrap_docs,
        cfg.background_docs,
        cfg.clusters,
        &mut stream(cfg.seed, Stream::Bootstrap),
    )?;
    let mut w = create(&dir.join("environment.snap"))?;
    env.write_snapshot(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("classifier.snap"))?;
    model.classifier.write_snapshot(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("edges.txt"))?;
    env.write_edge_list(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("nodes.txt"))?;
    env.write_node_table(&mut w)?;
    w.flush()?;
    write_config(cfg, &dir.join("generated.toml"))?;
    Ok(dir)
}

/// Loads the snapshots of `cfg`'s run directory, generating them first when
/// they are missing or were built from a different world.
fn load_world(cfg: &RunConfig) -> Result<(Environment, Classifier)> {
    let dir = run_dir(cfg);
    let stamp = dir.join("generated.toml");
    let current = stamp.exists() && RunConfig::load(&stamp).is_ok_and(|old| old.same_world(cfg));
    if !current {
        generate(cfg)?;
    }
    let env_path = dir.join("environment.snap");
    let env = Environment::read_snapshot(open(&env_path)?).with_context(|| format!("reading {}", env_path.display()))?;
    let cls_path = dir.join("classifier.snap");
    let classifier =
        Classifier::read_snapshot(open(&cls_path)?).with_context(|| format!("reading {}", cls_path.display()))?;
    Ok((env, classifier))
}

fn run_one(cfg: &RunConfig) -> Result<RunStatus> {
    let (env, classifier) = load_world(cfg)?;
    let dir = run_dir(cfg);
    let mut sim = Simulation::from_parts(cfg, env, classifier)?;
    let status = sim.run()?;
    write_config(cfg, &dir.join("config.toml"))?;
    let mut w = create(&dir.join("runlog.txt"))?;
    sim.log().write_to(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("state.txt"))?;
    sim.write_state(&mut w)?;
    w.flush()?;
    println!(
        "seed {} {} at tick {} with {} foragers: {}",
        cfg.seed,
        status,
        sim.clock(),
        sim.foragers().len(),
        dir.display()
    );
    Ok(status)
}

fn run_all(cfgs: Vec<RunConfig>) -> Result<ExitCode> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cfgs.len().max(1));
    let chunks: Vec<&[RunConfig]> = cfgs.chunks(cfgs.len().div_ceil(workers).max(1)).collect();
    let results: Vec<Result<RunStatus>> = std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| s.spawn(move || chunk.iter().map(run_one).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("run thread panicked"))
            .collect()
    });
    let mut extinct = false;
    for r in results {
        extinct |= r? == RunStatus::Extinct;
    }
    Ok(if extinct {
        ExitCode::from(EXIT_EXTINCT)
    } else {
        ExitCode::SUCCESS
    })
}

fn write_metrics(args: &MetricsArgs) -> Result<()> {
    let log = RunLog::read_from(open(&args.runlog)?).with_context(|| format!("reading {}", args.runlog.display()))?;
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args.runlog.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let want = |t: Table| args.which == Table::All || args.which == t;
    let ratio_window = args.window.unwrap_or(DEFAULT_WINDOW);
    let activity_window = args.window.unwrap_or(ACTIVITY_WINDOW);
    let order = metrics::birth_order(&log);
    if want(Table::Ratios) {
        let mut w = create(&dir.join("ratios.csv"))?;
        metrics::write_ratios_csv(&metrics::reward_ratios(&log, ratio_window), &mut w)?;
        w.flush()?;
    }
    if want(Table::Compartment) {
        let mut w = create(&dir.join("compartment.csv"))?;
        metrics::write_stacked_csv(&metrics::single_visitor_fraction(&log, activity_window), &order, &mut w)?;
        w.flush()?;
    }
    if want(Table::Twostep) {
        let mut w = create(&dir.join("twostep.csv"))?;
        metrics::write_stacked_csv(&metrics::two_step_overlap(&log, activity_window), &order, &mut w)?;
        w.flush()?;
    }
    if want(Table::Population) {
        let mut w = create(&dir.join("population.csv"))?;
        metrics::write_population_csv(&metrics::population_timeline(&log), &mut w)?;
        w.flush()?;
    }
    Ok(())
}
