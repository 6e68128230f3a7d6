//! Subcommands. Exit status: 0 success without alarm, 2 success with an
//! alarm raised during the run, 1 any error.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use entmatch::betting::AlarmConfig;
use entmatch::engine::{Engine, EngineConfig, Mode, StepRecord};
use entmatch::error::{Error, Result};
use entmatch::io::{self as eio, KeyValues};
use entmatch::losses::MatchConfig;
use entmatch::presets::{run_toy, ToyRunConfig};
use entmatch::sfogd::SfogdConfig;
use entmatch::streamgen::{self, Segment, StreamKind, StreamSpec};
use entmatch::toy::{omega_grid, risk_curve, GaussianScenario, Sampling};

#[derive(Debug, Parser)]
#[command(
    name = "entmatch",
    version,
    about = "Online entropy matching: drift monitoring and test-time adaptation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a source CDF artifact from one entropy per line.
    Calibrate {
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the drift monitor over an entropy stream and emit step records.
    Monitor(StreamArgs),
    /// Emit one pseudo-entropy per input entropy.
    Transport(StreamArgs),
    /// Run the two-Gaussian adaptation experiment.
    AdaptToy(ToyArgs),
    /// Tabulate entropy and match risks over a grid of thresholds.
    RiskCurve(RiskArgs),
    /// Generate a seeded synthetic stream.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct EngineFlags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct StreamArgs {
    #[arg(long)]
    artifact: PathBuf,
    /// Entropy stream, `-` for stdin.
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `monitor-only` or `transport-only`.
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    engine: EngineFlags,
}

#[derive(Debug, Args)]
struct ToyArgs {
    /// `fig1-indist` or `fig1-shift`.
    #[arg(long, default_value = "fig1-shift")]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shift: Option<f64>,
    /// Step-record trace destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineFlags,
}

#[derive(Debug, Args)]
struct RiskArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// `uniform-null`, `gaussian-toy`, or `entropy-direct`.
    #[arg(long, default_value = "entropy-direct")]
    kind: String,
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    #[arg(long, default_value_t = 10_000)]
    length: usize,
    /// `shift:length,...`; overrides --shift and --length.
    #[arg(long)]
    segments: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Label sidecar for the Gaussian kinds.
    #[arg(long)]
    labels: Option<PathBuf>,
}

pub enum Outcome {
    NoAlarm,
    Alarm,
}

impl Outcome {
    fn from_alarm(alarm: Option<u64>) -> Self {
        match alarm {
            Some(_) => Self::Alarm,
            None => Self::NoAlarm,
        }
    }
}

const ENGINE_KEYS: &[&str] = &[
    "D",
    "gamma",
    "eta",
    "alpha",
    "lambda",
    "action_delay",
    "batch_size",
    "max_updates",
    "mode",
    "loss",
    "transport",
];
const TOY_KEYS: &[&str] = &[
    "shift",
    "seed",
    "calibration_per_class",
    "test_per_class",
    "eval_per_class",
];
const RISK_KEYS: &[&str] = &[
    "shift",
    "seed",
    "n_per_class",
    "sampling",
    "omega_min",
    "omega_max",
    "omega_step",
];

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Calibrate { stream, out } => calibrate(&stream, &out),
        Command::Monitor(args) => monitor(args, Mode::MonitorOnly, false),
        Command::Transport(args) => monitor(args, Mode::TransportOnly, true),
        Command::AdaptToy(args) => adapt_toy(args),
        Command::RiskCurve(args) => risk(args),
        Command::Simulate(args) => simulate(args),
    }
}

fn name_of(path: &Path) -> String {
    path.display().to_string()
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    Ok(Box::new(BufReader::new(file)))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = File::create(p)
                .map_err(|e| Error::Input(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn load_config(path: Option<&Path>, allowed: &[&str]) -> Result<KeyValues> {
    let Some(path) = path else {
        return Ok(KeyValues::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let kv = KeyValues::parse(&text, &name_of(path))?;
    kv.check_keys(allowed)?;
    Ok(kv)
}

/// Config-file values first, then command-line flags on top.
fn engine_config(
    mut base: EngineConfig,
    kv: &KeyValues,
    flags: &EngineFlags,
) -> Result<EngineConfig> {
    let clip = kv.get("D")?.unwrap_or(base.sfogd.clip());
    let gamma = kv.get("gamma")?.unwrap_or(base.sfogd.gamma());
    base.sfogd = SfogdConfig::new(clip, gamma)?;
    if let Some(eta) = flags.eta.or(kv.get("eta")?) {
        base.eta = eta;
    }
    if let Some(alpha) = flags.alpha.or(kv.get("alpha")?) {
        base.alarm = AlarmConfig::new(alpha)?;
    }
    if let Some(lambda) = flags.lambda.or(kv.get("lambda")?) {
        base.matching = MatchConfig::new(lambda)?;
    }
    if let Some(delay) = kv.get("action_delay")? {
        base.action_delay = delay;
    }
    if let Some(batch) = kv.get("batch_size")? {
        base.batch_size = batch;
    }
    match kv.get_str("max_updates") {
        Some("none") => base.max_updates = None,
        Some(_) => base.max_updates = kv.get("max_updates")?,
        None => {}
    }
    if let Some(mode) = kv.get("mode")? {
        base.mode = mode;
    }
    if let Some(loss) = kv.get("loss")? {
        base.loss = loss;
    }
    if let Some(transport) = kv.get("transport")? {
        base.transport = transport;
    }
    base.validate()?;
    Ok(base)
}

fn calibrate(stream: &Path, out: &Path) -> Result<Outcome> {
    let values = eio::read_values(open_input(stream)?, &name_of(stream))?;
    let cdf = entmatch::EmpiricalCdf::new(values)?;
    let mut w = open_output(Some(out))?;
    eio::write_artifact(&mut w, &cdf)?;
    w.flush()?;
    println!(
        "n={} min={} max={}",
        cdf.len(),
        eio::fmt_f64(cdf.min()),
        eio::fmt_f64(cdf.max())
    );
    Ok(Outcome::NoAlarm)
}

fn monitor(args: StreamArgs, default_mode: Mode, emit_pseudo: bool) -> Result<Outcome> {
    let kv = load_config(args.engine.config.as_deref(), ENGINE_KEYS)?;
    let mut config = engine_config(
        EngineConfig {
            mode: default_mode,
            ..EngineConfig::default()
        },
        &kv,
        &args.engine,
    )?;
    if let Some(mode) = &args.mode {
        config.mode = mode.parse()?;
    }
    if !config.mode.is_model_free() {
        return Err(Error::Config(
            "this command streams entropies; use monitor-only or transport-only".into(),
        ));
    }
    let source = eio::read_artifact(open_input(&args.artifact)?, &name_of(&args.artifact))?;
    let mut engine = Engine::from_cdf(config, source)?;
    let values = eio::read_values(open_input(&args.stream)?, &name_of(&args.stream))?;
    let mut w = open_output(args.out.as_deref())?;
    for v in values {
        let record = engine.step(v)?;
        if emit_pseudo {
            writeln!(w, "{}", eio::fmt_f64(record.z_tilde))?;
        } else {
            writeln!(w, "{}", eio::step_record_json(&record))?;
        }
    }
    w.flush()?;
    if let Some(step) = engine.alarm_step() {
        eprintln!("alarm at step {step}");
    }
    Ok(Outcome::from_alarm(engine.alarm_step()))
}

fn adapt_toy(args: ToyArgs) -> Result<Outcome> {
    let mut allowed = ENGINE_KEYS.to_vec();
    allowed.extend_from_slice(TOY_KEYS);
    let kv = load_config(args.engine.config.as_deref(), &allowed)?;
    let seed = args.seed.or(kv.get("seed")?).unwrap_or(0);
    let mut run = ToyRunConfig::preset(&args.preset, seed)?;
    run.engine = engine_config(run.engine, &kv, &args.engine)?;
    if run.engine.mode != Mode::ToyModel {
        return Err(Error::Config("adapt-toy needs toy-model mode".into()));
    }
    if let Some(shift) = args.shift.or(kv.get("shift")?) {
        run.shift = shift;
    }
    if let Some(n) = kv.get("calibration_per_class")? {
        run.calibration_per_class = n;
    }
    if let Some(n) = kv.get("test_per_class")? {
        run.test_per_class = n;
    }
    if let Some(n) = kv.get("eval_per_class")? {
        run.eval_per_class = n;
    }
    let out = run_toy(&run)?;
    if let Some(path) = &args.out {
        write_trace(path, &out.trace)?;
    }
    println!("{}", out.report.to_json());
    Ok(Outcome::from_alarm(out.report.alarm_step))
}

fn write_trace(path: &Path, trace: &[StepRecord]) -> Result<()> {
    let mut w = open_output(Some(path))?;
    eio::write_records(&mut w, trace)?;
    w.flush()?;
    Ok(())
}

fn risk(args: RiskArgs) -> Result<Outcome> {
    let kv = load_config(args.config.as_deref(), RISK_KEYS)?;
    let shift = args.shift.or(kv.get("shift")?).unwrap_or(1.0);
    let seed = args.seed.or(kv.get("seed")?).unwrap_or(0);
    let n = kv.get("n_per_class")?.unwrap_or(20_000);
    let sampling: Sampling = kv.get("sampling")?.unwrap_or(Sampling::Stratified);
    let grid = omega_grid(
        kv.get("omega_min")?.unwrap_or(-3.0),
        kv.get("omega_max")?.unwrap_or(4.0),
        kv.get("omega_step")?.unwrap_or(0.05),
    )?;
    let scenario = GaussianScenario {
        sampling,
        ..GaussianScenario::new(shift, n, seed)?
    };
    let points = risk_curve(&scenario, &grid)?;
    let mut w = open_output(args.out.as_deref())?;
    writeln!(w, "omega,entropy_risk,match_risk")?;
    for p in points {
        writeln!(
            w,
            "{},{},{}",
            eio::fmt_f64(p.omega),
            eio::fmt_f64(p.entropy_risk),
            eio::fmt_f64(p.match_risk)
        )?;
    }
    w.flush()?;
    Ok(Outcome::NoAlarm)
}

fn simulate(args: SimulateArgs) -> Result<Outcome> {
    let kind: StreamKind = args.kind.parse()?;
    let segments = match &args.segments {
        Some(text) => streamgen::parse_segments(text)?,
        None => vec![Segment {
            shift: args.shift,
            length: args.length,
        }],
    };
    let spec = StreamSpec::new(kind, segments, args.seed)?;
    let generated = streamgen::generate(&spec)?;
    let mut w = open_output(args.out.as_deref())?;
    eio::write_values(&mut w, &generated.values)?;
    w.flush()?;
    if let Some(path) = &args.labels {
        let labels = generated
            .labels
            .ok_or_else(|| Error::Config(format!("stream kind {:?} has no labels", args.kind)))?;
        let mut lw = open_output(Some(path))?;
        for y in labels {
            writeln!(lw, "{y}")?;
        }
        lw.flush()?;
    }
    Ok(Outcome::NoAlarm)
}
