//! End-to-end experiments: configuration, seeded runs, metrics CSV and the
//! three-way model comparison.
//!
//! Configuration comes from command-line flags and, optionally, a flat
//! `key = value` file whose keys are the long flag names (`local-epochs = 5`).
//! Flags win over file values; anything left unset takes its default.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::Parser;

use crate::datagen::{self, Dataset, ScalingReport};
use crate::error::{Error, Result};
use crate::fedring::{self, ClientState, Model, RingSchedule, Transport};
use crate::numfmt::sig9;
use crate::qweights::{QuantumWeightStore, DEFAULT_GAMMA};
use crate::seeds::{derive_rng, STREAM_CHANNEL, STREAM_MODEL_INIT};
use crate::trainkit::{ClassicalMlp, LocalTraining, RoundMetrics, DEFAULT_BATCH_SIZE, DEFAULT_LEARNING_RATE};
use crate::vqc::{VqcModel, DEFAULT_LAYERS, DEFAULT_QUBITS};

pub const METRICS_HEADER: &str = "round,client,mean_train_loss,test_accuracy,wall_ms";
pub const COMPARISON_HEADER: &str = "model,round,client,mean_train_loss,test_accuracy,wall_ms,dataset_checksum";

/// Accuracy band around the final value that defines the convergence round.
pub const CONVERGENCE_BAND: f64 = 0.02;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUTPUT: &str = "metrics.csv";
pub const DEFAULT_COMPARE_OUTPUT: &str = "comparison.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelChoice {
    Cfl,
    QflClassical,
    QflQuantum,
}

impl ModelChoice {
    pub const ALL: [ModelChoice; 3] = [ModelChoice::Cfl, ModelChoice::QflClassical, ModelChoice::QflQuantum];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelChoice::Cfl => "cfl",
            ModelChoice::QflClassical => "qfl-classical",
            ModelChoice::QflQuantum => "qfl-quantum",
        }
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelChoice::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model `{s}` (expected cfl, qfl-classical or qfl-quantum)")))
    }
}

impl FromStr for Transport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy" => Ok(Transport::Copy),
            "teleport" => Ok(Transport::Teleport),
            _ => Err(Error::Config(format!("unknown transport `{s}` (expected copy or teleport)"))),
        }
    }
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transport::Copy => "copy",
            Transport::Teleport => "teleport",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetParams {
    pub points: usize,
    pub noise: f64,
    pub factor: f64,
    pub train_fraction: f64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        DatasetParams {
            points: datagen::DEFAULT_POINTS,
            noise: datagen::DEFAULT_NOISE,
            factor: datagen::DEFAULT_FACTOR,
            train_fraction: datagen::DEFAULT_TRAIN_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelChoice,
    pub clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub gamma: f64,
    pub dataset: DatasetParams,
    pub transport: Transport,
    pub seed: u64,
    pub output: PathBuf,
    pub dump_dataset: Option<PathBuf>,
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    /// Defaults for `model`.
    pub fn new(model: ModelChoice) -> Self {
        ExperimentConfig {
            model,
            clients: fedring::DEFAULT_CLIENTS,
            rounds: fedring::DEFAULT_ROUNDS,
            local_epochs: fedring::DEFAULT_LOCAL_EPOCHS,
            layers: DEFAULT_LAYERS,
            learning_rate: DEFAULT_LEARNING_RATE,
            batch_size: DEFAULT_BATCH_SIZE,
            gamma: DEFAULT_GAMMA,
            dataset: DatasetParams::default(),
            transport: Transport::Copy,
            seed: DEFAULT_SEED,
            output: PathBuf::from(DEFAULT_OUTPUT),
            dump_dataset: None,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.transport == Transport::Teleport && self.model != ModelChoice::QflQuantum {
            return bad(format!("teleport transport requires qfl-quantum, not {}", self.model));
        }
        if self.clients == 0 || self.rounds == 0 || self.local_epochs == 0 {
            return bad("clients, rounds and local-epochs must be at least 1".into());
        }
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch-size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning-rate must be positive, got {}", self.learning_rate));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        let d = &self.dataset;
        if d.points < 2 || d.points % 2 != 0 {
            return bad(format!("points must be even and at least 2, got {}", d.points));
        }
        if !(d.noise >= 0.0 && d.noise.is_finite()) {
            return bad(format!("noise must be non-negative, got {}", d.noise));
        }
        if !(d.factor > 0.0 && d.factor < 1.0) {
            return bad(format!("factor must lie in (0, 1), got {}", d.factor));
        }
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return bad(format!("train-fraction must lie in (0, 1), got {}", d.train_fraction));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<RingSchedule> {
        Ok(RingSchedule {
            num_clients: self.clients,
            num_rounds: self.rounds,
            local_epochs: self.local_epochs,
            transport: self.transport,
            training: LocalTraining::new(self.batch_size, self.learning_rate)?,
            record_wall_time: self.record_wall_time,
        })
    }

    /// Freshly initialized model for this configuration.
    pub fn initial_model(&self) -> Result<Model> {
        let mut rng = derive_rng(self.seed, STREAM_MODEL_INIT);
        Ok(match self.model {
            ModelChoice::Cfl => Model::Classical(ClassicalMlp::random(&mut rng)),
            ModelChoice::QflClassical => Model::Vqc(VqcModel::random(DEFAULT_QUBITS, self.layers, &mut rng)?),
            ModelChoice::QflQuantum => {
                Model::QuantumWeights(QuantumWeightStore::random(DEFAULT_QUBITS, self.layers, self.gamma, &mut rng)?)
            }
        })
    }

    pub fn generate_dataset(&self) -> Result<(Dataset, ScalingReport)> {
        let d = &self.dataset;
        datagen::generate(d.points, d.noise, d.factor, d.train_fraction, self.seed)
    }
}

/// Command-line flags. Every value is optional here so that a config file
/// can fill the gaps.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "qfl-ring", version, about = "Ring-topology federated learning with classical and quantum weights")]
pub struct CliArgs {
    /// Model variant: cfl, qfl-classical or qfl-quantum.
    #[arg(long)]
    pub model: Option<ModelChoice>,
    /// Run several variants on the same dataset into one combined CSV.
    #[arg(long, value_delimiter = ',', conflicts_with = "model")]
    pub compare: Vec<ModelChoice>,
    /// Flat key=value file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub clients: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub local_epochs: Option<usize>,
    /// Variational layers in the quantum circuit.
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Scale applied to materialized quantum weights.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Total make-circles points before the train/test split.
    #[arg(long, visible_alias = "n")]
    pub points: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub factor: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Weight hand-off between clients: copy or teleport.
    #[arg(long)]
    pub transport: Option<Transport>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Metrics CSV path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the generated dataset as CSV.
    #[arg(long)]
    pub dump_dataset: Option<PathBuf>,
    /// Record elapsed milliseconds in the metrics (makes output vary run to run).
    #[arg(long)]
    pub wall_clock: bool,
    /// Log progress to stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

fn parse_value<T>(key: &str, value: &str) -> Result<T>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value `{value}` for `{key}`: {e}")))
}

impl CliArgs {
    /// Parses a flat `key = value` file into the same shape as the flags.
    pub fn from_config_text(text: &str) -> Result<CliArgs> {
        let mut args = CliArgs::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "model" => args.model = Some(parse_value(&key, value)?),
                "compare" => {
                    args.compare = value
                        .split(',')
                        .map(|m| parse_value(&key, m.trim()))
                        .collect::<Result<_>>()?
                }
                "clients" => args.clients = Some(parse_value(&key, value)?),
                "rounds" => args.rounds = Some(parse_value(&key, value)?),
                "local-epochs" => args.local_epochs = Some(parse_value(&key, value)?),
                "layers" => args.layers = Some(parse_value(&key, value)?),
                "learning-rate" => args.learning_rate = Some(parse_value(&key, value)?),
                "batch-size" => args.batch_size = Some(parse_value(&key, value)?),
                "gamma" => args.gamma = Some(parse_value(&key, value)?),
                "points" | "n" => args.points = Some(parse_value(&key, value)?),
                "noise" => args.noise = Some(parse_value(&key, value)?),
                "factor" => args.factor = Some(parse_value(&key, value)?),
                "train-fraction" => args.train_fraction = Some(parse_value(&key, value)?),
                "transport" => args.transport = Some(parse_value(&key, value)?),
                "seed" => args.seed = Some(parse_value(&key, value)?),
                "output" => args.output = Some(PathBuf::from(value)),
                "dump-dataset" => args.dump_dataset = Some(PathBuf::from(value)),
                "wall-clock" => args.wall_clock = parse_value(&key, value)?,
                "verbose" => args.verbose = parse_value(&key, value)?,
                _ => return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        Ok(args)
    }

    /// Fills every unset field of `self` from `fallback`.
    pub fn or(self, fallback: CliArgs) -> CliArgs {
        let from_flags = self.model.is_some() || !self.compare.is_empty();
        CliArgs {
            model: if from_flags { self.model } else { fallback.model },
            compare: if from_flags { self.compare } else { fallback.compare },
            config: self.config.or(fallback.config),
            clients: self.clients.or(fallback.clients),
            rounds: self.rounds.or(fallback.rounds),
            local_epochs: self.local_epochs.or(fallback.local_epochs),
            layers: self.layers.or(fallback.layers),
            learning_rate: self.learning_rate.or(fallback.learning_rate),
            batch_size: self.batch_size.or(fallback.batch_size),
            gamma: self.gamma.or(fallback.gamma),
            points: self.points.or(fallback.points),
            noise: self.noise.or(fallback.noise),
            factor: self.factor.or(fallback.factor),
            train_fraction: self.train_fraction.or(fallback.train_fraction),
            transport: self.transport.or(fallback.transport),
            seed: self.seed.or(fallback.seed),
            output: self.output.or(fallback.output),
            dump_dataset: self.dump_dataset.or(fallback.dump_dataset),
            wall_clock: self.wall_clock || fallback.wall_clock,
            verbose: self.verbose || fallback.verbose,
        }
    }

    fn config_for(&self, model: ModelChoice, compare: bool) -> ExperimentConfig {
        let defaults = ExperimentConfig::new(model);
        let transport = match (compare, model) {
            // in a comparison the transport only applies to the quantum-weight run
            (true, m) if m != ModelChoice::QflQuantum => Transport::Copy,
            _ => self.transport.unwrap_or(defaults.transport),
        };
        ExperimentConfig {
            model,
            clients: self.clients.unwrap_or(defaults.clients),
            rounds: self.rounds.unwrap_or(defaults.rounds),
            local_epochs: self.local_epochs.unwrap_or(defaults.local_epochs),
            layers: self.layers.unwrap_or(defaults.layers),
            learning_rate: self.learning_rate.unwrap_or(defaults.learning_rate),
            batch_size: self.batch_size.unwrap_or(defaults.batch_size),
            gamma: self.gamma.unwrap_or(defaults.gamma),
            dataset: DatasetParams {
                points: self.points.unwrap_or(defaults.dataset.points),
                noise: self.noise.unwrap_or(defaults.dataset.noise),
                factor: self.factor.unwrap_or(defaults.dataset.factor),
                train_fraction: self.train_fraction.unwrap_or(defaults.dataset.train_fraction),
            },
            transport,
            seed: self.seed.unwrap_or(defaults.seed),
            output: self.output.clone().unwrap_or_else(|| {
                PathBuf::from(if compare { DEFAULT_COMPARE_OUTPUT } else { DEFAULT_OUTPUT })
            }),
            dump_dataset: self.dump_dataset.clone(),
            record_wall_time: self.wall_clock,
        }
    }
}

/// What a command line asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Run(ExperimentConfig),
    /// Configs sharing one dataset, written to one combined file.
    Compare { configs: Vec<ExperimentConfig>, output: PathBuf },
}

/// Resolves flags against an optional config-file text.
pub fn resolve(args: CliArgs, file_text: Option<&str>) -> Result<Invocation> {
    let args = match file_text {
        Some(text) => args.or(CliArgs::from_config_text(text)?),
        None => args,
    };
    if !args.compare.is_empty() {
        if args.compare.len() < 2 {
            return Err(Error::Config("--compare needs at least two models".into()));
        }
        let configs: Vec<ExperimentConfig> = args.compare.iter().map(|&m| args.config_for(m, true)).collect();
        for c in &configs {
            c.validate()?;
        }
        let output = configs[0].output.clone();
        return Ok(Invocation::Compare { configs, output });
    }
    let model = args
        .model
        .ok_or_else(|| Error::Config("missing --model (cfl, qfl-classical or qfl-quantum)".into()))?;
    let config = args.config_for(model, false);
    config.validate()?;
    Ok(Invocation::Run(config))
}

/// Parses an argument vector (program name first), reading `--config` from
/// disk when given, into a single-run configuration.
pub fn parse_config<I, T>(argv: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_invocation(argv)? {
        Invocation::Run(config) => Ok(config),
        Invocation::Compare { .. } => Err(Error::Config("expected a single --model, got --compare".into())),
    }
}

pub fn parse_invocation<I, T>(argv: I) -> Result<Invocation>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = CliArgs::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    load_and_resolve(args)
}

/// Reads the `--config` file named in `args`, if any, and resolves.
pub fn load_and_resolve(args: CliArgs) -> Result<Invocation> {
    let text = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?),
        None => None,
    };
    resolve(args, text.as_deref())
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub metrics: Vec<RoundMetrics>,
    pub final_accuracy: f64,
    pub convergence_round: usize,
    pub dataset_checksum: String,
    pub clamped_test_points: usize,
    pub elapsed_ms: u128,
}

impl ExperimentReport {
    pub fn summary(&self) -> String {
        let c = &self.config;
        format!(
            "model {}: {} rounds x {} clients ({} client visits), {} local epochs, transport {}\n\
             final test accuracy {:.4}\n\
             convergence round {} (first round within {} of the final accuracy)\n\
             dataset {} ({} test points clamped), run time {} ms\n",
            c.model,
            c.rounds,
            c.clients,
            c.rounds * c.clients,
            c.local_epochs,
            c.transport,
            self.final_accuracy,
            self.convergence_round,
            CONVERGENCE_BAND,
            self.dataset_checksum,
            self.clamped_test_points,
            self.elapsed_ms,
        )
    }
}

/// First round whose accuracy is within [`CONVERGENCE_BAND`] of the last
/// round's accuracy.
pub fn convergence_round(metrics: &[RoundMetrics]) -> Option<usize> {
    let last = metrics.last()?.test_accuracy;
    metrics
        .iter()
        .find(|m| (m.test_accuracy - last).abs() <= CONVERGENCE_BAND + 1e-12)
        .map(|m| m.round)
}

fn metrics_row(m: &RoundMetrics) -> String {
    format!(
        "{},{},{},{},{}",
        m.round,
        m.client_id,
        sig9(m.mean_train_loss),
        sig9(m.test_accuracy),
        m.wall_ms
    )
}

pub fn write_metrics_csv<W: Write>(mut out: W, metrics: &[RoundMetrics]) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for m in metrics {
        writeln!(out, "{}", metrics_row(m))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_comparison_csv<W: Write>(mut out: W, reports: &[ExperimentReport]) -> Result<()> {
    writeln!(out, "{COMPARISON_HEADER}")?;
    for r in reports {
        for m in &r.metrics {
            writeln!(out, "{},{},{}", r.config.model, metrics_row(m), r.dataset_checksum)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Runs one configuration without writing its metrics file.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let (dataset, scaling) = config.generate_dataset()?;
    if let Some(path) = &config.dump_dataset {
        dataset.write_csv(create(path)?)?;
    }
    let initial = config.initial_model()?;
    let shards = fedring::partition(&dataset.train, config.clients, config.seed)?;
    let mut clients = ClientState::from_shards(shards, &initial, config.seed);
    let mut channel = derive_rng(config.seed, STREAM_CHANNEL);
    let out = fedring::run_ring(&config.schedule()?, &mut clients, &dataset.test, &mut channel)?;
    let final_accuracy = out.metrics.last().map(|m| m.test_accuracy).unwrap_or(0.0);
    Ok(ExperimentReport {
        config: config.clone(),
        convergence_round: convergence_round(&out.metrics).unwrap_or(0),
        metrics: out.metrics,
        final_accuracy,
        dataset_checksum: dataset.checksum(),
        clamped_test_points: scaling.clamped_test_points,
        elapsed_ms: started.elapsed().as_millis(),
    })
}

/// Generates the dataset, trains around the ring, and writes the metrics
/// CSV to `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    // fail on an unwritable path before spending time on training
    let writer = create(&config.output)?;
    let report = run_in_memory(config)?;
    write_metrics_csv(writer, &report.metrics)?;
    Ok(report)
}

/// Runs each configuration in order on the shared dataset and writes one
/// combined CSV with a `model` column.
pub fn compare(configs: &[ExperimentConfig], output: &Path) -> Result<Vec<ExperimentReport>> {
    let Some(first) = configs.first() else {
        return Err(Error::Config("nothing to compare".into()));
    };
    if configs.len() < 2 {
        return Err(Error::Config("a comparison needs at least two configurations".into()));
    }
    if let Some(c) = configs.iter().find(|c| c.dataset != first.dataset || c.seed != first.seed) {
        return Err(Error::Config(format!(
            "{} uses different dataset parameters or seed than {}",
            c.model, first.model
        )));
    }
    let writer = create(output)?;
    let reports = configs.iter().map(run_in_memory).collect::<Result<Vec<_>>>()?;
    write_comparison_csv(writer, &reports)?;
    Ok(reports)
}

/// Executes an invocation and returns the text summary.
pub fn execute(invocation: &Invocation) -> Result<String> {
    match invocation {
        Invocation::Run(config) => {
            let report = run_experiment(config)?;
            Ok(format!("{}metrics written to {}\n", report.summary(), config.output.display()))
        }
        Invocation::Compare { configs, output } => {
            let reports = compare(configs, output)?;
            let mut text: String = reports.iter().map(|r| r.summary()).collect::<Vec<_>>().join("\n");
            text.push_str(&format!("comparison written to {}\n", output.display()));
            Ok(text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(args: &[&str]) -> Vec<String> {
        std::iter::once("qfl-ring").chain(args.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse_config(argv(&["--model", "qfl-classical"])).unwrap();
        assert_eq!(c, ExperimentConfig::new(ModelChoice::QflClassical));
        assert_eq!((c.clients, c.rounds, c.local_epochs, c.layers), (3, 100, 5, 2));
        assert_eq!((c.learning_rate, c.batch_size, c.seed), (0.1, 32, 42));
        assert_eq!(c.gamma, std::f64::consts::PI);
        assert_eq!(c.dataset, DatasetParams { points: 1200, noise: 0.1, factor: 0.5, train_fraction: 0.8 });
        assert_eq!(c.transport, Transport::Copy);
    }

    #[test]
    fn teleport_flags() {
        let c = parse_config(argv(&["--model", "qfl-quantum", "--transport", "teleport", "--seed", "7"])).unwrap();
        assert_eq!(c.transport, Transport::Teleport);
        assert_eq!(c.seed, 7);
        assert!(parse_config(argv(&["--model", "cfl", "--transport", "teleport"])).is_err());
        assert!(parse_config(argv(&["--model", "qfl-classical", "--transport", "teleport"])).is_err());
    }

    #[test]
    fn protocol_flags() {
        let c = parse_config(argv(&["--model", "cfl", "--rounds", "100", "--local-epochs", "5"])).unwrap();
        assert_eq!((c.rounds, c.local_epochs), (100, 5));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_config(argv(&[])), Err(Error::Config(_))));
        assert!(parse_config(argv(&["--model", "cfl", "--bogus", "1"])).is_err());
        assert!(parse_config(argv(&["--model", "svm"])).is_err());
        assert!(parse_config(argv(&["--model", "cfl", "--rounds", "0"])).is_err());
        assert!(parse_config(argv(&["--model", "cfl", "--factor", "1.5"])).is_err());
        assert!(parse_config(argv(&["--model", "cfl", "--points", "7"])).is_err());
    }

    #[test]
    fn file_values_yield_to_flags() {
        let text = "# experiment\nmodel = qfl-quantum\nrounds=7\nlocal_epochs = 2\ntransport = teleport\nseed = 9 # inline\n";
        let args = CliArgs::try_parse_from(argv(&["--rounds", "3"])).unwrap();
        let Invocation::Run(c) = resolve(args, Some(text)).unwrap() else { panic!() };
        assert_eq!(c.model, ModelChoice::QflQuantum);
        assert_eq!(c.rounds, 3);
        assert_eq!(c.local_epochs, 2);
        assert_eq!(c.transport, Transport::Teleport);
        assert_eq!(c.seed, 9);

        assert!(CliArgs::from_config_text("colour = blue").is_err());
        assert!(CliArgs::from_config_text("rounds").is_err());
        assert!(CliArgs::from_config_text("rounds = many").is_err());
    }

    #[test]
    fn compare_invocation() {
        let inv = parse_invocation(argv(&["--compare", "cfl,qfl-classical,qfl-quantum", "--transport", "teleport"])).unwrap();
        let Invocation::Compare { configs, output } = inv else { panic!() };
        assert_eq!(configs.len(), 3);
        assert_eq!(configs[0].transport, Transport::Copy);
        assert_eq!(configs[2].transport, Transport::Teleport);
        assert_eq!(output, PathBuf::from(DEFAULT_COMPARE_OUTPUT));
        assert!(parse_invocation(argv(&["--compare", "cfl"])).is_err());
        assert!(parse_invocation(argv(&["--compare", "cfl,qfl-quantum", "--model", "cfl"])).is_err());
    }

    #[test]
    fn convergence_round_is_first_within_band() {
        let m = |round, acc| RoundMetrics { round, client_id: 2, mean_train_loss: 0.5, test_accuracy: acc, wall_ms: 0 };
        let metrics = vec![m(1, 0.5), m(2, 0.8), m(3, 0.89), m(4, 0.95), m(5, 0.9)];
        assert_eq!(convergence_round(&metrics), Some(3));
        assert_eq!(convergence_round(&[]), None);
    }

    #[test]
    fn metrics_csv_shape() {
        let metrics = vec![RoundMetrics { round: 1, client_id: 2, mean_train_loss: 0.693147180559945, test_accuracy: 0.5, wall_ms: 0 }];
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &metrics).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "round,client,mean_train_loss,test_accuracy,wall_ms\n1,2,0.693147181,0.5,0\n");
    }

    #[test]
    fn compare_rejects_mismatched_datasets() {
        let a = ExperimentConfig::new(ModelChoice::Cfl);
        let mut b = ExperimentConfig::new(ModelChoice::QflClassical);
        b.dataset.noise = 0.2;
        let dir = tempfile::tempdir().unwrap();
        assert!(compare(&[a.clone(), b], &dir.path().join("x.csv")).is_err());
        assert!(compare(&[a], &dir.path().join("x.csv")).is_err());
    }

    #[test]
    fn unwritable_output_fails_fast() {
        let mut c = ExperimentConfig::new(ModelChoice::Cfl);
        c.output = PathBuf::from("/nonexistent-dir/metrics.csv");
        assert!(matches!(run_experiment(&c), Err(Error::Io(_))));
    }
}
