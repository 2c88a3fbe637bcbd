//! The `btdetect` command line.
//!
//! Settings resolve in layers: built-in defaults, then `--config FILE`, then
//! flags (`--set key=value` and the dedicated flags), then `BTDETECT_*`
//! environment variables.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 partial failure,
//! 3 total failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bleu::FEATURE_SCHEMA_VERSION;
use crate::classify::{load_model, save_model, ClassifierKind, LabeledPoint};
use crate::config::{ConfigError, KeyValues};
use crate::dataset::Label;
use crate::eval::{self, ExperimentConfig, ExperimentError};
use crate::records::{
    parse_json_lines, read_text, to_json_lines, write_atomic, FeaturizedRecord, RecordError, RecordLine,
};
use crate::sentence::{LanguageTag, Sentence};
use crate::translator::{Translator, TranslatorSettings};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_FAILURE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "btdetect", version, about = "Detect machine-translated text by back-translation similarity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Round-trip each input line through an intermediate language.
    Backtranslate(BacktranslateArgs),
    /// Turn back-translation records into BLEU feature lines.
    Featurize(FeaturizeArgs),
    /// Train a classifier on a featurized dataset.
    Train(TrainArgs),
    /// Label each input line as human or machine.
    Detect(DetectArgs),
    /// Run a full dataset, training and evaluation experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct SettingsArgs {
    /// Settings file with one `key = value` per line.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a setting; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct BackendArgs {
    /// fixture, replay or http.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Recorded cache for the replay backend.
    #[arg(long, value_name = "DIR")]
    pub replay_dir: Option<PathBuf>,
    #[arg(long)]
    pub engine_id: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long, value_name = "MS")]
    pub backoff_ms: Option<u64>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

impl BackendArgs {
    fn apply(&self, kv: &mut KeyValues) {
        let path = |p: &PathBuf| p.display().to_string();
        let pairs = [
            ("backend", self.backend.clone()),
            ("cache_dir", self.cache_dir.as_ref().map(path)),
            ("replay_dir", self.replay_dir.as_ref().map(path)),
            ("engine_id", self.engine_id.clone()),
            ("endpoint", self.endpoint.clone()),
            ("retries", self.retries.map(|v| v.to_string())),
            ("backoff_ms", self.backoff_ms.map(|v| v.to_string())),
            ("max_in_flight", self.max_in_flight.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                kv.set(k, v);
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct BacktranslateArgs {
    /// One sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "en")]
    pub original_lang: LanguageTag,
    #[arg(long)]
    pub intermediate_lang: LanguageTag,
    /// Input lines are `sentence TAB label` with label human or machine.
    #[arg(long)]
    pub labeled: bool,
    /// Stamp records with the current time (makes output non-reproducible).
    #[arg(long)]
    pub timestamps: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Featurized dataset with labels.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub classifier: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub model_out: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "en")]
    pub original_lang: LanguageTag,
    #[arg(long)]
    pub intermediate_lang: LanguageTag,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, default_value = "reports")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

/// A failed command: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }

    fn total(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e)
    }
}

impl From<RecordError> for Failure {
    fn from(e: RecordError) -> Self {
        Failure::config(e)
    }
}

type CmdResult = Result<u8, Failure>;

/// Defaults < file < flags < environment.
fn resolve_settings(
    settings: &SettingsArgs,
    flags: impl FnOnce(&mut KeyValues),
    env: &KeyValues,
) -> Result<KeyValues, ConfigError> {
    let mut kv = match &settings.config {
        Some(path) => KeyValues::from_file(path)?,
        None => KeyValues::new(),
    };
    let mut flag_layer = KeyValues::new();
    for item in &settings.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("--set expects KEY=VALUE, got `{item}`")))?;
        flag_layer.set(k.trim(), v.trim());
    }
    flags(&mut flag_layer);
    kv.merge(&flag_layer);
    kv.merge(env);
    for key in kv.keys() {
        if !eval::is_known_setting(key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
    }
    Ok(kv)
}

/// `BTDETECT_*` variables that name known settings; others are ignored with
/// a warning.
fn env_settings() -> KeyValues {
    KeyValues::from_env()
        .iter()
        .filter(|(k, _)| {
            let known = eval::is_known_setting(k);
            if !known {
                log::warn!("ignoring environment setting `{k}`: not a known setting");
            }
            known
        })
        .collect()
}

fn input_lines(path: &Path) -> Result<Vec<(usize, String)>, Failure> {
    let text = read_text(path)?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

fn write_output(path: &Path, body: &str) -> Result<(), Failure> {
    write_atomic(path, body.as_bytes()).map_err(|e| Failure::total(format!("cannot write {}: {e}", path.display())))
}

/// Exit code for `failed` failures among `total` items.
fn outcome(failed: usize, total: usize) -> u8 {
    if failed == 0 {
        EXIT_OK
    } else if failed == total {
        EXIT_FAILURE
    } else {
        EXIT_PARTIAL
    }
}

fn build_translator(kv: &KeyValues) -> Result<(Translator, TranslatorSettings), Failure> {
    let settings = TranslatorSettings::from_settings(kv)?;
    settings.validate()?;
    let translator = settings.build().map_err(Failure::config)?;
    Ok((translator, settings))
}

pub fn cmd_backtranslate(args: &BacktranslateArgs, env: &KeyValues) -> CmdResult {
    let kv = resolve_settings(&args.settings, |kv| args.backend.apply(kv), env)?;
    if args.original_lang == args.intermediate_lang {
        return Err(Failure::config("original and intermediate languages are the same"));
    }
    let mut items = Vec::new();
    for (line, text) in input_lines(&args.input)? {
        let (text, label) = if args.labeled {
            let (t, l) = text
                .rsplit_once('\t')
                .ok_or_else(|| Failure::config(format!("{}:{line}: missing label column", args.input.display())))?;
            let label: Label = l
                .trim()
                .parse()
                .map_err(|e| Failure::config(format!("{}:{line}: {e}", args.input.display())))?;
            (t.to_string(), Some(label))
        } else {
            (text, None)
        };
        items.push((line, text, label));
    }
    let (translator, settings) = build_translator(&kv)?;
    let translator = translator.with_timestamps(args.timestamps);

    let sentences: Vec<Sentence> = items
        .iter()
        .map(|(_, text, _)| Sentence::new(text.clone(), args.original_lang.clone()))
        .collect();
    let report = translator
        .batch_back_translate(&sentences, &args.intermediate_lang, settings.max_in_flight)
        .map_err(Failure::config)?;

    let mut lines = Vec::new();
    let mut failed = 0;
    for ((line, _, label), result) in items.iter().zip(report.items) {
        match result {
            Ok(record) => lines.push(RecordLine {
                id: line.to_string(),
                pair_id: None,
                label: *label,
                record,
            }),
            Err(e) => {
                failed += 1;
                eprintln!("{}:{line}: {e}", args.input.display());
            }
        }
    }
    let code = outcome(failed, items.len());
    if code == EXIT_FAILURE {
        return Err(Failure::total(format!("all {failed} items failed; no output written")));
    }
    write_output(&args.out, &to_json_lines(&lines))?;
    eprintln!("wrote {} records to {} ({failed} failed)", lines.len(), args.out.display());
    Ok(code)
}

pub fn cmd_featurize(args: &FeaturizeArgs, env: &KeyValues) -> CmdResult {
    let kv = resolve_settings(&args.settings, |_| {}, env)?;
    let extractor = eval::extractor_from_settings(&kv)?;
    let text = read_text(&args.records)?;
    let (parsed, errors) = parse_json_lines::<RecordLine>(&text);
    let mut failed = errors.len();
    for e in &errors {
        eprintln!("{}: {e}", args.records.display());
    }
    let mut out = Vec::with_capacity(parsed.len());
    for (line, record) in &parsed {
        match FeaturizedRecord::from_record_line(record, &extractor) {
            Ok(f) => out.push(f),
            Err(e) => {
                failed += 1;
                eprintln!("{}: line {line}: {e}", args.records.display());
            }
        }
    }
    let code = outcome(failed, parsed.len() + errors.len());
    if code == EXIT_FAILURE {
        return Err(Failure::total("no record could be featurized; no output written"));
    }
    write_output(&args.out, &to_json_lines(&out))?;
    eprintln!("wrote {} feature lines to {} ({failed} failed)", out.len(), args.out.display());
    Ok(code)
}

fn read_dataset(path: &Path) -> Result<Vec<FeaturizedRecord>, Failure> {
    let text = read_text(path)?;
    let (parsed, errors) = parse_json_lines::<FeaturizedRecord>(&text);
    if let Some(e) = errors.first() {
        return Err(Failure::config(format!("{}: {e}", path.display())));
    }
    for (line, rec) in &parsed {
        if !rec.is_current_schema() {
            return Err(Failure::config(format!(
                "{}: line {line}: feature schema `{}`, expected `{FEATURE_SCHEMA_VERSION}`",
                path.display(),
                rec.schema_version
            )));
        }
    }
    Ok(parsed.into_iter().map(|(_, r)| r).collect())
}

pub fn cmd_train(args: &TrainArgs, env: &KeyValues) -> CmdResult {
    let kv = resolve_settings(
        &args.settings,
        |kv| {
            if let Some(seed) = args.seed {
                kv.set("seed", seed.to_string());
            }
        },
        env,
    )?;
    let kind: ClassifierKind = args.classifier.parse().map_err(Failure::config)?;
    let seed = kv.parsed::<u64>("seed")?.unwrap_or(0);
    let training = eval::training_from_settings(&kv)?.with_seed(seed);

    let records = read_dataset(&args.dataset)?;
    let mut points = Vec::with_capacity(records.len());
    for rec in &records {
        let label = rec
            .label
            .ok_or_else(|| Failure::config(format!("example `{}` has no label", rec.example_id)))?;
        points.push(LabeledPoint::new(rec.features, label));
    }
    let model = training.train(kind, &points).map_err(Failure::total)?;
    let metrics = eval::evaluate(&model, &points).map_err(Failure::total)?;
    save_model(&model, &args.model_out).map_err(Failure::total)?;
    eprintln!(
        "trained {} on {} examples, training accuracy {:.1}%; model written to {}",
        kind.display_name(),
        points.len(),
        metrics.accuracy * 100.0,
        args.model_out.display()
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct Detection<'a> {
    line: usize,
    text: &'a str,
    label: Label,
    score: f64,
}

pub fn cmd_detect(args: &DetectArgs, env: &KeyValues) -> CmdResult {
    let kv = resolve_settings(&args.settings, |kv| args.backend.apply(kv), env)?;
    let model = load_model(&args.model).map_err(Failure::config)?;
    model
        .check_schema(FEATURE_SCHEMA_VERSION)
        .map_err(Failure::config)?;
    let extractor = eval::extractor_from_settings(&kv)?;
    let items = input_lines(&args.input)?;
    let (translator, settings) = build_translator(&kv)?;

    let sentences: Vec<Sentence> = items
        .iter()
        .map(|(_, t)| Sentence::new(t.clone(), args.original_lang.clone()))
        .collect();
    let report = translator
        .batch_back_translate(&sentences, &args.intermediate_lang, settings.max_in_flight)
        .map_err(Failure::config)?;

    let mut out = String::new();
    let mut failed = 0;
    for ((line, text), result) in items.iter().zip(report.items) {
        let prediction = result.map_err(|e| e.to_string()).and_then(|record| {
            let fv = extractor
                .extract(&record.original, &record.back_translation)
                .map_err(|e| e.to_string())?;
            model.predict(&fv).map_err(|e| e.to_string())
        });
        match prediction {
            Ok(p) => {
                let d = Detection {
                    line: *line,
                    text,
                    label: p.label,
                    score: p.score,
                };
                out.push_str(&serde_json::to_string(&d).expect("detection serializes"));
                out.push('\n');
            }
            Err(e) => {
                failed += 1;
                eprintln!("{}:{line}: {e}", args.input.display());
            }
        }
    }
    let code = outcome(failed, items.len());
    if code == EXIT_FAILURE {
        return Err(Failure::total("every line failed; no output written"));
    }
    match &args.out {
        Some(path) => write_output(path, &out)?,
        None => print!("{out}"),
    }
    Ok(code)
}

pub fn cmd_experiment(args: &ExperimentArgs, env: &KeyValues) -> CmdResult {
    let kv = resolve_settings(
        &args.settings,
        |kv| {
            args.backend.apply(kv);
            if let Some(seed) = args.seed {
                kv.set("seed", seed.to_string());
            }
        },
        env,
    )?;
    let config = ExperimentConfig::from_settings(&kv)?;
    let output = eval::run_experiment(&config).map_err(|e| match e {
        ExperimentError::Config(c) => Failure::config(c),
        other => Failure::total(other),
    })?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::total(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let report = &output.report;
    let paths = report
        .write_files(&args.out_dir)
        .map_err(|e| Failure::total(format!("cannot write report: {e}")))?;
    let stem = report.file_stem();
    for (part, examples) in [("train", &output.split.train), ("test", &output.split.test)] {
        let records: Vec<FeaturizedRecord> = examples.iter().filter_map(FeaturizedRecord::from_example).collect();
        write_output(
            &args.out_dir.join(format!("{stem}.{part}.jsonl")),
            &to_json_lines(&records),
        )?;
    }
    print!("{}", report.to_text());
    for p in &paths {
        eprintln!("wrote {}", p.display());
    }
    for f in &output.failures {
        eprintln!("dropped pair {} at {}: {}", f.pair_id, f.stage, f.message);
    }
    Ok(if output.failures.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

/// Parses `args` and runs the selected command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let env = env_settings();
    let result = match &cli.command {
        Command::Backtranslate(a) => cmd_backtranslate(a, &env),
        Command::Featurize(a) => cmd_featurize(a, &env),
        Command::Train(a) => cmd_train(a, &env),
        Command::Detect(a) => cmd_detect(a, &env),
        Command::Experiment(a) => cmd_experiment(a, &env),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
