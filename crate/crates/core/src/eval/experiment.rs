use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::report::{ClassifierResult, ConfigEcho, DatasetSummary, ExperimentReport};
use super::{evaluate, EvalError};
use crate::bleu::{FeatureExtractor, Smoothing};
use crate::classify::{points_from_examples, ClassifierKind, TrainedModel, TrainingConfig};
use crate::config::{ConfigError, KeyValues};
use crate::dataset::{
    self, build_backtranslation_dataset, build_translation_dataset, featurize, load_parallel_corpus,
    load_parallel_tsv, load_sentiment_corpus, paired_split, synthetic, DatasetStats, FeaturizeConfig, ItemFailure,
    SentencePair, SplitDataset,
};
use crate::sentence::{LanguageTag, Sentence};
use crate::tokenize::{TokenMode, TokenizerConfig};
use crate::translator::{BackendConfig, Translator, TranslatorSettings, TRANSLATOR_KEYS};

/// What the machine-labelled half of the dataset is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Machine texts are translations of the foreign side of a parallel corpus.
    Translation,
    /// Machine texts are round trips of the human texts.
    Backtranslation,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Translation => "translation",
            Task::Backtranslation => "backtranslation",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "translation" => Ok(Task::Translation),
            "backtranslation" | "back-translation" => Ok(Task::Backtranslation),
            other => Err(format!("unknown task `{other}` (expected translation or backtranslation)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusConfig {
    /// Generated sentences matching the fixture translator's vocabulary.
    /// `size` is the number of pairs (translation) or sentences
    /// (back-translation).
    Synthetic { size: usize },
    /// Two line-aligned files: human side, foreign side.
    Parallel { human: PathBuf, foreign: PathBuf, limit: usize },
    /// One `human TAB foreign` file.
    ParallelTsv { path: PathBuf, limit: usize },
    /// A `sentence TAB polarity` file (back-translation task only).
    Sentiment { path: PathBuf, limit_per_class: usize },
}

impl CorpusConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CorpusConfig::Synthetic { .. } => "synthetic",
            CorpusConfig::Parallel { .. } => "parallel",
            CorpusConfig::ParallelTsv { .. } => "tsv",
            CorpusConfig::Sentiment { .. } => "sentiment",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    /// Language of the human texts and of everything the detector reads.
    pub human_lang: LanguageTag,
    /// Foreign corpus language (translation) or the generator's intermediate
    /// language (back-translation).
    pub generator_lang: LanguageTag,
    /// Intermediate language of the detector's own round trip.
    pub detector_lang: LanguageTag,
    pub translator: TranslatorSettings,
    pub corpus: CorpusConfig,
    pub classifiers: Vec<ClassifierKind>,
    pub training: TrainingConfig,
    pub seed: u64,
    pub train_fraction: f64,
    pub extractor: FeatureExtractor,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let tag = |s: &str| LanguageTag::new(s).expect("valid tag");
        Self {
            task: Task::Translation,
            human_lang: tag("en"),
            generator_lang: tag("fr"),
            detector_lang: tag("fr"),
            translator: TranslatorSettings::default(),
            corpus: CorpusConfig::Synthetic { size: 500 },
            classifiers: ClassifierKind::ALL.to_vec(),
            training: TrainingConfig::default(),
            seed: 0,
            train_fraction: 0.7,
            extractor: FeatureExtractor::default(),
        }
    }
}

const EXPERIMENT_KEYS: &[&str] = &[
    "task",
    "human_lang",
    "generator_lang",
    "detector_lang",
    "corpus",
    "corpus_size",
    "corpus_path",
    "corpus_human",
    "corpus_foreign",
    "limit",
    "limit_per_class",
    "classifiers",
    "seed",
    "train_fraction",
    "token_mode",
    "lowercase",
    "smoothing",
    "smoothing_epsilon",
    "linear.c",
    "linear.max_iterations",
    "linear.tolerance",
    "adaboost.rounds",
    "smo.c",
    "smo.tolerance",
    "smo.max_passes",
    "sgd.lambda",
    "sgd.epochs",
];

/// Whether `key` is a setting that [`ExperimentConfig::from_settings`] reads.
pub fn is_known_setting(key: &str) -> bool {
    EXPERIMENT_KEYS.contains(&key) || TRANSLATOR_KEYS.contains(&key)
}

/// Tokenizer and smoothing from `token_mode`, `lowercase`, `smoothing` and
/// `smoothing_epsilon`.
pub fn extractor_from_settings(kv: &KeyValues) -> Result<FeatureExtractor, ConfigError> {
    let d = FeatureExtractor::default();
    let smoothing = match kv.get("smoothing").unwrap_or("none") {
        "none" => Smoothing::None,
        "add_epsilon" => Smoothing::AddEpsilon {
            epsilon: kv.parsed("smoothing_epsilon")?.unwrap_or(Smoothing::DEFAULT_EPSILON),
        },
        other => return Err(ConfigError::invalid_value("smoothing", other, "expected none or add_epsilon")),
    };
    let tokenizer = TokenizerConfig {
        mode: kv.parsed::<TokenMode>("token_mode")?.unwrap_or(d.tokenizer.mode),
        lowercase: kv.parsed("lowercase")?.unwrap_or(d.tokenizer.lowercase),
    };
    Ok(FeatureExtractor { tokenizer, smoothing })
}

/// Classifier hyperparameters from the `linear.*`, `adaboost.*`, `smo.*` and
/// `sgd.*` settings. Trainer seeds are left at zero; see
/// [`TrainingConfig::with_seed`].
pub fn training_from_settings(kv: &KeyValues) -> Result<TrainingConfig, ConfigError> {
    let mut t = TrainingConfig::default();
    t.linear.c = kv.parsed("linear.c")?.unwrap_or(t.linear.c);
    t.linear.max_iterations = kv.parsed("linear.max_iterations")?.unwrap_or(t.linear.max_iterations);
    t.linear.tolerance = kv.parsed("linear.tolerance")?.unwrap_or(t.linear.tolerance);
    t.adaboost.rounds = kv.parsed("adaboost.rounds")?.unwrap_or(t.adaboost.rounds);
    t.smo.c = kv.parsed("smo.c")?.unwrap_or(t.smo.c);
    t.smo.tolerance = kv.parsed("smo.tolerance")?.unwrap_or(t.smo.tolerance);
    t.smo.max_passes = kv.parsed("smo.max_passes")?.unwrap_or(t.smo.max_passes);
    t.sgd.lambda = kv.parsed("sgd.lambda")?.unwrap_or(t.sgd.lambda);
    t.sgd.epochs = kv.parsed("sgd.epochs")?.unwrap_or(t.sgd.epochs);
    Ok(t)
}

fn required_path(kv: &KeyValues, key: &str, corpus: &str) -> Result<PathBuf, ConfigError> {
    kv.get(key)
        .map(PathBuf::from)
        .ok_or_else(|| ConfigError::Invalid(format!("corpus `{corpus}` needs `{key}`")))
}

impl ExperimentConfig {
    /// Resolves settings over the defaults. Unknown keys and unknown
    /// classifier names are errors.
    pub fn from_settings(kv: &KeyValues) -> Result<Self, ConfigError> {
        for key in kv.keys() {
            if !is_known_setting(key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
        }
        let d = Self::default();

        let corpus = match kv.get("corpus").unwrap_or("synthetic") {
            "synthetic" => CorpusConfig::Synthetic {
                size: kv.parsed("corpus_size")?.unwrap_or(500),
            },
            "parallel" => CorpusConfig::Parallel {
                human: required_path(kv, "corpus_human", "parallel")?,
                foreign: required_path(kv, "corpus_foreign", "parallel")?,
                limit: kv.parsed("limit")?.unwrap_or(2000),
            },
            "tsv" => CorpusConfig::ParallelTsv {
                path: required_path(kv, "corpus_path", "tsv")?,
                limit: kv.parsed("limit")?.unwrap_or(2000),
            },
            "sentiment" => CorpusConfig::Sentiment {
                path: required_path(kv, "corpus_path", "sentiment")?,
                limit_per_class: kv.parsed("limit_per_class")?.unwrap_or(1000),
            },
            other => {
                return Err(ConfigError::invalid_value(
                    "corpus",
                    other,
                    "expected synthetic, parallel, tsv or sentiment",
                ))
            }
        };

        let classifiers = match kv.get("classifiers") {
            None => d.classifiers.clone(),
            Some(list) => list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<ClassifierKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ConfigError::invalid_value("classifiers", list, e))?,
        };

        let cfg = Self {
            task: kv.parsed("task")?.unwrap_or(d.task),
            human_lang: kv.parsed("human_lang")?.unwrap_or(d.human_lang),
            generator_lang: kv.parsed("generator_lang")?.unwrap_or(d.generator_lang),
            detector_lang: kv.parsed("detector_lang")?.unwrap_or(d.detector_lang),
            translator: TranslatorSettings::from_settings(kv)?,
            corpus,
            classifiers,
            training: training_from_settings(kv)?,
            seed: kv.parsed("seed")?.unwrap_or(d.seed),
            train_fraction: kv.parsed("train_fraction")?.unwrap_or(d.train_fraction),
            extractor: extractor_from_settings(kv)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every setting, resolved, in the form [`from_settings`](Self::from_settings) reads.
    pub fn to_settings(&self) -> KeyValues {
        let mut kv = self.translator.to_settings();
        kv.set("task", self.task.name());
        kv.set("human_lang", self.human_lang.as_str());
        kv.set("generator_lang", self.generator_lang.as_str());
        kv.set("detector_lang", self.detector_lang.as_str());
        kv.set("corpus", self.corpus.name());
        match &self.corpus {
            CorpusConfig::Synthetic { size } => kv.set("corpus_size", size.to_string()),
            CorpusConfig::Parallel { human, foreign, limit } => {
                kv.set("corpus_human", human.display().to_string());
                kv.set("corpus_foreign", foreign.display().to_string());
                kv.set("limit", limit.to_string());
            }
            CorpusConfig::ParallelTsv { path, limit } => {
                kv.set("corpus_path", path.display().to_string());
                kv.set("limit", limit.to_string());
            }
            CorpusConfig::Sentiment { path, limit_per_class } => {
                kv.set("corpus_path", path.display().to_string());
                kv.set("limit_per_class", limit_per_class.to_string());
            }
        }
        let names: Vec<&str> = self.classifiers.iter().map(|k| k.name()).collect();
        kv.set("classifiers", names.join(","));
        kv.set("seed", self.seed.to_string());
        kv.set("train_fraction", self.train_fraction.to_string());
        kv.set("token_mode", self.extractor.tokenizer.mode.to_string());
        kv.set("lowercase", self.extractor.tokenizer.lowercase.to_string());
        match self.extractor.smoothing {
            Smoothing::None => kv.set("smoothing", "none"),
            Smoothing::AddEpsilon { epsilon } => {
                kv.set("smoothing", "add_epsilon");
                kv.set("smoothing_epsilon", epsilon.to_string());
            }
        }
        let t = &self.training;
        kv.set("linear.c", t.linear.c.to_string());
        kv.set("linear.max_iterations", t.linear.max_iterations.to_string());
        kv.set("linear.tolerance", t.linear.tolerance.to_string());
        kv.set("adaboost.rounds", t.adaboost.rounds.to_string());
        kv.set("smo.c", t.smo.c.to_string());
        kv.set("smo.tolerance", t.smo.tolerance.to_string());
        kv.set("smo.max_passes", t.smo.max_passes.to_string());
        kv.set("sgd.lambda", t.sgd.lambda.to_string());
        kv.set("sgd.epochs", t.sgd.epochs.to_string());
        kv
    }

    /// Checks everything that can be checked before any backend call.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.classifiers.is_empty() {
            return Err(ConfigError::Invalid("no classifiers requested".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(ConfigError::invalid_value(
                "train_fraction",
                &self.train_fraction.to_string(),
                "must lie strictly between 0 and 1",
            ));
        }
        if self.generator_lang == self.human_lang {
            return Err(ConfigError::Invalid(format!(
                "generator_lang and human_lang are both `{}`",
                self.human_lang
            )));
        }
        if self.detector_lang == self.human_lang {
            return Err(ConfigError::Invalid(format!(
                "detector_lang and human_lang are both `{}`",
                self.human_lang
            )));
        }
        if let (Task::Translation, CorpusConfig::Sentiment { .. }) = (self.task, &self.corpus) {
            return Err(ConfigError::Invalid(
                "the translation task needs a parallel corpus, not a sentiment corpus".into(),
            ));
        }
        if let CorpusConfig::Synthetic { .. } = self.corpus {
            if self.human_lang.as_str() != "en" {
                return Err(ConfigError::Invalid("the synthetic corpus is English (`human_lang = en`)".into()));
            }
            if self.task == Task::Translation && !synthetic::FIXTURE_LANGUAGES.contains(&self.generator_lang.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "the synthetic corpus has no `{}` side; use one of {:?}",
                    self.generator_lang,
                    synthetic::FIXTURE_LANGUAGES
                )));
            }
        }
        self.translator.validate()
    }

    /// Seed of the fixture dictionaries used to render synthetic corpora.
    fn synthetic_dictionary_seed(&self) -> u64 {
        match self.translator.backend {
            BackendConfig::Fixture { seed } => seed,
            _ => 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

fn stage<E: std::error::Error + Send + Sync + 'static>(name: impl Into<String>) -> impl FnOnce(E) -> ExperimentError {
    let name = name.into();
    move |e| ExperimentError::Stage {
        stage: name,
        source: Box::new(e),
    }
}

/// A report plus the artifacts it was computed from.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub split: SplitDataset,
    pub models: Vec<TrainedModel>,
    pub failures: Vec<ItemFailure>,
}

/// Builds a dataset, back-translates and featurizes it through the detector
/// language, splits it by pair, and trains and scores every requested
/// classifier.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    config.validate()?;
    let translator = config.translator.build().map_err(stage("backend"))?;
    run_with_translator(config, &translator)
}

/// [`run_experiment`] with a caller-supplied translator; the backend settings
/// in `config` are ignored.
pub fn run_with_translator(config: &ExperimentConfig, translator: &Translator) -> Result<ExperimentOutput, ExperimentError> {
    config.validate()?;
    let in_flight = config.translator.max_in_flight;

    let generated = match config.task {
        Task::Translation => {
            let pairs = load_pairs(config)?;
            build_translation_dataset(&pairs, translator, &config.generator_lang, in_flight)
        }
        Task::Backtranslation => {
            let sentences = load_sentences(config)?;
            build_backtranslation_dataset(&sentences, translator, &config.generator_lang, in_flight)
        }
    }
    .map_err(stage("generate"))?;

    let featurized = featurize(
        &generated.examples,
        translator,
        &FeaturizeConfig {
            detector_lang: config.detector_lang.clone(),
            extractor: config.extractor,
            max_in_flight: in_flight,
        },
    )
    .map_err(stage("featurize"))?;
    let mut failures = generated.failures;
    failures.extend(featurized.failures);
    for f in &failures {
        log::warn!("dropped pair {} at {}: {}", f.pair_id, f.stage, f.message);
    }

    let split = paired_split(&featurized.examples, config.train_fraction, config.seed).map_err(stage("split"))?;
    let train = points_from_examples(&split.train).map_err(stage("split"))?;
    let test = points_from_examples(&split.test).map_err(stage("split"))?;
    if test.is_empty() {
        return Err(stage("evaluate")(EvalError::EmptyTestSet));
    }

    let training = config.training.with_seed(config.seed);
    let outcomes: Vec<Result<(TrainedModel, ClassifierResult), ExperimentError>> = std::thread::scope(|s| {
        let handles: Vec<_> = config
            .classifiers
            .iter()
            .map(|&kind| {
                let (train, test) = (&train, &test);
                s.spawn(move || {
                    let model = training
                        .train(kind, train)
                        .map_err(stage(format!("train {kind}")))?;
                    let metrics = evaluate(&model, test).map_err(stage(format!("evaluate {kind}")))?;
                    Ok((model, ClassifierResult::new(kind, metrics)))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("classifier thread panicked"))
            .collect()
    });
    let mut models = Vec::new();
    let mut results = Vec::new();
    for outcome in outcomes {
        let (model, result) = outcome?;
        models.push(model);
        results.push(result);
    }

    let all = DatasetStats::compute(&featurized.examples);
    let dataset = DatasetSummary::new(&all, &split, failures.len());
    let echo = ConfigEcho {
        task: config.task,
        human_lang: config.human_lang.clone(),
        generator_lang: config.generator_lang.clone(),
        detector_lang: config.detector_lang.clone(),
        engine_id: translator.engine_id().to_string(),
        seed: config.seed,
        settings: config.to_settings().into_map(),
    };
    let report = ExperimentReport::new(echo, dataset, results);
    Ok(ExperimentOutput {
        report,
        split,
        models,
        failures,
    })
}

fn load_pairs(config: &ExperimentConfig) -> Result<Vec<SentencePair>, ExperimentError> {
    let (h, g) = (&config.human_lang, &config.generator_lang);
    match &config.corpus {
        CorpusConfig::Synthetic { size } => {
            let fixture = synthetic::fixture_backend(config.synthetic_dictionary_seed());
            Ok(synthetic::parallel_pairs_in(config.seed, *size, &fixture, g))
        }
        CorpusConfig::Parallel { human, foreign, limit } => {
            load_parallel_corpus(human, foreign, h, g, *limit, config.seed).map_err(stage("corpus"))
        }
        CorpusConfig::ParallelTsv { path, limit } => {
            load_parallel_tsv(path, h, g, *limit, config.seed).map_err(stage("corpus"))
        }
        CorpusConfig::Sentiment { .. } => Err(ConfigError::Invalid(
            "the translation task needs a parallel corpus".into(),
        )
        .into()),
    }
}

fn load_sentences(config: &ExperimentConfig) -> Result<Vec<Sentence>, ExperimentError> {
    let h = &config.human_lang;
    match &config.corpus {
        CorpusConfig::Synthetic { size } => Ok(synthetic::sentiment_sentences(config.seed, size.div_ceil(2))
            .into_iter()
            .take(*size)
            .map(|(text, _)| Sentence::new(text, h.clone()).with_passes(0))
            .collect()),
        CorpusConfig::Sentiment { path, limit_per_class } => {
            load_sentiment_corpus(path, h, *limit_per_class, config.seed).map_err(stage("corpus"))
        }
        CorpusConfig::Parallel { .. } | CorpusConfig::ParallelTsv { .. } => {
            // the foreign side only fixes the sample; its language is irrelevant
            let pairs = load_pairs(config)?;
            Ok(pairs.into_iter().map(|p| p.human_text).collect())
        }
    }
}

impl From<dataset::DatasetError> for ExperimentError {
    fn from(e: dataset::DatasetError) -> Self {
        stage("dataset")(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_settings(&cfg.to_settings()).unwrap(), cfg);
        assert_eq!(ExperimentConfig::from_settings(&KeyValues::new()).unwrap(), cfg);
    }

    #[test]
    fn unknown_classifier_is_a_config_error() {
        let kv: KeyValues = [("classifiers", "linear,perceptron")].into_iter().collect();
        match ExperimentConfig::from_settings(&kv) {
            Err(ConfigError::InvalidValue { key, .. }) => assert_eq!(key, "classifiers"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let kv: KeyValues = [("sede", "1")].into_iter().collect();
        assert_eq!(
            ExperimentConfig::from_settings(&kv),
            Err(ConfigError::UnknownKey("sede".into()))
        );
    }

    #[test]
    fn same_language_is_rejected() {
        let kv: KeyValues = [("detector_lang", "en")].into_iter().collect();
        assert!(ExperimentConfig::from_settings(&kv).is_err());
    }

    #[test]
    fn sentiment_corpus_needs_backtranslation_task() {
        let kv: KeyValues = [("corpus", "sentiment"), ("corpus_path", "x.tsv")].into_iter().collect();
        assert!(ExperimentConfig::from_settings(&kv).is_err());
        let kv: KeyValues = [("corpus", "sentiment"), ("corpus_path", "x.tsv"), ("task", "backtranslation")]
            .into_iter()
            .collect();
        assert!(ExperimentConfig::from_settings(&kv).is_ok());
    }

    #[test]
    fn small_fixture_run() {
        let cfg = ExperimentConfig {
            corpus: CorpusConfig::Synthetic { size: 60 },
            ..ExperimentConfig::default()
        };
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.report.results.len(), 4);
        assert_eq!(out.split.train.len(), 84);
        assert_eq!(out.split.test.len(), 36);
        assert!(out.failures.is_empty());
        assert!(out.report.averages_consistent());
    }
}
