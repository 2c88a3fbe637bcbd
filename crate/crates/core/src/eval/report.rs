use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::experiment::Task;
use super::{ConfusionMatrix, Metrics};
use crate::classify::ClassifierKind;
use crate::dataset::{DatasetStats, LabeledExample, SplitDataset};
use crate::records::{to_json_lines, write_atomic, FeaturizedRecord};
use crate::sentence::LanguageTag;

/// The three headline numbers, as fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub accuracy: f64,
    pub f1_positive: f64,
    pub f1_macro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierResult {
    pub classifier: ClassifierKind,
    #[serde(flatten)]
    pub metrics: MetricRow,
    pub confusion: ConfusionMatrix,
}

impl ClassifierResult {
    pub fn new(classifier: ClassifierKind, m: Metrics) -> Self {
        Self {
            classifier,
            metrics: MetricRow {
                accuracy: m.accuracy,
                f1_positive: m.f1_positive,
                f1_macro: m.f1_macro,
            },
            confusion: m.confusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub task: Task,
    pub human_lang: LanguageTag,
    pub generator_lang: LanguageTag,
    pub detector_lang: LanguageTag,
    pub engine_id: String,
    pub seed: u64,
    /// Every resolved setting.
    pub settings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub examples: usize,
    pub train: usize,
    pub test: usize,
    pub dropped_pairs: usize,
    pub avg_words: f64,
    pub avg_words_human: f64,
    pub avg_words_machine: f64,
    /// SHA-256 of the featurized train partition in record-file form.
    pub train_digest: String,
    pub test_digest: String,
}

/// SHA-256 of the featurized record lines of `examples`.
pub fn examples_digest(examples: &[LabeledExample]) -> String {
    let records: Vec<FeaturizedRecord> = examples.iter().filter_map(FeaturizedRecord::from_example).collect();
    hex::encode(Sha256::digest(to_json_lines(&records).as_bytes()))
}

impl DatasetSummary {
    pub fn new(stats: &DatasetStats, split: &SplitDataset, dropped_pairs: usize) -> Self {
        Self {
            examples: stats.examples,
            train: split.train.len(),
            test: split.test.len(),
            dropped_pairs,
            avg_words: stats.avg_words,
            avg_words_human: stats.avg_words_human,
            avg_words_machine: stats.avg_words_machine,
            train_digest: examples_digest(&split.train),
            test_digest: examples_digest(&split.test),
        }
    }
}

/// Per-classifier scores with their average, in the layout of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub dataset: DatasetSummary,
    pub results: Vec<ClassifierResult>,
    pub averages: MetricRow,
}

fn mean_row(results: &[ClassifierResult]) -> MetricRow {
    let n = results.len().max(1) as f64;
    let sum = |f: fn(&MetricRow) -> f64| results.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
    MetricRow {
        accuracy: sum(|m| m.accuracy),
        f1_positive: sum(|m| m.f1_positive),
        f1_macro: sum(|m| m.f1_macro),
    }
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

impl ExperimentReport {
    pub fn new(config: ConfigEcho, dataset: DatasetSummary, results: Vec<ClassifierResult>) -> Self {
        let averages = mean_row(&results);
        Self {
            config,
            dataset,
            results,
            averages,
        }
    }

    /// Recomputes the averages from the cells and compares.
    pub fn averages_consistent(&self) -> bool {
        let m = mean_row(&self.results);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        close(m.accuracy, self.averages.accuracy)
            && close(m.f1_positive, self.averages.f1_positive)
            && close(m.f1_macro, self.averages.f1_macro)
    }

    pub fn result(&self, kind: ClassifierKind) -> Option<&ClassifierResult> {
        self.results.iter().find(|r| r.classifier == kind)
    }

    /// `{task}_{human}-{generator}_det-{detector}_seed{seed}`.
    pub fn file_stem(&self) -> String {
        let c = &self.config;
        format!(
            "{}_{}-{}_det-{}_seed{}",
            c.task, c.human_lang, c.generator_lang, c.detector_lang, c.seed
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("classifier,accuracy_pct,f1_pct,f1_macro_pct,tp,fp,tn,fn\n");
        for r in &self.results {
            let c = r.confusion;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.classifier.display_name(),
                pct(r.metrics.accuracy),
                pct(r.metrics.f1_positive),
                pct(r.metrics.f1_macro),
                c.tp,
                c.fp,
                c.tn,
                c.fn_
            );
        }
        let a = &self.averages;
        let _ = writeln!(
            out,
            "AVERAGE,{},{},{},,,,",
            pct(a.accuracy),
            pct(a.f1_positive),
            pct(a.f1_macro)
        );
        out
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let d = &self.dataset;
        let mut out = String::new();
        let _ = writeln!(out, "Task:      {} detection", c.task);
        let _ = writeln!(
            out,
            "Languages: human {}, generator {}, detector {}",
            c.human_lang, c.generator_lang, c.detector_lang
        );
        let _ = writeln!(out, "Engine:    {}", c.engine_id);
        let _ = writeln!(out, "Seed:      {}", c.seed);
        let _ = writeln!(
            out,
            "Dataset:   {} examples, {} train / {} test, {} dropped pairs",
            d.examples, d.train, d.test, d.dropped_pairs
        );
        let _ = writeln!(
            out,
            "Words:     {:.1} per sentence (human {:.1}, machine {:.1})",
            d.avg_words, d.avg_words_human, d.avg_words_machine
        );
        let _ = writeln!(out, "Train:     sha256 {}", d.train_digest);
        let _ = writeln!(out, "Test:      sha256 {}", d.test_digest);
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>6} {:>8} {:>6} {:>6} {:>6} {:>6}",
            "", "ACC", "F1", "F1-macro", "TP", "FP", "TN", "FN"
        );
        for r in &self.results {
            let m = &r.metrics;
            let k = r.confusion;
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>6} {:>8} {:>6} {:>6} {:>6} {:>6}",
                r.classifier.display_name(),
                pct(m.accuracy),
                pct(m.f1_positive),
                pct(m.f1_macro),
                k.tp,
                k.fp,
                k.tn,
                k.fn_
            );
        }
        let a = &self.averages;
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>6} {:>8}",
            "AVERAGE",
            pct(a.accuracy),
            pct(a.f1_positive),
            pct(a.f1_macro)
        );
        out.push_str("\nSettings:\n");
        for (k, v) in &c.settings {
            let _ = writeln!(out, "  {k} = {v}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Writes `{stem}.txt`, `{stem}.csv` and `{stem}.json` into `dir`.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        let stem = self.file_stem();
        let mut paths = Vec::new();
        for (ext, body) in [("txt", self.to_text()), ("csv", self.to_csv()), ("json", self.to_json())] {
            let path = dir.join(format!("{stem}.{ext}"));
            write_atomic(&path, body.as_bytes())?;
            paths.push(path);
        }
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> ExperimentReport {
        let tag = |s: &str| LanguageTag::new(s).unwrap();
        let cell = |kind, tp, fp, tn, fn_| {
            ClassifierResult::new(
                kind,
                ConfusionMatrix { tp, fp, tn, fn_ }.metrics().unwrap(),
            )
        };
        ExperimentReport::new(
            ConfigEcho {
                task: Task::Backtranslation,
                human_lang: tag("en"),
                generator_lang: tag("fr"),
                detector_lang: tag("es"),
                engine_id: "e".into(),
                seed: 3,
                settings: BTreeMap::new(),
            },
            DatasetSummary {
                examples: 40,
                train: 20,
                test: 20,
                dropped_pairs: 0,
                avg_words: 10.0,
                avg_words_human: 10.0,
                avg_words_machine: 10.0,
                train_digest: String::new(),
                test_digest: String::new(),
            },
            vec![
                cell(ClassifierKind::Linear, 10, 0, 10, 0),
                cell(ClassifierKind::Adaboost, 10, 10, 0, 0),
            ],
        )
    }

    #[test]
    fn averages_are_cell_means() {
        let r = report();
        assert!(r.averages_consistent());
        assert_eq!(r.averages.accuracy, 0.75);
        assert!((r.averages.f1_positive - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        let mut tampered = r.clone();
        tampered.averages.accuracy = 0.7;
        assert!(!tampered.averages_consistent());
    }

    #[test]
    fn text_and_csv_carry_the_same_numbers() {
        let r = report();
        let csv = r.to_csv();
        let text = r.to_text();
        assert_eq!(csv.lines().nth(2).unwrap(), "ADABOOST,50.0,66.7,33.3,10,10,0,0");
        assert_eq!(csv.lines().last().unwrap(), "AVERAGE,75.0,83.3,66.7,,,,");
        let avg = text.lines().find(|l| l.starts_with("AVERAGE")).unwrap();
        assert_eq!(avg.split_whitespace().collect::<Vec<_>>(), ["AVERAGE", "75.0", "83.3", "66.7"]);
    }

    #[test]
    fn file_stem_names_task_languages_and_seed() {
        assert_eq!(report().file_stem(), "backtranslation_en-fr_det-es_seed3");
    }

    #[test]
    fn json_round_trips() {
        let r = report();
        let back: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
