//! Line-delimited JSON files exchanged between pipeline stages.
//!
//! * Back-translation record files: one [`RecordLine`] per line.
//! * Featurized dataset files: one [`FeaturizedRecord`] per line.
//!
//! All writers go through [`write_atomic`], so a reader never observes a
//! partially written file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bleu::{FeatureExtractor, FeatureVector, FEATURE_DIM, FEATURE_SCHEMA_VERSION};
use crate::dataset::{Label, LabeledExample};
use crate::sentence::LanguageTag;
use crate::translator::BackTranslationRecord;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Writes `bytes` to a sibling temporary file, syncs it, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Serializes items as JSON lines.
pub fn to_json_lines<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), RecordError> {
    write_atomic(path, to_json_lines(items).as_bytes()).map_err(|source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses every non-blank line, collecting per-line failures instead of
/// stopping at the first one. Line numbers are 1-based.
pub fn parse_json_lines<T: for<'de> Deserialize<'de>>(text: &str) -> (Vec<(usize, T)>, Vec<RecordError>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(item) => ok.push((idx + 1, item)),
            Err(e) => errors.push(RecordError::Malformed {
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    (ok, errors)
}

pub fn read_text(path: &Path) -> Result<String, RecordError> {
    fs::read_to_string(path).map_err(|source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A back-translation record with an input identifier and optional gold
/// annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(flatten)]
    pub record: BackTranslationRecord,
}

/// One featurized example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizedRecord {
    pub example_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    pub text: String,
    pub back_translation_text: String,
    pub features: [f64; FEATURE_DIM],
    pub schema_version: String,
    pub detector_intermediate_lang: LanguageTag,
    pub engine_id: String,
}

impl FeaturizedRecord {
    /// Featurizes a record line with `extractor`.
    pub fn from_record_line(line: &RecordLine, extractor: &FeatureExtractor) -> Result<Self, String> {
        let rec = &line.record;
        let fv = extractor
            .extract(&rec.original, &rec.back_translation)
            .map_err(|e| e.to_string())?;
        Ok(Self {
            example_id: line.id.clone(),
            pair_id: line.pair_id.clone(),
            label: line.label,
            text: rec.original.text.clone(),
            back_translation_text: rec.back_translation.text.clone(),
            features: *fv.values(),
            schema_version: fv.schema_version().to_string(),
            detector_intermediate_lang: rec.pivot.language.clone(),
            engine_id: rec.engine_id.clone(),
        })
    }

    /// Converts a featurized [`LabeledExample`]; `None` when it has no features
    /// or no detector back-translation.
    pub fn from_example(example: &LabeledExample) -> Option<Self> {
        let fv = example.features.as_ref()?;
        let rec = example.back_translation.as_ref()?;
        Some(Self {
            example_id: example.example_id.clone(),
            pair_id: Some(example.pair_id.clone()),
            label: Some(example.label),
            text: example.text.text.clone(),
            back_translation_text: rec.back_translation.text.clone(),
            features: *fv.values(),
            schema_version: fv.schema_version().to_string(),
            detector_intermediate_lang: rec.pivot.language.clone(),
            engine_id: rec.engine_id.clone(),
        })
    }

    pub fn feature_vector(&self) -> Result<FeatureVector, String> {
        FeatureVector::with_schema(self.features, self.schema_version.clone()).map_err(|e| e.to_string())
    }

    pub fn is_current_schema(&self) -> bool {
        self.schema_version == FEATURE_SCHEMA_VERSION
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentence::Sentence;

    fn record() -> BackTranslationRecord {
        let en = LanguageTag::new("en").unwrap();
        let fr = LanguageTag::new("fr").unwrap();
        BackTranslationRecord {
            original: Sentence::new("A fine day", en.clone()).with_passes(0),
            pivot: Sentence::new("bon jour", fr).with_passes(1),
            back_translation: Sentence::new("a good day", en).with_passes(2),
            engine_id: "fixture".into(),
            pass_count: 2,
            timestamp: None,
        }
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        write_atomic(&path, b"first\n").unwrap();
        write_atomic(&path, b"second\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn record_line_is_flat() {
        let line = RecordLine {
            id: "1".into(),
            pair_id: None,
            label: Some(Label::Human),
            record: record(),
        };
        let json = serde_json::to_value(&line).unwrap();
        assert_eq!(json["label"], "human");
        assert_eq!(json["engine_id"], "fixture");
        assert_eq!(json["original"]["text"], "A fine day");
        assert!(json.get("pair_id").is_none());
        let back: RecordLine = serde_json::from_value(json).unwrap();
        assert_eq!(back, line);
    }

    #[test]
    fn featurized_fields() {
        let line = RecordLine {
            id: "7".into(),
            pair_id: Some("p".into()),
            label: Some(Label::Machine),
            record: record(),
        };
        let f = FeaturizedRecord::from_record_line(&line, &FeatureExtractor::default()).unwrap();
        assert_eq!(f.detector_intermediate_lang.as_str(), "fr");
        assert_eq!(f.back_translation_text, "a good day");
        assert_eq!(f.schema_version, FEATURE_SCHEMA_VERSION);
        assert!((f.features[0] - 2.0 / 3.0).abs() < 1e-15);
        let json = serde_json::to_value(&f).unwrap();
        for key in [
            "example_id",
            "pair_id",
            "label",
            "text",
            "back_translation_text",
            "features",
            "detector_intermediate_lang",
            "engine_id",
            "schema_version",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn parse_collects_line_errors() {
        let text = "{\"a\":1}\n\nnot json\n{\"a\":2}\n";
        let (ok, errs) = parse_json_lines::<serde_json::Value>(text);
        assert_eq!(ok.iter().map(|(l, _)| *l).collect::<Vec<_>>(), vec![1, 4]);
        assert!(matches!(errs[0], RecordError::Malformed { line: 3, .. }));
    }
}
