use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{DatasetError, LabeledExample, Label, SentencePair};
use crate::bleu::FeatureExtractor;
use crate::sentence::{LanguageTag, Sentence};
use crate::translator::Translator;

/// An item that was left out of a dataset, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub pair_id: String,
    pub stage: String,
    pub message: String,
}

/// Examples that were built, plus the pairs dropped on the way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetBuild {
    pub examples: Vec<LabeledExample>,
    pub failures: Vec<ItemFailure>,
}

/// Translation-detection data: each pair yields its human side (label human)
/// and the translation of its foreign side into the human side's language
/// (label machine). Pairs whose translation fails are dropped whole.
pub fn build_translation_dataset(
    pairs: &[SentencePair],
    translator: &Translator,
    generator_lang: &LanguageTag,
    max_in_flight: usize,
) -> Result<DatasetBuild, DatasetError> {
    if max_in_flight == 0 {
        return Err(DatasetError::Config("max_in_flight must be at least 1".into()));
    }
    for pair in pairs {
        if pair.foreign_text.language != *generator_lang {
            return Err(DatasetError::LanguageMismatch {
                expected: generator_lang.clone(),
                found: pair.foreign_text.language.clone(),
            });
        }
        if pair.human_text.language == pair.foreign_text.language {
            return Err(DatasetError::Config(format!(
                "pair `{}` has both sides in `{}`",
                pair.pair_id, pair.human_text.language
            )));
        }
    }

    let translations = translator.parallel_map(pairs, max_in_flight, |pair| {
        translator.translate_sentence(&pair.foreign_text, &pair.human_text.language)
    });

    let mut out = DatasetBuild::default();
    for (pair, result) in pairs.iter().zip(translations) {
        match result {
            Ok(machine) => {
                out.examples
                    .push(LabeledExample::new(&pair.pair_id, pair.human_text.clone(), Label::Human));
                out.examples
                    .push(LabeledExample::new(&pair.pair_id, machine, Label::Machine));
            }
            Err(e) => out.failures.push(ItemFailure {
                pair_id: pair.pair_id.clone(),
                stage: "generate".into(),
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Pair id assigned to the `index`-th sentence of a back-translation dataset.
pub fn sentence_pair_id(index: usize) -> String {
    format!("S{:07}", index + 1)
}

/// Back-translation-detection data: each human sentence is paired with its
/// own round trip through `generator_intermediate` (label machine).
pub fn build_backtranslation_dataset(
    sentences: &[Sentence],
    translator: &Translator,
    generator_intermediate: &LanguageTag,
    max_in_flight: usize,
) -> Result<DatasetBuild, DatasetError> {
    let report = translator
        .batch_back_translate(sentences, generator_intermediate, max_in_flight)
        .map_err(|e| DatasetError::Config(e.to_string()))?;

    let mut out = DatasetBuild::default();
    for (i, (sentence, result)) in sentences.iter().zip(report.items).enumerate() {
        let pair_id = sentence_pair_id(i);
        match result {
            Ok(record) => {
                out.examples
                    .push(LabeledExample::new(&pair_id, sentence.clone(), Label::Human));
                let mut machine =
                    LabeledExample::new(&pair_id, record.back_translation.clone(), Label::Machine);
                machine.generation_provenance = Some(record);
                out.examples.push(machine);
            }
            Err(e) => out.failures.push(ItemFailure {
                pair_id,
                stage: "generate".into(),
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Settings for the detector's own back-translation and BLEU featurization.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizeConfig {
    pub detector_lang: LanguageTag,
    pub extractor: FeatureExtractor,
    pub max_in_flight: usize,
}

/// Back-translates every example through the detector language and attaches
/// its feature vector. When either member of a pair cannot be featurized the
/// whole pair is dropped so the dataset stays balanced.
pub fn featurize(
    examples: &[LabeledExample],
    translator: &Translator,
    config: &FeaturizeConfig,
) -> Result<DatasetBuild, DatasetError> {
    let sentences: Vec<Sentence> = examples.iter().map(|e| e.text.clone()).collect();
    let report = translator
        .batch_back_translate(&sentences, &config.detector_lang, config.max_in_flight)
        .map_err(|e| DatasetError::Config(e.to_string()))?;

    let mut featurized = Vec::with_capacity(examples.len());
    let mut failures = Vec::new();
    let mut dropped_pairs = HashSet::new();
    for (example, result) in examples.iter().zip(report.items) {
        let outcome = result.map_err(|e| e.to_string()).and_then(|record| {
            config
                .extractor
                .extract(&record.original, &record.back_translation)
                .map(|features| (record, features))
                .map_err(|e| e.to_string())
        });
        match outcome {
            Ok((record, features)) => {
                let mut ex = example.clone();
                ex.features = Some(features);
                ex.back_translation = Some(record);
                featurized.push(ex);
            }
            Err(message) => {
                dropped_pairs.insert(example.pair_id.clone());
                failures.push(ItemFailure {
                    pair_id: example.pair_id.clone(),
                    stage: format!("featurize {}", example.example_id),
                    message,
                });
            }
        }
    }
    featurized.retain(|e| !dropped_pairs.contains(&e.pair_id));
    Ok(DatasetBuild {
        examples: featurized,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::check_pairing;
    use crate::translator::{FixtureBackend, RetryPolicy};

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::new(s).unwrap()
    }

    fn translator() -> Translator {
        let backend = FixtureBackend::builder(tag("en"))
            .synonym("fine", "good")
            .synonym("large", "big")
            .entry(&tag("fr"), "good", "bon")
            .fail_on("boom")
            .build()
            .unwrap();
        Translator::new(backend).with_retry(RetryPolicy::none())
    }

    fn pair(id: &str, en: &str, fr: &str) -> SentencePair {
        SentencePair {
            pair_id: id.into(),
            human_text: Sentence::new(en, tag("en")).with_passes(0),
            foreign_text: Sentence::new(fr, tag("fr")).with_passes(0),
        }
    }

    #[test]
    fn translation_dataset_doubles_pairs() {
        let pairs = vec![
            pair("a", "A fine large house", "bon bigxfr housexfr"),
            pair("b", "The cat sat", "thexfr catxfr satxfr"),
        ];
        let built = build_translation_dataset(&pairs, &translator(), &tag("fr"), 2).unwrap();
        assert_eq!(built.examples.len(), 4);
        assert!(built.failures.is_empty());
        check_pairing(&built.examples).unwrap();
        let machine = &built.examples[1];
        assert_eq!(machine.label, Label::Machine);
        assert_eq!(machine.text.text, "good big house");
        assert_eq!(machine.text.language, tag("en"));
        assert_eq!(machine.text.passes, Some(1));

        let empty = build_translation_dataset(&[], &translator(), &tag("fr"), 1).unwrap();
        assert!(empty.examples.is_empty());
    }

    #[test]
    fn failed_translation_drops_the_pair() {
        let pairs = vec![pair("a", "fine", "boom")];
        let built = build_translation_dataset(&pairs, &translator(), &tag("fr"), 1).unwrap();
        assert!(built.examples.is_empty());
        assert_eq!(built.failures.len(), 1);
        assert_eq!(built.failures[0].pair_id, "a");
    }

    #[test]
    fn generator_language_must_match_pairs() {
        let pairs = vec![pair("a", "fine", "bon")];
        let err = build_translation_dataset(&pairs, &translator(), &tag("es"), 1).unwrap_err();
        assert!(matches!(err, DatasetError::LanguageMismatch { .. }));
    }

    #[test]
    fn backtranslation_dataset_machine_is_fixed_point() {
        let t = translator();
        let sentences: Vec<_> = ["A fine day", "Large dogs bark", "Nothing to change here"]
            .iter()
            .map(|s| Sentence::new(*s, tag("en")).with_passes(0))
            .collect();
        let built = build_backtranslation_dataset(&sentences, &t, &tag("fr"), 3).unwrap();
        assert_eq!(built.examples.len(), 6);
        check_pairing(&built.examples).unwrap();
        for machine in built.examples.iter().filter(|e| e.label == Label::Machine) {
            let rec = machine.generation_provenance.as_ref().unwrap();
            assert_eq!(rec.pass_count, 2);
            let again = t.back_translate(&machine.text, &tag("fr")).unwrap();
            assert_eq!(again.back_translation.text, machine.text.text);
        }
        assert_eq!(built.examples[0].pair_id, "S0000001");
        assert!(build_backtranslation_dataset(&[], &t, &tag("fr"), 1).unwrap().examples.is_empty());
    }

    #[test]
    fn featurize_attaches_vectors_and_drops_failed_pairs() {
        let t = translator();
        let mut examples = vec![
            LabeledExample::new("a", Sentence::new("a fine and large house", tag("en")), Label::Human),
            LabeledExample::new("a", Sentence::new("a good and big house", tag("en")), Label::Machine),
            LabeledExample::new("b", Sentence::new("it went boom", tag("en")), Label::Human),
            LabeledExample::new("b", Sentence::new("it went bang", tag("en")), Label::Machine),
        ];
        examples.push(LabeledExample::new("c", Sentence::new("...", tag("en")), Label::Human));
        examples.push(LabeledExample::new("c", Sentence::new("", tag("en")), Label::Machine));
        let config = FeaturizeConfig {
            detector_lang: tag("fr"),
            extractor: FeatureExtractor::default(),
            max_in_flight: 2,
        };
        let built = featurize(&examples, &t, &config).unwrap();
        assert_eq!(built.examples.len(), 2);
        assert_eq!(built.failures.len(), 2);
        let machine = &built.examples[1];
        assert_eq!(machine.features.as_ref().unwrap().values(), &[1.0; 7]);
        let human = &built.examples[0];
        assert!(human.features.as_ref().unwrap().values()[0] < 1.0);
        assert_eq!(human.back_translation.as_ref().unwrap().pivot.language, tag("fr"));
    }
}
