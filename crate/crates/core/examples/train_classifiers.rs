//! Trains the four classifiers on featurized data, evaluates them on the
//! held-out half and saves one model to disk.
//!
//! cargo run --example train_classifiers

use btdetect::bleu::FeatureExtractor;
use btdetect::classify::{load_model, points_from_examples, save_model, ClassifierKind, TrainingConfig};
use btdetect::dataset::{build_backtranslation_dataset, featurize, paired_split, synthetic, FeaturizeConfig};
use btdetect::eval::evaluate;
use btdetect::translator::Translator;
use btdetect::{LanguageTag, Sentence};

fn main() {
    let en = LanguageTag::new("en").unwrap();
    let fr = LanguageTag::new("fr").unwrap();
    let translator = Translator::new(synthetic::fixture_backend(0));
    let sentences: Vec<Sentence> = synthetic::sentiment_sentences(4, 150)
        .into_iter()
        .map(|(t, _)| Sentence::new(t, en.clone()))
        .collect();
    let built = build_backtranslation_dataset(&sentences, &translator, &fr, 8).unwrap();
    let config = FeaturizeConfig {
        detector_lang: fr,
        extractor: FeatureExtractor::default(),
        max_in_flight: 8,
    };
    let examples = featurize(&built.examples, &translator, &config).unwrap().examples;
    let split = paired_split(&examples, 0.7, 1).unwrap();
    let train = points_from_examples(&split.train).unwrap();
    let test = points_from_examples(&split.test).unwrap();

    let training = TrainingConfig::default().with_seed(1);
    for kind in ClassifierKind::ALL {
        let model = training.train(kind, &train).unwrap();
        let m = evaluate(&model, &test).unwrap();
        println!(
            "{:<9} accuracy {:5.1}%  F1 {:5.1}%",
            kind.display_name(),
            m.accuracy * 100.0,
            m.f1_positive * 100.0
        );
    }

    let dir = std::env::temp_dir().join("btdetect-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("svm_smo.json");
    let model = training.train(ClassifierKind::SvmSmo, &train).unwrap();
    save_model(&model, &path).unwrap();
    assert_eq!(load_model(&path).unwrap(), model);
    println!("saved {}", path.display());
}
