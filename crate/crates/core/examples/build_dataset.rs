//! Builds a paired translation-detection dataset, featurizes it and splits
//! it by pair.
//!
//! cargo run --example build_dataset -- [pairs]

use btdetect::bleu::FeatureExtractor;
use btdetect::dataset::{build_translation_dataset, featurize, paired_split, synthetic, DatasetStats, FeaturizeConfig};
use btdetect::translator::Translator;
use btdetect::LanguageTag;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let fr = LanguageTag::new("fr").unwrap();
    let fixture = synthetic::fixture_backend(0);
    let pairs = synthetic::parallel_pairs(1, n, &fixture);
    let translator = Translator::new(fixture);

    let built = build_translation_dataset(&pairs, &translator, &fr, 8).unwrap();
    let config = FeaturizeConfig {
        detector_lang: fr.clone(),
        extractor: FeatureExtractor::default(),
        max_in_flight: 8,
    };
    let featurized = featurize(&built.examples, &translator, &config).unwrap();
    let stats = DatasetStats::compute(&featurized.examples);
    println!(
        "{} examples ({} human, {} machine), {:.1} words on average",
        stats.examples, stats.human, stats.machine, stats.avg_words
    );

    let split = paired_split(&featurized.examples, 0.7, 0).unwrap();
    println!("train {} / test {}", split.train.len(), split.test.len());
    for e in split.train.iter().take(4) {
        let f = e.features.as_ref().unwrap().values();
        println!("  {:<7} {:<6} cum4 {:.3}  {}", e.pair_id, e.label, f[6], e.text.text);
    }
}
