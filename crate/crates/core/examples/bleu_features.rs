//! BLEU scores and the seven-value feature vector for a few sentence pairs.
//!
//! cargo run --example bleu_features

use btdetect::bleu::{BleuBreakdown, FeatureExtractor, Smoothing};
use btdetect::tokenize::{tokenize, TokenMode};

fn main() {
    let pairs = [
        ("the cat is on the mat", "the cat is on the mat"),
        ("the cat is on the mat", "the cat sat on a mat"),
        ("Not only was it late, it was also cold.", "It was not only late but also cold."),
        ("the the the the the the the", "the cat is on the mat"),
    ];
    let extractor = FeatureExtractor::default();
    for (candidate, reference) in pairs {
        let c = tokenize(candidate, TokenMode::Word, true);
        let r = tokenize(reference, TokenMode::Word, true);
        let b = BleuBreakdown::compute(&c, &r);
        println!("candidate: {candidate}\nreference: {reference}");
        for n in 1..=4 {
            let p = b.precision(n).unwrap();
            println!(
                "  {n}-gram precision {}/{}  individual {:.4}  cumulative {:.4}",
                p.matches,
                p.total,
                b.individual(n, Smoothing::None).unwrap(),
                b.cumulative(n, Smoothing::None).unwrap()
            );
        }
        let features = extractor.extract_text(reference, candidate).unwrap();
        println!("  features {:.4?}\n", features.values());
    }
}
