//! Round-trips text through the offline fixture translator. Text produced
//! by the translator comes back unchanged; human paraphrases do not.
//!
//! cargo run --example fixture_backtranslation

use btdetect::bleu::FeatureExtractor;
use btdetect::dataset::synthetic;
use btdetect::translator::Translator;
use btdetect::{LanguageTag, Sentence};

fn main() {
    let en = LanguageTag::new("en").unwrap();
    let fr = LanguageTag::new("fr").unwrap();
    let translator = Translator::new(synthetic::fixture_backend(0));
    let extractor = FeatureExtractor::default();
    println!("engine: {}", translator.engine_id());

    for (text, polarity) in synthetic::sentiment_sentences(3, 2) {
        let human = Sentence::new(text, en.clone());
        let first = translator.back_translate(&human, &fr).unwrap();
        let machine = first.back_translation.clone();
        let second = translator.back_translate(&machine, &fr).unwrap();

        let f_human = extractor.extract(&human, &first.back_translation).unwrap();
        let f_machine = extractor.extract(&machine, &second.back_translation).unwrap();
        println!("[{polarity:?}] human:   {}", human.text);
        println!("          pivot:   {}", first.pivot.text);
        println!("          machine: {}", machine.text);
        println!("  BLEU-4 human {:.3}, machine {:.3}", f_human.values()[6], f_machine.values()[6]);
    }
    println!("backend calls: {}", translator.backend_calls());
}
