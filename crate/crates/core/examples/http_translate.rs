//! Back-translates a sentence through a JSON-over-HTTP translation service.
//!
//! TRANSLATOR_ENDPOINT=http://host/translate [TRANSLATOR_API_KEY=...] \
//!     cargo run --example http_translate -- "text to check"

use std::sync::Arc;

use btdetect::bleu::FeatureExtractor;
use btdetect::translator::{HttpBackend, RetryPolicy, TranslationCache, Translator};
use btdetect::{LanguageTag, Sentence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Some(backend) = HttpBackend::from_env() else {
        eprintln!("set TRANSLATOR_ENDPOINT to run this example");
        return Ok(());
    };
    let text = std::env::args().nth(1).unwrap_or_else(|| "The weather was lovely this morning.".into());
    let cache = TranslationCache::open(std::env::temp_dir().join("btdetect-http-cache"))?;
    let translator = Translator::new(backend)
        .with_retry(RetryPolicy::default())
        .with_cache(Arc::new(cache));

    let sentence = Sentence::new(text, LanguageTag::new("en")?);
    let record = translator.back_translate(&sentence, &LanguageTag::new("fr")?)?;
    let features = FeatureExtractor::default().extract(&record.original, &record.back_translation)?;
    println!("pivot: {}", record.pivot.text);
    println!("back:  {}", record.back_translation.text);
    println!("features: {:.4?}", features.values());
    Ok(())
}
