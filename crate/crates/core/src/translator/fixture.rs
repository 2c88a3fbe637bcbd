//! Deterministic offline translator.
//!
//! Every word is first mapped to a concept: the reverse dictionary of its
//! language is consulted, then a language suffix is stripped, and finally the
//! synonym table picks the canonical word of the concept. A concept is then
//! rendered in the target language through that language's dictionary, or as
//! `<concept>x<lang>` when no entry exists. Text in the base language renders
//! concepts as their canonical words.
//!
//! Because decoding inverts encoding and canonicalization is idempotent, a
//! round trip `src -> pivot -> src` maps any text onto its canonical wording
//! and leaves canonical text unchanged. Human text containing non-canonical
//! synonyms therefore changes on the first round trip while machine output
//! never changes again.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::backend::{BackendError, TranslatorBackend};
use crate::sentence::LanguageTag;
use crate::tokenize::{tokenize, TokenMode};

pub const FIXTURE_ENGINE_VERSION: &str = "fixture-projection/v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FixtureError {
    #[error("synonym cycle through `{0}`")]
    SynonymCycle(String),
    #[error("dictionary for `{lang}` maps both `{first}` and `{second}` to `{word}`")]
    AmbiguousEntry {
        lang: String,
        word: String,
        first: String,
        second: String,
    },
    #[error("dictionary entry `{word}` for `{lang}` collides with the generated suffix form")]
    SuffixCollision { lang: String, word: String },
}

#[derive(Debug, Default, Clone)]
struct Lexicon {
    forward: HashMap<String, String>,
    reverse: HashMap<String, String>,
}

/// Projection-style fixture backend. Build with [`FixtureBackend::builder`].
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    engine_id: String,
    base: LanguageTag,
    canonical: HashMap<String, String>,
    lexicons: HashMap<LanguageTag, Lexicon>,
    failing_words: HashSet<String>,
}

impl FixtureBackend {
    pub fn builder(base: LanguageTag) -> FixtureBuilder {
        FixtureBuilder {
            base,
            engine_suffix: None,
            synonyms: Vec::new(),
            entries: Vec::new(),
            failing_words: HashSet::new(),
        }
    }

    pub fn base_language(&self) -> &LanguageTag {
        &self.base
    }

    /// Canonical word for `word`, or `word` itself.
    pub fn canonicalize<'a>(&'a self, word: &'a str) -> &'a str {
        self.canonical.get(word).map(String::as_str).unwrap_or(word)
    }

    /// Whether `word` is a non-canonical synonym.
    pub fn is_variant(&self, word: &str) -> bool {
        self.canonical.contains_key(word)
    }

    fn decode(&self, token: &str, lang: &LanguageTag) -> String {
        if !is_word(token) || *lang == self.base {
            return self.canonicalize(token).to_string();
        }
        let concept = match self.lexicons.get(lang).and_then(|lex| lex.reverse.get(token)) {
            Some(concept) => concept.as_str(),
            None => {
                let suffix = suffix_for(lang);
                match token.strip_suffix(&suffix) {
                    Some(stem) if !stem.is_empty() => stem,
                    _ => token,
                }
            }
        };
        self.canonicalize(concept).to_string()
    }

    fn encode(&self, concept: &str, lang: &LanguageTag) -> String {
        if !is_word(concept) || *lang == self.base {
            return concept.to_string();
        }
        match self.lexicons.get(lang).and_then(|lex| lex.forward.get(concept)) {
            Some(word) => word.clone(),
            None => format!("{concept}{}", suffix_for(lang)),
        }
    }
}

impl TranslatorBackend for FixtureBackend {
    fn engine_id(&self) -> &str {
        &self.engine_id
    }

    fn translate(&self, text: &str, source: &LanguageTag, target: &LanguageTag) -> Result<String, BackendError> {
        if source == target {
            return Err(BackendError::Rejected(format!("source and target are both `{source}`")));
        }
        let tokens = tokenize(text, TokenMode::Word, true);
        if let Some(bad) = tokens.tokens().iter().find(|t| self.failing_words.contains(*t)) {
            return Err(BackendError::Unreachable(format!("injected failure on `{bad}`")));
        }
        let out: Vec<String> = tokens
            .tokens()
            .iter()
            .map(|t| self.encode(&self.decode(t, source), target))
            .collect();
        Ok(out.join(" "))
    }
}

fn is_word(token: &str) -> bool {
    token.chars().all(char::is_alphanumeric)
}

fn suffix_for(lang: &LanguageTag) -> String {
    let code: String = lang.as_str().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    format!("x{code}")
}

pub struct FixtureBuilder {
    base: LanguageTag,
    engine_suffix: Option<String>,
    synonyms: Vec<(String, String)>,
    entries: Vec<(LanguageTag, String, String)>,
    failing_words: HashSet<String>,
}

impl FixtureBuilder {
    /// Distinguishes engine ids of fixtures built from different tables.
    pub fn engine_tag(mut self, tag: impl Into<String>) -> Self {
        self.engine_suffix = Some(tag.into());
        self
    }

    /// Declares `variant` as a synonym rendered canonically as `canonical`.
    pub fn synonym(mut self, variant: &str, canonical: &str) -> Self {
        self.synonyms.push((variant.to_lowercase(), canonical.to_lowercase()));
        self
    }

    /// Adds a dictionary entry rendering `concept` as `word` in `lang`.
    pub fn entry(mut self, lang: &LanguageTag, concept: &str, word: &str) -> Self {
        self.entries
            .push((lang.clone(), concept.to_lowercase(), word.to_lowercase()));
        self
    }

    /// Adds seeded pseudo-word dictionary entries for `concepts` in `lang`.
    pub fn seeded_dictionary(mut self, lang: &LanguageTag, concepts: &[String], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ hash_str(lang.as_str()));
        let mut used = HashSet::new();
        let mut order: Vec<&String> = concepts.iter().collect();
        order.sort();
        order.dedup();
        order.shuffle(&mut rng);
        for concept in order {
            let word = loop {
                let candidate = pseudo_word(&mut rng);
                if used.insert(candidate.clone()) {
                    break candidate;
                }
            };
            self.entries.push((lang.clone(), concept.clone(), word));
        }
        self
    }

    /// Makes any text containing `word` fail with [`BackendError::Unreachable`].
    pub fn fail_on(mut self, word: &str) -> Self {
        self.failing_words.insert(word.to_lowercase());
        self
    }

    pub fn build(self) -> Result<FixtureBackend, FixtureError> {
        let raw: HashMap<String, String> = self
            .synonyms
            .into_iter()
            .filter(|(v, c)| v != c)
            .collect();
        let mut canonical = HashMap::new();
        for start in raw.keys() {
            let mut seen = HashSet::new();
            let mut current = start;
            while let Some(next) = raw.get(current) {
                if !seen.insert(current.clone()) {
                    return Err(FixtureError::SynonymCycle(start.clone()));
                }
                current = next;
            }
            canonical.insert(start.clone(), current.clone());
        }

        let mut lexicons: HashMap<LanguageTag, Lexicon> = HashMap::new();
        for (lang, concept, word) in self.entries {
            if word.ends_with(&suffix_for(&lang)) {
                return Err(FixtureError::SuffixCollision {
                    lang: lang.to_string(),
                    word,
                });
            }
            let lex = lexicons.entry(lang.clone()).or_default();
            if let Some(previous) = lex.reverse.get(&word) {
                if *previous != concept {
                    return Err(FixtureError::AmbiguousEntry {
                        lang: lang.to_string(),
                        word,
                        first: previous.clone(),
                        second: concept,
                    });
                }
            }
            if let Some(old) = lex.forward.insert(concept.clone(), word.clone()) {
                lex.reverse.remove(&old);
            }
            lex.reverse.insert(word, concept);
        }

        let engine_id = match self.engine_suffix {
            Some(tag) => format!("{FIXTURE_ENGINE_VERSION}+{tag}"),
            None => FIXTURE_ENGINE_VERSION.to_string(),
        };
        Ok(FixtureBackend {
            engine_id,
            base: self.base,
            canonical,
            lexicons,
            failing_words: self.failing_words,
        })
    }
}

fn hash_str(s: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn pseudo_word(rng: &mut impl Rng) -> String {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v"];
    const VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "ou"];
    let syllables = rng.random_range(2..=3);
    (0..syllables)
        .map(|_| format!("{}{}", ONSETS[rng.random_range(0..ONSETS.len())], VOWELS[rng.random_range(0..VOWELS.len())]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::new(s).unwrap()
    }

    fn sample() -> FixtureBackend {
        FixtureBackend::builder(tag("en"))
            .synonym("large", "big")
            .synonym("huge", "large")
            .synonym("fine", "good")
            .entry(&tag("fr"), "good", "bon")
            .entry(&tag("fr"), "big", "grand")
            .build()
            .unwrap()
    }

    fn round_trip(backend: &FixtureBackend, text: &str, pivot: &str) -> String {
        let fwd = backend.translate(text, &tag("en"), &tag(pivot)).unwrap();
        backend.translate(&fwd, &tag(pivot), &tag("en")).unwrap()
    }

    #[test]
    fn dictionary_substitution() {
        let b = sample();
        assert_eq!(b.translate("good", &tag("en"), &tag("fr")).unwrap(), "bon");
        assert_eq!(b.translate("bon", &tag("fr"), &tag("en")).unwrap(), "good");
        assert_eq!(b.translate("cat", &tag("en"), &tag("fr")).unwrap(), "catxfr");
        assert_eq!(b.translate("Huge cat!", &tag("en"), &tag("es")).unwrap(), "bigxes catxes !");
    }

    #[test]
    fn synonym_chains_resolve() {
        let b = sample();
        assert_eq!(b.canonicalize("huge"), "big");
        assert_eq!(b.canonicalize("large"), "big");
        assert_eq!(b.canonicalize("big"), "big");
        assert!(b.is_variant("fine"));
        assert!(!b.is_variant("good"));
    }

    #[test]
    fn round_trip_canonicalizes_once() {
        let b = sample();
        let once = round_trip(&b, "A fine and huge cat.", "fr");
        assert_eq!(once, "a good and big cat .");
        assert_eq!(round_trip(&b, &once, "fr"), once);
        assert_eq!(round_trip(&b, &once, "ja"), once);
    }

    #[test]
    fn rejects_bad_tables() {
        let cyc = FixtureBackend::builder(tag("en")).synonym("a", "b").synonym("b", "a").build();
        assert!(matches!(cyc, Err(FixtureError::SynonymCycle(_))));
        let amb = FixtureBackend::builder(tag("en"))
            .entry(&tag("fr"), "good", "bon")
            .entry(&tag("fr"), "nice", "bon")
            .build();
        assert!(matches!(amb, Err(FixtureError::AmbiguousEntry { .. })));
        let col = FixtureBackend::builder(tag("en")).entry(&tag("fr"), "cat", "chatxfr").build();
        assert!(matches!(col, Err(FixtureError::SuffixCollision { .. })));
    }

    #[test]
    fn injected_failures() {
        let b = FixtureBackend::builder(tag("en")).fail_on("boom").build().unwrap();
        assert!(matches!(
            b.translate("it goes boom", &tag("en"), &tag("fr")),
            Err(BackendError::Unreachable(_))
        ));
        assert!(b.translate("it goes", &tag("en"), &tag("fr")).is_ok());
    }

    #[test]
    fn seeded_dictionary_is_deterministic_and_invertible() {
        let concepts: Vec<String> = ["cat", "dog", "house", "tree"].iter().map(|s| s.to_string()).collect();
        let build = || {
            FixtureBackend::builder(tag("en"))
                .seeded_dictionary(&tag("fr"), &concepts, 7)
                .build()
                .unwrap()
        };
        let (a, b) = (build(), build());
        let fa = a.translate("cat dog house tree", &tag("en"), &tag("fr")).unwrap();
        let fb = b.translate("cat dog house tree", &tag("en"), &tag("fr")).unwrap();
        assert_eq!(fa, fb);
        assert!(!fa.contains("xfr"));
        assert_eq!(a.translate(&fa, &tag("fr"), &tag("en")).unwrap(), "cat dog house tree");
    }

    proptest! {
        #[test]
        fn round_trip_is_a_projection(
            words in proptest::collection::vec(
                prop_oneof!["[a-z]{1,6}", Just("large".to_string()), Just("huge".to_string()),
                            Just("fine".to_string()), Just("bon".to_string()), Just("catxfr".to_string()),
                            Just("?".to_string())],
                0..12),
            pivot in prop_oneof![Just("fr"), Just("es"), Just("ja")],
        ) {
            let b = sample();
            let text = words.join(" ");
            let once = round_trip(&b, &text, pivot);
            prop_assert_eq!(round_trip(&b, &once, pivot), once.clone());
            prop_assert_eq!(round_trip(&b, &once, "zh"), once);
        }
    }
}
