//! Seeded synthetic corpora paired with a matching fixture translator.
//!
//! Sentences are drawn from a small English vocabulary in which many words
//! have synonyms. The fixture translator renders every synonym group by its
//! first word, so machine output is always in canonical wording while human
//! sentences usually are not.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::Polarity;
use super::{DatasetError, SentencePair};
use crate::sentence::{LanguageTag, Sentence};
use crate::translator::{FixtureBackend, TranslatorBackend};

/// Synonym groups; the first word of each group is canonical.
const SYNONYM_GROUPS: &[&[&str]] = &[
    &["big", "large", "huge"],
    &["small", "little", "tiny"],
    &["good", "fine", "decent"],
    &["bad", "poor", "awful"],
    &["quick", "fast", "rapid"],
    &["begin", "start", "commence"],
    &["end", "finish", "conclude"],
    &["help", "assist", "aid"],
    &["show", "display", "reveal"],
    &["buy", "purchase", "acquire"],
    &["need", "require"],
    &["house", "home", "dwelling"],
    &["car", "automobile", "vehicle"],
    &["child", "kid", "youngster"],
    &["speak", "talk", "converse"],
    &["often", "frequently"],
    &["maybe", "perhaps", "possibly"],
    &["happy", "glad", "cheerful"],
    &["sad", "unhappy", "gloomy"],
    &["important", "crucial", "essential"],
    &["problem", "issue", "difficulty"],
    &["answer", "reply", "response"],
    &["idea", "notion", "concept"],
    &["choose", "select", "pick"],
    &["country", "nation", "state"],
    &["rule", "regulation", "law"],
    &["money", "funds", "cash"],
    &["work", "labour", "toil"],
    &["think", "believe", "suppose"],
    &["very", "extremely", "highly"],
];

const PLAIN_WORDS: &[&str] = &[
    "the", "a", "of", "and", "to", "in", "we", "they", "this", "that", "is", "are", "was", "for",
    "with", "on", "our", "their", "it", "be", "have", "will", "not", "all", "new", "time", "year",
    "people", "market", "report", "council", "member", "policy", "vote", "debate", "plan", "city",
    "water", "school", "film", "story", "music", "road", "tree", "river", "light", "night", "day",
    "week", "question", "point", "group", "world", "system", "service", "number", "part", "case",
];

const POSITIVE_WORDS: &[&str] = &["wonderful", "charming", "moving", "brilliant", "delightful"];
const NEGATIVE_WORDS: &[&str] = &["boring", "dull", "tedious", "clumsy", "forgettable"];

/// Languages the synthetic fixture has dictionaries for.
pub const FIXTURE_LANGUAGES: &[&str] = &["fr", "es", "ja", "zh", "de"];

/// Probability that a content word is drawn from the synonym vocabulary.
const SYNONYM_RATE: f64 = 0.45;

fn all_concepts() -> Vec<String> {
    SYNONYM_GROUPS
        .iter()
        .map(|g| g[0])
        .chain(PLAIN_WORDS.iter().copied())
        .chain(POSITIVE_WORDS.iter().copied())
        .chain(NEGATIVE_WORDS.iter().copied())
        .map(str::to_string)
        .collect()
}

/// Fixture translator whose synonym table matches the synthetic vocabulary.
pub fn fixture_backend(seed: u64) -> FixtureBackend {
    let en = LanguageTag::new("en").expect("valid tag");
    let concepts = all_concepts();
    let mut builder = FixtureBackend::builder(en).engine_tag(format!("synthetic-{seed}"));
    for group in SYNONYM_GROUPS {
        for variant in &group[1..] {
            builder = builder.synonym(variant, group[0]);
        }
    }
    for lang in FIXTURE_LANGUAGES {
        let tag = LanguageTag::new(*lang).expect("valid tag");
        builder = builder.seeded_dictionary(&tag, &concepts, seed);
    }
    builder.build().expect("synthetic tables are consistent")
}

fn sentence(rng: &mut impl Rng, extra: &[&str]) -> String {
    let len = rng.random_range(8..=20);
    let mut words: Vec<&str> = Vec::with_capacity(len + 1);
    for _ in 0..len {
        if rng.random_bool(SYNONYM_RATE) {
            let group = SYNONYM_GROUPS[rng.random_range(0..SYNONYM_GROUPS.len())];
            words.push(group[rng.random_range(0..group.len())]);
        } else if !extra.is_empty() && rng.random_bool(0.15) {
            words.push(extra[rng.random_range(0..extra.len())]);
        } else {
            words.push(PLAIN_WORDS[rng.random_range(0..PLAIN_WORDS.len())]);
        }
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        text = first.to_uppercase() + &text[1..];
    }
    text.push('.');
    text
}

/// `n` English/French pairs. The French side is the fixture's rendering of the
/// English sentence, so translating it back yields canonical English.
pub fn parallel_pairs(seed: u64, n: usize, backend: &FixtureBackend) -> Vec<SentencePair> {
    parallel_pairs_in(seed, n, backend, &LanguageTag::new("fr").expect("valid tag"))
}

/// Like [`parallel_pairs`], with the foreign side rendered in `foreign`, which
/// must be one of [`FIXTURE_LANGUAGES`].
pub fn parallel_pairs_in(seed: u64, n: usize, backend: &FixtureBackend, foreign: &LanguageTag) -> Vec<SentencePair> {
    let en = LanguageTag::new("en").expect("valid tag");
    let fr = foreign;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let human = sentence(&mut rng, &[]);
            let foreign = backend
                .translate(&human, &en, fr)
                .expect("fixture translation succeeds");
            SentencePair {
                pair_id: format!("L{:07}", i + 1),
                human_text: Sentence::new(human, en.clone()).with_passes(0),
                foreign_text: Sentence::new(foreign, fr.clone()).with_passes(0),
            }
        })
        .collect()
}

/// `n_per_class` positive and negative review-style sentences.
pub fn sentiment_sentences(seed: u64, n_per_class: usize) -> Vec<(String, Polarity)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n_per_class);
    for _ in 0..n_per_class {
        out.push((sentence(&mut rng, POSITIVE_WORDS), Polarity::Positive));
        out.push((sentence(&mut rng, NEGATIVE_WORDS), Polarity::Negative));
    }
    out
}

/// Writes pairs as two line-aligned files, Europarl style.
pub fn write_parallel_files(pairs: &[SentencePair], human_path: &Path, foreign_path: &Path) -> Result<(), DatasetError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };
    let mut a = std::fs::File::create(human_path).map_err(io(human_path))?;
    let mut b = std::fs::File::create(foreign_path).map_err(io(foreign_path))?;
    for pair in pairs {
        writeln!(a, "{}", pair.human_text.text).map_err(io(human_path))?;
        writeln!(b, "{}", pair.foreign_text.text).map_err(io(foreign_path))?;
    }
    Ok(())
}

/// Writes a `sentence TAB label` sentiment file.
pub fn write_sentiment_file(rows: &[(String, Polarity)], path: &Path) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    for (text, polarity) in rows {
        writeln!(f, "{text}\t{polarity}").map_err(io)?;
    }
    Ok(())
}
