use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenize::{TokenSequence, TokenizerConfig};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid language tag `{0}`: expected non-empty lowercase ASCII (e.g. `en`, `fr`, `zh-hans`)")]
pub struct InvalidLanguageTag(pub String);

/// A lowercase ASCII language code such as `en` or `fr`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageTag(String);

impl LanguageTag {
    pub fn new(code: impl Into<String>) -> Result<Self, InvalidLanguageTag> {
        let code = code.into();
        let valid = !code.is_empty()
            && code
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
            && code.as_bytes()[0].is_ascii_lowercase();
        if valid {
            Ok(Self(code))
        } else {
            Err(InvalidLanguageTag(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageTag {
    type Err = InvalidLanguageTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for LanguageTag {
    type Error = InvalidLanguageTag;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<LanguageTag> for String {
    fn from(tag: LanguageTag) -> Self {
        tag.0
    }
}

/// Unit of detection: a piece of text in a known language.
///
/// `passes` counts the machine-translation passes that produced this text from
/// its true origin (0 for human-written text), when that is known.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub language: LanguageTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passes: Option<u32>,
}

impl Sentence {
    pub fn new(text: impl Into<String>, language: LanguageTag) -> Self {
        Self {
            text: text.into(),
            language,
            passes: None,
        }
    }

    pub fn with_passes(mut self, passes: u32) -> Self {
        self.passes = Some(passes);
        self
    }

    pub fn tokens(&self, config: &TokenizerConfig) -> TokenSequence {
        config.tokenize(&self.text)
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_tags() {
        assert!(LanguageTag::new("en").is_ok());
        assert!(LanguageTag::new("zh-hans").is_ok());
        assert!(LanguageTag::new("").is_err());
        assert!(LanguageTag::new("EN").is_err());
        assert!(LanguageTag::new("-en").is_err());
        assert!(LanguageTag::new("fr ").is_err());
    }

    #[test]
    fn tag_serializes_as_plain_string() {
        let tag = LanguageTag::new("fr").unwrap();
        assert_eq!(serde_json::to_string(&tag).unwrap(), "\"fr\"");
        assert!(serde_json::from_str::<LanguageTag>("\"FR\"").is_err());
    }
}
