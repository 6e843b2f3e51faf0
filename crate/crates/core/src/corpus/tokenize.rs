use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::Result;

use super::Bag;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Canonical-cased words dropped from free-text slots.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StopwordList {
    words: BTreeSet<String>,
}

impl StopwordList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(canonical)
            .collect();
        Self { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        Self { words: words.into_iter().map(canonical).collect() }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl StopwordList {
    /// The shipped list of common English function words.
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn english_ref() -> &'static StopwordList {
        static DEFAULT: OnceLock<StopwordList> = OnceLock::new();
        DEFAULT.get_or_init(Self::english)
    }
}

fn canonical(s: &str) -> String {
    s.to_lowercase()
}

/// Iterates canonical tokens of `text`: maximal alphanumeric runs, lower-cased.
/// Case folding can introduce combining marks, so folded runs are split again.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .flat_map(|w| {
            let folded = canonical(w);
            if folded.chars().all(char::is_alphanumeric) {
                vec![folded]
            } else {
                folded
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|p| !p.is_empty())
                    .map(str::to_string)
                    .collect()
            }
        })
}

pub fn tokenize(text: &str, stop: &StopwordList) -> Bag {
    let mut bag = Bag::new();
    tokenize_into(&mut bag, text, stop);
    bag
}

pub(crate) fn tokenize_into(bag: &mut Bag, text: &str, stop: &StopwordList) {
    for word in words(text) {
        if !stop.contains(&word) {
            bag.add(word, 1);
        }
    }
}

/// Reduces an author name to a `<first-initial>_<surname>` token.
///
/// The surname is the final whitespace-delimited word; non-alphanumeric
/// characters are dropped from both parts. Single-word names yield the word
/// itself. Returns `None` when the name has no alphanumeric content.
pub fn normalize_author(name: &str) -> Option<String> {
    let parts: Vec<String> = name
        .split_whitespace()
        .map(|p| p.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|p| !p.is_empty())
        .map(|p| canonical(&p))
        .collect();
    match parts.as_slice() {
        [] => None,
        [only] => Some(only.clone()),
        [first, .., last] => {
            let initial = first.chars().next()?;
            Some(format!("{initial}_{last}"))
        }
    }
}
