//! Vector-of-bags book representation, catalog storage and search.

mod catalog;
mod ratings;
mod tokenize;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::extraction::RawBookRecord;
use crate::slot::{Field, Slot};

pub use catalog::{read_catalog, write_catalog, Catalog};
pub use ratings::{parse_rating, read_ratings, write_ratings, Rating, RatingEntry};
pub use tokenize::{normalize_author, tokenize, words, StopwordList};

/// A multiset of canonical tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bag(BTreeMap<String, u32>);

impl Bag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: impl Into<String>, count: u32) {
        if count > 0 {
            *self.0.entry(token.into()).or_insert(0) += count;
        }
    }

    pub fn extend_from(&mut self, other: &Bag) {
        for (token, count) in other.iter() {
            self.add(token.clone(), *count);
        }
    }

    pub fn count(&self, token: &str) -> u32 {
        self.0.get(token).copied().unwrap_or(0)
    }

    /// Total number of token occurrences, `|d_m|`.
    pub fn len(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c)).sum()
    }

    pub fn distinct(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains_key(token)
    }

    /// Tokens in ascending order with their multiplicities.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &u32)> {
        self.0.iter()
    }

    /// `true` when every token of `other` occurs here at least as often.
    pub fn is_superset_of(&self, other: &Bag) -> bool {
        other.iter().all(|(t, n)| self.count(t) >= *n)
    }
}

impl<S: Into<String>> FromIterator<S> for Bag {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut bag = Bag::new();
        for token in iter {
            bag.add(token, 1);
        }
        bag
    }
}

/// One catalog title as a bag of tokens per slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedBook {
    pub id: String,
    pub title_display: String,
    #[serde(default)]
    pub bags: BTreeMap<Slot, Bag>,
}

static EMPTY_BAG: Bag = Bag(BTreeMap::new());

impl TokenizedBook {
    pub fn new(id: impl Into<String>, title_display: impl Into<String>) -> Self {
        let bags = Slot::ALL.iter().map(|s| (*s, Bag::new())).collect();
        Self { id: id.into(), title_display: title_display.into(), bags }
    }

    pub fn bag(&self, slot: Slot) -> &Bag {
        self.bags.get(&slot).unwrap_or(&EMPTY_BAG)
    }

    pub fn bag_mut(&mut self, slot: Slot) -> &mut Bag {
        self.bags.entry(slot).or_default()
    }

    /// Builder-style helper for tests and synthetic corpora.
    pub fn with_tokens<'a>(mut self, slot: Slot, tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let bag = self.bag_mut(slot);
        for token in tokens {
            bag.add(token, 1);
        }
        self
    }

    /// Total token occurrences across all slots.
    pub fn token_count(&self) -> u64 {
        self.bags.values().map(Bag::len).sum()
    }
}

/// Converts an adequate raw record into the six learner bags.
///
/// Synopses, reviews and comments are pooled into `words`; the book's own
/// title and authors are added to its related-title and related-author bags.
/// Author names are normalized to `initial_surname` tokens and never
/// stopword-filtered.
pub fn build_book(rec: &RawBookRecord, stop: &StopwordList) -> TokenizedBook {
    let title_display = rec
        .get(Field::Title)
        .first()
        .cloned()
        .unwrap_or_else(|| rec.id.clone());
    let mut book = TokenizedBook::new(rec.id.clone(), title_display);

    let own_title = rec.get(Field::Title).iter().fold(Bag::new(), |mut bag, t| {
        tokenize::tokenize_into(&mut bag, t, stop);
        bag
    });
    let own_authors: Bag = rec
        .get(Field::Authors)
        .iter()
        .filter_map(|a| normalize_author(a))
        .collect();

    let free_text = |fields: &[Field]| {
        let mut bag = Bag::new();
        for field in fields {
            for filler in rec.get(*field) {
                tokenize::tokenize_into(&mut bag, filler, stop);
            }
        }
        bag
    };

    let mut related_titles = free_text(&[Field::RelatedTitles]);
    related_titles.extend_from(&own_title);
    let mut related_authors: Bag = rec
        .get(Field::RelatedAuthors)
        .iter()
        .filter_map(|a| normalize_author(a))
        .collect();
    related_authors.extend_from(&own_authors);

    book.bags.insert(Slot::Words, free_text(&[Field::Synopses, Field::Reviews, Field::Comments]));
    book.bags.insert(Slot::Subjects, free_text(&[Field::Subjects]));
    book.bags.insert(Slot::RelatedTitles, related_titles);
    book.bags.insert(Slot::RelatedAuthors, related_authors);
    book.bags.insert(Slot::Title, own_title);
    book.bags.insert(Slot::Authors, own_authors);
    book
}
