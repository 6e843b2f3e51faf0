//! Record fields produced by extraction and the bags the learner sees.
//!
//! Extraction works on [`Field`]s, which mirror the regions of a catalog
//! page. Tokenization folds synopses, reviews and comments into a single
//! `words` bag, so the learner works on the six [`Slot`]s instead.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A named region of an extracted catalog record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    Title,
    Authors,
    Synopses,
    Reviews,
    Comments,
    RelatedAuthors,
    RelatedTitles,
    Subjects,
    Publisher,
    Date,
    Isbn,
    Price,
}

impl Field {
    pub const ALL: [Field; 12] = [
        Field::Title,
        Field::Authors,
        Field::Synopses,
        Field::Reviews,
        Field::Comments,
        Field::RelatedAuthors,
        Field::RelatedTitles,
        Field::Subjects,
        Field::Publisher,
        Field::Date,
        Field::Isbn,
        Field::Price,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Title => "title",
            Field::Authors => "authors",
            Field::Synopses => "synopses",
            Field::Reviews => "reviews",
            Field::Comments => "comments",
            Field::RelatedAuthors => "related-authors",
            Field::RelatedTitles => "related-titles",
            Field::Subjects => "subjects",
            Field::Publisher => "publisher",
            Field::Date => "date",
            Field::Isbn => "isbn",
            Field::Price => "price",
        }
    }

    /// Extras are kept on the record but never tokenized.
    pub fn is_extra(self) -> bool {
        matches!(self, Field::Publisher | Field::Date | Field::Isbn | Field::Price)
    }

    /// Whether a rule for this field collects every match when the rule
    /// does not say otherwise.
    pub fn default_multi(self) -> bool {
        !matches!(self, Field::Title) && !self.is_extra()
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let canonical = s.trim().to_ascii_lowercase().replace('_', "-");
        Field::ALL
            .iter()
            .copied()
            .find(|f| f.name() == canonical)
            .ok_or_else(|| Error::UnknownSlotName(s.to_string()))
    }
}

/// One bag of the vector-of-bags book representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slot {
    Title,
    Authors,
    Words,
    RelatedAuthors,
    RelatedTitles,
    Subjects,
}

impl Slot {
    pub const ALL: [Slot; 6] = [
        Slot::Title,
        Slot::Authors,
        Slot::Words,
        Slot::RelatedAuthors,
        Slot::RelatedTitles,
        Slot::Subjects,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Title => "title",
            Slot::Authors => "authors",
            Slot::Words => "words",
            Slot::RelatedAuthors => "related-authors",
            Slot::RelatedTitles => "related-titles",
            Slot::Subjects => "subjects",
        }
    }

    /// Author slots hold normalized name tokens and are exempt from stopwords.
    pub fn holds_names(self) -> bool {
        matches!(self, Slot::Authors | Slot::RelatedAuthors)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let canonical = s.trim().to_ascii_lowercase().replace('_', "-");
        Slot::ALL
            .iter()
            .copied()
            .find(|slot| slot.name() == canonical)
            .ok_or_else(|| Error::UnknownSlotName(s.to_string()))
    }
}

/// The set of slots a profile is trained on and scores with.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotMask(BTreeSet<Slot>);

impl SlotMask {
    pub fn all() -> Self {
        SlotMask(Slot::ALL.into_iter().collect())
    }

    /// Every slot except the two collaborative ones (related authors/titles).
    pub fn without_related() -> Self {
        Self::all().without(&[Slot::RelatedAuthors, Slot::RelatedTitles])
    }

    pub fn without(&self, removed: &[Slot]) -> Self {
        SlotMask(self.0.iter().copied().filter(|s| !removed.contains(s)).collect())
    }

    pub fn contains(&self, slot: Slot) -> bool {
        self.0.contains(&slot)
    }

    pub fn iter(&self) -> impl Iterator<Item = Slot> + '_ {
        self.0.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses a comma-separated list such as `words,title,related-titles`.
    pub fn parse_list(s: &str) -> Result<Self, Error> {
        let slots = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(Slot::from_str)
            .collect::<Result<BTreeSet<_>, _>>()?;
        Ok(SlotMask(slots))
    }
}

impl Default for SlotMask {
    fn default() -> Self {
        Self::all()
    }
}

impl FromIterator<Slot> for SlotMask {
    fn from_iter<I: IntoIterator<Item = Slot>>(iter: I) -> Self {
        SlotMask(iter.into_iter().collect())
    }
}

impl fmt::Display for SlotMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Slot::name).collect();
        f.write_str(&names.join(","))
    }
}
