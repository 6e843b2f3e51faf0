//! Ranking a catalog under a profile and explaining the result.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{Catalog, Rating, TokenizedBook};
use crate::error::{Error, Result};
use crate::learner::{Profile, RatedExample};
use crate::slot::Slot;

/// Rows shown by [`explain_recommendation`] unless told otherwise.
pub const DEFAULT_EXPLANATION_ROWS: usize = 20;
/// Rows shown by [`explain_feature`] unless told otherwise.
pub const DEFAULT_FEATURE_ROWS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub id: String,
    pub title: String,
    /// Posterior log-odds; may be infinite if the profile has a zero prior.
    pub score: f64,
    /// Score without the prior term, used to order books whose scores are
    /// equal because of an infinite prior.
    #[serde(skip)]
    pub evidence: f64,
}

/// Books in descending score order; ties broken by ascending id.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn top(&self, n: usize) -> RankedList {
        RankedList { entries: self.entries.iter().take(n).cloned().collect() }
    }

    /// The `n` lowest-ranked books, lowest first.
    pub fn bottom(&self, n: usize) -> RankedList {
        RankedList { entries: self.entries.iter().rev().take(n).cloned().collect() }
    }
}

/// Descending score, then descending evidence, then ascending id.
pub fn compare_ranked(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| b.evidence.total_cmp(&a.evidence))
        .then_with(|| a.id.cmp(&b.id))
}

/// Scores every catalog book not in `exclude` and sorts them.
pub fn rank(profile: &Profile, catalog: &Catalog, exclude: &HashSet<String>) -> RankedList {
    let mut entries: Vec<RankedEntry> = catalog
        .books()
        .iter()
        .filter(|b| !exclude.contains(&b.id))
        .map(|book| {
            let score = profile.log_odds(book);
            RankedEntry {
                id: book.id.clone(),
                title: book.title_display.clone(),
                score: score.log_odds,
                evidence: score.evidence,
            }
        })
        .collect();
    entries.sort_by(compare_ranked);
    RankedList { entries }
}

pub fn recommend_top(profile: &Profile, catalog: &Catalog, exclude: &HashSet<String>, n: usize) -> RankedList {
    rank(profile, catalog, exclude).top(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationRow {
    pub slot: Slot,
    pub word: String,
    /// Natural-log strength of the word in the slot.
    pub strength: f64,
    /// Occurrences of the word in this book's slot.
    pub count: u32,
    /// `strength * count`
    pub influence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationExplanation {
    pub id: String,
    pub title: String,
    pub score: f64,
    pub prior_log_odds: f64,
    pub rows: Vec<ExplanationRow>,
}

/// Lists the in-vocabulary features of `book` by influence, strongest first,
/// keeping at most `k` rows. Ties are ordered by slot name then word.
pub fn explain_recommendation(profile: &Profile, book: &TokenizedBook, k: usize) -> RecommendationExplanation {
    let mut rows: Vec<ExplanationRow> = Vec::new();
    for (slot, model) in profile.slots() {
        for (token, count) in book.bag(slot).iter() {
            if let Some(w) = model.get(token) {
                let strength = w.strength();
                rows.push(ExplanationRow {
                    slot,
                    word: token.clone(),
                    strength,
                    count: *count,
                    influence: strength * f64::from(*count),
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        b.influence
            .total_cmp(&a.influence)
            .then_with(|| a.slot.name().cmp(b.slot.name()))
            .then_with(|| a.word.cmp(&b.word))
    });
    rows.truncate(k);
    let score = profile.log_odds(book);
    RecommendationExplanation {
        id: book.id.clone(),
        title: book.title_display.clone(),
        score: score.log_odds,
        prior_log_odds: score.prior_log_odds,
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow {
    pub id: String,
    pub title: String,
    pub rating: Rating,
    pub count: u32,
    /// `alpha_pos * count`, the book's share of the word's positive mass.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureExplanation {
    pub slot: Slot,
    pub word: String,
    pub strength: f64,
    pub rows: Vec<FeatureRow>,
}

/// Lists the training books containing `word` in `slot`, ordered by their
/// positive-class contribution, then by title and id.
pub fn explain_feature(
    profile: &Profile,
    training: &[RatedExample],
    slot: Slot,
    word: &str,
    k: usize,
) -> Result<FeatureExplanation> {
    let strength = profile.strength(slot, word)?;
    let mut rows: Vec<FeatureRow> = training
        .iter()
        .filter_map(|ex| {
            let count = ex.book.bag(slot).count(word);
            (count > 0).then(|| FeatureRow {
                id: ex.book.id.clone(),
                title: ex.book.title_display.clone(),
                rating: ex.rating,
                count,
                contribution: ex.weights().0 * f64::from(count),
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        b.contribution
            .total_cmp(&a.contribution)
            .then_with(|| a.title.cmp(&b.title))
            .then_with(|| a.id.cmp(&b.id))
    });
    rows.truncate(k);
    Ok(FeatureExplanation { slot, word: word.to_string(), strength, rows })
}

/// Looks up a book and explains it, failing if the id is unknown.
pub fn explain_by_id(profile: &Profile, catalog: &Catalog, id: &str, k: usize) -> Result<RecommendationExplanation> {
    let book = catalog.get(id).ok_or_else(|| Error::NotFound(id.to_string()))?;
    Ok(explain_recommendation(profile, book, k))
}

fn display_strength(natural: f64, base: f64) -> f64 {
    if base == std::f64::consts::E {
        natural
    } else {
        natural / base.ln()
    }
}

/// Plain-text table of ranked books: `Rank  Score  Title`, numbering rows
/// from `first_rank`.
pub fn format_ranked(list: &RankedList, first_rank: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}  {:>10}  Title", "Rank", "Score");
    for (i, e) in list.entries.iter().enumerate() {
        let _ = writeln!(out, "{:>4}  {:>10.2}  {}", first_rank + i, e.score, e.title);
    }
    out
}

/// `Slot  Word  Strength` table. Strength here is the row's influence,
/// shown in the requested log base.
pub fn format_explanation(exp: &RecommendationExplanation, base: f64) -> String {
    let mut out = format!("{} recommended because:\n", exp.title);
    let width = exp.rows.iter().map(|r| r.word.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(out, "{:<16}{:<width$}  {:>8}", "Slot", "Word", "Strength");
    for row in &exp.rows {
        let _ = writeln!(
            out,
            "{:<16}{:<width$}  {:>8.2}",
            row.slot.name().to_uppercase(),
            row.word.to_uppercase(),
            display_strength(row.influence, base)
        );
    }
    out
}

/// `Title  Rating  Count` table.
pub fn format_feature(exp: &FeatureExplanation) -> String {
    let direction = if exp.strength > 0.0 { "positive" } else { "negative" };
    let mut out = format!("The word {} is {direction} due to your ratings:\n", exp.word.to_uppercase());
    let width = exp.rows.iter().map(|r| r.title.chars().count()).max().unwrap_or(5).max(5);
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>5}", "Title", "Rating", "Count");
    for row in &exp.rows {
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>5}", row.title, row.rating, row.count);
    }
    out
}

/// `Slot  Word  Strength` table of the profile's strongest features.
pub fn format_profile_features(profile: &Profile, n: usize, base: f64) -> String {
    let mut features: Vec<(Slot, &String, f64)> = profile
        .slots()
        .flat_map(|(slot, m)| m.tokens().map(move |(t, w)| (slot, t, w.strength())))
        .collect();
    features.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.name().cmp(b.0.name())).then_with(|| a.1.cmp(b.1)));
    let mut out = String::new();
    let _ = writeln!(out, "{:<16}{:<20}  {:>8}", "Slot", "Word", "Strength");
    for (slot, token, s) in features.into_iter().take(n) {
        let _ = writeln!(
            out,
            "{:<16}{:<20}  {:>8.2}",
            slot.name().to_uppercase(),
            token.to_uppercase(),
            display_strength(s, base)
        );
    }
    out
}
