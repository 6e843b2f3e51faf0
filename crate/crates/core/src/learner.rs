//! Rating-weighted multinomial naive Bayes over a vector of bags.
//!
//! Every training book contributes to both classes: a rating `r` becomes a
//! positive weight `(r - 1) / 9` and a negative weight of one minus that. A
//! token occurring `n` times in a slot counts as `weight * n` occurrences in
//! each class. Per-slot word probabilities use additive smoothing over the
//! training vocabulary of that slot:
//!
//! ```text
//! P(w | c, s) = (sum_e alpha_ec * n_wes + lambda) / (L(c, s) + lambda * |V_s|)
//! L(c, s)     = sum_e alpha_ec * |d_es|
//! P(c)        = sum_e alpha_ec / N
//! ```
//!
//! Scores are posterior log-odds computed in log space. The evidence term
//! `P(B)` cancels in the odds and is never computed.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Rating, TokenizedBook};
use crate::error::{Error, Result};
use crate::slot::{Slot, SlotMask};

pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Positive and negative training weights for a rating.
pub fn rating_weights(rating: u8) -> Result<(f64, f64)> {
    let rating = Rating::new(rating)?;
    Ok(weights(rating))
}

pub(crate) fn weights(rating: Rating) -> (f64, f64) {
    let pos = f64::from(rating.get() - 1) / 9.0;
    (pos, 1.0 - pos)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatedExample {
    pub book: TokenizedBook,
    pub rating: Rating,
}

impl RatedExample {
    pub fn new(book: TokenizedBook, rating: Rating) -> Self {
        Self { book, rating }
    }

    /// `(alpha_pos, alpha_neg)`
    pub fn weights(&self) -> (f64, f64) {
        weights(self.rating)
    }

    pub fn is_positive(&self) -> bool {
        self.rating.is_positive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

/// Smoothed log-probabilities of one token in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordParams {
    pub log_pos: f64,
    pub log_neg: f64,
}

impl WordParams {
    /// `log(P(w|c1,s) / P(w|c0,s))`
    pub fn strength(&self) -> f64 {
        self.log_pos - self.log_neg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotModel {
    /// Unsmoothed weighted lengths `L(c1, s)` and `L(c0, s)`.
    pub length_pos: f64,
    pub length_neg: f64,
    vocab: HashMap<String, WordParams>,
}

impl SlotModel {
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn get(&self, token: &str) -> Option<&WordParams> {
        self.vocab.get(token)
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&String, &WordParams)> {
        self.vocab.iter()
    }
}

/// Posterior log-odds of the positive class, split into its two parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    /// `log P(c1) - log P(c0)`; infinite when one prior is zero.
    pub prior_log_odds: f64,
    /// Sum over in-vocabulary token occurrences of their strengths.
    pub evidence: f64,
    pub log_odds: f64,
}

impl Score {
    pub fn label(&self) -> Label {
        if self.log_odds > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// `P(c1 | B)` after normalizing the two class scores.
    pub fn posterior(&self) -> f64 {
        if self.log_odds >= 0.0 {
            1.0 / (1.0 + (-self.log_odds).exp())
        } else {
            let e = self.log_odds.exp();
            e / (1.0 + e)
        }
    }
}

/// A trained user profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ProfileFile", try_from = "ProfileFile")]
pub struct Profile {
    lambda: f64,
    mask: SlotMask,
    n_examples: usize,
    prior_pos: f64,
    prior_neg: f64,
    /// Only slots in the mask whose training vocabulary is non-empty.
    slots: BTreeMap<Slot, SlotModel>,
}

impl Profile {
    /// Trains from scratch. Runs in time linear in the total number of
    /// training token occurrences.
    pub fn train<'a, I>(examples: I, lambda: f64, mask: &SlotMask) -> Result<Self>
    where
        I: IntoIterator<Item = &'a RatedExample>,
    {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidSmoothing(lambda));
        }
        let examples: Vec<(&TokenizedBook, (f64, f64))> =
            examples.into_iter().map(|e| (&e.book, e.weights())).collect();
        if examples.is_empty() {
            return Err(Error::EmptyTraining);
        }

        let n = examples.len();
        let (sum_pos, sum_neg) = examples
            .iter()
            .fold((0.0, 0.0), |(p, q), (_, (a1, a0))| (p + a1, q + a0));

        let mut slots = BTreeMap::new();
        for slot in mask.iter() {
            if let Some(model) = train_slot(&examples, slot, lambda) {
                slots.insert(slot, model);
            }
        }

        Ok(Profile {
            lambda,
            mask: mask.clone(),
            n_examples: n,
            prior_pos: sum_pos / n as f64,
            prior_neg: sum_neg / n as f64,
            slots,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mask(&self) -> &SlotMask {
        &self.mask
    }

    pub fn n_examples(&self) -> usize {
        self.n_examples
    }

    /// `(P(c1), P(c0))`
    pub fn prior(&self) -> (f64, f64) {
        (self.prior_pos, self.prior_neg)
    }

    pub fn prior_log_odds(&self) -> f64 {
        self.prior_pos.ln() - self.prior_neg.ln()
    }

    pub fn slot(&self, slot: Slot) -> Option<&SlotModel> {
        self.slots.get(&slot)
    }

    pub fn slots(&self) -> impl Iterator<Item = (Slot, &SlotModel)> {
        self.slots.iter().map(|(s, m)| (*s, m))
    }

    pub fn vocab_size(&self, slot: Slot) -> usize {
        self.slot(slot).map_or(0, SlotModel::vocab_size)
    }

    pub fn word(&self, slot: Slot, token: &str) -> Option<&WordParams> {
        self.slot(slot)?.get(token)
    }

    /// Smoothed `(P(w|c1,s), P(w|c0,s))` for an in-vocabulary token.
    pub fn conditional(&self, slot: Slot, token: &str) -> Option<(f64, f64)> {
        self.word(slot, token).map(|w| (w.log_pos.exp(), w.log_neg.exp()))
    }

    /// Natural-log strength of a token in a slot.
    pub fn strength(&self, slot: Slot, token: &str) -> Result<f64> {
        self.word(slot, token).map(WordParams::strength).ok_or_else(|| Error::OutOfVocabulary {
            slot: slot.to_string(),
            token: token.to_string(),
        })
    }

    pub fn strength_in_base(&self, slot: Slot, token: &str, base: f64) -> Result<f64> {
        Ok(self.strength(slot, token)? / base.ln())
    }

    pub fn log_odds(&self, book: &TokenizedBook) -> Score {
        let mut evidence = 0.0;
        for (slot, model) in &self.slots {
            for (token, count) in book.bag(*slot).iter() {
                if let Some(w) = model.get(token) {
                    evidence += f64::from(*count) * w.strength();
                }
            }
        }
        let prior_log_odds = self.prior_log_odds();
        Score { prior_log_odds, evidence, log_odds: prior_log_odds + evidence }
    }

    pub fn classify(&self, book: &TokenizedBook) -> Label {
        self.log_odds(book).label()
    }

    /// Whether two profiles have identical learned parameters, ignoring the
    /// configured mask. Compares floats bit for bit.
    pub fn same_parameters(&self, other: &Profile) -> bool {
        let a = ProfileFile::from(self.clone());
        let b = ProfileFile::from(other.clone());
        a.n_examples == b.n_examples
            && a.lambda.to_bits() == b.lambda.to_bits()
            && a.prior.positive.to_bits() == b.prior.positive.to_bits()
            && a.prior.negative.to_bits() == b.prior.negative.to_bits()
            && serde_json::to_string(&a.slots).ok() == serde_json::to_string(&b.slots).ok()
    }
}

fn train_slot(examples: &[(&TokenizedBook, (f64, f64))], slot: Slot, lambda: f64) -> Option<SlotModel> {
    let mut counts: HashMap<&str, (f64, f64)> = HashMap::new();
    let (mut length_pos, mut length_neg) = (0.0, 0.0);
    for (book, (a1, a0)) in examples {
        let bag = book.bag(slot);
        let len = bag.len() as f64;
        length_pos += a1 * len;
        length_neg += a0 * len;
        for (token, n) in bag.iter() {
            let n = f64::from(*n);
            let entry = counts.entry(token.as_str()).or_insert((0.0, 0.0));
            entry.0 += a1 * n;
            entry.1 += a0 * n;
        }
    }
    if counts.is_empty() {
        return None;
    }

    let smoothing_mass = lambda * counts.len() as f64;
    let denom_pos = length_pos + smoothing_mass;
    let denom_neg = length_neg + smoothing_mass;
    let vocab = counts
        .into_iter()
        .map(|(token, (c1, c0))| {
            let params = WordParams {
                log_pos: ((c1 + lambda) / denom_pos).ln(),
                log_neg: ((c0 + lambda) / denom_neg).ln(),
            };
            (token.to_string(), params)
        })
        .collect();
    Some(SlotModel { length_pos, length_neg, vocab })
}

const PROFILE_FORMAT: &str = "bookrec-profile";
const PROFILE_VERSION: u32 = 1;

/// On-disk layout of a profile. Maps are ordered so output is stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProfileFile {
    format: String,
    version: u32,
    lambda: f64,
    mask: SlotMask,
    n_examples: usize,
    prior: PriorFile,
    slots: BTreeMap<Slot, SlotFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PriorFile {
    positive: f64,
    negative: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SlotFile {
    length_pos: f64,
    length_neg: f64,
    /// token -> [log P(w|c1,s), log P(w|c0,s)]
    tokens: BTreeMap<String, [f64; 2]>,
}

impl From<Profile> for ProfileFile {
    fn from(p: Profile) -> Self {
        let slots = p
            .slots
            .into_iter()
            .map(|(slot, m)| {
                let tokens = m.vocab.into_iter().map(|(t, w)| (t, [w.log_pos, w.log_neg])).collect();
                (slot, SlotFile { length_pos: m.length_pos, length_neg: m.length_neg, tokens })
            })
            .collect();
        ProfileFile {
            format: PROFILE_FORMAT.to_string(),
            version: PROFILE_VERSION,
            lambda: p.lambda,
            mask: p.mask,
            n_examples: p.n_examples,
            prior: PriorFile { positive: p.prior_pos, negative: p.prior_neg },
            slots,
        }
    }
}

impl TryFrom<ProfileFile> for Profile {
    type Error = String;

    fn try_from(f: ProfileFile) -> std::result::Result<Self, Self::Error> {
        if f.format != PROFILE_FORMAT || f.version != PROFILE_VERSION {
            return Err(format!("unsupported profile format {} v{}", f.format, f.version));
        }
        let slots = f
            .slots
            .into_iter()
            .map(|(slot, s)| {
                let vocab = s
                    .tokens
                    .into_iter()
                    .map(|(t, [log_pos, log_neg])| (t, WordParams { log_pos, log_neg }))
                    .collect();
                (slot, SlotModel { length_pos: s.length_pos, length_neg: s.length_neg, vocab })
            })
            .collect();
        Ok(Profile {
            lambda: f.lambda,
            mask: f.mask,
            n_examples: f.n_examples,
            prior_pos: f.prior.positive,
            prior_neg: f.prior.negative,
            slots,
        })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rated(id: &str, rating: u8, words: &[&str]) -> RatedExample {
        let book = TokenizedBook::new(id, id).with_tokens(Slot::Words, words.iter().copied());
        RatedExample::new(book, Rating::new(rating).unwrap())
    }

    #[test]
    fn weight_endpoints() {
        assert_eq!(rating_weights(10).unwrap(), (1.0, 0.0));
        assert_eq!(rating_weights(1).unwrap(), (0.0, 1.0));
        let (p, n) = rating_weights(5).unwrap();
        assert!((p - 4.0 / 9.0).abs() < 1e-15 && (n - 5.0 / 9.0).abs() < 1e-15);
        assert!(rating_weights(0).is_err());
        assert!(rating_weights(11).is_err());
    }

    #[test]
    fn balanced_priors() {
        let ex = [rated("a", 10, &["x"]), rated("b", 1, &["y"])];
        let p = Profile::train(&ex, 1.0, &SlotMask::all()).unwrap();
        assert_eq!(p.prior(), (0.5, 0.5));
    }

    #[test]
    fn smoothed_conditional() {
        let ex = [rated("a", 10, &["a", "a", "b"])];
        let p = Profile::train(&ex, 1.0, &SlotMask::all()).unwrap();
        let (pos, neg) = p.conditional(Slot::Words, "a").unwrap();
        assert!((pos - 0.6).abs() < 1e-12);
        // no negative mass at all: uniform over the two-word vocabulary
        assert!((neg - 0.5).abs() < 1e-12);
        assert_eq!(p.prior(), (1.0, 0.0));
        assert!(p.log_odds(&ex[0].book).log_odds.is_infinite());
    }

    #[test]
    fn rejects_bad_inputs() {
        let ex = [rated("a", 7, &["x"])];
        assert!(matches!(Profile::train(&ex, 0.0, &SlotMask::all()), Err(Error::InvalidSmoothing(_))));
        assert!(matches!(Profile::train(&ex, f64::NAN, &SlotMask::all()), Err(Error::InvalidSmoothing(_))));
        assert!(matches!(Profile::train(&[], 1.0, &SlotMask::all()), Err(Error::EmptyTraining)));
    }

    #[test]
    fn unseen_tokens_leave_prior_odds() {
        let ex = [rated("a", 9, &["x"]), rated("b", 2, &["y"]), rated("c", 4, &["x", "z"])];
        let p = Profile::train(&ex, 1.0, &SlotMask::all()).unwrap();
        let unseen = TokenizedBook::new("u", "u").with_tokens(Slot::Words, ["never", "seen"]);
        let score = p.log_odds(&unseen);
        assert_eq!(score.evidence, 0.0);
        assert_eq!(score.log_odds, p.prior_log_odds());
    }

    #[test]
    fn equal_priors_and_empty_book_is_zero() {
        let ex = [rated("a", 10, &["x"]), rated("b", 1, &["y"])];
        let p = Profile::train(&ex, 1.0, &SlotMask::all()).unwrap();
        let score = p.log_odds(&TokenizedBook::new("e", "e"));
        assert_eq!(score.log_odds, 0.0);
        assert_eq!(score.label(), Label::Negative);
    }

    #[test]
    fn classification_sign_rule() {
        let s = |v: f64| Score { prior_log_odds: 0.0, evidence: v, log_odds: v };
        assert_eq!(s(3.2).label(), Label::Positive);
        assert_eq!(s(-0.01).label(), Label::Negative);
        assert_eq!(s(0.0).label(), Label::Negative);
        assert!((s(0.0).posterior() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn strength_cases() {
        let ex = [rated("a", 10, &["w", "shared"]), rated("b", 1, &["shared", "v"])];
        let p = Profile::train(&ex, 1e-6, &SlotMask::all()).unwrap();
        assert!(p.strength(Slot::Words, "w").unwrap() > 0.0);
        assert!(p.strength(Slot::Words, "v").unwrap() < 0.0);
        assert!(p.strength(Slot::Words, "shared").unwrap().abs() < 1e-12);
        assert!(matches!(p.strength(Slot::Words, "nope"), Err(Error::OutOfVocabulary { .. })));
        assert!(p.strength(Slot::Title, "w").is_err());
        let natural = p.strength(Slot::Words, "w").unwrap();
        let base2 = p.strength_in_base(Slot::Words, "w", 2.0).unwrap();
        assert!((base2 - natural / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn mask_limits_training() {
        let mut ex = rated("a", 8, &["w"]);
        ex.book = ex.book.with_tokens(Slot::Title, ["t"]);
        let mask = SlotMask::parse_list("title").unwrap();
        let p = Profile::train([&ex], 1.0, &mask).unwrap();
        assert!(p.slot(Slot::Words).is_none());
        assert_eq!(p.vocab_size(Slot::Title), 1);
    }

    #[test]
    fn json_round_trip_preserves_scores() {
        let ex = [rated("a", 9, &["x", "y", "y"]), rated("b", 3, &["y", "z"]), rated("c", 6, &["q"])];
        let p = Profile::train(&ex, 0.37, &SlotMask::all()).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: Profile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        for e in &ex {
            assert_eq!(p.log_odds(&e.book).log_odds.to_bits(), back.log_odds(&e.book).log_odds.to_bits());
        }
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn rejects_unknown_profile_version() {
        let ex = [rated("a", 9, &["x"])];
        let text = serde_json::to_string(&Profile::train(&ex, 1.0, &SlotMask::all()).unwrap())
            .unwrap()
            .replace("\"version\":1", "\"version\":99");
        assert!(serde_json::from_str::<Profile>(&text).is_err());
    }

    fn arb_examples() -> impl Strategy<Value = Vec<RatedExample>> {
        proptest::collection::vec(
            (1u8..=10, proptest::collection::vec(0usize..8, 0..8)),
            1..8,
        )
        .prop_map(|rows| {
            const VOCAB: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];
            rows.into_iter()
                .enumerate()
                .map(|(i, (r, toks))| {
                    let words: Vec<&str> = toks.iter().map(|t| VOCAB[*t]).collect();
                    rated(&format!("b{i}"), r, &words)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn distributions_normalize(examples in arb_examples(), lambda in 0.01f64..3.0) {
            let p = Profile::train(&examples, lambda, &SlotMask::all()).unwrap();
            let (pp, pn) = p.prior();
            prop_assert!((pp + pn - 1.0).abs() < 1e-12);
            for (_, model) in p.slots() {
                let (sp, sn) = model.tokens().fold((0.0, 0.0), |(a, b), (_, w)| {
                    (a + w.log_pos.exp(), b + w.log_neg.exp())
                });
                prop_assert!((sp - 1.0).abs() < 1e-9);
                prop_assert!((sn - 1.0).abs() < 1e-9);
                prop_assert!(model.tokens().all(|(_, w)| w.log_pos.is_finite() && w.log_neg.is_finite()));
            }
        }

        #[test]
        fn training_is_deterministic(examples in arb_examples()) {
            let a = Profile::train(&examples, 1.0, &SlotMask::all()).unwrap();
            let b = Profile::train(&examples, 1.0, &SlotMask::all()).unwrap();
            prop_assert!(a.same_parameters(&b));
            prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }

        #[test]
        fn prior_identity(examples in arb_examples()) {
            let p = Profile::train(&examples, 1.0, &SlotMask::all()).unwrap();
            let expected = examples.iter().map(|e| f64::from(e.rating.get() - 1) / 9.0).sum::<f64>()
                / examples.len() as f64;
            prop_assert!((p.prior().0 - expected).abs() < 1e-15);
        }

        #[test]
        fn adding_a_top_rated_example_does_not_weaken_its_token(
            examples in arb_examples(),
            token in 0usize..8,
            repeats in 1usize..5,
        ) {
            const VOCAB: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];
            let w = VOCAB[token];
            let before = Profile::train(&examples, 1.0, &SlotMask::all()).unwrap();
            let mut grown = examples.clone();
            grown.push(rated("extra", 10, &vec![w; repeats]));
            let after = Profile::train(&grown, 1.0, &SlotMask::all()).unwrap();
            if let Ok(old) = before.strength(Slot::Words, w) {
                let new = after.strength(Slot::Words, w).unwrap();
                prop_assert!(new >= old - 1e-12, "{w}: {old} -> {new}");
            }
        }
    }
}
