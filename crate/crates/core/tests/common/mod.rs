//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the learner's arithmetic: the
//! parameters are computed in exact rational arithmetic straight from the
//! estimator definitions, and posteriors as raw probability products.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use bookrec_core::corpus::{Rating, TokenizedBook};
use bookrec_core::learner::RatedExample;
use bookrec_core::slot::{Slot, SlotMask};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Ratio<i64>;

/// Exact `(alpha_pos, alpha_neg)` for a rating.
pub fn weights(rating: u8) -> (Q, Q) {
    let pos = Q::new(i64::from(rating) - 1, 9);
    (pos, Q::from_integer(1) - pos)
}

#[derive(Debug, Clone)]
pub struct OracleSlot {
    /// token -> (P(w|c1,s), P(w|c0,s))
    pub conditionals: BTreeMap<String, (Q, Q)>,
}

#[derive(Debug, Clone)]
pub struct OracleModel {
    pub prior_pos: Q,
    pub prior_neg: Q,
    pub slots: BTreeMap<Slot, OracleSlot>,
}

impl OracleModel {
    pub fn train(examples: &[RatedExample], lambda: i64, mask: &SlotMask) -> Self {
        let n = examples.len() as i64;
        let lambda = Q::from_integer(lambda);
        let mut prior_pos = Q::zero();
        let mut prior_neg = Q::zero();
        for e in examples {
            let (a1, a0) = weights(e.rating.get());
            prior_pos += a1;
            prior_neg += a0;
        }
        prior_pos /= Q::from_integer(n);
        prior_neg /= Q::from_integer(n);

        let mut slots = BTreeMap::new();
        for slot in mask.iter() {
            let vocab: BTreeSet<&str> =
                examples.iter().flat_map(|e| e.book.bag(slot).iter().map(|(t, _)| t.as_str())).collect();
            if vocab.is_empty() {
                continue;
            }
            let v = Q::from_integer(vocab.len() as i64);
            // Per-class weighted length, summed book by book.
            let mut len_pos = Q::zero();
            let mut len_neg = Q::zero();
            for e in examples {
                let (a1, a0) = weights(e.rating.get());
                let len: i64 = e.book.bag(slot).iter().map(|(_, c)| i64::from(*c)).sum();
                len_pos += a1 * len;
                len_neg += a0 * len;
            }
            let mut conditionals = BTreeMap::new();
            for token in vocab {
                let mut num_pos = Q::zero();
                let mut num_neg = Q::zero();
                for e in examples {
                    let (a1, a0) = weights(e.rating.get());
                    let c = i64::from(e.book.bag(slot).count(token));
                    num_pos += a1 * c;
                    num_neg += a0 * c;
                }
                let p1 = (num_pos + lambda) / (len_pos + lambda * v);
                let p0 = (num_neg + lambda) / (len_neg + lambda * v);
                conditionals.insert(token.to_string(), (p1, p0));
            }
            slots.insert(slot, OracleSlot { conditionals });
        }
        Self { prior_pos, prior_neg, slots }
    }

    /// Unnormalized class scores `P(c) * prod P(w|c,s)^n`, as plain floats.
    pub fn class_products(&self, book: &TokenizedBook) -> (f64, f64) {
        let mut p1 = to_f64(self.prior_pos);
        let mut p0 = to_f64(self.prior_neg);
        for (slot, model) in &self.slots {
            for (token, count) in book.bag(*slot).iter() {
                if let Some((c1, c0)) = model.conditionals.get(token) {
                    for _ in 0..*count {
                        p1 *= to_f64(*c1);
                        p0 *= to_f64(*c0);
                    }
                }
            }
        }
        (p1, p0)
    }

    pub fn log_odds(&self, book: &TokenizedBook) -> f64 {
        let (p1, p0) = self.class_products(book);
        (p1 / p0).ln()
    }

    pub fn posterior(&self, book: &TokenizedBook) -> f64 {
        let (p1, p0) = self.class_products(book);
        p1 / (p1 + p0)
    }
}

pub fn to_f64(q: Q) -> f64 {
    q.to_f64().expect("finite ratio")
}

/// `|a - b| <= tol * max(1, |a|, |b|)`, with equal infinities accepted.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// A toy corpus: up to 10 books over a pool of at most 50 distinct tokens,
/// spread over all six slots.
pub fn toy_corpus(rng: &mut ChaCha8Rng) -> Vec<RatedExample> {
    let books = rng.random_range(1..=10);
    let pool = rng.random_range(1..=50);
    (0..books)
        .map(|i| {
            let mut book = TokenizedBook::new(format!("toy{i}"), format!("Toy {i}"));
            for slot in Slot::ALL {
                if rng.random_bool(0.2) {
                    continue;
                }
                for _ in 0..rng.random_range(0..=6) {
                    let token = format!("w{}", rng.random_range(0..pool));
                    book.bag_mut(slot).add(token, rng.random_range(1..=3));
                }
            }
            let rating = Rating::new(rng.random_range(1..=10)).expect("in range");
            RatedExample::new(book, rating)
        })
        .collect()
}

/// A book drawn from the same token pool as [`toy_corpus`] plus tokens no
/// training book can contain.
pub fn probe_book(rng: &mut ChaCha8Rng) -> TokenizedBook {
    let mut book = TokenizedBook::new("probe", "Probe");
    for slot in Slot::ALL {
        for _ in 0..rng.random_range(0..=5) {
            book.bag_mut(slot).add(format!("w{}", rng.random_range(0..50)), rng.random_range(1..=3));
        }
        book.bag_mut(slot).add("unseen", 1);
    }
    book
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Midranks by counting: `#smaller + (#equal + 1) / 2`.
pub fn counted_midranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| {
            let smaller = xs.iter().filter(|y| *y < x).count() as f64;
            let equal = xs.iter().filter(|y| *y == x).count() as f64;
            smaller + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman's coefficient as the textbook Pearson formula over counted
/// midranks; `None` when either ranking is constant.
pub fn oracle_spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let rx = counted_midranks(xs);
    let ry = counted_midranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Exact `t^2` and the sign of `t` of a paired t-test, from decimal strings.
pub fn exact_t_squared(a: &[&str], b: &[&str]) -> (BigRational, i32) {
    let parse = |s: &str| -> BigRational {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits: BigInt = format!("{int}{frac}").parse().expect("decimal");
        BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32))
    };
    let d: Vec<BigRational> = a.iter().zip(b).map(|(x, y)| parse(x) - parse(y)).collect();
    let n = BigRational::from_integer(BigInt::from(d.len()));
    let mean = d.iter().cloned().sum::<BigRational>() / &n;
    let ss: BigRational = d.iter().map(|x| (x - &mean) * (x - &mean)).sum();
    let var = ss / (&n - BigRational::from_integer(BigInt::from(1)));
    let t2 = &mean * &mean * &n / var;
    let sign = if mean > BigRational::zero() { 1 } else if mean.is_zero() { 0 } else { -1 };
    (t2, sign)
}

pub fn big_to_f64(q: &BigRational) -> f64 {
    q.to_f64().expect("finite ratio")
}
