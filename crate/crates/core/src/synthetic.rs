//! Synthetic catalogs with a planted preference signal.
//!
//! Every book gets random background content in all six slots. Books rated
//! 6 or higher additionally receive tokens from a dedicated marker
//! vocabulary in one chosen slot, more of them the higher the rating. A
//! learner that picks up the markers can therefore rank positives first.

use rand::distr::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Catalog, Rating, RatingEntry, TokenizedBook};
use crate::error::Result;
use crate::learner::RatedExample;
use crate::slot::Slot;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub books: usize,
    /// Size of the vocabulary that only positive books receive.
    pub marker_vocab: usize,
    /// Slot the markers are injected into.
    pub marker_slot: Slot,
    /// Markers added per rating point above 5.
    pub markers_per_point: usize,
    pub background_vocab: usize,
    pub words_per_book: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            books: 1000,
            marker_vocab: 200,
            marker_slot: Slot::Words,
            markers_per_point: 3,
            background_vocab: 4000,
            words_per_book: 60,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub books: Vec<TokenizedBook>,
    pub ratings: Vec<RatingEntry>,
}

impl PlantedCorpus {
    pub fn generate(config: &PlantedConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let background = Uniform::new(0, config.background_vocab.max(1)).expect("non-empty range");
        let markers = Uniform::new(0, config.marker_vocab.max(1)).expect("non-empty range");
        let small = |n: usize| Uniform::new(0, n).expect("non-empty range");
        let (authors, titles, subjects) = (small(300), small(800), small(60));

        let mut books = Vec::with_capacity(config.books);
        let mut ratings = Vec::with_capacity(config.books);
        for i in 0..config.books {
            let rating = Rating::new(rng.random_range(1..=10)).expect("in range");
            let title: Vec<String> = (0..3).map(|_| format!("t{}", rng.sample(titles))).collect();
            let author = format!("a_{}", rng.sample(authors));
            let mut book = TokenizedBook::new(format!("p{i:05}"), title.join(" "));

            for t in &title {
                book.bag_mut(Slot::Title).add(t.clone(), 1);
                book.bag_mut(Slot::RelatedTitles).add(t.clone(), 1);
            }
            book.bag_mut(Slot::Authors).add(author.clone(), 1);
            book.bag_mut(Slot::RelatedAuthors).add(author, 1);
            for _ in 0..config.words_per_book {
                book.bag_mut(Slot::Words).add(format!("w{}", rng.sample(background)), 1);
            }
            for _ in 0..2 {
                book.bag_mut(Slot::Subjects).add(format!("s{}", rng.sample(subjects)), 1);
                book.bag_mut(Slot::RelatedAuthors).add(format!("a_{}", rng.sample(authors)), 1);
            }
            for _ in 0..6 {
                book.bag_mut(Slot::RelatedTitles).add(format!("t{}", rng.sample(titles)), 1);
            }

            if rating.is_positive() {
                let count = config.markers_per_point * usize::from(rating.get() - 5);
                for _ in 0..count {
                    book.bag_mut(config.marker_slot).add(format!("m{}", rng.sample(markers)), 1);
                }
            }

            ratings.push(RatingEntry { id: book.id.clone(), rating });
            books.push(book);
        }
        Self { books, ratings }
    }

    pub fn catalog(&self) -> Result<Catalog> {
        Catalog::new(self.books.clone())
    }

    pub fn examples(&self) -> Vec<RatedExample> {
        self.books
            .iter()
            .zip(&self.ratings)
            .map(|(b, r)| RatedExample::new(b.clone(), r.rating))
            .collect()
    }

    /// Copy of the corpus with the given slots emptied in every book.
    pub fn without_slots(&self, slots: &[Slot]) -> Self {
        let books = self
            .books
            .iter()
            .map(|b| {
                let mut b = b.clone();
                for slot in slots {
                    *b.bag_mut(*slot) = Default::default();
                }
                b
            })
            .collect();
        Self { books, ratings: self.ratings.clone() }
    }
}
