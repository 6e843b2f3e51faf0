//! Content-based book recommendation with a rating-weighted, multi-slot
//! multinomial naive Bayes learner.
//!
//! The pipeline runs from raw catalog pages to ranked, explained
//! recommendations: [`extraction`] pulls slot fillers out of pages,
//! [`corpus`] turns them into per-slot bags of words, [`learner`] trains a
//! user profile from rated books, [`recommender`] ranks and explains, and
//! [`evaluation`] measures the whole thing with cross-validated learning
//! curves.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod learner;
pub mod recommender;
pub mod slot;
pub mod synthetic;

pub use error::{Error, Result};
pub use slot::{Field, Slot, SlotMask};
