use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::learner::{Profile, RatedExample};
use crate::slot::SlotMask;

use super::folds::FoldPlan;
use super::metrics::{compute_metrics, MetricsReport, TestItem};

/// Training-set sizes reported by default.
pub const DEFAULT_POINTS: &str = "5,10,20,40,100,full";
/// Extra points available for denser curves.
pub const EXTENDED_POINTS: &str = "5,10,20,40,70,100,150,200,300,450,full";

/// A learning-curve point: a fixed number of training examples, or the
/// whole training pool of each fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrainSize {
    Count(usize),
    Full,
}

impl TrainSize {
    pub fn resolve(self, pool: usize) -> Result<usize> {
        match self {
            TrainSize::Full => Ok(pool),
            TrainSize::Count(0) => Err(Error::InvalidArgument("training size must be positive".into())),
            TrainSize::Count(n) if n > pool => Err(Error::InvalidArgument(format!(
                "training size {n} exceeds the {pool} examples available in a fold"
            ))),
            TrainSize::Count(n) => Ok(n),
        }
    }

    /// Parses `5,10,20,full`.
    pub fn parse_list(s: &str) -> Result<Vec<TrainSize>> {
        s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::parse).collect()
    }
}

impl FromStr for TrainSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(TrainSize::Full);
        }
        s.parse()
            .map(TrainSize::Count)
            .map_err(|_| Error::InvalidArgument(format!("bad training size `{s}`")))
    }
}

impl fmt::Display for TrainSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainSize::Count(n) => write!(f, "{n}"),
            TrainSize::Full => f.write_str("full"),
        }
    }
}

impl Serialize for TrainSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TrainSize::Count(n) => s.serialize_u64(*n as u64),
            TrainSize::Full => s.serialize_str("full"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub lambda: f64,
    pub mask: SlotMask,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { lambda: crate::learner::DEFAULT_LAMBDA, mask: SlotMask::all() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(rename = "N")]
    pub size: TrainSize,
    /// Actual training-set size used in each fold.
    pub train_sizes: Vec<usize>,
    pub folds: Vec<MetricsReport>,
    pub mean: MetricsReport,
}

/// Trains on the first `n` examples of one fold's training order and
/// scores the held-out fold.
pub fn evaluate_fold(
    dataset: &[RatedExample],
    plan: &FoldPlan,
    fold: usize,
    n: usize,
    config: &EvalConfig,
) -> Result<MetricsReport> {
    let order = plan.training_order(fold);
    let training = order[..n].iter().map(|&i| &dataset[i]);
    let profile = Profile::train(training, config.lambda, &config.mask)?;
    let items: Vec<TestItem> = plan
        .test_indices(fold)
        .into_iter()
        .map(|i| {
            let ex = &dataset[i];
            let score = profile.log_odds(&ex.book);
            TestItem { id: ex.book.id.clone(), rating: ex.rating, score: score.log_odds, evidence: score.evidence }
        })
        .collect();
    compute_metrics(&items)
}

/// Runs cross-validated learning curves. Folds run in parallel; results
/// are assembled in fold order, so output does not depend on scheduling.
pub fn learning_curve(
    dataset: &[RatedExample],
    points: &[TrainSize],
    plan: &FoldPlan,
    config: &EvalConfig,
) -> Result<Vec<CurvePoint>> {
    if plan.len() != dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "fold plan covers {} items but the dataset has {}",
            plan.len(),
            dataset.len()
        )));
    }
    let min_pool = plan.min_training_size();
    for p in points {
        p.resolve(min_pool)?;
    }

    let per_fold: Vec<Vec<(usize, MetricsReport)>> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let pool = plan.len() - plan.test_indices(fold).len();
            points
                .iter()
                .map(|p| {
                    let n = p.resolve(pool)?;
                    Ok((n, evaluate_fold(dataset, plan, fold, n, config)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(points
        .iter()
        .enumerate()
        .map(|(pi, size)| {
            let (train_sizes, folds): (Vec<usize>, Vec<MetricsReport>) =
                per_fold.iter().map(|fold| fold[pi]).unzip();
            let mean = MetricsReport::mean(&folds);
            CurvePoint { size: *size, train_sizes, folds, mean }
        })
        .collect())
}
