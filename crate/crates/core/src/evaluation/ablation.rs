use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::learner::RatedExample;
use crate::slot::{Slot, SlotMask};

use super::curve::{learning_curve, CurvePoint, EvalConfig, TrainSize};
use super::folds::FoldPlan;
use super::metrics::Metric;
use super::stats::{paired_t_test, PairedTTest};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricComparison {
    /// Folds where the metric is defined for both runs.
    pub pairs: usize,
    pub full_mean: Option<f64>,
    pub ablated_mean: Option<f64>,
    /// `None` when fewer than two folds can be paired.
    pub test: Option<PairedTTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationPoint {
    #[serde(rename = "N")]
    pub size: TrainSize,
    pub full: CurvePoint,
    pub ablated: CurvePoint,
    pub comparisons: BTreeMap<Metric, MetricComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub removed: Vec<Slot>,
    pub full_mask: SlotMask,
    pub ablated_mask: SlotMask,
    pub points: Vec<AblationPoint>,
}

/// Slots removed by the default ablation: the collaborative content.
pub const RELATED_SLOTS: [Slot; 2] = [Slot::RelatedAuthors, Slot::RelatedTitles];

/// Runs the same learning curve twice, with and without `removed`, on the
/// same folds and training subsets, and tests whether the full model is
/// better on each metric with a one-tailed paired t-test over folds.
pub fn ablation_run(
    dataset: &[RatedExample],
    plan: &FoldPlan,
    points: &[TrainSize],
    config: &EvalConfig,
    removed: &[Slot],
) -> Result<AblationReport> {
    let ablated_config = EvalConfig { lambda: config.lambda, mask: config.mask.without(removed) };
    let full = learning_curve(dataset, points, plan, config)?;
    let ablated = learning_curve(dataset, points, plan, &ablated_config)?;

    let points = full
        .into_iter()
        .zip(ablated)
        .map(|(full, ablated)| {
            let comparisons = Metric::ALL
                .iter()
                .map(|&m| Ok((m, compare(&full, &ablated, m)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok(AblationPoint { size: full.size, full, ablated, comparisons })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AblationReport {
        removed: removed.to_vec(),
        full_mask: config.mask.clone(),
        ablated_mask: ablated_config.mask,
        points,
    })
}

fn compare(full: &CurvePoint, ablated: &CurvePoint, metric: Metric) -> Result<MetricComparison> {
    let (a, b): (Vec<f64>, Vec<f64>) = full
        .folds
        .iter()
        .zip(&ablated.folds)
        .filter_map(|(f, g)| Some((f.get(metric)?, g.get(metric)?)))
        .unzip();
    let test = if a.len() >= 2 { Some(paired_t_test(&a, &b)?) } else { None };
    Ok(MetricComparison {
        pairs: a.len(),
        full_mean: full.mean.get(metric),
        ablated_mean: ablated.mean.get(metric),
        test,
    })
}
