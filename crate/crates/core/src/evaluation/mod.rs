//! Cross-validated learning curves, ranking metrics and slot ablation.

mod ablation;
mod curve;
mod folds;
mod metrics;
pub mod stats;

use std::fmt::Write as _;

use serde::Serialize;

pub use ablation::{ablation_run, AblationPoint, AblationReport, MetricComparison, RELATED_SLOTS};
pub use curve::{evaluate_fold, learning_curve, CurvePoint, EvalConfig, TrainSize, DEFAULT_POINTS, EXTENDED_POINTS};
pub use folds::{kfold_split, FoldPlan, DEFAULT_FOLDS};
pub use metrics::{compute_metrics, ranked_order, Metric, MetricsReport, TestItem};
pub use stats::{paired_t_test, PairedTTest};

use crate::corpus::{Catalog, RatingEntry};
use crate::error::{Error, Result};
use crate::learner::RatedExample;
use crate::slot::{Slot, SlotMask};

/// Joins ratings with their catalog books, in ratings order.
pub fn build_dataset(catalog: &Catalog, ratings: &[RatingEntry]) -> Result<Vec<RatedExample>> {
    ratings
        .iter()
        .map(|r| {
            let book = catalog.get(&r.id).ok_or_else(|| Error::NotFound(r.id.clone()))?;
            Ok(RatedExample::new(book.clone(), r.rating))
        })
        .collect()
}

/// Everything `eval` writes to its JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub examples: usize,
    pub folds: usize,
    pub seed: u64,
    pub lambda: f64,
    pub mask: SlotMask,
    pub fold_sizes: Vec<usize>,
    pub notes: Vec<String>,
    pub curve: Vec<CurvePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub folds: usize,
    pub seed: u64,
    pub points: Vec<TrainSize>,
    pub config: EvalConfig,
    /// Slots to remove for an ablation comparison, if any.
    pub ablate: Option<Vec<Slot>>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            seed: 0,
            points: TrainSize::parse_list(DEFAULT_POINTS).expect("valid default"),
            config: EvalConfig::default(),
            ablate: None,
        }
    }
}

const UNDEFINED_NOTE: &str = "metrics undefined on a fold (precision with no predicted positives, \
                              recall with no positive examples, top-k on fewer than k items, rank \
                              correlation on a constant ranking) are null and excluded from the means";

pub fn run_evaluation(dataset: &[RatedExample], options: &EvalOptions) -> Result<EvalReport> {
    let plan = kfold_split(dataset.len(), options.folds, options.seed)?;
    let (curve, ablation) = match &options.ablate {
        Some(removed) => {
            let report = ablation_run(dataset, &plan, &options.points, &options.config, removed)?;
            let curve = report.points.iter().map(|p| p.full.clone()).collect();
            (curve, Some(report))
        }
        None => (learning_curve(dataset, &options.points, &plan, &options.config)?, None),
    };
    Ok(EvalReport {
        examples: dataset.len(),
        folds: options.folds,
        seed: options.seed,
        lambda: options.config.lambda,
        mask: options.config.mask.clone(),
        fold_sizes: plan.fold_sizes(),
        notes: vec![UNDEFINED_NOTE.to_string()],
        curve,
        ablation,
    })
}

fn cell(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.decimals$}"))
}

fn decimals(metric: Metric) -> usize {
    match metric {
        Metric::Rt3 | Metric::Rt10 => 2,
        Metric::Rs => 2,
        _ => 1,
    }
}

/// Mean metrics per curve point, laid out like a results table.
pub fn format_curve_table(curve: &[CurvePoint]) -> String {
    let mut out = format!("{:>6}", "N");
    for m in Metric::ALL {
        let _ = write!(out, " {:>6}", m.name());
    }
    out.push('\n');
    for point in curve {
        let _ = write!(out, "{:>6}", point.size.to_string());
        for m in Metric::ALL {
            let _ = write!(out, " {:>6}", cell(point.mean.get(m), decimals(m)));
        }
        out.push('\n');
    }
    out
}

/// Learning-curve means as CSV, one row per point.
pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("N");
    for m in Metric::ALL {
        out.push(',');
        out.push_str(m.name());
    }
    out.push('\n');
    for point in curve {
        out.push_str(&point.size.to_string());
        for m in Metric::ALL {
            out.push(',');
            if let Some(v) = point.mean.get(m) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Full-versus-ablated CSV: `N,metric,full,ablated,t,significant`.
pub fn ablation_csv(report: &AblationReport) -> String {
    let mut out = String::from("N,metric,full,ablated,t,significant\n");
    for point in &report.points {
        for (metric, cmp) in &point.comparisons {
            let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                point.size,
                metric,
                fmt(cmp.full_mean),
                fmt(cmp.ablated_mean),
                fmt(cmp.test.map(|t| t.t)),
                cmp.test.is_some_and(|t| t.significant)
            );
        }
    }
    out
}

/// Mean metrics of the full and ablated runs side by side, with `*`
/// marking significant improvements of the full model.
pub fn format_ablation_table(report: &AblationReport) -> String {
    let mut out = format!("{:>6} {:>6} {:>9} {:>9} {:>8}\n", "N", "Metric", "Full", "Ablated", "t");
    for point in &report.points {
        for (metric, cmp) in &point.comparisons {
            let t = cmp.test.map_or_else(|| "-".to_string(), |t| format!("{:.2}", t.t));
            let star = if cmp.test.is_some_and(|t| t.significant) { "*" } else { "" };
            let _ = writeln!(
                out,
                "{:>6} {:>6} {:>9} {:>9} {:>8}{star}",
                point.size.to_string(),
                metric.name(),
                cell(cmp.full_mean, decimals(*metric) + 1),
                cell(cmp.ablated_mean, decimals(*metric) + 1),
                t
            );
        }
    }
    out
}
