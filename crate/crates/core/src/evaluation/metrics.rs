use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Rating;
use crate::error::{Error, Result};

use super::stats::spearman;

/// One scored test example.
#[derive(Debug, Clone, PartialEq)]
pub struct TestItem {
    pub id: String,
    pub rating: Rating,
    /// Posterior log-odds; positive means predicted positive.
    pub score: f64,
    /// Secondary ordering key for books with equal scores (the score without
    /// its prior term). Zero when not needed.
    pub evidence: f64,
}

impl TestItem {
    pub fn new(id: impl Into<String>, rating: Rating, score: f64) -> Self {
        Self { id: id.into(), rating, score, evidence: 0.0 }
    }

    fn cmp_rank(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| other.evidence.total_cmp(&self.evidence))
    }
}

/// Evaluation numbers for one test fold. Percentages are in `0..=100` and
/// rating averages in `1..=10`. A metric that is undefined for the fold
/// (precision with no predicted positives, top-10 on fewer than ten items,
/// rank correlation with a constant ranking) is `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "Acc")]
    pub acc: Option<f64>,
    #[serde(rename = "Rec")]
    pub rec: Option<f64>,
    #[serde(rename = "Pr")]
    pub pr: Option<f64>,
    #[serde(rename = "Pr3")]
    pub pr3: Option<f64>,
    #[serde(rename = "Pr10")]
    pub pr10: Option<f64>,
    #[serde(rename = "F")]
    pub f: Option<f64>,
    #[serde(rename = "Rt3")]
    pub rt3: Option<f64>,
    #[serde(rename = "Rt10")]
    pub rt10: Option<f64>,
    #[serde(rename = "r_s")]
    pub rs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Acc,
    Rec,
    Pr,
    Pr3,
    Pr10,
    F,
    Rt3,
    Rt10,
    #[serde(rename = "r_s")]
    Rs,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Acc,
        Metric::Rec,
        Metric::Pr,
        Metric::Pr3,
        Metric::Pr10,
        Metric::F,
        Metric::Rt3,
        Metric::Rt10,
        Metric::Rs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Acc => "Acc",
            Metric::Rec => "Rec",
            Metric::Pr => "Pr",
            Metric::Pr3 => "Pr3",
            Metric::Pr10 => "Pr10",
            Metric::F => "F",
            Metric::Rt3 => "Rt3",
            Metric::Rt10 => "Rt10",
            Metric::Rs => "r_s",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Acc => self.acc,
            Metric::Rec => self.rec,
            Metric::Pr => self.pr,
            Metric::Pr3 => self.pr3,
            Metric::Pr10 => self.pr10,
            Metric::F => self.f,
            Metric::Rt3 => self.rt3,
            Metric::Rt10 => self.rt10,
            Metric::Rs => self.rs,
        }
    }

    fn slot_mut(&mut self, metric: Metric) -> &mut Option<f64> {
        match metric {
            Metric::Acc => &mut self.acc,
            Metric::Rec => &mut self.rec,
            Metric::Pr => &mut self.pr,
            Metric::Pr3 => &mut self.pr3,
            Metric::Pr10 => &mut self.pr10,
            Metric::F => &mut self.f,
            Metric::Rt3 => &mut self.rt3,
            Metric::Rt10 => &mut self.rt10,
            Metric::Rs => &mut self.rs,
        }
    }

    /// Per-metric mean over the reports where the metric is defined.
    pub fn mean(reports: &[MetricsReport]) -> MetricsReport {
        let mut out = MetricsReport::default();
        for metric in Metric::ALL {
            let values: Vec<f64> = reports.iter().filter_map(|r| r.get(metric)).collect();
            if !values.is_empty() {
                *out.slot_mut(metric) = Some(values.iter().sum::<f64>() / values.len() as f64);
            }
        }
        out
    }
}

/// Sorts test items best-first: descending score, then descending
/// evidence, then ascending id.
pub fn ranked_order(items: &[TestItem]) -> Vec<&TestItem> {
    let mut order: Vec<&TestItem> = items.iter().collect();
    order.sort_by(|a, b| a.cmp_rank(b).then_with(|| a.id.cmp(&b.id)));
    order
}

fn percent(hits: usize, total: usize) -> f64 {
    100.0 * hits as f64 / total as f64
}

fn top_k(order: &[&TestItem], k: usize) -> (Option<f64>, Option<f64>) {
    if order.len() < k {
        return (None, None);
    }
    let top = &order[..k];
    let hits = top.iter().filter(|i| i.rating.is_positive()).count();
    let rating_sum: u32 = top.iter().map(|i| u32::from(i.rating.get())).sum();
    (Some(percent(hits, k)), Some(f64::from(rating_sum) / k as f64))
}

/// Computes the nine evaluation metrics for one test fold.
pub fn compute_metrics(items: &[TestItem]) -> Result<MetricsReport> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("cannot compute metrics on an empty test set".into()));
    }
    let n = items.len();
    let predicted = |i: &&TestItem| i.score > 0.0;
    let correct = items.iter().filter(|i| predicted(i) == i.rating.is_positive()).count();
    let actual_pos = items.iter().filter(|i| i.rating.is_positive()).count();
    let predicted_pos = items.iter().filter(predicted).count();
    let true_pos = items.iter().filter(|i| predicted(i) && i.rating.is_positive()).count();

    let rec = (actual_pos > 0).then(|| percent(true_pos, actual_pos));
    let pr = (predicted_pos > 0).then(|| percent(true_pos, predicted_pos));
    let f = match (pr, rec) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };

    let order = ranked_order(items);
    let (pr3, rt3) = top_k(&order, 3);
    let (pr10, rt10) = top_k(&order, 10);

    // Ranks are positions in the system's ordering with tied keys sharing a
    // midrank; the rating ranking uses the ratings directly.
    let position_keys = system_rank_keys(&order);
    let ratings: Vec<f64> = order.iter().map(|i| f64::from(i.rating.get())).collect();
    let rs = spearman(&position_keys, &ratings);

    Ok(MetricsReport {
        acc: Some(percent(correct, n)),
        rec,
        pr,
        pr3,
        pr10,
        f,
        rt3,
        rt10,
        rs,
    })
}

/// Numeric keys reproducing the system ordering, higher is better; items
/// with equal score and evidence get equal keys.
fn system_rank_keys(order: &[&TestItem]) -> Vec<f64> {
    let mut keys = Vec::with_capacity(order.len());
    let mut level = order.len() as f64;
    for (i, item) in order.iter().enumerate() {
        if i > 0 && order[i - 1].cmp_rank(item) != Ordering::Equal {
            level -= 1.0;
        }
        keys.push(level);
    }
    keys
}
