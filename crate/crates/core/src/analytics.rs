//! Per-category importance statistics and label distributions.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotate::{Annotation, Aspect};
use crate::scoring::ScoredPaper;

/// Member count, summed z-score and mean z-score of one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub label: String,
    pub n: usize,
    pub s: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKey {
    N,
    S,
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub label: String,
    pub count: usize,
    /// Exact share in percent; rounded only when rendered.
    pub percentage: f64,
}

/// Category statistics plus the number of pairs that lacked the aspect.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryReport {
    pub stats: Vec<CategoryStats>,
    pub missing: usize,
}

/// Groups members by label. Sorting the z-scores makes the sums independent of input order.
fn group(pairs: &[(ScoredPaper, Annotation)], aspect: Aspect) -> (BTreeMap<&str, Vec<f64>>, usize) {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut missing = 0;
    for (paper, ann) in pairs {
        match ann.label(aspect) {
            Some(label) => groups.entry(label).or_default().push(paper.z_score),
            None => missing += 1,
        }
    }
    for zs in groups.values_mut() {
        zs.sort_by(f64::total_cmp);
    }
    (groups, missing)
}

pub fn category_stats(pairs: &[(ScoredPaper, Annotation)], aspect: Aspect) -> CategoryReport {
    let (groups, missing) = group(pairs, aspect);
    let mut stats: Vec<CategoryStats> = groups
        .into_iter()
        .map(|(label, zs)| {
            let n = zs.len();
            let s: f64 = zs.iter().sum();
            CategoryStats { label: label.to_string(), n, s, m: s / n as f64 }
        })
        .collect();
    stats.sort_by(|a, b| compare(a, b, StatKey::N));
    CategoryReport { stats, missing }
}

fn compare(a: &CategoryStats, b: &CategoryStats, key: StatKey) -> Ordering {
    let primary = match key {
        StatKey::N => b.n.cmp(&a.n),
        StatKey::S => b.s.total_cmp(&a.s),
        StatKey::M => b.m.total_cmp(&a.m),
    };
    primary.then_with(|| a.label.cmp(&b.label))
}

/// Labels ordered by `key` descending, ties by label ascending.
pub fn rank_by(stats: &[CategoryStats], key: StatKey) -> Vec<String> {
    let mut sorted: Vec<&CategoryStats> = stats.iter().collect();
    sorted.sort_by(|a, b| compare(a, b, key));
    sorted.into_iter().map(|s| s.label.clone()).collect()
}

pub fn distribution(pairs: &[(ScoredPaper, Annotation)], aspect: Aspect) -> Vec<DistributionRow> {
    let (groups, _) = group(pairs, aspect);
    let total: usize = groups.values().map(Vec::len).sum();
    let mut rows: Vec<DistributionRow> = groups
        .into_iter()
        .map(|(label, zs)| DistributionRow {
            label: label.to_string(),
            count: zs.len(),
            percentage: 100.0 * zs.len() as f64 / total as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
    rows
}
