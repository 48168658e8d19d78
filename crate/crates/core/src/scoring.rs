//! Time-window citation z-scores.
//!
//! A paper's score is its citation count minus the mean count of the papers
//! submitted within `half_width_days` of it, divided by that cohort's standard
//! deviation. Cohorts are drawn from one corpus, so only papers of the same
//! field are ever compared.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PaperRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdMode {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringConfig {
    pub half_width_days: u32,
    pub min_citations: u64,
    pub std_mode: StdMode,
    pub include_self: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig { half_width_days: 10, min_citations: 4, std_mode: StdMode::Population, include_self: true }
    }
}

/// A paper's z-score together with the cohort statistics that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPaper {
    pub paper_id: String,
    #[serde(default)]
    pub title: String,
    pub citation_count: u64,
    pub z_score: f64,
    pub window_count: usize,
    pub window_mean: f64,
    pub window_std: f64,
}

impl ScoredPaper {
    /// Builds a scored entry whose z-score is derived from the window statistics.
    pub fn from_window(
        paper_id: impl Into<String>,
        title: impl Into<String>,
        citation_count: u64,
        window_count: usize,
        window_mean: f64,
        window_std: f64,
    ) -> Self {
        ScoredPaper {
            paper_id: paper_id.into(),
            title: title.into(),
            citation_count,
            z_score: (citation_count as f64 - window_mean) / window_std,
            window_count,
            window_mean,
            window_std,
        }
    }
}

/// Output order: z-score descending, then paper_id ascending.
pub fn rank_order(a: &ScoredPaper, b: &ScoredPaper) -> Ordering {
    b.z_score.total_cmp(&a.z_score).then_with(|| a.paper_id.cmp(&b.paper_id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExclusionReason {
    NoCitationData,
    BelowMinCitations,
    DegenerateWindow,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusionReason::NoCitationData => "no citation data",
            ExclusionReason::BelowMinCitations => "below minimum citations",
            ExclusionReason::DegenerateWindow => "degenerate window",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub paper_id: String,
    pub reason: ExclusionReason,
}

/// Papers that received no score, in paper_id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExclusionReport {
    pub entries: Vec<Exclusion>,
}

impl ExclusionReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, reason: ExclusionReason) -> usize {
        self.entries.iter().filter(|e| e.reason == reason).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoringError {
    #[error("window is empty")]
    EmptyWindow,
    #[error("corpus has no papers with citation data")]
    NoCitationData,
}

/// Result of scoring a single anchor against its window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZScore {
    Score {
        z: f64,
        mean: f64,
        std: f64,
    },
    /// The cohort has zero spread (or too few members for sample std).
    Degenerate,
}

impl ZScore {
    pub fn value(self) -> Option<f64> {
        match self {
            ZScore::Score { z, .. } => Some(z),
            ZScore::Degenerate => None,
        }
    }
}

/// Z-score of `anchor` against a window of (possibly real-valued) counts.
pub fn z_score(anchor: f64, window: &[f64], mode: StdMode) -> Result<ZScore, ScoringError> {
    let first = *window.first().ok_or(ScoringError::EmptyWindow)?;
    if mode == StdMode::Sample && window.len() < 2 {
        return Ok(ZScore::Degenerate);
    }
    // Checked up front: a float mean of identical values need not equal them.
    if window.iter().all(|&c| c == first) {
        return Ok(ZScore::Degenerate);
    }
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let ss: f64 = window.iter().map(|&c| (c - mean) * (c - mean)).sum();
    let denom = match mode {
        StdMode::Population => n,
        StdMode::Sample => n - 1.0,
    };
    let std = (ss / denom).sqrt();
    if std == 0.0 {
        return Ok(ZScore::Degenerate);
    }
    Ok(ZScore::Score { z: (anchor - mean) / std, mean, std })
}

/// Window mean and std for whole citation counts. Sums are exact, so degeneracy is exact.
fn window_stats(n: u64, sum: u128, sum_sq: u128, mode: StdMode) -> Option<(f64, f64)> {
    let denom = match mode {
        StdMode::Population => n,
        StdMode::Sample if n >= 2 => n - 1,
        StdMode::Sample => return None,
    };
    if n == 0 {
        return None;
    }
    // n * sum_sq - sum^2 = n^2 * population variance, always >= 0.
    let spread = n as u128 * sum_sq - sum * sum;
    if spread == 0 {
        return None;
    }
    let mean = sum as f64 / n as f64;
    let variance = spread as f64 / (n as f64 * denom as f64);
    Some((mean, variance.sqrt()))
}

/// Papers with citation data whose submission date is within the anchor's window.
pub fn window_members<'a>(corpus: &'a Corpus, anchor: &PaperRecord, config: &ScoringConfig) -> Vec<&'a PaperRecord> {
    let half = i64::from(config.half_width_days);
    corpus
        .records()
        .filter(|p| p.has_citations())
        .filter(|p| (p.submitted - anchor.submitted).num_days().abs() <= half)
        .filter(|p| config.include_self || p.paper_id != anchor.paper_id)
        .collect()
}

/// Scores every eligible paper of the corpus.
///
/// Cohorts include every paper with citation data; `min_citations` only
/// decides which papers receive a score. Returns scores in rank order and
/// an exclusion entry for every other paper.
pub fn score_corpus(corpus: &Corpus, config: &ScoringConfig) -> Result<(Vec<ScoredPaper>, ExclusionReport), ScoringError> {
    // (day number, count) for cited papers, sorted by day
    let mut cited: Vec<(i64, u64)> = corpus.records().filter_map(|p| p.citation_count.map(|c| (day_number(p), c))).collect();
    if cited.is_empty() {
        return Err(ScoringError::NoCitationData);
    }
    cited.sort_unstable();

    let mut prefix_sum = Vec::with_capacity(cited.len() + 1);
    let mut prefix_sq = Vec::with_capacity(cited.len() + 1);
    prefix_sum.push(0u128);
    prefix_sq.push(0u128);
    for &(_, c) in &cited {
        let c = c as u128;
        prefix_sum.push(prefix_sum.last().unwrap() + c);
        prefix_sq.push(prefix_sq.last().unwrap() + c * c);
    }

    let half = i64::from(config.half_width_days);
    let mut scored = Vec::new();
    let mut exclusions = Vec::new();
    for paper in corpus.records() {
        let Some(count) = paper.citation_count else {
            exclusions.push(Exclusion { paper_id: paper.paper_id.clone(), reason: ExclusionReason::NoCitationData });
            continue;
        };
        if count < config.min_citations {
            exclusions.push(Exclusion { paper_id: paper.paper_id.clone(), reason: ExclusionReason::BelowMinCitations });
            continue;
        }
        let day = day_number(paper);
        let lo = cited.partition_point(|&(d, _)| d < day - half);
        let hi = cited.partition_point(|&(d, _)| d <= day + half);
        let mut n = (hi - lo) as u64;
        let mut sum = prefix_sum[hi] - prefix_sum[lo];
        let mut sum_sq = prefix_sq[hi] - prefix_sq[lo];
        if !config.include_self {
            n -= 1;
            sum -= count as u128;
            sum_sq -= count as u128 * count as u128;
        }
        match window_stats(n, sum, sum_sq, config.std_mode) {
            Some((mean, std)) => scored.push(ScoredPaper::from_window(&paper.paper_id, &paper.title, count, n as usize, mean, std)),
            None => exclusions.push(Exclusion { paper_id: paper.paper_id.clone(), reason: ExclusionReason::DegenerateWindow }),
        }
    }
    scored.sort_by(rank_order);
    Ok((scored, ExclusionReport { entries: exclusions }))
}

fn day_number(p: &PaperRecord) -> i64 {
    use chrono::Datelike;
    i64::from(p.submitted.num_days_from_ce())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Field;
    use chrono::NaiveDate;

    fn paper(id: &str, day: i64, citations: Option<u64>) -> PaperRecord {
        let base = NaiveDate::from_ymd_opt(2018, 6, 1).unwrap();
        PaperRecord {
            paper_id: id.into(),
            title: format!("Paper {id}"),
            abstract_text: String::new(),
            authors: vec![],
            field: Field::CsCl,
            submitted: base + chrono::Duration::days(day),
            citation_count: citations,
            citation_asof: citations.map(|_| NaiveDate::from_ymd_opt(2018, 12, 31).unwrap()),
        }
    }

    fn ids(papers: &[&PaperRecord]) -> Vec<String> {
        let mut v: Vec<_> = papers.iter().map(|p| p.paper_id.clone()).collect();
        v.sort();
        v
    }

    #[test]
    fn zero_width_window_is_same_day_only() {
        let c = Corpus::from_records(
            Field::CsCl,
            vec![paper("a", 0, Some(5)), paper("b", 0, Some(3)), paper("c", 1, Some(9)), paper("d", -1, Some(1))],
        )
        .unwrap();
        let cfg = ScoringConfig { half_width_days: 0, ..Default::default() };
        let anchor = c.get("a").unwrap();
        assert_eq!(ids(&window_members(&c, anchor, &cfg)), vec!["a", "b"]);
    }

    #[test]
    fn window_boundaries_are_inclusive() {
        let c = Corpus::from_records(
            Field::CsCl,
            vec![paper("anchor", 0, Some(5)), paper("m10", -10, Some(3)), paper("p10", 10, Some(9)), paper("p11", 11, Some(1))],
        )
        .unwrap();
        let anchor = c.get("anchor").unwrap();
        let members = window_members(&c, anchor, &ScoringConfig::default());
        assert_eq!(ids(&members), vec!["anchor", "m10", "p10"]);
        let no_self = ScoringConfig { include_self: false, ..Default::default() };
        assert_eq!(ids(&window_members(&c, anchor, &no_self)), vec!["m10", "p10"]);
    }

    #[test]
    fn window_skips_uncited_papers() {
        let c = Corpus::from_records(Field::CsCl, vec![paper("a", 0, Some(5)), paper("b", 1, None)]).unwrap();
        assert_eq!(ids(&window_members(&c, c.get("a").unwrap(), &ScoringConfig::default())), vec!["a"]);
    }

    #[test]
    fn anchor_at_mean_scores_zero() {
        let z = z_score(10.0, &[5.0, 10.0, 15.0], StdMode::Population).unwrap();
        assert_eq!(z.value(), Some(0.0));
    }

    #[test]
    fn population_z_matches_hand_computation() {
        // mean 8, population variance 8/3
        let z = z_score(10.0, &[6.0, 8.0, 10.0], StdMode::Population).unwrap().value().unwrap();
        assert!((z - 2.0 / (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((z - 1.224745).abs() < 1e-6);
    }

    #[test]
    fn sample_z_matches_hand_computation() {
        // mean 8, sample variance 8/2 = 4
        let z = z_score(10.0, &[6.0, 8.0, 10.0], StdMode::Sample).unwrap().value().unwrap();
        assert!((z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_window_is_degenerate() {
        assert_eq!(z_score(7.0, &[7.0, 7.0, 7.0], StdMode::Population).unwrap(), ZScore::Degenerate);
        assert_eq!(z_score(0.1, &[0.1, 0.1, 0.1], StdMode::Population).unwrap(), ZScore::Degenerate);
        assert_eq!(z_score(3.0, &[3.0], StdMode::Sample).unwrap(), ZScore::Degenerate);
        assert_eq!(z_score(3.0, &[], StdMode::Population), Err(ScoringError::EmptyWindow));
    }

    #[test]
    fn singleton_corpus_is_degenerate() {
        let c = Corpus::from_records(Field::CsCl, vec![paper("solo", 0, Some(5))]).unwrap();
        let (scored, report) = score_corpus(&c, &ScoringConfig::default()).unwrap();
        assert!(scored.is_empty());
        assert_eq!(report.entries, vec![Exclusion { paper_id: "solo".into(), reason: ExclusionReason::DegenerateWindow }]);
    }

    #[test]
    fn uncited_corpus_is_an_error() {
        let c = Corpus::from_records(Field::CsCl, vec![paper("a", 0, None)]).unwrap();
        assert_eq!(score_corpus(&c, &ScoringConfig::default()), Err(ScoringError::NoCitationData));
    }

    #[test]
    fn low_count_papers_shape_windows_but_are_not_scored() {
        let c = Corpus::from_records(
            Field::CsCl,
            vec![paper("a", 0, Some(10)), paper("b", 1, Some(0)), paper("c", 2, Some(2)), paper("d", 3, None)],
        )
        .unwrap();
        let (scored, report) = score_corpus(&c, &ScoringConfig::default()).unwrap();
        assert_eq!(scored.len(), 1);
        let a = &scored[0];
        assert_eq!(a.window_count, 3);
        assert!((a.window_mean - 4.0).abs() < 1e-12);
        // population variance of {10, 0, 2} = (36 + 16 + 4) / 3
        assert!((a.window_std - (56.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(report.count(ExclusionReason::BelowMinCitations), 2);
        assert_eq!(report.count(ExclusionReason::NoCitationData), 1);
    }

    #[test]
    fn ties_break_on_paper_id() {
        // a and b are mirror images: same count, same cohort
        let c = Corpus::from_records(Field::CsCl, vec![paper("b", 0, Some(10)), paper("a", 0, Some(10)), paper("c", 0, Some(4))]).unwrap();
        let (scored, _) = score_corpus(&c, &ScoringConfig::default()).unwrap();
        let order: Vec<_> = scored.iter().map(|s| s.paper_id.as_str()).collect();
        assert_eq!(order, vec!["a", "b", "c"]);
    }

    #[test]
    fn stored_z_is_exactly_the_window_formula() {
        let c = Corpus::from_records(
            Field::CsLg,
            (0..30).map(|i| {
                let mut p = paper(&format!("p{i:02}"), i % 7, Some((i * 37 % 101) as u64));
                p.field = Field::CsLg;
                p
            }),
        )
        .unwrap();
        let (scored, _) = score_corpus(&c, &ScoringConfig::default()).unwrap();
        for s in &scored {
            assert_eq!(s.z_score, (s.citation_count as f64 - s.window_mean) / s.window_std);
            assert!(s.window_std > 0.0);
        }
    }
}
