//! Top-K selection over scored papers.

use crate::scoring::{rank_order, ScoredPaper};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankingConfig {
    pub k: usize,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig { k: 100 }
    }
}

impl RankingConfig {
    pub fn new(k: usize) -> Option<Self> {
        (k >= 1).then_some(RankingConfig { k })
    }
}

/// The first `k` entries of an already ranked list. Ties at the cut are not expanded.
pub fn top_k(scored: &[ScoredPaper], config: &RankingConfig) -> Vec<ScoredPaper> {
    scored.iter().take(config.k).cloned().collect()
}

/// Puts an arbitrary list of scored papers into canonical rank order.
pub fn sort_ranked(scored: &mut [ScoredPaper]) {
    scored.sort_by(rank_order);
}

/// Papers in `scored` that should never have been scored under `min_citations`.
pub fn ineligible(scored: &[ScoredPaper], min_citations: u64) -> Vec<&ScoredPaper> {
    scored.iter().filter(|s| s.citation_count < min_citations).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(id: &str, z: f64) -> ScoredPaper {
        ScoredPaper::from_window(id, "", 10, 3, 10.0 - z, 1.0)
    }

    fn ids(v: &[ScoredPaper]) -> Vec<&str> {
        v.iter().map(|s| s.paper_id.as_str()).collect()
    }

    #[test]
    fn k_larger_than_input_returns_everything() {
        let scored: Vec<_> = (0..5).map(|i| sp(&format!("p{i}"), 5.0 - i as f64)).collect();
        assert_eq!(top_k(&scored, &RankingConfig::default()), scored);
    }

    #[test]
    fn picks_highest_scores() {
        let mut scored = vec![sp("C", -1.22), sp("A", 1.22), sp("B", 0.0)];
        sort_ranked(&mut scored);
        assert_eq!(ids(&top_k(&scored, &RankingConfig { k: 2 })), vec!["A", "B"]);
    }

    #[test]
    fn zero_k_is_rejected() {
        assert!(RankingConfig::new(0).is_none());
        assert_eq!(RankingConfig::new(3), Some(RankingConfig { k: 3 }));
    }

    #[test]
    fn tie_at_cut_keeps_exactly_k() {
        let mut scored = vec![sp("b", 1.0), sp("a", 1.0), sp("c", 1.0)];
        sort_ranked(&mut scored);
        assert_eq!(ids(&top_k(&scored, &RankingConfig { k: 2 })), vec!["a", "b"]);
    }

    #[test]
    fn flags_ineligible_entries() {
        let mut low = sp("low", 3.0);
        low.citation_count = 2;
        let scored = vec![sp("ok", 4.0), low];
        assert_eq!(ineligible(&scored, 4).len(), 1);
        assert!(ineligible(&scored, 2).is_empty());
    }
}
