//! Research-trend detection over preprint corpora.
//!
//! Papers are scored by how far their citation count sits above the mean of
//! papers submitted around the same time (a time-window z-score), the top of
//! that ranking is joined with hand-assigned category labels, and the labels
//! are summarised into per-category statistics and distributions.
//!
//! Stages, in pipeline order: [`harvest`] → [`corpus`] → [`scoring`] →
//! [`ranking`] → [`annotate`] → [`analytics`] → [`report`]. The [`cli`]
//! module wires them together.

pub mod analytics;
pub mod annotate;
pub mod cli;
pub mod corpus;
pub mod harvest;
pub mod ranking;
pub mod report;
pub mod scoring;
