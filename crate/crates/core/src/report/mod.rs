//! Rendering of ranked lists and analytics tables, plus bar-chart images.

mod svg;
mod table;

pub use svg::{render_bar_chart, render_with_layout, ChartLayout};
pub use table::{render_table, Cell, RankedRow, TableFormat, Tabular};
