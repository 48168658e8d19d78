use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::analytics::{CategoryStats, DistributionRow};
use crate::annotate::Annotation;
use crate::scoring::ScoredPaper;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// Aligned monospace text for terminals.
    Table,
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(TableFormat::Table),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(format!("unknown table format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    /// `digits` applies to the terminal table only; CSV and JSON carry the full value.
    Real {
        value: f64,
        digits: usize,
    },
    Empty,
}

impl Cell {
    fn real(value: f64, digits: usize) -> Cell {
        Cell::Real { value, digits }
    }

    fn opt_text(s: Option<&str>) -> Cell {
        s.map_or(Cell::Empty, |s| Cell::Text(s.to_string()))
    }

    fn exact(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Real { value, .. } => value.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn display(&self) -> String {
        match self {
            Cell::Real { value, digits } => format!("{value:.digits$}"),
            Cell::Empty => "-".to_string(),
            other => other.exact(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::Number((*i).into()),
            Cell::Real { value, .. } => Number::from_f64(*value).map_or(Value::Null, Value::Number),
            Cell::Empty => Value::Null,
        }
    }

    fn right_aligned(&self) -> bool {
        matches!(self, Cell::Int(_) | Cell::Real { .. })
    }
}

/// A row type that can be rendered as a table.
pub trait Tabular {
    fn columns() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

/// One line of a top-K list: the paper, its scores and any labels it carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub rank: usize,
    pub paper_id: String,
    pub title: String,
    pub citation_count: u64,
    pub z_score: f64,
    pub task: Option<String>,
    pub method: Option<String>,
    pub goal: Option<String>,
}

impl RankedRow {
    pub fn new(rank: usize, paper: &ScoredPaper, annotation: Option<&Annotation>) -> Self {
        RankedRow {
            rank,
            paper_id: paper.paper_id.clone(),
            title: paper.title.clone(),
            citation_count: paper.citation_count,
            z_score: paper.z_score,
            task: annotation.and_then(|a| a.task.clone()),
            method: annotation.and_then(|a| a.method.clone()),
            goal: annotation.and_then(|a| a.goal.clone()),
        }
    }
}

impl Tabular for RankedRow {
    fn columns() -> &'static [&'static str] {
        &["rank", "paper_id", "title", "citations", "z_score", "task", "method", "goal"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.rank as u64),
            Cell::Text(self.paper_id.clone()),
            Cell::Text(self.title.clone()),
            Cell::Int(self.citation_count),
            Cell::real(self.z_score, 2),
            Cell::opt_text(self.task.as_deref()),
            Cell::opt_text(self.method.as_deref()),
            Cell::opt_text(self.goal.as_deref()),
        ]
    }
}

impl Tabular for ScoredPaper {
    fn columns() -> &'static [&'static str] {
        &["paper_id", "title", "citations", "z_score", "window_count", "window_mean", "window_std"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.paper_id.clone()),
            Cell::Text(self.title.clone()),
            Cell::Int(self.citation_count),
            Cell::real(self.z_score, 2),
            Cell::Int(self.window_count as u64),
            Cell::real(self.window_mean, 2),
            Cell::real(self.window_std, 2),
        ]
    }
}

impl Tabular for CategoryStats {
    fn columns() -> &'static [&'static str] {
        &["label", "n", "s", "m"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Text(self.label.clone()), Cell::Int(self.n as u64), Cell::real(self.s, 2), Cell::real(self.m, 2)]
    }
}

impl Tabular for DistributionRow {
    fn columns() -> &'static [&'static str] {
        &["label", "count", "percentage"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Text(self.label.clone()), Cell::Int(self.count as u64), Cell::real(self.percentage, 1)]
    }
}

pub fn render_table<T: Tabular>(rows: &[T], format: TableFormat) -> Vec<u8> {
    let header = T::columns();
    let body: Vec<Vec<Cell>> = rows.iter().map(Tabular::cells).collect();
    match format {
        TableFormat::Csv => render_csv(header, &body),
        TableFormat::Json => render_json(header, &body),
        TableFormat::Table => render_text(header, &body).into_bytes(),
    }
}

fn render_csv(header: &[&str], body: &[Vec<Cell>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in body {
        w.write_record(row.iter().map(Cell::exact)).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

fn render_json(header: &[&str], body: &[Vec<Cell>]) -> Vec<u8> {
    let array: Vec<Value> = body
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = header.iter().zip(row).map(|(h, c)| (h.to_string(), c.json())).collect();
            Value::Object(obj)
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&array).expect("json values serialize");
    out.push(b'\n');
    out
}

fn render_text(header: &[&str], body: &[Vec<Cell>]) -> String {
    let shown: Vec<Vec<String>> = body.iter().map(|r| r.iter().map(Cell::display).collect()).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &shown {
        for (w, s) in widths.iter_mut().zip(row) {
            *w = (*w).max(s.chars().count());
        }
    }
    let right: Vec<bool> = (0..header.len()).map(|i| body.first().is_some_and(|r| r[i].right_aligned())).collect();

    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> =
            cells.iter().zip(&widths).zip(&right).map(|((s, &w), &r)| if r { format!("{s:>w$}") } else { format!("{s:<w$}") }).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(rule.iter().map(String::as_str).collect());
    for row in &shown {
        line(row.iter().map(String::as_str).collect());
    }
    out
}
