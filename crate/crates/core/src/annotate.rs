//! Label schemes, annotation import, and the join with ranked papers.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{split_version, Field};
use crate::scoring::ScoredPaper;

const CS_CL_TASK: &str = include_str!("../data/schemes/cs.CL-task.txt");
const CS_LG_METHOD: &str = include_str!("../data/schemes/cs.LG-method.txt");
const BUILTIN_ALIASES: &str = include_str!("../data/aliases.tsv");

/// Stand-in for the one cs.LG method label that is counted but never listed.
pub const CS_LG_METHOD_PLACEHOLDER: &str = "(unlisted method label)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Task,
    Method,
    Goal,
}

impl Aspect {
    pub const ALL: [Aspect; 3] = [Aspect::Task, Aspect::Method, Aspect::Goal];

    pub fn as_str(self) -> &'static str {
        match self {
            Aspect::Task => "task",
            Aspect::Method => "method",
            Aspect::Goal => "goal",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aspect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "task" => Ok(Aspect::Task),
            "method" => Ok(Aspect::Method),
            "goal" => Ok(Aspect::Goal),
            other => Err(format!("unknown aspect `{other}` (expected task, method or goal)")),
        }
    }
}

/// Number of labels each scheme is stated to have.
pub fn stated_cardinality(field: Field, aspect: Aspect) -> usize {
    match (field, aspect) {
        (Field::CsCl, Aspect::Task) => 15,
        (Field::CsCl, Aspect::Method) => 28,
        (Field::CsCl, Aspect::Goal) => 7,
        (Field::CsLg, Aspect::Task) => 13,
        (Field::CsLg, Aspect::Method) => 15,
        (Field::CsLg, Aspect::Goal) => 13,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotateError {
    #[error("no built-in {aspect} labels for {field}; only the count ({count}) is known, supply a scheme file")]
    NotEnumerated { field: Field, aspect: Aspect, count: usize },
    #[error("label scheme is empty")]
    EmptyScheme,
    #[error("label `{0}` listed twice in scheme")]
    DuplicateLabel(String),
    #[error("annotation file has no paper_id column")]
    MissingPaperIdColumn,
    #[error("{0}")]
    Io(String),
    #[error("malformed annotation file: {0}")]
    Csv(String),
    #[error("malformed alias line {line}: {text}")]
    BadAlias { line: usize, text: String },
}

/// Closed set of labels allowed for one (field, aspect).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelScheme {
    pub field: Field,
    pub aspect: Aspect,
    labels: Vec<String>,
}

impl LabelScheme {
    pub fn new(field: Field, aspect: Aspect, labels: Vec<String>) -> Result<Self, AnnotateError> {
        if labels.is_empty() {
            return Err(AnnotateError::EmptyScheme);
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(AnnotateError::DuplicateLabel(l.clone()));
            }
        }
        Ok(LabelScheme { field, aspect, labels })
    }

    /// Parses a scheme file: one label per line, `#` starts a comment line.
    pub fn parse(field: Field, aspect: Aspect, text: &str) -> Result<Self, AnnotateError> {
        let labels = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect();
        LabelScheme::new(field, aspect, labels)
    }

    pub fn from_file(field: Field, aspect: Aspect, path: &Path) -> Result<Self, AnnotateError> {
        let text = std::fs::read_to_string(path).map_err(|e| AnnotateError::Io(format!("{}: {e}", path.display())))?;
        LabelScheme::parse(field, aspect, &text)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }
}

/// Built-in scheme for the two fully listed (field, aspect) pairs.
pub fn builtin_scheme(field: Field, aspect: Aspect) -> Result<LabelScheme, AnnotateError> {
    match (field, aspect) {
        (Field::CsCl, Aspect::Task) => LabelScheme::parse(field, aspect, CS_CL_TASK),
        (Field::CsLg, Aspect::Method) => {
            let mut scheme = LabelScheme::parse(field, aspect, CS_LG_METHOD)?;
            scheme.labels.push(CS_LG_METHOD_PLACEHOLDER.to_string());
            Ok(scheme)
        }
        _ => Err(AnnotateError::NotEnumerated { field, aspect, count: stated_cardinality(field, aspect) }),
    }
}

/// The cs.LG method labels exactly as listed, without the placeholder.
pub fn printed_cs_lg_methods() -> Vec<String> {
    CS_LG_METHOD.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect()
}

/// Maps abbreviated labels onto canonical ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    map: BTreeMap<String, String>,
}

impl AliasTable {
    pub fn builtin() -> Self {
        AliasTable::parse(BUILTIN_ALIASES).expect("built-in alias table parses")
    }

    /// Tab-separated `alias<TAB>canonical` lines; `#` comments allowed.
    pub fn parse(text: &str) -> Result<Self, AnnotateError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (alias, canonical) =
                line.split_once('\t').ok_or_else(|| AnnotateError::BadAlias { line: i + 1, text: line.to_string() })?;
            map.insert(alias.trim().to_string(), canonical.trim().to_string());
        }
        Ok(AliasTable { map })
    }

    pub fn extend(&mut self, other: AliasTable) {
        self.map.extend(other.map);
    }

    pub fn resolve<'a>(&'a self, label: &'a str) -> &'a str {
        self.map.get(label).map(String::as_str).unwrap_or(label)
    }
}

/// The schemes in force for one field. Aspects may lack a scheme when none
/// is built in and no file was supplied.
#[derive(Debug, Clone)]
pub struct SchemeSet {
    pub field: Field,
    schemes: [Option<LabelScheme>; 3],
    pub aliases: AliasTable,
}

impl SchemeSet {
    /// Built-in schemes where available, overridden by `files`.
    pub fn resolve(field: Field, files: &[(Aspect, LabelScheme)]) -> Self {
        let mut schemes = Aspect::ALL.map(|a| builtin_scheme(field, a).ok());
        for (aspect, scheme) in files {
            schemes[aspect.index()] = Some(scheme.clone());
        }
        SchemeSet { field, schemes, aliases: AliasTable::builtin() }
    }

    pub fn scheme(&self, aspect: Aspect) -> Result<&LabelScheme, AnnotateError> {
        self.schemes[aspect.index()].as_ref().ok_or(AnnotateError::NotEnumerated {
            field: self.field,
            aspect,
            count: stated_cardinality(self.field, aspect),
        })
    }

    /// Canonical form of `raw` if it belongs to the aspect's scheme.
    pub fn validate(&self, aspect: Aspect, raw: &str) -> Result<String, RowRejection> {
        let scheme = self.scheme(aspect).map_err(RowRejection::NoScheme)?;
        let canonical = self.aliases.resolve(raw.trim());
        if scheme.contains(canonical) {
            Ok(canonical.to_string())
        } else {
            Err(RowRejection::UnknownLabel { aspect, label: raw.to_string() })
        }
    }
}

/// Labels one paper received. Absent labels mean the abstract did not say.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Annotation {
    pub paper_id: String,
    pub task: Option<String>,
    pub method: Option<String>,
    pub goal: Option<String>,
}

impl Annotation {
    pub fn label(&self, aspect: Aspect) -> Option<&str> {
        match aspect {
            Aspect::Task => self.task.as_deref(),
            Aspect::Method => self.method.as_deref(),
            Aspect::Goal => self.goal.as_deref(),
        }
    }

    fn label_mut(&mut self, aspect: Aspect) -> &mut Option<String> {
        match aspect {
            Aspect::Task => &mut self.task,
            Aspect::Method => &mut self.method,
            Aspect::Goal => &mut self.goal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RowRejection {
    #[error("unknown {aspect} label `{label}`")]
    UnknownLabel { aspect: Aspect, label: String },
    #[error("duplicate paper_id `{0}`")]
    DuplicatePaperId(String),
    #[error("empty paper_id")]
    EmptyPaperId,
    #[error(transparent)]
    NoScheme(AnnotateError),
    #[error("{0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub reason: RowRejection,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationLoad {
    pub annotations: Vec<Annotation>,
    pub rejected: Vec<RejectedRow>,
}

pub fn load_annotations(path: &Path, schemes: &SchemeSet) -> Result<AnnotationLoad, AnnotateError> {
    let file = std::fs::File::open(path).map_err(|e| AnnotateError::Io(format!("{}: {e}", path.display())))?;
    read_annotations(file, schemes)
}

/// Reads a `paper_id,task,method,goal` table and validates each row.
pub fn read_annotations<R: Read>(reader: R, schemes: &SchemeSet) -> Result<AnnotationLoad, AnnotateError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| AnnotateError::Csv(e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let id_col = column("paper_id").ok_or(AnnotateError::MissingPaperIdColumn)?;
    let aspect_cols: Vec<(Aspect, usize)> = Aspect::ALL.iter().filter_map(|&a| column(a.as_str()).map(|c| (a, c))).collect();

    let mut out = AnnotationLoad::default();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| AnnotateError::Csv(e.to_string()))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&row, id_col, &aspect_cols, schemes) {
            Err(reason) => out.rejected.push(RejectedRow { line, reason }),
            Ok(ann) => {
                if seen.insert(ann.paper_id.clone()) {
                    out.annotations.push(ann);
                } else {
                    out.rejected.push(RejectedRow { line, reason: RowRejection::DuplicatePaperId(ann.paper_id) });
                }
            }
        }
    }
    Ok(out)
}

fn parse_row(
    row: &csv::StringRecord,
    id_col: usize,
    aspect_cols: &[(Aspect, usize)],
    schemes: &SchemeSet,
) -> Result<Annotation, RowRejection> {
    let raw_id = row.get(id_col).unwrap_or("");
    if raw_id.is_empty() {
        return Err(RowRejection::EmptyPaperId);
    }
    let mut ann = Annotation { paper_id: split_version(raw_id).0.to_string(), ..Default::default() };
    for &(aspect, col) in aspect_cols {
        match row.get(col) {
            None | Some("") => {}
            Some(raw) => *ann.label_mut(aspect) = Some(schemes.validate(aspect, raw)?),
        }
    }
    Ok(ann)
}

/// Ranked papers that have no annotation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub unannotated: Vec<String>,
}

/// Inner join on paper_id, in ranked order.
pub fn join(ranked: &[ScoredPaper], annotations: &[Annotation]) -> (Vec<(ScoredPaper, Annotation)>, CoverageReport) {
    let by_id: BTreeMap<&str, &Annotation> = annotations.iter().map(|a| (a.paper_id.as_str(), a)).collect();
    let mut pairs = Vec::new();
    let mut coverage = CoverageReport::default();
    for paper in ranked {
        match by_id.get(paper.paper_id.as_str()) {
            Some(a) => pairs.push((paper.clone(), (*a).clone())),
            None => coverage.unannotated.push(paper.paper_id.clone()),
        }
    }
    (pairs, coverage)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl_set() -> SchemeSet {
        let method = LabelScheme::parse(Field::CsCl, Aspect::Method, "Data\nTransformer\nLanguage Model\n").unwrap();
        let goal = LabelScheme::parse(Field::CsCl, Aspect::Goal, "Difficult task\nBetter accuracy\n").unwrap();
        SchemeSet::resolve(Field::CsCl, &[(Aspect::Method, method), (Aspect::Goal, goal)])
    }

    #[test]
    fn builtin_cardinalities() {
        let task = builtin_scheme(Field::CsCl, Aspect::Task).unwrap();
        assert_eq!(task.len(), stated_cardinality(Field::CsCl, Aspect::Task));
        for l in ["Machine Translation (MT)", "Parsing", "Rest"] {
            assert!(task.contains(l), "{l}");
        }
        let method = builtin_scheme(Field::CsLg, Aspect::Method).unwrap();
        assert_eq!(method.len(), 15);
        for l in ["Reinforcement Learning (RL)", "GAN", "Adversarial"] {
            assert!(method.contains(l), "{l}");
        }
        assert_eq!(printed_cs_lg_methods().len(), 14);
        assert_eq!(method.labels().last().unwrap(), CS_LG_METHOD_PLACEHOLDER);
    }

    #[test]
    fn stated_counts() {
        let counts: Vec<_> = [Field::CsCl, Field::CsLg].iter().flat_map(|&f| Aspect::ALL.map(|a| stated_cardinality(f, a))).collect();
        assert_eq!(counts, vec![15, 28, 7, 13, 15, 13]);
    }

    #[test]
    fn unlisted_schemes_are_not_enumerated() {
        for (f, a) in [(Field::CsCl, Aspect::Method), (Field::CsCl, Aspect::Goal), (Field::CsLg, Aspect::Task), (Field::CsLg, Aspect::Goal)]
        {
            assert!(matches!(builtin_scheme(f, a), Err(AnnotateError::NotEnumerated { .. })));
        }
        assert_eq!(
            builtin_scheme(Field::CsCl, Aspect::Method),
            Err(AnnotateError::NotEnumerated { field: Field::CsCl, aspect: Aspect::Method, count: 28 })
        );
    }

    #[test]
    fn scheme_rejects_duplicates_and_empties() {
        assert_eq!(LabelScheme::parse(Field::CsCl, Aspect::Goal, "# nothing\n"), Err(AnnotateError::EmptyScheme));
        assert_eq!(LabelScheme::parse(Field::CsCl, Aspect::Goal, "A\nB\nA\n"), Err(AnnotateError::DuplicateLabel("A".into())));
    }

    #[test]
    fn abbreviations_resolve_through_aliases() {
        let csv = "paper_id,task,method,goal\n1810.04805,Text repr.,Transformer,Better accuracy\nIEST,Emotion Det.,Data,Difficult task\n";
        let load = read_annotations(csv.as_bytes(), &cl_set()).unwrap();
        assert!(load.rejected.is_empty(), "{:?}", load.rejected);
        assert_eq!(load.annotations[0].task.as_deref(), Some("Text representations"));
        assert_eq!(load.annotations[1].task.as_deref(), Some("Emotion Detection"));
    }

    #[test]
    fn unknown_label_rejected_with_line() {
        let csv = "paper_id,task\nA,Parsing\nB,Quantum NLP\n";
        let load = read_annotations(csv.as_bytes(), &cl_set()).unwrap();
        assert_eq!(load.annotations.len(), 1);
        assert_eq!(
            load.rejected,
            vec![RejectedRow { line: 3, reason: RowRejection::UnknownLabel { aspect: Aspect::Task, label: "Quantum NLP".into() } }]
        );
    }

    #[test]
    fn second_duplicate_rejected() {
        let csv = "paper_id,task\nA,Parsing\nA,Speech\n";
        let load = read_annotations(csv.as_bytes(), &cl_set()).unwrap();
        assert_eq!(load.annotations.len(), 1);
        assert_eq!(load.annotations[0].task.as_deref(), Some("Parsing"));
        assert_eq!(load.rejected[0].reason, RowRejection::DuplicatePaperId("A".into()));
    }

    #[test]
    fn missing_id_column_is_fatal() {
        let csv = "id,task\nA,Parsing\n";
        assert_eq!(read_annotations(csv.as_bytes(), &cl_set()), Err(AnnotateError::MissingPaperIdColumn));
    }

    #[test]
    fn empty_cells_are_absent_labels() {
        let csv = "paper_id,task,method,goal\nA,,,\n";
        let load = read_annotations(csv.as_bytes(), &cl_set()).unwrap();
        assert_eq!(load.annotations[0], Annotation { paper_id: "A".into(), ..Default::default() });
    }

    #[test]
    fn label_for_unlisted_scheme_is_rejected() {
        let set = SchemeSet::resolve(Field::CsCl, &[]);
        let load = read_annotations("paper_id,task,method\nA,Parsing,Transformer\nB,Speech,\n".as_bytes(), &set).unwrap();
        assert_eq!(load.annotations.len(), 1);
        assert!(matches!(load.rejected[0].reason, RowRejection::NoScheme(AnnotateError::NotEnumerated { .. })));
    }

    #[test]
    fn join_reports_coverage() {
        let ranked: Vec<_> = ["a", "b", "c"].iter().map(|id| ScoredPaper::from_window(*id, "", 5, 2, 4.0, 1.0)).collect();
        let ann = |id: &str| Annotation { paper_id: id.into(), ..Default::default() };
        let (pairs, cov) = join(&ranked, &[ann("a"), ann("b"), ann("c")]);
        assert_eq!(pairs.len(), 3);
        assert!(cov.unannotated.is_empty());
        let (pairs, cov) = join(&ranked, &[ann("c"), ann("a")]);
        assert_eq!(pairs.iter().map(|(p, _)| p.paper_id.as_str()).collect::<Vec<_>>(), vec!["a", "c"]);
        assert_eq!(cov.unannotated, vec!["b"]);
        let (pairs, cov) = join(&[], &[ann("a")]);
        assert!(pairs.is_empty() && cov.unannotated.is_empty());
    }
}
