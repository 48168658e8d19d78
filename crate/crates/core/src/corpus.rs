//! Paper records and the line-delimited corpus store.
//!
//! A corpus file holds one JSON object per line. Loading is lenient per line
//! (bad lines are skipped and reported) but strict per corpus (all records
//! must belong to one field).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};

/// Arxiv subject area a corpus is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "cs.CL")]
    CsCl,
    #[serde(rename = "cs.LG")]
    CsLg,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::CsCl => "cs.CL",
            Field::CsLg => "cs.LG",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cs.CL" | "cs.cl" | "CS_CL" => Ok(Field::CsCl),
            "cs.LG" | "cs.lg" | "CS_LG" => Ok(Field::CsLg),
            other => Err(format!("unknown field `{other}` (expected cs.CL or cs.LG)")),
        }
    }
}

/// One paper's metadata plus an optional citation snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    pub abstract_text: String,
    pub authors: Vec<String>,
    pub field: Field,
    pub submitted: NaiveDate,
    pub citation_count: Option<u64>,
    pub citation_asof: Option<NaiveDate>,
}

impl PaperRecord {
    pub fn has_citations(&self) -> bool {
        self.citation_count.is_some()
    }
}

/// Wire form of a corpus line. Unknown keys are ignored on read.
#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    id: String,
    title: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
    authors: Vec<String>,
    field: String,
    submitted: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    citations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    citations_asof: Option<String>,
}

impl From<&PaperRecord> for RecordLine {
    fn from(r: &PaperRecord) -> Self {
        RecordLine {
            id: r.paper_id.clone(),
            title: r.title.clone(),
            abstract_text: r.abstract_text.clone(),
            authors: r.authors.clone(),
            field: r.field.as_str().to_string(),
            submitted: r.submitted.format("%Y-%m-%d").to_string(),
            citations: r.citation_count,
            citations_asof: r.citation_asof.map(|d| d.format("%Y-%m-%d").to_string()),
        }
    }
}

/// Inclusive range of acceptable submission dates.
#[derive(Debug, Clone, Copy)]
pub struct DateValidity {
    pub earliest: NaiveDate,
    pub latest: NaiveDate,
}

impl Default for DateValidity {
    fn default() -> Self {
        DateValidity { earliest: NaiveDate::from_ymd_opt(1991, 1, 1).expect("valid constant date"), latest: Utc::now().date_naive() }
    }
}

/// Why a single record failed validation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Syntax(String),
    #[error("empty paper id")]
    EmptyId,
    #[error("malformed date `{0}`")]
    MalformedDate(String),
    #[error("submission date {0} outside valid range")]
    DateOutOfRange(NaiveDate),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("citations and citations_asof must be given together")]
    CitationPairing,
}

pub fn parse_date(s: &str) -> Result<NaiveDate, RecordError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| RecordError::MalformedDate(s.to_string()))
}

/// Splits a trailing `vN` version suffix off an Arxiv identifier.
///
/// Identifiers without a suffix are treated as version 0.
pub fn split_version(id: &str) -> (&str, u32) {
    if let Some(pos) = id.rfind('v') {
        let (base, suffix) = (&id[..pos], &id[pos + 1..]);
        let base_ends_in_digit = base.chars().last().is_some_and(|c| c.is_ascii_digit());
        if base_ends_in_digit && !suffix.is_empty() && suffix.chars().all(|c| c.is_ascii_digit()) {
            if let Ok(v) = suffix.parse() {
                return (base, v);
            }
        }
    }
    (id, 0)
}

impl PaperRecord {
    /// Validates a wire record. Returns the record (with its base id) and its version.
    fn from_line(line: RecordLine, validity: &DateValidity) -> Result<(PaperRecord, u32), RecordError> {
        let raw_id = line.id.trim();
        if raw_id.is_empty() {
            return Err(RecordError::EmptyId);
        }
        let (base, version) = split_version(raw_id);
        let field = line.field.parse::<Field>().map_err(|_| RecordError::UnknownField(line.field.clone()))?;
        let submitted = parse_date(&line.submitted)?;
        if submitted < validity.earliest || submitted > validity.latest {
            return Err(RecordError::DateOutOfRange(submitted));
        }
        let citation_asof = line.citations_asof.as_deref().map(parse_date).transpose()?;
        if line.citations.is_some() != citation_asof.is_some() {
            return Err(RecordError::CitationPairing);
        }
        Ok((
            PaperRecord {
                paper_id: base.to_string(),
                title: line.title,
                abstract_text: line.abstract_text,
                authors: line.authors,
                field,
                submitted,
                citation_count: line.citations,
                citation_asof,
            },
            version,
        ))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: record field {found} does not match corpus field {expected}")]
    FieldMismatch { line: usize, expected: Field, found: Field },
    #[error("cannot infer the corpus field from a file with no valid records; supply it explicitly")]
    UnknownCorpusField,
    #[error("paper {0} belongs to a different field than the corpus")]
    RecordFieldMismatch(String),
    #[error("duplicate paper id {0}")]
    DuplicateId(String),
}

/// A single-field collection of papers keyed by base Arxiv id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    field: Field,
    records: BTreeMap<String, PaperRecord>,
}

impl Corpus {
    pub fn new(field: Field) -> Self {
        Corpus { field, records: BTreeMap::new() }
    }

    /// Builds a corpus from records, rejecting duplicates and foreign fields.
    pub fn from_records(field: Field, records: impl IntoIterator<Item = PaperRecord>) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new(field);
        for r in records {
            corpus.insert(r)?;
        }
        Ok(corpus)
    }

    pub fn insert(&mut self, record: PaperRecord) -> Result<(), CorpusError> {
        if record.field != self.field {
            return Err(CorpusError::RecordFieldMismatch(record.paper_id));
        }
        if self.records.contains_key(&record.paper_id) {
            return Err(CorpusError::DuplicateId(record.paper_id));
        }
        self.records.insert(record.paper_id.clone(), record);
        Ok(())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.records.get(paper_id)
    }

    /// Records in paper_id order.
    pub fn records(&self) -> impl Iterator<Item = &PaperRecord> {
        self.records.values()
    }

    pub(crate) fn records_mut(&mut self) -> impl Iterator<Item = &mut PaperRecord> {
        self.records.values_mut()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    Invalid(RecordError),
    /// A higher version (or an equal-version record that sorts later) of the same paper won.
    Superseded {
        kept_version: u32,
    },
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::Invalid(e) => write!(f, "{e}"),
            SkipReason::Superseded { kept_version } => write!(f, "superseded by version {kept_version}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: SkipReason,
}

/// Lines that did not make it into the corpus. Every skipped line appears once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub skipped: Vec<SkippedLine>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.skipped.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Expected corpus field; inferred from the first valid record when absent.
    pub field: Option<Field>,
    pub validity: DateValidity,
}

pub fn load_corpus(path: &Path, options: &LoadOptions) -> Result<(Corpus, LoadReport), CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    read_corpus(file, options).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io { path: path.display().to_string(), source },
        other => other,
    })
}

/// Reads a corpus from any line-delimited source.
pub fn read_corpus<R: Read>(reader: R, options: &LoadOptions) -> Result<(Corpus, LoadReport), CorpusError> {
    struct Candidate {
        line: usize,
        version: u32,
        // canonical serialization, used to break same-version ties independent of file order
        canonical: String,
        record: PaperRecord,
    }

    let mut report = LoadReport::default();
    let mut field = options.field;
    let mut best: BTreeMap<String, Candidate> = BTreeMap::new();

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io { path: "<input>".into(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RecordLine>(&line)
            .map_err(|e| RecordError::Syntax(e.to_string()))
            .and_then(|l| PaperRecord::from_line(l, &options.validity));
        let (record, version) = match parsed {
            Ok(v) => v,
            Err(e) => {
                report.skipped.push(SkippedLine { line: line_no, reason: SkipReason::Invalid(e) });
                continue;
            }
        };
        match field {
            None => field = Some(record.field),
            Some(f) if f != record.field => return Err(CorpusError::FieldMismatch { line: line_no, expected: f, found: record.field }),
            Some(_) => {}
        }
        let canonical = serde_json::to_string(&RecordLine::from(&record)).expect("record serializes");
        let candidate = Candidate { line: line_no, version, canonical, record };
        let id = candidate.record.paper_id.clone();
        match best.remove(&id) {
            None => {
                best.insert(id, candidate);
            }
            Some(current) => {
                let (winner, loser) = if (candidate.version, &candidate.canonical) > (current.version, &current.canonical) {
                    (candidate, current)
                } else {
                    (current, candidate)
                };
                report.skipped.push(SkippedLine { line: loser.line, reason: SkipReason::Superseded { kept_version: winner.version } });
                best.insert(id, winner);
            }
        }
    }

    report.skipped.sort_by_key(|s| s.line);
    let field = field.ok_or(CorpusError::UnknownCorpusField)?;
    let records = best.into_values().map(|c| (c.record.paper_id.clone(), c.record)).collect();
    Ok((Corpus { field, records }, report))
}

/// Writes the corpus in paper_id order. Returns the number of records written.
pub fn write_corpus<W: Write>(corpus: &Corpus, writer: W) -> std::io::Result<usize> {
    let mut w = BufWriter::new(writer);
    for record in corpus.records() {
        serde_json::to_writer(&mut w, &RecordLine::from(record))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(corpus.len())
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<usize, CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    write_corpus(corpus, file).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BERT_V1: &str =
        r#"{"id":"1810.04805v1","title":"BERT","abstract":"v1","authors":["Jacob Devlin"],"field":"cs.CL","submitted":"2018-10-11"}"#;
    const BERT_V2: &str = r#"{"id":"1810.04805v2","title":"BERT","abstract":"v2","authors":["Jacob Devlin"],"field":"cs.CL","submitted":"2018-10-11","citations":20,"citations_asof":"2018-12-31"}"#;

    fn load(text: &str) -> Result<(Corpus, LoadReport), CorpusError> {
        read_corpus(text.as_bytes(), &LoadOptions::default())
    }

    #[test]
    fn single_record_maps_fields_verbatim() {
        let (c, report) = load(BERT_V2).unwrap();
        assert!(report.is_clean());
        assert_eq!(c.len(), 1);
        let r = c.get("1810.04805").unwrap();
        assert_eq!(r.title, "BERT");
        assert_eq!(r.authors, vec!["Jacob Devlin"]);
        assert_eq!(r.field, Field::CsCl);
        assert_eq!(r.submitted, NaiveDate::from_ymd_opt(2018, 10, 11).unwrap());
        assert_eq!(r.citation_count, Some(20));
    }

    #[test]
    fn highest_version_wins_in_either_order() {
        for text in [format!("{BERT_V1}\n{BERT_V2}\n"), format!("{BERT_V2}\n{BERT_V1}\n")] {
            let (c, report) = load(&text).unwrap();
            assert_eq!(c.len(), 1);
            assert_eq!(c.get("1810.04805").unwrap().abstract_text, "v2");
            assert_eq!(report.skipped.len(), 1);
            assert_eq!(report.skipped[0].reason, SkipReason::Superseded { kept_version: 2 });
        }
    }

    #[test]
    fn impossible_date_is_skipped_and_reported() {
        let bad = r#"{"id":"x","title":"","abstract":"","authors":[],"field":"cs.CL","submitted":"2019-13-40"}"#;
        let (c, report) = load(&format!("{BERT_V2}\n{bad}\n")).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(
            report.skipped,
            vec![SkippedLine { line: 2, reason: SkipReason::Invalid(RecordError::MalformedDate("2019-13-40".into())) }]
        );
    }

    #[test]
    fn out_of_range_and_unpaired_citation_fields_are_skipped() {
        let old = r#"{"id":"a","title":"","abstract":"","authors":[],"field":"cs.CL","submitted":"1989-01-01"}"#;
        let unpaired = r#"{"id":"b","title":"","abstract":"","authors":[],"field":"cs.CL","submitted":"2018-01-01","citations":3}"#;
        let future = r#"{"id":"c","title":"","abstract":"","authors":[],"field":"cs.CL","submitted":"9999-01-01"}"#;
        let (c, report) = load(&format!("{old}\nnot json\n{unpaired}\n{future}\n{BERT_V2}")).unwrap();
        assert_eq!(c.len(), 1);
        let lines: Vec<_> = report.skipped.iter().map(|s| s.line).collect();
        assert_eq!(lines, vec![1, 2, 3, 4]);
        assert_eq!(report.skipped[2].reason, SkipReason::Invalid(RecordError::CitationPairing));
    }

    #[test]
    fn mixed_fields_are_fatal() {
        let lg = BERT_V2.replace("cs.CL", "cs.LG").replace("1810.04805", "1812.00001");
        assert!(matches!(load(&format!("{BERT_V2}\n{lg}")), Err(CorpusError::FieldMismatch { line: 2, .. })));
        let opts = LoadOptions { field: Some(Field::CsLg), ..Default::default() };
        assert!(matches!(read_corpus(BERT_V2.as_bytes(), &opts), Err(CorpusError::FieldMismatch { line: 1, .. })));
    }

    #[test]
    fn unknown_keys_are_ignored() {
        let extra = BERT_V2.replace("\"title\"", "\"venue\":\"NAACL\",\"title\"");
        let (c, _) = load(&extra).unwrap();
        let mut out = Vec::new();
        write_corpus(&c, &mut out).unwrap();
        assert!(!String::from_utf8(out).unwrap().contains("venue"));
    }

    #[test]
    fn empty_corpus_writes_empty_file() {
        let mut out = Vec::new();
        assert_eq!(write_corpus(&Corpus::new(Field::CsLg), &mut out).unwrap(), 0);
        assert!(out.is_empty());
        assert!(matches!(load(""), Err(CorpusError::UnknownCorpusField)));
        let opts = LoadOptions { field: Some(Field::CsLg), ..Default::default() };
        let (c, _) = read_corpus(&out[..], &opts).unwrap();
        assert_eq!(c, Corpus::new(Field::CsLg));
    }

    #[test]
    fn absent_citation_fields_are_omitted() {
        let (c, _) = load(BERT_V1).unwrap();
        let mut out = Vec::new();
        write_corpus(&c, &mut out).unwrap();
        let golden = "{\"id\":\"1810.04805\",\"title\":\"BERT\",\"abstract\":\"v1\",\"authors\":[\"Jacob Devlin\"],\"field\":\"cs.CL\",\"submitted\":\"2018-10-11\"}\n";
        assert_eq!(String::from_utf8(out.clone()).unwrap(), golden);
        let (again, _) = read_corpus(&out[..], &LoadOptions::default()).unwrap();
        assert_eq!(again.get("1810.04805").unwrap().citation_count, None);
        assert_eq!(again.get("1810.04805").unwrap().citation_asof, None);
    }

    #[test]
    fn version_suffixes() {
        assert_eq!(split_version("1810.04805v12"), ("1810.04805", 12));
        assert_eq!(split_version("1810.04805"), ("1810.04805", 0));
        assert_eq!(split_version("hep-th/9901001v2"), ("hep-th/9901001", 2));
        assert_eq!(split_version("solv-int/9901001"), ("solv-int/9901001", 0));
        assert_eq!(split_version("review"), ("review", 0));
    }
}
