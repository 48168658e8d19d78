//! Command-line front end.
//!
//! Every stage reads and writes the documented file formats, so
//! `score | rank | stats | report` produces the same bytes as `pipeline`.
//! Exit codes: 0 success, 1 bad input or flags, 2 network or filesystem failure.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::NaiveDate;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytics::{category_stats, distribution, CategoryStats, DistributionRow};
use crate::annotate::{join, read_annotations, AliasTable, AnnotateError, Annotation, Aspect, LabelScheme, SchemeSet};
use crate::corpus::{read_corpus, write_corpus, Corpus, CorpusError, DateValidity, Field, LoadOptions, LoadReport};
use crate::harvest::clock::SystemClock;
use crate::harvest::transport::{HttpTransport, OfflineTransport, Transport};
use crate::harvest::{
    attach_citations, write_snapshots, HarvestConfig, HarvestError, Harvester, MetadataReport, Mode, DEFAULT_CITATION_ENDPOINT,
    DEFAULT_METADATA_ENDPOINT,
};
use crate::ranking::{ineligible, sort_ranked, top_k, RankingConfig};
use crate::report::{render_bar_chart, render_table, RankedRow, TableFormat};
use crate::scoring::{score_corpus, ExclusionReport, ScoredPaper, ScoringConfig, StdMode};

#[derive(Debug, Parser)]
#[command(name = "trendscope", version, about = "Rank preprints by time-normalized citations and summarise their categories")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Suppress informational diagnostics on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    /// Write data output to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Harvest paper metadata from an OAI-PMH listing endpoint.
    Harvest(HarvestArgs),
    /// Look up citation counts and attach them to a corpus.
    Citations(CitationArgs),
    /// Compute time-window z-scores for a corpus.
    Score(ScoreArgs),
    /// Keep the top-K scored papers.
    Rank(RankArgs),
    /// Check an annotation file against the label schemes.
    ValidateAnnotations(ValidateArgs),
    /// Annotation utilities.
    Annotate {
        #[command(subcommand)]
        command: AnnotateCommand,
    },
    /// Join ranked papers with annotations and compute category statistics.
    Stats(StatsArgs),
    /// Render ranked lists, statistics or distributions.
    Report(ReportArgs),
    /// Run score, rank, stats and report in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
enum AnnotateCommand {
    /// Same as `validate-annotations`.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct NetworkArgs {
    /// Maximum requests per second.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Retries per request after the first attempt.
    #[arg(long, default_value_t = 3)]
    retries: u32,
    /// Directory holding raw responses.
    #[arg(long, value_name = "DIR")]
    cache_dir: PathBuf,
    /// Read only from the cache; never touch the network.
    #[arg(long)]
    replay: bool,
}

#[derive(Debug, Args)]
struct HarvestArgs {
    #[arg(long, value_name = "YYYY-MM-DD")]
    from: NaiveDate,
    #[arg(long, value_name = "YYYY-MM-DD")]
    to: NaiveDate,
    #[arg(long)]
    field: Field,
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long, default_value = DEFAULT_METADATA_ENDPOINT)]
    metadata_endpoint: String,
    /// OAI set to list.
    #[arg(long, default_value = "cs")]
    set: String,
}

#[derive(Debug, Args)]
struct CitationArgs {
    /// Corpus file ("-" for standard input).
    #[arg(long, default_value = "-")]
    corpus: PathBuf,
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long, default_value = DEFAULT_CITATION_ENDPOINT)]
    citation_endpoint: String,
    /// Snapshot date (default: today when live, latest recorded when replaying).
    #[arg(long, value_name = "YYYY-MM-DD")]
    asof: Option<NaiveDate>,
    /// Concurrent lookups.
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    /// Also write the snapshot map (one JSON object per line) here.
    #[arg(long, value_name = "PATH")]
    snapshots: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StdArg {
    Population,
    Sample,
}

#[derive(Debug, Args)]
struct ScoringFlags {
    /// Half-width of the submission-date window, in days.
    #[arg(long, default_value_t = 10)]
    window_days: u32,
    /// Papers with fewer citations are not scored (they still count towards windows).
    #[arg(long, default_value_t = 4)]
    min_citations: u64,
    #[arg(long, value_enum, default_value_t = StdArg::Population)]
    std: StdArg,
    /// Leave each paper out of its own window.
    #[arg(long)]
    no_self: bool,
}

impl ScoringFlags {
    fn config(&self) -> ScoringConfig {
        ScoringConfig {
            half_width_days: self.window_days,
            min_citations: self.min_citations,
            std_mode: match self.std {
                StdArg::Population => StdMode::Population,
                StdArg::Sample => StdMode::Sample,
            },
            include_self: !self.no_self,
        }
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Corpus file ("-" for standard input).
    #[arg(long, default_value = "-")]
    corpus: PathBuf,
    /// Expected corpus field (inferred from the records when omitted).
    #[arg(long)]
    field: Option<Field>,
    #[command(flatten)]
    scoring: ScoringFlags,
    /// Write the exclusion report (one JSON object per line) here.
    #[arg(long, value_name = "PATH")]
    exclusions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Scored papers ("-" for standard input).
    #[arg(long, default_value = "-")]
    input: PathBuf,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    top: u64,
    /// Reject input containing papers below this citation count.
    #[arg(long, default_value_t = 4)]
    min_citations: u64,
}

#[derive(Debug, Args)]
struct SchemeFlags {
    /// Label scheme file for the task aspect (overrides the built-in one).
    #[arg(long, value_name = "PATH")]
    task_scheme: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    method_scheme: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    goal_scheme: Option<PathBuf>,
    /// Extra `alias<TAB>label` lines, added to the built-in alias table.
    #[arg(long, value_name = "PATH")]
    aliases: Option<PathBuf>,
}

impl SchemeFlags {
    fn resolve(&self, field: Field) -> Result<SchemeSet, Failure> {
        let mut files = Vec::new();
        for (aspect, path) in [(Aspect::Task, &self.task_scheme), (Aspect::Method, &self.method_scheme), (Aspect::Goal, &self.goal_scheme)]
        {
            if let Some(p) = path {
                files.push((aspect, LabelScheme::from_file(field, aspect, p)?));
            }
        }
        let mut set = SchemeSet::resolve(field, &files);
        if let Some(p) = &self.aliases {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Env(format!("{}: {e}", p.display())))?;
            set.aliases.extend(AliasTable::parse(&text)?);
        }
        Ok(set)
    }
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    field: Field,
    /// Annotation table with header `paper_id,task,method,goal`.
    #[arg(long)]
    file: PathBuf,
    #[command(flatten)]
    schemes: SchemeFlags,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Ranked papers ("-" for standard input).
    #[arg(long, default_value = "-")]
    input: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    field: Field,
    #[arg(long, default_value = "task")]
    aspect: Aspect,
    #[command(flatten)]
    schemes: SchemeFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ViewArg {
    Ranked,
    Stats,
    Distribution,
}

#[derive(Debug, Args)]
struct RenderFlags {
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
    /// What to render (default: distribution for svg, ranked otherwise).
    #[arg(long, value_enum)]
    view: Option<ViewArg>,
    /// Chart title for svg output.
    #[arg(long)]
    title: Option<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Output of `stats`, or scored papers ("-" for standard input).
    #[arg(long, default_value = "-")]
    input: PathBuf,
    #[command(flatten)]
    render: RenderFlags,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    field: Option<Field>,
    #[arg(long, default_value = "task")]
    aspect: Aspect,
    #[command(flatten)]
    scoring: ScoringFlags,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    top: u64,
    #[command(flatten)]
    schemes: SchemeFlags,
    #[command(flatten)]
    render: RenderFlags,
}

/// The annotated top-K list for one aspect, as produced by `stats`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub field: Field,
    pub aspect: Aspect,
    pub ranked: Vec<RankedRow>,
    /// Ranked papers with no annotation row.
    pub unannotated: Vec<String>,
    /// Annotated papers without a label for this aspect.
    pub missing_aspect: usize,
    pub categories: Vec<CategoryStats>,
    pub distribution: Vec<DistributionRow>,
}

pub fn analyze(field: Field, aspect: Aspect, ranked: &[ScoredPaper], annotations: &[Annotation]) -> Analysis {
    let (pairs, coverage) = join(ranked, annotations);
    let report = category_stats(&pairs, aspect);
    let by_id: std::collections::HashMap<&str, &Annotation> = annotations.iter().map(|a| (a.paper_id.as_str(), a)).collect();
    Analysis {
        field,
        aspect,
        ranked: ranked.iter().enumerate().map(|(i, p)| RankedRow::new(i + 1, p, by_id.get(p.paper_id.as_str()).copied())).collect(),
        unannotated: coverage.unannotated,
        missing_aspect: report.missing,
        categories: report.stats,
        distribution: distribution(&pairs, aspect),
    }
}

#[derive(Debug)]
enum Failure {
    User(String),
    Env(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::User(_) => 1,
            Failure::Env(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::User(m) | Failure::Env(m) => m,
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => Failure::Env(e.to_string()),
            _ => Failure::User(e.to_string()),
        }
    }
}

impl From<HarvestError> for Failure {
    fn from(e: HarvestError) -> Self {
        if e.is_environmental() {
            Failure::Env(e.to_string())
        } else {
            Failure::User(e.to_string())
        }
    }
}

impl From<AnnotateError> for Failure {
    fn from(e: AnnotateError) -> Self {
        match e {
            AnnotateError::Io(_) => Failure::Env(e.to_string()),
            _ => Failure::User(e.to_string()),
        }
    }
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    out: Option<PathBuf>,
    quiet: bool,
}

impl Io<'_> {
    fn read(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let mut buf = Vec::new();
        if path == Path::new("-") {
            self.stdin.read_to_end(&mut buf).map_err(|e| Failure::Env(format!("reading standard input: {e}")))?;
        } else {
            buf = std::fs::read(path).map_err(|e| Failure::Env(format!("{}: {e}", path.display())))?;
        }
        Ok(buf)
    }

    fn emit(&mut self, bytes: &[u8]) -> Result<(), Failure> {
        match &self.out {
            Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::Env(format!("{}: {e}", p.display()))),
            None => {
                self.stdout.write_all(bytes).and_then(|_| self.stdout.flush()).map_err(|e| Failure::Env(format!("writing output: {e}")))
            }
        }
    }

    fn note(&mut self, msg: impl AsRef<str>) {
        if !self.quiet {
            let _ = writeln!(self.stderr, "{}", msg.as_ref());
        }
    }
}

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    let mut io = Io { stdin, stdout, stderr, out: cli.out.clone(), quiet: cli.quiet };
    match dispatch(cli.command, &mut io) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(io.stderr, "trendscope: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(command: Command, io: &mut Io<'_>) -> Result<(), Failure> {
    match command {
        Command::Harvest(a) => harvest(a, io),
        Command::Citations(a) => citations(a, io),
        Command::Score(a) => score(a, io),
        Command::Rank(a) => rank(a, io),
        Command::ValidateAnnotations(a) | Command::Annotate { command: AnnotateCommand::Validate(a) } => validate(a, io),
        Command::Stats(a) => stats(a, io),
        Command::Report(a) => report(a, io),
        Command::Pipeline(a) => pipeline(a, io),
    }
}

fn harvest_config(field: Field, from: NaiveDate, to: NaiveDate, net: &NetworkArgs) -> HarvestConfig {
    let mut config = HarvestConfig::new(field, from, to, net.cache_dir.clone());
    config.max_requests_per_second = net.rate;
    config.max_retries = net.retries;
    config.mode = if net.replay { Mode::Replay } else { Mode::Live };
    config
}

fn harvester(config: HarvestConfig) -> Result<Harvester, Failure> {
    let transport: Arc<dyn Transport> = match config.mode {
        Mode::Replay => Arc::new(OfflineTransport),
        Mode::Live => Arc::new(HttpTransport::new().map_err(|e| Failure::Env(e.to_string()))?),
    };
    Ok(Harvester::with_parts(config, transport, Arc::new(SystemClock::new()))?)
}

fn describe_metadata(report: &MetadataReport, kept: usize) -> Vec<String> {
    let mut lines = vec![format!(
        "harvested {kept} records from {} page(s); {} in other fields, {} outside the date range, {} deleted",
        report.pages, report.other_field, report.out_of_range, report.deleted
    )];
    lines.extend(report.malformed_pages.iter().map(|(n, e)| format!("malformed page {n}: {e}")));
    lines.extend(report.malformed_records.iter().map(|e| format!("malformed record: {e}")));
    lines
}

fn harvest(a: HarvestArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let mut config = harvest_config(a.field, a.from, a.to, &a.net);
    config.metadata_endpoint = a.metadata_endpoint;
    config.oai_set = a.set;
    let (corpus, report) = harvester(config)?.harvest_metadata()?;
    for line in describe_metadata(&report, corpus.len()) {
        io.note(line);
    }
    io.emit(&corpus_bytes(&corpus))
}

fn corpus_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut out = Vec::new();
    write_corpus(corpus, &mut out).expect("writing to memory");
    out
}

fn load(io: &mut Io<'_>, path: &Path, field: Option<Field>) -> Result<Corpus, Failure> {
    let bytes = io.read(path)?;
    let options = LoadOptions { field, validity: DateValidity::default() };
    let (corpus, report) = read_corpus(&bytes[..], &options)?;
    describe_load(io, &report);
    Ok(corpus)
}

fn describe_load(io: &mut Io<'_>, report: &LoadReport) {
    for s in &report.skipped {
        io.note(format!("corpus line {}: skipped ({})", s.line, s.reason));
    }
}

fn citations(a: CitationArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let corpus = load(io, &a.corpus, None)?;
    let (from, to) = corpus
        .records()
        .fold(None, |acc: Option<(NaiveDate, NaiveDate)>, r| {
            Some(acc.map_or((r.submitted, r.submitted), |(lo, hi)| (lo.min(r.submitted), hi.max(r.submitted))))
        })
        .ok_or_else(|| Failure::User("corpus is empty; nothing to look up".into()))?;
    let mut config = harvest_config(corpus.field(), from, to, &a.net);
    config.citation_endpoint = a.citation_endpoint;
    config.asof = a.asof;
    config.concurrency = a.concurrency;
    config.api_key = std::env::var("CITATION_API_KEY").ok().filter(|k| !k.is_empty());
    config.backoff_base = Duration::from_secs(1);
    let (map, misses) = harvester(config)?.fetch_citations(&corpus)?;
    for m in &misses.misses {
        io.note(format!("no citation data for {}: {:?}", m.paper_id, m.reason));
    }
    io.note(format!("{} of {} papers have citation data", map.len(), corpus.len()));
    if let Some(path) = &a.snapshots {
        let mut buf = Vec::new();
        write_snapshots(&map, &mut buf).expect("writing to memory");
        std::fs::write(path, buf).map_err(|e| Failure::Env(format!("{}: {e}", path.display())))?;
    }
    let (attached, unknown) = attach_citations(&corpus, &map);
    for id in unknown {
        io.note(format!("snapshot for unknown paper {id} ignored"));
    }
    io.emit(&corpus_bytes(&attached))
}

fn scored_jsonl(scored: &[ScoredPaper]) -> Vec<u8> {
    let mut out = Vec::new();
    for s in scored {
        serde_json::to_writer(&mut out, s).expect("scored papers serialize");
        out.push(b'\n');
    }
    out
}

fn score_stage(corpus: &Corpus, config: &ScoringConfig, io: &mut Io<'_>) -> Result<(Vec<ScoredPaper>, ExclusionReport), Failure> {
    let (scored, exclusions) = score_corpus(corpus, config).map_err(|e| Failure::User(e.to_string()))?;
    io.note(format!(
        "scored {} of {} papers; excluded {} without citation data, {} below {} citations, {} with degenerate windows",
        scored.len(),
        corpus.len(),
        exclusions.count(crate::scoring::ExclusionReason::NoCitationData),
        exclusions.count(crate::scoring::ExclusionReason::BelowMinCitations),
        config.min_citations,
        exclusions.count(crate::scoring::ExclusionReason::DegenerateWindow),
    ));
    Ok((scored, exclusions))
}

fn score(a: ScoreArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let corpus = load(io, &a.corpus, a.field)?;
    let (scored, exclusions) = score_stage(&corpus, &a.scoring.config(), io)?;
    if let Some(path) = &a.exclusions {
        let mut buf = Vec::new();
        for e in &exclusions.entries {
            serde_json::to_writer(&mut buf, e).expect("exclusions serialize");
            buf.push(b'\n');
        }
        std::fs::write(path, buf).map_err(|e| Failure::Env(format!("{}: {e}", path.display())))?;
    }
    io.emit(&scored_jsonl(&scored))
}

/// Parses scored papers, checking that each z-score agrees with its window statistics.
pub fn parse_scored(bytes: &[u8]) -> Result<Vec<ScoredPaper>, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("scored input is not UTF-8: {e}"))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: ScoredPaper = serde_json::from_str(line).map_err(|e| format!("scored line {}: {e}", i + 1))?;
        if !(s.window_std > 0.0 && s.window_std.is_finite()) {
            return Err(format!("scored line {}: window_std must be positive", i + 1));
        }
        let expected = (s.citation_count as f64 - s.window_mean) / s.window_std;
        if (expected - s.z_score).abs() > 1e-9 * s.z_score.abs().max(1.0) {
            return Err(format!("scored line {}: z_score {} disagrees with its window statistics ({expected})", i + 1, s.z_score));
        }
        out.push(s);
    }
    Ok(out)
}

fn rank_stage(mut scored: Vec<ScoredPaper>, top: u64, min_citations: u64) -> Result<Vec<ScoredPaper>, Failure> {
    if let Some(bad) = ineligible(&scored, min_citations).first() {
        return Err(Failure::User(format!("{} has {} citations, below the minimum of {min_citations}", bad.paper_id, bad.citation_count)));
    }
    sort_ranked(&mut scored);
    Ok(top_k(&scored, &RankingConfig { k: top as usize }))
}

fn rank(a: RankArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let bytes = io.read(&a.input)?;
    let scored = parse_scored(&bytes).map_err(Failure::User)?;
    let ranked = rank_stage(scored, a.top, a.min_citations)?;
    io.emit(&scored_jsonl(&ranked))
}

fn load_annotations_strict(path: &Path, schemes: &SchemeSet, io: &mut Io<'_>) -> Result<Vec<Annotation>, Failure> {
    let bytes = io.read(path)?;
    let load = read_annotations(&bytes[..], schemes)?;
    if !load.rejected.is_empty() {
        let detail: Vec<String> = load.rejected.iter().map(|r| format!("line {}: {}", r.line, r.reason)).collect();
        return Err(Failure::User(format!("{} rejected annotation row(s):\n  {}", load.rejected.len(), detail.join("\n  "))));
    }
    Ok(load.annotations)
}

fn validate(a: ValidateArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let schemes = a.schemes.resolve(a.field)?;
    let bytes = io.read(&a.file)?;
    let load = read_annotations(&bytes[..], &schemes)?;
    for r in &load.rejected {
        let _ = writeln!(io.stderr, "{}: line {}: {}", a.file.display(), r.line, r.reason);
    }
    io.note(format!("{} valid row(s), {} rejected", load.annotations.len(), load.rejected.len()));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["paper_id", "task", "method", "goal"]).expect("writing to memory");
    for ann in &load.annotations {
        w.write_record([
            ann.paper_id.as_str(),
            ann.task.as_deref().unwrap_or(""),
            ann.method.as_deref().unwrap_or(""),
            ann.goal.as_deref().unwrap_or(""),
        ])
        .expect("writing to memory");
    }
    io.emit(&w.into_inner().expect("flushing to memory"))?;
    if load.rejected.is_empty() {
        Ok(())
    } else {
        Err(Failure::User(format!("{} annotation row(s) rejected", load.rejected.len())))
    }
}

fn analysis_bytes(analysis: &Analysis) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(analysis).expect("analysis serializes");
    out.push(b'\n');
    out
}

fn stats(a: StatsArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let bytes = io.read(&a.input)?;
    let ranked = parse_scored(&bytes).map_err(Failure::User)?;
    let schemes = a.schemes.resolve(a.field)?;
    let annotations = load_annotations_strict(&a.annotations, &schemes, io)?;
    let analysis = analyze(a.field, a.aspect, &ranked, &annotations);
    note_coverage(io, &analysis);
    io.emit(&analysis_bytes(&analysis))
}

fn note_coverage(io: &mut Io<'_>, analysis: &Analysis) {
    if !analysis.unannotated.is_empty() {
        io.note(format!("{} ranked paper(s) have no annotation: {}", analysis.unannotated.len(), analysis.unannotated.join(", ")));
    }
    if analysis.missing_aspect > 0 {
        io.note(format!("{} annotated paper(s) have no {} label", analysis.missing_aspect, analysis.aspect));
    }
}

fn render(analysis: &Analysis, flags: &RenderFlags) -> Result<Vec<u8>, Failure> {
    let view = flags.view.unwrap_or(if flags.format == FormatArg::Svg { ViewArg::Distribution } else { ViewArg::Ranked });
    let table_format = match flags.format {
        FormatArg::Table => TableFormat::Table,
        FormatArg::Csv => TableFormat::Csv,
        FormatArg::Json => TableFormat::Json,
        FormatArg::Svg => {
            if view != ViewArg::Distribution {
                return Err(Failure::User("svg output is only available for the distribution view".into()));
            }
            let title = flags
                .title
                .clone()
                .unwrap_or_else(|| format!("{} distribution in top-{} list in {}", analysis.aspect, analysis.ranked.len(), analysis.field));
            return Ok(render_bar_chart(&analysis.distribution, &title));
        }
    };
    Ok(match view {
        ViewArg::Ranked => render_table(&analysis.ranked, table_format),
        ViewArg::Stats => render_table(&analysis.categories, table_format),
        ViewArg::Distribution => render_table(&analysis.distribution, table_format),
    })
}

fn report(a: ReportArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let bytes = io.read(&a.input)?;
    if let Ok(analysis) = serde_json::from_slice::<Analysis>(&bytes) {
        let out = render(&analysis, &a.render)?;
        return io.emit(&out);
    }
    // plain scored or ranked papers: only the ranked view makes sense
    let scored = parse_scored(&bytes).map_err(|e| Failure::User(format!("input is neither a stats document nor scored papers ({e})")))?;
    let format = match a.render.format {
        FormatArg::Table => TableFormat::Table,
        FormatArg::Csv => TableFormat::Csv,
        FormatArg::Json => TableFormat::Json,
        FormatArg::Svg => return Err(Failure::User("svg output needs a stats document as input".into())),
    };
    if matches!(a.render.view, Some(ViewArg::Stats | ViewArg::Distribution)) {
        return Err(Failure::User("statistics views need a stats document as input".into()));
    }
    let rows: Vec<RankedRow> = scored.iter().enumerate().map(|(i, p)| RankedRow::new(i + 1, p, None)).collect();
    io.emit(&render_table(&rows, format))
}

fn pipeline(a: PipelineArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let corpus = load(io, &a.corpus, a.field)?;
    let config = a.scoring.config();
    let (scored, _) = score_stage(&corpus, &config, io)?;
    let ranked = rank_stage(scored, a.top, config.min_citations)?;
    let schemes = a.schemes.resolve(corpus.field())?;
    let annotations = load_annotations_strict(&a.annotations, &schemes, io)?;
    let analysis = analyze(corpus.field(), a.aspect, &ranked, &annotations);
    note_coverage(io, &analysis);
    let out = render(&analysis, &a.render)?;
    io.emit(&out)
}
