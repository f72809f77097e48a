//! Command-line front end: `project`, `eval`, `analyze` and `match`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 partial failure
//! (some sentences could not be projected).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Deserialize;

use crate::alignment::{maximum_matching, parse_pharaoh, parse_pharaoh_unsized, MergeMode};
use crate::analysis::{relation_table, render_table, TableFormat};
use crate::conllu::{parse_conllu, serialize_conllu, Treebank};
use crate::eval::{effort_report, render_report, render_report_tsv, score};
use crate::morph::{load_lexicon, TagMap};
use crate::projection::{
    parse_provenance, project_treebank, render_provenance, ProjectionOptions, Provenance,
    RootOrder, SentenceAlignment,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

type CliResult = Result<i32, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "treeproj",
    version,
    about = "Project dependency annotations through word alignments and evaluate the result"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project a parsed source treebank onto aligned target sentences
    Project(ProjectArgs),
    /// Score a system treebank against gold
    Eval(EvalArgs),
    /// Per-relation error table of a system treebank
    Analyze(AnalyzeArgs),
    /// Print the maximum matching of each alignment line
    Match(MatchArgs),
}

#[derive(Args, Debug, Default)]
struct ProjectArgs {
    /// TOML file with default values for the options below
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parsed source treebank (CoNLL-U)
    #[arg(long)]
    source: Option<PathBuf>,
    /// Target sentences, one per line, tokens separated by whitespace
    #[arg(long)]
    target: Option<PathBuf>,
    /// Pharaoh alignments, one line per sentence pair
    #[arg(long)]
    alignments: Option<PathBuf>,
    /// Alignments of a second aligner run, merged with --merge
    #[arg(long)]
    reverse_alignments: Option<PathBuf>,
    /// Morphological lexicon (FORM, LEMMA, RAWTAG)
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Raw tag to universal tag table; the bundled table is used otherwise
    #[arg(long)]
    tag_map: Option<PathBuf>,
    /// Gold treebank to score the projection against
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Projected treebank to write
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Provenance report; defaults to <output>.provenance.tsv
    #[arg(long)]
    provenance: Option<PathBuf>,
    /// union or intersection
    #[arg(long)]
    merge: Option<MergeMode>,
    /// Alignment pairs are target-source
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    swap: Option<bool>,
    /// filter-first or root-first
    #[arg(long)]
    root_order: Option<RootOrder>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    gold: PathBuf,
    system: PathBuf,
    /// Also write the scores as TSV
    #[arg(long)]
    tsv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    gold: PathBuf,
    system: PathBuf,
    /// Provenance report of the projection, summarised alongside the table
    #[arg(long)]
    provenance: Option<PathBuf>,
    /// text or tsv
    #[arg(long, default_value = "text")]
    format: TableFormat,
}

#[derive(Args, Debug)]
struct MatchArgs {
    alignments: PathBuf,
    /// Source sentence length; inferred from the pairs when omitted
    #[arg(long, requires = "tgt_len")]
    src_len: Option<usize>,
    /// Target sentence length
    #[arg(long, requires = "src_len")]
    tgt_len: Option<usize>,
}

/// Values read from a `--config` file. Relative paths are taken relative to
/// the file's directory.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    source: Option<PathBuf>,
    target: Option<PathBuf>,
    alignments: Option<PathBuf>,
    reverse_alignments: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    tag_map: Option<PathBuf>,
    gold: Option<PathBuf>,
    output: Option<PathBuf>,
    provenance: Option<PathBuf>,
    merge: Option<MergeMode>,
    swap: Option<bool>,
    root_order: Option<RootOrder>,
}

impl ConfigFile {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ConfigFile = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.source,
            &mut cfg.target,
            &mut cfg.alignments,
            &mut cfg.reverse_alignments,
            &mut cfg.lexicon,
            &mut cfg.tag_map,
            &mut cfg.gold,
            &mut cfg.output,
            &mut cfg.provenance,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Fully resolved settings of a `project` run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub source: PathBuf,
    pub target: PathBuf,
    pub alignments: PathBuf,
    pub reverse_alignments: Option<PathBuf>,
    pub lexicon: PathBuf,
    pub tag_map: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub output: PathBuf,
    pub provenance: PathBuf,
    pub options: ProjectionOptions,
}

impl PipelineConfig {
    /// Flags win over the config file, which wins over defaults.
    fn resolve(args: ProjectArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let required = |flag: Option<PathBuf>, cfg: Option<PathBuf>, name: &str| {
            flag.or(cfg)
                .ok_or_else(|| CliError::Usage(format!("missing required --{name}")))
        };
        let output = required(args.output, file.output, "output")?;
        let provenance = args.provenance.or(file.provenance).unwrap_or_else(|| {
            let mut p = output.clone().into_os_string();
            p.push(".provenance.tsv");
            PathBuf::from(p)
        });
        let config = PipelineConfig {
            source: required(args.source, file.source, "source")?,
            target: required(args.target, file.target, "target")?,
            alignments: required(args.alignments, file.alignments, "alignments")?,
            reverse_alignments: args.reverse_alignments.or(file.reverse_alignments),
            lexicon: required(args.lexicon, file.lexicon, "lexicon")?,
            tag_map: args.tag_map.or(file.tag_map),
            gold: args.gold.or(file.gold),
            output,
            provenance,
            options: ProjectionOptions {
                merge: args.merge.or(file.merge).unwrap_or_default(),
                swap: args.swap.or(file.swap).unwrap_or(false),
                order: args.root_order.or(file.root_order).unwrap_or_default(),
            },
        };
        config.check_inputs()?;
        Ok(config)
    }

    fn check_inputs(&self) -> Result<(), CliError> {
        let inputs = [
            Some(&self.source),
            Some(&self.target),
            Some(&self.alignments),
            self.reverse_alignments.as_ref(),
            Some(&self.lexicon),
            self.tag_map.as_ref(),
            self.gold.as_ref(),
        ];
        for path in inputs.into_iter().flatten() {
            if !path.is_file() {
                return Err(CliError::Usage(format!(
                    "input file not found: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_treebank(path: &Path) -> Result<Treebank, CliError> {
    parse_conllu(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write output: {e}"))
}

fn errors_manifest_path(output: &Path) -> PathBuf {
    let mut p = output.as_os_str().to_owned();
    p.push(".errors.tsv");
    PathBuf::from(p)
}

fn cmd_project(args: ProjectArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = PipelineConfig::resolve(args)?;
    for (key, value) in config.options.metadata() {
        info!("{key} = {value}");
    }
    info!("source = {}", config.source.display());
    info!("target = {}", config.target.display());
    info!("alignments = {}", config.alignments.display());
    info!("lexicon = {}", config.lexicon.display());

    let source = read_treebank(&config.source)?;
    let targets: Vec<Vec<String>> = read(&config.target)?
        .lines()
        .map(|l| l.split_whitespace().map(str::to_owned).collect())
        .collect();
    let forward = read(&config.alignments)?;
    let mut alignments: Vec<SentenceAlignment> =
        forward.lines().map(SentenceAlignment::new).collect();
    if let Some(path) = &config.reverse_alignments {
        let backward = read(path)?;
        let backward: Vec<&str> = backward.lines().collect();
        if backward.len() != alignments.len() {
            return Err(CliError::Data(format!(
                "{} has {} lines, {} has {}",
                config.alignments.display(),
                alignments.len(),
                path.display(),
                backward.len()
            )));
        }
        for (a, b) in alignments.iter_mut().zip(backward) {
            a.backward = Some(b.to_owned());
        }
    }
    let tag_map = match &config.tag_map {
        Some(path) => TagMap::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => TagMap::builtin(),
    };
    let (lexicon, _warnings) = load_lexicon(&config.lexicon, &tag_map)
        .map_err(|e| CliError::Data(format!("{}: {e}", config.lexicon.display())))?;

    let projection = project_treebank(&source, &targets, &alignments, &lexicon, &config.options)
        .map_err(|e| CliError::Data(e.to_string()))?;

    write(&config.output, &serialize_conllu(&projection.treebank))?;
    write(
        &config.provenance,
        &render_provenance(&projection.provenance, &config.options.metadata()),
    )?;

    let count = |flag| -> usize { projection.provenance.iter().map(|p| p.count(flag)).sum() };
    writeln!(
        out,
        "projected {} of {} sentences: {} matched, {} unmatched, {} root tokens",
        projection.treebank.len(),
        source.len(),
        count(Provenance::Matched),
        count(Provenance::UnmatchedFallback),
        count(Provenance::ForcedRoot)
    )
    .map_err(out_err)?;

    let manifest = errors_manifest_path(&config.output);
    if !projection.failures.is_empty() {
        let mut text = String::from("sentence\terror\n");
        for f in &projection.failures {
            text.push_str(&format!("{}\t{}\n", f.ordinal, f.error));
            writeln!(err, "sentence {}: {}", f.ordinal, f.error).map_err(out_err)?;
        }
        write(&manifest, &text)?;
        writeln!(err, "error manifest written to {}", manifest.display()).map_err(out_err)?;
        return Ok(EXIT_PARTIAL);
    }
    if manifest.exists() {
        let _ = fs::remove_file(&manifest);
    }

    if let Some(gold_path) = &config.gold {
        let gold = read_treebank(gold_path)?;
        let outcome = score(&gold, &projection.treebank).map_err(|e| CliError::Data(e.to_string()))?;
        write!(out, "\n{}", render_report(&outcome.report)).map_err(out_err)?;
    }
    Ok(EXIT_OK)
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let gold = read_treebank(&args.gold)?;
    let system = read_treebank(&args.system)?;
    let outcome = score(&gold, &system).map_err(|e| CliError::Data(e.to_string()))?;
    for ex in &outcome.excluded {
        writeln!(err, "sentence {} excluded: {}", ex.ordinal, ex.mismatch).map_err(out_err)?;
    }
    write!(out, "{}", render_report(&outcome.report)).map_err(out_err)?;
    writeln!(
        out,
        "\nExcluded sentences: {} of {}\n",
        outcome.excluded.len(),
        outcome.sentences
    )
    .map_err(out_err)?;
    write!(out, "{}", effort_report(&outcome.report)).map_err(out_err)?;
    if let Some(path) = &args.tsv {
        write(path, &render_report_tsv(&outcome.report))?;
    }
    Ok(EXIT_OK)
}

fn cmd_analyze(args: AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let gold = read_treebank(&args.gold)?;
    let system = read_treebank(&args.system)?;
    let table = relation_table(&gold, &system).map_err(|e| CliError::Data(e.to_string()))?;
    write!(out, "{}", render_table(&table, args.format)).map_err(out_err)?;
    if let Some(path) = &args.provenance {
        let report = parse_provenance(&read(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let count = |flag| -> usize { report.iter().map(|p| p.count(flag)).sum() };
        let line = format!(
            "provenance: {} matched, {} unmatched-fallback, {} forced-root",
            count(Provenance::Matched),
            count(Provenance::UnmatchedFallback),
            count(Provenance::ForcedRoot)
        );
        match args.format {
            TableFormat::Text => writeln!(out, "{line}"),
            TableFormat::Tsv => writeln!(out, "# {line}"),
        }
        .map_err(out_err)?;
    }
    Ok(EXIT_OK)
}

fn cmd_match(args: MatchArgs, out: &mut dyn Write) -> CliResult {
    let text = read(&args.alignments)?;
    for (idx, line) in text.lines().enumerate() {
        let graph = match (args.src_len, args.tgt_len) {
            (Some(n_src), Some(n_tgt)) => parse_pharaoh(line, n_src, n_tgt),
            _ => parse_pharaoh_unsized(line),
        }
        .map_err(|e| CliError::Data(format!("line {}: {e}", idx + 1)))?;
        let m = maximum_matching(&graph);
        writeln!(out, "{}\t{}\t{}", idx + 1, m.len(), m.to_pharaoh()).map_err(out_err)?;
    }
    Ok(EXIT_OK)
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Project(a) => cmd_project(a, out, err),
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Match(a) => cmd_match(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}
