//! Transfer of a source dependency tree onto an aligned target sentence.
//!
//! The target root is chosen first and forced into the final matching; the
//! rest of the alignment is reduced to a maximum matching, and every matched
//! target token inherits the annotation of its source token. Target tokens
//! without a partner hang off the root with an empty relation.

use std::fmt;
use std::str::FromStr;

use log::debug;
use thiserror::Error;

use crate::alignment::{
    filter_by_pos, maximum_matching, parse_pharaoh, remove_incident, AlignmentError,
    AlignmentGraph, MergeMode,
};
use crate::conllu::{validate_tree, Diagnostic, Sentence, Token, Treebank, EMPTY};
use crate::morph::{first_analysis, Analysis, MorphLexicon, UNKNOWN_TAG};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("source sentence has no root")]
    NoRoot,
    #[error("source sentence has several roots: tokens {0:?}")]
    MultipleRoots(Vec<usize>),
    #[error("source sentence is not a tree: {}", join_diagnostics(.0))]
    InvalidSource(Vec<Diagnostic>),
    #[error("target sentence is empty")]
    EmptyTarget,
    #[error("{what}: expected {expected}, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("alignment: {0}")]
    Alignment(#[from] AlignmentError),
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(Diagnostic::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// How a target token received its annotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Matched,
    UnmatchedFallback,
    ForcedRoot,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Matched => "matched",
            Provenance::UnmatchedFallback => "unmatched-fallback",
            Provenance::ForcedRoot => "forced-root",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "matched" => Ok(Provenance::Matched),
            "unmatched-fallback" => Ok(Provenance::UnmatchedFallback),
            "forced-root" => Ok(Provenance::ForcedRoot),
            other => Err(format!("unknown provenance flag {other:?}")),
        }
    }
}

/// Priority tier that located the target root when the source root had no
/// alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootTier {
    SameTag,
    Verb,
    Noun,
    FirstWord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootCase {
    /// The source root had exactly one aligned target.
    SingleEdge,
    /// The source root was unaligned; a target was picked by a reverse scan.
    Unaligned(RootTier),
    /// The source root had several targets; the positionally closest won.
    Closest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootResolution {
    /// `(source position, target position)`, 0-based.
    pub root_pair: (usize, usize),
    /// The input graph with every edge touching the root pair removed.
    pub graph: AlignmentGraph,
    pub case: RootCase,
}

/// Whether PoS filtering runs before or after root resolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootOrder {
    #[default]
    FilterFirst,
    RootFirst,
}

impl fmt::Display for RootOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RootOrder::FilterFirst => "filter-first",
            RootOrder::RootFirst => "root-first",
        })
    }
}

impl FromStr for RootOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "filter-first" => Ok(RootOrder::FilterFirst),
            "root-first" => Ok(RootOrder::RootFirst),
            other => Err(format!(
                "unknown root order {other:?} (expected filter-first or root-first)"
            )),
        }
    }
}

const PUNCT: &str = "PUNCT";

fn source_root(src: &Sentence) -> Result<usize, ProjectionError> {
    match src.root_positions().as_slice() {
        [] => Err(ProjectionError::NoRoot),
        [r] => Ok(*r),
        many => Err(ProjectionError::MultipleRoots(
            many.iter().map(|p| p + 1).collect(),
        )),
    }
}

/// Chooses the target token that will carry the sentence root.
pub fn resolve_root<T: AsRef<str>>(
    src: &Sentence,
    g: &AlignmentGraph,
    tgt_upos: &[T],
) -> Result<RootResolution, ProjectionError> {
    let r = source_root(src)?;
    check_size("graph source size", src.len(), g.n_src())?;
    check_size("target tag count", g.n_tgt(), tgt_upos.len())?;
    if g.n_tgt() == 0 {
        return Err(ProjectionError::EmptyTarget);
    }

    let targets: Vec<usize> = g.targets_of(r).collect();
    let (tgt, case) = match targets.as_slice() {
        [t] => (*t, RootCase::SingleEdge),
        [] => {
            let (t, tier) = scan_for_root(&src.tokens[r].upos, tgt_upos);
            (t, RootCase::Unaligned(tier))
        }
        many => {
            // min_by_key keeps the first minimum, i.e. the smaller index on ties
            let t = *many.iter().min_by_key(|&&t| t.abs_diff(r)).unwrap();
            (t, RootCase::Closest)
        }
    };
    Ok(RootResolution {
        root_pair: (r, tgt),
        graph: remove_incident(g, r, tgt),
        case,
    })
}

/// Reverse scan of the target sentence by tier. Punctuation and unknown
/// tags never satisfy a tag-based tier.
fn scan_for_root<T: AsRef<str>>(src_tag: &str, tgt_upos: &[T]) -> (usize, RootTier) {
    let tiers: [(RootTier, &str); 3] = [
        (RootTier::SameTag, src_tag),
        (RootTier::Verb, "VERB"),
        (RootTier::Noun, "NOUN"),
    ];
    for (tier, wanted) in tiers {
        if wanted == PUNCT || wanted == UNKNOWN_TAG || wanted == EMPTY {
            continue;
        }
        if let Some(t) = (0..tgt_upos.len())
            .rev()
            .find(|&t| tgt_upos[t].as_ref() == wanted)
        {
            return (t, tier);
        }
    }
    (0, RootTier::FirstWord)
}

fn check_size(what: &'static str, expected: usize, found: usize) -> Result<(), ProjectionError> {
    if expected == found {
        Ok(())
    } else {
        Err(ProjectionError::SizeMismatch {
            what,
            expected,
            found,
        })
    }
}

/// One sentence pair ready for projection. `graph` is the alignment after
/// PoS filtering.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionInput<'a> {
    pub src: &'a Sentence,
    pub tgt_forms: &'a [String],
    pub graph: &'a AlignmentGraph,
    pub tgt_analyses: &'a [Analysis],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionResult {
    pub sentence: Sentence,
    pub provenance: Vec<Provenance>,
    pub root_case: RootCase,
}

impl ProjectionInput<'_> {
    fn check(&self) -> Result<(), ProjectionError> {
        let diags = validate_tree(self.src);
        if !diags.is_empty() {
            return Err(ProjectionError::InvalidSource(diags));
        }
        if self.tgt_forms.is_empty() {
            return Err(ProjectionError::EmptyTarget);
        }
        check_size("graph source size", self.src.len(), self.graph.n_src())?;
        check_size("graph target size", self.tgt_forms.len(), self.graph.n_tgt())?;
        check_size(
            "target analysis count",
            self.tgt_forms.len(),
            self.tgt_analyses.len(),
        )
    }

    fn tgt_upos(&self) -> Vec<&str> {
        self.tgt_analyses.iter().map(|a| a.upos.as_str()).collect()
    }
}

/// Projects the source tree onto the target sentence.
pub fn project_sentence(input: &ProjectionInput<'_>) -> Result<ProjectionResult, ProjectionError> {
    input.check()?;
    let root = resolve_root(input.src, input.graph, &input.tgt_upos())?;
    Ok(assemble(input, &root))
}

/// Builds the target sentence from a resolved root and the remaining graph.
fn assemble(input: &ProjectionInput<'_>, root: &RootResolution) -> ProjectionResult {
    let mut matching = maximum_matching(&root.graph);
    let (root_src, root_tgt) = root.root_pair;
    let inserted = matching.insert(root_src, root_tgt);
    debug_assert!(inserted, "root pair endpoints were cleared");

    let src = input.src;
    let n = input.tgt_forms.len();
    let mut tokens = Vec::with_capacity(n);
    let mut provenance = Vec::with_capacity(n);
    for t in 0..n {
        let analysis = &input.tgt_analyses[t];
        let mut token = Token::new(t + 1, input.tgt_forms[t].clone());
        token.lemma = analysis.lemma.clone();
        match matching.source_of(t) {
            Some(s) => {
                let source = &src.tokens[s];
                token.upos = source.upos.clone();
                token.xpos = source.xpos.clone();
                token.feats = source.feats.clone();
                token.deprel = source.deprel.clone();
                token.misc = source.misc.clone();
                token.head = Some(match source.head {
                    Some(0) => 0,
                    Some(h) => matching.target_of(h - 1).unwrap_or(root_tgt) + 1,
                    None => root_tgt + 1,
                });
                provenance.push(if t == root_tgt {
                    Provenance::ForcedRoot
                } else {
                    Provenance::Matched
                });
            }
            None => {
                token.upos = analysis.upos.clone();
                token.head = Some(root_tgt + 1);
                provenance.push(Provenance::UnmatchedFallback);
            }
        }
        tokens.push(token);
    }

    let mut sentence = Sentence::new(tokens);
    if let Some(id) = src.sent_id() {
        sentence.comments.push(format!("# sent_id = {id}"));
    }
    sentence
        .comments
        .push(format!("# text = {}", input.tgt_forms.join(" ")));
    debug_assert!(validate_tree(&sentence).is_empty());

    ProjectionResult {
        sentence,
        provenance,
        root_case: root.case,
    }
}

/// Alignment lines for one sentence pair, as read from Pharaoh files.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SentenceAlignment {
    pub forward: String,
    /// Alignment from a second aligner run, merged per [`MergeMode`].
    pub backward: Option<String>,
}

impl SentenceAlignment {
    pub fn new(forward: impl Into<String>) -> Self {
        SentenceAlignment {
            forward: forward.into(),
            backward: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProjectionOptions {
    pub merge: MergeMode,
    /// Alignment files list target-source instead of source-target pairs.
    pub swap: bool,
    pub order: RootOrder,
}

impl ProjectionOptions {
    /// Key/value pairs recorded alongside projection output.
    pub fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![
            ("merge", self.merge.to_string()),
            ("swap", self.swap.to_string()),
            ("root_order", self.order.to_string()),
        ]
    }
}

fn read_alignment(
    alignment: &SentenceAlignment,
    n_src: usize,
    n_tgt: usize,
    options: &ProjectionOptions,
) -> Result<AlignmentGraph, AlignmentError> {
    let read = |line: &str| {
        if options.swap {
            parse_pharaoh(line, n_tgt, n_src).map(|g| g.transpose())
        } else {
            parse_pharaoh(line, n_src, n_tgt)
        }
    };
    let forward = read(&alignment.forward)?;
    match &alignment.backward {
        Some(line) => forward.merge(&read(line)?, options.merge),
        None => Ok(forward),
    }
}

/// Projects one sentence pair from raw alignment lines: parse, merge, filter
/// and project in the configured order.
pub fn project_pair(
    src: &Sentence,
    tgt_forms: &[String],
    alignment: &SentenceAlignment,
    lexicon: &MorphLexicon,
    options: &ProjectionOptions,
) -> Result<ProjectionResult, ProjectionError> {
    let analyses: Vec<Analysis> = tgt_forms
        .iter()
        .map(|f| first_analysis(lexicon, f))
        .collect();
    let graph = read_alignment(alignment, src.len(), tgt_forms.len(), options)?;
    let src_upos: Vec<&str> = src.tokens.iter().map(|t| t.upos.as_str()).collect();
    let tgt_upos: Vec<&str> = analyses.iter().map(|a| a.upos.as_str()).collect();

    match options.order {
        RootOrder::FilterFirst => {
            let filtered = filter_by_pos(&graph, &src_upos, &tgt_upos)?;
            project_sentence(&ProjectionInput {
                src,
                tgt_forms,
                graph: &filtered,
                tgt_analyses: &analyses,
            })
        }
        RootOrder::RootFirst => {
            let input = ProjectionInput {
                src,
                tgt_forms,
                graph: &graph,
                tgt_analyses: &analyses,
            };
            input.check()?;
            let mut root = resolve_root(src, &graph, &tgt_upos)?;
            root.graph = filter_by_pos(&root.graph, &src_upos, &tgt_upos)?;
            Ok(assemble(&input, &root))
        }
    }
}

/// Flags for the tokens of one projected sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceProvenance {
    /// 1-based position of the sentence in the input.
    pub ordinal: usize,
    pub flags: Vec<Provenance>,
}

impl SentenceProvenance {
    pub fn count(&self, flag: Provenance) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceFailure {
    pub ordinal: usize,
    pub error: ProjectionError,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreebankProjection {
    /// Successfully projected sentences, in input order.
    pub treebank: Treebank,
    pub provenance: Vec<SentenceProvenance>,
    pub failures: Vec<SentenceFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("input counts differ: {sources} source sentences, {targets} target sentences, {alignments} alignments")]
pub struct CountMismatch {
    pub sources: usize,
    pub targets: usize,
    pub alignments: usize,
}

/// Projects every sentence pair. Sentence `i` of each input belongs
/// together; a failing sentence is recorded and skipped.
pub fn project_treebank(
    src_tb: &Treebank,
    tgt_sentences: &[Vec<String>],
    alignments: &[SentenceAlignment],
    lexicon: &MorphLexicon,
    options: &ProjectionOptions,
) -> Result<TreebankProjection, CountMismatch> {
    let sources = src_tb.len();
    if tgt_sentences.len() != sources || alignments.len() != sources {
        return Err(CountMismatch {
            sources,
            targets: tgt_sentences.len(),
            alignments: alignments.len(),
        });
    }
    let mut out = TreebankProjection::default();
    for (idx, ((src, forms), alignment)) in src_tb
        .sentences
        .iter()
        .zip(tgt_sentences)
        .zip(alignments)
        .enumerate()
    {
        let ordinal = idx + 1;
        match project_pair(src, forms, alignment, lexicon, options) {
            Ok(result) => {
                debug!("sentence {ordinal}: root {:?}", result.root_case);
                out.treebank.sentences.push(result.sentence);
                out.provenance.push(SentenceProvenance {
                    ordinal,
                    flags: result.provenance,
                });
            }
            Err(error) => out.failures.push(SentenceFailure { ordinal, error }),
        }
    }
    Ok(out)
}

pub const PROVENANCE_HEADER: &str = "sentence\ttoken\tflag";

/// Writes the provenance report: `#`-prefixed metadata, a header, then one
/// row per target token.
pub fn render_provenance(
    provenance: &[SentenceProvenance],
    metadata: &[(&str, String)],
) -> String {
    let mut out = String::new();
    for (key, value) in metadata {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out.push_str(PROVENANCE_HEADER);
    out.push('\n');
    for sentence in provenance {
        for (i, flag) in sentence.flags.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{}\n", sentence.ordinal, i + 1, flag));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("provenance line {line}: {message}")]
pub struct ProvenanceParseError {
    pub line: usize,
    pub message: String,
}

/// Reads a report written by [`render_provenance`].
pub fn parse_provenance(text: &str) -> Result<Vec<SentenceProvenance>, ProvenanceParseError> {
    let mut out: Vec<SentenceProvenance> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let err = |message: String| ProvenanceParseError {
            line: idx + 1,
            message,
        };
        if line.trim().is_empty() || line.starts_with('#') || line == PROVENANCE_HEADER {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", cols.len())));
        }
        let ordinal: usize = cols[0]
            .parse()
            .map_err(|_| err(format!("bad sentence ordinal {:?}", cols[0])))?;
        let token: usize = cols[1]
            .parse()
            .map_err(|_| err(format!("bad token id {:?}", cols[1])))?;
        let flag: Provenance = cols[2].parse().map_err(err)?;
        if out.last().map(|s| s.ordinal) != Some(ordinal) {
            out.push(SentenceProvenance {
                ordinal,
                flags: Vec::new(),
            });
        }
        let sentence = out.last_mut().unwrap();
        if token != sentence.flags.len() + 1 {
            return Err(err(format!("token id {token} out of sequence")));
        }
        sentence.flags.push(flag);
    }
    Ok(out)
}
