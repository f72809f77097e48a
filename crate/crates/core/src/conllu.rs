//! Reading, writing and structural validation of CoNLL-U treebanks.
//!
//! Only basic (non-enhanced) dependency trees are modelled. Multiword range
//! lines (`3-4`) are kept so that documents survive a round trip, empty nodes
//! (`3.1`) are rejected.

use std::fmt;

use thiserror::Error;

/// Placeholder used by CoNLL-U for empty fields.
pub const EMPTY: &str = "_";

/// One syntactic word of a sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// `None` when the HEAD column is `_`, `Some(0)` for the sentence root.
    pub head: Option<usize>,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    /// Creates a token with all annotation columns set to `_`.
    pub fn new(id: usize, form: impl Into<String>) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: EMPTY.to_owned(),
            upos: EMPTY.to_owned(),
            xpos: EMPTY.to_owned(),
            feats: EMPTY.to_owned(),
            head: None,
            deprel: EMPTY.to_owned(),
            deps: EMPTY.to_owned(),
            misc: EMPTY.to_owned(),
        }
    }

    pub fn is_root(&self) -> bool {
        self.head == Some(0)
    }
}

/// A multiword token range line such as `1-2\tvámonos\t_\t...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiwordSpan {
    pub start: usize,
    pub end: usize,
    pub form: String,
    pub misc: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    /// Comment lines verbatim, including the leading `#`.
    pub comments: Vec<String>,
    pub tokens: Vec<Token>,
    /// Range lines, ordered by `start`.
    pub spans: Vec<MultiwordSpan>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence {
            comments: Vec::new(),
            tokens,
            spans: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// 0-based positions of tokens attached to the artificial root.
    pub fn root_positions(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_root())
            .map(|(i, _)| i)
            .collect()
    }

    /// Value of a `# sent_id = ...` comment, if present.
    pub fn sent_id(&self) -> Option<&str> {
        self.comment_value("sent_id")
    }

    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.trim_start_matches('#').split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Treebank {
    pub sentences: Vec<Sentence>,
}

impl Treebank {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Treebank { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

/// A parse failure, located by 1-based sentence ordinal and line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sentence {sentence}, line {line}: {kind}")]
pub struct ParseError {
    pub sentence: usize,
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected 10 tab-separated columns, found {0}")]
    ColumnCount(usize),
    #[error("invalid token id {0:?}")]
    InvalidId(String),
    #[error("empty nodes are not supported: {0:?}")]
    EmptyNode(String),
    #[error("duplicate token id {0}")]
    DuplicateId(usize),
    #[error("token id {found} out of sequence, expected {expected}")]
    IdOutOfSequence { expected: usize, found: usize },
    #[error("non-numeric head {0:?}")]
    InvalidHead(String),
    #[error("head out of range: {head} in a sentence of {len} tokens")]
    HeadOutOfRange { head: usize, len: usize },
    #[error("token {0} is its own head")]
    SelfHead(usize),
    #[error("empty form")]
    EmptyForm,
    #[error("invalid multiword range {0:?}")]
    InvalidRange(String),
    #[error("comment line after token lines")]
    MisplacedComment,
    #[error("sentence has comments but no tokens")]
    NoTokens,
}

enum Id {
    Single(usize),
    Range(usize, usize),
}

fn parse_id(s: &str) -> Result<Id, ParseErrorKind> {
    if s.contains('.') {
        return Err(ParseErrorKind::EmptyNode(s.to_owned()));
    }
    let number = |part: &str| -> Option<usize> {
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        part.parse().ok().filter(|&n| n > 0)
    };
    match s.split_once('-') {
        Some((a, b)) => match (number(a), number(b)) {
            (Some(a), Some(b)) if a < b => Ok(Id::Range(a, b)),
            _ => Err(ParseErrorKind::InvalidRange(s.to_owned())),
        },
        None => number(s)
            .map(Id::Single)
            .ok_or_else(|| ParseErrorKind::InvalidId(s.to_owned())),
    }
}

fn parse_head(s: &str) -> Result<Option<usize>, ParseErrorKind> {
    if s == EMPTY {
        return Ok(None);
    }
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseErrorKind::InvalidHead(s.to_owned()));
    }
    s.parse()
        .map(Some)
        .map_err(|_| ParseErrorKind::InvalidHead(s.to_owned()))
}

/// Accumulates the lines of one sentence while parsing.
#[derive(Default)]
struct Pending {
    sentence: Sentence,
    /// Line number of every token, for late head-range errors.
    token_lines: Vec<usize>,
    span_lines: Vec<usize>,
    started: bool,
}

impl Pending {
    fn finish(self, ordinal: usize) -> Result<Sentence, ParseError> {
        let err = |line, kind| ParseError {
            sentence: ordinal,
            line,
            kind,
        };
        let len = self.sentence.tokens.len();
        if len == 0 {
            let line = self.span_lines.first().copied().unwrap_or(0);
            return Err(err(line, ParseErrorKind::NoTokens));
        }
        for (token, &line) in self.sentence.tokens.iter().zip(&self.token_lines) {
            if let Some(head) = token.head {
                if head > len {
                    return Err(err(line, ParseErrorKind::HeadOutOfRange { head, len }));
                }
            }
        }
        for (span, &line) in self.sentence.spans.iter().zip(&self.span_lines) {
            if span.end > len {
                return Err(err(
                    line,
                    ParseErrorKind::InvalidRange(format!("{}-{}", span.start, span.end)),
                ));
            }
        }
        Ok(self.sentence)
    }
}

/// Parses a CoNLL-U document.
///
/// Sentences are separated by blank lines; comment lines are attached to the
/// sentence that follows them. A `_` in the HEAD column yields an unset head.
pub fn parse_conllu(text: &str) -> Result<Treebank, ParseError> {
    let mut sentences = Vec::new();
    let mut pending = Pending::default();

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let ordinal = sentences.len() + 1;
        let err = |kind| ParseError {
            sentence: ordinal,
            line: line_no,
            kind,
        };

        if line.trim().is_empty() {
            if pending.started {
                let done = std::mem::take(&mut pending);
                sentences.push(done.finish(ordinal)?);
            }
            continue;
        }
        pending.started = true;

        if line.starts_with('#') {
            if !pending.sentence.tokens.is_empty() || !pending.sentence.spans.is_empty() {
                return Err(err(ParseErrorKind::MisplacedComment));
            }
            pending.sentence.comments.push(line.to_owned());
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(err(ParseErrorKind::ColumnCount(cols.len())));
        }
        let expected = pending.sentence.tokens.len() + 1;
        match parse_id(cols[0]).map_err(err)? {
            Id::Range(start, end) => {
                let prev_end = pending.sentence.spans.last().map_or(0, |s| s.end);
                if start != expected || start <= prev_end {
                    return Err(err(ParseErrorKind::InvalidRange(cols[0].to_owned())));
                }
                pending.sentence.spans.push(MultiwordSpan {
                    start,
                    end,
                    form: cols[1].to_owned(),
                    misc: cols[9].to_owned(),
                });
                pending.span_lines.push(line_no);
            }
            Id::Single(id) => {
                if id < expected {
                    return Err(err(ParseErrorKind::DuplicateId(id)));
                }
                if id != expected {
                    return Err(err(ParseErrorKind::IdOutOfSequence {
                        expected,
                        found: id,
                    }));
                }
                if cols[1].is_empty() {
                    return Err(err(ParseErrorKind::EmptyForm));
                }
                let head = parse_head(cols[6]).map_err(err)?;
                if head == Some(id) {
                    return Err(err(ParseErrorKind::SelfHead(id)));
                }
                pending.sentence.tokens.push(Token {
                    id,
                    form: cols[1].to_owned(),
                    lemma: cols[2].to_owned(),
                    upos: cols[3].to_owned(),
                    xpos: cols[4].to_owned(),
                    feats: cols[5].to_owned(),
                    head,
                    deprel: cols[7].to_owned(),
                    deps: cols[8].to_owned(),
                    misc: cols[9].to_owned(),
                });
                pending.token_lines.push(line_no);
            }
        }
    }
    if pending.started {
        let ordinal = sentences.len() + 1;
        sentences.push(pending.finish(ordinal)?);
    }
    Ok(Treebank { sentences })
}

fn write_sentence(out: &mut String, sentence: &Sentence) {
    use std::fmt::Write;

    for comment in &sentence.comments {
        out.push_str(comment);
        out.push('\n');
    }
    let mut spans = sentence.spans.iter().peekable();
    for token in &sentence.tokens {
        while let Some(span) = spans.next_if(|s| s.start == token.id) {
            let _ = writeln!(
                out,
                "{}-{}\t{}\t_\t_\t_\t_\t_\t_\t_\t{}",
                span.start, span.end, span.form, span.misc
            );
        }
        let head = token
            .head
            .map_or_else(|| EMPTY.to_owned(), |h| h.to_string());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            token.id,
            token.form,
            token.lemma,
            token.upos,
            token.xpos,
            token.feats,
            head,
            token.deprel,
            token.deps,
            token.misc
        );
    }
    out.push('\n');
}

/// Writes a treebank in canonical CoNLL-U: every sentence is followed by
/// exactly one blank line.
pub fn serialize_conllu(tb: &Treebank) -> String {
    let mut out = String::new();
    for sentence in &tb.sentences {
        write_sentence(&mut out, sentence);
    }
    out
}

pub fn serialize_sentence(sentence: &Sentence) -> String {
    let mut out = String::new();
    write_sentence(&mut out, sentence);
    out
}

/// A structural problem found by [`validate_tree`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    UnsetHead { id: usize },
    HeadOutOfRange { id: usize, head: usize },
    NoRoot,
    MultipleRoots { ids: Vec<usize> },
    /// Token ids on the cycle, ascending.
    Cycle { ids: Vec<usize> },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ids: &[usize]| {
            ids.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self {
            Diagnostic::UnsetHead { id } => write!(f, "token {id}: unset head"),
            Diagnostic::HeadOutOfRange { id, head } => {
                write!(f, "token {id}: head {head} out of range")
            }
            Diagnostic::NoRoot => write!(f, "no root"),
            Diagnostic::MultipleRoots { ids } => write!(f, "multiple roots: tokens {}", join(ids)),
            Diagnostic::Cycle { ids } => write!(f, "cycle: tokens {}", join(ids)),
        }
    }
}

/// Checks that the head relation of `s` is a single rooted tree.
///
/// Returns no diagnostics iff exactly one token has head 0, every head is set
/// and in range, and following heads from any token reaches the root.
pub fn validate_tree(s: &Sentence) -> Vec<Diagnostic> {
    let n = s.tokens.len();
    let mut diags = Vec::new();

    // parent[i] is the 0-based head position, None for the root or a bad head.
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut roots = Vec::new();
    for (i, token) in s.tokens.iter().enumerate() {
        match token.head {
            None => diags.push(Diagnostic::UnsetHead { id: i + 1 }),
            Some(0) => roots.push(i + 1),
            Some(h) if h > n => diags.push(Diagnostic::HeadOutOfRange { id: i + 1, head: h }),
            Some(h) => parent[i] = Some(h - 1),
        }
    }
    match roots.len() {
        0 => diags.push(Diagnostic::NoRoot),
        1 => {}
        _ => diags.push(Diagnostic::MultipleRoots { ids: roots }),
    }

    // 0 = unvisited, 1 = on the current path, 2 = done
    let mut state = vec![0u8; n];
    for start in 0..n {
        let mut path = Vec::new();
        let mut cur = Some(start);
        while let Some(v) = cur {
            match state[v] {
                2 => break,
                1 => {
                    let from = path.iter().position(|&p| p == v).unwrap_or(0);
                    let mut ids: Vec<usize> = path[from..].iter().map(|&p| p + 1).collect();
                    ids.sort_unstable();
                    diags.push(Diagnostic::Cycle { ids });
                    break;
                }
                _ => {
                    state[v] = 1;
                    path.push(v);
                    cur = parent[v];
                }
            }
        }
        for v in path {
            state[v] = 2;
        }
    }
    diags
}
