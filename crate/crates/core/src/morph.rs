//! Lemmas and universal PoS tags from an exported morphological lexicon.
//!
//! The lexicon is a TSV of `FORM\tLEMMA\tRAWTAG` lines in analyzer-priority
//! order; only the first analysis of a form is ever used for tagging.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use thiserror::Error;

/// The universal part-of-speech inventory.
pub const UNIVERSAL_TAGS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

/// Tag assigned to unknown forms and unmapped raw tags.
pub const UNKNOWN_TAG: &str = "X";

const DEFAULT_TAG_MAP: &str = include_str!("../data/tagmap.tsv");

/// Characters that mark joined or multiword lemmas in analyzer output.
const LEMMA_SEPARATORS: [char; 2] = ['+', '#'];

pub fn is_universal_tag(tag: &str) -> bool {
    UNIVERSAL_TAGS.contains(&tag)
}

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} tab-separated columns, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: empty {column}")]
    EmptyField { line: usize, column: &'static str },
    #[error("line {line}: {tag:?} is not a universal PoS tag")]
    NotUniversal { line: usize, tag: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Analysis {
    pub lemma: String,
    pub upos: String,
}

impl Analysis {
    pub fn new(lemma: impl Into<String>, upos: impl Into<String>) -> Self {
        Analysis {
            lemma: lemma.into(),
            upos: upos.into(),
        }
    }
}

/// Raw analyzer tag → universal tag.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TagMap {
    rules: HashMap<String, String>,
}

impl TagMap {
    /// The bundled Apertium-style conversion table.
    pub fn builtin() -> Self {
        Self::from_tsv(DEFAULT_TAG_MAP).expect("bundled tag map is valid")
    }

    pub fn load(path: &Path) -> Result<Self, MorphError> {
        let text = fs::read_to_string(path).map_err(|source| MorphError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_tsv(&text)
    }

    /// Parses `RAWTAG\tUPOS` lines. Blank lines and `#` comments are skipped.
    pub fn from_tsv(text: &str) -> Result<Self, MorphError> {
        let mut rules = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(MorphError::ColumnCount {
                    line: line_no,
                    expected: 2,
                    found: cols.len(),
                });
            }
            let (raw, upos) = (cols[0].trim(), cols[1].trim());
            if raw.is_empty() {
                return Err(MorphError::EmptyField {
                    line: line_no,
                    column: "raw tag",
                });
            }
            if !is_universal_tag(upos) {
                return Err(MorphError::NotUniversal {
                    line: line_no,
                    tag: upos.to_owned(),
                });
            }
            rules.insert(raw.to_owned(), upos.to_owned());
        }
        Ok(TagMap { rules })
    }

    pub fn insert(&mut self, raw: impl Into<String>, upos: impl Into<String>) {
        self.rules.insert(raw.into(), upos.into());
    }

    /// Looks up the whole raw tag first, then its leading tag, so that
    /// `<n><px3sp><nom>` and `n.px3sp.nom` both resolve through an `n` rule.
    pub fn map(&self, raw: &str) -> Option<&str> {
        if let Some(upos) = self.rules.get(raw) {
            return Some(upos);
        }
        let leading = raw
            .split(['<', '>', '.', '+', '|', ' '])
            .find(|part| !part.is_empty())?;
        self.rules.get(leading).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Something questionable found while loading a lexicon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LexiconWarning {
    UnmappedTag { line: usize, raw: String },
    CompoundLemma { line: usize, lemma: String },
}

impl std::fmt::Display for LexiconWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LexiconWarning::UnmappedTag { line, raw } => {
                write!(f, "line {line}: raw tag {raw:?} has no universal mapping, using X")
            }
            LexiconWarning::CompoundLemma { line, lemma } => {
                write!(f, "line {line}: lemma {lemma:?} contains a separator, kept verbatim")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MorphLexicon {
    entries: HashMap<String, Vec<Analysis>>,
}

impl MorphLexicon {
    /// Parses lexicon TSV text. Blank lines are skipped.
    pub fn from_tsv(
        text: &str,
        tag_map: &TagMap,
    ) -> Result<(Self, Vec<LexiconWarning>), MorphError> {
        let mut entries: HashMap<String, Vec<Analysis>> = HashMap::new();
        let mut warnings = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(MorphError::ColumnCount {
                    line: line_no,
                    expected: 3,
                    found: cols.len(),
                });
            }
            let (form, lemma, raw) = (cols[0], cols[1], cols[2]);
            if form.is_empty() {
                return Err(MorphError::EmptyField {
                    line: line_no,
                    column: "form",
                });
            }
            if lemma.is_empty() {
                return Err(MorphError::EmptyField {
                    line: line_no,
                    column: "lemma",
                });
            }
            if lemma.contains(LEMMA_SEPARATORS) {
                warnings.push(LexiconWarning::CompoundLemma {
                    line: line_no,
                    lemma: lemma.to_owned(),
                });
            }
            let upos = match tag_map.map(raw) {
                Some(upos) => upos.to_owned(),
                None => {
                    warnings.push(LexiconWarning::UnmappedTag {
                        line: line_no,
                        raw: raw.to_owned(),
                    });
                    UNKNOWN_TAG.to_owned()
                }
            };
            entries
                .entry(form.to_owned())
                .or_default()
                .push(Analysis::new(lemma, upos));
        }
        Ok((MorphLexicon { entries }, warnings))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All analyses of `form`, in analyzer order.
    pub fn analyses(&self, form: &str) -> Option<&[Analysis]> {
        self.entries.get(form).map(Vec::as_slice)
    }
}

/// Reads a lexicon file, logging each warning.
pub fn load_lexicon(
    path: &Path,
    tag_map: &TagMap,
) -> Result<(MorphLexicon, Vec<LexiconWarning>), MorphError> {
    let text = fs::read_to_string(path).map_err(|source| MorphError::Io {
        path: path.to_owned(),
        source,
    })?;
    let (lexicon, warnings) = MorphLexicon::from_tsv(&text, tag_map)?;
    for w in &warnings {
        warn!("{}: {w}", path.display());
    }
    Ok((lexicon, warnings))
}

/// First analysis of `form`, retrying in lowercase; unknown forms become
/// their own lemma tagged `X`.
pub fn first_analysis(lex: &MorphLexicon, form: &str) -> Analysis {
    let hit = lex
        .analyses(form)
        .or_else(|| lex.analyses(&form.to_lowercase()))
        .and_then(<[Analysis]>::first);
    match hit {
        Some(a) => a.clone(),
        None => Analysis::new(form, UNKNOWN_TAG),
    }
}
