//! Per-relation error breakdown of projected trees.
//!
//! Unlike LAS, a relation counts as correct only if the full label, subtype
//! included, matches. Sentences tokenized differently from gold are left out
//! of the table and reported as an excluded share.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::conllu::{Sentence, Treebank, EMPTY};
use crate::eval::{align_words, format_percent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("gold has {gold} sentences, system has {system}")]
    SentenceCount { gold: usize, system: usize },
    #[error("unknown table format {0:?} (expected text or tsv)")]
    UnknownFormat(String),
    #[error("table line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationRow {
    pub deprel: String,
    pub total: u64,
    pub deprel_correct: u64,
    pub head_correct: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationErrorTable {
    /// Sorted by total descending, then label.
    pub rows: Vec<RelationRow>,
    pub sentences: u64,
    pub excluded_sentences: u64,
    /// Gold tokens whose relation label was wrong.
    pub deprel_errors: u64,
    /// Of those, tokens the system left without a label.
    pub unmatched_deprel_errors: u64,
}

impl RelationErrorTable {
    pub fn excluded_share(&self) -> (u64, u64) {
        (self.excluded_sentences, self.sentences)
    }

    pub fn unmatched_deprel_error_share(&self) -> (u64, u64) {
        (self.unmatched_deprel_errors, self.deprel_errors)
    }

    pub fn total_tokens(&self) -> u64 {
        self.rows.iter().map(|r| r.total).sum()
    }
}

/// How relation labels are compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LabelMatch {
    /// Full label including subtype.
    #[default]
    Strict,
    /// Only the part before the first `:`.
    Universal,
}

impl LabelMatch {
    fn same(self, gold: &str, system: &str) -> bool {
        match self {
            LabelMatch::Strict => gold == system,
            LabelMatch::Universal => universal(gold) == universal(system),
        }
    }
}

fn universal(label: &str) -> &str {
    label.split(':').next().unwrap_or(label)
}

fn same_tokenization(gold: &Sentence, system: &Sentence) -> bool {
    gold.len() == system.len()
        && align_words(gold, system).is_ok_and(|pairs| pairs.len() == gold.len())
}

/// Strict per-relation table.
pub fn relation_table(gold: &Treebank, system: &Treebank) -> Result<RelationErrorTable, AnalysisError> {
    relation_table_with(gold, system, LabelMatch::Strict)
}

pub fn relation_table_with(
    gold: &Treebank,
    system: &Treebank,
    labels: LabelMatch,
) -> Result<RelationErrorTable, AnalysisError> {
    if gold.len() != system.len() {
        return Err(AnalysisError::SentenceCount {
            gold: gold.len(),
            system: system.len(),
        });
    }
    let mut table = RelationErrorTable {
        sentences: gold.len() as u64,
        ..Default::default()
    };
    let mut rows: HashMap<&str, RelationRow> = HashMap::new();
    for (g, s) in gold.sentences.iter().zip(&system.sentences) {
        if !same_tokenization(g, s) {
            table.excluded_sentences += 1;
            continue;
        }
        // identical tokenization: positions correspond one to one
        for (gt, st) in g.tokens.iter().zip(&s.tokens) {
            let row = rows.entry(&gt.deprel).or_insert_with(|| RelationRow {
                deprel: gt.deprel.clone(),
                total: 0,
                deprel_correct: 0,
                head_correct: 0,
            });
            row.total += 1;
            if labels.same(&gt.deprel, &st.deprel) {
                row.deprel_correct += 1;
            } else {
                table.deprel_errors += 1;
                if st.deprel == EMPTY {
                    table.unmatched_deprel_errors += 1;
                }
            }
            if gt.head.is_some() && gt.head == st.head {
                row.head_correct += 1;
            }
        }
    }
    table.rows = rows.into_values().filter(|r| r.total > 0).collect();
    table
        .rows
        .sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.deprel.cmp(&b.deprel)));
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Tsv,
}

impl FromStr for TableFormat {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(TableFormat::Text),
            "tsv" => Ok(TableFormat::Tsv),
            other => Err(AnalysisError::UnknownFormat(other.to_owned())),
        }
    }
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFormat::Text => "text",
            TableFormat::Tsv => "tsv",
        })
    }
}

/// Whole-number percentage, rounding half up.
fn whole_percent(num: u64, den: u64) -> String {
    if den == 0 {
        return "0%".to_owned();
    }
    format!("{}%", (num * 200 + den) / (2 * den))
}

const TSV_HEADER: &str = "deprel\ttotal\tdeprel_correct\thead_correct\tdeprel_pct\thead_pct";

pub fn render_table(t: &RelationErrorTable, format: TableFormat) -> String {
    match format {
        TableFormat::Text => render_text(t),
        TableFormat::Tsv => render_tsv(t),
    }
}

fn render_text(t: &RelationErrorTable) -> String {
    let (ex, total) = t.excluded_share();
    let (un, errors) = t.unmatched_deprel_error_share();
    let width = t
        .rows
        .iter()
        .map(|r| r.deprel.chars().count())
        .max()
        .unwrap_or(0)
        .max("relation".len());
    let mut out = format!(
        "excluded sentences: {ex} of {total} ({}%)\n\
         unmatched deprel errors: {un} of {errors} ({}%)\n",
        format_percent((ex, total)),
        format_percent((un, errors)),
    );
    out.push_str(&format!(
        "{:<width$}  {:>6}  {:>14}  {:>12}\n",
        "relation", "total", "correct deprel", "correct head"
    ));
    for r in &t.rows {
        out.push_str(&format!(
            "{:<width$}  {:>6}  {:>14}  {:>12}\n",
            r.deprel,
            r.total,
            whole_percent(r.deprel_correct, r.total),
            whole_percent(r.head_correct, r.total)
        ));
    }
    out
}

fn render_tsv(t: &RelationErrorTable) -> String {
    let mut out = format!(
        "# excluded_sentences\t{}\t{}\t{}\n# unmatched_deprel_errors\t{}\t{}\t{}\n{TSV_HEADER}\n",
        t.excluded_sentences,
        t.sentences,
        format_percent(t.excluded_share()),
        t.unmatched_deprel_errors,
        t.deprel_errors,
        format_percent(t.unmatched_deprel_error_share()),
    );
    for r in &t.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.deprel,
            r.total,
            r.deprel_correct,
            r.head_correct,
            format_percent((r.deprel_correct, r.total)),
            format_percent((r.head_correct, r.total)),
        ));
    }
    out
}

/// Reads a table written in TSV format. Percent columns are recomputed from
/// the counts and not read back.
pub fn parse_table_tsv(text: &str) -> Result<RelationErrorTable, AnalysisError> {
    let mut table = RelationErrorTable::default();
    for (idx, line) in text.lines().enumerate() {
        let malformed = |message: String| AnalysisError::Malformed {
            line: idx + 1,
            message,
        };
        let count = |s: &str| -> Result<u64, AnalysisError> {
            s.parse().map_err(|_| malformed(format!("bad count {s:?}")))
        };
        if line.is_empty() || line == TSV_HEADER {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        match cols.as_slice() {
            ["# excluded_sentences", ex, total, _] => {
                table.excluded_sentences = count(ex)?;
                table.sentences = count(total)?;
            }
            ["# unmatched_deprel_errors", un, errors, _] => {
                table.unmatched_deprel_errors = count(un)?;
                table.deprel_errors = count(errors)?;
            }
            [deprel, total, deprel_correct, head_correct, _, _] => {
                table.rows.push(RelationRow {
                    deprel: (*deprel).to_owned(),
                    total: count(total)?,
                    deprel_correct: count(deprel_correct)?,
                    head_correct: count(head_correct)?,
                });
            }
            _ => return Err(malformed(format!("unexpected line {line:?}"))),
        }
    }
    Ok(table)
}
