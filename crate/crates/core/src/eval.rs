//! Precision/recall scoring of a system treebank against gold annotations.
//!
//! Words of the two sides are aligned by character span over the sentence
//! text with whitespace removed, so differing tokenizations can be compared.
//! Only syntactic word lines are scored; multiword range lines are ignored.

use std::fmt;

use thiserror::Error;

use crate::conllu::{Sentence, Treebank};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("gold has {gold} sentences, system has {system}")]
    SentenceCount { gold: usize, system: usize },
}

/// The sentence texts differ, so words cannot be aligned.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("text mismatch: gold {gold:?} vs system {system:?}")]
pub struct TextMismatch {
    pub gold: String,
    pub system: String,
}

/// Character span of a word inside the whitespace-free sentence text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpanWord {
    pub start: usize,
    pub end: usize,
    /// 0-based position of the token in its sentence.
    pub token: usize,
}

fn stripped(form: &str) -> impl Iterator<Item = char> + '_ {
    form.chars().filter(|c| !c.is_whitespace())
}

/// Spans of all words with a non-empty stripped form, plus the stripped text.
pub fn span_words(s: &Sentence) -> (Vec<SpanWord>, String) {
    let mut text = String::new();
    let mut words = Vec::with_capacity(s.len());
    let mut offset = 0;
    for (i, token) in s.tokens.iter().enumerate() {
        let start = offset;
        for c in stripped(&token.form) {
            text.push(c);
            offset += 1;
        }
        if offset > start {
            words.push(SpanWord {
                start,
                end: offset,
                token: i,
            });
        }
    }
    (words, text)
}

/// Pairs `(gold position, system position)` of words with identical spans.
pub fn align_words(gold: &Sentence, system: &Sentence) -> Result<Vec<(usize, usize)>, TextMismatch> {
    let (gold_words, gold_text) = span_words(gold);
    let (system_words, system_text) = span_words(system);
    if gold_text != system_text {
        return Err(TextMismatch {
            gold: gold_text,
            system: system_text,
        });
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < gold_words.len() && j < system_words.len() {
        let (g, s) = (gold_words[i], system_words[j]);
        if (g.start, g.end) == (s.start, s.end) {
            pairs.push((g.token, s.token));
            i += 1;
            j += 1;
        } else if g.end <= s.end {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(pairs)
}

/// Counts behind one precision/recall/F1 line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MetricScore {
    pub correct: u64,
    pub gold_total: u64,
    pub system_total: u64,
}

impl MetricScore {
    pub fn new(correct: u64, gold_total: u64, system_total: u64) -> Self {
        MetricScore {
            correct,
            gold_total,
            system_total,
        }
    }

    /// Exact precision as `(numerator, denominator)` of a fraction of one.
    pub fn precision_ratio(&self) -> (u64, u64) {
        (self.correct, self.system_total)
    }

    pub fn recall_ratio(&self) -> (u64, u64) {
        (self.correct, self.gold_total)
    }

    /// F1 equals `2·correct / (gold + system)`.
    pub fn f1_ratio(&self) -> (u64, u64) {
        (2 * self.correct, self.gold_total + self.system_total)
    }

    pub fn precision(&self) -> f64 {
        percent(self.precision_ratio())
    }

    pub fn recall(&self) -> f64 {
        percent(self.recall_ratio())
    }

    pub fn f1(&self) -> f64 {
        percent(self.f1_ratio())
    }

    fn add(&mut self, other: &MetricScore) {
        self.correct += other.correct;
        self.gold_total += other.gold_total;
        self.system_total += other.system_total;
    }
}

fn percent((num, den): (u64, u64)) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Formats `num/den` as a percentage with two decimals, rounding half up.
/// A zero denominator renders as `0.00`.
pub fn format_percent((num, den): (u64, u64)) -> String {
    if den == 0 {
        return "0.00".to_owned();
    }
    let hundredths = (u128::from(num) * 20_000 + u128::from(den)) / (2 * u128::from(den));
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalReport {
    pub words: MetricScore,
    pub lemmas: MetricScore,
    pub upos: MetricScore,
    pub uas: MetricScore,
    pub las: MetricScore,
}

impl EvalReport {
    pub fn metrics(&self) -> [(&'static str, &MetricScore); 5] {
        [
            ("Words", &self.words),
            ("Lemmas", &self.lemmas),
            ("UPOS", &self.upos),
            ("UAS", &self.uas),
            ("LAS", &self.las),
        ]
    }

    fn add(&mut self, other: &EvalReport) {
        self.words.add(&other.words);
        self.lemmas.add(&other.lemmas);
        self.upos.add(&other.upos);
        self.uas.add(&other.uas);
        self.las.add(&other.las);
    }
}

/// A sentence left out of scoring because its text differs from gold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExcludedSentence {
    /// 1-based.
    pub ordinal: usize,
    pub mismatch: TextMismatch,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub excluded: Vec<ExcludedSentence>,
    pub sentences: usize,
}

/// Scores one sentence pair.
pub fn score_sentence(gold: &Sentence, system: &Sentence) -> Result<EvalReport, TextMismatch> {
    let pairs = align_words(gold, system)?;
    let mut system_of_gold = vec![None; gold.len()];
    for &(g, s) in &pairs {
        system_of_gold[g] = Some(s);
    }

    let (mut lemmas, mut upos, mut uas, mut las) = (0, 0, 0, 0);
    for &(g, s) in &pairs {
        let (gt, st) = (&gold.tokens[g], &system.tokens[s]);
        lemmas += u64::from(gt.lemma == st.lemma);
        upos += u64::from(gt.upos == st.upos);
        let head_ok = match (gt.head, st.head) {
            (Some(0), Some(0)) => true,
            (Some(gh), Some(sh)) if gh > 0 && sh > 0 => {
                system_of_gold.get(gh - 1).copied().flatten() == Some(sh - 1)
            }
            _ => false,
        };
        if head_ok {
            uas += 1;
            las += u64::from(gt.deprel == st.deprel);
        }
    }
    let gold_total = gold.len() as u64;
    let system_total = system.len() as u64;
    let metric = |correct| MetricScore::new(correct, gold_total, system_total);
    Ok(EvalReport {
        words: metric(pairs.len() as u64),
        lemmas: metric(lemmas),
        upos: metric(upos),
        uas: metric(uas),
        las: metric(las),
    })
}

/// Scores a system treebank against gold, sentence by sentence. Sentences
/// whose text differs are excluded and listed in the outcome.
pub fn score(gold: &Treebank, system: &Treebank) -> Result<EvalOutcome, EvalError> {
    if gold.len() != system.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            system: system.len(),
        });
    }
    let mut outcome = EvalOutcome {
        sentences: gold.len(),
        ..Default::default()
    };
    for (idx, (g, s)) in gold.sentences.iter().zip(&system.sentences).enumerate() {
        match score_sentence(g, s) {
            Ok(report) => outcome.report.add(&report),
            Err(mismatch) => outcome.excluded.push(ExcludedSentence {
                ordinal: idx + 1,
                mismatch,
            }),
        }
    }
    Ok(outcome)
}

/// Manual edits implied by a report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Effort {
    pub arcs_to_remove: u64,
    pub arcs_to_add: u64,
    pub labels_to_fix: u64,
    pub tags_to_fix: u64,
    pub lemmas_to_fix: u64,
}

pub fn effort_report(r: &EvalReport) -> Effort {
    Effort {
        arcs_to_remove: r.uas.system_total - r.uas.correct,
        arcs_to_add: r.uas.gold_total - r.uas.correct,
        labels_to_fix: r.uas.correct - r.las.correct,
        tags_to_fix: r.words.correct - r.upos.correct,
        lemmas_to_fix: r.words.correct - r.lemmas.correct,
    }
}

impl fmt::Display for Effort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Arcs to remove:  {}", self.arcs_to_remove)?;
        writeln!(f, "Arcs to add:     {}", self.arcs_to_add)?;
        writeln!(f, "Labels to fix:   {}", self.labels_to_fix)?;
        writeln!(f, "UPOS to fix:     {}", self.tags_to_fix)?;
        writeln!(f, "Lemmas to fix:   {}", self.lemmas_to_fix)
    }
}

pub const REPORT_TSV_HEADER: &str = "metric\tprecision\trecall\tf1\tcorrect\tgold_total\tsystem_total";

/// The report as an aligned text table.
pub fn render_report(r: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("Metric     | Precision |    Recall |  F1 Score |  Correct |     Gold |   System\n");
    out.push_str("-----------+-----------+-----------+-----------+----------+----------+---------\n");
    for (name, m) in r.metrics() {
        out.push_str(&format!(
            "{:<11}|{:>10} |{:>10} |{:>10} |{:>9} |{:>9} |{:>9}\n",
            name,
            format_percent(m.precision_ratio()),
            format_percent(m.recall_ratio()),
            format_percent(m.f1_ratio()),
            m.correct,
            m.gold_total,
            m.system_total
        ));
    }
    out
}

pub fn render_report_tsv(r: &EvalReport) -> String {
    let mut out = String::from(REPORT_TSV_HEADER);
    out.push('\n');
    for (name, m) in r.metrics() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            name,
            format_percent(m.precision_ratio()),
            format_percent(m.recall_ratio()),
            format_percent(m.f1_ratio()),
            m.correct,
            m.gold_total,
            m.system_total
        ));
    }
    out
}
