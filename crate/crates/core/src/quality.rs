//! Line-level heuristics followed by document-level rules.
//!
//! Line filters drop lines that are too short in words, contain curly
//! brackets, or contain a banned substring. The surviving text is then judged
//! by three ratios: lines ending in terminal punctuation, short lines, and
//! characters inside duplicated lines. "Fewer than" thresholds drop strictly
//! below the bound; "more than" / "over" thresholds drop strictly above it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::document::Document;
use crate::report::{Stage, StageReport, StageTally};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineDropReason {
    TooFewWords,
    CurlyBracket,
    BannedSubstring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineVerdict {
    pub line: String,
    pub kept: bool,
    pub reason: Option<LineDropReason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocDropReason {
    EmptyAfterLineFilters,
    LowPunctRatio,
    TooManyShortLines,
    DuplicatedLines,
}

impl DocDropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DocDropReason::EmptyAfterLineFilters => "empty_after_line_filters",
            DocDropReason::LowPunctRatio => "low_punct_ratio",
            DocDropReason::TooManyShortLines => "too_many_short_lines",
            DocDropReason::DuplicatedLines => "duplicated_lines",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVerdict {
    pub doc_id: String,
    pub kept: bool,
    pub punct_line_ratio: f64,
    pub short_line_ratio: f64,
    pub dup_line_char_ratio: f64,
    pub reason: Option<DocDropReason>,
}

/// The quality rules compiled from a config.
#[derive(Debug, Clone)]
pub struct QualityFilter {
    min_words: usize,
    /// Lowercased when matching is case-insensitive.
    banned: Vec<String>,
    banned_ascii: bool,
    case_insensitive: bool,
    terminal: Vec<char>,
    punct_min: f64,
    short_max: f64,
    short_limit: usize,
    dup_max: f64,
}

impl QualityFilter {
    pub fn new(cfg: &PipelineConfig) -> Self {
        let banned: Vec<String> = if cfg.banned_case_insensitive {
            cfg.banned_substrings.iter().map(|s| s.to_lowercase()).collect()
        } else {
            cfg.banned_substrings.clone()
        };
        Self {
            min_words: cfg.min_words_per_line,
            banned_ascii: banned.iter().all(|s| s.is_ascii()),
            banned,
            case_insensitive: cfg.banned_case_insensitive,
            terminal: cfg.terminal_punctuation.chars().collect(),
            punct_min: cfg.punct_line_ratio_min,
            short_max: cfg.short_line_ratio_max,
            short_limit: cfg.short_line_char_limit,
            dup_max: cfg.dup_line_char_ratio_max,
        }
    }

    fn has_banned(&self, line: &str) -> bool {
        if self.banned.is_empty() {
            return false;
        }
        if !self.case_insensitive {
            return self.banned.iter().any(|b| line.contains(b.as_str()));
        }
        if line.is_ascii() && self.banned_ascii {
            let hay = line.as_bytes();
            return self.banned.iter().any(|b| contains_ascii_ci(hay, b.as_bytes()));
        }
        let lower = line.to_lowercase();
        self.banned.iter().any(|b| lower.contains(b.as_str()))
    }

    pub fn line_reason(&self, line: &str) -> Option<LineDropReason> {
        if line.split_whitespace().take(self.min_words).count() < self.min_words {
            Some(LineDropReason::TooFewWords)
        } else if line.contains(['{', '}']) {
            Some(LineDropReason::CurlyBracket)
        } else if self.has_banned(line) {
            Some(LineDropReason::BannedSubstring)
        } else {
            None
        }
    }

    /// Filtered text (surviving lines joined with LF) and one verdict per input line.
    pub fn apply_line_filters(&self, text: &str) -> (String, Vec<LineVerdict>) {
        let mut kept = Vec::new();
        let mut verdicts = Vec::new();
        for line in text.split('\n') {
            let reason = self.line_reason(line);
            if reason.is_none() {
                kept.push(line);
            }
            verdicts.push(LineVerdict {
                line: line.to_string(),
                kept: reason.is_none(),
                reason,
            });
        }
        (kept.join("\n"), verdicts)
    }

    /// Same as [`apply_line_filters`](Self::apply_line_filters) without per-line verdicts.
    pub fn filter_lines(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut first = true;
        for line in text.split('\n') {
            if self.line_reason(line).is_none() {
                if !first {
                    out.push('\n');
                }
                first = false;
                out.push_str(line);
            }
        }
        out
    }

    pub fn evaluate_document(&self, doc_id: &str, filtered_text: &str) -> DocVerdict {
        let lines: Vec<&str> = if filtered_text.is_empty() {
            Vec::new()
        } else {
            filtered_text.split('\n').map(str::trim_end).collect()
        };
        let total = lines.len();
        if total == 0 {
            return DocVerdict {
                doc_id: doc_id.to_string(),
                kept: false,
                punct_line_ratio: 0.0,
                short_line_ratio: 0.0,
                dup_line_char_ratio: 0.0,
                reason: Some(DocDropReason::EmptyAfterLineFilters),
            };
        }

        let mut punct = 0usize;
        let mut short = 0usize;
        let mut total_chars = 0usize;
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::with_capacity(total);
        for line in &lines {
            let chars = line.chars().count();
            total_chars += chars;
            if line.chars().next_back().is_some_and(|c| self.terminal.contains(&c)) {
                punct += 1;
            }
            if chars < self.short_limit {
                short += 1;
            }
            let e = counts.entry(line).or_insert((0, chars));
            e.0 += 1;
        }
        let dup_chars: usize = counts
            .values()
            .filter(|(n, _)| *n >= 2)
            .map(|(n, chars)| n * chars)
            .sum();

        let punct_line_ratio = punct as f64 / total as f64;
        let short_line_ratio = short as f64 / total as f64;
        let dup_line_char_ratio = if total_chars == 0 {
            0.0
        } else {
            dup_chars as f64 / total_chars as f64
        };

        let reason = if punct_line_ratio < self.punct_min {
            Some(DocDropReason::LowPunctRatio)
        } else if short_line_ratio > self.short_max {
            Some(DocDropReason::TooManyShortLines)
        } else if dup_line_char_ratio > self.dup_max {
            Some(DocDropReason::DuplicatedLines)
        } else {
            None
        };
        DocVerdict {
            doc_id: doc_id.to_string(),
            kept: reason.is_none(),
            punct_line_ratio,
            short_line_ratio,
            dup_line_char_ratio,
            reason,
        }
    }

    /// Replaces the document text with its line-filtered text and judges it.
    pub fn apply(&self, mut doc: Document) -> (Option<Document>, DocVerdict) {
        let filtered = self.filter_lines(&doc.text);
        let verdict = self.evaluate_document(&doc.id, &filtered);
        if verdict.kept {
            doc.text = filtered;
            (Some(doc), verdict)
        } else {
            (None, verdict)
        }
    }
}

fn contains_ascii_ci(hay: &[u8], needle: &[u8]) -> bool {
    let Some(&first) = needle.first() else {
        return true;
    };
    if needle.len() > hay.len() {
        return false;
    }
    hay.windows(needle.len())
        .any(|w| w[0].eq_ignore_ascii_case(&first) && w.eq_ignore_ascii_case(needle))
}

pub fn apply_line_filters(text: &str, cfg: &PipelineConfig) -> (String, Vec<LineVerdict>) {
    QualityFilter::new(cfg).apply_line_filters(text)
}

pub fn evaluate_document_rules(doc_id: &str, filtered_text: &str, cfg: &PipelineConfig) -> DocVerdict {
    QualityFilter::new(cfg).evaluate_document(doc_id, filtered_text)
}

/// Runs line filters and document rules over a corpus.
pub fn filter_quality<I>(docs: I, cfg: &PipelineConfig) -> (Vec<Document>, StageReport)
where
    I: IntoIterator<Item = Document>,
{
    let (kept, report, _) = filter_quality_with_verdicts(docs, cfg);
    (kept, report)
}

pub fn filter_quality_with_verdicts<I>(docs: I, cfg: &PipelineConfig) -> (Vec<Document>, StageReport, Vec<DocVerdict>)
where
    I: IntoIterator<Item = Document>,
{
    let filter = QualityFilter::new(cfg);
    let mut tally = StageTally::new(Stage::Quality);
    let mut kept = Vec::new();
    let mut verdicts = Vec::new();
    for doc in docs {
        let source = doc.source.clone();
        let (out, verdict) = filter.apply(doc);
        match (out, verdict.reason) {
            (Some(d), _) => {
                tally.keep(&source);
                kept.push(d);
            }
            (None, Some(r)) => tally.drop(&source, r.as_str()),
            (None, None) => unreachable!("dropped document without a reason"),
        }
        verdicts.push(verdict);
    }
    (kept, tally.total(), verdicts)
}
