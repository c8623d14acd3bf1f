//! Sentence formation over kept token spans.
//!
//! Boundaries come from a pluggable provider so a learned segmenter can be
//! swapped in later; the default is rule-based. Emitted sentences respect a
//! minimum character floor and maximum word-count / display-time caps.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::coarse::{CoarseSpan, SpanLabel};
use crate::error::{Error, Result};
use crate::subtitle::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correctness {
    Correct,
    Incorrect,
}

/// Visibility-gate outcome attached to a sentence by the relevance stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateInfo {
    pub pass: bool,
    /// No pose frames covered the sentence interval.
    pub no_pose_data: bool,
    pub qualifying_frames: u64,
    pub expected_frames: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryMethod {
    Dependency,
    KeywordContext,
}

/// Verbatim contiguous word span extracted from a sentence, naming the
/// error described by it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryPhrase {
    pub text: String,
    /// Word offsets within the source sentence, inclusive.
    pub source_span: (usize, usize),
    pub method: SummaryMethod,
}

/// A contiguous token span with its display interval and, as the pipeline
/// progresses, relevance/correctness labels and an optional summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub id: u64,
    pub words: Vec<String>,
    pub start_ms: u64,
    pub end_ms: u64,
    pub relevance: Option<Relevance>,
    pub gate: Option<GateInfo>,
    pub correctness: Option<Correctness>,
    /// Trigram score difference, incorrect minus correct.
    pub log_odds: Option<f64>,
    pub summary: Option<SummaryPhrase>,
}

impl Sentence {
    pub fn new(id: u64, words: Vec<String>, start_ms: u64, end_ms: u64) -> Self {
        Sentence {
            id,
            words,
            start_ms,
            end_ms,
            relevance: None,
            gate: None,
            correctness: None,
            log_odds: None,
            summary: None,
        }
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    /// Character count of the space-joined text.
    pub fn char_len(&self) -> usize {
        let words: usize = self.words.iter().map(|w| w.chars().count()).sum();
        words + self.words.len().saturating_sub(1)
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn display_ms(&self) -> u64 {
        self.end_ms - self.start_ms
    }
}

/// Length and duration limits applied to emitted sentences.
#[derive(Debug, Clone, Copy)]
pub struct SentenceLimits {
    /// Sentences shorter than this many characters are dropped.
    pub min_chars: usize,
    /// Sentences longer than this are split.
    pub max_words: usize,
    /// Sentences displayed longer than this are split.
    pub max_display_ms: u64,
}

impl Default for SentenceLimits {
    fn default() -> Self {
        SentenceLimits {
            min_chars: 20,
            max_words: 30,
            max_display_ms: 15_000,
        }
    }
}

/// Pluggable sentence-boundary provider.
///
/// `boundaries` returns positions `i` meaning "a sentence ends after
/// `tokens[i]`", strictly increasing, each `< tokens.len() - 1` (the final
/// boundary is implicit).
pub trait BoundaryProvider {
    fn boundaries(&self, tokens: &[Token]) -> Vec<usize>;
}

/// Default rule-based segmenter.
///
/// Levels, first non-empty wins: sentence-final punctuation when the
/// captions carry any; inter-token gaps above `gap_ms` (auto captions pause
/// between utterances); discourse markers opening a new sentence mid-span.
#[derive(Debug, Clone)]
pub struct RuleSegmenter {
    pub gap_ms: u64,
    pub markers: Vec<String>,
}

impl Default for RuleSegmenter {
    fn default() -> Self {
        RuleSegmenter {
            gap_ms: 800,
            markers: ["so", "now", "okay", "alright"]
                .into_iter()
                .map(str::to_string)
                .collect(),
        }
    }
}

impl BoundaryProvider for RuleSegmenter {
    fn boundaries(&self, tokens: &[Token]) -> Vec<usize> {
        if tokens.len() < 2 {
            return Vec::new();
        }
        let last = tokens.len() - 1;
        let punct: Vec<usize> = (0..last).filter(|&i| tokens[i].sentence_final).collect();
        if !punct.is_empty() {
            return punct;
        }
        let gaps: Vec<usize> = (0..last)
            .filter(|&i| tokens[i + 1].start_ms.saturating_sub(tokens[i].end_ms) > self.gap_ms)
            .collect();
        if !gaps.is_empty() {
            return gaps;
        }
        (0..last)
            .filter(|&i| self.markers.iter().any(|m| *m == tokens[i + 1].text))
            .collect()
    }
}

/// Split the kept spans into sentences.
///
/// Boundaries never cross a rejected span. Pieces over the word or display
/// caps are split at the largest inter-token time gap nearest the midpoint,
/// recursively; pieces under the character floor are dropped at the end.
pub fn split_sentences(
    tokens: &[Token],
    spans: &[CoarseSpan],
    segmenter: &dyn BoundaryProvider,
    limits: &SentenceLimits,
) -> Vec<Sentence> {
    let mut sentences = Vec::new();
    for span in spans.iter().filter(|s| s.label == SpanLabel::Kept) {
        let span_tokens = &tokens[span.start..span.end];
        if span_tokens.is_empty() {
            continue;
        }
        let mut bounds = segmenter.boundaries(span_tokens);
        bounds.retain(|&b| b + 1 < span_tokens.len());
        bounds.push(span_tokens.len() - 1);

        let mut piece_start = 0;
        for &b in &bounds {
            let piece = &span_tokens[piece_start..=b];
            piece_start = b + 1;
            for part in enforce_limits(piece, limits) {
                sentences.push(part);
            }
        }
    }

    sentences.retain(|s| s.char_len() >= limits.min_chars);
    for (id, sentence) in sentences.iter_mut().enumerate() {
        sentence.id = id as u64;
    }
    sentences
}

/// Recursively split `piece` until both the word and display-time caps
/// hold. A single token can never be split further.
fn enforce_limits(piece: &[Token], limits: &SentenceLimits) -> Vec<Sentence> {
    let display = piece.last().unwrap().end_ms - piece.first().unwrap().start_ms;
    if piece.len() >= 2 && (piece.len() > limits.max_words || display > limits.max_display_ms) {
        let cut = split_point(piece);
        let mut out = enforce_limits(&piece[..cut], limits);
        out.extend(enforce_limits(&piece[cut..], limits));
        return out;
    }
    vec![Sentence::new(
        0,
        piece.iter().map(|t| t.text.clone()).collect(),
        piece.first().unwrap().start_ms,
        piece.last().unwrap().end_ms,
    )]
}

/// Index `i` in `1..len` with the largest gap between tokens `i-1` and `i`;
/// among equal gaps, the one nearest the midpoint, then the leftmost.
fn split_point(piece: &[Token]) -> usize {
    let mid = piece.len() as f64 / 2.0;
    let mut best = 1;
    let mut best_gap = 0;
    let mut best_dist = f64::INFINITY;
    for i in 1..piece.len() {
        let gap = piece[i].start_ms.saturating_sub(piece[i - 1].end_ms);
        let dist = (i as f64 - mid).abs();
        if gap > best_gap || (gap == best_gap && dist < best_dist) {
            best = i;
            best_gap = gap;
            best_dist = dist;
        }
    }
    best
}

#[derive(Debug, Serialize, Deserialize)]
struct SentenceRecord {
    id: u64,
    text: String,
    start_ms: u64,
    end_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    relevance: Option<Relevance>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    gate: Option<GateInfo>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    correctness: Option<Correctness>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    log_odds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    summary: Option<SummaryPhrase>,
}

impl From<&Sentence> for SentenceRecord {
    fn from(s: &Sentence) -> Self {
        SentenceRecord {
            id: s.id,
            text: s.text(),
            start_ms: s.start_ms,
            end_ms: s.end_ms,
            relevance: s.relevance,
            gate: s.gate,
            correctness: s.correctness,
            log_odds: s.log_odds,
            summary: s.summary.clone(),
        }
    }
}

impl From<SentenceRecord> for Sentence {
    fn from(r: SentenceRecord) -> Self {
        Sentence {
            id: r.id,
            words: r.text.split_whitespace().map(str::to_string).collect(),
            start_ms: r.start_ms,
            end_ms: r.end_ms,
            relevance: r.relevance,
            gate: r.gate,
            correctness: r.correctness,
            log_odds: r.log_odds,
            summary: r.summary,
        }
    }
}

/// Write sentences as JSONL, one record per line.
pub fn write_sentences<W: Write>(mut w: W, sentences: &[Sentence]) -> Result<()> {
    for sentence in sentences {
        serde_json::to_writer(&mut w, &SentenceRecord::from(sentence))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read sentences back from JSONL.
pub fn read_sentences<R: BufRead>(r: R) -> Result<Vec<Sentence>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        out.push(record.into());
    }
    Ok(out)
}
