//! First-pass rejection of large irrelevant sections.
//!
//! Scanning the raw token stream left to right: a coarse anti-keyword
//! opens a rejected region that runs up to (but not including) the next
//! coarse keyword. Everything else is kept.

use serde::{Deserialize, Serialize};

use crate::lexicon::{Lexicon, MatchKind};
use crate::subtitle::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanLabel {
    Kept,
    Rejected,
}

/// A half-open token range `[start, end)` with its coarse label.
/// The spans of one stream partition it: disjoint, ordered, no gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseSpan {
    pub start: usize,
    pub end: usize,
    pub label: SpanLabel,
}

/// Partition the token stream into kept and rejected spans.
///
/// The keyword occurrence that terminates a rejected span is itself kept;
/// an anti-keyword inside an already-rejected span has no further effect.
pub fn mark_coarse(tokens: &[Token], lexicon: &Lexicon) -> Vec<CoarseSpan> {
    let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    let events = lexicon.match_coarse_events(&words);

    let mut spans: Vec<CoarseSpan> = Vec::new();
    let mut cursor = 0;
    let mut state = SpanLabel::Kept;
    let close = |spans: &mut Vec<CoarseSpan>, cursor: &mut usize, at: usize, label| {
        if at > *cursor {
            spans.push(CoarseSpan {
                start: *cursor,
                end: at,
                label,
            });
            *cursor = at;
        }
    };

    for (span, kind) in events {
        match (state, kind) {
            (SpanLabel::Kept, MatchKind::AntiKeyword) => {
                close(&mut spans, &mut cursor, span.start, SpanLabel::Kept);
                state = SpanLabel::Rejected;
            }
            (SpanLabel::Rejected, MatchKind::Keyword) => {
                close(&mut spans, &mut cursor, span.start, SpanLabel::Rejected);
                state = SpanLabel::Kept;
            }
            _ => {}
        }
    }
    close(&mut spans, &mut cursor, tokens.len(), state);
    spans
}

/// On-disk product of the coarse stage: the token stream together with its
/// spans, so the sentence stage can run from this file alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanFile {
    pub tokens: Vec<Token>,
    pub spans: Vec<CoarseSpan>,
}

pub fn write_span_file<W: std::io::Write>(mut w: W, file: &SpanFile) -> crate::error::Result<()> {
    serde_json::to_writer_pretty(&mut w, file)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_span_file<R: std::io::BufRead>(r: R) -> crate::error::Result<SpanFile> {
    Ok(serde_json::from_reader(r)?)
}
