//! Subtitle parsing (SRT / WebVTT) and conversion into a time-aligned
//! token stream.
//!
//! Cue-level times are all a subtitle document provides; word-level times
//! are assigned by linear interpolation across each cue so downstream
//! stages can anchor sentences and clips to the video timeline.

use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One subtitle cue: a display interval plus its normalized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cue {
    /// Ordinal position in the parsed document (0-based, after dedup).
    pub index: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

/// One word with an interpolated display interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// Lowercase word with edge punctuation stripped.
    pub text: String,
    pub start_ms: u64,
    pub end_ms: u64,
    /// Ordinal position in the stream.
    pub index: usize,
    /// True when the raw word ended with `.`, `!` or `?`. Carried through
    /// the on-disk token record so the sentence splitter sees punctuation
    /// boundaries regardless of whether it runs in-process or from files.
    #[serde(default)]
    pub sentence_final: bool,
}

/// Time-ordered tokens of one subtitle document.
pub type TokenStream = Vec<Token>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubtitleFormat {
    Srt,
    Vtt,
}

impl FromStr for SubtitleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "srt" => Ok(SubtitleFormat::Srt),
            "vtt" | "webvtt" => Ok(SubtitleFormat::Vtt),
            other => Err(Error::Usage(format!("unknown subtitle format `{other}`"))),
        }
    }
}

/// Guess the format from the document body (VTT files are self-marking).
pub fn detect_format(document: &str) -> SubtitleFormat {
    let head = document.trim_start_matches('\u{feff}').trim_start();
    if head.starts_with("WEBVTT") {
        SubtitleFormat::Vtt
    } else {
        SubtitleFormat::Srt
    }
}

/// Parse a subtitle document into cues sorted by start time.
///
/// Roll-up artifacts of auto-generated captions (a line repeated verbatim
/// in the immediately following cue) are kept only at their first
/// occurrence. Cues that are empty after normalization are dropped.
pub fn parse_subtitles(document: &str, format: SubtitleFormat) -> Result<Vec<Cue>> {
    let blocks = match format {
        SubtitleFormat::Srt => parse_srt_blocks(document)?,
        SubtitleFormat::Vtt => parse_vtt_blocks(document)?,
    };

    let mut cues = Vec::with_capacity(blocks.len());
    let mut prev_lines: Vec<String> = Vec::new();
    for block in blocks {
        let kept: Vec<String> = block
            .lines
            .iter()
            .filter(|line| !prev_lines.contains(line))
            .cloned()
            .collect();
        prev_lines = block.lines;
        let text = normalize_cue_text(&kept.join(" "));
        if text.is_empty() {
            continue;
        }
        cues.push(Cue {
            index: 0,
            start_ms: block.start_ms,
            end_ms: block.end_ms,
            text,
        });
    }

    cues.sort_by_key(|c| c.start_ms);
    for (i, cue) in cues.iter_mut().enumerate() {
        cue.index = i;
    }
    Ok(cues)
}

/// Split cue texts into tokens with interpolated times.
///
/// Each cue's interval is divided evenly over its word count, so the token
/// intervals tile `[start_ms, end_ms)` exactly. Words that are empty after
/// normalization (pure punctuation) are skipped.
pub fn tokenize(cues: &[Cue]) -> TokenStream {
    let mut tokens = Vec::new();
    for cue in cues {
        let words = normalize_words(&cue.text);
        let n = words.len() as u64;
        if n == 0 {
            continue;
        }
        let span = cue.end_ms - cue.start_ms;
        for (i, word) in words.into_iter().enumerate() {
            let i = i as u64;
            tokens.push(Token {
                text: word.text,
                start_ms: cue.start_ms + i * span / n,
                end_ms: cue.start_ms + (i + 1) * span / n,
                index: tokens.len(),
                sentence_final: word.sentence_final,
            });
        }
    }
    tokens
}

pub(crate) struct NormalizedWord {
    pub text: String,
    pub sentence_final: bool,
}

/// Lowercase and strip edge punctuation from every whitespace-separated
/// word, dropping words that are punctuation only. Intra-word punctuation
/// ("push-up", "don't") survives.
pub(crate) fn normalize_words(text: &str) -> Vec<NormalizedWord> {
    text.split_whitespace()
        .filter_map(|raw| {
            let sentence_final = raw.ends_with(['.', '!', '?']);
            let stripped = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if stripped.is_empty() {
                None
            } else {
                Some(NormalizedWord {
                    text: stripped.to_lowercase(),
                    sentence_final,
                })
            }
        })
        .collect()
}

fn normalize_cue_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct RawBlock {
    start_ms: u64,
    end_ms: u64,
    lines: Vec<String>,
}

fn parse_srt_blocks(document: &str) -> Result<Vec<RawBlock>> {
    let mut blocks = Vec::new();
    let mut lines = document
        .trim_start_matches('\u{feff}')
        .lines()
        .enumerate()
        .peekable();

    while let Some((lineno, line)) = lines.next() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        // A block may open with a numeric counter line; the timestamp line
        // is the one that contains the arrow.
        let (ts_lineno, ts_line) = if trimmed.contains("-->") {
            (lineno, trimmed.to_string())
        } else {
            match lines.next() {
                Some((no, l)) if l.contains("-->") => (no, l.trim().to_string()),
                Some((no, l)) => {
                    return Err(Error::Parse {
                        line: no + 1,
                        message: format!("expected timestamp line, found `{}`", l.trim()),
                    })
                }
                None => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: "block truncated before timestamp line".into(),
                    })
                }
            }
        };
        let (start_ms, end_ms) = parse_timestamp_line(&ts_line, ts_lineno + 1)?;
        let mut text_lines = Vec::new();
        while let Some((_, l)) = lines.peek() {
            if l.trim().is_empty() {
                break;
            }
            text_lines.push(lines.next().unwrap().1.trim().to_string());
        }
        blocks.push(RawBlock {
            start_ms,
            end_ms,
            lines: text_lines,
        });
    }
    Ok(blocks)
}

fn parse_vtt_blocks(document: &str) -> Result<Vec<RawBlock>> {
    let document = document.trim_start_matches('\u{feff}');
    if !document.trim_start().starts_with("WEBVTT") {
        return Err(Error::Parse {
            line: 1,
            message: "missing WEBVTT header".into(),
        });
    }
    let mut blocks = Vec::new();
    let mut lines = document.lines().enumerate().peekable();
    lines.next(); // header line

    while let Some((lineno, line)) = lines.next() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        // Metadata blocks are skipped wholesale.
        if trimmed.starts_with("NOTE") || trimmed.starts_with("STYLE") || trimmed.starts_with("REGION") {
            while let Some((_, l)) = lines.peek() {
                if l.trim().is_empty() {
                    break;
                }
                lines.next();
            }
            continue;
        }
        let (ts_lineno, ts_line) = if trimmed.contains("-->") {
            (lineno, trimmed.to_string())
        } else {
            // Cue identifier line precedes the timestamps.
            match lines.next() {
                Some((no, l)) if l.contains("-->") => (no, l.trim().to_string()),
                Some((no, l)) => {
                    return Err(Error::Parse {
                        line: no + 1,
                        message: format!("expected timestamp line, found `{}`", l.trim()),
                    })
                }
                None => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: "cue truncated before timestamp line".into(),
                    })
                }
            }
        };
        let (start_ms, end_ms) = parse_timestamp_line(&ts_line, ts_lineno + 1)?;
        let mut text_lines = Vec::new();
        while let Some((_, l)) = lines.peek() {
            if l.trim().is_empty() {
                break;
            }
            text_lines.push(strip_inline_tags(lines.next().unwrap().1.trim()));
        }
        blocks.push(RawBlock {
            start_ms,
            end_ms,
            lines: text_lines,
        });
    }
    Ok(blocks)
}

/// Remove inline markup (`<c>`, `<v Speaker>`, `<00:00:01.000>`) that
/// auto-generated VTT captions embed in cue text.
fn strip_inline_tags(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut in_tag = false;
    for c in line.chars() {
        match c {
            '<' => in_tag = true,
            '>' => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.trim().to_string()
}

fn parse_timestamp_line(line: &str, lineno: usize) -> Result<(u64, u64)> {
    let mut parts = line.split("-->");
    let start = parts.next().unwrap_or("").trim();
    // Cue settings may trail the end timestamp; take the first field.
    let end_field = parts.next().unwrap_or("").trim();
    let end = end_field.split_whitespace().next().unwrap_or("");
    let start_ms = parse_timestamp(start, lineno)?;
    let end_ms = parse_timestamp(end, lineno)?;
    if start_ms >= end_ms {
        return Err(Error::Parse {
            line: lineno,
            message: format!("cue start {start_ms}ms is not before end {end_ms}ms"),
        });
    }
    Ok((start_ms, end_ms))
}

/// `HH:MM:SS,mmm` (SRT), `HH:MM:SS.mmm` or `MM:SS.mmm` (VTT).
fn parse_timestamp(ts: &str, lineno: usize) -> Result<u64> {
    let bad = || Error::Parse {
        line: lineno,
        message: format!("malformed timestamp `{ts}`"),
    };
    let (clock, millis) = ts
        .rsplit_once([',', '.'])
        .ok_or_else(bad)?;
    if millis.len() != 3 || millis.bytes().any(|b| !b.is_ascii_digit()) {
        return Err(bad());
    }
    let millis: u64 = millis.parse().map_err(|_| bad())?;
    let fields: Vec<&str> = clock.split(':').collect();
    let (h, m, s) = match fields.as_slice() {
        [h, m, s] => (h.parse().map_err(|_| bad())?, m, s),
        [m, s] => (0u64, m, s),
        _ => return Err(bad()),
    };
    let m: u64 = m.parse().map_err(|_| bad())?;
    let s: u64 = s.parse().map_err(|_| bad())?;
    if m >= 60 || s >= 60 {
        return Err(bad());
    }
    Ok(((h * 60 + m) * 60 + s) * 1000 + millis)
}

/// Write tokens as JSONL, one object per line.
pub fn write_tokens<W: Write>(mut w: W, tokens: &[Token]) -> Result<()> {
    for token in tokens {
        serde_json::to_writer(&mut w, token)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read tokens back from JSONL.
pub fn read_tokens<R: BufRead>(r: R) -> Result<TokenStream> {
    let mut tokens = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let token: Token = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        tokens.push(token);
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_well_formed_cue() {
        let doc = "1\n00:00:01,000 --> 00:00:03,000\nkeep your back straight\n";
        let cues = parse_subtitles(doc, SubtitleFormat::Srt).unwrap();
        assert_eq!(cues.len(), 1);
        assert_eq!(cues[0].start_ms, 1000);
        assert_eq!(cues[0].end_ms, 3000);
        assert_eq!(cues[0].text, "keep your back straight");
    }

    #[test]
    fn empty_document() {
        assert_eq!(parse_subtitles("", SubtitleFormat::Srt).unwrap(), vec![]);
        assert_eq!(
            parse_subtitles("WEBVTT\n", SubtitleFormat::Vtt).unwrap(),
            vec![]
        );
    }

    #[test]
    fn rollup_duplicate_line_kept_at_first_occurrence() {
        // Auto-caption roll-up: cue 2 repeats cue 1's line, then adds one.
        let doc = "1\n00:00:00,000 --> 00:00:02,000\nkeep your back straight\n\n\
                   2\n00:00:02,000 --> 00:00:04,000\nkeep your back straight\nand your core tight\n";
        let cues = parse_subtitles(doc, SubtitleFormat::Srt).unwrap();
        assert_eq!(cues.len(), 2);
        assert_eq!(cues[0].text, "keep your back straight");
        assert_eq!(cues[1].text, "and your core tight");
    }

    #[test]
    fn rollup_line_repeats_across_three_cues() {
        let doc = "1\n00:00:00,000 --> 00:00:01,000\nline a\nline b\n\n\
                   2\n00:00:01,000 --> 00:00:02,000\nline b\n\n\
                   3\n00:00:02,000 --> 00:00:03,000\nline b\nline c\n";
        let cues = parse_subtitles(doc, SubtitleFormat::Srt).unwrap();
        // Cue 2 is dropped entirely (all lines repeated); cue 3 retains the
        // new line only, because cue 2's original line set still held "line b".
        assert_eq!(cues.len(), 2);
        assert_eq!(cues[0].text, "line a line b");
        assert_eq!(cues[1].text, "line c");
    }

    #[test]
    fn malformed_timestamp_reports_line() {
        let doc = "1\n00:00:xx,000 --> 00:00:03,000\ntext\n";
        match parse_subtitles(doc, SubtitleFormat::Srt) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn cue_start_must_precede_end() {
        let doc = "1\n00:00:03,000 --> 00:00:03,000\ntext here\n";
        assert!(matches!(
            parse_subtitles(doc, SubtitleFormat::Srt),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn unknown_format_tag_is_usage_error() {
        assert!(matches!(
            "ass".parse::<SubtitleFormat>(),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn vtt_with_header_settings_and_tags() {
        let doc = "WEBVTT\n\nNOTE autogenerated\n\n00:01.000 --> 00:03.000 align:start\n\
                   <c>push</c> <00:00:02.000>up form\n";
        let cues = parse_subtitles(doc, SubtitleFormat::Vtt).unwrap();
        assert_eq!(cues.len(), 1);
        assert_eq!(cues[0].start_ms, 1000);
        assert_eq!(cues[0].text, "push up form");
    }

    #[test]
    fn vtt_missing_header_is_parse_error() {
        assert!(matches!(
            parse_subtitles("00:01.000 --> 00:03.000\nhi\n", SubtitleFormat::Vtt),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn detect_format_from_body() {
        assert_eq!(detect_format("WEBVTT\n"), SubtitleFormat::Vtt);
        assert_eq!(detect_format("1\n00:00:01,000 -->"), SubtitleFormat::Srt);
    }

    #[test]
    fn tokenize_uniform_interpolation() {
        let cues = vec![Cue {
            index: 0,
            start_ms: 0,
            end_ms: 3000,
            text: "Push Up Form".into(),
        }];
        let tokens = tokenize(&cues);
        let expect = [("push", 0, 1000), ("up", 1000, 2000), ("form", 2000, 3000)];
        assert_eq!(tokens.len(), 3);
        for (token, (text, start, end)) in tokens.iter().zip(expect) {
            assert_eq!(token.text, text);
            assert_eq!(token.start_ms, start);
            assert_eq!(token.end_ms, end);
        }
    }

    #[test]
    fn punctuation_only_cue_yields_no_tokens() {
        let cues = vec![Cue {
            index: 0,
            start_ms: 0,
            end_ms: 1000,
            text: "...".into(),
        }];
        assert!(tokenize(&cues).is_empty());
    }

    #[test]
    fn hyphenated_words_stay_single_tokens() {
        let cues = vec![Cue {
            index: 0,
            start_ms: 0,
            end_ms: 1000,
            text: "a triangle push-up, here.".into(),
        }];
        let tokens = tokenize(&cues);
        let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["a", "triangle", "push-up", "here"]);
        assert!(tokens[3].sentence_final);
        assert!(!tokens[2].sentence_final);
    }

    // Oracle for the multi-cue fixture: recompute boundaries with the
    // floating-point floor formula instead of integer division.
    #[test]
    fn multi_cue_fixture_matches_interpolation_oracle() {
        let cues = vec![
            Cue {
                index: 0,
                start_ms: 100,
                end_ms: 2000,
                text: "one two three four five".into(),
            },
            Cue {
                index: 1,
                start_ms: 2000,
                end_ms: 2700,
                text: "six seven eight".into(),
            },
            Cue {
                index: 2,
                start_ms: 3100,
                end_ms: 9999,
                text: "nine ten eleven twelve".into(),
            },
        ];
        let tokens = tokenize(&cues);
        assert_eq!(tokens.len(), 12);

        let mut expected = Vec::new();
        for cue in &cues {
            let n = cue.text.split_whitespace().count() as f64;
            let (s, e) = (cue.start_ms as f64, cue.end_ms as f64);
            for i in 0..n as usize {
                let lo = (s + i as f64 * (e - s) / n).floor() as u64;
                let hi = (s + (i as f64 + 1.0) * (e - s) / n).floor() as u64;
                expected.push((lo, hi));
            }
        }
        for (token, (lo, hi)) in tokens.iter().zip(expected) {
            assert_eq!((token.start_ms, token.end_ms), (lo, hi), "{}", token.text);
        }
        // Monotone indices, non-overlapping times.
        for pair in tokens.windows(2) {
            assert_eq!(pair[1].index, pair[0].index + 1);
            assert!(pair[0].end_ms <= pair[1].start_ms);
        }
    }

    #[test]
    fn parse_is_deterministic() {
        let doc = "1\n00:00:01,000 --> 00:00:03,000\nfirst\n\n2\n00:00:03,000 --> 00:00:05,000\nsecond\n";
        let a = parse_subtitles(doc, SubtitleFormat::Srt).unwrap();
        let b = parse_subtitles(doc, SubtitleFormat::Srt).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn token_jsonl_roundtrip() {
        let cues = parse_subtitles(
            "1\n00:00:01,000 --> 00:00:03,000\nKeep your back straight.\n",
            SubtitleFormat::Srt,
        )
        .unwrap();
        let tokens = tokenize(&cues);
        let mut buf = Vec::new();
        write_tokens(&mut buf, &tokens).unwrap();
        let back = read_tokens(buf.as_slice()).unwrap();
        assert_eq!(tokens, back);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn cue_strategy() -> impl Strategy<Value = Vec<Cue>> {
            let word = prop::sample::select(vec![
                "push", "up", "form", "keep", "your", "back", "straight", "so", "ok.", "now!",
                "...", "a",
            ]);
            let text = prop::collection::vec(word, 1..8).prop_map(|w| w.join(" "));
            prop::collection::vec((0u64..100_000, 1u64..20_000, text), 0..12).prop_map(|raw| {
                let mut start = 0;
                raw.into_iter()
                    .enumerate()
                    .map(|(i, (gap, len, text))| {
                        let cue = Cue {
                            index: i,
                            start_ms: start + gap,
                            end_ms: start + gap + len,
                            text,
                        };
                        start += gap + len;
                        cue
                    })
                    .collect()
            })
        }

        proptest! {
            // Token intervals tile each cue [start, end) with no gaps or overlap.
            #[test]
            fn tokens_tile_cues(cues in cue_strategy()) {
                let tokens = tokenize(&cues);
                let mut iter = tokens.iter().peekable();
                for cue in &cues {
                    let n = normalize_words(&cue.text).len();
                    if n == 0 {
                        continue;
                    }
                    let mut cursor = cue.start_ms;
                    for _ in 0..n {
                        let t = iter.next().unwrap();
                        prop_assert_eq!(t.start_ms, cursor);
                        prop_assert!(t.start_ms <= t.end_ms);
                        cursor = t.end_ms;
                    }
                    prop_assert_eq!(cursor, cue.end_ms);
                }
                prop_assert!(iter.next().is_none());
            }

            // Space-joined token texts equal the normalized cue texts in order.
            #[test]
            fn token_texts_concatenate_to_cue_texts(cues in cue_strategy()) {
                let tokens = tokenize(&cues);
                let joined: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
                let expected: Vec<String> = cues
                    .iter()
                    .flat_map(|c| normalize_words(&c.text).into_iter().map(|w| w.text))
                    .collect();
                prop_assert_eq!(joined, expected);
            }
        }
    }
}
