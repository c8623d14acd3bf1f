//! Key-phrase extraction for relevant-incorrect sentences.
//!
//! Stage 1 looks for a verb + body-part dependency: the nearest verb-like
//! token within five words before a body-part keyword, extracting the span
//! from the verb through the keyword plus up to two trailing words. Stage 2
//! falls back to the fine keyword and its k-word context. Both produce a
//! verbatim contiguous span of the sentence, 2-8 words after edge trimming.

use crate::lexicon::{Lexicon, SetKind};
use crate::sentence::{Sentence, SummaryMethod, SummaryPhrase};

/// How far before a body-part keyword the verb search reaches.
const VERB_WINDOW: usize = 5;
/// Words kept after the body-part keyword in stage 1.
const TRAIL_WORDS: usize = 2;
const MIN_WORDS: usize = 2;
const MAX_WORDS: usize = 8;

/// Extract an error phrase from a relevant-incorrect sentence.
///
/// Returns `None` when neither stage yields a phrase within the length
/// bounds; the clip then keeps its label without a summary.
pub fn summarize(sentence: &Sentence, lexicon: &Lexicon) -> Option<SummaryPhrase> {
    dependency_phrase(sentence, lexicon).or_else(|| keyword_context_phrase(sentence, lexicon))
}

fn is_verb_like(lexicon: &Lexicon, word: &str) -> bool {
    lexicon.is_verb(word) || (word.len() >= 4 && word.ends_with("ing"))
}

fn dependency_phrase(sentence: &Sentence, lexicon: &Lexicon) -> Option<SummaryPhrase> {
    let words = &sentence.words;
    for span in lexicon.match_spans(words, SetKind::BodyPart) {
        let search_from = span.start.saturating_sub(VERB_WINDOW);
        let verb = (search_from..span.start)
            .rev()
            .find(|&j| is_verb_like(lexicon, &words[j]));
        let Some(verb) = verb else { continue };
        let end = (span.end + TRAIL_WORDS).min(words.len() - 1);
        if let Some((s, e)) = fit_span(words, lexicon, verb, end, true) {
            return Some(phrase(words, s, e, SummaryMethod::Dependency));
        }
    }
    None
}

fn keyword_context_phrase(sentence: &Sentence, lexicon: &Lexicon) -> Option<SummaryPhrase> {
    let words = &sentence.words;
    let span = lexicon.match_spans(words, SetKind::FineKeyword).into_iter().next()?;
    let start = span.start.saturating_sub(lexicon.k);
    let end = (span.end + lexicon.k).min(words.len() - 1);
    let (s, e) = fit_span(words, lexicon, start, end, false)?;
    Some(phrase(words, s, e, SummaryMethod::KeywordContext))
}

/// Enforce the 2-8 word bounds on `[start, end]`, optionally trimming
/// stop-words at the edges first; over-long spans shed trailing words.
fn fit_span(
    words: &[String],
    lexicon: &Lexicon,
    start: usize,
    end: usize,
    trim_stops: bool,
) -> Option<(usize, usize)> {
    let (mut s, mut e) = (start, end);
    loop {
        if trim_stops {
            while s < e && lexicon.stop_words.contains(&words[s]) {
                s += 1;
            }
            while e > s && lexicon.stop_words.contains(&words[e]) {
                e -= 1;
            }
        }
        let len = e - s + 1;
        if len <= MAX_WORDS {
            return (len >= MIN_WORDS).then_some((s, e));
        }
        e = s + MAX_WORDS - 1;
    }
}

fn phrase(words: &[String], s: usize, e: usize, method: SummaryMethod) -> SummaryPhrase {
    SummaryPhrase {
        text: words[s..=e].join(" "),
        source_span: (s, e),
        method,
    }
}
