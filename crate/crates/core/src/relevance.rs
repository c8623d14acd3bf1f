//! Per-sentence relevance classification.
//!
//! Pass 1 marks the context window around every fine keyword as relevant;
//! pass 2 marks the window around every fine anti-keyword as irrelevant,
//! overwriting pass-1 marks. The sentence label is a majority vote over
//! word marks (tie goes to irrelevant), gated by full-body visibility over
//! the sentence's frame range.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::lexicon::{Lexicon, SetKind};
use crate::pose::{mean_visibility, time_to_frames, PoseStream};
use crate::sentence::{GateInfo, Relevance, Sentence};

/// Per-word mark state. Anti-keyword marks are applied last and are final.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    None,
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordMark {
    /// Word position within the sentence.
    pub token_index: usize,
    pub mark: Mark,
}

/// Stamp the k-word context windows. Keyword windows first, anti-keyword
/// windows second so they overwrite; the trigger phrase's own tokens are
/// part of the window.
pub fn mark_words(sentence: &Sentence, lexicon: &Lexicon) -> Vec<WordMark> {
    let words = &sentence.words;
    let n = words.len();
    let mut marks = vec![Mark::None; n];
    let k = lexicon.k;

    for span in lexicon.match_spans(words, SetKind::FineKeyword) {
        let lo = span.start.saturating_sub(k);
        let hi = (span.end + k).min(n.saturating_sub(1));
        for mark in &mut marks[lo..=hi] {
            *mark = Mark::Relevant;
        }
    }
    for span in lexicon.match_spans(words, SetKind::FineAntiKeyword) {
        let lo = span.start.saturating_sub(k);
        let hi = (span.end + k).min(n.saturating_sub(1));
        for mark in &mut marks[lo..=hi] {
            *mark = Mark::Irrelevant;
        }
    }

    marks
        .into_iter()
        .enumerate()
        .map(|(token_index, mark)| WordMark { token_index, mark })
        .collect()
}

/// Majority vote: strictly more relevant than irrelevant marks wins;
/// ties and all-unmarked sentences are irrelevant.
pub fn vote(marks: &[WordMark]) -> Relevance {
    let relevant = marks.iter().filter(|m| m.mark == Mark::Relevant).count();
    let irrelevant = marks.iter().filter(|m| m.mark == Mark::Irrelevant).count();
    if relevant > irrelevant {
        Relevance::Relevant
    } else {
        Relevance::Irrelevant
    }
}

/// Full-body visibility gate parameters.
#[derive(Debug, Clone, Copy)]
pub struct VisibilityGate {
    /// Minimum per-frame mean visibility for a frame to qualify.
    pub tau_vis: f64,
    /// Minimum fraction of the sentence's frames that must qualify.
    pub phi: f64,
}

impl Default for VisibilityGate {
    fn default() -> Self {
        VisibilityGate {
            tau_vis: 0.5,
            phi: 0.5,
        }
    }
}

/// Check that the full body is visible during the sentence's interval.
///
/// The denominator is the expected frame count of the interval, so frames
/// missing from the stream count as failing. An interval with no pose data
/// at all fails with `no_pose_data` set.
pub fn gate_by_visibility(sentence: &Sentence, poses: &PoseStream, gate: &VisibilityGate) -> GateInfo {
    let range = time_to_frames(sentence.start_ms, sentence.end_ms, poses.fps);
    let expected = range.end - range.start;
    let present = poses.frames_in_range(&range);
    if present.is_empty() {
        return GateInfo {
            pass: false,
            no_pose_data: true,
            qualifying_frames: 0,
            expected_frames: expected,
        };
    }
    let qualifying = present
        .iter()
        .filter(|f| mean_visibility(f) >= gate.tau_vis)
        .count() as u64;
    GateInfo {
        pass: qualifying as f64 >= gate.phi * expected as f64,
        no_pose_data: false,
        qualifying_frames: qualifying,
        expected_frames: expected,
    }
}

/// Label one sentence: window marks, vote, then the visibility gate, which
/// demotes a relevant sentence to irrelevant when it fails.
pub fn classify_sentence(
    sentence: &mut Sentence,
    lexicon: &Lexicon,
    poses: &PoseStream,
    gate: &VisibilityGate,
) {
    let marks = mark_words(sentence, lexicon);
    let mut label = vote(&marks);
    let info = gate_by_visibility(sentence, poses, gate);
    if label == Relevance::Relevant && !info.pass {
        label = Relevance::Irrelevant;
    }
    sentence.relevance = Some(label);
    sentence.gate = Some(info);
}

/// Label a batch of sentences, in parallel with the `parallel` feature.
pub fn classify_batch(
    sentences: &mut [Sentence],
    lexicon: &Lexicon,
    poses: &PoseStream,
    gate: &VisibilityGate,
) {
    #[cfg(feature = "parallel")]
    sentences
        .par_iter_mut()
        .for_each(|s| classify_sentence(s, lexicon, poses, gate));
    #[cfg(not(feature = "parallel"))]
    classify_batch_seq(sentences, lexicon, poses, gate);
}

/// Sequential reference path for [`classify_batch`].
pub fn classify_batch_seq(
    sentences: &mut [Sentence],
    lexicon: &Lexicon,
    poses: &PoseStream,
    gate: &VisibilityGate,
) {
    for s in sentences.iter_mut() {
        classify_sentence(s, lexicon, poses, gate);
    }
}
