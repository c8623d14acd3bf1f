//! Labeled frame-range clips: the pipeline's terminal output.
//!
//! Each labeled sentence maps to a frame range; same-label ranges within
//! `merge_gap` frames merge, and every frame covered by no sentence
//! (including coarse-rejected regions) becomes part of an irrelevant clip.
//! The clips of a video always partition `[0, total_frames)` exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::time_to_frames;
use crate::sentence::{Correctness, Relevance, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipLabel {
    Irrelevant,
    RelevantCorrect,
    RelevantIncorrect,
}

impl ClipLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClipLabel::Irrelevant => "irrelevant",
            ClipLabel::RelevantCorrect => "relevant_correct",
            ClipLabel::RelevantIncorrect => "relevant_incorrect",
        }
    }

    pub const ALL: [ClipLabel; 3] = [
        ClipLabel::Irrelevant,
        ClipLabel::RelevantCorrect,
        ClipLabel::RelevantIncorrect,
    ];
}

/// A labeled half-open frame interval of one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipRecord {
    pub clip_id: String,
    pub video_id: String,
    pub label: ClipLabel,
    pub frame_start: u64,
    pub frame_end: u64,
    /// Ids of the sentences the clip was built from; empty for filler
    /// irrelevant clips.
    pub source_sentence_ids: Vec<u64>,
    /// Error phrase; only relevant-incorrect clips carry one.
    pub summary: Option<String>,
}

impl ClipRecord {
    pub fn length_frames(&self) -> u64 {
        self.frame_end - self.frame_start
    }
}

/// Clip construction knobs.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Adjacent same-label ranges separated by at most this many frames
    /// merge, absorbing the gap.
    pub merge_gap: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { merge_gap: 15 }
    }
}

/// Convert labeled sentences into clips covering `[0, total_frames)`.
///
/// Returns the clips plus human-readable warnings (clamped or skipped
/// sentence ranges). Sentences must be labeled and non-overlapping in time.
pub fn build_clips(
    sentences: &[Sentence],
    video_id: &str,
    fps: f64,
    total_frames: u64,
    options: &BuildOptions,
) -> Result<(Vec<ClipRecord>, Vec<String>)> {
    if total_frames == 0 {
        return Err(Error::Validation("total_frames must be positive".into()));
    }
    let mut warnings = Vec::new();

    struct Segment {
        start: u64,
        end: u64,
        label: ClipLabel,
        ids: Vec<u64>,
        summary: Option<String>,
    }

    let mut segments: Vec<Segment> = Vec::new();
    for sentence in sentences {
        let label = match sentence.relevance {
            Some(Relevance::Irrelevant) => ClipLabel::Irrelevant,
            Some(Relevance::Relevant) => match sentence.correctness {
                Some(Correctness::Correct) => ClipLabel::RelevantCorrect,
                Some(Correctness::Incorrect) => ClipLabel::RelevantIncorrect,
                None => {
                    return Err(Error::Validation(format!(
                        "sentence {} is relevant but has no correctness label",
                        sentence.id
                    )))
                }
            },
            None => {
                return Err(Error::Validation(format!(
                    "sentence {} has no relevance label",
                    sentence.id
                )))
            }
        };
        let range = time_to_frames(sentence.start_ms, sentence.end_ms, fps);
        let (start, mut end) = (range.start, range.end);
        if start >= total_frames {
            warnings.push(format!(
                "sentence {}: frame range [{start}, {end}) lies past total_frames {total_frames}, skipped",
                sentence.id
            ));
            continue;
        }
        if end > total_frames {
            warnings.push(format!(
                "sentence {}: frame range [{start}, {end}) clamped to total_frames {total_frames}",
                sentence.id
            ));
            end = total_frames;
        }
        if start == end {
            continue;
        }
        let summary = if label == ClipLabel::RelevantIncorrect {
            sentence.summary.as_ref().map(|s| s.text.clone())
        } else {
            None
        };
        segments.push(Segment {
            start,
            end,
            label,
            ids: vec![sentence.id],
            summary,
        });
    }

    segments.sort_by_key(|s| s.start);
    for pair in segments.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(Error::Validation(format!(
                "sentence frame ranges overlap: [{}, {}) and [{}, {})",
                pair[0].start, pair[0].end, pair[1].start, pair[1].end
            )));
        }
    }

    // Merge same-label neighbours across gaps of at most merge_gap frames;
    // the gap frames are absorbed into the merged clip.
    let mut merged: Vec<Segment> = Vec::new();
    for seg in segments {
        match merged.last_mut() {
            Some(last) if last.label == seg.label && seg.start - last.end <= options.merge_gap => {
                last.end = seg.end;
                last.ids.extend(seg.ids);
                if last.summary.is_none() {
                    last.summary = seg.summary;
                }
            }
            _ => merged.push(seg),
        }
    }

    // Fill uncovered frames with irrelevant clips, coalescing with
    // touching irrelevant neighbours.
    let mut clips: Vec<ClipRecord> = Vec::new();
    let mut push = |label: ClipLabel, start: u64, end: u64, ids: Vec<u64>, summary: Option<String>| {
        if let Some(last) = clips.last_mut() {
            if last.label == label && last.frame_end == start {
                last.frame_end = end;
                last.source_sentence_ids.extend(ids);
                if last.summary.is_none() {
                    last.summary = summary;
                }
                return;
            }
        }
        clips.push(ClipRecord {
            clip_id: String::new(),
            video_id: video_id.to_string(),
            label,
            frame_start: start,
            frame_end: end,
            source_sentence_ids: ids,
            summary,
        });
    };

    let mut cursor = 0;
    for seg in merged {
        if seg.start > cursor {
            push(ClipLabel::Irrelevant, cursor, seg.start, Vec::new(), None);
        }
        push(seg.label, seg.start, seg.end, seg.ids, seg.summary);
        cursor = seg.end;
    }
    if cursor < total_frames {
        push(ClipLabel::Irrelevant, cursor, total_frames, Vec::new(), None);
    }

    for (i, clip) in clips.iter_mut().enumerate() {
        clip.clip_id = format!("{video_id}-{i:04}");
    }
    debug_assert!(clips_partition(&clips, total_frames));
    Ok((clips, warnings))
}

/// Do the clips exactly tile `[0, total_frames)`?
pub fn clips_partition(clips: &[ClipRecord], total_frames: u64) -> bool {
    let mut cursor = 0;
    for clip in clips {
        if clip.frame_start != cursor || clip.frame_end <= clip.frame_start {
            return false;
        }
        cursor = clip.frame_end;
    }
    cursor == total_frames
}

/// Per-label clip count and mean length in frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub count: u64,
    pub mean_frames: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub irrelevant: LabelStats,
    pub relevant_correct: LabelStats,
    pub relevant_incorrect: LabelStats,
}

impl DatasetSummary {
    pub fn stats(&self, label: ClipLabel) -> LabelStats {
        match label {
            ClipLabel::Irrelevant => self.irrelevant,
            ClipLabel::RelevantCorrect => self.relevant_correct,
            ClipLabel::RelevantIncorrect => self.relevant_incorrect,
        }
    }
}

/// Exact counts and arithmetic-mean lengths per label.
pub fn summarize_dataset(clips: &[ClipRecord]) -> DatasetSummary {
    let stats = |label: ClipLabel| -> LabelStats {
        let mut count = 0u64;
        let mut total = 0u64;
        for clip in clips.iter().filter(|c| c.label == label) {
            count += 1;
            total += clip.length_frames();
        }
        LabelStats {
            count,
            mean_frames: if count > 0 { total as f64 / count as f64 } else { 0.0 },
        }
    };
    DatasetSummary {
        irrelevant: stats(ClipLabel::Irrelevant),
        relevant_correct: stats(ClipLabel::RelevantCorrect),
        relevant_incorrect: stats(ClipLabel::RelevantIncorrect),
    }
}

/// Manifest line: `{clip_id, video_id, label, frame_start, frame_end, summary}`.
#[derive(Debug, Serialize, Deserialize)]
struct ManifestRecord {
    clip_id: String,
    video_id: String,
    label: ClipLabel,
    frame_start: u64,
    frame_end: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    summary: Option<String>,
}

/// Write the manifest as JSONL, one clip per line.
pub fn write_manifest<W: Write>(mut w: W, clips: &[ClipRecord]) -> Result<()> {
    for clip in clips {
        let record = ManifestRecord {
            clip_id: clip.clip_id.clone(),
            video_id: clip.video_id.clone(),
            label: clip.label,
            frame_start: clip.frame_start,
            frame_end: clip.frame_end,
            summary: clip.summary.clone(),
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a manifest back. Source sentence ids are not part of the wire
/// format and come back empty.
pub fn read_manifest<R: BufRead>(r: R) -> Result<Vec<ClipRecord>> {
    let mut clips = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        clips.push(ClipRecord {
            clip_id: record.clip_id,
            video_id: record.video_id,
            label: record.label,
            frame_start: record.frame_start,
            frame_end: record.frame_end,
            source_sentence_ids: Vec::new(),
            summary: record.summary,
        });
    }
    Ok(clips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentence::{SummaryMethod, SummaryPhrase};

    fn labeled(
        id: u64,
        start_ms: u64,
        end_ms: u64,
        relevance: Relevance,
        correctness: Option<Correctness>,
    ) -> Sentence {
        let mut s = Sentence::new(id, vec!["w".into(); 5], start_ms, end_ms);
        s.relevance = Some(relevance);
        s.correctness = correctness;
        s
    }

    #[test]
    fn one_correct_sentence_in_hundred_frame_video() {
        // Frames [0, 60) at 30 fps = 0..2000 ms.
        let sentences = vec![labeled(0, 0, 2000, Relevance::Relevant, Some(Correctness::Correct))];
        let (clips, warnings) =
            build_clips(&sentences, "v", 30.0, 100, &BuildOptions::default()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(clips.len(), 2);
        assert_eq!(clips[0].label, ClipLabel::RelevantCorrect);
        assert_eq!((clips[0].frame_start, clips[0].frame_end), (0, 60));
        assert_eq!(clips[1].label, ClipLabel::Irrelevant);
        assert_eq!((clips[1].frame_start, clips[1].frame_end), (60, 100));
        assert!(clips_partition(&clips, 100));
    }

    #[test]
    fn adjacent_incorrect_sentences_merge_across_small_gap() {
        // Ranges [0, 60) and [63, 90): gap of 3 frames, merge_gap 15.
        let mut a = labeled(0, 0, 2000, Relevance::Relevant, Some(Correctness::Incorrect));
        a.summary = Some(SummaryPhrase {
            text: "having your butt up".into(),
            source_span: (0, 3),
            method: SummaryMethod::Dependency,
        });
        let b = labeled(1, 2100, 3000, Relevance::Relevant, Some(Correctness::Incorrect));
        let (clips, _) = build_clips(&[a, b], "v", 30.0, 100, &BuildOptions::default()).unwrap();
        let incorrect: Vec<&ClipRecord> = clips
            .iter()
            .filter(|c| c.label == ClipLabel::RelevantIncorrect)
            .collect();
        assert_eq!(incorrect.len(), 1);
        assert_eq!((incorrect[0].frame_start, incorrect[0].frame_end), (0, 90));
        assert_eq!(incorrect[0].summary.as_deref(), Some("having your butt up"));
        assert_eq!(incorrect[0].source_sentence_ids, vec![0, 1]);
        assert!(clips_partition(&clips, 100));
    }

    #[test]
    fn empty_sentence_list_yields_single_irrelevant_clip() {
        let (clips, _) = build_clips(&[], "v", 30.0, 500, &BuildOptions::default()).unwrap();
        assert_eq!(clips.len(), 1);
        assert_eq!(clips[0].label, ClipLabel::Irrelevant);
        assert_eq!((clips[0].frame_start, clips[0].frame_end), (0, 500));
    }

    #[test]
    fn merge_gap_zero_keeps_gapped_clips_apart() {
        let a = labeled(0, 0, 2000, Relevance::Relevant, Some(Correctness::Correct));
        let b = labeled(1, 2100, 3000, Relevance::Relevant, Some(Correctness::Correct));
        let (clips, _) =
            build_clips(&[a, b], "v", 30.0, 100, &BuildOptions { merge_gap: 0 }).unwrap();
        let correct: Vec<&ClipRecord> = clips
            .iter()
            .filter(|c| c.label == ClipLabel::RelevantCorrect)
            .collect();
        assert_eq!(correct.len(), 2);
        // The 3-frame hole between them becomes an irrelevant filler clip.
        assert_eq!(clips.len(), 4);
        assert!(clips_partition(&clips, 100));
    }

    #[test]
    fn touching_same_label_clips_coalesce_even_at_merge_gap_zero() {
        let a = labeled(0, 0, 2000, Relevance::Relevant, Some(Correctness::Correct));
        let b = labeled(1, 2000, 3000, Relevance::Relevant, Some(Correctness::Correct));
        let (clips, _) =
            build_clips(&[a, b], "v", 30.0, 100, &BuildOptions { merge_gap: 0 }).unwrap();
        let correct: Vec<&ClipRecord> = clips
            .iter()
            .filter(|c| c.label == ClipLabel::RelevantCorrect)
            .collect();
        assert_eq!(correct.len(), 1);
        assert_eq!((correct[0].frame_start, correct[0].frame_end), (0, 90));
    }

    #[test]
    fn range_past_total_frames_is_clamped_with_warning() {
        let a = labeled(0, 2000, 5000, Relevance::Relevant, Some(Correctness::Correct));
        let (clips, warnings) =
            build_clips(&[a], "v", 30.0, 100, &BuildOptions::default()).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("clamped"), "{warnings:?}");
        assert!(clips_partition(&clips, 100));
        assert_eq!(clips.last().unwrap().frame_end, 100);
    }

    #[test]
    fn unlabeled_sentence_is_an_error() {
        let s = Sentence::new(0, vec!["w".into()], 0, 1000);
        assert!(build_clips(&[s], "v", 30.0, 100, &BuildOptions::default()).is_err());
        let r = labeled(0, 0, 1000, Relevance::Relevant, None);
        assert!(build_clips(&[r], "v", 30.0, 100, &BuildOptions::default()).is_err());
    }

    #[test]
    fn merging_is_idempotent() {
        let a = labeled(0, 0, 2000, Relevance::Relevant, Some(Correctness::Correct));
        let b = labeled(1, 2100, 3000, Relevance::Relevant, Some(Correctness::Correct));
        let sentences = [a, b];
        let opts = BuildOptions::default();
        let (once, _) = build_clips(&sentences, "v", 30.0, 100, &opts).unwrap();
        let (twice, _) = build_clips(&sentences, "v", 30.0, 100, &opts).unwrap();
        assert_eq!(once, twice);
        // No two neighbouring clips share a label (maximal clips).
        for pair in once.windows(2) {
            assert_ne!(pair[0].label, pair[1].label);
        }
    }

    #[test]
    fn summary_only_on_incorrect_clips() {
        let mut a = labeled(0, 0, 1000, Relevance::Relevant, Some(Correctness::Correct));
        a.summary = Some(SummaryPhrase {
            text: "should never appear".into(),
            source_span: (0, 2),
            method: SummaryMethod::Dependency,
        });
        let (clips, _) = build_clips(&[a], "v", 30.0, 100, &BuildOptions::default()).unwrap();
        assert!(clips.iter().all(|c| c.summary.is_none()));
    }

    #[test]
    fn dataset_summary_counts_and_means() {
        let mk = |label, start, end| ClipRecord {
            clip_id: "c".into(),
            video_id: "v".into(),
            label,
            frame_start: start,
            frame_end: end,
            source_sentence_ids: vec![],
            summary: None,
        };
        let clips = vec![
            mk(ClipLabel::RelevantCorrect, 0, 10),
            mk(ClipLabel::RelevantCorrect, 20, 40),
            mk(ClipLabel::Irrelevant, 40, 100),
        ];
        let summary = summarize_dataset(&clips);
        assert_eq!(summary.relevant_correct.count, 2);
        assert!((summary.relevant_correct.mean_frames - 15.0).abs() < 1e-12);
        assert_eq!(summary.irrelevant.count, 1);
        assert_eq!(summary.relevant_incorrect.count, 0);
        assert_eq!(summary.relevant_incorrect.mean_frames, 0.0);

        let empty = summarize_dataset(&[]);
        assert_eq!(empty.irrelevant.count, 0);
        assert_eq!(empty.relevant_correct.count, 0);
    }

    #[test]
    fn clip_lengths_sum_to_total_frames() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let total: u64 = rng.gen_range(50..5000);
            let mut t = 0u64;
            let mut sentences = Vec::new();
            let mut id = 0;
            while t < total * 33 {
                let gap: u64 = rng.gen_range(0..2000);
                let len: u64 = rng.gen_range(200..4000);
                let (start, end) = (t + gap, t + gap + len);
                t = end;
                let (relevance, correctness) = match rng.gen_range(0..3) {
                    0 => (Relevance::Irrelevant, None),
                    1 => (Relevance::Relevant, Some(Correctness::Correct)),
                    _ => (Relevance::Relevant, Some(Correctness::Incorrect)),
                };
                sentences.push(labeled(id, start, end, relevance, correctness));
                id += 1;
            }
            let (clips, _) =
                build_clips(&sentences, "v", 30.0, total, &BuildOptions::default()).unwrap();
            assert!(clips_partition(&clips, total));
            let sum: u64 = clips.iter().map(|c| c.length_frames()).sum();
            assert_eq!(sum, total);
        }
    }

    #[test]
    fn manifest_roundtrip() {
        let sentences = vec![
            labeled(0, 0, 2000, Relevance::Relevant, Some(Correctness::Correct)),
            labeled(1, 3000, 4000, Relevance::Irrelevant, None),
        ];
        let (clips, _) = build_clips(&sentences, "vid", 30.0, 200, &BuildOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_manifest(&mut buf, &clips).unwrap();
        let back = read_manifest(buf.as_slice()).unwrap();
        assert_eq!(back.len(), clips.len());
        for (a, b) in clips.iter().zip(&back) {
            assert_eq!(a.clip_id, b.clip_id);
            assert_eq!(a.label, b.label);
            assert_eq!((a.frame_start, a.frame_end), (b.frame_start, b.frame_end));
            assert_eq!(a.summary, b.summary);
        }
    }
}
