//! End-to-end orchestration over a project config.
//!
//! Each video runs ingest, coarse rejection, sentence splitting, relevance
//! classification with the visibility gate, correctness classification,
//! summarization, and clip building; every stage writes its file under
//! `<output>/<video_id>/` so any stage is individually re-loadable and
//! auditable. A stage error aborts that video, is listed in the report,
//! and the remaining videos continue. Cross-video analysis (visibility
//! statistics, clustering, centroid figures) runs over the survivors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{self, ClusterMode, FrameFeatures, KmeansParams, VisibilityTable};
use crate::clips::{self, BuildOptions, ClipRecord, DatasetSummary};
use crate::coarse::{self, SpanFile};
use crate::correctness::{self, TrigramModel, TrigramParams};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::pose::{self, PoseStream};
use crate::relevance::{self, VisibilityGate};
use crate::sentence::{self, Correctness, Relevance, RuleSegmenter, SentenceLimits};
use crate::subtitle::{self, SubtitleFormat};
use crate::summarize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Lexicon config file; the builtin lexicon when omitted.
    pub lexicon: Option<PathBuf>,
    /// Training corpus (TSV). Ignored when `model` is given.
    pub corpus: Option<PathBuf>,
    /// Pre-trained model file; takes precedence over `corpus`.
    pub model: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub tau_vis: f64,
    pub phi: f64,
    pub min_sentence_chars: usize,
    pub max_sentence_words: usize,
    pub max_sentence_ms: u64,
    pub gap_split_ms: u64,
    pub merge_gap: u64,
    pub alpha: f64,
    pub backoff: f64,
    pub cluster_mode: ClusterMode,
    pub kmeans_k: usize,
    pub kmeans_seed: u64,
    pub kmeans_tol: f64,
    pub kmeans_max_iter: usize,
    /// Worker threads for the per-video fan-out; 0 means all cores.
    pub workers: usize,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let limits = SentenceLimits::default();
        let gate = VisibilityGate::default();
        let kmeans = KmeansParams::default();
        let trigram = TrigramParams::default();
        ParamsConfig {
            tau_vis: gate.tau_vis,
            phi: gate.phi,
            min_sentence_chars: limits.min_chars,
            max_sentence_words: limits.max_words,
            max_sentence_ms: limits.max_display_ms,
            gap_split_ms: RuleSegmenter::default().gap_ms,
            merge_gap: BuildOptions::default().merge_gap,
            alpha: trigram.alpha,
            backoff: trigram.backoff,
            cluster_mode: ClusterMode::Combined,
            kmeans_k: kmeans.k,
            kmeans_seed: kmeans.seed,
            kmeans_tol: kmeans.tol,
            kmeans_max_iter: kmeans.max_iter,
            workers: 0,
        }
    }
}

impl ParamsConfig {
    pub fn limits(&self) -> SentenceLimits {
        SentenceLimits {
            min_chars: self.min_sentence_chars,
            max_words: self.max_sentence_words,
            max_display_ms: self.max_sentence_ms,
        }
    }

    pub fn gate(&self) -> VisibilityGate {
        VisibilityGate {
            tau_vis: self.tau_vis,
            phi: self.phi,
        }
    }

    pub fn kmeans(&self) -> KmeansParams {
        KmeansParams {
            k: self.kmeans_k,
            seed: self.kmeans_seed,
            max_iter: self.kmeans_max_iter,
            tol: self.kmeans_tol,
        }
    }

    pub fn trigram(&self) -> TrigramParams {
        TrigramParams {
            alpha: self.alpha,
            backoff: self.backoff,
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("params: {what}")))
            }
        };
        check(self.tau_vis >= 0.0 && self.tau_vis <= 1.0, "tau_vis must be in [0, 1]")?;
        check(self.phi >= 0.0 && self.phi <= 1.0, "phi must be in [0, 1]")?;
        check(self.max_sentence_words >= 1, "max_sentence_words must be >= 1")?;
        check(self.max_sentence_ms >= 1, "max_sentence_ms must be >= 1")?;
        check(self.alpha > 0.0, "alpha must be positive")?;
        check(self.backoff > 0.0, "backoff must be positive")?;
        check(self.kmeans_k >= 1, "kmeans_k must be >= 1")?;
        check(self.kmeans_tol >= 0.0, "kmeans_tol must be >= 0")?;
        check(self.kmeans_max_iter >= 1, "kmeans_max_iter must be >= 1")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoConfig {
    pub id: String,
    pub subtitles: PathBuf,
    pub poses: PathBuf,
    pub fps: f64,
    /// Defaults to the last pose frame index + 1.
    pub total_frames: Option<u64>,
    /// `auto`, `srt` or `vtt`; sniffed from the file when omitted or auto.
    pub format: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub videos: Vec<VideoConfig>,
}

impl PipelineConfig {
    /// Parse a config file and resolve every relative path against the
    /// file's directory; referenced inputs must exist.
    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.resolve_and_validate(base)?;
        Ok(config)
    }

    fn resolve_and_validate(&mut self, base: &Path) -> Result<()> {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let must_exist = |p: &Path| -> Result<()> {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::Config(format!("{} does not exist", p.display())))
            }
        };

        self.params.validate()?;
        if let Some(p) = self.paths.lexicon.as_mut() {
            resolve(p);
            must_exist(p)?;
        }
        if let Some(p) = self.paths.model.as_mut() {
            resolve(p);
            must_exist(p)?;
        }
        if let Some(p) = self.paths.corpus.as_mut() {
            resolve(p);
            must_exist(p)?;
        }
        if self.paths.model.is_none() && self.paths.corpus.is_none() {
            return Err(Error::Config(
                "paths: either `model` or `corpus` is required".into(),
            ));
        }
        resolve(&mut self.paths.output);
        let mut seen = std::collections::BTreeSet::new();
        for video in self.videos.iter_mut() {
            if !seen.insert(video.id.clone()) {
                return Err(Error::Config(format!("duplicate video id `{}`", video.id)));
            }
            if video.fps <= 0.0 {
                return Err(Error::Config(format!("video {}: fps must be positive", video.id)));
            }
            resolve(&mut video.subtitles);
            must_exist(&video.subtitles)?;
            resolve(&mut video.poses);
            must_exist(&video.poses)?;
        }
        Ok(())
    }
}

/// Per-stage record counts of one video.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StageCounts {
    pub cues: u64,
    pub tokens: u64,
    pub kept_spans: u64,
    pub rejected_spans: u64,
    pub sentences: u64,
    pub relevant: u64,
    pub relevant_incorrect: u64,
    pub summaries: u64,
    pub clips: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoReport {
    pub video_id: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub counts: StageCounts,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    /// Wall-clock stage time; varies between runs and is excluded from
    /// the determinism contract over dataset artifacts.
    pub timing_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub visibility_clips: u64,
    pub visibility_excluded: u64,
    pub significant_landmarks: u64,
    pub frames_clustered: u64,
    pub frames_skipped: u64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub videos: Vec<VideoReport>,
    pub failures: u64,
    pub totals: DatasetSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub analysis: Option<AnalysisReport>,
}

impl RunReport {
    /// Every video failed (and there was at least one).
    pub fn all_failed(&self) -> bool {
        !self.videos.is_empty() && self.failures == self.videos.len() as u64
    }
}

struct VideoOutcome {
    report: VideoReport,
    clips: Vec<ClipRecord>,
    poses: Option<PoseStream>,
}

/// Run the whole pipeline over a validated config.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    let lexicon = match &config.paths.lexicon {
        Some(path) => Lexicon::load(path)?,
        None => Lexicon::builtin(),
    };
    let out_dir = &config.paths.output;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e))?;

    let model = match (&config.paths.model, &config.paths.corpus) {
        (Some(path), _) => TrigramModel::load(path)?,
        (None, Some(path)) => {
            let corpus = correctness::TrainingCorpus::load(path)?;
            let model = correctness::train(&corpus, config.params.trigram())?;
            model.save_to_path(out_dir.join("model.json"))?;
            model
        }
        (None, None) => unreachable!("validated at load"),
    };

    let mut outcomes = run_videos(config, &lexicon, &model);
    outcomes.sort_by(|a, b| a.report.video_id.cmp(&b.report.video_id));

    // Combined manifest over the successful videos.
    let mut all_clips: Vec<ClipRecord> = Vec::new();
    for outcome in &outcomes {
        all_clips.extend(outcome.clips.iter().cloned());
    }
    let manifest_path = out_dir.join("manifest.jsonl");
    write_file(&manifest_path, |w| clips::write_manifest(w, &all_clips))?;

    let totals = clips::summarize_dataset(&all_clips);
    let failures = outcomes.iter().filter(|o| !o.report.ok).count() as u64;

    let analysis = if all_clips.is_empty() {
        None
    } else {
        Some(run_analysis(&outcomes, &config.params, out_dir)?)
    };

    let report = RunReport {
        videos: outcomes.into_iter().map(|o| o.report).collect(),
        failures,
        totals,
        analysis,
    };
    let report_path = out_dir.join("report.json");
    let file = std::fs::File::create(&report_path).map_err(|e| Error::file(&report_path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &report)?;
    Ok(report)
}

fn run_videos(config: &PipelineConfig, lexicon: &Lexicon, model: &TrigramModel) -> Vec<VideoOutcome> {
    let process = |video: &VideoConfig| -> VideoOutcome {
        let started = Instant::now();
        let result = process_video(video, lexicon, model, config);
        match result {
            Ok(mut outcome) => {
                outcome.report.timing_ms = started.elapsed().as_millis() as u64;
                outcome
            }
            Err(e) => VideoOutcome {
                report: VideoReport {
                    video_id: video.id.clone(),
                    ok: false,
                    error: Some(e.to_string()),
                    counts: StageCounts::default(),
                    warnings: Vec::new(),
                    timing_ms: started.elapsed().as_millis() as u64,
                },
                clips: Vec::new(),
                poses: None,
            },
        }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || config.videos.par_iter().map(process).collect();
        if config.params.workers > 0 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.params.workers)
                .build()
                .expect("thread pool");
            pool.install(run)
        } else {
            run()
        }
    }
    #[cfg(not(feature = "parallel"))]
    config.videos.iter().map(process).collect()
}

fn write_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>,
{
    let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    write(&mut writer)
}

fn process_video(
    video: &VideoConfig,
    lexicon: &Lexicon,
    model: &TrigramModel,
    config: &PipelineConfig,
) -> Result<VideoOutcome> {
    let params = &config.params;
    let video_dir = config.paths.output.join(&video.id);
    std::fs::create_dir_all(&video_dir).map_err(|e| Error::file(&video_dir, e))?;
    let mut counts = StageCounts::default();
    let mut warnings = Vec::new();

    // Ingest.
    let document = std::fs::read_to_string(&video.subtitles)
        .map_err(|e| Error::file(&video.subtitles, e))?;
    let format = match video.format.as_deref() {
        None | Some("auto") => subtitle::detect_format(&document),
        Some(tag) => tag.parse::<SubtitleFormat>()?,
    };
    let cues = subtitle::parse_subtitles(&document, format)?;
    let tokens = subtitle::tokenize(&cues);
    counts.cues = cues.len() as u64;
    counts.tokens = tokens.len() as u64;
    write_file(&video_dir.join("tokens.jsonl"), |w| {
        subtitle::write_tokens(w, &tokens)
    })?;

    // Coarse rejection.
    let spans = coarse::mark_coarse(&tokens, lexicon);
    counts.kept_spans = spans
        .iter()
        .filter(|s| s.label == coarse::SpanLabel::Kept)
        .count() as u64;
    counts.rejected_spans = spans.len() as u64 - counts.kept_spans;
    write_file(&video_dir.join("spans.json"), |w| {
        coarse::write_span_file(
            w,
            &SpanFile {
                tokens: tokens.clone(),
                spans: spans.clone(),
            },
        )
    })?;

    // Sentences.
    let segmenter = RuleSegmenter {
        gap_ms: params.gap_split_ms,
        ..RuleSegmenter::default()
    };
    let mut sentences = sentence::split_sentences(&tokens, &spans, &segmenter, &params.limits());
    counts.sentences = sentences.len() as u64;
    write_file(&video_dir.join("sentences.jsonl"), |w| {
        sentence::write_sentences(w, &sentences)
    })?;

    // Relevance with the visibility gate.
    let pose_frames = pose::load_pose_frames(&video.poses)?;
    let poses = PoseStream::new(video.id.clone(), video.fps, pose_frames)?;
    if poses.has_gaps() {
        warnings.push("pose stream has frame gaps; missing frames fail the visibility gate".into());
    }
    relevance::classify_batch(&mut sentences, lexicon, &poses, &params.gate());
    counts.relevant = sentences
        .iter()
        .filter(|s| s.relevance == Some(Relevance::Relevant))
        .count() as u64;

    // Correctness.
    correctness::classify_batch(&mut sentences, model);
    counts.relevant_incorrect = sentences
        .iter()
        .filter(|s| s.correctness == Some(Correctness::Incorrect))
        .count() as u64;

    // Summaries for relevant-incorrect sentences.
    for s in sentences.iter_mut() {
        if s.relevance == Some(Relevance::Relevant) && s.correctness == Some(Correctness::Incorrect) {
            s.summary = summarize::summarize(s, lexicon);
        }
    }
    counts.summaries = sentences.iter().filter(|s| s.summary.is_some()).count() as u64;
    write_file(&video_dir.join("labeled.jsonl"), |w| {
        sentence::write_sentences(w, &sentences)
    })?;

    // Clips.
    let total_frames = match video.total_frames {
        Some(n) => n,
        None => poses
            .frames
            .last()
            .map(|f| f.frame_index + 1)
            .ok_or_else(|| Error::Validation(format!("video {}: empty pose stream and no total_frames", video.id)))?,
    };
    let (clips, clip_warnings) = clips::build_clips(
        &sentences,
        &video.id,
        video.fps,
        total_frames,
        &BuildOptions {
            merge_gap: params.merge_gap,
        },
    )?;
    warnings.extend(clip_warnings);
    counts.clips = clips.len() as u64;
    write_file(&video_dir.join("manifest.jsonl"), |w| {
        clips::write_manifest(w, &clips)
    })?;

    Ok(VideoOutcome {
        report: VideoReport {
            video_id: video.id.clone(),
            ok: true,
            error: None,
            counts,
            warnings,
            timing_ms: 0,
        },
        clips,
        poses: Some(poses),
    })
}

fn run_analysis(
    outcomes: &[VideoOutcome],
    params: &ParamsConfig,
    out_dir: &Path,
) -> Result<AnalysisReport> {
    let mut warnings = Vec::new();

    // Visibility table over all successful videos.
    let mut table = VisibilityTable::default();
    let mut features = FrameFeatures::default();
    for outcome in outcomes {
        let Some(poses) = &outcome.poses else { continue };
        let video_table = analysis::clip_landmark_visibility(&outcome.clips, poses);
        table.rows.extend(video_table.rows);
        table.excluded.extend(video_table.excluded);
        features.extend(analysis::collect_frame_features(&outcome.clips, poses));
    }

    let mut significant = 0u64;
    match analysis::compare_visibility(&table) {
        Ok(rows) => {
            significant = rows.iter().filter(|r| r.significant).count() as u64;
            write_file(&out_dir.join("visibility.csv"), |w| {
                analysis::write_visibility_csv(w, &rows)
            })?;
        }
        Err(e) => warnings.push(format!("visibility comparison skipped: {e}")),
    }

    let frames_clustered = features.features.len() as u64;
    let frames_skipped = features.skipped.len() as u64;
    match analysis::cluster_collected(features, params.cluster_mode, &params.kmeans()) {
        Ok(run) => {
            warnings.extend(run.warnings.iter().cloned());
            let clusters_path = out_dir.join("clusters.json");
            let file =
                std::fs::File::create(&clusters_path).map_err(|e| Error::file(&clusters_path, e))?;
            serde_json::to_writer_pretty(std::io::BufWriter::new(file), &run)?;
            analysis::render_cluster_figures(&run, out_dir.join("figs"))?;
        }
        Err(e) => warnings.push(format!("clustering skipped: {e}")),
    }

    Ok(AnalysisReport {
        visibility_clips: table.rows.len() as u64,
        visibility_excluded: table.excluded.len() as u64,
        significant_landmarks: significant,
        frames_clustered,
        frames_skipped,
        warnings,
    })
}

/// Stable, machine-readable mapping of output files, for documentation
/// and tests.
pub fn output_layout(out_dir: &Path, video_ids: &[String]) -> BTreeMap<String, PathBuf> {
    let mut files = BTreeMap::new();
    files.insert("manifest".into(), out_dir.join("manifest.jsonl"));
    files.insert("report".into(), out_dir.join("report.json"));
    files.insert("visibility".into(), out_dir.join("visibility.csv"));
    files.insert("clusters".into(), out_dir.join("clusters.json"));
    files.insert("figs".into(), out_dir.join("figs"));
    for id in video_ids {
        let dir = out_dir.join(id);
        files.insert(format!("{id}/tokens"), dir.join("tokens.jsonl"));
        files.insert(format!("{id}/spans"), dir.join("spans.json"));
        files.insert(format!("{id}/sentences"), dir.join("sentences.jsonl"));
        files.insert(format!("{id}/labeled"), dir.join("labeled.jsonl"));
        files.insert(format!("{id}/manifest"), dir.join("manifest.jsonl"));
    }
    files
}
