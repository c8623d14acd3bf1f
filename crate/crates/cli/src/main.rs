//! Command-line front end: every pipeline stage as a subcommand, plus an
//! end-to-end `pipeline run` driven by a project config file.
//!
//! Set `CLIPLABEL_LOG=debug|info|warn` to control log verbosity.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cliplabel_core::analysis::{self, ClusterMode, KmeansParams};
use cliplabel_core::clips::{self, BuildOptions, ClipLabel};
use cliplabel_core::coarse::{self, SpanFile};
use cliplabel_core::correctness::{self, TrainingCorpus, TrigramModel, TrigramParams};
use cliplabel_core::lexicon::{Lexicon, SetKind};
use cliplabel_core::pipeline::{self, PipelineConfig};
use cliplabel_core::pose::{self, PoseStream};
use cliplabel_core::relevance::{self, VisibilityGate};
use cliplabel_core::sentence::{self, RuleSegmenter, SentenceLimits};
use cliplabel_core::subtitle::{self, SubtitleFormat};
use cliplabel_core::summarize;

#[derive(Parser)]
#[command(name = "cliplabel", version, about = "Label exercise-video clips from subtitles and pose streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a subtitle file into a time-aligned token stream.
    Ingest(IngestArgs),
    /// Lexicon utilities.
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Coarse and sentence segmentation.
    #[command(subcommand)]
    Segment(SegmentCmd),
    /// Sentence classification stages.
    #[command(subcommand)]
    Classify(ClassifyCmd),
    /// Train or apply the correctness model.
    #[command(subcommand)]
    Correctness(CorrectnessCmd),
    /// Add error summaries to relevant-incorrect sentences.
    Summarize(SummarizeArgs),
    /// Pose stream utilities.
    #[command(subcommand)]
    Poses(PosesCmd),
    /// Build or inspect clip manifests.
    #[command(subcommand)]
    Clips(ClipsCmd),
    /// Validate labels against pose data.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// End-to-end runs.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Args)]
struct IngestArgs {
    /// Subtitle file (.srt or .vtt).
    file: PathBuf,
    /// auto, srt or vtt.
    #[arg(long, default_value = "auto")]
    format: String,
    /// Output token JSONL.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LexiconCmd {
    /// Validate a lexicon file and print expansion counts.
    Check { file: PathBuf },
}

#[derive(Subcommand)]
enum SegmentCmd {
    /// Partition the token stream into kept and rejected spans.
    Coarse {
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split kept spans into sentences.
    Sentences {
        #[arg(long)]
        spans: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        min_chars: usize,
        #[arg(long, default_value_t = 30)]
        max_words: usize,
        #[arg(long, default_value_t = 15_000)]
        max_ms: u64,
        #[arg(long, default_value_t = 800)]
        gap_ms: u64,
    },
}

#[derive(Subcommand)]
enum ClassifyCmd {
    /// Relevance via keyword windows plus the visibility gate.
    Relevance {
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        fps: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        tau_vis: f64,
        #[arg(long, default_value_t = 0.5)]
        phi: f64,
    },
}

#[derive(Subcommand)]
enum CorrectnessCmd {
    /// Train the trigram model from a TSV corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.4)]
        backoff: f64,
    },
    /// Label relevant sentences as correct or incorrect.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to rewriting the input file in place.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    /// Defaults to rewriting the input file in place.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PosesCmd {
    /// Validate a pose file (JSONL or 133-column CSV).
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum ClipsCmd {
    /// Convert labeled sentences into a clip manifest.
    Build {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        fps: f64,
        /// Total frame count of the video.
        #[arg(long)]
        frames: u64,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the input file stem.
        #[arg(long)]
        video_id: Option<String>,
        #[arg(long, default_value_t = 15)]
        merge_gap: u64,
    },
    /// Per-label clip counts and mean lengths.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Rank-sum comparison of per-landmark visibility, relevant vs
    /// irrelevant clips, as CSV.
    Visibility {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// K-means clustering of clip frames with centroid figures.
    Cluster {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        /// combined or per-class.
        #[arg(long, default_value = "combined")]
        mode: String,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        /// Directory for centroid SVG files.
        #[arg(long)]
        render_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Run every stage over the videos in a project config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("CLIPLABEL_LOG", "warn"))
        .init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(
        fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn load_stream(poses: &Path, fps: f64) -> Result<PoseStream> {
    let frames = pose::load_pose_frames(poses)?;
    let video_id = poses
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "video".into());
    Ok(PoseStream::new(video_id, fps, frames)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => {
            let document = fs::read_to_string(&args.file)
                .with_context(|| format!("reading {}", args.file.display()))?;
            let format = match args.format.as_str() {
                "auto" => subtitle::detect_format(&document),
                tag => tag.parse::<SubtitleFormat>()?,
            };
            let cues = subtitle::parse_subtitles(&document, format)?;
            let tokens = subtitle::tokenize(&cues);
            let mut out = create(&args.out)?;
            subtitle::write_tokens(&mut out, &tokens)?;
            out.flush()?;
            eprintln!("{} cues, {} tokens -> {}", cues.len(), tokens.len(), args.out.display());
        }
        Command::Lexicon(LexiconCmd::Check { file }) => {
            let lexicon = Lexicon::load(&file)?;
            println!("lexicon ok, k = {}", lexicon.k);
            for kind in [
                SetKind::CoarseKeyword,
                SetKind::CoarseAntiKeyword,
                SetKind::FineKeyword,
                SetKind::FineAntiKeyword,
                SetKind::BodyPart,
            ] {
                let entries = lexicon.entries(kind);
                let variants: usize = entries.iter().map(|e| e.variants.len()).sum();
                println!("  {kind}: {} entries, {variants} variants", entries.len());
            }
            println!("  verbs: {} words", lexicon.verbs.len());
        }
        Command::Segment(SegmentCmd::Coarse { tokens, lexicon, out }) => {
            let token_stream = subtitle::read_tokens(open(&tokens)?)?;
            let lexicon = Lexicon::load(&lexicon)?;
            let spans = coarse::mark_coarse(&token_stream, &lexicon);
            let mut w = create(&out)?;
            coarse::write_span_file(
                &mut w,
                &SpanFile {
                    tokens: token_stream,
                    spans,
                },
            )?;
            w.flush()?;
        }
        Command::Segment(SegmentCmd::Sentences {
            spans,
            out,
            min_chars,
            max_words,
            max_ms,
            gap_ms,
        }) => {
            let file = coarse::read_span_file(open(&spans)?)?;
            let limits = SentenceLimits {
                min_chars,
                max_words,
                max_display_ms: max_ms,
            };
            let segmenter = RuleSegmenter {
                gap_ms,
                ..RuleSegmenter::default()
            };
            let sentences = sentence::split_sentences(&file.tokens, &file.spans, &segmenter, &limits);
            let mut w = create(&out)?;
            sentence::write_sentences(&mut w, &sentences)?;
            w.flush()?;
            eprintln!("{} sentences -> {}", sentences.len(), out.display());
        }
        Command::Classify(ClassifyCmd::Relevance {
            sentences,
            lexicon,
            poses,
            fps,
            out,
            tau_vis,
            phi,
        }) => {
            let mut batch = sentence::read_sentences(open(&sentences)?)?;
            let lexicon = Lexicon::load(&lexicon)?;
            let stream = load_stream(&poses, fps)?;
            let gate = VisibilityGate { tau_vis, phi };
            relevance::classify_batch(&mut batch, &lexicon, &stream, &gate);
            let mut w = create(&out)?;
            sentence::write_sentences(&mut w, &batch)?;
            w.flush()?;
        }
        Command::Correctness(CorrectnessCmd::Train { corpus, out, alpha, backoff }) => {
            let corpus = TrainingCorpus::load(&corpus)?;
            let model = correctness::train(&corpus, TrigramParams { alpha, backoff })?;
            model.save_to_path(&out)?;
            let (pc, pi) = model.priors();
            eprintln!(
                "trained on {} sentences (priors {:.3} correct / {:.3} incorrect) -> {}",
                corpus.entries.len(),
                pc,
                pi,
                out.display()
            );
        }
        Command::Correctness(CorrectnessCmd::Classify { model, input, out }) => {
            let model = TrigramModel::load(&model)?;
            let mut batch = sentence::read_sentences(open(&input)?)?;
            correctness::classify_batch(&mut batch, &model);
            let target = out.unwrap_or(input);
            let mut w = create(&target)?;
            sentence::write_sentences(&mut w, &batch)?;
            w.flush()?;
        }
        Command::Summarize(args) => {
            let lexicon = Lexicon::load(&args.lexicon)?;
            let mut batch = sentence::read_sentences(open(&args.input)?)?;
            for s in batch.iter_mut() {
                if s.relevance == Some(sentence::Relevance::Relevant)
                    && s.correctness == Some(sentence::Correctness::Incorrect)
                {
                    s.summary = summarize::summarize(s, &lexicon);
                }
            }
            let target = args.out.unwrap_or(args.input);
            let mut w = create(&target)?;
            sentence::write_sentences(&mut w, &batch)?;
            w.flush()?;
        }
        Command::Poses(PosesCmd::Validate { file }) => {
            let frames = pose::load_pose_frames(&file)?;
            let stream = PoseStream::new("validate", 30.0, frames)?;
            println!(
                "{}: {} frames, gaps: {}",
                file.display(),
                stream.len(),
                if stream.has_gaps() { "yes" } else { "no" }
            );
        }
        Command::Clips(ClipsCmd::Build {
            input,
            fps,
            frames,
            out,
            video_id,
            merge_gap,
        }) => {
            let sentences = sentence::read_sentences(open(&input)?)?;
            let video_id = video_id.unwrap_or_else(|| {
                input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "video".into())
            });
            let (clip_list, warnings) =
                clips::build_clips(&sentences, &video_id, fps, frames, &BuildOptions { merge_gap })?;
            for warning in &warnings {
                log::warn!("{warning}");
            }
            let mut w = create(&out)?;
            clips::write_manifest(&mut w, &clip_list)?;
            w.flush()?;
            eprintln!("{} clips -> {}", clip_list.len(), out.display());
        }
        Command::Clips(ClipsCmd::Stats { input }) => {
            let clip_list = clips::read_manifest(open(&input)?)?;
            let summary = clips::summarize_dataset(&clip_list);
            println!("label,count,mean_frames");
            for label in ClipLabel::ALL {
                let stats = summary.stats(label);
                println!("{},{},{:.1}", label.as_str(), stats.count, stats.mean_frames);
            }
        }
        Command::Analyze(AnalyzeCmd::Visibility { manifest, poses, out }) => {
            let clip_list = clips::read_manifest(open(&manifest)?)?;
            let stream = load_stream(&poses, 30.0)?;
            let table = analysis::clip_landmark_visibility(&clip_list, &stream);
            for excluded in &table.excluded {
                log::warn!("excluded clip: {excluded:?}");
            }
            let rows = analysis::compare_visibility(&table)?;
            let mut w = create(&out)?;
            analysis::write_visibility_csv(&mut w, &rows)?;
            w.flush()?;
            eprintln!(
                "{} clips compared, {} significant landmarks -> {}",
                table.rows.len(),
                rows.iter().filter(|r| r.significant).count(),
                out.display()
            );
        }
        Command::Analyze(AnalyzeCmd::Cluster {
            manifest,
            poses,
            mode,
            k,
            seed,
            max_iter,
            tol,
            out,
            render_dir,
        }) => {
            let clip_list = clips::read_manifest(open(&manifest)?)?;
            let stream = load_stream(&poses, 30.0)?;
            let mode: ClusterMode = mode.parse()?;
            let params = KmeansParams { k, seed, max_iter, tol };
            let run = analysis::cluster_frames(&clip_list, &stream, mode, &params)?;
            for warning in &run.warnings {
                log::warn!("{warning}");
            }
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            serde_json_writer(file, &run)?;
            if let Some(dir) = render_dir {
                let written = analysis::render_cluster_figures(&run, &dir)?;
                eprintln!("{} figures -> {}", written.len(), dir.display());
            }
        }
        Command::Pipeline(PipelineCmd::Run { config }) => {
            let config = PipelineConfig::load(&config)?;
            let report = pipeline::run_pipeline(&config)?;
            for video in &report.videos {
                let status = if video.ok { "ok" } else { "FAILED" };
                println!(
                    "{}: {status} ({} sentences, {} clips, {} ms)",
                    video.video_id, video.counts.sentences, video.counts.clips, video.timing_ms
                );
                if let Some(error) = &video.error {
                    println!("  error: {error}");
                }
            }
            println!(
                "totals: {} irrelevant / {} correct / {} incorrect clips",
                report.totals.irrelevant.count,
                report.totals.relevant_correct.count,
                report.totals.relevant_incorrect.count
            );
            if report.all_failed() {
                bail!("all {} videos failed", report.videos.len());
            }
        }
    }
    Ok(())
}

fn serde_json_writer<T: serde::Serialize>(file: fs::File, value: &T) -> Result<()> {
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
