//! Label validation from pose data: per-landmark visibility rank-sum
//! statistics and k-means clustering with centroid rendering.

mod kmeans;
mod ranksum;
mod skeleton;

pub use kmeans::{assign_points, assign_points_seq, kmeans, ClusterModel, KmeansParams};
pub use ranksum::{
    normal_approx_two_sided_p, rank_sum_test, PValueMethod, RankSumResult, EXACT_LIMIT,
};
pub use skeleton::{
    normalize_pose, render_centroid_svg, write_centroid_svg, FEATURE_DIM, SKELETON_EDGES,
};

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clips::{ClipLabel, ClipRecord};
use crate::error::{Error, Result};
use crate::pose::{LandmarkId, PoseStream, LANDMARK_COUNT};

/// p-value threshold reported as significant in output tables.
pub const SIGNIFICANCE_ALPHA: f64 = 0.05;

/// Per-clip mean visibility over each landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipVisibility {
    pub clip_id: String,
    pub label: ClipLabel,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExcludedClip {
    /// No pose frames inside the clip's range.
    NoFrames(String),
    /// Some landmark's mean visibility is zero: not every landmark was
    /// recognized in the clip.
    LandmarkNotRecognized(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VisibilityTable {
    pub rows: Vec<ClipVisibility>,
    pub excluded: Vec<ExcludedClip>,
}

fn clip_visibility(clip: &ClipRecord, poses: &PoseStream) -> std::result::Result<ClipVisibility, ExcludedClip> {
    let frames = poses.frames_in_range(&(clip.frame_start..clip.frame_end));
    if frames.is_empty() {
        return Err(ExcludedClip::NoFrames(clip.clip_id.clone()));
    }
    let mut means = vec![0.0f64; LANDMARK_COUNT];
    for frame in frames {
        for (slot, lm) in means.iter_mut().zip(&frame.landmarks) {
            *slot += lm.visibility;
        }
    }
    for slot in means.iter_mut() {
        *slot /= frames.len() as f64;
    }
    if means.iter().any(|&m| m <= 0.0) {
        return Err(ExcludedClip::LandmarkNotRecognized(clip.clip_id.clone()));
    }
    Ok(ClipVisibility {
        clip_id: clip.clip_id.clone(),
        label: clip.label,
        means,
    })
}

/// Mean visibility per clip and landmark, restricted to clips where every
/// landmark was recognized (mean visibility > 0). Excluded clips are
/// reported, not silently dropped.
pub fn clip_landmark_visibility(clips: &[ClipRecord], poses: &PoseStream) -> VisibilityTable {
    #[cfg(feature = "parallel")]
    let results: Vec<_> = clips.par_iter().map(|c| clip_visibility(c, poses)).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = clips.iter().map(|c| clip_visibility(c, poses)).collect();

    let mut table = VisibilityTable::default();
    for result in results {
        match result {
            Ok(row) => table.rows.push(row),
            Err(excluded) => table.excluded.push(excluded),
        }
    }
    table
}

/// Sequential reference path for [`clip_landmark_visibility`].
pub fn clip_landmark_visibility_seq(clips: &[ClipRecord], poses: &PoseStream) -> VisibilityTable {
    let mut table = VisibilityTable::default();
    for clip in clips {
        match clip_visibility(clip, poses) {
            Ok(row) => table.rows.push(row),
            Err(excluded) => table.excluded.push(excluded),
        }
    }
    table
}

/// One output row of the visibility comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkComparison {
    pub landmark: LandmarkId,
    /// Relevant-group median minus irrelevant-group median.
    pub delta_median: f64,
    pub p_value: f64,
    pub n_relevant: usize,
    pub n_irrelevant: usize,
    pub significant: bool,
}

/// Rank-sum comparison of relevant vs irrelevant per-clip visibility for
/// every landmark, rows in report order.
pub fn compare_visibility(table: &VisibilityTable) -> Result<Vec<LandmarkComparison>> {
    let relevant: Vec<&ClipVisibility> = table
        .rows
        .iter()
        .filter(|r| r.label != ClipLabel::Irrelevant)
        .collect();
    let irrelevant: Vec<&ClipVisibility> = table
        .rows
        .iter()
        .filter(|r| r.label == ClipLabel::Irrelevant)
        .collect();
    if relevant.is_empty() || irrelevant.is_empty() {
        return Err(Error::Validation(format!(
            "visibility comparison needs both groups: {} relevant, {} irrelevant clips",
            relevant.len(),
            irrelevant.len()
        )));
    }

    let mut out = Vec::with_capacity(LANDMARK_COUNT);
    for id in LandmarkId::report_order() {
        let a: Vec<f64> = relevant.iter().map(|r| r.means[id.code()]).collect();
        let b: Vec<f64> = irrelevant.iter().map(|r| r.means[id.code()]).collect();
        let result = rank_sum_test(&a, &b)?;
        out.push(LandmarkComparison {
            landmark: id,
            delta_median: result.delta_median,
            p_value: result.p_value,
            n_relevant: result.n_a,
            n_irrelevant: result.n_b,
            significant: result.p_value < SIGNIFICANCE_ALPHA,
        });
    }
    Ok(out)
}

/// Write the comparison as CSV: `landmark,side,delta_median,p_value,significant`.
pub fn write_visibility_csv<W: Write>(mut w: W, rows: &[LandmarkComparison]) -> Result<()> {
    writeln!(w, "landmark,side,delta_median,p_value,significant")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{}",
            row.landmark.base_name(),
            row.landmark.side().as_str(),
            row.delta_median,
            row.p_value,
            row.significant
        )?;
    }
    Ok(())
}

/// The cluster holding the largest share of one label's frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopCluster {
    pub cluster: usize,
    pub frames: u64,
    /// Fraction of the label's frames in that cluster.
    pub share: f64,
}

/// For each label, the cluster containing the largest percentage of its
/// frames; ties break to the lower cluster id. Labels with no frames are
/// omitted.
pub fn top_cluster_per_class(
    assignments: &[usize],
    frame_labels: &[ClipLabel],
    k: usize,
) -> BTreeMap<ClipLabel, TopCluster> {
    assert_eq!(assignments.len(), frame_labels.len());
    let mut per_label: BTreeMap<ClipLabel, Vec<u64>> = BTreeMap::new();
    for (&cluster, &label) in assignments.iter().zip(frame_labels) {
        per_label.entry(label).or_insert_with(|| vec![0; k])[cluster] += 1;
    }
    per_label
        .into_iter()
        .map(|(label, counts)| {
            let total: u64 = counts.iter().sum();
            let (cluster, &frames) = counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("k > 0");
            (
                label,
                TopCluster {
                    cluster,
                    frames,
                    share: frames as f64 / total as f64,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMode {
    /// All frames pooled, independent of their classification.
    Combined,
    /// Each label's frames clustered separately.
    PerClass,
}

impl std::str::FromStr for ClusterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "combined" => Ok(ClusterMode::Combined),
            "per-class" | "per_class" => Ok(ClusterMode::PerClass),
            other => Err(Error::Usage(format!("unknown cluster mode `{other}`"))),
        }
    }
}

/// Feature rows extracted from the clips' frames, with per-row labels.
#[derive(Debug, Default)]
pub struct FrameFeatures {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<ClipLabel>,
    /// Frames excluded as degenerate (zero torso), per clip.
    pub skipped: Vec<String>,
}

impl FrameFeatures {
    /// Append another video's rows.
    pub fn extend(&mut self, other: FrameFeatures) {
        self.features.extend(other.features);
        self.labels.extend(other.labels);
        self.skipped.extend(other.skipped);
    }
}

/// Normalize every pose frame covered by a clip; degenerate frames are
/// skipped and reported.
pub fn collect_frame_features(clips: &[ClipRecord], poses: &PoseStream) -> FrameFeatures {
    let mut out = FrameFeatures::default();
    for clip in clips {
        for frame in poses.frames_in_range(&(clip.frame_start..clip.frame_end)) {
            match normalize_pose(frame) {
                Ok(features) => {
                    out.features.push(features);
                    out.labels.push(clip.label);
                }
                Err(_) => out
                    .skipped
                    .push(format!("{}: frame {}", clip.clip_id, frame.frame_index)),
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombinedClustering {
    pub inertia: f64,
    pub cluster_frame_counts: Vec<u64>,
    pub top_per_class: BTreeMap<ClipLabel, TopCluster>,
    pub centroids: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassClustering {
    pub frames: u64,
    pub inertia: f64,
    pub cluster_frame_counts: Vec<u64>,
    pub centroids: Vec<Vec<f64>>,
}

/// Serialized result of an `analyze cluster` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterRun {
    pub mode: ClusterMode,
    pub k: usize,
    pub seed: u64,
    pub frames_clustered: u64,
    pub frames_skipped: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub combined: Option<CombinedClustering>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub per_class: BTreeMap<ClipLabel, ClassClustering>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Cluster the frames of one manifest + pose stream pair.
pub fn cluster_frames(
    clips: &[ClipRecord],
    poses: &PoseStream,
    mode: ClusterMode,
    params: &KmeansParams,
) -> Result<ClusterRun> {
    cluster_collected(collect_frame_features(clips, poses), mode, params)
}

/// Cluster already-collected feature rows (possibly from many videos).
pub fn cluster_collected(
    collected: FrameFeatures,
    mode: ClusterMode,
    params: &KmeansParams,
) -> Result<ClusterRun> {
    let mut run = ClusterRun {
        mode,
        k: params.k,
        seed: params.seed,
        frames_clustered: collected.features.len() as u64,
        frames_skipped: collected.skipped.len() as u64,
        combined: None,
        per_class: BTreeMap::new(),
        warnings: Vec::new(),
    };

    match mode {
        ClusterMode::Combined => {
            let model = kmeans(&collected.features, params)?;
            let mut counts = vec![0u64; params.k];
            for &a in &model.assignments {
                counts[a] += 1;
            }
            let top = top_cluster_per_class(&model.assignments, &collected.labels, params.k);
            for label in ClipLabel::ALL {
                if !top.contains_key(&label) {
                    run.warnings
                        .push(format!("label {} has no frames", label.as_str()));
                }
            }
            run.combined = Some(CombinedClustering {
                inertia: model.inertia,
                cluster_frame_counts: counts,
                top_per_class: top,
                centroids: model.centroids,
            });
        }
        ClusterMode::PerClass => {
            for label in ClipLabel::ALL {
                let subset: Vec<Vec<f64>> = collected
                    .features
                    .iter()
                    .zip(&collected.labels)
                    .filter(|(_, &l)| l == label)
                    .map(|(f, _)| f.clone())
                    .collect();
                if subset.is_empty() {
                    run.warnings
                        .push(format!("label {} has no frames", label.as_str()));
                    continue;
                }
                match kmeans(&subset, params) {
                    Ok(model) => {
                        let mut counts = vec![0u64; params.k];
                        for &a in &model.assignments {
                            counts[a] += 1;
                        }
                        run.per_class.insert(
                            label,
                            ClassClustering {
                                frames: subset.len() as u64,
                                inertia: model.inertia,
                                cluster_frame_counts: counts,
                                centroids: model.centroids,
                            },
                        );
                    }
                    Err(e) => run
                        .warnings
                        .push(format!("label {}: {e}", label.as_str())),
                }
            }
        }
    }
    Ok(run)
}

/// Render the run's centroids as SVG files under `dir`; returns the file
/// names written, in a deterministic order.
pub fn render_cluster_figures(run: &ClusterRun, dir: impl AsRef<Path>) -> Result<Vec<String>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut written = Vec::new();
    if let Some(combined) = &run.combined {
        for (label, top) in &combined.top_per_class {
            let name = format!("combined_top_{}.svg", label.as_str());
            write_centroid_svg(dir.join(&name), &combined.centroids[top.cluster])?;
            written.push(name);
        }
    }
    for (label, class) in &run.per_class {
        for (i, centroid) in class.centroids.iter().enumerate() {
            let name = format!("{}_cluster{i}.svg", label.as_str());
            write_centroid_svg(dir.join(&name), centroid)?;
            written.push(name);
        }
    }
    Ok(written)
}
