//! Pose features and centroid stick figures.
//!
//! A frame becomes a 99-dimensional feature vector: translated so the hip
//! midpoint is the origin and scaled so the shoulder-to-hip torso length
//! is 1, which removes camera translation and zoom before clustering.
//! Cluster centroids render as 2-D SVG stick figures over a fixed edge list.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pose::{LandmarkId, PoseFrame, LANDMARK_COUNT};

/// Feature dimensionality: 33 landmarks times x, y, z.
pub const FEATURE_DIM: usize = 3 * LANDMARK_COUNT;

/// Skeleton edges over landmark codes: head chain, arms with hands, torso,
/// legs down to heels and foot indices.
pub const SKELETON_EDGES: &[(usize, usize)] = &[
    // head
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 7),
    (0, 4),
    (4, 5),
    (5, 6),
    (6, 8),
    (9, 10),
    // arms and hands
    (11, 12),
    (11, 13),
    (13, 15),
    (15, 17),
    (15, 19),
    (15, 21),
    (17, 19),
    (12, 14),
    (14, 16),
    (16, 18),
    (16, 20),
    (16, 22),
    (18, 20),
    // torso
    (11, 23),
    (12, 24),
    (23, 24),
    // legs and feet
    (23, 25),
    (25, 27),
    (27, 29),
    (27, 31),
    (29, 31),
    (24, 26),
    (26, 28),
    (28, 30),
    (28, 32),
    (30, 32),
];

/// Normalize a frame into its 99-dim feature vector.
///
/// Errors on a degenerate pose whose torso length is (near) zero; such
/// frames are excluded from clustering and reported.
pub fn normalize_pose(frame: &PoseFrame) -> Result<Vec<f64>> {
    let lm = |id: LandmarkId| frame.landmark(id);
    let left_hip = lm(LandmarkId::LeftHip);
    let right_hip = lm(LandmarkId::RightHip);
    let left_shoulder = lm(LandmarkId::LeftShoulder);
    let right_shoulder = lm(LandmarkId::RightShoulder);

    let hip_mid = [
        (left_hip.x + right_hip.x) / 2.0,
        (left_hip.y + right_hip.y) / 2.0,
        (left_hip.z + right_hip.z) / 2.0,
    ];
    let shoulder_mid = [
        (left_shoulder.x + right_shoulder.x) / 2.0,
        (left_shoulder.y + right_shoulder.y) / 2.0,
        (left_shoulder.z + right_shoulder.z) / 2.0,
    ];
    let torso = ((shoulder_mid[0] - hip_mid[0]).powi(2)
        + (shoulder_mid[1] - hip_mid[1]).powi(2)
        + (shoulder_mid[2] - hip_mid[2]).powi(2))
    .sqrt();
    if torso < 1e-9 {
        return Err(Error::Validation(format!(
            "frame {}: zero torso length, cannot normalize",
            frame.frame_index
        )));
    }

    let mut features = Vec::with_capacity(FEATURE_DIM);
    for landmark in &frame.landmarks {
        features.push((landmark.x - hip_mid[0]) / torso);
        features.push((landmark.y - hip_mid[1]) / torso);
        features.push((landmark.z - hip_mid[2]) / torso);
    }
    Ok(features)
}

const SVG_SIZE: f64 = 400.0;
const SVG_MARGIN: f64 = 30.0;

/// Render a 99-dim centroid as an SVG stick figure (x-y projection).
/// Output is a pure function of the input, so identical centroids produce
/// identical files.
pub fn render_centroid_svg(centroid: &[f64]) -> String {
    assert_eq!(centroid.len(), FEATURE_DIM, "centroid must have 99 dims");
    let xs: Vec<f64> = (0..LANDMARK_COUNT).map(|i| centroid[3 * i]).collect();
    let ys: Vec<f64> = (0..LANDMARK_COUNT).map(|i| centroid[3 * i + 1]).collect();

    let min_x = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_x = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_y = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_y = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (max_x - min_x).max(max_y - min_y).max(1e-6);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    // Center the figure in the viewport; y grows downward in both spaces.
    let offset_x = (SVG_SIZE - (max_x - min_x) * scale) / 2.0;
    let offset_y = (SVG_SIZE - (max_y - min_y) * scale) / 2.0;
    let px = |x: f64| (x - min_x) * scale + offset_x;
    let py = |y: f64| (y - min_y) * scale + offset_y;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" \
         viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\">\n"
    ));
    svg.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for &(a, b) in SKELETON_EDGES {
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"black\" stroke-width=\"2\"/>\n",
            px(xs[a]),
            py(ys[a]),
            px(xs[b]),
            py(ys[b])
        ));
    }
    for i in 0..LANDMARK_COUNT {
        svg.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"black\"/>\n",
            px(xs[i]),
            py(ys[i])
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write a centroid drawing to disk.
pub fn write_centroid_svg(path: impl AsRef<Path>, centroid: &[f64]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_centroid_svg(centroid)).map_err(|e| Error::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Landmark;

    /// An upright T-pose embedded in image-ish coordinates.
    pub(crate) fn t_pose_frame(index: u64) -> PoseFrame {
        use LandmarkId::*;
        let mut pts = [[0.0f64; 3]; LANDMARK_COUNT];
        let mut set = |id: LandmarkId, x: f64, y: f64| {
            pts[id.code()] = [x, y, 0.0];
        };
        set(Nose, 0.50, 0.10);
        set(LeftEyeInner, 0.52, 0.08);
        set(LeftEye, 0.54, 0.08);
        set(LeftEyeOuter, 0.56, 0.08);
        set(RightEyeInner, 0.48, 0.08);
        set(RightEye, 0.46, 0.08);
        set(RightEyeOuter, 0.44, 0.08);
        set(LeftEar, 0.58, 0.10);
        set(RightEar, 0.42, 0.10);
        set(MouthLeft, 0.52, 0.13);
        set(MouthRight, 0.48, 0.13);
        set(LeftShoulder, 0.62, 0.22);
        set(RightShoulder, 0.38, 0.22);
        set(LeftElbow, 0.74, 0.22);
        set(RightElbow, 0.26, 0.22);
        set(LeftWrist, 0.86, 0.22);
        set(RightWrist, 0.14, 0.22);
        set(LeftPinky, 0.90, 0.22);
        set(RightPinky, 0.10, 0.22);
        set(LeftIndex, 0.91, 0.21);
        set(RightIndex, 0.09, 0.21);
        set(LeftThumb, 0.89, 0.23);
        set(RightThumb, 0.11, 0.23);
        set(LeftHip, 0.56, 0.52);
        set(RightHip, 0.44, 0.52);
        set(LeftKnee, 0.56, 0.72);
        set(RightKnee, 0.44, 0.72);
        set(LeftAnkle, 0.56, 0.90);
        set(RightAnkle, 0.44, 0.90);
        set(LeftHeel, 0.57, 0.94);
        set(RightHeel, 0.43, 0.94);
        set(LeftFootIndex, 0.60, 0.96);
        set(RightFootIndex, 0.40, 0.96);
        PoseFrame {
            frame_index: index,
            landmarks: pts
                .iter()
                .map(|&[x, y, z]| Landmark { x, y, z, visibility: 1.0 })
                .collect(),
        }
    }

    fn shifted(frame: &PoseFrame, dx: f64, dy: f64, dz: f64, scale: f64) -> PoseFrame {
        PoseFrame {
            frame_index: frame.frame_index,
            landmarks: frame
                .landmarks
                .iter()
                .map(|l| Landmark {
                    x: l.x * scale + dx,
                    y: l.y * scale + dy,
                    z: l.z * scale + dz,
                    visibility: l.visibility,
                })
                .collect(),
        }
    }

    #[test]
    fn centered_unit_torso_frame_is_unchanged() {
        // Build a frame already hip-centered with torso length 1.
        let base = t_pose_frame(0);
        let features = normalize_pose(&base).unwrap();
        let recentered = PoseFrame {
            frame_index: 0,
            landmarks: features
                .chunks(3)
                .map(|c| Landmark { x: c[0], y: c[1], z: c[2], visibility: 1.0 })
                .collect(),
        };
        let again = normalize_pose(&recentered).unwrap();
        for (a, b) in features.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_invariance() {
        let base = t_pose_frame(0);
        let moved = shifted(&base, 5.0, 5.0, 5.0, 1.0);
        let a = normalize_pose(&base).unwrap();
        let b = normalize_pose(&moved).unwrap();
        let max_dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(max_dev <= 1e-9, "{max_dev}");
    }

    #[test]
    fn uniform_scale_invariance() {
        let base = t_pose_frame(0);
        let scaled = shifted(&base, 0.0, 0.0, 0.0, 2.0);
        let a = normalize_pose(&base).unwrap();
        let b = normalize_pose(&scaled).unwrap();
        let max_dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(max_dev <= 1e-9, "{max_dev}");
    }

    #[test]
    fn zero_torso_is_degenerate() {
        let mut frame = t_pose_frame(4);
        for lm in frame.landmarks.iter_mut() {
            lm.x = 0.5;
            lm.y = 0.5;
            lm.z = 0.0;
        }
        let err = normalize_pose(&frame).unwrap_err();
        assert!(err.to_string().contains("frame 4"), "{err}");
    }

    #[test]
    fn identical_centroids_render_identically() {
        let features = normalize_pose(&t_pose_frame(0)).unwrap();
        assert_eq!(render_centroid_svg(&features), render_centroid_svg(&features));
    }

    #[test]
    fn all_zero_centroid_renders_valid_point_figure() {
        let svg = render_centroid_svg(&vec![0.0; FEATURE_DIM]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), LANDMARK_COUNT);
        assert_eq!(svg.matches("<line").count(), SKELETON_EDGES.len());
    }

    // Golden produced once and hand-inspected; regenerate with
    // REGEN_GOLDEN=1 after an intentional rendering change.
    #[test]
    fn t_pose_render_matches_golden_file() {
        let features = normalize_pose(&t_pose_frame(0)).unwrap();
        let svg = render_centroid_svg(&features);
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/t_pose.svg");
        if std::env::var("REGEN_GOLDEN").is_ok() {
            std::fs::write(path, &svg).unwrap();
        }
        let golden = std::fs::read_to_string(path).expect("golden file present");
        assert_eq!(svg, golden);
    }
}
