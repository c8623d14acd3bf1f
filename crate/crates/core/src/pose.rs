//! Ingestion of per-frame 33-landmark pose records.
//!
//! The input format matches the de-facto full-body landmark schema: 33
//! named points, each with normalized x-y-z coordinates and a visibility
//! estimate in [0, 1]. Pose extraction itself is out of scope; any
//! upstream extractor that writes this schema can feed the pipeline.

use std::io::{BufRead, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of landmarks per frame.
pub const LANDMARK_COUNT: usize = 33;

/// The 33 full-body landmarks with their stable integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum LandmarkId {
    Nose = 0,
    LeftEyeInner = 1,
    LeftEye = 2,
    LeftEyeOuter = 3,
    RightEyeInner = 4,
    RightEye = 5,
    RightEyeOuter = 6,
    LeftEar = 7,
    RightEar = 8,
    MouthLeft = 9,
    MouthRight = 10,
    LeftShoulder = 11,
    RightShoulder = 12,
    LeftElbow = 13,
    RightElbow = 14,
    LeftWrist = 15,
    RightWrist = 16,
    LeftPinky = 17,
    RightPinky = 18,
    LeftIndex = 19,
    RightIndex = 20,
    LeftThumb = 21,
    RightThumb = 22,
    LeftHip = 23,
    RightHip = 24,
    LeftKnee = 25,
    RightKnee = 26,
    LeftAnkle = 27,
    RightAnkle = 28,
    LeftHeel = 29,
    RightHeel = 30,
    LeftFootIndex = 31,
    RightFootIndex = 32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Center,
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Center => "center",
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl LandmarkId {
    pub const ALL: [LandmarkId; LANDMARK_COUNT] = [
        LandmarkId::Nose,
        LandmarkId::LeftEyeInner,
        LandmarkId::LeftEye,
        LandmarkId::LeftEyeOuter,
        LandmarkId::RightEyeInner,
        LandmarkId::RightEye,
        LandmarkId::RightEyeOuter,
        LandmarkId::LeftEar,
        LandmarkId::RightEar,
        LandmarkId::MouthLeft,
        LandmarkId::MouthRight,
        LandmarkId::LeftShoulder,
        LandmarkId::RightShoulder,
        LandmarkId::LeftElbow,
        LandmarkId::RightElbow,
        LandmarkId::LeftWrist,
        LandmarkId::RightWrist,
        LandmarkId::LeftPinky,
        LandmarkId::RightPinky,
        LandmarkId::LeftIndex,
        LandmarkId::RightIndex,
        LandmarkId::LeftThumb,
        LandmarkId::RightThumb,
        LandmarkId::LeftHip,
        LandmarkId::RightHip,
        LandmarkId::LeftKnee,
        LandmarkId::RightKnee,
        LandmarkId::LeftAnkle,
        LandmarkId::RightAnkle,
        LandmarkId::LeftHeel,
        LandmarkId::RightHeel,
        LandmarkId::LeftFootIndex,
        LandmarkId::RightFootIndex,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    /// Body-part name without the side prefix, e.g. `EYE_INNER`.
    pub fn base_name(self) -> &'static str {
        use LandmarkId::*;
        match self {
            Nose => "NOSE",
            LeftEyeInner | RightEyeInner => "EYE_INNER",
            LeftEye | RightEye => "EYE",
            LeftEyeOuter | RightEyeOuter => "EYE_OUTER",
            LeftEar | RightEar => "EAR",
            MouthLeft | MouthRight => "MOUTH",
            LeftShoulder | RightShoulder => "SHOULDER",
            LeftElbow | RightElbow => "ELBOW",
            LeftWrist | RightWrist => "WRIST",
            LeftPinky | RightPinky => "PINKY",
            LeftIndex | RightIndex => "INDEX",
            LeftThumb | RightThumb => "THUMB",
            LeftHip | RightHip => "HIP",
            LeftKnee | RightKnee => "KNEE",
            LeftAnkle | RightAnkle => "ANKLE",
            LeftHeel | RightHeel => "HEEL",
            LeftFootIndex | RightFootIndex => "FOOT_INDEX",
        }
    }

    pub fn side(self) -> Side {
        use LandmarkId::*;
        match self {
            Nose => Side::Center,
            LeftEyeInner | LeftEye | LeftEyeOuter | LeftEar | MouthLeft | LeftShoulder
            | LeftElbow | LeftWrist | LeftPinky | LeftIndex | LeftThumb | LeftHip | LeftKnee
            | LeftAnkle | LeftHeel | LeftFootIndex => Side::Left,
            _ => Side::Right,
        }
    }

    /// Landmarks in report order: NOSE first, then left/right pairs per
    /// body part from head to feet.
    pub fn report_order() -> [LandmarkId; LANDMARK_COUNT] {
        use LandmarkId::*;
        [
            Nose,
            LeftEyeInner,
            RightEyeInner,
            LeftEye,
            RightEye,
            LeftEyeOuter,
            RightEyeOuter,
            LeftEar,
            RightEar,
            MouthLeft,
            MouthRight,
            LeftShoulder,
            RightShoulder,
            LeftElbow,
            RightElbow,
            LeftWrist,
            RightWrist,
            LeftPinky,
            RightPinky,
            LeftIndex,
            RightIndex,
            LeftThumb,
            RightThumb,
            LeftHip,
            RightHip,
            LeftKnee,
            RightKnee,
            LeftAnkle,
            RightAnkle,
            LeftHeel,
            RightHeel,
            LeftFootIndex,
            RightFootIndex,
        ]
    }
}

/// One landmark observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub visibility: f64,
}

/// One video frame's 33 landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub frame_index: u64,
    pub landmarks: Vec<Landmark>,
}

impl PoseFrame {
    pub fn landmark(&self, id: LandmarkId) -> &Landmark {
        &self.landmarks[id.code()]
    }
}

/// Arithmetic mean of the 33 visibility values.
pub fn mean_visibility(frame: &PoseFrame) -> f64 {
    frame.landmarks.iter().map(|l| l.visibility).sum::<f64>() / LANDMARK_COUNT as f64
}

/// Map a millisecond interval to the half-open frame range
/// `[floor(start*fps/1000), floor(end*fps/1000))`.
pub fn time_to_frames(start_ms: u64, end_ms: u64, fps: f64) -> Range<u64> {
    let lo = (start_ms as f64 * fps / 1000.0).floor() as u64;
    let hi = (end_ms as f64 * fps / 1000.0).floor() as u64;
    lo..hi
}

/// An ordered pose-frame stream for one video. Frame gaps are allowed and
/// reported; downstream visibility gating treats missing frames as failing.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseStream {
    pub video_id: String,
    pub fps: f64,
    pub frames: Vec<PoseFrame>,
}

impl PoseStream {
    pub fn new(video_id: impl Into<String>, fps: f64, frames: Vec<PoseFrame>) -> Result<Self> {
        if fps <= 0.0 {
            return Err(Error::Validation(format!("fps must be positive, got {fps}")));
        }
        for pair in frames.windows(2) {
            if pair[1].frame_index <= pair[0].frame_index {
                return Err(Error::Validation(format!(
                    "frame indices must be strictly increasing: {} then {}",
                    pair[0].frame_index, pair[1].frame_index
                )));
            }
        }
        Ok(PoseStream {
            video_id: video_id.into(),
            fps,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frames whose index lies in `range`, via binary search.
    pub fn frames_in_range(&self, range: &Range<u64>) -> &[PoseFrame] {
        let lo = self.frames.partition_point(|f| f.frame_index < range.start);
        let hi = self.frames.partition_point(|f| f.frame_index < range.end);
        &self.frames[lo..hi]
    }

    /// True when the stream skips frame indices.
    pub fn has_gaps(&self) -> bool {
        self.frames
            .windows(2)
            .any(|p| p[1].frame_index != p[0].frame_index + 1)
    }

    /// Duration in milliseconds implied by the last frame index.
    pub fn duration_ms(&self) -> u64 {
        match self.frames.last() {
            Some(last) => ((last.frame_index + 1) as f64 * 1000.0 / self.fps).round() as u64,
            None => 0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRecord {
    frame: u64,
    landmarks: Vec<[f64; 4]>,
}

fn validate_frame(frame: PoseFrame, prev: Option<u64>) -> Result<PoseFrame> {
    if frame.landmarks.len() != LANDMARK_COUNT {
        return Err(Error::Validation(format!(
            "frame {}: expected {LANDMARK_COUNT} landmarks, found {}",
            frame.frame_index,
            frame.landmarks.len()
        )));
    }
    for (i, lm) in frame.landmarks.iter().enumerate() {
        if !(0.0..=1.0).contains(&lm.visibility) {
            return Err(Error::Validation(format!(
                "frame {}: landmark {i} visibility {} outside [0, 1]",
                frame.frame_index, lm.visibility
            )));
        }
    }
    if let Some(prev) = prev {
        if frame.frame_index <= prev {
            return Err(Error::Validation(format!(
                "frame index {} not greater than previous {prev}",
                frame.frame_index
            )));
        }
    }
    Ok(frame)
}

/// Read frames from JSONL: `{"frame": n, "landmarks": [[x,y,z,visibility] x 33]}`.
pub fn read_pose_frames_jsonl<R: BufRead>(r: R) -> Result<Vec<PoseFrame>> {
    let mut frames: Vec<PoseFrame> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FrameRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let frame = PoseFrame {
            frame_index: record.frame,
            landmarks: record
                .landmarks
                .iter()
                .map(|&[x, y, z, visibility]| Landmark { x, y, z, visibility })
                .collect(),
        };
        frames.push(validate_frame(frame, frames.last().map(|f| f.frame_index))?);
    }
    Ok(frames)
}

/// Read frames from CSV with 133 columns: frame index plus x,y,z,visibility
/// per landmark. A non-numeric first line is treated as a header.
pub fn read_pose_frames_csv<R: BufRead>(r: R) -> Result<Vec<PoseFrame>> {
    let mut frames: Vec<PoseFrame> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if lineno == 0 && fields[0].parse::<u64>().is_err() {
            continue; // header
        }
        let bad = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        if fields.len() != 1 + 4 * LANDMARK_COUNT {
            return Err(bad(format!(
                "expected {} columns, found {}",
                1 + 4 * LANDMARK_COUNT,
                fields.len()
            )));
        }
        let frame_index: u64 = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad frame index `{}`", fields[0])))?;
        let mut landmarks = Vec::with_capacity(LANDMARK_COUNT);
        for chunk in fields[1..].chunks(4) {
            let mut vals = [0.0f64; 4];
            for (v, s) in vals.iter_mut().zip(chunk) {
                *v = s.parse().map_err(|_| bad(format!("bad number `{s}`")))?;
            }
            landmarks.push(Landmark {
                x: vals[0],
                y: vals[1],
                z: vals[2],
                visibility: vals[3],
            });
        }
        let frame = PoseFrame { frame_index, landmarks };
        frames.push(validate_frame(frame, frames.last().map(|f| f.frame_index))?);
    }
    Ok(frames)
}

/// Load a pose file, choosing the reader by extension (`.csv` or JSONL).
pub fn load_pose_frames(path: impl AsRef<Path>) -> Result<Vec<PoseFrame>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let reader = std::io::BufReader::new(file);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_pose_frames_csv(reader)
    } else {
        read_pose_frames_jsonl(reader)
    }
}

/// Write frames as JSONL; the inverse of [`read_pose_frames_jsonl`].
pub fn write_pose_frames_jsonl<W: Write>(mut w: W, frames: &[PoseFrame]) -> Result<()> {
    for frame in frames {
        let record = FrameRecord {
            frame: frame.frame_index,
            landmarks: frame
                .landmarks
                .iter()
                .map(|l| [l.x, l.y, l.z, l.visibility])
                .collect(),
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
