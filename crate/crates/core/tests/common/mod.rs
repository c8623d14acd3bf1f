//! Shared fixture builders and independent oracles for the integration and
//! acceptance suites. Everything here is deterministic: fixed seeds, fixed
//! scripts, reproducible bytes.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cliplabel_core::pose::LANDMARK_COUNT;

pub const FIXTURE_FPS: f64 = 30.0;
pub const FIXTURE_TOTAL_FRAMES: u64 = 1020;
pub const FIXTURE_VIDEO_IDS: [&str; 3] = ["v01", "v02", "v03"];

/// The planted error phrase the summarizer must recover.
pub const PLANTED_SUMMARY: &str = "having your butt up";

/// Hand-derived clip layout for every fixture video.
///
/// Sentence intervals: intro [1000, 9000) ms, correct [10000, 18400) ms,
/// incorrect [19400, 23400) ms; the outro is coarse-rejected. At 30 fps the
/// sentence frame ranges are [30, 270), [300, 552) and [582, 702); filler
/// irrelevant clips absorb the uncovered frames.
pub const EXPECTED_CLIPS: [(&str, u64, u64); 5] = [
    ("irrelevant", 0, 300),
    ("relevant_correct", 300, 552),
    ("irrelevant", 552, 582),
    ("relevant_incorrect", 582, 702),
    ("irrelevant", 702, 1020),
];

/// Scripted subtitles: an audience-facing intro, a correct-form segment, a
/// planted mistake sentence, and an off-exercise outro that the coarse pass
/// rejects.
pub const FIXTURE_SRT: &str = "\
1
00:00:01,000 --> 00:00:05,000
hello everyone welcome back to the channel

2
00:00:05,000 --> 00:00:09,000
please subscribe and check out our merch below

3
00:00:10,000 --> 00:00:14,000
the perfect push up starts with your hands under your shoulders

4
00:00:14,400 --> 00:00:18,400
keep your back straight and your core nice and tight

5
00:00:19,400 --> 00:00:23,400
a common mistake is having your butt up in the air

6
00:00:24,400 --> 00:00:28,400
squats are another great exercise for beginners

7
00:00:28,800 --> 00:00:32,800
thanks for watching and see you next time
";

/// Push-up frames span these half-open ranges; everything else stands.
const PUSHUP_RANGES: [(u64, u64); 2] = [(300, 552), (582, 702)];

pub fn is_pushup_frame(frame: u64) -> bool {
    PUSHUP_RANGES.iter().any(|&(lo, hi)| frame >= lo && frame < hi)
}

/// One synthetic frame: pose family by frame index, small deterministic
/// jitter, and the visibility pattern (standing frames hide ankles, heels
/// and foot indices).
pub fn fixture_frame_parts(frame: u64, rng: &mut ChaCha8Rng) -> Vec<[f64; 4]> {
    let pushup = is_pushup_frame(frame);
    (0..LANDMARK_COUNT)
        .map(|code| {
            let c = code as f64;
            let (x, y, z) = if pushup {
                (0.2 + 0.02 * c, 0.62 + 0.001 * c, 0.05)
            } else {
                (0.48 + 0.004 * c, 0.08 + 0.027 * c, 0.0)
            };
            let jitter = 0.008;
            let x = x + jitter * (rng.gen::<f64>() - 0.5);
            let y = y + jitter * (rng.gen::<f64>() - 0.5);
            let z = z + jitter * (rng.gen::<f64>() - 0.5);
            // Upper-body visibility follows one distribution in both pose
            // families; standing frames hide the feet (codes 27..32), so
            // only ankle, heel and foot-index comparisons separate.
            let visibility = if !pushup && code >= 27 {
                0.25 + 0.2 * rng.gen::<f64>()
            } else {
                0.86 + 0.1 * rng.gen::<f64>()
            };
            [x, y, z, visibility]
        })
        .collect()
}

/// JSONL pose stream for one fixture video, seeded per video.
pub fn fixture_pose_jsonl(video_index: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(100 + video_index);
    let mut out = String::new();
    for frame in 0..FIXTURE_TOTAL_FRAMES {
        let parts = fixture_frame_parts(frame, &mut rng);
        let mut line = String::from("{\"frame\":");
        write!(line, "{frame}").unwrap();
        line.push_str(",\"landmarks\":[");
        for (i, lm) in parts.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            write!(line, "[{},{},{},{}]", lm[0], lm[1], lm[2], lm[3]).unwrap();
        }
        line.push_str("]}");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Write the whole fixture project (subtitles, poses, lexicon, corpus,
/// project config) under `dir`; returns the config path.
pub fn write_fixture_project(dir: &Path) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let lexicon_path = dir.join("lexicon.toml");
    std::fs::write(&lexicon_path, cliplabel_core::lexicon::Lexicon::builtin_source()).unwrap();
    let corpus_path = dir.join("corpus.tsv");
    std::fs::write(
        &corpus_path,
        std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/data/corpus.tsv")).unwrap(),
    )
    .unwrap();

    let mut config = String::from(
        "[paths]\nlexicon = \"lexicon.toml\"\ncorpus = \"corpus.tsv\"\noutput = \"out\"\n\n\
         [params]\nkmeans_k = 2\nkmeans_seed = 42\ncluster_mode = \"combined\"\n\n",
    );
    for (i, id) in FIXTURE_VIDEO_IDS.iter().enumerate() {
        std::fs::write(dir.join(format!("{id}.srt")), FIXTURE_SRT).unwrap();
        std::fs::write(dir.join(format!("{id}.jsonl")), fixture_pose_jsonl(i as u64)).unwrap();
        write!(
            config,
            "[[videos]]\nid = \"{id}\"\nsubtitles = \"{id}.srt\"\nposes = \"{id}.jsonl\"\n\
             fps = 30.0\ntotal_frames = {FIXTURE_TOTAL_FRAMES}\n\n"
        )
        .unwrap();
    }
    let config_path = dir.join("project.toml");
    std::fs::write(&config_path, config).unwrap();
    config_path
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let choose2 = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let sum_ij: f64 = table.iter().flatten().map(|&n| choose2(n)).sum();
    let sum_a: f64 = table.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(a.len() as u64);
    let expected = sum_a * sum_b / total;
    let max_index = (sum_a + sum_b) / 2.0;
    if (max_index - expected).abs() < 1e-12 {
        return 1.0;
    }
    (sum_ij - expected) / (max_index - expected)
}

pub mod oracles {
    //! Brute-force reimplementations, structurally independent of the
    //! library: naive variant scans instead of the compiled index, explicit
    //! state walks, exhaustive enumeration.

    use cliplabel_core::lexicon::{Lexicon, SetKind};

    /// Longest naive match of `kind` starting at `at`, scanning every
    /// entry's variants directly.
    fn naive_longest(words: &[String], at: usize, lexicon: &Lexicon, kind: SetKind) -> Option<usize> {
        let mut best = None;
        for entry in lexicon.entries(kind) {
            for variant in &entry.variants {
                let len = variant.len();
                if at + len <= words.len()
                    && variant.iter().zip(&words[at..at + len]).all(|(a, b)| a == b)
                {
                    best = best.max(Some(len));
                }
            }
        }
        best
    }

    /// Two-state scanner over joint coarse keyword/anti-keyword events:
    /// returns per-token rejected flags.
    pub fn coarse_rejected_flags(words: &[String], lexicon: &Lexicon) -> Vec<bool> {
        let mut events = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let kw = naive_longest(words, i, lexicon, SetKind::CoarseKeyword);
            let akw = naive_longest(words, i, lexicon, SetKind::CoarseAntiKeyword);
            match (kw, akw) {
                (Some(k), Some(a)) if a >= k => {
                    events.push((i, true));
                    i += a;
                }
                (Some(k), _) => {
                    events.push((i, false));
                    i += k;
                }
                (None, Some(a)) => {
                    events.push((i, true));
                    i += a;
                }
                (None, None) => i += 1,
            }
        }
        let mut rejected = vec![false; words.len()];
        let mut state = false;
        let mut next = events.iter().peekable();
        for (i, flag) in rejected.iter_mut().enumerate() {
            if let Some(&&(start, is_akw)) = next.peek() {
                if start == i {
                    state = is_akw;
                    next.next();
                }
            }
            *flag = state;
        }
        rejected
    }

    /// Naive greedy spans of one set: scan, take the longest variant.
    fn naive_spans(words: &[String], lexicon: &Lexicon, kind: SetKind) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut i = 0;
        while i < words.len() {
            match naive_longest(words, i, lexicon, kind) {
                Some(len) => {
                    spans.push((i, i + len - 1));
                    i += len;
                }
                None => i += 1,
            }
        }
        spans
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum OracleMark {
        None,
        Relevant,
        Irrelevant,
    }

    /// Window stamping in the pinned order: keyword windows, then
    /// anti-keyword windows overwriting.
    pub fn fine_marks(words: &[String], lexicon: &Lexicon) -> Vec<OracleMark> {
        let n = words.len();
        let mut marks = vec![OracleMark::None; n];
        for (s, e) in naive_spans(words, lexicon, SetKind::FineKeyword) {
            for mark in marks.iter_mut().take((e + lexicon.k).min(n - 1) + 1).skip(s.saturating_sub(lexicon.k)) {
                *mark = OracleMark::Relevant;
            }
        }
        for (s, e) in naive_spans(words, lexicon, SetKind::FineAntiKeyword) {
            for mark in marks.iter_mut().take((e + lexicon.k).min(n - 1) + 1).skip(s.saturating_sub(lexicon.k)) {
                *mark = OracleMark::Irrelevant;
            }
        }
        marks
    }

    /// Majority vote matching the pinned tie rule.
    pub fn fine_vote(marks: &[OracleMark]) -> bool {
        let rel = marks.iter().filter(|&&m| m == OracleMark::Relevant).count();
        let irr = marks.iter().filter(|&&m| m == OracleMark::Irrelevant).count();
        rel > irr
    }

    /// Exact two-sided rank-sum p by enumerating every group-a position
    /// subset of the pooled (tie-free) sample.
    pub fn enumeration_rank_sum_p(a: &[f64], b: &[f64]) -> f64 {
        let n_a = a.len();
        let n = n_a + b.len();
        assert!(n <= 20, "enumeration limited to pooled size 20");
        let mut pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
        pooled.sort_by(f64::total_cmp);
        for pair in pooled.windows(2) {
            assert!(pair[0] != pair[1], "enumeration oracle requires tie-free data");
        }
        // Observed U_a from ranks of a within the pooled sample.
        let rank_of = |v: f64| pooled.iter().position(|&p| p == v).unwrap() as u64 + 1;
        let rank_sum: u64 = a.iter().map(|&v| rank_of(v)).sum();
        let u_a = rank_sum - (n_a * (n_a + 1) / 2) as u64;
        let nm = (n_a * b.len()) as u64;
        let u_obs = u_a.min(nm - u_a);

        let mut at_or_below = 0u64;
        let mut total = 0u64;
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize != n_a {
                continue;
            }
            total += 1;
            let mut rs = 0u64;
            for pos in 0..n {
                if mask & (1 << pos) != 0 {
                    rs += pos as u64 + 1;
                }
            }
            let u = rs - (n_a * (n_a + 1) / 2) as u64;
            if u <= u_obs {
                at_or_below += 1;
            }
        }
        (2.0 * at_or_below as f64 / total as f64).min(1.0)
    }
}
