//! Batch pipeline that turns subtitle text plus pose landmark streams of
//! exercise videos into a labeled clip dataset (irrelevant / relevant-correct /
//! relevant-incorrect with error summaries), and validates the labels with
//! per-landmark visibility statistics and k-means pose clustering.
//!
//! Stages, in pipeline order:
//!
//! 1. [`subtitle`] — parse SRT/WebVTT into cues and a time-aligned token stream
//! 2. [`lexicon`] — compile keyword / anti-keyword pattern sets
//! 3. [`coarse`] — reject large irrelevant sections between an anti-keyword
//!    and the next keyword
//! 4. [`sentence`] — split kept spans into sentences
//! 5. [`relevance`] — per-sentence keyword-window classification plus a
//!    full-body visibility gate
//! 6. [`correctness`] — trigram-model correct/incorrect classification
//! 7. [`summarize`] — extract an error phrase from incorrect sentences
//! 8. [`clips`] — convert labeled sentences into a frame-range clip manifest
//! 9. [`analysis`] — rank-sum visibility statistics and k-means pose
//!    clustering with centroid stick-figure rendering
//!
//! [`pipeline`] wires the stages into an end-to-end run over a project
//! config; [`pose`] ingests the landmark streams the later stages consume.
//!
//! With the default `parallel` feature, batch loops (per-video fan-out,
//! sentence classification, k-means assignment, visibility tables) run on
//! rayon; disabling it yields a dependency-free sequential build with
//! identical outputs.

pub mod analysis;
pub mod clips;
pub mod coarse;
pub mod correctness;
pub mod error;
pub mod lexicon;
pub mod pipeline;
pub mod pose;
pub mod relevance;
pub mod sentence;
pub mod subtitle;
pub mod summarize;

pub use error::{Error, Result};
