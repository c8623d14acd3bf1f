//! Correct / incorrect classification of relevant sentences with a
//! trainable word-trigram model.
//!
//! Scoring is generative: per class, add-alpha smoothed trigram
//! probabilities with stupid backoff to bigrams and unigrams when a
//! context is unseen. Sentences are padded with two boundary symbols per
//! edge; unknown words map to a reserved symbol.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentence::{Correctness, Relevance, Sentence};
use crate::subtitle::normalize_words;

const BOS: u32 = 0;
const EOS: u32 = 1;
const UNK: u32 = 2;
const FIRST_WORD_ID: u32 = 3;

const MODEL_FORMAT_VERSION: u32 = 1;

/// Labeled sentences for training.
#[derive(Debug, Clone, Default)]
pub struct TrainingCorpus {
    pub entries: Vec<(Vec<String>, Correctness)>,
}

impl TrainingCorpus {
    /// Parse TSV lines `label<TAB>sentence`. Labels must be `correct` or
    /// `incorrect`; empty sentences are rejected.
    pub fn parse_tsv<R: BufRead>(r: R) -> Result<TrainingCorpus> {
        let mut entries = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, text) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: "expected `label<TAB>sentence`".into(),
            })?;
            let label = match label.trim().to_ascii_lowercase().as_str() {
                "correct" => Correctness::Correct,
                "incorrect" => Correctness::Incorrect,
                other => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("unknown label `{other}`"),
                    })
                }
            };
            let words: Vec<String> = normalize_words(text).into_iter().map(|w| w.text).collect();
            if words.is_empty() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "empty sentence".into(),
                });
            }
            entries.push((words, label));
        }
        Ok(TrainingCorpus { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrainingCorpus> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        TrainingCorpus::parse_tsv(std::io::BufReader::new(file))
    }
}

/// Smoothing and backoff knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigramParams {
    /// Add-alpha smoothing constant.
    pub alpha: f64,
    /// Multiplier applied per backoff step (bigram, then unigram tier).
    pub backoff: f64,
}

impl Default for TrigramParams {
    fn default() -> Self {
        TrigramParams {
            alpha: 1.0,
            backoff: 0.4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ClassCounts {
    trigrams: BTreeMap<(u32, u32, u32), u64>,
    bigrams: BTreeMap<(u32, u32), u64>,
    unigrams: BTreeMap<u32, u64>,
    /// Total continuations observed per trigram context.
    trigram_ctx: BTreeMap<(u32, u32), u64>,
    /// Total continuations observed per bigram context.
    bigram_ctx: BTreeMap<u32, u64>,
    unigram_total: u64,
    sentences: u64,
}

impl ClassCounts {
    fn ingest(&mut self, padded: &[u32]) {
        // Windows whose continuation is a boundary-start symbol contribute
        // nothing a sentence can generate, so they are skipped.
        for w in padded.windows(3) {
            debug_assert_ne!(w[2], BOS);
            *self.trigrams.entry((w[0], w[1], w[2])).or_default() += 1;
            *self.trigram_ctx.entry((w[0], w[1])).or_default() += 1;
        }
        for w in padded.windows(2) {
            if w[1] == BOS {
                continue;
            }
            *self.bigrams.entry((w[0], w[1])).or_default() += 1;
            *self.bigram_ctx.entry(w[0]).or_default() += 1;
        }
        for &id in &padded[2..] {
            *self.unigrams.entry(id).or_default() += 1;
            self.unigram_total += 1;
        }
        self.sentences += 1;
    }
}

/// A trained per-class trigram model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigramModel {
    params: TrigramParams,
    /// Id order: `<s>`, `</s>`, `<unk>`, then corpus words by first use.
    vocab: Vec<String>,
    word_ids: BTreeMap<String, u32>,
    correct: ClassCounts,
    incorrect: ClassCounts,
}

/// Train a model; the corpus must contain both classes.
pub fn train(corpus: &TrainingCorpus, params: TrigramParams) -> Result<TrigramModel> {
    if corpus.entries.is_empty() {
        return Err(Error::Config("corpus is empty".into()));
    }
    let mut model = TrigramModel {
        params,
        vocab: vec!["<s>".into(), "</s>".into(), "<unk>".into()],
        word_ids: BTreeMap::new(),
        correct: ClassCounts::default(),
        incorrect: ClassCounts::default(),
    };
    for (words, label) in &corpus.entries {
        let ids: Vec<u32> = words.iter().map(|w| model.intern(w)).collect();
        let padded = pad(&ids);
        match label {
            Correctness::Correct => model.correct.ingest(&padded),
            Correctness::Incorrect => model.incorrect.ingest(&padded),
        }
    }
    if model.correct.sentences == 0 || model.incorrect.sentences == 0 {
        return Err(Error::Config(
            "corpus must contain both correct and incorrect sentences".into(),
        ));
    }
    Ok(model)
}

fn pad(ids: &[u32]) -> Vec<u32> {
    let mut padded = Vec::with_capacity(ids.len() + 4);
    padded.extend([BOS, BOS]);
    padded.extend_from_slice(ids);
    padded.extend([EOS, EOS]);
    padded
}

impl TrigramModel {
    fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.word_ids.get(word) {
            return id;
        }
        let id = self.vocab.len() as u32;
        self.vocab.push(word.to_string());
        self.word_ids.insert(word.to_string(), id);
        id
    }

    fn id_of(&self, word: &str) -> u32 {
        self.word_ids.get(word).copied().unwrap_or(UNK)
    }

    fn counts(&self, label: Correctness) -> &ClassCounts {
        match label {
            Correctness::Correct => &self.correct,
            Correctness::Incorrect => &self.incorrect,
        }
    }

    /// Symbols a context can continue with: every vocab entry except `<s>`.
    fn continuation_alphabet(&self) -> f64 {
        (self.vocab.len() - 1) as f64
    }

    /// Class priors `(correct, incorrect)` from sentence counts.
    pub fn priors(&self) -> (f64, f64) {
        let total = (self.correct.sentences + self.incorrect.sentences) as f64;
        (
            self.correct.sentences as f64 / total,
            self.incorrect.sentences as f64 / total,
        )
    }

    pub fn log_prior(&self, label: Correctness) -> f64 {
        let (c, i) = self.priors();
        match label {
            Correctness::Correct => c.ln(),
            Correctness::Incorrect => i.ln(),
        }
    }

    /// Smoothed continuation score for `word` after `(ctx2, ctx1)`:
    /// add-alpha trigram estimate when the context was seen, otherwise
    /// backoff times the bigram tier, then the unigram tier.
    fn score(&self, counts: &ClassCounts, ctx2: u32, ctx1: u32, word: u32) -> f64 {
        let alpha = self.params.alpha;
        let v = self.continuation_alphabet();
        if let Some(&ctx_total) = counts.trigram_ctx.get(&(ctx2, ctx1)) {
            let c = counts.trigrams.get(&(ctx2, ctx1, word)).copied().unwrap_or(0);
            return (c as f64 + alpha) / (ctx_total as f64 + alpha * v);
        }
        self.params.backoff * self.score_bigram(counts, ctx1, word)
    }

    fn score_bigram(&self, counts: &ClassCounts, ctx1: u32, word: u32) -> f64 {
        let alpha = self.params.alpha;
        let v = self.continuation_alphabet();
        if let Some(&ctx_total) = counts.bigram_ctx.get(&ctx1) {
            let c = counts.bigrams.get(&(ctx1, word)).copied().unwrap_or(0);
            return (c as f64 + alpha) / (ctx_total as f64 + alpha * v);
        }
        self.params.backoff * self.score_unigram(counts, word)
    }

    fn score_unigram(&self, counts: &ClassCounts, word: u32) -> f64 {
        let alpha = self.params.alpha;
        let v = self.continuation_alphabet();
        let c = counts.unigrams.get(&word).copied().unwrap_or(0);
        (c as f64 + alpha) / (counts.unigram_total as f64 + alpha * v)
    }

    /// Sum of log continuation scores over the padded sentence, without
    /// the class prior.
    pub fn log_likelihood<S: AsRef<str>>(&self, label: Correctness, words: &[S]) -> f64 {
        let counts = self.counts(label);
        let ids: Vec<u32> = words.iter().map(|w| self.id_of(w.as_ref())).collect();
        let padded = pad(&ids);
        padded
            .windows(3)
            .map(|w| self.score(counts, w[0], w[1], w[2]).ln())
            .sum()
    }

    /// Classify a word sequence. Ties go to correct, the majority prior
    /// class. The second value is the log odds, incorrect minus correct.
    pub fn classify_words<S: AsRef<str>>(&self, words: &[S]) -> (Correctness, f64) {
        let s_correct = self.log_prior(Correctness::Correct) + self.log_likelihood(Correctness::Correct, words);
        let s_incorrect =
            self.log_prior(Correctness::Incorrect) + self.log_likelihood(Correctness::Incorrect, words);
        let log_odds = s_incorrect - s_correct;
        let label = if s_incorrect > s_correct {
            Correctness::Incorrect
        } else {
            Correctness::Correct
        };
        (label, log_odds)
    }

    /// Serialize to the versioned JSON model format.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let file = ModelFile::from(self);
        serde_json::to_writer(&mut w, &file)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn save_to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load_from<R: BufRead>(r: R) -> Result<TrigramModel> {
        let file: ModelFile = serde_json::from_reader(r)?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrigramModel> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        TrigramModel::load_from(std::io::BufReader::new(file))
    }
}

/// Label every relevant sentence in the batch, in parallel with the
/// `parallel` feature.
pub fn classify_batch(sentences: &mut [Sentence], model: &TrigramModel) {
    #[cfg(feature = "parallel")]
    sentences.par_iter_mut().for_each(|s| classify_one(s, model));
    #[cfg(not(feature = "parallel"))]
    classify_batch_seq(sentences, model);
}

/// Sequential reference path for [`classify_batch`].
pub fn classify_batch_seq(sentences: &mut [Sentence], model: &TrigramModel) {
    for s in sentences.iter_mut() {
        classify_one(s, model);
    }
}

fn classify_one(sentence: &mut Sentence, model: &TrigramModel) {
    if sentence.relevance != Some(Relevance::Relevant) {
        return;
    }
    let (label, log_odds) = model.classify_words(&sentence.words);
    sentence.correctness = Some(label);
    sentence.log_odds = Some(log_odds);
}

#[derive(Serialize, Deserialize)]
struct ClassFile {
    sentences: u64,
    trigrams: Vec<(u32, u32, u32, u64)>,
    bigrams: Vec<(u32, u32, u64)>,
    unigrams: Vec<(u32, u64)>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    alpha: f64,
    backoff: f64,
    vocab: Vec<String>,
    correct: ClassFile,
    incorrect: ClassFile,
}

impl From<&TrigramModel> for ModelFile {
    fn from(m: &TrigramModel) -> Self {
        let class = |c: &ClassCounts| ClassFile {
            sentences: c.sentences,
            trigrams: c.trigrams.iter().map(|(&(a, b, w), &n)| (a, b, w, n)).collect(),
            bigrams: c.bigrams.iter().map(|(&(a, w), &n)| (a, w, n)).collect(),
            unigrams: c.unigrams.iter().map(|(&w, &n)| (w, n)).collect(),
        };
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            alpha: m.params.alpha,
            backoff: m.params.backoff,
            vocab: m.vocab.clone(),
            correct: class(&m.correct),
            incorrect: class(&m.incorrect),
        }
    }
}

impl TryFrom<ModelFile> for TrigramModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<TrigramModel> {
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        if file.vocab.len() < 3 {
            return Err(Error::Config("model vocab missing reserved symbols".into()));
        }
        let rebuild = |f: &ClassFile| -> ClassCounts {
            let mut c = ClassCounts {
                sentences: f.sentences,
                ..ClassCounts::default()
            };
            for &(a, b, w, n) in &f.trigrams {
                c.trigrams.insert((a, b, w), n);
                *c.trigram_ctx.entry((a, b)).or_default() += n;
            }
            for &(a, w, n) in &f.bigrams {
                c.bigrams.insert((a, w), n);
                *c.bigram_ctx.entry(a).or_default() += n;
            }
            for &(w, n) in &f.unigrams {
                c.unigrams.insert(w, n);
                c.unigram_total += n;
            }
            c
        };
        let word_ids = file
            .vocab
            .iter()
            .enumerate()
            .skip(FIRST_WORD_ID as usize)
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Ok(TrigramModel {
            params: TrigramParams {
                alpha: file.alpha,
                backoff: file.backoff,
            },
            vocab: file.vocab.clone(),
            word_ids,
            correct: rebuild(&file.correct),
            incorrect: rebuild(&file.incorrect),
        })
    }
}
