//! Keyword / anti-keyword pattern sets.
//!
//! Templates carry two expansion markers: `(-)` for an optional hyphen
//! ("triangle push(-)up(s)" covers "push up" and "push-up" spellings) and
//! `(s)` for an optional plural. The coarse sets drive whole-stream
//! rejection, the fine sets drive per-sentence classification.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// A template string plus its expanded word-sequence variants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternEntry {
    /// Template as written in the config file, e.g. `"triangle push(-)up(s)"`.
    pub surface: String,
    /// Expanded variants, each a sequence of 1-4 lowercase words.
    pub variants: Vec<Vec<String>>,
}

/// Which pattern set to match against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    CoarseKeyword,
    CoarseAntiKeyword,
    FineKeyword,
    FineAntiKeyword,
    /// Body-part sub-list of the fine keywords, used by the summarizer.
    BodyPart,
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SetKind::CoarseKeyword => "coarse_kw",
            SetKind::CoarseAntiKeyword => "coarse_akw",
            SetKind::FineKeyword => "fine_kw",
            SetKind::FineAntiKeyword => "fine_akw",
            SetKind::BodyPart => "body_parts",
        };
        f.write_str(name)
    }
}

/// A matched phrase: token indices of its first and last word (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchSpan {
    pub start: usize,
    pub end: usize,
}

impl MatchSpan {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Keyword or anti-keyword event from a joint scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Keyword,
    AntiKeyword,
}

#[derive(Debug, Clone)]
struct CompiledSet {
    entries: Vec<PatternEntry>,
    /// Space-joined variant -> entry index.
    by_variant: HashMap<String, usize>,
    max_words: usize,
}

impl CompiledSet {
    fn lookup(&self, phrase: &str) -> Option<usize> {
        self.by_variant.get(phrase).copied()
    }
}

/// The compiled pattern sets plus the context window size `k`.
///
/// Immutable after [`Lexicon::compile`]; shareable across threads.
#[derive(Debug, Clone)]
pub struct Lexicon {
    coarse_kw: CompiledSet,
    coarse_akw: CompiledSet,
    fine_kw: CompiledSet,
    fine_akw: CompiledSet,
    body_parts: CompiledSet,
    /// Verb-like words the summarizer's dependency heuristic accepts.
    pub verbs: BTreeSet<String>,
    /// Stop-words trimmed from summary phrase edges.
    pub stop_words: BTreeSet<String>,
    /// Context window size for fine-pass word marking.
    pub k: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconConfig {
    k: usize,
    coarse_kw: Vec<String>,
    coarse_akw: Vec<String>,
    fine_kw: Vec<String>,
    fine_akw: Vec<String>,
    #[serde(default)]
    body_parts: Vec<String>,
    #[serde(default)]
    verbs: Vec<String>,
    #[serde(default)]
    stop_words: Vec<String>,
}

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.toml");

const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "an", "and", "are", "at", "be", "been", "being", "but", "by", "for", "if", "in", "is",
    "it", "its", "of", "on", "or", "that", "the", "these", "this", "those", "to", "was", "were",
    "with",
];

impl Lexicon {
    /// Compile a lexicon from its config file text.
    pub fn compile(config_text: &str) -> Result<Lexicon> {
        let config: LexiconConfig = toml::from_str(config_text)
            .map_err(|e| Error::Config(format!("lexicon: {e}")))?;
        if config.k < 1 {
            return Err(Error::Config("lexicon: k must be >= 1".into()));
        }

        let coarse_kw = compile_set(SetKind::CoarseKeyword, &config.coarse_kw)?;
        let coarse_akw = compile_set(SetKind::CoarseAntiKeyword, &config.coarse_akw)?;
        let fine_kw = compile_set(SetKind::FineKeyword, &config.fine_kw)?;
        let fine_akw = compile_set(SetKind::FineAntiKeyword, &config.fine_akw)?;

        // The four sets must stay pairwise disjoint after expansion,
        // otherwise a single phrase would be both keyword and anti-keyword.
        let mut seen: HashMap<&str, (SetKind, &str)> = HashMap::new();
        for (kind, set) in [
            (SetKind::CoarseKeyword, &coarse_kw),
            (SetKind::CoarseAntiKeyword, &coarse_akw),
            (SetKind::FineKeyword, &fine_kw),
            (SetKind::FineAntiKeyword, &fine_akw),
        ] {
            for (variant, &entry) in &set.by_variant {
                let surface = set.entries[entry].surface.as_str();
                if let Some((other_kind, other_surface)) =
                    seen.insert(variant.as_str(), (kind, surface))
                {
                    return Err(Error::Config(format!(
                        "lexicon: variant \"{variant}\" expands from both \
                         {other_kind} entry \"{other_surface}\" and {kind} entry \"{surface}\""
                    )));
                }
            }
        }

        let body_parts = compile_set_allow_empty(SetKind::BodyPart, &config.body_parts)?;
        for (variant, &entry) in &body_parts.by_variant {
            if fine_kw.lookup(variant).is_none() {
                return Err(Error::Config(format!(
                    "lexicon: body part \"{}\" (variant \"{variant}\") is not a fine keyword",
                    body_parts.entries[entry].surface
                )));
            }
        }

        let verbs = config.verbs.iter().map(|v| v.to_lowercase()).collect();
        let stop_words = if config.stop_words.is_empty() {
            DEFAULT_STOP_WORDS.iter().map(|s| s.to_string()).collect()
        } else {
            config.stop_words.iter().map(|v| v.to_lowercase()).collect()
        };

        Ok(Lexicon {
            coarse_kw,
            coarse_akw,
            fine_kw,
            fine_akw,
            body_parts,
            verbs,
            stop_words,
            k: config.k,
        })
    }

    /// Load and compile a lexicon config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Lexicon> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Lexicon::compile(&text)
    }

    /// The default lexicon shipped with the crate.
    pub fn builtin() -> Lexicon {
        Lexicon::compile(DEFAULT_LEXICON).expect("builtin lexicon compiles")
    }

    /// Source text of the default lexicon config.
    pub fn builtin_source() -> &'static str {
        DEFAULT_LEXICON
    }

    fn set(&self, kind: SetKind) -> &CompiledSet {
        match kind {
            SetKind::CoarseKeyword => &self.coarse_kw,
            SetKind::CoarseAntiKeyword => &self.coarse_akw,
            SetKind::FineKeyword => &self.fine_kw,
            SetKind::FineAntiKeyword => &self.fine_akw,
            SetKind::BodyPart => &self.body_parts,
        }
    }

    /// Entries of a set (template plus expanded variants), for reporting.
    pub fn entries(&self, kind: SetKind) -> &[PatternEntry] {
        &self.set(kind).entries
    }

    /// All non-overlapping matches of one set, longest-match-first,
    /// left to right.
    pub fn match_spans<T: AsRef<str>>(&self, words: &[T], kind: SetKind) -> Vec<MatchSpan> {
        let set = self.set(kind);
        let mut spans = Vec::new();
        let mut i = 0;
        while i < words.len() {
            match longest_at(words, i, &[set]) {
                Some((len, _)) => {
                    spans.push(MatchSpan {
                        start: i,
                        end: i + len - 1,
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        spans
    }

    /// Joint scan over the coarse keyword and anti-keyword sets.
    ///
    /// Longest match wins regardless of set, so "triangle push up"
    /// (anti-keyword) suppresses the nested "push up" (keyword).
    pub fn match_coarse_events<T: AsRef<str>>(&self, words: &[T]) -> Vec<(MatchSpan, MatchKind)> {
        let sets = [&self.coarse_akw, &self.coarse_kw];
        let mut events = Vec::new();
        let mut i = 0;
        while i < words.len() {
            match longest_at(words, i, &sets) {
                Some((len, set_idx)) => {
                    let kind = if set_idx == 0 {
                        MatchKind::AntiKeyword
                    } else {
                        MatchKind::Keyword
                    };
                    events.push((
                        MatchSpan {
                            start: i,
                            end: i + len - 1,
                        },
                        kind,
                    ));
                    i += len;
                }
                None => i += 1,
            }
        }
        events
    }

    /// Is this word in the summarizer's verb list?
    pub fn is_verb(&self, word: &str) -> bool {
        self.verbs.contains(word)
    }
}

/// Longest variant from any of `sets` starting at `words[at]`. Returns the
/// match length and the index of the set that won. Sets are tried in order
/// at equal length, but expansion disjointness means at most one can match
/// a given phrase.
fn longest_at<T: AsRef<str>>(words: &[T], at: usize, sets: &[&CompiledSet]) -> Option<(usize, usize)> {
    let max_words = sets.iter().map(|s| s.max_words).max().unwrap_or(0);
    let longest = max_words.min(words.len() - at);
    for len in (1..=longest).rev() {
        let phrase = join_words(&words[at..at + len]);
        for (set_idx, set) in sets.iter().enumerate() {
            if len <= set.max_words && set.lookup(&phrase).is_some() {
                return Some((len, set_idx));
            }
        }
    }
    None
}

fn join_words<T: AsRef<str>>(words: &[T]) -> String {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(w.as_ref());
    }
    out
}

fn compile_set(kind: SetKind, templates: &[String]) -> Result<CompiledSet> {
    if templates.is_empty() {
        return Err(Error::Config(format!("lexicon: {kind} must not be empty")));
    }
    compile_set_allow_empty(kind, templates)
}

fn compile_set_allow_empty(kind: SetKind, templates: &[String]) -> Result<CompiledSet> {
    let mut entries = Vec::with_capacity(templates.len());
    let mut by_variant = HashMap::new();
    let mut max_words = 0;
    for template in templates {
        let variants = expand_template(template)?;
        let entry_idx = entries.len();
        let mut kept = Vec::with_capacity(variants.len());
        for variant in variants {
            if variant.is_empty() || variant.len() > 4 {
                return Err(Error::Config(format!(
                    "lexicon: {kind} entry \"{template}\" expands to \"{}\" \
                     which is not 1-4 words",
                    variant.join(" ")
                )));
            }
            max_words = max_words.max(variant.len());
            let joined = variant.join(" ");
            // Within one set a repeated variant is harmless; keep the first.
            by_variant.entry(joined).or_insert(entry_idx);
            kept.push(variant);
        }
        entries.push(PatternEntry {
            surface: template.clone(),
            variants: kept,
        });
    }
    Ok(CompiledSet {
        entries,
        by_variant,
        max_words,
    })
}

/// Expand `(-)` (optional hyphen) and `(s)` (optional plural) markers into
/// every spelling variant, lowercased and split into words.
fn expand_template(template: &str) -> Result<Vec<Vec<String>>> {
    fn rec(s: &str, out: &mut Vec<String>) {
        let hyphen = s.find("(-)");
        let plural = s.find("(s)");
        match (hyphen, plural) {
            (Some(h), p) if p.is_none_or(|p| h < p) => {
                rec(&format!("{}-{}", &s[..h], &s[h + 3..]), out);
                rec(&format!("{} {}", &s[..h], &s[h + 3..]), out);
            }
            (_, Some(p)) => {
                rec(&format!("{}{}", &s[..p], &s[p + 3..]), out);
                rec(&format!("{}s{}", &s[..p], &s[p + 3..]), out);
            }
            _ => out.push(s.to_string()),
        }
    }

    let lowered = template.trim().to_lowercase();
    if lowered.is_empty() {
        return Err(Error::Config("lexicon: empty template".into()));
    }
    let mut raw = Vec::new();
    rec(&lowered, &mut raw);
    let expanded: Vec<Vec<String>> = raw
        .into_iter()
        .map(|v| v.split_whitespace().map(str::to_string).collect())
        .collect();
    if expanded.iter().any(|v: &Vec<String>| v.is_empty()) {
        return Err(Error::Config(format!(
            "lexicon: template \"{template}\" expands to an empty variant"
        )));
    }
    Ok(expanded)
}
