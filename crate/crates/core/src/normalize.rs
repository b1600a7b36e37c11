//! Phrase normalization: lowercase, tokenize, lemmatize, drop stopwords.
//!
//! The lemmatizer is rule based: an irregular-form exception table is
//! consulted first, then a short ordered list of suffix rules. Both the
//! exception table and the stopword list ship as data files in `data/` and
//! are compiled into the binary, so normalization never depends on the
//! environment.
//!
//! Lemmas are iterated to a fixed point, which makes [`normalize_phrase`]
//! idempotent: normalizing the rendering of a normalized phrase returns the
//! same tokens.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

const STOPWORDS: &str = include_str!("../data/stopwords.txt");
const EXCEPTIONS: &str = include_str!("../data/lemma_exceptions.tsv");

struct Lexicon {
    stopwords: HashSet<&'static str>,
    exceptions: HashMap<&'static str, &'static str>,
}

fn lexicon() -> &'static Lexicon {
    static LEXICON: OnceLock<Lexicon> = OnceLock::new();
    LEXICON.get_or_init(|| {
        let data_lines = |s: &'static str| {
            s.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
        };
        let stopwords = data_lines(STOPWORDS).collect();
        let exceptions = data_lines(EXCEPTIONS)
            .filter_map(|l| l.split_once('\t'))
            .collect();
        Lexicon {
            stopwords,
            exceptions,
        }
    })
}

/// The normalized form of a phrase: lowercase lemmas with stopwords removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NormalizedPhrase {
    tokens: Vec<String>,
}

impl NormalizedPhrase {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Canonical key: tokens joined by a single space (empty phrase → `""`).
    pub fn key(&self) -> String {
        self.tokens.join(" ")
    }

    /// True if `self` occurs as a contiguous, nonempty run inside `other`.
    pub fn is_contiguous_in(&self, other: &NormalizedPhrase) -> bool {
        let n = self.tokens.len();
        n > 0
            && n <= other.tokens.len()
            && other.tokens.windows(n).any(|w| w == self.tokens.as_slice())
    }
}

impl fmt::Display for NormalizedPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl From<Vec<String>> for NormalizedPhrase {
    fn from(tokens: Vec<String>) -> Self {
        NormalizedPhrase { tokens }
    }
}

/// Lowercases `phrase` and splits it on every non-alphanumeric character.
pub fn tokenize(phrase: &str) -> Vec<String> {
    phrase
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Full normalization: tokenize, lemmatize, drop stopwords; order preserved.
pub fn normalize_phrase(phrase: &str) -> NormalizedPhrase {
    let lex = lexicon();
    let tokens = tokenize(phrase)
        .into_iter()
        .filter(|t| !lex.stopwords.contains(t.as_str()))
        .map(|t| lemmatize(&t))
        .filter(|t| !lex.stopwords.contains(t.as_str()))
        .collect();
    NormalizedPhrase { tokens }
}

/// Normalized key of a phrase, as used by the closed-KB index.
pub fn phrase_key(phrase: &str) -> String {
    normalize_phrase(phrase).key()
}

/// Tokenize and lemmatize, keeping stopwords.
///
/// Predicates are mostly made of function words ("be in", "have", "can"),
/// so predicate-level features use this form instead of [`normalize_phrase`].
pub fn lemmatize_phrase(phrase: &str) -> Vec<String> {
    tokenize(phrase).iter().map(|t| lemmatize(t)).collect()
}

pub fn is_stopword(token: &str) -> bool {
    lexicon().stopwords.contains(token)
}

/// Lemma of a single lowercase token, iterated to a fixed point.
pub fn lemmatize(token: &str) -> String {
    let mut current = token.to_owned();
    for _ in 0..8 {
        let next = lemmatize_once(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn lemmatize_once(word: &str) -> String {
    if let Some(lemma) = lexicon().exceptions.get(word) {
        return (*lemma).to_owned();
    }
    if word.len() <= 3 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_owned();
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    if word.len() > 4 {
        if let Some(stem) = word.strip_suffix("ies") {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        if ["s", "x", "z", "ch", "sh"].iter().any(|s| stem.ends_with(s)) {
            return stem.to_owned();
        }
    }
    if word.ends_with('s') && !["ss", "us", "is"].iter().any(|s| word.ends_with(s)) {
        return word[..word.len() - 1].to_owned();
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.len() >= 3 && has_vowel(stem) {
                return restore_stem(stem);
            }
        }
    }
    word.to_owned()
}

fn is_vowel(bytes: &[u8], i: usize) -> bool {
    match bytes[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0,
        _ => false,
    }
}

fn has_vowel(stem: &str) -> bool {
    let b = stem.as_bytes();
    (0..b.len()).any(|i| is_vowel(b, i))
}

/// Undoes consonant doubling ("swimm" → "swim") and restores a dropped final
/// `e` on short consonant-vowel-consonant stems ("hop" → "hope").
fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    let last = b[n - 1];
    if b[n - 2] == last && !is_vowel(b, n - 1) && !matches!(last, b'l' | b's' | b'z') {
        return stem[..n - 1].to_owned();
    }
    if n == 3 && !is_vowel(b, 0) && is_vowel(b, 1) && !is_vowel(b, 2) && !matches!(last, b'w' | b'x' | b'y')
    {
        return format!("{stem}e");
    }
    stem.to_owned()
}
