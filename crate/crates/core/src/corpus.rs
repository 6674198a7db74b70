//! Tokenization, n-gram augmentation, the unified word + n-gram vocabulary
//! and the frequency-based noise distribution used for negative sampling.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;
use rand::Rng;

use crate::{Error, Result};

/// Joins the words of an n-gram into a single token.
pub const NGRAM_SEPARATOR: char = '_';

/// Default smoothing power applied to token frequencies in the noise table.
pub const DEFAULT_NOISE_EXPONENT: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1.0` for positive, `-1.0` for negative.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    pub doc_id: u32,
    pub text: String,
    /// `None` for documents from an unlabeled split.
    pub label: Option<Label>,
}

/// Lowercases `text`, splits ASCII punctuation into standalone tokens and
/// splits the rest on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(core::mem::take(&mut current));
            }
        } else if ch.is_ascii_punctuation() {
            if !current.is_empty() {
                tokens.push(core::mem::take(&mut current));
            }
            tokens.push(String::from(ch));
        } else {
            current.extend(ch.to_lowercase());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Number of tokens produced for a document of `len` words when n-grams up
/// to `max_order` are appended.
pub fn augmented_len(len: usize, max_order: usize) -> usize {
    (1..=max_order).map(|n| (len + 1).saturating_sub(n)).sum()
}

/// Calls `f(token, order)` for every word, then every bigram, and so on up
/// to `max_order`, in order of appearance. `order` is 1 for words.
pub fn for_each_token<S: AsRef<str>>(
    words: &[S],
    max_order: usize,
    mut f: impl FnMut(&str, usize),
) {
    for w in words {
        f(w.as_ref(), 1);
    }
    let mut buf = String::new();
    for n in 2..=max_order {
        if n > words.len() {
            break;
        }
        for window in words.windows(n) {
            buf.clear();
            for (i, w) in window.iter().enumerate() {
                if i > 0 {
                    buf.push(NGRAM_SEPARATOR);
                }
                buf.push_str(w.as_ref());
            }
            f(&buf, n);
        }
    }
}

/// Returns the words followed by every contiguous n-gram for
/// `2 <= n <= max_order`, each joined with [`NGRAM_SEPARATOR`].
pub fn extract_ngram_tokens<S: AsRef<str>>(words: &[S], max_order: usize) -> Result<Vec<String>> {
    if max_order == 0 {
        return Err(Error::InvalidArgument("n-gram order must be at least 1"));
    }
    let mut out = Vec::with_capacity(augmented_len(words.len(), max_order));
    for_each_token(words, max_order, |tok, _| out.push(String::from(tok)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Word,
    /// An appended n-gram token of the given order (>= 2).
    Ngram(u8),
}

impl TokenKind {
    fn from_order(order: usize) -> TokenKind {
        if order <= 1 {
            TokenKind::Word
        } else {
            TokenKind::Ngram(order.min(u8::MAX as usize) as u8)
        }
    }

    pub fn order(self) -> usize {
        match self {
            TokenKind::Word => 1,
            TokenKind::Ngram(n) => n as usize,
        }
    }

    /// Parses the `word` / `ngram<N>` form produced by `Display`.
    pub fn parse(s: &str) -> Option<TokenKind> {
        if s == "word" {
            return Some(TokenKind::Word);
        }
        let n: u8 = s.strip_prefix("ngram")?.parse().ok()?;
        (n >= 2).then_some(TokenKind::Ngram(n))
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word => f.write_str("word"),
            TokenKind::Ngram(n) => write!(f, "ngram{n}"),
        }
    }
}

/// Bidirectional token/id map over words and appended n-gram tokens, with
/// exact corpus counts.
///
/// Ids are contiguous from zero and ordered by descending frequency, ties
/// broken lexicographically, so the same corpus always yields the same
/// vocabulary regardless of document order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    kinds: Vec<TokenKind>,
    index: HashMap<String, u32>,
    max_order: usize,
    min_count: u64,
}

/// Encoded form of a document: word ids in order, then n-gram ids in order.
/// Out-of-vocabulary tokens are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDocument {
    pub doc_id: u32,
    pub token_ids: Vec<u32>,
}

impl Vocabulary {
    /// Counts every word and n-gram (up to `max_order`) across `documents`
    /// and keeps tokens seen at least `min_count` times.
    ///
    /// When a word literally equals a joined n-gram the two share one id;
    /// the token keeps the lowest order it was seen with.
    pub fn build<D, S>(documents: &[D], max_order: usize, min_count: u64) -> Result<Vocabulary>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        if max_order == 0 {
            return Err(Error::InvalidArgument("n-gram order must be at least 1"));
        }
        if min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be at least 1"));
        }
        let mut counts: HashMap<String, (u64, usize)> = HashMap::new();
        for doc in documents {
            for_each_token(doc.as_ref(), max_order, |tok, order| {
                if let Some(slot) = counts.get_mut(tok) {
                    slot.0 += 1;
                    slot.1 = slot.1.min(order);
                } else {
                    counts.insert(String::from(tok), (1, order));
                }
            });
        }
        let mut entries: Vec<(String, u64, TokenKind)> = counts
            .into_iter()
            .filter(|(_, (c, _))| *c >= min_count)
            .map(|(tok, (c, order))| (tok, c, TokenKind::from_order(order)))
            .collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Vocabulary::from_entries(entries, max_order, min_count)
    }

    /// Rebuilds a vocabulary from `(token, count, kind)` rows in id order,
    /// as produced by [`Vocabulary::entries`].
    pub fn from_entries(
        entries: Vec<(String, u64, TokenKind)>,
        max_order: usize,
        min_count: u64,
    ) -> Result<Vocabulary> {
        if entries.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("vocabulary exceeds u32 ids"));
        }
        let mut vocab = Vocabulary {
            tokens: Vec::with_capacity(entries.len()),
            counts: Vec::with_capacity(entries.len()),
            kinds: Vec::with_capacity(entries.len()),
            index: HashMap::with_capacity(entries.len()),
            max_order,
            min_count,
        };
        for (id, (tok, count, kind)) in entries.into_iter().enumerate() {
            if count < min_count {
                return Err(Error::InvalidArgument("token count below min_count"));
            }
            if vocab.index.insert(tok.clone(), id as u32).is_some() {
                return Err(Error::InvalidArgument("duplicate token in vocabulary"));
            }
            vocab.tokens.push(tok);
            vocab.counts.push(count);
            vocab.kinds.push(kind);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: u32) -> Option<u64> {
        self.counts.get(id as usize).copied()
    }

    pub fn kind(&self, id: u32) -> Option<TokenKind> {
        self.kinds.get(id as usize).copied()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// `(token, count, kind)` in id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u64, TokenKind)> + '_ {
        self.tokens
            .iter()
            .zip(&self.counts)
            .zip(&self.kinds)
            .map(|((t, &c), &k)| (t.as_str(), c, k))
    }

    /// Maps the words of a document and its appended n-grams to ids,
    /// dropping anything out of vocabulary.
    pub fn encode<S: AsRef<str>>(&self, doc_id: u32, words: &[S]) -> EncodedDocument {
        let mut token_ids = Vec::with_capacity(augmented_len(words.len(), self.max_order));
        for_each_token(words, self.max_order, |tok, _| {
            if let Some(&id) = self.index.get(tok) {
                token_ids.push(id);
            }
        });
        EncodedDocument { doc_id, token_ids }
    }

    /// Maps ids back to token strings.
    pub fn decode(&self, doc: &EncodedDocument) -> Result<Vec<&str>> {
        doc.token_ids
            .iter()
            .map(|&id| {
                self.token(id).ok_or(Error::OutOfRange {
                    kind: "token",
                    id: id as usize,
                    size: self.len(),
                })
            })
            .collect()
    }
}

/// Cumulative sampling table over the whole vocabulary with probabilities
/// proportional to `count^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    cumulative: Vec<f64>,
    exponent: f64,
}

impl NoiseTable {
    pub fn new(vocab: &Vocabulary, exponent: f64) -> Result<NoiseTable> {
        NoiseTable::from_counts(vocab.counts(), exponent)
    }

    pub fn from_counts(counts: &[u64], exponent: f64) -> Result<NoiseTable> {
        if counts.is_empty() {
            return Err(Error::EmptyCorpus(
                "vocabulary is empty, nothing to sample negatives from",
            ));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidArgument("noise exponent must be positive"));
        }
        let mut total = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                total += libm::pow(c as f64, exponent);
                total
            })
            .collect::<Vec<_>>();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument(
                "noise weights must have a positive finite sum",
            ));
        }
        Ok(NoiseTable {
            cumulative,
            exponent,
        })
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn cumulative_weights(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total_weight(&self) -> f64 {
        *self.cumulative.last().expect("noise table is never empty")
    }

    pub fn probability(&self, id: u32) -> f64 {
        let i = id as usize;
        match self.cumulative.get(i) {
            None => 0.0,
            Some(&hi) => {
                let lo = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
                (hi - lo) / self.total_weight()
            }
        }
    }

    /// Draws one token id.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u = rng.gen::<f64>() * self.total_weight();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u32
    }
}
