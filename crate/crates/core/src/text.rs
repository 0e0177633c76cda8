//! Tokenization, vocabularies and encoded corpora.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub type TokenId = u32;

pub const PAD_ID: TokenId = 0;
pub const UNK_ID: TokenId = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub nfc: bool,
    pub lowercase: bool,
    pub strip_punctuation: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            nfc: true,
            lowercase: true,
            strip_punctuation: true,
        }
    }
}

/// Split `raw` on whitespace after optional NFC normalization and case
/// folding. With `strip_punctuation`, leading and trailing non-alphanumeric
/// characters are trimmed from each token and tokens left empty are dropped.
pub fn tokenize(raw: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let mut text: String = if cfg.nfc { raw.nfc().collect() } else { raw.into() };
    if cfg.lowercase {
        text = text.chars().flat_map(char::to_lowercase).collect();
    }
    text.split_whitespace()
        .map(|tok| {
            if cfg.strip_punctuation {
                tok.trim_matches(|c: char| !c.is_alphanumeric())
            } else {
                tok
            }
        })
        .filter(|tok| !tok.is_empty())
        .map(String::from)
        .collect()
}

/// Bijection between surface tokens and dense ids. Ids 0 and 1 are the
/// reserved padding and unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    token_to_id: BTreeMap<String, TokenId>,
    id_to_token: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
}

impl TryFrom<VocabRepr> for Vocabulary {
    type Error = Error;

    fn try_from(repr: VocabRepr) -> Result<Self> {
        let ok = repr.tokens.len() >= 2
            && repr.tokens[PAD_ID as usize] == PAD_TOKEN
            && repr.tokens[UNK_ID as usize] == UNK_TOKEN;
        if !ok {
            return Err(Error::InvalidConfig("vocabulary must start with <pad>, <unk>".into()));
        }
        let vocab = Self::from_content(repr.tokens.into_iter().skip(2));
        Ok(vocab)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            tokens: v.id_to_token,
        }
    }
}

impl Vocabulary {
    /// Vocabulary holding the reserved tokens followed by `content` in order.
    /// Duplicates and reserved names in `content` are skipped.
    pub fn from_content<I, S>(content: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self {
            token_to_id: BTreeMap::new(),
            id_to_token: Vec::new(),
        };
        vocab.push(PAD_TOKEN.into());
        vocab.push(UNK_TOKEN.into());
        for tok in content {
            vocab.push(tok.into());
        }
        vocab
    }

    fn push(&mut self, tok: String) {
        if self.token_to_id.contains_key(&tok) {
            return;
        }
        let id = self.id_to_token.len() as TokenId;
        self.token_to_id.insert(tok.clone(), id);
        self.id_to_token.push(tok);
    }

    /// The simulation dictionary `w1 … wV`; word `l` has id `l + 1`.
    pub fn synthetic(v: usize) -> Self {
        Self::from_content((1..=v).map(|l| alloc::format!("w{l}")))
    }

    /// Total size including the reserved tokens.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn pad_id(&self) -> TokenId {
        PAD_ID
    }

    pub fn unk_id(&self) -> TokenId {
        UNK_ID
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }
}

/// Build a vocabulary from tokenized documents.
///
/// Content ids are assigned by descending frequency, ties broken
/// lexicographically. Tokens seen fewer than `min_freq` times are left out
/// and therefore encode to the unknown id.
pub fn build_vocab<'a, I>(docs: I, min_freq: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: BTreeMap<&'a str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for doc in docs {
        for tok in doc {
            total += 1;
            if tok == PAD_TOKEN || tok == UNK_TOKEN {
                continue;
            }
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_freq.max(1))
        .collect();
    // BTreeMap iteration is already lexicographic, so a stable sort on count
    // gives the documented tie-break.
    ranked.sort_by_key(|r| core::cmp::Reverse(r.1));
    Ok(Vocabulary::from_content(ranked.into_iter().map(|(t, _)| t)))
}

/// An encoded document of `len() >= 1` token ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Document {
    ids: Vec<TokenId>,
}

impl Document {
    pub fn new(ids: Vec<TokenId>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyDocument);
        }
        Ok(Self { ids })
    }

    /// Checks every id against a vocabulary of `v_size` entries.
    pub fn with_vocab_size(ids: Vec<TokenId>, v_size: usize) -> Result<Self> {
        if let Some(&id) = ids.iter().find(|&&id| id as usize >= v_size) {
            return Err(Error::TokenOutOfRange { id, v_size });
        }
        Self::new(ids)
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn encode(tokens: &[String], vocab: &Vocabulary) -> Result<Document> {
    let ids = tokens
        .iter()
        .map(|t| vocab.id(t).unwrap_or(UNK_ID))
        .collect();
    Document::new(ids)
}

pub fn decode<'v>(doc: &Document, vocab: &'v Vocabulary) -> Vec<&'v str> {
    doc.ids()
        .iter()
        .map(|&id| vocab.token(id).unwrap_or(UNK_TOKEN))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
}

impl core::fmt::Display for Group {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Group::A => "A",
            Group::B => "B",
        })
    }
}

/// Documents of one group, encoded against a shared vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub label: Group,
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(label: Group, docs: Vec<Document>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self { label, docs })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Largest id + 1 over all documents.
    pub fn id_bound(&self) -> usize {
        self.docs
            .iter()
            .flat_map(|d| d.ids().iter())
            .map(|&id| id as usize + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Tokenized documents of one group, before a vocabulary exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedCorpus {
    pub label: Group,
    docs: Vec<Vec<String>>,
}

impl TokenizedCorpus {
    /// Every document must hold at least one token.
    pub fn new(label: Group, docs: Vec<Vec<String>>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if docs.iter().any(Vec::is_empty) {
            return Err(Error::EmptyDocument);
        }
        Ok(Self { label, docs })
    }

    pub fn docs(&self) -> &[Vec<String>] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn encode(&self, vocab: &Vocabulary) -> Result<Corpus> {
        let docs = self
            .docs
            .iter()
            .map(|d| encode(d, vocab))
            .collect::<Result<_>>()?;
        Corpus::new(self.label, docs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| String::from(*w)).collect()
    }

    #[test]
    fn tokenize_defaults() {
        let cfg = TokenizerConfig::default();
        assert_eq!(tokenize("The car stopped.", &cfg), toks(&["the", "car", "stopped"]));
        assert!(tokenize("", &cfg).is_empty());
        assert_eq!(tokenize("A a A", &cfg), toks(&["a", "a", "a"]));
        assert_eq!(tokenize("  -- \"quoted\", ok! ", &cfg), toks(&["quoted", "ok"]));
        assert_eq!(tokenize("don't", &cfg), toks(&["don't"]));
    }

    #[test]
    fn tokenize_options_off() {
        let cfg = TokenizerConfig {
            nfc: false,
            lowercase: false,
            strip_punctuation: false,
        };
        assert_eq!(tokenize("The car.", &cfg), toks(&["The", "car."]));
    }

    #[test]
    fn nfc_merges_combining_marks() {
        let cfg = TokenizerConfig::default();
        let decomposed = "cafe\u{301}";
        assert_eq!(tokenize(decomposed, &cfg), toks(&["caf\u{e9}"]));
    }

    #[test]
    fn vocab_frequency_order() {
        let doc = toks(&["a", "b", "a"]);
        let v = build_vocab([doc.as_slice()], 1).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("a"), Some(2));
        assert_eq!(v.id("b"), Some(3));
        assert_eq!(v.pad_id(), 0);
        assert_eq!(v.unk_id(), 1);

        let v2 = build_vocab([doc.as_slice()], 2).unwrap();
        assert_eq!(v2.len(), 3);
        let d = encode(&toks(&["b"]), &v2).unwrap();
        assert_eq!(d.ids(), &[UNK_ID]);
    }

    #[test]
    fn vocab_tie_break_is_lexicographic() {
        let d1 = toks(&["zeta", "alpha", "mid"]);
        let d2 = toks(&["mid"]);
        let v = build_vocab([d1.as_slice(), d2.as_slice()], 1).unwrap();
        assert_eq!(v.tokens(), &toks(&["<pad>", "<unk>", "mid", "alpha", "zeta"])[..]);
        let v_rev = build_vocab([d2.as_slice(), d1.as_slice()], 1).unwrap();
        assert_eq!(v, v_rev);
    }

    #[test]
    fn empty_vocab_error() {
        let empty: Vec<String> = vec![];
        assert_eq!(build_vocab([empty.as_slice()], 1), Err(Error::EmptyVocabulary));
    }

    #[test]
    fn synthetic_vocab_size() {
        let v = Vocabulary::synthetic(25);
        assert_eq!(v.len(), 27);
        assert_eq!(v.id("w1"), Some(2));
        assert_eq!(v.id("w25"), Some(26));
    }

    #[test]
    fn encode_paths() {
        let doc = toks(&["a", "b", "a"]);
        let v = build_vocab([doc.as_slice()], 1).unwrap();
        let d = encode(&toks(&["a", "b"]), &v).unwrap();
        assert_eq!(d.ids(), &[2, 3]);
        assert_eq!(d.len(), 2);
        assert_eq!(encode(&toks(&["zzz"]), &v).unwrap().ids(), &[UNK_ID]);
        assert_eq!(encode(&[], &v), Err(Error::EmptyDocument));
        assert_eq!(decode(&d, &v), vec!["a", "b"]);
    }

    #[test]
    fn vocab_serde_rejects_bad_layout() {
        let repr = VocabRepr {
            tokens: toks(&["x", "<unk>"]),
        };
        assert!(Vocabulary::try_from(repr).is_err());
    }
}
