//! Corpus files: plain text (one document per line) or JSON Lines with a
//! required `"text"` field and an optional `"id"`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use textsplit_core::text::{decode, tokenize, Corpus, Group, TokenizedCorpus, TokenizerConfig, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Txt,
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "txt" => Ok(Self::Txt),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(format!("unknown corpus format {other:?} (expected txt or jsonl)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: no documents")]
    Empty { path: PathBuf },
}

#[derive(Debug, Deserialize)]
struct JsonRecord {
    text: String,
    #[allow(dead_code)]
    #[serde(default)]
    id: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
struct JsonRecordOut<'a> {
    id: String,
    text: &'a str,
}

/// Read and tokenize one document per record, keeping file order.
pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    tokenizer: &TokenizerConfig,
    label: Group,
) -> Result<TokenizedCorpus, CorpusError> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_corpus(&raw, path, format, tokenizer, label)
}

pub fn parse_corpus(
    raw: &str,
    path: &Path,
    format: CorpusFormat,
    tokenizer: &TokenizerConfig,
    label: Group,
) -> Result<TokenizedCorpus, CorpusError> {
    let record_err = |line: usize, message: String| CorpusError::Record {
        path: path.to_owned(),
        line,
        message,
    };
    let mut docs = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let lineno = i + 1;
        let text = match format {
            CorpusFormat::Txt => line.to_owned(),
            CorpusFormat::Jsonl => {
                let rec: JsonRecord =
                    serde_json::from_str(line).map_err(|e| record_err(lineno, format!("invalid record: {e}")))?;
                rec.text
            }
        };
        let tokens = tokenize(&text, tokenizer);
        if tokens.is_empty() {
            return Err(record_err(lineno, "empty document".into()));
        }
        docs.push(tokens);
    }
    if docs.is_empty() {
        return Err(CorpusError::Empty { path: path.to_owned() });
    }
    Ok(TokenizedCorpus::new(label, docs).expect("documents checked non-empty"))
}

/// Write an encoded corpus as JSON Lines, ids `"<prefix>-<index>"`.
pub fn write_jsonl(path: &Path, corpus: &Corpus, vocab: &Vocabulary, prefix: &str) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (i, doc) in corpus.docs().iter().enumerate() {
        let text = decode(doc, vocab).join(" ");
        let rec = JsonRecordOut {
            id: format!("{prefix}-{i}"),
            text: &text,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
