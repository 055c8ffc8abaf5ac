use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{ColumnId, TokenSequence};
use crate::header::{header_field, header_num, parse_header};
use crate::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const EOS: usize = 2;

const SPECIALS: [&str; 3] = ["<pad>", "<unk>", "<eos>"];

/// Token to index map for one column. Indices 0..3 are PAD, UNK and EOS;
/// the remaining tokens follow in lexicographic order. `len()` counts the
/// three specials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    column: ColumnId,
    min_count: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_sorted(column: ColumnId, min_count: usize, words: Vec<String>) -> Self {
        let tokens: Vec<String> = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(words)
            .collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            column,
            min_count,
            tokens,
            index,
        }
    }

    pub fn column(&self) -> ColumnId {
        self.column
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `token`, or [`UNK`] when it is out of vocabulary.
    pub fn index_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "#column={}\tmin_count={}\tsize={}\n",
            self.column,
            self.min_count,
            self.len()
        );
        for (i, t) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{t}\t{i}");
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format(1, "empty vocabulary file"))?;
        let fields = parse_header(header, 1)?;
        let column: ColumnId = header_field(&fields, "column", 1)?.parse()?;
        let min_count = header_num(&fields, "min_count", 1)?;
        let size = header_num(&fields, "size", 1)?;

        let mut tokens = Vec::with_capacity(size);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let (tok, idx) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(lineno, "expected `token<TAB>index`"))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::format(lineno, format!("bad index `{idx}`")))?;
            if idx != tokens.len() {
                return Err(Error::format(lineno, format!("index {idx} out of sequence")));
            }
            if idx < SPECIALS.len() && tok != SPECIALS[idx] {
                return Err(Error::format(lineno, format!("expected special token {}", SPECIALS[idx])));
            }
            tokens.push(tok.to_string());
        }
        if tokens.len() != size {
            return Err(Error::format(
                text.lines().count() + 1,
                format!("header declares size {size}, found {}", tokens.len()),
            ));
        }
        if size < SPECIALS.len() {
            return Err(Error::format(1, "vocabulary lacks the special tokens"));
        }
        Ok(Vocabulary::from_sorted(column, min_count, tokens.split_off(SPECIALS.len())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text)
    }
}

/// Builds the vocabulary of one column from the fitting corpus (training and
/// validation drugs only). Tokens occurring fewer than `min_count` times are dropped.
pub fn build_vocab<'a, I>(column: ColumnId, sequences: I, min_count: usize) -> Vocabulary
where
    I: IntoIterator<Item = &'a TokenSequence>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for seq in sequences {
        debug_assert_eq!(seq.column, column);
        for t in &seq.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let words = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count.max(1) && !SPECIALS.contains(&t))
        .map(|(t, _)| t.to_string())
        .collect();
    Vocabulary::from_sorted(column, min_count, words)
}

/// Maps tokens to indices, appends EOS and pads to exactly `max_len`. Longer
/// sequences keep their first `max_len - 1` tokens.
pub fn encode_tokens(seq: &TokenSequence, vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    assert!(max_len >= 2, "max_len must be at least 2");
    let mut out: Vec<usize> = seq
        .tokens
        .iter()
        .take(max_len - 1)
        .map(|t| vocab.index_of(t))
        .collect();
    out.push(EOS);
    out.resize(max_len, PAD);
    out
}
