//! Drug table and interaction corpus: loading, tokenization, vocabularies.

mod io;
mod synthetic;
mod tokenize;
mod vocab;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::Error;

pub use io::{load_ddi, load_drugs, parse_ddi, parse_drugs, write_ddi, write_drugs, DdiLoadOptions};
pub use synthetic::{generate_synthetic, planted_label, SyntheticCorpus, SyntheticSpec};
pub use tokenize::{is_stopword, preprocess_column, Preprocessed, Preprocessor, NUM_TOKEN};
pub use vocab::{build_vocab, encode_tokens, Vocabulary, EOS, PAD, UNK};

/// The six textified columns of the drug table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColumnId {
    AtcCodes,
    Categories,
    Description,
    MergedClass,
    ProteinBinding,
    TargetAction,
}

impl ColumnId {
    pub const ALL: [ColumnId; 6] = [
        ColumnId::AtcCodes,
        ColumnId::Categories,
        ColumnId::Description,
        ColumnId::MergedClass,
        ColumnId::ProteinBinding,
        ColumnId::TargetAction,
    ];

    /// Canonical name, as used in TSV headers and file metadata.
    pub fn name(self) -> &'static str {
        match self {
            ColumnId::AtcCodes => "atc_codes",
            ColumnId::Categories => "categories",
            ColumnId::Description => "description",
            ColumnId::MergedClass => "merged_class",
            ColumnId::ProteinBinding => "protein_binding",
            ColumnId::TargetAction => "target_action",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ColumnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColumnId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ColumnId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown column `{s}`")))
    }
}

/// One row of the textified drug table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrugRecord {
    pub drug_id: String,
    /// Raw text per column, indexed by [`ColumnId::index`]. Multi-valued
    /// fields use `#` as the value separator.
    pub columns: [String; 6],
}

impl DrugRecord {
    pub fn new(drug_id: impl Into<String>) -> Self {
        DrugRecord {
            drug_id: drug_id.into(),
            columns: Default::default(),
        }
    }

    pub fn column(&self, column: ColumnId) -> &str {
        &self.columns[column.index()]
    }

    pub fn with_column(mut self, column: ColumnId, text: impl Into<String>) -> Self {
        self.columns[column.index()] = text.into();
        self
    }
}

/// An ordered, labeled drug pair. `(a, b, l)` does not imply `(b, a, l)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DdiTriple {
    pub drug1: String,
    pub drug2: String,
    pub label: usize,
}

impl DdiTriple {
    pub fn new(drug1: impl Into<String>, drug2: impl Into<String>, label: usize) -> Self {
        DdiTriple {
            drug1: drug1.into(),
            drug2: drug2.into(),
            label,
        }
    }

    pub fn touches(&self, drug_id: &str) -> bool {
        self.drug1 == drug_id || self.drug2 == drug_id
    }
}

/// Tokens of one column of one drug after preprocessing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub column: ColumnId,
    pub tokens: Vec<String>,
}

/// Dense label indices for interaction type strings, in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut map = LabelMap::new();
        for name in names {
            map.intern(&name.into());
        }
        map
    }

    /// Returns the index of `name`, assigning the next free one if unseen.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
