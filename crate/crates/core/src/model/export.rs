use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use super::lstm::encode_sequence;
use super::EncoderModel;
use crate::analogy::EncodingTable;
use crate::corpus::{build_vocab, encode_tokens, ColumnId, DrugRecord, Preprocessor, Vocabulary};
use crate::{Error, Result};

/// Fixed-length token index sequences of one column, keyed by drug id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedColumn {
    pub column: ColumnId,
    pub max_len: usize,
    sequences: HashMap<String, Vec<usize>>,
}

impl EncodedColumn {
    pub fn new(drugs: &[DrugRecord], column: ColumnId, vocab: &Vocabulary, max_len: usize, pre: &Preprocessor) -> Self {
        let sequences = drugs
            .iter()
            .map(|d| {
                let seq = pre.process(d.column(column), column).sequence;
                (d.drug_id.clone(), encode_tokens(&seq, vocab, max_len))
            })
            .collect();
        EncodedColumn {
            column,
            max_len,
            sequences,
        }
    }

    pub fn sequence(&self, drug_id: &str) -> Result<&[usize]> {
        self.sequences
            .get(drug_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownDrug {
                drug_id: drug_id.to_string(),
                row: 0,
            })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Fits the column vocabulary on `fitting_drugs` only, then encodes every drug.
pub fn prepare_column(
    drugs: &[DrugRecord],
    column: ColumnId,
    fitting_drugs: &BTreeSet<&str>,
    min_count: usize,
    max_len: usize,
    pre: &Preprocessor,
) -> (Vocabulary, EncodedColumn) {
    let seqs: Vec<_> = drugs
        .iter()
        .filter(|d| fitting_drugs.contains(d.drug_id.as_str()))
        .map(|d| pre.process(d.column(column), column).sequence)
        .collect();
    let vocab = build_vocab(column, &seqs, min_count);
    let data = EncodedColumn::new(drugs, column, &vocab, max_len, pre);
    (vocab, data)
}

/// One encoding per drug for `column`.
pub fn export_encodings(
    model: &EncoderModel,
    drugs: &[DrugRecord],
    column: ColumnId,
    vocab: &Vocabulary,
    max_len: usize,
    pre: &Preprocessor,
) -> Result<EncodingTable> {
    let entries: BTreeMap<String, Vec<f64>> = drugs
        .par_iter()
        .map(|d| {
            let seq = pre.process(d.column(column), column).sequence;
            let idx = encode_tokens(&seq, vocab, max_len);
            Ok((d.drug_id.clone(), encode_sequence(model, &idx)?))
        })
        .collect::<Result<_>>()?;
    EncodingTable::new(column, model.config().encoding_dim(), entries)
}
