//! Synthetic corpora with a planted, learnable labeling rule.
//!
//! Every drug carries one signature token in the rule column, drawn from
//! `S = num_labels.next_power_of_two()` signatures, plus noise tokens from a
//! shared per-column pool. The label of an ordered pair is
//! `(sig(drug1) XOR sig(drug2)) mod num_labels`, a pure, symmetric function
//! of the two signature tokens.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{ColumnId, DdiTriple, DrugRecord, LabelMap};
use crate::{seeds, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_drugs: usize,
    pub num_labels: usize,
    pub tokens_per_column: usize,
    pub seed: u64,
    pub rule_column: ColumnId,
    /// Distinct noise tokens per column.
    pub noise_pool: usize,
    /// Probability that a given ordered pair is emitted.
    pub pair_density: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_drugs: 200,
            num_labels: 8,
            tokens_per_column: 4,
            seed: 7,
            rule_column: ColumnId::Description,
            noise_pool: 40,
            pair_density: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn num_signatures(&self) -> usize {
        self.num_labels.next_power_of_two()
    }

    fn validate(&self) -> Result<()> {
        if self.num_labels < 2 {
            return Err(Error::InvalidArgument("num_labels must be at least 2".into()));
        }
        if self.num_drugs < 2 * self.num_labels {
            return Err(Error::InvalidArgument(format!(
                "num_drugs must be at least 2 * num_labels = {}",
                2 * self.num_labels
            )));
        }
        if self.tokens_per_column == 0 || self.noise_pool == 0 {
            return Err(Error::InvalidArgument(
                "tokens_per_column and noise_pool must be positive".into(),
            ));
        }
        if !(self.pair_density > 0.0 && self.pair_density <= 1.0) {
            return Err(Error::InvalidArgument("pair_density must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub drugs: Vec<DrugRecord>,
    pub triples: Vec<DdiTriple>,
    pub labels: LabelMap,
    /// Signature index of each drug, parallel to `drugs`.
    pub signatures: Vec<usize>,
}

pub fn planted_label(sig1: usize, sig2: usize, num_labels: usize) -> usize {
    (sig1 ^ sig2) % num_labels
}

/// The token a drug carries in the rule column for signature `sig`.
pub fn signature_token(column: ColumnId, sig: usize) -> String {
    match column {
        ColumnId::AtcCodes => format!("Z{:02}YX{:02}", sig % 100, sig / 100),
        _ => format!("sig{sig}"),
    }
}

fn noise_token(column: ColumnId, k: usize) -> String {
    match column {
        ColumnId::AtcCodes => {
            let letter = |i: usize| (b'A' + (i % 14) as u8) as char;
            format!(
                "{}{:02}{}{}{:02}",
                letter(k),
                k % 97,
                letter(k / 14),
                letter(k / 196),
                (k / 7) % 100
            )
        }
        _ => format!("{}{k}", &column.name()[..3]),
    }
}

fn separator(column: ColumnId) -> &'static str {
    match column {
        ColumnId::Description | ColumnId::ProteinBinding => " ",
        _ => "#",
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = seeds::rng(spec.seed);
    let n_sig = spec.num_signatures();

    let mut signatures: Vec<usize> = (0..spec.num_drugs).map(|i| i % n_sig).collect();
    signatures.shuffle(&mut rng);

    let drugs: Vec<DrugRecord> = signatures
        .iter()
        .enumerate()
        .map(|(i, &sig)| {
            let mut rec = DrugRecord::new(format!("DB{:05}", i + 1));
            for column in ColumnId::ALL {
                let mut tokens: Vec<String> = (0..spec.tokens_per_column)
                    .map(|_| noise_token(column, rng.gen_range(0..spec.noise_pool)))
                    .collect();
                if column == spec.rule_column {
                    let pos = rng.gen_range(0..spec.tokens_per_column);
                    tokens[pos] = signature_token(column, sig);
                }
                rec.columns[column.index()] = tokens.join(separator(column));
            }
            rec
        })
        .collect();

    let mut triples = Vec::new();
    let mut seen = vec![false; spec.num_labels];
    for i in 0..spec.num_drugs {
        for j in 0..spec.num_drugs {
            if i == j {
                continue;
            }
            if spec.pair_density < 1.0 && !rng.gen_bool(spec.pair_density) {
                continue;
            }
            let label = planted_label(signatures[i], signatures[j], spec.num_labels);
            seen[label] = true;
            triples.push(DdiTriple::new(&drugs[i].drug_id, &drugs[j].drug_id, label));
        }
    }

    // Sparse sampling can miss a label; add its first unemitted pair.
    let missing: Vec<usize> = (0..spec.num_labels).filter(|&l| !seen[l]).collect();
    for label in missing {
        let emitted: std::collections::HashSet<(&str, &str)> = triples
            .iter()
            .map(|t| (t.drug1.as_str(), t.drug2.as_str()))
            .collect();
        let pair = (0..spec.num_drugs)
            .flat_map(|i| (0..spec.num_drugs).map(move |j| (i, j)))
            .find(|&(i, j)| {
                i != j
                    && planted_label(signatures[i], signatures[j], spec.num_labels) == label
                    && !emitted.contains(&(drugs[i].drug_id.as_str(), drugs[j].drug_id.as_str()))
            });
        if let Some((i, j)) = pair {
            triples.push(DdiTriple::new(&drugs[i].drug_id, &drugs[j].drug_id, label));
        }
    }

    let labels = LabelMap::from_names((0..spec.num_labels).map(|c| format!("ddi_type_{c}")));
    Ok(SyntheticCorpus {
        drugs,
        triples,
        labels,
        signatures,
    })
}
