//! `drugs.tsv` / `ddi.tsv` reading and writing.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use super::{ColumnId, DdiTriple, DrugRecord, LabelMap};
use crate::{seeds, Error, Result};

const DRUG_ID: &str = "drug_id";

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty())
}

pub fn load_drugs(path: &Path) -> Result<Vec<DrugRecord>> {
    parse_drugs(&read(path)?)
}

/// Parses a drug table. Columns are matched by header name; extra columns
/// are ignored.
pub fn parse_drugs(text: &str) -> Result<Vec<DrugRecord>> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| Error::MissingColumn {
            column: DRUG_ID.to_string(),
        })?;
    let header: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })
    };
    let id_pos = position(DRUG_ID)?;
    let col_pos = ColumnId::ALL.map(|c| position(c.name()));
    let col_pos: Vec<usize> = col_pos.into_iter().collect::<Result<_>>()?;

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (row, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("{} fields, header has {}", fields.len(), header.len()),
            });
        }
        let drug_id = fields[id_pos];
        if drug_id.is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "empty drug_id".into(),
            });
        }
        if !seen.insert(drug_id) {
            return Err(Error::DuplicateDrugId {
                drug_id: drug_id.to_string(),
                row,
            });
        }
        let mut rec = DrugRecord::new(drug_id);
        for (c, &p) in ColumnId::ALL.iter().zip(&col_pos) {
            rec.columns[c.index()] = fields[p].to_string();
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_drugs(path: &Path, drugs: &[DrugRecord]) -> Result<()> {
    let mut out = String::from(DRUG_ID);
    for c in ColumnId::ALL {
        out.push('\t');
        out.push_str(c.name());
    }
    out.push('\n');
    for d in drugs {
        out.push_str(&d.drug_id);
        for text in &d.columns {
            if text.contains(['\t', '\n']) {
                return Err(Error::InvalidArgument(format!(
                    "drug `{}` has a tab or newline inside a field",
                    d.drug_id
                )));
            }
            out.push('\t');
            out.push_str(text);
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Options for [`load_ddi`].
#[derive(Debug, Clone, Default)]
pub struct DdiLoadOptions<'a> {
    /// Existing label map; labels outside it are rejected.
    pub label_map: Option<&'a LabelMap>,
    /// When set, every referenced drug must be in this set.
    pub known_drugs: Option<&'a HashSet<String>>,
    /// Drives the choice among conflicting labels of a duplicated pair.
    pub seed: u64,
}

pub fn load_ddi(path: &Path, opts: &DdiLoadOptions<'_>) -> Result<(Vec<DdiTriple>, LabelMap)> {
    parse_ddi(&read(path)?, opts)
}

/// Parses `drug1<TAB>drug2<TAB>label` rows. Labels are indexed in order of
/// first appearance unless a map is supplied. A pair listed more than once
/// keeps a single label, drawn uniformly among its distinct labels.
pub fn parse_ddi(text: &str, opts: &DdiLoadOptions<'_>) -> Result<(Vec<DdiTriple>, LabelMap)> {
    let header = text.lines().next().unwrap_or("").trim_end_matches('\r');
    if header.split('\t').collect::<Vec<_>>() != ["drug1", "drug2", "label"] {
        return Err(Error::MalformedRow {
            row: 1,
            reason: "expected header `drug1<TAB>drug2<TAB>label`".into(),
        });
    }

    let mut labels = opts.label_map.cloned().unwrap_or_default();
    // Per ordered pair, the distinct label indices in appearance order.
    let mut pairs: Vec<((String, String), Vec<usize>)> = Vec::new();
    let mut pair_pos: HashMap<(String, String), usize> = HashMap::new();

    for (row, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [d1, d2, label] = fields[..] else {
            return Err(Error::MalformedRow {
                row,
                reason: format!("{} fields, expected 3", fields.len()),
            });
        };
        if d1.is_empty() || d2.is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "empty drug id".into(),
            });
        }
        if d1 == d2 {
            return Err(Error::SelfPair {
                drug_id: d1.to_string(),
                row,
            });
        }
        if let Some(known) = opts.known_drugs {
            for d in [d1, d2] {
                if !known.contains(d) {
                    return Err(Error::UnknownDrug {
                        drug_id: d.to_string(),
                        row,
                    });
                }
            }
        }
        let label = if opts.label_map.is_some() {
            labels.get(label).ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
                row,
            })?
        } else {
            labels.intern(label)
        };
        let key = (d1.to_string(), d2.to_string());
        match pair_pos.get(&key) {
            Some(&i) => {
                if !pairs[i].1.contains(&label) {
                    pairs[i].1.push(label);
                }
            }
            None => {
                pair_pos.insert(key.clone(), pairs.len());
                pairs.push((key, vec![label]));
            }
        }
    }

    let mut rng = seeds::rng(opts.seed);
    let triples = pairs
        .into_iter()
        .map(|((drug1, drug2), cands)| {
            let label = if cands.len() == 1 {
                cands[0]
            } else {
                cands[rng.gen_range(0..cands.len())]
            };
            DdiTriple { drug1, drug2, label }
        })
        .collect();
    Ok((triples, labels))
}

pub fn write_ddi(path: &Path, triples: &[DdiTriple], labels: &LabelMap) -> Result<()> {
    let mut out = String::from("drug1\tdrug2\tlabel\n");
    for t in triples {
        let name = labels
            .name(t.label)
            .ok_or_else(|| Error::InvalidArgument(format!("label {} has no name", t.label)))?;
        let _ = writeln!(out, "{}\t{}\t{}", t.drug1, t.drug2, name);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
