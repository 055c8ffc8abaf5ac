//! Encoding tables, the interaction store, 3COSMUL analogy queries and the
//! `A : B :: A : ?` simulation harness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::corpus::{ColumnId, DdiTriple};
use crate::header::{header_field, header_num, parse_header};
use crate::metrics::precision_at_k;
use crate::{seeds, Error, Result};

/// Added to the denominator of the 3COSMUL objective.
pub const EPSILON: f64 = 0.001;
pub const DEFAULT_K: usize = 10;
pub const DEFAULT_MIN_SCORE: f64 = 0.25;
pub const DEFAULT_KS: [usize; 5] = [1, 2, 3, 5, 10];

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_norm(v: &[f64]) -> f64 {
    dot(v, v)
}

/// Takes squared norms, so `shifted(dot(v, v), n, n)` is exactly 1.
fn shifted(dot: f64, sq_na: f64, sq_nb: f64) -> f64 {
    let cos = (dot / (sq_na * sq_nb).sqrt()).clamp(-1.0, 1.0);
    (cos + 1.0) / 2.0
}

/// `(cosine(v1, v2) + 1) / 2`.
pub fn c_sim(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::DimensionMismatch {
            expected: v1.len(),
            actual: v2.len(),
        });
    }
    let (n1, n2) = (sq_norm(v1), sq_norm(v2));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(shifted(dot(v1, v2), n1, n2))
}

/// `C(D,C) * C(D,B) / (C(D,A) + EPSILON)`.
pub fn cosmul(c_da: f64, c_db: f64, c_dc: f64) -> f64 {
    c_dc * c_db / (c_da + EPSILON)
}

/// Per-drug encodings of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingTable {
    column: ColumnId,
    dim: usize,
    ids: Vec<String>,
    data: Vec<f64>,
    norms: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EncodingTable {
    pub fn new(column: ColumnId, dim: usize, entries: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("encoding dimension must be positive".into()));
        }
        let mut ids = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len() * dim);
        for (id, v) in entries {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite encoding for `{id}`")));
            }
            ids.push(id);
            data.extend(v);
        }
        let norms = data.chunks_exact(dim).map(sq_norm).collect();
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(EncodingTable {
            column,
            dim,
            ids,
            data,
            norms,
            index,
        })
    }

    pub fn column(&self) -> ColumnId {
        self.column
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Drug ids in ascending order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, drug_id: &str) -> Option<&[f64]> {
        self.index.get(drug_id).map(|&i| self.row(i))
    }

    pub fn contains(&self, drug_id: &str) -> bool {
        self.index.contains_key(drug_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Same vectors, with the id column permuted by a seeded shuffle.
    pub fn with_shuffled_ids(&self, seed: u64) -> Self {
        let mut ids = self.ids.clone();
        ids.shuffle(&mut seeds::rng(seed));
        let entries = ids
            .into_iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(id, v)| (id, v.to_vec()))
            .collect();
        EncodingTable::new(self.column, self.dim, entries).expect("shuffle preserves validity")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#column={}\tdim={}\tcount={}\n", self.column, self.dim, self.len());
        for (id, v) in self.iter() {
            out.push_str(id);
            out.push('\t');
            for (j, x) in v.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{x:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format(1, "empty encoding file"))?;
        let fields = parse_header(header, 1)?;
        let column: ColumnId = header_field(&fields, "column", 1)?
            .parse()
            .map_err(|_| Error::format(1, "unknown column"))?;
        let dim: usize = header_num(&fields, "dim", 1)?;
        let count: usize = header_num(&fields, "count", 1)?;
        let mut entries = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.is_empty() {
                continue;
            }
            let (id, vals) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(lineno, "expected `id<TAB>values`"))?;
            let v: Vec<f64> = vals
                .split(',')
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::format(lineno, format!("bad coordinate `{s}`")))
                })
                .collect::<Result<_>>()?;
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    line: lineno,
                    expected: dim,
                    actual: v.len(),
                });
            }
            if entries.insert(id.to_string(), v).is_some() {
                return Err(Error::format(lineno, format!("duplicate drug id `{id}`")));
            }
        }
        if entries.len() != count {
            return Err(Error::format(
                text.lines().count(),
                format!("header declares {count} rows, found {}", entries.len()),
            ));
        }
        EncodingTable::new(column, dim, entries).map_err(|e| Error::format(1, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyQuery {
    pub a: String,
    pub b: String,
    pub c: String,
    pub k: usize,
    /// `None` disables the threshold.
    pub min_score: Option<f64>,
}

impl AnalogyQuery {
    /// `a : b :: c : ?` with the default `k` and threshold.
    pub fn new(a: impl Into<String>, b: impl Into<String>, c: impl Into<String>) -> Self {
        AnalogyQuery {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            k: DEFAULT_K,
            min_score: Some(DEFAULT_MIN_SCORE),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_min_score(mut self, min_score: Option<f64>) -> Self {
        self.min_score = min_score;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyHit {
    pub drug_id: String,
    pub score: f64,
}

/// Ranked by score descending, ties by ascending drug id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalogyResult {
    pub hits: Vec<AnalogyHit>,
}

impl AnalogyResult {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.hits.iter().map(|h| h.drug_id.as_str())
    }
}

/// Candidates with a zero vector are never returned.
pub fn three_cosmul(query: &AnalogyQuery, table: &EncodingTable) -> Result<AnalogyResult> {
    if query.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let lookup = |id: &str| -> Result<usize> {
        let i = *table
            .index
            .get(id)
            .ok_or_else(|| Error::QueryDrugMissing(id.to_string()))?;
        if table.norms[i] == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(i)
    };
    let (ia, ib, ic) = (lookup(&query.a)?, lookup(&query.b)?, lookup(&query.c)?);
    let (va, vb, vc) = (table.row(ia), table.row(ib), table.row(ic));
    let (na, nb, nc) = (table.norms[ia], table.norms[ib], table.norms[ic]);

    let mut scored: Vec<(usize, f64)> = Vec::new();
    for d in 0..table.len() {
        let nd = table.norms[d];
        if d == ia || d == ib || d == ic || nd == 0.0 {
            continue;
        }
        let vd = table.row(d);
        let score = cosmul(
            shifted(dot(vd, va), nd, na),
            shifted(dot(vd, vb), nd, nb),
            shifted(dot(vd, vc), nd, nc),
        );
        if query.min_score.is_none_or(|m| score >= m) {
            scored.push((d, score));
        }
    }
    // ids are sorted, so row order is drug id order.
    let cmp = |x: &(usize, f64), y: &(usize, f64)| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0));
    if scored.len() > query.k {
        scored.select_nth_unstable_by(query.k - 1, cmp);
        scored.truncate(query.k);
    }
    scored.sort_unstable_by(cmp);
    Ok(AnalogyResult {
        hits: scored
            .into_iter()
            .map(|(d, score)| AnalogyHit {
                drug_id: table.ids[d].clone(),
                score,
            })
            .collect(),
    })
}

/// Ordered interaction triples indexed by `(drug1, label)` and by `(drug1, drug2)`.
#[derive(Debug, Clone, Default)]
pub struct DdiStore {
    by_drug_label: HashMap<(String, usize), BTreeSet<String>>,
    by_pair: HashMap<(String, String), BTreeSet<usize>>,
    len: usize,
}

impl DdiStore {
    pub fn new<'a>(triples: impl IntoIterator<Item = &'a DdiTriple>) -> Self {
        let mut store = DdiStore::default();
        for t in triples {
            store.insert(t);
        }
        store
    }

    pub fn insert(&mut self, t: &DdiTriple) -> bool {
        let fresh = self
            .by_drug_label
            .entry((t.drug1.clone(), t.label))
            .or_default()
            .insert(t.drug2.clone());
        if fresh {
            self.by_pair
                .entry((t.drug1.clone(), t.drug2.clone()))
                .or_default()
                .insert(t.label);
            self.len += 1;
        }
        fresh
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, drug1: &str, drug2: &str, label: usize) -> bool {
        self.by_drug_label
            .get(&(drug1.to_string(), label))
            .is_some_and(|s| s.contains(drug2))
    }

    /// Labels recorded for the ordered pair.
    pub fn labels(&self, drug1: &str, drug2: &str) -> Vec<usize> {
        self.by_pair
            .get(&(drug1.to_string(), drug2.to_string()))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Partners `x` with `(drug1, x, label)` in the store, ascending.
    pub fn partners(&self, drug1: &str, label: usize) -> impl Iterator<Item = &str> {
        self.by_drug_label
            .get(&(drug1.to_string(), label))
            .into_iter()
            .flatten()
            .map(String::as_str)
    }
}

/// `|{(d1, x, label) in store : x != exclude_d2}|`.
pub fn count_label_interactions(store: &DdiStore, d1: &str, label: usize, exclude_d2: &str) -> usize {
    match store.by_drug_label.get(&(d1.to_string(), label)) {
        None => 0,
        Some(s) => s.len() - usize::from(s.contains(exclude_d2)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub ks: Vec<usize>,
    pub min_score: Option<f64>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            ks: DEFAULT_KS.to_vec(),
            min_score: Some(DEFAULT_MIN_SCORE),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryLog {
    pub drug1: String,
    pub drug2: String,
    pub label: usize,
    /// `M` for each K, aligned with the report's `ks`.
    pub hits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub ks: Vec<usize>,
    /// Mean Precision@K over simulated queries; 0 when none were simulated.
    pub mean_precision: Vec<f64>,
    pub simulated: usize,
    pub skipped: usize,
    pub log: Vec<QueryLog>,
}

impl SimulationReport {
    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.mean_precision[i])
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("K\tmean_precision\tsimulated\tskipped\n");
        for (k, p) in self.ks.iter().zip(&self.mean_precision) {
            writeln!(out, "{k}\t{p:.6}\t{}\t{}", self.simulated, self.skipped).unwrap();
        }
        out
    }

    pub fn log_tsv(&self) -> String {
        let mut out = String::from("D1\tD2\tL\tK\tM\n");
        for q in &self.log {
            for (k, m) in self.ks.iter().zip(&q.hits) {
                writeln!(out, "{}\t{}\t{}\t{k}\t{m}", q.drug1, q.drug2, q.label).unwrap();
            }
        }
        out
    }
}

/// Runs `D1 : D2 :: D1 : ?` for every pair whose drug1 has another partner
/// under the same label; the rest are skipped.
pub fn simulate_analogy(
    pairs: &[DdiTriple],
    table: &EncodingTable,
    store: &DdiStore,
    options: &SimulationOptions,
) -> Result<SimulationReport> {
    let ks = &options.ks;
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidArgument("Ks must be non-empty and positive".into()));
    }
    let kmax = *ks.iter().max().unwrap();
    let outcomes: Vec<Option<QueryLog>> = pairs
        .par_iter()
        .map(|t| {
            if count_label_interactions(store, &t.drug1, t.label, &t.drug2) == 0 {
                return Ok(None);
            }
            let query = AnalogyQuery::new(&*t.drug1, &*t.drug2, &*t.drug1)
                .with_k(kmax)
                .with_min_score(options.min_score);
            let result = three_cosmul(&query, table)?;
            let retrieved: Vec<&str> = result.ids().collect();
            let hits = ks
                .iter()
                .map(|&k| {
                    retrieved
                        .iter()
                        .take(k)
                        .filter(|d| store.contains(&t.drug1, d, t.label))
                        .count()
                })
                .collect();
            Ok(Some(QueryLog {
                drug1: t.drug1.clone(),
                drug2: t.drug2.clone(),
                label: t.label,
                hits,
            }))
        })
        .collect::<Result<_>>()?;

    let mut sums = vec![0.0; ks.len()];
    let mut log = Vec::new();
    let mut skipped = 0;
    for outcome in outcomes {
        match outcome {
            None => skipped += 1,
            Some(q) => {
                for (i, &k) in ks.iter().enumerate() {
                    sums[i] += precision_at_k(q.hits[i], k);
                }
                log.push(q);
            }
        }
    }
    let simulated = log.len();
    let mean_precision = sums
        .into_iter()
        .map(|s| if simulated == 0 { 0.0 } else { s / simulated as f64 })
        .collect();
    Ok(SimulationReport {
        ks: ks.clone(),
        mean_precision,
        simulated,
        skipped,
        log,
    })
}
