//! Train/validation/test partitioning of labeled drug pairs.
//!
//! Two schemes: a label-stratified 80/10/10 split of the pairs themselves,
//! and a drug held-off split where a sample of drugs is quarantined together
//! with every pair that touches them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::corpus::DdiTriple;
use crate::{seeds, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionKind {
    DdiPairwise,
    DrugHeldoff { x_pct: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub kind: PartitionKind,
    pub train: Vec<DdiTriple>,
    pub val: Vec<DdiTriple>,
    pub test: Vec<DdiTriple>,
    /// Empty for [`PartitionKind::DdiPairwise`].
    pub heldoff_drugs: BTreeSet<String>,
    pub seed: u64,
    pub num_labels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidArgument(format!("unknown split `{s}`"))),
        }
    }
}

impl PartitionSet {
    pub fn split(&self, which: Split) -> &[DdiTriple] {
        match which {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> impl Iterator<Item = &DdiTriple> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }

    /// Drugs referenced by training or validation pairs.
    pub fn fitting_drugs(&self) -> BTreeSet<&str> {
        self.train
            .iter()
            .chain(&self.val)
            .flat_map(|t| [t.drug1.as_str(), t.drug2.as_str()])
            .collect()
    }
}

fn num_labels(triples: &[DdiTriple]) -> usize {
    triples.iter().map(|t| t.label + 1).max().unwrap_or(0)
}

/// Splits `total` into parts proportional to `ratios` with largest-remainder
/// rounding; ties in the remainder go to the earlier part.
pub fn largest_remainder(total: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Label-stratified split. Within each label, triples are shuffled under
/// `seed` and allocated by largest-remainder rounding.
pub fn stratified_split(triples: &[DdiTriple], ratios: [f64; 3], seed: u64) -> Result<PartitionSet> {
    if triples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if ratios.iter().any(|r| *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("ratios must be non-negative and sum to 1".into()));
    }
    let mut strata: BTreeMap<usize, Vec<&DdiTriple>> = BTreeMap::new();
    for t in triples {
        strata.entry(t.label).or_default().push(t);
    }

    let mut rng = seeds::rng(seed);
    let mut parts: [Vec<DdiTriple>; 3] = Default::default();
    for stratum in strata.values_mut() {
        stratum.shuffle(&mut rng);
        let counts = largest_remainder(stratum.len(), &ratios);
        let mut rest = stratum.as_slice();
        for (part, n) in parts.iter_mut().zip(counts) {
            let (take, tail) = rest.split_at(n);
            part.extend(take.iter().map(|t| (*t).clone()));
            rest = tail;
        }
    }
    let [train, val, test] = parts;
    Ok(PartitionSet {
        kind: PartitionKind::DdiPairwise,
        train,
        val,
        test,
        heldoff_drugs: BTreeSet::new(),
        seed,
        num_labels: num_labels(triples),
    })
}

/// Number of drugs held off for `x_pct` percent of `num_drugs` (rounded down).
pub fn heldoff_count(num_drugs: usize, x_pct: f64) -> usize {
    (num_drugs as f64 * x_pct / 100.0 + 1e-9).floor() as usize
}

/// Drug held-off split. Returns the partition and the labels for which
/// train/val coverage could not be achieved (fewer than two remaining triples).
pub fn heldoff_split(
    triples: &[DdiTriple],
    drugs: &[String],
    x_pct: f64,
    seed: u64,
) -> Result<(PartitionSet, Vec<usize>)> {
    if !(x_pct > 0.0 && x_pct < 100.0) {
        return Err(Error::InvalidArgument("x_pct must be in (0, 100)".into()));
    }
    let mut rng = seeds::rng(seed);
    let mut pool: Vec<&String> = drugs.iter().collect::<BTreeSet<_>>().into_iter().collect();
    pool.shuffle(&mut rng);
    let k = heldoff_count(pool.len(), x_pct);
    let heldoff: BTreeSet<String> = pool[..k].iter().map(|d| (*d).clone()).collect();

    let (test, mut rest): (Vec<DdiTriple>, Vec<DdiTriple>) = triples
        .iter()
        .cloned()
        .partition(|t| heldoff.contains(&t.drug1) || heldoff.contains(&t.drug2));
    rest.shuffle(&mut rng);
    let n_train = largest_remainder(rest.len(), &[0.9, 0.1])[0];
    let val = rest.split_off(n_train);
    let mut train = rest;
    let mut val = val;

    let labels: BTreeSet<usize> = train.iter().chain(&val).map(|t| t.label).collect();
    let mut infeasible = Vec::new();
    for label in labels {
        let in_train = train.iter().filter(|t| t.label == label).count();
        let in_val = val.iter().filter(|t| t.label == label).count();
        if in_train + in_val < 2 {
            infeasible.push(label);
            continue;
        }
        let (from, to) = match (in_train, in_val) {
            (0, _) => (&mut val, &mut train),
            (_, 0) => (&mut train, &mut val),
            _ => continue,
        };
        let pos = from.iter().rposition(|t| t.label == label).expect("label present");
        to.push(from.remove(pos));
    }

    let set = PartitionSet {
        kind: PartitionKind::DrugHeldoff { x_pct },
        train,
        val,
        test,
        heldoff_drugs: heldoff,
        seed,
        num_labels: num_labels(triples),
    };
    Ok((set, infeasible))
}

impl PartitionSet {
    /// Manifest text: a `#key=value` header then `[train]`, `[val]`,
    /// `[test]` sections of `drug1<TAB>drug2<TAB>label_index` rows.
    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        match self.kind {
            PartitionKind::DdiPairwise => {
                let _ = write!(out, "#kind=pairwise\tseed={}", self.seed);
            }
            PartitionKind::DrugHeldoff { x_pct } => {
                let ids: Vec<&str> = self.heldoff_drugs.iter().map(String::as_str).collect();
                let _ = write!(
                    out,
                    "#kind=heldoff\tseed={}\tx_pct={}\theldoff={}",
                    self.seed,
                    x_pct,
                    ids.join(",")
                );
            }
        }
        let _ = writeln!(out, "\tnum_labels={}", self.num_labels);
        for (name, part) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            let _ = writeln!(out, "[{name}]");
            for t in part {
                let _ = writeln!(out, "{}\t{}\t{}", t.drug1, t.drug2, t.label);
            }
        }
        out
    }

    pub fn parse_manifest(text: &str) -> Result<Self> {
        use crate::header::{header_field, header_num, parse_header};

        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| Error::format(1, "empty manifest"))?;
        let fields = parse_header(header, 1)?;
        let seed = header_num(&fields, "seed", 1)?;
        let num_labels = header_num(&fields, "num_labels", 1)?;
        let (kind, heldoff_drugs) = match header_field(&fields, "kind", 1)? {
            "pairwise" => (PartitionKind::DdiPairwise, BTreeSet::new()),
            "heldoff" => {
                let x_pct = header_num(&fields, "x_pct", 1)?;
                let ids = header_field(&fields, "heldoff", 1)?;
                let ids = ids.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect();
                (PartitionKind::DrugHeldoff { x_pct }, ids)
            }
            other => return Err(Error::format(1, format!("unknown kind `{other}`"))),
        };

        let mut parts: [Vec<DdiTriple>; 3] = Default::default();
        let mut current: Option<usize> = None;
        let mut seen = [false; 3];
        for (lineno, line) in lines {
            match line {
                "[train]" | "[val]" | "[test]" => {
                    let i = ["[train]", "[val]", "[test]"].iter().position(|s| *s == line).unwrap();
                    if seen[i] || current.is_some_and(|c| c >= i) {
                        return Err(Error::format(lineno, "sections out of order"));
                    }
                    seen[i] = true;
                    current = Some(i);
                }
                "" => {}
                _ => {
                    let part = current.ok_or_else(|| Error::format(lineno, "row before section"))?;
                    let f: Vec<&str> = line.split('\t').collect();
                    let [d1, d2, label] = f[..] else {
                        return Err(Error::format(lineno, "expected 3 fields"));
                    };
                    let label: usize = label
                        .parse()
                        .map_err(|_| Error::format(lineno, format!("bad label `{label}`")))?;
                    if label >= num_labels {
                        return Err(Error::format(lineno, "label exceeds num_labels"));
                    }
                    parts[part].push(DdiTriple::new(d1, d2, label));
                }
            }
        }
        if seen != [true; 3] {
            return Err(Error::format(text.lines().count(), "missing section"));
        }
        let [train, val, test] = parts;
        Ok(PartitionSet {
            kind,
            train,
            val,
            test,
            heldoff_drugs,
            seed,
            num_labels,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_manifest()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_manifest(&text)
    }
}
