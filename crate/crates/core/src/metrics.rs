//! Classification metrics and Precision@K.

use std::fmt::Write as _;

use crate::{Error, Result};

/// One-vs-rest counts per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    pub fn_: Vec<usize>,
    /// Gold support per class.
    pub support: Vec<usize>,
    pub total: usize,
}

impl ConfusionCounts {
    pub fn num_labels(&self) -> usize {
        self.tp.len()
    }

    pub fn correct(&self) -> usize {
        self.tp.iter().sum()
    }
}

pub fn confusion(preds: &[usize], golds: &[usize], num_labels: usize) -> Result<ConfusionCounts> {
    if preds.len() != golds.len() {
        return Err(Error::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    let mut c = ConfusionCounts {
        tp: vec![0; num_labels],
        fp: vec![0; num_labels],
        fn_: vec![0; num_labels],
        support: vec![0; num_labels],
        total: preds.len(),
    };
    for (&p, &g) in preds.iter().zip(golds) {
        if p >= num_labels || g >= num_labels {
            return Err(Error::InvalidArgument(format!(
                "label {} out of range for {num_labels} labels",
                p.max(g)
            )));
        }
        c.support[g] += 1;
        if p == g {
            c.tp[g] += 1;
        } else {
            c.fp[p] += 1;
            c.fn_[g] += 1;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Undefined precision, recall or F1 is 0; the macro mean runs over all
/// classes and the weighted mean uses gold support.
pub fn report(c: &ConfusionCounts) -> MetricsReport {
    let l = c.num_labels();
    let precision: Vec<f64> = (0..l).map(|i| ratio(c.tp[i], c.tp[i] + c.fp[i])).collect();
    let recall: Vec<f64> = (0..l).map(|i| ratio(c.tp[i], c.tp[i] + c.fn_[i])).collect();
    let f1: Vec<f64> = precision
        .iter()
        .zip(&recall)
        .map(|(&p, &r)| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
        .collect();
    let macro_f1 = if l == 0 { 0.0 } else { f1.iter().sum::<f64>() / l as f64 };
    let weighted_f1 = f1
        .iter()
        .zip(&c.support)
        .map(|(f, &n)| ratio(n, c.total) * f)
        .sum();
    MetricsReport {
        accuracy: ratio(c.correct(), c.total),
        macro_f1,
        weighted_f1,
        precision,
        recall,
        f1,
    }
}

pub fn evaluate(preds: &[usize], golds: &[usize], num_labels: usize) -> Result<MetricsReport> {
    Ok(report(&confusion(preds, golds, num_labels)?))
}

impl MetricsReport {
    /// Field-wise mean.
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        let first = reports.first()?;
        let n = reports.len() as f64;
        let scalar = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let vector = |f: fn(&MetricsReport) -> &Vec<f64>| {
            (0..f(first).len())
                .map(|i| reports.iter().map(|r| f(r)[i]).sum::<f64>() / n)
                .collect()
        };
        Some(MetricsReport {
            accuracy: scalar(|r| r.accuracy),
            macro_f1: scalar(|r| r.macro_f1),
            weighted_f1: scalar(|r| r.weighted_f1),
            precision: vector(|r| &r.precision),
            recall: vector(|r| &r.recall),
            f1: vector(|r| &r.f1),
        })
    }

    /// `key=value` lines, six decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "accuracy={:.6}", self.accuracy).unwrap();
        writeln!(out, "macro_f1={:.6}", self.macro_f1).unwrap();
        writeln!(out, "weighted_f1={:.6}", self.weighted_f1).unwrap();
        for (c, ((p, r), f)) in self.precision.iter().zip(&self.recall).zip(&self.f1).enumerate() {
            writeln!(out, "precision_{c}={p:.6}").unwrap();
            writeln!(out, "recall_{c}={r:.6}").unwrap();
            writeln!(out, "f1_{c}={f:.6}").unwrap();
        }
        out
    }
}

/// `M / K`, where `M` counts correct entries among the first `K` retrieved.
pub fn precision_at_k(correct_in_top_k: usize, k: usize) -> f64 {
    assert!(k >= 1, "K must be at least 1");
    correct_in_top_k as f64 / k as f64
}

/// Precision@K over a ranked list and a membership test.
pub fn precision_at_k_ranked<T>(retrieved: &[T], is_correct: impl Fn(&T) -> bool, k: usize) -> f64 {
    let m = retrieved.iter().take(k).filter(|x| is_correct(x)).count();
    precision_at_k(m, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let g = [0, 1, 2, 1, 0];
        let c = confusion(&g, &g, 3).unwrap();
        assert!(c.fp.iter().chain(&c.fn_).all(|&x| x == 0));
        let r = report(&c);
        assert_eq!((r.accuracy, r.macro_f1, r.weighted_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_class_zero() {
        let c = confusion(&[0, 0, 0, 0], &[0, 1, 0, 1], 2).unwrap();
        assert_eq!((c.tp[0], c.fp[0], c.fn_[1]), (2, 2, 2));
    }

    #[test]
    fn three_of_four() {
        assert_eq!(evaluate(&[0, 1, 1, 0], &[0, 1, 1, 1], 2).unwrap().accuracy, 0.75);
    }

    #[test]
    fn two_class_example() {
        // TP0=2 FP0=1 FN0=0, TP1=1 FP1=0 FN1=1.
        let r = evaluate(&[0, 0, 1, 0], &[0, 0, 1, 1], 2).unwrap();
        assert!((r.f1[0] - 0.8).abs() < 1e-12);
        assert!((r.f1[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
        assert!((r.weighted_f1 - 11.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn four_class_hand_tabulated() {
        let golds = [0, 0, 1, 1, 1, 2, 2, 3, 3, 3];
        let preds = [0, 1, 1, 1, 2, 2, 0, 3, 3, 1];
        let c = confusion(&preds, &golds, 4).unwrap();
        assert_eq!(c.tp, [1, 2, 1, 2]);
        assert_eq!(c.fp, [1, 2, 1, 0]);
        assert_eq!(c.fn_, [1, 1, 1, 1]);
        assert_eq!(c.support, [2, 3, 2, 3]);
        let r = report(&c);
        let f1 = [0.5, 4.0 / 7.0, 0.5, 0.8];
        for (a, b) in r.f1.iter().zip(f1) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((r.accuracy - 0.6).abs() < 1e-12);
        assert!((r.macro_f1 - (0.5 + 4.0 / 7.0 + 0.5 + 0.8) / 4.0).abs() < 1e-12);
        let w = 0.2 * 0.5 + 0.3 * 4.0 / 7.0 + 0.2 * 0.5 + 0.3 * 0.8;
        assert!((r.weighted_f1 - w).abs() < 1e-12);
    }

    #[test]
    fn absent_class_counts_in_macro() {
        let r = evaluate(&[0, 1], &[0, 1], 4).unwrap();
        assert_eq!(r.macro_f1, 0.5);
        assert_eq!(r.weighted_f1, 1.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            confusion(&[0], &[0, 1], 2),
            Err(Error::LengthMismatch { preds: 1, golds: 2 })
        ));
    }

    #[test]
    fn precision_at_k_cases() {
        assert_eq!(precision_at_k(10, 10), 1.0);
        assert_eq!(precision_at_k(0, 5), 0.0);
        assert_eq!(precision_at_k(3, 10), 0.3);
        let ranked = ["a", "b", "c"];
        assert_eq!(precision_at_k_ranked(&ranked, |x| *x != "b", 10), 0.2);
        assert_eq!(precision_at_k_ranked(&ranked, |_| true, 2), 1.0);
    }

    #[test]
    fn text_block() {
        let r = evaluate(&[0, 0, 1, 0], &[0, 0, 1, 1], 2).unwrap();
        let t = r.to_text();
        assert!(t.starts_with("accuracy=0.750000\nmacro_f1=0.733333\nweighted_f1=0.733333\n"));
        assert!(t.contains("f1_1=0.666667\n"));
    }

    #[test]
    fn mean_of_reports() {
        let a = evaluate(&[0, 1], &[0, 1], 2).unwrap();
        let b = evaluate(&[1, 0], &[0, 1], 2).unwrap();
        let m = MetricsReport::mean(&[a, b]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.f1, [0.5, 0.5]);
        assert!(MetricsReport::mean(&[]).is_none());
    }

    proptest! {
        #[test]
        fn permutation_invariant(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..60), seed: u64) {
            use rand::seq::SliceRandom;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut crate::seeds::rng(seed));
            let split = |v: &[(usize, usize)]| -> (Vec<usize>, Vec<usize>) { v.iter().copied().unzip() };
            let (p1, g1) = split(&pairs);
            let (p2, g2) = split(&shuffled);
            prop_assert_eq!(evaluate(&p1, &g1, 5).unwrap(), evaluate(&p2, &g2, 5).unwrap());
        }

        #[test]
        fn bounded_and_weighted_sum(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..80)) {
            let (p, g): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let r = evaluate(&p, &g, 4).unwrap();
            for x in [r.accuracy, r.macro_f1, r.weighted_f1].iter().chain(&r.f1) {
                prop_assert!((0.0..=1.0).contains(x));
            }
            let mut w = 0.0;
            for c in 0..4 {
                let n_c = g.iter().filter(|&&x| x == c).count() as f64;
                w += n_c / g.len() as f64 * r.f1[c];
            }
            prop_assert!((w - r.weighted_f1).abs() < 1e-12);
        }

        #[test]
        fn m_never_exceeds_bounds(flags in prop::collection::vec(any::<bool>(), 0..20), k in 1usize..25) {
            let p = precision_at_k_ranked(&flags, |&b| b, k);
            prop_assert!(p * k as f64 <= k.min(flags.len()) as f64 + 1e-12);
        }
    }
}
