use serde::{Deserialize, Serialize};

use super::{DiagnosisError, InstanceSet};
use crate::scenario::ConfigClass;
use crate::sim::{Instance, FEATURE_COUNT};

pub const DEFAULT_BINS: usize = 8;
/// Additive smoothing applied to every histogram count.
pub const SMOOTHING_ALPHA: f64 = 1.0;

/// Equal-frequency discretization, one cut list per feature dimension.
/// A value falls in bin `#{cuts < x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinScheme {
    pub cuts: Vec<Vec<f64>>,
}

impl BinScheme {
    /// Cuts midway between the order statistics on either side of each k/bins
    /// quantile of the pooled data, deduplicated. Cuts at the maximum would
    /// leave an empty top bin and are dropped.
    pub fn fit(set: &InstanceSet, bins: usize) -> Result<Self, DiagnosisError> {
        set.require_nonempty("bin scheme")?;
        if bins == 0 {
            return Err(DiagnosisError::Domain("bin count must be positive".into()));
        }
        let n = set.len();
        let cuts = (0..FEATURE_COUNT)
            .map(|d| {
                let mut v: Vec<f64> = set.instances().iter().map(|i| i.features.0[d]).collect();
                v.sort_by(f64::total_cmp);
                let max = v[n - 1];
                let mut c: Vec<f64> = (1..bins)
                    .map(|k| k * n / bins)
                    .filter(|&i| i > 0)
                    .map(|i| 0.5 * (v[i - 1] + v[i]))
                    .filter(|&x| x < max)
                    .collect();
                c.dedup();
                c
            })
            .collect();
        Ok(BinScheme { cuts })
    }

    pub fn bins(&self, dim: usize) -> usize {
        self.cuts[dim].len() + 1
    }

    pub fn bin(&self, dim: usize, x: f64) -> usize {
        self.cuts[dim].partition_point(|&c| c < x)
    }

    fn counts(&self, set: &[Instance], dim: usize) -> Vec<f64> {
        let mut h = vec![0.0; self.bins(dim)];
        for i in set {
            h[self.bin(dim, i.features.0[dim])] += 1.0;
        }
        h
    }

    /// Smoothed probability histogram of one dimension.
    pub fn histogram(&self, set: &InstanceSet, dim: usize) -> Vec<f64> {
        let mut h = self.counts(set.instances(), dim);
        let total = set.len() as f64 + SMOOTHING_ALPHA * h.len() as f64;
        for x in &mut h {
            *x = (*x + SMOOTHING_ALPHA) / total;
        }
        h
    }
}

/// Shannon entropy in bits of a count vector. Zero counts contribute nothing.
pub fn entropy_bits(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    if n <= 0.0 {
        return 0.0;
    }
    -counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// H(I) − H(I | A_dim) in bits, with A_dim discretized by `scheme`.
pub fn info_gain(set: &InstanceSet, scheme: &BinScheme, dim: usize) -> Result<f64, DiagnosisError> {
    set.require_nonempty("info gain")?;
    if dim >= FEATURE_COUNT || dim >= scheme.cuts.len() {
        return Err(DiagnosisError::Domain(format!("dimension {dim} outside the schema")));
    }
    let k = ConfigClass::COUNT;
    let mut joint = vec![0.0; scheme.bins(dim) * k];
    let mut labels = vec![0.0; k];
    for i in set.instances() {
        joint[scheme.bin(dim, i.features.0[dim]) * k + i.label.index()] += 1.0;
        labels[i.label.index()] += 1.0;
    }
    let n = set.len() as f64;
    let h = entropy_bits(&labels);
    let cond: f64 = joint
        .chunks(k)
        .map(|row| row.iter().sum::<f64>() / n * entropy_bits(row))
        .sum();
    Ok((h - cond).clamp(0.0, h))
}

pub fn info_gains(set: &InstanceSet, scheme: &BinScheme) -> Result<[f64; FEATURE_COUNT], DiagnosisError> {
    let mut g = [0.0; FEATURE_COUNT];
    for (d, v) in g.iter_mut().enumerate() {
        *v = info_gain(set, scheme, d)?;
    }
    Ok(g)
}

/// Symmetrized K-L divergence ½(KL(p‖q) + KL(q‖p)) in nats. Both inputs must
/// be strictly positive distributions of equal length.
pub fn jeffreys(p: &[f64], q: &[f64]) -> Result<f64, DiagnosisError> {
    if p.len() != q.len() {
        return Err(DiagnosisError::Contract(format!("histogram lengths differ: {} vs {}", p.len(), q.len())));
    }
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if !(a > 0.0 && b > 0.0) {
            return Err(DiagnosisError::Domain("divergence needs strictly positive probabilities".into()));
        }
        // p ln(p/q) + q ln(q/p) = (p - q) ln(p/q)
        d += (a - b) * (a / b).ln();
    }
    Ok(0.5 * d.max(0.0))
}

pub(crate) fn dimension_weights(gains: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
    let total: f64 = gains.iter().sum();
    if total > 0.0 {
        gains.map(|g| g / total)
    } else {
        [1.0 / FEATURE_COUNT as f64; FEATURE_COUNT]
    }
}

/// Per-dimension smoothed histograms of one cell's data.
pub(crate) fn cell_histograms(set: &InstanceSet, scheme: &BinScheme) -> Vec<Vec<f64>> {
    (0..FEATURE_COUNT).map(|d| scheme.histogram(set, d)).collect()
}

pub(crate) fn weighted_divergence(
    target: &[Vec<f64>],
    source: &[Vec<f64>],
    weights: &[f64; FEATURE_COUNT],
) -> Result<f64, DiagnosisError> {
    let mut d = 0.0;
    for i in 0..FEATURE_COUNT {
        d += weights[i] * jeffreys(&target[i], &source[i])?;
    }
    Ok(d)
}

/// InfoGain-weighted sum of per-dimension Jeffreys divergences between the
/// target's and the source's smoothed histograms on the shared bins.
pub fn cell_divergence(
    target: &InstanceSet,
    source: &InstanceSet,
    scheme: &BinScheme,
    gains: &[f64; FEATURE_COUNT],
) -> Result<f64, DiagnosisError> {
    target.require_nonempty("divergence target")?;
    source.require_nonempty("divergence source")?;
    if scheme.cuts.len() != FEATURE_COUNT {
        return Err(DiagnosisError::Contract(format!(
            "bin scheme has {} dimensions, schema has {FEATURE_COUNT}",
            scheme.cuts.len()
        )));
    }
    weighted_divergence(
        &cell_histograms(target, scheme),
        &cell_histograms(source, scheme),
        &dimension_weights(gains),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::CellId;
    use crate::sim::FeatureVector;
    use proptest::prelude::*;

    fn inst(cell: u32, x0: f64, label: ConfigClass) -> Instance {
        let mut f = [0.0; FEATURE_COUNT];
        f[0] = x0;
        f[1] = (x0 * 7.0) % 3.0;
        Instance {
            cell: CellId(cell),
            epoch: 0,
            features: FeatureVector(f),
            label,
        }
    }

    #[test]
    fn single_label_has_zero_gain() {
        let set: InstanceSet = (0..20).map(|i| inst(1, i as f64, ConfigClass::TxTooWeak)).collect();
        let s = BinScheme::fit(&set, 8).unwrap();
        for g in info_gains(&set, &s).unwrap() {
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn perfectly_separating_dim_gives_one_bit() {
        let set: InstanceSet = (0..16)
            .map(|i| inst(1, i as f64, if i < 8 { ConfigClass::Nominal } else { ConfigClass::TxTooStrong }))
            .collect();
        let s = BinScheme::fit(&set, 8).unwrap();
        assert!((info_gain(&set, &s, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_dim_gives_zero_gain() {
        // Each bin holds one instance of each label.
        let set: InstanceSet = (0..16)
            .map(|i| inst(1, (i / 2) as f64, if i % 2 == 0 { ConfigClass::Nominal } else { ConfigClass::TxTooStrong }))
            .collect();
        let s = BinScheme::fit(&set, 8).unwrap();
        assert!(info_gain(&set, &s, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn empty_set_is_a_domain_error() {
        let set = InstanceSet::default();
        assert!(BinScheme::fit(&set, 8).is_err());
        let s = BinScheme { cuts: vec![vec![]; FEATURE_COUNT] };
        assert!(info_gain(&set, &s, 0).is_err());
    }

    #[test]
    fn bins_are_equal_frequency() {
        let set: InstanceSet = (0..80).map(|i| inst(1, i as f64, ConfigClass::Nominal)).collect();
        let s = BinScheme::fit(&set, 8).unwrap();
        assert_eq!(s.bins(0), 8);
        let mut counts = [0; 8];
        for i in set.instances() {
            counts[s.bin(0, i.features.0[0])] += 1;
        }
        assert_eq!(counts, [10; 8]);
    }

    #[test]
    fn constant_dim_collapses_to_one_bin() {
        let set: InstanceSet = (0..10).map(|i| inst(1, i as f64, ConfigClass::Nominal)).collect();
        let s = BinScheme::fit(&set, 8).unwrap();
        assert_eq!(s.bins(5), 1);
    }

    #[test]
    fn three_bin_jeffreys_matches_direct_sum() {
        let p: [f64; 3] = [0.5, 0.3, 0.2];
        let q: [f64; 3] = [0.2, 0.2, 0.6];
        let mut kl_pq = 0.0;
        let mut kl_qp = 0.0;
        for i in 0..3 {
            kl_pq += p[i] * (p[i] / q[i]).ln();
            kl_qp += q[i] * (q[i] / p[i]).ln();
        }
        let want = 0.5 * (kl_pq + kl_qp);
        assert!((jeffreys(&p, &q).unwrap() - want).abs() < 1e-14);
        // hand value: 0.5*(0.5 ln2.5 + 0.3 ln1.5 + 0.2 ln(1/3) + 0.2 ln0.4 + 0.2 ln(2/3) + 0.6 ln3)
        assert!((want - 0.377_439_322_920_153_4).abs() < 1e-12);
    }

    #[test]
    fn smoothed_histogram_counts() {
        // 4 instances into bins {0,0,1,2} of a 3-bin scheme; alpha = 1.
        let set: InstanceSet = [0.0, 0.0, 1.0, 2.0].iter().map(|&x| inst(1, x, ConfigClass::Nominal)).collect();
        let mut cuts = vec![vec![]; FEATURE_COUNT];
        cuts[0] = vec![0.5, 1.5];
        let s = BinScheme { cuts };
        let h = s.histogram(&set, 0);
        assert_eq!(h, vec![3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0]);
    }

    #[test]
    fn identical_cells_have_zero_divergence() {
        let a: InstanceSet = (0..12).map(|i| inst(1, i as f64, ConfigClass::ALL[i % 5])).collect();
        let b: InstanceSet = a.instances().iter().cloned().map(|mut i| { i.cell = CellId(2); i }).collect();
        let s = BinScheme::fit(&a, 8).unwrap();
        let g = info_gains(&a, &s).unwrap();
        assert_eq!(cell_divergence(&a, &b, &s, &g).unwrap(), 0.0);
    }

    #[test]
    fn zero_gains_use_uniform_weights() {
        let w = dimension_weights(&[0.0; FEATURE_COUNT]);
        assert!(w.iter().all(|&x| (x - 1.0 / 13.0).abs() < 1e-15));
        let mut g = [0.0; FEATURE_COUNT];
        g[2] = 0.5;
        g[4] = 1.5;
        let w = dimension_weights(&g);
        assert_eq!((w[2], w[4], w[0]), (0.25, 0.75, 0.0));
    }

    fn arb_set() -> impl Strategy<Value = InstanceSet> {
        prop::collection::vec((prop::array::uniform13(-5.0f64..5.0), 0usize..5, 0u32..3), 1..40).prop_map(|rows| {
            rows.into_iter()
                .map(|(f, l, c)| Instance {
                    cell: CellId(c),
                    epoch: 0,
                    features: FeatureVector(f.map(|x| (x * 2.0).round() / 2.0)),
                    label: ConfigClass::ALL[l],
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn info_gain_is_bounded_by_label_entropy(set in arb_set()) {
            let s = BinScheme::fit(&set, 8).unwrap();
            let h = entropy_bits(&set.class_counts().map(|c| c as f64));
            for g in info_gains(&set, &s).unwrap() {
                prop_assert!(g >= 0.0 && g <= h + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn divergence_nonnegative_and_symmetric(a in arb_set(), b in arb_set()) {
            let pooled: InstanceSet = a.instances().iter().chain(b.instances()).cloned().collect();
            let s = BinScheme::fit(&pooled, 8).unwrap();
            let g = info_gains(&pooled, &s).unwrap();
            let ab = cell_divergence(&a, &b, &s, &g).unwrap();
            let ba = cell_divergence(&b, &a, &s, &g).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
            prop_assert_eq!(cell_divergence(&a, &a, &s, &g).unwrap(), 0.0);
            // Zero exactly when every smoothed histogram matches.
            let same = (0..FEATURE_COUNT).all(|d| s.histogram(&a, d) == s.histogram(&b, d));
            let w = dimension_weights(&g);
            let any_weighted_diff = (0..FEATURE_COUNT).any(|d| w[d] > 0.0 && s.histogram(&a, d) != s.histogram(&b, d));
            if same { prop_assert_eq!(ab, 0.0); }
            if any_weighted_diff { prop_assert!(ab > 0.0); }
        }
    }
}
