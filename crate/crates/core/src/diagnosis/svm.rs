use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DiagnosisError, InstanceSet};
use crate::rng::{stream, stream_rng};
use crate::scenario::ConfigClass;
use crate::sim::{FeatureVector, Instance, FEATURE_COUNT};

/// Hyperparameters of the linear learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Regularization trade-off C; per-instance bounds are C·w_i/mean(w).
    pub c: f64,
    /// Maximum passes of dual coordinate descent.
    pub max_epochs: u32,
    /// Stop once the projected-gradient spread falls below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            max_epochs: 400,
            tolerance: 1e-3,
            seed: 0,
        }
    }
}

/// One-vs-rest linear classifier over standardized features. The bias is
/// trained as the weight of a constant augmented feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: Vec<ConfigClass>,
    pub weights: Vec<[f64; FEATURE_COUNT]>,
    pub bias: Vec<f64>,
    pub mean: [f64; FEATURE_COUNT],
    /// Population standard deviation; 0 marks a frozen dimension.
    pub std: [f64; FEATURE_COUNT],
    pub params: SvmParams,
}

impl LinearModel {
    pub fn standardize(&self, f: &FeatureVector) -> [f64; FEATURE_COUNT] {
        let mut z = [0.0; FEATURE_COUNT];
        for d in 0..FEATURE_COUNT {
            if self.std[d] > 0.0 {
                z[d] = (f.0[d] - self.mean[d]) / self.std[d];
            }
        }
        z
    }

    /// One-vs-rest decision values, parallel to `classes`.
    pub fn scores(&self, f: &FeatureVector) -> Vec<f64> {
        let z = self.standardize(f);
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(&z).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect()
    }
}

/// Label with the largest score; ties go to the earlier class in enum order.
pub fn predict(model: &LinearModel, f: &FeatureVector) -> (ConfigClass, Vec<(ConfigClass, f64)>) {
    let scores: Vec<(ConfigClass, f64)> = model.classes.iter().copied().zip(model.scores(f)).collect();
    let mut best = scores[0];
    for &(c, s) in &scores[1..] {
        if s > best.1 || (s == best.1 && c < best.0) {
            best = (c, s);
        }
    }
    (best.0, scores)
}

fn canonical_order(a: &(&Instance, f64), b: &(&Instance, f64)) -> std::cmp::Ordering {
    for d in 0..FEATURE_COUNT {
        let o = a.0.features.0[d].total_cmp(&b.0.features.0[d]);
        if o.is_ne() {
            return o;
        }
    }
    a.0.label.cmp(&b.0.label).then(a.1.total_cmp(&b.1))
}

/// Trains one binary L1-loss SVM by dual coordinate descent on augmented
/// rows `x` (last column is the constant 1). Returns the primal weights.
fn train_binary(x: &[[f64; FEATURE_COUNT + 1]], y: &[f64], upper: &[f64], params: &SvmParams, order_seed: u64) -> [f64; FEATURE_COUNT + 1] {
    let n = x.len();
    let mut w = [0.0; FEATURE_COUNT + 1];
    let mut alpha = vec![0.0; n];
    let qd: Vec<f64> = x.iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(params.seed, &[stream::LEARNER, order_seed]);
    for _ in 0..params.max_epochs {
        idx.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &idx {
            let g = y[i] * x[i].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == upper[i] {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 && qd[i] > 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, upper[i]);
                let step = (alpha[i] - old) * y[i];
                for (wj, xj) in w.iter_mut().zip(&x[i]) {
                    *wj += step * xj;
                }
            }
        }
        if pg_max - pg_min < params.tolerance {
            break;
        }
    }
    w
}

/// Fits a one-vs-rest linear SVM. Instances are put in a canonical order
/// first so the result does not depend on input order.
pub fn train_linear_classifier(
    set: &InstanceSet,
    weights: Option<&[f64]>,
    params: &SvmParams,
) -> Result<LinearModel, DiagnosisError> {
    set.require_nonempty("training")?;
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(DiagnosisError::Domain(format!("C must be positive, got {}", params.c)));
    }
    let n = set.len();
    let w_in: Vec<f64> = match weights {
        Some(w) if w.len() != n => {
            return Err(DiagnosisError::Contract(format!("{} weights for {n} instances", w.len())));
        }
        Some(w) if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) => {
            return Err(DiagnosisError::Domain("instance weights must be positive".into()));
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let mut rows: Vec<(&Instance, f64)> = set.instances().iter().zip(w_in).collect();
    rows.sort_by(canonical_order);

    let counts = set.class_counts();
    let classes: Vec<ConfigClass> = ConfigClass::ALL.into_iter().filter(|c| counts[c.index()] > 0).collect();
    if classes.len() < 2 {
        return Err(DiagnosisError::DegenerateTraining(classes[0]));
    }

    let nf = n as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    let mut std = [0.0; FEATURE_COUNT];
    for d in 0..FEATURE_COUNT {
        mean[d] = rows.iter().map(|r| r.0.features.0[d]).sum::<f64>() / nf;
        let var = rows.iter().map(|r| (r.0.features.0[d] - mean[d]).powi(2)).sum::<f64>() / nf;
        std[d] = if var > 1e-24 { var.sqrt() } else { 0.0 };
    }
    let x: Vec<[f64; FEATURE_COUNT + 1]> = rows
        .iter()
        .map(|r| {
            let mut z = [1.0; FEATURE_COUNT + 1];
            for d in 0..FEATURE_COUNT {
                z[d] = if std[d] > 0.0 { (r.0.features.0[d] - mean[d]) / std[d] } else { 0.0 };
            }
            z
        })
        .collect();
    let mean_w = rows.iter().map(|r| r.1).sum::<f64>() / nf;
    let upper: Vec<f64> = rows.iter().map(|r| params.c * r.1 / mean_w).collect();

    let mut wv = Vec::with_capacity(classes.len());
    let mut bias = Vec::with_capacity(classes.len());
    for &c in &classes {
        let y: Vec<f64> = rows.iter().map(|r| if r.0.label == c { 1.0 } else { -1.0 }).collect();
        let w = train_binary(&x, &y, &upper, params, c.index() as u64);
        let mut lin = [0.0; FEATURE_COUNT];
        lin.copy_from_slice(&w[..FEATURE_COUNT]);
        if lin.iter().chain(std::iter::once(&w[FEATURE_COUNT])).any(|v| !v.is_finite()) {
            return Err(DiagnosisError::Contract("non-finite weight after training".into()));
        }
        wv.push(lin);
        bias.push(w[FEATURE_COUNT]);
    }
    Ok(LinearModel {
        classes,
        weights: wv,
        bias,
        mean,
        std,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::CellId;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn inst(f: [f64; FEATURE_COUNT], label: ConfigClass) -> Instance {
        Instance {
            cell: CellId(1),
            epoch: 0,
            features: FeatureVector(f),
            label,
        }
    }

    fn toy(x0: f64, x1: f64) -> [f64; FEATURE_COUNT] {
        let mut f = [0.0; FEATURE_COUNT];
        f[0] = x0;
        f[1] = x1;
        f
    }

    fn separable() -> InstanceSet {
        (0..20)
            .map(|i| {
                let side = if i % 2 == 0 { -1.0 } else { 1.0 };
                let l = if side < 0.0 { ConfigClass::Nominal } else { ConfigClass::TxTooWeak };
                inst(toy(side * (1.0 + (i % 5) as f64 * 0.3), (i % 7) as f64 - 3.0), l)
            })
            .collect()
    }

    fn accuracy(m: &LinearModel, set: &[Instance]) -> f64 {
        set.iter().filter(|i| predict(m, &i.features).0 == i.label).count() as f64 / set.len() as f64
    }

    #[test]
    fn separable_toy_is_fit_exactly() {
        let set = separable();
        let m = train_linear_classifier(&set, None, &SvmParams::default()).unwrap();
        assert_eq!(m.classes, vec![ConfigClass::Nominal, ConfigClass::TxTooWeak]);
        assert_eq!(accuracy(&m, set.instances()), 1.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        let set: InstanceSet = (0..5).map(|i| inst(toy(i as f64, 0.0), ConfigClass::TxTooStrong)).collect();
        assert!(matches!(
            train_linear_classifier(&set, None, &SvmParams::default()),
            Err(DiagnosisError::DegenerateTraining(ConfigClass::TxTooStrong))
        ));
    }

    #[test]
    fn scores_are_the_affine_form() {
        let set = separable();
        let m = train_linear_classifier(&set, None, &SvmParams::default()).unwrap();
        let f = FeatureVector(toy(0.37, -1.2));
        let z0 = (0.37 - m.mean[0]) / m.std[0];
        let z1 = (-1.2 - m.mean[1]) / m.std[1];
        for (k, s) in m.scores(&f).into_iter().enumerate() {
            let manual = m.weights[k][0] * z0 + m.weights[k][1] * z1 + m.bias[k];
            assert!((s - manual).abs() < 1e-12);
        }
        // Zero-variance dims are frozen.
        assert_eq!(m.std[5], 0.0);
        assert!(m.weights.iter().all(|w| w[5] == 0.0));
    }

    #[test]
    fn exact_tie_goes_to_enum_order() {
        let m = LinearModel {
            classes: vec![ConfigClass::Nominal, ConfigClass::TxTooStrong, ConfigClass::HoMarginTooLarge],
            weights: vec![[0.0; FEATURE_COUNT]; 3],
            bias: vec![0.5, 0.7, 0.7],
            mean: [0.0; FEATURE_COUNT],
            std: [1.0; FEATURE_COUNT],
            params: SvmParams::default(),
        };
        assert_eq!(predict(&m, &FeatureVector::default()).0, ConfigClass::TxTooStrong);
    }

    #[test]
    fn doubled_weights_leave_the_model_unchanged() {
        let set = separable();
        let w: Vec<f64> = (0..set.len()).map(|i| 0.5 + (i % 3) as f64).collect();
        let w2: Vec<f64> = w.iter().map(|v| v * 2.0).collect();
        let a = train_linear_classifier(&set, Some(&w), &SvmParams::default()).unwrap();
        let b = train_linear_classifier(&set, Some(&w2), &SvmParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_weights_are_rejected() {
        let set = separable();
        let mut w = vec![1.0; set.len()];
        w[3] = 0.0;
        assert!(train_linear_classifier(&set, Some(&w), &SvmParams::default()).is_err());
        assert!(train_linear_classifier(&set, Some(&w[1..]), &SvmParams::default()).is_err());
    }

    fn blobs(seed: u64, per_class: usize) -> Vec<Instance> {
        let mut rng = stream_rng(seed, &[]);
        let centers = [(-2.0, -2.0), (2.0, -2.0), (-2.0, 2.0), (2.0, 2.0)];
        let mut out = Vec::new();
        for (k, (cx, cy)) in centers.into_iter().enumerate() {
            for _ in 0..per_class {
                let mut f = [0.0; FEATURE_COUNT];
                f[0] = cx + 1.3 * rng.sample::<f64, _>(StandardNormal);
                f[1] = cy + 1.3 * rng.sample::<f64, _>(StandardNormal);
                for v in f.iter_mut().skip(2) {
                    *v = rng.sample(StandardNormal);
                }
                out.push(inst(f, ConfigClass::ALL[k]));
            }
        }
        out
    }

    /// Independent reference: full-batch subgradient descent on the primal
    /// objective ½|w|² + C Σ max(0, 1 − y w·x) per class, many iterations,
    /// with an averaged iterate.
    fn reference_scores(train: &[Instance], test: &[Instance], c: f64) -> f64 {
        let n = train.len() as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        let mut sd = [0.0; FEATURE_COUNT];
        for d in 0..FEATURE_COUNT {
            mean[d] = train.iter().map(|i| i.features.0[d]).sum::<f64>() / n;
            sd[d] = (train.iter().map(|i| (i.features.0[d] - mean[d]).powi(2)).sum::<f64>() / n).sqrt();
        }
        let z = |f: &FeatureVector| {
            let mut v = vec![1.0; FEATURE_COUNT + 1];
            for d in 0..FEATURE_COUNT {
                v[d] = (f.0[d] - mean[d]) / sd[d];
            }
            v
        };
        let xs: Vec<Vec<f64>> = train.iter().map(|i| z(&i.features)).collect();
        let mut models = Vec::new();
        for k in 0..4 {
            let y: Vec<f64> = train.iter().map(|i| if i.label.index() == k { 1.0 } else { -1.0 }).collect();
            let mut w = vec![0.0; FEATURE_COUNT + 1];
            let mut avg = vec![0.0; FEATURE_COUNT + 1];
            let iters = 20_000;
            for t in 1..=iters {
                let mut g = w.clone();
                for (x, &yi) in xs.iter().zip(&y) {
                    let m: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
                    if yi * m < 1.0 {
                        for j in 0..g.len() {
                            g[j] -= c * yi * x[j];
                        }
                    }
                }
                let eta = 1.0 / (t as f64 + 100.0);
                for j in 0..w.len() {
                    w[j] -= eta * g[j];
                }
                if t > iters / 2 {
                    for j in 0..w.len() {
                        avg[j] += w[j];
                    }
                }
            }
            models.push(avg);
        }
        let correct = test
            .iter()
            .filter(|i| {
                let x = z(&i.features);
                let s: Vec<f64> = models.iter().map(|w| w.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
                let best = (0..4).fold(0, |b, k| if s[k] > s[b] { k } else { b });
                best == i.label.index()
            })
            .count();
        correct as f64 / test.len() as f64
    }

    #[test]
    fn four_blob_accuracy_matches_reference_optimizer() {
        let train = blobs(11, 40);
        let test = blobs(12, 100);
        let set = InstanceSet::new(train.clone());
        let m = train_linear_classifier(&set, None, &SvmParams::default()).unwrap();
        let ours = accuracy(&m, &test);
        let reference = reference_scores(&train, &test, 1.0);
        assert!((ours - reference).abs() <= 0.02, "ours {ours} reference {reference}");
        assert!(ours > 0.7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn training_is_order_independent(perm_seed in any::<u64>()) {
            let mut rows = blobs(5, 10);
            let set = InstanceSet::new(rows.clone());
            let a = train_linear_classifier(&set, None, &SvmParams::default()).unwrap();
            rows.shuffle(&mut stream_rng(perm_seed, &[]));
            let b = train_linear_classifier(&InstanceSet::new(rows), None, &SvmParams::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
