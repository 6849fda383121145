//! Full-batch training of the reference models with Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{
    sigmoid, ClassifierModel, HeldOut, ModelHeader, ModelKind, ModelParams, Scaling, MODEL_FORMAT,
};
use super::{ClassifierError, TrainingSet, FEATURE_COUNT};
use crate::metrics::DICTIONARY_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub kind: ModelKind,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub hidden: usize,
    pub holdout_fraction: f64,
    pub cutoff: f64,
    pub min_rows: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            kind: ModelKind::Feedforward,
            seed: 0,
            epochs: 400,
            learning_rate: 0.02,
            l2: 1e-4,
            hidden: 16,
            holdout_fraction: 0.2,
            cutoff: 0.5,
            min_rows: 10,
        }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grads[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grads[i] * grads[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

/// Flat parameter layout: logistic is `[w; b]`, feedforward is
/// `[w1 (hidden x F); b1 (hidden); w2 (hidden); b2]`.
fn unpack(kind: ModelKind, hidden: usize, p: &[f64]) -> ModelParams {
    let f = FEATURE_COUNT;
    match kind {
        ModelKind::Logistic => ModelParams::Logistic {
            weights: p[..f].to_vec(),
            bias: p[f],
        },
        ModelKind::Feedforward => {
            let w1 = p[..hidden * f].chunks(f).map(<[f64]>::to_vec).collect();
            let b1 = p[hidden * f..hidden * f + hidden].to_vec();
            let w2 = p[hidden * f + hidden..hidden * f + 2 * hidden].to_vec();
            ModelParams::Feedforward {
                w1,
                b1,
                w2,
                b2: p[hidden * f + 2 * hidden],
            }
        }
    }
}

/// Mean cross-entropy loss and its gradient over the batch.
fn loss_and_grad(
    kind: ModelKind,
    hidden: usize,
    p: &[f64],
    xs: &[Vec<f64>],
    ys: &[f64],
    l2: f64,
) -> (f64, Vec<f64>) {
    let f = FEATURE_COUNT;
    let n = xs.len() as f64;
    let mut g = vec![0.0; p.len()];
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        match kind {
            ModelKind::Logistic => {
                let z = p[..f].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p[f];
                let q = sigmoid(z);
                loss += bce(q, y);
                let d = q - y;
                for j in 0..f {
                    g[j] += d * x[j];
                }
                g[f] += d;
            }
            ModelKind::Feedforward => {
                let (b1o, w2o, b2o) = (hidden * f, hidden * f + hidden, hidden * f + 2 * hidden);
                let h: Vec<f64> = (0..hidden)
                    .map(|k| {
                        let row = &p[k * f..(k + 1) * f];
                        (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p[b1o + k]).tanh()
                    })
                    .collect();
                let z = (0..hidden).map(|k| p[w2o + k] * h[k]).sum::<f64>() + p[b2o];
                let q = sigmoid(z);
                loss += bce(q, y);
                let d = q - y;
                for k in 0..hidden {
                    g[w2o + k] += d * h[k];
                    let da = d * p[w2o + k] * (1.0 - h[k] * h[k]);
                    g[b1o + k] += da;
                    for j in 0..f {
                        g[k * f + j] += da * x[j];
                    }
                }
                g[b2o] += d;
            }
        }
    }
    let weight_count = match kind {
        ModelKind::Logistic => f,
        ModelKind::Feedforward => hidden * f,
    };
    for (i, gi) in g.iter_mut().enumerate() {
        *gi /= n;
        if i < weight_count {
            *gi += l2 * p[i];
        }
    }
    (loss / n, g)
}

fn bce(q: f64, y: f64) -> f64 {
    let q = q.clamp(1e-12, 1.0 - 1e-12);
    -(y * q.ln() + (1.0 - y) * (1.0 - q).ln())
}

fn init(kind: ModelKind, hidden: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let f = FEATURE_COUNT;
    match kind {
        ModelKind::Logistic => vec![0.0; f + 1],
        ModelKind::Feedforward => {
            let r1 = (6.0 / (f + hidden) as f64).sqrt();
            let r2 = (6.0 / (hidden + 1) as f64).sqrt();
            let mut p = Vec::with_capacity(hidden * f + 2 * hidden + 1);
            p.extend((0..hidden * f).map(|_| rng.random_range(-r1..r1)));
            p.extend(std::iter::repeat_n(0.0, hidden));
            p.extend((0..hidden).map(|_| rng.random_range(-r2..r2)));
            p.push(0.0);
            p
        }
    }
}

/// Trains a model. A stratified fraction of rows is held out and scored at
/// the cutoff; scaling statistics come from the training part only.
pub fn train(ts: &TrainingSet, hp: &Hyperparams) -> Result<ClassifierModel, ClassifierError> {
    if ts.rows.len() < hp.min_rows {
        return Err(ClassifierError::DegenerateData(format!(
            "{} rows, at least {} required",
            ts.rows.len(),
            hp.min_rows
        )));
    }
    if ts.positives() == 0 || ts.negatives() == 0 {
        return Err(ClassifierError::DegenerateData(
            "training data has a single class".into(),
        ));
    }
    if ts
        .rows
        .iter()
        .any(|r| r.features.values().iter().any(|v| !v.is_finite()))
    {
        return Err(ClassifierError::DegenerateData(
            "non-finite feature value".into(),
        ));
    }
    if hp.kind == ModelKind::Feedforward && hp.hidden == 0 {
        return Err(ClassifierError::DegenerateData(
            "hidden layer width is zero".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);

    let mut held = Vec::new();
    let mut fit = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..ts.rows.len())
            .filter(|&i| ts.rows[i].is_clone == class)
            .collect();
        idx.shuffle(&mut rng);
        let k = if idx.len() >= 2 {
            ((idx.len() as f64 * hp.holdout_fraction).round() as usize).min(idx.len() - 1)
        } else {
            0
        };
        held.extend_from_slice(&idx[..k]);
        fit.extend_from_slice(&idx[k..]);
    }
    fit.sort_unstable();
    held.sort_unstable();

    let scaling: Vec<Scaling> = (0..FEATURE_COUNT)
        .map(|j| {
            let n = fit.len() as f64;
            let mean = fit
                .iter()
                .map(|&i| ts.rows[i].features.values()[j])
                .sum::<f64>()
                / n;
            let var = fit
                .iter()
                .map(|&i| (ts.rows[i].features.values()[j] - mean).powi(2))
                .sum::<f64>()
                / n;
            let std = var.sqrt();
            Scaling {
                mean,
                std: if std > 1e-12 { std } else { 1.0 },
            }
        })
        .collect();

    let xs: Vec<Vec<f64>> = fit
        .iter()
        .map(|&i| ClassifierModel::scale(&scaling, ts.rows[i].features.values()))
        .collect();
    let ys: Vec<f64> = fit
        .iter()
        .map(|&i| f64::from(u8::from(ts.rows[i].is_clone)))
        .collect();

    let mut p = init(hp.kind, hp.hidden, &mut rng);
    let mut opt = Adam::new(p.len(), hp.learning_rate);
    for epoch in 0..hp.epochs {
        let (loss, g) = loss_and_grad(hp.kind, hp.hidden, &p, &xs, &ys, hp.l2);
        if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonConvergence(format!(
                "loss became non-finite at epoch {epoch}"
            )));
        }
        opt.step(&mut p, &g);
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(ClassifierError::NonConvergence(
            "parameters became non-finite".into(),
        ));
    }
    let params = unpack(hp.kind, hp.hidden, &p);

    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for &i in &held {
        let x = ClassifierModel::scale(&scaling, ts.rows[i].features.values());
        let predicted = ClassifierModel::score_scaled(&params, &x) >= hp.cutoff;
        match (predicted, ts.rows[i].is_clone) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);

    Ok(ClassifierModel {
        header: ModelHeader {
            format: MODEL_FORMAT.into(),
            kind: hp.kind,
            metric_dictionary_version: DICTIONARY_VERSION.into(),
            seed: hp.seed,
            scaling,
            training_rows: ts.rows.len(),
            training_fingerprint: ts.fingerprint(),
            held_out: HeldOut {
                rows: held.len(),
                cutoff: hp.cutoff,
                precision: ratio(tp, fp),
                recall: ratio(tp, fn_),
            },
        },
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Classifier, FeatureVector, RowProvenance, TrainingRow};

    /// Clones have near-identical halves; non-clones differ in one metric block.
    fn toy_set(n: usize, seed: u64) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for i in 0..n {
            let is_clone = i % 2 == 0;
            let left: Vec<f64> = (0..24).map(|_| rng.random_range(0.0..20.0)).collect();
            let right: Vec<f64> = left
                .iter()
                .map(|v| {
                    if is_clone {
                        v + rng.random_range(-0.5..0.5)
                    } else {
                        v + rng.random_range(8.0..20.0)
                    }
                })
                .collect();
            rows.push(TrainingRow {
                features: FeatureVector::from_values([left, right].concat()).unwrap(),
                is_clone,
                provenance: if is_clone {
                    RowProvenance::IntersectionPositive
                } else {
                    RowProvenance::MinedNegative
                },
            });
        }
        TrainingSet { rows }
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let ts = toy_set(120, 1);
        for kind in [ModelKind::Logistic, ModelKind::Feedforward] {
            let m = train(
                &ts,
                &Hyperparams {
                    kind,
                    ..Hyperparams::default()
                },
            )
            .unwrap();
            assert_eq!(m.header.held_out.precision, Some(1.0), "{kind:?}");
            assert_eq!(m.header.held_out.rows, 24);
        }
    }

    #[test]
    fn deterministic_bytes() {
        let ts = toy_set(60, 2);
        let hp = Hyperparams {
            epochs: 50,
            ..Hyperparams::default()
        };
        let a = train(&ts, &hp).unwrap();
        let b = train(&ts, &hp).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = train(&ts, &Hyperparams { seed: 9, ..hp }).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn file_round_trip_preserves_predictions() {
        let ts = toy_set(40, 3);
        let m = train(
            &ts,
            &Hyperparams {
                epochs: 30,
                ..Hyperparams::default()
            },
        )
        .unwrap();
        let back = ClassifierModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        for r in &ts.rows {
            assert_eq!(
                back.predict(&r.features).unwrap(),
                m.predict(&r.features).unwrap()
            );
        }
    }

    #[test]
    fn version_mismatch_refused() {
        let ts = toy_set(40, 4);
        let mut m = train(
            &ts,
            &Hyperparams {
                epochs: 5,
                ..Hyperparams::default()
            },
        )
        .unwrap();
        m.header.metric_dictionary_version = "0".into();
        assert!(matches!(
            ClassifierModel::from_bytes(&m.to_bytes()),
            Err(ClassifierError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_inputs() {
        let mut ts = toy_set(20, 5);
        ts.rows.retain(|r| r.is_clone);
        assert!(matches!(
            train(&ts, &Hyperparams::default()),
            Err(ClassifierError::DegenerateData(_))
        ));
        let small = toy_set(4, 5);
        assert!(matches!(
            train(&small, &Hyperparams::default()),
            Err(ClassifierError::DegenerateData(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let ts = toy_set(20, 6);
        let hp = Hyperparams {
            learning_rate: f64::MAX,
            ..Hyperparams::default()
        };
        assert!(matches!(
            train(&ts, &hp),
            Err(ClassifierError::NonConvergence(_))
        ));
        let mut bad = ts.clone();
        bad.rows[0].features = FeatureVector::from_values(vec![f64::NAN; 48]).unwrap();
        assert!(matches!(
            train(&bad, &Hyperparams::default()),
            Err(ClassifierError::DegenerateData(_))
        ));
    }

    #[test]
    fn probabilities_in_range() {
        let ts = toy_set(40, 7);
        let m = train(
            &ts,
            &Hyperparams {
                epochs: 50,
                ..Hyperparams::default()
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let v: Vec<f64> = (0..48).map(|_| rng.random_range(-1e4..1e4)).collect();
            let p = m.predict(&FeatureVector::from_values(v).unwrap()).unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
