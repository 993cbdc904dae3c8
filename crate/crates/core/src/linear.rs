//! Binary linear max-margin training on sparse features.
//!
//! Minimizes `λ/2 ‖w‖² + mean_i max(0, 1 − y_i (w·x_i + b))` with
//! `λ = 1 / (C n)`, which has the same minimizer as the usual
//! `½‖w‖² + C Σ hinge` linear SVM objective. The bias is handled as an
//! extra constant feature and is regularized along with the weights.
//!
//! Optimization is epoch-based stochastic subgradient descent with step size
//! `1 / (1 + λ t)` and iterate averaging from the second epoch on. The
//! weight vector is stored as `scale · v` so the shrink step is O(1), and the
//! running sum of iterates is stored as `B · v + U` so each update touches
//! only the nonzero features of the example.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdParams {
    /// Inverse regularization strength, > 0.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            c: 1.0,
            epochs: 20,
            seed: 0,
        }
    }
}

impl SgdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {}", self.c)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Training objective of the returned iterate after each epoch.
    pub objective_trace: Vec<f64>,
}

impl BinaryModel {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

const RESCALE_BELOW: f64 = 1e-9;

/// Objective value of `(w, b)` on the given problem.
pub fn hinge_objective(weights: &[f64], bias: f64, xs: &[&SparseVector], ys: &[bool], lambda: f64) -> f64 {
    let reg = weights.iter().map(|w| w * w).sum::<f64>() + bias * bias;
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let s = if y { 1.0 } else { -1.0 };
            (1.0 - s * (x.dot_dense(weights) + bias)).max(0.0)
        })
        .sum();
    0.5 * lambda * reg + loss / xs.len() as f64
}

/// Train one binary model. `dim` must exceed every feature id in `xs`.
pub fn train_binary(xs: &[&SparseVector], ys: &[bool], dim: usize, params: &SgdParams) -> Result<BinaryModel> {
    params.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    if let Some(max) = xs.iter().filter_map(|x| x.max_id()).max() {
        if max as usize >= dim {
            return Err(Error::Dimension {
                expected: dim,
                found: max as usize + 1,
            });
        }
    }

    let n = xs.len();
    let lambda = 1.0 / (params.c * n as f64);
    let bias_slot = dim;
    let mut v = vec![0.0; dim + 1];
    let mut scale = 1.0f64;

    // Running sum of iterates: sum_w = acc_b * v + acc_u.
    let mut acc_b = 0.0f64;
    let mut acc_u = vec![0.0; dim + 1];
    let mut acc_n = 0u64;
    let averaging_from = usize::from(params.epochs > 1);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut t = 0u64;
    let mut trace = Vec::with_capacity(params.epochs);
    let mut snapshot = vec![0.0; dim + 1];

    for epoch in 0..params.epochs {
        let averaging = epoch >= averaging_from;
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let x = xs[i];
            let y = if ys[i] { 1.0 } else { -1.0 };
            let margin = y * scale * (x.dot_dense(&v) + v[bias_slot]);
            let eta = 1.0 / (1.0 + lambda * t as f64);

            scale *= 1.0 - eta * lambda;
            if scale < RESCALE_BELOW {
                for vi in v.iter_mut() {
                    *vi *= scale;
                }
                acc_b /= scale;
                scale = 1.0;
            }

            if margin < 1.0 {
                let step = eta * y / scale;
                for (id, w) in x.iter() {
                    let dv = step * w;
                    if averaging {
                        acc_u[id as usize] -= acc_b * dv;
                    }
                    v[id as usize] += dv;
                }
                if averaging {
                    acc_u[bias_slot] -= acc_b * step;
                }
                v[bias_slot] += step;
            }

            if averaging {
                acc_b += scale;
                acc_n += 1;
            }
        }

        if acc_n > 0 {
            let inv = 1.0 / acc_n as f64;
            for ((s, vi), ui) in snapshot.iter_mut().zip(&v).zip(&acc_u) {
                *s = (acc_b * vi + ui) * inv;
            }
        } else {
            for (s, vi) in snapshot.iter_mut().zip(&v) {
                *s = scale * vi;
            }
        }
        trace.push(hinge_objective(&snapshot[..dim], snapshot[bias_slot], xs, ys, lambda));
    }

    let bias = snapshot[bias_slot];
    snapshot.truncate(dim);
    Ok(BinaryModel {
        weights: snapshot,
        bias,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(id: u32) -> SparseVector {
        SparseVector::from_pairs(vec![(id, 1.0)])
    }

    #[test]
    fn separates_one_hot_classes() {
        let xs: Vec<SparseVector> = (0..20).map(|i| unit(i % 2)).collect();
        let refs: Vec<&SparseVector> = xs.iter().collect();
        let ys: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let m = train_binary(&refs, &ys, 2, &SgdParams::default()).unwrap();
        for (x, y) in refs.iter().zip(&ys) {
            assert_eq!(m.decision(x) > 0.0, *y);
        }
    }

    #[test]
    fn deterministic_bits() {
        let xs: Vec<SparseVector> = (0..50)
            .map(|i| SparseVector::from_pairs(vec![(i % 7, 1.0), ((i * 3) % 5 + 7, 0.5)]).normalized())
            .collect();
        let refs: Vec<&SparseVector> = xs.iter().collect();
        let ys: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        let p = SgdParams {
            c: 1.0,
            epochs: 5,
            seed: 3,
        };
        let a = train_binary(&refs, &ys, 12, &p).unwrap();
        let b = train_binary(&refs, &ys, 12, &p).unwrap();
        assert_eq!(
            a.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(),
            b.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn averaged_sum_matches_dense_bookkeeping() {
        // Replays the same SGD with dense, unscaled weights and checks the
        // returned average against a direct mean of the iterates.
        let xs: Vec<SparseVector> = (0..30)
            .map(|i| SparseVector::from_pairs(vec![(i % 4, 1.0), (4 + i % 3, 1.0)]).normalized())
            .collect();
        let refs: Vec<&SparseVector> = xs.iter().collect();
        let ys: Vec<bool> = (0..30).map(|i| (i % 4) < 2).collect();
        let p = SgdParams {
            c: 0.5,
            epochs: 4,
            seed: 9,
        };
        let model = train_binary(&refs, &ys, 7, &p).unwrap();

        let n = refs.len();
        let lambda = 1.0 / (p.c * n as f64);
        let mut w = vec![0.0; 8];
        let mut sum = [0.0; 8];
        let mut count = 0.0;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let mut t = 0.0;
        for epoch in 0..p.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1.0;
                let y = if ys[i] { 1.0 } else { -1.0 };
                let margin = y * (refs[i].dot_dense(&w[..7]) + w[7]);
                let eta = 1.0 / (1.0 + lambda * t);
                for wi in w.iter_mut() {
                    *wi *= 1.0 - eta * lambda;
                }
                if margin < 1.0 {
                    for (id, x) in refs[i].iter() {
                        w[id as usize] += eta * y * x;
                    }
                    w[7] += eta * y;
                }
                if epoch >= 1 {
                    for (s, wi) in sum.iter_mut().zip(&w) {
                        *s += wi;
                    }
                    count += 1.0;
                }
            }
        }
        for (j, s) in sum.iter().enumerate().take(7) {
            assert!((model.weights[j] - s / count).abs() < 1e-9, "feature {j}");
        }
        assert!((model.bias - sum[7] / count).abs() < 1e-9);
    }

    #[test]
    fn rejects_out_of_range_feature() {
        let x = unit(5);
        assert!(matches!(
            train_binary(&[&x], &[true], 3, &SgdParams::default()),
            Err(Error::Dimension { .. })
        ));
    }
}
