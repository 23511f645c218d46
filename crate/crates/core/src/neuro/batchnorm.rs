use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::NeuroError;

pub const DEFAULT_BN_EPSILON: f64 = 1e-5;
pub const DEFAULT_BN_MOMENTUM: f64 = 0.99;

/// Per-feature batch normalisation `a = γ·(z-μ)/sqrt(σ²+ε) + β`.
///
/// Train mode uses the batch statistics; infer mode uses the running averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormState {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub epsilon: f64,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
}

/// Values retained by a train-mode forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub normalized: Array2<f64>,
    pub inv_std: Array1<f64>,
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
    pub train: bool,
}

impl BatchNormState {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: Array1::ones(features),
            beta: Array1::zeros(features),
            epsilon: DEFAULT_BN_EPSILON,
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
            momentum: DEFAULT_BN_MOMENTUM,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&self, z: ArrayView2<f64>, train: bool) -> Result<(Array2<f64>, BatchNormCache), NeuroError> {
        if z.ncols() != self.features() {
            return Err(NeuroError::Shape(format!(
                "batch norm over {} features got {} columns",
                self.features(),
                z.ncols()
            )));
        }
        let (mean, var) = if train {
            let rows = z.nrows();
            if rows < 2 {
                return Err(NeuroError::BatchTooSmall(rows));
            }
            let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
            let centered = &z - &mean;
            let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("non-empty batch");
            (mean, var)
        } else {
            (self.running_mean.clone(), self.running_var.clone())
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.epsilon).sqrt());
        let normalized = (&z - &mean) * &inv_std;
        let out = &normalized * &self.gamma + &self.beta;
        Ok((
            out,
            BatchNormCache {
                normalized,
                inv_std,
                mean,
                var,
                train,
            },
        ))
    }

    /// Returns `(∂L/∂z, ∂L/∂γ, ∂L/∂β)`. In train mode the gradient flows through μ_B and σ²_B.
    pub fn backward(&self, cache: &BatchNormCache, d_out: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let d_beta = d_out.sum_axis(Axis(0));
        let d_gamma = (&d_out * &cache.normalized).sum_axis(Axis(0));
        let d_norm = &d_out * &self.gamma;
        let d_z = if cache.train {
            let n = d_out.nrows() as f64;
            let sum_d = d_norm.sum_axis(Axis(0));
            let sum_dx = (&d_norm * &cache.normalized).sum_axis(Axis(0));
            let mut dz = &d_norm * n - &sum_d - &cache.normalized * &sum_dx;
            dz *= &(&cache.inv_std / n);
            dz
        } else {
            &d_norm * &cache.inv_std
        };
        (d_z, d_gamma, d_beta)
    }

    /// Exponential moving average: `running ← momentum·running + (1-momentum)·batch`.
    pub fn update_running_stats(&mut self, batch_mean: &Array1<f64>, batch_var: &Array1<f64>) {
        let m = self.momentum;
        self.running_mean = &self.running_mean * m + batch_mean * (1.0 - m);
        self.running_var = &self.running_var * m + batch_var * (1.0 - m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use ndarray::array;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn three_point_batch() {
        let mut bn = BatchNormState::new(1);
        bn.epsilon = 1e-8;
        let (out, _) = bn.forward(array![[1.0], [2.0], [3.0]].view(), true).unwrap();
        let expected = [-1.224_744_871, 0.0, 1.224_744_871];
        for (o, e) in out.iter().zip(expected) {
            assert!((o - e).abs() < 1e-6);
        }
    }

    #[test]
    fn single_row_train_batch_is_rejected() {
        let bn = BatchNormState::new(2);
        assert!(matches!(bn.forward(array![[1.0, 2.0]].view(), true), Err(NeuroError::BatchTooSmall(1))));
        assert!(bn.forward(array![[1.0, 2.0]].view(), false).is_ok());
    }

    #[test]
    fn output_moments_follow_gamma_beta() {
        let mut rng = seeded(4);
        let mut bn = BatchNormState::new(3);
        bn.gamma = array![0.5, 2.0, -1.5];
        bn.beta = array![0.1, -3.0, 4.0];
        let z = Array2::from_shape_simple_fn((128, 3), || 5.0 + 3.0 * rng.sample::<f64, _>(StandardNormal));
        let (out, cache) = bn.forward(z.view(), true).unwrap();
        let mean = out.mean_axis(Axis(0)).unwrap();
        let var = out.var_axis(Axis(0), 0.0);
        for f in 0..3 {
            assert!((mean[f] - bn.beta[f]).abs() < 1e-6);
            let expected = bn.gamma[f].powi(2) * cache.var[f] / (cache.var[f] + bn.epsilon);
            assert!((var[f] - expected).abs() < 1e-4);
        }
    }

    #[test]
    fn constant_batch_input_gradients_sum_to_zero() {
        let mut rng = seeded(8);
        let bn = BatchNormState::new(2);
        let z = Array2::from_shape_simple_fn((16, 2), || rng.random_range(-1.0..1.0));
        let (_, cache) = bn.forward(z.view(), true).unwrap();
        let d_out = Array2::from_shape_simple_fn((16, 2), || rng.random_range(-1.0..1.0));
        let (dz, _, _) = bn.backward(&cache, d_out.view());
        for s in dz.sum_axis(Axis(0)) {
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn running_stats_updates() {
        let mut bn = BatchNormState::new(2);
        bn.momentum = 0.0;
        bn.update_running_stats(&array![1.0, -2.0], &array![0.5, 3.0]);
        assert_eq!(bn.running_mean, array![1.0, -2.0]);
        assert_eq!(bn.running_var, array![0.5, 3.0]);

        let mut bn = BatchNormState::new(2);
        for _ in 0..3000 {
            bn.update_running_stats(&array![0.25, 7.0], &array![2.0, 0.1]);
        }
        for (r, t) in bn.running_mean.iter().zip([0.25, 7.0]) {
            assert!((r - t).abs() < 1e-9);
        }
        for (r, t) in bn.running_var.iter().zip([2.0, 0.1]) {
            assert!((r - t).abs() < 1e-9);
        }
    }
}
