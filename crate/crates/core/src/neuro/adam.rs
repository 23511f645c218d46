use serde::{Deserialize, Serialize};

use super::NeuroError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), NeuroError> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NeuroError::Hyper(format!("{self:?}")))
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Result<Self, NeuroError> {
        config.validate()?;
        Ok(Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    /// One bias-corrected Adam update. Buffers are sized on the first call.
    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: &[&[f64]]) -> Result<(), NeuroError> {
        check_shapes(&params, grads)?;
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != grads.len() || self.m.iter().zip(grads).any(|(m, g)| m.len() != g.len()) {
            return Err(NeuroError::Shape("optimizer state does not match parameter layout".into()));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powf(self.step as f64);
        let c2 = 1.0 - beta2.powf(self.step as f64);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

pub fn sgd_step(params: Vec<&mut [f64]>, grads: &[&[f64]], learning_rate: f64) -> Result<(), NeuroError> {
    check_shapes(&params, grads)?;
    for (p, g) in params.into_iter().zip(grads) {
        for (pv, gv) in p.iter_mut().zip(g.iter()) {
            *pv -= learning_rate * gv;
        }
    }
    Ok(())
}

fn check_shapes(params: &[&mut [f64]], grads: &[&[f64]]) -> Result<(), NeuroError> {
    if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
        return Err(NeuroError::Shape("parameter and gradient layouts differ".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = AdamState::new(AdamConfig::with_learning_rate(1e-3)).unwrap();
        let mut p = vec![1.0, 1.0, 1.0];
        adam.update(vec![&mut p[..]], &[&[0.5, -20.0, 0.0]]).unwrap();
        assert!((p[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p[1] - (1.0 + 1e-3)).abs() < 1e-9);
        assert_eq!(p[2], 1.0);
    }

    #[test]
    fn constant_gradient_keeps_unit_step() {
        let mut adam = AdamState::new(AdamConfig::default()).unwrap();
        let mut p = vec![0.0];
        for _ in 0..100 {
            adam.update(vec![&mut p[..]], &[&[3.0]]).unwrap();
        }
        assert!((p[0] + 100.0 * 1e-4).abs() < 1e-9);
        assert_eq!(adam.step, 100);
    }

    #[test]
    fn minimises_quadratic() {
        let mut adam = AdamState::new(AdamConfig::with_learning_rate(0.05)).unwrap();
        let mut p = vec![3.0, -4.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.0), 2.0 * (p[1] + 2.0)];
            adam.update(vec![&mut p[..]], &[&g]).unwrap();
        }
        assert!((p[0] - 1.0).abs() < 1e-3 && (p[1] + 2.0).abs() < 1e-3);
    }

    #[test]
    fn sgd_and_shape_checks() {
        let mut p = vec![1.0, 2.0];
        sgd_step(vec![&mut p[..]], &[&[1.0, -1.0]], 0.5).unwrap();
        assert_eq!(p, vec![0.5, 2.5]);
        assert!(sgd_step(vec![&mut p[..]], &[&[1.0]], 0.5).is_err());
        let mut adam = AdamState::new(AdamConfig::default()).unwrap();
        adam.update(vec![&mut p[..]], &[&[1.0, 1.0]]).unwrap();
        let mut q = vec![0.0; 3];
        assert!(adam.update(vec![&mut q[..]], &[&[1.0, 1.0, 1.0]]).is_err());
        assert!(AdamState::new(AdamConfig { beta1: 1.0, ..AdamConfig::default() }).is_err());
    }
}
