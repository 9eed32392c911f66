use super::{ModelError, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments shaped like the model's parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ModelParams, config: AdamConfig) -> Self {
        let shapes: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        AdamState {
            config,
            t: 0,
            m: shapes.clone(),
            v: shapes,
        }
    }

    /// One bias-corrected update of `params` with `grads`.
    pub fn step(
        &mut self,
        params: &mut ModelParams,
        grads: &ModelParams,
    ) -> Result<(), ModelError> {
        let grad_tensors = grads.tensors();
        let mut param_tensors = params.tensors_mut();
        let mismatch = param_tensors.len() != grad_tensors.len()
            || param_tensors.len() != self.m.len()
            || param_tensors
                .iter()
                .zip(&grad_tensors)
                .zip(&self.m)
                .any(|((p, g), m)| p.len() != g.len() || p.len() != m.len());
        if mismatch {
            return Err(ModelError::ShapeMismatch {
                expected: self.m.iter().map(Vec::len).sum(),
                actual: grad_tensors.iter().map(|g| g.len()).sum(),
            });
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (k, p) in param_tensors.iter_mut().enumerate() {
            let g = grad_tensors[k];
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
