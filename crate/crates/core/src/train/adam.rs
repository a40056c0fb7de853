use super::TrainError;
use crate::neural::NetworkBundle;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: NetworkBundle,
    pub v: NetworkBundle,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub const DEFAULT_LR: f64 = 0.002;

    pub fn new(like: &NetworkBundle, lr: f64) -> Self {
        Self { m: like.zeros_like(), v: like.zeros_like(), step: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// One bias-corrected update. A gradient with any non-finite entry is
    /// rejected without touching the parameters or the moments.
    pub fn step(&mut self, bundle: &mut NetworkBundle, grads: &NetworkBundle) -> Result<(), TrainError> {
        if !grads.is_finite() {
            return Err(TrainError::NonFiniteGradient);
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let params = bundle.slices_mut();
        let ms = self.m.slices_mut();
        let vs = self.v.slices_mut();
        for (((p, m), v), g) in params.into_iter().zip(ms).zip(vs).zip(grads.slices()) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
        Ok(())
    }
}
