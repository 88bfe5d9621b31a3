use crate::error::{EpsrError, Result};
use crate::model::ParamStore;
use crate::tensor::Scalar;

/// Adam hyperparameters other than the learning rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of every parameter. Every parameter must
/// carry a gradient; gradients are cleared afterwards.
pub fn adam_step<T: Scalar>(params: &mut ParamStore<T>, lr: f64, hp: AdamParams) -> Result<()> {
    if let Some(e) = params.entries().iter().find(|e| e.tensor.grad().is_none()) {
        return Err(EpsrError::MissingGradient(e.name.clone()));
    }
    let t = params.step() + 1;
    let c1 = 1.0 - hp.beta1.powf(t as f64);
    let c2 = 1.0 - hp.beta2.powf(t as f64);
    for e in params.entries_mut() {
        let grad = e.tensor.take_grad().expect("checked above");
        let data = e.tensor.data_mut();
        for i in 0..data.len() {
            let g = grad[i].as_f64();
            let m = hp.beta1 * e.m[i].as_f64() + (1.0 - hp.beta1) * g;
            let v = hp.beta2 * e.v[i].as_f64() + (1.0 - hp.beta2) * g * g;
            e.m[i] = T::from_f64(m);
            e.v[i] = T::from_f64(v);
            let update = lr * (m / c1) / ((v / c2).sqrt() + hp.eps);
            data[i] = T::from_f64(data[i].as_f64() - update);
        }
    }
    params.set_step(t);
    Ok(())
}
