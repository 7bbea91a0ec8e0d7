//! Adam parameter updates with bias correction.

use super::{Gradients, ParamStore};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 4e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> AdamHyper {
        AdamHyper {
            lr,
            ..AdamHyper::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || self.eps <= 0.0 {
            return Err(Error::Numcore("adam: lr and eps must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Numcore("adam: betas must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One Adam step over every parameter in the store. Increments the shared
/// step counter and applies bias-corrected moment estimates.
pub fn adam_step(store: &mut ParamStore, grads: &Gradients, hyper: &AdamHyper) -> Result<()> {
    hyper.validate()?;
    if grads.len() != store.len() {
        return Err(Error::Numcore(format!(
            "adam: {} gradients for {} parameters",
            grads.len(),
            store.len()
        )));
    }
    let t = store.bump_step();
    let bias1 = 1.0 - hyper.beta1.powi(t as i32);
    let bias2 = 1.0 - hyper.beta2.powi(t as i32);
    for i in 0..store.len() {
        let g = grads.at(i);
        {
            let (theta, _, _) = store.moments_mut(i);
            if g.shape() != theta.shape() {
                let name = store.name_at(i).to_string();
                return Err(Error::Numcore(format!(
                    "adam: gradient shape mismatch for '{name}'"
                )));
            }
        }
        let (theta, m, v) = store.moments_mut(i);
        for ((th, (mi, vi)), gi) in theta
            .data_mut()
            .iter_mut()
            .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
            .zip(g.data())
        {
            *mi = hyper.beta1 * *mi + (1.0 - hyper.beta1) * gi;
            *vi = hyper.beta2 * *vi + (1.0 - hyper.beta2) * gi * gi;
            let m_hat = *mi / bias1;
            let v_hat = *vi / bias2;
            *th -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
    Ok(())
}
