//! Finite-difference verification of reverse-mode gradients.

use super::{Gradients, ParamStore};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which coordinates to probe per parameter.
#[derive(Debug, Clone, Copy)]
pub enum CoordSample {
    All,
    /// A seeded random subsample of up to `per_param` coordinates.
    Sample { per_param: usize, seed: u64 },
}

/// Compare `analytic` gradients against central finite differences of
/// `loss_fn` and return the maximum relative error over the probed
/// coordinates. The store is perturbed in place and restored after each
/// probe. Relative error uses max(|fd|, |analytic|, 1e-6) as denominator.
pub fn grad_check<F>(
    store: &mut ParamStore,
    analytic: &Gradients,
    mut loss_fn: F,
    eps: f64,
    sample: CoordSample,
) -> Result<f64>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    if eps <= 0.0 {
        return Err(Error::Numcore("grad_check: eps must be positive".into()));
    }
    if analytic.len() != store.len() {
        return Err(Error::Numcore(
            "grad_check: gradient layout does not match the store".into(),
        ));
    }
    let mut max_rel = 0.0f64;
    let mut rng = match sample {
        CoordSample::All => None,
        CoordSample::Sample { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    for idx in 0..store.len() {
        let numel = store.at(idx).numel();
        let coords: Vec<usize> = match (&mut rng, sample) {
            (None, _) => (0..numel).collect(),
            (Some(rng), CoordSample::Sample { per_param, .. }) => {
                if numel <= per_param {
                    (0..numel).collect()
                } else {
                    let mut picked = std::collections::BTreeSet::new();
                    while picked.len() < per_param {
                        picked.insert(rng.gen_range(0..numel));
                    }
                    picked.into_iter().collect()
                }
            }
            (Some(_), CoordSample::All) => unreachable!(),
        };
        for coord in coords {
            let original = store.at(idx).data()[coord];
            store.at_mut(idx).data_mut()[coord] = original + eps;
            let plus = loss_fn(store)?;
            store.at_mut(idx).data_mut()[coord] = original - eps;
            let minus = loss_fn(store)?;
            store.at_mut(idx).data_mut()[coord] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numcore(format!(
                    "grad_check: non-finite loss while probing '{}'",
                    store.name_at(idx)
                )));
            }
            let fd = (plus - minus) / (2.0 * eps);
            let an = analytic.at(idx).data()[coord];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}
