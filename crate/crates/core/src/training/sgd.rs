use crate::ndmath::{ParamId, ParamStore};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Global gradient norm over the updated parameters, before clipping.
    pub grad_norm: f64,
    pub clipped: bool,
}

/// One plain SGD update of the parameters in `ids`.
///
/// Gradients are rescaled to `clip_norm` when their global norm exceeds it
/// (`clip_norm == 0` disables clipping), then `θ ← θ − lr·g`. Every gradient
/// buffer of `store` is zeroed afterwards, including on error.
pub fn sgd_step(store: &mut ParamStore, ids: &[ParamId], lr: f64, clip_norm: f64) -> Result<StepStats> {
    let sq: f64 = ids
        .iter()
        .filter_map(|&id| store.get(id).grad())
        .flat_map(|g| g.iter())
        .map(|g| g * g)
        .sum();
    let grad_norm = libm::sqrt(sq);
    if !grad_norm.is_finite() {
        store.zero_grad();
        return Err(Error::NonFiniteGradient { norm: grad_norm });
    }
    let clipped = clip_norm > 0.0 && grad_norm > clip_norm;
    let step = if clipped { lr * (clip_norm / grad_norm) } else { lr };
    for &id in ids {
        store.get_mut(id).descend(step);
    }
    store.zero_grad();
    Ok(StepStats { grad_norm, clipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Tensor;
    use alloc::vec;
    use alloc::vec::Vec;

    fn store_with(values: &[f64], grads: &[f64]) -> (ParamStore, Vec<ParamId>) {
        let mut store = ParamStore::new();
        let id = store.insert("p", Tensor::vector(values.to_vec()).unwrap());
        store.get_mut(id).accumulate_grad(grads);
        (store, vec![id])
    }

    #[test]
    fn scalar_update() {
        let (mut store, ids) = store_with(&[1.0], &[2.0]);
        let stats = sgd_step(&mut store, &ids, 0.1, 0.0).unwrap();
        assert_eq!(store.get(ids[0]).data(), &[0.8]);
        assert_eq!(
            stats,
            StepStats {
                grad_norm: 2.0,
                clipped: false
            }
        );
        assert!(store.get(ids[0]).grad().unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn zero_rate_leaves_parameters() {
        let (mut store, ids) = store_with(&[0.3, -7.25], &[100.0, -3.0]);
        sgd_step(&mut store, &ids, 0.0, 5.0).unwrap();
        assert_eq!(store.get(ids[0]).data(), &[0.3, -7.25]);
    }

    #[test]
    fn clipping_halves_a_norm_ten_gradient() {
        // g = (6, 8), |g| = 10, clip 5 → update lr * g / 2
        let (mut store, ids) = store_with(&[0.0, 0.0], &[6.0, 8.0]);
        let stats = sgd_step(&mut store, &ids, 0.5, 5.0).unwrap();
        assert!(stats.clipped);
        assert_eq!(store.get(ids[0]).data(), &[-1.5, -2.0]);
    }

    #[test]
    fn clipping_below_threshold_is_bit_identical() {
        let (mut a, ids) = store_with(&[0.1, 0.2], &[0.3, 0.4]);
        let (mut b, _) = store_with(&[0.1, 0.2], &[0.3, 0.4]);
        sgd_step(&mut a, &ids, 0.001, 5.0).unwrap();
        sgd_step(&mut b, &ids, 0.001, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let (mut store, ids) = store_with(&[1.0], &[f64::NAN]);
        assert!(matches!(
            sgd_step(&mut store, &ids, 0.1, 5.0),
            Err(Error::NonFiniteGradient { .. })
        ));
        assert_eq!(store.get(ids[0]).data(), &[1.0]);
        assert_eq!(store.grad_norm(), 0.0);
    }
}
