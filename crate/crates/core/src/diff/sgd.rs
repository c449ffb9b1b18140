use alloc::string::String;

use super::params::ParamStore;
use crate::error::{Error, Result};

/// Plain SGD without momentum: `θ ← θ − lr·(∇θ + weight_decay·θ)`, then the
/// gradients are zeroed. Fails without updating anything if any gradient is
/// non-finite.
pub fn sgd_step(store: &mut ParamStore, lr: f64, weight_decay: f64) -> Result<()> {
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::OutOfRange {
            what: "learning rate",
            value: lr,
        });
    }
    if !(weight_decay >= 0.0) {
        return Err(Error::OutOfRange {
            what: "weight decay",
            value: weight_decay,
        });
    }
    if let Some(p) = store.iter().find(|p| !p.grad.is_finite()) {
        return Err(Error::NonFiniteGradient {
            param: String::from(p.name.as_str()),
        });
    }
    for p in store.iter_mut() {
        for (v, g) in p.value.as_mut_slice().iter_mut().zip(p.grad.as_slice()) {
            *v -= lr * (g + weight_decay * *v);
        }
    }
    store.zero_grad();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn scalar(v: f64) -> (ParamStore, super::super::params::ParamId) {
        let mut s = ParamStore::new();
        let id = s.add("theta", Matrix::filled(1, 1, v));
        (s, id)
    }

    #[test]
    fn single_step() {
        let (mut s, id) = scalar(1.0);
        s.grad_mut(id).fill(2.0);
        sgd_step(&mut s, 0.1, 0.0).unwrap();
        assert!((s.value(id)[(0, 0)] - 0.8).abs() < 1e-15);
        assert_eq!(s.grad(id)[(0, 0)], 0.0);
        sgd_step(&mut s, 0.1, 0.0).unwrap();
        assert!((s.value(id)[(0, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_shrinks() {
        let (mut s, id) = scalar(2.0);
        sgd_step(&mut s, 0.5, 0.1).unwrap();
        assert!((s.value(id)[(0, 0)] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn quadratic_bowl_contracts() {
        let (mut s, id) = scalar(1.0);
        for _ in 0..50 {
            let t = s.value(id)[(0, 0)];
            s.grad_mut(id).fill(2.0 * t);
            sgd_step(&mut s, 0.1, 0.0).unwrap();
        }
        let t = s.value(id)[(0, 0)];
        assert!(t.abs() < 1e-4);
        assert!((t - 0.8f64.powi(50)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_named() {
        let (mut s, id) = scalar(1.0);
        s.grad_mut(id).fill(f64::NAN);
        assert_eq!(
            sgd_step(&mut s, 0.1, 0.0).unwrap_err(),
            Error::NonFiniteGradient {
                param: "theta".into()
            }
        );
        assert_eq!(s.value(id)[(0, 0)], 1.0);
    }
}
