use alloc::vec::Vec;

use rand::Rng as _;

use super::Mode;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug)]
pub struct ReluCache {
    active: Vec<bool>,
}

/// `max(x, 0)`; the subgradient at exactly 0 is 0.
pub fn relu(x: &Matrix) -> (Matrix, ReluCache) {
    let active: Vec<bool> = x.as_slice().iter().map(|&v| v > 0.0).collect();
    (
        x.map(|v| if v > 0.0 { v } else { 0.0 }),
        ReluCache { active },
    )
}

pub fn relu_backward(cache: ReluCache, dy: &Matrix) -> Matrix {
    let mut dx = dy.clone();
    for (d, &a) in dx.as_mut_slice().iter_mut().zip(&cache.active) {
        if !a {
            *d = 0.0;
        }
    }
    dx
}

/// Inverted dropout: survivors are scaled by `1/(1 − rate)` at train time so
/// eval mode is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    rate: f64,
}

#[derive(Debug)]
pub struct DropoutCache {
    /// Per-entry multiplier (0 or `1/(1 − rate)`); `None` when identity.
    scale: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::OutOfRange {
                what: "dropout rate",
                value: rate,
            });
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn forward(&self, x: &Matrix, mode: Mode, rng: &mut Rng) -> (Matrix, DropoutCache) {
        if mode == Mode::Eval || self.rate == 0.0 {
            return (x.clone(), DropoutCache { scale: None });
        }
        let keep = 1.0 / (1.0 - self.rate);
        let scale: Vec<f64> = (0..x.as_slice().len())
            .map(|_| {
                if rng.random::<f64>() < self.rate {
                    0.0
                } else {
                    keep
                }
            })
            .collect();
        let mut y = x.clone();
        for (v, s) in y.as_mut_slice().iter_mut().zip(&scale) {
            *v *= s;
        }
        (y, DropoutCache { scale: Some(scale) })
    }

    pub fn backward(&self, cache: DropoutCache, dy: &Matrix) -> Matrix {
        let mut dx = dy.clone();
        if let Some(scale) = cache.scale {
            for (d, s) in dx.as_mut_slice().iter_mut().zip(&scale) {
                *d *= s;
            }
        }
        dx
    }
}
