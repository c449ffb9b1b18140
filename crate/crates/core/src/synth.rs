//! Small synthetic datasets for sanity checks and demos.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{Dataset, Targets};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::rng::rng_from_seed;

fn normal(rng: &mut crate::rng::Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Two classes separated by a random hyperplane through the origin, with a
/// gap of `margin` between them: Gaussian points are pushed `margin/2` away
/// from the plane along its normal.
pub fn linearly_separable(n: usize, d: usize, margin: f64, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    let mut w: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
    let norm = libm::sqrt(w.iter().map(|v| v * v).sum());
    w.iter_mut().for_each(|v| *v /= norm);
    let mut x = Matrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row_mut(i);
        row.iter_mut().for_each(|v| *v = normal(&mut rng));
        let s: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        let side = if s >= 0.0 { 1.0 } else { -1.0 };
        for (v, wj) in row.iter_mut().zip(&w) {
            *v += side * margin / 2.0 * wj;
        }
        y.push(usize::from(side > 0.0));
    }
    Dataset::from_numeric(x, Targets::Classes(y), Some(2))
}

/// Margin of a labelled two-class set along unit normal `w`: the smallest gap
/// between the projections of the two classes.
pub fn projection_gap(x: &Matrix, classes: &[usize], w: &[f64]) -> f64 {
    let proj = |i: usize| x.row(i).iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let (mut lo1, mut hi0) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &c) in classes.iter().enumerate() {
        let p = proj(i);
        if c == 1 {
            lo1 = lo1.min(p);
        } else {
            hi0 = hi0.max(p);
        }
    }
    lo1 - hi0
}

/// Two interleaving half circles with Gaussian noise of std `noise`, plus
/// `extra_dims` pure-noise columns.
pub fn two_moons(n: usize, noise: f64, extra_dims: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    let d = 2 + extra_dims;
    let mut x = Matrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        let t = rng.random_range(0.0..PI);
        let (a, b) = if c == 0 {
            (libm::cos(t), libm::sin(t))
        } else {
            (1.0 - libm::cos(t), 0.5 - libm::sin(t))
        };
        let row = x.row_mut(i);
        row[0] = a + noise * normal(&mut rng);
        row[1] = b + noise * normal(&mut rng);
        for v in &mut row[2..] {
            *v = normal(&mut rng);
        }
        y.push(c);
    }
    Dataset::from_numeric(x, Targets::Classes(y), Some(2))
}

/// `y = sin(3x) + noise·ε` with `x ~ uniform(−2, 2)`.
pub fn sine_regression(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    let mut x = Matrix::zeros(n, 1);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let v = rng.random_range(-2.0..2.0);
        x[(i, 0)] = v;
        y.push(libm::sin(3.0 * v) + noise * normal(&mut rng));
    }
    Dataset::from_numeric(x, Targets::Values(y), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_has_requested_margin() {
        let d = linearly_separable(600, 8, 1.0, 0).unwrap();
        assert_eq!(d.len(), 600);
        assert_eq!(d.n_numerical(), 8);
        let cls = d.targets().classes().unwrap();
        let ones = cls.iter().filter(|&&c| c == 1).count();
        assert!(ones > 200 && ones < 400);
        // regenerate the normal with the same stream
        let mut rng = rng_from_seed(0);
        let mut w: Vec<f64> = (0..8).map(|_| normal(&mut rng)).collect();
        let norm = libm::sqrt(w.iter().map(|v| v * v).sum());
        w.iter_mut().for_each(|v| *v /= norm);
        assert!(projection_gap(d.numerical(), cls, &w) >= 1.0);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            two_moons(100, 0.2, 1, 3).unwrap(),
            two_moons(100, 0.2, 1, 3).unwrap()
        );
        assert_eq!(
            sine_regression(50, 0.1, 3).unwrap(),
            sine_regression(50, 0.1, 3).unwrap()
        );
        assert_eq!(two_moons(100, 0.2, 1, 3).unwrap().n_numerical(), 3);
    }
}
