//! Central finite-difference gradient checking.

use alloc::string::String;

use super::params::ParamStore;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst `|g_a − g_n| / max(1, |g_a|, |g_n|)` over all checked coordinates.
    pub max_rel_error: f64,
    /// Parameter (or `"input"`) and flat index where the worst error occurred.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

impl Default for GradCheckReport {
    fn default() -> Self {
        Self::new()
    }
}

impl GradCheckReport {
    fn new() -> Self {
        Self {
            max_rel_error: 0.0,
            worst: None,
            checked: 0,
        }
    }

    /// A report that fails any tolerance.
    pub fn failed() -> Self {
        Self {
            max_rel_error: f64::INFINITY,
            ..Self::new()
        }
    }

    fn record(&mut self, name: &str, index: usize, analytic: f64, numeric: f64) {
        let err = relative_error(analytic, numeric);
        self.checked += 1;
        // NaN compares false; force it to register as the worst case
        if err > self.max_rel_error || err.is_nan() {
            self.max_rel_error = if err.is_nan() { f64::INFINITY } else { err };
            self.worst = Some((String::from(name), index));
        }
    }

    pub fn merge(mut self, other: GradCheckReport) -> Self {
        if other.max_rel_error > self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst = other.worst;
        }
        self.checked += other.checked;
        self
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = 1f64.max(libm::fabs(analytic)).max(libm::fabs(numeric));
    libm::fabs(analytic - numeric) / denom
}

/// Compares the gradients currently held in `store` against central
/// differences of `loss` with step `h`. `loss` must be a pure function of the
/// parameter values; the grad buffers are left untouched.
pub fn check_param_grads<F>(store: &mut ParamStore, h: f64, mut loss: F) -> GradCheckReport
where
    F: FnMut(&ParamStore) -> f64,
{
    let mut report = GradCheckReport::new();
    let ids: alloc::vec::Vec<_> = store.ids().collect();
    for id in ids {
        let n = store.value(id).as_slice().len();
        for k in 0..n {
            let orig = store.value(id).as_slice()[k];
            store.value_mut(id).as_mut_slice()[k] = orig + h;
            let plus = loss(store);
            store.value_mut(id).as_mut_slice()[k] = orig - h;
            let minus = loss(store);
            store.value_mut(id).as_mut_slice()[k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = store.grad(id).as_slice()[k];
            let name = String::from(store.name(id));
            report.record(&name, k, analytic, numeric);
        }
    }
    report
}

/// Same as [`check_param_grads`] for the gradient with respect to an input.
pub fn check_input_grad<F>(x: &Matrix, analytic: &Matrix, h: f64, mut f: F) -> GradCheckReport
where
    F: FnMut(&Matrix) -> f64,
{
    assert_eq!(x.shape(), analytic.shape());
    let mut report = GradCheckReport::new();
    let mut probe = x.clone();
    for k in 0..x.as_slice().len() {
        let orig = probe.as_slice()[k];
        probe.as_mut_slice()[k] = orig + h;
        let plus = f(&probe);
        probe.as_mut_slice()[k] = orig - h;
        let minus = f(&probe);
        probe.as_mut_slice()[k] = orig;
        report.record(
            "input",
            k,
            analytic.as_slice()[k],
            (plus - minus) / (2.0 * h),
        );
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor_is_one() {
        assert_eq!(relative_error(1e-9, 0.0), 1e-9);
        assert_eq!(relative_error(200.0, 100.0), 0.5);
    }

    #[test]
    fn quadratic_input_gradient() {
        let x = Matrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]);
        let g = x.map(|v| 2.0 * v);
        let f = |m: &Matrix| m.as_slice().iter().map(|v| v * v).sum::<f64>();
        assert!(check_input_grad(&x, &g, 1e-5, f).max_rel_error < 1e-8);
        let wrong = x.map(|v| -2.0 * v);
        assert!(check_input_grad(&x, &wrong, 1e-5, f).max_rel_error > 0.1);
    }
}
