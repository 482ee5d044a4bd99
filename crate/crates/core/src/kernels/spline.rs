use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::solve_tridiagonal_constant;

/// Natural cubic spline through uniformly spaced samples, held constant past
/// the last sample.
#[derive(Debug, Clone)]
pub(crate) struct UniformSpline {
    step: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl UniformSpline {
    pub(crate) fn new(step: f64, values: &[f64]) -> Self {
        let n = values.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            let rhs: Vec<f64> =
                (1..n - 1).map(|i| 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (step * step)).collect();
            // diagonally dominant, the solve cannot fail
            let inner = solve_tridiagonal_constant(1.0, 4.0, 1.0, &rhs).expect("spline system");
            second[1..n - 1].copy_from_slice(&inner);
        }
        UniformSpline { step, values: values.to_vec(), second }
    }

    pub(crate) fn end(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// Cell index and local coordinate; `None` past the end.
    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        if t >= self.end() {
            return None;
        }
        let x = t / self.step;
        let i = (x as usize).min(self.values.len() - 2);
        Some((i, x - i as f64))
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        let Some((i, s)) = self.locate(t) else {
            return *self.values.last().unwrap();
        };
        let h2 = self.step * self.step;
        let (y0, y1, m0, m1) = (self.values[i], self.values[i + 1], self.second[i], self.second[i + 1]);
        let a = 1.0 - s;
        a * y0 + s * y1 + h2 / 6.0 * ((a * a * a - a) * m0 + (s * s * s - s) * m1)
    }

    pub(crate) fn derivative(&self, t: f64) -> f64 {
        let Some((i, s)) = self.locate(t) else {
            return 0.0;
        };
        let h = self.step;
        let (y0, y1, m0, m1) = (self.values[i], self.values[i + 1], self.second[i], self.second[i + 1]);
        let a = 1.0 - s;
        (y1 - y0) / h + h / 6.0 * (-(3.0 * a * a - 1.0) * m0 + (3.0 * s * s - 1.0) * m1)
    }

    pub(crate) fn second_derivative(&self, t: f64) -> f64 {
        let Some((i, s)) = self.locate(t) else {
            return 0.0;
        };
        (1.0 - s) * self.second[i] + s * self.second[i + 1]
    }
}
