//! Nonlinear source `g` with antiderivative `G(x) = ∫_0^x g`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::kernels::MemoryKernel;
use crate::quad;

/// Floor reported by [`estimate_c0`] when `G ≤ 0` everywhere.
pub const C0_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearityFamily {
    Power,
    Sine,
    Zero,
    Custom,
}

impl NonlinearityFamily {
    pub fn name(self) -> &'static str {
        match self {
            NonlinearityFamily::Power => "power",
            NonlinearityFamily::Sine => "sine",
            NonlinearityFamily::Zero => "zero",
            NonlinearityFamily::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "power" => Some(NonlinearityFamily::Power),
            "sine" => Some(NonlinearityFamily::Sine),
            "zero" => Some(NonlinearityFamily::Zero),
            "custom" => Some(NonlinearityFamily::Custom),
            _ => None,
        }
    }
}

impl fmt::Display for NonlinearityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

type Source = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

// Cumulative ∫_0^{x_k} g on a uniform table; G(x) adds one local panel.
struct PrimitiveTable {
    step: f64,
    // index 0 is x = -half_width
    values: Vec<f64>,
    half: usize,
}

const TABLE_STEP: f64 = 0.25;
const TABLE_HALF: usize = 256;

impl PrimitiveTable {
    fn build(g: &Source) -> Self {
        let mut values = alloc::vec![0.0; 2 * TABLE_HALF + 1];
        let half = TABLE_HALF;
        for k in 1..=half {
            let x0 = (k - 1) as f64 * TABLE_STEP;
            let x1 = k as f64 * TABLE_STEP;
            values[half + k] = values[half + k - 1] + quad::integrate(|x| g(x), x0, x1, 1e-14).0;
            values[half - k] = values[half - k + 1] - quad::integrate(|x| g(x), -x1, -x0, 1e-14).0;
        }
        PrimitiveTable { step: TABLE_STEP, values, half }
    }

    fn eval(&self, g: &Source, x: f64) -> f64 {
        let k = libm::round(x / self.step);
        let k = k.clamp(-(self.half as f64), self.half as f64);
        let xk = k * self.step;
        let base = self.values[(self.half as i64 + k as i64) as usize];
        if x == xk {
            return base;
        }
        base + quad::integrate(|s| g(s), xk, x, 1e-14).0
    }
}

#[derive(Clone)]
enum Repr {
    Power { c: f64, p: f64 },
    Sine { c: f64 },
    Zero,
    Custom { g: Source, table: Arc<PrimitiveTable> },
}

/// A nonlinear source term with growth metadata.
#[derive(Clone)]
pub struct Nonlinearity {
    repr: Repr,
    dim: usize,
    alpha: f64,
    growth_c: f64,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("family", &self.family())
            .field("params", &self.params())
            .field("dim", &self.dim)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl Nonlinearity {
    /// Builds a named family. Params: `power = [c, p]`, `sine = [c]`, `zero = []`.
    pub fn new(family: NonlinearityFamily, params: &[f64], dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::ParameterViolation(format!("spatial dimension {dim} not supported")));
        }
        let want = match family {
            NonlinearityFamily::Power => 2,
            NonlinearityFamily::Sine => 1,
            NonlinearityFamily::Zero => 0,
            NonlinearityFamily::Custom => {
                return Err(Error::ParameterViolation(
                    "custom nonlinearities are built from a function, not parameters".into(),
                ))
            }
        };
        if params.len() != want {
            return Err(Error::ParameterViolation(format!(
                "{family} nonlinearity takes {want} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::ParameterViolation("nonlinearity parameters must be finite".into()));
        }
        match family {
            NonlinearityFamily::Power => {
                let (c, p) = (params[0], params[1]);
                if !(c < 0.0) {
                    return Err(Error::ParameterViolation(format!("power nonlinearity needs c < 0, got c = {c}")));
                }
                if !(p >= 0.0) {
                    return Err(Error::ParameterViolation(format!("power nonlinearity needs p >= 0, got p = {p}")));
                }
                if p * (dim as f64 - 2.0) > 2.0 {
                    return Err(Error::ParameterViolation(format!(
                        "power nonlinearity needs p(N-2) <= 2, got p = {p} with N = {dim}"
                    )));
                }
                Ok(Nonlinearity { repr: Repr::Power { c, p }, dim, alpha: p, growth_c: (p + 1.0) * c.abs() })
            }
            NonlinearityFamily::Sine => {
                let c = params[0];
                Ok(Nonlinearity { repr: Repr::Sine { c }, dim, alpha: 0.0, growth_c: c.abs() })
            }
            _ => Ok(Self::zero(dim)),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Nonlinearity { repr: Repr::Zero, dim, alpha: 0.0, growth_c: 0.0 }
    }

    pub fn sine(c: f64, dim: usize) -> Result<Self> {
        Self::new(NonlinearityFamily::Sine, &[c], dim)
    }

    pub fn power(c: f64, p: f64, dim: usize) -> Result<Self> {
        Self::new(NonlinearityFamily::Power, &[c, p], dim)
    }

    /// A user-supplied `g` with declared growth exponent and constant.
    ///
    /// `G` is tabulated once on `[-64, 64]` by adaptive quadrature; values
    /// outside the table integrate from its end.
    pub fn custom<F>(g: F, alpha: f64, growth_c: f64, dim: usize) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(alpha >= 0.0) || !(growth_c >= 0.0) {
            return Err(Error::ParameterViolation("custom nonlinearity needs alpha >= 0 and C >= 0".into()));
        }
        let g0 = g(0.0);
        if g0 != 0.0 {
            return Err(Error::ParameterViolation(format!("nonlinearity needs g(0) = 0, got {g0}")));
        }
        let g: Source = Arc::new(g);
        let table = Arc::new(PrimitiveTable::build(&g));
        Ok(Nonlinearity { repr: Repr::Custom { g, table }, dim, alpha, growth_c })
    }

    pub fn family(&self) -> NonlinearityFamily {
        match self.repr {
            Repr::Power { .. } => NonlinearityFamily::Power,
            Repr::Sine { .. } => NonlinearityFamily::Sine,
            Repr::Zero => NonlinearityFamily::Zero,
            Repr::Custom { .. } => NonlinearityFamily::Custom,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self.repr {
            Repr::Power { c, p } => alloc::vec![c, p],
            Repr::Sine { c } => alloc::vec![c],
            Repr::Zero | Repr::Custom { .. } => Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Growth exponent `α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Claimed constant in `|g(x)-g(y)| ≤ C(1+|x|^α+|y|^α)|x-y|`.
    pub fn growth_constant(&self) -> f64 {
        self.growth_c
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    pub fn g(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Power { c, p } => c * libm::pow(x.abs(), *p) * x,
            Repr::Sine { c } => c * libm::sin(x),
            Repr::Zero => 0.0,
            Repr::Custom { g, .. } => g(x),
        }
    }

    #[allow(non_snake_case)]
    pub fn G(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Power { c, p } => c * libm::pow(x.abs(), p + 2.0) / (p + 2.0),
            Repr::Sine { c } => {
                // 1 - cos x without cancellation
                let s = libm::sin(0.5 * x);
                2.0 * c * s * s
            }
            Repr::Zero => 0.0,
            Repr::Custom { g, table } => table.eval(g, x),
        }
    }

    /// Applies `g` pointwise.
    pub fn apply(&self, field: &[f64], out: &mut [f64]) {
        if self.is_zero() {
            out.fill(0.0);
            return;
        }
        for (o, &u) in out.iter_mut().zip(field) {
            *o = self.g(u);
        }
    }
}

/// Symmetric grid for [`estimate_c0`]: log-dense on `[1e-6, 1]`, uniform on `[1, range]`.
pub fn c0_grid(range: f64) -> Vec<f64> {
    let mut pos: Vec<f64> = crate::kernels::log_grid(1e-6, 1.0, 400);
    let far = 400;
    for i in 1..=far {
        pos.push(1.0 + (range - 1.0).max(0.0) * i as f64 / far as f64);
    }
    let mut grid: Vec<f64> = pos.iter().rev().map(|t| -t).collect();
    grid.extend(pos);
    grid
}

/// `max(sup G(t)/t², ε)` over a grid that excludes the origin.
pub fn estimate_c0(nl: &Nonlinearity, t_grid: &[f64]) -> f64 {
    let sup = t_grid.iter().filter(|&&t| t != 0.0).map(|&t| nl.G(t) / (t * t)).fold(f64::NEG_INFINITY, f64::max);
    sup.max(C0_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub alpha: f64,
    pub constant: f64,
    pub max_ratio: f64,
    pub passed: bool,
}

/// Samples random pairs in `[-range, range]²` and measures
/// `|g(x)-g(y)| / ((1+|x|^α+|y|^α)|x-y|)`.
pub fn check_growth(nl: &Nonlinearity, constant: f64, samples: usize, range: f64, seed: u64) -> GrowthReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = nl.alpha();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let x: f64 = rng.random_range(-range..=range);
        let y: f64 = rng.random_range(-range..=range);
        if x == y {
            continue;
        }
        let denom = (1.0 + libm::pow(x.abs(), alpha) + libm::pow(y.abs(), alpha)) * (x - y).abs();
        max_ratio = max_ratio.max((nl.g(x) - nl.g(y)).abs() / denom);
    }
    GrowthReport { alpha, constant, max_ratio, passed: max_ratio <= constant }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallnessReport {
    pub c0: f64,
    pub threshold: f64,
    pub margin: f64,
    /// `(λ(1-a(0)) - 2C₀)/λ`; the energy dominates `½‖u_t‖² + C/2‖∇u‖²`.
    pub coercivity_c: f64,
    pub passed: bool,
}

/// Tests `C₀ < λ(1-a(0))/2`.
pub fn check_smallness(nl: &Nonlinearity, kernel: &MemoryKernel, lambda: f64) -> SmallnessReport {
    let c0 = estimate_c0(nl, &c0_grid(10.0));
    smallness_with_c0(c0, kernel.a(0.0), lambda)
}

pub(crate) fn smallness_with_c0(c0: f64, a0: f64, lambda: f64) -> SmallnessReport {
    let threshold = lambda * (1.0 - a0) / 2.0;
    let margin = threshold - c0;
    let coercivity_c = (lambda * (1.0 - a0) - 2.0 * c0) / lambda;
    SmallnessReport { c0, threshold, margin, coercivity_c, passed: c0 < threshold }
}

#[derive(Debug, Clone, PartialEq)]
pub struct H1LipschitzReport {
    pub samples: usize,
    /// Largest `‖g(u)‖² / ‖∇u‖²` over the sampled fields.
    pub max_ratio: f64,
    pub finite: bool,
}

/// Random smooth Dirichlet fields with `‖∇u‖ ≤ 1`; measures `‖g(u)‖²/‖∇u‖²`.
pub fn check_h1_lipschitz(nl: &Nonlinearity, grid: &Grid, samples: usize, seed: u64) -> H1LipschitzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut gu = alloc::vec![0.0; grid.interior_len()];
    for _ in 0..samples {
        let mut u = grid.random_smooth_field(&mut rng, 8);
        let grad = grid.gradient_norm_sq(&u).unwrap_or(0.0);
        if grad == 0.0 {
            continue;
        }
        let scale: f64 = rng.random_range(0.05..=1.0) / libm::sqrt(grad);
        for v in u.iter_mut() {
            *v *= scale;
        }
        nl.apply(&u, &mut gu);
        let ratio = grid.norm_sq(&gu) / grid.gradient_norm_sq(&u).unwrap_or(f64::NAN);
        max_ratio = max_ratio.max(ratio);
    }
    H1LipschitzReport { samples, max_ratio, finite: max_ratio.is_finite() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_values() {
        let s = Nonlinearity::sine(1.0, 1).unwrap();
        assert_eq!(s.g(0.0), 0.0);
        assert!((s.G(1.3) - (1.0 - libm::cos(1.3))).abs() < 1e-15);
        assert_eq!(s.alpha(), 0.0);
    }

    #[test]
    fn cubic_values() {
        let p = Nonlinearity::power(-1.0, 2.0, 1).unwrap();
        assert!((p.g(1.5) + 1.5f64 * 1.5 * 1.5).abs() < 1e-14);
        assert!((p.g(-2.0) - 8.0).abs() < 1e-14);
        assert!((p.G(2.0) + 4.0).abs() < 1e-14);
        assert_eq!(p.alpha(), 2.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let e = Nonlinearity::power(1.0, 2.0, 1).unwrap_err();
        assert!(matches!(e, Error::ParameterViolation(ref m) if m.contains("c < 0")));
        let e = Nonlinearity::power(-1.0, 3.0, 3).unwrap_err();
        assert!(matches!(e, Error::ParameterViolation(ref m) if m.contains("p(N-2)")));
        assert!(Nonlinearity::power(-1.0, 2.0, 3).is_ok());
        assert!(Nonlinearity::custom(|x| x + 1.0, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn c0_estimates() {
        let grid = c0_grid(10.0);
        let s = Nonlinearity::sine(1.0, 1).unwrap();
        assert!((estimate_c0(&s, &grid) - 0.5).abs() < 1e-10);
        let p = Nonlinearity::power(-1.0, 2.0, 1).unwrap();
        assert_eq!(estimate_c0(&p, &grid), C0_FLOOR);
        assert_eq!(estimate_c0(&Nonlinearity::zero(1), &grid), C0_FLOOR);
    }

    #[test]
    fn growth_checks() {
        let s = Nonlinearity::sine(1.0, 1).unwrap();
        let r = check_growth(&s, 1.0, 10_000, 10.0, 1);
        assert!(r.passed && r.max_ratio <= 0.5);
        let p = Nonlinearity::power(-1.0, 2.0, 1).unwrap();
        assert!(check_growth(&p, 3.0, 10_000, 10.0, 2).passed);
        let z = check_growth(&Nonlinearity::zero(1), 1e-3, 100, 10.0, 3);
        assert_eq!(z.max_ratio, 0.0);
        assert!(z.passed);
    }

    #[test]
    fn smallness() {
        let k = MemoryKernel::poly_exp(2.0, 0.0, 1.0).unwrap();
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        let r = check_smallness(&Nonlinearity::sine(1.0, 1).unwrap(), &k, pi2);
        assert!(r.passed);
        assert!((r.threshold - pi2 * 0.25).abs() < 1e-12);
        assert!((r.coercivity_c - (pi2 * 0.5 - 1.0) / pi2).abs() < 1e-9);
        assert!((r.coercivity_c - 0.3987).abs() < 1e-4);
        assert!(check_smallness(&Nonlinearity::power(-1.0, 2.0, 1).unwrap(), &k, pi2).passed);
        let r = check_smallness(&Nonlinearity::sine(10.0, 1).unwrap(), &k, pi2);
        assert!(!r.passed);
        assert!((r.c0 - 5.0).abs() < 1e-8);
    }

    #[test]
    fn custom_primitive_matches_closed_form() {
        let c = Nonlinearity::custom(|x| -x * x * x, 2.0, 3.0, 1).unwrap();
        for &x in &[0.0, 0.3, -1.7, 5.05, -63.9, 70.0] {
            let exact = -x * x * x * x / 4.0;
            assert!((c.G(x) - exact).abs() <= 1e-10 * (1.0 + exact.abs()), "x={x}");
        }
    }
}
