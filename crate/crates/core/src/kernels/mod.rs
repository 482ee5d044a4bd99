//! Memory kernels `a(t)` and the machinery built on them: convolution
//! quadrature, second-kind Volterra solves and positive-definiteness
//! certificates.

mod pd;
mod quadrature;
mod spline;
mod volterra;

pub use pd::{
    certify_positive_definite, certify_strongly_pd, certify_strongly_pd_fn, PdCertificate, PdVerdict, TOL_PD_RELATIVE,
};
pub use quadrature::{convolve, convolve_with, QuadratureWeights};
pub use volterra::{volterra_solve, volterra_solve_with};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::quad;
use spline::UniformSpline;

/// The built-in kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `a(t) = a0 ∫_t^∞ e^{-αs} s^{-β} ds`, params `[a0, α, β]`.
    ExpIntegral,
    /// `a(t) = ∫_t^∞ (a0 s + a1) e^{-αs} ds`, params `[α, a0, a1]`.
    PolyExp,
    /// `a(t) = k ∫_t^∞ (1+s)^{-α} ds`, params `[k, α]`.
    PowerLaw,
    /// `a ≡ 0`, no params.
    Zero,
    /// Uniformly sampled `a` values, params `[dt, a(0), a(dt), ...]`,
    /// interpolated by a natural cubic spline.
    CustomTable,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::ExpIntegral => "exp_integral",
            KernelFamily::PolyExp => "poly_exp",
            KernelFamily::PowerLaw => "power_law",
            KernelFamily::Zero => "zero",
            KernelFamily::CustomTable => "custom_table",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp_integral" => KernelFamily::ExpIntegral,
            "poly_exp" => KernelFamily::PolyExp,
            "power_law" => KernelFamily::PowerLaw,
            "zero" => KernelFamily::Zero,
            "custom_table" => KernelFamily::CustomTable,
            _ => return None,
        })
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which derivative of `a` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    A,
    ADot,
    ADdot,
}

/// Hypothesis profiles a kernel claims to satisfy.
///
/// `positive_definite`: positive definite, `a(0) < 1`, `a, ȧ ∈ L¹`.
/// `dissipative`: additionally `a ≥ 0`, `ȧ ≤ 0`, `ȧ(0) < 0`, `ä ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Assumptions {
    pub positive_definite: bool,
    pub dissipative: bool,
}

#[derive(Debug, Clone)]
enum Repr {
    ExpIntegral { a0: f64, alpha: f64, beta: f64, total: f64 },
    PolyExp { alpha: f64, a0: f64, a1: f64 },
    PowerLaw { k: f64, alpha: f64 },
    Zero,
    Table(UniformSpline),
}

/// An immutable memory kernel with closed-form (or quadrature) evaluators.
#[derive(Debug, Clone)]
pub struct MemoryKernel {
    family: KernelFamily,
    params: Vec<f64>,
    repr: Repr,
    assumptions: Assumptions,
}

fn violation(msg: impl Into<String>) -> Error {
    Error::ParameterViolation(msg.into())
}

fn param(params: &[f64], i: usize, family: KernelFamily, what: &str) -> Result<f64> {
    let v = *params.get(i).ok_or_else(|| violation(format!("{family} requires parameter {what} at position {i}")))?;
    if !v.is_finite() {
        return Err(violation(format!("{family}: parameter {what} must be finite")));
    }
    Ok(v)
}

impl MemoryKernel {
    /// Builds and validates a kernel of the given family.
    pub fn new(family: KernelFamily, params: &[f64]) -> Result<Self> {
        let expected = match family {
            KernelFamily::ExpIntegral => Some(3),
            KernelFamily::PolyExp => Some(3),
            KernelFamily::PowerLaw => Some(2),
            KernelFamily::Zero => Some(0),
            KernelFamily::CustomTable => None,
        };
        if let Some(n) = expected {
            if params.len() != n {
                return Err(violation(format!("{family} takes {n} parameters, got {}", params.len())));
            }
        }
        let (repr, assumptions) = match family {
            KernelFamily::ExpIntegral => {
                let a0 = param(params, 0, family, "a0")?;
                let alpha = param(params, 1, family, "alpha")?;
                let beta = param(params, 2, family, "beta")?;
                if alpha <= 0.0 {
                    return Err(violation("exp_integral: alpha > 0 violated"));
                }
                if !(0.0..1.0).contains(&beta) {
                    return Err(violation("exp_integral: 0 <= beta < 1 violated"));
                }
                if a0 < 0.0 {
                    return Err(violation("exp_integral: a0 >= 0 violated"));
                }
                let total = libm::tgamma(1.0 - beta) * libm::pow(alpha, beta - 1.0);
                (
                    Repr::ExpIntegral { a0, alpha, beta, total },
                    Assumptions { positive_definite: true, dissipative: beta == 0.0 && a0 > 0.0 },
                )
            }
            KernelFamily::PolyExp => {
                let alpha = param(params, 0, family, "alpha")?;
                let a0 = param(params, 1, family, "a0")?;
                let a1 = param(params, 2, family, "a1")?;
                if alpha <= 0.0 {
                    return Err(violation("poly_exp: alpha > 0 violated"));
                }
                if a0 < 0.0 || a1 < 0.0 {
                    return Err(violation("poly_exp: a0 >= 0 and a1 >= 0 violated"));
                }
                if (a0 + alpha * a1) / (alpha * alpha) >= 1.0 {
                    return Err(violation("poly_exp: (a0 + alpha a1) / alpha^2 < 1 violated (a(0) < 1)"));
                }
                if alpha * a1 - a0 < 0.0 {
                    return Err(violation("poly_exp: alpha a1 - a0 >= 0 violated"));
                }
                (Repr::PolyExp { alpha, a0, a1 }, Assumptions { positive_definite: true, dissipative: a1 > 0.0 })
            }
            KernelFamily::PowerLaw => {
                let k = param(params, 0, family, "k")?;
                let alpha = param(params, 1, family, "alpha")?;
                if k <= 0.0 {
                    return Err(violation("power_law: k > 0 violated"));
                }
                if alpha <= 2.0 {
                    return Err(violation("power_law: alpha > 2 violated"));
                }
                if k / (alpha - 1.0) >= 1.0 {
                    return Err(violation("power_law: k / (alpha - 1) < 1 violated (a(0) < 1)"));
                }
                (Repr::PowerLaw { k, alpha }, Assumptions { positive_definite: true, dissipative: true })
            }
            KernelFamily::Zero => (Repr::Zero, Assumptions { positive_definite: true, dissipative: false }),
            KernelFamily::CustomTable => {
                let step = param(params, 0, family, "dt")?;
                if step <= 0.0 {
                    return Err(violation("custom_table: sample spacing must be positive"));
                }
                let values = &params[1..];
                if values.len() < 4 {
                    return Err(violation("custom_table: at least 4 samples required"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(violation("custom_table: samples must be finite"));
                }
                (Repr::Table(UniformSpline::new(step, values)), Assumptions::default())
            }
        };
        let kernel = MemoryKernel { family, params: params.to_vec(), repr, assumptions };
        let a0 = kernel.a(0.0);
        if a0 >= 1.0 {
            return Err(violation(format!("{family}: a(0) < 1 violated (a(0) = {a0})")));
        }
        kernel.check_derivative_consistency()?;
        Ok(kernel)
    }

    pub fn zero() -> Self {
        MemoryKernel {
            family: KernelFamily::Zero,
            params: Vec::new(),
            repr: Repr::Zero,
            assumptions: Assumptions { positive_definite: true, dissipative: false },
        }
    }

    pub fn poly_exp(alpha: f64, a0: f64, a1: f64) -> Result<Self> {
        Self::new(KernelFamily::PolyExp, &[alpha, a0, a1])
    }

    pub fn power_law(k: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::PowerLaw, &[k, alpha])
    }

    pub fn exp_integral(a0: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(KernelFamily::ExpIntegral, &[a0, alpha, beta])
    }

    /// Table kernel from samples `a(k·step)`.
    pub fn custom_table(step: f64, values: &[f64]) -> Result<Self> {
        let mut params = Vec::with_capacity(values.len() + 1);
        params.push(step);
        params.extend_from_slice(values);
        Self::new(KernelFamily::CustomTable, &params)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn assumptions(&self) -> Assumptions {
        self.assumptions
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    /// Exponent `β` of an integrable `t^{-β}` singularity of `ȧ` at the origin.
    pub fn singular_exponent(&self) -> Option<f64> {
        match self.repr {
            Repr::ExpIntegral { beta, a0, .. } if beta > 0.0 && a0 > 0.0 => Some(beta),
            _ => None,
        }
    }

    /// Evaluates `a`, `ȧ` or `ä` at `t ≥ 0`.
    pub fn eval(&self, t: f64, order: Order) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::DomainError(format!("kernel evaluated at t = {t}")));
        }
        if t == 0.0 && order != Order::A && self.singular_exponent().is_some() {
            return Err(Error::SingularityError(format!("{} derivative is singular at t = 0", self.family)));
        }
        Ok(match order {
            Order::A => self.a(t),
            Order::ADot => self.a_dot(t),
            Order::ADdot => self.a_ddot(t),
        })
    }

    /// `a(t)`; callers guarantee `t ≥ 0`.
    pub fn a(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::PolyExp { alpha, a0, a1 } => {
                (a0 / alpha * t + (a0 + alpha * a1) / (alpha * alpha)) * libm::exp(-alpha * t)
            }
            Repr::PowerLaw { k, alpha } => k / (alpha - 1.0) * libm::pow(1.0 + t, 1.0 - alpha),
            Repr::ExpIntegral { a0, alpha, beta, total } => a0 * exp_integral_tail(*alpha, *beta, *total, t),
            Repr::Table(s) => s.value(t),
        }
    }

    /// `ȧ(t)`; returns `-∞` at a singular origin.
    pub fn a_dot(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::PolyExp { alpha, a0, a1 } => -(a0 * t + a1) * libm::exp(-alpha * t),
            Repr::PowerLaw { k, alpha } => -k * libm::pow(1.0 + t, -alpha),
            Repr::ExpIntegral { a0, alpha, beta, .. } => {
                if *beta == 0.0 {
                    -a0 * libm::exp(-alpha * t)
                } else if t == 0.0 {
                    if *a0 == 0.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    -a0 * libm::exp(-alpha * t) * libm::pow(t, -beta)
                }
            }
            Repr::Table(s) => s.derivative(t),
        }
    }

    /// `ä(t)`; returns `+∞` at a singular origin.
    pub fn a_ddot(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::PolyExp { alpha, a0, a1 } => (alpha * a0 * t + alpha * a1 - a0) * libm::exp(-alpha * t),
            Repr::PowerLaw { k, alpha } => k * alpha * libm::pow(1.0 + t, -alpha - 1.0),
            Repr::ExpIntegral { a0, alpha, beta, .. } => {
                if *beta == 0.0 {
                    a0 * alpha * libm::exp(-alpha * t)
                } else if t == 0.0 {
                    if *a0 == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    a0 * libm::exp(-alpha * t) * libm::pow(t, -beta) * (alpha + beta / t)
                }
            }
            Repr::Table(s) => s.second_derivative(t),
        }
    }

    /// Largest time at which the kernel carries information (table end, or ∞).
    pub fn support_end(&self) -> f64 {
        match &self.repr {
            Repr::Table(s) => s.end(),
            _ => f64::INFINITY,
        }
    }

    fn check_derivative_consistency(&self) -> Result<()> {
        let t_hi = self.support_end().min(10.0);
        let t_lo = 0.05_f64.min(0.1 * t_hi);
        for i in 0..20 {
            let t = t_lo + (t_hi - 2.0 * t_lo) * (i as f64 + 0.5) / 20.0;
            let eps = 1e-3 * t_lo.max(t * 1e-2).min(0.1);
            let fd = (-self.a(t + 2.0 * eps) + 8.0 * self.a(t + eps) - 8.0 * self.a(t - eps) + self.a(t - 2.0 * eps))
                / (12.0 * eps);
            let exact = self.a_dot(t);
            if (fd - exact).abs() > 1e-6 * (1.0 + exact.abs()) {
                return Err(Error::NumericalFailure(format!(
                    "{}: a and ȧ inconsistent at t = {t} (fd {fd}, closed form {exact})",
                    self.family
                )));
            }
        }
        Ok(())
    }
}

/// `∫_t^∞ e^{-αs} s^{-β} ds` for `0 ≤ β < 1`.
fn exp_integral_tail(alpha: f64, beta: f64, total: f64, t: f64) -> f64 {
    if beta == 0.0 {
        return libm::exp(-alpha * t) / alpha;
    }
    if t == 0.0 {
        return total;
    }
    if alpha * t < 1.0 {
        // head integral with s = r^q, q = 1/(1-β), which removes the singularity
        let q = 1.0 / (1.0 - beta);
        let upper = libm::pow(t, 1.0 - beta);
        let (head, _) = quad::integrate(|r| libm::exp(-alpha * libm::pow(r, q)), 0.0, upper, 1e-15);
        total - q * head
    } else {
        let (scaled, _) = quad::integrate_to_infinity(|y| libm::exp(-alpha * y) * libm::pow(t + y, -beta), 0.0, 1e-15);
        libm::exp(-alpha * t) * scaled
    }
}

/// Outcome of one sign condition.
#[derive(Debug, Clone, PartialEq)]
pub struct SignCondition {
    pub name: &'static str,
    pub passed: bool,
    /// First violating sample `(t, value)`.
    pub first_violation: Option<(f64, f64)>,
}

/// Per-condition pass/fail report of the dissipative sign profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SignProfileReport {
    pub conditions: Vec<SignCondition>,
}

impl SignProfileReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, name: &str) -> Option<&SignCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

const SIGN_TOL: f64 = 1e-13;

/// Checks `a ≥ 0`, `ȧ ≤ 0`, `ä ≥ 0` on the grid plus `ȧ(0) < 0` and `a(0) < 1`.
///
/// Non-positive grid points are ignored.
pub fn check_sign_profile(kernel: &MemoryKernel, t_grid: &[f64]) -> SignProfileReport {
    fn scan(name: &'static str, grid: &[f64], f: impl Fn(f64) -> f64, ok: impl Fn(f64) -> bool) -> SignCondition {
        let first_violation =
            grid.iter().copied().filter(|&t| t > 0.0 && t.is_finite()).map(|t| (t, f(t))).find(|&(_, v)| !ok(v));
        SignCondition { name, passed: first_violation.is_none(), first_violation }
    }
    let mut conditions = Vec::new();
    conditions.push(scan("a>=0", t_grid, |t| kernel.a(t), |v| v >= -SIGN_TOL));
    conditions.push(scan("a_dot<=0", t_grid, |t| kernel.a_dot(t), |v| v <= SIGN_TOL));
    conditions.push(scan("a_ddot>=0", t_grid, |t| kernel.a_ddot(t), |v| v >= -SIGN_TOL));
    let ad0 = kernel.a_dot(0.0);
    conditions.push(SignCondition {
        name: "a_dot(0)<0",
        passed: ad0 < 0.0,
        first_violation: if ad0 < 0.0 { None } else { Some((0.0, ad0)) },
    });
    let a0 = kernel.a(0.0);
    conditions.push(SignCondition {
        name: "a(0)<1",
        passed: a0 < 1.0,
        first_violation: if a0 < 1.0 { None } else { Some((0.0, a0)) },
    });
    SignProfileReport { conditions }
}

/// Tests `-ä(t) ≤ m ȧ(t)` at every grid point, with a small relative slack.
pub fn check_exp_decay_condition(kernel: &MemoryKernel, m: f64, t_grid: &[f64]) -> Result<bool> {
    if !(m > 0.0) {
        return Err(violation("exp decay condition requires m > 0"));
    }
    for &t in t_grid {
        let add = kernel.eval(t, Order::ADdot)?;
        let ad = kernel.eval(t, Order::ADot)?;
        let rhs = m * ad;
        if -add > rhs + 1e-12 * (1.0 + rhs.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `n` log-spaced points covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l0, l1) = (libm::log(lo), libm::log(hi));
    (0..n).map(|i| if n == 1 { lo } else { libm::exp(l0 + (l1 - l0) * i as f64 / (n - 1) as f64) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_exp_closed_form() {
        let k = MemoryKernel::poly_exp(2.0, 0.0, 1.0).unwrap();
        assert_eq!(k.eval(0.0, Order::A).unwrap(), 0.5);
        assert_eq!(k.eval(0.0, Order::ADot).unwrap(), -1.0);
        let t = 0.7;
        assert!((k.a(t) - 0.5 * libm::exp(-2.0 * t)).abs() < 1e-15);
        assert!((k.a_ddot(t) - 2.0 * libm::exp(-2.0 * t)).abs() < 1e-15);
    }

    #[test]
    fn power_law_closed_form() {
        let k = MemoryKernel::power_law(1.0, 3.0).unwrap();
        assert_eq!(k.a(0.0), 0.5);
        assert!((k.eval(1.0, Order::ADot).unwrap() + 0.125).abs() < 1e-15);
        assert!((k.a(1.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn zero_kernel() {
        let k = MemoryKernel::new(KernelFamily::Zero, &[]).unwrap();
        assert_eq!(k.eval(1.0, Order::A).unwrap(), 0.0);
        assert_eq!(k.eval(1.0, Order::ADot).unwrap(), 0.0);
    }

    #[test]
    fn exp_integral_matches_incomplete_gamma() {
        // β = 1/2: ∫_t^∞ e^{-s} s^{-1/2} ds = √π erfc(√t)
        let k = MemoryKernel::exp_integral(0.5, 1.0, 0.5).unwrap();
        for &t in &[0.0, 1e-6, 0.01, 0.3, 0.99, 1.0, 2.5, 10.0] {
            let exact = 0.5 * libm::sqrt(core::f64::consts::PI) * libm::erfc(libm::sqrt(t));
            assert!((k.a(t) - exact).abs() < 1e-10, "t={t}: {} vs {exact}", k.a(t));
        }
        assert!(matches!(k.eval(0.0, Order::ADdot), Err(Error::SingularityError(_))));
        assert!(matches!(k.eval(0.0, Order::ADot), Err(Error::SingularityError(_))));
        assert!(!k.assumptions().dissipative);
    }

    #[test]
    fn parameter_violations_name_the_inequality() {
        let e = MemoryKernel::poly_exp(1.0, 0.0, 1.0).unwrap_err();
        assert!(format!("{e}").contains("a(0) < 1"));
        let e = MemoryKernel::poly_exp(2.0, 1.0, 0.1).unwrap_err();
        assert!(format!("{e}").contains("alpha a1 - a0 >= 0"));
        let e = MemoryKernel::power_law(1.0, 2.0).unwrap_err();
        assert!(format!("{e}").contains("alpha > 2"));
        let e = MemoryKernel::power_law(3.0, 3.0).unwrap_err();
        assert!(format!("{e}").contains("k / (alpha - 1) < 1"));
        let e = MemoryKernel::exp_integral(2.0, 1.0, 0.0).unwrap_err();
        assert!(format!("{e}").contains("a(0) < 1"));
        assert!(MemoryKernel::new(KernelFamily::PolyExp, &[1.0]).is_err());
    }

    #[test]
    fn eval_rejects_negative_time() {
        let k = MemoryKernel::zero();
        assert!(matches!(k.eval(-1.0, Order::A), Err(Error::DomainError(_))));
    }

    #[test]
    fn sign_profiles() {
        let grid: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
        let k = MemoryKernel::poly_exp(2.0, 0.0, 1.0).unwrap();
        assert!(check_sign_profile(&k, &grid).all_passed());

        let z = check_sign_profile(&MemoryKernel::zero(), &grid);
        assert!(!z.condition("a_dot(0)<0").unwrap().passed);
        assert_eq!(z.conditions.iter().filter(|c| !c.passed).count(), 1);

        let step = 0.01;
        let samples: Vec<f64> = (0..1000).map(|i| 0.5 * libm::cos(i as f64 * step)).collect();
        let c = MemoryKernel::custom_table(step, &samples).unwrap();
        let r = check_sign_profile(&c, &grid);
        let cond = r.condition("a>=0").unwrap();
        assert!(!cond.passed);
        assert!(cond.first_violation.unwrap().0 > core::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn exp_decay_condition_as_printed() {
        let k = MemoryKernel::poly_exp(2.0, 0.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
        assert!(check_exp_decay_condition(&k, 2.0, &grid).unwrap());
        // the printed inequality is -ä ≤ m ȧ, i.e. m ≤ 2 for this kernel
        assert!(check_exp_decay_condition(&k, 1.0, &grid).unwrap());
        assert!(!check_exp_decay_condition(&k, 3.0, &grid).unwrap());
        assert!(check_exp_decay_condition(&MemoryKernel::zero(), 1.0, &grid).unwrap());
        let sing = MemoryKernel::exp_integral(0.5, 1.0, 0.5).unwrap();
        assert!(check_exp_decay_condition(&sing, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-6, 1e3, 10);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[9] - 1e3).abs() < 1e-9);
    }
}
