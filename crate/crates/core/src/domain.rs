//! Uniform finite-difference grids on an interval or a rectangle.
//!
//! Fields live on interior nodes only (row-major, `x` fastest); the
//! Dirichlet boundary is implicit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, dot, solve_tridiagonal_constant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Left,
    Right,
    Bottom,
    Top,
}

impl Face {
    pub fn normal(self) -> [f64; 2] {
        match self {
            Face::Left => [-1.0, 0.0],
            Face::Right => [1.0, 0.0],
            Face::Bottom => [0.0, -1.0],
            Face::Top => [0.0, 1.0],
        }
    }
}

/// A boundary quadrature node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub face: Face,
    /// Full-grid node indices `(i, j)`; `j = 0` in 1D.
    pub node: [usize; 2],
    pub position: [f64; 2],
    pub normal: [f64; 2],
    pub weight: f64,
}

/// Uniform grid over `(0, Lx)` or `(0, Lx) × (0, Ly)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    extents: [f64; 2],
    nodes: [usize; 2],
    spacing: [f64; 2],
    boundary: Vec<BoundaryNode>,
}

impl Grid {
    /// `nodes` counts include the two boundary nodes per axis.
    pub fn new(dim: usize, extents: &[f64], nodes: &[usize]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::ParameterViolation(format!("domain dimension must be 1 or 2, got {dim}")));
        }
        if extents.len() != dim || nodes.len() != dim {
            return Err(Error::ParameterViolation(format!(
                "domain needs {dim} extents and {dim} node counts, got {} and {}",
                extents.len(),
                nodes.len()
            )));
        }
        if extents.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::ParameterViolation("domain extents must be positive".into()));
        }
        if nodes.iter().any(|&n| n < 3) {
            return Err(Error::ParameterViolation("domain needs at least 3 nodes per axis".into()));
        }
        let mut e = [extents[0], 0.0];
        let mut n = [nodes[0], 1];
        if dim == 2 {
            e[1] = extents[1];
            n[1] = nodes[1];
        }
        let spacing = [e[0] / (n[0] - 1) as f64, if dim == 2 { e[1] / (n[1] - 1) as f64 } else { 0.0 }];
        let mut grid = Grid { dim, extents: e, nodes: n, spacing, boundary: Vec::new() };
        grid.boundary = grid.build_boundary();
        Ok(grid)
    }

    pub fn interval(length: f64, nodes: usize) -> Result<Self> {
        Self::new(1, &[length], &[nodes])
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(2, &[lx, ly], &[nx, ny])
    }

    fn build_boundary(&self) -> Vec<BoundaryNode> {
        if self.dim == 1 {
            let l = self.extents[0];
            let last = self.nodes[0] - 1;
            return vec![
                BoundaryNode { face: Face::Left, node: [0, 0], position: [0.0, 0.0], normal: [-1.0, 0.0], weight: 1.0 },
                BoundaryNode {
                    face: Face::Right,
                    node: [last, 0],
                    position: [l, 0.0],
                    normal: [1.0, 0.0],
                    weight: 1.0,
                },
            ];
        }
        let [nx, ny] = self.nodes;
        let [hx, hy] = self.spacing;
        // corners carry zero weight; their half cells go to the neighbours
        let face_weight = |k: usize, n: usize, h: f64| {
            if k == 0 || k == n - 1 {
                return 0.0;
            }
            let mut w = h;
            if k == 1 {
                w += 0.5 * h;
            }
            if k == n - 2 {
                w += 0.5 * h;
            }
            w
        };
        let mut out = Vec::with_capacity(2 * (nx + ny));
        for (face, i) in [(Face::Left, 0), (Face::Right, nx - 1)] {
            for j in 0..ny {
                out.push(BoundaryNode {
                    face,
                    node: [i, j],
                    position: [i as f64 * hx, j as f64 * hy],
                    normal: face.normal(),
                    weight: face_weight(j, ny, hy),
                });
            }
        }
        for (face, j) in [(Face::Bottom, 0), (Face::Top, ny - 1)] {
            for i in 0..nx {
                out.push(BoundaryNode {
                    face,
                    node: [i, j],
                    position: [i as f64 * hx, j as f64 * hy],
                    normal: face.normal(),
                    weight: face_weight(i, nx, hx),
                });
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    /// Node counts per axis, boundary included.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    /// Smallest spacing, used by the CFL bound.
    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Interior node counts `[mx, my]` (`my = 1` in 1D).
    pub fn interior_shape(&self) -> [usize; 2] {
        if self.dim == 1 {
            [self.nodes[0] - 2, 1]
        } else {
            [self.nodes[0] - 2, self.nodes[1] - 2]
        }
    }

    pub fn interior_len(&self) -> usize {
        let [mx, my] = self.interior_shape();
        mx * my
    }

    pub fn full_len(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    /// Cell volume `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.extents().iter().product()
    }

    /// `|Γ|`: two points in 1D, the perimeter in 2D.
    pub fn boundary_measure(&self) -> f64 {
        if self.dim == 1 {
            2.0
        } else {
            2.0 * (self.extents[0] + self.extents[1])
        }
    }

    /// Position of interior node `k`.
    pub fn interior_position(&self, k: usize) -> [f64; 2] {
        let mx = self.interior_shape()[0];
        let (i, j) = (k % mx + 1, k / mx + 1);
        if self.dim == 1 {
            [i as f64 * self.spacing[0], 0.0]
        } else {
            [i as f64 * self.spacing[0], j as f64 * self.spacing[1]]
        }
    }

    /// Position of full-grid node `(i, j)`.
    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.spacing[0], j as f64 * self.spacing[1]]
    }

    /// Trapezoid weights for `∫_Ω` over full-grid nodes (row-major).
    pub fn area_weights(&self) -> Vec<f64> {
        let axis =
            |n: usize, h: f64| -> Vec<f64> { (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect() };
        let wx = axis(self.nodes[0], self.spacing[0]);
        if self.dim == 1 {
            return wx;
        }
        let wy = axis(self.nodes[1], self.spacing[1]);
        let mut w = Vec::with_capacity(self.full_len());
        for &b in &wy {
            for &a in &wx {
                w.push(a * b);
            }
        }
        w
    }

    pub fn boundary_nodes(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    /// Interior field embedded in the full grid with zero boundary values.
    pub fn to_full(&self, field: &[f64]) -> Vec<f64> {
        let [mx, my] = self.interior_shape();
        let mut full = vec![0.0; self.full_len()];
        if self.dim == 1 {
            full[1..=mx].copy_from_slice(field);
            return full;
        }
        let nx = self.nodes[0];
        for j in 0..my {
            full[(j + 1) * nx + 1..(j + 1) * nx + 1 + mx].copy_from_slice(&field[j * mx..(j + 1) * mx]);
        }
        full
    }

    fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.interior_len() {
            return Err(Error::SizeMismatch { expected: self.interior_len(), got: field.len() });
        }
        Ok(())
    }

    /// Writes `Δu` (five-point stencil, zero Dirichlet closure) into `out`.
    pub fn apply_laplacian_into(&self, field: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(field)?;
        self.check_len(out)?;
        let [mx, my] = self.interior_shape();
        let cx = 1.0 / (self.spacing[0] * self.spacing[0]);
        if self.dim == 1 {
            for i in 0..mx {
                let left = if i > 0 { field[i - 1] } else { 0.0 };
                let right = if i + 1 < mx { field[i + 1] } else { 0.0 };
                out[i] = cx * (left - 2.0 * field[i] + right);
            }
            return Ok(());
        }
        let cy = 1.0 / (self.spacing[1] * self.spacing[1]);
        for j in 0..my {
            for i in 0..mx {
                let k = j * mx + i;
                let c = field[k];
                let w = if i > 0 { field[k - 1] } else { 0.0 };
                let e = if i + 1 < mx { field[k + 1] } else { 0.0 };
                let s = if j > 0 { field[k - mx] } else { 0.0 };
                let n = if j + 1 < my { field[k + mx] } else { 0.0 };
                out[k] = cx * (w - 2.0 * c + e) + cy * (s - 2.0 * c + n);
            }
        }
        Ok(())
    }

    pub fn apply_laplacian(&self, field: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.interior_len()];
        self.apply_laplacian_into(field, &mut out)?;
        Ok(out)
    }

    /// Discrete `L²` inner product over interior nodes.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.cell_volume() * dot(u, v)
    }

    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        self.inner(u, u)
    }

    /// `⟨∇u, ∇v⟩` from forward differences on cell edges.
    ///
    /// Equals `⟨-Δu, v⟩` exactly (summation by parts).
    pub fn gradient_inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(v)?;
        let [mx, my] = self.interior_shape();
        let vol = self.cell_volume();
        let hx = self.spacing[0];
        let mut sum = 0.0;
        for j in 0..my {
            let (ru, rv) = (&u[j * mx..(j + 1) * mx], &v[j * mx..(j + 1) * mx]);
            for i in 0..=mx {
                let du = if i < mx { ru[i] } else { 0.0 } - if i > 0 { ru[i - 1] } else { 0.0 };
                let dv = if i < mx { rv[i] } else { 0.0 } - if i > 0 { rv[i - 1] } else { 0.0 };
                sum += du * dv / (hx * hx);
            }
        }
        if self.dim == 2 {
            let hy = self.spacing[1];
            for i in 0..mx {
                for j in 0..=my {
                    let at = |f: &[f64], jj: usize| if jj >= 1 && jj <= my { f[(jj - 1) * mx + i] } else { 0.0 };
                    let du = at(u, j + 1) - at(u, j);
                    let dv = at(v, j + 1) - at(v, j);
                    sum += du * dv / (hy * hy);
                }
            }
        }
        Ok(vol * sum)
    }

    /// `‖∇u‖²` on cell edges.
    pub fn gradient_norm_sq(&self, field: &[f64]) -> Result<f64> {
        self.gradient_inner(field, field)
    }

    /// `∂_ν u` at each entry of [`Grid::boundary_nodes`].
    ///
    /// Second-order one-sided stencil `(4u₁ - u₂)/(2h)` towards the interior
    /// (boundary value 0); first order when only one interior node exists.
    pub fn boundary_normal_derivative(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.check_len(field)?;
        let full = self.to_full(field);
        Ok(self.boundary_normal_derivative_full(&full))
    }

    pub(crate) fn boundary_normal_derivative_full(&self, full: &[f64]) -> Vec<f64> {
        let nx = self.nodes[0];
        let at = |i: usize, j: usize| full[j * nx + i];
        self.boundary
            .iter()
            .map(|b| {
                let [i, j] = b.node;
                // step towards the interior along the inward normal
                let (di, dj, h, n): (isize, isize, f64, usize) = match b.face {
                    Face::Left => (1, 0, self.spacing[0], self.nodes[0]),
                    Face::Right => (-1, 0, self.spacing[0], self.nodes[0]),
                    Face::Bottom => (0, 1, self.spacing[1], self.nodes[1]),
                    Face::Top => (0, -1, self.spacing[1], self.nodes[1]),
                };
                let p = |k: isize| at((i as isize + k * di) as usize, (j as isize + k * dj) as usize);
                let inward = if n > 3 { (4.0 * p(1) - p(2) - 3.0 * p(0)) / (2.0 * h) } else { (p(1) - p(0)) / h };
                -inward
            })
            .collect()
    }

    /// Nodal gradient on the full grid: centered inside, one-sided
    /// second order on the boundary. Components `(∂x, ∂y)` per node.
    pub fn nodal_gradient(&self, full: &[f64]) -> Vec<[f64; 2]> {
        let [nx, ny] = self.nodes;
        let diff = |get: &dyn Fn(usize) -> f64, k: usize, n: usize, h: f64| -> f64 {
            if k == 0 {
                if n > 2 {
                    (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
                } else {
                    (get(1) - get(0)) / h
                }
            } else if k == n - 1 {
                if n > 2 {
                    (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h)
                } else {
                    (get(n - 1) - get(n - 2)) / h
                }
            } else {
                (get(k + 1) - get(k - 1)) / (2.0 * h)
            }
        };
        let mut out = vec![[0.0; 2]; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let gx = diff(&|q| full[j * nx + q], i, nx, self.spacing[0]);
                let gy = if self.dim == 2 { diff(&|q| full[q * nx + i], j, ny, self.spacing[1]) } else { 0.0 };
                out[j * nx + i] = [gx, gy];
            }
        }
        out
    }

    /// Analytic discrete eigenvalue of `-Δ` for mode `(k, l)` (`l` ignored in 1D).
    pub fn discrete_eigenvalue(&self, k: usize, l: usize) -> f64 {
        let axis = |m: usize, h: f64, len: f64| {
            let s = libm::sin(m as f64 * PI * h / (2.0 * len));
            4.0 * s * s / (h * h)
        };
        let mut mu = axis(k, self.spacing[0], self.extents[0]);
        if self.dim == 2 {
            mu += axis(l, self.spacing[1], self.extents[1]);
        }
        mu
    }

    /// First Dirichlet eigenvalue of the continuum domain.
    pub fn continuum_eigenvalue(&self) -> f64 {
        self.extents().iter().map(|l| PI * PI / (l * l)).sum()
    }

    /// Sampled `Π sin(k_i π x_i / L_i)` normalized to unit discrete `L²` norm.
    pub fn sine_mode(&self, k: usize, l: usize) -> Vec<f64> {
        let mut scale = libm::sqrt(2.0 / self.extents[0]);
        if self.dim == 2 {
            scale *= libm::sqrt(2.0 / self.extents[1]);
        }
        (0..self.interior_len())
            .map(|n| {
                let [x, y] = self.interior_position(n);
                let mut v = scale * libm::sin(k as f64 * PI * x / self.extents[0]);
                if self.dim == 2 {
                    v *= libm::sin(l as f64 * PI * y / self.extents[1]);
                }
                v
            })
            .collect()
    }

    /// Mode indices `(k, l)` in increasing discrete eigenvalue, up to `count`.
    pub fn mode_indices(&self, count: usize) -> Vec<(usize, usize)> {
        let [mx, my] = self.interior_shape();
        let mut modes: Vec<(usize, usize)> = if self.dim == 1 {
            (1..=mx).map(|k| (k, 0)).collect()
        } else {
            (1..=mx).flat_map(|k| (1..=my).map(move |l| (k, l))).collect()
        };
        modes.sort_by(|a, b| self.discrete_eigenvalue(a.0, a.1).total_cmp(&self.discrete_eigenvalue(b.0, b.1)));
        modes.truncate(count);
        modes
    }

    /// Smallest eigenvalue of the discrete `-Δ` by inverse power iteration.
    pub fn smallest_eigenvalue(&self) -> Result<f64> {
        let n = self.interior_len();
        let mut v: Vec<f64> = (0..n)
            .map(|k| {
                let [x, y] = self.interior_position(k);
                let mut b = x * (self.extents[0] - x);
                if self.dim == 2 {
                    b *= y * (self.extents[1] - y);
                }
                b
            })
            .collect();
        let mut lambda = f64::NAN;
        for _ in 0..500 {
            let nrm = libm::sqrt(dot(&v, &v));
            for x in v.iter_mut() {
                *x /= nrm;
            }
            let w = self.solve_negative_laplacian(&v)?;
            // Rayleigh quotient of the new iterate
            let mut aw = self.apply_laplacian(&w)?;
            for x in aw.iter_mut() {
                *x = -*x;
            }
            let next = dot(&w, &aw) / dot(&w, &w);
            if !next.is_finite() {
                break;
            }
            let converged = (next - lambda).abs() <= 1e-13 * next.abs();
            lambda = next;
            v = w;
            if converged {
                return Ok(lambda);
            }
        }
        Err(Error::NumericalFailure("inverse power iteration did not converge".into()))
    }

    fn solve_negative_laplacian(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.dim == 1 {
            let c = 1.0 / (self.spacing[0] * self.spacing[0]);
            return solve_tridiagonal_constant(-c, 2.0 * c, -c, rhs);
        }
        let n = rhs.len();
        conjugate_gradient(
            |x, out| {
                self.apply_laplacian_into(x, out).ok();
                for o in out.iter_mut() {
                    *o = -*o;
                }
            },
            rhs,
            1e-14,
            10 * n + 100,
        )
    }

    /// Largest stable leapfrog step, `h_min/√N`.
    pub fn cfl_limit(&self) -> f64 {
        self.min_spacing() / libm::sqrt(self.dim as f64)
    }

    /// Band-limited random field: sine modes `1..=cutoff` per axis with
    /// uniform coefficients scaled by `1/(k·l)²`.
    pub fn random_smooth_field<R: Rng>(&self, rng: &mut R, cutoff: usize) -> Vec<f64> {
        let [mx, my] = self.interior_shape();
        let kmax = cutoff.min(mx).max(1);
        let lmax = if self.dim == 2 { cutoff.min(my).max(1) } else { 1 };
        let mut out = vec![0.0; self.interior_len()];
        for k in 1..=kmax {
            for l in 1..=lmax {
                let c: f64 = rng.random_range(-1.0..=1.0) / ((k * l * k * l) as f64);
                let mode = self.sine_mode(k, l);
                for (o, m) in out.iter_mut().zip(&mode) {
                    *o += c * m;
                }
            }
        }
        out
    }
}

/// The multiplier field `h` with `h·ν = 1` on every boundary face.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierField {
    /// Per full-grid node.
    pub values: Vec<[f64; 2]>,
    /// Constant Jacobian `∂ᵢh_j`.
    pub jacobian: [[f64; 2]; 2],
    /// Per boundary node, aligned with [`Grid::boundary_nodes`].
    pub boundary_values: Vec<[f64; 2]>,
}

impl MultiplierField {
    pub fn divergence(&self) -> f64 {
        self.jacobian[0][0] + self.jacobian[1][1]
    }

    /// `Σ |∂ᵢh_j|`.
    pub fn jacobian_abs_sum(&self) -> f64 {
        self.jacobian.iter().flatten().map(|v| v.abs()).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|h| libm::sqrt(h[0] * h[0] + h[1] * h[1])).fold(0.0, f64::max)
    }
}

/// `h(x) = 2x/L - 1` per axis.
pub fn make_multiplier_field(grid: &Grid) -> MultiplierField {
    let ext = grid.extents;
    let field = |p: [f64; 2]| {
        let hx = 2.0 * p[0] / ext[0] - 1.0;
        let hy = if grid.dim == 2 { 2.0 * p[1] / ext[1] - 1.0 } else { 0.0 };
        [hx, hy]
    };
    let [nx, ny] = grid.nodes;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            values.push(field(grid.node_position(i, j)));
        }
    }
    // exact endpoint values so that h·ν = 1 holds bitwise
    let boundary_values = grid
        .boundary
        .iter()
        .map(|b| {
            let mut h = field(b.position);
            match b.face {
                Face::Left => h[0] = -1.0,
                Face::Right => h[0] = 1.0,
                Face::Bottom => h[1] = -1.0,
                Face::Top => h[1] = 1.0,
            }
            h
        })
        .collect();
    let mut jacobian = [[0.0; 2]; 2];
    jacobian[0][0] = 2.0 / ext[0];
    if grid.dim == 2 {
        jacobian[1][1] = 2.0 / ext[1];
    }
    MultiplierField { values, jacobian, boundary_values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_layout() {
        let g = Grid::interval(1.0, 101).unwrap();
        assert!((g.spacing()[0] - 0.01).abs() < 1e-15);
        assert_eq!(g.interior_len(), 99);
        let b = g.boundary_nodes();
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].position[0], b[0].normal[0]), (0.0, -1.0));
        assert_eq!((b[1].position[0], b[1].normal[0]), (1.0, 1.0));
        let m = Grid::interval(2.0, 3).unwrap();
        assert_eq!(m.interior_len(), 1);
    }

    #[test]
    fn square_weights() {
        let g = Grid::rectangle(1.0, 1.0, 51, 51).unwrap();
        let area: f64 = g.area_weights().iter().sum();
        assert!((area - 1.0).abs() < 1e-12);
        let perim: f64 = g.boundary_nodes().iter().map(|b| b.weight).sum();
        assert!((perim - 4.0).abs() < 1e-12);
        for b in g.boundary_nodes() {
            let n = libm::sqrt(b.normal[0] * b.normal[0] + b.normal[1] * b.normal[1]);
            assert_eq!(n, 1.0);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::interval(1.0, 2).is_err());
        assert!(Grid::interval(0.0, 10).is_err());
        assert!(Grid::new(3, &[1.0; 3], &[5; 3]).is_err());
    }

    #[test]
    fn laplacian_of_eigenmode() {
        let g = Grid::interval(1.0, 101).unwrap();
        let u: Vec<f64> = (0..99).map(|k| libm::sin(PI * g.interior_position(k)[0])).collect();
        let lap = g.apply_laplacian(&u).unwrap();
        let err = lap.iter().zip(&u).map(|(l, v)| (l + PI * PI * v).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2 && err > 0.0);
        let g2 = Grid::rectangle(1.0, 1.0, 41, 41).unwrap();
        let u: Vec<f64> = (0..g2.interior_len())
            .map(|k| {
                let [x, y] = g2.interior_position(k);
                libm::sin(PI * x) * libm::sin(PI * y)
            })
            .collect();
        let lap = g2.apply_laplacian(&u).unwrap();
        let err = lap.iter().zip(&u).map(|(l, v)| (l + 2.0 * PI * PI * v).abs()).fold(0.0, f64::max);
        assert!(err < 2e-2);
        assert!(g.apply_laplacian(&[0.0; 5]).is_err());
    }

    #[test]
    fn eigenvalues() {
        let g = Grid::interval(1.0, 101).unwrap();
        let h = 0.01;
        let exact = 2.0 / (h * h) * (1.0 - libm::cos(PI * h));
        let l = g.smallest_eigenvalue().unwrap();
        assert!((l - exact).abs() < 1e-9 * exact, "{l} {exact}");
        assert!((g.continuum_eigenvalue() - PI * PI).abs() < 1e-14);
        let sq = Grid::rectangle(1.0, 1.0, 21, 21).unwrap();
        let l = sq.smallest_eigenvalue().unwrap();
        assert!((l - sq.discrete_eigenvalue(1, 1)).abs() < 1e-9 * l);
        assert!((sq.continuum_eigenvalue() - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn normal_derivative_of_sine() {
        let g = Grid::interval(1.0, 201).unwrap();
        let u: Vec<f64> = (0..199).map(|k| libm::sin(PI * g.interior_position(k)[0])).collect();
        let d = g.boundary_normal_derivative(&u).unwrap();
        assert!((d[0] + PI).abs() < 1e-3);
        assert!((d[1] + PI).abs() < 1e-3);
        let gn = g.gradient_norm_sq(&u).unwrap();
        assert!((gn - PI * PI / 2.0).abs() < 1e-3);

        let sq = Grid::rectangle(1.0, 1.0, 81, 81).unwrap();
        let u: Vec<f64> = (0..sq.interior_len())
            .map(|k| {
                let [x, y] = sq.interior_position(k);
                libm::sin(PI * x) * libm::sin(PI * y)
            })
            .collect();
        let d = sq.boundary_normal_derivative(&u).unwrap();
        for (b, v) in sq.boundary_nodes().iter().zip(&d) {
            if b.face == Face::Left {
                let exact = -PI * libm::sin(PI * b.position[1]);
                assert!((v - exact).abs() < 2e-3, "{v} {exact}");
            }
        }
    }

    #[test]
    fn multiplier_field() {
        let g = Grid::interval(1.0, 11).unwrap();
        let m = make_multiplier_field(&g);
        assert_eq!(m.values[0][0], -1.0);
        assert_eq!(m.values[10][0], 1.0);
        assert_eq!(m.jacobian[0][0], 2.0);
        let sq = Grid::rectangle(1.0, 1.0, 11, 11).unwrap();
        let m = make_multiplier_field(&sq);
        assert_eq!(m.jacobian_abs_sum(), 4.0);
        for (b, h) in sq.boundary_nodes().iter().zip(&m.boundary_values) {
            assert_eq!(h[0] * b.normal[0] + h[1] * b.normal[1], 1.0);
        }
    }
}
