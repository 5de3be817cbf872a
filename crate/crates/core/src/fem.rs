//! Continuous piecewise-linear elements on `(0,1)` and bilinear elements on
//! `(0,1)^2`, uniform grids, homogeneous Dirichlet conditions.
//!
//! Unknowns are the values at interior nodes in lexicographic order (`x`
//! fastest). The 1D mass and stiffness matrices are `(h/6) tridiag(1,4,1)`
//! and `(1/h) tridiag(-1,2,-1)`; the 2D ones are tensor products, with the
//! diffusivity `K` folded into the stiffness. All of them are diagonal in
//! the discrete sine basis, which gives a direct solver for `M + beta S`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Nodal coefficients at the free nodes.
pub type FieldVector = Vec<f64>;

#[derive(Debug, Clone)]
pub struct SpatialGrid {
    dim: usize,
    m: usize,
    h: f64,
    diffusivity: f64,
    /// Orthonormal sine matrix `sqrt(2/m) sin(i l pi h)`, symmetric.
    basis: Vec<f64>,
    mass_eig: Vec<f64>,
    stiff_eig: Vec<f64>,
}

impl SpatialGrid {
    /// `m` subdivisions per axis in `dim` (1 or 2) dimensions.
    pub fn new(dim: usize, m: usize, diffusivity: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(invalid(format!("spatial dimension must be 1 or 2, got {dim}")));
        }
        if m < 2 {
            return Err(invalid(format!("need at least 2 subdivisions, got {m}")));
        }
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(invalid(format!("diffusivity must be positive, got {diffusivity}")));
        }
        let h = 1.0 / m as f64;
        let n = m - 1;
        let scale = (2.0 / m as f64).sqrt();
        let mut basis = vec![0.0; n * n];
        for i in 1..=n {
            for l in 1..=n {
                basis[(i - 1) * n + (l - 1)] = scale * ((i * l) as f64 * PI * h).sin();
            }
        }
        let (mass_eig, stiff_eig) = (1..=n)
            .map(|i| {
                let c = (i as f64 * PI * h).cos();
                (h / 6.0 * (4.0 + 2.0 * c), (2.0 - 2.0 * c) / h)
            })
            .unzip();
        Ok(Self {
            dim,
            m,
            h,
            diffusivity,
            basis,
            mass_eig,
            stiff_eig,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn subdivisions(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    /// Interior nodes per axis.
    pub fn axis_nodes(&self) -> usize {
        self.m - 1
    }

    /// Number of unknowns `M`.
    pub fn free_nodes(&self) -> usize {
        self.axis_nodes().pow(self.dim as u32)
    }

    /// Coordinates of free node `idx`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let n = self.axis_nodes();
        let x = (idx % n + 1) as f64 * self.h;
        let y = if self.dim == 2 { (idx / n + 1) as f64 * self.h } else { 0.0 };
        [x, y]
    }

    /// Values of `f` at the free nodes (`y` is 0 in 1D).
    pub fn nodal_interpolant(&self, f: impl Fn(f64, f64) -> f64) -> FieldVector {
        (0..self.free_nodes())
            .map(|idx| {
                let [x, y] = self.node(idx);
                f(x, y)
            })
            .collect()
    }

    /// Nodal values of `prod_d sin(i_d pi x_d)`.
    pub fn sine_mode(&self, modes: (usize, usize)) -> FieldVector {
        self.nodal_interpolant(|x, y| {
            let sx = (modes.0 as f64 * PI * x).sin();
            if self.dim == 2 {
                sx * (modes.1 as f64 * PI * y).sin()
            } else {
                sx
            }
        })
    }

    /// `(M + beta S) x`.
    pub fn apply(&self, beta: f64, x: &[f64]) -> FieldVector {
        let h = self.h;
        let (ma, mb) = (4.0 * h / 6.0, h / 6.0);
        let (sa, sb) = (2.0 / h, -1.0 / h);
        let k = self.diffusivity;
        match self.dim {
            1 => {
                let mut out = tridiag(x, ma, mb);
                let s = tridiag(x, sa, sb);
                for (o, v) in out.iter_mut().zip(s) {
                    *o += beta * k * v;
                }
                out
            }
            _ => {
                let n = self.axis_nodes();
                // M1 (x) M1, S1 (x) M1 and M1 (x) S1 via axis-wise products.
                let mx = tridiag_rows(x, n, ma, mb);
                let sx = tridiag_rows(x, n, sa, sb);
                let mut out = tridiag_cols(&mx, n, ma, mb);
                let mxsy = tridiag_cols(&mx, n, sa, sb);
                let sxmy = tridiag_cols(&sx, n, ma, mb);
                for i in 0..out.len() {
                    out[i] += beta * k * (mxsy[i] + sxmy[i]);
                }
                out
            }
        }
    }

    pub fn apply_mass(&self, x: &[f64]) -> FieldVector {
        self.apply(0.0, x)
    }

    /// `S x`, including the diffusivity.
    pub fn apply_stiffness(&self, x: &[f64]) -> FieldVector {
        let mut out = self.apply(1.0, x);
        for (o, m) in out.iter_mut().zip(self.apply_mass(x)) {
            *o -= m;
        }
        out
    }

    /// Solves `(M + beta S) u = b` by diagonalising in the sine basis.
    pub fn solve(&self, beta: f64, b: &[f64]) -> Result<FieldVector> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid(format!("solver coefficient must be finite and >= 0, got {beta}")));
        }
        if b.len() != self.free_nodes() {
            return Err(invalid(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.free_nodes()
            )));
        }
        let k = self.diffusivity;
        let (mu, sigma) = (&self.mass_eig, &self.stiff_eig);
        let n = self.axis_nodes();
        match self.dim {
            1 => {
                let mut c = self.sine_transform_1d(b);
                for i in 0..n {
                    c[i] /= mu[i] + beta * k * sigma[i];
                }
                Ok(self.sine_transform_1d(&c))
            }
            _ => {
                let mut c = self.sine_transform_2d(b);
                for j in 0..n {
                    for i in 0..n {
                        let d = mu[i] * mu[j] + beta * k * (sigma[i] * mu[j] + mu[i] * sigma[j]);
                        c[j * n + i] /= d;
                    }
                }
                Ok(self.sine_transform_2d(&c))
            }
        }
    }

    /// `sqrt(v^T M v)`.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        let mv = self.apply_mass(v);
        v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// Generalised eigenvalue of `(S, M)` for the discrete sine mode
    /// `(i, j)` (the second index is ignored in 1D).
    pub fn discrete_eigenvalue(&self, modes: (usize, usize)) -> f64 {
        let (mu, sigma) = (&self.mass_eig, &self.stiff_eig);
        let (i, j) = (modes.0 - 1, modes.1.max(1) - 1);
        let k = self.diffusivity;
        match self.dim {
            1 => k * sigma[i] / mu[i],
            _ => k * (sigma[i] / mu[i] + sigma[j] / mu[j]),
        }
    }

    /// Galerkin load `<prod_d sin(i_d pi x_d), basis_l>` of a sine mode,
    /// integrated exactly.
    pub fn sine_mode_load(&self, modes: (usize, usize)) -> FieldVector {
        let h = self.h;
        let factor = |i: usize| {
            let a = i as f64 * PI;
            // 2 (1 - cos(a h)) / (a^2 h), written without cancellation
            let s = (0.5 * a * h).sin();
            4.0 * s * s / (a * a * h)
        };
        let fx = factor(modes.0);
        let fy = if self.dim == 2 { factor(modes.1) } else { 1.0 };
        let mut load = self.sine_mode(modes);
        for v in &mut load {
            *v *= fx * fy;
        }
        load
    }

    fn sine_transform_1d(&self, x: &[f64]) -> Vec<f64> {
        let n = self.axis_nodes();
        (0..n)
            .map(|i| {
                let row = &self.basis[i * n..(i + 1) * n];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `V X V` for the `n x n` array `X` stored row-major by `y`.
    fn sine_transform_2d(&self, x: &[f64]) -> Vec<f64> {
        let n = self.axis_nodes();
        let v = &self.basis;
        // along x: tmp[y][i] = sum_l V[i][l] x[y][l]
        let mut tmp = vec![0.0; n * n];
        for y in 0..n {
            let src = &x[y * n..(y + 1) * n];
            for i in 0..n {
                let row = &v[i * n..(i + 1) * n];
                tmp[y * n + i] = row.iter().zip(src).map(|(a, b)| a * b).sum();
            }
        }
        // along y: out[j][i] = sum_y V[j][y] tmp[y][i]
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            let dst = &mut out[j * n..(j + 1) * n];
            for y in 0..n {
                let w = v[j * n + y];
                let src = &tmp[y * n..(y + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }
}

fn tridiag(x: &[f64], a: f64, b: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            a * x[i] + b * (left + right)
        })
        .collect()
}

/// Tridiagonal product along `x` (within each row).
fn tridiag_rows(x: &[f64], n: usize, a: f64, b: f64) -> Vec<f64> {
    x.chunks_exact(n).flat_map(|row| tridiag(row, a, b)).collect()
}

/// Tridiagonal product along `y` (across rows).
fn tridiag_cols(x: &[f64], n: usize, a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        for i in 0..n {
            let mut v = a * x[y * n + i];
            if y > 0 {
                v += b * x[(y - 1) * n + i];
            }
            if y + 1 < n {
                v += b * x[(y + 1) * n + i];
            }
            out[y * n + i] = v;
        }
    }
    out
}

/// Time-averaged Galerkin load `<k_n^-1 int_{I_n} f dt, basis_l>`.
pub trait Source {
    fn load_average(&self, grid: &SpatialGrid, t0: f64, t1: f64) -> FieldVector;
}

/// `f = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSource;

impl Source for ZeroSource {
    fn load_average(&self, grid: &SpatialGrid, _t0: f64, _t1: f64) -> FieldVector {
        vec![0.0; grid.free_nodes()]
    }
}

/// Temporal factor of a separable source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    /// `1 + sin(pi t)`.
    OnePlusSinPi,
}

impl TimeProfile {
    /// Average over `(t0, t1]`.
    pub fn average(&self, t0: f64, t1: f64) -> f64 {
        match *self {
            TimeProfile::Constant(c) => c,
            TimeProfile::OnePlusSinPi => 1.0 + sin_pi_average(t0, t1),
        }
    }
}

/// `(cos(pi t0) - cos(pi t1)) / (pi (t1 - t0))`, as a product of sines.
pub fn sin_pi_average(t0: f64, t1: f64) -> f64 {
    let half = 0.5 * PI * (t1 - t0);
    let diff = 2.0 * (0.5 * PI * (t0 + t1)).sin() * half.sin();
    diff / (PI * (t1 - t0))
}

/// `g(t) prod_d sin(i_d pi x_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineModeSource {
    pub modes: (usize, usize),
    pub profile: TimeProfile,
}

impl Source for SineModeSource {
    fn load_average(&self, grid: &SpatialGrid, t0: f64, t1: f64) -> FieldVector {
        let g = self.profile.average(t0, t1);
        let mut load = grid.sine_mode_load(self.modes);
        for v in &mut load {
            *v *= g;
        }
        load
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    fn rel_residual(grid: &SpatialGrid, beta: f64, u: &[f64], b: &[f64]) -> f64 {
        let au = grid.apply(beta, u);
        let num: f64 = au.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum();
        let den: f64 = b.iter().map(|c| c * c).sum();
        (num / den).sqrt()
    }

    #[test]
    fn stiffness_row() {
        let grid = SpatialGrid::new(1, 4, 1.0).unwrap();
        let s = grid.apply_stiffness(&[0.0, 1.0, 0.0]);
        assert!((s[0] + 4.0).abs() < 1e-14 && (s[1] - 8.0).abs() < 1e-14 && (s[2] + 4.0).abs() < 1e-14);
    }

    #[test]
    fn solve_inverts_apply() {
        for dim in [1, 2] {
            let grid = SpatialGrid::new(dim, 8, 0.3).unwrap();
            for beta in [0.0, 0.01, 2.5] {
                let b = pseudo_random(grid.free_nodes(), 7);
                let u = grid.solve(beta, &b).unwrap();
                assert!(rel_residual(&grid, beta, &u, &b) < 1e-13);
                let x = grid.solve(beta, &grid.apply(beta, &b)).unwrap();
                assert!(x.iter().zip(&b).all(|(a, c)| (a - c).abs() < 1e-13));
            }
        }
    }

    #[test]
    fn sine_mode_is_eigenvector() {
        let grid = SpatialGrid::new(2, 16, 1.0 / (2.0 * PI * PI)).unwrap();
        let v = grid.sine_mode((1, 1));
        let lambda = grid.discrete_eigenvalue((1, 1));
        let sv = grid.apply_stiffness(&v);
        let mv = grid.apply_mass(&v);
        for (s, m) in sv.iter().zip(&mv) {
            assert!((s - lambda * m).abs() < 1e-14);
        }
        assert!((lambda - 1.0).abs() < 1e-2);
        let beta = 0.7;
        let u = grid.solve(beta, &grid.apply(beta, &v)).unwrap();
        assert!(u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn norms_and_loads() {
        let grid = SpatialGrid::new(2, 64, 1.0).unwrap();
        assert_eq!(grid.l2_norm(&vec![0.0; grid.free_nodes()]), 0.0);
        let v = grid.sine_mode((1, 1));
        assert!((grid.l2_norm(&v).powi(2) - 0.25).abs() < 1e-3);
        let load = grid.sine_mode_load((1, 1));
        // <phi_11, phi_11> through the load of its own interpolant
        let inner: f64 = load.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((inner - 0.25).abs() < 1e-3);
        assert!((sin_pi_average(0.0, 1.0) - 2.0 / PI).abs() < 1e-15);
        assert!((TimeProfile::OnePlusSinPi.average(0.0, 1.0) - 1.0 - 2.0 / PI).abs() < 1e-15);
        let tiny = sin_pi_average(0.25, 0.25 + 1e-9);
        assert!((tiny - (0.25 * PI).sin()).abs() < 1e-8);
    }

    #[test]
    fn mass_is_positive() {
        let grid = SpatialGrid::new(2, 6, 1.0).unwrap();
        for seed in 0..20 {
            let x = pseudo_random(grid.free_nodes(), seed);
            let mx = grid.apply_mass(&x);
            assert!(x.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>() > 0.0);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpatialGrid::new(3, 8, 1.0).is_err());
        assert!(SpatialGrid::new(1, 1, 1.0).is_err());
        assert!(SpatialGrid::new(1, 8, 0.0).is_err());
        let grid = SpatialGrid::new(1, 8, 1.0).unwrap();
        assert!(grid.solve(-1.0, &[0.0; 7]).is_err());
        assert!(grid.solve(1.0, &[0.0; 6]).is_err());
    }
}
