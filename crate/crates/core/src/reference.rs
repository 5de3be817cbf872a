//! Exact solutions of the separable test problem and a literal history sum.
//!
//! With `u0 = phi` and `f = g(t) phi` for a Dirichlet eigenfunction `phi`
//! of eigenvalue `lambda`, the solution is `u(x,t) = a(t) phi(x)` where
//! `a' + lambda d/dt (omega_nu * a) = g`, `a(0) = 1`. In Laplace space
//!
//! ```text
//! a^(z) = (1 + g^(z)) / (z + lambda z^(1-nu))
//! ```
//!
//! which is inverted by trapezoidal quadrature on a hyperbolic contour
//! `z(u) = mu (1 + sin(i u - alpha))`. The poles of `g^` at `+-i pi` are
//! split off and inverted in closed form so that the remaining integrand
//! is analytic off the negative real axis.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fem::{FieldVector, SpatialGrid, TimeProfile};
use crate::time_mesh::TimeMesh;
use crate::weights::{gamma, WeightEngine};

/// Largest accepted difference between the two quadrature resolutions.
pub const ACCURACY_LIMIT: f64 = 1e-8;

/// Hyperbolic contour `z(u) = mu (1 + sin(i u - alpha))` sampled at
/// `u_k = k h`, `|k| <= nodes`, with `h = width / nodes` and
/// `mu = scale * nodes / t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceContour {
    pub nodes: usize,
    pub alpha: f64,
    pub width: f64,
    pub scale: f64,
}

impl Default for LaplaceContour {
    fn default() -> Self {
        Self::with_nodes(32)
    }
}

impl LaplaceContour {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            nodes,
            alpha: 1.1721,
            width: 1.0818,
            scale: 4.4921,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(invalid(format!("contour needs at least 8 nodes, got {}", self.nodes)));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5 * PI && self.width > 0.0 && self.scale > 0.0) {
            return Err(invalid("contour angle must lie in (0, pi/2) and width, scale be positive"));
        }
        Ok(())
    }

    /// `(1 / 2 pi i) int e^{zt} F(z) dz` along the contour.
    pub fn invert(&self, t: f64, f: impl Fn(Complex64) -> Complex64) -> f64 {
        let n = self.nodes as f64;
        let h = self.width / n;
        let mu = self.scale * n / t;
        let k = self.nodes as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -k..=k {
            let w = Complex64::new(-self.alpha, j as f64 * h);
            // sin(iu - alpha) with u = j h
            let z = mu * (1.0 + w.sin());
            let dz = mu * w.cos() * Complex64::i();
            acc += (z * t).exp() * f(z) * dz;
        }
        (acc * h / (2.0 * PI * Complex64::i())).re
    }
}

/// Scalar relaxation equation `a' + lambda d/dt (omega_nu * a) = g`,
/// `a(0) = 1`, with `0 < nu <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relaxation {
    pub nu: f64,
    pub lambda: f64,
    /// `None` for `g = 0`.
    pub forcing: Option<TimeProfile>,
}

impl Relaxation {
    pub fn new(nu: f64, lambda: f64, forcing: Option<TimeProfile>) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(invalid(format!("order must lie in (0, 1], got {nu}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("eigenvalue must be finite and >= 0, got {lambda}")));
        }
        Ok(Self { nu, lambda, forcing })
    }

    fn symbol(&self, z: Complex64) -> Complex64 {
        z + self.lambda * z.powf(1.0 - self.nu)
    }

    /// `a(t)` by contour quadrature, with the difference to a coarser
    /// quadrature as error estimate.
    pub fn evaluate_with_estimate(&self, t: f64, contour: LaplaceContour) -> Result<(f64, f64)> {
        contour.validate()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("time must be positive, got {t}")));
        }
        let fine = self.evaluate_on(t, contour);
        let coarse = self.evaluate_on(
            t,
            LaplaceContour {
                nodes: contour.nodes * 3 / 4,
                ..contour
            },
        );
        Ok((fine, (fine - coarse).abs()))
    }

    /// `a(t)`; fails if the error estimate exceeds [`ACCURACY_LIMIT`].
    pub fn evaluate(&self, t: f64, contour: LaplaceContour) -> Result<f64> {
        let (value, estimate) = self.evaluate_with_estimate(t, contour)?;
        if estimate > ACCURACY_LIMIT {
            return Err(Error::Accuracy {
                estimate,
                limit: ACCURACY_LIMIT,
            });
        }
        Ok(value)
    }

    fn evaluate_on(&self, t: f64, contour: LaplaceContour) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        match self.forcing {
            None => contour.invert(t, |z| one / self.symbol(z)),
            Some(TimeProfile::Constant(c)) => contour.invert(t, |z| (1.0 + c / z) / self.symbol(z)),
            Some(TimeProfile::OnePlusSinPi) => {
                // pi / (z^2 + pi^2) = (1/(z - a) - 1/(z - conj a)) / (2i), a = i pi
                let a = Complex64::new(0.0, PI);
                let ga = one / self.symbol(a);
                let gb = ga.conj();
                let smooth = contour.invert(t, |z| {
                    let g = one / self.symbol(z);
                    let left = (g - ga) / (z - a);
                    let right = (g - gb) / (z - a.conj());
                    (1.0 + 1.0 / z) * g + (left - right) / (2.0 * Complex64::i())
                });
                let poles = (Complex64::new(0.0, PI * t).exp() * ga).im;
                smooth + poles
            }
        }
    }
}

/// `a(t)` of the test problem with `lambda = 1`, `g = 1 + sin(pi t)`.
pub fn u11(nu: f64, t: f64, contour: LaplaceContour) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    Relaxation::new(nu, 1.0, Some(TimeProfile::OnePlusSinPi))?.evaluate(t, contour)
}

/// Truncated power series of the Mittag-Leffler function
/// `E_nu(z) = sum_k z^k / Gamma(1 + nu k)`.
pub fn mittag_leffler_series(nu: f64, z: f64, terms: usize) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for k in 0..terms {
        sum += power / gamma(1.0 + nu * k as f64);
        power *= z;
    }
    sum
}

/// `a(t)` for `nu = 1`, `lambda = 1`, `g = 1 + sin(pi t)`.
pub fn classical_relaxation(t: f64) -> f64 {
    let e = (-t).exp();
    e + (1.0 - e) + (PI * e + (PI * t).sin() - PI * (PI * t).cos()) / (1.0 + PI * PI)
}

/// The separable test problem on a grid: `u0 = phi_11`, `f = (1 + sin pi t) phi_11`.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    mode: FieldVector,
    amplitudes: Vec<f64>,
}

impl ReferenceSolution {
    /// Tabulates `a(t_n)`, `n = 0..=N`, with `lambda = K pi^2 dim`.
    pub fn new(grid: &SpatialGrid, mesh: &TimeMesh, nu: f64, contour: LaplaceContour) -> Result<Self> {
        let lambda = grid.diffusivity() * PI * PI * grid.dim() as f64;
        let problem = Relaxation::new(nu, lambda, Some(TimeProfile::OnePlusSinPi))?;
        let amplitudes = std::iter::once(Ok(1.0))
            .chain(mesh.levels()[1..].iter().map(|&t| problem.evaluate(t, contour)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mode: grid.sine_mode((1, 1)),
            amplitudes,
        })
    }

    pub fn amplitude(&self, n: usize) -> f64 {
        self.amplitudes[n]
    }

    /// Nodal values of `u(., t_n)`.
    pub fn field(&self, n: usize) -> FieldVector {
        let a = self.amplitudes[n];
        self.mode.iter().map(|v| a * v).collect()
    }

    /// `max_{x_m} |numeric_m - u(x_m, t_n)|`.
    pub fn nodal_error(&self, n: usize, numeric: &[f64]) -> f64 {
        let a = self.amplitudes[n];
        numeric
            .iter()
            .zip(&self.mode)
            .map(|(u, v)| (u - a * v).abs())
            .fold(0.0, f64::max)
    }
}

/// Nodal values of the exact solution at `t_n`.
pub fn exact_field(grid: &SpatialGrid, mesh: &TimeMesh, nu: f64, n: usize) -> Result<FieldVector> {
    if n > mesh.intervals() {
        return Err(invalid(format!("time level {n} outside 0..={}", mesh.intervals())));
    }
    let lambda = grid.diffusivity() * PI * PI * grid.dim() as f64;
    let a = if n == 0 {
        1.0
    } else {
        Relaxation::new(nu, lambda, Some(TimeProfile::OnePlusSinPi))?
            .evaluate(mesh.level(n), LaplaceContour::default())?
    };
    Ok(grid.sine_mode((1, 1)).into_iter().map(|v| a * v).collect())
}

/// `max_{n,m} |numeric[n][m] - exact[n][m]|`.
pub fn max_nodal_error(numeric: &[FieldVector], exact: &[FieldVector]) -> f64 {
    numeric
        .iter()
        .zip(exact)
        .flat_map(|(u, e)| u.iter().zip(e).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// `sum_{j=1}^{n-1} beta_nj U^j` with `values[j-1] = U^j`, summed in
/// ascending `j`.
pub fn direct_history_sum(weights: &WeightEngine, values: &[FieldVector], n: usize) -> Result<FieldVector> {
    if n == 0 || values.len() + 1 < n {
        return Err(invalid(format!(
            "history of step {n} needs {} stored values, got {}",
            n.saturating_sub(1),
            values.len()
        )));
    }
    let m = values.first().map_or(0, Vec::len);
    let mut out = vec![0.0; m];
    for j in 1..n {
        let beta = weights.offdiag(n, j)?;
        for (o, v) in out.iter_mut().zip(&values[j - 1]) {
            *o += beta * v;
        }
    }
    Ok(out)
}
