//! Rank-`r` degenerate approximation of the weights for well separated
//! interval pairs.
//!
//! For a source interval inside `(a, b]` and a target interval inside
//! `(c, d]` with `(b - a) <= eta (c - b)`, expanding the kernel about
//! `sbar = (a + b) / 2` gives
//!
//! ```text
//! beta_nj ~ sum_{p=1}^{r} phi_pn psi_pj
//! |error| <= 2^(2-nu) (r+1) (eta/2)^r beta_nj
//! ```
//!
//! `phi` depends only on the target interval and `sbar`, `psi` only on the
//! source interval and `sbar`.

use crate::error::{domain, invalid, Result};
use crate::time_mesh::TimeMesh;
use crate::weights::{d_mu_unchecked, gamma, KernelParams};

/// Expansion order and admissibility parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionParams {
    r: usize,
    eta: f64,
}

impl ExpansionParams {
    pub fn new(r: usize, eta: f64) -> Result<Self> {
        if r == 0 {
            return Err(invalid("expansion order must be at least 1"));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(format!("admissibility parameter must lie in (0, 1], got {eta}")));
        }
        Ok(Self { r, eta })
    }

    /// Order `r` with the cost-optimal `eta = 2 exp(-(r+2)/(r+1))`.
    pub fn optimal(r: usize) -> Result<Self> {
        Self::new(r, optimal_eta(r))
    }

    /// The `eta -> 0+` limit: no cluster is ever admissible, so every
    /// weight is evaluated exactly.
    pub fn exact_only(r: usize) -> Result<Self> {
        Self::new(r, f64::MIN_POSITIVE)
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `(r+1) (eta/2)^r`, the rank-dependent factor of the error bound.
    pub fn error_factor(&self) -> f64 {
        (self.r as f64 + 1.0) * (0.5 * self.eta).powi(self.r as i32)
    }

    /// Relative error bound `2^(2-nu) (r+1) (eta/2)^r`.
    pub fn relative_bound(&self, nu: f64) -> f64 {
        2f64.powf(2.0 - nu) * self.error_factor()
    }
}

/// `eta` minimising `r / eta` at fixed `(r+1)(eta/2)^r`.
pub fn optimal_eta(r: usize) -> f64 {
    let r = r as f64;
    2.0 * (-(r + 2.0) / (r + 1.0)).exp()
}

/// Expansion centre of a source cluster `(a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarBasis {
    pub sbar: f64,
    pub r: usize,
}

impl FarBasis {
    pub fn new(a: f64, b: f64, r: usize) -> Self {
        Self {
            sbar: 0.5 * (a + b),
            r,
        }
    }

    pub fn phi(&self, kernel: KernelParams, t0: f64, t1: f64, out: &mut [f64]) -> Result<()> {
        phi_into(kernel, self.sbar, t0, t1, &mut out[..self.r])
    }

    pub fn psi(&self, s0: f64, s1: f64, out: &mut [f64]) {
        psi_into(self.sbar, s0, s1, &mut out[..self.r])
    }
}

/// Target-side coefficients `phi_1n .. phi_rn` for `I_n` of `mesh`.
pub fn phi_coeffs(kernel: KernelParams, mesh: &TimeMesh, r: usize, sbar: f64, n: usize) -> Result<Vec<f64>> {
    mesh.check_interval(n)?;
    let mut out = vec![0.0; r];
    phi_into(kernel, sbar, mesh.level(n - 1), mesh.level(n), &mut out)?;
    Ok(out)
}

/// Source-side coefficients `psi_1j .. psi_rj` for `I_j` of `mesh`.
pub fn psi_coeffs(mesh: &TimeMesh, r: usize, sbar: f64, j: usize) -> Result<Vec<f64>> {
    mesh.check_interval(j)?;
    let mut out = vec![0.0; r];
    psi_into(sbar, mesh.level(j - 1), mesh.level(j), &mut out);
    Ok(out)
}

/// `phi_pn = kappa_pn D_{p-nu}(x)` with `x = k_n / (t1 - sbar)` and
/// `kappa_{p+1} = (p - nu) / (t0 - sbar) * kappa_p`.
///
/// Target interval `(t0, t1]`; requires `t0 > sbar`.
pub fn phi_into(kernel: KernelParams, sbar: f64, t0: f64, t1: f64, out: &mut [f64]) -> Result<()> {
    let near = t0 - sbar;
    if !(near > 0.0) {
        return Err(domain(format!(
            "target interval must start right of the expansion centre (t0 = {t0}, sbar = {sbar})"
        )));
    }
    let nu = kernel.nu();
    let x = (t1 - t0) / (t1 - sbar);
    let mut kappa = near.powf(nu - 1.0) / gamma(nu);
    for (p, slot) in out.iter_mut().enumerate() {
        let p = (p + 1) as f64;
        *slot = kappa * d_mu_unchecked(p - nu, x);
        kappa *= (p - nu) / near;
    }
    Ok(())
}

/// `psi_pj = int_{I_j} (s - sbar)^(p-1) / (p-1)! ds` by the recursion
/// `psi_{p+1} = ((s0 - sbar) psi_p + k (s1 - sbar)^p / p!) / (p + 1)`.
///
/// Valid for any position of `sbar`.
pub fn psi_into(sbar: f64, s0: f64, s1: f64, out: &mut [f64]) {
    let k = s1 - s0;
    let lo = s0 - sbar;
    let hi = s1 - sbar;
    let mut psi = k;
    // hi^p / p!
    let mut hi_pow = hi;
    for (p, slot) in out.iter_mut().enumerate() {
        *slot = psi;
        let p1 = (p + 1) as f64;
        psi = (lo * psi + k * hi_pow) / (p1 + 1.0);
        hi_pow *= hi / (p1 + 1.0);
    }
}

/// `sum_p phi_p psi_p`.
pub fn tilde_beta(phi: &[f64], psi: &[f64]) -> Result<f64> {
    if phi.len() != psi.len() {
        return Err(invalid(format!(
            "coefficient lengths differ ({} vs {})",
            phi.len(),
            psi.len()
        )));
    }
    Ok(phi.iter().zip(psi).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::b_mu;

    #[test]
    fn optimal_eta_values() {
        assert!((optimal_eta(4) - 0.6024).abs() < 5e-5);
        assert!((optimal_eta(5) - 0.6228).abs() < 5e-5);
        assert!((optimal_eta(6) - 0.6378).abs() < 5e-5);
    }

    #[test]
    fn params_validation() {
        assert!(ExpansionParams::new(0, 0.5).is_err());
        assert!(ExpansionParams::new(3, 0.0).is_err());
        assert!(ExpansionParams::new(3, 1.5).is_err());
        assert!(ExpansionParams::new(3, 1.0).is_ok());
    }

    #[test]
    fn first_phi_matches_b_mu() {
        let kernel = KernelParams::new(0.5).unwrap();
        let mut phi = [0.0; 1];
        phi_into(kernel, 0.0, 4.0, 5.0, &mut phi).unwrap();
        let direct = -b_mu(-0.5, 4.5, 1.0).unwrap();
        assert!(phi[0] > 0.0);
        assert!((phi[0] - direct).abs() <= 1e-14 * direct);
    }

    #[test]
    fn kappa_ratio_is_exact() {
        // phi_p / D_{p-nu}(x) recovers kappa_p
        let kernel = KernelParams::new(0.3).unwrap();
        let (sbar, t0, t1) = (0.25, 3.0, 3.5);
        let mut phi = [0.0; 6];
        phi_into(kernel, sbar, t0, t1, &mut phi).unwrap();
        let x = (t1 - t0) / (t1 - sbar);
        for p in 1..6 {
            let kp = phi[p - 1] / d_mu_unchecked(p as f64 - 0.3, x);
            let kq = phi[p] / d_mu_unchecked(p as f64 + 1.0 - 0.3, x);
            let ratio = (p as f64 - 0.3) / (t0 - sbar);
            assert!((kq / kp - ratio).abs() <= 1e-14 * ratio);
        }
    }

    #[test]
    fn phi_requires_separation() {
        let kernel = KernelParams::new(0.5).unwrap();
        let mut phi = [0.0; 2];
        assert!(phi_into(kernel, 1.0, 1.0, 2.0, &mut phi).is_err());
    }

    #[test]
    fn psi_examples() {
        let mut psi = [0.0; 4];
        psi_into(0.0, 0.0, 1.0, &mut psi);
        assert_eq!(psi[0], 1.0);
        assert_eq!(psi[1], 0.5);
        // centred source: odd moments vanish
        psi_into(2.5, 2.0, 3.0, &mut psi);
        assert_eq!(psi[0], 1.0);
        assert!(psi[1].abs() < 1e-15);
        assert!(psi[3].abs() < 1e-15);
        // psi_p = B_p(t_mid - sbar, k)
        psi_into(-1.0, 2.0, 2.5, &mut psi);
        for p in 1..=4 {
            let b = b_mu(p as f64, 3.25, 0.5).unwrap();
            assert!((psi[p - 1] - b).abs() <= 1e-13 * b.abs(), "p={p}");
        }
    }

    #[test]
    fn tilde_beta_inner_product() {
        assert_eq!(tilde_beta(&[2.0], &[3.0]).unwrap(), 6.0);
        assert!(tilde_beta(&[1.0, 2.0], &[1.0]).is_err());
    }
}
