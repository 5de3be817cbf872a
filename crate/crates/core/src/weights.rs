//! Kernel primitives and the DG quadrature weights.
//!
//! The memory kernel is `omega_nu(t) = t^(nu-1) / Gamma(nu)`. The diagonal
//! weight is `beta_nn = k_n^nu / Gamma(1+nu)` and for `j < n`
//!
//! ```text
//! beta_nj = int_{I_j} [omega_nu(t_{n-1} - s) - omega_nu(t_n - s)] ds > 0.
//! ```
//!
//! Every off-diagonal weight is a difference of nearly equal numbers when
//! the intervals are far apart, so the evaluation routes here avoid the
//! subtraction: a closed form for neighbouring intervals, an even power
//! series in the smaller step length otherwise, and a square-root form
//! when `nu = 1/2`.

use crate::error::{domain, invalid, Error, Result};
use crate::time_mesh::TimeMesh;

/// Gamma function (musl `tgamma`, accurate to a few ulp).
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Fractional order of the memory kernel, `0 < nu < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    nu: f64,
}

impl KernelParams {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(invalid(format!("fractional order must lie in (0, 1), got {nu}")));
        }
        Ok(Self { nu })
    }

    #[inline]
    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Truncation control for the separated-interval series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-15,
            max_terms: 50,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || max_terms == 0 {
            return Err(invalid("series control needs rel_tol > 0 and max_terms >= 1"));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

/// `omega_mu(t) = t^(mu-1) / Gamma(mu)` for `t > 0`.
pub fn omega(mu: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("omega needs t > 0, got {t}")));
    }
    if is_nonpositive_integer(mu) {
        return Err(domain(format!("Gamma has a pole at mu = {mu}")));
    }
    Ok(omega_unchecked(mu, t))
}

#[inline]
pub(crate) fn omega_unchecked(mu: f64, t: f64) -> f64 {
    t.powf(mu - 1.0) / gamma(mu)
}

/// `D_mu(x) = 1 - (1-x)^mu` for `0 <= x < 1`, free of cancellation near 0.
pub fn d_mu(mu: f64, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(domain(format!("D_mu needs 0 <= x < 1, got {x}")));
    }
    Ok(d_mu_unchecked(mu, x))
}

#[inline]
pub(crate) fn d_mu_unchecked(mu: f64, x: f64) -> f64 {
    -(mu * (-x).ln_1p()).exp_m1()
}

/// `B_mu(t, k) = omega_{1+mu}(t + k/2) - omega_{1+mu}(t - k/2)`.
///
/// For positive integer `mu` the difference is a polynomial and any real
/// `t` is accepted. Otherwise `t > k/2` is required and the value is
/// formed as `omega_{1+mu}(t + k/2) * D_mu(k / (t + k/2))`.
pub fn b_mu(mu: f64, t: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(domain(format!("B_mu needs k > 0, got {k}")));
    }
    if mu >= 1.0 && mu == mu.floor() {
        let p = mu as i32;
        let fact = gamma(mu + 1.0);
        return Ok(((t + 0.5 * k).powi(p) - (t - 0.5 * k).powi(p)) / fact);
    }
    if !(t > 0.5 * k) {
        return Err(domain(format!(
            "B_mu with non-integer order needs t > k/2 (t = {t}, k = {k})"
        )));
    }
    let upper = t + 0.5 * k;
    Ok(omega(1.0 + mu, upper)? * d_mu_unchecked(mu, k / upper))
}

/// `beta_nn = k_n^nu / Gamma(1 + nu)`.
pub fn beta_diag(params: KernelParams, mesh: &TimeMesh, n: usize) -> Result<f64> {
    mesh.check_interval(n)?;
    Ok(diag_weight(params.nu, mesh.step(n)))
}

#[inline]
fn diag_weight(nu: f64, k: f64) -> f64 {
    k.powf(nu) / gamma(1.0 + nu)
}

/// Off-diagonal weight `beta_nj`, `1 <= j <= n-1`.
pub fn beta_offdiag(
    params: KernelParams,
    mesh: &TimeMesh,
    ctl: SeriesControl,
    n: usize,
    j: usize,
) -> Result<f64> {
    mesh.check_interval(n)?;
    if j == 0 || j >= n {
        return Err(invalid(format!("off-diagonal weight needs 1 <= j < n (n = {n}, j = {j})")));
    }
    let nu = params.nu;
    let kn = mesh.step(n);
    let kj = mesh.step(j);
    if j + 1 == n {
        return Ok(beta_adjacent(nu, kj, kn));
    }
    let delta = 0.5 * (mesh.level(n - 1) + mesh.level(n)) - 0.5 * (mesh.level(j - 1) + mesh.level(j));
    separated_weight(nu, ctl, delta, kj, kn)
}

/// Weight coupling a source interval to a later, disjoint target interval.
///
/// `source = (s0, s1]`, `target = (t0, t1]` with `s1 <= t0`. This is the
/// mesh-free form of [`beta_offdiag`]; touching intervals use the closed
/// form, separated ones the series.
pub fn beta_pair(
    params: KernelParams,
    ctl: SeriesControl,
    source: (f64, f64),
    target: (f64, f64),
) -> Result<f64> {
    let (s0, s1) = source;
    let (t0, t1) = target;
    if !(s0 < s1 && s1 <= t0 && t0 < t1) {
        return Err(invalid(format!(
            "beta_pair needs s0 < s1 <= t0 < t1, got ({s0}, {s1}] and ({t0}, {t1}]"
        )));
    }
    let nu = params.nu;
    let (kj, kn) = (s1 - s0, t1 - t0);
    if s1 == t0 {
        return Ok(beta_adjacent(nu, kj, kn));
    }
    let delta = 0.5 * (t0 + t1) - 0.5 * (s0 + s1);
    separated_weight(nu, ctl, delta, kj, kn)
}

/// Non-touching intervals: the series when its limiting term ratio is at
/// most 1/2, otherwise the direct difference (which is then well
/// conditioned because the gap is small relative to the steps).
fn separated_weight(nu: f64, ctl: SeriesControl, delta: f64, kj: f64, kn: f64) -> Result<f64> {
    let ks = kj.min(kn);
    let kb = kj.max(kn);
    let ratio = (ks / (2.0 * delta - kb)).powi(2);
    if ratio <= 0.5 {
        beta_series(nu, ctl, delta, ks, kb)
    } else {
        Ok(beta_direct(nu, delta, kj, kn))
    }
}

/// Closed form for neighbouring intervals with lengths `k_a`, `k_b`:
/// `omega_{1+nu}(k_max) [1 + x^nu - (1+x)^nu]`, `x = k_min / k_max`.
pub fn beta_adjacent(nu: f64, k_a: f64, k_b: f64) -> f64 {
    let kmax = k_a.max(k_b);
    let x = k_a.min(k_b) / kmax;
    // (1+x)^nu - 1 = y^nu
    let y_nu = (nu * x.ln_1p()).exp_m1();
    let ln_y = y_nu.ln() / nu;
    let bracket = y_nu * (nu * (x.ln() - ln_y)).exp_m1();
    omega_unchecked(1.0 + nu, kmax) * bracket
}

/// Even-order series in the smaller step `k_small`.
///
/// `delta` is the distance between the interval midpoints and `k_big` the
/// other step. Terms are all positive; summation stops once the tail
/// bound `term * L / (1 - L)` drops below `rel_tol * sum`, where
/// `L = (k_small / (2 delta - k_big))^2` is the limiting term ratio.
pub fn beta_series(nu: f64, ctl: SeriesControl, delta: f64, k_small: f64, k_big: f64) -> Result<f64> {
    let limit = (k_small / (2.0 * delta - k_big)).powi(2);
    if !(2.0 * delta - k_big > 0.0) || limit >= 1.0 {
        return Err(Error::Convergence {
            terms: 0,
            last_ratio: limit,
        });
    }
    let s = delta + 0.5 * k_big;
    let x = k_big / s;
    let ln_1mx = (-x).ln_1p();
    let lead = s.powf(nu - 1.0) * k_small;
    let q = (k_small / (2.0 * s)).powi(2);
    let tail_factor = limit / (1.0 - limit);

    // c_p = 1 / (Gamma(nu - 2p) (2p+1)!)
    let mut c = 1.0 / gamma(nu);
    let mut qp = 1.0;
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let mut last_ratio = f64::NAN;
    for p in 0..ctl.max_terms {
        let mu = nu - 2.0 * p as f64 - 1.0;
        let minus_d = (mu * ln_1mx).exp_m1();
        let term = c * lead * qp * minus_d;
        sum += term;
        if p > 0 {
            last_ratio = term / prev;
        }
        if term * tail_factor <= ctl.rel_tol * sum {
            return Ok(sum);
        }
        prev = term;
        let pf = p as f64;
        c *= (nu - 2.0 * pf - 1.0) * (nu - 2.0 * pf - 2.0) / ((2.0 * pf + 2.0) * (2.0 * pf + 3.0));
        qp *= q;
    }
    Err(Error::Convergence {
        terms: ctl.max_terms,
        last_ratio,
    })
}

/// Direct difference `B_nu(delta - k_j/2, k_n) - B_nu(delta + k_j/2, k_n)`.
///
/// Accurate only when the steps are comparable to the gap; kept as an
/// independent route for cross-checks.
pub fn beta_direct(nu: f64, delta: f64, kj: f64, kn: f64) -> f64 {
    let b = |t: f64| {
        let upper = t + 0.5 * kn;
        omega_unchecked(1.0 + nu, upper) * d_mu_unchecked(nu, kn / upper)
    };
    b(delta - 0.5 * kj) - b(delta + 0.5 * kj)
}

/// Square-root form valid only for `nu = 1/2`.
pub fn beta_half(delta: f64, kj: f64, kn: f64) -> f64 {
    let (hj, hn) = (0.5 * kj, 0.5 * kn);
    let r_pp = (delta + hj + hn).sqrt();
    let r_pm = (delta + hj - hn).sqrt();
    let r_mp = (delta - hj + hn).sqrt();
    let r_mm = (delta - hj - hn).sqrt();
    let g = gamma(1.5);
    kn * kj / g / ((r_mp + r_mm) * (r_pp + r_pm)) * (1.0 / (r_pp + r_mp) + 1.0 / (r_pm + r_mm))
}

/// Weight evaluation bound to one mesh and kernel.
#[derive(Debug, Clone)]
pub struct WeightEngine {
    params: KernelParams,
    mesh: TimeMesh,
    ctl: SeriesControl,
    lags: Option<Vec<f64>>,
}

impl WeightEngine {
    pub fn new(params: KernelParams, mesh: TimeMesh, ctl: SeriesControl) -> Self {
        Self {
            params,
            mesh,
            ctl,
            lags: None,
        }
    }

    /// On a uniform mesh `beta_nj` depends only on `n - j`; tabulate the
    /// `N - 1` distinct values once so that later lookups are O(1).
    /// Other meshes are returned unchanged.
    pub fn with_lag_cache(mut self) -> Result<Self> {
        if !self.mesh.is_uniform() || self.lags.is_some() {
            return Ok(self);
        }
        let n = self.mesh.intervals();
        let k = self.mesh.step(1);
        let lags = (1..n)
            .map(|lag| {
                let t0 = lag as f64 * k;
                beta_pair(self.params, self.ctl, (0.0, k), (t0, t0 + k))
            })
            .collect::<Result<Vec<_>>>()?;
        self.lags = Some(lags);
        Ok(self)
    }

    pub fn has_lag_cache(&self) -> bool {
        self.lags.is_some()
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn control(&self) -> SeriesControl {
        self.ctl
    }

    pub fn diag(&self, n: usize) -> Result<f64> {
        beta_diag(self.params, &self.mesh, n)
    }

    pub fn offdiag(&self, n: usize, j: usize) -> Result<f64> {
        match &self.lags {
            Some(lags) if 1 <= j && j < n && n <= self.mesh.intervals() => Ok(lags[n - j - 1]),
            _ => beta_offdiag(self.params, &self.mesh, self.ctl, n, j),
        }
    }

    /// Every `beta_nj`, `j < n`, in a packed lower triangle.
    pub fn table(&self) -> Result<WeightTable> {
        let n_total = self.mesh.intervals();
        let mut values = Vec::with_capacity(n_total * n_total.saturating_sub(1) / 2);
        for n in 2..=n_total {
            for j in 1..n {
                values.push(self.offdiag(n, j)?);
            }
        }
        let diag = (1..=n_total).map(|n| self.diag(n)).collect::<Result<_>>()?;
        Ok(WeightTable { diag, values })
    }
}

/// Dense storage of all weights for the direct scheme.
#[derive(Debug, Clone)]
pub struct WeightTable {
    diag: Vec<f64>,
    values: Vec<f64>,
}

impl WeightTable {
    pub fn intervals(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self, n: usize) -> f64 {
        self.diag[n - 1]
    }

    /// `beta_n1 .. beta_{n,n-1}`.
    pub fn row(&self, n: usize) -> &[f64] {
        let start = (n - 1) * (n.saturating_sub(2)) / 2;
        &self.values[start..start + n - 1]
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.row(n)[j - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(1.0, 0.37).unwrap(), 1.0);
        assert!(close(omega(2.0, 0.5).unwrap(), 0.5, 1e-15));
        assert!(close(omega(1.5, 1.0).unwrap(), 1.1283791670955126, 1e-15));
        assert!(omega(0.5, 0.0).is_err());
        assert!(omega(-1.0, 1.0).is_err());
        assert!(omega(0.0, 1.0).is_err());
    }

    #[test]
    fn d_mu_examples() {
        assert_eq!(d_mu(0.3, 0.0).unwrap(), 0.0);
        assert!(close(d_mu(1.0, 0.25).unwrap(), 0.25, 1e-15));
        assert!(d_mu(0.5, 1.0).is_err());
        assert!(d_mu(0.5, -0.1).is_err());
    }

    #[test]
    fn b_mu_examples() {
        assert!(close(b_mu(1.0, 5.0, 0.1).unwrap(), 0.1, 1e-14));
        assert!(close(b_mu(2.0, 3.0, 2.0).unwrap(), 6.0, 1e-15));
        // integer branch accepts t <= k/2
        assert_eq!(b_mu(2.0, 0.0, 2.0).unwrap(), 0.0);
        assert!(close(b_mu(3.0, -0.5, 1.0).unwrap(), (0.0 - (-1.0f64).powi(3)) / 6.0, 1e-15));
        assert!(b_mu(0.5, 0.4, 1.0).is_err());
    }

    #[test]
    fn diag_examples() {
        let params = KernelParams::new(0.5).unwrap();
        let mesh = TimeMesh::uniform(3, 3.0).unwrap();
        assert!(close(beta_diag(params, &mesh, 2).unwrap(), 1.1283791670955126, 1e-15));
        let p = KernelParams::new(0.3).unwrap();
        assert!(close(beta_diag(p, &mesh, 1).unwrap(), 1.0 / gamma(1.3), 1e-15));
        assert!(beta_diag(params, &mesh, 4).is_err());
    }

    #[test]
    fn small_uniform_weights() {
        let params = KernelParams::new(0.5).unwrap();
        let mesh = TimeMesh::uniform(3, 3.0).unwrap();
        let ctl = SeriesControl::default();
        let g = gamma(1.5);
        let b21 = beta_offdiag(params, &mesh, ctl, 2, 1).unwrap();
        assert!(close(b21, (2.0 - 2f64.sqrt()) / g, 1e-14));
        assert!(close(b21, 0.6609892125852943, 1e-14));
        let b31 = beta_offdiag(params, &mesh, ctl, 3, 1).unwrap();
        let expect = (2.0 * 2f64.sqrt() - 1.0 - 3f64.sqrt()) / g;
        assert!(close(b31, expect, 1e-13), "{b31} vs {expect}");
        assert!(close(b31, 0.10874902850426948, 1e-13));
        assert!(beta_offdiag(params, &mesh, ctl, 2, 2).is_err());
        assert!(beta_offdiag(params, &mesh, ctl, 2, 0).is_err());
    }

    #[test]
    fn routes_agree() {
        for &(delta, kj, kn) in &[(2.0, 1.0, 1.0), (5.5, 1.0, 1.0), (3.1, 0.8, 1.2), (40.0, 1.0, 1.3)] {
            let half = beta_half(delta, kj, kn);
            let series = beta_series(0.5, SeriesControl::default(), delta, kj.min(kn), kj.max(kn)).unwrap();
            let direct = beta_direct(0.5, delta, kj, kn);
            assert!(close(series, half, 1e-13), "{series} {half}");
            assert!(close(direct, half, 1e-11), "{direct} {half}");
        }
    }

    #[test]
    fn series_reports_divergence() {
        // touching intervals: limiting ratio is 1
        let err = beta_series(0.5, SeriesControl::default(), 1.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
        let tight = SeriesControl::new(1e-15, 2).unwrap();
        let err = beta_series(0.5, tight, 2.0, 1.0, 1.0).unwrap_err();
        match err {
            Error::Convergence { terms, last_ratio } => {
                assert_eq!(terms, 2);
                assert!(last_ratio > 0.0 && last_ratio <= 1.0 / 9.0, "{last_ratio}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_matches_engine() {
        let params = KernelParams::new(0.75).unwrap();
        let mesh = TimeMesh::uniform(9, 1.0).unwrap();
        let engine = WeightEngine::new(params, mesh, SeriesControl::default());
        let table = engine.table().unwrap();
        for n in 2..=9 {
            assert_eq!(table.row(n).len(), n - 1);
            for j in 1..n {
                assert_eq!(table.get(n, j), engine.offdiag(n, j).unwrap());
            }
        }
    }

    #[test]
    fn lag_cache_agrees_with_direct_dispatch() {
        let params = KernelParams::new(0.5).unwrap();
        let mesh = TimeMesh::uniform(200, 6.0).unwrap();
        let plain = WeightEngine::new(params, mesh, SeriesControl::default());
        let cached = plain.clone().with_lag_cache().unwrap();
        assert!(cached.has_lag_cache());
        for n in [2, 3, 17, 200] {
            for j in 1..n {
                let a = plain.offdiag(n, j).unwrap();
                let b = cached.offdiag(n, j).unwrap();
                assert!((a - b).abs() <= 1e-13 * a, "n={n} j={j}");
            }
        }
        assert!(cached.offdiag(3, 3).is_err());
    }
}
