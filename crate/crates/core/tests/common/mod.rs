//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use fracdg::weights::gamma;
use fracdg::TimeMesh;
use rand::Rng;

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const K_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = K_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kron += K_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature with a relative tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let f: &dyn Fn(f64) -> f64 = &f;
    let (whole, _) = gk15(f, a, b);
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut comp = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        let local_tol = rel_tol * whole.abs() * (hi - lo) / (b - a);
        if err <= local_tol.max(1e-300) || depth >= 60 {
            let y = v - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// Off-diagonal weight by quadrature of its defining integral over the
/// source interval, written in `w = t_{n-1} - s`. The adjacent case
/// substitutes `w = v^(1/nu)` to remove the endpoint singularity.
pub fn beta_quadrature(nu: f64, mesh: &TimeMesh, n: usize, j: usize) -> f64 {
    assert!(j < n);
    let kn = mesh.step(n);
    let delta = mesh.level(n - 1) - mesh.level(j);
    let w_hi = mesh.level(n - 1) - mesh.level(j - 1);
    let g = gamma(nu);
    // 1 - (1 + k_n/w)^(nu-1), cancellation free.
    let gap = |w: f64| -((nu - 1.0) * (kn / w).ln_1p()).exp_m1();
    if j + 1 == n {
        let f = |v: f64| {
            if v <= 0.0 {
                1.0 / (nu * g)
            } else {
                gap(v.powf(1.0 / nu)) / (nu * g)
            }
        };
        integrate(f, 0.0, w_hi.powf(nu), 1e-15)
    } else {
        let f = |w: f64| w.powf(nu - 1.0) * gap(w) / g;
        integrate(f, delta, w_hi, 1e-15)
    }
}

/// Generalized binomial coefficient `mu choose k`.
pub fn binom(mu: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (mu - i as f64) / (i as f64 + 1.0))
}

/// `1 - (1-x)^mu` as the positive series `sum_k -binom(mu,k)(-x)^k`.
pub fn d_mu_series(mu: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    for k in (1..400).rev() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += -binom(mu, k) * sign * x.powi(k as i32);
    }
    sum
}

/// `omega_{1+mu}(t+k/2) - omega_{1+mu}(t-k/2)` by the odd part of the
/// binomial series of `(t +- k/2)^mu`.
pub fn b_mu_series(mu: f64, t: f64, k: f64) -> f64 {
    let z = 0.5 * k / t;
    let mut sum = 0.0;
    for p in (1..60).rev().filter(|p| p % 2 == 1) {
        sum += binom(mu, p) * z.powi(p as i32);
    }
    2.0 * t.powf(mu) * sum / gamma(1.0 + mu)
}

/// Uniform mesh with every interior level moved by up to `frac` of a step.
pub fn perturbed_mesh(n: usize, t: f64, frac: f64, rng: &mut impl Rng) -> TimeMesh {
    let k = t / n as f64;
    let mut levels: Vec<f64> = (0..=n).map(|i| i as f64 * k).collect();
    for level in levels.iter_mut().take(n).skip(1) {
        *level += rng.gen_range(-frac..frac) * 0.5 * k;
    }
    levels[n] = t;
    TimeMesh::from_levels(levels, 2.0).expect("perturbed mesh is quasiuniform")
}

/// Nodes of a binary bisection tree over `1..=n`, built without the
/// library, as `(lo, hi, is_leaf)`.
pub fn bisection_nodes(n: usize, depth: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    fn rec(lo: usize, hi: usize, d: usize, depth: usize, out: &mut Vec<(usize, usize, bool)>) {
        out.push((lo, hi, d == depth));
        if d < depth {
            let mid = lo + (hi - lo + 1) / 2 - 1;
            rec(lo, mid, d + 1, depth, out);
            rec(mid + 1, hi, d + 1, depth, out);
        }
    }
    rec(1, n, 0, depth, &mut out);
    out
}

/// All valid covers of the history `1..=leaf_lo-1` for a unit-step mesh:
/// partitions into tree nodes that are admissible or leaves.
pub fn enumerate_covers(
    nodes: &[(usize, usize, bool)],
    leaf: (usize, usize),
    eta: f64,
) -> Vec<Vec<(usize, usize)>> {
    let ok = |&(lo, hi, is_leaf): &(usize, usize, bool)| {
        if hi >= leaf.0 {
            return false;
        }
        let len = (hi - lo + 1) as f64;
        let dist = (leaf.0 - 1 - hi) as f64;
        is_leaf || len <= eta * dist
    };
    let usable: Vec<(usize, usize)> = nodes.iter().filter(|n| ok(n)).map(|n| (n.0, n.1)).collect();
    let mut covers = Vec::new();
    let mut current = Vec::new();
    fn rec(
        start: usize,
        end: usize,
        usable: &[(usize, usize)],
        current: &mut Vec<(usize, usize)>,
        covers: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if start > end {
            covers.push(current.clone());
            return;
        }
        for &(lo, hi) in usable.iter().filter(|c| c.0 == start) {
            current.push((lo, hi));
            rec(hi + 1, end, usable, current, covers);
            current.pop();
        }
    }
    rec(1, leaf.0 - 1, &usable, &mut current, &mut covers);
    covers
}
