mod common;

use common::{b_mu_series, beta_quadrature, d_mu_series, perturbed_mesh};
use fracdg::weights::{b_mu, beta_diag, beta_direct, beta_half, beta_offdiag, beta_series, d_mu, gamma, omega};
use fracdg::{KernelParams, SeriesControl, TimeMesh, WeightEngine};
use proptest::prelude::*;
use rand::{rngs::StdRng, SeedableRng};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn row_sum_identity(nu: f64, mesh: &TimeMesh, n: usize) -> f64 {
    let tn = mesh.level(n);
    let kn = mesh.step(n);
    // k^nu - (t_n^nu - t_{n-1}^nu), with the bracket formed without cancellation.
    let bracket = tn.powf(nu) * -((nu * (-kn / tn).ln_1p()).exp_m1());
    (kn.powf(nu) - bracket) / gamma(nu + 1.0)
}

fn column_sum_identity(nu: f64, mesh: &TimeMesh, j: usize) -> f64 {
    let t = mesh.final_time();
    let a = t - mesh.level(j - 1);
    let kj = mesh.step(j);
    let bracket = a.powf(nu) * -((nu * (-kj / a).ln_1p()).exp_m1());
    (kj.powf(nu) - bracket) / gamma(nu + 1.0)
}

#[test]
fn primitive_examples() {
    assert_eq!(omega(1.0, 0.37).unwrap(), 1.0);
    assert!((omega(2.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
    assert!(rel(omega(1.5, 1.0).unwrap(), 2.0 / std::f64::consts::PI.sqrt()) < 1e-15);
    assert_eq!(d_mu(0.3, 0.0).unwrap(), 0.0);
    assert!((d_mu(1.0, 0.25).unwrap() - 0.25).abs() < 1e-16);
    assert!(rel(d_mu(0.5, 1e-12).unwrap(), d_mu_series(0.5, 1e-12)) < 1e-14);
    assert!((b_mu(1.0, 5.0, 0.1).unwrap() - 0.1).abs() < 1e-15);
    assert!((b_mu(2.0, 3.0, 2.0).unwrap() - 6.0).abs() < 1e-14);
    assert!(rel(b_mu(-0.5, 10.0, 1e-6).unwrap(), b_mu_series(-0.5, 10.0, 1e-6)) < 1e-10);
    assert!(d_mu(0.5, 1.0).is_err() && d_mu(0.5, -0.1).is_err());
    assert!(b_mu(0.5, 0.1, 0.4).is_err());
    assert!(omega(0.5, 0.0).is_err() && omega(-1.0, 1.0).is_err());
}

#[test]
fn weight_examples() {
    let p = KernelParams::new(0.5).unwrap();
    let unit = TimeMesh::uniform(4, 4.0).unwrap();
    let g = gamma(1.5);
    assert!(rel(beta_diag(p, &unit, 1).unwrap(), 1.0 / g) < 1e-15);
    let ctl = SeriesControl::default();
    assert!(rel(beta_offdiag(p, &unit, ctl, 2, 1).unwrap(), (2.0 - 2f64.sqrt()) / g) < 1e-14);
    let expected = (2.0 * 2f64.sqrt() - 1.0 - 3f64.sqrt()) / g;
    assert!(rel(beta_offdiag(p, &unit, ctl, 3, 1).unwrap(), expected) < 1e-13);
    let fine = TimeMesh::uniform(16000, 6.0).unwrap();
    assert!(rel(beta_diag(p, &fine, 7).unwrap(), 3.75e-4f64.sqrt() / g) < 1e-14);

    let mesh = TimeMesh::uniform(64, 1.0).unwrap();
    let p = KernelParams::new(0.75).unwrap();
    let b = beta_offdiag(p, &mesh, ctl, 40, 3).unwrap();
    assert!(rel(b, beta_quadrature(0.75, &mesh, 40, 3)) < 1e-12);
}

#[test]
fn every_weight_matches_quadrature() {
    let mut rng = StdRng::seed_from_u64(7);
    for &nu in &[0.25, 0.5, 0.75] {
        for mesh in [TimeMesh::uniform(64, 1.0).unwrap(), perturbed_mesh(64, 1.0, 0.2, &mut rng)] {
            let engine = WeightEngine::new(KernelParams::new(nu).unwrap(), mesh.clone(), SeriesControl::default());
            let mut worst = 0.0f64;
            for n in 2..=64 {
                for j in 1..n {
                    worst = worst.max(rel(engine.offdiag(n, j).unwrap(), beta_quadrature(nu, &mesh, n, j)));
                }
            }
            assert!(worst <= 1e-12, "nu = {nu}: worst relative error {worst:.2e}");
        }
    }
}

#[test]
fn series_truncation_failure_reports_ratio() {
    let ctl = SeriesControl::new(1e-15, 2).unwrap();
    match beta_series(0.5, ctl, 3.0, 1.0, 1.0) {
        Err(fracdg::Error::Convergence { terms, last_ratio }) => {
            assert_eq!(terms, 2);
            assert!(last_ratio > 0.0 && last_ratio < 1.0);
        }
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn row_and_column_sums(nu in 0.05f64..0.95, n in 2usize..80, seed in any::<u64>(), perturb in any::<bool>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mesh = if perturb { perturbed_mesh(n, 1.7, 0.2, &mut rng) } else { TimeMesh::uniform(n, 1.7).unwrap() };
        let engine = WeightEngine::new(KernelParams::new(nu).unwrap(), mesh.clone(), SeriesControl::default());
        let table = engine.table().unwrap();
        for m in 2..=n {
            let row: f64 = (1..m).map(|j| table.get(m, j)).sum();
            prop_assert!(rel(row, row_sum_identity(nu, &mesh, m)) < 1e-12, "row {m}");
        }
        for j in 1..n {
            let col: f64 = (j + 1..=n).map(|m| table.get(m, j)).sum();
            prop_assert!(rel(col, column_sum_identity(nu, &mesh, j)) < 1e-12, "column {j}");
        }
        for m in 1..=n {
            prop_assert!(table.diag(m) > 0.0);
            for j in 1..m {
                prop_assert!(table.get(m, j) > 0.0);
            }
        }
    }

    #[test]
    fn branches_agree(kj in 0.5f64..1.5, kn in 0.5f64..1.5, gap in 3.0f64..12.0) {
        let delta = gap + 0.5 * (kj + kn);
        let ctl = SeriesControl::default();
        let series = beta_series(0.5, ctl, delta, kj.min(kn), kj.max(kn)).unwrap();
        prop_assert!(rel(beta_half(delta, kj, kn), series) < 1e-12);
        prop_assert!(rel(beta_direct(0.5, delta, kj, kn), series) < 1e-12);
        for nu in [0.25, 0.75] {
            let s = beta_series(nu, ctl, delta, kj.min(kn), kj.max(kn)).unwrap();
            prop_assert!(rel(beta_direct(nu, delta, kj, kn), s) < 1e-12);
        }
    }

    #[test]
    fn d_mu_matches_binomial_series(mu in 0.01f64..0.99, x in 1e-14f64..0.3) {
        prop_assert!(rel(d_mu(mu, x).unwrap(), d_mu_series(mu, x)) < 1e-14);
    }

    #[test]
    fn lag_cache_matches_direct(nu in 0.1f64..0.9, n in 2usize..200) {
        let mesh = TimeMesh::uniform(n, 3.0).unwrap();
        let plain = WeightEngine::new(KernelParams::new(nu).unwrap(), mesh, SeriesControl::default());
        let cached = plain.clone().with_lag_cache().unwrap();
        for j in 1..n {
            prop_assert!(rel(cached.offdiag(n, j).unwrap(), plain.offdiag(n, j).unwrap()) < 1e-13);
        }
    }
}
