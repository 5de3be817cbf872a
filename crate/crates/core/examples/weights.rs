//! Quadrature weights on a uniform mesh: diagonal, nearest neighbours and
//! the decay of a row, plus the row-sum identity.
use fracdg::weights::gamma;
use fracdg::{KernelParams, SeriesControl, TimeMesh, WeightEngine};

fn main() -> fracdg::Result<()> {
    let nu = 0.5;
    let mesh = TimeMesh::uniform(64, 1.0)?;
    let engine = WeightEngine::new(KernelParams::new(nu)?, mesh.clone(), SeriesControl::default()).with_lag_cache()?;
    let n = 64;
    println!("beta_nn = {:.10e}", engine.diag(n)?);
    for j in [63, 62, 48, 32, 1] {
        println!("beta_{n},{j:<2} = {:.10e}", engine.offdiag(n, j)?);
    }
    let row: f64 = (1..n).map(|j| engine.offdiag(n, j)).sum::<fracdg::Result<f64>>()?;
    let (t, k) = (mesh.level(n), mesh.step(n));
    let identity = (k.powf(nu) - (t.powf(nu) - (t - k).powf(nu))) / gamma(nu + 1.0);
    println!("row sum {row:.15e}, closed form {identity:.15e}");
    Ok(())
}
