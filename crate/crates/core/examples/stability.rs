//! Automatic choice of (r, eta) and the perturbation-sum stability check,
//! followed by a source-free run whose norm must not grow.
use fracdg::fem::ZeroSource;
use fracdg::stepper::{select_params, stability_diagnostic};
use fracdg::{fast_run, ClusterTree, RunConfig, RunOptions};

fn main() -> fracdg::Result<()> {
    let cfg = RunConfig {
        intervals: 256,
        ..RunConfig::default()
    };
    let mesh = cfg.mesh()?;
    let sel = select_params(cfg.nu, &mesh, cfg.accuracy_constant)?;
    let (q, g) = cfg.tree_shape(sel.expansion)?;
    println!(
        "r = {}, eta = {:.4}, Q = {q}, G = {g}; thresholds: stability {:.3e}, accuracy {:.3e}",
        sel.expansion.r(),
        sel.expansion.eta(),
        sel.stability_threshold,
        sel.accuracy_threshold
    );
    let tree = ClusterTree::build_uniform(&mesh, q, g)?;
    let diag = stability_diagnostic(&cfg.weights()?, &tree, sel.expansion)?;
    println!("row ratio {:.3e}, column ratio {:.3e}, certified {}", diag.row_ratio, diag.column_ratio, diag.certified());

    let grid = cfg.grid()?;
    let u0 = grid.sine_mode((2, 1));
    let out = fast_run(&cfg, &ZeroSource, &u0, RunOptions { keep_values: true, ..Default::default() })?;
    let norms: Vec<f64> = out.values.iter().map(|v| grid.l2_norm(v)).collect();
    let monotone = norms.windows(2).all(|w| w[1] <= w[0]);
    println!("|U^0| = {:.6}, |U^N| = {:.6}, nonincreasing: {monotone}", grid.l2_norm(&u0), norms[norms.len() - 1]);
    Ok(())
}
