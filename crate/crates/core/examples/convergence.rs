//! First-order convergence in time of the direct scheme until the spatial
//! error floor takes over.
use fracdg::fem::{SineModeSource, TimeProfile};
use fracdg::reference::{LaplaceContour, ReferenceSolution};
use fracdg::{slow_run, RunConfig, RunOptions};

fn main() -> fracdg::Result<()> {
    let source = SineModeSource {
        modes: (1, 1),
        profile: TimeProfile::OnePlusSinPi,
    };
    let mut prev: Option<f64> = None;
    println!("{:>6} {:>12} {:>7}", "N", "max error", "ratio");
    for n in [16usize, 32, 64, 128, 256, 512, 1024] {
        let cfg = RunConfig {
            intervals: n,
            ..RunConfig::default()
        };
        let grid = cfg.grid()?;
        let reference = ReferenceSolution::new(&grid, &cfg.mesh()?, cfg.nu, LaplaceContour::default())?;
        let opts = RunOptions {
            reference: Some(&reference),
            ..Default::default()
        };
        let err = slow_run(&cfg, &source, &grid.sine_mode((1, 1)), opts)?.report.max_nodal_error.unwrap();
        let ratio = prev.map(|p| format!("{:.3}", p / err)).unwrap_or_default();
        println!("{n:>6} {err:>12.4e} {ratio:>7}");
        prev = Some(err);
    }
    Ok(())
}
