//! The desk-scale comparison: direct summation against the fast method
//! for r = 4 and r = 5, with errors, timings and operation counts.
//! Pass a step count to change N (default 2000).
use fracdg::fem::{SineModeSource, TimeProfile};
use fracdg::reference::{LaplaceContour, ReferenceSolution};
use fracdg::{fast_run, slow_run, RunConfig, RunOptions};

fn main() -> fracdg::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let base = RunConfig {
        intervals: n,
        ..RunConfig::default()
    };
    let grid = base.grid()?;
    let reference = ReferenceSolution::new(&grid, &base.mesh()?, base.nu, LaplaceContour::default())?;
    let source = SineModeSource {
        modes: (1, 1),
        profile: TimeProfile::OnePlusSinPi,
    };
    let u0 = grid.sine_mode((1, 1));
    let opts = || RunOptions {
        reference: Some(&reference),
        ..Default::default()
    };
    let mut reports = vec![slow_run(&base, &source, &u0, opts())?.report];
    for r in [4, 5] {
        let cfg = RunConfig { r: Some(r), ..base.clone() };
        reports.push(fast_run(&cfg, &source, &u0, opts())?.report);
    }
    println!("{:<5} {:>3} {:>8} {:>12} {:>9} {:>9} {:>14} {:>12}", "mode", "r", "Q,G", "max error", "RHS s", "total s", "RHS ops", "peak values");
    for rep in &reports {
        println!(
            "{:<5} {:>3} {:>8} {:>12.4e} {:>9.3} {:>9.3} {:>14} {:>12}",
            rep.mode.to_string(),
            rep.expansion.map(|e| e.r().to_string()).unwrap_or_else(|| "-".into()),
            rep.shape.map(|(q, g)| format!("{q},{g}")).unwrap_or_else(|| "-".into()),
            rep.max_nodal_error.unwrap_or(f64::NAN),
            rep.rhs_s,
            rep.total_s,
            rep.rhs_ops(),
            rep.peak_values()
        );
    }
    Ok(())
}
