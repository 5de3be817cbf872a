//! Operation counts and peak stored values of the fast method on binary
//! trees with one interval per leaf, for growing N.
use fracdg::fem::ZeroSource;
use fracdg::{fast_run, slow_run, RunConfig, RunOptions};

fn main() -> fracdg::Result<()> {
    println!("{:>6} {:>14} {:>14} {:>12} {:>12}", "N", "fast RHS ops", "slow RHS ops", "fast peak", "slow peak");
    for n in [256usize, 512, 1024, 2048, 4096] {
        let slow_cfg = RunConfig {
            intervals: n,
            dim: 1,
            subdivisions: 8,
            ..RunConfig::default()
        };
        let fast_cfg = RunConfig {
            r: Some(5),
            branching: Some(2),
            depth: Some(n.trailing_zeros() as usize),
            ..slow_cfg.clone()
        };
        let u0 = slow_cfg.grid()?.sine_mode((1, 1));
        let fast = fast_run(&fast_cfg, &ZeroSource, &u0, RunOptions::default())?.report;
        let slow = slow_run(&slow_cfg, &ZeroSource, &u0, RunOptions::default())?.report;
        println!(
            "{n:>6} {:>14} {:>14} {:>12} {:>12}",
            fast.rhs_ops(),
            slow.rhs_ops(),
            fast.peak_values(),
            slow.peak_values()
        );
    }
    Ok(())
}
