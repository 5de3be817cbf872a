//! Rank-r far-field weights against exact ones for one well separated
//! pair of intervals, with the a priori relative bound.
use fracdg::taylor::{phi_into, psi_into, tilde_beta};
use fracdg::weights::beta_pair;
use fracdg::{ExpansionParams, KernelParams, SeriesControl};

fn main() -> fracdg::Result<()> {
    let nu = 0.5;
    let kernel = KernelParams::new(nu)?;
    let source = (0.0, 0.1);
    let target = (0.35, 0.4);
    let sbar = 0.05;
    let exact = beta_pair(kernel, SeriesControl::default(), source, target)?;
    println!("exact beta = {exact:.12e}");
    println!("{:>3} {:>8} {:>12} {:>12}", "r", "eta", "rel error", "bound");
    for r in 1..=8 {
        let e = ExpansionParams::optimal(r)?;
        let (mut phi, mut psi) = (vec![0.0; r], vec![0.0; r]);
        phi_into(kernel, sbar, target.0, target.1, &mut phi)?;
        psi_into(sbar, source.0, source.1, &mut psi);
        let err = (tilde_beta(&phi, &psi)? - exact).abs() / exact;
        println!("{r:>3} {:>8.4} {err:>12.3e} {:>12.3e}", e.eta(), e.relative_bound(nu));
    }
    Ok(())
}
