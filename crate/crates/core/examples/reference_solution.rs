//! The exact amplitude of the test problem by contour quadrature, with its
//! error estimate, against the Mittag-Leffler series and the nu = 1 limit.
use fracdg::fem::TimeProfile;
use fracdg::reference::{classical_relaxation, mittag_leffler_series, u11, LaplaceContour, Relaxation};

fn main() -> fracdg::Result<()> {
    let contour = LaplaceContour::default();
    println!("{:>5} {:>18} {:>12}", "t", "u11 (nu = 1/2)", "estimate");
    let relax = Relaxation::new(0.5, 1.0, Some(TimeProfile::OnePlusSinPi))?;
    for t in [0.01, 0.5, 1.0, 2.0, 4.0, 6.0] {
        let (v, est) = relax.evaluate_with_estimate(t, contour)?;
        assert_eq!(v, u11(0.5, t, contour)?);
        println!("{t:>5} {v:>18.12} {est:>12.2e}");
    }
    let free = Relaxation::new(0.5, 1.0, None)?;
    let t: f64 = 0.7;
    println!(
        "no source, t = {t}: contour {:.14}, series {:.14}",
        free.evaluate(t, contour)?,
        mittag_leffler_series(0.5, -t.sqrt(), 200)
    );
    let classical = Relaxation::new(1.0, 1.0, Some(TimeProfile::OnePlusSinPi))?;
    println!(
        "nu = 1, t = 3: contour {:.14}, closed form {:.14}",
        classical.evaluate(3.0, contour)?,
        classical_relaxation(3.0)
    );
    Ok(())
}
