//! Atomic measures, tent test functions and the translation action.

use diffraction_lab::testfn::TestFunction;
use diffraction_lab::{Atom, AtomicMeasure, Complex64, Point};

fn main() -> diffraction_lab::Result<()> {
    let mu = AtomicMeasure::new(
        1,
        vec![
            Atom::unit(Point::d1(0.0)),
            Atom::new(Point::d1(1.0), Complex64::new(0.5, 0.5)),
            Atom::unit(Point::d1(2.5)),
        ],
    )?;
    let phi = TestFunction::tent(1.0)?;
    println!("pairing f_phi(mu) = {}", mu.pair(&phi)?);

    // f_phi(alpha_{-t} mu) = f_{phi_t}(mu)
    for t in [0.25, 0.5, 1.0] {
        let lhs = mu.translate(Point::d1(-t)).pair(&phi)?;
        let rhs = mu.pair(&phi.orbit_translate(Point::d1(t)))?;
        println!("t = {t}: {lhs:.6} vs {rhs:.6}");
    }

    let conv = mu.reflect().convolve(&mu)?;
    println!("mu~ * mu has {} atoms, mass at 0 = {}", conv.len(), conv.weight_at(&Point::ORIGIN));
    println!("phi^(0.5) = {:.6}, integral {}", phi.fourier(&Point::d1(0.5)).re, phi.integral());
    Ok(())
}
