//! Bernoulli site occupation with p = 1/2: Bragg intensity p^2 at the
//! integers and a flat background p(1 - p), estimated over replicates.

use diffraction_lab::diffraction::ensemble_intensity;
use diffraction_lab::generators::GeneratorSpec;
use diffraction_lab::{Point, Window};

fn main() -> diffraction_lab::Result<()> {
    let p = 0.5;
    let spec = GeneratorSpec::bernoulli(1.0, p, 1);
    let b = Window::interval(-400.0, 400.0)?;
    let bragg = ensemble_intensity(&spec, &b, &Point::d1(1.0), 32, true)?;
    println!(
        "bragg at 1: {:.5} ± {:.5} (expected {})",
        bragg.mean.re,
        bragg.std_error,
        p * p
    );
    for lambda in [0.37, 0.5, 1.25] {
        let bg = ensemble_intensity(&spec, &b, &Point::d1(lambda), 32, true)?;
        println!(
            "background at {lambda}: {:.4} ± {:.4} (expected {})",
            bg.mean.re * b.volume(),
            bg.std_error * b.volume(),
            p * (1.0 - p)
        );
    }
    Ok(())
}
