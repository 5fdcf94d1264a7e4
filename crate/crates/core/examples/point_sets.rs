//! Generate each kind of point set on a window and check that nested windows
//! see the same atoms.

use diffraction_lab::generators::{generate, restriction_consistency_check, GeneratorSpec};
use diffraction_lab::Window;

fn main() -> diffraction_lab::Result<()> {
    let window = Window::interval(-20.0, 20.0)?;
    let specs = [
        GeneratorSpec::lattice(1.0),
        GeneratorSpec::bernoulli(1.0, 0.5, 7),
        GeneratorSpec::random_displacement(1.0, 0.2, 3),
        GeneratorSpec::poisson(1.0, 11),
        GeneratorSpec::fibonacci(),
    ];
    for spec in &specs {
        let mu = generate(spec, &window)?;
        let first: Vec<String> = mu.positions().take(5).map(|p| format!("{:.3}", p.x())).collect();
        let nested = restriction_consistency_check(spec, &Window::interval(-5.0, 5.0)?, &window)?;
        println!(
            "{:<20} {:>3} atoms, density {:.3}, nested windows agree: {nested}, first: {}",
            format!("{:?}", spec.kind),
            mu.len(),
            mu.len() as f64 / window.volume(),
            first.join(" ")
        );
    }

    // columnar text round trip
    let mu = generate(&GeneratorSpec::fibonacci(), &Window::interval(0.0, 6.0)?)?;
    let mut buf = Vec::new();
    mu.write_columnar(&mut buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    Ok(())
}
