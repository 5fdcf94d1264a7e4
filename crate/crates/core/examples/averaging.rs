//! Van Hove diagnostics of centred boxes and Birkhoff averages of an
//! observable along the orbit of the Fibonacci chain.

use diffraction_lab::averaging::{birkhoff_average, vanhove_diagnostics, BoxSequence};
use diffraction_lab::generators::{GeneratorSpec, Patch};
use diffraction_lab::observable::Observable;
use diffraction_lab::testfn::TestFunction;
use diffraction_lab::Window;

fn main() -> diffraction_lab::Result<()> {
    let seq = BoxSequence::cubes(1, &[10.0, 20.0, 40.0, 80.0, 160.0])?;
    let k = Window::interval(-1.0, 1.0)?;
    let patch = Patch::generate(&GeneratorSpec::fibonacci(), &Window::interval(-165.0, 165.0)?)?;
    let h = Observable::pairing(TestFunction::tent(1.0)?);
    println!("   n  volume  folner  vanhove  tempered  boundary  birkhoff");
    for row in vanhove_diagnostics(&seq, &k, Some((&h, &patch)))? {
        let avg = birkhoff_average(&h, &patch, &seq, row.n)?;
        println!(
            "{:>4} {:>7} {:>7.4} {:>8.4} {:>9.3} {:>9.5} {:>9.6}",
            row.n,
            row.volume,
            row.folner_ratio,
            row.vanhove_ratio,
            row.tempered_ratio,
            row.boundary_term.unwrap_or(f64::NAN),
            avg.re
        );
    }
    // density of the chain is tau/sqrt(5), and the tent integrates to 1
    println!("limit: {:.6}", diffraction_lab::generators::TAU / 5f64.sqrt());
    Ok(())
}
