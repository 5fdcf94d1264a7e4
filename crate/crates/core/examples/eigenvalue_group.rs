//! The group generated by the Bragg peaks of the Fibonacci chain: rank 2,
//! spanned by tau^2/sqrt5 and tau^3/sqrt5.

use diffraction_lab::averaging::BoxSequence;
use diffraction_lab::diffraction::{detect_peaks, eigenvalue_group, FrequencyGrid, PeakParams, COEFF_BOUND};
use diffraction_lab::generators::{GeneratorSpec, Patch, TAU};
use diffraction_lab::{Point, Window};

fn main() -> diffraction_lab::Result<()> {
    let seq = BoxSequence::cubes(1, &[200.0, 400.0])?;
    let patch = Patch::generate(&GeneratorSpec::fibonacci(), &Window::interval(-401.0, 401.0)?)?;
    let grid = FrequencyGrid::interval(-3.0, 3.0, 1.0 / 3200.0);
    let params = PeakParams::default();
    let peaks = detect_peaks(&patch, &seq, 1, 2, &grid, &params)?;
    let group = eigenvalue_group(&peaks, params.delta_freq, COEFF_BOUND)?;
    println!("{} bragg peaks generate a rank {} group", peaks.bragg().count(), group.rank());
    let s5 = 5f64.sqrt();
    for b in &group.basis {
        println!("  generator {:.9}  (tau^2/sqrt5 = {:.9}, tau^3/sqrt5 = {:.9})", b[0], TAU * TAU / s5, TAU.powi(3) / s5);
    }
    let mut strongest: Vec<_> = peaks.bragg().collect();
    strongest.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    for p in strongest.iter().take(8) {
        let (c, res) = group.residual(&p.point());
        println!("  {:+.6}  I = {:.4}  coefficients {c:?}  residual {res:.1e}", p.frequency[0], p.intensity);
    }
    println!("1/2 in the group: {}", group.contains(&Point::d1(0.5)));
    Ok(())
}
