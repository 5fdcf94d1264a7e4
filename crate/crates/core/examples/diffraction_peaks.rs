//! Two-scale peak detection: the unit lattice (Poisson summation), a
//! jittered lattice and Poisson points.

use diffraction_lab::averaging::BoxSequence;
use diffraction_lab::diffraction::{bragg_amplitude, detect_peaks, pure_point_ratio, FrequencyGrid, PeakParams};
use diffraction_lab::generators::{GeneratorSpec, Patch};
use diffraction_lab::testfn::TestFunction;
use diffraction_lab::{Point, Window};

fn main() -> diffraction_lab::Result<()> {
    let seq = BoxSequence::cubes(1, &[100.0, 200.0])?;
    let grid = FrequencyGrid::interval(-2.5, 2.5, 1.0 / 1600.0);
    let phi = TestFunction::tent(0.5)?;
    for spec in [
        GeneratorSpec::lattice(1.0),
        GeneratorSpec::random_displacement(1.0, 0.2, 3),
        GeneratorSpec::poisson(1.0, 11),
    ] {
        let patch = Patch::generate(&spec, &Window::interval(-201.0, 201.0)?)?;
        let peaks = detect_peaks(&patch, &seq, 1, 2, &grid, &PeakParams::default())?;
        let ratio = pure_point_ratio(&patch, &seq, 2, &phi, &peaks)?;
        println!("{:?}: pure-point ratio {:.4}", spec.kind, ratio.ratio);
        for p in peaks.bragg() {
            println!(
                "  bragg {:+.6}  intensity {:.5}  persistence {:.3}",
                p.frequency[0], p.intensity, p.persistence
            );
        }
        let others = peaks.peaks.len() - peaks.bragg().count();
        println!("  {others} further candidates classified diffuse or undecided");
    }
    let b = Window::interval(-200.0, 200.0)?;
    let lattice = Patch::generate(&GeneratorSpec::lattice(1.0), &b)?;
    println!("|c_n(0.5)|^2 on the lattice = {:.3e}", bragg_amplitude(&lattice.measure, &b, &Point::d1(0.5)).norm_sqr());
    Ok(())
}
