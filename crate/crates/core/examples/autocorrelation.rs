//! Finite-window autocorrelations of the Fibonacci chain: hermitian
//! symmetry, convergence of smoothed values and the two estimators.

use diffraction_lab::autocorrelation::{
    autocorr_for, convergence_table, positive_definiteness_check, AutocorrOptions,
};
use diffraction_lab::averaging::BoxSequence;
use diffraction_lab::generators::{GeneratorSpec, Patch};
use diffraction_lab::testfn::{correlation_kernel, TestFunction};
use diffraction_lab::{Complex64, Point, Window};

fn main() -> diffraction_lab::Result<()> {
    let seq = BoxSequence::cubes(1, &[25.0, 50.0, 100.0, 200.0, 400.0])?;
    let patch = Patch::generate(&GeneratorSpec::fibonacci(), &Window::interval(-425.0, 425.0)?)?;
    let opts = AutocorrOptions::default();

    let gamma = autocorr_for(&patch, &seq, seq.len(), opts)?;
    println!(
        "gamma_n: {} difference atoms within r_max = {}, hermitian: {}",
        gamma.differences.len(),
        gamma.r_max,
        gamma.is_hermitian()
    );
    for z in [0.0, 1.0, diffraction_lab::generators::TAU, 2.0] {
        println!("  gamma({z:.4}) = {:.6}", gamma.differences.weight_at(&Point::d1(z)).re);
    }

    let phi = TestFunction::tent(1.0)?;
    let kernel = correlation_kernel(&phi, &phi)?;
    println!("(phi~ * phi * gamma_n)(t) as n grows:");
    for t in [0.0, 1.0, 2.5] {
        let t = Point::d1(t);
        let row: Vec<String> = convergence_table(&patch, &seq, std::slice::from_ref(&kernel), &t, opts)?
            .iter()
            .map(|r| format!("{:.6}", r.values[0].re))
            .collect();
        println!("  t = {:.1}: {}", t.x(), row.join("  "));
    }

    let one_sided = autocorr_for(&patch, &seq, seq.len(), AutocorrOptions::default().one_sided())?;
    let t = Point::d1(15.0);
    println!(
        "t = 15: restricted {:.6}, one-sided {:.6} (no edge taper)",
        gamma.smooth(&kernel, &t)?.re,
        one_sided.smooth(&kernel, &t)?.re
    );

    let ts: Vec<Point> = (0..8).map(|i| Point::d1(0.7 * i as f64)).collect();
    let cs: Vec<Complex64> = (0..8).map(|i| Complex64::new((i as f64).cos(), (i as f64).sin())).collect();
    println!("quadratic form of random coefficients: {:.6}", positive_definiteness_check(&gamma, &phi, &ts, &cs)?);
    Ok(())
}
