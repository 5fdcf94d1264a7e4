//! Eigen-averages of f_phi against |phi^(lambda)|^2 times the Bragg
//! intensity, on the lattice and the Fibonacci chain.

use std::f64::consts::PI;

use diffraction_lab::averaging::BoxSequence;
use diffraction_lab::diffraction::bragg_amplitude;
use diffraction_lab::generators::{GeneratorSpec, Patch};
use diffraction_lab::spectral::eigen_average;
use diffraction_lab::testfn::{tent_fourier, TestFunction};
use diffraction_lab::{Point, Window};

fn main() -> diffraction_lab::Result<()> {
    let seq = BoxSequence::cubes(1, &[50.0, 100.0, 200.0])?;
    let phi = TestFunction::tent(0.5)?;
    let lattice = Patch::generate(&GeneratorSpec::lattice(1.0), &Window::interval(-202.0, 202.0)?)?;
    for n in 1..=seq.len() {
        let a = eigen_average(&lattice, &phi, &Point::d1(1.0), &seq, n)?;
        println!("lattice, lambda = 1, box {n}: |a|^2 = {:.6}", a.norm_sqr());
    }
    println!("closed form 4/pi^4 = {:.6}", 4.0 / PI.powi(4));

    let fib = Patch::generate(&GeneratorSpec::fibonacci(), &Window::interval(-202.0, 202.0)?)?;
    let b = seq.get(3)?;
    let s5 = 5f64.sqrt();
    for lambda in [1.0 / s5, diffraction_lab::generators::TAU / s5, 0.3] {
        let l = Point::d1(lambda);
        let a = eigen_average(&fib, &phi, &l, &seq, 3)?.norm_sqr();
        let predicted = tent_fourier(&phi, &l).norm_sqr() * bragg_amplitude(&fib.measure, b, &l).norm_sqr();
        println!("fibonacci, lambda = {lambda:.6}: |a|^2 = {a:.6}, |phi^|^2 I = {predicted:.6}");
    }
    Ok(())
}
