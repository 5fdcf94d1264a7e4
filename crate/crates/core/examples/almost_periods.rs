//! Almost periods of sampled correlations: integers on the lattice, a
//! relatively dense set on the Fibonacci chain (also for composed and
//! product observables), nothing useful for Poisson points.

use diffraction_lab::averaging::BoxSequence;
use diffraction_lab::autocorrelation::Estimator;
use diffraction_lab::generators::{GeneratorSpec, Patch};
use diffraction_lab::observable::{ClampedPolynomial, Observable};
use diffraction_lab::perturbation::{correlation_almost_periods, ScanSettings};
use diffraction_lab::spectral::{almost_periods, SampledCorrelation};
use diffraction_lab::testfn::TestFunction;
use diffraction_lab::{Point, Window};

fn main() -> diffraction_lab::Result<()> {
    let n = 400.0;
    let seq = BoxSequence::cubes(1, &[n])?;
    let phi = TestFunction::tent(1.0)?;
    let settings = ScanSettings {
        scan: 50.0,
        overlap: 5.0,
        per_unit: 16,
        epsilon_rel: 0.1,
        estimator: Estimator::OneSided,
    };
    let pad = settings.r_max(&phi) + 3.0;
    for spec in [GeneratorSpec::lattice(1.0), GeneratorSpec::fibonacci(), GeneratorSpec::poisson(1.0, 11)] {
        let patch = Patch::generate(&spec, &Window::interval(-n - pad, n + pad)?)?;
        let ap = correlation_almost_periods(&patch, &seq, 1, &phi, &settings)?;
        println!(
            "{:?}: {} almost periods in [-50, 50], max gap {}",
            spec.kind,
            ap.periods.len(),
            ap.max_gap
        );
    }

    let fib = Patch::generate(&GeneratorSpec::fibonacci(), &Window::interval(-n - 70.0, n + 70.0)?)?;
    let g = ClampedPolynomial {
        coeffs: vec![0.0, 0.0, 1.0],
        lo: 0.0,
        hi: 0.5,
    };
    let psi = phi.with_shift(Point::d1(0.5));
    let composed = Observable::composed(g.clone(), phi);
    let product = Observable::Product(vec![composed.clone(), Observable::composed(g, psi)]);
    for (name, h) in [("g(f_phi)", composed), ("g(f_phi) g(f_psi)", product)] {
        let c = SampledCorrelation::from_observable(&fib, &h, &seq, 1, 16, 55.0)?;
        let ap = almost_periods(&c, 50.0, 5.0, 0.1 * c.at(0).norm())?;
        println!("{name}: C(0) = {:.5}, max gap {}", c.at(0).re, ap.max_gap);
    }
    Ok(())
}
