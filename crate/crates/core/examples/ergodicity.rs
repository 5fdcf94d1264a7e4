//! Ensemble correlation over independent replicates versus the orbit
//! average of one realization (Bernoulli thinned lattice).

use diffraction_lab::autocorrelation::{autocorr_for, ensemble_correlation, smoothed_autocorr, AutocorrOptions};
use diffraction_lab::averaging::BoxSequence;
use diffraction_lab::generators::{GeneratorSpec, Patch};
use diffraction_lab::testfn::TestFunction;
use diffraction_lab::{Point, Window};

fn main() -> diffraction_lab::Result<()> {
    let spec = GeneratorSpec::bernoulli(1.0, 0.5, 2024);
    let phi = TestFunction::tent(0.5)?;
    let seq = BoxSequence::cubes(1, &[400.0])?;
    let patch = Patch::generate(&spec, &Window::interval(-400.0, 400.0)?)?;
    let gamma = autocorr_for(&patch, &seq, 1, AutocorrOptions::default())?;
    for t in [0.0, 0.5, 1.0, 3.0] {
        let t = Point::d1(t);
        let single = smoothed_autocorr(&gamma, &phi, &phi, &t)?.re;
        let ens = ensemble_correlation(&spec, &phi, &phi, &t, 400, true)?;
        println!(
            "t = {:.1}: single realization {single:.5}, ensemble {:.5} ± {:.5} ({:+.2} SE)",
            t.x(),
            ens.mean.re,
            ens.std_error,
            (single - ens.mean.re) / ens.std_error
        );
    }
    Ok(())
}
