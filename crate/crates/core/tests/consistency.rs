use diffraction_lab::autocorrelation::{
    autocorr_for, ensemble_correlation, mixed_autocorr_difference, smoothed_autocorr, AutocorrOptions,
};
use diffraction_lab::averaging::BoxSequence;
use diffraction_lab::diffraction::{detect_peaks, pure_point_ratio, FrequencyGrid, PeakList, PeakParams};
use diffraction_lab::generators::{GeneratorSpec, Patch};
use diffraction_lab::observable::Observable;
use diffraction_lab::perturbation::{equivariance_check, perturbation_experiment, Comparison, CountWindow, ExperimentParams, Rule};
use diffraction_lab::spectral::orbit_autocovariance;
use diffraction_lab::testfn::TestFunction;
use diffraction_lab::{Point, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn iv(lo: f64, hi: f64) -> Window {
    Window::interval(lo, hi).unwrap()
}

/// Smoothed autocorrelation against the orbit autocovariance of `f_φ`:
/// the difference is a boundary effect of order `1/n`.
#[test]
fn smoothed_autocorrelation_matches_orbit_correlation() {
    let phi = TestFunction::tent(1.0).unwrap();
    let h = Observable::pairing(phi);
    let patch = Patch::generate(&GeneratorSpec::fibonacci(), &iv(-330.0, 330.0)).unwrap();
    let seq = BoxSequence::cubes(1, &[40.0, 80.0, 160.0, 320.0]).unwrap();
    for t in [0.0, 0.7, 3.0] {
        let t = Point::d1(t);
        let mut errs = Vec::new();
        for n in 1..=seq.len() {
            let gamma = autocorr_for(&patch, &seq, n, AutocorrOptions::default()).unwrap();
            let a = smoothed_autocorr(&gamma, &phi, &phi, &t).unwrap();
            let b = orbit_autocovariance(&patch, &h, &seq, n, &t).unwrap();
            let half = seq.get(n).unwrap().hi(0);
            errs.push((a - b).norm());
            assert!((a - b).norm() <= 8.0 / half, "t={t:?} n={n}: {a} vs {b}");
        }
        assert!(errs[3] < errs[0], "{errs:?}");
    }
}

/// Successive smoothed values form a Cauchy sequence at rate `1/n`.
#[test]
fn smoothed_values_settle() {
    let phi = TestFunction::tent(1.0).unwrap();
    let patch = Patch::generate(&GeneratorSpec::fibonacci(), &iv(-641.0, 641.0)).unwrap();
    let seq = BoxSequence::cubes(1, &[40.0, 80.0, 160.0, 320.0, 640.0]).unwrap();
    let values: Vec<f64> = (1..=seq.len())
        .map(|n| {
            let g = autocorr_for(&patch, &seq, n, AutocorrOptions::default()).unwrap();
            smoothed_autocorr(&g, &phi, &phi, &Point::d1(1.3)).unwrap().re
        })
        .collect();
    for k in 1..values.len() {
        let half = seq.get(k).unwrap().hi(0);
        assert!((values[k] - values[k - 1]).abs() <= 40.0 / half, "{values:?}");
    }
}

#[test]
fn boundary_difference_decays() {
    let phi = TestFunction::tent(1.0).unwrap();
    let k = iv(-2.0, 2.0);
    let patch = Patch::generate(&GeneratorSpec::lattice(1.0), &iv(-240.0, 240.0)).unwrap();
    let d100 = mixed_autocorr_difference(&patch, &iv(-100.0, 100.0), &k, &phi, &phi).unwrap();
    let d200 = mixed_autocorr_difference(&patch, &iv(-200.0, 200.0), &k, &phi, &phi).unwrap();
    let ratio = d200.norm() / d100.norm();
    assert!((0.3..=0.7).contains(&ratio), "{d100} {d200}");
}

fn subset(peaks: &PeakList, keep: usize) -> PeakList {
    let mut out = peaks.clone();
    let mut seen = 0;
    out.peaks.retain(|p| {
        if p.classification != diffraction_lab::diffraction::Classification::Bragg {
            return true;
        }
        seen += 1;
        seen <= keep
    });
    out
}

#[test]
fn pure_point_ratio_grows_with_the_peak_set() {
    let seq = BoxSequence::cubes(1, &[100.0, 200.0]).unwrap();
    let patch = Patch::generate(&GeneratorSpec::fibonacci(), &iv(-201.0, 201.0)).unwrap();
    let grid = FrequencyGrid::interval(-3.0, 3.0, 1.0 / 1600.0);
    let peaks = detect_peaks(&patch, &seq, 1, 2, &grid, &PeakParams::default()).unwrap();
    let phi = TestFunction::tent(1.0).unwrap();
    let total = peaks.bragg().count();
    let mut last = 0.0;
    for keep in [0, 1, 5, 20, total] {
        let r = pure_point_ratio(&patch, &seq, 2, &phi, &subset(&peaks, keep)).unwrap().ratio;
        assert!(r >= last - 1e-15, "{keep}: {r} < {last}");
        last = r;
    }
    assert!(last > 0.9);
}

/// One Bernoulli realization against the ensemble over stationary
/// replicates (random offsets), within three standard errors.
#[test]
fn single_realization_matches_ensemble() {
    let spec = GeneratorSpec::bernoulli(1.0, 0.5, 99);
    let phi = TestFunction::tent(0.5).unwrap();
    let seq = BoxSequence::cubes(1, &[400.0]).unwrap();
    let patch = Patch::generate(&spec, &iv(-400.0, 400.0)).unwrap();
    let gamma = autocorr_for(&patch, &seq, 1, AutocorrOptions::default()).unwrap();
    for t in [0.0, 0.25, 1.0, 2.0] {
        let t = Point::d1(t);
        let single = smoothed_autocorr(&gamma, &phi, &phi, &t).unwrap().re;
        let ens = ensemble_correlation(&spec, &phi, &phi, &t, 400, true).unwrap();
        assert!((single - ens.mean.re).abs() <= 3.0 * ens.std_error, "{t:?}: {single} vs {ens:?}");
    }
}

#[test]
fn shipped_rules_are_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ts: Vec<Point> = (0..20).map(|_| Point::d1(rng.random_range(-6.0..6.0))).collect();
    let rules = [
        Rule::thinning(1, 1.5, Comparison::AtLeast, 2),
        Rule::right_gap(1.3),
        Rule::WeightMap {
            window: CountWindow::symmetric(1, 2.0),
            coeffs: vec![1.0, -0.1],
            lo: 0.0,
            hi: 1.0,
        },
        Rule::DeterministicShift {
            window: CountWindow::symmetric(1, 1.0),
            table: vec![(1, vec![0.2]), (3, vec![-0.1])],
        },
    ];
    let specs = [
        GeneratorSpec::poisson(1.0, 3),
        GeneratorSpec::fibonacci(),
        GeneratorSpec::random_displacement(1.0, 0.3, 8),
        GeneratorSpec::lattice(1.0),
    ];
    for rule in &rules {
        for spec in &specs {
            assert!(equivariance_check(rule, spec, &iv(-25.0, 25.0), &ts).unwrap(), "{rule:?} on {:?}", spec.kind);
        }
    }
}

#[test]
fn vacuous_rule_keeps_the_lattice_peaks() {
    let seq = BoxSequence::cubes(1, &[100.0, 200.0]).unwrap();
    let rule = Rule::thinning(1, 0.5, Comparison::AtLeast, 0);
    let r = perturbation_experiment(
        &rule,
        &GeneratorSpec::lattice(1.0),
        &seq,
        1,
        2,
        &TestFunction::tent(0.5).unwrap(),
        &FrequencyGrid::interval(-2.5, 2.5, 1.0 / 1600.0),
        &ExperimentParams::default(),
    )
    .unwrap();
    assert_eq!(r.peaks_before, r.peaks_after);
    assert!(r.flag_support && r.flag_pp);
}

/// Every after-peak is close to the group generated before; the strong
/// ones within the frequency tolerance. Weak peaks are localization
/// limited at this window size.
#[test]
fn fibonacci_thinning_stays_in_the_module() {
    let seq = BoxSequence::cubes(1, &[200.0, 400.0]).unwrap();
    let r = perturbation_experiment(
        &Rule::right_gap(1.3),
        &GeneratorSpec::fibonacci(),
        &seq,
        1,
        2,
        &TestFunction::tent(1.0).unwrap(),
        &FrequencyGrid::interval(-3.0, 3.0, 1.0 / 3200.0),
        &ExperimentParams::default(),
    )
    .unwrap();
    assert_eq!(r.group_basis.len(), 2);
    assert!(r.flag_pp);
    assert!(r.max_residual() < 5e-6, "{}", r.max_residual());
    for m in &r.membership {
        if m.intensity >= 1e-2 {
            assert!(m.residual <= 1e-6, "{m:?}");
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let seq = BoxSequence::cubes(1, &[100.0, 200.0]).unwrap();
    let patch = Patch::generate(&GeneratorSpec::poisson(1.0, 17), &iv(-220.0, 220.0)).unwrap();
    let grid = FrequencyGrid::interval(-1.0, 1.0, 1.0 / 1600.0);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let peaks = detect_peaks(&patch, &seq, 1, 2, &grid, &PeakParams::default()).unwrap();
            let gamma = autocorr_for(&patch, &seq, 2, AutocorrOptions::default().one_sided()).unwrap();
            (peaks, gamma.differences)
        })
    };
    let (p1, g1) = run(1);
    let (p8, g8) = run(8);
    assert_eq!(p1, p8);
    assert_eq!(g1, g8);
}
