//! A local thinning of the Fibonacci chain: keep an atom iff its right
//! neighbour is farther than 1.3, i.e. keep the left ends of long tiles.

use diffraction_lab::averaging::BoxSequence;
use diffraction_lab::diffraction::FrequencyGrid;
use diffraction_lab::generators::GeneratorSpec;
use diffraction_lab::perturbation::{equivariance_check, perturbation_experiment, ExperimentParams, Rule};
use diffraction_lab::testfn::TestFunction;
use diffraction_lab::{Point, Window};

fn main() -> diffraction_lab::Result<()> {
    let rule = Rule::right_gap(1.3);
    let spec = GeneratorSpec::fibonacci();
    let ts: Vec<Point> = [0.3, -1.7, 4.25].map(Point::d1).to_vec();
    println!("equivariant: {}", equivariance_check(&rule, &spec, &Window::interval(-30.0, 30.0)?, &ts)?);

    let seq = BoxSequence::cubes(1, &[200.0, 400.0])?;
    let report = perturbation_experiment(
        &rule,
        &spec,
        &seq,
        1,
        2,
        &TestFunction::tent(1.0)?,
        &FrequencyGrid::interval(-3.0, 3.0, 1.0 / 3200.0),
        &ExperimentParams::default(),
    )?;
    println!(
        "bragg peaks: {} before, {} after",
        report.peaks_before.bragg().count(),
        report.peaks_after.bragg().count()
    );
    println!("group basis {:?}", report.group_basis);
    println!(
        "pure-point ratio {:.4} -> {:.4}, flag {}",
        report.ratio_before.ratio, report.ratio_after.ratio, report.flag_pp
    );
    println!(
        "support flag {} ({} of {} after-peaks farther than {:.0e}, max residual {:.2e})",
        report.flag_support,
        report.non_members.len(),
        report.membership.len(),
        report.peaks_after.params.delta_freq,
        report.max_residual()
    );
    println!(
        "almost-period max gap {} -> {}",
        report.almost_periods_before.max_gap, report.almost_periods_after.max_gap
    );
    Ok(())
}
