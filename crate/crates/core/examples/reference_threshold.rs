//! A tunable reference phase moves the operating point to pi/4, giving
//! F = 4 (1 - p)^4 and super-sensitivity below p = 1 - 2^(-1/4).

use ancilla_phase::optics::ValidatedConvention;
use ancilla_phase::sensitivity::{
    fisher_reference_phase, fisher_reference_phase_numeric, supersensitivity_threshold, SearchConfig, Strategy,
};

fn main() -> ancilla_phase::Result<()> {
    for p in [0.0, 0.05, 0.1, 0.1591, 0.2] {
        let (numeric, at) = fisher_reference_phase_numeric(p);
        println!(
            "p = {p:<7} F = {:.6}  numeric max {numeric:.6} at phi - phi_r = {at:.5}",
            fisher_reference_phase(p)
        );
    }
    let conv = ValidatedConvention::shipped();
    let report = supersensitivity_threshold(Strategy::Reference, &[], conv, &SearchConfig::default())?;
    println!(
        "\nthreshold p* = {:.6} (exact {:.6}), bracket [{:.6}, {:.6}]",
        report.p_star,
        1.0 - 2f64.powf(-0.25),
        report.bracket.0,
        report.bracket.1
    );
    Ok(())
}
