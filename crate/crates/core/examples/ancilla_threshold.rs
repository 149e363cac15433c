//! Bisects for the largest depolarizing probability at which the optimized
//! ancilla strategy stays above the classical limit at every phase.
//!
//! Pass `--quick` for a coarser search.

use std::time::Instant;

use ancilla_phase::optics::{phase_grid, ValidatedConvention};
use ancilla_phase::sensitivity::{ancilla_threshold, SearchConfig};

fn main() -> ancilla_phase::Result<()> {
    let search = if std::env::args().any(|a| a == "--quick") {
        SearchConfig::quick()
    } else {
        SearchConfig::default()
    };
    let conv = ValidatedConvention::shipped();
    let phis = phase_grid(search.threshold_phi_points);
    let start = Instant::now();
    let report = ancilla_threshold(conv, &phis, &search)?;
    println!("p* = {:.5}  bracket = [{:.5}, {:.5}]", report.p_star, report.bracket.0, report.bracket.1);
    println!("convention {}", conv.fingerprint());
    println!("{:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
