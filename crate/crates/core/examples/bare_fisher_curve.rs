//! Fisher information of the bare two-photon interferometer: the closed
//! form against the numerically propagated model, and the blind spots that
//! open up at any nonzero depolarization.

use std::f64::consts::PI;

use ancilla_phase::optics::{phase_grid, ValidatedConvention};
use ancilla_phase::sensitivity::{fisher_closed_form_bare, fisher_contributions, InterferometerModel};

fn main() -> ancilla_phase::Result<()> {
    let conv = ValidatedConvention::shipped();
    for p in [0.0, 0.005, 0.05] {
        let model = InterferometerModel::bare(conv, p)?;
        let mut worst: f64 = 0.0;
        for phi in phase_grid(256) {
            let (terms, _) = fisher_contributions(&model, phi);
            let total: f64 = terms.iter().sum();
            worst = worst.max((total - fisher_closed_form_bare(phi, p)).abs());
        }
        println!("p = {p:<6} max |numeric - closed form| = {worst:.2e}");
    }

    let model = InterferometerModel::bare(conv, 0.005)?;
    println!("\np = 0.005{:>12}{:>12}{:>12}", "coinc", "double", "total");
    for phi in [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0, PI / 2.0] {
        let (t, _) = fisher_contributions(&model, phi);
        println!("phi = {phi:.4}{:>12.6}{:>12.6}{:>12.6}", t[0], t[1], t[0] + t[1]);
    }
    Ok(())
}
