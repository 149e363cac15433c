//! Optimizes the four waveplate angles at the bare blind spots and compares
//! the two cross-term signs of the ancilla input state.
//!
//! With the antisymmetric sign the input factorizes into two single-photon
//! states, which caps the Fisher information at 2; the symmetric sign is
//! entangled and recovers super-sensitivity.

use std::f64::consts::PI;

use ancilla_phase::optics::{ancilla_input_state_with, AncillaCrossTerm, OpticalConvention, PATH2, POL2};
use ancilla_phase::sensitivity::{optimize_theta, AncillaEvaluator, SearchConfig};

fn main() -> ancilla_phase::Result<()> {
    let search = SearchConfig::default();
    let p = 0.05;
    for cross in [AncillaCrossTerm::Antisymmetric, AncillaCrossTerm::Symmetric] {
        // Purity of one photon's reduced state: 1 for a product input.
        let psi = ancilla_input_state_with(cross, PI / 4.0, 0.4).density();
        let photon1 = psi.partial_trace(&[PATH2, POL2])?;
        let conv = OpticalConvention {
            ancilla_cross_term: cross,
            ..OpticalConvention::default()
        }
        .into_validated()?;
        let evaluator = AncillaEvaluator::new(&conv, p)?;
        println!("{cross:?}: photon-1 purity {:.6}", photon1.purity());
        for phi in [0.0, PI / 8.0, PI / 4.0, PI / 2.0] {
            let best = optimize_theta(&evaluator, phi, &search);
            println!("  phi = {phi:.4}  F_opt = {:.6}  {}", best.f_opt, best.theta_star);
        }
    }
    Ok(())
}
