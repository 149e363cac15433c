//! Depolarizes the two-photon probe's path qubits and shows how purity and
//! the coincidence probability fringe respond.

use ancilla_phase::decoherence::{depolarize_two_photon_path, depolarizing_kraus};
use ancilla_phase::optics::{coincidence_double_povm, mzi_unitary, pure_probe_state, ValidatedConvention};
use ancilla_phase::quantum::{apply_unitary, measurement_probabilities};

fn main() -> ancilla_phase::Result<()> {
    let conv = ValidatedConvention::shipped();
    let probe = pure_probe_state().density();
    let povm = coincidence_double_povm();
    let phi = 0.3;

    println!("{:>6} {:>14} {:>10} {:>12}", "p", "completeness", "purity", "P_coinc");
    for p in [0.0, 0.005, 0.05, 0.1591, 0.5, 1.0] {
        let kraus = depolarizing_kraus(p)?;
        let rho = depolarize_two_photon_path(&probe, p)?;
        let out = apply_unitary(&rho, &mzi_unitary(conv, phi))?;
        let probs = measurement_probabilities(&out, &povm)?;
        println!(
            "{p:>6} {:>14.2e} {:>10.6} {:>12.6}",
            kraus.completeness_defect(),
            rho.purity(),
            probs[0]
        );
    }
    Ok(())
}
