//! Checks interferometer conventions against the known two-photon Fisher
//! information; an unbalanced 40/60 splitter is rejected.

use ancilla_phase::optics::{OpticalConvention, PhaseArm, PlateOrder};

fn main() -> ancilla_phase::Result<()> {
    let candidates = [
        ("shipped", OpticalConvention::default()),
        (
            "phase in lower arm",
            OpticalConvention {
                phase_arm: PhaseArm::Lower,
                ..OpticalConvention::default()
            },
        ),
        (
            "QWP before HWP",
            OpticalConvention {
                plate_order: PlateOrder::QwpThenHwp,
                ..OpticalConvention::default()
            },
        ),
        ("40/60 splitter", OpticalConvention::with_transmissivity(0.4)?),
    ];
    for (name, conv) in candidates {
        let report = conv.validate();
        println!("{name}  [{}]", &report.fingerprint[..16]);
        for c in &report.checks {
            println!(
                "  {:<26} {}  max deviation {:.2e} at phi = {:.4}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.max_deviation,
                c.worst_phi
            );
        }
    }
    Ok(())
}
