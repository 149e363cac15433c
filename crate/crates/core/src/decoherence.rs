//! Depolarizing decoherence on the interferometer path of each photon.

use crate::error::{Error, Result};
use crate::optics::{PATH1, PATH2};
use crate::quantum::{
    apply_channel, identity, lift_channel, pauli_x, pauli_y, pauli_z, DensityOperator, HilbertSpace,
    KrausChannel,
};

/// Probability that a photon's path state is replaced by the maximally mixed state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DepolarizingSpec {
    p: f64,
}

impl DepolarizingSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Single-qubit depolarizing channel `{sqrt(1-3p/4) I, sqrt(p/4) X, sqrt(p/4) Y, sqrt(p/4) Z}`.
pub fn depolarizing_kraus(p: f64) -> Result<KrausChannel> {
    let p = DepolarizingSpec::new(p)?.p();
    let keep = (1.0 - 0.75 * p).sqrt();
    let flip = (0.25 * p).sqrt();
    KrausChannel::new(
        HilbertSpace::qubit("qubit"),
        vec![
            identity(2).scale(keep),
            pauli_x().scale(flip),
            pauli_y().scale(flip),
            pauli_z().scale(flip),
        ],
    )
}

/// Applies the depolarizing channel to the path of photon 1, then photon 2.
///
/// Accepts the 4-dim path-only space or the 16-dim path and polarization
/// space; polarization factors are left untouched.
pub fn depolarize_two_photon_path(rho: &DensityOperator, p: f64) -> Result<DensityOperator> {
    depolarize_paths(rho, p, [PATH1, PATH2])
}

/// Same channel with an explicit photon order. The two orders agree.
pub fn depolarize_paths(rho: &DensityOperator, p: f64, order: [&str; 2]) -> Result<DensityOperator> {
    let dim = rho.space().dim();
    if dim != 4 && dim != 16 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            actual: dim,
        });
    }
    let single = depolarizing_kraus(p)?;
    if p == 0.0 {
        return Ok(rho.clone());
    }
    let mut out = rho.clone();
    for label in order {
        let lifted = lift_channel(&single, label, rho.space())?;
        out = apply_channel(&out, &lifted)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{max_abs_diff, PureState, ONE};

    #[test]
    fn zero_probability_elements() {
        let ch = depolarizing_kraus(0.0).unwrap();
        assert_eq!(ch.elements()[0], identity(2));
        for e in &ch.elements()[1..] {
            assert!(e.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn completeness_for_all_probabilities() {
        for k in 0..=100 {
            let ch = depolarizing_kraus(k as f64 / 100.0).unwrap();
            assert!(ch.completeness_defect() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_probability_rejected() {
        assert!(matches!(depolarizing_kraus(-0.1), Err(Error::InvalidProbability(_))));
        assert!(matches!(depolarizing_kraus(1.5), Err(Error::InvalidProbability(_))));
        assert!(depolarizing_kraus(f64::NAN).is_err());
    }

    #[test]
    fn full_depolarization_of_ground_state() {
        // rho/4 + (X rho X + Y rho Y + Z rho Z)/4 with rho = |0><0| is diag(1/2, 1/2).
        let rho = PureState::basis(HilbertSpace::qubit("qubit"), &[0]).unwrap().density();
        let out = apply_channel(&rho, &depolarizing_kraus(1.0).unwrap()).unwrap();
        assert!(max_abs_diff(out.matrix(), &identity(2).scale(0.5)) < 1e-15);
        assert_eq!(out.matrix()[(0, 0)], ONE.scale(0.5));
    }

    #[test]
    fn rejects_wrong_dimension() {
        let rho = DensityOperator::maximally_mixed(HilbertSpace::new([(PATH1, 2), (PATH2, 2), ("x", 2)]).unwrap());
        assert!(matches!(
            depolarize_two_photon_path(&rho, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
