use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{fisher_from_model, fisher_reference_phase, optimize_theta, AncillaEvaluator, InterferometerModel, SearchConfig};
use crate::error::{Error, Result};
use crate::optics::ValidatedConvention;

/// Fisher information of a coherent-state probe with two photons on average.
pub const CLASSICAL_LIMIT: f64 = 2.0;

/// Bracket width for strategies with a closed-form or cheap evaluator.
pub const ANALYTIC_BRACKET: f64 = 1e-4;
/// Bracket width when every predicate evaluation runs the parameter search.
pub const ANCILLA_BRACKET: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Fixed interferometer, coincidence and double counts.
    Bare,
    /// Bare measurement with the reference phase at its optimum.
    Reference,
    /// Polarization ancilla with optimized waveplates at every phase.
    Ancilla,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Bare => "bare",
            Strategy::Reference => "reference",
            Strategy::Ancilla => "ancilla",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bare" => Ok(Strategy::Bare),
            "reference" => Ok(Strategy::Reference),
            "ancilla" => Ok(Strategy::Ancilla),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub strategy: Strategy,
    pub p_star: f64,
    pub bracket: (f64, f64),
    pub phi_set: Vec<f64>,
    pub predicate: String,
    pub criterion: String,
}

/// Bisection on `p` for the last probability where `holds` is true.
///
/// Returns `p_star = 0` when the predicate already fails at `0` or at the
/// first resolvable step `width`, and `p_star = 1` when it holds everywhere.
pub fn bisect_threshold(mut holds: impl FnMut(f64) -> bool, width: f64) -> (f64, (f64, f64)) {
    if !holds(0.0) {
        return (0.0, (0.0, 0.0));
    }
    if !holds(width) {
        return (0.0, (0.0, width));
    }
    if holds(1.0) {
        return (1.0, (1.0, 1.0));
    }
    let (mut lo, mut hi) = (width, 1.0);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), (lo, hi))
}

/// Largest `p` for which `min over phi_set of F(phi; p) > 2`.
pub fn supersensitivity_threshold(
    strategy: Strategy,
    phi_set: &[f64],
    conv: &ValidatedConvention,
    search: &SearchConfig,
) -> Result<ThresholdReport> {
    let (p_star, bracket) = match strategy {
        Strategy::Reference => bisect_threshold(|p| fisher_reference_phase(p) > CLASSICAL_LIMIT, ANALYTIC_BRACKET),
        Strategy::Bare => {
            let mut err = None;
            let out = bisect_threshold(
                |p| match InterferometerModel::bare(conv, p) {
                    Ok(model) => phi_set
                        .iter()
                        .all(|&phi| fisher_from_model(&model, phi).value > CLASSICAL_LIMIT),
                    Err(e) => {
                        err = Some(e);
                        false
                    }
                },
                ANALYTIC_BRACKET,
            );
            if let Some(e) = err {
                return Err(e);
            }
            out
        }
        Strategy::Ancilla => return ancilla_threshold(conv, phi_set, search),
    };
    Ok(ThresholdReport {
        strategy,
        p_star,
        bracket,
        phi_set: phi_set.to_vec(),
        predicate: "minF>2".into(),
        criterion: criterion_text(strategy),
    })
}

fn criterion_text(strategy: Strategy) -> String {
    match strategy {
        Strategy::Reference => "4(1-p)^4 > 2 at the optimal reference phase".into(),
        Strategy::Bare => "two-outcome Fisher information > 2 at every phase in phi_set".into(),
        Strategy::Ancilla => "optimized ancilla Fisher information > 2 at every phase in phi_set".into(),
    }
}

/// Threshold of the ancilla strategy; every predicate evaluation optimizes
/// the waveplates at each phase of `phi_set`.
pub fn ancilla_threshold(conv: &ValidatedConvention, phi_set: &[f64], search: &SearchConfig) -> Result<ThresholdReport> {
    let mut err = None;
    // The phase that failed last is the most likely to fail again.
    let mut last_failure: Option<usize> = None;
    let (p_star, bracket) = bisect_threshold(
        |p| {
            let evaluator = match AncillaEvaluator::new(conv, p) {
                Ok(ev) => ev,
                Err(e) => {
                    err = Some(e);
                    return false;
                }
            };
            let order = last_failure.into_iter().chain((0..phi_set.len()).filter(|&i| Some(i) != last_failure));
            for i in order {
                if optimize_theta(&evaluator, phi_set[i], search).f_opt <= CLASSICAL_LIMIT {
                    last_failure = Some(i);
                    return false;
                }
            }
            true
        },
        ANCILLA_BRACKET,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(ThresholdReport {
        strategy: Strategy::Ancilla,
        p_star,
        bracket,
        phi_set: phi_set.to_vec(),
        predicate: "minF>2".into(),
        criterion: criterion_text(Strategy::Ancilla),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::phase_grid;

    #[test]
    fn bisection_brackets_known_root() {
        let (p, (lo, hi)) = bisect_threshold(|p| p < 0.3, 1e-4);
        assert!(hi - lo <= 1e-4);
        assert!(lo < 0.3 && hi >= 0.3);
        assert!((p - 0.3).abs() < 1e-4);
    }

    #[test]
    fn bisection_edge_cases() {
        assert_eq!(bisect_threshold(|_| false, 1e-4), (0.0, (0.0, 0.0)));
        assert_eq!(bisect_threshold(|_| true, 1e-4), (1.0, (1.0, 1.0)));
        assert_eq!(bisect_threshold(|p| p == 0.0, 1e-4), (0.0, (0.0, 1e-4)));
    }

    #[test]
    fn reference_threshold() {
        let conv = ValidatedConvention::shipped();
        let r = supersensitivity_threshold(Strategy::Reference, &[], conv, &SearchConfig::default()).unwrap();
        let exact = 1.0 - 2f64.powf(-0.25);
        assert!((r.p_star - exact).abs() < 1e-4);
        assert!(r.bracket.1 - r.bracket.0 <= ANALYTIC_BRACKET);
    }

    #[test]
    fn bare_threshold_is_zero_with_blind_spots() {
        let conv = ValidatedConvention::shipped();
        let r = supersensitivity_threshold(Strategy::Bare, &phase_grid(16), conv, &SearchConfig::default()).unwrap();
        assert_eq!(r.p_star, 0.0);
    }

    #[test]
    fn strategy_parses() {
        assert_eq!("ancilla".parse::<Strategy>().unwrap(), Strategy::Ancilla);
        assert!("nope".parse::<Strategy>().is_err());
    }
}
