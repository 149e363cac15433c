//! Classical Fisher information of the two detection strategies, the closed
//! forms it is checked against, the per-phase parameter search, and the
//! super-sensitivity thresholds.
//!
//! Fisher information is summed over outcomes,
//! `F(phi) = sum_m (dP_m/dphi)^2 / P_m`. Outcomes whose probability is
//! below [`PROBABILITY_FLOOR`] are handled explicitly: if their derivative
//! is also negligible they contribute the regular limit `2 P_m''` (zero when
//! the outcome is identically impossible); otherwise the ratio is taken at
//! the floor and the value is flagged.

pub(crate) mod kernel;
mod search;
mod threshold;

pub use kernel::AncillaEvaluator;
pub use search::{optimize_theta, SearchConfig, SearchStage, ThetaOptimum};
pub use threshold::{
    ancilla_threshold, bisect_threshold, supersensitivity_threshold, Strategy, ThresholdReport,
    CLASSICAL_LIMIT,
};

use serde::Serialize;

use crate::decoherence::{depolarize_two_photon_path, DepolarizingSpec};
use crate::error::{Error, Result};
use crate::optics::{
    analysis_povm, ancilla_input_state_with, coincidence_double_povm, mzi_unitary_derivatives, pure_probe_state,
    OpticalConvention, ParameterSet, ValidatedConvention,
};
use crate::quantum::{trace_product, CMatrix, ProjectorSet};

pub const PROBABILITY_FLOOR: f64 = 1e-12;
pub const DERIVATIVE_FLOOR: f64 = 1e-6;

/// Step and tolerance of the finite-difference derivative cross-check.
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;

/// Outcome probabilities and their phase derivatives at one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint {
    pub probabilities: Vec<f64>,
    pub first: Vec<f64>,
    /// Second derivatives, when the model can supply them.
    pub second: Option<Vec<f64>>,
}

/// A phase-dependent outcome distribution `P(m | phi)`.
pub trait ProbabilityModel {
    fn outcome_count(&self) -> usize;

    fn evaluate(&self, phi: f64) -> ModelPoint;

    fn probabilities(&self, phi: f64) -> Vec<f64> {
        self.evaluate(phi).probabilities
    }
}

/// Fisher information value; `flagged` marks a floor-rule evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherValue {
    pub value: f64,
    pub flagged: bool,
}

/// Contribution of a single outcome. `curvature` is only consulted for
/// vanishing outcomes.
pub(crate) fn outcome_term(p: f64, d: f64, curvature: impl FnOnce() -> Option<f64>) -> (f64, bool) {
    if p > PROBABILITY_FLOOR {
        (d * d / p, false)
    } else if d.abs() > DERIVATIVE_FLOOR {
        (d * d / PROBABILITY_FLOOR, true)
    } else {
        (curvature().map_or(0.0, |c| 2.0 * c.max(0.0)), false)
    }
}

/// Per-outcome Fisher contributions at `phi`.
pub fn fisher_contributions(model: &dyn ProbabilityModel, phi: f64) -> (Vec<f64>, bool) {
    let point = model.evaluate(phi);
    let mut flagged = false;
    let terms = point
        .probabilities
        .iter()
        .zip(&point.first)
        .enumerate()
        .map(|(m, (&p, &d))| {
            let (t, f) = outcome_term(p, d, || point.second.as_ref().map(|s| s[m]));
            flagged |= f;
            t
        })
        .collect();
    (terms, flagged)
}

/// Classical Fisher information summed over outcomes, clamped at zero.
pub fn fisher_from_model(model: &dyn ProbabilityModel, phi: f64) -> FisherValue {
    let (terms, flagged) = fisher_contributions(model, phi);
    FisherValue {
        value: terms.iter().sum::<f64>().max(0.0),
        flagged,
    }
}

/// Central-difference check of the analytic derivatives; returns the
/// largest absolute deviation.
pub fn check_derivatives(model: &dyn ProbabilityModel, phi: f64) -> Result<f64> {
    let analytic = model.evaluate(phi).first;
    let plus = model.probabilities(phi + FD_STEP);
    let minus = model.probabilities(phi - FD_STEP);
    let deviation = analytic
        .iter()
        .zip(plus.iter().zip(&minus))
        .map(|(a, (p, m))| (a - (p - m) / (2.0 * FD_STEP)).abs())
        .fold(0.0, f64::max);
    if deviation > FD_TOL {
        return Err(Error::DerivativeMismatch { phi, deviation });
    }
    Ok(deviation)
}

/// Outcome model defined by closures, for analytic test models.
pub struct FnModel<P, D> {
    outcomes: usize,
    probs: P,
    derivs: D,
}

impl<P, D> FnModel<P, D>
where
    P: Fn(f64) -> Vec<f64>,
    D: Fn(f64) -> Vec<f64>,
{
    pub fn new(outcomes: usize, probs: P, derivs: D) -> Self {
        Self {
            outcomes,
            probs,
            derivs,
        }
    }
}

impl<P, D> ProbabilityModel for FnModel<P, D>
where
    P: Fn(f64) -> Vec<f64>,
    D: Fn(f64) -> Vec<f64>,
{
    fn outcome_count(&self) -> usize {
        self.outcomes
    }

    fn evaluate(&self, phi: f64) -> ModelPoint {
        ModelPoint {
            probabilities: (self.probs)(phi),
            first: (self.derivs)(phi),
            second: None,
        }
    }
}

/// Born-rule model built from dense matrices: a depolarized input state
/// sent through the interferometer and measured with a projector set.
///
/// Derivatives come from differentiating `U rho U^dag` by the product rule.
#[derive(Debug, Clone)]
pub struct InterferometerModel {
    conv: OpticalConvention,
    input: CMatrix,
    with_polarization: bool,
    projectors: ProjectorSet,
}

impl InterferometerModel {
    /// Bare two-photon probe measured with coincidence and double counts.
    pub fn bare(conv: &ValidatedConvention, p: f64) -> Result<Self> {
        Self::bare_with(conv, p)
    }

    pub(crate) fn bare_unchecked(conv: OpticalConvention, p: f64) -> Self {
        Self::bare_with(&conv, p).expect("bare model at valid p")
    }

    fn bare_with(conv: &OpticalConvention, p: f64) -> Result<Self> {
        let p = DepolarizingSpec::new(p)?.p();
        let input = depolarize_two_photon_path(&pure_probe_state().density(), p)?.into_matrix();
        Ok(Self {
            conv: conv.clone(),
            input,
            with_polarization: false,
            projectors: coincidence_double_povm(),
        })
    }

    /// Ancilla-entangled probe with the 16-outcome polarization-resolved analysis.
    pub fn ancilla(conv: &ValidatedConvention, p: f64, theta: &ParameterSet) -> Result<Self> {
        let p = DepolarizingSpec::new(p)?.p();
        let input =
            depolarize_two_photon_path(
            &ancilla_input_state_with(conv.ancilla_cross_term, theta.alpha1, theta.alpha2).density(),
            p,
        )?
        .into_matrix();
        Ok(Self {
            conv: (**conv).clone(),
            input,
            with_polarization: true,
            projectors: analysis_povm(conv, theta.beta1, theta.beta2),
        })
    }

    pub fn projectors(&self) -> &ProjectorSet {
        &self.projectors
    }

    /// `rho(phi)` and its first two phase derivatives.
    pub fn state_derivatives(&self, phi: f64) -> [CMatrix; 3] {
        let [u0, u1, u2] = mzi_unitary_derivatives(&self.conv, phi, self.with_polarization);
        let rho = &self.input;
        let a00 = &u0 * rho * u0.adjoint();
        let a10 = &u1 * rho * u0.adjoint();
        let a11 = &u1 * rho * u1.adjoint();
        let a20 = &u2 * rho * u0.adjoint();
        let first = &a10 + a10.adjoint();
        let second = &a20 + a20.adjoint() + a11.scale(2.0);
        [a00, first, second]
    }
}

impl ProbabilityModel for InterferometerModel {
    fn outcome_count(&self) -> usize {
        self.projectors.len()
    }

    fn evaluate(&self, phi: f64) -> ModelPoint {
        let [s0, s1, s2] = self.state_derivatives(phi);
        let tr = |m: &CMatrix| -> Vec<f64> {
            self.projectors
                .projectors()
                .iter()
                .map(|p| trace_product(m, p))
                .collect()
        };
        ModelPoint {
            probabilities: tr(&s0).into_iter().map(|p| p.clamp(0.0, 1.0)).collect(),
            first: tr(&s1),
            second: Some(tr(&s2)),
        }
    }
}

/// Closed-form two-outcome Fisher information of the depolarized bare probe,
///
/// `8 (p-1)^4 sin^2(2 phi) / (1 - (p-1)^4 cos(4 phi) - (p-2) p ((p-2) p + 2))`.
///
/// Where both numerator and denominator vanish (`p = 0` at a multiple of
/// `pi/2`) the limit along `phi` is returned.
pub fn fisher_closed_form_bare(phi: f64, p: f64) -> f64 {
    let q = (p - 1.0).powi(4);
    let s2 = (2.0 * phi).sin().powi(2);
    let num = 8.0 * q * s2;
    let den = 1.0 - q * (4.0 * phi).cos() - (p - 2.0) * p * ((p - 2.0) * p + 2.0);
    if den.abs() > 1e-12 {
        return num / den;
    }
    // Same expression with the denominator written as 2 (sin^2 + (1-q) cos^2).
    let c2 = (2.0 * phi).cos().powi(2);
    let stable = s2 + (1.0 - q) * c2;
    if stable > 0.0 {
        4.0 * q * s2 / stable
    } else {
        4.0 * q
    }
}

/// Optimal Fisher information with a tunable reference phase, `4 (1-p)^4`.
pub fn fisher_reference_phase(p: f64) -> f64 {
    4.0 * (1.0 - p).powi(4)
}

/// Numerical maximum over the reference phase of the bare closed form,
/// returned with the maximizing offset `phi - phi_r`.
pub fn fisher_reference_phase_numeric(p: f64) -> (f64, f64) {
    let f = |x: f64| fisher_closed_form_bare(x, p);
    let half = std::f64::consts::FRAC_PI_2;
    let n = 64;
    let step = half / n as f64;
    let best = (1..n)
        .map(|k| k as f64 * step)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(half / 2.0);
    let (mut lo, mut hi) = (best - step, best + step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let x1 = hi - ratio * (hi - lo);
        let x2 = lo + ratio * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let x = 0.5 * (lo + hi);
    (f(x), x)
}

/// Merges outcomes `i` and `j` of a model into one.
pub struct MergedModel<'a> {
    inner: &'a dyn ProbabilityModel,
    keep: usize,
    drop: usize,
}

impl<'a> MergedModel<'a> {
    pub fn new(inner: &'a dyn ProbabilityModel, i: usize, j: usize) -> Self {
        assert!(i != j && i < inner.outcome_count() && j < inner.outcome_count());
        Self {
            inner,
            keep: i.min(j),
            drop: i.max(j),
        }
    }

    fn merge(&self, mut v: Vec<f64>) -> Vec<f64> {
        let moved = v.remove(self.drop);
        v[self.keep] += moved;
        v
    }
}

impl ProbabilityModel for MergedModel<'_> {
    fn outcome_count(&self) -> usize {
        self.inner.outcome_count() - 1
    }

    fn evaluate(&self, phi: f64) -> ModelPoint {
        let point = self.inner.evaluate(phi);
        ModelPoint {
            probabilities: self.merge(point.probabilities),
            first: self.merge(point.first),
            second: point.second.map(|s| self.merge(s)),
        }
    }
}
