use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kernel::{AncillaEvaluator, Candidate};
use crate::optics::{normalize_angle, phase_grid, ParameterSet};

/// Resolution of the parameter search and of the phase grids built on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Points per angle in the coarse grid over `[0, pi)`.
    pub coarse_points: usize,
    /// Points per angle in each refinement grid.
    pub refine_points: usize,
    pub refine_passes: usize,
    /// Step reduction factor per refinement pass.
    pub refine_shrink: f64,
    /// Phase grid over which the ancilla threshold predicate is checked.
    pub threshold_phi_points: usize,
    /// Phase grid of the optimized-parameter lookup table.
    pub table_points: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            coarse_points: 24,
            refine_points: 9,
            refine_passes: 2,
            refine_shrink: 8.0,
            threshold_phi_points: 64,
            table_points: 256,
        }
    }
}

impl SearchConfig {
    /// Coarser search for quick checks and examples.
    pub fn quick() -> Self {
        Self {
            coarse_points: 12,
            refine_points: 5,
            refine_passes: 2,
            refine_shrink: 4.0,
            threshold_phi_points: 16,
            table_points: 64,
        }
    }

    pub fn coarse_step(&self) -> f64 {
        PI / self.coarse_points as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStage {
    pub stage: String,
    pub step: f64,
    pub evaluations: usize,
    pub theta: ParameterSet,
    pub fisher: f64,
}

/// Best parameter set found for one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaOptimum {
    pub phi: f64,
    pub p: f64,
    pub theta_star: ParameterSet,
    pub f_opt: f64,
    pub search_trace: Vec<SearchStage>,
}

fn refine_axis(center: f64, step: f64, points: usize) -> Vec<f64> {
    let half = (points as f64 - 1.0) / 2.0;
    (0..points)
        .map(|k| normalize_angle(center + (k as f64 - half) * step))
        .collect()
}

/// Deterministic coarse-to-fine grid search for the parameter set that
/// maximizes the ancilla Fisher information at `phi`.
pub fn optimize_theta(evaluator: &AncillaEvaluator, phi: f64, search: &SearchConfig) -> ThetaOptimum {
    let n = search.coarse_points;
    let coarse = phase_grid(n);
    let inputs = evaluator.coarse_inputs(n);
    let (mut best, evaluations) = evaluator.best_on_grid(phi, [&coarse, &coarse, &coarse, &coarse], Some(&inputs));
    let mut trace = vec![SearchStage {
        stage: "coarse".into(),
        step: search.coarse_step(),
        evaluations,
        theta: best.theta,
        fisher: best.value,
    }];

    let mut step = search.coarse_step();
    for pass in 1..=search.refine_passes {
        step /= search.refine_shrink;
        let axes = best
            .theta
            .as_array()
            .map(|c| refine_axis(c, step, search.refine_points));
        let (found, evaluations) =
            evaluator.best_on_grid(phi, [&axes[0], &axes[1], &axes[2], &axes[3]], None);
        best = best.better(found);
        trace.push(SearchStage {
            stage: format!("refine-{pass}"),
            step,
            evaluations,
            theta: best.theta,
            fisher: best.value,
        });
    }

    let Candidate { theta, value } = best;
    ThetaOptimum {
        phi,
        p: evaluator.p(),
        theta_star: theta,
        f_opt: value,
        search_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::ValidatedConvention;

    #[test]
    fn refine_axis_wraps_into_range() {
        let axis = refine_axis(0.0, 0.01, 5);
        assert_eq!(axis.len(), 5);
        assert!(axis.iter().all(|&a| (0.0..PI).contains(&a)));
        assert!((axis[0] - (PI - 0.02)).abs() < 1e-15);
        assert_eq!(axis[2], 0.0);
    }

    #[test]
    fn optimum_is_consistent_and_deterministic() {
        let conv = ValidatedConvention::shipped();
        let ev = AncillaEvaluator::new(conv, 0.05).unwrap();
        let search = SearchConfig::quick();
        let a = optimize_theta(&ev, 0.0, &search);
        let b = optimize_theta(&AncillaEvaluator::new(conv, 0.05).unwrap(), 0.0, &search);
        assert_eq!(a, b);
        let recomputed = ev.fisher(a.phi, &a.theta_star).value;
        assert!((recomputed - a.f_opt).abs() < 1e-9);
        assert_eq!(a.search_trace.len(), 3);
        assert_eq!(a.search_trace[0].evaluations, 12usize.pow(4));
        assert!(a.search_trace.windows(2).all(|w| w[1].fisher >= w[0].fisher));
    }
}
