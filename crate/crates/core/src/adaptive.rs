//! Adaptive maximum-likelihood phase estimation with waveplate feedback.
//!
//! Each trial starts from a random phase guess. After every detection the
//! accumulated log-likelihood is maximized on a uniform grid over `[0, pi)`
//! and the waveplates are reset to the parameters that maximize the Fisher
//! information at the current estimate. The last `final_fraction` of the
//! detections use the parameters optimal at `phi = 0` and then at
//! `phi = pi/2`, which lifts the periodic degeneracy of the likelihood.
//!
//! Trials draw from independent ChaCha streams keyed by
//! `(seed, phase index, trial index)`, so ensembles are reproducible
//! whatever the thread scheduling.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{normalize_angle, phase_grid, ParameterSet, ValidatedConvention};
use crate::sensitivity::kernel::Rho16;
use crate::sensitivity::{optimize_theta, AncillaEvaluator, SearchConfig, ThetaOptimum};

/// Number of outcomes of the polarization-resolved two-photon measurement.
pub const OUTCOMES: usize = 16;
/// Per-factor floor applied before taking logarithms.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    /// Detections per trial.
    pub detections: usize,
    /// Trials per true phase.
    pub trials: usize,
    pub p: f64,
    pub phi_grid_size: usize,
    /// Fraction of the detections spent on degeneracy breaking.
    pub final_fraction: f64,
    /// Share of the degeneracy-breaking detections made with the `phi = 0` parameters.
    pub endgame_split: f64,
    pub seed: u64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            detections: 1500,
            trials: 200,
            p: 0.01,
            phi_grid_size: 1024,
            final_fraction: 0.03,
            endgame_split: 0.5,
            seed: 20180321,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.detections == 0 {
            return Err(Error::Config("detections must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidProbability(self.p));
        }
        if !(0.0..1.0).contains(&self.final_fraction) {
            return Err(Error::Config(format!("final_fraction {} outside [0, 1)", self.final_fraction)));
        }
        if !(0.0..=1.0).contains(&self.endgame_split) {
            return Err(Error::Config(format!("endgame_split {} outside [0, 1]", self.endgame_split)));
        }
        if self.phi_grid_size < 64 {
            return Err(Error::Config(format!("phi_grid_size {} below 64", self.phi_grid_size)));
        }
        Ok(())
    }

    /// Number of degeneracy-breaking detections, `ceil(final_fraction * N)`.
    pub fn endgame_len(&self) -> usize {
        ((self.final_fraction * self.detections as f64).ceil() as usize).min(self.detections)
    }

    /// Endgame detections at the `phi = 0` parameters; the rest use `phi = pi/2`.
    pub fn endgame_first_len(&self) -> usize {
        ((self.endgame_split * self.endgame_len() as f64).ceil() as usize).min(self.endgame_len())
    }
}

/// Optimized parameter sets on a uniform phase grid for one `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaTable {
    pub p: f64,
    pub entries: Vec<ThetaOptimum>,
}

impl ThetaTable {
    pub fn build(conv: &ValidatedConvention, p: f64, search: &SearchConfig) -> Result<Self> {
        let evaluator = AncillaEvaluator::new(conv, p)?;
        let entries = phase_grid(search.table_points)
            .into_iter()
            .map(|phi| optimize_theta(&evaluator, phi, search))
            .collect();
        Ok(Self { p, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Nearest grid entry, wrapping at `pi`.
    pub fn lookup_index(&self, phi: f64) -> usize {
        let n = self.entries.len();
        let x = normalize_angle(phi) / PI * n as f64;
        (x.round() as usize) % n
    }

    pub fn theta_at(&self, phi: f64) -> &ParameterSet {
        &self.entries[self.lookup_index(phi)].theta_star
    }
}

/// Accumulated log-likelihood on the estimation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodState {
    pub grid: Vec<f64>,
    pub log_values: Vec<f64>,
}

impl LikelihoodState {
    pub fn uniform(size: usize) -> Self {
        Self {
            grid: phase_grid(size),
            log_values: vec![0.0; size],
        }
    }

    fn add_log_row(&mut self, row: &[f64]) {
        for (acc, &l) in self.log_values.iter_mut().zip(row) {
            *acc += l;
        }
    }
}

/// Multiplies the likelihood by the observed outcome's probability at every grid phase.
pub fn update_likelihood(state: &mut LikelihoodState, outcome_prob_per_grid_phi: &[f64]) -> Result<()> {
    if outcome_prob_per_grid_phi.len() != state.grid.len() {
        return Err(Error::DimensionMismatch {
            expected: state.grid.len(),
            actual: outcome_prob_per_grid_phi.len(),
        });
    }
    for (acc, &p) in state.log_values.iter_mut().zip(outcome_prob_per_grid_phi) {
        *acc += p.max(LIKELIHOOD_FLOOR).ln();
    }
    Ok(())
}

/// Grid argmax refined by a parabola through the peak and its neighbours.
/// Ties go to the smallest grid phase.
pub fn mle_estimate(state: &LikelihoodState) -> f64 {
    let values = &state.log_values;
    let n = values.len();
    let mut k = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[k] {
            k = i;
        }
    }
    let (left, mid, right) = (values[(k + n - 1) % n], values[k], values[(k + 1) % n]);
    let curvature = left - 2.0 * mid + right;
    let offset = if curvature < 0.0 {
        (0.5 * (left - right) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let step = PI / n as f64;
    normalize_angle((k as f64 + offset) * step)
}

/// Inverse-CDF draw from a probability vector (negatives clamped, renormalized).
pub fn sample_outcome<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let u = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        let p = p.max(0.0);
        if p > 0.0 {
            last_positive = i;
        }
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    last_positive
}

/// RNG of one trial.
pub fn trial_rng(seed: u64, phi_index: u32, trial_index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((phi_index as u64) << 32) | trial_index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRunResult {
    pub phi_true: f64,
    pub initial_estimate: f64,
    pub final_estimate: f64,
    pub estimate_trajectory: Vec<f64>,
    /// Index into the parameter table used at each detection.
    pub table_trajectory: Vec<usize>,
    pub theta_trajectory: Vec<ParameterSet>,
    pub outcome_trajectory: Vec<u8>,
    pub outcome_counts: [u32; OUTCOMES],
    pub seed_used: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub phi_true: f64,
    pub mean_estimate: f64,
    pub variance: f64,
    pub standard_error_of_mean: f64,
    pub trial_count: usize,
    pub detections: usize,
    /// Final estimates in trial order.
    pub final_estimates: Vec<f64>,
}

/// Adaptive estimation engine for one configuration and parameter table.
///
/// Log-probabilities of every outcome on the estimation grid are computed
/// once per table entry, on first use.
pub struct AdaptiveEstimator {
    config: AdaptiveConfig,
    table: Arc<ThetaTable>,
    evaluator: AncillaEvaluator,
    grid: Vec<f64>,
    inputs: Vec<OnceLock<Box<Rho16>>>,
    log_rows: Vec<OnceLock<Vec<f64>>>,
}

impl AdaptiveEstimator {
    pub fn new(conv: &ValidatedConvention, config: AdaptiveConfig, table: Arc<ThetaTable>) -> Result<Self> {
        config.validate()?;
        if table.is_empty() || table.p != config.p {
            return Err(Error::MissingThetaTable(config.p));
        }
        let evaluator = AncillaEvaluator::new(conv, config.p)?;
        let grid = phase_grid(config.phi_grid_size);
        let n = table.len();
        Ok(Self {
            config,
            table,
            evaluator,
            grid,
            inputs: (0..n).map(|_| OnceLock::new()).collect(),
            log_rows: (0..n).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn config(&self) -> &AdaptiveConfig {
        &self.config
    }

    pub fn table(&self) -> &ThetaTable {
        &self.table
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    fn input(&self, entry: usize) -> &Rho16 {
        self.inputs[entry].get_or_init(|| {
            let t = &self.table.entries[entry].theta_star;
            Box::new(self.evaluator.depolarized_input(t.alpha1, t.alpha2))
        })
    }

    /// The 16 outcome probabilities at `phi` with the parameters of table entry `entry`.
    pub fn outcome_probabilities(&self, entry: usize, phi: f64) -> [f64; OUTCOMES] {
        let t = &self.table.entries[entry].theta_star;
        self.evaluator
            .outcome_probabilities(self.input(entry), phi, t.beta1, t.beta2)
    }

    /// `ln P(m | phi_g)` for every outcome `m` and grid phase `phi_g`, outcome-major.
    pub fn log_rows(&self, entry: usize) -> &[f64] {
        self.log_rows[entry].get_or_init(|| {
            let g = self.grid.len();
            let mut rows = vec![0.0; OUTCOMES * g];
            for (gi, &phi) in self.grid.iter().enumerate() {
                let probs = self.outcome_probabilities(entry, phi);
                for (m, &p) in probs.iter().enumerate() {
                    rows[m * g + gi] = p.max(LIKELIHOOD_FLOOR).ln();
                }
            }
            rows
        })
    }

    /// One adaptive trial.
    pub fn adaptive_run(&self, phi_true: f64, phi_index: u32, trial_index: u32) -> AdaptiveRunResult {
        let cfg = &self.config;
        let n_total = cfg.detections;
        let endgame = cfg.endgame_len();
        let adaptive = n_total - endgame;
        let first_half = cfg.endgame_first_len();
        let entry_zero = self.table.lookup_index(0.0);
        let entry_half = self.table.lookup_index(FRAC_PI_2);

        let mut rng = trial_rng(cfg.seed, phi_index, trial_index);
        let initial_estimate = normalize_angle(rng.random::<f64>() * PI);
        let mut estimate = initial_estimate;
        let mut likelihood = LikelihoodState {
            grid: self.grid.clone(),
            log_values: vec![0.0; self.grid.len()],
        };
        let mut true_probs: Vec<Option<[f64; OUTCOMES]>> = vec![None; self.table.len()];
        let mut counts = [0u32; OUTCOMES];
        let mut estimates = Vec::with_capacity(n_total);
        let mut entries = Vec::with_capacity(n_total);
        let mut outcomes = Vec::with_capacity(n_total);
        let g = self.grid.len();

        for n in 0..n_total {
            let entry = if n < adaptive {
                self.table.lookup_index(estimate)
            } else if n < adaptive + first_half {
                entry_zero
            } else {
                entry_half
            };
            let probs = *true_probs[entry].get_or_insert_with(|| self.outcome_probabilities(entry, phi_true));
            let m = sample_outcome(&probs, &mut rng);
            counts[m] += 1;
            likelihood.add_log_row(&self.log_rows(entry)[m * g..(m + 1) * g]);
            estimate = mle_estimate(&likelihood);
            estimates.push(estimate);
            entries.push(entry);
            outcomes.push(m as u8);
        }

        AdaptiveRunResult {
            phi_true,
            initial_estimate,
            final_estimate: estimate,
            estimate_trajectory: estimates,
            theta_trajectory: entries.iter().map(|&e| self.table.entries[e].theta_star).collect(),
            table_trajectory: entries,
            outcome_trajectory: outcomes,
            outcome_counts: counts,
            seed_used: cfg.seed,
            stream: ((phi_index as u64) << 32) | trial_index as u64,
        }
    }

    /// Runs `trials` independent trials at every phase and summarizes them.
    pub fn ensemble_statistics(&self, phi_values: &[f64]) -> Vec<EnsembleStats> {
        phi_values
            .iter()
            .enumerate()
            .map(|(i, &phi)| {
                let finals: Vec<f64> = (0..self.config.trials as u32)
                    .into_par_iter()
                    .map(|t| self.adaptive_run(phi, i as u32, t).final_estimate)
                    .collect();
                summarize(phi, &finals, self.config.detections)
            })
            .collect()
    }
}

/// Signed difference `x - y` wrapped into `[-pi/2, pi/2)`.
pub fn wrapped_difference(x: f64, y: f64) -> f64 {
    (x - y + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2
}

/// Mean, sample variance and standard error after unwrapping every estimate
/// to within `pi/2` of the true phase. A single trial reports zero variance.
pub fn summarize(phi_true: f64, finals: &[f64], detections: usize) -> EnsembleStats {
    let s = finals.len();
    let unwrapped: Vec<f64> = finals.iter().map(|&x| phi_true + wrapped_difference(x, phi_true)).collect();
    let mean = unwrapped.iter().sum::<f64>() / s as f64;
    let variance = if s > 1 {
        unwrapped.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s - 1) as f64
    } else {
        0.0
    };
    EnsembleStats {
        phi_true,
        mean_estimate: mean,
        variance,
        standard_error_of_mean: (variance / s as f64).sqrt(),
        trial_count: s,
        detections,
        final_estimates: finals.to_vec(),
    }
}
