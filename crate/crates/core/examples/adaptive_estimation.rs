//! Small adaptive-estimation ensemble: builds the optimized-parameter table,
//! runs a few trials per phase and compares the variance with the classical
//! limit 1/(2N) and the Cramer-Rao bound 1/(N F_opt).

use std::sync::Arc;

use ancilla_phase::adaptive::{AdaptiveConfig, AdaptiveEstimator, ThetaTable};
use ancilla_phase::optics::ValidatedConvention;
use ancilla_phase::sensitivity::{optimize_theta, AncillaEvaluator, SearchConfig};

fn main() -> ancilla_phase::Result<()> {
    let conv = ValidatedConvention::shipped();
    let search = SearchConfig::quick();
    let config = AdaptiveConfig {
        detections: 600,
        trials: 40,
        p: 0.01,
        seed: 7,
        ..AdaptiveConfig::default()
    };
    let table = Arc::new(ThetaTable::build(conv, config.p, &search)?);
    let estimator = AdaptiveEstimator::new(conv, config.clone(), table)?;

    let one = estimator.adaptive_run(1.0, 0, 0);
    println!(
        "single trial at phi = 1: start {:.4}, after 10 {:.4}, final {:.4}",
        one.initial_estimate, one.estimate_trajectory[9], one.final_estimate
    );

    let evaluator = AncillaEvaluator::new(conv, config.p)?;
    let n = config.detections as f64;
    println!("\n{:>8} {:>10} {:>11} {:>11} {:>11}", "phi", "mean", "variance", "1/(2N)", "CRB");
    for s in estimator.ensemble_statistics(&[0.4, 1.2, 2.0, 2.8]) {
        let f = optimize_theta(&evaluator, s.phi_true, &search).f_opt;
        println!(
            "{:>8.4} {:>10.5} {:>11.3e} {:>11.3e} {:>11.3e}",
            s.phi_true,
            s.mean_estimate,
            s.variance,
            0.5 / n,
            1.0 / (n * f)
        );
    }
    Ok(())
}
