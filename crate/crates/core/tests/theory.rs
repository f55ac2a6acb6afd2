//! Cross-module checks of the limit theory: Monte Carlo convergence to
//! the predicted risk as the network scales at fixed block-to-sample
//! ratio, and monotonicity of the limit in the total divergence.

use blockdiscrim::classifier::WeightScheme;
use blockdiscrim::montecarlo::{run_parallel, ExperimentConfig, PowerAssignment};
use blockdiscrim::risk::unit_error_limits;
use blockdiscrim::Regime;

fn experiment(kappa: usize, train_size: usize) -> ExperimentConfig {
    ExperimentConfig {
        kappa,
        block_size: 3,
        powers: PowerAssignment::Uniform(1.8),
        train_size,
        prior1: 0.5,
        schemes: vec![WeightScheme::Unit],
        replications: 400,
        test_per_class_per_rep: 125,
        base_seed: 0x5EED,
    }
}

#[test]
fn empirical_risk_approaches_limit_as_network_scales() {
    // same rho = 2/9 and per-block power at two scales; the predicted
    // limit only depends on (m, rho, gamma2)
    let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
    let (limit, _) = unit_error_limits(0.8, &regime).unwrap();

    let small = run_parallel(&experiment(8, 36), None).unwrap();
    let large = run_parallel(&experiment(24, 108), None).unwrap();
    let gap_small = (small.schemes[0].empirical_risk - limit).abs();
    let gap_large = (large.schemes[0].empirical_risk - limit).abs();

    assert!(
        gap_small < 0.02 && gap_large < 0.02,
        "risks {} / {} far from limit {limit}",
        small.schemes[0].empirical_risk,
        large.schemes[0].empirical_risk
    );
    // The systematic gap halves from the small scale (about +1.1e-3 at
    // high replication counts) to the large one (about +0.6e-3); at this
    // run length it is comparable to the Monte Carlo noise, so the larger
    // scale is required to sit at least as close up to two pooled
    // standard errors.
    let noise = 2.0 * (small.schemes[0].se_risk + large.schemes[0].se_risk);
    assert!(
        gap_large <= gap_small + noise,
        "no convergence: gap at (24, 108) = {gap_large}, gap at (8, 36) = {gap_small}, \
         noise allowance {noise}"
    );
}

#[test]
fn limit_risk_decreases_in_divergence() {
    let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
    let mut prev: Option<f64> = None;
    for i in 0..=20 {
        let j = 0.2 * i as f64;
        let (risk, _) = unit_error_limits(j, &regime).unwrap();
        if let Some(p) = prev {
            assert!(risk < p, "risk not decreasing at J = {j}");
        }
        prev = Some(risk);
    }
}
