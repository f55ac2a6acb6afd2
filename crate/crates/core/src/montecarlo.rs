//! Seeded Monte Carlo verification of the asymptotic theory: repeated
//! fit/classify/score rounds with per-scheme empirical error rates next to
//! their predicted limits, plus the distributional check of the block
//! power statistic.
//!
//! Reproducibility: every replication derives its own seeds from the base
//! seed, the replication index and a purpose tag, so replications can run
//! in any order (or in parallel) and still produce a bit-identical report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::WeightScheme;
use crate::dataset::{format_feature, Label};
use crate::error::{Error, Result};
use crate::model::{canonical_block, fit, PopulationModel, SpdMatrix};
use crate::numerics::noncentral_chi2_cdf;
use crate::risk::{
    limiting_divergence, optimal_weight, unit_error_limits, weighted_error_limits, PowerAtom,
    Regime,
};
use crate::{PowerDistribution, Scalar};

/// How per-block discriminative powers are assigned in the synthetic model.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerAssignment {
    /// Every block gets the same power.
    Uniform(Scalar),
    /// Blocks cycle through the atoms of a discrete distribution.
    Cyclic(PowerDistribution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kappa: usize,
    pub block_size: usize,
    pub powers: PowerAssignment,
    pub train_size: usize,
    pub prior1: Scalar,
    pub schemes: Vec<WeightScheme>,
    pub replications: usize,
    pub test_per_class_per_rep: usize,
    pub base_seed: u64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.kappa == 0 || self.block_size == 0 || self.train_size == 0 {
            return Err(Error::Usage(
                "kappa, block size and training size must be >= 1".into(),
            ));
        }
        if self.replications == 0 || self.test_per_class_per_rep == 0 {
            return Err(Error::Usage(
                "replications and test points per class must be >= 1".into(),
            ));
        }
        if !(self.prior1 > 0.0 && self.prior1 < 1.0) {
            return Err(Error::Usage(format!(
                "prior1 must lie strictly inside (0, 1), got {}",
                self.prior1
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::Usage("at least one weight scheme required".into()));
        }
        Ok(())
    }

    /// Block-to-sample ratio of this experiment.
    pub fn rho(&self) -> Scalar {
        self.kappa as Scalar / self.train_size as Scalar
    }

    fn block_gamma2(&self) -> Vec<Scalar> {
        match &self.powers {
            PowerAssignment::Uniform(g) => vec![*g; self.kappa],
            PowerAssignment::Cyclic(h) => (0..self.kappa)
                .map(|i| h.atoms()[i % h.atoms().len()].gamma2)
                .collect(),
        }
    }
}

/// Empirical and predicted error rates for one weight scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub scheme: String,
    pub empirical_e1: Scalar,
    pub empirical_e2: Scalar,
    pub empirical_risk: Scalar,
    pub se_e1: Scalar,
    pub se_e2: Scalar,
    pub se_risk: Scalar,
    /// Asymptotic limits; absent for fixed weight vectors, which have no
    /// limiting weight function.
    pub predicted_e1: Option<Scalar>,
    pub predicted_e2: Option<Scalar>,
    pub predicted_risk: Option<Scalar>,
}

/// Pooled block power statistics against their exact law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStats {
    pub sample_mean: Scalar,
    /// m + mean assigned gamma^2: the overestimation by exactly the block size.
    pub predicted_mean: Scalar,
    pub ks_distance: Scalar,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub kappa: usize,
    pub block_size: usize,
    pub train_size: usize,
    pub prior1: Scalar,
    pub replications: usize,
    pub test_per_class_per_rep: usize,
    pub base_seed: u64,
    pub rho: Scalar,
    pub schemes: Vec<String>,
    pub block_gamma2: Vec<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub schemes: Vec<SchemeReport>,
    pub power_stats: PowerStats,
}

impl ExperimentReport {
    /// Flat CSV: one row per scheme plus one power_stats row.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(
            "record,scheme,empirical_e1,empirical_e2,empirical_risk,se_e1,se_e2,se_risk,\
             predicted_e1,predicted_e2,predicted_risk,power_sample_mean,power_predicted_mean,\
             power_ks_distance,power_sample_count\n",
        );
        let opt = |v: Option<Scalar>| v.map(format_feature).unwrap_or_default();
        for s in &self.schemes {
            out.push_str(&format!(
                "scheme,{},{},{},{},{},{},{},{},{},{},,,,\n",
                s.scheme,
                format_feature(s.empirical_e1),
                format_feature(s.empirical_e2),
                format_feature(s.empirical_risk),
                format_feature(s.se_e1),
                format_feature(s.se_e2),
                format_feature(s.se_risk),
                opt(s.predicted_e1),
                opt(s.predicted_e2),
                opt(s.predicted_risk),
            ));
        }
        out.push_str(&format!(
            "power_stats,,,,,,,,,,,{},{},{},{}\n",
            format_feature(self.power_stats.sample_mean),
            format_feature(self.power_stats.predicted_mean),
            format_feature(self.power_stats.ks_distance),
            self.power_stats.sample_count,
        ));
        out
    }
}

/// Purpose tags separating the random streams inside one replication.
mod purpose {
    pub const TRAIN1: u64 = 0xA1;
    pub const TRAIN2: u64 = 0xA2;
    pub const TEST1: u64 = 0xB1;
    pub const TEST2: u64 = 0xB2;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for (base, replication, purpose): a splittable counter
/// scheme, collision-free in practice and independent of execution order.
pub fn derive_seed(base_seed: u64, replication: u64, purpose: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ replication) ^ purpose)
}

struct RepOutcome {
    /// (class-1 errors, class-2 errors) per scheme.
    errors: Vec<(u64, u64)>,
    powers: Vec<Scalar>,
}

fn run_replication(
    model: &PopulationModel,
    covariances: &[SpdMatrix],
    config: &ExperimentConfig,
    rep: usize,
) -> Result<RepOutcome> {
    let n = config.train_size;
    let seed = |tag| derive_seed(config.base_seed, rep as u64, tag);
    let train1 = model.sample(Label::Class1, n, seed(purpose::TRAIN1))?;
    let train2 = model.sample(Label::Class2, n, seed(purpose::TRAIN2))?;
    let clf = fit(
        &train1,
        &train2,
        covariances,
        model.partition(),
        config.prior1,
    )?;

    let weights = config
        .schemes
        .iter()
        .map(|s| clf.resolve_weights(s))
        .collect::<Result<Vec<_>>>()?;
    let powers = clf.block_powers().to_vec();

    let mut errors = vec![(0u64, 0u64); config.schemes.len()];
    let t = config.test_per_class_per_rep;
    for (label, tag) in [
        (Label::Class1, purpose::TEST1),
        (Label::Class2, purpose::TEST2),
    ] {
        let test = model.sample(label, t, seed(tag))?;
        for row in test.rows() {
            let parts = clf.block_discriminants(&row.features)?;
            for (scheme_idx, w) in weights.iter().enumerate() {
                let d: Scalar = parts.iter().zip(w).map(|(p, w)| p * w).sum();
                let predicted = if d > clf.log_prior_ratio() {
                    Label::Class1
                } else {
                    Label::Class2
                };
                if predicted != label {
                    match label {
                        Label::Class1 => errors[scheme_idx].0 += 1,
                        Label::Class2 => errors[scheme_idx].1 += 1,
                    }
                }
            }
        }
    }
    Ok(RepOutcome { errors, powers })
}

/// Runs the experiment on the current thread.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_impl(config, None)
}

/// Runs replications on a rayon pool (`max_threads` caps its size; `None`
/// uses all cores). The report is bit-identical to the serial one.
pub fn run_parallel(
    config: &ExperimentConfig,
    max_threads: Option<usize>,
) -> Result<ExperimentReport> {
    run_impl(config, Some(max_threads))
}

fn run_impl(
    config: &ExperimentConfig,
    parallel: Option<Option<usize>>,
) -> Result<ExperimentReport> {
    config.validate()?;
    let block_gamma2 = config.block_gamma2();
    let blocks = block_gamma2
        .iter()
        .map(|&g| canonical_block(config.block_size, g, config.train_size))
        .collect::<Result<Vec<_>>>()?;
    let model = PopulationModel::new(blocks, config.prior1)?;
    let covariances: Vec<SpdMatrix> = model
        .blocks()
        .iter()
        .map(|b| b.covariance().clone())
        .collect();

    let rep = |r: usize| {
        run_replication(&model, &covariances, config, r).map_err(Error::in_replication(r))
    };
    let outcomes: Vec<RepOutcome> = match parallel {
        None => (0..config.replications).map(rep).collect::<Result<_>>()?,
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
            pool.install(|| {
                (0..config.replications)
                    .into_par_iter()
                    .map(rep)
                    .collect::<Result<_>>()
            })?
        }
    };

    // Deterministic reduction in replication order.
    let mut errors = vec![(0u64, 0u64); config.schemes.len()];
    let mut powers = Vec::with_capacity(config.replications * config.kappa);
    for outcome in &outcomes {
        for (acc, e) in errors.iter_mut().zip(&outcome.errors) {
            acc.0 += e.0;
            acc.1 += e.1;
        }
        powers.extend_from_slice(&outcome.powers);
    }

    let schemes = summarize_schemes(config, &block_gamma2, &errors)?;
    let power_stats = summarize_powers(config, &block_gamma2, &powers)?;

    Ok(ExperimentReport {
        config: ConfigEcho {
            kappa: config.kappa,
            block_size: config.block_size,
            train_size: config.train_size,
            prior1: config.prior1,
            replications: config.replications,
            test_per_class_per_rep: config.test_per_class_per_rep,
            base_seed: config.base_seed,
            rho: config.rho(),
            schemes: config
                .schemes
                .iter()
                .map(|s| s.name().to_string())
                .collect(),
            block_gamma2,
        },
        schemes,
        power_stats,
    })
}

/// The power distribution actually realized by the block assignment:
/// atom probabilities are block counts over kappa.
fn realized_distribution(block_gamma2: &[Scalar]) -> Result<PowerDistribution> {
    let mut atoms: Vec<PowerAtom<Scalar>> = Vec::new();
    for &g in block_gamma2 {
        match atoms.iter_mut().find(|a| a.gamma2 == g) {
            Some(a) => a.prob += 1.0,
            None => atoms.push(PowerAtom {
                gamma2: g,
                prob: 1.0,
            }),
        }
    }
    let kappa = block_gamma2.len() as Scalar;
    for a in &mut atoms {
        a.prob /= kappa;
    }
    PowerDistribution::new(atoms)
}

fn summarize_schemes(
    config: &ExperimentConfig,
    block_gamma2: &[Scalar],
    errors: &[(u64, u64)],
) -> Result<Vec<SchemeReport>> {
    let n_per_class = (config.replications * config.test_per_class_per_rep) as Scalar;
    let h = realized_distribution(block_gamma2)?;
    let pi0 = ((1.0 - config.prior1) / config.prior1).ln();
    let regime = Regime::new(
        u32::try_from(config.block_size)
            .map_err(|_| Error::Usage("block size too large".into()))?,
        config.rho(),
        pi0,
    )?;

    let mut reports = Vec::with_capacity(config.schemes.len());
    for (scheme, &(err1, err2)) in config.schemes.iter().zip(errors) {
        let e1 = err1 as Scalar / n_per_class;
        let e2 = err2 as Scalar / n_per_class;
        let risk = config.prior1 * e1 + (1.0 - config.prior1) * e2;
        let pooled = (err1 + err2) as Scalar / (2.0 * n_per_class);
        let binom_se = |p: Scalar, n: Scalar| (p * (1.0 - p) / n).sqrt();

        let predicted = match scheme {
            WeightScheme::Unit => {
                let j = limiting_divergence(&h, config.rho());
                Some(unit_error_limits(j, &regime)?)
            }
            WeightScheme::OptimalPlugIn { h: scheme_h, .. } => {
                let m = regime.block_size();
                let w = |u: Scalar| {
                    optimal_weight(u, m, scheme_h)
                        .expect("quadrature abscissas stay inside the weight domain")
                };
                Some(weighted_error_limits(w, &regime, &h)?)
            }
            WeightScheme::Fixed(_) => None,
        };
        let (predicted_e1, predicted_e2) = match predicted {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };

        reports.push(SchemeReport {
            scheme: scheme.name().to_string(),
            empirical_e1: e1,
            empirical_e2: e2,
            empirical_risk: risk,
            se_e1: binom_se(e1, n_per_class),
            se_e2: binom_se(e2, n_per_class),
            se_risk: binom_se(pooled, 2.0 * n_per_class),
            predicted_e1,
            predicted_e2,
            predicted_risk: predicted_e1
                .zip(predicted_e2)
                .map(|(a, b)| config.prior1 * a + (1.0 - config.prior1) * b),
        });
    }
    Ok(reports)
}

fn summarize_powers(
    config: &ExperimentConfig,
    block_gamma2: &[Scalar],
    powers: &[Scalar],
) -> Result<PowerStats> {
    let mean = powers.iter().sum::<Scalar>() / powers.len() as Scalar;
    let mean_gamma2 = block_gamma2.iter().sum::<Scalar>() / block_gamma2.len() as Scalar;
    let h = realized_distribution(block_gamma2)?;
    let dof = u32::try_from(config.block_size)
        .map_err(|_| Error::Usage("block size too large".into()))?;
    let cdf = |u: Scalar| -> Result<Scalar> {
        let mut acc = 0.0;
        for atom in h.atoms() {
            acc += atom.prob * noncentral_chi2_cdf(u, dof, atom.gamma2)?;
        }
        Ok(acc)
    };
    let ks = ks_statistic(powers.to_vec(), cdf)?;
    Ok(PowerStats {
        sample_mean: mean,
        predicted_mean: config.block_size as Scalar + mean_gamma2,
        ks_distance: ks,
        sample_count: powers.len(),
    })
}

/// Exact Kolmogorov-Smirnov sup distance between the empirical CDF of
/// `samples` and the noncentral chi-square CDF.
///
/// Acceptance thresholds against asymptotic critical values (for example
/// 1.628/sqrt(N) at the 0.01 level) are adequate from about a thousand
/// samples up.
pub fn ks_distance(samples: &[Scalar], dof: u32, noncentrality: Scalar) -> Result<Scalar> {
    ks_statistic(samples.to_vec(), |u| {
        noncentral_chi2_cdf(u, dof, noncentrality)
    })
}

fn ks_statistic(
    mut samples: Vec<Scalar>,
    cdf: impl Fn(Scalar) -> Result<Scalar>,
) -> Result<Scalar> {
    if samples.is_empty() {
        return Err(Error::Usage("KS distance needs at least one sample".into()));
    }
    if samples.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Usage("KS samples must be finite and >= 0".into()));
    }
    samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = samples.len() as Scalar;
    let mut sup: Scalar = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x)?;
        let below = i as Scalar / n;
        let above = (i + 1) as Scalar / n;
        sup = sup.max((f - below).abs()).max((above - f).abs());
    }
    Ok(sup)
}
