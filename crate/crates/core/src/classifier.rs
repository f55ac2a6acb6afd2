//! Plug-in block-additive discriminants, per-block weighting and the
//! decision rule.
//!
//! A fitted classifier holds per-block estimated class means together with
//! the known covariances and the common training size. The discriminant of
//! a sample is the weighted sum of per-block log density ratios; the
//! sample is assigned to class 1 exactly when the discriminant exceeds the
//! log prior ratio, ties going to class 2.

use std::sync::OnceLock;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::model::{BlockPartition, SpdMatrix};
use crate::risk::{optimal_weight, optimal_weight_origin};
use crate::{PowerDistribution, Scalar};

/// Fitted per-block state. The quantities entering the discriminant and
/// the power statistic are precomputed at construction:
/// `scaled_delta = Sigma^-1 (mean1_hat - mean2_hat)` and the block midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBlock {
    mean1_hat: DVector<Scalar>,
    mean2_hat: DVector<Scalar>,
    covariance: SpdMatrix,
    scaled_delta: DVector<Scalar>,
    midpoint: DVector<Scalar>,
    delta_quad: Scalar,
}

impl FittedBlock {
    pub fn new(
        mean1_hat: Vec<Scalar>,
        mean2_hat: Vec<Scalar>,
        covariance: SpdMatrix,
    ) -> Result<Self> {
        if mean1_hat.len() != covariance.dim() || mean2_hat.len() != covariance.dim() {
            return Err(Error::Usage(format!(
                "fitted means of length {} / {} do not match covariance dimension {}",
                mean1_hat.len(),
                mean2_hat.len(),
                covariance.dim()
            )));
        }
        let mean1_hat = DVector::from_vec(mean1_hat);
        let mean2_hat = DVector::from_vec(mean2_hat);
        let delta = &mean1_hat - &mean2_hat;
        let scaled_delta = covariance.solve(&delta);
        let delta_quad = delta.dot(&scaled_delta);
        let midpoint = (&mean1_hat + &mean2_hat) * 0.5;
        Ok(Self {
            mean1_hat,
            mean2_hat,
            covariance,
            scaled_delta,
            midpoint,
            delta_quad,
        })
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }

    pub fn mean1_hat(&self) -> &[Scalar] {
        self.mean1_hat.as_slice()
    }

    pub fn mean2_hat(&self) -> &[Scalar] {
        self.mean2_hat.as_slice()
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.covariance
    }

    /// Log density ratio of the two fitted Gaussians at `x`:
    /// `delta_hat' Sigma^-1 (x - (mean1_hat + mean2_hat)/2)`.
    pub fn discriminant(&self, x: &[Scalar]) -> Result<Scalar> {
        if x.len() != self.dim() {
            return Err(Error::Usage(format!(
                "block slice has {} features, block expects {}",
                x.len(),
                self.dim()
            )));
        }
        let acc = x
            .iter()
            .zip(self.scaled_delta.iter().zip(self.midpoint.iter()))
            .map(|(xi, (sd, mid))| sd * (xi - mid))
            .sum();
        Ok(acc)
    }

    /// Sample discriminative power `u = (n/2) delta_hat' Sigma^-1 delta_hat`.
    ///
    /// Under the Gaussian known-covariance family this statistic is exactly
    /// noncentral chi-square with `m` degrees of freedom and noncentrality
    /// `(n/2) delta' Sigma^-1 delta`.
    pub fn power(&self, train_size: usize) -> Scalar {
        assert!(train_size >= 1, "training size must be >= 1");
        train_size as Scalar / 2.0 * self.delta_quad
    }
}

/// How per-block weights are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// All weights one: the plain block-additive discriminant.
    Unit,
    /// Weights `w0(u_i)` at each block's sample power, for the given power
    /// distribution and block size.
    OptimalPlugIn {
        h: PowerDistribution,
        block_size: usize,
    },
    /// Explicit nonnegative weights, one per block.
    Fixed(Vec<Scalar>),
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Unit => "unit",
            WeightScheme::OptimalPlugIn { .. } => "optimal",
            WeightScheme::Fixed(_) => "fixed",
        }
    }
}

/// Plug-in classifier state: fitted blocks, training size and threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawClassifier", into = "RawClassifier")]
pub struct FittedClassifier {
    partition: BlockPartition,
    blocks: Vec<FittedBlock>,
    train_size: usize,
    log_prior_ratio: Scalar,
    powers: OnceLock<Vec<Scalar>>,
}

impl PartialEq for FittedClassifier {
    fn eq(&self, other: &Self) -> bool {
        self.partition == other.partition
            && self.blocks == other.blocks
            && self.train_size == other.train_size
            && self.log_prior_ratio == other.log_prior_ratio
    }
}

impl FittedClassifier {
    pub fn new(
        partition: BlockPartition,
        blocks: Vec<FittedBlock>,
        train_size: usize,
        log_prior_ratio: Scalar,
    ) -> Result<Self> {
        if blocks.len() != partition.num_blocks()
            || blocks.iter().any(|b| b.dim() != partition.block_size())
        {
            return Err(Error::Usage(
                "fitted blocks do not match the partition layout".into(),
            ));
        }
        if train_size == 0 {
            return Err(Error::Usage("training size must be >= 1".into()));
        }
        if !log_prior_ratio.is_finite() {
            return Err(Error::Usage(format!(
                "log prior ratio must be finite, got {log_prior_ratio}"
            )));
        }
        Ok(Self {
            partition,
            blocks,
            train_size,
            log_prior_ratio,
            powers: OnceLock::new(),
        })
    }

    pub fn partition(&self) -> BlockPartition {
        self.partition
    }

    pub fn blocks(&self) -> &[FittedBlock] {
        &self.blocks
    }

    pub fn train_size(&self) -> usize {
        self.train_size
    }

    pub fn log_prior_ratio(&self) -> Scalar {
        self.log_prior_ratio
    }

    /// Per-block discriminant values at `x`.
    pub fn block_discriminants(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        if x.len() != self.partition.total_features() {
            return Err(Error::Usage(format!(
                "sample has {} features, classifier expects {}",
                x.len(),
                self.partition.total_features()
            )));
        }
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| b.discriminant(&x[self.partition.block_range(i)]))
            .collect()
    }

    /// Weighted discriminant `sum_i w_i D_i(x_i)`.
    pub fn discriminant(&self, x: &[Scalar], weights: &[Scalar]) -> Result<Scalar> {
        self.check_weights(weights)?;
        let parts = self.block_discriminants(x)?;
        Ok(parts.iter().zip(weights).map(|(d, w)| d * w).sum())
    }

    /// Decision rule: class 1 exactly when the discriminant exceeds the
    /// log prior ratio; the tie goes to class 2.
    pub fn classify(&self, x: &[Scalar], weights: &[Scalar]) -> Result<Label> {
        let d = self.discriminant(x, weights)?;
        Ok(if d > self.log_prior_ratio {
            Label::Class1
        } else {
            Label::Class2
        })
    }

    /// Sample powers `u_i` of all blocks, computed once and cached
    /// (fitted parameters are immutable, so the values never change).
    pub fn block_powers(&self) -> &[Scalar] {
        self.powers.get_or_init(|| {
            self.blocks
                .iter()
                .map(|b| b.power(self.train_size))
                .collect()
        })
    }

    /// Materializes a scheme into one weight per block.
    pub fn resolve_weights(&self, scheme: &WeightScheme) -> Result<Vec<Scalar>> {
        let kappa = self.partition.num_blocks();
        match scheme {
            WeightScheme::Unit => Ok(vec![1.0; kappa]),
            WeightScheme::Fixed(weights) => {
                self.check_weights(weights)?;
                Ok(weights.clone())
            }
            WeightScheme::OptimalPlugIn { h, block_size } => {
                if *block_size != self.partition.block_size() {
                    return Err(Error::Usage(format!(
                        "weight scheme is for block size {block_size}, classifier has {}",
                        self.partition.block_size()
                    )));
                }
                let m = u32::try_from(*block_size)
                    .map_err(|_| Error::Usage("block size too large".into()))?;
                self.block_powers()
                    .iter()
                    .map(|&u| {
                        if u > 0.0 {
                            optimal_weight(u, m, h)
                        } else {
                            // measure-zero event delta_hat = 0: analytic limit
                            Ok(optimal_weight_origin(m, h))
                        }
                    })
                    .collect()
            }
        }
    }

    fn check_weights(&self, weights: &[Scalar]) -> Result<()> {
        if weights.len() != self.partition.num_blocks() {
            return Err(Error::Usage(format!(
                "{} weights supplied for {} blocks",
                weights.len(),
                self.partition.num_blocks()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Usage(
                "weights must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct RawFittedBlock {
    mean1: Vec<Scalar>,
    mean2: Vec<Scalar>,
    covariance: Vec<Vec<Scalar>>,
}

/// Model JSON schema extended with `train_size` and `log_prior_ratio`.
#[derive(Serialize, Deserialize)]
struct RawClassifier {
    kappa: usize,
    block_size: usize,
    prior1: Scalar,
    train_size: usize,
    log_prior_ratio: Scalar,
    blocks: Vec<RawFittedBlock>,
}

impl TryFrom<RawClassifier> for FittedClassifier {
    type Error = Error;

    fn try_from(raw: RawClassifier) -> Result<Self> {
        let partition = BlockPartition::new(raw.kappa, raw.block_size)?;
        let blocks = raw
            .blocks
            .into_iter()
            .map(|b| FittedBlock::new(b.mean1, b.mean2, SpdMatrix::from_rows(&b.covariance)?))
            .collect::<Result<Vec<_>>>()?;
        FittedClassifier::new(partition, blocks, raw.train_size, raw.log_prior_ratio)
    }
}

impl From<FittedClassifier> for RawClassifier {
    fn from(clf: FittedClassifier) -> Self {
        RawClassifier {
            kappa: clf.partition.num_blocks(),
            block_size: clf.partition.block_size(),
            prior1: 1.0 / (1.0 + clf.log_prior_ratio.exp()),
            train_size: clf.train_size,
            log_prior_ratio: clf.log_prior_ratio,
            blocks: clf
                .blocks
                .iter()
                .map(|b| RawFittedBlock {
                    mean1: b.mean1_hat().to_vec(),
                    mean2: b.mean2_hat().to_vec(),
                    covariance: b.covariance.to_rows(),
                })
                .collect(),
        }
    }
}
