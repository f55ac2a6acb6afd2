//! Block-partitioned two-class Gaussian population models.
//!
//! Features split into `kappa` independent blocks of size `m`; each block
//! is Gaussian with class-specific mean and a known covariance shared by
//! both classes, so the per-block divergence is the Mahalanobis form
//! `delta' Sigma^-1 delta` and the plug-in fit reduces to per-block sample
//! means. Covariances are factorized once at construction and degenerate
//! ones are rejected rather than regularized, which would silently corrupt
//! the noncentrality calibration.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifier::{FittedBlock, FittedClassifier};
use crate::dataset::{DataRow, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::Scalar;

/// Feature layout: `kappa` blocks of `m` features, `p = kappa * m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    num_blocks: usize,
    block_size: usize,
    total_features: usize,
}

impl BlockPartition {
    pub fn new(num_blocks: usize, block_size: usize) -> Result<Self> {
        if num_blocks == 0 || block_size == 0 {
            return Err(Error::Model(
                "partition needs at least one block of at least one feature".into(),
            ));
        }
        Ok(Self {
            num_blocks,
            block_size,
            total_features: num_blocks * block_size,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn total_features(&self) -> usize {
        self.total_features
    }

    /// Feature index range of block `i`.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        debug_assert!(i < self.num_blocks);
        i * self.block_size..(i + 1) * self.block_size
    }
}

/// Symmetric positive-definite matrix with its Cholesky factor cached.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    matrix: DMatrix<Scalar>,
    factor: Cholesky<Scalar, Dyn>,
    lower: DMatrix<Scalar>,
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl SpdMatrix {
    pub fn new(matrix: DMatrix<Scalar>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Model(format!(
                "covariance must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                let a = matrix[(i, j)];
                let b = matrix[(j, i)];
                if !a.is_finite()
                    || !b.is_finite()
                    || (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0)
                {
                    return Err(Error::Model(format!(
                        "covariance not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        let factor = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::Model("covariance not positive definite".into()))?;
        let lower = factor.l();
        Ok(Self {
            matrix,
            factor,
            lower,
        })
    }

    pub fn from_rows(rows: &[Vec<Scalar>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Model(
                "covariance rows must form a square matrix".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Scalar> {
        &self.matrix
    }

    /// Row-major copy, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.matrix[(i, j)]).collect())
            .collect()
    }

    /// `Sigma^-1 v`.
    pub fn solve(&self, v: &DVector<Scalar>) -> DVector<Scalar> {
        self.factor.solve(v)
    }

    /// `v' Sigma^-1 v`.
    pub fn inverse_quad_form(&self, v: &DVector<Scalar>) -> Scalar {
        v.dot(&self.factor.solve(v))
    }

    /// Cholesky lower factor, for sampling.
    pub fn lower(&self) -> &DMatrix<Scalar> {
        &self.lower
    }
}

/// True per-block class parameters: two means, one shared covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    mean1: DVector<Scalar>,
    mean2: DVector<Scalar>,
    covariance: SpdMatrix,
}

impl BlockParams {
    pub fn new(mean1: Vec<Scalar>, mean2: Vec<Scalar>, covariance: SpdMatrix) -> Result<Self> {
        if mean1.len() != covariance.dim() || mean2.len() != covariance.dim() {
            return Err(Error::Model(format!(
                "block means of length {} / {} do not match covariance dimension {}",
                mean1.len(),
                mean2.len(),
                covariance.dim()
            )));
        }
        if mean1.iter().chain(&mean2).any(|x| !x.is_finite()) {
            return Err(Error::Model("block means must be finite".into()));
        }
        Ok(Self {
            mean1: DVector::from_vec(mean1),
            mean2: DVector::from_vec(mean2),
            covariance,
        })
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }

    pub fn mean1(&self) -> &[Scalar] {
        self.mean1.as_slice()
    }

    pub fn mean2(&self) -> &[Scalar] {
        self.mean2.as_slice()
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.covariance
    }

    /// Block divergence `J_i = delta' Sigma^-1 delta`, `delta = mean1 - mean2`.
    ///
    /// This is the symmetric Kullback-Leibler divergence between the two
    /// block densities for equal-covariance Gaussians; zero exactly when
    /// the means coincide.
    pub fn divergence(&self) -> Scalar {
        let delta = &self.mean1 - &self.mean2;
        self.covariance.inverse_quad_form(&delta)
    }

    /// Discriminative power `gamma^2 = (n/2) J_i` at training size `n`.
    pub fn noncentrality(&self, train_size: usize) -> Scalar {
        assert!(train_size >= 1, "training size must be >= 1");
        train_size as Scalar / 2.0 * self.divergence()
    }
}

/// A canonical block: identity covariance and means `+-delta/2` with
/// `delta = (sqrt(2 gamma2 / n), 0, ..., 0)`, so its discriminative power
/// at training size `n` is exactly `gamma2`.
pub fn canonical_block(
    block_size: usize,
    gamma2: Scalar,
    train_size: usize,
) -> Result<BlockParams> {
    if !gamma2.is_finite() || gamma2 < 0.0 {
        return Err(Error::Model(format!(
            "gamma2 must be finite and >= 0, got {gamma2}"
        )));
    }
    if block_size == 0 || train_size == 0 {
        return Err(Error::Model(
            "block size and training size must be >= 1".into(),
        ));
    }
    let half = (2.0 * gamma2 / train_size as Scalar).sqrt() / 2.0;
    let mut mean1 = vec![0.0; block_size];
    let mut mean2 = vec![0.0; block_size];
    mean1[0] = half;
    mean2[0] = -half;
    BlockParams::new(mean1, mean2, SpdMatrix::identity(block_size))
}

/// Two-class population: block parameters plus priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct PopulationModel {
    partition: BlockPartition,
    blocks: Vec<BlockParams>,
    prior1: Scalar,
    prior2: Scalar,
}

impl PopulationModel {
    pub fn new(blocks: Vec<BlockParams>, prior1: Scalar) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Model("model needs at least one block".into()));
        }
        let block_size = blocks[0].dim();
        if blocks.iter().any(|b| b.dim() != block_size) {
            return Err(Error::Model("all blocks must share one dimension".into()));
        }
        if !(prior1 > 0.0 && prior1 < 1.0) {
            return Err(Error::Model(format!(
                "prior1 must lie strictly inside (0, 1), got {prior1}"
            )));
        }
        let partition = BlockPartition::new(blocks.len(), block_size)?;
        Ok(Self {
            partition,
            blocks,
            prior1,
            prior2: 1.0 - prior1,
        })
    }

    /// Population with every block canonical at the same power `gamma2`.
    pub fn canonical(
        kappa: usize,
        block_size: usize,
        gamma2: Scalar,
        train_size: usize,
        prior1: Scalar,
    ) -> Result<Self> {
        let blocks = (0..kappa)
            .map(|_| canonical_block(block_size, gamma2, train_size))
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks, prior1)
    }

    pub fn partition(&self) -> BlockPartition {
        self.partition
    }

    pub fn blocks(&self) -> &[BlockParams] {
        &self.blocks
    }

    pub fn prior1(&self) -> Scalar {
        self.prior1
    }

    pub fn prior2(&self) -> Scalar {
        self.prior2
    }

    /// Decision threshold `ln(prior2 / prior1)`.
    pub fn log_prior_ratio(&self) -> Scalar {
        (self.prior2 / self.prior1).ln()
    }

    /// Total divergence `J(kappa) = sum_i J_i`.
    pub fn total_divergence(&self) -> Scalar {
        self.blocks.iter().map(BlockParams::divergence).sum()
    }

    /// Draws `count` samples of one class, blockwise `N(mean, Sigma)`.
    /// Deterministic in `seed`.
    pub fn sample(&self, label: Label, count: usize, seed: u64) -> Result<LabeledDataset> {
        if count == 0 {
            return Err(Error::Usage("sample count must be >= 1".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let m = self.partition.block_size();
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let mut features = vec![0.0; self.partition.total_features()];
            for (i, block) in self.blocks.iter().enumerate() {
                let z = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
                let mean = match label {
                    Label::Class1 => &block.mean1,
                    Label::Class2 => &block.mean2,
                };
                let x = mean + block.covariance.lower() * z;
                features[self.partition.block_range(i)].copy_from_slice(x.as_slice());
            }
            rows.push(DataRow { label, features });
        }
        LabeledDataset::new(self.partition, rows)
    }
}

/// Plug-in fit: per-block sample means for each class, the supplied known
/// covariances, and the common training size. Both classes must provide
/// the same number of rows.
pub fn fit(
    train1: &LabeledDataset,
    train2: &LabeledDataset,
    covariances: &[SpdMatrix],
    partition: BlockPartition,
    prior1: Scalar,
) -> Result<FittedClassifier> {
    if train1.partition() != partition || train2.partition() != partition {
        return Err(Error::Usage(
            "training data does not match the requested partition".into(),
        ));
    }
    if !train1.is_single_class(Label::Class1) || !train2.is_single_class(Label::Class2) {
        return Err(Error::Usage(
            "fit expects class-1 rows in train1 and class-2 rows in train2".into(),
        ));
    }
    let n = train1.len();
    if n == 0 || train2.len() != n {
        return Err(Error::Usage(format!(
            "fit requires equal nonzero class counts, got {} and {}",
            train1.len(),
            train2.len()
        )));
    }
    if covariances.len() != partition.num_blocks() {
        return Err(Error::Usage(format!(
            "{} covariances supplied for {} blocks",
            covariances.len(),
            partition.num_blocks()
        )));
    }
    if covariances
        .iter()
        .any(|c| c.dim() != partition.block_size())
    {
        return Err(Error::Usage(
            "covariance dimension does not match the block size".into(),
        ));
    }
    if !(prior1 > 0.0 && prior1 < 1.0) {
        return Err(Error::Usage(format!(
            "prior1 must lie strictly inside (0, 1), got {prior1}"
        )));
    }

    let mut blocks = Vec::with_capacity(partition.num_blocks());
    for (i, covariance) in covariances.iter().enumerate() {
        let range = partition.block_range(i);
        let mean1 = block_mean(train1, range.clone());
        let mean2 = block_mean(train2, range);
        blocks.push(FittedBlock::new(mean1, mean2, covariance.clone())?);
    }
    let log_prior_ratio = ((1.0 - prior1) / prior1).ln();
    FittedClassifier::new(partition, blocks, n, log_prior_ratio)
}

fn block_mean(data: &LabeledDataset, range: std::ops::Range<usize>) -> Vec<Scalar> {
    let n = data.len() as Scalar;
    let mut mean = vec![0.0; range.len()];
    for row in data.rows() {
        for (acc, x) in mean.iter_mut().zip(&row.features[range.clone()]) {
            *acc += x;
        }
    }
    for v in &mut mean {
        *v /= n;
    }
    mean
}

#[derive(Serialize, Deserialize)]
struct RawBlock {
    mean1: Vec<Scalar>,
    mean2: Vec<Scalar>,
    covariance: Vec<Vec<Scalar>>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    kappa: usize,
    block_size: usize,
    prior1: Scalar,
    blocks: Vec<RawBlock>,
}

impl TryFrom<RawModel> for PopulationModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let blocks = raw
            .blocks
            .into_iter()
            .map(|b| BlockParams::new(b.mean1, b.mean2, SpdMatrix::from_rows(&b.covariance)?))
            .collect::<Result<Vec<_>>>()?;
        let model = PopulationModel::new(blocks, raw.prior1)?;
        if model.partition.num_blocks() != raw.kappa
            || model.partition.block_size() != raw.block_size
        {
            return Err(Error::Model(format!(
                "model header says {} blocks of size {}, blocks say {} of size {}",
                raw.kappa,
                raw.block_size,
                model.partition.num_blocks(),
                model.partition.block_size()
            )));
        }
        Ok(model)
    }
}

impl From<PopulationModel> for RawModel {
    fn from(model: PopulationModel) -> Self {
        RawModel {
            kappa: model.partition.num_blocks(),
            block_size: model.partition.block_size(),
            prior1: model.prior1,
            blocks: model
                .blocks
                .iter()
                .map(|b| RawBlock {
                    mean1: b.mean1().to_vec(),
                    mean2: b.mean2().to_vec(),
                    covariance: b.covariance.to_rows(),
                })
                .collect(),
        }
    }
}
