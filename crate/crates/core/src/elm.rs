//! Extreme learning machine: a single hidden layer with random, fixed input
//! weights and output weights solved in closed form.
//!
//! For inputs `X` (N x n) the hidden layer output is
//! `H[j, i] = g(w_i . x_j + b_i)`, and the output weights are the
//! minimum-norm least-squares solution of `H beta = T`, i.e. `beta = pinv(H) T`,
//! where `T` holds one-hot class targets. A positive ridge term switches to
//! `beta = (H^T H + lambda I)^-1 H^T T`.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    HardLimit,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::HardLimit => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::HardLimit => "hardlimit",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "hardlimit" | "hardlim" => Ok(Activation::HardLimit),
            other => Err(Error::InvalidArgument(format!("unknown activation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    /// One row of input weights per hidden node.
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
    pub activation: Activation,
    pub seed: u64,
}

impl HiddenLayer {
    /// Weights and biases i.i.d. uniform on `[-1, 1]`.
    pub fn random(n_inputs: usize, n_hidden: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = DMatrix::from_fn(n_hidden, n_inputs, |_, _| rng.gen_range(-1.0..=1.0));
        let biases = DVector::from_fn(n_hidden, |_, _| rng.gen_range(-1.0..=1.0));
        Self {
            weights,
            biases,
            activation,
            seed,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.nrows()
    }

    /// `H` (N x n_hidden) for inputs `x` (N x n_inputs).
    pub fn output(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                found: x.ncols(),
            });
        }
        let mut h = x * self.weights.transpose();
        for mut row in h.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.biases.iter()) {
                *v = self.activation.apply(*v + b);
            }
        }
        Ok(h)
    }
}

/// Solves `H beta = T` in the least-squares sense.
///
/// With `ridge == 0` the minimum-norm solution `pinv(H) T` comes from an SVD,
/// dropping singular values below `max(N, n_hidden) * eps * sigma_max`. With
/// `ridge > 0` the regularized normal equations are solved by Cholesky.
pub fn pinv_solve(h: &DMatrix<f64>, t: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    if h.nrows() != t.nrows() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: t.nrows(),
        });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge must be >= 0, got {ridge}")));
    }
    if h.iter().chain(t.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite entry in H or T".into()));
    }
    if ridge > 0.0 {
        let ht = h.transpose();
        let mut gram = &ht * h;
        for i in 0..gram.nrows() {
            gram[(i, i)] += ridge;
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("ridge system is not positive definite".into()))?;
        return Ok(chol.solve(&(ht * t)));
    }
    let svd = h
        .clone()
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let sigma_max = svd.singular_values.max();
    let tol = h.nrows().max(h.ncols()) as f64 * f64::EPSILON * sigma_max;
    svd.solve(t, tol)
        .map_err(|e| Error::NumericalFailure(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmConfig {
    /// `None` picks [`default_hidden_nodes`].
    pub hidden_nodes: Option<usize>,
    pub activation: Activation,
    pub seed: u64,
    pub ridge: f64,
}

impl Default for ElmConfig {
    fn default() -> Self {
        Self {
            hidden_nodes: None,
            activation: Activation::Sigmoid,
            seed: 0,
            ridge: 1e-6,
        }
    }
}

/// `min(N, max(20, 2 * features))`.
pub fn default_hidden_nodes(n_rows: usize, n_features: usize) -> usize {
    n_rows.min((2 * n_features).max(20)).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    pub hidden: HiddenLayer,
    /// n_hidden x classes.
    pub beta: DMatrix<f64>,
    /// Class label of each output column, ascending.
    pub codebook: Vec<usize>,
    pub ridge: f64,
}

impl ElmModel {
    pub fn train(x: &DMatrix<f64>, labels: &[usize], cfg: &ElmConfig) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: labels.len(),
            });
        }
        let mut codebook = labels.to_vec();
        codebook.sort_unstable();
        codebook.dedup();
        if codebook.len() < 2 {
            return Err(Error::SingleClassTraining);
        }
        let n_hidden = cfg
            .hidden_nodes
            .unwrap_or_else(|| default_hidden_nodes(x.nrows(), x.ncols()));
        let hidden = HiddenLayer::random(x.ncols(), n_hidden, cfg.activation, cfg.seed);
        let h = hidden.output(x)?;
        let t = DMatrix::from_fn(x.nrows(), codebook.len(), |r, c| {
            if labels[r] == codebook[c] {
                1.0
            } else {
                0.0
            }
        });
        let beta = pinv_solve(&h, &t, cfg.ridge)?;
        Ok(Self {
            hidden,
            beta,
            codebook,
            ridge: cfg.ridge,
        })
    }

    pub fn train_features(fm: &FeatureMatrix, cfg: &ElmConfig) -> Result<Self> {
        Self::train(&to_matrix(fm), &fm.labels, cfg)
    }

    /// Network outputs `H beta` (N x classes).
    pub fn outputs(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.hidden.output(x)? * &self.beta)
    }

    /// Arg-max class per row; ties go to the lowest codebook column.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        let out = self.outputs(x)?;
        Ok(out
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for c in 1..row.len() {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                self.codebook[best]
            })
            .collect())
    }

    pub fn predict_features(&self, fm: &FeatureMatrix) -> Result<Vec<usize>> {
        self.predict(&to_matrix(fm))
    }

    pub fn to_blob(&self) -> ElmBlob {
        ElmBlob {
            activation: self.hidden.activation,
            seed: self.hidden.seed,
            ridge: self.ridge,
            n_inputs: self.hidden.n_inputs(),
            n_hidden: self.hidden.n_hidden(),
            weights: row_major(&self.hidden.weights),
            biases: self.hidden.biases.iter().copied().collect(),
            beta: row_major(&self.beta),
            codebook: self.codebook.clone(),
        }
    }

    pub fn from_blob(blob: &ElmBlob) -> Result<Self> {
        let classes = blob.codebook.len();
        if blob.weights.len() != blob.n_hidden * blob.n_inputs
            || blob.biases.len() != blob.n_hidden
            || blob.beta.len() != blob.n_hidden * classes
        {
            return Err(Error::ModelFormat("inconsistent ELM dimensions".into()));
        }
        Ok(Self {
            hidden: HiddenLayer {
                weights: DMatrix::from_row_slice(blob.n_hidden, blob.n_inputs, &blob.weights),
                biases: DVector::from_vec(blob.biases.clone()),
                activation: blob.activation,
                seed: blob.seed,
            },
            beta: DMatrix::from_row_slice(blob.n_hidden, classes, &blob.beta),
            codebook: blob.codebook.clone(),
            ridge: blob.ridge,
        })
    }
}

/// Serializable form of an [`ElmModel`]; matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmBlob {
    pub activation: Activation,
    pub seed: u64,
    pub ridge: f64,
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub beta: Vec<f64>,
    pub codebook: Vec<usize>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub fn to_matrix(fm: &FeatureMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(fm.n_rows(), fm.n_cols(), fm.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn hidden_output_examples() {
        let zero = HiddenLayer {
            weights: DMatrix::zeros(3, 2),
            biases: DVector::zeros(3),
            activation: Activation::Sigmoid,
            seed: 0,
        };
        let h = zero.output(&DMatrix::from_element(4, 2, 7.0)).unwrap();
        assert!(h.iter().all(|&v| v == 0.5));

        let one = HiddenLayer {
            weights: DMatrix::from_element(1, 1, 1.0),
            biases: DVector::zeros(1),
            activation: Activation::Sigmoid,
            seed: 0,
        };
        assert_eq!(one.output(&DMatrix::zeros(1, 1)).unwrap()[(0, 0)], 0.5);
        assert!(matches!(
            one.output(&DMatrix::zeros(1, 2)),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn hidden_output_matches_scalar_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for act in [Activation::Sigmoid, Activation::Tanh, Activation::HardLimit] {
            let layer = HiddenLayer::random(3, 5, act, 2);
            let x = rand_matrix(&mut rng, 4, 3);
            let h = layer.output(&x).unwrap();
            for j in 0..4 {
                for i in 0..5 {
                    let z: f64 = (0..3).map(|c| layer.weights[(i, c)] * x[(j, c)]).sum::<f64>()
                        + layer.biases[i];
                    assert!((h[(j, i)] - act.apply(z)).abs() <= 1e-12);
                }
            }
        }
        let layer = HiddenLayer::random(3, 50, Activation::Sigmoid, 1);
        assert!(layer.weights.iter().chain(layer.biases.iter()).all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn pinv_examples() {
        let t = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 3.0, 0.5, 0.0, 4.0]);
        let beta = pinv_solve(&DMatrix::identity(2, 2), &t, 0.0).unwrap();
        assert!((beta - &t).abs().max() < 1e-15);

        let h = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let t = DMatrix::from_row_slice(2, 1, &[0.0, 2.0]);
        let beta = pinv_solve(&h, &t, 0.0).unwrap();
        assert!((beta[(0, 0)] - 1.0).abs() < 1e-14);

        // Rank-deficient: minimum-norm solution splits weight evenly.
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let t = DMatrix::from_row_slice(2, 1, &[2.0, 2.0]);
        let beta = pinv_solve(&h, &t, 0.0).unwrap();
        assert!((beta[(0, 0)] - 1.0).abs() < 1e-12 && (beta[(1, 0)] - 1.0).abs() < 1e-12);

        let bad = DMatrix::from_element(1, 1, f64::NAN);
        assert!(matches!(pinv_solve(&bad, &t.rows(0, 1).into(), 0.0), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn normal_equations_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let h = rand_matrix(&mut rng, 6, 4);
            let t = rand_matrix(&mut rng, 6, 3);
            let beta = pinv_solve(&h, &t, 0.0).unwrap();
            let resid = h.transpose() * &h * &beta - h.transpose() * &t;
            assert!(resid.abs().max() <= 1e-8);
        }
    }

    #[test]
    fn ridge_shrinks_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = rand_matrix(&mut rng, 10, 6);
        let t = rand_matrix(&mut rng, 10, 2);
        let norms: Vec<f64> = [0.0, 1e-3, 1e-1, 1.0, 10.0]
            .iter()
            .map(|&l| pinv_solve(&h, &t, l).unwrap().norm())
            .collect();
        assert!(norms.windows(2).all(|w| w[0] >= w[1]), "{norms:?}");
    }

    #[test]
    fn two_point_interpolation() {
        let x = DMatrix::from_row_slice(2, 1, &[0.2, 0.9]);
        let cfg = ElmConfig {
            hidden_nodes: Some(2),
            ridge: 0.0,
            seed: 3,
            ..Default::default()
        };
        let model = ElmModel::train(&x, &[4, 7], &cfg).unwrap();
        assert_eq!(model.codebook, vec![4, 7]);
        let out = model.outputs(&x).unwrap();
        let target = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!((out - target).abs().max() <= 1e-6);
        assert_eq!(model.predict(&x).unwrap(), vec![4, 7]);
    }

    #[test]
    fn conflicting_duplicates_and_single_class() {
        let x = DMatrix::from_row_slice(3, 1, &[0.5, 0.5, 0.1]);
        let model = ElmModel::train(&x, &[0, 1, 1], &ElmConfig::default()).unwrap();
        let out = model.outputs(&x).unwrap();
        assert!(out.iter().all(|v| v.is_finite()));
        assert!(matches!(
            ElmModel::train(&x, &[2, 2, 2], &ElmConfig::default()),
            Err(Error::SingleClassTraining)
        ));
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = rand_matrix(&mut rng, 12, 5);
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let cfg = ElmConfig {
            seed: 99,
            ..Default::default()
        };
        let a = ElmModel::train(&x, &labels, &cfg).unwrap();
        let b = ElmModel::train(&x, &labels, &cfg).unwrap();
        assert_eq!(a.beta.as_slice(), b.beta.as_slice());
        assert_eq!(a, ElmModel::from_blob(&a.to_blob()).unwrap());
    }

    #[test]
    fn argmax_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = rand_matrix(&mut rng, 8, 3);
        let labels = vec![0, 1, 2, 0, 1, 2, 0, 1];
        let mut model = ElmModel::train(&x, &labels, &ElmConfig::default()).unwrap();
        let before = model.predict(&x).unwrap();
        model.beta *= 3.0;
        assert_eq!(model.predict(&x).unwrap(), before);
        model.beta.fill(0.0);
        assert!(model.predict(&x).unwrap().iter().all(|&l| l == 0));
    }

    #[test]
    fn least_squares_optimality_under_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let h = rand_matrix(&mut rng, 9, 5);
            let t = rand_matrix(&mut rng, 9, 2);
            let beta = pinv_solve(&h, &t, 0.0).unwrap();
            let base = (&h * &beta - &t).norm();
            for _ in 0..20 {
                let dir = rand_matrix(&mut rng, 5, 2);
                let moved = &beta + dir.normalize() * 1e-3;
                assert!((&h * moved - &t).norm() >= base - 1e-10);
            }
        }
    }
}
