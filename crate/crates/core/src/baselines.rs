//! Prior projection-design algorithms used as comparison baselines: Gram
//! shrinkage (Elad), Welch-bound clamping (Xu et al.), the eigenvalue
//! whitening closed form (Duarte-Carvajalino & Sapiro), and plain random
//! projections.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dmcmp::Dictionary;
use crate::error::{Error, Result};
use crate::matrix::{normalize_columns, welch_bound, DenseMatrix, GramMatrix};

/// Parameters of the shrink rule: entries at or above `threshold` scale by
/// `down_scale`, entries in the middle band clip to `down_scale * threshold`,
/// small entries pass through.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EladParams {
    pub threshold: f64,
    pub down_scale: f64,
    pub iters: usize,
}

impl Default for EladParams {
    fn default() -> Self {
        Self {
            threshold: 0.2,
            down_scale: 0.95,
            iters: 100,
        }
    }
}

impl EladParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "shrink threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if !(self.down_scale > 0.0 && self.down_scale < 1.0) {
            return Err(Error::Config(format!(
                "down-scale factor must lie in (0, 1), got {}",
                self.down_scale
            )));
        }
        if self.iters == 0 {
            return Err(Error::Config("iteration count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct XuParams {
    pub iters: usize,
}

impl Default for XuParams {
    fn default() -> Self {
        Self { iters: 100 }
    }
}

impl XuParams {
    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::Config("iteration count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Three-band shrink of the off-diagonal Gram entries; the diagonal is left
/// untouched.
pub fn elad_shrink(g: &GramMatrix, params: &EladParams) -> DenseMatrix {
    let t = params.threshold;
    let gamma = params.down_scale;
    let src = g.as_dmatrix();
    let mut out = src.clone();
    for i in 0..src.nrows() {
        for j in 0..src.ncols() {
            if i == j {
                continue;
            }
            let v = src[(i, j)];
            let a = v.abs();
            out[(i, j)] = if a >= t {
                gamma * v
            } else if a >= gamma * t {
                gamma * t * v.signum()
            } else {
                v
            };
        }
    }
    DenseMatrix::from_dmatrix(out).expect("shrink of a finite matrix is finite")
}

fn clamp_to_welch(g: &GramMatrix, mu_w: f64) -> DenseMatrix {
    let src = g.as_dmatrix();
    let mut out = src.clone();
    for i in 0..src.nrows() {
        for j in 0..src.ncols() {
            if i == j {
                out[(i, j)] = 1.0;
            } else {
                let v = src[(i, j)];
                if v.abs() > mu_w {
                    out[(i, j)] = mu_w * v.signum();
                }
            }
        }
    }
    DenseMatrix::from_dmatrix(out).expect("clamp of a finite matrix is finite")
}

/// Rank-m square-root factor of a symmetric matrix: keep the m largest
/// eigenvalues (clamped at zero) and return S = Lambda_m^{1/2} V_m^T with
/// S^T S the truncated matrix.
fn rank_reduced_sqrt_factor(sym: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let n = sym.ncols();
    let eig = SymmetricEigen::new(sym.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut s = DMatrix::zeros(m, n);
    for (row, &idx) in order.iter().take(m).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        let scale = lambda.sqrt();
        for col in 0..n {
            s[(row, col)] = scale * eig.eigenvectors[(col, idx)];
        }
    }
    s
}

/// Shared iteration of the Gram-shaping baselines: normalize the projected
/// dictionary, reshape its Gram with the supplied rule, truncate the rank to
/// m, factor, and recover P through the dictionary pseudoinverse.
///
/// Aggressive reshaping can collapse a column of P D entirely (the shaping
/// drive has degenerate fixed points); the loop then stops early and returns
/// the last projection whose columns all normalize.
fn gram_shaping_loop(
    d: &Dictionary,
    m: usize,
    iters: usize,
    seed: u64,
    reshape: impl Fn(&GramMatrix) -> DenseMatrix,
) -> Result<DenseMatrix> {
    if m == 0 || m > d.dim() {
        return Err(Error::InvalidDims { m, n: d.dim() });
    }
    let factor = crate::dmcmp::DictFactor::new(d)?;
    let dm = d.as_dmatrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = DenseMatrix::standard_normal(m, d.dim(), &mut rng)?.into_dmatrix();
    let mut last_good: Option<DMatrix<f64>> = None;
    for _ in 0..iters {
        let effective = match normalize_columns(&DenseMatrix::from_dmatrix(&p * dm)?) {
            Ok(e) => e,
            Err(Error::ZeroColumn { .. }) => break,
            Err(e) => return Err(e),
        };
        last_good = Some(p.clone());
        let reshaped = reshape(&effective.gram()).into_dmatrix();
        let symmetrized = (&reshaped + reshaped.transpose()) * 0.5;
        let s = rank_reduced_sqrt_factor(&symmetrized, m);
        p = factor.least_squares_projection(&s, dm);
    }
    if normalize_columns(&DenseMatrix::from_dmatrix(&p * dm)?).is_err() {
        p = last_good.ok_or(Error::ZeroColumn { index: 0 })?;
    }
    DenseMatrix::from_dmatrix(p)
}

/// Iterative Gram-shrinkage projection design.
pub fn elad_projection(
    d: &Dictionary,
    m: usize,
    params: &EladParams,
    seed: u64,
) -> Result<DenseMatrix> {
    params.validate()?;
    gram_shaping_loop(d, m, params.iters, seed, |g| elad_shrink(g, params))
}

/// Welch-bound-targeting projection design: off-diagonal Gram entries are
/// clamped to the bound and the diagonal reset to one before each rank
/// reduction.
pub fn xu_projection(d: &Dictionary, m: usize, params: &XuParams, seed: u64) -> Result<DenseMatrix> {
    params.validate()?;
    let mu_w = welch_bound(m, d.atoms())?;
    gram_shaping_loop(d, m, params.iters, seed, |g| clamp_to_welch(g, mu_w))
}

/// Closed-form whitening projection: eigendecompose D D^T and invert the
/// square roots of the top m eigenvalues, making the projected Gram match
/// the identity on that block. Deterministic, no iterations.
pub fn duarte_projection(d: &Dictionary, m: usize) -> Result<DenseMatrix> {
    if m == 0 || m > d.dim() {
        return Err(Error::InvalidDims { m, n: d.dim() });
    }
    let ddt = d.as_dmatrix() * d.as_dmatrix().transpose();
    let eig = SymmetricEigen::new(ddt);
    let dim = d.dim();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut p = DMatrix::zeros(m, dim);
    for (row, &idx) in order.iter().take(m).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= 1e-12 {
            return Err(Error::RankDeficient(format!(
                "eigenvalue {row} of D D^T is {lambda}"
            )));
        }
        let scale = 1.0 / lambda.sqrt();
        for col in 0..dim {
            p[(row, col)] = scale * eig.eigenvectors[(col, idx)];
        }
    }
    DenseMatrix::from_dmatrix(p)
}

/// Seeded standard-normal projection.
pub fn random_projection(m: usize, d: usize, seed: u64) -> Result<DenseMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::standard_normal(m, d, &mut rng)
}
