//! Sparse-signal generation, Orthogonal Matching Pursuit, and
//! reconstruction-error measurement.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dmcmp::Dictionary;
use crate::error::{Error, Result};
use crate::matrix::{mutual_coherence, UnitColumnMatrix};

/// Residual norm below which the greedy loop stops early (guards the
/// all-zero measurement case).
const RESIDUAL_STOP: f64 = 1e-12;

/// Relative singular-value cutoff for declaring the active sub-matrix
/// rank-deficient.
const LS_RANK_TOL: f64 = 1e-12;

/// A length-n coefficient vector with exactly `support.len()` nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    len: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(len: usize, mut support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} support indices but {} values",
                support.len(),
                values.len()
            )));
        }
        if support.len() > len {
            return Err(Error::BadSparsity {
                t: support.len(),
                limit: len,
            });
        }
        let mut paired: Vec<(usize, f64)> = support.drain(..).zip(values).collect();
        paired.sort_by_key(|&(i, _)| i);
        for w in paired.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::ShapeMismatch(format!(
                    "duplicate support index {}",
                    w[0].0
                )));
            }
        }
        for &(i, v) in &paired {
            if i >= len {
                return Err(Error::ShapeMismatch(format!(
                    "support index {i} out of range for length {len}"
                )));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(Error::ShapeMismatch(format!(
                    "support value at index {i} must be nonzero and finite, got {v}"
                )));
            }
        }
        let (support, values) = paired.into_iter().unzip();
        Ok(Self {
            len,
            support,
            values,
        })
    }

    pub fn zero(len: usize) -> Self {
        Self {
            len,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

/// Draws a T-sparse signal: a uniformly random support and values i.i.d.
/// uniform on [-1, 1], resampling exact zeros.
pub fn gen_sparse_signal<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Result<SparseSignal> {
    if t > n {
        return Err(Error::BadSparsity { t, limit: n });
    }
    if t == 0 {
        return Ok(SparseSignal::zero(n));
    }
    let mut support = rand::seq::index::sample(rng, n, t).into_vec();
    support.sort_unstable();
    let values: Vec<f64> = (0..t)
        .map(|_| loop {
            let v: f64 = rng.random_range(-1.0..=1.0);
            if v != 0.0 {
                break v;
            }
        })
        .collect();
    SparseSignal::new(n, support, values)
}

/// Solver-side output of a recovery: the full-length coefficient estimate,
/// the selected support in selection order, and the final residual norm.
/// Signal-space error and the success verdict are judged against ground
/// truth separately (see [`assess_recovery`]).
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub coefficients: Vec<f64>,
    pub support: Vec<usize>,
    pub residual_norm: f64,
}

/// Ground-truth evaluation of an estimate: reconstruction error in signal
/// space and the thresholded success flag (success iff squared error is
/// below the threshold).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryAssessment {
    pub reconstruction_error: f64,
    pub success: bool,
}

pub fn assess_recovery(
    d: &Dictionary,
    truth: &SparseSignal,
    estimate: &[f64],
    success_threshold: f64,
) -> Result<RecoveryAssessment> {
    let reconstruction_error = recon_error(d, truth, estimate)?;
    Ok(RecoveryAssessment {
        reconstruction_error,
        success: reconstruction_error * reconstruction_error < success_threshold,
    })
}

/// Orthogonal Matching Pursuit: T rounds of greedy atom selection (largest
/// absolute correlation with the residual, ties to the smallest index)
/// followed by a full least-squares refit on the accumulated support.
pub fn omp(m: &UnitColumnMatrix, y: &[f64], t: usize) -> Result<RecoveryResult> {
    let (rows, n) = (m.rows(), m.cols());
    if y.len() != rows {
        return Err(Error::ShapeMismatch(format!(
            "measurement length {} but matrix has {rows} rows",
            y.len()
        )));
    }
    if t > rows.min(n) {
        return Err(Error::BadSparsity {
            t,
            limit: rows.min(n),
        });
    }
    let mm = m.as_dmatrix();
    let y = DVector::from_column_slice(y);
    let mut residual = y.clone();
    let mut support: Vec<usize> = Vec::with_capacity(t);
    let mut selected = vec![false; n];
    let mut solution: Option<DVector<f64>> = None;

    for _ in 0..t {
        if residual.norm() <= RESIDUAL_STOP {
            break;
        }
        let correlations = mm.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if selected[j] {
                continue;
            }
            let a = correlations[j].abs();
            // Strict improvement keeps the smallest index on ties.
            if best.map_or(true, |(_, b)| a > b) {
                best = Some((j, a));
            }
        }
        let (pick, _) = best.expect("t <= n leaves an unselected atom");
        selected[pick] = true;
        support.push(pick);

        let mut active = DMatrix::zeros(rows, support.len());
        for (col, &atom) in support.iter().enumerate() {
            active.set_column(col, &mm.column(atom));
        }
        let svd = active.svd(true, true);
        let max_sv = svd.singular_values.max();
        let min_sv = svd.singular_values.min();
        if !(min_sv > LS_RANK_TOL * max_sv) {
            return Err(Error::DegenerateLs(format!(
                "active set {support:?} has singular values in [{min_sv}, {max_sv}]"
            )));
        }
        let coeffs = svd
            .solve(&y, 0.0)
            .map_err(|e| Error::DegenerateLs(e.to_string()))?;
        let mut fitted = DVector::zeros(rows);
        for (col, &atom) in support.iter().enumerate() {
            fitted += mm.column(atom) * coeffs[col];
        }
        residual = &y - fitted;
        solution = Some(coeffs);
    }

    let mut coefficients = vec![0.0; n];
    if let Some(coeffs) = solution {
        for (col, &atom) in support.iter().enumerate() {
            coefficients[atom] = coeffs[col];
        }
    }
    Ok(RecoveryResult {
        coefficients,
        support,
        residual_norm: residual.norm(),
    })
}

/// Signal-space reconstruction error |D alpha_true - D alpha_hat|_2.
pub fn recon_error(d: &Dictionary, truth: &SparseSignal, estimate: &[f64]) -> Result<f64> {
    if truth.len() != d.atoms() || estimate.len() != d.atoms() {
        return Err(Error::ShapeMismatch(format!(
            "dictionary has {} atoms, truth length {}, estimate length {}",
            d.atoms(),
            truth.len(),
            estimate.len()
        )));
    }
    let diff: Vec<f64> = truth
        .to_dense()
        .iter()
        .zip(estimate)
        .map(|(a, b)| a - b)
        .collect();
    let diff = DVector::from_vec(diff);
    Ok((d.as_dmatrix() * diff).norm())
}

/// Coherence-based exact-recovery condition: T strictly below
/// (1 + 1/mu) / 2 guarantees that greedy pursuit finds the true support.
/// Orthogonal (or single-column) matrices have mu = 0 and satisfy the
/// condition for every T.
pub fn recovery_guarantee_holds(m: &UnitColumnMatrix, t: usize) -> bool {
    let mu = if m.cols() < 2 {
        0.0
    } else {
        mutual_coherence(m).expect("at least two columns")
    };
    if mu <= 0.0 {
        return true;
    }
    (t as f64) < 0.5 * (1.0 + 1.0 / mu)
}
