//! Joint design of a projection matrix against a fixed dictionary.
//!
//! Finds (M, P) minimizing the smoothed coherence surrogate of M plus a
//! coupling penalty |M - P D|_F^2 / (2 beta) that drags the projected
//! dictionary P D toward the low-coherence target. Each iteration updates P
//! by least squares (closed form through the pseudoinverse of D), the dual
//! variable, and then M by a proximal step; a continuation wrapper shrinks
//! both rho and beta geometrically.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dmcm::{IterRecord, SolveTrace};
use crate::error::{Error, Result};
use crate::matrix::{normalize_columns, DenseMatrix, UnitColumnMatrix};
use crate::smoothing::{eval_smoothed, grad_from_dual, SmoothingState};

/// Relative singular-value cutoff below which a dictionary counts as
/// row-rank deficient.
const ROW_RANK_TOL: f64 = 1e-10;

/// A fixed d x n dictionary with full row rank (d <= n).
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    inner: DenseMatrix,
}

impl Dictionary {
    pub fn new(inner: DenseMatrix) -> Result<Self> {
        let (d, n) = (inner.rows(), inner.cols());
        if d > n {
            return Err(Error::InvalidDims { m: d, n });
        }
        let svd = inner.as_dmatrix().clone().svd(false, false);
        let max_sv = svd.singular_values.max();
        let min_sv = svd.singular_values.min();
        if !(min_sv > ROW_RANK_TOL * max_sv) {
            return Err(Error::RankDeficient(format!(
                "dictionary singular values span [{min_sv}, {max_sv}]"
            )));
        }
        Ok(Self { inner })
    }

    /// The n x n identity dictionary; used when a method runs directly on a
    /// target matrix rather than a projected one.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DenseMatrix::identity(n)?)
    }

    /// Seeded standard-normal dictionary.
    pub fn random_gaussian(d: usize, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(DenseMatrix::standard_normal(d, n, &mut rng)?)
    }

    /// Seeded random orthogonal n x n dictionary (the Q factor of a Gaussian
    /// draw). Behaves like the identity for every rotation-covariant design
    /// method while keeping eigenbases generic.
    pub fn random_rotation(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DenseMatrix::standard_normal(n, n, &mut rng)?;
        let q = g.into_dmatrix().qr().q();
        Self::new(DenseMatrix::from_dmatrix(q)?)
    }

    pub fn atoms(&self) -> usize {
        self.inner.cols()
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        self.inner.as_dmatrix()
    }
}

/// Cached Cholesky factor of D D^T, computed once per solve since the
/// dictionary never changes across iterations.
pub(crate) struct DictFactor {
    chol: Cholesky<f64, Dyn>,
}

impl DictFactor {
    pub(crate) fn new(d: &Dictionary) -> Result<Self> {
        let ddt = d.as_dmatrix() * d.as_dmatrix().transpose();
        let chol = Cholesky::new(ddt).ok_or_else(|| {
            Error::RankDeficient("D D^T is not positive definite".into())
        })?;
        Ok(Self { chol })
    }

    /// argmin_P |target - P D|_F = target D^T (D D^T)^{-1}.
    pub(crate) fn least_squares_projection(
        &self,
        target: &DMatrix<f64>,
        d: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let rhs = d * target.transpose();
        self.chol.solve(&rhs).transpose()
    }
}

/// Inner alternating-minimization parameters.
#[derive(Debug, Clone, Copy)]
pub struct AmConfig {
    pub beta: f64,
    pub smoothing: SmoothingState,
    pub inner_iters: usize,
}

impl AmConfig {
    pub fn new(beta: f64, rho: f64, inner_iters: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!(
                "coupling weight beta must be positive, got {beta}"
            )));
        }
        if inner_iters == 0 {
            return Err(Error::Config("inner iteration count must be >= 1".into()));
        }
        Ok(Self {
            beta,
            smoothing: SmoothingState::new(rho)?,
            inner_iters,
        })
    }
}

/// Geometric continuation schedule shrinking both rho and beta.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct AmSchedule {
    pub rho0: f64,
    pub beta0: f64,
    pub eta: f64,
    pub outer_iters: usize,
    pub rho_floor: f64,
    pub beta_floor: f64,
    pub inner_iters: usize,
}

impl Default for AmSchedule {
    fn default() -> Self {
        Self {
            rho0: 0.5,
            beta0: 2.0,
            eta: 1.2,
            outer_iters: 1000,
            rho_floor: 1e-6,
            beta_floor: 1e-6,
            inner_iters: 15,
        }
    }
}

impl AmSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 1.0) {
            return Err(Error::Config(format!("eta must exceed 1, got {}", self.eta)));
        }
        if !(self.rho_floor > 0.0 && self.beta_floor > 0.0) {
            return Err(Error::Config("floors must be positive".into()));
        }
        if self.rho0 < self.rho_floor || self.beta0 < self.beta_floor {
            return Err(Error::Config(
                "initial rho/beta must not start below their floors".into(),
            ));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::Config("iteration counts must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_shapes(m: &UnitColumnMatrix, p: &DenseMatrix, d: &Dictionary) -> Result<()> {
    if p.rows() != m.rows() || p.cols() != d.dim() || m.cols() != d.atoms() {
        return Err(Error::ShapeMismatch(format!(
            "M is {}x{}, P is {}x{}, D is {}x{}",
            m.rows(),
            m.cols(),
            p.rows(),
            p.cols(),
            d.dim(),
            d.atoms()
        )));
    }
    Ok(())
}

/// Joint objective: smoothed coherence surrogate plus the coupling penalty
/// |M - P D|_F^2 / (2 beta).
pub fn objective(
    m: &UnitColumnMatrix,
    p: &DenseMatrix,
    d: &Dictionary,
    cfg: &AmConfig,
) -> Result<f64> {
    check_shapes(m, p, d)?;
    let eval = eval_smoothed(m.as_dmatrix(), cfg.smoothing.rho());
    let gap = (m.as_dmatrix() - p.as_dmatrix() * d.as_dmatrix()).norm_squared();
    Ok(eval.f_rho + gap / (2.0 * cfg.beta))
}

/// Proximal update of M: average the gradient step with the coupled target
/// P D, weighted by 1/alpha and 1/beta, then renormalize the columns.
pub fn am_update_m(
    m_k: &UnitColumnMatrix,
    p_k: &DenseMatrix,
    d: &Dictionary,
    cfg: &AmConfig,
) -> Result<UnitColumnMatrix> {
    check_shapes(m_k, p_k, d)?;
    let eval = eval_smoothed(m_k.as_dmatrix(), cfg.smoothing.rho());
    let grad = grad_from_dual(m_k.as_dmatrix(), &eval.dual);
    let pd = p_k.as_dmatrix() * d.as_dmatrix();
    anchor_and_normalize(m_k, &pd, &grad, cfg)
}

fn anchor_and_normalize(
    m_k: &UnitColumnMatrix,
    pd: &DMatrix<f64>,
    grad: &DMatrix<f64>,
    cfg: &AmConfig,
) -> Result<UnitColumnMatrix> {
    let inv_alpha = 1.0 / cfg.smoothing.alpha();
    let inv_beta = 1.0 / cfg.beta;
    let anchor =
        (m_k.as_dmatrix() * inv_alpha + pd * inv_beta - grad) / (inv_alpha + inv_beta);
    normalize_columns(&DenseMatrix::from_dmatrix(anchor)?)
}

/// Closed-form projection update: the least-squares solution
/// P = M D^T (D D^T)^{-1}, whose residual is orthogonal to the row space
/// of D.
pub fn am_update_p(m_next: &UnitColumnMatrix, d: &Dictionary) -> Result<DenseMatrix> {
    if m_next.cols() != d.atoms() {
        return Err(Error::ShapeMismatch(format!(
            "M has {} columns but D has {} atoms",
            m_next.cols(),
            d.atoms()
        )));
    }
    let factor = DictFactor::new(d)?;
    let p = factor.least_squares_projection(m_next.as_dmatrix(), d.as_dmatrix());
    DenseMatrix::from_dmatrix(p)
}

/// Alternating minimization at fixed (rho, beta): per iteration update P,
/// then the dual variable, then M.
pub fn am_solve(
    m0: &UnitColumnMatrix,
    p0: &DenseMatrix,
    d: &Dictionary,
    cfg: &AmConfig,
) -> Result<(UnitColumnMatrix, DenseMatrix, SolveTrace)> {
    check_shapes(m0, p0, d)?;
    let rho = cfg.smoothing.rho();
    let factor = DictFactor::new(d)?;
    let dm = d.as_dmatrix();

    let mut m = m0.clone();
    let mut p = p0.as_dmatrix().clone();
    let mut eval = eval_smoothed(m.as_dmatrix(), rho);
    let initial_gap = (m.as_dmatrix() - &p * dm).norm_squared();
    let initial_objective = eval.f_rho + initial_gap / (2.0 * cfg.beta);
    let mut trace = SolveTrace::start(eval.f_rho, eval.f_exact, Some(initial_objective), m0);

    for _ in 0..cfg.inner_iters {
        let p_next = factor.least_squares_projection(m.as_dmatrix(), dm);
        let p_step = (&p_next - &p).norm();
        let pd = &p_next * dm;

        let grad = grad_from_dual(m.as_dmatrix(), &eval.dual);
        let m_next = anchor_and_normalize(&m, &pd, &grad, cfg)?;
        let m_step = (m_next.as_dmatrix() - m.as_dmatrix()).norm();

        let next_eval = eval_smoothed(m_next.as_dmatrix(), rho);
        let gap = (m_next.as_dmatrix() - &pd).norm_squared();
        let objective = next_eval.f_rho + gap / (2.0 * cfg.beta);
        trace.push(
            IterRecord {
                iter: trace.len() + 1,
                rho,
                beta: Some(cfg.beta),
                f_rho: next_eval.f_rho,
                f_exact: next_eval.f_exact,
                col_norm_dev: m_next.max_column_norm_deviation(),
                m_step_norm: m_step,
                objective: Some(objective),
                p_step_norm: Some(p_step),
            },
            &m_next,
        );
        m = m_next;
        p = p_next;
        eval = next_eval;
    }
    trace.final_coupling_gap = Some((m.as_dmatrix() - &p * dm).norm());
    Ok((m, DenseMatrix::from_dmatrix(p)?, trace))
}

/// Full continuation run: seed P with standard-normal entries, start M from
/// the renormalized projected dictionary, then alternate solves while rho
/// and beta shrink toward their floors.
pub fn dmcmp_continuation(
    d: &Dictionary,
    measurements: usize,
    sched: &AmSchedule,
    seed: u64,
) -> Result<(UnitColumnMatrix, DenseMatrix, SolveTrace)> {
    sched.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p0 = DenseMatrix::standard_normal(measurements, d.dim(), &mut rng)?;
    let m0 = normalize_columns(&DenseMatrix::from_dmatrix(
        p0.as_dmatrix() * d.as_dmatrix(),
    )?)?;

    let mut rho = sched.rho0;
    let mut beta = sched.beta0;
    let mut m = m0;
    let mut p = p0;
    let mut trace: Option<SolveTrace> = None;
    for _ in 0..sched.outer_iters {
        let cfg = AmConfig::new(beta, rho, sched.inner_iters)?;
        let (m_next, p_next, round) = am_solve(&m, &p, d, &cfg)?;
        match trace.as_mut() {
            Some(t) => t.absorb(round),
            None => trace = Some(round),
        }
        m = m_next;
        p = p_next;
        rho = (rho / sched.eta).max(sched.rho_floor);
        beta = (beta / sched.eta).max(sched.beta_floor);
    }
    let mut trace = trace.expect("at least one continuation round ran");
    trace.final_coupling_gap =
        Some((m.as_dmatrix() - p.as_dmatrix() * d.as_dmatrix()).norm());
    Ok((m, p, trace))
}
