//! Proximal-gradient construction of low mutual coherence matrices.
//!
//! Minimizes the smoothed surrogate over the unit-column sphere product by
//! repeated gradient steps followed by column renormalization (the exact
//! proximal map of the constraint), then wraps the solver in a continuation
//! loop that shrinks the smoothness parameter geometrically until it reaches
//! a floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{normalize_columns, DenseMatrix, UnitColumnMatrix};
use crate::smoothing::{eval_smoothed, grad_from_dual, SmoothingState};

/// Inner proximal-gradient loop parameters.
#[derive(Debug, Clone, Copy)]
pub struct PgConfig {
    pub inner_iters: usize,
    pub smoothing: SmoothingState,
    /// Optional early stop on the iterate displacement norm; `None`
    /// reproduces the fixed-budget protocol.
    pub step_tol: Option<f64>,
}

impl PgConfig {
    pub fn new(inner_iters: usize, rho: f64) -> Result<Self> {
        if inner_iters == 0 {
            return Err(Error::Config("inner iteration count must be >= 1".into()));
        }
        Ok(Self {
            inner_iters,
            smoothing: SmoothingState::new(rho)?,
            step_tol: None,
        })
    }
}

/// Geometric continuation schedule for the smoothness parameter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ContinuationSchedule {
    pub rho0: f64,
    pub eta: f64,
    pub outer_iters: usize,
    pub rho_floor: f64,
    pub inner_iters: usize,
    pub step_tol: Option<f64>,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self {
            rho0: 0.5,
            eta: 1.2,
            outer_iters: 1000,
            rho_floor: 1e-6,
            inner_iters: 15,
            step_tol: None,
        }
    }
}

impl ContinuationSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 1.0) {
            return Err(Error::Config(format!("eta must exceed 1, got {}", self.eta)));
        }
        if !(self.rho_floor > 0.0) {
            return Err(Error::Config(format!(
                "rho floor must be positive, got {}",
                self.rho_floor
            )));
        }
        if self.rho0 < self.rho_floor {
            return Err(Error::Config(format!(
                "rho0 {} is below the floor {}",
                self.rho0, self.rho_floor
            )));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::Config("iteration counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-iteration measurements shared by both solvers. Fields that only the
/// alternating solver fills stay `None` in plain proximal-gradient runs.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    /// Global iterate index; the initial point is index 0, the first
    /// completed iteration produces index 1.
    pub iter: usize,
    pub rho: f64,
    pub beta: Option<f64>,
    pub f_rho: f64,
    pub f_exact: f64,
    pub col_norm_dev: f64,
    pub m_step_norm: f64,
    /// Joint objective value (smoothed term plus coupling) for
    /// alternating-minimization runs.
    pub objective: Option<f64>,
    pub p_step_norm: Option<f64>,
}

/// Full per-iteration history of a solve, plus the best iterate seen by
/// exact objective value. Solvers return the final iterate; callers that
/// prefer the lowest recorded coherence can take `best_m`.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub initial_f_rho: f64,
    pub initial_f_exact: f64,
    pub initial_objective: Option<f64>,
    pub records: Vec<IterRecord>,
    pub best_f_exact: f64,
    pub best_iter: usize,
    pub best_m: UnitColumnMatrix,
    pub final_coupling_gap: Option<f64>,
}

impl SolveTrace {
    pub(crate) fn start(
        initial_f_rho: f64,
        initial_f_exact: f64,
        initial_objective: Option<f64>,
        m0: &UnitColumnMatrix,
    ) -> Self {
        Self {
            initial_f_rho,
            initial_f_exact,
            initial_objective,
            records: Vec::new(),
            best_f_exact: initial_f_exact,
            best_iter: 0,
            best_m: m0.clone(),
            final_coupling_gap: None,
        }
    }

    pub(crate) fn push(&mut self, record: IterRecord, iterate: &UnitColumnMatrix) {
        if record.f_exact < self.best_f_exact {
            self.best_f_exact = record.f_exact;
            self.best_iter = record.iter;
            self.best_m = iterate.clone();
        }
        self.records.push(record);
    }

    /// Appends a warm-started round, renumbering its iterates to continue
    /// this trace.
    pub(crate) fn absorb(&mut self, round: SolveTrace) {
        let offset = self.records.len();
        if round.best_f_exact < self.best_f_exact {
            self.best_f_exact = round.best_f_exact;
            self.best_iter = offset + round.best_iter;
            self.best_m = round.best_m;
        }
        for mut r in round.records {
            r.iter += offset;
            self.records.push(r);
        }
        self.final_coupling_gap = round.final_coupling_gap.or(self.final_coupling_gap);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_f_exact(&self) -> f64 {
        self.records
            .last()
            .map_or(self.initial_f_exact, |r| r.f_exact)
    }
}

/// One proximal-gradient iteration: gradient step then column
/// renormalization.
pub fn pg_step(m_k: &UnitColumnMatrix, state: &SmoothingState) -> Result<UnitColumnMatrix> {
    let eval = eval_smoothed(m_k.as_dmatrix(), state.rho());
    let grad = grad_from_dual(m_k.as_dmatrix(), &eval.dual);
    let shifted = m_k.as_dmatrix() - grad * state.alpha();
    normalize_columns(&DenseMatrix::from_dmatrix(shifted)?)
}

/// Runs the proximal-gradient loop for the configured iteration budget,
/// recording objective values and displacements at every step.
pub fn pg_solve(m0: &UnitColumnMatrix, cfg: &PgConfig) -> Result<(UnitColumnMatrix, SolveTrace)> {
    let rho = cfg.smoothing.rho();
    let alpha = cfg.smoothing.alpha();
    let mut current = m0.clone();
    let mut eval = eval_smoothed(current.as_dmatrix(), rho);
    let mut trace = SolveTrace::start(eval.f_rho, eval.f_exact, None, m0);
    for _ in 0..cfg.inner_iters {
        let grad = grad_from_dual(current.as_dmatrix(), &eval.dual);
        let shifted = current.as_dmatrix() - grad * alpha;
        let next = normalize_columns(&DenseMatrix::from_dmatrix(shifted)?)?;
        let step_norm = (next.as_dmatrix() - current.as_dmatrix()).norm();
        let next_eval = eval_smoothed(next.as_dmatrix(), rho);
        trace.push(
            IterRecord {
                iter: trace.len() + 1,
                rho,
                beta: None,
                f_rho: next_eval.f_rho,
                f_exact: next_eval.f_exact,
                col_norm_dev: next.max_column_norm_deviation(),
                m_step_norm: step_norm,
                objective: None,
                p_step_norm: None,
            },
            &next,
        );
        current = next;
        eval = next_eval;
        if cfg.step_tol.is_some_and(|tol| step_norm <= tol) {
            break;
        }
    }
    Ok((current, trace))
}

/// Continuation wrapper: solve at decreasing smoothness levels, warm-starting
/// each round from the previous solution, with rho clamped at the floor.
pub fn dmcm_continuation(
    m0: &UnitColumnMatrix,
    sched: &ContinuationSchedule,
) -> Result<(UnitColumnMatrix, SolveTrace)> {
    sched.validate()?;
    let mut rho = sched.rho0;
    let mut current = m0.clone();
    let mut trace: Option<SolveTrace> = None;
    for _ in 0..sched.outer_iters {
        let cfg = PgConfig {
            inner_iters: sched.inner_iters,
            smoothing: SmoothingState::new(rho)?,
            step_tol: sched.step_tol,
        };
        let (next, round) = pg_solve(&current, &cfg)?;
        match trace.as_mut() {
            Some(t) => t.absorb(round),
            None => trace = Some(round),
        }
        current = next;
        rho = (rho / sched.eta).max(sched.rho_floor);
    }
    let trace = trace.expect("at least one continuation round ran");
    Ok((current, trace))
}

/// Standard-normal matrix with renormalized columns; the stock initializer
/// for all solvers.
pub fn random_unit_columns<R: rand::Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<UnitColumnMatrix> {
    normalize_columns(&DenseMatrix::standard_normal(rows, cols, rng)?)
}

/// End-to-end seeded design run: Gaussian unit-column initialization
/// followed by the continuation solve. The trace's initial value records
/// the starting coherence.
pub fn dmcm_design(
    rows: usize,
    cols: usize,
    sched: &ContinuationSchedule,
    seed: u64,
) -> Result<(UnitColumnMatrix, SolveTrace)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m0 = random_unit_columns(rows, cols, &mut rng)?;
    dmcm_continuation(&m0, sched)
}
