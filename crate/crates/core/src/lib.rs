//! Design of sensing matrices with low mutual coherence, and their
//! evaluation in a compressed-sensing recovery pipeline.
//!
//! The library has three layers:
//!
//! * numerical substrate — [`matrix`] (dense matrices, Gram products,
//!   coherence metrics, the Welch bound) and [`smoothing`] (the smoothed
//!   worst-case objective, its gradient, and the l1-ball projection behind
//!   it);
//! * solvers — [`dmcm`] designs an m x n matrix of low coherence by
//!   proximal gradient with continuation, [`dmcmp`] jointly designs a
//!   projection against a fixed dictionary by alternating minimization, and
//!   [`baselines`] implements the prior Gram-shaping and whitening methods
//!   plus random projections;
//! * evaluation — [`recovery`] (sparse signals, greedy pursuit,
//!   reconstruction error) and [`bench`] (seeded experiment sweeps with CSV
//!   /JSON emission).

pub mod baselines;
pub mod bench;
pub mod dmcm;
pub mod dmcmp;
pub mod error;
pub mod matrix;
pub mod recovery;
pub mod smoothing;

pub use error::{Error, Result};
pub use matrix::{
    gram_abs_histogram, mutual_coherence, normalize_columns, welch_bound, DenseMatrix,
    GramMatrix, UnitColumnMatrix,
};
pub use smoothing::{
    f_exact, f_rho, f_rho_dense, grad_f_rho, grad_f_rho_dense, project_l1_ball, solve_dual,
    DualVariable, SmoothingState,
};
pub use dmcm::{
    dmcm_continuation, dmcm_design, pg_solve, pg_step, random_unit_columns,
    ContinuationSchedule, IterRecord, PgConfig, SolveTrace,
};
pub use dmcmp::{
    am_solve, am_update_m, am_update_p, dmcmp_continuation, objective, AmConfig, AmSchedule,
    Dictionary,
};
pub use baselines::{
    duarte_projection, elad_projection, elad_shrink, random_projection, xu_projection, EladParams,
    XuParams,
};
pub use recovery::{
    assess_recovery, gen_sparse_signal, omp, recon_error, recovery_guarantee_holds,
    RecoveryAssessment, RecoveryResult, SparseSignal,
};
pub use bench::{
    aggregate, emit_results, run_coherence_experiment, run_cs_experiment, AggregateRow,
    CoherenceRun, ExperimentConfig, HistogramRecord, Method, OutputFormat, RawRow, SchemePoint,
    TrialRecord,
};
