//! Smoothed surrogate of the worst-case off-diagonal Gram objective.
//!
//! The exact objective max_ij |(M^T M - I)_ij| is nonsmooth. Writing it as a
//! maximum of linear functionals over the l1 ball and subtracting a strongly
//! concave quadratic in the dual yields a smooth surrogate whose gradient is
//! Lipschitz with constant 1/rho, at the price of an approximation gap of at
//! most rho/2:
//!
//!   f_rho(M) = max_{|V|_1 <= 1}  <M^T M - I, V> - (rho/2) |V|_F^2
//!   f_rho(M) <= f(M) <= f_rho(M) + rho/2
//!
//! The inner maximizer is the Euclidean projection of (M^T M - I)/rho onto
//! the unit l1 ball, and the gradient is M (V* + V*^T).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, UnitColumnMatrix};

/// Fixed step-to-smoothness ratio; convergence needs alpha < rho.
pub const ALPHA_RATIO: f64 = 0.99;

/// Gap constant in f <= f_rho + rho * SANDWICH_GAMMA: the squared Frobenius
/// norm of a dual feasible point is at most 1, so gamma = 1/2.
pub const SANDWICH_GAMMA: f64 = 0.5;

/// Smoothness parameter rho together with the derived step size
/// alpha = 0.99 rho.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingState {
    rho: f64,
    alpha: f64,
}

impl SmoothingState {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Config(format!(
                "smoothness parameter must be positive and finite, got {rho}"
            )));
        }
        Ok(Self {
            rho,
            alpha: ALPHA_RATIO * rho,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Dual iterate of the smoothed objective; entrywise absolute sum <= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariable {
    inner: DenseMatrix,
}

impl DualVariable {
    pub fn new(inner: DenseMatrix) -> Result<Self> {
        let l1: f64 = inner.as_dmatrix().iter().map(|v| v.abs()).sum();
        if l1 > 1.0 + 1e-10 {
            return Err(Error::ShapeMismatch(format!(
                "dual variable has l1 norm {l1} > 1"
            )));
        }
        Ok(Self { inner })
    }

    pub fn l1_norm(&self) -> f64 {
        self.inner.as_dmatrix().iter().map(|v| v.abs()).sum()
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        self.inner.as_dmatrix()
    }
}

pub(crate) fn l1_norm(x: &DMatrix<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// Euclidean projection onto the l1 ball of the given radius.
///
/// Exact sort-based pivot search: sort magnitudes descending and take the
/// largest k whose running mean gap stays below the k-th magnitude; the
/// resulting threshold soft-shrinks every entry.
pub(crate) fn project_l1_ball_raw(x: &DMatrix<f64>, radius: f64) -> DMatrix<f64> {
    assert!(
        radius > 0.0 && radius.is_finite(),
        "l1 ball radius must be positive, got {radius}"
    );
    if l1_norm(x) <= radius {
        return x.clone();
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in mags.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - radius) / (k + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    x.map(|v| {
        let shrunk = v.abs() - theta;
        if shrunk > 0.0 {
            v.signum() * shrunk
        } else {
            0.0
        }
    })
}

pub fn project_l1_ball(x: &DenseMatrix, radius: f64) -> DenseMatrix {
    DenseMatrix::from_dmatrix(project_l1_ball_raw(x.as_dmatrix(), radius))
        .expect("projection of a finite matrix is finite")
}

/// One full evaluation of the smoothed objective at a point: the dual
/// maximizer, the smoothed value, and the exact value.
pub(crate) struct SmoothedEval {
    pub dual: DMatrix<f64>,
    pub f_rho: f64,
    pub f_exact: f64,
}

pub(crate) fn gram_minus_identity(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut gmi = m.tr_mul(m);
    for i in 0..gmi.nrows() {
        gmi[(i, i)] -= 1.0;
    }
    gmi
}

pub(crate) fn eval_smoothed(m: &DMatrix<f64>, rho: f64) -> SmoothedEval {
    let gmi = gram_minus_identity(m);
    let f_exact = gmi.amax();
    let dual = project_l1_ball_raw(&gmi.unscale(rho), 1.0);
    let f_rho = gmi.dot(&dual) - 0.5 * rho * dual.norm_squared();
    SmoothedEval { dual, f_rho, f_exact }
}

pub(crate) fn grad_from_dual(m: &DMatrix<f64>, dual: &DMatrix<f64>) -> DMatrix<f64> {
    m * (dual + dual.transpose())
}

/// Maximizer of the smoothed dual problem: the projection of
/// (M^T M - I)/rho onto the unit l1 ball.
pub fn solve_dual(m: &UnitColumnMatrix, state: &SmoothingState) -> DualVariable {
    let eval = eval_smoothed(m.as_dmatrix(), state.rho());
    DualVariable::new(
        DenseMatrix::from_dmatrix(eval.dual).expect("projection of a finite matrix is finite"),
    )
    .expect("projection onto the unit l1 ball is feasible")
}

/// Exact nonsmooth objective: the largest absolute entry of M^T M - I.
/// Equals the mutual coherence when M has unit columns.
pub fn f_exact(m: &UnitColumnMatrix) -> f64 {
    gram_minus_identity(m.as_dmatrix()).amax()
}

pub fn f_rho(m: &UnitColumnMatrix, state: &SmoothingState) -> f64 {
    eval_smoothed(m.as_dmatrix(), state.rho()).f_rho
}

/// Smoothed objective at an arbitrary dense matrix (no unit-column
/// requirement); used by finite-difference checks and effective-dictionary
/// diagnostics.
pub fn f_rho_dense(m: &DenseMatrix, state: &SmoothingState) -> f64 {
    eval_smoothed(m.as_dmatrix(), state.rho()).f_rho
}

/// Gradient of the smoothed objective: M (V* + V*^T).
pub fn grad_f_rho(m: &UnitColumnMatrix, state: &SmoothingState) -> DenseMatrix {
    grad_f_rho_dense(m.as_dense(), state)
}

pub fn grad_f_rho_dense(m: &DenseMatrix, state: &SmoothingState) -> DenseMatrix {
    let eval = eval_smoothed(m.as_dmatrix(), state.rho());
    DenseMatrix::from_dmatrix(grad_from_dual(m.as_dmatrix(), &eval.dual))
        .expect("gradient of a finite matrix is finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::normalize_columns;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: usize, cols: usize, entries: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_major(rows, cols, entries).unwrap()
    }

    /// Two-column unit matrix whose Gram off-diagonal equals `c`.
    fn two_column(c: f64) -> UnitColumnMatrix {
        let a = mat(2, 2, &[1.0, c, 0.0, (1.0 - c * c).sqrt()]);
        normalize_columns(&a).unwrap()
    }

    #[test]
    fn projection_keeps_feasible_points() {
        let x = mat(1, 2, &[0.4, -0.3]);
        let y = project_l1_ball(&x, 1.0);
        assert_eq!(x, y);
    }

    #[test]
    fn projection_known_values() {
        let x = mat(1, 2, &[3.0, 0.0]);
        let y = project_l1_ball(&x, 1.0);
        assert_abs_diff_eq!(y.get(0, 0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y.get(0, 1), 0.0, epsilon = 1e-14);

        let x = mat(1, 2, &[5.0, 5.0]);
        let y = project_l1_ball(&x, 1.0);
        assert_abs_diff_eq!(y.get(0, 0), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(y.get(0, 1), 0.5, epsilon = 1e-14);
    }

    /// Brute-force oracle: coarse-to-fine dense grid search over the box,
    /// keeping only l1-feasible points. The objective is strictly convex, so
    /// each refinement round brackets the optimum within one grid cell.
    /// Candidates are compared through the factored difference
    /// f(p) - f(best) = sum (p_i - best_i)((p_i - x_i) + (best_i - x_i)),
    /// which stays accurate near the flat minimum where direct evaluation
    /// of f drowns in rounding.
    fn grid_project_2d(x: &[f64; 2], radius: f64) -> [f64; 2] {
        let mut center = [0.0f64; 2];
        let mut half = radius;
        let mut best = [0.0f64; 2];
        for _round in 0..12 {
            let steps = 40usize;
            for i in 0..=steps {
                for j in 0..=steps {
                    let p = [
                        center[0] - half + 2.0 * half * i as f64 / steps as f64,
                        center[1] - half + 2.0 * half * j as f64 / steps as f64,
                    ];
                    if p[0].abs() + p[1].abs() > radius {
                        continue;
                    }
                    let delta: f64 = (0..2)
                        .map(|k| (p[k] - best[k]) * ((p[k] - x[k]) + (best[k] - x[k])))
                        .sum();
                    if delta < 0.0 {
                        best = p;
                    }
                }
            }
            center = best;
            half = half * 4.0 / steps as f64;
        }
        best
    }

    #[test]
    fn projection_agrees_with_grid_oracle_2d() {
        let cases = [
            [3.0, 0.0],
            [5.0, 5.0],
            [0.8, -0.5],
            [-2.0, 1.0],
            [0.2, 0.1],
        ];
        for c in cases {
            let y = project_l1_ball(&mat(1, 2, &c), 1.0);
            let oracle = grid_project_2d(&c, 1.0);
            assert_abs_diff_eq!(y.get(0, 0), oracle[0], epsilon = 1e-8);
            assert_abs_diff_eq!(y.get(0, 1), oracle[1], epsilon = 1e-8);
        }
    }

    #[test]
    fn solve_dual_on_orthonormal_columns_is_zero() {
        let u = normalize_columns(&DenseMatrix::identity(3).unwrap()).unwrap();
        let state = SmoothingState::new(0.5).unwrap();
        let v = solve_dual(&u, &state);
        assert_eq!(v.as_dmatrix().amax(), 0.0);
    }

    #[test]
    fn solve_dual_two_columns_half_coherence() {
        let u = two_column(0.5);
        let state = SmoothingState::new(0.1).unwrap();
        let v = solve_dual(&u, &state);
        let vm = v.as_dmatrix();
        assert_abs_diff_eq!(vm[(0, 1)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vm[(1, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vm[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vm[(1, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_dual_interior_case_is_exact_scaling() {
        let u = two_column(0.001);
        // With rho large the scaled matrix sits inside the ball.
        let state = SmoothingState::new(10.0).unwrap();
        let v = solve_dual(&u, &state);
        let gmi = gram_minus_identity(u.as_dmatrix());
        let expected = gmi.unscale(10.0);
        assert!((v.as_dmatrix() - &expected).amax() < 1e-15);
    }

    #[test]
    fn f_exact_matches_coherence_for_unit_columns() {
        let u = two_column(0.5);
        assert_abs_diff_eq!(f_exact(&u), 0.5, epsilon = 1e-12);

        let ortho = normalize_columns(&DenseMatrix::identity(4).unwrap()).unwrap();
        assert_eq!(f_exact(&ortho), 0.0);

        let dup = normalize_columns(&mat(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(f_exact(&dup), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn f_rho_known_value_and_sandwich() {
        let u = two_column(0.5);
        let state = SmoothingState::new(0.1).unwrap();
        let fr = f_rho(&u, &state);
        assert_abs_diff_eq!(fr, 0.475, epsilon = 1e-12);
        let fe = f_exact(&u);
        assert!(fr <= fe + 1e-12);
        assert!(fe <= fr + 0.1 * SANDWICH_GAMMA + 1e-12);
    }

    #[test]
    fn f_rho_interior_closed_form() {
        let u = two_column(0.3);
        let rho = 50.0;
        let state = SmoothingState::new(rho).unwrap();
        let gmi = gram_minus_identity(u.as_dmatrix());
        assert!(l1_norm(&gmi.unscale(rho)) <= 1.0);
        let expected = gmi.norm_squared() / (2.0 * rho);
        assert_abs_diff_eq!(f_rho(&u, &state), expected, epsilon = 1e-14);
    }

    #[test]
    fn gradient_zero_at_orthonormal_columns() {
        let u = normalize_columns(&DenseMatrix::identity(3).unwrap()).unwrap();
        let state = SmoothingState::new(0.5).unwrap();
        assert_eq!(grad_f_rho(&u, &state).as_dmatrix().amax(), 0.0);
    }

    #[test]
    fn gradient_matches_hand_product() {
        let u = two_column(0.5);
        let state = SmoothingState::new(0.1).unwrap();
        let v = solve_dual(&u, &state);
        let expected = u.as_dmatrix() * (v.as_dmatrix() + v.as_dmatrix().transpose());
        let grad = grad_f_rho(&u, &state);
        assert!((grad.as_dmatrix() - &expected).amax() < 1e-14);
    }

    fn finite_difference_grad(m: &DenseMatrix, state: &SmoothingState, h: f64) -> DMatrix<f64> {
        let base = m.as_dmatrix();
        let mut fd = DMatrix::zeros(m.rows(), m.cols());
        for c in 0..m.cols() {
            for r in 0..m.rows() {
                let mut plus = base.clone();
                plus[(r, c)] += h;
                let mut minus = base.clone();
                minus[(r, c)] -= h;
                let fp = f_rho_dense(&DenseMatrix::from_dmatrix(plus).unwrap(), state);
                let fm = f_rho_dense(&DenseMatrix::from_dmatrix(minus).unwrap(), state);
                fd[(r, c)] = (fp - fm) / (2.0 * h);
            }
        }
        fd
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &rho in &[0.5, 0.05] {
            let state = SmoothingState::new(rho).unwrap();
            let a = DenseMatrix::standard_normal(4, 10, &mut rng).unwrap();
            let u = normalize_columns(&a).unwrap();
            let grad = grad_f_rho(&u, &state);
            let fd = finite_difference_grad(u.as_dense(), &state, 1e-6);
            let rel = (grad.as_dmatrix() - &fd).norm() / fd.norm().max(1e-12);
            assert!(rel <= 1e-4, "relative error {rel} at rho {rho}");
        }
    }

    #[test]
    fn gradient_lipschitz_bound_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let state = SmoothingState::new(0.5).unwrap();
        for _ in 0..20 {
            let a = normalize_columns(&DenseMatrix::standard_normal(6, 20, &mut rng).unwrap())
                .unwrap();
            let b = normalize_columns(&DenseMatrix::standard_normal(6, 20, &mut rng).unwrap())
                .unwrap();
            let ga = grad_f_rho(&a, &state);
            let gb = grad_f_rho(&b, &state);
            let lhs = (ga.as_dmatrix() - gb.as_dmatrix()).norm();
            let rhs = (a.as_dmatrix() - b.as_dmatrix()).norm() / state.rho() + 1e-8;
            assert!(lhs <= rhs, "Lipschitz violation: {lhs} > {rhs}");
        }
    }

    proptest! {
        #[test]
        fn projection_output_is_feasible(
            entries in proptest::collection::vec(-10.0f64..10.0, 9),
            radius in 0.1f64..5.0,
        ) {
            let x = mat(3, 3, &entries);
            let y = project_l1_ball(&x, radius);
            let l1: f64 = y.as_dmatrix().iter().map(|v| v.abs()).sum();
            prop_assert!(l1 <= radius + 1e-10);
        }

        #[test]
        fn sandwich_holds_on_random_unit_columns(
            entries in proptest::collection::vec(-2.0f64..2.0, 15),
            rho in 0.01f64..1.0,
        ) {
            let a = mat(3, 5, &entries);
            for i in 0..5 {
                prop_assume!(a.as_dmatrix().column(i).norm() > 1e-6);
            }
            let u = normalize_columns(&a).unwrap();
            let state = SmoothingState::new(rho).unwrap();
            let fr = f_rho(&u, &state);
            let fe = f_exact(&u);
            prop_assert!(fr <= fe + 1e-9);
            prop_assert!(fe <= fr + rho * SANDWICH_GAMMA + 1e-9);
        }

        #[test]
        fn dual_is_always_feasible(
            entries in proptest::collection::vec(-2.0f64..2.0, 15),
            rho in 0.01f64..1.0,
        ) {
            let a = mat(3, 5, &entries);
            for i in 0..5 {
                prop_assume!(a.as_dmatrix().column(i).norm() > 1e-6);
            }
            let u = normalize_columns(&a).unwrap();
            let state = SmoothingState::new(rho).unwrap();
            let v = solve_dual(&u, &state);
            prop_assert!(v.l1_norm() <= 1.0 + 1e-10);
        }
    }
}
