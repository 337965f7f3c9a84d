//! Dense-matrix primitives shared by every solver: construction and
//! validation, column normalization, Gram computation, coherence metrics,
//! the Welch bound, and a plain-text interchange format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Column norms of a [`UnitColumnMatrix`] may deviate from 1 by at most this.
pub const UNIT_COLUMN_TOL: f64 = 1e-12;

/// Entrywise symmetry tolerance for [`GramMatrix`].
pub const GRAM_SYMMETRY_TOL: f64 = 1e-12;

/// Norm below which a column counts as zero and cannot be normalized.
const ZERO_COLUMN_GUARD: f64 = 1e-300;

/// A finite, real-valued dense matrix with at least one row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    inner: DMatrix<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes,
    /// length mismatches, and non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDims { m: rows, n: cols });
        }
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_dmatrix(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::InvalidDims {
                m: inner.nrows(),
                n: inner.ncols(),
            });
        }
        for col in 0..inner.ncols() {
            for row in 0..inner.nrows() {
                if !inner[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self { inner })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDims { m: rows, n: cols });
        }
        Ok(Self {
            inner: DMatrix::zeros(rows, cols),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDims { m: 0, n: 0 });
        }
        Ok(Self {
            inner: DMatrix::identity(n, n),
        })
    }

    /// Fills a matrix with independent standard-normal draws.
    pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDims { m: rows, n: cols });
        }
        // Row-major draw order so the stream layout matches the text format.
        let entries: Vec<f64> = (0..rows * cols)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for row in 0..self.rows() {
            for col in 0..self.cols() {
                out.push(self.inner[(row, col)]);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Serializes as `rows cols` on the first line followed by one line of
    /// space-separated entries per row. The shortest-round-trip decimal form
    /// is used, so parsing recovers the exact bits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.rows(), self.cols());
        for row in 0..self.rows() {
            for col in 0..self.cols() {
                if col > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}", self.inner[(row, col)]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let mut dims = header.split_whitespace();
        let rows: usize = dims
            .next()
            .ok_or_else(|| Error::Parse("missing row count".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad row count: {e}")))?;
        let cols: usize = dims
            .next()
            .ok_or_else(|| Error::Parse("missing column count".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad column count: {e}")))?;
        if dims.next().is_some() {
            return Err(Error::Parse("trailing tokens in header line".into()));
        }
        let mut entries = Vec::with_capacity(rows * cols);
        for (i, line) in lines.enumerate() {
            if i >= rows {
                return Err(Error::Parse(format!("more than {rows} data lines")));
            }
            let mut count = 0usize;
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad entry {tok:?} on line {}: {e}", i + 2)))?;
                entries.push(v);
                count += 1;
            }
            if count != cols {
                return Err(Error::Parse(format!(
                    "line {} has {count} entries, expected {cols}",
                    i + 2
                )));
            }
        }
        Self::from_row_major(rows, cols, &entries)
    }

    pub fn write_text_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_text_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// A dense matrix whose columns all have Euclidean norm 1 (within
/// [`UNIT_COLUMN_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitColumnMatrix {
    inner: DenseMatrix,
}

impl UnitColumnMatrix {
    pub fn new(inner: DenseMatrix) -> Result<Self> {
        for i in 0..inner.cols() {
            let norm = inner.as_dmatrix().column(i).norm();
            if (norm - 1.0).abs() > UNIT_COLUMN_TOL {
                return Err(Error::ShapeMismatch(format!(
                    "column {i} has norm {norm}, not 1"
                )));
            }
        }
        Ok(Self { inner })
    }

    pub fn rows(&self) -> usize {
        self.inner.rows()
    }

    pub fn cols(&self) -> usize {
        self.inner.cols()
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        self.inner.as_dmatrix()
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.inner
    }

    /// Largest deviation of any column norm from 1.
    pub fn max_column_norm_deviation(&self) -> f64 {
        (0..self.cols())
            .map(|i| (self.as_dmatrix().column(i).norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// The Gram matrix of pairwise column inner products.
    pub fn gram(&self) -> GramMatrix {
        let g = self.as_dmatrix().tr_mul(self.as_dmatrix());
        GramMatrix::new(DenseMatrix { inner: g }).expect("Gram of a finite matrix is symmetric")
    }
}

/// A symmetric matrix of pairwise inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    inner: DenseMatrix,
}

impl GramMatrix {
    pub fn new(inner: DenseMatrix) -> Result<Self> {
        let m = inner.as_dmatrix();
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "Gram matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > GRAM_SYMMETRY_TOL {
                    return Err(Error::ShapeMismatch(format!(
                        "asymmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { inner })
    }

    pub fn size(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        self.inner.as_dmatrix()
    }

    /// Largest absolute off-diagonal entry.
    pub fn inf_off_norm(&self) -> Result<f64> {
        let n = self.size();
        if n < 2 {
            return Err(Error::TooFewColumns { cols: n });
        }
        let m = self.as_dmatrix();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    best = best.max(m[(i, j)].abs());
                }
            }
        }
        Ok(best)
    }
}

/// Rescales every column of `a` to unit Euclidean norm.
pub fn normalize_columns(a: &DenseMatrix) -> Result<UnitColumnMatrix> {
    let mut out = a.as_dmatrix().clone();
    for i in 0..out.ncols() {
        let norm = out.column(i).norm();
        if !(norm > ZERO_COLUMN_GUARD) {
            return Err(Error::ZeroColumn { index: i });
        }
        let mut col = out.column_mut(i);
        col /= norm;
    }
    Ok(UnitColumnMatrix {
        inner: DenseMatrix { inner: out },
    })
}

/// The largest absolute inner product between distinct columns.
pub fn mutual_coherence(m: &UnitColumnMatrix) -> Result<f64> {
    if m.cols() < 2 {
        return Err(Error::TooFewColumns { cols: m.cols() });
    }
    m.gram().inf_off_norm()
}

/// Universal lower bound sqrt((n - m) / (m (n - 1))) on the coherence of an
/// m x n matrix. Tight only when n <= m (m + 1) / 2; reported as the floor
/// line regardless.
pub fn welch_bound(m: usize, n: usize) -> Result<f64> {
    if m == 0 || n < m || n < 2 {
        return Err(Error::InvalidDims { m, n });
    }
    let (m, n) = (m as f64, n as f64);
    Ok(((n - m) / (m * (n - 1.0))).sqrt())
}

/// Counts |G_ij| over all i < j pairs into the bins delimited by
/// `bin_edges`. Bins are half-open `[e_k, e_{k+1})` except the last, which
/// also includes its upper edge.
pub fn gram_abs_histogram(m: &UnitColumnMatrix, bin_edges: &[f64]) -> Result<Vec<u64>> {
    if bin_edges.len() < 2 {
        return Err(Error::BadBins(format!(
            "need at least 2 edges, got {}",
            bin_edges.len()
        )));
    }
    if bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadBins("edges must be strictly increasing".into()));
    }
    if bin_edges[0] > 0.0 || bin_edges[bin_edges.len() - 1] < 1.0 {
        return Err(Error::BadBins("edges must cover [0, 1]".into()));
    }
    let g = m.gram();
    let gm = g.as_dmatrix();
    let mut counts = vec![0u64; bin_edges.len() - 1];
    for i in 0..g.size() {
        for j in (i + 1)..g.size() {
            let v = gm[(i, j)].abs();
            // Values sit in [0, 1] up to rounding; the edge scan below
            // handles the closed final bin.
            let mut bin = counts.len() - 1;
            for k in 0..counts.len() {
                if v < bin_edges[k + 1] {
                    bin = k;
                    break;
                }
            }
            counts[bin] += 1;
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: usize, cols: usize, entries: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_major(rows, cols, entries).unwrap()
    }

    #[test]
    fn normalize_scales_by_column_norm() {
        let a = mat(2, 1, &[3.0, 4.0]);
        let u = normalize_columns(&a).unwrap();
        assert_abs_diff_eq!(u.as_dmatrix()[(0, 0)], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(u.as_dmatrix()[(1, 0)], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn normalize_identity_is_identity() {
        let id = DenseMatrix::identity(3).unwrap();
        let u = normalize_columns(&id).unwrap();
        assert_eq!(u.as_dense(), &id);
    }

    #[test]
    fn normalize_rejects_zero_column() {
        let a = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        match normalize_columns(&a) {
            Err(Error::ZeroColumn { index }) => assert_eq!(index, 1),
            other => panic!("expected ZeroColumn, got {other:?}"),
        }
    }

    #[test]
    fn gram_of_identity_is_identity() {
        let u = normalize_columns(&DenseMatrix::identity(3).unwrap()).unwrap();
        let g = u.gram();
        assert_eq!(g.as_dmatrix(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn gram_duplicated_column_gives_unit_off_diagonal() {
        let a = mat(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let u = normalize_columns(&a).unwrap();
        let g = u.gram();
        assert_abs_diff_eq!(g.as_dmatrix()[(0, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mutual_coherence(&u).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gram_off_diagonal_from_known_pair() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = mat(2, 2, &[1.0, s, 0.0, s]);
        let u = normalize_columns(&a).unwrap();
        let g = u.gram();
        assert_abs_diff_eq!(g.as_dmatrix()[(0, 1)], 0.70710678, epsilon = 1e-8);
        assert_abs_diff_eq!(mutual_coherence(&u).unwrap(), 0.70710678, epsilon = 1e-8);
    }

    #[test]
    fn coherence_of_orthogonal_columns_is_zero() {
        let u = normalize_columns(&DenseMatrix::identity(3).unwrap()).unwrap();
        assert_eq!(mutual_coherence(&u).unwrap(), 0.0);
    }

    #[test]
    fn coherence_needs_two_columns() {
        let u = normalize_columns(&mat(2, 1, &[1.0, 0.0])).unwrap();
        assert!(matches!(
            mutual_coherence(&u),
            Err(Error::TooFewColumns { cols: 1 })
        ));
    }

    #[test]
    fn inf_off_norm_takes_max_absolute_value() {
        let g = GramMatrix::new(mat(
            3,
            3,
            &[1.0, 0.1, -0.5, 0.1, 1.0, -0.1, -0.5, -0.1, 1.0],
        ))
        .unwrap();
        assert_eq!(g.inf_off_norm().unwrap(), 0.5);

        let constant = GramMatrix::new(mat(3, 3, &[1.0, 0.3, 0.3, 0.3, 1.0, 0.3, 0.3, 0.3, 1.0]))
            .unwrap();
        assert_eq!(constant.inf_off_norm().unwrap(), 0.3);
    }

    #[test]
    fn welch_bound_values() {
        assert_abs_diff_eq!(welch_bound(6, 60).unwrap(), 0.390567, epsilon = 1e-6);
        assert_abs_diff_eq!(
            welch_bound(6, 60).unwrap(),
            (54.0f64 / 354.0).sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(welch_bound(7, 7).unwrap(), 0.0);
        assert_eq!(welch_bound(1, 2).unwrap(), 1.0);
        assert!(matches!(welch_bound(5, 4), Err(Error::InvalidDims { .. })));
        assert!(matches!(welch_bound(1, 1), Err(Error::InvalidDims { .. })));
    }

    #[test]
    fn histogram_identity_lands_in_first_bin() {
        let u = normalize_columns(&DenseMatrix::identity(4).unwrap()).unwrap();
        let counts = gram_abs_histogram(&u, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(counts, vec![6, 0]);
    }

    #[test]
    fn histogram_duplicated_pair_counts_in_last_bin() {
        let a = mat(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let u = normalize_columns(&a).unwrap();
        let counts = gram_abs_histogram(&u, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(counts, vec![0, 1]);
    }

    #[test]
    fn histogram_three_columns_with_known_inner_products() {
        // Pairwise |inner products| 0.2, 0.4, 0.8 among three unit columns.
        // Build in R^3: solvable via a direct construction.
        let c0 = [1.0, 0.0, 0.0];
        let c1 = [0.2, (1.0f64 - 0.04).sqrt(), 0.0];
        // c2 . c0 = 0.4, c2 . c1 = 0.8
        let x = 0.4;
        let y = (0.8 - 0.2 * x) / c1[1];
        let z = (1.0f64 - x * x - y * y).sqrt();
        let a = mat(
            3,
            3,
            &[c0[0], c1[0], x, c0[1], c1[1], y, c0[2], c1[2], z],
        );
        let u = normalize_columns(&a).unwrap();
        let counts = gram_abs_histogram(&u, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(counts, vec![2, 1]);
    }

    #[test]
    fn histogram_rejects_bad_edges() {
        let u = normalize_columns(&DenseMatrix::identity(3).unwrap()).unwrap();
        assert!(matches!(
            gram_abs_histogram(&u, &[0.0, 0.5, 0.5, 1.0]),
            Err(Error::BadBins(_))
        ));
        assert!(matches!(
            gram_abs_histogram(&u, &[0.1, 1.0]),
            Err(Error::BadBins(_))
        ));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DenseMatrix::standard_normal(4, 7, &mut rng).unwrap();
        let text = a.to_text();
        let b = DenseMatrix::from_text(&text).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_parse_rejects_ragged_rows() {
        assert!(matches!(
            DenseMatrix::from_text("2 2\n1 2\n3\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn from_row_major_rejects_non_finite() {
        assert!(matches!(
            DenseMatrix::from_row_major(1, 2, &[1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn welch_bound_is_a_floor_for_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(m, n) in &[(4usize, 16usize), (6, 60), (10, 30)] {
            let a = DenseMatrix::standard_normal(m, n, &mut rng).unwrap();
            let u = normalize_columns(&a).unwrap();
            let mu = mutual_coherence(&u).unwrap();
            assert!(mu >= welch_bound(m, n).unwrap() - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn coherence_invariant_under_positive_column_rescaling(
            entries in proptest::collection::vec(-5.0f64..5.0, 12),
            scales in proptest::collection::vec(0.1f64..10.0, 4),
        ) {
            let a = mat(3, 4, &entries);
            for i in 0..4 {
                prop_assume!(a.as_dmatrix().column(i).norm() > 1e-6);
            }
            let mut scaled = a.as_dmatrix().clone();
            for (i, s) in scales.iter().enumerate() {
                let mut col = scaled.column_mut(i);
                col *= *s;
            }
            let scaled = DenseMatrix::from_dmatrix(scaled).unwrap();
            let mu_a = mutual_coherence(&normalize_columns(&a).unwrap()).unwrap();
            let mu_s = mutual_coherence(&normalize_columns(&scaled).unwrap()).unwrap();
            prop_assert!((mu_a - mu_s).abs() <= 1e-12);
        }

        #[test]
        fn histogram_totals_count_every_pair(
            entries in proptest::collection::vec(-3.0f64..3.0, 20),
        ) {
            let a = mat(4, 5, &entries);
            for i in 0..5 {
                prop_assume!(a.as_dmatrix().column(i).norm() > 1e-6);
            }
            let u = normalize_columns(&a).unwrap();
            let counts = gram_abs_histogram(&u, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
            prop_assert_eq!(counts.iter().sum::<u64>(), 10);
        }

        #[test]
        fn gram_is_symmetric_with_unit_diagonal(
            entries in proptest::collection::vec(-3.0f64..3.0, 12),
        ) {
            let a = mat(3, 4, &entries);
            for i in 0..4 {
                prop_assume!(a.as_dmatrix().column(i).norm() > 1e-6);
            }
            let g = normalize_columns(&a).unwrap().gram();
            let gm = g.as_dmatrix();
            for i in 0..4 {
                prop_assert!((gm[(i, i)] - 1.0).abs() <= 1e-10);
                for j in 0..4 {
                    prop_assert!((gm[(i, j)] - gm[(j, i)]).abs() <= 1e-12);
                }
            }
            prop_assert!(g.inf_off_norm().unwrap() >= 0.0);
        }
    }
}
