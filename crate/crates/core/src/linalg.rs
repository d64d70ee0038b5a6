//! Dense complex linear algebra: Hermitian spectra with grouped eigenvalues,
//! Kronecker products, isometries, column spaces and PSD tests.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The wrappers in this module
//! only add the invariants the rest of the crate relies on.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tol;

pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Computational basis ket `|i>` in `C^d` as a column matrix.
pub fn ket(d: usize, i: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(d, 1);
    v[(i, 0)] = ONE;
    v
}

/// Column matrix from real amplitudes.
pub fn real_ket(amps: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_iterator(amps.len(), 1, amps.iter().map(|&x| c(x, 0.0)))
}

/// `|v><v|`.
pub fn outer(v: &ComplexMatrix) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real part of the Hilbert-Schmidt inner product `tr(A^dagger B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation("matrix contains NaN or infinite entries".into()))
    }
}

/// A Hermitian matrix, stored exactly symmetrized.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "Hermitian operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() > tol::MAX_DIM {
            return Err(Error::Dimension(format!(
                "dimension {} exceeds the supported maximum {}",
                m.nrows(),
                tol::MAX_DIM
            )));
        }
        check_finite(&m)?;
        let skew = max_abs(&(&m - m.adjoint()));
        let scale = max_abs(&m).max(1.0);
        if skew > tol::HERMITICITY * scale {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian (max |M - M^dagger| = {skew:e})"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// `(M + M^dagger) / 2` without a hermiticity check.
    pub fn symmetrized(m: ComplexMatrix) -> Self {
        let matrix = (&m + m.adjoint()).scale(0.5);
        HermitianOperator { matrix }
    }

    pub fn identity(d: usize) -> Self {
        HermitianOperator { matrix: identity(d) }
    }

    pub fn zeros(d: usize) -> Self {
        HermitianOperator {
            matrix: ComplexMatrix::zeros(d, d),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = ComplexMatrix::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = c(x, 0.0);
        }
        HermitianOperator { matrix: m }
    }

    /// Projector onto the span of a single (not necessarily normalized) ket.
    pub fn projector_onto(v: &ComplexMatrix) -> Self {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        Self::symmetrized(outer(v).unscale(n))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn kron(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        HermitianOperator {
            matrix: self.matrix.scale(s),
        }
    }

    /// `Q^dagger M Q`.
    pub fn compress(&self, q: &ComplexMatrix) -> HermitianOperator {
        Self::symmetrized(q.adjoint() * &self.matrix * q)
    }
}

/// An `ambient x sub` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    matrix: ComplexMatrix,
}

impl Isometry {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        check_finite(&m)?;
        if m.ncols() > m.nrows() {
            return Err(Error::Dimension(format!(
                "isometry cannot map C^{} into C^{}",
                m.ncols(),
                m.nrows()
            )));
        }
        let defect = max_abs(&(m.adjoint() * &m - identity(m.ncols())));
        if defect > tol::ISOMETRY {
            return Err(Error::Validation(format!(
                "columns are not orthonormal (max |Q^dagger Q - I| = {defect:e})"
            )));
        }
        Ok(Isometry { matrix: m })
    }

    pub(crate) fn from_orthonormal(m: ComplexMatrix) -> Self {
        Isometry { matrix: m }
    }

    pub fn identity(d: usize) -> Self {
        Isometry { matrix: identity(d) }
    }

    /// Isometry spanning the given basis kets.
    pub fn coordinate(ambient: usize, indices: &[usize]) -> Self {
        let mut m = ComplexMatrix::zeros(ambient, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            m[(i, col)] = ONE;
        }
        Isometry { matrix: m }
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sub_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `Q Q^dagger`.
    pub fn projector(&self) -> HermitianOperator {
        HermitianOperator::symmetrized(&self.matrix * self.matrix.adjoint())
    }

    pub fn kron(&self, other: &Isometry) -> Isometry {
        Isometry {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }
}

/// One eigenvalue cluster of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct EigenGroup {
    pub eigenvalue: f64,
    pub projector: HermitianOperator,
    pub multiplicity: usize,
    /// Orthonormal basis of the eigenspace (the `Q_lambda` of the group).
    pub basis: Isometry,
}

/// Spectrum with eigenvalues grouped into clusters, ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub groups: Vec<EigenGroup>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.groups.iter().map(|g| g.multiplicity).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.groups.first().map_or(0.0, |g| g.eigenvalue)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.groups.last().map_or(0.0, |g| g.eigenvalue)
    }

    /// `sum_lambda lambda P_lambda`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.dim();
        self.groups
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, g| {
                acc + g.projector.matrix().scale(g.eigenvalue)
            })
    }
}

/// Raw ascending eigenpairs of a Hermitian matrix.
pub fn eigh(m: &HermitianOperator) -> Result<(Vec<f64>, ComplexMatrix)> {
    let d = m.dim();
    if d == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.matrix().clone(), f64::EPSILON, tol::EIGEN_MAX_ITER)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "Hermitian eigensolver did not converge within {} iterations",
                tol::EIGEN_MAX_ITER
            ))
        })?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(d, d, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

pub fn eig_hermitian(m: &HermitianOperator) -> Result<Spectrum> {
    eig_hermitian_with(m, tol::EIGEN_GROUPING)
}

/// Eigendecomposition with eigenvalues closer than `grouping * spectral
/// radius` merged into one group (chained over consecutive gaps).
pub fn eig_hermitian_with(m: &HermitianOperator, grouping: f64) -> Result<Spectrum> {
    let d = m.dim();
    let (values, vectors) = eigh(m)?;
    let radius = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let gap = grouping * radius;

    let mut groups = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && values[end] - values[end - 1] <= gap {
            end += 1;
        }
        let cols = vectors.columns(start, end - start).into_owned();
        let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        groups.push(EigenGroup {
            eigenvalue: mean,
            projector: HermitianOperator::symmetrized(&cols * cols.adjoint()),
            multiplicity: end - start,
            basis: Isometry::from_orthonormal(cols),
        });
        start = end;
    }
    Ok(Spectrum { groups })
}

/// Orthonormal basis for the range of `m`: left singular vectors whose
/// singular value exceeds `rel_tol * sigma_max`.
///
/// Computed from the Hermitian dilation `[[0, M], [M^dagger, 0]]`, whose
/// eigenvalues are `+-sigma_i`; the top block of each `+sigma_i` eigenvector
/// is `u_i / sqrt(2)`. nalgebra's complex SVD loses accuracy on some
/// projector inputs, while its Hermitian eigensolver does not.
pub fn column_space(m: &ComplexMatrix, rel_tol: f64) -> Isometry {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 || max_abs(m) == 0.0 {
        return Isometry::from_orthonormal(ComplexMatrix::zeros(rows, 0));
    }
    let n = rows + cols;
    let mut dilation = ComplexMatrix::zeros(n, n);
    dilation.view_mut((0, rows), (rows, cols)).copy_from(m);
    dilation.view_mut((rows, 0), (cols, rows)).copy_from(&m.adjoint());
    let eig = SymmetricEigen::new(dilation);
    let smax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > rel_tol * smax).collect();
    keep.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let scale = std::f64::consts::SQRT_2;
    let q = ComplexMatrix::from_fn(rows, keep.len(), |r, col| eig.eigenvectors[(r, keep[col])] * scale);
    Isometry::from_orthonormal(q)
}

/// Numerical rank with the default relative threshold.
pub fn rank(m: &ComplexMatrix) -> usize {
    column_space(m, tol::RANK).sub_dim()
}

pub fn is_psd(m: &HermitianOperator, rel_tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -rel_tol * max_abs(m.matrix()))
}

pub fn min_eigenvalue(m: &HermitianOperator) -> Result<f64> {
    let (values, _) = eigh(m)?;
    Ok(values.first().copied().unwrap_or(0.0))
}

/// Real nullspace of `a` (rows are constraints): right singular vectors
/// with singular value at most `rel_tol * max(sigma_max, 1)`, as columns.
/// Also returns the singular values sorted descending.
///
/// The constraint systems in this crate are assembled from unit-scale data,
/// so a matrix whose largest singular value is far below 1 is round-off and
/// its whole domain is returned.
pub fn real_nullspace(a: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.ncols();
    if a.nrows() == 0 || a.iter().all(|x| *x == 0.0) {
        return (DMatrix::identity(n, n), vec![0.0; n]);
    }
    // Pad to at least n rows so that V is square.
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let scale = nullspace_scale(&sigma);
    let null: Vec<usize> = (0..n).filter(|&i| sigma[i] <= rel_tol * scale).collect();
    let basis = DMatrix::from_fn(n, null.len(), |r, col| vt[(null[col], r)]);
    (basis, sigma)
}

/// Reference magnitude for the relative cut in [`real_nullspace`].
pub fn nullspace_scale(sigma: &[f64]) -> f64 {
    sigma.iter().cloned().fold(1.0, f64::max)
}

/// Matrix JSON: array of rows, each entry `[re, im]`.
pub fn matrix_to_json(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    let m = ComplexMatrix::from_fn(nrows, ncols, |r, col| {
        let [re, im] = rows[r][col];
        c(re, im)
    });
    check_finite(&m).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(m)
}

/// Serde adapter for `ComplexMatrix` fields using the matrix JSON layout.
pub mod serde_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        matrix_from_json(&rows).map_err(D::Error::custom)
    }
}

impl Serialize for HermitianOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_matrix::serialize(&self.matrix, s)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = serde_matrix::deserialize(d)?;
        HermitianOperator::new(m).map_err(D::Error::custom)
    }
}

impl Serialize for Isometry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_matrix::serialize(&self.matrix, s)
    }
}

impl<'de> Deserialize<'de> for Isometry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = serde_matrix::deserialize(d)?;
        Isometry::new(m).map_err(D::Error::custom)
    }
}
