//! Dense Hermitian eigen-analysis, principal-component counting and
//! orthogonal subspace projectors.
//!
//! Eigenvalues are always reported in descending order and every eigenvector
//! is phase-normalized so that its largest-magnitude component is real and
//! positive. Together with a stable tie order this makes decompositions
//! reproducible bit-for-bit for a fixed input.

use nalgebra::linalg::SymmetricEigen;

use crate::{CMatrix, CVector, Error, Result, C64};

/// Absolute tolerance on `a_ij - conj(a_ji)` accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `<v_i, v_j> - delta_ij` accepted by [`projector_from_basis`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Top-eigenvalue gap (relative to `max(1, |lambda_max|)`) below which the
/// principal eigenvector is flagged as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-12;

/// A square complex matrix that is conjugate-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates conjugate symmetry to [`HERMITIAN_TOL`] and stores the
    /// matrix as given.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let mut worst = (0, 0, 0.0f64);
        for j in 0..cols {
            for i in j..rows {
                let dev = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if dev > worst.2 {
                    worst = (i, j, dev);
                }
            }
        }
        if worst.2 > HERMITIAN_TOL || worst.2.is_nan() {
            return Err(Error::NotHermitian {
                row: worst.0,
                col: worst.1,
                deviation: worst.2,
            });
        }
        Ok(Self(matrix))
    }

    /// `(A + A^H)/2`; used for matrices that are Hermitian in exact
    /// arithmetic but pick up rounding asymmetry.
    pub fn from_hermitian_part(matrix: &CMatrix) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let mut h = (matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        for i in 0..rows {
            h[(i, i)].im = 0.0;
        }
        Ok(Self(h))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// `v v^H`.
    pub fn outer(v: &CVector) -> Self {
        let n = v.len();
        let mut m = CMatrix::zeros(n, n);
        for j in 0..n {
            let cj = v[j].conj();
            for i in 0..n {
                m[(i, j)] = v[i] * cj;
            }
        }
        for i in 0..n {
            m[(i, i)].im = 0.0;
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `v^H A v`, real for Hermitian `A`.
    pub fn quadratic_form(&self, v: &CVector) -> f64 {
        let av = &self.0 * v;
        v.dotc(&av).re
    }

    /// `self + alpha·I`.
    pub fn add_identity(&self, alpha: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += C64::new(alpha, 0.0);
        }
        Self(m)
    }

    /// `alpha·self`.
    pub fn scale(&self, alpha: f64) -> Self {
        Self(&self.0 * C64::new(alpha, 0.0))
    }

    /// `self + other`.
    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 + &other.0)
    }
}

/// Eigenvalues sorted descending with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.eigenvectors.column(i).into_owned()
    }

    /// `V diag(lambda) V^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// Projector onto the span of the first `n` eigenvectors.
    pub fn principal_projector(&self, n: usize) -> SubspaceProjector {
        let n = n.min(self.dim());
        let basis = self.eigenvectors.columns(0, n).into_owned();
        SubspaceProjector::from_trusted_basis(basis)
    }
}

/// Rotates `v` so that its largest-magnitude entry (first one on ties) is
/// real and positive.
pub fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag > 0.0 {
        let rot = v[best].conj() / best_mag;
        for z in v.iter_mut() {
            *z *= rot;
        }
        v[best] = C64::new(v[best].re, 0.0);
    }
}

pub fn eig_hermitian(a: &HermitianMatrix) -> EigenDecomposition {
    let dim = a.dim();
    if dim == 0 {
        return EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(a.as_matrix().clone());
    let mut order: Vec<usize> = (0..dim).collect();
    // Stable sort: equal eigenvalues keep the routine's index order.
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        let mut v: CVector = eig.eigenvectors.column(src).into_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v.unscale_mut(norm);
        }
        fix_phase(&mut v);
        eigenvectors.set_column(dst, &v);
    }
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

#[derive(Debug, Clone)]
pub struct PrincipalEigen {
    pub value: f64,
    pub vector: CVector,
    /// Set when the two largest eigenvalues are closer than [`DEGENERATE_GAP`].
    pub degenerate: bool,
}

pub fn principal_eigenvector(a: &HermitianMatrix) -> PrincipalEigen {
    principal_of(&eig_hermitian(a))
}

pub(crate) fn principal_of(eig: &EigenDecomposition) -> PrincipalEigen {
    let value = eig.eigenvalues[0];
    let degenerate = eig.eigenvalues.len() > 1
        && (value - eig.eigenvalues[1]) < DEGENERATE_GAP * value.abs().max(1.0);
    PrincipalEigen {
        value,
        vector: eig.vector(0),
        degenerate,
    }
}

/// Number of principal components to keep.
///
/// An eigenvalue is a candidate when it exceeds both `noise_threshold` and the
/// mean of all eigenvalues. `N` is the smallest count whose leading
/// eigenvalues hold at least `variance_fraction` of the total, capped at the
/// number of candidates. When no eigenvalue is a candidate (flat spectra) the
/// variance count is used alone.
///
/// The input is sorted internally, so any order is accepted.
pub fn select_principal_count(
    eigenvalues: &[f64],
    noise_threshold: f64,
    variance_fraction: f64,
) -> Result<usize> {
    if !(variance_fraction > 0.0 && variance_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "variance fraction must lie in (0,1), got {variance_fraction}"
        )));
    }
    if eigenvalues.is_empty() || eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidSpectrum("empty or non-finite spectrum".into()));
    }
    let mut ev = eigenvalues.to_vec();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[0] <= 0.0 {
        return Err(Error::InvalidSpectrum(
            "no eigenvalue is positive".into(),
        ));
    }
    // Negative rounding noise carries no variance.
    let total: f64 = ev.iter().map(|l| l.max(0.0)).sum();
    let mean = ev.iter().sum::<f64>() / ev.len() as f64;

    let target = variance_fraction * total;
    let mut acc = 0.0;
    let mut variance_count = ev.len();
    for (i, l) in ev.iter().enumerate() {
        acc += l.max(0.0);
        if acc >= target * (1.0 - 1e-12) {
            variance_count = i + 1;
            break;
        }
    }

    let candidates = ev
        .iter()
        .take_while(|&&l| l > noise_threshold && l > mean)
        .count();
    Ok(if candidates >= 1 {
        variance_count.min(candidates)
    } else {
        variance_count
    })
}

/// Orthogonal projector `P = B B^H` onto the span of orthonormal columns `B`.
#[derive(Debug, Clone)]
pub struct SubspaceProjector {
    basis: CMatrix,
    matrix: CMatrix,
}

impl SubspaceProjector {
    fn from_trusted_basis(basis: CMatrix) -> Self {
        let matrix = &basis * basis.adjoint();
        Self { basis, matrix }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// `P v`, evaluated as `B (B^H v)`.
    pub fn apply(&self, v: &CVector) -> CVector {
        let coeffs = self.basis.adjoint() * v;
        &self.basis * coeffs
    }
}

pub fn projector_from_basis(vectors: &[CVector]) -> Result<SubspaceProjector> {
    let Some(first) = vectors.first() else {
        return Err(Error::Dimension("empty basis".into()));
    };
    let dim = first.len();
    if let Some(bad) = vectors.iter().position(|v| v.len() != dim) {
        return Err(Error::Dimension(format!(
            "basis vector {bad} has length {}, expected {dim}",
            vectors[bad].len()
        )));
    }
    for i in 0..vectors.len() {
        for j in i..vectors.len() {
            let ip = vectors[i].dotc(&vectors[j]);
            let expected = if i == j { 1.0 } else { 0.0 };
            let dev = (ip - C64::new(expected, 0.0)).norm();
            if dev > ORTHONORMAL_TOL {
                return Err(Error::NotOrthonormal {
                    first: i,
                    second: j,
                    deviation: dev,
                });
            }
        }
    }
    let basis = CMatrix::from_columns(vectors);
    Ok(SubspaceProjector::from_trusted_basis(basis))
}
