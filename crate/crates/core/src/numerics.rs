//! Shared dense linear algebra over real and complex entries.
//!
//! Everything here is deterministic: eigenvalues are sorted in descending
//! order with ties broken by the original solver index, and random sampling
//! is driven by an explicit 64-bit seed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Global tolerance policy threaded through the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Absolute tolerance for equality of probabilities, matrix entries and norms.
    pub eq_tol: f64,
    /// Tolerance below which eigenvalues are clamped to zero when building spectra.
    pub psd_tol: f64,
    /// Tolerance for Monte-Carlo assertions.
    pub stat_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            eq_tol: 1e-9,
            psd_tol: 1e-10,
            stat_tol: 2e-2,
        }
    }
}

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |M - M^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
}

/// Dense complex matrix in row-major order.
///
/// Thin wrapper around `nalgebra::DMatrix<Complex64>` fixing the JSON shape
/// (parallel real/imaginary row-major arrays) used across the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(pub DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds from a row-major list of complex entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> Self {
        assert_eq!(rows * cols, entries.len(), "entry count must be rows*cols");
        Self(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        let data: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_rows(rows, cols, &data)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.0.nrows() == self.0.ncols()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest entrywise absolute deviation from Hermitianity.
    pub fn hermitian_deviation(&self) -> f64 {
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise max-norm distance to another matrix.
    pub fn max_distance(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Kronecker product, with `self` as the major (left) factor.
    pub fn kronecker(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Column `j` as a standalone column matrix.
    pub fn column(&self, j: usize) -> Self {
        Self(DMatrix::from_fn(self.rows(), 1, |i, _| self.0[(i, j)]))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(&self.0 * Complex64::new(factor, 0.0))
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Serialized as parallel `re`/`im` row-major nested arrays.
impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (re, im) = self.to_re_im();
        let mut s = serializer.serialize_struct("ComplexMatrix", 2)?;
        s.serialize_field("re", &re)?;
        s.serialize_field("im", &im)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct ReIm {
            re: Vec<Vec<f64>>,
            im: Vec<Vec<f64>>,
        }
        let raw = ReIm::deserialize(deserializer)?;
        ComplexMatrix::from_re_im(&raw.re, &raw.im).map_err(serde::de::Error::custom)
    }
}

impl ComplexMatrix {
    pub fn to_re_im(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let re = (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)].re).collect())
            .collect();
        let im = (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)].im).collect())
            .collect();
        (re, im)
    }

    pub fn from_re_im(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self, String> {
        if re.len() != im.len() {
            return Err("re and im have different row counts".into());
        }
        let rows = re.len();
        let cols = re.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(rows * cols);
        for (r_row, i_row) in re.iter().zip(im) {
            if r_row.len() != cols || i_row.len() != cols {
                return Err("ragged re/im rows".into());
            }
            for (&r, &i) in r_row.iter().zip(i_row) {
                if !r.is_finite() || !i.is_finite() {
                    return Err("non-finite matrix entry".into());
                }
                entries.push(Complex64::new(r, i));
            }
        }
        Ok(Self::from_rows(rows, cols, &entries))
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues sorted in descending order (ties broken by the
/// solver's original index) and the matching eigenvectors as columns, so
/// that `M = V diag(lambda) V^dag` within `tol.eq_tol`.
pub fn hermitian_eigendecomposition(
    m: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<(Vec<f64>, ComplexMatrix), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let deviation = m.hermitian_deviation();
    if deviation > tol.eq_tol {
        return Err(NumericsError::NotHermitian { deviation });
    }
    // Work on the exactly Hermitian part so solver round-off cannot leak
    // the sub-tolerance asymmetry into the eigenvectors.
    let herm = (&m.0 + m.0.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, ComplexMatrix(vectors)))
}

/// Haar-distributed random unitary, deterministic in the seed.
///
/// QR of a seeded complex Gaussian matrix with the phases of the R diagonal
/// folded back in, which makes the distribution exactly Haar.
pub fn haar_random_unitary(d: usize, seed: u64) -> ComplexMatrix {
    assert!(d >= 1, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let ginibre = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = normal.sample(&mut rng);
        let im: f64 = normal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let qr = ginibre.qr();
    let r_diag: Vec<Complex64> = (0..d).map(|i| qr.r()[(i, i)]).collect();
    let q = qr.q();
    let phases = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let z = r_diag[i];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    ComplexMatrix(q * phases)
}

/// Checks nonnegativity and unit row/column sums within `tol.eq_tol`.
pub fn is_doubly_stochastic(m: &DMatrix<f64>, tol: &Tolerance) -> Result<bool, NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|&x| x < -tol.eq_tol) {
        return Ok(false);
    }
    let row_ok = m.row_sum().iter().all(|&s| (s - 1.0).abs() <= tol.eq_tol);
    let col_ok = m.column_sum().iter().all(|&s| (s - 1.0).abs() <= tol.eq_tol);
    Ok(row_ok && col_ok)
}

/// Seeded random Hermitian matrix with entries of order one.
pub fn random_hermitian(d: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = normal.sample(&mut rng);
        let im: f64 = normal.sample(&mut rng);
        Complex64::new(re, im)
    });
    ComplexMatrix((&g + g.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Seeded random density matrix (Hilbert-Schmidt ensemble, `G G^dag / tr`).
pub fn random_density_matrix(d: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = normal.sample(&mut rng);
        let im: f64 = normal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    ComplexMatrix(rho / Complex64::new(tr, 0.0))
}

/// Gram-Schmidt pass over the given columns, completed to a full
/// orthonormal basis with seeded random vectors. Near-dependent inputs are
/// dropped rather than amplified.
pub fn complete_orthonormal_basis(
    mut columns: Vec<DVector<Complex64>>,
    dim: usize,
    seed: u64,
) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ortho: Vec<DVector<Complex64>> = Vec::with_capacity(dim);
    fn feed(v: DVector<Complex64>, ortho: &mut Vec<DVector<Complex64>>) {
        let mut w = v;
        for u in ortho.iter() {
            let overlap = u.dotc(&w);
            w -= u * overlap;
        }
        let norm = w.norm();
        if norm > 1e-6 {
            ortho.push(w / Complex64::new(norm, 0.0));
        }
    }
    for v in columns.drain(..) {
        feed(v, &mut ortho);
    }
    while ortho.len() < dim {
        let normal = StandardNormal;
        let v = DVector::from_fn(dim, |_, _| {
            Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))
        });
        feed(v, &mut ortho);
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (j, u) in ortho.iter().enumerate() {
        for i in 0..dim {
            out.0[(i, j)] = u[i];
        }
    }
    out
}

/// Trace distance between two Hermitian matrices, `0.5 * ||a - b||_1`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerance) -> f64 {
    let diff = a - b;
    let (values, _) = hermitian_eigendecomposition(&diff, tol).expect("Hermitian difference");
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}
