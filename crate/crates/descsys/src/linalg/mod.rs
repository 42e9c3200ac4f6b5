//! Dense real/complex matrix kernels.
//!
//! One `Mat` type covers both scalar fields: real inputs stay in real
//! arithmetic until a complex quantity (eigenvalue, complex operand)
//! forces promotion. Factorizations are backed by nalgebra with
//! canonicalized, deterministically signed outputs on top.

mod factor;

pub use factor::{GeneralEigen, HermitianEigen, Svd};

pub(crate) fn jacobi_hermitian_eigen_real(
    m: &nalgebra::DMatrix<f64>,
) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    factor::jacobi_hermitian_eigen(m)
}

pub(crate) fn jacobi_hermitian_eigen_complex(
    m: &nalgebra::DMatrix<C64>,
) -> (Vec<f64>, nalgebra::DMatrix<C64>) {
    factor::jacobi_hermitian_eigen(m)
}

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default relative rank tolerance (overridable per call).
pub const TOL_RANK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Mat {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::Real(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Mat::Real(DMatrix::identity(n, n))
    }

    pub fn from_real(m: DMatrix<f64>) -> Self {
        Mat::Real(m)
    }

    /// Wraps a complex matrix, demoting to the real representation when
    /// every imaginary part is exactly zero.
    pub fn from_complex(m: DMatrix<C64>) -> Self {
        if m.iter().all(|z| z.im == 0.0) {
            Mat::Real(m.map(|z| z.re))
        } else {
            Mat::Complex(m)
        }
    }

    pub fn from_rows_real(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged row lengths".into()));
        }
        let mut m = DMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        Ok(Mat::Real(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged row lengths".into()));
        }
        let mut m = DMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        Ok(Mat::from_complex(m))
    }

    pub fn from_diag_real(d: &[f64]) -> Self {
        let mut m = DMatrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        Mat::Real(m)
    }

    pub fn col_from_real(v: &[f64]) -> Self {
        Mat::Real(DMatrix::from_column_slice(v.len(), 1, v))
    }

    pub fn col_from(v: &[C64]) -> Self {
        Mat::from_complex(DMatrix::from_column_slice(v.len(), 1, v))
    }

    pub fn nrows(&self) -> usize {
        match self {
            Mat::Real(m) => m.nrows(),
            Mat::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Mat::Real(m) => m.ncols(),
            Mat::Complex(m) => m.ncols(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.nrows() == 0 || self.ncols() == 0
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Mat::Real(_))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            Mat::Real(m) => C64::new(m[(i, j)], 0.0),
            Mat::Complex(m) => m[(i, j)],
        }
    }

    /// Complex copy of the data, regardless of representation.
    pub fn to_complex(&self) -> DMatrix<C64> {
        match self {
            Mat::Real(m) => m.map(|x| C64::new(x, 0.0)),
            Mat::Complex(m) => m.clone(),
        }
    }

    pub fn as_real(&self) -> Option<&DMatrix<f64>> {
        match self {
            Mat::Real(m) => Some(m),
            Mat::Complex(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Mat::Real(m) => m.iter().all(|x| x.is_finite()),
            Mat::Complex(m) => m.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }

    pub fn transpose(&self) -> Mat {
        match self {
            Mat::Real(m) => Mat::Real(m.transpose()),
            Mat::Complex(m) => Mat::Complex(m.transpose()),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat {
        match self {
            Mat::Real(m) => Mat::Real(m.transpose()),
            Mat::Complex(m) => Mat::Complex(m.adjoint()),
        }
    }

    pub fn conj(&self) -> Mat {
        match self {
            Mat::Real(m) => Mat::Real(m.clone()),
            Mat::Complex(m) => Mat::Complex(m.map(|z| z.conj())),
        }
    }

    pub fn scale(&self, s: f64) -> Mat {
        match self {
            Mat::Real(m) => Mat::Real(m * s),
            Mat::Complex(m) => Mat::Complex(m.map(|z| z * s)),
        }
    }

    pub fn scale_c(&self, s: C64) -> Mat {
        if s.im == 0.0 {
            return self.scale(s.re);
        }
        Mat::Complex(self.to_complex().map(|z| z * s))
    }

    pub fn block(&self, i0: usize, j0: usize, rows: usize, cols: usize) -> Mat {
        match self {
            Mat::Real(m) => Mat::Real(m.view((i0, j0), (rows, cols)).into_owned()),
            Mat::Complex(m) => Mat::Complex(m.view((i0, j0), (rows, cols)).into_owned()),
        }
    }

    pub fn column(&self, j: usize) -> Mat {
        self.block(0, j, self.nrows(), 1)
    }

    pub fn hstack(parts: &[&Mat]) -> Mat {
        assert!(!parts.is_empty());
        let rows = parts[0].nrows();
        assert!(parts.iter().all(|p| p.nrows() == rows));
        let cols: usize = parts.iter().map(|p| p.ncols()).sum();
        if parts.iter().all(|p| p.is_real()) {
            let mut out = DMatrix::<f64>::zeros(rows, cols);
            let mut j0 = 0;
            for p in parts {
                let m = p.as_real().unwrap();
                out.view_mut((0, j0), (rows, m.ncols())).copy_from(m);
                j0 += m.ncols();
            }
            Mat::Real(out)
        } else {
            let mut out = DMatrix::<C64>::zeros(rows, cols);
            let mut j0 = 0;
            for p in parts {
                let m = p.to_complex();
                out.view_mut((0, j0), (rows, m.ncols())).copy_from(&m);
                j0 += m.ncols();
            }
            Mat::Complex(out)
        }
    }

    pub fn vstack(parts: &[&Mat]) -> Mat {
        let transposed: Vec<Mat> = parts.iter().map(|p| p.adjoint()).collect();
        let refs: Vec<&Mat> = transposed.iter().collect();
        Mat::hstack(&refs).adjoint()
    }

    pub fn block_2x2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
        let top = Mat::hstack(&[a, b]);
        let bot = Mat::hstack(&[c, d]);
        Mat::vstack(&[&top, &bot])
    }

    pub fn norm_fro(&self) -> f64 {
        match self {
            Mat::Real(m) => m.norm(),
            Mat::Complex(m) => m.norm(),
        }
    }

    pub fn norm_max(&self) -> f64 {
        match self {
            Mat::Real(m) => m.iter().fold(0.0, |a, x| a.max(x.abs())),
            Mat::Complex(m) => m.iter().fold(0.0, |a, z| a.max(z.norm())),
        }
    }

    pub fn trace(&self) -> C64 {
        let n = self.nrows().min(self.ncols());
        (0..n).map(|i| self.get(i, i)).sum()
    }

    /// Max elementwise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        (self - &self.adjoint()).norm_max()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_defect() <= tol * (1.0 + self.norm_fro())
    }

    pub fn hermitian_part(&self) -> Mat {
        (self + &self.adjoint()).scale(0.5)
    }

    /// Maximum singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Singular values, descending, through the verified SVD path.
    /// Non-finite input yields an empty list.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        match self.svd() {
            Ok(svd) => svd.sigma,
            Err(_) => Vec::new(),
        }
    }

    pub fn rank(&self, tol_rank: f64) -> usize {
        let sv = self.singular_values();
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > tol_rank * smax).count()
    }
}

impl std::ops::Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "matrix addition shape mismatch");
        match (self, rhs) {
            (Mat::Real(a), Mat::Real(b)) => Mat::Real(a + b),
            _ => Mat::Complex(self.to_complex() + rhs.to_complex()),
        }
    }
}

impl std::ops::Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "matrix subtraction shape mismatch");
        match (self, rhs) {
            (Mat::Real(a), Mat::Real(b)) => Mat::Real(a - b),
            _ => Mat::Complex(self.to_complex() - rhs.to_complex()),
        }
    }
}

impl std::ops::Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(
            self.ncols(),
            rhs.nrows(),
            "matrix product shape mismatch: {:?} * {:?}",
            self.shape(),
            rhs.shape()
        );
        match (self, rhs) {
            (Mat::Real(a), Mat::Real(b)) => Mat::Real(a * b),
            _ => Mat::Complex(self.to_complex() * rhs.to_complex()),
        }
    }
}

impl std::ops::Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

impl std::fmt::Display for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mat::Real(m) => write!(f, "{m:.6}"),
            Mat::Complex(m) => write!(f, "{m:.6}"),
        }
    }
}
