//! Factorizations: SVD, Hermitian and general eigendecompositions,
//! linear solves with condition estimates, PSD square roots.
//!
//! All outputs are canonicalized (descending/ascending order, columns
//! phase-fixed so the largest entry is real positive) so repeated runs
//! are bit-identical.

use nalgebra::{ComplexField, DMatrix};

use super::{C64, Mat};
use crate::error::{Error, Result};

/// Full singular value decomposition M = U diag(sigma) V^H with square
/// unitary factors; sigma is descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

impl Svd {
    pub fn rank(&self, tol_rank: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > tol_rank * smax).count()
    }

    pub fn reconstruct(&self) -> Mat {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut s = Mat::zeros(m, n);
        if let Mat::Real(sm) = &mut s {
            for (i, &x) in self.sigma.iter().enumerate() {
                sm[(i, i)] = x;
            }
        }
        &(&self.u * &s) * &self.v.adjoint()
    }
}

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Real eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one column per eigenvalue.
    pub vectors: Mat,
}

#[derive(Clone, Debug)]
pub struct GeneralEigen {
    /// Eigenvalues with algebraic multiplicity, sorted by (re, im).
    pub values: Vec<C64>,
    /// Unit eigenvector per eigenvalue; defective eigenvalues repeat a
    /// kernel basis vector, so columns may coincide.
    pub vectors: Mat,
}

impl GeneralEigen {
    /// Max residual |M v - lambda v| over all pairs.
    pub fn max_residual(&self, m: &Mat) -> f64 {
        let mc = m.to_complex();
        let vc = self.vectors.to_complex();
        let mut worst = 0.0f64;
        for (i, &lam) in self.values.iter().enumerate() {
            let v = vc.column(i).into_owned();
            let r = (&mc * &v) - v.map(|x| x * lam);
            worst = worst.max(r.norm());
        }
        worst
    }
}

// phase-fix a column in place: largest-modulus entry becomes real positive
fn canonical_phase<T: ComplexField<RealField = f64> + Copy>(m: &mut DMatrix<T>, col: usize) -> T {
    let n = m.nrows();
    let mut p = 0;
    let mut best = -1.0;
    for i in 0..n {
        let a = m[(i, col)].modulus();
        if a > best + 1e-300 {
            best = a;
            p = i;
        }
    }
    if best <= 0.0 {
        return T::one();
    }
    let z = m[(p, col)];
    let phase = z.unscale(z.modulus());
    let corr = phase.conjugate();
    for i in 0..n {
        m[(i, col)] = m[(i, col)] * corr;
    }
    corr
}

// extend orthonormal columns to a full unitary basis, deterministically
fn complete_unitary<T: ComplexField<RealField = f64> + Copy>(q: &DMatrix<T>) -> DMatrix<T> {
    let dim = q.nrows();
    let k = q.ncols();
    let mut out = DMatrix::<T>::zeros(dim, dim);
    out.view_mut((0, 0), (dim, k)).copy_from(q);
    let mut filled = k;
    while filled < dim {
        let mut best_j = 0;
        let mut best_norm = -1.0;
        let mut best_v: Option<DMatrix<T>> = None;
        for j in 0..dim {
            let mut v = DMatrix::<T>::zeros(dim, 1);
            v[(j, 0)] = T::one();
            // two orthogonalization passes against the current basis
            for _ in 0..2 {
                for c in 0..filled {
                    let col = out.column(c);
                    let dot = col.dotc(&v.column(0));
                    for i in 0..dim {
                        v[(i, 0)] -= col[i] * dot;
                    }
                }
            }
            let nv = v.norm();
            if nv > best_norm {
                best_norm = nv;
                best_j = j;
                best_v = Some(v);
            }
        }
        let _ = best_j;
        let mut v = best_v.expect("completion candidate");
        let nv = v.norm();
        for i in 0..dim {
            v[(i, 0)] = v[(i, 0)].unscale(nv);
        }
        out.view_mut((0, filled), (dim, 1)).copy_from(&v);
        filled += 1;
    }
    out
}

// residual |A - U diag(sigma) V^H| using however many vector pairs exist
fn reconstruction_residual_thin<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
    u: &DMatrix<T>,
    sigma: &[f64],
    v: &DMatrix<T>,
) -> f64 {
    let p = u.ncols();
    let mut rec = DMatrix::<T>::zeros(a.nrows(), a.ncols());
    for i in 0..p {
        let ui = u.column(i);
        let vi = v.column(i);
        let s = T::from_real(sigma[i]);
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                rec[(r, c)] += ui[r] * s * vi[c].conjugate();
            }
        }
    }
    (a - rec).norm()
}

fn reconstruction_residual<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
    u: &DMatrix<T>,
    sigma: &[f64],
    v: &DMatrix<T>,
) -> f64 {
    reconstruction_residual_thin(a, u, sigma, v)
}

// SVD through the Hermitian eigendecomposition of [[0, A],[A^H, 0]];
// slower but backed by the reliable symmetric eigensolver. Kernel and
// cokernel directions are left to the unitary completion.
fn svd_jordan_wielandt<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut h = DMatrix::<T>::zeros(m + n, m + n);
    h.view_mut((0, m), (m, n)).copy_from(a);
    h.view_mut((m, 0), (n, m)).copy_from(&a.adjoint());
    let (eigenvalues, eigenvectors) = jacobi_hermitian_eigen(&h);
    let mut order: Vec<usize> = (0..m + n).collect();
    order.sort_by(|&i, &j| eigenvalues[j].partial_cmp(&eigenvalues[i]).unwrap());
    let mut sigma = Vec::with_capacity(k);
    let mut u_cols: Vec<DMatrix<T>> = Vec::new();
    let mut v_cols: Vec<DMatrix<T>> = Vec::new();
    let smax = eigenvalues[order[0]].max(0.0);
    for &idx in order.iter().take(k) {
        let s = eigenvalues[idx].max(0.0);
        sigma.push(s);
        if s <= 1e-12 * smax {
            continue;
        }
        let vec = eigenvectors.column(idx);
        let mut uu = DMatrix::<T>::zeros(m, 1);
        let mut vv = DMatrix::<T>::zeros(n, 1);
        for i in 0..m {
            uu[(i, 0)] = vec[i];
        }
        for i in 0..n {
            vv[(i, 0)] = vec[m + i];
        }
        let (nu, nv) = (uu.norm(), vv.norm());
        if nu < 0.45 || nv < 0.45 {
            // unbalanced halves: the direction leaked into the kernel
            // cluster; everything from here down counts as zero
            let pos = sigma.len() - 1;
            sigma[pos] = 0.0;
            while sigma.len() < k {
                sigma.push(0.0);
            }
            break;
        }
        for i in 0..m {
            uu[(i, 0)] = uu[(i, 0)].unscale(nu);
        }
        for i in 0..n {
            vv[(i, 0)] = vv[(i, 0)].unscale(nv);
        }
        u_cols.push(uu);
        v_cols.push(vv);
    }
    let mut u = DMatrix::<T>::zeros(m, u_cols.len());
    let mut v = DMatrix::<T>::zeros(n, v_cols.len());
    for (j, col) in u_cols.iter().enumerate() {
        u.view_mut((0, j), (m, 1)).copy_from(col);
    }
    for (j, col) in v_cols.iter().enumerate() {
        v.view_mut((0, j), (n, 1)).copy_from(col);
    }
    (u, sigma, v)
}

fn svd_generic<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok((
            complete_unitary(&DMatrix::<T>::zeros(m, 0)),
            Vec::new(),
            complete_unitary(&DMatrix::<T>::zeros(n, 0)),
        ));
    }
    // the Golub-Reinsch path mis-converges on some inputs when pushed
    // to machine epsilon; run it at 1e-13 and verify the factorization
    let direct = a.clone().try_svd(true, true, 1e-13, 10_000 * (k + 1));
    let (mut u, mut sigma, mut v, ok) = match direct {
        Some(svd) => {
            let u_thin = svd.u.unwrap();
            let v_thin = svd.v_t.unwrap().adjoint();
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&i, &j| {
                svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap()
            });
            let mut u = DMatrix::<T>::zeros(m, k);
            let mut v = DMatrix::<T>::zeros(n, k);
            let mut sigma = Vec::with_capacity(k);
            for (new, &old) in order.iter().enumerate() {
                u.view_mut((0, new), (m, 1)).copy_from(&u_thin.column(old));
                v.view_mut((0, new), (n, 1)).copy_from(&v_thin.column(old));
                sigma.push(svd.singular_values[old].max(0.0));
            }
            let resid = reconstruction_residual(a, &u, &sigma, &v);
            let ok = resid <= 1e-11 * (1.0 + sigma[0]) * (k as f64);
            (u, sigma, v, ok)
        }
        None => (DMatrix::zeros(m, 0), Vec::new(), DMatrix::zeros(n, 0), false),
    };
    if !ok {
        let (uj, sj, vj) = svd_jordan_wielandt(a);
        let resid = reconstruction_residual_thin(a, &uj, &sj, &vj);
        if resid > 1e-10 * (1.0 + sj.first().copied().unwrap_or(0.0)) * ((m + n) as f64) {
            return Err(Error::NumericalFailure(format!(
                "SVD failed to verify on both paths (residual {resid:.3e})"
            )));
        }
        sigma = sj;
        u = uj;
        v = vj;
    }
    let mut u = complete_unitary(&u);
    let mut v = complete_unitary(&v);
    // paired phase fix for genuine singular pairs; kernel directions
    // (zero sigma) and completions are phase-fixed independently
    let smax = sigma.first().copied().unwrap_or(0.0);
    for i in 0..k {
        if sigma[i] > 1e-13 * smax {
            let corr = canonical_phase(&mut u, i);
            for r in 0..n {
                v[(r, i)] = v[(r, i)] * corr;
            }
        } else {
            canonical_phase(&mut u, i);
            canonical_phase(&mut v, i);
        }
    }
    for i in k..m {
        canonical_phase(&mut u, i);
    }
    for i in k..n {
        canonical_phase(&mut v, i);
    }
    Ok((u, sigma, v))
}

/// Cyclic Jacobi eigendecomposition for Hermitian matrices: rotations
/// annihilate off-diagonal entries pairwise until machine-level
/// convergence. Quadratically convergent and numerically exact at the
/// sizes this crate handles; the library eigensolver terminates too
/// early on some inputs.
pub(crate) fn jacobi_hermitian_eigen<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
) -> (Vec<f64>, DMatrix<T>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let mut m = (a + a.adjoint()).unscale(2.0);
    let mut v = DMatrix::<T>::identity(n, n);
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let tol = f64::EPSILON * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].modulus_squared();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let gamma = m[(p, q)];
                let g_abs = gamma.modulus();
                if g_abs <= f64::EPSILON * scale * 1e-2 {
                    continue;
                }
                // absorb the phase, then a real Jacobi rotation
                let phi = gamma.conjugate().unscale(g_abs);
                let alpha = m[(p, p)].real();
                let beta = m[(q, q)].real();
                let tau = (beta - alpha) / (2.0 * g_abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c, s],[-s phi, c phi]] on columns (p, q)
                let jpp = T::from_real(c);
                let jpq = T::from_real(s);
                let jqp = phi.scale(-s);
                let jqq = phi.scale(c);
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * jpp + miq * jqp;
                    m[(i, q)] = mip * jpq + miq * jqq;
                }
                for i in 0..n {
                    let mpi = m[(p, i)];
                    let mqi = m[(q, i)];
                    m[(p, i)] = jpp.conjugate() * mpi + jqp.conjugate() * mqi;
                    m[(q, i)] = jpq.conjugate() * mpi + jqq.conjugate() * mqi;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * jpp + viq * jqp;
                    v[(i, q)] = vip * jpq + viq * jqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].real().partial_cmp(&m[(j, j)].real()).unwrap());
    let mut vals = Vec::with_capacity(n);
    let mut vecs = DMatrix::<T>::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vals.push(m[(old, old)].real());
        vecs.view_mut((0, new), (n, 1)).copy_from(&v.column(old));
    }
    (vals, vecs)
}

fn eig_hermitian_generic<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
) -> (Vec<f64>, DMatrix<T>) {
    let (vals, mut vecs) = jacobi_hermitian_eigen(a);
    for i in 0..vals.len() {
        canonical_phase(&mut vecs, i);
    }
    (vals, vecs)
}

impl Mat {
    pub fn svd(&self) -> Result<Svd> {
        if !self.is_finite() {
            return Err(Error::InvalidMatrix("non-finite entries".into()));
        }
        match self {
            Mat::Real(m) => {
                let (u, sigma, v) = svd_generic(m)?;
                Ok(Svd { u: Mat::Real(u), sigma, v: Mat::Real(v) })
            }
            Mat::Complex(m) => {
                let (u, sigma, v) = svd_generic(m)?;
                Ok(Svd {
                    u: Mat::from_complex(u),
                    sigma,
                    v: Mat::from_complex(v),
                })
            }
        }
    }

    /// Eigendecomposition of a Hermitian matrix: real ascending
    /// eigenvalues, orthonormal eigenvectors.
    pub fn eig_hermitian(&self) -> Result<HermitianEigen> {
        if !self.is_finite() {
            return Err(Error::InvalidMatrix("non-finite entries".into()));
        }
        if !self.is_hermitian(1e-12) {
            return Err(Error::InvalidMatrix(format!(
                "matrix is not Hermitian (defect {:.3e})",
                self.hermitian_defect()
            )));
        }
        match self {
            Mat::Real(m) => {
                let (values, vectors) = eig_hermitian_generic(m);
                Ok(HermitianEigen { values, vectors: Mat::Real(vectors) })
            }
            Mat::Complex(m) => {
                let (values, vectors) = eig_hermitian_generic(m);
                Ok(HermitianEigen { values, vectors: Mat::from_complex(vectors) })
            }
        }
    }

    /// Eigenvalues (Hessenberg reduction + shifted QR, via the Schur
    /// form) plus per-eigenvalue kernel vectors of M - lambda I.
    pub fn eig_general(&self) -> Result<GeneralEigen> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("eig_general needs a square matrix".into()));
        }
        if !self.is_finite() {
            return Err(Error::InvalidMatrix("non-finite entries".into()));
        }
        let n = self.nrows();
        if n == 0 {
            return Ok(GeneralEigen { values: Vec::new(), vectors: Mat::zeros(0, 0) });
        }
        let max_iter = 100 * n.max(10);
        let mut values: Vec<C64> = match self {
            Mat::Real(m) => {
                let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-13, max_iter)
                    .ok_or_else(|| {
                        Error::NumericalFailure("QR eigenvalue iteration did not converge".into())
                    })?;
                schur.complex_eigenvalues().iter().copied().collect()
            }
            Mat::Complex(m) => {
                let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-13, max_iter)
                    .ok_or_else(|| {
                        Error::NumericalFailure("QR eigenvalue iteration did not converge".into())
                    })?;
                schur
                    .eigenvalues()
                    .ok_or_else(|| Error::NumericalFailure("Schur eigenvalue extraction failed".into()))?
                    .iter()
                    .copied()
                    .collect()
            }
        };
        values.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

        // cluster nearby eigenvalues, then take kernel bases of M - lambda I
        let scale = 1.0 + self.norm_fro();
        let cluster_tol = 1e-8 * scale;
        let mut clusters: Vec<(C64, Vec<usize>)> = Vec::new();
        for (i, &lam) in values.iter().enumerate() {
            match clusters.iter_mut().find(|(c, _)| (*c - lam).norm() <= cluster_tol) {
                Some((_, idx)) => idx.push(i),
                None => clusters.push((lam, vec![i])),
            }
        }
        let mut vectors = DMatrix::<C64>::zeros(n, n);
        let mc = self.to_complex();
        let mut any_complex_vec = false;
        for (lam, idx) in &clusters {
            let mean: C64 = idx.iter().map(|&i| values[i]).sum::<C64>() / (idx.len() as f64);
            let _ = lam;
            let shifted = Mat::from_complex(&mc - DMatrix::<C64>::identity(n, n).map(|x| x * mean));
            let ns = shifted.null_space(1e-7)?;
            let g = ns.ncols();
            let nsc = ns.to_complex();
            for (slot, &i) in idx.iter().enumerate() {
                let col = if g > 0 {
                    nsc.column(slot.min(g - 1)).into_owned()
                } else {
                    // fall back to the most singular direction
                    let svd = shifted.svd()?;
                    svd.v.to_complex().column(n - 1).into_owned()
                };
                if col.iter().any(|z| z.im != 0.0) {
                    any_complex_vec = true;
                }
                vectors.view_mut((0, i), (n, 1)).copy_from(&col);
            }
        }
        let vectors = if any_complex_vec || !self.is_real() {
            Mat::Complex(vectors)
        } else {
            Mat::from_complex(vectors)
        };
        Ok(GeneralEigen { values, vectors })
    }

    /// Orthonormal kernel basis (columns), relative tolerance on sigma.
    pub fn null_space(&self, tol_rank: f64) -> Result<Mat> {
        let n = self.ncols();
        if n == 0 {
            return Ok(Mat::zeros(0, 0));
        }
        if self.nrows() == 0 {
            return Ok(Mat::identity(n));
        }
        let svd = self.svd()?;
        let r = svd.rank(tol_rank);
        Ok(svd.v.block(0, r, n, n - r))
    }

    /// Orthonormal range basis (columns).
    pub fn range_space(&self, tol_rank: f64) -> Result<Mat> {
        let m = self.nrows();
        if m == 0 || self.ncols() == 0 {
            return Ok(Mat::zeros(m, 0));
        }
        let svd = self.svd()?;
        let r = svd.rank(tol_rank);
        Ok(svd.u.block(0, 0, m, r))
    }

    /// Solves a x = b for square a; fails loudly past `cond_max`.
    pub fn solve_cond(&self, b: &Mat, cond_max: f64) -> Result<(Mat, f64)> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("solve needs a square matrix".into()));
        }
        if self.nrows() != b.nrows() {
            return Err(Error::DimensionMismatch("solve rhs row count".into()));
        }
        let n = self.nrows();
        if n == 0 {
            return Ok((Mat::zeros(0, b.ncols()), 1.0));
        }
        let svd = self.svd()?;
        let smax = svd.sigma[0];
        let smin = svd.sigma[n - 1];
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !cond.is_finite() || cond > cond_max {
            return Err(Error::SingularMatrix { cond });
        }
        // x = V diag(1/sigma) U^H b
        let uhb = &svd.u.adjoint() * b;
        let mut scaled = uhb;
        match &mut scaled {
            Mat::Real(m) => {
                for i in 0..n {
                    for j in 0..m.ncols() {
                        m[(i, j)] /= svd.sigma[i];
                    }
                }
            }
            Mat::Complex(m) => {
                for i in 0..n {
                    for j in 0..m.ncols() {
                        m[(i, j)] /= svd.sigma[i];
                    }
                }
            }
        }
        Ok((&svd.v * &scaled, cond))
    }

    pub fn solve(&self, b: &Mat) -> Result<Mat> {
        self.solve_cond(b, 1e13).map(|(x, _)| x)
    }

    /// Moore-Penrose pseudoinverse with relative sigma cutoff.
    pub fn pinv(&self, tol_rank: f64) -> Result<Mat> {
        let (m, n) = self.shape();
        if m == 0 || n == 0 {
            return Ok(Mat::zeros(n, m));
        }
        let svd = self.svd()?;
        let r = svd.rank(tol_rank);
        let mut s_inv = Mat::zeros(n, m);
        if let Mat::Real(sm) = &mut s_inv {
            for i in 0..r {
                sm[(i, i)] = 1.0 / svd.sigma[i];
            }
        }
        Ok(&(&svd.v * &s_inv) * &svd.u.adjoint())
    }

    /// Hermitian PSD square root; input eigenvalues may dip to
    /// -1e-12 * scale before rejection.
    pub fn sqrt_psd(&self) -> Result<Mat> {
        let eg = self.eig_hermitian()?;
        let scale = 1.0 + self.norm_fro();
        if let Some(&lmin) = eg.values.first() {
            if lmin < -1e-12 * scale {
                return Err(Error::InvalidMatrix(format!(
                    "matrix is not positive semidefinite (eigmin {lmin:.3e})"
                )));
            }
        }
        Ok(hermitian_function(&eg, |l| l.max(0.0).sqrt()))
    }

    /// Inverse square root of a Hermitian positive definite matrix.
    pub fn inv_sqrt_pd(&self) -> Result<Mat> {
        let eg = self.eig_hermitian()?;
        let scale = 1.0 + self.norm_fro();
        if let Some(&lmin) = eg.values.first() {
            if lmin <= 1e-14 * scale {
                return Err(Error::InvalidWeight(format!(
                    "matrix is not positive definite (eigmin {lmin:.3e})"
                )));
            }
        }
        Ok(hermitian_function(&eg, |l| 1.0 / l.sqrt()))
    }

    pub fn pow(&self, k: usize) -> Mat {
        assert!(self.is_square());
        let mut acc = Mat::identity(self.nrows());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Smallest eigenvalue of a Hermitian matrix (0 for empty).
    pub fn eigmin_hermitian(&self) -> Result<f64> {
        if self.nrows() == 0 {
            return Ok(0.0);
        }
        Ok(self.eig_hermitian()?.values[0])
    }
}

fn hermitian_function(eg: &HermitianEigen, f: impl Fn(f64) -> f64) -> Mat {
    let d = Mat::from_diag_real(&eg.values.iter().map(|&l| f(l)).collect::<Vec<_>>());
    let s = &(&eg.vectors * &d) * &eg.vectors.adjoint();
    s.hermitian_part()
}
