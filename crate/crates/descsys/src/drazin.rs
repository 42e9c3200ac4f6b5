//! Drazin inverses and the explicit solution formula for
//! arbitrary-index discrete-time DAEs, including consistency checking.
//!
//! All computations run in the commuting-coefficient transform
//! E_hat = (lambda E - A)^{-1} E, A_hat = (lambda E - A)^{-1} A, which
//! leaves the state sequence untouched.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::pencil;

/// Similarity T = [U_core, U_nil] separating the invertible and
/// nilpotent parts of a matrix, found by repeated range extraction.
#[derive(Clone, Debug)]
pub struct CoreNilpotentSplit {
    pub t: Mat,
    pub t_inv: Mat,
    pub core_dim: usize,
    pub nilpotency_index: usize,
    /// Separation between the smallest kept and largest dropped
    /// singular value of M^nu (infinite when one side is empty).
    pub gap: f64,
}

impl CoreNilpotentSplit {
    /// Top-left block of T^{-1} X T; valid for any X commuting with the
    /// split matrix.
    pub fn core_block(&self, x: &Mat) -> Mat {
        let g = &(&self.t_inv * x) * &self.t;
        g.block(0, 0, self.core_dim, self.core_dim)
    }

    pub fn nilpotent_block(&self, x: &Mat) -> Mat {
        let g = &(&self.t_inv * x) * &self.t;
        let n = g.nrows();
        g.block(self.core_dim, self.core_dim, n - self.core_dim, n - self.core_dim)
    }

    /// Norm of the off-diagonal blocks of T^{-1} X T.
    pub fn invariance_defect(&self, x: &Mat) -> f64 {
        let g = &(&self.t_inv * x) * &self.t;
        let n = g.nrows();
        let rc = self.core_dim;
        g.block(0, rc, rc, n - rc).norm_fro() + g.block(rc, 0, n - rc, rc).norm_fro()
    }
}

/// Splits C^n = range(M^nu) + ker(M^nu) with nu found by rank
/// recursion on successive range compressions.
pub fn core_nilpotent_split(m: &Mat, tol_rank: f64) -> Result<CoreNilpotentSplit> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("core-nilpotent split needs a square matrix".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(CoreNilpotentSplit {
            t: Mat::zeros(0, 0),
            t_inv: Mat::zeros(0, 0),
            core_dim: 0,
            nilpotency_index: 0,
            gap: f64::INFINITY,
        });
    }
    // rank(M^k) via compression of M onto range(M^{k-1}); thresholds
    // are anchored to the scale of M itself, so numerically-zero
    // compressions cannot fake rank
    let anchor = m.spectral_norm();
    if anchor == 0.0 {
        // the zero matrix: nilpotent of index one
        return Ok(CoreNilpotentSplit {
            t: Mat::identity(n),
            t_inv: Mat::identity(n),
            core_dim: 0,
            nilpotency_index: 1,
            gap: f64::INFINITY,
        });
    }
    let mut nu = 0usize;
    let mut cur = m.clone();
    loop {
        if cur.nrows() == 0 {
            break;
        }
        let sv = cur.singular_values();
        let r = sv.iter().filter(|&&s| s > tol_rank * anchor).count();
        if r == cur.nrows() {
            break;
        }
        nu += 1;
        if r == 0 {
            break;
        }
        let svd = cur.svd()?;
        let q = svd.u.block(0, 0, cur.nrows(), r);
        cur = &(&q.adjoint() * &cur) * &q;
    }
    if nu == 0 {
        return Ok(CoreNilpotentSplit {
            t: Mat::identity(n),
            t_inv: Mat::identity(n),
            core_dim: n,
            nilpotency_index: 0,
            gap: f64::INFINITY,
        });
    }
    let p = m.pow(nu);
    let svd = p.svd()?;
    let power_anchor = anchor.powi(nu as i32);
    let rc = svd.sigma.iter().filter(|&&s| s > tol_rank * power_anchor).count();
    let gap = if rc == 0 || rc == n {
        f64::INFINITY
    } else {
        let kept = svd.sigma[rc - 1];
        let dropped = svd.sigma[rc].max(f64::EPSILON * power_anchor * n as f64);
        kept / dropped
    };
    if gap < 1e3 {
        return Err(Error::NumericalFailure(format!(
            "ambiguous core/nilpotent split: singular values of M^{nu} separate only by a factor {gap:.3e}"
        )));
    }
    let u_core = svd.u.block(0, 0, n, rc);
    let u_nil = svd.v.block(0, rc, n, n - rc);
    let t = Mat::hstack(&[&u_core, &u_nil]);
    let (t_inv, _cond) = t
        .solve_cond(&Mat::identity(n), 1e12)
        .map_err(|_| Error::NumericalFailure("core and nilpotent subspaces are nearly parallel".into()))?;
    let split = CoreNilpotentSplit { t, t_inv, core_dim: rc, nilpotency_index: nu, gap };
    let defect = split.invariance_defect(m);
    if defect > 1e-6 * (1.0 + m.norm_fro()) {
        return Err(Error::NumericalFailure(format!(
            "core/nilpotent subspaces are not invariant to tolerance (defect {defect:.3e})"
        )));
    }
    Ok(split)
}

/// The Drazin inverse: M^D = T diag(Mc^{-1}, 0) T^{-1} from the
/// core-nilpotent splitting; the defining axioms are re-verified before
/// returning.
pub fn drazin_inverse(m: &Mat, tol_rank: f64) -> Result<Mat> {
    let split = core_nilpotent_split(m, tol_rank)?;
    let n = m.nrows();
    let rc = split.core_dim;
    let mc = split.core_block(m);
    let mc_inv = if rc > 0 { mc.solve(&Mat::identity(rc))? } else { Mat::zeros(0, 0) };
    let zero_tr = Mat::zeros(rc, n - rc);
    let zero_bl = Mat::zeros(n - rc, rc);
    let zero_br = Mat::zeros(n - rc, n - rc);
    let inner = Mat::block_2x2(&mc_inv, &zero_tr, &zero_bl, &zero_br);
    let d = &(&split.t * &inner) * &split.t_inv;
    verify_drazin_axioms(m, &d, split.nilpotency_index)?;
    Ok(d)
}

fn verify_drazin_axioms(m: &Mat, d: &Mat, nu: usize) -> Result<()> {
    let scale = 1.0 + m.norm_fro().max(d.norm_fro());
    let commute = (&(m * d) - &(d * m)).norm_fro();
    let idem = (&(&(d * m) * d) - d).norm_fro();
    let power = (&(&m.pow(nu + 1) * d) - &m.pow(nu)).norm_fro();
    let tol = 1e-9 * scale * (1.0 + m.norm_fro()).powi(nu as i32);
    if commute > tol || idem > tol || power > tol {
        return Err(Error::NumericalFailure(format!(
            "Drazin axioms violated: commute {commute:.3e}, idempotent {idem:.3e}, power {power:.3e}"
        )));
    }
    Ok(())
}

/// Commuting coefficients (lambda E - A)^{-1} (E, A) with their Drazin
/// inverses; everything the solution formula needs.
#[derive(Clone, Debug)]
pub struct DrazinPair {
    pub e_hat: Mat,
    pub a_hat: Mat,
    pub ed: Mat,
    pub ad: Mat,
    pub nu: usize,
    pub lambda0: crate::linalg::C64,
    resolvent: Mat,
}

impl DrazinPair {
    pub fn new(e: &Mat, a: &Mat, tol_rank: f64) -> Result<DrazinPair> {
        let analysis = pencil::analyze(e, a, tol_rank)?;
        if !analysis.regular {
            return Err(Error::IrregularPencil);
        }
        let lambda0 = analysis.lambda0;
        let resolvent = &e.scale_c(lambda0) - a;
        let e_hat = resolvent.solve(e)?;
        let a_hat = resolvent.solve(a)?;
        let comm = (&(&e_hat * &a_hat) - &(&a_hat * &e_hat)).norm_fro();
        if comm > 1e-10 * (1.0 + e_hat.norm_fro() * a_hat.norm_fro()) {
            return Err(Error::NumericalFailure(format!(
                "transformed coefficients fail to commute (residual {comm:.3e})"
            )));
        }
        let ed = drazin_inverse(&e_hat, tol_rank)?;
        let ad = drazin_inverse(&a_hat, tol_rank)?;
        let nu = analysis.index.unwrap_or(0);
        Ok(DrazinPair { e_hat, a_hat, ed, ad, nu, lambda0, resolvent })
    }

    /// Transforms a forcing term into the commuting coordinates.
    pub fn transform_forcing(&self, f: &Mat) -> Result<Mat> {
        self.resolvent.solve(f)
    }
}

#[derive(Clone, Debug)]
pub struct DaeSolution {
    /// States x_0 ..= x_K.
    pub states: Vec<Mat>,
    /// Worst per-step equation residual, relative to the step scale.
    pub max_residual: f64,
}

/// Explicit solution of E x_{k+1} = A x_k + f_k over k = 0..K with
/// free parameter v: non-causal look-ahead terms are active when the
/// index is two or more.
pub fn solve_dae(e: &Mat, a: &Mat, f: &[Mat], v: &Mat, horizon: usize) -> Result<DaeSolution> {
    let pair = DrazinPair::new(e, a, 1e-10)?;
    solve_dae_with(&pair, e, a, f, v, horizon)
}

pub fn solve_dae_with(
    pair: &DrazinPair,
    e: &Mat,
    a: &Mat,
    f: &[Mat],
    v: &Mat,
    horizon: usize,
) -> Result<DaeSolution> {
    let n = e.nrows();
    let nu = pair.nu;
    let needed = horizon + nu;
    if f.len() < needed {
        return Err(Error::InsufficientInput { index: nu, needed, got: f.len() });
    }
    let f_hat: Vec<Mat> =
        f.iter().map(|fk| pair.transform_forcing(fk)).collect::<Result<_>>()?;

    let eda = &pair.ed * &pair.a_hat; // E^D A, propagator of the dynamic part
    let ede = &pair.ed * &pair.e_hat; // E^D E, projector onto the dynamic part
    let ade = &pair.ad * &pair.e_hat;
    let proj_nil = &Mat::identity(n) - &ede;

    // x_k = (E^D A)^k E^D E v
    //     + sum_{j<k} (E^D A)^{k-j-1} E^D f_j
    //     - (I - E^D E) sum_{i<nu} (A^D E)^i A^D f_{k+i}
    let mut states = Vec::with_capacity(horizon + 1);
    let mut homog = &ede * v;
    let mut particular: Vec<Mat> = Vec::with_capacity(horizon + 1);
    particular.push(Mat::zeros(n, 1));
    for k in 1..=horizon {
        let prev = &particular[k - 1];
        let driven = &(&eda * prev) + &(&pair.ed * &f_hat[k - 1]);
        particular.push(driven);
    }
    for k in 0..=horizon {
        let mut ahead = Mat::zeros(n, 1);
        let mut ade_pow = Mat::identity(n);
        for i in 0..nu {
            let term = &(&ade_pow * &pair.ad) * &f_hat[k + i];
            ahead = &ahead + &term;
            ade_pow = &ade_pow * &ade;
        }
        let x = &(&homog + &particular[k]) - &(&proj_nil * &ahead);
        states.push(x);
        homog = &eda * &homog;
    }

    let mut max_residual = 0.0f64;
    for k in 0..horizon {
        let lhs = e * &states[k + 1];
        let rhs = &(a * &states[k]) + &f[k];
        let scale = 1.0 + states[k].norm_fro() + f[k].norm_fro();
        max_residual = max_residual.max((&lhs - &rhs).norm_fro() / scale);
    }
    Ok(DaeSolution { states, max_residual })
}

#[derive(Clone, Debug)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// Minimal-norm parameter reproducing x_0 when consistent.
    pub v: Mat,
    pub residual: f64,
}

/// Decides whether (x_0, f_0..f_{nu-1}) admits a parameter v in the
/// solution formula, returning the least-squares v.
pub fn check_consistency(e: &Mat, a: &Mat, x0: &Mat, f_head: &[Mat]) -> Result<ConsistencyReport> {
    let pair = DrazinPair::new(e, a, 1e-10)?;
    let n = e.nrows();
    if f_head.len() < pair.nu {
        return Err(Error::InsufficientInput {
            index: pair.nu,
            needed: pair.nu,
            got: f_head.len(),
        });
    }
    let ede = &pair.ed * &pair.e_hat;
    let ade = &pair.ad * &pair.e_hat;
    let proj_nil = &Mat::identity(n) - &ede;
    let mut ahead = Mat::zeros(n, 1);
    let mut ade_pow = Mat::identity(n);
    for i in 0..pair.nu {
        let fh = pair.transform_forcing(&f_head[i])?;
        ahead = &ahead + &(&(&ade_pow * &pair.ad) * &fh);
        ade_pow = &ade_pow * &ade;
    }
    let rhs = x0 + &(&proj_nil * &ahead);
    let v = &ede.pinv(1e-12)? * &rhs;
    let residual = (&(&ede * &v) - &rhs).norm_fro();
    let consistent = residual <= 1e-8 * (1.0 + rhs.norm_fro());
    Ok(ConsistencyReport { consistent, v, residual })
}
