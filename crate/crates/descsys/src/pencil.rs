//! Matrix-pencil structure analysis: regularity, index, causality,
//! finite spectrum, the SVD-based semi-explicit form and the index-one
//! reduction to a standard state-space system.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::drazin;
use crate::error::{Error, Result};
use crate::linalg::{C64, Mat};
use crate::sysmodel::DescriptorSystem;

/// Structural facts about a pencil (E, A).
#[derive(Clone, Debug)]
pub struct PencilAnalysis {
    pub regular: bool,
    /// Nilpotency index of the infinite part; `None` when irregular.
    pub index: Option<usize>,
    pub finite_spectrum: Vec<C64>,
    /// Holds exactly when the index is at most one.
    pub completely_causal: bool,
    /// Resolvent sample maximizing the smallest singular value of
    /// lambda E - A; used for the commuting-coefficient transform.
    pub lambda0: C64,
    /// rank of E.
    pub rank_e: usize,
}

fn smin_ratio(m: &Mat) -> f64 {
    let sv = m.singular_values();
    match (sv.first(), sv.last()) {
        (Some(&smax), Some(&smin)) if smax > 0.0 => smin / smax,
        _ => 0.0,
    }
}

/// Samples n+1 points; det(lambda E - A) has degree <= n, so a regular
/// pencil is invertible at one of them. One resample round guards
/// against adversarial alignment.
fn regularity_samples(e: &Mat, a: &Mat, tol_rank: f64) -> (bool, C64) {
    let n = e.nrows();
    if n == 0 {
        return (true, C64::new(1.0, 0.0));
    }
    let real_pencil = e.is_real() && a.is_real();
    let scale =
        ((1.0 + a.norm_fro()) / (1.0 + e.norm_fro())).clamp(1e-3, 1e3);
    let mut rng = ChaCha8Rng::seed_from_u64(0x70656e63696c);
    let mut best: Option<(f64, C64)> = None;
    for round in 0..2 {
        let spread = if round == 0 { 2.0 } else { 2.0 * std::f64::consts::PI };
        let mut points = Vec::with_capacity(n + 1);
        if real_pencil {
            for _ in 0..=n {
                points.push(C64::new(rng.gen_range(-spread * scale..spread * scale), 0.0));
            }
        } else {
            let radius = scale * spread * rng.gen_range(0.5..1.0);
            let phase0: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            for k in 0..=n {
                let th = phase0 + std::f64::consts::TAU * (k as f64) / ((n + 1) as f64);
                points.push(C64::new(radius * th.cos(), radius * th.sin()));
            }
        }
        for lam in points {
            let m = &e.scale_c(lam) - a;
            let ratio = smin_ratio(&m);
            if best.map_or(true, |(b, _)| ratio > b) {
                best = Some((ratio, lam));
            }
        }
        if let Some((ratio, lam)) = best {
            if ratio > tol_rank {
                // keep sampling the rest of round 0 already done above;
                // a clearly invertible point settles regularity
                return (true, lam);
            }
        }
    }
    (false, best.map(|(_, l)| l).unwrap_or_else(|| C64::new(1.0, 0.0)))
}

/// A deterministic point away from the given finite spectrum.
pub fn resolvent_point(spectrum: &[C64]) -> C64 {
    let maxmod = spectrum.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let mut t = 1.0 + 2.0 * maxmod;
    loop {
        let z = C64::new(t, 0.0);
        let clear = spectrum.iter().all(|l| (l - z).norm() > 0.3 * (1.0 + maxmod));
        if clear {
            return z;
        }
        t *= 1.7;
    }
}

/// Regularity, index, finite spectrum and causality of (E, A).
/// Convention: invertible E (in particular E = I) has index 0.
pub fn analyze(e: &Mat, a: &Mat, tol_rank: f64) -> Result<PencilAnalysis> {
    if !e.is_square() || e.shape() != a.shape() {
        return Err(Error::DimensionMismatch("pencil matrices must be square of equal size".into()));
    }
    let n = e.nrows();
    let (regular, lambda0) = regularity_samples(e, a, tol_rank);
    if !regular {
        return Ok(PencilAnalysis {
            regular: false,
            index: None,
            finite_spectrum: Vec::new(),
            completely_causal: false,
            lambda0,
            rank_e: e.rank(tol_rank),
        });
    }
    let svd_e = e.svd()?;
    let r = svd_e.rank(tol_rank);
    let (index, finite_spectrum) = if r == n {
        // invertible E: no infinite part
        let std_a = e.solve(a)?;
        (0usize, std_a.eig_general()?.values)
    } else {
        let blocks = SemiExplicitForm::from_parts(&svd_e, e, a, None, None, None, tol_rank)?;
        if !blocks.index_exceeds_one {
            let rss = reduce_blocks(&blocks, tol_rank, f64::INFINITY)?;
            (1usize, rss.a.eig_general()?.values)
        } else {
            // index >= 2: rank recursion on the commuting transform
            let resolvent = &e.scale_c(lambda0) - a;
            let e_hat = resolvent.solve(e)?;
            let a_hat = resolvent.solve(a)?;
            let split = drazin::core_nilpotent_split(&e_hat, tol_rank)?;
            let spectrum = if split.core_dim == 0 {
                Vec::new()
            } else {
                let ec = split.core_block(&e_hat);
                let ac = split.core_block(&a_hat);
                // finite eigenvalues solve det(lambda E_c - A_c) = 0
                ec.solve(&ac)?.eig_general()?.values
            };
            (split.nilpotency_index, spectrum)
        }
    };
    let mut finite_spectrum = finite_spectrum;
    finite_spectrum.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
    Ok(PencilAnalysis {
        regular: true,
        index: Some(index),
        completely_causal: index <= 1,
        finite_spectrum,
        lambda0,
        rank_e: r,
    })
}

/// SVD coordinates splitting dynamic and algebraic parts:
/// (U E V, U A V) = ([Sigma_E 0; 0 0], [A11 A12; A21 A22]).
#[derive(Clone, Debug)]
pub struct SemiExplicitForm {
    /// Left transform (rows); U E V = diag(Sigma_E, 0).
    pub u: Mat,
    /// Right transform (columns).
    pub v: Mat,
    pub sigma_e: Vec<f64>,
    pub r: usize,
    pub a11: Mat,
    pub a12: Mat,
    pub a21: Mat,
    pub a22: Mat,
    pub b1: Mat,
    pub b2: Mat,
    pub c1: Mat,
    pub c2: Mat,
    pub d: Mat,
    /// Frobenius norm of the transformed A; anchors A22 rank decisions.
    pub a_scale: f64,
    /// Set when A22 is singular to tolerance, i.e. the index exceeds one.
    pub index_exceeds_one: bool,
}

impl SemiExplicitForm {
    fn from_parts(
        svd_e: &crate::linalg::Svd,
        e: &Mat,
        a: &Mat,
        b: Option<&Mat>,
        c: Option<&Mat>,
        d: Option<&Mat>,
        tol_rank: f64,
    ) -> Result<SemiExplicitForm> {
        let n = e.nrows();
        let r = svd_e.rank(tol_rank);
        let u = svd_e.u.adjoint();
        let v = svd_e.v.clone();
        let at = &(&u * a) * &v;
        let bt = b.map(|b| &u * b).unwrap_or_else(|| Mat::zeros(n, 0));
        let ct = c.map(|c| c * &v).unwrap_or_else(|| Mat::zeros(0, n));
        let m = bt.ncols().max(ct.nrows());
        let a22 = at.block(r, r, n - r, n - r);
        let a_scale = at.norm_fro().max(f64::MIN_POSITIVE);
        let a22_smin = a22.singular_values().last().copied().unwrap_or(0.0);
        let index_exceeds_one = n > r && a22_smin <= tol_rank * a_scale;
        Ok(SemiExplicitForm {
            u,
            v,
            sigma_e: svd_e.sigma[..r].to_vec(),
            r,
            a11: at.block(0, 0, r, r),
            a12: at.block(0, r, r, n - r),
            a21: at.block(r, 0, n - r, r),
            a22,
            b1: bt.block(0, 0, r, bt.ncols()),
            b2: bt.block(r, 0, n - r, bt.ncols()),
            c1: ct.block(0, 0, ct.nrows(), r),
            c2: ct.block(0, r, ct.nrows(), n - r),
            d: d.cloned().unwrap_or_else(|| Mat::zeros(m, m)),
            a_scale,
            index_exceeds_one,
        })
    }

    pub fn sigma_mat(&self) -> Mat {
        Mat::from_diag_real(&self.sigma_e)
    }

    fn sigma_pow(&self, p: f64) -> Mat {
        Mat::from_diag_real(&self.sigma_e.iter().map(|s| s.powf(p)).collect::<Vec<_>>())
    }
}

/// Brings a regular system into semi-explicit form.
pub fn semi_explicit(sys: &DescriptorSystem, tol_rank: f64) -> Result<SemiExplicitForm> {
    let (regular, _) = regularity_samples(&sys.e, &sys.a, tol_rank);
    if !regular {
        return Err(Error::IrregularPencil);
    }
    let svd_e = sys.e.svd()?;
    SemiExplicitForm::from_parts(
        &svd_e,
        &sys.e,
        &sys.a,
        Some(&sys.b),
        Some(&sys.c),
        Some(&sys.d),
        tol_rank,
    )
}

/// Standard state-space system extracted from an index-one pencil, plus
/// the data needed to rebuild the algebraic state component.
#[derive(Clone, Debug)]
pub struct ReducedStandardSystem {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    /// x2 = x2_from_x1 * x1 + x2_from_u * u  (the algebraic constraint).
    pub x2_from_x1: Mat,
    pub x2_from_u: Mat,
    /// Right transform of the semi-explicit coordinates; the full state
    /// is x = V [x1; x2] with x1 = Sigma_E^{-1/2} xhat.
    pub v: Mat,
    /// Left transform (U E V = diag(Sigma_E, 0)).
    pub u: Mat,
    pub sigma_inv_sqrt: Mat,
    pub sigma_sqrt: Mat,
    pub a22_condition: f64,
    /// Attached when A22 is invertible but ill-conditioned.
    pub conditioning_warning: Option<String>,
}

impl ReducedStandardSystem {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Reassembles the descriptor state from the reduced state and input.
    pub fn full_state(&self, xhat: &Mat, u: &Mat) -> Mat {
        let x1 = &self.sigma_inv_sqrt * xhat;
        let x2 = &(&self.x2_from_x1 * &x1) + &(&self.x2_from_u * u);
        &self.v * &Mat::vstack(&[&x1, &x2])
    }

    /// Splits a descriptor state into semi-explicit components (x1, x2).
    pub fn split_state(&self, x: &Mat) -> (Mat, Mat) {
        let z = &self.v.adjoint() * x;
        let r = self.sigma_inv_sqrt.nrows();
        (z.block(0, 0, r, 1), z.block(r, 0, z.nrows() - r, 1))
    }
}

fn reduce_blocks(
    sef: &SemiExplicitForm,
    tol_rank: f64,
    cond_max: f64,
) -> Result<ReducedStandardSystem> {
    let nr = sef.a22.nrows();
    let (a22_inv, a22_condition) = if nr == 0 {
        (Mat::zeros(0, 0), 1.0)
    } else {
        let sv = sef.a22.singular_values();
        if sv[nr - 1] <= tol_rank * sef.a_scale {
            let cond = if sv[nr - 1] > 0.0 { sv[0] / sv[nr - 1] } else { f64::INFINITY };
            return Err(Error::IndexTooHigh { cond });
        }
        sef.a22.solve_cond(&Mat::identity(nr), f64::INFINITY)?
    };
    let conditioning_warning = if a22_condition > cond_max {
        Some(format!(
            "A22 condition estimate {a22_condition:.3e} exceeds {cond_max:.1e}; reduced coefficients may carry large errors"
        ))
    } else {
        None
    };
    let s_isq = sef.sigma_pow(-0.5);
    let schur_a = &sef.a11 - &(&(&sef.a12 * &a22_inv) * &sef.a21);
    let schur_b = &sef.b1 - &(&(&sef.a12 * &a22_inv) * &sef.b2);
    let schur_c = &sef.c1 - &(&(&sef.c2 * &a22_inv) * &sef.a21);
    let schur_d = &sef.d - &(&(&sef.c2 * &a22_inv) * &sef.b2);
    Ok(ReducedStandardSystem {
        a: &(&s_isq * &schur_a) * &s_isq,
        b: &s_isq * &schur_b,
        c: &schur_c * &s_isq,
        d: schur_d,
        x2_from_x1: (&(&a22_inv * &sef.a21)).scale(-1.0),
        x2_from_u: (&(&a22_inv * &sef.b2)).scale(-1.0),
        v: sef.v.clone(),
        u: sef.u.clone(),
        sigma_inv_sqrt: s_isq,
        sigma_sqrt: sef.sigma_pow(0.5),
        a22_condition,
        conditioning_warning,
    })
}

/// Index-one reduction of a semi-explicit form to a standard system.
pub fn reduce_to_standard(
    sef: &SemiExplicitForm,
    tol_rank: f64,
    cond_max: f64,
) -> Result<ReducedStandardSystem> {
    reduce_blocks(sef, tol_rank, cond_max)
}

/// One-call reduction of a regular, index-at-most-one system.
pub fn reduce_system(
    sys: &DescriptorSystem,
    tol_rank: f64,
    cond_max: f64,
) -> Result<ReducedStandardSystem> {
    let sef = semi_explicit(sys, tol_rank)?;
    reduce_to_standard(&sef, tol_rank, cond_max)
}

/// Transformed coordinates (S E T, S A T) = ([I 0; 0 N], [A_f 0; 0 I])
/// with nilpotent N; exposes the structural data behind properness and
/// the DAE solution formula. Intended for desk-scale use.
#[derive(Clone, Debug)]
pub struct WeierstrassLike {
    pub s: Mat,
    pub t: Mat,
    pub a_f: Mat,
    pub n_block: Mat,
    pub r: usize,
    pub nu: usize,
}

pub fn weierstrass_like(e: &Mat, a: &Mat, tol_rank: f64) -> Result<WeierstrassLike> {
    let an = analyze(e, a, tol_rank)?;
    if !an.regular {
        return Err(Error::IrregularPencil);
    }
    let n = e.nrows();
    let resolvent = &e.scale_c(an.lambda0) - a;
    let e_hat = resolvent.solve(e)?;
    let a_hat = resolvent.solve(a)?;
    let split = drazin::core_nilpotent_split(&e_hat, tol_rank)?;
    let r = split.core_dim;
    let t = split.t.clone();
    let t_inv = split.t_inv.clone();
    let ec = split.core_block(&e_hat);
    let en = split.nilpotent_block(&e_hat);
    let ac = split.core_block(&a_hat);
    let an_blk = split.nilpotent_block(&a_hat);
    // premultiplier diag(Ec^{-1}, An^{-1}) T^{-1} (lambda0 E - A)^{-1}
    let ec_inv = if r > 0 { ec.solve(&Mat::identity(r))? } else { Mat::zeros(0, 0) };
    let an_inv =
        if n > r { an_blk.solve(&Mat::identity(n - r))? } else { Mat::zeros(0, 0) };
    let zero_tr = Mat::zeros(r, n - r);
    let zero_bl = Mat::zeros(n - r, r);
    let pre = Mat::block_2x2(&ec_inv, &zero_tr, &zero_bl, &an_inv);
    let resolvent_inv = resolvent.solve(&Mat::identity(n))?;
    let s = &(&pre * &t_inv) * &resolvent_inv;
    let a_f = if r > 0 { &ec_inv * &ac } else { Mat::zeros(0, 0) };
    let n_block = if n > r { &an_inv * &en } else { Mat::zeros(0, 0) };
    Ok(WeierstrassLike { s, t, a_f, n_block, r, nu: split.nilpotency_index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysmodel::TimeDomain;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn nilpotent_shift(k: usize) -> Mat {
        let mut rows = vec![vec![0.0; k]; k];
        for i in 0..k.saturating_sub(1) {
            rows[i][i + 1] = 1.0;
        }
        Mat::from_rows_real(&rows).unwrap()
    }

    #[test]
    fn index_two_pencil() {
        let e = Mat::from_rows_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let a = Mat::identity(2);
        let an = analyze(&e, &a, 1e-10).unwrap();
        assert!(an.regular);
        assert_eq!(an.index, Some(2));
        assert!(!an.completely_causal);
        assert!(an.finite_spectrum.is_empty());
    }

    #[test]
    fn identity_e_is_index_zero() {
        let a = Mat::from_rows_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let an = analyze(&Mat::identity(2), &a, 1e-10).unwrap();
        assert_eq!(an.index, Some(0));
        assert!(an.completely_causal);
    }

    #[test]
    fn index_one_spectrum() {
        // det(lambda E - A) = (lambda - 1)(-1)
        let e = Mat::from_diag_real(&[1.0, 0.0]);
        let a = Mat::identity(2);
        let an = analyze(&e, &a, 1e-10).unwrap();
        assert!(an.regular);
        assert_eq!(an.index, Some(1));
        assert_eq!(an.finite_spectrum.len(), 1);
        assert!((an.finite_spectrum[0] - C64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn irregular_pencil_detected() {
        let e = Mat::from_diag_real(&[1.0, 0.0]);
        let a = Mat::from_diag_real(&[1.0, 0.0]);
        let an = analyze(&e, &a, 1e-10).unwrap();
        assert!(!an.regular);
        assert_eq!(an.index, None);
    }

    #[test]
    fn semi_explicit_blocks() {
        // E invertible: r = n, no second block
        let sys = DescriptorSystem::standard(
            Mat::from_diag_real(&[0.3, 0.4]),
            Mat::zeros(2, 1),
            Mat::zeros(1, 2),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        let sef = semi_explicit(&sys, 1e-10).unwrap();
        assert_eq!(sef.r, 2);
        assert_eq!(sef.a22.shape(), (0, 0));

        // E = diag(2, 0), A = I
        let sys = DescriptorSystem::new(
            Mat::from_diag_real(&[2.0, 0.0]),
            Mat::identity(2),
            Mat::zeros(2, 1),
            Mat::zeros(1, 2),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        let sef = semi_explicit(&sys, 1e-10).unwrap();
        assert_eq!(sef.r, 1);
        assert!((sef.sigma_e[0] - 2.0).abs() < 1e-12);
        assert!((sef.a22.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(!sef.index_exceeds_one);

        // index two gets flagged
        let sys = DescriptorSystem::new(
            Mat::from_rows_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            Mat::identity(2),
            Mat::zeros(2, 1),
            Mat::zeros(1, 2),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        let sef = semi_explicit(&sys, 1e-10).unwrap();
        assert!(sef.index_exceeds_one);
    }

    #[test]
    fn reduction_identity_e_is_identity_map() {
        let a = Mat::from_rows_real(&[vec![0.1, 0.2], vec![0.0, -0.3]]).unwrap();
        let b = Mat::from_rows_real(&[vec![1.0], vec![2.0]]).unwrap();
        let c = Mat::from_rows_real(&[vec![1.0, 1.0]]).unwrap();
        let d = Mat::from_diag_real(&[0.5]);
        let sys = DescriptorSystem::standard(a.clone(), b.clone(), c.clone(), d.clone(), TimeDomain::Discrete).unwrap();
        let rss = reduce_system(&sys, 1e-10, 1e8).unwrap();
        assert!((&rss.a - &a).norm_max() < 1e-12);
        assert!((&rss.b - &b).norm_max() < 1e-12);
        assert!((&rss.c - &c).norm_max() < 1e-12);
        assert!((&rss.d - &d).norm_max() < 1e-12);
    }

    #[test]
    fn reduction_hand_schur_complement() {
        // E = diag(1,0), A = [[0,1],[1,1]], B = (0;1), C = (1 0), D = 0
        let sys = DescriptorSystem::new(
            Mat::from_diag_real(&[1.0, 0.0]),
            Mat::from_rows_real(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap(),
            Mat::from_rows_real(&[vec![0.0], vec![1.0]]).unwrap(),
            Mat::from_rows_real(&[vec![1.0, 0.0]]).unwrap(),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        let rss = reduce_system(&sys, 1e-10, 1e8).unwrap();
        assert!((rss.a.get(0, 0) - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((rss.b.get(0, 0) - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((rss.c.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(rss.d.get(0, 0).norm() < 1e-12);
    }

    #[test]
    fn reduction_preserves_transfer_at_sample() {
        let sys = DescriptorSystem::new(
            Mat::from_diag_real(&[1.0, 0.0]),
            Mat::from_rows_real(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap(),
            Mat::from_rows_real(&[vec![0.0], vec![1.0]]).unwrap(),
            Mat::from_rows_real(&[vec![1.0, 0.0]]).unwrap(),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        let rss = reduce_system(&sys, 1e-10, 1e8).unwrap();
        let z = C64::new(2.0, 0.0);
        let orig = {
            let m = &sys.e.scale_c(z) - &sys.a;
            let x = m.solve(&sys.b).unwrap();
            &(&sys.c * &x) + &sys.d
        };
        let red = {
            let m = &Mat::identity(1).scale_c(z) - &rss.a;
            let x = m.solve(&rss.b).unwrap();
            &(&rss.c * &x) + &rss.d
        };
        assert!((&orig - &red).norm_max() < 1e-10);
    }

    #[test]
    fn weierstrass_oracle_roundtrip() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..25 {
            let r = rng.gen_range(0..=3usize);
            let k = rng.gen_range(1..=3usize);
            let n = r + k;
            // synthetic Weierstrass data
            let mut af_rows = vec![vec![0.0; r]; r];
            for (i, row) in af_rows.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = if i == j { rng.gen_range(-0.9..0.9) } else { rng.gen_range(-0.2..0.2) };
                }
            }
            let a_f = Mat::from_rows_real(&af_rows).unwrap();
            let n_blk = nilpotent_shift(k);
            let nu_true = if k == 1 { 1 } else { k };
            let e_canon = Mat::block_2x2(
                &Mat::identity(r),
                &Mat::zeros(r, k),
                &Mat::zeros(k, r),
                &n_blk,
            );
            let a_canon = Mat::block_2x2(
                &a_f,
                &Mat::zeros(r, k),
                &Mat::zeros(k, r),
                &Mat::identity(k),
            );
            // moderate-condition transforms
            let mut s = Mat::identity(n);
            let mut t = Mat::identity(n);
            for _ in 0..2 {
                let mut pert = vec![vec![0.0; n]; n];
                for row in pert.iter_mut() {
                    for x in row.iter_mut() {
                        *x = rng.gen_range(-0.3..0.3);
                    }
                }
                s = &s * &(&Mat::identity(n) + &Mat::from_rows_real(&pert).unwrap());
                let mut pert2 = vec![vec![0.0; n]; n];
                for row in pert2.iter_mut() {
                    for x in row.iter_mut() {
                        *x = rng.gen_range(-0.3..0.3);
                    }
                }
                t = &t * &(&Mat::identity(n) + &Mat::from_rows_real(&pert2).unwrap());
            }
            let s_inv = s.pinv(1e-13).unwrap();
            let t_inv = t.pinv(1e-13).unwrap();
            let e = &(&s_inv * &e_canon) * &t_inv;
            let a = &(&s_inv * &a_canon) * &t_inv;
            let an = analyze(&e, &a, 1e-10).unwrap();
            assert!(an.regular);
            assert_eq!(an.index, Some(nu_true), "r={r} k={k}");
            // finite spectrum matches eig(A_f)
            let mut expect = a_f.eig_general().unwrap().values;
            expect.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
            assert_eq!(an.finite_spectrum.len(), expect.len());
            for (got, want) in an.finite_spectrum.iter().zip(&expect) {
                assert!((got - want).norm() < 1e-6, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn weierstrass_like_structure() {
        let e = Mat::from_rows_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let a = Mat::identity(2);
        let w = weierstrass_like(&e, &a, 1e-10).unwrap();
        assert_eq!(w.r, 0);
        assert_eq!(w.nu, 2);
        let set = &(&w.s * &e) * &w.t;
        let sat = &(&w.s * &a) * &w.t;
        // S E T = [[I 0],[0 N]] with N nilpotent, S A T = [[A_f 0],[0 I]]
        assert!((&sat - &Mat::identity(2)).norm_max() < 1e-9);
        assert!(set.pow(2).norm_max() < 1e-9);
    }
}
