//! Shared generators for the integration suites: random matrices,
//! index-one descriptor systems, and passive system families.

#![allow(dead_code)]

use descsys::linalg::{C64, Mat};
use descsys::pencil;
use descsys::sysmodel::{DescriptorSystem, TimeDomain};
use rand::Rng;
use rand::rngs::StdRng;

pub fn rand_mat(rng: &mut StdRng, r: usize, c: usize, complex: bool) -> Mat {
    if complex {
        Mat::from_rows(
            &(0..r)
                .map(|_| {
                    (0..c)
                        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect()
                })
                .collect::<Vec<_>>(),
        )
        .unwrap()
    } else {
        Mat::from_rows_real(
            &(0..r).map(|_| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect::<Vec<_>>(),
        )
        .unwrap()
    }
}

pub fn rand_hermitian(rng: &mut StdRng, n: usize, complex: bool) -> Mat {
    rand_mat(rng, n, n, complex).hermitian_part()
}

pub fn rand_psd(rng: &mut StdRng, n: usize, complex: bool) -> Mat {
    let g = rand_mat(rng, n, n, complex);
    &g * &g.adjoint()
}

pub fn rand_pd(rng: &mut StdRng, n: usize, complex: bool) -> Mat {
    &rand_psd(rng, n, complex) + &Mat::identity(n).scale(0.4)
}

/// Standard contraction: the joint block [A B; C D] has spectral norm
/// at most `norm`, so X = I solves the scattering KYP when norm <= 1.
pub fn rand_contraction(rng: &mut StdRng, n: usize, m: usize, complex: bool, norm: f64) -> DescriptorSystem {
    let block = rand_mat(rng, n + m, n + m, complex);
    let scaled = block.scale(norm / block.spectral_norm().max(1e-9));
    DescriptorSystem::standard(
        scaled.block(0, 0, n, n),
        scaled.block(0, n, n, m),
        scaled.block(n, 0, m, n),
        scaled.block(n, n, m, m),
        TimeDomain::Discrete,
    )
    .unwrap()
}

/// Random regular index-one descriptor system with well-conditioned
/// algebraic part; resamples until the structure checks out.
pub fn rand_index1_descriptor(
    rng: &mut StdRng,
    n: usize,
    m: usize,
    rank_e: usize,
    complex: bool,
) -> DescriptorSystem {
    loop {
        let p = orthonormal(rng, n, complex);
        let q = orthonormal(rng, n, complex);
        let mut sv = vec![0.0; n];
        for s in sv.iter_mut().take(rank_e) {
            *s = rng.gen_range(0.4..2.0);
        }
        let e = &(&p * &Mat::from_diag_real(&sv)) * &q.adjoint();
        let a = rand_mat(rng, n, n, complex);
        let b = rand_mat(rng, n, m, complex);
        let c = rand_mat(rng, m, n, complex);
        let d = rand_mat(rng, m, m, complex);
        let sys = DescriptorSystem::discrete(e, a, b, c, d).unwrap();
        if let Ok(analysis) = pencil::analyze(&sys.e, &sys.a, 1e-10) {
            if analysis.regular && analysis.index == Some(usize::from(rank_e < n)) {
                if let Ok(rss) = pencil::reduce_system(&sys, 1e-10, 1e6) {
                    if rss.a22_condition < 1e3 {
                        return sys;
                    }
                }
            }
        }
    }
}

/// Orthonormal matrix from the canonical SVD of a random matrix.
pub fn orthonormal(rng: &mut StdRng, n: usize, complex: bool) -> Mat {
    rand_mat(rng, n, n, complex).svd().unwrap().u
}

/// Synthetic regular pencil with prescribed index, via composed
/// canonical blocks.
pub fn rand_pencil_with_index(
    rng: &mut StdRng,
    dynamic_dim: usize,
    nilpotent_dim: usize,
) -> (Mat, Mat, usize) {
    let r = dynamic_dim;
    let k = nilpotent_dim;
    let n = r + k;
    let mut af = vec![vec![0.0; r]; r];
    for (i, row) in af.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = if i == j { rng.gen_range(-0.9..0.9) } else { rng.gen_range(-0.2..0.2) };
        }
    }
    let mut nil = vec![vec![0.0; k]; k];
    for i in 0..k.saturating_sub(1) {
        nil[i][i + 1] = 1.0;
    }
    let e_canon = Mat::block_2x2(
        &Mat::identity(r),
        &Mat::zeros(r, k),
        &Mat::zeros(k, r),
        &Mat::from_rows_real(&nil).unwrap(),
    );
    let a_canon = Mat::block_2x2(
        &Mat::from_rows_real(&af).unwrap(),
        &Mat::zeros(r, k),
        &Mat::zeros(k, r),
        &Mat::identity(k),
    );
    let s = &Mat::identity(n) + &rand_mat(rng, n, n, false).scale(0.25);
    let t = &Mat::identity(n) + &rand_mat(rng, n, n, false).scale(0.25);
    let s_inv = s.pinv(1e-13).unwrap();
    let t_inv = t.pinv(1e-13).unwrap();
    let e = &(&s_inv * &e_canon) * &t_inv;
    let a = &(&s_inv * &a_canon) * &t_inv;
    let nu = if k <= 1 { k } else { k };
    (e, a, nu)
}

/// Continuous-time system with (iKYP) solution X = I, built from the
/// dissipative structure A = J - R, B = G - P, C = (G + P)^H, D = S + N.
pub fn rand_continuous_impedance_passive(
    rng: &mut StdRng,
    n: usize,
    m: usize,
    complex: bool,
) -> DescriptorSystem {
    let f = rand_mat(rng, n + m, n + m, complex).scale(0.6);
    let w = &f.adjoint() * &f; // [[R, P],[P^H, S]] >= 0
    let r = w.block(0, 0, n, n);
    let p = w.block(0, n, n, m);
    let s = w.block(n, n, m, m);
    let j = {
        let g = rand_mat(rng, n, n, complex);
        (&g - &g.adjoint()).scale(0.5)
    };
    let nn = {
        let g = rand_mat(rng, m, m, complex);
        (&g - &g.adjoint()).scale(0.5)
    };
    let g = rand_mat(rng, n, m, complex);
    let a = &j - &r;
    let b = &g - &p;
    let c = (&g + &p).adjoint();
    let d = &s + &nn;
    DescriptorSystem::standard(a, b, c, d, TimeDomain::Continuous).unwrap()
}

/// Continuous-time system with (sKYP) solution X = I: B = -C^H D and
/// A + A^H <= -C^H C with ||D|| < 1.
pub fn rand_continuous_scattering_passive(
    rng: &mut StdRng,
    n: usize,
    m: usize,
    complex: bool,
) -> DescriptorSystem {
    let c = rand_mat(rng, m, n, complex).scale(0.7);
    let d = {
        let raw = rand_mat(rng, m, m, complex);
        raw.scale(0.6 / raw.spectral_norm().max(1e-9))
    };
    let b = (&c.adjoint() * &d).scale(-1.0);
    let skew = {
        let g = rand_mat(rng, n, n, complex);
        (&g - &g.adjoint()).scale(0.5)
    };
    let chc = &c.adjoint() * &c;
    let a = &(&skew - &chc.scale(0.5)) - &Mat::identity(n).scale(rng.gen_range(0.1..0.6));
    DescriptorSystem::standard(a, b, c, d, TimeDomain::Continuous).unwrap()
}

pub fn rand_inputs(rng: &mut StdRng, m: usize, len: usize, complex: bool) -> Vec<Mat> {
    (0..len).map(|_| rand_mat(rng, m, 1, complex)).collect()
}

/// Consistent initial state for an index-one system under u_0.
pub fn consistent_x0(
    rss: &pencil::ReducedStandardSystem,
    rng: &mut StdRng,
    u0: &Mat,
    complex: bool,
) -> Mat {
    let xhat = rand_mat(rng, rss.state_dim(), 1, complex);
    rss.full_state(&xhat, u0)
}

/// Classical Kalman rank test, used as an independent oracle for C1.
/// A is normalized first (scaling does not change the reachable span)
/// so the power conditioning stays bounded.
pub fn kalman_controllable(a: &Mat, b: &Mat, tol: f64) -> bool {
    kalman_verdict(a, b, tol).unwrap_or(true)
}

/// None when the decision sits in a tolerance gray band.
pub fn kalman_verdict(a: &Mat, b: &Mat, tol: f64) -> Option<bool> {
    let n = a.nrows();
    if n == 0 {
        return Some(true);
    }
    let a_scaled = a.scale(1.0 / a.spectral_norm().max(1.0));
    let mut blocks = Vec::new();
    let mut cur = b.clone();
    for _ in 0..n {
        blocks.push(cur.clone());
        cur = &a_scaled * &cur;
    }
    let refs: Vec<&Mat> = blocks.iter().collect();
    let sv = Mat::hstack(&refs).singular_values();
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Some(false);
    }
    let decisive = sv.get(n - 1).copied().unwrap_or(0.0) / smax;
    if decisive > 1e-7 {
        Some(true)
    } else if decisive < 1e-12 {
        Some(false)
    } else {
        None
    }
}
