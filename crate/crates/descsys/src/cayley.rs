//! External Cayley transform between impedance and scattering forms
//! (including the kernel-restricted case) and the internal Cayley
//! (Tustin / trapezoidal) discretization of continuous-time systems.

use crate::error::{Error, Result};
use crate::linalg::{C64, Mat};
use crate::pencil;
use crate::sysmodel::{DescriptorSystem, TimeDomain};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CayleyDirection {
    ImpedanceToScattering,
    ScatteringToImpedance,
}

#[derive(Clone, Debug)]
pub struct ExternalCayleyResult {
    pub transformed: DescriptorSystem,
    pub direction: CayleyDirection,
    pub restricted: bool,
    /// Basis of ker(I + D) when the restricted path was taken.
    pub kernel_basis: Option<Mat>,
    /// Condition estimate of I + D.
    pub feedthrough_condition: f64,
}

/// The input/output mixing (y, u) = ((e - f)/sqrt 2, (e + f)/sqrt 2)
/// applied at the block level. The same formula serves both directions
/// because the mixing matrix is self-inverse.
pub fn external_cayley(
    sys: &DescriptorSystem,
    direction: CayleyDirection,
) -> Result<ExternalCayleyResult> {
    let m = sys.input_dim();
    let id = Mat::identity(m);
    let ipd = &id + &sys.d;
    let sv = ipd.singular_values();
    let smin = sv.last().copied().unwrap_or(0.0);
    let smax = sv.first().copied().unwrap_or(0.0);
    if m > 0 && (smax == 0.0 || smin <= 1e-12 * smax.max(1.0)) {
        return Err(Error::SingularFeedthrough { sigma_min: smin });
    }
    let cond = if m == 0 { 1.0 } else { smax / smin };
    let ipd_inv = ipd.solve(&id)?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let a = &sys.a - &(&(&sys.b * &ipd_inv) * &sys.c);
    let b = (&sys.b * &ipd_inv).scale(sqrt2);
    let c = (&(&ipd_inv * &sys.c)).scale(-sqrt2);
    let d = (&ipd_inv * &(&sys.d - &id)).scale(-1.0);
    let transformed =
        DescriptorSystem::new(sys.e.clone(), a, b, c, d, sys.time_domain)?;
    Ok(ExternalCayleyResult {
        transformed,
        direction,
        restricted: false,
        kernel_basis: None,
        feedthrough_condition: cond,
    })
}

/// Restriction of a scattering passive system with singular I + D to
/// the input subspace ker(I + D)^perp, after verifying the kernel
/// inclusion ker(I + D) in ker(X B) and ker(C^H) that a strict KYP
/// witness X guarantees.
pub fn restrict_scattering(
    sys: &DescriptorSystem,
    x_witness: &Mat,
    tol_rank: f64,
) -> Result<ExternalCayleyResult> {
    let m = sys.input_dim();
    let ipd = &Mat::identity(m) + &sys.d;
    let kernel = ipd.null_space(tol_rank.max(1e-9))?;
    if kernel.ncols() == 0 {
        // nothing to restrict
        return Ok(ExternalCayleyResult {
            transformed: sys.clone(),
            direction: CayleyDirection::ScatteringToImpedance,
            restricted: false,
            kernel_basis: None,
            feedthrough_condition: 1.0,
        });
    }
    let scale = (1.0 + sys.b.norm_fro()) * (1.0 + x_witness.norm_fro()) + sys.c.norm_fro();
    let xb_on_kernel = (&(x_witness * &sys.b)) * &kernel;
    let ch_on_kernel = &sys.c.adjoint() * &kernel;
    if xb_on_kernel.norm_max() > 1e-7 * scale || ch_on_kernel.norm_max() > 1e-7 * scale {
        return Err(Error::InvalidWeight(format!(
            "kernel inclusion fails: |X B k| = {:.3e}, |C^H k| = {:.3e}; the supplied X is not a valid scattering KYP witness",
            xb_on_kernel.norm_max(),
            ch_on_kernel.norm_max()
        )));
    }
    // orthonormal basis of the complement carries the surviving channels
    let z = kernel_complement(&kernel, m)?;
    let b = &sys.b * &z;
    let c = &z.adjoint() * &sys.c;
    let d = &(&z.adjoint() * &sys.d) * &z;
    let transformed = DescriptorSystem::new(sys.e.clone(), sys.a.clone(), b, c, d, sys.time_domain)?;
    Ok(ExternalCayleyResult {
        transformed,
        direction: CayleyDirection::ScatteringToImpedance,
        restricted: true,
        kernel_basis: Some(kernel),
        feedthrough_condition: 1.0,
    })
}

fn kernel_complement(kernel: &Mat, m: usize) -> Result<Mat> {
    // columns of I - K K^H spanning the orthogonal complement
    let proj = &Mat::identity(m) - &(kernel * &kernel.adjoint());
    proj.range_space(1e-10)
}

#[derive(Clone, Debug)]
pub struct InternalCayleyResult {
    pub discrete: DescriptorSystem,
    pub alpha: C64,
    /// T(alpha) of the continuous system; the feedthrough of the image.
    pub source_transfer_at_alpha: Mat,
    /// Set when a descriptor E forced a reduction to the standard form
    /// before discretizing.
    pub reduced_first: bool,
}

/// Trapezoidal-rule discretization written as the internal Cayley
/// transform with parameter alpha (= 2/h for step size h):
/// A_d = (alpha I - A)^{-1} (conj(alpha) I + A), etc.
pub fn internal_cayley(csys: &DescriptorSystem, alpha: C64) -> Result<InternalCayleyResult> {
    if alpha.re <= 0.0 {
        return Err(Error::InvalidMatrix(
            "discretization parameter alpha must have positive real part".into(),
        ));
    }
    let n = csys.state_dim();
    let identity_e = (&csys.e - &Mat::identity(n)).norm_max() <= 1e-12;
    let (a, b, c, d, reduced_first) = if identity_e {
        (csys.a.clone(), csys.b.clone(), csys.c.clone(), csys.d.clone(), false)
    } else {
        let tol = crate::Tolerances::default();
        let rss = pencil::reduce_system(csys, tol.tol_rank, tol.cond_max)?;
        (rss.a, rss.b, rss.c, rss.d, true)
    };
    let nr = a.nrows();
    let shifted = &Mat::identity(nr).scale_c(alpha) - &a;
    let sv = shifted.singular_values();
    let smin = sv.last().copied().unwrap_or(1.0);
    let smax = sv.first().copied().unwrap_or(1.0);
    if nr > 0 && smin <= 1e-12 * smax {
        return Err(Error::ResolventViolation);
    }
    let inv = shifted.solve(&Mat::identity(nr))?;
    let gain = (2.0 * alpha.re).sqrt();
    let a_d = &inv * &(&Mat::identity(nr).scale_c(alpha.conj()) + &a);
    let b_d = (&inv * &b).scale(gain);
    let c_d = (&c * &inv).scale(gain);
    let t_alpha = &(&c * &(&inv * &b)) + &d;
    let discrete = DescriptorSystem::new(
        Mat::identity(nr),
        a_d,
        b_d,
        c_d,
        t_alpha.clone(),
        TimeDomain::Discrete,
    )?;
    Ok(InternalCayleyResult {
        discrete,
        alpha,
        source_transfer_at_alpha: t_alpha,
        reduced_first,
    })
}

/// Residual of the congruence identity behind passivity transport:
/// T^H [-A^H X - X A, -X B; -B^H X, 0] T equals
/// [-A_d^H X A_d + X, -A_d^H X B_d; -B_d^H X A_d, -B_d^H X B_d]
/// with T = [sqrt(2 Re alpha) (alpha I - A)^{-1}, (alpha I - A)^{-1} B; 0, I].
pub fn verify_congruence_identity(csys: &DescriptorSystem, x: &Mat, alpha: C64) -> Result<f64> {
    let ic = internal_cayley(csys, alpha)?;
    let a = if ic.reduced_first {
        return Err(Error::Unsupported { index: 2 });
    } else {
        &csys.a
    };
    let n = a.nrows();
    let m = csys.input_dim();
    let shifted = &Mat::identity(n).scale_c(alpha) - a;
    let inv = shifted.solve(&Mat::identity(n))?;
    let gain = (2.0 * alpha.re).sqrt();
    let t = Mat::block_2x2(
        &inv.scale(gain),
        &(&inv * &csys.b),
        &Mat::zeros(m, n),
        &Mat::identity(m),
    );
    let xa = x * a;
    let lhs_core = Mat::block_2x2(
        &(&(&xa.adjoint() + &xa)).scale(-1.0),
        &(&(x * &csys.b)).scale(-1.0),
        &(&(&csys.b.adjoint() * x)).scale(-1.0),
        &Mat::zeros(m, m),
    );
    let lhs = &(&t.adjoint() * &lhs_core) * &t;
    let (ad, bd) = (&ic.discrete.a, &ic.discrete.b);
    let xad = x * ad;
    let xbd = x * bd;
    let rhs = Mat::block_2x2(
        &(&(x - &(&ad.adjoint() * &xad))),
        &(&(&ad.adjoint() * &xbd)).scale(-1.0),
        &(&(&bd.adjoint() * &xad)).scale(-1.0),
        &(&(&bd.adjoint() * &xbd)).scale(-1.0),
    );
    Ok((&lhs - &rhs).norm_fro())
}

/// Reference integrator: trapezoidal rule for x' = A x + B u(t) at a
/// fixed step; serves as the convergence baseline for the internal
/// Cayley discretization.
pub fn trapezoidal_reference(
    a: &Mat,
    b: &Mat,
    x0: &Mat,
    u_of_t: &dyn Fn(f64) -> Mat,
    h: f64,
    steps: usize,
) -> Result<Vec<Mat>> {
    let n = a.nrows();
    let lhs = &Mat::identity(n) - &a.scale(h / 2.0);
    let rhs_mat = &Mat::identity(n) + &a.scale(h / 2.0);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    states.push(x.clone());
    for k in 0..steps {
        let t0 = h * k as f64;
        let t1 = h * (k + 1) as f64;
        let forcing = (&(b * &u_of_t(t0)) + &(b * &u_of_t(t1))).scale(h / 2.0);
        let rhs = &(&rhs_mat * &x) + &forcing;
        x = lhs.solve(&rhs)?;
        states.push(x.clone());
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn external_cayley_scalar_blocks() {
        // D = 0, A = 1/2, B = C = 0: A_S = 1/2, B_S = 0, C_S = 0, D_S = 1
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 0.0, 0.0);
        let res = external_cayley(&sys, CayleyDirection::ImpedanceToScattering).unwrap();
        let t = &res.transformed;
        assert!((t.a.get(0, 0).re - 0.5).abs() < 1e-14);
        assert!(t.b.norm_max() < 1e-14);
        assert!(t.c.norm_max() < 1e-14);
        assert!((t.d.get(0, 0).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn external_cayley_is_self_inverse() {
        let sys = DescriptorSystem::new(
            Mat::from_diag_real(&[1.0, 0.0]),
            Mat::from_rows_real(&[vec![0.2, 0.4], vec![-0.1, 1.0]]).unwrap(),
            Mat::from_rows_real(&[vec![0.5], vec![0.3]]).unwrap(),
            Mat::from_rows_real(&[vec![0.1, -0.2]]).unwrap(),
            Mat::from_diag_real(&[0.3]),
            TimeDomain::Discrete,
        )
        .unwrap();
        let once = external_cayley(&sys, CayleyDirection::ImpedanceToScattering).unwrap();
        let twice =
            external_cayley(&once.transformed, CayleyDirection::ScatteringToImpedance).unwrap();
        let t = &twice.transformed;
        assert!((&t.a - &sys.a).norm_max() < 1e-9);
        assert!((&t.b - &sys.b).norm_max() < 1e-9);
        assert!((&t.c - &sys.c).norm_max() < 1e-9);
        assert!((&t.d - &sys.d).norm_max() < 1e-9);
        assert!((&t.e - &sys.e).norm_max() < 1e-12);
    }

    #[test]
    fn singular_feedthrough_rejected() {
        // D = -1 makes I + D singular
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.3, 0.2, -1.0);
        let err = external_cayley(&sys, CayleyDirection::ScatteringToImpedance);
        assert!(matches!(err, Err(Error::SingularFeedthrough { .. })));
    }

    #[test]
    fn restriction_drops_kernel_channel() {
        // D = diag(-1, 0), first input column of B zero, C row structure
        // aligned so the kernel inclusion holds with X = I
        let a = Mat::from_diag_real(&[0.5]);
        let b = Mat::from_rows_real(&[vec![0.0, 0.4]]).unwrap();
        let c = Mat::from_rows_real(&[vec![0.0], vec![0.4]]).unwrap();
        let d = Mat::from_diag_real(&[-1.0, 0.0]);
        let sys = DescriptorSystem::standard(a, b, c, d, TimeDomain::Discrete).unwrap();
        let x = Mat::identity(1);
        let res = restrict_scattering(&sys, &x, 1e-10).unwrap();
        assert!(res.restricted);
        assert_eq!(res.transformed.input_dim(), 1);
        assert_eq!(res.kernel_basis.as_ref().unwrap().ncols(), 1);
        // after restriction the external Cayley applies
        let imp =
            external_cayley(&res.transformed, CayleyDirection::ScatteringToImpedance).unwrap();
        assert_eq!(imp.transformed.input_dim(), 1);
    }

    #[test]
    fn restriction_identity_when_kernel_trivial() {
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.3, 0.2, 0.0);
        let res = restrict_scattering(&sys, &Mat::identity(1), 1e-10).unwrap();
        assert!(!res.restricted);
        assert_eq!(res.transformed.input_dim(), 1);
    }

    #[test]
    fn internal_cayley_scalar_arithmetic() {
        // A = -1, alpha = 2: A_d = (2 + (-1))/(2 - (-1)) = 1/3
        let sys = DescriptorSystem {
            e: Mat::identity(1),
            a: Mat::from_diag_real(&[-1.0]),
            b: Mat::zeros(1, 1),
            c: Mat::zeros(1, 1),
            d: Mat::zeros(1, 1),
            time_domain: TimeDomain::Continuous,
        };
        let res = internal_cayley(&sys, C64::new(2.0, 0.0)).unwrap();
        assert!((res.discrete.a.get(0, 0).re - 1.0 / 3.0).abs() < 1e-14);
        assert!(res.discrete.d.norm_max() < 1e-14);
        assert!(!res.reduced_first);
    }

    #[test]
    fn internal_cayley_rejects_alpha_in_spectrum() {
        let sys = DescriptorSystem {
            e: Mat::identity(1),
            a: Mat::from_diag_real(&[2.0]),
            b: Mat::zeros(1, 1),
            c: Mat::zeros(1, 1),
            d: Mat::zeros(1, 1),
            time_domain: TimeDomain::Continuous,
        };
        assert!(matches!(
            internal_cayley(&sys, C64::new(2.0, 0.0)),
            Err(Error::ResolventViolation)
        ));
    }

    #[test]
    fn congruence_identity_residuals() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(17);
        for trial in 0..30 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=3);
            let mut a_rows = vec![vec![0.0; n]; n];
            for (i, row) in a_rows.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = rng.gen_range(-1.0..1.0) - if i == j { 1.5 } else { 0.0 };
                }
            }
            let a = Mat::from_rows_real(&a_rows).unwrap();
            let b = Mat::from_rows_real(
                &(0..n).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect::<Vec<_>>(),
            )
            .unwrap();
            let sys = DescriptorSystem::standard(
                a,
                b,
                Mat::zeros(m, n),
                Mat::zeros(m, m),
                TimeDomain::Continuous,
            )
            .unwrap();
            let g = Mat::from_rows_real(
                &(0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect::<Vec<_>>(),
            )
            .unwrap();
            let x = (&(&g * &g.adjoint())).scale(0.5);
            let alpha =
                if trial % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(1.0, 1.0) };
            let resid = verify_congruence_identity(&sys, &x, alpha).unwrap();
            assert!(resid < 1e-9 * (1.0 + x.norm_fro()), "residual {resid}");
            // X = 0 gives zero on both sides
            let resid0 = verify_congruence_identity(&sys, &Mat::zeros(n, n), alpha).unwrap();
            assert!(resid0 < 1e-14);
        }
    }
}
