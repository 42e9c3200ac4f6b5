//! Transfer-function evaluation T(z) = C (zE - A)^{-1} B + D,
//! properness, positive/bounded realness on a sampling grid, and the
//! resolvent/Moebius identities used as cross-validation oracles.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::cayley;
use crate::error::{Error, Result};
use crate::linalg::{C64, Mat};
use crate::pencil;
use crate::sysmodel::DescriptorSystem;

/// Evaluates T(z) with a residual certificate from two independent
/// solve paths (right solve vs adjoint left solve).
pub fn evaluate_certified(sys: &DescriptorSystem, z: C64) -> Result<(Mat, f64)> {
    let m = &sys.e.scale_c(z) - &sys.a;
    let sv = m.singular_values();
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if sys.state_dim() > 0 && (smax == 0.0 || smin <= 1e-12 * smax) {
        return Err(Error::PoleProximity { distance: smin });
    }
    let right = m.solve_cond(&sys.b, 1e13).map_err(|_| Error::PoleProximity { distance: smin })?.0;
    let path1 = &(&sys.c * &right) + &sys.d;
    let left = m
        .adjoint()
        .solve_cond(&sys.c.adjoint(), 1e13)
        .map_err(|_| Error::PoleProximity { distance: smin })?
        .0;
    let path2 = &(&left.adjoint() * &sys.b) + &sys.d;
    let residual = (&path1 - &path2).norm_fro();
    Ok((path1, residual))
}

pub fn evaluate(sys: &DescriptorSystem, z: C64) -> Result<Mat> {
    let (value, residual) = evaluate_certified(sys, z)?;
    let scale = 1.0 + value.norm_fro();
    if residual > 1e-9 * scale {
        return Err(Error::NumericalFailure(format!(
            "transfer evaluation paths disagree (residual {residual:.3e})"
        )));
    }
    Ok(value)
}

/// Transfer function with a per-instance evaluation cache.
pub struct TransferFunction {
    pub source: DescriptorSystem,
    cache: RefCell<HashMap<(u64, u64), Mat>>,
}

impl TransferFunction {
    pub fn new(source: DescriptorSystem) -> TransferFunction {
        TransferFunction { source, cache: RefCell::new(HashMap::new()) }
    }

    pub fn evaluate(&self, z: C64) -> Result<Mat> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.cache.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = evaluate(&self.source, z)?;
        self.cache.borrow_mut().insert(key, v.clone());
        Ok(v)
    }
}

/// Structural properness: C2 N^i B2 = 0 for i = 1..nu-1 in the
/// Weierstrass-split coordinates, cross-checked by growth sampling
/// along |z| = 10^k.
pub fn is_proper(sys: &DescriptorSystem, tol_rank: f64) -> Result<bool> {
    let analysis = pencil::analyze(&sys.e, &sys.a, tol_rank)?;
    if !analysis.regular {
        return Err(Error::IrregularPencil);
    }
    if analysis.index.unwrap_or(0) <= 1 {
        return Ok(true);
    }
    let w = pencil::weierstrass_like(&sys.e, &sys.a, tol_rank)?;
    let n = sys.state_dim();
    let b_t = &w.s * &sys.b;
    let c_t = &sys.c * &w.t;
    let b2 = b_t.block(w.r, 0, n - w.r, b_t.ncols());
    let c2 = c_t.block(0, w.r, c_t.nrows(), n - w.r);
    let scale = (1.0 + b2.norm_fro()) * (1.0 + c2.norm_fro());
    let mut structural_proper = true;
    let mut npow = w.n_block.clone();
    for _ in 1..w.nu {
        let term = &(&c2 * &npow) * &b2;
        if term.norm_max() > 1e-9 * scale * (1.0 + npow.norm_fro()) {
            structural_proper = false;
            break;
        }
        npow = &npow * &w.n_block;
    }
    // growth probe: a proper function stays bounded as |z| grows
    let norms: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .filter_map(|&r| evaluate(sys, C64::new(r, 0.3)).ok().map(|t| t.norm_fro()))
        .collect();
    if norms.len() == 3 {
        let growing = norms[2] > 5.0 * norms[1].max(1e-9) && norms[1] > 5.0 * norms[0].max(1e-9);
        if structural_proper && growing {
            return Err(Error::NumericalFailure(
                "properness test inconsistent: structural terms vanish but |T| grows".into(),
            ));
        }
    }
    Ok(structural_proper)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RealnessKind {
    Positive,
    Bounded,
}

/// Default sampling grid: radii {1.01, 1.1, 2, 10} times 32 angles.
pub fn default_grid() -> Vec<C64> {
    grid(&[1.01, 1.1, 2.0, 10.0], 32)
}

pub fn grid(radii: &[f64], angles: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(radii.len() * angles);
    for &r in radii {
        for k in 0..angles {
            let th = std::f64::consts::TAU * (k as f64) / (angles as f64);
            out.push(C64::new(r * th.cos(), r * th.sin()));
        }
    }
    out
}

/// Grid verdict for (d-PR) / (d-BR). Sampling evidence, not a proof;
/// the caveat is part of the report.
#[derive(Clone, Debug)]
pub struct RealnessReport {
    pub kind: RealnessKind,
    pub holds_on_grid: bool,
    pub worst_point: C64,
    /// Min over the grid of the smallest eigenvalue of the realness
    /// matrix (T + T^H or I - T^H T).
    pub margin: f64,
    /// An uncancelled spectrum point outside the closed unit disc, if
    /// one exists; realness fails structurally in that case.
    pub pole_violation: Option<C64>,
    pub caveat: &'static str,
}

fn realness_margin_at(sys: &DescriptorSystem, kind: RealnessKind, z: C64) -> Result<f64> {
    let t = evaluate(sys, z)?;
    let m = match kind {
        RealnessKind::Positive => (&t + &t.adjoint()).hermitian_part(),
        RealnessKind::Bounded => {
            (&Mat::identity(t.nrows()) - &(&t.adjoint() * &t)).hermitian_part()
        }
    };
    m.eigmin_hermitian()
}

/// Checks T(z) + T(z)^H >= 0 (positive) or I - T(z)^H T(z) >= 0
/// (bounded) over the grid, after verifying that no uncancelled pole
/// lies outside the closed unit disc.
pub fn check_realness(
    sys: &DescriptorSystem,
    kind: RealnessKind,
    points: &[C64],
    tol: &crate::Tolerances,
    jobs: usize,
) -> Result<RealnessReport> {
    let analysis = pencil::analyze(&sys.e, &sys.a, tol.tol_rank)?;
    if !analysis.regular {
        return Err(Error::IrregularPencil);
    }
    // bounded realness needs a bounded function; a polynomial part kills it
    if kind == RealnessKind::Bounded
        && analysis.index.unwrap_or(0) > 1
        && !is_proper(sys, tol.tol_rank)?
    {
        return Ok(RealnessReport {
            kind,
            holds_on_grid: false,
            worst_point: C64::new(f64::INFINITY, 0.0),
            margin: f64::NEG_INFINITY,
            pole_violation: None,
            caveat: "improper transfer function grows unboundedly, bounded realness fails",
        });
    }
    let mut pole_violation = None;
    for lam in &analysis.finite_spectrum {
        if lam.norm() > 1.0 + tol.tol_lmi {
            let shifted = &sys.e.scale_c(*lam) - &sys.a;
            let right_kernel = shifted.null_space(1e-7)?;
            let left_kernel = shifted.adjoint().null_space(1e-7)?;
            let c_side = (&sys.c * &right_kernel).norm_max();
            let b_side = (&left_kernel.adjoint() * &sys.b).norm_max();
            let scale = (1.0 + sys.c.norm_fro()) * (1.0 + sys.b.norm_fro());
            let cancelled = c_side <= 1e-8 * scale || b_side <= 1e-8 * scale;
            if !cancelled {
                pole_violation = Some(*lam);
                break;
            }
        }
    }

    // grid points that collide with the spectrum are skipped; the pole
    // precondition above already judged those locations
    let margin_or_skip = |z: C64| -> Result<Option<(C64, f64)>> {
        match realness_margin_at(sys, kind, z) {
            Ok(m) => Ok(Some((z, m))),
            Err(Error::PoleProximity { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let margins: Vec<(C64, f64)> = if jobs > 1 && points.len() > 8 {
        let chunk = points.len().div_ceil(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = points
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        part.iter().map(|&z| margin_or_skip(z)).collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(points.len());
            for h in handles {
                all.extend(h.join().expect("grid worker panicked")?.into_iter().flatten());
            }
            Ok::<_, Error>(all)
        })?
    } else {
        points
            .iter()
            .map(|&z| margin_or_skip(z))
            .collect::<Result<Vec<Option<_>>>>()?
            .into_iter()
            .flatten()
            .collect()
    };

    let (worst_point, margin) = margins
        .iter()
        .fold((C64::new(2.0, 0.0), f64::INFINITY), |(wz, wm), &(z, m)| {
            if m < wm { (z, m) } else { (wz, wm) }
        });
    Ok(RealnessReport {
        kind,
        holds_on_grid: pole_violation.is_none() && margin >= -tol.tol_lmi,
        worst_point,
        margin,
        pole_violation,
        caveat: "grid evidence only: the realness conditions quantify over all |z| > 1",
    })
}

/// Residual of the resolvent identity: the quadratic form of
/// [-A^H X A + E^H X E, -A^H X B; -B^H X A, -B^H X B] against
/// [(zE-A)^{-1}B; I] equals (1 - |z|^2) B^H (zE-A)^{-H} E^H X E (zE-A)^{-1} B.
pub fn verify_kyp_resolvent_identity(
    sys: &DescriptorSystem,
    x: &Mat,
    z: C64,
) -> Result<f64> {
    let (e, a, b) = (&sys.e, &sys.a, &sys.b);
    let shifted = &e.scale_c(z) - a;
    let r = shifted.solve(b)?;
    let exe = &(&e.adjoint() * x) * e;
    let w11 = &exe - &(&(&a.adjoint() * x) * a);
    let w12 = (&(&a.adjoint() * x) * b).scale(-1.0);
    let w21 = w12.adjoint();
    let w22 = (&(&b.adjoint() * x) * b).scale(-1.0);
    let w = Mat::block_2x2(&w11, &w12, &w21, &w22);
    let stack = Mat::vstack(&[&r, &Mat::identity(b.ncols())]);
    let lhs = &(&stack.adjoint() * &w) * &stack;
    let rhs = (&(&r.adjoint() * &exe) * &r).scale(1.0 - z.norm_sqr());
    Ok((&lhs - &rhs).norm_fro())
}

/// Residual of the Moebius relation between a continuous system and its
/// internal Cayley image: T_d(z) = T_c((alpha z - conj(alpha)) / (z + 1)).
pub fn verify_moebius_relation(csys: &DescriptorSystem, alpha: C64, z: C64) -> Result<f64> {
    let ic = cayley::internal_cayley(csys, alpha)?;
    let lhs = evaluate(&ic.discrete, z)?;
    let w = (alpha * z - alpha.conj()) / (z + C64::new(1.0, 0.0));
    let rhs = evaluate(csys, w)?;
    Ok((&lhs - &rhs).norm_fro())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysmodel::TimeDomain;
    use crate::Tolerances;

    #[test]
    fn constant_transfer_functions() {
        // (1, 1/2, 0, 1, 0): T == 0
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 1.0, 0.0);
        let t = evaluate(&sys, C64::new(2.0, 0.0)).unwrap();
        assert!(t.norm_max() < 1e-14);

        // (1, 1/2, 0, 1, 1): T == 1
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 1.0, 1.0);
        let t = evaluate(&sys, C64::new(-3.0, 0.5)).unwrap();
        assert!((t.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-14);

        // D-only system
        let sys = DescriptorSystem::standard(
            Mat::zeros(2, 2),
            Mat::zeros(2, 2),
            Mat::zeros(2, 2),
            Mat::from_diag_real(&[2.0, -1.0]),
            TimeDomain::Discrete,
        )
        .unwrap();
        let t = evaluate(&sys, C64::new(0.7, 0.1)).unwrap();
        assert!((&t - &Mat::from_diag_real(&[2.0, -1.0])).norm_max() < 1e-14);
    }

    #[test]
    fn pole_proximity_detected() {
        let sys = DescriptorSystem::scalar(1.0, 0.5, 1.0, 1.0, 0.0);
        assert!(matches!(
            evaluate(&sys, C64::new(0.5, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn cache_hits_same_value() {
        let sys = DescriptorSystem::scalar(1.0, 0.5, 1.0, 1.0, 0.0);
        let tf = TransferFunction::new(sys);
        let z = C64::new(2.0, 0.0);
        let a = tf.evaluate(z).unwrap();
        let b = tf.evaluate(z).unwrap();
        assert_eq!(a, b);
        // T(2) = 1/(2 - 1/2) = 2/3
        assert!((a.get(0, 0).re - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn properness_cases() {
        // index <= 1 is proper
        let sys = DescriptorSystem::scalar(1.0, 0.5, 1.0, 1.0, 0.0);
        assert!(is_proper(&sys, 1e-10).unwrap());

        // E = [[0,1],[0,0]], A = I, B = e2, C = e1^T: T(z) = -z, improper
        let e = Mat::from_rows_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let sys = DescriptorSystem::new(
            e.clone(),
            Mat::identity(2),
            Mat::from_rows_real(&[vec![0.0], vec![1.0]]).unwrap(),
            Mat::from_rows_real(&[vec![1.0, 0.0]]).unwrap(),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        assert!(!is_proper(&sys, 1e-10).unwrap());

        // B = e1 annihilates the nilpotent term: proper despite index 2
        let sys = DescriptorSystem::new(
            e,
            Mat::identity(2),
            Mat::from_rows_real(&[vec![1.0], vec![0.0]]).unwrap(),
            Mat::from_rows_real(&[vec![1.0, 0.0]]).unwrap(),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        assert!(is_proper(&sys, 1e-10).unwrap());
    }

    #[test]
    fn realness_grid_verdicts() {
        let tol = Tolerances::default();
        let grid = default_grid();

        // T == 0 is positive real
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 1.0, 0.0);
        let rep = check_realness(&sys, RealnessKind::Positive, &grid, &tol, 1).unwrap();
        assert!(rep.holds_on_grid);

        // T == 1 is bounded real
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 1.0, 1.0);
        let rep = check_realness(&sys, RealnessKind::Bounded, &grid, &tol, 1).unwrap();
        assert!(rep.holds_on_grid);
        assert!(rep.margin.abs() < 1e-9);

        // T == 2 fails bounded realness: 1 - 4 < 0
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 1.0, 2.0);
        let rep = check_realness(&sys, RealnessKind::Bounded, &grid, &tol, 1).unwrap();
        assert!(!rep.holds_on_grid);
        assert!((rep.margin + 3.0).abs() < 1e-9);
    }

    #[test]
    fn unstable_pole_fails_unless_cancelled() {
        let tol = Tolerances::default();
        let grid = default_grid();
        // pole at z = 2, observable and controllable
        let sys = DescriptorSystem::scalar(1.0, 2.0, 1.0, 1.0, 0.0);
        let rep = check_realness(&sys, RealnessKind::Bounded, &grid, &tol, 1).unwrap();
        assert!(!rep.holds_on_grid);
        assert!(rep.pole_violation.is_some());

        // same pole with C = 0: cancelled, T == 0 is fine
        let sys = DescriptorSystem::scalar(1.0, 2.0, 1.0, 0.0, 0.0);
        let rep = check_realness(&sys, RealnessKind::Bounded, &grid, &tol, 1).unwrap();
        assert!(rep.holds_on_grid);
        assert!(rep.pole_violation.is_none());
    }

    #[test]
    fn resolvent_identity_unit_circle_and_random() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(5);
        for trial in 0..30 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=3);
            let complex = trial % 2 == 0;
            let rand_mat = |rng: &mut StdRng, r: usize, c: usize| -> Mat {
                if complex {
                    Mat::from_rows(
                        &(0..r)
                            .map(|_| {
                                (0..c)
                                    .map(|_| {
                                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                                    })
                                    .collect()
                            })
                            .collect::<Vec<_>>(),
                    )
                    .unwrap()
                } else {
                    Mat::from_rows_real(
                        &(0..r)
                            .map(|_| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect())
                            .collect::<Vec<_>>(),
                    )
                    .unwrap()
                }
            };
            let e = rand_mat(&mut rng, n, n);
            let a = rand_mat(&mut rng, n, n);
            let b = rand_mat(&mut rng, n, m);
            let x = rand_mat(&mut rng, n, n).hermitian_part();
            let sys = DescriptorSystem::new(
                e,
                a,
                b,
                Mat::zeros(m, n),
                Mat::zeros(m, m),
                TimeDomain::Discrete,
            )
            .unwrap();
            // z on the unit circle: right side vanishes
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let z_unit = C64::new(th.cos(), th.sin());
            if let Ok(resid) = verify_kyp_resolvent_identity(&sys, &x, z_unit) {
                assert!(resid < 1e-9 * (1.0 + x.norm_fro()), "unit-circle residual {resid}");
            }
            let resid = verify_kyp_resolvent_identity(&sys, &x, C64::new(2.0, 0.0)).unwrap();
            assert!(resid < 1e-9 * (1.0 + x.norm_fro()), "z=2 residual {resid}");
            // X = 0: both sides vanish
            let resid0 = verify_kyp_resolvent_identity(&sys, &Mat::zeros(n, n), C64::new(2.0, 0.0))
                .unwrap();
            assert!(resid0 < 1e-14);
        }
    }
}
