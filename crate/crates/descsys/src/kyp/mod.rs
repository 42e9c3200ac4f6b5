//! KYP-type linear matrix inequalities: construction of the block maps,
//! feasibility solving with independently re-verified certificates, the
//! generalized Lyapunov inequality, and passivity verdicts.

mod solver;

use nalgebra::DMatrix;

use crate::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{C64, Mat};
use crate::pencil::{self, ReducedStandardSystem};
use crate::ph;
use crate::sysmodel::{DescriptorSystem, TimeDomain};

use solver::{ApProblem, TraceMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LmiKind {
    DiscreteImpedance,
    DiscreteScattering,
    GeneralizedLyapunov,
    ContinuousImpedance,
    ContinuousScattering,
}

impl std::fmt::Display for LmiKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LmiKind::DiscreteImpedance => "d-iKYP",
            LmiKind::DiscreteScattering => "d-sKYP",
            LmiKind::GeneralizedLyapunov => "gen-lyapunov",
            LmiKind::ContinuousImpedance => "iKYP",
            LmiKind::ContinuousScattering => "sKYP",
        };
        write!(f, "{s}")
    }
}

/// Linear part of an affine Hermitian-matrix map.
#[derive(Clone, Debug)]
pub enum LinPart {
    /// X -> P^H X P - Q^H X Q.
    CongruenceDiff { p: Mat, q: Mat },
    /// X -> -(F^H X G + G^H X F).
    NegSymProduct { f: Mat, g: Mat },
    /// X -> Z^H X Z.
    Compress { z: Mat },
}

impl LinPart {
    pub fn apply(&self, x: &Mat) -> Mat {
        Mat::from_complex(self.apply_complex(&x.to_complex()))
    }

    pub(crate) fn apply_complex(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let out = match self {
            LinPart::CongruenceDiff { p, q } => {
                let pc = p.to_complex();
                let qc = q.to_complex();
                pc.adjoint() * x * &pc - qc.adjoint() * x * &qc
            }
            LinPart::NegSymProduct { f, g } => {
                let fc = f.to_complex();
                let gc = g.to_complex();
                let m = fc.adjoint() * x * &gc;
                -(&m + m.adjoint())
            }
            LinPart::Compress { z } => {
                let zc = z.to_complex();
                zc.adjoint() * x * zc
            }
        };
        (&out + out.adjoint()).unscale(2.0)
    }

    pub(crate) fn adjoint_complex(&self, y: &DMatrix<C64>) -> DMatrix<C64> {
        let out = match self {
            LinPart::CongruenceDiff { p, q } => {
                let pc = p.to_complex();
                let qc = q.to_complex();
                &pc * y * pc.adjoint() - &qc * y * qc.adjoint()
            }
            LinPart::NegSymProduct { f, g } => {
                let fc = f.to_complex();
                let gc = g.to_complex();
                let m = &fc * y * gc.adjoint();
                -(&m + m.adjoint())
            }
            LinPart::Compress { z } => {
                let zc = z.to_complex();
                &zc * y * zc.adjoint()
            }
        };
        (&out + out.adjoint()).unscale(2.0)
    }

    fn is_real(&self) -> bool {
        match self {
            LinPart::CongruenceDiff { p, q } => p.is_real() && q.is_real(),
            LinPart::NegSymProduct { f, g } => f.is_real() && g.is_real(),
            LinPart::Compress { z } => z.is_real(),
        }
    }
}

/// One affine matrix-inequality block K0 + L(X) >= floor I.
#[derive(Clone, Debug)]
pub struct LmiBlock {
    pub label: String,
    pub k0: Mat,
    pub lin: LinPart,
}

impl LmiBlock {
    pub fn eval(&self, x: &Mat) -> Mat {
        &self.k0 + &self.lin.apply(x)
    }

    pub(crate) fn eval_complex(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        self.k0.to_complex() + self.lin.apply_complex(x)
    }
}

/// A structured KYP-type LMI in the Hermitian variable X.
#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub kind: LmiKind,
    /// Dimension of X.
    pub n: usize,
    pub blocks: Vec<LmiBlock>,
    pub real_data: bool,
    /// True when every constant part vanishes (scale-invariant LMI).
    pub homogeneous: bool,
}

impl LmiProblem {
    pub fn eval_w(&self, x: &Mat) -> Vec<Mat> {
        self.blocks.iter().map(|b| b.eval(x)).collect()
    }
}

/// Assembles the LMI block for a system. Discrete kinds and the
/// generalized Lyapunov inequality expect a discrete-time system,
/// continuous kinds a continuous-time standard system.
pub fn build_lmi(sys: &DescriptorSystem, kind: LmiKind) -> Result<LmiProblem> {
    let expect_discrete = matches!(
        kind,
        LmiKind::DiscreteImpedance | LmiKind::DiscreteScattering | LmiKind::GeneralizedLyapunov
    );
    let actual_discrete = sys.time_domain == TimeDomain::Discrete;
    if expect_discrete != actual_discrete {
        return Err(Error::InvalidMatrix(format!(
            "LMI kind {kind} does not match the system time domain ({})",
            sys.time_domain
        )));
    }
    let n = sys.state_dim();
    let m = sys.input_dim();
    let id_m = Mat::identity(m);
    let zeros_nm = Mat::zeros(n, m);
    let impedance_k0 = || {
        Mat::block_2x2(
            &Mat::zeros(n, n),
            &sys.c.adjoint(),
            &sys.c,
            &(&sys.d + &sys.d.adjoint()),
        )
    };
    let scattering_k0 = || {
        Mat::block_2x2(
            &(&(&sys.c.adjoint() * &sys.c)).scale(-1.0),
            &(&(&sys.c.adjoint() * &sys.d)).scale(-1.0),
            &(&(&sys.d.adjoint() * &sys.c)).scale(-1.0),
            &(&id_m - &(&sys.d.adjoint() * &sys.d)),
        )
    };
    let (k0, lin) = match kind {
        LmiKind::DiscreteImpedance => (
            impedance_k0(),
            LinPart::CongruenceDiff {
                p: Mat::hstack(&[&sys.e, &zeros_nm]),
                q: Mat::hstack(&[&sys.a, &sys.b]),
            },
        ),
        LmiKind::DiscreteScattering => (
            scattering_k0(),
            LinPart::CongruenceDiff {
                p: Mat::hstack(&[&sys.e, &zeros_nm]),
                q: Mat::hstack(&[&sys.a, &sys.b]),
            },
        ),
        LmiKind::GeneralizedLyapunov => (
            Mat::zeros(n, n),
            LinPart::CongruenceDiff { p: sys.e.clone(), q: sys.a.clone() },
        ),
        LmiKind::ContinuousImpedance => (
            impedance_k0(),
            LinPart::NegSymProduct {
                f: Mat::hstack(&[&Mat::identity(n), &zeros_nm]),
                g: Mat::hstack(&[&sys.a, &sys.b]),
            },
        ),
        LmiKind::ContinuousScattering => (
            scattering_k0(),
            LinPart::NegSymProduct {
                f: Mat::hstack(&[&Mat::identity(n), &zeros_nm]),
                g: Mat::hstack(&[&sys.a, &sys.b]),
            },
        ),
    };
    let real_data = k0.is_real() && lin.is_real();
    let homogeneous = k0.norm_max() == 0.0;
    Ok(LmiProblem {
        kind,
        n,
        blocks: vec![LmiBlock { label: kind.to_string(), k0, lin }],
        real_data,
        homogeneous,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    /// X >= 0 with W(X) >= 0 within tol_lmi slack.
    Semidefinite,
    /// X positive definite relative to its trace, W(X) >= 0.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LmiStatus {
    Feasible,
    Infeasible,
    Marginal,
}

/// Feasibility verdict plus an independently re-verified witness.
#[derive(Clone, Debug)]
pub struct LmiCertificate {
    pub status: LmiStatus,
    pub mode: SolveMode,
    pub x: Option<Mat>,
    /// Smallest eigenvalue over all LMI blocks at the returned X.
    pub min_eig_w: f64,
    pub min_eig_x: f64,
    /// eigmin(X) * n / trace(X); the scale-free definiteness measure.
    pub relative_min_eig_x: f64,
    /// Best margin the solver reached (block and X floors combined).
    pub t_star: f64,
    /// Trace bound keeping the search compact, and whether it binds.
    pub trace_bound: f64,
    pub trace_bound_active: bool,
    pub infeasibility_note: Option<String>,
    pub iterations: usize,
}

impl LmiCertificate {
    fn infeasible(mode: SolveMode, note: String, bound: f64) -> LmiCertificate {
        LmiCertificate {
            status: LmiStatus::Infeasible,
            mode,
            x: None,
            min_eig_w: f64::NEG_INFINITY,
            min_eig_x: f64::NEG_INFINITY,
            relative_min_eig_x: f64::NEG_INFINITY,
            t_star: f64::NEG_INFINITY,
            trace_bound: bound,
            trace_bound_active: false,
            infeasibility_note: Some(note),
            iterations: 0,
        }
    }
}

fn k0_scale(p: &LmiProblem) -> f64 {
    1.0 + p.blocks.iter().map(|b| b.k0.norm_fro()).fold(0.0, f64::max)
}

/// Structural impossibility: a diagonal entry of W that no X can move
/// is negative, or is pinned at zero while a constant off-diagonal
/// entry in its row is nonzero (a PSD matrix with a zero diagonal entry
/// must vanish along that row).
fn structural_infeasibility(p: &LmiProblem, tol: &Tolerances) -> Option<String> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6b7970);
    let dim = p.n;
    let samples: Vec<Mat> = (0..6)
        .map(|_| {
            let mut rows = vec![vec![C64::new(0.0, 0.0); dim]; dim];
            for i in 0..dim {
                for j in 0..dim {
                    rows[i][j] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            Mat::from_rows(&rows).map(|g| g.hermitian_part()).unwrap_or_else(|_| Mat::zeros(dim, dim))
        })
        .collect();
    for blk in &p.blocks {
        let nw = blk.k0.nrows();
        let images: Vec<Mat> = samples.iter().map(|x| blk.lin.apply(x)).collect();
        let scale = k0_scale(p);
        let entry_constant = |i: usize, j: usize| -> bool {
            images.iter().all(|im| im.get(i, j).norm() <= 1e-10 * scale)
        };
        for i in 0..nw {
            if !entry_constant(i, i) {
                continue;
            }
            let c = blk.k0.get(i, i).re;
            if c < -10.0 * tol.tol_lmi * scale {
                return Some(format!(
                    "{}: diagonal entry ({i},{i}) is constantly {c:.3e} < 0",
                    blk.label
                ));
            }
            if c.abs() <= 10.0 * tol.tol_lmi * scale {
                for j in 0..nw {
                    if j != i && entry_constant(i, j) && blk.k0.get(i, j).norm() > 1e-7 * scale {
                        return Some(format!(
                            "{}: diagonal entry ({i},{i}) is pinned at zero while entry ({i},{j}) is constantly {:.3e} != 0",
                            blk.label,
                            blk.k0.get(i, j).norm()
                        ));
                    }
                }
            }
        }
    }
    None
}

fn verified_margins(p: &LmiProblem, x: &Mat) -> Result<(f64, f64)> {
    let mut min_w = f64::INFINITY;
    for w in p.eval_w(x) {
        if w.nrows() == 0 {
            continue;
        }
        min_w = min_w.min(w.eigmin_hermitian()?);
    }
    let min_x = if x.nrows() == 0 { f64::INFINITY } else { x.eigmin_hermitian()? };
    Ok((min_w, min_x))
}

fn certificate_from_x(
    p: &LmiProblem,
    mode: SolveMode,
    x: Mat,
    status: LmiStatus,
    t_star: f64,
    bound: f64,
    note: Option<String>,
    iterations: usize,
) -> Result<LmiCertificate> {
    let (min_eig_w, min_eig_x) = verified_margins(p, &x)?;
    let trace = x.trace().re;
    let relative = if p.n == 0 {
        f64::INFINITY
    } else if trace.abs() > 1e-300 {
        min_eig_x * p.n as f64 / trace
    } else {
        0.0
    };
    Ok(LmiCertificate {
        status,
        mode,
        x: Some(x),
        min_eig_w,
        min_eig_x,
        relative_min_eig_x: relative,
        t_star,
        trace_bound: bound,
        trace_bound_active: trace >= 0.99 * bound,
        infeasibility_note: note,
        iterations,
    })
}

/// Decides feasibility of the LMI, re-verifying any witness with plain
/// eigenvalue computations.
pub fn solve_feasibility(p: &LmiProblem, mode: SolveMode, tol: &Tolerances) -> Result<LmiCertificate> {
    let bound = tol.rho;
    if p.n == 0 {
        // no variable: the constant parts decide
        let x = Mat::zeros(0, 0);
        let (min_w, _) = verified_margins(p, &x)?;
        let ok = min_w >= -tol.tol_lmi * k0_scale(p);
        return if ok {
            certificate_from_x(p, mode, x, LmiStatus::Feasible, min_w, bound, None, 0)
        } else {
            Ok(LmiCertificate::infeasible(
                mode,
                format!("constant LMI block has eigmin {min_w:.3e}"),
                bound,
            ))
        };
    }
    if let Some(reason) = structural_infeasibility(p, tol) {
        return Ok(LmiCertificate::infeasible(mode, reason, bound));
    }
    let scale = k0_scale(p);
    // cheap verified candidates spare the iteration on easy instances
    let shortcut_candidates: Vec<Mat> = match mode {
        SolveMode::Semidefinite => {
            vec![Mat::identity(p.n), Mat::zeros(p.n, p.n), Mat::identity(p.n).scale(10.0)]
        }
        SolveMode::Strict => vec![Mat::identity(p.n)],
    };
    // feasibility demands margins at noise level; the band between
    // noise and tol_lmi is reported as marginal, never rounded
    let noise_floor = |x: &Mat| -> f64 { -1e-11 * (scale + x.norm_fro()) };
    for cand in shortcut_candidates {
        let (min_w, min_x) = verified_margins(p, &cand)?;
        let ok = match mode {
            SolveMode::Semidefinite => {
                min_w.min(min_x) >= noise_floor(&cand)
            }
            SolveMode::Strict => min_w >= -tol.tol_lmi * scale && min_x >= tol.tol_strict,
        };
        if ok {
            let t_star = min_w.min(min_x);
            return certificate_from_x(p, mode, cand, LmiStatus::Feasible, t_star, bound, None, 0);
        }
    }
    let ap = ApProblem::new(p.n, &p.blocks, p.real_data);
    let gap_target = (tol.tol_lmi / 4.0) * scale.min(1e4);
    let max_iter = 6000;
    let nblocks = p.blocks.len();
    let mut iterations = 0usize;

    match mode {
        SolveMode::Semidefinite => {
            let floors = vec![0.0; nblocks];
            let run = ap.run(&floors, 0.0, TraceMode::AtMost(bound), None, max_iter, gap_target);
            iterations += run.iterations;
            let polished = ap.polish(&run.x, &floors, 0.0, TraceMode::AtMost(bound), 8);
            let x = Mat::from_complex(polished);
            let (min_w, min_x) = verified_margins(p, &x)?;
            let margin = min_w.min(min_x);
            if margin >= noise_floor(&x) {
                return certificate_from_x(
                    p,
                    mode,
                    x,
                    LmiStatus::Feasible,
                    margin,
                    bound,
                    None,
                    iterations,
                );
            }
            if margin >= -tol.tol_lmi * scale {
                return certificate_from_x(
                    p,
                    mode,
                    x,
                    LmiStatus::Marginal,
                    margin,
                    bound,
                    Some(format!(
                        "within tolerance of the feasibility boundary (verified margin {margin:.3e})"
                    )),
                    iterations,
                );
            }
            // relaxed probe separates marginal from infeasible
            let relaxed = -tol.tol_strict * scale;
            let floors2 = vec![relaxed; nblocks];
            let run2 =
                ap.run(&floors2, relaxed, TraceMode::AtMost(bound), Some(&run.x), max_iter, gap_target);
            iterations += run2.iterations;
            let x2 = Mat::from_complex(run2.x);
            let (w2, mx2) = verified_margins(p, &x2)?;
            let margin2 = w2.min(mx2);
            if run2.converged && margin2 >= 2.0 * relaxed {
                return certificate_from_x(
                    p,
                    mode,
                    x2,
                    LmiStatus::Marginal,
                    margin2,
                    bound,
                    Some(format!(
                        "holds only with slack: best verified margin {margin2:.3e}"
                    )),
                    iterations,
                );
            }
            Ok(LmiCertificate::infeasible(
                mode,
                format!(
                    "no X with trace <= {bound:.1e} reaches margin {:.1e}; best verified margin {:.3e}, projection gap {:.3e}",
                    -tol.tol_strict * scale,
                    margin.max(margin2),
                    run2.gap
                ),
                bound,
            ))
        }
        SolveMode::Strict => {
            let floors = vec![0.0; nblocks];
            let n = p.n as f64;
            // a plain semidefinite pass often lands on a definite
            // witness already (with behavioral observability every
            // solution is definite), and seeds the floored runs
            let run0 = ap.run(&floors, 0.0, TraceMode::AtMost(bound), None, max_iter, gap_target);
            iterations += run0.iterations;
            let seed =
                Mat::from_complex(ap.polish(&run0.x, &floors, 0.0, TraceMode::AtMost(bound), 8));
            let (w0, x0) = verified_margins(p, &seed)?;
            let rel0 = x0 * n / seed.trace().re.max(1e-300);
            if w0 >= -tol.tol_lmi * scale && x0 > 0.0 && rel0 >= tol.tol_strict {
                return certificate_from_x(
                    p,
                    mode,
                    seed,
                    LmiStatus::Feasible,
                    rel0,
                    bound,
                    None,
                    iterations,
                );
            }
            let warm = seed.to_complex();
            let ladder: Vec<f64> =
                [n, 10.0 * n, 100.0 * n].iter().copied().filter(|&s| s <= bound).collect();
            let ladder = if ladder.is_empty() { vec![bound] } else { ladder };
            let mut best: Option<(Mat, f64)> = None;
            for &s in &ladder {
                let tau = tol.tol_strict * s / n;
                let run =
                    ap.run(&floors, tau, TraceMode::AtMost(s), Some(&warm), max_iter, gap_target);
                iterations += run.iterations;
                if !run.converged {
                    continue;
                }
                let polished = ap.polish(&run.x, &floors, tau, TraceMode::AtMost(s), 8);
                let x = Mat::from_complex(polished);
                let (min_w, min_x) = verified_margins(p, &x)?;
                let trace = x.trace().re;
                let rel = min_x * n / trace.max(1e-300);
                if min_w >= -tol.tol_lmi * scale && rel >= tol.tol_strict {
                    // push the floor up for a well-interior representative
                    let mut chosen = x.clone();
                    let mut chosen_rel = rel;
                    for &factor in &[0.01, 0.1, 0.3] {
                        let tau2 = factor * s / n;
                        if tau2 <= tau {
                            continue;
                        }
                        let run2 = ap.run(
                            &floors,
                            tau2,
                            TraceMode::AtMost(s),
                            Some(&chosen.to_complex()),
                            max_iter / 2,
                            gap_target,
                        );
                        iterations += run2.iterations;
                        if !run2.converged {
                            break;
                        }
                        let cand = Mat::from_complex(ap.polish(
                            &run2.x,
                            &floors,
                            tau2,
                            TraceMode::AtMost(s),
                            4,
                        ));
                        let (w2, x2) = verified_margins(p, &cand)?;
                        let rel2 = x2 * n / cand.trace().re.max(1e-300);
                        if w2 >= -tol.tol_lmi * scale && rel2 > chosen_rel {
                            chosen = cand;
                            chosen_rel = rel2;
                        } else {
                            break;
                        }
                    }
                    return certificate_from_x(
                        p,
                        mode,
                        chosen,
                        LmiStatus::Feasible,
                        chosen_rel,
                        bound,
                        None,
                        iterations,
                    );
                }
                if best.as_ref().map_or(true, |(_, r)| rel > *r) {
                    best = Some((x, rel));
                }
            }
            // marginal probe: definite but below the strict threshold
            let s = ladder[0];
            let tau_soft = tol.tol_strict / 10.0 * s / n;
            let run = ap.run(&floors, tau_soft, TraceMode::AtMost(s), None, max_iter, gap_target);
            iterations += run.iterations;
            if run.converged {
                let x = Mat::from_complex(run.x);
                let (min_w, min_x) = verified_margins(p, &x)?;
                let rel = min_x * n / x.trace().re.max(1e-300);
                if min_w >= -tol.tol_lmi * scale && rel >= tau_soft / s * n * 0.5 {
                    return certificate_from_x(
                        p,
                        mode,
                        x,
                        LmiStatus::Marginal,
                        rel,
                        bound,
                        Some(format!(
                            "definite solutions exist but the relative eigmin {rel:.3e} stays below tol_strict"
                        )),
                        iterations,
                    );
                }
            }
            let note = match &best {
                Some((_, rel)) => format!(
                    "no strictly positive definite solution on the trace ladder (best relative eigmin {rel:.3e})"
                ),
                None => "no positive definite solution found on the trace ladder".into(),
            };
            let mut cert = LmiCertificate::infeasible(mode, note, bound);
            cert.iterations = iterations;
            Ok(cert)
        }
    }
}

/// Maximal trace over the semidefinite feasible set, probed on a
/// geometric ladder. A value near zero is the forced-zero signature.
pub fn max_trace_feasible(p: &LmiProblem, tol: &Tolerances) -> Result<(f64, Option<Mat>)> {
    if p.n == 0 {
        return Ok((0.0, Some(Mat::zeros(0, 0))));
    }
    if structural_infeasibility(p, tol).is_some() {
        return Ok((0.0, None));
    }
    let ap = ApProblem::new(p.n, &p.blocks, p.real_data);
    let scale = k0_scale(p);
    let gap_target = (tol.tol_lmi / 4.0) * scale.min(1e4);
    let floors = vec![0.0; p.blocks.len()];
    let n = p.n as f64;
    let mut achieved = 0.0;
    let mut witness = None;
    for &c in &[1e-6 * n, 1e-4 * n, 1e-2 * n, n, 1e2 * n] {
        if c > tol.rho {
            break;
        }
        let run = ap.run(&floors, 0.0, TraceMode::AtLeast(c), None, 4000, gap_target);
        if !run.converged {
            break;
        }
        let x = Mat::from_complex(run.x);
        let (min_w, min_x) = verified_margins(p, &x)?;
        if min_w >= -10.0 * tol.tol_lmi * scale && min_x >= -10.0 * tol.tol_lmi * scale {
            achieved = x.trace().re;
            witness = Some(x);
        } else {
            break;
        }
    }
    Ok((achieved, witness))
}

/// True when the semidefinite feasible set collapses to X = 0.
pub fn forced_zero(p: &LmiProblem, tol: &Tolerances) -> Result<bool> {
    let (max_trace, _) = max_trace_feasible(p, tol)?;
    Ok(max_trace <= 1e-5 * p.n as f64 * k0_scale(p))
}

/// Lifts a storage weight on the reduced state back to the descriptor
/// state: V(E x) = xhat^H Xhat xhat.
pub fn lift_storage(rss: &ReducedStandardSystem, x_hat: &Mat) -> Mat {
    let n = rss.v.nrows();
    let r = rss.state_dim();
    let inner = &(&rss.sigma_inv_sqrt * x_hat) * &rss.sigma_inv_sqrt;
    let zero_tr = Mat::zeros(r, n - r);
    let zero_bl = Mat::zeros(n - r, r);
    let zero_br = Mat::zeros(n - r, n - r);
    let padded = Mat::block_2x2(&inner, &zero_tr, &zero_bl, &zero_br);
    let u_svd = rss.u.adjoint();
    (&(&u_svd * &padded) * &u_svd.adjoint()).hermitian_part()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PassivityKind {
    Impedance,
    Scattering,
}

#[derive(Clone, Debug)]
pub struct PassivityReport {
    pub kind: PassivityKind,
    pub passive: bool,
    pub marginal: bool,
    pub certificate: LmiCertificate,
    /// Witness lifted to the descriptor coordinates when feasible.
    pub storage_full: Option<Mat>,
}

/// Passivity of a completely causal discrete-time descriptor system,
/// decided through the KYP LMI of its reduced standard form.
pub fn check_passivity(
    sys: &DescriptorSystem,
    kind: PassivityKind,
    tol: &Tolerances,
) -> Result<PassivityReport> {
    if sys.time_domain != TimeDomain::Discrete {
        return Err(Error::InvalidMatrix("passivity check expects a discrete-time system".into()));
    }
    let analysis = pencil::analyze(&sys.e, &sys.a, tol.tol_rank)?;
    if !analysis.regular {
        return Err(Error::IrregularPencil);
    }
    if analysis.index.unwrap_or(0) > 1 {
        return Err(Error::Unsupported { index: analysis.index.unwrap_or(0) });
    }
    let rss = pencil::reduce_system(sys, tol.tol_rank, tol.cond_max)?;
    let std_sys = DescriptorSystem::standard(
        rss.a.clone(),
        rss.b.clone(),
        rss.c.clone(),
        rss.d.clone(),
        TimeDomain::Discrete,
    )?;
    let lmi_kind = match kind {
        PassivityKind::Impedance => LmiKind::DiscreteImpedance,
        PassivityKind::Scattering => LmiKind::DiscreteScattering,
    };
    let problem = build_lmi(&std_sys, lmi_kind)?;
    let certificate = solve_feasibility(&problem, SolveMode::Semidefinite, tol)?;
    let passive = certificate.status == LmiStatus::Feasible;
    let storage_full = certificate.x.as_ref().map(|x| lift_storage(&rss, x));
    Ok(PassivityReport {
        kind,
        passive,
        marginal: certificate.status == LmiStatus::Marginal,
        certificate,
        storage_full,
    })
}

#[derive(Clone, Debug)]
pub struct GenLyapunovReport {
    pub stable_and_causal: bool,
    pub status: LmiStatus,
    pub witness: Option<Mat>,
    /// Verdict of the spectral route (eigenvalues + index).
    pub spectral_stable_and_causal: bool,
    pub agree: bool,
}

// vec(X) - vec(A^H X A) = vec(Q) via the Kronecker form
fn discrete_lyapunov_equation(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let ac = a.to_complex();
    let dim = n * n;
    let mut big = DMatrix::<C64>::zeros(dim, dim);
    // column-major vec: vec(A^H X A)[i + j n] = sum_{k,l} conj(A[k,i]) X[k,l] A[l,j]
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            big[(row, row)] += C64::new(1.0, 0.0);
            for l in 0..n {
                for k in 0..n {
                    let col = k + l * n;
                    big[(row, col)] -= ac[(k, i)].conj() * ac[(l, j)];
                }
            }
        }
    }
    let mut rhs = DMatrix::<C64>::zeros(dim, 1);
    for j in 0..n {
        for i in 0..n {
            rhs[(i + j * n, 0)] = q.get(i, j);
        }
    }
    let sol = Mat::from_complex(big).solve(&Mat::from_complex(rhs))?;
    let mut x = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            x[(i, j)] = sol.get(i + j * n, 0);
        }
    }
    Ok(Mat::from_complex(x).hermitian_part())
}

/// Analytic witness for the generalized Lyapunov inequality, following
/// the canonical-form construction: X11 on the dynamic part (from a
/// diagonalization or a Lyapunov solve), zero elsewhere, pulled back
/// through the left transform.
fn gen_lyapunov_candidate(e: &Mat, a: &Mat, tol: &Tolerances) -> Option<Mat> {
    let w = pencil::weierstrass_like(e, a, tol.tol_rank).ok()?;
    let n = e.nrows();
    let r = w.r;
    if r == 0 {
        return Some(Mat::zeros(n, n));
    }
    let eg = w.a_f.eig_general().ok()?;
    let rho = eg.values.iter().map(|l| l.norm()).fold(0.0f64, f64::max);
    if rho > 1.0 + 1e-9 {
        return None;
    }
    // diagonalizable: X11 = P^{-H} P^{-1} works whenever |eig| <= 1
    let x11 = {
        let p = &eg.vectors;
        let sv = p.singular_values();
        let cond = match (sv.first(), sv.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        };
        if cond < 1e7 {
            let p_inv = p.pinv(1e-12).ok()?;
            (&p_inv.adjoint() * &p_inv).hermitian_part()
        } else if rho < 1.0 - 1e-9 {
            discrete_lyapunov_equation(&w.a_f, &Mat::identity(r)).ok()?
        } else {
            return None;
        }
    };
    let zero_tr = Mat::zeros(r, n - r);
    let zero_bl = Mat::zeros(n - r, r);
    let zero_br = Mat::zeros(n - r, n - r);
    let padded = Mat::block_2x2(&x11, &zero_tr, &zero_bl, &zero_br);
    let lifted = (&(&w.s.adjoint() * &padded) * &w.s).hermitian_part();
    let trace = lifted.trace().re;
    if trace <= 0.0 {
        return Some(lifted);
    }
    Some(lifted.scale(n as f64 / trace))
}

/// Existence of X >= 0, positive definite on im E, solving
/// -A^H X A + E^H X E >= 0; cross-checked against the spectral test.
pub fn gen_lyapunov_classify(e: &Mat, a: &Mat, tol: &Tolerances) -> Result<GenLyapunovReport> {
    let analysis = pencil::analyze(e, a, tol.tol_rank)?;
    if !analysis.regular {
        return Err(Error::IrregularPencil);
    }
    let stab = ph::classify_stability(e, a, tol)?;
    let spectral = stab.stable && analysis.completely_causal;

    let n = e.nrows();
    let lyap = LmiBlock {
        label: "gen-lyapunov".into(),
        k0: Mat::zeros(n, n),
        lin: LinPart::CongruenceDiff { p: e.clone(), q: a.clone() },
    };
    let im_e = e.range_space(tol.tol_rank)?;
    let mut blocks = vec![lyap];
    let has_image = im_e.ncols() > 0;
    if has_image {
        blocks.push(LmiBlock {
            label: "X on im E".into(),
            k0: Mat::zeros(im_e.ncols(), im_e.ncols()),
            lin: LinPart::Compress { z: im_e.clone() },
        });
    }
    let real_data = e.is_real() && a.is_real();
    let problem = LmiProblem {
        kind: LmiKind::GeneralizedLyapunov,
        n,
        blocks,
        real_data,
        homogeneous: true,
    };
    // strict floor applies only to the im-E compression
    let ap = ApProblem::new(n, &problem.blocks, real_data);
    let scale = 1.0;
    let gap_target = tol.tol_lmi / 4.0 * scale;
    let nf = n as f64;
    let mut status = LmiStatus::Infeasible;
    let mut witness = None;
    let verify_candidate = |x: &Mat| -> Result<bool> {
        let ws = problem.eval_w(x);
        let lyap_ok = ws[0].nrows() == 0 || ws[0].eigmin_hermitian()? >= -tol.tol_lmi;
        let image_ok = if has_image {
            let trace = x.trace().re.max(1e-300);
            ws[1].eigmin_hermitian()? >= tol.tol_strict * trace / nf.max(1.0)
        } else {
            true
        };
        let psd_ok = x.nrows() == 0 || x.eigmin_hermitian()? >= -tol.tol_lmi * (1.0 + x.norm_fro());
        Ok(lyap_ok && image_ok && psd_ok)
    };
    if n == 0 {
        status = LmiStatus::Feasible;
        witness = Some(Mat::zeros(0, 0));
    } else if let Some(cand) = gen_lyapunov_candidate(e, a, tol) {
        if verify_candidate(&cand)? {
            status = LmiStatus::Feasible;
            witness = Some(cand);
        }
    }
    if witness.is_none() && n > 0 {
        let tau = tol.tol_strict;
        let floors: Vec<f64> =
            problem.blocks.iter().map(|b| if b.label == "X on im E" { tau } else { 0.0 }).collect();
        let run = ap.run(&floors, 0.0, TraceMode::Exactly(nf), None, 6000, gap_target);
        if run.converged {
            let x = Mat::from_complex(ap.polish(&run.x, &floors, 0.0, TraceMode::Exactly(nf), 8));
            let ws = problem.eval_w(&x);
            let lyap_ok = ws[0].nrows() == 0 || ws[0].eigmin_hermitian()? >= -tol.tol_lmi;
            let image_ok = if has_image {
                ws[1].eigmin_hermitian()? >= tol.tol_strict / 2.0
            } else {
                true
            };
            let psd_ok = x.eigmin_hermitian()? >= -tol.tol_lmi;
            if lyap_ok && image_ok && psd_ok {
                status = LmiStatus::Feasible;
                witness = Some(x);
            } else {
                status = LmiStatus::Marginal;
                witness = Some(x);
            }
        }
    }
    let feasible = status == LmiStatus::Feasible;
    Ok(GenLyapunovReport {
        stable_and_causal: feasible,
        status,
        witness,
        spectral_stable_and_causal: spectral,
        agree: feasible == spectral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn build_lmi_matches_hand_blocks() {
        // (1, 1/2, 1/2, 0, 1) d-sKYP: W(X) = (1/4) [[3X, -X],[-X, -X]]
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.5, 0.0, 1.0);
        let p = build_lmi(&sys, LmiKind::DiscreteScattering).unwrap();
        let w = &p.eval_w(&Mat::from_diag_real(&[2.0]))[0];
        assert!((w.get(0, 0).re - 1.5).abs() < 1e-14);
        assert!((w.get(0, 1).re + 0.5).abs() < 1e-14);
        assert!((w.get(1, 1).re + 0.5).abs() < 1e-14);

        // (1, 1/2, 0, 1, 0) d-iKYP: W(X) = [[3X/4, 1],[1, 0]]
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 1.0, 0.0);
        let p = build_lmi(&sys, LmiKind::DiscreteImpedance).unwrap();
        let w = &p.eval_w(&Mat::from_diag_real(&[4.0]))[0];
        assert!((w.get(0, 0).re - 3.0).abs() < 1e-14);
        assert!((w.get(0, 1).re - 1.0).abs() < 1e-14);
        assert!(w.get(1, 1).norm() < 1e-14);

        // E = I, A = 0, B = 0, C = 0, D = I: W(X) = diag(X, 2I)
        let sys = DescriptorSystem::scalar(1.0, 0.0, 0.0, 0.0, 1.0);
        let p = build_lmi(&sys, LmiKind::DiscreteImpedance).unwrap();
        let w = &p.eval_w(&Mat::identity(1))[0];
        assert!((w.get(0, 0).re - 1.0).abs() < 1e-14);
        assert!((w.get(1, 1).re - 2.0).abs() < 1e-14);
        assert!(w.get(0, 1).norm() < 1e-14);
        let cert = solve_feasibility(&p, SolveMode::Semidefinite, &tol()).unwrap();
        assert_eq!(cert.status, LmiStatus::Feasible);
    }

    #[test]
    fn lmi_block_hermitian_and_affine() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        let a = Mat::from_rows(&[
            vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.4)],
            vec![C64::new(0.5, -0.1), C64::new(0.2, 0.0)],
        ])
        .unwrap();
        let sys = DescriptorSystem::standard(
            a,
            Mat::from_rows(&[vec![C64::new(1.0, 0.5)], vec![C64::new(0.0, -1.0)]]).unwrap(),
            Mat::zeros(1, 2),
            Mat::identity(1),
            TimeDomain::Discrete,
        )
        .unwrap();
        for kind in [LmiKind::DiscreteImpedance, LmiKind::DiscreteScattering] {
            let p = build_lmi(&sys, kind).unwrap();
            for _ in 0..5 {
                let g = Mat::from_rows(&[
                    vec![
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    ],
                    vec![
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    ],
                ])
                .unwrap();
                let x1 = g.hermitian_part();
                let x2 = (&x1).scale(2.0);
                let w1 = &p.eval_w(&x1)[0];
                assert!(w1.is_hermitian(1e-10));
                // affinity: W(2X) - W(X) = W(X) - W(0) applied linearly
                let w2 = &p.eval_w(&x2)[0];
                let w0 = &p.eval_w(&Mat::zeros(2, 2))[0];
                let lhs = &(w2 - w1);
                let rhs = &(w1 - w0);
                assert!((lhs - rhs).norm_max() < 1e-10);
            }
        }
    }

    #[test]
    fn paper_counterexamples_infeasible() {
        let t = tol();
        // (1, 1/2, 0, 1, 0): d-iKYP infeasible
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 1.0, 0.0);
        let p = build_lmi(&sys, LmiKind::DiscreteImpedance).unwrap();
        let cert = solve_feasibility(&p, SolveMode::Semidefinite, &t).unwrap();
        assert_eq!(cert.status, LmiStatus::Infeasible);
        assert!(cert.infeasibility_note.is_some());

        // (1, 1/2, 0, 1, 1): d-sKYP infeasible
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.0, 1.0, 1.0);
        let p = build_lmi(&sys, LmiKind::DiscreteScattering).unwrap();
        let cert = solve_feasibility(&p, SolveMode::Semidefinite, &t).unwrap();
        assert_eq!(cert.status, LmiStatus::Infeasible);
    }

    #[test]
    fn forced_zero_example() {
        let t = tol();
        // (1, 1/2, 1/2, 0, 1): feasible only with X = 0
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.5, 0.0, 1.0);
        let p = build_lmi(&sys, LmiKind::DiscreteScattering).unwrap();
        let cert = solve_feasibility(&p, SolveMode::Semidefinite, &t).unwrap();
        assert_eq!(cert.status, LmiStatus::Feasible);
        assert!(forced_zero(&p, &t).unwrap());
        let strict = solve_feasibility(&p, SolveMode::Strict, &t).unwrap();
        assert_eq!(strict.status, LmiStatus::Infeasible);
    }

    #[test]
    fn index_two_strict_impedance_infeasible() {
        let t = tol();
        // E = [[0,1],[0,0]], A = I, C = [0 1], D = 0: no X > 0 satisfies d-iKYP
        let sys = DescriptorSystem::new(
            Mat::from_rows_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            Mat::identity(2),
            Mat::zeros(2, 1),
            Mat::from_rows_real(&[vec![0.0, 1.0]]).unwrap(),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        let p = build_lmi(&sys, LmiKind::DiscreteImpedance).unwrap();
        let cert = solve_feasibility(&p, SolveMode::Strict, &t).unwrap();
        assert_eq!(cert.status, LmiStatus::Infeasible);
    }

    #[test]
    fn passivity_verdicts() {
        let t = tol();
        // scattering passive with X = 0 admissible
        let sys = DescriptorSystem::scalar(1.0, 0.5, 0.5, 0.0, 1.0);
        let rep = check_passivity(&sys, PassivityKind::Scattering, &t).unwrap();
        assert!(rep.passive);

        // purely algebraic impedance-passive system with V = 0
        let sys = DescriptorSystem::scalar(0.0, 1.0, -1.0, 1.0, -1.0);
        let rep = check_passivity(&sys, PassivityKind::Impedance, &t).unwrap();
        assert!(rep.passive);
        let x = rep.storage_full.unwrap();
        assert!(x.norm_max() < 1e-12, "storage lifts to V = 0");

        // expanding system is not scattering passive
        let sys = DescriptorSystem::scalar(1.0, 2.0, 1.0, 1.0, 0.0);
        let rep = check_passivity(&sys, PassivityKind::Scattering, &t).unwrap();
        assert!(!rep.passive);

        // index-two systems are rejected
        let sys = DescriptorSystem::new(
            Mat::from_rows_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            Mat::identity(2),
            Mat::zeros(2, 1),
            Mat::from_rows_real(&[vec![0.0, 1.0]]).unwrap(),
            Mat::zeros(1, 1),
            TimeDomain::Discrete,
        )
        .unwrap();
        assert!(matches!(
            check_passivity(&sys, PassivityKind::Impedance, &t),
            Err(Error::Unsupported { index: 2 })
        ));
    }

    #[test]
    fn gen_lyapunov_cases() {
        let t = tol();
        // index-two pencil: no X positive definite on im E
        let e = Mat::from_rows_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let rep = gen_lyapunov_classify(&e, &Mat::identity(2), &t).unwrap();
        assert!(!rep.stable_and_causal);
        assert!(!rep.spectral_stable_and_causal);
        assert!(rep.agree);

        // unstable Jordan block: X = 0 solves but nothing definite
        let a = Mat::from_rows_real(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let rep = gen_lyapunov_classify(&Mat::identity(2), &a, &t).unwrap();
        assert!(!rep.stable_and_causal);
        assert!(rep.agree);

        // stable scalar: feasible
        let rep =
            gen_lyapunov_classify(&Mat::identity(1), &Mat::from_diag_real(&[0.5]), &t).unwrap();
        assert!(rep.stable_and_causal);
        assert!(rep.agree);
        let x = rep.witness.unwrap();
        assert!(x.get(0, 0).re > 0.0);
    }

    #[test]
    fn scale_invariance_of_gen_lyapunov() {
        let t = tol();
        let e = Mat::identity(2);
        let a = Mat::from_rows_real(&[vec![0.3, 0.2], vec![-0.1, 0.6]]).unwrap();
        let r1 = gen_lyapunov_classify(&e, &a, &t).unwrap();
        let r2 = gen_lyapunov_classify(&e.scale(7.0), &a.scale(7.0), &t).unwrap();
        assert_eq!(r1.stable_and_causal, r2.stable_and_causal);
        assert!(r1.stable_and_causal);
    }
}
