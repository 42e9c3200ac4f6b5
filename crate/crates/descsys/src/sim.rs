//! Trajectory simulation for index-at-most-one descriptor systems and
//! per-step monitoring of dissipation inequalities.

use crate::error::{Error, Result};
use crate::linalg::{C64, Mat};
use crate::pencil::{self, ReducedStandardSystem};
use crate::sysmodel::DescriptorSystem;

/// A simulated run: states x_0..x_K, inputs and outputs u_k, y_k for
/// every k (K = inputs.len() - 1).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<Mat>,
    pub inputs: Vec<Mat>,
    pub outputs: Vec<Mat>,
    /// Worst relative residual of E x_{k+1} = A x_k + B u_k and the
    /// output equation along the run.
    pub max_residual: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupplyKind {
    Impedance,
    Scattering,
    General,
}

/// Quadratic supply rate s(u, y) = [y; u]^H [[Q, S],[S^H, R]] [y; u].
#[derive(Clone, Debug)]
pub struct SupplyRate {
    pub kind: SupplyKind,
    pub q: Mat,
    pub s: Mat,
    pub r: Mat,
}

impl SupplyRate {
    /// 2 Re(y^H u).
    pub fn impedance(m: usize) -> SupplyRate {
        SupplyRate {
            kind: SupplyKind::Impedance,
            q: Mat::zeros(m, m),
            s: Mat::identity(m),
            r: Mat::zeros(m, m),
        }
    }

    /// ||u||^2 - ||y||^2.
    pub fn scattering(m: usize) -> SupplyRate {
        SupplyRate {
            kind: SupplyKind::Scattering,
            q: Mat::identity(m).scale(-1.0),
            s: Mat::zeros(m, m),
            r: Mat::identity(m),
        }
    }

    pub fn general(q: Mat, s: Mat, r: Mat) -> Result<SupplyRate> {
        if !q.is_hermitian(1e-12) || !r.is_hermitian(1e-12) {
            return Err(Error::InvalidMatrix("supply weights Q, R must be Hermitian".into()));
        }
        if q.shape() != s.shape() || q.shape() != r.shape() || !q.is_square() {
            return Err(Error::DimensionMismatch("supply weights must be square of equal size".into()));
        }
        Ok(SupplyRate { kind: SupplyKind::General, q, s, r })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Evaluates the supply; always real because the weights are
    /// Hermitian.
    pub fn supply(&self, u: &Mat, y: &Mat) -> Result<f64> {
        let m = self.dim();
        if u.shape() != (m, 1) || y.shape() != (m, 1) {
            return Err(Error::DimensionMismatch(format!(
                "supply expects {m}-vectors, got u {:?}, y {:?}",
                u.shape(),
                y.shape()
            )));
        }
        let top = &(&self.q * y) + &(&self.s * u);
        let bot = &(&self.s.adjoint() * y) + &(&self.r * u);
        let val = (&y.adjoint() * &top).get(0, 0) + (&u.adjoint() * &bot).get(0, 0);
        Ok(val.re)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SimOptions {
    /// Replace an inconsistent algebraic component x0^2 by its
    /// least-squares-consistent value instead of erroring (x0^1 is
    /// always preserved).
    pub project_inconsistent_x0: bool,
}

/// Runs the system over the input sequence; states come back in the
/// original descriptor coordinates.
pub fn simulate(
    sys: &DescriptorSystem,
    inputs: &[Mat],
    x0: &Mat,
    opts: SimOptions,
) -> Result<Trajectory> {
    let tol = crate::Tolerances::default();
    let rss = pencil::reduce_system(sys, tol.tol_rank, tol.cond_max)?;
    simulate_reduced(sys, &rss, inputs, x0, opts)
}

pub fn simulate_reduced(
    sys: &DescriptorSystem,
    rss: &ReducedStandardSystem,
    inputs: &[Mat],
    x0: &Mat,
    opts: SimOptions,
) -> Result<Trajectory> {
    let m = sys.input_dim();
    let n = sys.state_dim();
    if inputs.is_empty() {
        return Err(Error::InsufficientInput { index: 0, needed: 1, got: 0 });
    }
    for u in inputs {
        if u.shape() != (m, 1) {
            return Err(Error::DimensionMismatch(format!(
                "input vectors must be {m}x1, got {:?}",
                u.shape()
            )));
        }
    }
    if x0.shape() != (n, 1) {
        return Err(Error::DimensionMismatch(format!("x0 must be {n}x1, got {:?}", x0.shape())));
    }

    let (x0_1, x0_2) = rss.split_state(x0);
    let x2_expected = &(&rss.x2_from_x1 * &x0_1) + &(&rss.x2_from_u * &inputs[0]);
    let residual = (&x0_2 - &x2_expected).norm_fro();
    if residual > 1e-8 * (1.0 + x0.norm_fro() + inputs[0].norm_fro()) && !opts.project_inconsistent_x0
    {
        return Err(Error::InconsistentInitialState { residual });
    }

    let mut xhat = &rss.sigma_sqrt * &x0_1;
    let steps = inputs.len() - 1;
    let mut states = Vec::with_capacity(inputs.len());
    let mut outputs = Vec::with_capacity(inputs.len());
    for k in 0..=steps {
        let x_full = rss.full_state(&xhat, &inputs[k]);
        let y = &(&sys.c * &x_full) + &(&sys.d * &inputs[k]);
        states.push(x_full);
        outputs.push(y);
        if k < steps {
            xhat = &(&rss.a * &xhat) + &(&rss.b * &inputs[k]);
        }
    }

    let mut max_residual = 0.0f64;
    for k in 0..steps {
        let lhs = &sys.e * &states[k + 1];
        let rhs = &(&sys.a * &states[k]) + &(&sys.b * &inputs[k]);
        let scale = 1.0 + states[k].norm_fro() + inputs[k].norm_fro();
        max_residual = max_residual.max((&lhs - &rhs).norm_fro() / scale);
    }
    Ok(Trajectory { states, inputs: inputs.to_vec(), outputs, max_residual })
}

#[derive(Clone, Debug, PartialEq)]
pub enum AuditVerdict {
    DissipativeOnTrajectory,
    Violated { first_step: usize },
}

/// Per-step ledger of storage differences against supplied energy.
#[derive(Clone, Debug)]
pub struct DissipationAudit {
    /// V(E x_k) for every k.
    pub storage_values: Vec<f64>,
    /// s(u_k, y_k) for every k.
    pub supply_values: Vec<f64>,
    /// V(E x_{k+1}) - V(E x_k) - s(u_k, y_k) per step.
    pub step_violations: Vec<f64>,
    pub max_violation: f64,
    pub verdict: AuditVerdict,
    /// Every step satisfied the inequality with equality (within slack).
    pub conservative: bool,
    /// Every step satisfied the inequality strictly.
    pub strict: bool,
}

/// Checks V(E x_{k+1}) - V(E x_k) <= s(u_k, y_k) along a trajectory for
/// the quadratic storage V(z) = z^H X z.
pub fn audit_dissipation(
    traj: &Trajectory,
    sr: &SupplyRate,
    x_weight: &Mat,
    e: &Mat,
) -> Result<DissipationAudit> {
    if !x_weight.is_hermitian(1e-10) {
        return Err(Error::InvalidWeight("storage weight must be Hermitian".into()));
    }
    if x_weight.nrows() > 0 {
        let eigmin = x_weight.eigmin_hermitian()?;
        if eigmin < -1e-8 * (1.0 + x_weight.norm_fro()) {
            return Err(Error::InvalidWeight(format!(
                "storage weight must be positive semidefinite (eigmin {eigmin:.3e})"
            )));
        }
    }
    let value = |x: &Mat| -> f64 {
        let z = e * x;
        (&(&z.adjoint() * x_weight) * &z).get(0, 0).re
    };
    let storage_values: Vec<f64> = traj.states.iter().map(&value).collect();
    let mut supply_values = Vec::with_capacity(traj.inputs.len());
    for (u, y) in traj.inputs.iter().zip(&traj.outputs) {
        supply_values.push(sr.supply(u, y)?);
    }
    let mut step_violations = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    let mut verdict = AuditVerdict::DissipativeOnTrajectory;
    let mut conservative = true;
    let mut strict = true;
    for k in 0..traj.horizon() {
        let delta = storage_values[k + 1] - storage_values[k];
        let viol = delta - supply_values[k];
        let slack = 1e-8
            * (1.0 + storage_values[k].abs() + storage_values[k + 1].abs() + supply_values[k].abs());
        step_violations.push(viol);
        max_violation = max_violation.max(viol);
        if viol > slack && verdict == AuditVerdict::DissipativeOnTrajectory {
            verdict = AuditVerdict::Violated { first_step: k };
        }
        if viol.abs() > slack {
            conservative = false;
        }
        if viol >= -slack {
            strict = false;
        }
    }
    if step_violations.is_empty() {
        max_violation = 0.0;
        strict = false;
    }
    Ok(DissipationAudit {
        storage_values,
        supply_values,
        step_violations,
        max_violation,
        verdict,
        conservative,
        strict,
    })
}

fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{:.12e}", z.re)
    } else if z.im >= 0.0 {
        format!("{:.12e}+{:.12e}i", z.re, z.im)
    } else {
        format!("{:.12e}-{:.12e}i", z.re, -z.im)
    }
}

/// CSV export with columns k, x..., u..., y..., V, s.
pub fn trajectory_csv(traj: &Trajectory, audit: Option<&DissipationAudit>) -> String {
    let n = traj.states.first().map_or(0, |x| x.nrows());
    let m = traj.inputs.first().map_or(0, |u| u.nrows());
    let mut out = String::from("k");
    for i in 0..n {
        out.push_str(&format!(",x{i}"));
    }
    for i in 0..m {
        out.push_str(&format!(",u{i}"));
    }
    for i in 0..m {
        out.push_str(&format!(",y{i}"));
    }
    out.push_str(",V,s\n");
    for k in 0..traj.states.len() {
        out.push_str(&k.to_string());
        for i in 0..n {
            out.push(',');
            out.push_str(&fmt_complex(traj.states[k].get(i, 0)));
        }
        for i in 0..m {
            out.push(',');
            out.push_str(&fmt_complex(traj.inputs[k].get(i, 0)));
        }
        for i in 0..m {
            out.push(',');
            out.push_str(&fmt_complex(traj.outputs[k].get(i, 0)));
        }
        match audit {
            Some(a) => {
                out.push_str(&format!(",{:.12e},{:.12e}", a.storage_values[k], a.supply_values[k]));
            }
            None => out.push_str(",,"),
        }
        out.push('\n');
    }
    out
}
