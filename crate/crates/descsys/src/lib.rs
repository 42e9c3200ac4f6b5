//! Analysis of linear discrete-time descriptor systems: pencil structure,
//! passivity via KYP linear matrix inequalities, positive/bounded realness,
//! port-Hamiltonian representations, and Cayley transforms between
//! impedance/scattering forms and between continuous and discrete time.

pub mod cayley;
pub mod classify;
pub mod drazin;
pub mod error;
pub mod kyp;
pub mod linalg;
pub mod pencil;
pub mod ph;
pub mod sim;
pub mod sysmodel;
pub mod transfer;

pub use error::{Error, Result};
pub use linalg::{C64, Mat};
pub use sysmodel::{DescriptorSystem, TimeDomain};

/// Numerical tolerances shared across analyses, overridable from the CLI.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub tol_rank: f64,
    /// Slack allowed on semidefinite LMI certificates.
    pub tol_lmi: f64,
    /// Margin demanded of strict (positive definite) certificates.
    pub tol_strict: f64,
    /// Condition-number ceiling for the algebraic-part solves.
    pub cond_max: f64,
    /// Trace bound that keeps affine LMI feasibility sets compact.
    pub rho: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_rank: 1e-10,
            tol_lmi: 1e-8,
            tol_strict: 1e-6,
            cond_max: 1e8,
            rho: 1e4,
        }
    }
}
