//! Alternating-projection engine for small dense LMI feasibility
//! problems: find Hermitian X with K0_j + L_j(X) >= tau_j I for every
//! block, X >= tau_x I, under a trace control. The iteration alternates
//! between the product of spectral cones and the affine graph
//! {(X, Y_j = K0_j + L_j(X))}, whose projection is a precomputed
//! Cholesky solve in an orthonormal basis of the Hermitian space.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::LmiBlock;
use crate::linalg::C64;

/// Orthonormal real coordinates on Hermitian (or real symmetric)
/// n x n matrices.
#[derive(Clone, Copy, Debug)]
pub(super) struct HermCoords {
    pub n: usize,
    pub complex: bool,
}

impl HermCoords {
    pub fn dim(&self) -> usize {
        if self.complex { self.n * self.n } else { self.n * (self.n + 1) / 2 }
    }

    pub fn to_vec(&self, m: &DMatrix<C64>) -> DVector<f64> {
        let n = self.n;
        let mut v = DVector::zeros(self.dim());
        let mut k = 0;
        for i in 0..n {
            v[k] = m[(i, i)].re;
            k += 1;
        }
        let s2 = std::f64::consts::SQRT_2;
        for i in 0..n {
            for j in (i + 1)..n {
                v[k] = s2 * m[(i, j)].re;
                k += 1;
                if self.complex {
                    v[k] = s2 * m[(i, j)].im;
                    k += 1;
                }
            }
        }
        v
    }

    pub fn to_mat(&self, v: &DVector<f64>) -> DMatrix<C64> {
        let n = self.n;
        let mut m = DMatrix::<C64>::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            m[(i, i)] = C64::new(v[k], 0.0);
            k += 1;
        }
        let s2inv = 1.0 / std::f64::consts::SQRT_2;
        for i in 0..n {
            for j in (i + 1)..n {
                let re = v[k] * s2inv;
                k += 1;
                let im = if self.complex {
                    let im = v[k] * s2inv;
                    k += 1;
                    im
                } else {
                    0.0
                };
                m[(i, j)] = C64::new(re, im);
                m[(j, i)] = C64::new(re, -im);
            }
        }
        m
    }
}

/// Eigenvalues (ascending) and vectors of a Hermitian matrix, using the
/// real path when the data allows it.
pub(super) fn herm_eigen(m: &DMatrix<C64>, real: bool) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    if real {
        let mr = m.map(|z| z.re);
        let (vals, vecs) = crate::linalg::jacobi_hermitian_eigen_real(&mr);
        (vals, vecs.map(|x| C64::new(x, 0.0)))
    } else {
        crate::linalg::jacobi_hermitian_eigen_complex(m)
    }
}

fn rebuild(vals: &[f64], vecs: &DMatrix<C64>) -> DMatrix<C64> {
    let n = vals.len();
    let mut d = DMatrix::<C64>::zeros(n, n);
    for (i, &l) in vals.iter().enumerate() {
        d[(i, i)] = C64::new(l, 0.0);
    }
    let m = vecs * d * vecs.adjoint();
    (&m + m.adjoint()).unscale(2.0)
}

/// Trace control applied jointly with the eigenvalue floor.
#[derive(Clone, Copy, Debug)]
pub(super) enum TraceMode {
    AtMost(f64),
    Exactly(f64),
    AtLeast(f64),
}

/// Euclidean projection of an eigenvalue vector onto
/// {l_i >= floor} intersected with the trace constraint.
fn project_eigs(vals: &mut [f64], floor: f64, trace: TraceMode) {
    for v in vals.iter_mut() {
        *v = v.max(floor);
    }
    let sum: f64 = vals.iter().sum();
    let n = vals.len();
    if n == 0 {
        return;
    }
    let solve_shift = |vals: &[f64], target: f64| -> f64 {
        // find mu with sum_i max(v_i - mu, floor) = target (decreasing in mu)
        let mut lo = -(target.abs() + 1.0);
        let mut hi = vals.iter().fold(0.0f64, |a, &v| a.max(v)) - floor + 1.0;
        let eval = |mu: f64| -> f64 { vals.iter().map(|&v| (v - mu).max(floor)).sum() };
        while eval(lo) < target {
            lo = lo * 2.0 - 1.0;
        }
        while eval(hi) > target {
            hi = hi * 2.0 + 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    match trace {
        TraceMode::AtMost(s) => {
            if sum > s && s >= floor * n as f64 {
                let mu = solve_shift(vals, s);
                for v in vals.iter_mut() {
                    *v = (*v - mu).max(floor);
                }
            }
        }
        TraceMode::AtLeast(c) => {
            if sum < c {
                let mu = solve_shift(vals, c);
                for v in vals.iter_mut() {
                    *v = (*v - mu).max(floor);
                }
            }
        }
        TraceMode::Exactly(s) => {
            if s >= floor * n as f64 {
                let mu = solve_shift(vals, s);
                for v in vals.iter_mut() {
                    *v = (*v - mu).max(floor);
                }
            }
        }
    }
}

pub(super) struct ApProblem<'a> {
    pub blocks: &'a [LmiBlock],
    pub coords_x: HermCoords,
    /// Per-block output coordinates.
    pub coords_y: Vec<HermCoords>,
    /// Operator matrices of the linear parts in those bases.
    ops: Vec<DMatrix<f64>>,
    k0_vecs: Vec<DVector<f64>>,
    chol: Cholesky<f64, Dyn>,
    real: bool,
}

pub(super) struct ApRun {
    pub converged: bool,
    pub x: DMatrix<C64>,
    pub gap: f64,
    pub iterations: usize,
}

impl<'a> ApProblem<'a> {
    pub fn new(n: usize, blocks: &'a [LmiBlock], real: bool) -> ApProblem<'a> {
        let coords_x = HermCoords { n, complex: !real };
        let dim_x = coords_x.dim();
        let mut coords_y = Vec::with_capacity(blocks.len());
        let mut ops = Vec::with_capacity(blocks.len());
        let mut k0_vecs = Vec::with_capacity(blocks.len());
        let mut gram = DMatrix::<f64>::identity(dim_x, dim_x);
        for blk in blocks {
            let out = blk.k0.nrows();
            let cy = HermCoords { n: out, complex: !real };
            let mut op = DMatrix::<f64>::zeros(cy.dim(), dim_x);
            for k in 0..dim_x {
                let mut unit = DVector::zeros(dim_x);
                unit[k] = 1.0;
                let basis = coords_x.to_mat(&unit);
                let image = blk.lin.apply_complex(&basis);
                op.view_mut((0, k), (cy.dim(), 1)).copy_from(&cy.to_vec(&image));
            }
            gram += op.transpose() * &op;
            k0_vecs.push(cy.to_vec(&blk.k0.to_complex()));
            coords_y.push(cy);
            ops.push(op);
        }
        let chol = Cholesky::new(gram).expect("I + L*L is positive definite");
        ApProblem { blocks, coords_x, coords_y, ops, k0_vecs, chol, real }
    }

    fn affine_project(
        &self,
        x: &DVector<f64>,
        ys: &[DVector<f64>],
    ) -> (DVector<f64>, Vec<DVector<f64>>) {
        let mut rhs = x.clone();
        for (j, op) in self.ops.iter().enumerate() {
            rhs += op.transpose() * (&ys[j] - &self.k0_vecs[j]);
        }
        let xn = self.chol.solve(&rhs);
        let yn: Vec<DVector<f64>> =
            self.ops.iter().zip(&self.k0_vecs).map(|(op, k0)| op * &xn + k0).collect();
        (xn, yn)
    }

    /// Margins of a candidate X: per-block eigmin(W_j(X)) and eigmin(X).
    pub fn margins(&self, x: &DMatrix<C64>) -> (Vec<f64>, f64) {
        let per_block = self
            .blocks
            .iter()
            .map(|blk| {
                let w = blk.eval_complex(x);
                herm_eigen(&w, self.real).0.first().copied().unwrap_or(0.0)
            })
            .collect();
        let ex = herm_eigen(x, self.real).0.first().copied().unwrap_or(0.0);
        (per_block, ex)
    }

    /// Runs alternating projections for the targets
    /// W_j(X) >= w_floors[j] I, X >= x_floor I, trace control on X.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &self,
        w_floors: &[f64],
        x_floor: f64,
        trace: TraceMode,
        start: Option<&DMatrix<C64>>,
        max_iter: usize,
        gap_target: f64,
    ) -> ApRun {
        let dim_x = self.coords_x.dim();
        let mut x = match start {
            Some(x0) => self.coords_x.to_vec(x0),
            None => self.coords_x.to_vec(&DMatrix::<C64>::identity(self.coords_x.n, self.coords_x.n)),
        };
        let mut ys: Vec<DVector<f64>> =
            self.ops.iter().zip(&self.k0_vecs).map(|(op, k0)| op * &x + k0).collect();
        let mut best_gap = f64::INFINITY;
        let mut best_x = x.clone();
        let mut last_improvement = 0usize;
        let mut iterations = 0;
        let stall_window = 400;
        for it in 0..max_iter {
            iterations = it + 1;
            // cone projection
            let xm = self.coords_x.to_mat(&x);
            let (mut vals, vecs) = herm_eigen(&xm, self.real);
            project_eigs(&mut vals, x_floor, trace);
            let x_cone_mat = rebuild(&vals, &vecs);
            let x_cone = self.coords_x.to_vec(&x_cone_mat);
            let mut y_cones = Vec::with_capacity(ys.len());
            for (j, y) in ys.iter().enumerate() {
                let ym = self.coords_y[j].to_mat(y);
                let (mut vals, vecs) = herm_eigen(&ym, self.real);
                for v in vals.iter_mut() {
                    *v = v.max(w_floors[j]);
                }
                y_cones.push(self.coords_y[j].to_vec(&rebuild(&vals, &vecs)));
            }
            // affine projection
            let (xn, yn) = self.affine_project(&x_cone, &y_cones);
            let mut gap = (&xn - &x_cone).norm_squared();
            for (a, b) in yn.iter().zip(&y_cones) {
                gap += (a - b).norm_squared();
            }
            let gap = gap.sqrt();
            if gap < best_gap * 0.99 {
                best_gap = gap;
                best_x = x_cone;
                last_improvement = it;
            } else if gap < best_gap {
                best_gap = gap;
                best_x = x_cone;
            }
            if gap <= gap_target {
                return ApRun {
                    converged: true,
                    x: self.coords_x.to_mat(&best_x),
                    gap,
                    iterations,
                };
            }
            if it - last_improvement > stall_window && best_gap > 50.0 * gap_target {
                break;
            }
            x = xn;
            ys = yn;
        }
        let _ = dim_x;
        ApRun {
            converged: false,
            x: self.coords_x.to_mat(&best_x),
            gap: best_gap,
            iterations,
        }
    }

    /// Steepest-ascent polish on the smallest-margin function, keeping
    /// the X-cone constraints exact.
    pub fn polish(
        &self,
        x: &DMatrix<C64>,
        w_floors: &[f64],
        x_floor: f64,
        trace: TraceMode,
        steps: usize,
    ) -> DMatrix<C64> {
        let mut cur = x.clone();
        for _ in 0..steps {
            let (block_margins, x_margin) = self.margins(&cur);
            // identify the binding constraint
            let mut worst = x_margin - x_floor;
            let mut grad: Option<DMatrix<C64>> = None;
            for (j, blk) in self.blocks.iter().enumerate() {
                let m = block_margins[j] - w_floors[j];
                if m < worst {
                    worst = m;
                    let w = blk.eval_complex(&cur);
                    let (_, vecs) = herm_eigen(&w, self.real);
                    let v = vecs.column(0).into_owned();
                    let outer = &v * v.adjoint();
                    grad = Some(blk.lin.adjoint_complex(&outer));
                }
            }
            if worst >= 0.0 {
                break;
            }
            let dir = match grad {
                Some(g) => g,
                None => {
                    // X itself is binding: push along its bottom eigenvector
                    let (_, vecs) = herm_eigen(&cur, self.real);
                    let v = vecs.column(0).into_owned();
                    &v * v.adjoint()
                }
            };
            let dn = dir.norm();
            if dn < 1e-14 {
                break;
            }
            let step = (-worst) / (dn * dn);
            let candidate = &cur + dir.map(|z| z * step);
            // re-impose the X cone
            let (mut vals, vecs) = herm_eigen(&candidate, self.real);
            project_eigs(&mut vals, x_floor, trace);
            let projected = rebuild(&vals, &vecs);
            let (pb, px) = self.margins(&projected);
            let new_worst = pb
                .iter()
                .zip(w_floors)
                .map(|(m, f)| m - f)
                .fold(px - x_floor, f64::min);
            if new_worst > worst {
                cur = projected;
            } else {
                break;
            }
        }
        cur
    }
}
