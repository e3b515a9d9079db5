//! Velocity-space collision operators and their implicit-in-time solves.
//!
//! Two linear operators, both acting cell-by-cell in velocity only:
//!
//! * relaxation: `L1 f = <f> - f`, which damps the fluctuation at unit rate
//!   and leaves the velocity average untouched;
//! * drift-diffusion: `L2 f = mu^{-1} d_v(mu d_v f)` in conservative flux
//!   form with face diffusivities `mu(v_{j+1/2})` and zero flux through the
//!   velocity cutoff, so the discrete collision invariant (mass) telescopes
//!   and the quadratic form `(L2 f, f)` is a negative sum of squares.
//!
//! Both operators vanish on constants, conserve the per-cell mean, and are
//! dissipative in the weighted norm — the three structural facts the decay
//! estimates rest on. The stiff factor `1/eps^2` multiplying collisions in
//! the evolution equation is handled by the implicit step `(I - nu L) g = f`
//! with `nu = dt/eps^2`: closed form for relaxation, one reusable
//! tridiagonal factorization for drift-diffusion (the matrix is the same in
//! every spatial cell).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::fields::{moment0, DistributionField};
use crate::grids::{Domain, VelocityGrid};
use crate::tridiag::{Tridiagonal, TridiagonalFactor};

/// Which collision operator drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionKind {
    /// Relaxation toward the velocity average at unit rate.
    Bgk,
    /// Drift-diffusion in velocity (Ornstein-Uhlenbeck generator).
    FokkerPlanck,
}

/// `L1 f = <f> - f`.
pub fn apply_bgk(f: &DistributionField, domain: &Domain) -> DistributionField {
    let mean = moment0(f, domain);
    let mut out = f.clone();
    for i in 0..domain.n_x() {
        let c = mean.values()[i];
        for j in 0..domain.n_v() {
            let k = domain.idx(i, j);
            out.values_mut()[k] = c - f.values()[k];
        }
    }
    out
}

/// Interior face flux coefficients `mu(v_{k}) / dv` for `k = 1..N_v-1`
/// (faces between adjacent nodes), zero at both cutoff faces.
fn fp_face_coeffs(grid: &VelocityGrid) -> Vec<f64> {
    let n_v = grid.len();
    let mut c = vec![0.0; n_v + 1];
    for k in 1..n_v {
        c[k] = grid.maxwellian_face(k) / grid.dv();
    }
    c
}

/// `L2 f` in flux form: `(G_{j+1} - G_j) / w_j` with
/// `G_k = mu(face_k) (f_k - f_{k-1}) / dv`.
pub fn apply_fp(f: &DistributionField, domain: &Domain) -> DistributionField {
    let grid = domain.velocity();
    let n_v = grid.len();
    let face = fp_face_coeffs(grid);
    let mut out = f.clone();
    for i in 0..domain.n_x() {
        let row = i * n_v;
        let cell = &f.values()[row..row + n_v];
        let mut flux = vec![0.0; n_v + 1];
        for k in 1..n_v {
            flux[k] = face[k] * (cell[k] - cell[k - 1]);
        }
        for j in 0..n_v {
            out.values_mut()[row + j] = (flux[j + 1] - flux[j]) / grid.weight(j);
        }
    }
    out
}

/// Apply the selected operator.
pub fn apply(kind: CollisionKind, f: &DistributionField, domain: &Domain) -> DistributionField {
    match kind {
        CollisionKind::Bgk => apply_bgk(f, domain),
        CollisionKind::FokkerPlanck => apply_fp(f, domain),
    }
}

/// Quadratic form `(L f, f)` against the weighted measure, evaluated in the
/// form that is manifestly non-positive: `-||fperp||^2` for relaxation, and
/// `-sum_faces mu (df)^2 / dv` summed over cells for drift-diffusion.
pub fn dissipation_form(kind: CollisionKind, f: &DistributionField, domain: &Domain) -> f64 {
    match kind {
        CollisionKind::Bgk => {
            let p = crate::fields::perp(f, domain);
            -domain.inner_dm(p.values(), p.values())
        }
        CollisionKind::FokkerPlanck => {
            let grid = domain.velocity();
            let n_v = grid.len();
            let face = fp_face_coeffs(grid);
            let z = grid.z();
            let mut acc = 0.0;
            for i in 0..domain.n_x() {
                let row = i * n_v;
                let cell = &f.values()[row..row + n_v];
                let wx = domain.measure().x_cell(i) / z;
                let mut cell_acc = 0.0;
                for k in 1..n_v {
                    let df = cell[k] - cell[k - 1];
                    cell_acc += face[k] * df * df;
                }
                acc -= wx * cell_acc;
            }
            acc
        }
    }
}

/// The implicit collision step `(I - nu L) g = f` with `nu = dt / eps^2`,
/// prefactored so repeated steps cost one substitution sweep per cell.
#[derive(Debug, Clone)]
pub struct ImplicitCollision {
    kind: CollisionKind,
    nu: f64,
    fp_factor: Option<TridiagonalFactor>,
}

impl ImplicitCollision {
    pub fn new(kind: CollisionKind, nu: f64, grid: &VelocityGrid) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(CoreError::config("implicit collision step needs nu > 0"));
        }
        let fp_factor = match kind {
            CollisionKind::Bgk => None,
            CollisionKind::FokkerPlanck => {
                let n_v = grid.len();
                let face = fp_face_coeffs(grid);
                let mut a = Tridiagonal::zeros(n_v);
                for j in 0..n_v {
                    let w = grid.weight(j);
                    a.diag[j] = 1.0 + nu * (face[j] + face[j + 1]) / w;
                    if j > 0 {
                        a.sub[j] = -nu * face[j] / w;
                    }
                    if j + 1 < n_v {
                        a.sup[j] = -nu * face[j + 1] / w;
                    }
                }
                Some(a.factor()?)
            }
        };
        Ok(ImplicitCollision {
            kind,
            nu,
            fp_factor,
        })
    }

    #[inline]
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Solve `(I - nu L) g = f` for every spatial cell.
    pub fn solve(&self, f: &DistributionField, domain: &Domain) -> Result<DistributionField> {
        f.check_finite()?;
        let n_v = domain.n_v();
        let mut out = f.clone();
        match self.kind {
            CollisionKind::Bgk => {
                let mean = moment0(f, domain);
                let damp = 1.0 / (1.0 + self.nu);
                for i in 0..domain.n_x() {
                    let c = mean.values()[i];
                    for j in 0..n_v {
                        let k = domain.idx(i, j);
                        out.values_mut()[k] = c + (f.values()[k] - c) * damp;
                    }
                }
            }
            CollisionKind::FokkerPlanck => {
                let factor = self.fp_factor.as_ref().expect("factor built with kind");
                for i in 0..domain.n_x() {
                    let row = i * n_v;
                    factor.solve_in_place(&mut out.values_mut()[row..row + n_v]);
                }
            }
        }
        Ok(out)
    }
}
