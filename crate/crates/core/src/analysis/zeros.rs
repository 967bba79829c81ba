//! Invariant (transmission) zeros of `(A, B, C, D)`.
//!
//! The zeros are the finite values of `z` where the system pencil
//!
//! ```text
//! P(z) = [ A − zI  B ]
//!        [ C       D ]
//! ```
//!
//! loses rank. The pencil is first deflated with orthogonal
//! transformations until `D` is square and invertible (a row reduction
//! of the system, then the same reduction on its dual); the remaining
//! zeros are then the eigenvalues of `A − B D⁻¹ C`.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::lti::StateSpaceModel;

/// Relative tolerance for rank decisions, scaled by `‖[A B; C D]‖_F`.
const RANK_TOL: f64 = 1e-11;

/// Fixed probe points for the normal-rank test.
const PROBES: [(f64, f64); 3] = [(1.37, 0.71), (-0.53, 1.91), (2.9, -0.33)];

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    /// Finite zeros, sorted by magnitude (descending) then angle.
    pub zeros: Vec<C64>,
    /// Infinite eigenvalues of the (compressed, square) pencil.
    pub infinite_count: usize,
}

#[derive(Clone)]
struct System {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl System {
    fn dual(&self) -> Self {
        Self {
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
            d: self.d.transpose(),
        }
    }
}

/// Full orthogonal left factor and singular values of `m` (p×k).
fn full_left_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let p = m.nrows();
    // Zero padding makes the matrix wide, so the thin U is p×p.
    let mut padded = DMatrix::zeros(p, m.ncols() + p);
    padded.columns_mut(0, m.ncols()).copy_from(m);
    let svd = padded.svd(true, false);
    (
        svd.u.expect("u requested"),
        svd.singular_values.iter().copied().collect(),
    )
}

fn rank_above(sv: &[f64], tol: f64) -> usize {
    sv.iter().filter(|&&s| s > tol).count()
}

/// Deflates the system until `D` has full row rank; zeros are preserved.
fn reduce(mut sys: System, tol: f64) -> System {
    loop {
        let (p, n) = (sys.d.nrows(), sys.a.nrows());
        if p == 0 {
            return sys;
        }
        let (u, sv_d) = full_left_svd(&sys.d);
        let rho = rank_above(&sv_d, tol);
        if rho == p {
            return sys;
        }
        let ut = u.transpose();
        let c_rot = &ut * &sys.c;
        let d_rot = &ut * &sys.d;
        let c1 = c_rot.rows(0, rho).into_owned();
        let d1 = d_rot.rows(0, rho).into_owned();
        let c2 = c_rot.rows(rho, p - rho).into_owned();

        let sv_c2: Vec<f64> = if n == 0 {
            Vec::new()
        } else {
            c2.clone()
                .svd(false, false)
                .singular_values
                .iter()
                .copied()
                .collect()
        };
        let tau = rank_above(&sv_c2, tol);
        if tau == 0 {
            // Rows that vanish identically carry no rank information.
            sys.c = c1;
            sys.d = d1;
            continue;
        }

        // Right singular vectors of C2, null-space directions first, so
        // C2 V = [0, C22] with C22 of full column rank τ.
        let mut padded = DMatrix::zeros(c2.nrows() + n, n);
        padded.rows_mut(0, c2.nrows()).copy_from(&c2);
        let v_t = padded.svd(false, true).v_t.expect("v_t requested");
        let mut v = DMatrix::zeros(n, n);
        let k = n - tau;
        for j in 0..k {
            v.column_mut(j).copy_from(&v_t.row(tau + j).transpose());
        }
        for j in 0..tau {
            v.column_mut(k + j).copy_from(&v_t.row(j).transpose());
        }

        let a_bar = v.transpose() * &sys.a * &v;
        let b_bar = v.transpose() * &sys.b;
        let c1_bar = &c1 * &v;

        let m = sys.b.ncols();
        let mut c_new = DMatrix::zeros(tau + rho, k);
        c_new
            .rows_mut(0, tau)
            .copy_from(&a_bar.view((k, 0), (tau, k)));
        c_new.rows_mut(tau, rho).copy_from(&c1_bar.columns(0, k));
        let mut d_new = DMatrix::zeros(tau + rho, m);
        d_new.rows_mut(0, tau).copy_from(&b_bar.rows(k, tau));
        d_new.rows_mut(tau, rho).copy_from(&d1);

        sys = System {
            a: a_bar.view((0, 0), (k, k)).into_owned(),
            b: b_bar.rows(0, k).into_owned(),
            c: c_new,
            d: d_new,
        };
    }
}

/// True when `G(z)` has full normal rank `min(m, q)`.
fn has_full_normal_rank(model: &StateSpaceModel) -> bool {
    let k = model.n_inputs().min(model.n_outputs());
    if k == 0 {
        return false;
    }
    let scale = (model.a().norm() + 1.0).max(1.0);
    PROBES.iter().any(|&(re, im)| {
        let z = Complex::new(re * scale, im * scale);
        match model.transfer_at(z) {
            Some(g) => {
                let sv = linalg::complex_singular_values(&g);
                sv[0] > 0.0 && sv[k - 1] > 1e-13 * sv[0]
            }
            None => false,
        }
    })
}

pub fn transmission_zeros(model: &StateSpaceModel) -> Result<ZeroSet> {
    if !has_full_normal_rank(model) {
        return Err(Error::DegeneratePencil);
    }
    let (n, m, q) = (model.order(), model.n_inputs(), model.n_outputs());
    let mut s = DMatrix::zeros(n + q, n + m);
    s.view_mut((0, 0), (n, n)).copy_from(model.a());
    s.view_mut((0, n), (n, m)).copy_from(model.b());
    s.view_mut((n, 0), (q, n)).copy_from(model.c());
    s.view_mut((n, n), (q, m)).copy_from(model.d());
    let tol = RANK_TOL * s.norm().max(f64::MIN_POSITIVE);

    let sys = System {
        a: model.a().clone(),
        b: model.b().clone(),
        c: model.c().clone(),
        d: model.d().clone(),
    };
    let sys = reduce(sys, tol);
    let sys = reduce(sys.dual(), tol).dual();
    if sys.d.nrows() != sys.d.ncols() {
        return Err(Error::DegeneratePencil);
    }

    let mut zeros = if sys.a.nrows() == 0 {
        Vec::new()
    } else if sys.d.nrows() == 0 {
        linalg::eigenvalues(&sys.a)
    } else {
        let x = sys
            .d
            .clone()
            .lu()
            .solve(&sys.c)
            .ok_or(Error::DegeneratePencil)?;
        linalg::eigenvalues(&(&sys.a - &sys.b * x))
    };
    linalg::sort_complex(&mut zeros);
    let infinite_count = n + m.min(q) - zeros.len();
    Ok(ZeroSet {
        zeros,
        infinite_count,
    })
}
