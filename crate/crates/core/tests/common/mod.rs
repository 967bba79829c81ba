//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's identification or analysis code paths.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use okid_era::StateSpaceModel;

pub type C64 = Complex<f64>;

/// `Y_0 = D`, `Y_k = C A^{k−1} B`, by repeated multiplication.
pub fn markov_oracle(model: &StateSpaceModel, count: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(model.d().clone());
    let mut ak_b = model.b().clone();
    for _ in 1..count {
        out.push(model.c() * &ak_b);
        ak_b = model.a() * ak_b;
    }
    out
}

/// Block Hankel matrix `H[i][j] = Y_{i+j+1+shift}` for `i, j < s`.
pub fn hankel_oracle(y: &[DMatrix<f64>], s: usize, shift: usize) -> DMatrix<f64> {
    let (q, m) = y[0].shape();
    let mut h = DMatrix::zeros(s * q, s * m);
    for i in 0..s {
        for j in 0..s {
            h.view_mut((i * q, j * m), (q, m))
                .copy_from(&y[i + j + 1 + shift]);
        }
    }
    h
}

/// `‖Σ ΔY‖_F / ‖Σ Y‖_F` over the stacked blocks.
pub fn stacked_relative_error(a: &[DMatrix<f64>], reference: &[DMatrix<f64>]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(reference)
        .map(|(x, r)| (x - r).norm_squared())
        .sum();
    let den: f64 = reference.iter().map(|r| r.norm_squared()).sum();
    (num / den).sqrt()
}

/// Smallest achievable maximum pairing distance between two small
/// multisets, by exhaustive search over permutations (n ≤ 10).
pub fn optimal_match_error(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut best = f64::INFINITY;
    let mut used = vec![false; n];
    fn rec(i: usize, a: &[C64], b: &[C64], used: &mut [bool], cur: f64, best: &mut f64) {
        if cur >= *best {
            return;
        }
        if i == a.len() {
            *best = cur;
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                rec(i + 1, a, b, used, cur.max((a[i] - b[j]).norm()), best);
                used[j] = false;
            }
        }
    }
    rec(0, a, b, &mut used, 0.0, &mut best);
    best
}

/// Complex Gaussian elimination with partial pivoting: solves `M X = R`.
pub fn complex_solve(m: &DMatrix<C64>, r: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut x = r.clone();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap();
        a.swap_rows(col, piv);
        x.swap_rows(col, piv);
        for row in col + 1..n {
            let f = a[(row, col)] / a[(col, col)];
            for k in col..n {
                let v = a[(col, k)];
                a[(row, k)] -= f * v;
            }
            for k in 0..x.ncols() {
                let v = x[(col, k)];
                x[(row, k)] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..x.ncols() {
            let mut acc = x[(col, k)];
            for j in col + 1..n {
                acc -= a[(col, j)] * x[(j, k)];
            }
            x[(col, k)] = acc / a[(col, col)];
        }
    }
    x
}

/// `G(e^{iωdt}) = C (zI − A)⁻¹ B + D` evaluated explicitly.
pub fn transfer_oracle(model: &StateSpaceModel, omega: f64) -> DMatrix<C64> {
    let z = C64::from_polar(1.0, omega * model.dt());
    let n = model.order();
    let to_c = |m: &DMatrix<f64>| m.map(|v| C64::new(v, 0.0));
    let mut zi_a = -to_c(model.a());
    for i in 0..n {
        zi_a[(i, i)] += z;
    }
    let x = complex_solve(&zi_a, &to_c(model.b()));
    to_c(model.c()) * x + to_c(model.d())
}

/// Condition number through the real embedding `[[Re, −Im], [Im, Re]]`,
/// whose singular values are those of `G`, each repeated twice.
pub fn cond_oracle(g: &DMatrix<C64>) -> f64 {
    let (r, c) = g.shape();
    let mut e = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let v = g[(i, j)];
            e[(i, j)] = v.re;
            e[(i, j + c)] = -v.im;
            e[(i + r, j)] = v.im;
            e[(i + r, j + c)] = v.re;
        }
    }
    let sv = e.svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Coefficients (highest degree first, monic) of `det(zI − A)` and of the
/// numerator `C adj(zI − A) B + D det(zI − A)` for a SISO model, via the
/// Leverrier–Faddeev recursion.
pub fn leverrier_faddeev(model: &StateSpaceModel) -> (Vec<f64>, Vec<f64>) {
    let n = model.order();
    let a = model.a();
    let b = model.b();
    let c = model.c();
    let d = model.d()[(0, 0)];
    // adj(zI − A) = Σ_{k=0}^{n−1} N_k z^{n−1−k}, N_0 = I,
    // c_k = −tr(A N_{k−1}) / k, N_k = A N_{k−1} + c_k I.
    let mut coeffs = vec![1.0];
    let mut nk = DMatrix::<f64>::identity(n, n);
    let mut num = vec![0.0; n + 1];
    num[0] = d;
    for k in 1..=n {
        num[k] += (c * &nk * b)[(0, 0)];
        let an = a * &nk;
        let ck = -an.trace() / k as f64;
        coeffs.push(ck);
        nk = an + DMatrix::identity(n, n) * ck;
        num[k] += d * ck;
    }
    (coeffs, num)
}

/// Roots of a polynomial (highest degree first) as companion-matrix
/// eigenvalues. Leading zeros are stripped.
pub fn poly_roots(p: &[f64]) -> Vec<C64> {
    let first = p.iter().position(|v| v.abs() > 1e-12).unwrap_or(p.len());
    let p = &p[first..];
    if p.len() <= 1 {
        return Vec::new();
    }
    let deg = p.len() - 1;
    let mut comp = DMatrix::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    comp.complex_eigenvalues().iter().copied().collect()
}
