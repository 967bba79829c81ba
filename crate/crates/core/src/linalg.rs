//! Small dense linear-algebra helpers shared by the identification and
//! analysis modules.

use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;

/// Eigenvalues of a real square matrix, with multiplicity.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<C64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.complex_eigenvalues().iter().copied().collect()
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orders complex numbers by magnitude (descending) then angle (ascending).
pub fn cmp_mag_desc_angle(a: &C64, b: &C64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then_with(|| a.arg().total_cmp(&b.arg()))
}

pub fn sort_complex(values: &mut [C64]) {
    values.sort_by(cmp_mag_desc_angle);
}

/// Result of pairing two complex multisets.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMatch {
    /// Matched `(reference, candidate)` pairs in matching order.
    pub pairs: Vec<(C64, C64)>,
    /// Largest distance over matched pairs (0 when nothing matched).
    pub max_error: f64,
    /// Entries left over on either side when the sets differ in size.
    pub unmatched: usize,
}

/// Greedy minimal-distance pairing of two complex multisets.
///
/// At each step the closest remaining pair is matched; ties are broken by
/// the reference value's magnitude, then its angle.
pub fn match_eigenvalues(reference: &[C64], candidate: &[C64]) -> EigenMatch {
    let mut left: Vec<C64> = reference.to_vec();
    let mut right: Vec<C64> = candidate.to_vec();
    sort_complex(&mut left);
    sort_complex(&mut right);
    let mut used_l = vec![false; left.len()];
    let mut used_r = vec![false; right.len()];
    let mut pairs = Vec::new();
    let mut max_error: f64 = 0.0;
    for _ in 0..left.len().min(right.len()) {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, l) in left.iter().enumerate() {
            if used_l[i] {
                continue;
            }
            for (j, r) in right.iter().enumerate() {
                if used_r[j] {
                    continue;
                }
                let d = (l - r).norm();
                let better = match best {
                    None => true,
                    Some((bd, bi, _)) => {
                        d < bd || (d == bd && cmp_mag_desc_angle(l, &left[bi]) == Ordering::Less)
                    }
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let (d, i, j) = best.expect("non-empty remaining sets");
        used_l[i] = true;
        used_r[j] = true;
        max_error = max_error.max(d);
        pairs.push((left[i], right[j]));
    }
    EigenMatch {
        pairs,
        max_error,
        unmatched: left.len().abs_diff(right.len()),
    }
}

/// Singular values of a complex matrix, descending.
pub fn complex_singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Sum of squares of the off-diagonal entries over sum of squares of the
/// diagonal, both square-rooted.
pub fn off_diagonal_ratio(m: &DMatrix<f64>) -> f64 {
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)] * m[(i, j)];
            if i == j {
                diag += v;
            } else {
                off += v;
            }
        }
    }
    (off / diag).sqrt()
}

/// Moore-Penrose pseudo-inverse via SVD with relative cutoff `rcond · σ₁`.
/// Returns the inverse and the full singular-value spectrum.
pub fn pseudo_inverse(m: &DMatrix<f64>, rcond: f64) -> (DMatrix<f64>, Vec<f64>) {
    let svd = m.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut pinv = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in sv.iter().enumerate() {
        if s > rcond * smax && s > 0.0 {
            pinv += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    (pinv, sv)
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != 0.0 {
                out.view_mut((i * br, j * bc), (br, bc))
                    .copy_from(&(b * aij));
            }
        }
    }
    out
}

pub(crate) fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let mut ev = eigenvalues(&a);
        sort_complex(&mut ev);
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn greedy_matching_pairs_nearest() {
        let a = [C64::new(0.5, 0.0), C64::new(-0.25, 0.0)];
        let b = [C64::new(-0.2501, 0.0), C64::new(0.5002, 0.0)];
        let m = match_eigenvalues(&a, &b);
        assert_eq!(m.unmatched, 0);
        assert!((m.max_error - 2e-4).abs() < 1e-12);
    }

    #[test]
    fn matching_reports_size_difference() {
        let a = [C64::new(0.5, 0.0), C64::new(0.1, 0.0)];
        let b = [C64::new(0.5, 0.0)];
        let m = match_eigenvalues(&a, &b);
        assert_eq!(m.unmatched, 1);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.max_error, 0.0);
    }

    #[test]
    fn pseudo_inverse_of_rank_one() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.25]);
        let (p, sv) = pseudo_inverse(&m, 1e-10);
        assert!((sv[0] - 1.25).abs() < 1e-14);
        let back = &m * &p * &m;
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn kron_shape_and_values() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let k = kron(&a, &b);
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[3.0, 6.0, 4.0, 8.0]));
    }
}
