//! Transmission zeros against independent oracles: transfer-function
//! numerators from the Leverrier–Faddeev recursion for SISO systems, and
//! hand-derived zeros for small square systems.

mod common;

use common::*;
use nalgebra::DMatrix;
use okid_era::analysis::transmission_zeros;
use okid_era::{Error, StateSpaceModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_siso(rng: &mut ChaCha8Rng, n: usize, d: f64) -> StateSpaceModel {
    let mut normal =
        |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut *rng));
    let a = normal(n, n) * (0.9 / (n as f64).sqrt());
    StateSpaceModel::new(
        a,
        normal(n, 1),
        normal(1, n),
        DMatrix::from_element(1, 1, d),
        1.0,
    )
    .unwrap()
}

#[test]
fn siso_zeros_match_leverrier_faddeev_numerator() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..60 {
        let n = 1 + case % 6;
        let d = match case % 3 {
            0 => 0.0,
            _ => rng.random_range(0.5..2.0),
        };
        let model = random_siso(&mut rng, n, d);
        let (_, num) = leverrier_faddeev(&model);
        let expected = poly_roots(&num);
        let got = transmission_zeros(&model).unwrap();
        assert_eq!(
            got.zeros.len(),
            expected.len(),
            "case {case} n={n} d={d}: {:?} vs {expected:?} num {num:?}",
            got.zeros
        );
        // The Rosenbrock pencil has n + 1 generalized eigenvalues in total.
        assert_eq!(got.infinite_count, n + 1 - expected.len());
        let scale = expected.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let err = optimal_match_error(&expected, &got.zeros);
        assert!(err <= 1e-8 * scale, "case {case}: zero error {err}");
    }
}

#[test]
fn characteristic_polynomial_oracle_matches_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = random_siso(&mut rng, 5, 1.0);
    let (den, _) = leverrier_faddeev(&model);
    let roots = poly_roots(&den);
    let eig: Vec<C64> = model.a().complex_eigenvalues().iter().copied().collect();
    assert!(optimal_match_error(&roots, &eig) < 1e-9);
}

#[test]
fn decoupled_square_system_unions_siso_zeros() {
    // diag((z − 0.2)/(z − 0.6), (z + 0.7)/(z − 0.1)):
    // first channel D = 1, C B = 0.4; second D = 1, C B = 0.8.
    let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.0, 0.1]);
    let b = DMatrix::from_row_slice(2, 2, &[0.4, 0.0, 0.0, 0.8]);
    let model =
        StateSpaceModel::new(a, b, DMatrix::identity(2, 2), DMatrix::identity(2, 2), 1.0).unwrap();
    let got = transmission_zeros(&model).unwrap();
    let expected = [C64::new(0.2, 0.0), C64::new(-0.7, 0.0)];
    assert!(optimal_match_error(&expected, &got.zeros) < 1e-12);
}

#[test]
fn strictly_proper_square_system_counts_infinite_zeros() {
    // G(z) = C (zI − A)⁻¹ B with C = B = I has no finite zeros.
    let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, -0.4]);
    let model = StateSpaceModel::new(
        a,
        DMatrix::identity(2, 2),
        DMatrix::identity(2, 2),
        DMatrix::zeros(2, 2),
        1.0,
    )
    .unwrap();
    let got = transmission_zeros(&model).unwrap();
    assert!(got.zeros.is_empty());
    assert_eq!(got.infinite_count, 4);
}

#[test]
fn identically_singular_pencil_is_reported() {
    // Both outputs measure the same state: G has normal rank 1.
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.3]);
    let b = DMatrix::identity(2, 2);
    let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
    let model = StateSpaceModel::new(a, b, c, DMatrix::zeros(2, 2), 1.0).unwrap();
    assert!(matches!(
        transmission_zeros(&model),
        Err(Error::DegeneratePencil)
    ));
}
