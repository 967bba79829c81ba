//! Discrete-time LTI state-space models.
//!
//! ```text
//! x[k+1] = A x[k] + B u[k]
//! y[k]   = C x[k] + D u[k]
//! ```
//!
//! Models serialize to JSON with fields `dt`, `A`, `B`, `C`, `D` stored as
//! row-major nested arrays, optionally with channel names.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Above this state dimension the Lyapunov solve switches from the
/// Kronecker system to the doubling iteration.
pub const KRONECKER_MAX_ORDER: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    dt: f64,
    input_names: Option<Vec<String>>,
    output_names: Option<Vec<String>>,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}×{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "B is {}×{} and C is {}×{} for n = {n}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "D is {}×{}, expected {}×{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample period must be positive, got {dt}"
            )));
        }
        let finite = [&a, &b, &c, &d]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Numerical("model contains non-finite entries".into()));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            dt,
            input_names: None,
            output_names: None,
        })
    }

    pub fn with_channel_names(mut self, inputs: Vec<String>, outputs: Vec<String>) -> Result<Self> {
        if inputs.len() != self.n_inputs() || outputs.len() != self.n_outputs() {
            return Err(Error::DimensionMismatch(
                "channel names do not match model dimensions".into(),
            ));
        }
        self.input_names = Some(inputs);
        self.output_names = Some(outputs);
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn input_names(&self) -> Option<&[String]> {
        self.input_names.as_deref()
    }
    pub fn output_names(&self) -> Option<&[String]> {
        self.output_names.as_deref()
    }

    /// Applies the state transform `x = T x̃`: `(T⁻¹AT, T⁻¹B, CT, D)`.
    pub fn similarity_transform(&self, t: &DMatrix<f64>) -> Result<Self> {
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("similarity transform is singular".into()))?;
        let mut out = Self::new(
            &t_inv * &self.a * t,
            &t_inv * &self.b,
            &self.c * t,
            self.d.clone(),
            self.dt,
        )?;
        out.input_names = self.input_names.clone();
        out.output_names = self.output_names.clone();
        Ok(out)
    }

    /// Transfer matrix `C (zI − A)⁻¹ B + D` at a complex point, or `None`
    /// when `zI − A` is singular.
    pub fn transfer_at(&self, z: C64) -> Option<DMatrix<C64>> {
        let n = self.order();
        let d = linalg::to_complex(&self.d);
        if n == 0 {
            return Some(d);
        }
        let zi_a = DMatrix::<C64>::from_fn(n, n, |i, j| {
            let diag = if i == j { z } else { C64::new(0.0, 0.0) };
            diag - C64::new(self.a[(i, j)], 0.0)
        });
        let x = zi_a.lu().solve(&linalg::to_complex(&self.b))?;
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return None;
        }
        Some(linalg::to_complex(&self.c) * x + d)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    dt: f64,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_names: Option<Vec<String>>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    name: &str,
) -> std::result::Result<DMatrix<f64>, String> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(format!("matrix {name} is not {nrows}×{ncols}"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl Serialize for StateSpaceModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelJson {
            dt: self.dt,
            a: to_rows(&self.a),
            b: to_rows(&self.b),
            c: to_rows(&self.c),
            d: to_rows(&self.d),
            input_names: self.input_names.clone(),
            output_names: self.output_names.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateSpaceModel {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = ModelJson::deserialize(de)?;
        let n = j.a.len();
        let q = j.d.len();
        let m = match (j.d.first(), j.b.first()) {
            (Some(r), _) => r.len(),
            (None, Some(r)) => r.len(),
            (None, None) => 0,
        };
        let a = from_rows(&j.a, n, n, "A").map_err(D::Error::custom)?;
        let b = from_rows(&j.b, n, m, "B").map_err(D::Error::custom)?;
        let c = if n == 0 {
            DMatrix::zeros(q, 0)
        } else {
            from_rows(&j.c, q, n, "C").map_err(D::Error::custom)?
        };
        let d = from_rows(&j.d, q, m, "D").map_err(D::Error::custom)?;
        let mut model = StateSpaceModel::new(a, b, c, d, j.dt).map_err(D::Error::custom)?;
        if let (Some(i), Some(o)) = (j.input_names, j.output_names) {
            model = model.with_channel_names(i, o).map_err(D::Error::custom)?;
        }
        Ok(model)
    }
}

/// Impulse-response blocks `Y_0 = D`, `Y_k = C A^{k−1} B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSequence {
    blocks: Vec<DMatrix<f64>>,
    dt: f64,
}

impl MarkovSequence {
    pub fn new(blocks: Vec<DMatrix<f64>>, dt: f64) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InsufficientData("empty Markov sequence".into()))?;
        let shape = first.shape();
        if let Some(k) = blocks.iter().position(|b| b.shape() != shape) {
            return Err(Error::DimensionMismatch(format!(
                "Markov block {k} is {:?}, expected {shape:?}",
                blocks[k].shape()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample period must be positive, got {dt}"
            )));
        }
        Ok(Self { blocks, dt })
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    /// Number of blocks, `M + 1`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
    /// Highest block index `M`.
    pub fn horizon(&self) -> usize {
        self.blocks.len() - 1
    }
    pub fn n_outputs(&self) -> usize {
        self.blocks[0].nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.blocks[0].ncols()
    }

    /// Keeps the first `count` blocks.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.blocks.len() {
            return Err(Error::InsufficientData(format!(
                "cannot keep {count} of {} blocks",
                self.blocks.len()
            )));
        }
        Self::new(self.blocks[..count].to_vec(), self.dt)
    }

    /// `‖Y − Y_ref‖_F / ‖Y_ref‖_F` over blocks `range`.
    pub fn relative_error(&self, reference: &Self, range: std::ops::Range<usize>) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in range {
            num += (&self.blocks[k] - &reference.blocks[k]).norm_squared();
            den += reference.blocks[k].norm_squared();
        }
        (num / den).sqrt()
    }
}

/// Simulates the model. `u` is samples × inputs; returns samples × outputs.
pub fn simulate(
    model: &StateSpaceModel,
    u: &DMatrix<f64>,
    x0: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    if u.ncols() != model.n_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channels, model expects {}",
            u.ncols(),
            model.n_inputs()
        )));
    }
    if x0.len() != model.order() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, model order is {}",
            x0.len(),
            model.order()
        )));
    }
    let mut y = DMatrix::zeros(u.nrows(), model.n_outputs());
    let mut x = x0.clone();
    for k in 0..u.nrows() {
        let uk = u.row(k).transpose();
        let yk = model.c() * &x + model.d() * &uk;
        y.row_mut(k).copy_from(&yk.transpose());
        x = model.a() * &x + model.b() * &uk;
    }
    Ok(y)
}

/// Simulation from rest.
pub fn simulate_from_rest(model: &StateSpaceModel, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    simulate(model, u, &DVector::zeros(model.order()))
}

/// `[D, CB, CAB, CA²B, …]`, `count` blocks.
pub fn markov_from_model(model: &StateSpaceModel, count: usize) -> Result<MarkovSequence> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "Markov block count must be ≥ 1".into(),
        ));
    }
    let mut blocks = Vec::with_capacity(count);
    blocks.push(model.d().clone());
    let mut ak_b = model.b().clone();
    for _ in 1..count {
        blocks.push(model.c() * &ak_b);
        ak_b = model.a() * ak_b;
    }
    MarkovSequence::new(blocks, model.dt())
}

/// Controllability and observability Gramians of a stable model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gramians {
    pub controllability: DMatrix<f64>,
    pub observability: DMatrix<f64>,
}

impl Gramians {
    /// `‖Wc − Wo‖_F / ‖Wc‖_F`.
    pub fn mismatch(&self) -> f64 {
        (&self.controllability - &self.observability).norm() / self.controllability.norm()
    }

    /// Largest off-diagonal-to-diagonal Frobenius ratio of the two Gramians.
    pub fn off_diagonal_ratio(&self) -> f64 {
        linalg::off_diagonal_ratio(&self.controllability)
            .max(linalg::off_diagonal_ratio(&self.observability))
    }
}

/// Solves `A W Aᵀ − W + Q = 0` for stable `A`.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let rho = linalg::spectral_radius(a);
    if rho >= 1.0 {
        return Err(Error::UnstableSystem {
            spectral_radius: rho,
        });
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let w = if n <= KRONECKER_MAX_ORDER {
        // vec(A W Aᵀ) = (A ⊗ A) vec(W)
        let lhs = DMatrix::identity(n * n, n * n) - linalg::kron(a, a);
        let rhs = DVector::from_column_slice(q.as_slice());
        let vec_w = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("Lyapunov system is singular".into()))?;
        DMatrix::from_column_slice(n, n, vec_w.as_slice())
    } else {
        lyapunov_doubling(a, q)
    };
    // Symmetrize away round-off.
    Ok((&w + w.transpose()) * 0.5)
}

fn lyapunov_doubling(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut ak = a.clone();
    let mut w = q.clone();
    for _ in 0..200 {
        let step = &ak * &w * ak.transpose();
        w += &step;
        ak = &ak * &ak;
        if step.norm() <= f64::EPSILON * w.norm() || ak.norm() < 1e-300 {
            break;
        }
    }
    w
}

/// Infinite-horizon Gramians: `A Wc Aᵀ − Wc + BBᵀ = 0`, `Aᵀ Wo A − Wo + CᵀC = 0`.
pub fn gramians(model: &StateSpaceModel) -> Result<Gramians> {
    let a = model.a();
    let bbt = model.b() * model.b().transpose();
    let ctc = model.c().transpose() * model.c();
    Ok(Gramians {
        controllability: solve_discrete_lyapunov(a, &bbt)?,
        observability: solve_discrete_lyapunov(&a.transpose(), &ctc)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, c: f64, d: f64) -> StateSpaceModel {
        let m = |v| DMatrix::from_element(1, 1, v);
        StateSpaceModel::new(m(a), m(b), m(c), m(d), 1.0).unwrap()
    }

    #[test]
    fn one_step_delay() {
        let y = simulate_from_rest(
            &scalar(0.0, 1.0, 1.0, 0.0),
            &DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(y.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn geometric_impulse_response() {
        let mut u = DMatrix::zeros(6, 1);
        u[0] = 1.0;
        let y = simulate_from_rest(&scalar(0.5, 1.0, 1.0, 0.0), &u).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 1.0, 0.5, 0.25, 0.125, 0.0625]);
        let mk = markov_from_model(&scalar(0.5, 1.0, 1.0, 0.0), 4).unwrap();
        let vals: Vec<f64> = mk.blocks().iter().map(|b| b[0]).collect();
        assert_eq!(vals, [0.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn feedthrough_only_markov() {
        let m = StateSpaceModel::new(
            DMatrix::from_element(2, 2, 0.3),
            DMatrix::zeros(2, 2),
            DMatrix::from_element(2, 2, 1.0),
            DMatrix::identity(2, 2),
            1.0,
        )
        .unwrap();
        let mk = markov_from_model(&m, 4).unwrap();
        assert_eq!(mk.blocks()[0], DMatrix::identity(2, 2));
        assert!(mk.blocks()[1..].iter().all(|b| b.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let m = scalar(0.9, 2.0, 3.0, 4.0);
        let y = simulate_from_rest(&m, &DMatrix::zeros(10, 1)).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_errors() {
        let m = scalar(0.5, 1.0, 1.0, 0.0);
        assert!(matches!(
            simulate_from_rest(&m, &DMatrix::zeros(3, 2)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(simulate(&m, &DMatrix::zeros(3, 1), &DVector::zeros(2)).is_err());
        assert!(StateSpaceModel::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 1),
            1.0
        )
        .is_err());
        assert!(StateSpaceModel::new(
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            0.0
        )
        .is_err());
    }

    #[test]
    fn scalar_gramians_closed_form() {
        let g = gramians(&scalar(0.5, 1.0, 1.0, 0.0)).unwrap();
        assert!((g.controllability[0] - 4.0 / 3.0).abs() < 1e-14);
        assert!((g.observability[0] - 4.0 / 3.0).abs() < 1e-14);
        let g = gramians(&scalar(0.5, 0.0, 1.0, 0.0)).unwrap();
        assert_eq!(g.controllability[0], 0.0);
    }

    #[test]
    fn unstable_gramians_rejected() {
        assert!(matches!(
            gramians(&scalar(1.0, 1.0, 1.0, 0.0)),
            Err(Error::UnstableSystem { .. })
        ));
    }

    #[test]
    fn doubling_agrees_with_kronecker() {
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.05 - 0.1);
        let q = DMatrix::from_fn(5, 5, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 });
        let q = &q * q.transpose();
        let direct = solve_discrete_lyapunov(&a, &q).unwrap();
        let doubled = lyapunov_doubling(&a, &q);
        assert!((&direct - &doubled).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn json_round_trip_and_layout() {
        let m = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]),
            DMatrix::from_row_slice(2, 1, &[1.0, 2.0]),
            DMatrix::from_row_slice(1, 2, &[3.0, 4.0]),
            DMatrix::from_row_slice(1, 1, &[5.0]),
            0.5,
        )
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"dt":0.5,"A":[[0.1,0.2],[0.3,0.4]],"B":[[1.0],[2.0]],"C":[[3.0,4.0]],"D":[[5.0]]}"#
        );
        let back: StateSpaceModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"dt":0.5,"A":[[0.1,0.2]],"B":[[1.0]],"C":[[3.0]],"D":[[5.0]]}"#;
        assert!(serde_json::from_str::<StateSpaceModel>(bad).is_err());
    }

    #[test]
    fn zero_order_model_json() {
        let m = StateSpaceModel::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, 2),
            DMatrix::zeros(2, 0),
            DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 0.1]),
            1.0,
        )
        .unwrap();
        let back: StateSpaceModel =
            serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
