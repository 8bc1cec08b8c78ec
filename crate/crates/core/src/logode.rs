//! Log-ODE method for controlled differential equations `dy = Σᵢ Vᵢ(y) dγⁱ`.
//!
//! On each step the truncated log-signature of the driver is expanded in the
//! Lyndon basis, mapped to a single autonomous vector field through the Lie
//! extension of `eᵢ ↦ Vᵢ`, and that field is integrated for unit time.
//!
//! Bracket convention: `[X, Y](y) = DY(y)·X(y) − DX(y)·Y(y)`. For linear
//! fields `Vᵢ(y) = Aᵢy` this sends `[e₁,e₂]` to `(A₂A₁ − A₁A₂)y`, which is the
//! ordering under which the log-ODE step reproduces the exact solution
//! `y_T = (Σ_w ⟨w,S⟩ A_{w_k}⋯A_{w_1}) y₀` of the linear equation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{Bracket, LieCoordinates};
use crate::streams::{log_signature, Stream};
use crate::tensor::TruncatedTensor;

/// A linear map from the driver space into vector fields on ℝᵐ.
pub trait VectorFieldSystem: Sync {
    fn state_dim(&self) -> usize;

    fn driver_dim(&self) -> usize;

    /// Number of derivatives available; brackets of degree `k` need `k − 1`.
    fn smoothness(&self) -> usize;

    /// `Vᵢ(y)` for the 0-based driver coordinate `i`.
    fn field(&self, i: usize, y: &[f64]) -> Vec<f64>;

    /// Row-major `m × m` Jacobian of `Vᵢ` at `y`.
    fn jacobian(&self, i: usize, y: &[f64]) -> Vec<f64>;
}

type FieldFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Vector field system assembled from closures.
pub struct FieldSystem {
    state_dim: usize,
    smoothness: usize,
    fields: Vec<FieldFn>,
    jacobians: Vec<FieldFn>,
}

impl FieldSystem {
    /// Registers fields and Jacobians, checking the Jacobians against central
    /// finite differences of the fields at every sample point.
    pub fn register(
        state_dim: usize,
        smoothness: usize,
        fields: Vec<FieldFn>,
        jacobians: Vec<FieldFn>,
        sample_points: &[Vec<f64>],
    ) -> Result<Self> {
        if fields.is_empty() || fields.len() != jacobians.len() {
            return Err(Error::InvalidInput("need one Jacobian per vector field".into()));
        }
        let sys = FieldSystem {
            state_dim,
            smoothness,
            fields,
            jacobians,
        };
        validate_system(&sys, sample_points, 1e-5)?;
        Ok(sys)
    }
}

impl VectorFieldSystem for FieldSystem {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn driver_dim(&self) -> usize {
        self.fields.len()
    }

    fn smoothness(&self) -> usize {
        self.smoothness
    }

    fn field(&self, i: usize, y: &[f64]) -> Vec<f64> {
        (self.fields[i])(y)
    }

    fn jacobian(&self, i: usize, y: &[f64]) -> Vec<f64> {
        (self.jacobians[i])(y)
    }
}

/// Checks finiteness and compares Jacobians with central differences.
pub fn validate_system(sys: &dyn VectorFieldSystem, points: &[Vec<f64>], tol: f64) -> Result<()> {
    let m = sys.state_dim();
    for y in points {
        if y.len() != m {
            return Err(Error::DimensionMismatch(format!("sample point of length {} for state dimension {m}", y.len())));
        }
        for i in 0..sys.driver_dim() {
            let v = sys.field(i, y);
            let jac = sys.jacobian(i, y);
            if v.len() != m || jac.len() != m * m {
                return Err(Error::DimensionMismatch(format!("field {i} returns wrong sizes")));
            }
            if v.iter().chain(&jac).any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("field {i} is not finite at {y:?}")));
            }
            let scale = jac.iter().fold(1.0f64, |s, x| s.max(x.abs()));
            for col in 0..m {
                let h = 1e-6 * (1.0 + y[col].abs());
                let mut plus = y.clone();
                let mut minus = y.clone();
                plus[col] += h;
                minus[col] -= h;
                let (fp, fm) = (sys.field(i, &plus), sys.field(i, &minus));
                for row in 0..m {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    if (fd - jac[row * m + col]).abs() > tol * scale {
                        return Err(Error::InvalidInput(format!(
                            "Jacobian of field {i} entry ({row},{col}) is {} but finite differences give {fd}",
                            jac[row * m + col]
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Linear system `dy = Σᵢ Aᵢ y dγⁱ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearSystemJson", into = "LinearSystemJson")]
pub struct LinearSystem {
    matrices: Vec<DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LinearSystemJson {
    m: usize,
    d: usize,
    matrices: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<LinearSystemJson> for LinearSystem {
    type Error = Error;

    fn try_from(json: LinearSystemJson) -> Result<Self> {
        if json.matrices.len() != json.d {
            return Err(Error::DimensionMismatch(format!("{} matrices for d = {}", json.matrices.len(), json.d)));
        }
        let mut matrices = Vec::new();
        for rows in json.matrices {
            if rows.len() != json.m || rows.iter().any(|r| r.len() != json.m) {
                return Err(Error::DimensionMismatch(format!("matrix is not {0}×{0}", json.m)));
            }
            matrices.push(DMatrix::from_row_iterator(json.m, json.m, rows.into_iter().flatten()));
        }
        LinearSystem::new(matrices)
    }
}

impl From<LinearSystem> for LinearSystemJson {
    fn from(sys: LinearSystem) -> Self {
        let m = sys.state_dim();
        LinearSystemJson {
            m,
            d: sys.matrices.len(),
            matrices: sys
                .matrices
                .iter()
                .map(|a| (0..m).map(|r| a.row(r).iter().copied().collect()).collect())
                .collect(),
        }
    }
}

impl LinearSystem {
    pub fn new(matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = matrices.first().map(|a| a.nrows()).unwrap_or(0);
        if m == 0 || matrices.iter().any(|a| a.nrows() != m || a.ncols() != m) {
            return Err(Error::DimensionMismatch("linear system needs square matrices of one size".into()));
        }
        if matrices.iter().any(|a| a.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(LinearSystem { matrices })
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    /// `max_i ‖Aᵢ‖₂`, the operator norm of `A : (ℝᵈ, ℓ¹) → Hom(ℝᵐ)`.
    pub fn operator_norm(&self) -> f64 {
        self.matrices
            .iter()
            .map(|a| a.clone().singular_values().max())
            .fold(0.0, f64::max)
    }
}

impl VectorFieldSystem for LinearSystem {
    fn state_dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    fn driver_dim(&self) -> usize {
        self.matrices.len()
    }

    fn smoothness(&self) -> usize {
        usize::MAX
    }

    fn field(&self, i: usize, y: &[f64]) -> Vec<f64> {
        (&self.matrices[i] * DVector::from_column_slice(y)).as_slice().to_vec()
    }

    fn jacobian(&self, i: usize, _y: &[f64]) -> Vec<f64> {
        self.matrices[i].transpose().as_slice().to_vec()
    }
}

fn mat_vec(jac: &[f64], v: &[f64]) -> Vec<f64> {
    let m = v.len();
    (0..m).map(|r| (0..m).map(|c| jac[r * m + c] * v[c]).sum()).collect()
}

fn bracket_field(sys: &dyn VectorFieldSystem, b: &Bracket, y: &[f64]) -> Vec<f64> {
    match b {
        Bracket::Letter(l) => sys.field(l - 1, y),
        Bracket::Pair(u, v) => {
            let (fu, fv) = (bracket_field(sys, u, y), bracket_field(sys, v, y));
            let a = directional(sys, v, y, &fu);
            let c = directional(sys, u, y, &fv);
            a.iter().zip(&c).map(|(x, z)| x - z).collect()
        }
    }
}

/// `D V_b(y)·dir`: exact for letters, central differences for brackets.
fn directional(sys: &dyn VectorFieldSystem, b: &Bracket, y: &[f64], dir: &[f64]) -> Vec<f64> {
    match b {
        Bracket::Letter(l) => mat_vec(&sys.jacobian(l - 1, y), dir),
        Bracket::Pair(..) => {
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return vec![0.0; y.len()];
            }
            let ynorm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            let h = 1e-5 * (1.0 + ynorm);
            let s = h / norm;
            let plus: Vec<f64> = y.iter().zip(dir).map(|(a, d)| a + s * d).collect();
            let minus: Vec<f64> = y.iter().zip(dir).map(|(a, d)| a - s * d).collect();
            let (fp, fm) = (bracket_field(sys, b, &plus), bracket_field(sys, b, &minus));
            fp.iter().zip(&fm).map(|(p, q)| (p - q) / (2.0 * s)).collect()
        }
    }
}

/// The autonomous field `Σ_b λ_b V_b` attached to one set of Lie coordinates.
struct FrozenField<'a> {
    sys: &'a dyn VectorFieldSystem,
    terms: Vec<(Bracket, f64)>,
}

impl<'a> FrozenField<'a> {
    fn new(sys: &'a dyn VectorFieldSystem, l: &LieCoordinates) -> Result<Self> {
        if l.dim() != sys.driver_dim() {
            return Err(Error::DimensionMismatch(format!(
                "log-signature over {} letters for a system driven in {} dimensions",
                l.dim(),
                sys.driver_dim()
            )));
        }
        let terms: Vec<(Bracket, f64)> = l
            .iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, c)| (e.bracket.clone(), c))
            .collect();
        if let Some(degree) = terms.iter().map(|(b, _)| b.degree()).max() {
            if degree - 1 > sys.smoothness() {
                return Err(Error::Capability {
                    degree,
                    available: sys.smoothness(),
                });
            }
        }
        Ok(FrozenField { sys, terms })
    }

    fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for (b, c) in &self.terms {
            for (o, v) in out.iter_mut().zip(bracket_field(self.sys, b, y)) {
                *o += c * v;
            }
        }
        out
    }
}

/// Evaluates the Lie extension of `eᵢ ↦ Vᵢ` on `l` at the point `y`.
pub fn lie_extend_evaluate(sys: &dyn VectorFieldSystem, l: &LieCoordinates, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != sys.state_dim() {
        return Err(Error::DimensionMismatch(format!("state of length {} for dimension {}", y.len(), sys.state_dim())));
    }
    Ok(FrozenField::new(sys, l)?.eval(y))
}

/// Integrates the frozen field for unit time with classical RK4.
pub fn logode_step(sys: &dyn VectorFieldSystem, y0: &[f64], l: &LieCoordinates, substeps: usize) -> Result<Vec<f64>> {
    if substeps == 0 {
        return Err(Error::InvalidInput("substeps must be at least 1".into()));
    }
    if y0.len() != sys.state_dim() {
        return Err(Error::DimensionMismatch(format!("state of length {} for dimension {}", y0.len(), sys.state_dim())));
    }
    let field = FrozenField::new(sys, l)?;
    if field.terms.is_empty() {
        return Ok(y0.to_vec());
    }
    let h = 1.0 / substeps as f64;
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut y = y0.to_vec();
    for substep in 0..substeps {
        let k1 = field.eval(&y);
        let k2 = field.eval(&axpy(&y, &k1, 0.5 * h));
        let k3 = field.eval(&axpy(&y, &k2, 0.5 * h));
        let k4 = field.eval(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { substep });
        }
    }
    Ok(y)
}

/// Step boundaries, truncation degree and RK4 substeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogOdeSchedule {
    boundaries: Vec<f64>,
    depth: usize,
    substeps: usize,
}

impl LogOdeSchedule {
    pub fn new(boundaries: Vec<f64>, depth: usize, substeps: usize) -> Result<Self> {
        if boundaries.len() < 2 || boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("schedule needs at least two increasing boundaries".into()));
        }
        if depth == 0 || substeps == 0 {
            return Err(Error::InvalidInput("truncation degree and substeps must be at least 1".into()));
        }
        Ok(LogOdeSchedule {
            boundaries,
            depth,
            substeps,
        })
    }

    /// `steps` equal steps over the stream's time interval.
    pub fn uniform(stream: &Stream, steps: usize, depth: usize, substeps: usize) -> Result<Self> {
        let (a, b) = (stream.start_time(), stream.end_time());
        let steps = steps.max(1);
        let mut boundaries: Vec<f64> = (0..=steps).map(|i| a + (b - a) * i as f64 / steps as f64).collect();
        boundaries[steps] = b;
        Self::new(boundaries, depth, substeps)
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }
}

/// States at each schedule boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

pub fn solve(sys: &dyn VectorFieldSystem, stream: &Stream, y0: &[f64], schedule: &LogOdeSchedule) -> Result<Trajectory> {
    if stream.dim() != sys.driver_dim() {
        return Err(Error::DimensionMismatch(format!(
            "driver of dimension {} for a system expecting {}",
            stream.dim(),
            sys.driver_dim()
        )));
    }
    let bounds = schedule.boundaries();
    let mut y = y0.to_vec();
    let mut traj = Trajectory {
        times: vec![bounds[0]],
        states: vec![y.clone()],
    };
    for w in bounds.windows(2) {
        let piece = stream.restrict(w[0], w[1])?;
        let l = log_signature(&piece, schedule.depth())?;
        y = logode_step(sys, &y, &l, schedule.substeps())?;
        traj.times.push(w[1]);
        traj.states.push(y.clone());
    }
    Ok(traj)
}

/// Exact solution of the linear equation along the polygon: ordered product
/// over segments of `exp(Σᵢ Δγⁱ Aᵢ)`.
pub fn linear_solve(sys: &LinearSystem, stream: &Stream, y0: &[f64]) -> Result<Vec<f64>> {
    if stream.dim() != sys.driver_dim() || y0.len() != sys.state_dim() {
        return Err(Error::DimensionMismatch("linear system, stream and state disagree".into()));
    }
    let m = sys.state_dim();
    let mut y = DVector::from_column_slice(y0);
    for inc in stream.increments() {
        let mut gen = DMatrix::zeros(m, m);
        for (a, dx) in sys.matrices.iter().zip(&inc) {
            gen += a * *dx;
        }
        y = gen.exp() * y;
    }
    Ok(y.as_slice().to_vec())
}

/// `Σ_{k≤N} Σ_{|w|=k} ⟨w,S⟩ A_{w_k}⋯A_{w_1} y₀`.
pub fn linear_series(sys: &LinearSystem, sig: &TruncatedTensor, y0: &[f64]) -> Result<Vec<f64>> {
    if sig.dim() != sys.driver_dim() || y0.len() != sys.state_dim() {
        return Err(Error::DimensionMismatch("linear system, signature and state disagree".into()));
    }
    let d = sys.driver_dim();
    let mut images = vec![DVector::from_column_slice(y0)];
    let mut total = images[0].clone() * sig.level(0)[0];
    for k in 1..=sig.depth() {
        let mut next = Vec::with_capacity(images.len() * d);
        for v in &images {
            for a in &sys.matrices {
                next.push(a * v);
            }
        }
        for (v, c) in next.iter().zip(sig.level(k)) {
            total += v * *c;
        }
        images = next;
    }
    Ok(total.as_slice().to_vec())
}

/// `Σ_{k>N} x^k/k!` for `x ≥ 0`.
pub fn exponential_tail(x: f64, depth: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=depth {
        term *= x / k as f64;
    }
    let mut tail = 0.0;
    let mut k = depth;
    loop {
        k += 1;
        term *= x / k as f64;
        tail += term;
        if term <= tail * 1e-17 || k > depth + 10_000 {
            break;
        }
    }
    tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::LyndonBasis;
    use crate::tensor::Word;
    use approx::assert_abs_diff_eq;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_iterator(rows.len(), rows.len(), rows.iter().flat_map(|r| r.iter().copied()))
    }

    fn two_matrix_system() -> LinearSystem {
        LinearSystem::new(vec![
            mat(&[&[0.1, 0.4], &[-0.3, 0.2]]),
            mat(&[&[0.5, -0.2], &[0.1, -0.4]]),
        ])
        .unwrap()
    }

    #[test]
    fn degree_one_is_linear_combination() {
        let sys = two_matrix_system();
        let mut l = LieCoordinates::zero(2, 2);
        l.set(&w("1"), 0.7).unwrap();
        l.set(&w("2"), -1.1).unwrap();
        let y = [1.0, 2.0];
        let v = lie_extend_evaluate(&sys, &l, &y).unwrap();
        let (v1, v2) = (sys.field(0, &y), sys.field(1, &y));
        for i in 0..2 {
            assert_abs_diff_eq!(v[i], 0.7 * v1[i] - 1.1 * v2[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_fields_commute() {
        let consts = [vec![1.0, -2.0], vec![0.5, 3.0]];
        let fields: Vec<FieldFn> = consts
            .iter()
            .map(|c| {
                let c = c.clone();
                Box::new(move |_: &[f64]| c.clone()) as FieldFn
            })
            .collect();
        let jacs: Vec<FieldFn> = (0..2).map(|_| Box::new(|_: &[f64]| vec![0.0; 4]) as FieldFn).collect();
        let sys = FieldSystem::register(2, 8, fields, jacs, &[vec![0.0, 0.0], vec![1.0, -1.0]]).unwrap();
        let basis = LyndonBasis::cached(2, 4);
        let coords: Vec<f64> = (0..basis.len()).map(|i| 0.3 + i as f64).collect();
        let l = LieCoordinates::new(basis, coords).unwrap();
        let v = lie_extend_evaluate(&sys, &l, &[0.2, 0.1]).unwrap();
        assert_abs_diff_eq!(v[0], 0.3 * 1.0 + 1.3 * 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(v[1], 0.3 * -2.0 + 1.3 * 3.0, epsilon = 1e-9);
    }

    #[test]
    fn linear_bracket_order() {
        let sys = two_matrix_system();
        let mut l = LieCoordinates::zero(2, 2);
        l.set(&w("1,2"), 1.0).unwrap();
        let y = DVector::from_vec(vec![0.3, -0.8]);
        let (a1, a2) = (&sys.matrices()[0], &sys.matrices()[1]);
        let expect = (a2 * a1 - a1 * a2) * &y;
        let v = lie_extend_evaluate(&sys, &l, y.as_slice()).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(v[i], expect[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn degree_three_linear_bracket() {
        // [1,[1,2]] ↦ [V1,[V1,V2]]; for linear fields the matrix is
        // ad-ordering reversed: M = [[A2,A1]... computed through the anti-homomorphism
        let sys = two_matrix_system();
        let mut l = LieCoordinates::zero(2, 3);
        l.set(&w("1,1,2"), 1.0).unwrap();
        let (a1, a2) = (&sys.matrices()[0], &sys.matrices()[1]);
        let b12 = a2 * a1 - a1 * a2; // image of [e1,e2]
        let expect_m = &b12 * a1 - a1 * &b12; // image of [e1,[e1,e2]]
        let y = DVector::from_vec(vec![0.9, 0.4]);
        let v = lie_extend_evaluate(&sys, &l, y.as_slice()).unwrap();
        let expect = expect_m * y;
        for i in 0..2 {
            assert_abs_diff_eq!(v[i], expect[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn capability_error() {
        let sys = FieldSystem::register(
            1,
            1,
            vec![Box::new(|y: &[f64]| vec![y[0].sin()]), Box::new(|y: &[f64]| vec![y[0].cos()])],
            vec![Box::new(|y: &[f64]| vec![y[0].cos()]), Box::new(|y: &[f64]| vec![-y[0].sin()])],
            &[vec![0.3]],
        )
        .unwrap();
        let mut l = LieCoordinates::zero(2, 3);
        l.set(&w("1,1,2"), 1.0).unwrap();
        assert!(matches!(lie_extend_evaluate(&sys, &l, &[0.1]), Err(Error::Capability { degree: 3, .. })));
    }

    #[test]
    fn registration_rejects_wrong_jacobian() {
        let r = FieldSystem::register(
            1,
            2,
            vec![Box::new(|y: &[f64]| vec![y[0] * y[0]])],
            vec![Box::new(|y: &[f64]| vec![y[0]])],
            &[vec![1.5]],
        );
        assert!(r.is_err());
    }

    #[test]
    fn step_examples() {
        let sys = LinearSystem::new(vec![mat(&[&[1.0]])]).unwrap();
        let zero = LieCoordinates::zero(1, 2);
        assert_eq!(logode_step(&sys, &[2.5], &zero, 4).unwrap(), vec![2.5]);

        let mut l = LieCoordinates::zero(1, 1);
        l.set(&w("1"), 0.8).unwrap();
        let y = logode_step(&sys, &[2.0], &l, 200).unwrap();
        assert_abs_diff_eq!(y[0], 2.0 * 0.8f64.exp(), epsilon = 1e-9);
    }

    #[test]
    fn commuting_fields_match_matrix_exponential() {
        let a1 = mat(&[&[0.2, 0.0], &[0.0, -0.5]]);
        let a2 = mat(&[&[-0.3, 0.0], &[0.0, 0.7]]);
        let sys = LinearSystem::new(vec![a1.clone(), a2.clone()]).unwrap();
        let mut l = LieCoordinates::zero(2, 2);
        l.set(&w("1"), 1.5).unwrap();
        l.set(&w("2"), 0.5).unwrap();
        l.set(&w("1,2"), 3.0).unwrap(); // bracket vanishes for commuting fields
        let y = logode_step(&sys, &[1.0, 1.0], &l, 64).unwrap();
        let exact = (a1 * 1.5 + a2 * 0.5).exp() * DVector::from_vec(vec![1.0, 1.0]);
        assert_abs_diff_eq!(y[0], exact[0], epsilon = 1e-10);
        assert_abs_diff_eq!(y[1], exact[1], epsilon = 1e-10);
    }

    #[test]
    fn divergence_reports_substep() {
        let sys = FieldSystem::register(
            1,
            2,
            vec![Box::new(|y: &[f64]| vec![y[0] * y[0]])],
            vec![Box::new(|y: &[f64]| vec![2.0 * y[0]])],
            &[vec![0.5]],
        )
        .unwrap();
        let mut l = LieCoordinates::zero(1, 1);
        l.set(&w("1"), 10.0).unwrap();
        assert!(matches!(logode_step(&sys, &[1e20], &l, 10), Err(Error::Divergence { .. })));
    }

    #[test]
    fn solve_trivial_cases() {
        let sys = two_matrix_system();
        let flat = Stream::new(vec![0.0, 1.0, 2.0], vec![vec![1.0, 1.0]; 3]).unwrap();
        let sched = LogOdeSchedule::uniform(&flat, 4, 2, 4).unwrap();
        let traj = solve(&sys, &flat, &[0.4, 0.6], &sched).unwrap();
        assert!(traj.states.iter().all(|s| s == &vec![0.4, 0.6]));

        let scalar = LinearSystem::new(vec![mat(&[&[1.0]])]).unwrap();
        let times: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let pts: Vec<Vec<f64>> = times.iter().map(|t| vec![(3.0 * t).sin()]).collect();
        let driver = Stream::new(times, pts).unwrap();
        let sched = LogOdeSchedule::uniform(&driver, 32, 2, 8).unwrap();
        let traj = solve(&scalar, &driver, &[1.5], &sched).unwrap();
        assert_abs_diff_eq!(traj.last()[0], 1.5 * 3f64.sin().exp(), epsilon = 1e-8);
    }

    #[test]
    fn linear_solve_simple() {
        let sys = LinearSystem::new(vec![mat(&[&[0.0, -1.0], &[1.0, 0.0]])]).unwrap();
        let s = Stream::from_points(vec![vec![0.0], vec![0.5], vec![1.2]]).unwrap();
        let y = linear_solve(&sys, &s, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(y[0], 1.2f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], 1.2f64.sin(), epsilon = 1e-14);
        let still = Stream::from_points(vec![vec![0.3]]).unwrap();
        assert_eq!(linear_solve(&sys, &still, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn system_json() {
        let sys = two_matrix_system();
        let s = serde_json::to_string(&sys).unwrap();
        assert!(s.starts_with(r#"{"m":2,"d":2,"matrices":[[[0.1,0.4],[-0.3,0.2]]"#), "{s}");
        let back: LinearSystem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sys);
        assert!(serde_json::from_str::<LinearSystem>(r#"{"m":2,"d":1,"matrices":[[[1.0]]]}"#).is_err());
    }

    #[test]
    fn exponential_tail_values() {
        assert_abs_diff_eq!(exponential_tail(1.0, 0), std::f64::consts::E - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(exponential_tail(2.0, 2), 2f64.exp() - 5.0, epsilon = 1e-14);
        assert_eq!(exponential_tail(0.0, 3), 0.0);
    }
}
