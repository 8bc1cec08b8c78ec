//! Development of streams into the unitary group.
//!
//! `ψ(eⱼ) = i·Hⱼ` with `Hⱼ` traceless Hermitian, and `dΨ = Ψ·ψ(dγ)`, so a
//! polygonal stream develops to the ordered product of `exp(i Σⱼ Δγʲ Hⱼ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams::Stream;
use crate::tensor::TruncatedTensor;

pub type CMatrix = DMatrix<Complex64>;

/// Generators `H₁..H_d` of a development into `U(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyJson", into = "PolicyJson")]
pub struct UnitaryPolicy {
    generators: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct PolicyJson {
    u: usize,
    generators: Vec<GeneratorJson>,
}

/// A generator given either as `u²` row-major `[re, im]` pairs or as rows.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GeneratorJson {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

impl TryFrom<PolicyJson> for UnitaryPolicy {
    type Error = Error;

    fn try_from(json: PolicyJson) -> Result<Self> {
        let u = json.u;
        let generators = json
            .generators
            .into_iter()
            .map(|g| {
                let entries: Vec<[f64; 2]> = match g {
                    GeneratorJson::Flat(v) => v,
                    GeneratorJson::Rows(rows) => rows.into_iter().flatten().collect(),
                };
                if entries.len() != u * u {
                    return Err(Error::DimensionMismatch(format!("generator with {} entries for u = {u}", entries.len())));
                }
                Ok(CMatrix::from_row_iterator(u, u, entries.into_iter().map(|[re, im]| Complex64::new(re, im))))
            })
            .collect::<Result<Vec<_>>>()?;
        UnitaryPolicy::new(generators)
    }
}

impl From<UnitaryPolicy> for PolicyJson {
    fn from(p: UnitaryPolicy) -> Self {
        let u = p.size();
        PolicyJson {
            u,
            generators: p
                .generators
                .iter()
                .map(|h| {
                    GeneratorJson::Flat(
                        (0..u)
                            .flat_map(|r| (0..u).map(move |c| (r, c)))
                            .map(|(r, c)| [h[(r, c)].re, h[(r, c)].im])
                            .collect(),
                    )
                })
                .collect(),
        }
    }
}

impl UnitaryPolicy {
    /// Checks each generator is square, Hermitian and traceless to 1e-12.
    pub fn new(generators: Vec<CMatrix>) -> Result<Self> {
        let u = generators.first().map(|h| h.nrows()).unwrap_or(0);
        if u < 2 {
            return Err(Error::InvalidInput("policy needs at least one generator of size ≥ 2".into()));
        }
        for (j, h) in generators.iter().enumerate() {
            if h.nrows() != u || h.ncols() != u {
                return Err(Error::DimensionMismatch(format!("generator {j} is not {u}×{u}")));
            }
            let herm = (h - h.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            if herm > 1e-12 {
                return Err(Error::InvalidInput(format!("generator {j} is not Hermitian (defect {herm:.2e})")));
            }
            let trace = h.trace().norm();
            if trace > 1e-12 {
                return Err(Error::InvalidInput(format!("generator {j} has trace {trace:.2e}")));
            }
        }
        Ok(UnitaryPolicy { generators })
    }

    /// Random traceless Hermitian generators with Gaussian entries scaled by `scale`.
    pub fn random<R: Rng + ?Sized>(u: usize, d: usize, scale: f64, rng: &mut R) -> Self {
        let generators = (0..d)
            .map(|_| {
                let g = CMatrix::from_fn(u, u, |_, _| {
                    Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
                });
                let mut h = (&g + g.adjoint()) * Complex64::new(0.5 * scale, 0.0);
                let shift = h.trace() / Complex64::new(u as f64, 0.0);
                for i in 0..u {
                    h[(i, i)] -= shift;
                    h[(i, i)].im = 0.0;
                }
                h
            })
            .collect();
        UnitaryPolicy { generators }
    }

    pub fn size(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn driver_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// `max_j ‖Hⱼ‖₂`.
    pub fn max_norm(&self) -> f64 {
        self.generators
            .iter()
            .map(|h| h.clone().singular_values().max())
            .fold(0.0, f64::max)
    }

    /// `exp(i Σⱼ vⱼ Hⱼ)` through the eigendecomposition of the Hermitian sum.
    pub fn segment_unitary(&self, v: &[f64]) -> CMatrix {
        let u = self.size();
        let mut k = CMatrix::zeros(u, u);
        for (h, &c) in self.generators.iter().zip(v) {
            k += h * Complex64::new(c, 0.0);
        }
        hermitian_exp_i(k)
    }
}

/// `exp(iK)` for Hermitian `K`.
pub fn hermitian_exp_i(k: CMatrix) -> CMatrix {
    let eig = k.symmetric_eigen();
    let phases = eig.eigenvalues.map(|lambda| Complex64::new(0.0, lambda).exp());
    let vecs = &eig.eigenvectors;
    let mut scaled = vecs.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
        col *= *p;
    }
    scaled * vecs.adjoint()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DevelopmentResult {
    pub psi: CMatrix,
    pub interval: (f64, f64),
}

impl DevelopmentResult {
    /// `‖Ψ*Ψ − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.psi)
    }
}

pub fn unitarity_defect(psi: &CMatrix) -> f64 {
    let n = psi.nrows();
    (psi.adjoint() * psi - CMatrix::identity(n, n))
        .iter()
        .fold(0.0, |m, z| m.max(z.norm()))
}

pub fn develop(policy: &UnitaryPolicy, stream: &Stream) -> Result<DevelopmentResult> {
    if policy.driver_dim() != stream.dim() {
        return Err(Error::DimensionMismatch(format!(
            "policy with {} generators for a stream of dimension {}",
            policy.driver_dim(),
            stream.dim()
        )));
    }
    let u = policy.size();
    let mut psi = CMatrix::identity(u, u);
    for v in stream.increments() {
        psi *= policy.segment_unitary(&v);
    }
    Ok(DevelopmentResult {
        psi,
        interval: (stream.start_time(), stream.end_time()),
    })
}

/// `Σ_{k≤N} Σ_{|w|=k} ⟨w,S⟩ ψ(e_{w₁})⋯ψ(e_{w_k})`, the development read as a
/// linear functional of the truncated signature.
pub fn develop_truncated(policy: &UnitaryPolicy, sig: &TruncatedTensor) -> Result<CMatrix> {
    if policy.driver_dim() != sig.dim() {
        return Err(Error::DimensionMismatch("policy and signature dimensions differ".into()));
    }
    let u = policy.size();
    let psi: Vec<CMatrix> = policy
        .generators
        .iter()
        .map(|h| h * Complex64::new(0.0, 1.0))
        .collect();
    let mut images = vec![CMatrix::identity(u, u)];
    let mut total = CMatrix::identity(u, u) * Complex64::new(sig.level(0)[0], 0.0);
    for k in 1..=sig.depth() {
        let mut next = Vec::with_capacity(images.len() * psi.len());
        for m in &images {
            for p in &psi {
                next.push(m * p);
            }
        }
        for (m, &c) in next.iter().zip(sig.level(k)) {
            total += m * Complex64::new(c, 0.0);
        }
        images = next;
    }
    Ok(total)
}

/// Monte Carlo estimate of `E[Ψ]` with elementwise standard errors
/// (`√(Σ|Ψ − mean|² / (n(n−1)))`, zero for a single sample).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedDevelopment {
    pub mean: CMatrix,
    pub stderr: DMatrix<f64>,
    pub count: usize,
}

pub fn expected_development<R, F>(policy: &UnitaryPolicy, count: usize, rng: &mut R, mut sampler: F) -> Result<ExpectedDevelopment>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Stream,
{
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let u = policy.size();
    let mut mean = CMatrix::zeros(u, u);
    let mut m2 = DMatrix::<f64>::zeros(u, u);
    for n in 1..=count {
        let psi = develop(policy, &sampler(rng))?.psi;
        let delta = &psi - &mean;
        mean += &delta / Complex64::new(n as f64, 0.0);
        let delta2 = &psi - &mean;
        for i in 0..u * u {
            m2[i] += (delta[i].conj() * delta2[i]).re;
        }
    }
    let stderr = if count > 1 {
        m2.map(|s| (s.max(0.0) / ((count * (count - 1)) as f64)).sqrt())
    } else {
        DMatrix::zeros(u, u)
    };
    Ok(ExpectedDevelopment { mean, stderr, count })
}
