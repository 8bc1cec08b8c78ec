//! Linear models on signature features.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::LyndonBasis;
use crate::streams::{log_signature, read_csv_file, Stream, Transform};
use crate::tensor::Word;

/// Which coordinates make up a feature row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Signature coefficients of every word of degree ≤ N.
    #[default]
    Signature,
    /// A constant column followed by Lyndon log-signature coordinates.
    LogSignature,
}

/// What a model needs to rebuild features for new streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub dim: usize,
    pub depth: usize,
    pub transform: Transform,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    /// Column labels: words `"1,2"` for signatures, brackets for log-signatures.
    /// Column 0 is `""`.
    pub fn column_names(&self) -> Vec<String> {
        let d = self.transformed_dim();
        match self.kind {
            FeatureKind::Signature => Word::all_up_to(d, self.depth).iter().map(Word::to_string).collect(),
            FeatureKind::LogSignature => std::iter::once(String::new())
                .chain(LyndonBasis::cached(d, self.depth).elements().iter().map(|e| e.bracket.to_string()))
                .collect(),
        }
    }

    pub fn transformed_dim(&self) -> usize {
        match self.transform {
            Transform::None => self.dim,
            Transform::Time => self.dim + 1,
            Transform::LeadLag => 2 * self.dim,
        }
    }

    fn row(&self, stream: &Stream) -> Result<Vec<f64>> {
        let s = stream.transform(self.transform);
        match self.kind {
            FeatureKind::Signature => Ok(s.signature(self.depth).to_flat()),
            FeatureKind::LogSignature => {
                let mut row = vec![1.0];
                row.extend_from_slice(log_signature(&s, self.depth)?.coords());
                Ok(row)
            }
        }
    }
}

/// One row per stream; column 0 is the constant 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub spec: FeatureSpec,
    pub columns: Vec<String>,
    pub values: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn featurize(streams: &[Stream], depth: usize, transform: Transform) -> Result<FeatureMatrix> {
    featurize_with(streams, depth, transform, FeatureKind::Signature)
}

pub fn featurize_with(streams: &[Stream], depth: usize, transform: Transform, kind: FeatureKind) -> Result<FeatureMatrix> {
    let first = streams
        .first()
        .ok_or_else(|| Error::InvalidInput("no streams to featurize".into()))?;
    let spec = FeatureSpec {
        dim: first.dim(),
        depth,
        transform,
        kind,
    };
    featurize_spec(streams, &spec)
}

pub fn featurize_spec(streams: &[Stream], spec: &FeatureSpec) -> Result<FeatureMatrix> {
    if let Some((i, s)) = streams.iter().enumerate().find(|(_, s)| s.dim() != spec.dim) {
        return Err(Error::DimensionMismatch(format!(
            "stream {i} has dimension {}, expected {}",
            s.dim(),
            spec.dim
        )));
    }
    let rows: Vec<Vec<f64>> = streams.par_iter().map(|s| spec.row(s)).collect::<Result<_>>()?;
    let columns = spec.column_names();
    let values = DMatrix::from_fn(rows.len(), columns.len(), |i, j| rows[i][j]);
    Ok(FeatureMatrix {
        spec: spec.clone(),
        columns,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Regularization {
    Ridge {
        lambda: f64,
    },
    Lasso {
        lambda: f64,
        iterations: usize,
        converged: bool,
        /// Column means and standard deviations used internally.
        means: Vec<f64>,
        scales: Vec<f64>,
    },
}

impl Regularization {
    pub fn lambda(&self) -> f64 {
        match self {
            Regularization::Ridge { lambda } | Regularization::Lasso { lambda, .. } => *lambda,
        }
    }
}

/// `f(γ) ≈ Σ β_w ⟨S(γ), w⟩`; the empty-word coefficient is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub features: FeatureSpec,
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub regularization: Regularization,
}

impl LinearModel {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.cols() != self.coefficients.len() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} coefficients, features have {} columns",
                self.coefficients.len(),
                x.cols()
            )));
        }
        let beta = DVector::from_column_slice(&self.coefficients);
        Ok((&x.values * beta).iter().copied().collect())
    }

    pub fn predict_streams(&self, streams: &[Stream]) -> Result<Vec<f64>> {
        self.predict(&featurize_spec(streams, &self.features)?)
    }

    /// Columns with non-zero coefficient, the intercept excluded.
    pub fn active_set(&self) -> Vec<usize> {
        (1..self.coefficients.len()).filter(|&j| self.coefficients[j] != 0.0).collect()
    }

    pub fn converged(&self) -> bool {
        match self.regularization {
            Regularization::Ridge { .. } => true,
            Regularization::Lasso { converged, .. } => converged,
        }
    }
}

fn check_rows(x: &FeatureMatrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} feature rows but {} targets", x.rows(), y.len())));
    }
    if x.rows() == 0 {
        return Err(Error::InvalidInput("no samples".into()));
    }
    if x.cols() == 0 {
        return Err(Error::InvalidInput("no features".into()));
    }
    Ok(())
}

fn column_means(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.sum() / n).collect()
}

/// Minimises `‖Xβ − y‖² + λ Σ_{j≥1} β_j²`. Column 0 is left unpenalised.
/// Solved by SVD of the centred design, so `λ = 0` gives the minimum-norm
/// least-squares solution.
pub fn fit_ridge(x: &FeatureMatrix, y: &[f64], lambda: f64) -> Result<LinearModel> {
    check_rows(x, y)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be non-negative, got {lambda}")));
    }
    let coefficients = ridge_coefficients(&x.values, y, lambda);
    Ok(LinearModel {
        features: x.spec.clone(),
        columns: x.columns.clone(),
        coefficients,
        regularization: Regularization::Ridge { lambda },
    })
}

fn ridge_coefficients(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let (n, p) = x.shape();
    let means = column_means(x);
    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut beta = vec![0.0; p];
    if p > 1 {
        let xc = DMatrix::from_fn(n, p - 1, |i, j| x[(i, j + 1)] - means[j + 1]);
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - ybar));
        let svd = xc.svd(true, true);
        let u = svd.u.as_ref().expect("requested U");
        let vt = svd.v_t.as_ref().expect("requested Vᵀ");
        let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
        let cutoff = smax * (n.max(p) as f64) * f64::EPSILON;
        let uty = u.transpose() * &yc;
        let mut w = DVector::zeros(svd.singular_values.len());
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff {
                w[k] = s / (s * s + lambda) * uty[k];
            }
        }
        let b = vt.transpose() * w;
        for j in 1..p {
            beta[j] = b[j - 1];
        }
    }
    beta[0] = ybar - (1..p).map(|j| means[j] * beta[j]).sum::<f64>();
    beta
}

/// Standardised design used by the LASSO: centred columns of unit
/// population variance, constant columns dropped.
struct Standardized {
    z: DMatrix<f64>,
    /// Original column index of each column of `z`.
    keep: Vec<usize>,
    means: Vec<f64>,
    scales: Vec<f64>,
    yc: Vec<f64>,
    ybar: f64,
}

fn standardize(x: &DMatrix<f64>, y: &[f64]) -> Standardized {
    let (n, p) = x.shape();
    let means = column_means(x);
    let scales: Vec<f64> = (0..p)
        .map(|j| (x.column(j).iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / n as f64).sqrt())
        .collect();
    let keep: Vec<usize> = (1..p)
        .filter(|&j| scales[j] > 1e-12 * (1.0 + means[j].abs()))
        .collect();
    let z = DMatrix::from_fn(n, keep.len(), |i, k| (x[(i, keep[k])] - means[keep[k]]) / scales[keep[k]]);
    let ybar = y.iter().sum::<f64>() / n as f64;
    Standardized {
        z,
        keep,
        means,
        scales,
        yc: y.iter().map(|v| v - ybar).collect(),
        ybar,
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smallest λ at which every penalised coefficient is zero:
/// `max_j |z_jᵀ(y − ȳ)|/n` on the standardised design.
pub fn lasso_lambda_max(x: &FeatureMatrix, y: &[f64]) -> Result<f64> {
    check_rows(x, y)?;
    let s = standardize(&x.values, y);
    let n = y.len() as f64;
    Ok(s.z
        .column_iter()
        .map(|c| c.iter().zip(&s.yc).map(|(a, b)| a * b).sum::<f64>().abs() / n)
        .fold(0.0, f64::max))
}

/// Minimises `(1/2n)‖y − ȳ − Zb‖² + λ‖b‖₁` on the standardised design `Z` by
/// cyclic coordinate descent, stopping once no coefficient moves by `tol` in
/// a sweep. Coefficients are mapped back to the original column scale.
pub fn fit_lasso(x: &FeatureMatrix, y: &[f64], lambda: f64, max_iter: usize, tol: f64) -> Result<LinearModel> {
    check_rows(x, y)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be non-negative, got {lambda}")));
    }
    let s = standardize(&x.values, y);
    let (b, iterations, converged) = coordinate_descent(&s.z, &s.yc, lambda, max_iter, tol);
    let p = x.cols();
    let mut beta = vec![0.0; p];
    for (k, &j) in s.keep.iter().enumerate() {
        beta[j] = b[k] / s.scales[j];
    }
    beta[0] = s.ybar - (1..p).map(|j| s.means[j] * beta[j]).sum::<f64>();
    Ok(LinearModel {
        features: x.spec.clone(),
        columns: x.columns.clone(),
        coefficients: beta,
        regularization: Regularization::Lasso {
            lambda,
            iterations,
            converged,
            means: s.means,
            scales: s.scales,
        },
    })
}

fn coordinate_descent(z: &DMatrix<f64>, yc: &[f64], lambda: f64, max_iter: usize, tol: f64) -> (Vec<f64>, usize, bool) {
    let (n, p) = z.shape();
    let nf = n as f64;
    let mut b = vec![0.0; p];
    let mut r = yc.to_vec();
    let norms: Vec<f64> = z.column_iter().map(|c| c.norm_squared() / nf).collect();
    for sweep in 1..=max_iter {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let col = z.column(j);
            let rho = col.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / nf + norms[j] * b[j];
            let new = soft_threshold(rho, lambda) / norms[j];
            let delta = new - b[j];
            if delta != 0.0 {
                for (ri, zi) in r.iter_mut().zip(col.iter()) {
                    *ri -= delta * zi;
                }
                b[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < tol {
            return (b, sweep, true);
        }
    }
    (b, max_iter, false)
}

/// Largest violation of the LASSO optimality conditions on the standardised
/// problem: `|g_j| ≤ λ` where `b_j = 0` and `g_j = λ·sign(b_j)` otherwise,
/// with `g = Zᵀ(y − ȳ − Zb)/n`.
pub fn lasso_kkt_residual(x: &FeatureMatrix, y: &[f64], model: &LinearModel) -> Result<f64> {
    check_rows(x, y)?;
    let lambda = model.regularization.lambda();
    let s = standardize(&x.values, y);
    let n = y.len() as f64;
    let b: Vec<f64> = s.keep.iter().map(|&j| model.coefficients[j] * s.scales[j]).collect();
    let fitted = &s.z * DVector::from_column_slice(&b);
    let r: Vec<f64> = s.yc.iter().zip(fitted.iter()).map(|(a, f)| a - f).collect();
    let mut worst: f64 = 0.0;
    for (k, col) in s.z.column_iter().enumerate() {
        let g = col.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / n;
        let v = if b[k] == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g - lambda * b[k].signum()).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Fraction of random half-size subsamples on which each column enters the
/// LASSO active set. Entry 0 (intercept) is always 0.
pub fn stability_selection(x: &FeatureMatrix, y: &[f64], lambda: f64, rounds: usize, seed: u64) -> Result<Vec<f64>> {
    check_rows(x, y)?;
    let n = x.rows();
    let m = (n / 2).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<usize>> = (0..rounds).map(|_| sample(&mut rng, n, m).into_vec()).collect();
    let selected: Vec<Vec<usize>> = draws
        .par_iter()
        .map(|rows| {
            let sub = FeatureMatrix {
                spec: x.spec.clone(),
                columns: x.columns.clone(),
                values: x.values.select_rows(rows.iter()),
            };
            let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
            fit_lasso(&sub, &ys, lambda, 10_000, 1e-8).map(|m| m.active_set())
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; x.cols()];
    for set in &selected {
        for &j in set {
            counts[j] += 1;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / rounds as f64).collect())
}

/// Two-class metrics of a score vector, class 1 positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub ks: f64,
    /// `(false positive rate, true positive rate)` from `(0,0)` to `(1,1)`.
    pub roc: Vec<[f64; 2]>,
    pub auc: f64,
    pub accuracy: f64,
    pub negatives: usize,
    pub positives: usize,
}

/// Metrics for `scores` against 0/1 `labels`. Thresholds sweep the distinct
/// scores from the top, so tied scores move the ROC curve diagonally.
pub fn classification_report(scores: &[f64], labels: &[f64]) -> Result<ClassificationReport> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l != 0.0 && l != 1.0) {
        return Err(Error::InvalidInput(format!("labels must be 0 or 1, found {bad}")));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite score {bad}")));
    }
    let positives = labels.iter().filter(|&&l| l == 1.0).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateReport(format!(
            "need both classes, got {negatives} negatives and {positives} positives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (np, nn) = (positives as f64, negatives as f64);
    let mut roc = vec![[0.0, 0.0]];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ks: f64 = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (fpr, tpr) = (fp as f64 / nn, tp as f64 / np);
        // CDF₀(s⁻) − CDF₁(s⁻) = TPR − FPR at the same cut
        ks = ks.max((tpr - fpr).abs());
        roc.push([fpr, tpr]);
    }
    let auc = roc.windows(2).map(|w| (w[1][0] - w[0][0]) * (w[1][1] + w[0][1]) / 2.0).sum();
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &l)| (s >= 0.5) == (l == 1.0))
        .count();
    Ok(ClassificationReport {
        ks,
        roc,
        auc,
        accuracy: correct as f64 / scores.len() as f64,
        negatives,
        positives,
    })
}

/// Reports on the learning set and the test set.
pub fn score_and_report(
    model: &LinearModel,
    x_learn: &FeatureMatrix,
    y_learn: &[f64],
    x_test: &FeatureMatrix,
    y_test: &[f64],
) -> Result<(ClassificationReport, ClassificationReport)> {
    Ok((
        classification_report(&model.predict(x_learn)?, y_learn)?,
        classification_report(&model.predict(x_test)?, y_test)?,
    ))
}

/// Linear map from input signature features to expected output signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLaw {
    pub input: FeatureSpec,
    pub output: FeatureSpec,
    pub output_columns: Vec<String>,
    /// One model per output coordinate.
    pub models: Vec<LinearModel>,
}

impl ConditionalLaw {
    /// Predicted output coordinates, one row per stream.
    pub fn predict(&self, inputs: &[Stream]) -> Result<DMatrix<f64>> {
        let x = featurize_spec(inputs, &self.input)?;
        let mut out = DMatrix::zeros(inputs.len(), self.models.len());
        for (k, m) in self.models.iter().enumerate() {
            for (i, v) in m.predict(&x)?.into_iter().enumerate() {
                out[(i, k)] = v;
            }
        }
        Ok(out)
    }

    /// Observed output coordinates for the given output streams.
    pub fn targets(&self, outputs: &[Stream]) -> Result<DMatrix<f64>> {
        Ok(featurize_spec(outputs, &self.output)?.values)
    }
}

/// Ridge regression of each coordinate of `S(τ)` up to `n_out` on `S(γ)` up
/// to `n_in`.
pub fn fit_conditional_law(
    pairs: &[(Stream, Stream)],
    n_in: usize,
    n_out: usize,
    lambda: f64,
    transform: Transform,
) -> Result<ConditionalLaw> {
    if pairs.len() < 2 {
        return Err(Error::InvalidInput("need at least two pairs".into()));
    }
    let (inputs, outputs): (Vec<Stream>, Vec<Stream>) = pairs.iter().cloned().unzip();
    let x = featurize(&inputs, n_in, transform)?;
    let y = featurize(&outputs, n_out, transform)?;
    let models = (0..y.cols())
        .into_par_iter()
        .map(|k| {
            let target: Vec<f64> = y.values.column(k).iter().copied().collect();
            fit_ridge(&x, &target, lambda)
        })
        .collect::<Result<_>>()?;
    Ok(ConditionalLaw {
        input: x.spec,
        output: y.spec,
        output_columns: y.columns,
        models,
    })
}

/// Coefficient of determination per column; `None` for constant targets.
pub fn r_squared(predicted: &DMatrix<f64>, observed: &DMatrix<f64>) -> Vec<Option<f64>> {
    (0..observed.ncols())
        .map(|k| {
            let obs = observed.column(k);
            let mean = obs.mean();
            let ss_tot: f64 = obs.iter().map(|v| (v - mean).powi(2)).sum();
            let ss_res: f64 = obs.iter().zip(predicted.column(k).iter()).map(|(o, p)| (o - p).powi(2)).sum();
            (ss_tot > 1e-300 * obs.len() as f64).then(|| 1.0 - ss_res / ss_tot)
        })
        .collect()
}

/// Parameters of the two-class synthetic stream task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub streams: usize,
    pub steps: usize,
    /// Lag-one cross-correlation of the increments.
    pub rho: f64,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        SyntheticTask {
            streams: 1000,
            steps: 50,
            rho: 0.85,
        }
    }
}

/// Two-dimensional streams with standard Gaussian increments. In class 1 the
/// second coordinate follows the first with lag-one correlation `rho`; in
/// class 0 the roles are swapped. Marginal laws agree, the expected Lévy
/// area has opposite signs. Each stream is then translated to start at the
/// origin and each coordinate divided by the sample standard deviation of
/// its increments. Labels alternate 0, 1, 0, ….
pub fn synthetic_two_class(task: &SyntheticTask, seed: u64) -> Result<(Vec<Stream>, Vec<f64>)> {
    if task.steps < 2 || !(task.rho.abs() < 1.0) {
        return Err(Error::InvalidInput("need steps ≥ 2 and |rho| < 1".into()));
    }
    let c = (1.0 - task.rho * task.rho).sqrt();
    let results: Vec<(Stream, f64)> = (0..task.streams)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let label = (i % 2) as f64;
            let mut lead = Vec::with_capacity(task.steps);
            let mut follow = Vec::with_capacity(task.steps);
            let mut prev: f64 = rng.sample(StandardNormal);
            for _ in 0..task.steps {
                let e: f64 = rng.sample(StandardNormal);
                let f: f64 = rng.sample(StandardNormal);
                follow.push(task.rho * prev + c * f);
                lead.push(e);
                prev = e;
            }
            let (dx, dy) = if label == 1.0 { (lead, follow) } else { (follow, lead) };
            let (dx, dy) = (standardize_increments(&dx), standardize_increments(&dy));
            let mut data = vec![0.0, 0.0];
            let (mut x, mut y) = (0.0, 0.0);
            for k in 0..task.steps {
                x += dx[k];
                y += dy[k];
                data.push(x);
                data.push(y);
            }
            let times = (0..=task.steps).map(|k| k as f64 / task.steps as f64).collect();
            Stream::from_flat(times, 2, data).map(|s| (s, label))
        })
        .collect::<Result<_>>()?;
    Ok(results.into_iter().unzip())
}

fn standardize_increments(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    v.iter().map(|x| x / sd).collect()
}

/// A manifest is a CSV with a `path` column naming one stream CSV per row,
/// relative to the manifest's directory. An optional `label` column is
/// returned when present.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<(Vec<Stream>, Option<Vec<f64>>)> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let path_col = headers
        .iter()
        .position(|h| h == "path")
        .ok_or_else(|| Error::Parse {
            row: 1,
            message: "manifest needs a 'path' column".into(),
        })?;
    let label_col = headers.iter().position(|h| h == "label");
    let mut files: Vec<PathBuf> = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row = i + 2;
        let file = record.get(path_col).ok_or_else(|| Error::Parse {
            row,
            message: "missing path".into(),
        })?;
        files.push(base.join(file));
        if let Some(c) = label_col {
            labels.push(parse_cell(record.get(c), row)?);
        }
    }
    let streams = files
        .par_iter()
        .map(|f| {
            read_csv_file(f).map_err(|e| match e {
                Error::Parse { row, message } => Error::Parse {
                    row,
                    message: format!("{}: {message}", f.display()),
                },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    Ok((streams, label_col.map(|_| labels)))
}

/// Targets from a CSV with a `label` column (or a single column).
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let col = match headers.iter().position(|h| h == "label") {
        Some(c) => c,
        None if headers.len() == 1 => 0,
        None => {
            return Err(Error::Parse {
                row: 1,
                message: "labels file needs a 'label' column".into(),
            })
        }
    };
    reader
        .records()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(csv_error)?;
            parse_cell(r.get(col), i + 2)
        })
        .collect()
}

fn parse_cell(cell: Option<&str>, row: usize) -> Result<f64> {
    let cell = cell.ok_or_else(|| Error::Parse {
        row,
        message: "missing value".into(),
    })?;
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            message: format!("not a number: {cell:?}"),
        })
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            row,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes `stream_NNNN.csv` files, `manifest.csv` and `labels.csv` into `dir`.
pub fn write_dataset(dir: impl AsRef<Path>, streams: &[Stream], labels: &[f64]) -> Result<()> {
    let dir = dir.as_ref();
    if streams.len() != labels.len() {
        return Err(Error::DimensionMismatch("one label per stream".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::from("path,label\n");
    let mut label_file = String::from("label\n");
    for (i, (s, l)) in streams.iter().zip(labels).enumerate() {
        let name = format!("stream_{i:04}.csv");
        s.write_csv_file(dir.join(&name))?;
        manifest.push_str(&format!("{name},{l}\n"));
        label_file.push_str(&format!("{l}\n"));
    }
    std::fs::write(dir.join("manifest.csv"), manifest)?;
    std::fs::write(dir.join("labels.csv"), label_file)?;
    Ok(())
}
