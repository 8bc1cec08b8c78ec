//! Expected signature of planar Brownian motion stopped on leaving a domain.
//!
//! `F(z) = E_z[S(X|[0,T])] = (f₀, f₁, …)` satisfies
//!
//! ```text
//! Δf_{n+2} = −Σᵢ eᵢ⊗eᵢ⊗f_n − 2 Σᵢ eᵢ⊗∂ᵢf_{n+1},   f₀ ≡ 1,  f₁ ≡ 0,  f_j|∂Ω = 0 (j > 0)
//! ```
//!
//! Each tensor component is a Poisson problem. The grid is the lattice `hℤ²`;
//! nodes adjacent to the boundary use the Shortley–Weller stencil with the
//! exact distance to the boundary along each grid line, which keeps the
//! scheme second order on curved boundaries. Systems are solved with
//! Jacobi-preconditioned BiCGSTAB (the stencil is not symmetric next to the
//! boundary).

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams::SignatureAccumulator;
use crate::tensor::{NormFlavor, TruncatedTensor, Word};

const DIM: usize = 2;

/// Relative residual target for the Poisson solves.
pub const SOLVER_TOLERANCE: f64 = 1e-12;

/// A bounded planar domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum DomainShape {
    /// Disk of the given radius centred at the origin.
    Disk { radius: f64 },
    /// Simple polygon, vertices in order.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl FromStr for DomainShape {
    type Err = Error;

    /// `disk:R` or `poly:x1,y1;x2,y2;…`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse domain {s:?}; use disk:R or poly:x,y;x,y;..."));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "disk" => {
                let radius: f64 = rest.trim().parse().map_err(|_| bad())?;
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(bad());
                }
                Ok(DomainShape::Disk { radius })
            }
            "poly" => {
                let vertices = rest
                    .split(';')
                    .map(|pair| {
                        let (x, y) = pair.split_once(',').ok_or_else(bad)?;
                        Ok([x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?])
                    })
                    .collect::<Result<Vec<[f64; 2]>>>()?;
                if vertices.len() < 3 {
                    return Err(bad());
                }
                Ok(DomainShape::Polygon { vertices })
            }
            _ => Err(bad()),
        }
    }
}

impl DomainShape {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            DomainShape::Disk { radius } => p[0] * p[0] + p[1] * p[1] < radius * radius,
            DomainShape::Polygon { vertices } => {
                let mut inside = false;
                let n = vertices.len();
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// `[xmin, xmax, ymin, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        match self {
            DomainShape::Disk { radius } => [-radius, *radius, -radius, *radius],
            DomainShape::Polygon { vertices } => vertices.iter().fold(
                [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
                |b, v| [b[0].min(v[0]), b[1].max(v[0]), b[2].min(v[1]), b[3].max(v[1])],
            ),
        }
    }

    /// Smallest `s ∈ [0, 1]` at which `p + s(q − p)` meets the boundary, if any.
    pub fn first_crossing(&self, p: [f64; 2], q: [f64; 2]) -> Option<f64> {
        let d = [q[0] - p[0], q[1] - p[1]];
        match self {
            DomainShape::Disk { radius } => {
                let a = d[0] * d[0] + d[1] * d[1];
                if a == 0.0 {
                    return None;
                }
                let b = 2.0 * (p[0] * d[0] + p[1] * d[1]);
                let c = p[0] * p[0] + p[1] * p[1] - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
                    .into_iter()
                    .filter(|s| (0.0..=1.0).contains(s))
                    .reduce(f64::min)
            }
            DomainShape::Polygon { vertices } => {
                let n = vertices.len();
                let mut best: Option<f64> = None;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let denom = d[0] * e[1] - d[1] * e[0];
                    if denom == 0.0 {
                        continue;
                    }
                    let w = [a[0] - p[0], a[1] - p[1]];
                    let s = (w[0] * e[1] - w[1] * e[0]) / denom;
                    let t = (w[0] * d[1] - w[1] * d[0]) / denom;
                    if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
                        best = Some(best.map_or(s, |b| b.min(s)));
                    }
                }
                best
            }
        }
    }
}

/// Uniform grid on `hℤ²` with the interior nodes of a domain numbered.
#[derive(Debug, Clone)]
pub struct GridDomain {
    shape: DomainShape,
    h: f64,
    /// Lattice index of the first column and row.
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    /// Node → unknown number, `None` outside the domain.
    index: Vec<Option<usize>>,
    /// Unknown → `(ix, iy)` grid position.
    nodes: Vec<(usize, usize)>,
    /// Unknown → arm lengths towards `+x, −x, +y, −y`.
    arms: Vec<[f64; 4]>,
}

const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

impl GridDomain {
    pub fn new(shape: DomainShape, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        let [xmin, xmax, ymin, ymax] = shape.bounding_box();
        let i0 = (xmin / h).floor() as i64 - 1;
        let j0 = (ymin / h).floor() as i64 - 1;
        let nx = ((xmax / h).ceil() as i64 + 1 - i0 + 1) as usize;
        let ny = ((ymax / h).ceil() as i64 + 1 - j0 + 1) as usize;
        if nx * ny > 50_000_000 {
            return Err(Error::InvalidInput("grid too large".into()));
        }
        let mut index = vec![None; nx * ny];
        let mut nodes = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let p = [(i0 + ix as i64) as f64 * h, (j0 + iy as i64) as f64 * h];
                if shape.contains(p) {
                    index[iy * nx + ix] = Some(nodes.len());
                    nodes.push((ix, iy));
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::InvalidInput("domain contains no grid nodes at this spacing".into()));
        }
        let mut grid = GridDomain {
            shape,
            h,
            i0,
            j0,
            nx,
            ny,
            index,
            nodes,
            arms: Vec::new(),
        };
        grid.arms = (0..grid.nodes.len())
            .map(|n| {
                let (ix, iy) = grid.nodes[n];
                let p = grid.position(ix, iy);
                let mut arms = [h; 4];
                for (k, &(di, dj)) in DIRS.iter().enumerate() {
                    let q = [p[0] + di as f64 * h, p[1] + dj as f64 * h];
                    let neighbour_inside = grid.unknown(ix as i64 + di, iy as i64 + dj).is_some();
                    let crossing = grid.shape.first_crossing(p, q);
                    arms[k] = match (neighbour_inside, crossing) {
                        (true, None) => h,
                        (_, Some(s)) => (s * h).max(1e-9 * h),
                        (false, None) => h,
                    };
                }
                arms
            })
            .collect();
        Ok(grid)
    }

    pub fn shape(&self) -> &DomainShape {
        &self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn size(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn interior_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn position(&self, ix: usize, iy: usize) -> [f64; 2] {
        [(self.i0 + ix as i64) as f64 * self.h, (self.j0 + iy as i64) as f64 * self.h]
    }

    /// Interior mask, row-major `ny × nx`.
    pub fn mask(&self) -> Vec<bool> {
        self.index.iter().map(Option::is_some).collect()
    }

    fn unknown(&self, ix: i64, iy: i64) -> Option<usize> {
        if ix < 0 || iy < 0 || ix >= self.nx as i64 || iy >= self.ny as i64 {
            return None;
        }
        self.index[iy as usize * self.nx + ix as usize]
    }

    /// Unknown number of the grid node nearest to `p`, if that node is interior.
    pub fn nearest_unknown(&self, p: [f64; 2]) -> Option<usize> {
        let ix = (p[0] / self.h).round() as i64 - self.i0;
        let iy = (p[1] / self.h).round() as i64 - self.j0;
        self.unknown(ix, iy)
    }

    fn neighbours(&self, n: usize) -> [Option<usize>; 4] {
        let (ix, iy) = self.nodes[n];
        let arms = self.arms[n];
        let mut out = [None; 4];
        for (k, &(di, dj)) in DIRS.iter().enumerate() {
            if arms[k] == self.h {
                out[k] = self.unknown(ix as i64 + di, iy as i64 + dj);
            }
        }
        out
    }

    /// Assembles `−Δ_h` with zero Dirichlet data.
    fn assemble(&self) -> SparseMatrix {
        let n = self.nodes.len();
        let mut m = SparseMatrix {
            row_ptr: Vec::with_capacity(n + 1),
            cols: Vec::with_capacity(5 * n),
            vals: Vec::with_capacity(5 * n),
        };
        m.row_ptr.push(0);
        for row in 0..n {
            let a = self.arms[row];
            let nb = self.neighbours(row);
            let diag = 2.0 / (a[0] * a[1]) + 2.0 / (a[2] * a[3]);
            m.cols.push(row);
            m.vals.push(diag);
            let coef = [
                2.0 / (a[0] * (a[0] + a[1])),
                2.0 / (a[1] * (a[0] + a[1])),
                2.0 / (a[2] * (a[2] + a[3])),
                2.0 / (a[3] * (a[2] + a[3])),
            ];
            for k in 0..4 {
                if let Some(col) = nb[k] {
                    m.cols.push(col);
                    m.vals.push(-coef[k]);
                }
            }
            m.row_ptr.push(m.cols.len());
        }
        m
    }

    /// Second-order derivative along axis `axis` (0 = x, 1 = y); values
    /// outside the domain are zero.
    fn derivative(&self, u: &[f64], axis: usize) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|n| {
                let a = self.arms[n];
                let nb = self.neighbours(n);
                let (ap, am) = (a[2 * axis], a[2 * axis + 1]);
                let up = nb[2 * axis].map_or(0.0, |j| u[j]);
                let um = nb[2 * axis + 1].map_or(0.0, |j| u[j]);
                (am * am * up - ap * ap * um + (ap * ap - am * am) * u[n]) / (ap * am * (ap + am))
            })
            .collect()
    }
}

struct SparseMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (row, out) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *out = s;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.row_ptr.len() - 1)
            .map(|row| {
                (self.row_ptr[row]..self.row_ptr[row + 1])
                    .find(|&k| self.cols[k] == row)
                    .map_or(1.0, |k| self.vals[k])
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned BiCGSTAB. Returns the solution and its true relative residual.
fn bicgstab(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = inv_diag[i] * p[i];
        }
        a.mul_into(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if dot(&s, &s).sqrt() <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            r.copy_from_slice(&s);
            break;
        }
        for i in 0..n {
            z[i] = inv_diag[i] * s[i];
        }
        a.mul_into(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if dot(&r, &r).sqrt() <= tol * bnorm || omega == 0.0 {
            break;
        }
    }
    let mut ax = vec![0.0; n];
    a.mul_into(&x, &mut ax);
    let res = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() / bnorm;
    if !res.is_finite() || res > 100.0 * tol.max(1e-14) {
        return Err(Error::SolverNonConvergence { iterations, residual: res });
    }
    Ok((x, res))
}

/// Solution of the recurrence on a grid, levels `0..=depth`.
#[derive(Debug, Clone)]
pub struct ExpectedSigField {
    grid: GridDomain,
    depth: usize,
    /// `levels[k][component][unknown]`, components in lexicographic word order.
    levels: Vec<Vec<Vec<f64>>>,
    /// Largest relative residual over all Poisson solves.
    max_residual: f64,
}

impl ExpectedSigField {
    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Values of one component over the interior unknowns.
    pub fn component(&self, word: &Word) -> Result<&[f64]> {
        if word.degree() > self.depth {
            return Err(Error::OutOfDepth {
                degree: word.degree(),
                depth: self.depth,
            });
        }
        if word.letters().iter().any(|&l| l == 0 || l > DIM) {
            return Err(Error::InvalidInput(format!("word {word} is not over two letters")));
        }
        Ok(&self.levels[word.degree()][word.index(DIM)])
    }

    /// Row-major `ny × nx` image of a component, `None` outside the domain.
    pub fn component_image(&self, word: &Word) -> Result<Vec<Option<f64>>> {
        let values = self.component(word)?;
        Ok(self.grid.index.iter().map(|i| i.map(|n| values[n])).collect())
    }

    fn tensor_at(&self, n: usize) -> TruncatedTensor {
        let levels = self
            .levels
            .iter()
            .map(|comps| comps.iter().map(|c| c[n]).collect())
            .collect();
        TruncatedTensor::from_levels(DIM, self.depth, levels).expect("consistent level sizes")
    }

    /// The expected signature at the grid node nearest to `p`.
    pub fn value_at(&self, p: [f64; 2]) -> Result<TruncatedTensor> {
        let n = self
            .grid
            .nearest_unknown(p)
            .ok_or_else(|| Error::Domain(format!("point {p:?} is not an interior grid node")))?;
        Ok(self.tensor_at(n))
    }
}

/// Solves the recurrence for levels `0..=depth` on `grid`.
pub fn solve_recurrence(grid: &GridDomain, depth: usize) -> Result<ExpectedSigField> {
    if depth < 2 {
        return Err(Error::InvalidInput("recurrence needs depth ≥ 2".into()));
    }
    let n = grid.interior_count();
    let matrix = grid.assemble();
    let max_iter = 50 * n + 1000;
    let mut levels: Vec<Vec<Vec<f64>>> = vec![vec![vec![1.0; n]], vec![vec![0.0; n]; DIM]];
    let mut max_residual: f64 = 0.0;
    for k in 2..=depth {
        let prev = &levels[k - 1];
        let prev2 = &levels[k - 2];
        // ∂ᵢ of every level-(k−1) component, computed once
        let derivs: Vec<[Vec<f64>; DIM]> = prev
            .iter()
            .map(|u| [grid.derivative(u, 0), grid.derivative(u, 1)])
            .collect();
        let comps = DIM.pow(k as u32);
        let stride1 = DIM.pow((k - 1) as u32);
        let stride2 = DIM.pow((k - 2) as u32);
        let solved: Vec<Result<(Vec<f64>, f64)>> = (0..comps)
            .into_par_iter()
            .map(|c| {
                let first = c / stride1;
                let second = (c / stride2) % DIM;
                let rest1 = c % stride1;
                let rest2 = c % stride2;
                // −Δf = δ_{w₁w₂} f_{k−2}[w₃…] + 2 ∂_{w₁} f_{k−1}[w₂…]
                let mut rhs = vec![0.0; n];
                if first == second {
                    for (r, v) in rhs.iter_mut().zip(&prev2[rest2]) {
                        *r += v;
                    }
                }
                for (r, v) in rhs.iter_mut().zip(&derivs[rest1][first]) {
                    *r += 2.0 * v;
                }
                bicgstab(&matrix, &rhs, SOLVER_TOLERANCE, max_iter)
            })
            .collect();
        let mut level = Vec::with_capacity(comps);
        for r in solved {
            let (u, res) = r?;
            max_residual = max_residual.max(res);
            level.push(u);
        }
        levels.push(level);
    }
    Ok(ExpectedSigField {
        grid: grid.clone(),
        depth,
        levels,
        max_residual,
    })
}

/// Monte Carlo estimate with elementwise standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: TruncatedTensor,
    pub stderr: TruncatedTensor,
    pub paths: usize,
    pub mean_steps: f64,
}

const CHUNK: usize = 512;

/// Simulates Brownian paths from `start` with Gaussian steps of variance `dt`
/// per coordinate until the first step that leaves the domain, whose end is
/// replaced by the crossing point on the boundary. Path `i` draws from the
/// ChaCha8 stream `i` of `seed`, so results do not depend on threading.
pub fn mc_expected_sig(shape: &DomainShape, start: [f64; 2], depth: usize, paths: usize, dt: f64, seed: u64) -> Result<McEstimate> {
    if !shape.contains(start) {
        return Err(Error::Domain(format!("start {start:?} is not strictly inside the domain")));
    }
    if paths == 0 || !(dt > 0.0) {
        return Err(Error::InvalidInput("need paths ≥ 1 and dt > 0".into()));
    }
    let total = TruncatedTensor::zero(DIM, depth).to_flat().len();
    let sd = dt.sqrt();
    let chunks: Vec<(Vec<f64>, Vec<f64>, u64)> = (0..paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; total];
            let mut sumsq = vec![0.0; total];
            let mut steps = 0u64;
            let mut acc = SignatureAccumulator::new(DIM, depth);
            for path in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(path as u64);
                acc.reset();
                let mut pos = start;
                loop {
                    steps += 1;
                    let dx = [sd * rng.sample::<f64, _>(StandardNormal), sd * rng.sample::<f64, _>(StandardNormal)];
                    let next = [pos[0] + dx[0], pos[1] + dx[1]];
                    if shape.contains(next) {
                        acc.push(&dx);
                        pos = next;
                    } else {
                        let s = shape.first_crossing(pos, next).unwrap_or(1.0);
                        acc.push(&[s * dx[0], s * dx[1]]);
                        break;
                    }
                }
                for (i, &x) in acc.flat().iter().enumerate() {
                    sum[i] += x;
                    sumsq[i] += x * x;
                }
            }
            (sum, sumsq, steps)
        })
        .collect();
    let mut sum = vec![0.0; total];
    let mut sumsq = vec![0.0; total];
    let mut steps = 0u64;
    for (s, q, n) in chunks {
        for i in 0..total {
            sum[i] += s[i];
            sumsq[i] += q[i];
        }
        steps += n;
    }
    let n = paths as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr: Vec<f64> = if paths > 1 {
        sumsq
            .iter()
            .zip(&mean)
            .map(|(q, m)| ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
            .collect()
    } else {
        vec![0.0; total]
    };
    Ok(McEstimate {
        mean: unflatten(depth, mean),
        stderr: unflatten(depth, stderr),
        paths,
        mean_steps: steps as f64 / n,
    })
}

fn unflatten(depth: usize, flat: Vec<f64>) -> TruncatedTensor {
    let mut levels = Vec::new();
    let mut it = flat.into_iter();
    for k in 0..=depth {
        levels.push(it.by_ref().take(DIM.pow(k as u32)).collect());
    }
    TruncatedTensor::from_levels(DIM, depth, levels).expect("consistent sizes")
}

/// Level norms of an expected signature and the growth profile used to
/// eyeball the radius of convergence of `Σ zⁿ E‖Sⁿ‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub flavor: NormFlavor,
    /// `aₙ = ‖E Sⁿ‖`, `n = 0..=N`.
    pub norms: Vec<f64>,
    /// `aₙ₊₁/aₙ` for `n = 0..N`; 0 where `aₙ` vanishes.
    pub ratios: Vec<f64>,
    /// `aₙ₊₂/aₙ` for `n = 0..N−1`; 0 where `aₙ` vanishes.
    pub even_ratios: Vec<f64>,
    /// `(1/aₙ)^{1/n}` for `n = 1..=N`; `None` where `aₙ` vanishes.
    pub root_bounds: Vec<Option<f64>>,
    /// `true` at `n` when `aₙ` was treated as zero.
    pub zero_levels: Vec<bool>,
}

/// Reports ℓ¹ and ℓ² profiles side by side.
pub fn radius_diagnostic(t: &TruncatedTensor) -> Result<[RadiusReport; 2]> {
    if t.depth() < 3 {
        return Err(Error::InvalidInput("radius diagnostic needs depth ≥ 3".into()));
    }
    let report = |flavor: NormFlavor| {
        let norms = t.grade_norms(flavor).norms;
        let scale = norms.iter().fold(0.0f64, |m, &x| m.max(x));
        let zero: Vec<bool> = norms.iter().map(|&a| a <= 1e-12 * scale).collect();
        let ratio = |num: f64, den_idx: usize| if zero[den_idx] { 0.0 } else { num / norms[den_idx] };
        RadiusReport {
            flavor,
            ratios: (0..norms.len() - 1).map(|n| ratio(norms[n + 1], n)).collect(),
            even_ratios: (0..norms.len() - 2).map(|n| ratio(norms[n + 2], n)).collect(),
            root_bounds: (1..norms.len())
                .map(|n| (!zero[n]).then(|| (1.0 / norms[n]).powf(1.0 / n as f64)))
                .collect(),
            zero_levels: zero,
            norms,
        }
    };
    Ok([report(NormFlavor::L1), report(NormFlavor::L2)])
}
