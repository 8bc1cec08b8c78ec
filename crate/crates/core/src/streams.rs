//! Piecewise-linear streams and their signatures.
//!
//! A [`Stream`] is a sequence of timestamped samples in ℝᵈ, interpreted as
//! the polygonal path through them. Its signature is the Chen product of the
//! per-segment exponentials `exp(Δx)`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{tensor_to_lie_coords, LieCoordinates};
use crate::tensor::{outer_accumulate, NormFlavor, TruncatedTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    dim: usize,
    times: Vec<f64>,
    /// Row-major samples, `times.len() × dim`.
    data: Vec<f64>,
}

impl Stream {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch("ragged stream points".into()));
        }
        Self::from_flat(times, dim, points.into_iter().flatten().collect())
    }

    pub fn from_flat(times: Vec<f64>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("a stream needs at least one sample".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("stream dimension must be positive".into()));
        }
        if data.len() != times.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} samples of dimension {dim}",
                data.len(),
                times.len()
            )));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "times must be strictly increasing (sample {} at {} follows {})",
                i + 1,
                times[i + 1],
                times[i]
            )));
        }
        if times.iter().chain(&data).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("stream contains non-finite values".into()));
        }
        Ok(Stream { dim, times, data })
    }

    /// Samples at times `0, 1, 2, …`.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let times = (0..points.len()).map(|i| i as f64).collect();
        Self::new(times, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Segment increments `x_{i+1} − x_i`.
    pub fn increments(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.data
            .chunks_exact(self.dim)
            .zip(self.data.chunks_exact(self.dim).skip(1))
            .map(|(a, b)| b.iter().zip(a).map(|(y, x)| y - x).collect())
    }

    /// Length of the polygon, measuring each increment with `flavor`.
    pub fn total_variation(&self, flavor: NormFlavor) -> f64 {
        self.increments().map(|v| flavor.of(&v)).sum()
    }

    /// Linear interpolation, clamped to the sampled interval.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        if t <= self.start_time() {
            return self.point(0).to_vec();
        }
        if t >= self.end_time() {
            return self.point(self.len() - 1).to_vec();
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let theta = (t - t0) / (t1 - t0);
        self.point(i)
            .iter()
            .zip(self.point(i + 1))
            .map(|(a, b)| a + theta * (b - a))
            .collect()
    }

    /// Sub-stream over `[a, b]`, with interpolated end points.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Stream> {
        let eps = 1e-12 * (1.0 + self.start_time().abs().max(self.end_time().abs()));
        if a < self.start_time() - eps || b > self.end_time() + eps || b < a {
            return Err(Error::Domain(format!(
                "interval [{a}, {b}] not inside [{}, {}]",
                self.start_time(),
                self.end_time()
            )));
        }
        let mut times = vec![a];
        let mut data = self.value_at(a);
        if b > a {
            for (i, &t) in self.times.iter().enumerate() {
                if t > a && t < b {
                    times.push(t);
                    data.extend_from_slice(self.point(i));
                }
            }
            times.push(b);
            data.extend(self.value_at(b));
        }
        Stream::from_flat(times, self.dim, data)
    }

    /// `self` followed by `other` translated to start where `self` ends.
    pub fn concat(&self, other: &Stream) -> Result<Stream> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot concatenate streams of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        let end = self.point(self.len() - 1).to_vec();
        let shift: Vec<f64> = end.iter().zip(other.point(0)).map(|(e, s)| e - s).collect();
        let dt = self.end_time() - other.start_time();
        let mut times = self.times.clone();
        let mut data = self.data.clone();
        for i in 1..other.len() {
            times.push(other.times[i] + dt);
            data.extend(other.point(i).iter().zip(&shift).map(|(x, s)| x + s));
        }
        Stream::from_flat(times, self.dim, data)
    }

    /// The same image traversed backwards over the same time interval.
    pub fn reverse(&self) -> Stream {
        let (t0, t1) = (self.start_time(), self.end_time());
        let times = self.times.iter().rev().map(|&t| t0 + t1 - t).collect();
        let data = self.data.chunks_exact(self.dim).rev().flatten().copied().collect();
        Stream {
            dim: self.dim,
            times,
            data,
        }
    }

    /// Inserts `k − 1` interpolated samples inside every segment.
    pub fn subdivide(&self, k: usize) -> Stream {
        let k = k.max(1);
        let mut times = vec![self.times[0]];
        let mut data = self.point(0).to_vec();
        for i in 1..self.len() {
            let (a, b) = (self.point(i - 1), self.point(i));
            let (s, t) = (self.times[i - 1], self.times[i]);
            for j in 1..=k {
                let theta = j as f64 / k as f64;
                times.push(if j == k { t } else { s + theta * (t - s) });
                data.extend(a.iter().zip(b).map(|(x, y)| x + theta * (y - x)));
            }
        }
        Stream {
            dim: self.dim,
            times,
            data,
        }
    }

    /// Same samples with times mapped affinely onto `[start, start + duration]`.
    pub fn retime(&self, start: f64, duration: f64) -> Result<Stream> {
        let (t0, t1) = (self.start_time(), self.end_time());
        let span = t1 - t0;
        let times = if span > 0.0 {
            self.times.iter().map(|&t| start + (t - t0) / span * duration).collect()
        } else {
            vec![start]
        };
        Stream::from_flat(times, self.dim, self.data.clone())
    }

    /// Prepends time as coordinate 1, so `d → d + 1`.
    pub fn time_augment(&self) -> Stream {
        let mut data = Vec::with_capacity(self.len() * (self.dim + 1));
        for (t, p) in self.times.iter().zip(self.points()) {
            data.push(*t);
            data.extend_from_slice(p);
        }
        Stream {
            dim: self.dim + 1,
            times: self.times.clone(),
            data,
        }
    }

    /// Lead-lag embedding into `2d` dimensions: coordinates `1..=d` lead,
    /// `d+1..=2d` lag. On every data step the lead moves first (at the
    /// segment midpoint time), then the lag catches up.
    pub fn lead_lag(&self) -> Stream {
        let n = self.len();
        let mut times = Vec::with_capacity(2 * n - 1);
        let mut data = Vec::with_capacity((2 * n - 1) * 2 * self.dim);
        let push = |data: &mut Vec<f64>, lead: &[f64], lag: &[f64]| {
            data.extend_from_slice(lead);
            data.extend_from_slice(lag);
        };
        times.push(self.times[0]);
        push(&mut data, self.point(0), self.point(0));
        for i in 1..n {
            times.push(0.5 * (self.times[i - 1] + self.times[i]));
            push(&mut data, self.point(i), self.point(i - 1));
            times.push(self.times[i]);
            push(&mut data, self.point(i), self.point(i));
        }
        Stream {
            dim: 2 * self.dim,
            times,
            data,
        }
    }

    pub fn transform(&self, transform: Transform) -> Stream {
        match transform {
            Transform::None => self.clone(),
            Transform::Time => self.time_augment(),
            Transform::LeadLag => self.lead_lag(),
        }
    }

    pub fn signature(&self, depth: usize) -> TruncatedTensor {
        signature(self, depth)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for (t, p) in self.times.iter().zip(self.points()) {
            let mut row = vec![t.to_string()];
            row.extend(p.iter().map(|x| x.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            row,
            message: format!("{kind:?}"),
        },
    }
}

/// Canonical embeddings applied before computing signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    None,
    Time,
    LeadLag,
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Transform::None),
            "time" => Ok(Transform::Time),
            "leadlag" => Ok(Transform::LeadLag),
            other => Err(Error::InvalidInput(format!("unknown transform {other:?}"))),
        }
    }
}

/// Reads a stream from CSV with header `t,x1,…,xd`. Row numbers in errors
/// are file line numbers (the header is line 1).
pub fn ingest_csv<R: Read>(source: R) -> Result<Stream> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 2 {
        return Err(Error::Parse {
            row: 1,
            message: "header must be t,x1,...,xd".into(),
        });
    }
    let dim = header.len() - 1;
    let mut times = Vec::new();
    let mut data = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != dim + 1 {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", dim + 1, record.len()),
            });
        }
        let mut values = Vec::with_capacity(dim + 1);
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric cell {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite cell {field:?}"),
                });
            }
            values.push(v);
        }
        if let Some(&prev) = times.last() {
            if !(values[0] > prev) {
                return Err(Error::Parse {
                    row,
                    message: format!("time {} does not exceed previous time {prev}", values[0]),
                });
            }
        }
        times.push(values[0]);
        data.extend_from_slice(&values[1..]);
    }
    if times.is_empty() {
        return Err(Error::Parse {
            row: 2,
            message: "no data rows".into(),
        });
    }
    Stream::from_flat(times, dim, data)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Stream> {
    ingest_csv(std::fs::File::open(path)?)
}

/// Right-multiplies `sig` in place by `exp(v)`, Horner style:
/// level k of `S ⊗ exp(v)` is `((S₀v/k + S₁)v/(k−1) + …)v + S_k`.
pub fn extend_by_segment(sig: &mut TruncatedTensor, v: &[f64]) {
    let depth = sig.depth();
    assert_eq!(v.len(), sig.dim(), "increment dimension");
    for k in (1..=depth).rev() {
        let mut acc: Vec<f64> = sig.level(0).to_vec();
        for i in 1..=k {
            let mut next = sig.level(i).to_vec();
            outer_accumulate(&mut next, &acc, v, 1.0 / (k - i + 1) as f64);
            acc = next;
        }
        sig.level_mut(k).copy_from_slice(&acc);
    }
}

/// Running signature with preallocated scratch space, levels stored flat.
#[derive(Debug, Clone)]
pub struct SignatureAccumulator {
    dim: usize,
    depth: usize,
    offsets: Vec<usize>,
    flat: Vec<f64>,
    acc: Vec<f64>,
    next: Vec<f64>,
}

impl SignatureAccumulator {
    pub fn new(dim: usize, depth: usize) -> Self {
        let mut offsets = vec![0];
        for k in 0..=depth {
            offsets.push(offsets[k] + dim.pow(k as u32));
        }
        let top = dim.pow(depth as u32);
        let mut a = SignatureAccumulator {
            dim,
            depth,
            flat: vec![0.0; offsets[depth + 1]],
            offsets,
            acc: vec![0.0; top],
            next: vec![0.0; top],
        };
        a.reset();
        a
    }

    /// Back to the identity.
    pub fn reset(&mut self) {
        self.flat.iter_mut().for_each(|x| *x = 0.0);
        self.flat[0] = 1.0;
    }

    pub fn push(&mut self, v: &[f64]) {
        let d = self.dim;
        debug_assert_eq!(v.len(), d);
        for k in (1..=self.depth).rev() {
            self.acc[0] = self.flat[0];
            let mut len = 1;
            for i in 1..=k {
                let scale = 1.0 / (k - i + 1) as f64;
                let level = &self.flat[self.offsets[i]..self.offsets[i + 1]];
                for a in 0..len {
                    let s = self.acc[a] * scale;
                    for b in 0..d {
                        self.next[a * d + b] = level[a * d + b] + s * v[b];
                    }
                }
                std::mem::swap(&mut self.acc, &mut self.next);
                len *= d;
            }
            let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
            self.flat[lo..hi].copy_from_slice(&self.acc[..len]);
        }
    }

    /// All levels concatenated, as in [`TruncatedTensor::to_flat`].
    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn to_tensor(&self) -> TruncatedTensor {
        let levels = (0..=self.depth)
            .map(|k| self.flat[self.offsets[k]..self.offsets[k + 1]].to_vec())
            .collect();
        TruncatedTensor::from_levels(self.dim, self.depth, levels)
            .expect("consistent sizes")
            .mark_grouplike(true)
    }
}

/// Truncated signature of the polygonal path.
pub fn signature(stream: &Stream, depth: usize) -> TruncatedTensor {
    let mut acc = SignatureAccumulator::new(stream.dim(), depth);
    for v in stream.increments() {
        acc.push(&v);
    }
    acc.to_tensor()
}

/// Lyndon coordinates of the truncated log-signature.
pub fn log_signature(stream: &Stream, depth: usize) -> Result<LieCoordinates> {
    tensor_to_lie_coords(&signature(stream, depth).log()?)
}

/// Lower-bound profile for the d_p distance between two streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDistanceReport {
    pub p: f64,
    /// Dyadic refinement levels `1..=max_level`.
    pub levels: Vec<usize>,
    /// The partition sum at each level.
    pub partition_sums: Vec<f64>,
    /// Running supremum of the partition sums (non-decreasing).
    pub estimates: Vec<f64>,
}

/// Evaluates `Σᵢ max_{m ≤ ⌊p⌋} ‖Sᵐ(a|[uᵢ,uᵢ₊₁]) − Sᵐ(b|[uᵢ,uᵢ₊₁])‖^{p/m}` on the
/// dyadic partitions of `[0, 1]` (both streams rescaled to unit time),
/// using ℓ¹ level norms. Each value bounds the supremum over all
/// partitions from below.
pub fn dp_distance_estimate(a: &Stream, b: &Stream, p: f64, max_level: usize) -> Result<PartitionDistanceReport> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must be at least 1, got {p}")));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "streams of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let a = a.retime(0.0, 1.0)?;
    let b = b.retime(0.0, 1.0)?;
    let top = p.floor() as usize;
    let mut report = PartitionDistanceReport {
        p,
        levels: Vec::new(),
        partition_sums: Vec::new(),
        estimates: Vec::new(),
    };
    let mut best: f64 = 0.0;
    for level in 1..=max_level {
        let pieces = 1usize << level;
        let mut sum = 0.0;
        for i in 0..pieces {
            let (s, t) = (i as f64 / pieces as f64, (i + 1) as f64 / pieces as f64);
            let sa = signature(&a.restrict(s, t)?, top);
            let sb = signature(&b.restrict(s, t)?, top);
            let term = (1..=top)
                .map(|m| {
                    let diff: f64 = sa.level(m).iter().zip(sb.level(m)).map(|(x, y)| (x - y).abs()).sum();
                    diff.powf(p / m as f64)
                })
                .fold(0.0, f64::max);
            sum += term;
        }
        best = best.max(sum);
        report.levels.push(level);
        report.partition_sums.push(sum);
        report.estimates.push(best);
    }
    Ok(report)
}
