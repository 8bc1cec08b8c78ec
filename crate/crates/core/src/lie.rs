//! Lyndon basis of the free Lie algebra and Lie coordinates of log-signatures.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tensor::{outer_accumulate, TruncatedTensor, Word};

/// Relative residual above which a tensor is rejected as a Lie element.
pub const LIE_TOLERANCE: f64 = 1e-9;

/// A binary bracketing of letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Bracket {
    Letter(usize),
    Pair(Box<Bracket>, Box<Bracket>),
}

impl Bracket {
    pub fn degree(&self) -> usize {
        match self {
            Bracket::Letter(_) => 1,
            Bracket::Pair(a, b) => a.degree() + b.degree(),
        }
    }

    /// Homogeneous tensor of degree `self.degree()` obtained by expanding
    /// `[A,B] = A⊗B − B⊗A`.
    pub fn expand(&self, dim: usize) -> Vec<f64> {
        match self {
            Bracket::Letter(l) => {
                let mut v = vec![0.0; dim];
                v[l - 1] = 1.0;
                v
            }
            Bracket::Pair(a, b) => {
                let (pa, pb) = (a.expand(dim), b.expand(dim));
                let mut out = vec![0.0; pa.len() * pb.len()];
                outer_accumulate(&mut out, &pa, &pb, 1.0);
                outer_accumulate(&mut out, &pb, &pa, -1.0);
                out
            }
        }
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bracket::Letter(l) => write!(f, "{l}"),
            Bracket::Pair(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

/// A Lyndon word together with its standard bracketing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LyndonBasisElement {
    pub word: Word,
    pub bracket: Bracket,
}

impl LyndonBasisElement {
    pub fn degree(&self) -> usize {
        self.word.degree()
    }

    /// Expansion of the bracketing as a tensor of the given depth.
    pub fn bracket_expand(&self, depth: usize, dim: usize) -> Result<TruncatedTensor> {
        let k = self.degree();
        if k > depth {
            return Err(Error::OutOfDepth { degree: k, depth });
        }
        let mut t = TruncatedTensor::zero(dim, depth);
        t.level_mut(k).copy_from_slice(&self.bracket.expand(dim));
        Ok(t)
    }
}

impl fmt::Display for LyndonBasisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bracket.fmt(f)
    }
}

/// True when `w` is strictly smaller than each of its proper suffixes.
pub fn is_lyndon(w: &[usize]) -> bool {
    !w.is_empty() && (1..w.len()).all(|i| w < &w[i..])
}

/// Standard bracketing: `w = uv` with `v` the longest proper Lyndon suffix.
pub fn standard_bracketing(w: &[usize]) -> Bracket {
    if w.len() == 1 {
        return Bracket::Letter(w[0]);
    }
    let split = (1..w.len())
        .find(|&i| is_lyndon(&w[i..]))
        .expect("every Lyndon word of length ≥ 2 has a proper Lyndon suffix");
    Bracket::Pair(
        Box::new(standard_bracketing(&w[..split])),
        Box::new(standard_bracketing(&w[split..])),
    )
}

/// Lyndon words of length ≤ `depth` over `{1..dim}` (Duval's generation),
/// ordered by degree and then lexicographically.
pub fn lyndon_words(dim: usize, depth: usize) -> Vec<Word> {
    let mut words = Vec::new();
    if dim == 0 || depth == 0 {
        return words;
    }
    let mut w: Vec<usize> = vec![1];
    while !w.is_empty() {
        words.push(Word::from_letters(w.clone()));
        let m = w.len();
        while w.len() < depth {
            w.push(w[w.len() - m]);
        }
        while w.last() == Some(&dim) {
            w.pop();
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    words.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| a.cmp(b)));
    words
}

/// Ordered Lyndon basis for `(dim, depth)` with its expansion matrices.
#[derive(Debug)]
pub struct LyndonBasis {
    dim: usize,
    depth: usize,
    elements: Vec<LyndonBasisElement>,
    ranges: Vec<Range<usize>>,
    solvers: Vec<LevelSolver>,
    lookup: HashMap<Word, usize>,
}

#[derive(Debug)]
struct LevelSolver {
    /// `d^k × n_k`, column j is the expansion of the j-th degree-k element.
    expansion: DMatrix<f64>,
    q_t: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl LyndonBasis {
    pub fn new(dim: usize, depth: usize) -> Self {
        assert!(dim >= 1 && depth >= 1, "Lyndon basis needs d ≥ 1 and N ≥ 1");
        let elements: Vec<LyndonBasisElement> = lyndon_words(dim, depth)
            .into_iter()
            .map(|word| {
                let bracket = standard_bracketing(word.letters());
                LyndonBasisElement { word, bracket }
            })
            .collect();
        let mut ranges = vec![0..0];
        let mut solvers = Vec::new();
        let mut start = 0;
        for k in 1..=depth {
            let end = start + elements[start..].iter().take_while(|e| e.degree() == k).count();
            ranges.push(start..end);
            let rows = dim.pow(k as u32);
            let mut expansion = DMatrix::zeros(rows, end - start);
            for (j, e) in elements[start..end].iter().enumerate() {
                expansion.set_column(j, &DVector::from_vec(e.bracket.expand(dim)));
            }
            let qr = expansion.clone().qr();
            solvers.push(LevelSolver {
                q_t: qr.q().transpose(),
                r: qr.r(),
                expansion,
            });
            start = end;
        }
        let lookup = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i))
            .collect();
        LyndonBasis {
            dim,
            depth,
            elements,
            ranges,
            solvers,
            lookup,
        }
    }

    /// Shared basis for `(dim, depth)`, built at most once per process.
    pub fn cached(dim: usize, depth: usize) -> Arc<LyndonBasis> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<LyndonBasis>>>> = OnceLock::new();
        let mut map = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|p| p.into_inner());
        map.entry((dim, depth))
            .or_insert_with(|| Arc::new(LyndonBasis::new(dim, depth)))
            .clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn elements(&self) -> &[LyndonBasisElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Indices of the degree-`k` elements.
    pub fn degree_range(&self, k: usize) -> Range<usize> {
        self.ranges[k].clone()
    }

    pub fn position(&self, word: &Word) -> Option<usize> {
        self.lookup.get(word).copied()
    }
}

/// Witt's formula `(1/k) Σ_{m|k} μ(m) d^{k/m}`.
pub fn witt_dimension(dim: usize, k: usize) -> usize {
    let mut total: i64 = 0;
    for m in (1..=k).filter(|m| k % m == 0) {
        total += mobius(m) * (dim as i64).pow((k / m) as u32);
    }
    (total / k as i64) as usize
}

fn mobius(mut n: usize) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Coordinates of an element of the truncated free Lie algebra in the Lyndon basis.
#[derive(Debug, Clone)]
pub struct LieCoordinates {
    basis: Arc<LyndonBasis>,
    coords: Vec<f64>,
}

impl LieCoordinates {
    pub fn new(basis: Arc<LyndonBasis>, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != basis.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for a basis of size {}",
                coords.len(),
                basis.len()
            )));
        }
        Ok(LieCoordinates { basis, coords })
    }

    pub fn zero(dim: usize, depth: usize) -> Self {
        let basis = LyndonBasis::cached(dim, depth);
        let coords = vec![0.0; basis.len()];
        LieCoordinates { basis, coords }
    }

    pub fn basis(&self) -> &LyndonBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn depth(&self) -> usize {
        self.basis.depth
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate on the basis element indexed by a Lyndon word.
    pub fn get(&self, lyndon_word: &Word) -> Option<f64> {
        self.basis.position(lyndon_word).map(|i| self.coords[i])
    }

    pub fn set(&mut self, lyndon_word: &Word, value: f64) -> Result<()> {
        let i = self
            .basis
            .position(lyndon_word)
            .ok_or_else(|| Error::InvalidInput(format!("{lyndon_word} is not a Lyndon basis word")))?;
        self.coords[i] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LyndonBasisElement, f64)> {
        self.basis.elements.iter().zip(self.coords.iter().copied())
    }

    /// `Σ λ_b · bracket_expand(b)`.
    pub fn to_tensor(&self) -> TruncatedTensor {
        let mut t = TruncatedTensor::zero(self.dim(), self.depth());
        for (e, c) in self.iter() {
            if c == 0.0 {
                continue;
            }
            let level = t.level_mut(e.degree());
            for (x, y) in level.iter_mut().zip(e.bracket.expand(self.basis.dim)) {
                *x += c * y;
            }
        }
        t
    }
}

impl Serialize for LieCoordinates {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Terms<'a>(&'a LieCoordinates);
        impl Serialize for Terms<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.coords.len()))?;
                for (e, c) in self.0.iter() {
                    seq.serialize_element(&(e.to_string(), c))?;
                }
                seq.end()
            }
        }
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("d", &self.dim())?;
        map.serialize_entry("depth", &self.depth())?;
        map.serialize_entry("terms", &Terms(self))?;
        map.end()
    }
}

/// Lyndon coordinates of a Lie element, solved level by level by least squares.
/// Fails with [`Error::NotLieElement`] when the residual exceeds
/// `1e-9·‖a‖` (at least `1e-13`), which makes this the membership test.
pub fn tensor_to_lie_coords(a: &TruncatedTensor) -> Result<LieCoordinates> {
    let norm = a.levels().iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let tolerance = (LIE_TOLERANCE * norm).max(1e-13);
    let scalar = a.level(0)[0].abs();
    if scalar > tolerance {
        return Err(Error::NotLieElement {
            residual: scalar,
            tolerance,
        });
    }
    let basis = LyndonBasis::cached(a.dim(), a.depth().max(1));
    let mut coords = vec![0.0; basis.len()];
    let mut residual_sq = 0.0;
    for k in 1..=a.depth() {
        let solver = &basis.solvers[k - 1];
        let rhs = DVector::from_column_slice(a.level(k));
        let projected = &solver.q_t * &rhs;
        let lambda = solver
            .r
            .solve_upper_triangular(&projected)
            .ok_or_else(|| Error::Domain("singular Lyndon expansion matrix".into()))?;
        residual_sq += (&solver.expansion * &lambda - &rhs).norm_squared();
        coords[basis.degree_range(k)].copy_from_slice(lambda.as_slice());
    }
    let residual = residual_sq.sqrt();
    if residual > tolerance {
        return Err(Error::NotLieElement {
            residual,
            tolerance,
        });
    }
    LieCoordinates::new(basis, coords)
}

/// Dynkin membership oracle: per-level residuals `‖D(a_k) − k·a_k‖` (index 0 is `|a₀|`).
pub fn dynkin_check(a: &TruncatedTensor) -> Vec<f64> {
    a.dynkin_residuals()
}

/// Serializes as a `{"[1,2]": value, …}` map.
pub struct CoordinateMap<'a>(pub &'a LieCoordinates);

impl Serialize for CoordinateMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.coords.len()))?;
        for (e, c) in self.0.iter() {
            map.serialize_entry(&e.to_string(), &c)?;
        }
        map.end()
    }
}
