//! Truncated tensor algebra T⁽ᴺ⁾(ℝᵈ).
//!
//! Coefficients are stored densely, one contiguous array per level. Level `k`
//! holds `d^k` entries in lexicographic word order, so the word
//! `(i₁, …, i_k)` (letters are 1-based) lives at index
//! `Σ (i_j − 1)·d^(k−j)`. With this layout the tensor product of a level-`i`
//! block and a level-`j` block is a plain outer product.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A word over the alphabet `{1, …, d}`; indexes one coordinate iterated integral.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word, checking every letter lies in `1..=dim`.
    pub fn new(letters: Vec<usize>, dim: usize) -> Result<Self> {
        if let Some(&letter) = letters.iter().find(|&&l| l == 0 || l > dim) {
            return Err(Error::InvalidLetter { letter, dim });
        }
        Ok(Word(letters))
    }

    /// Builds a word without alphabet validation. Letters must be ≥ 1.
    pub fn from_letters(letters: impl Into<Vec<usize>>) -> Self {
        let letters = letters.into();
        assert!(letters.iter().all(|&l| l >= 1), "letters are 1-based");
        Word(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position of this word inside its level block.
    pub fn index(&self, dim: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * dim + (l - 1))
    }

    /// Inverse of [`Word::index`].
    pub fn from_index(degree: usize, mut index: usize, dim: usize) -> Self {
        let mut letters = vec![0; degree];
        for slot in letters.iter_mut().rev() {
            *slot = index % dim + 1;
            index /= dim;
        }
        Word(letters)
    }

    /// All words of exactly `degree` letters, lexicographic.
    pub fn all_of_degree(dim: usize, degree: usize) -> impl Iterator<Item = Word> {
        (0..dim.pow(degree as u32)).map(move |i| Word::from_index(degree, i, dim))
    }

    /// All words of degree `0..=depth`, ordered by degree then lexicographically.
    pub fn all_up_to(dim: usize, depth: usize) -> Vec<Word> {
        (0..=depth).flat_map(|k| Word::all_of_degree(dim, k)).collect()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    pub fn push(&self, letter: usize) -> Word {
        let mut letters = self.0.clone();
        letters.push(letter);
        Word(letters)
    }

    fn split_last(&self) -> Option<(Word, usize)> {
        self.0
            .split_last()
            .map(|(&last, init)| (Word(init.to_vec()), last))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let letters = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&l| l >= 1)
                    .ok_or_else(|| Error::InvalidInput(format!("bad letter {p:?} in word {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word(letters))
    }
}

/// Norm used on each homogeneous level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormFlavor {
    #[default]
    L1,
    L2,
    Linf,
}

impl NormFlavor {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            NormFlavor::L1 => v.iter().map(|x| x.abs()).sum(),
            NormFlavor::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormFlavor::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

/// Per-level norms of a truncated tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeNorms {
    pub flavor: NormFlavor,
    pub norms: Vec<f64>,
}

/// An element of the truncated tensor algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorJson", into = "TensorJson")]
pub struct TruncatedTensor {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
    grouplike: bool,
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    d: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
}

impl TryFrom<TensorJson> for TruncatedTensor {
    type Error = Error;

    fn try_from(json: TensorJson) -> Result<Self> {
        TruncatedTensor::from_levels(json.d, json.depth, json.levels)
    }
}

impl From<TruncatedTensor> for TensorJson {
    fn from(t: TruncatedTensor) -> Self {
        TensorJson {
            d: t.dim,
            depth: t.depth,
            levels: t.levels,
        }
    }
}

impl TruncatedTensor {
    pub fn zero(dim: usize, depth: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let levels = (0..=depth).map(|k| vec![0.0; dim.pow(k as u32)]).collect();
        TruncatedTensor {
            dim,
            depth,
            levels,
            grouplike: false,
        }
    }

    /// The unit `1 = (1, 0, …, 0)`.
    pub fn identity(dim: usize, depth: usize) -> Self {
        let mut t = Self::zero(dim, depth);
        t.levels[0][0] = 1.0;
        t.grouplike = true;
        t
    }

    /// `Σ vᵢ eᵢ` placed on level 1.
    pub fn from_level1(depth: usize, v: &[f64]) -> Self {
        let mut t = Self::zero(v.len(), depth);
        if depth >= 1 {
            t.levels[1].copy_from_slice(v);
        }
        t
    }

    pub fn from_levels(dim: usize, depth: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if levels.len() != depth + 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} levels for depth {depth}, found {}",
                depth + 1,
                levels.len()
            )));
        }
        for (k, level) in levels.iter().enumerate() {
            let expect = dim.pow(k as u32);
            if level.len() != expect {
                return Err(Error::DimensionMismatch(format!(
                    "level {k} holds {} coefficients, expected {expect}",
                    level.len()
                )));
            }
        }
        Ok(TruncatedTensor {
            dim,
            depth,
            levels,
            grouplike: false,
        })
    }

    /// A single word with coefficient `c`.
    pub fn from_word(dim: usize, depth: usize, word: &Word, c: f64) -> Result<Self> {
        let mut t = Self::zero(dim, depth);
        t.set(word, c)?;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        self.grouplike = false;
        &mut self.levels[k]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// Advisory: set by constructors that are known to produce grouplike
    /// elements (stream signatures, exponentials of Lie elements).
    pub fn is_grouplike(&self) -> bool {
        self.grouplike
    }

    pub(crate) fn mark_grouplike(mut self, flag: bool) -> Self {
        self.grouplike = flag;
        self
    }

    fn check_word(&self, word: &Word) -> Result<()> {
        if word.degree() > self.depth {
            return Err(Error::OutOfDepth {
                degree: word.degree(),
                depth: self.depth,
            });
        }
        if let Some(&letter) = word.letters().iter().find(|&&l| l == 0 || l > self.dim) {
            return Err(Error::InvalidLetter {
                letter,
                dim: self.dim,
            });
        }
        Ok(())
    }

    /// The coefficient `⟨word, self⟩`.
    pub fn inner(&self, word: &Word) -> Result<f64> {
        self.check_word(word)?;
        Ok(self.levels[word.degree()][word.index(self.dim)])
    }

    pub fn set(&mut self, word: &Word, value: f64) -> Result<()> {
        self.check_word(word)?;
        let idx = word.index(self.dim);
        self.levels[word.degree()][idx] = value;
        self.grouplike = false;
        Ok(())
    }

    /// Drops levels above `depth`.
    pub fn truncate(&self, depth: usize) -> Self {
        let depth = depth.min(self.depth);
        TruncatedTensor {
            dim: self.dim,
            depth,
            levels: self.levels[..=depth].to_vec(),
            grouplike: self.grouplike,
        }
    }

    fn aligned<'a>(&'a self, other: &'a Self) -> Result<usize> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "tensor dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(self.depth.min(other.depth))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let depth = self.aligned(other)?;
        let levels = (0..=depth)
            .map(|k| {
                self.levels[k]
                    .iter()
                    .zip(&other.levels[k])
                    .map(|(&a, &b)| f(a, b))
                    .collect()
            })
            .collect();
        Ok(TruncatedTensor {
            dim: self.dim,
            depth,
            levels,
            grouplike: false,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|l| l.iter().map(|x| x * c).collect())
            .collect();
        TruncatedTensor {
            dim: self.dim,
            depth: self.depth,
            levels,
            grouplike: false,
        }
    }

    /// Truncated tensor product. Operands of different depth are multiplied
    /// at the smaller of the two depths.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let depth = self.aligned(other)?;
        let mut out = Self::zero(self.dim, depth);
        for k in 0..=depth {
            let target = &mut out.levels[k];
            for i in 0..=k {
                outer_accumulate(target, &self.levels[i], &other.levels[k - i], 1.0);
            }
        }
        out.grouplike = self.grouplike && other.grouplike;
        Ok(out)
    }

    /// `Σ_{k≤N} a^{⊗k}/k!`; requires a zero scalar part.
    pub fn exp(&self) -> Result<Self> {
        if self.levels[0][0] != 0.0 {
            return Err(Error::Domain(format!(
                "exponential needs a zero level-0 coefficient, found {}",
                self.levels[0][0]
            )));
        }
        // Horner: 1 + a(1 + a/2(1 + a/3(…)))
        let mut acc = Self::identity(self.dim, self.depth);
        for k in (1..=self.depth).rev() {
            let mut next = self.mul(&acc)?.scale(1.0 / k as f64);
            next.levels[0][0] += 1.0;
            acc = next;
        }
        let lie = self.is_lie_element(1e-9);
        Ok(acc.mark_grouplike(lie))
    }

    /// `Σ_{k=1..N} (−1)^{k+1}(a−1)^{⊗k}/k`; requires a unit scalar part.
    pub fn log(&self) -> Result<Self> {
        if self.levels[0][0] != 1.0 {
            return Err(Error::Domain(format!(
                "logarithm needs a unit level-0 coefficient, found {}",
                self.levels[0][0]
            )));
        }
        let mut x = self.clone();
        x.levels[0][0] = 0.0;
        x.grouplike = false;
        if self.depth == 0 {
            return Ok(x);
        }
        let coef = |k: usize| if k % 2 == 1 { 1.0 / k as f64 } else { -1.0 / k as f64 };
        let mut acc = Self::identity(self.dim, self.depth).scale(coef(self.depth));
        for k in (1..self.depth).rev() {
            let mut next = x.mul(&acc)?;
            next.levels[0][0] += coef(k);
            acc = next;
        }
        let out = x.mul(&acc)?;
        Ok(out.mark_grouplike(false))
    }

    /// Inverse of a unit-scalar element, `Σ (1−a)^k`.
    pub fn inverse(&self) -> Result<Self> {
        if self.levels[0][0] == 0.0 {
            return Err(Error::Domain("cannot invert a tensor with zero scalar part".into()));
        }
        let a0 = self.levels[0][0];
        let normalized = self.scale(1.0 / a0);
        let mut x = normalized.scale(-1.0);
        x.levels[0][0] = 0.0; // x = 1 − a/a0
        let mut acc = Self::identity(self.dim, self.depth);
        for _ in 0..self.depth {
            let mut next = x.mul(&acc)?;
            next.levels[0][0] += 1.0;
            acc = next;
        }
        Ok(acc.scale(1.0 / a0).mark_grouplike(self.grouplike))
    }

    pub fn grade_norms(&self, flavor: NormFlavor) -> GradeNorms {
        GradeNorms {
            flavor,
            norms: self.levels.iter().map(|l| flavor.of(l)).collect(),
        }
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Applies the left-normed bracketing map
    /// `w₁⋯w_k ↦ [[…[w₁,w₂],…],w_k]` to every homogeneous level. On a
    /// homogeneous Lie element of degree `k` this map acts as multiplication by `k`.
    pub fn dynkin(&self) -> Self {
        let mut out = Self::zero(self.dim, self.depth);
        for k in 1..=self.depth {
            out.levels[k] = dynkin_level(&self.levels[k], k, self.dim);
        }
        out
    }

    /// Per-level Euclidean residual `‖D(a_k) − k·a_k‖`; index 0 is `|a₀|`.
    pub fn dynkin_residuals(&self) -> Vec<f64> {
        let mut residuals = vec![self.levels[0][0].abs()];
        for k in 1..=self.depth {
            let d = dynkin_level(&self.levels[k], k, self.dim);
            let r = d
                .iter()
                .zip(&self.levels[k])
                .map(|(dx, x)| (dx - k as f64 * x).powi(2))
                .sum::<f64>()
                .sqrt();
            residuals.push(r);
        }
        residuals
    }

    fn is_lie_element(&self, tol: f64) -> bool {
        let scale = 1.0 + self.max_abs();
        self.dynkin_residuals().iter().all(|&r| r <= tol * scale)
    }

    /// Flattened coefficients, level 0 first.
    pub fn to_flat(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }

    /// `(word, coefficient)` pairs in degree-then-lexicographic order.
    pub fn iter_words(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        self.levels.iter().enumerate().flat_map(move |(k, level)| {
            level
                .iter()
                .enumerate()
                .map(move |(i, &c)| (Word::from_index(k, i, self.dim), c))
        })
    }

    /// Map keyed by comma-joined words, e.g. `"1,2"`; the empty word is `""`.
    pub fn word_map(&self) -> BTreeMap<String, f64> {
        self.iter_words().map(|(w, c)| (w.to_string(), c)).collect()
    }
}

/// `target += c · (a ⊗ b)` for homogeneous blocks.
pub(crate) fn outer_accumulate(target: &mut [f64], a: &[f64], b: &[f64], c: f64) {
    let nb = b.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let s = c * ai;
        for (t, &bj) in target[i * nb..(i + 1) * nb].iter_mut().zip(b) {
            *t += s * bj;
        }
    }
}

/// Left-normed bracketing on one level, by the recursion
/// `D(b ⊗ e_l) = D(b) ⊗ e_l − e_l ⊗ D(b)`.
fn dynkin_level(v: &[f64], k: usize, dim: usize) -> Vec<f64> {
    if k <= 1 {
        return v.to_vec();
    }
    let prefix_len = dim.pow((k - 1) as u32);
    let mut out = vec![0.0; v.len()];
    for l in 0..dim {
        let prefix: Vec<f64> = (0..prefix_len).map(|u| v[u * dim + l]).collect();
        if prefix.iter().all(|&x| x == 0.0) {
            continue;
        }
        let dp = dynkin_level(&prefix, k - 1, dim);
        for (u, &x) in dp.iter().enumerate() {
            out[u * dim + l] += x;
            out[l * prefix_len + u] -= x;
        }
    }
    out
}

/// A formal sum of words with non-negative integer multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Shuffle {
    terms: BTreeMap<Word, u64>,
}

impl Shuffle {
    pub fn single(word: Word) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(word, 1);
        Shuffle { terms }
    }

    pub fn terms(&self) -> &BTreeMap<Word, u64> {
        &self.terms
    }

    /// Number of interleavings, counted with multiplicity.
    pub fn total_multiplicity(&self) -> u64 {
        self.terms.values().sum()
    }

    fn add_scaled(&mut self, other: &Shuffle, m: u64) {
        for (w, &c) in &other.terms {
            *self.terms.entry(w.clone()).or_insert(0) += c * m;
        }
    }

    /// Bilinear extension of the shuffle product.
    pub fn shuffle(&self, other: &Shuffle) -> Shuffle {
        let mut out = Shuffle::default();
        for (u, &a) in &self.terms {
            for (v, &b) in &other.terms {
                out.add_scaled(&shuffle(u, v), a * b);
            }
        }
        out
    }

    /// `Σ m_w ⟨w, t⟩`.
    pub fn pair(&self, t: &TruncatedTensor) -> Result<f64> {
        self.terms
            .iter()
            .map(|(w, &m)| t.inner(w).map(|c| m as f64 * c))
            .sum()
    }
}

/// Shuffle product of two words:
/// `(ua) ⧢ (vb) = (u ⧢ vb)a + (ua ⧢ v)b`.
pub fn shuffle(u: &Word, v: &Word) -> Shuffle {
    let (Some((u_init, a)), Some((v_init, b))) = (u.split_last(), v.split_last()) else {
        let w = if u.is_empty() { v.clone() } else { u.clone() };
        return Shuffle::single(w);
    };
    let mut out = Shuffle::default();
    for (w, m) in shuffle(&u_init, v).terms {
        *out.terms.entry(w.push(a)).or_insert(0) += m;
    }
    for (w, m) in shuffle(u, &v_init).terms {
        *out.terms.entry(w.push(b)).or_insert(0) += m;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn unit_plus_letter(letter: usize) -> TruncatedTensor {
        let mut t = TruncatedTensor::identity(2, 2);
        t.set(&Word::from_letters(vec![letter]), 1.0).unwrap();
        t
    }

    #[test]
    fn word_index_roundtrip() {
        for k in 0..4 {
            for (i, word) in Word::all_of_degree(3, k).enumerate() {
                assert_eq!(word.index(3), i);
            }
        }
        assert_eq!(w("1,2,2").to_string(), "1,2,2");
        assert_eq!(w("").degree(), 0);
        assert!(Word::new(vec![3], 2).is_err());
    }

    #[test]
    fn product_of_unit_plus_letters() {
        let p = unit_plus_letter(1).mul(&unit_plus_letter(2)).unwrap();
        assert_eq!(p.inner(&w("")).unwrap(), 1.0);
        assert_eq!(p.inner(&w("1")).unwrap(), 1.0);
        assert_eq!(p.inner(&w("2")).unwrap(), 1.0);
        assert_eq!(p.inner(&w("1,2")).unwrap(), 1.0);
        assert_eq!(p.inner(&w("2,1")).unwrap(), 0.0);
        assert_eq!(p.inner(&w("1,1")).unwrap(), 0.0);
    }

    #[test]
    fn unit_law() {
        let a = TruncatedTensor::from_levels(2, 2, vec![vec![0.5], vec![1.0, -2.0], vec![3.0, 4.0, 5.0, 6.0]]).unwrap();
        let one = TruncatedTensor::identity(2, 2);
        assert_eq!(one.mul(&a).unwrap().levels(), a.levels());
        assert_eq!(a.mul(&one).unwrap().levels(), a.levels());
    }

    #[test]
    fn exp_letters_product() {
        let e1 = TruncatedTensor::from_level1(2, &[1.0, 0.0]).exp().unwrap();
        let e2 = TruncatedTensor::from_level1(2, &[0.0, 1.0]).exp().unwrap();
        let p = e1.mul(&e2).unwrap();
        assert_abs_diff_eq!(p.inner(&w("1,2")).unwrap(), 1.0);
        assert_abs_diff_eq!(p.inner(&w("2,1")).unwrap(), 0.0);
        assert_abs_diff_eq!(p.inner(&w("1,1")).unwrap(), 0.5);
        assert_abs_diff_eq!(p.inner(&w("2,2")).unwrap(), 0.5);
        assert!(p.is_grouplike());
    }

    #[test]
    fn exp_edge_cases() {
        let z = TruncatedTensor::zero(3, 4).exp().unwrap();
        assert_eq!(z, TruncatedTensor::identity(3, 4).mark_grouplike(true));

        let c = 1.7;
        let e = TruncatedTensor::from_level1(6, &[c]).exp().unwrap();
        let mut fact = 1.0;
        for k in 0..=6 {
            if k > 0 {
                fact *= k as f64;
            }
            assert_abs_diff_eq!(e.level(k)[0], c.powi(k as i32) / fact, epsilon = 1e-14);
        }

        let mut bracket = TruncatedTensor::zero(2, 2);
        bracket.set(&w("1,2"), 1.0).unwrap();
        bracket.set(&w("2,1"), -1.0).unwrap();
        let e = bracket.exp().unwrap();
        assert_eq!(e.inner(&w("")).unwrap(), 1.0);
        assert_eq!(e.inner(&w("1,2")).unwrap(), 1.0);
        assert_eq!(e.inner(&w("2,1")).unwrap(), -1.0);
        assert_eq!(e.inner(&w("1,1")).unwrap(), 0.0);
        assert!(e.is_grouplike());

        let mut bad = TruncatedTensor::zero(2, 2);
        bad.level_mut(0)[0] = 1.0;
        assert!(matches!(bad.exp(), Err(Error::Domain(_))));
    }

    #[test]
    fn log_edge_cases() {
        let l = TruncatedTensor::identity(2, 5).log().unwrap();
        assert_eq!(l.max_abs(), 0.0);

        let c = -0.8;
        for depth in 1..7 {
            let l = TruncatedTensor::from_level1(depth, &[c]).exp().unwrap().log().unwrap();
            assert_abs_diff_eq!(l.level(1)[0], c, epsilon = 1e-14);
            for k in 2..=depth {
                assert_abs_diff_eq!(l.level(k)[0], 0.0, epsilon = 1e-14);
            }
        }

        let e1 = TruncatedTensor::from_level1(2, &[1.0, 0.0]).exp().unwrap();
        let e2 = TruncatedTensor::from_level1(2, &[0.0, 1.0]).exp().unwrap();
        let l = e1.mul(&e2).unwrap().log().unwrap();
        assert_abs_diff_eq!(l.inner(&w("1,2")).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(l.inner(&w("2,1")).unwrap(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(l.inner(&w("1,1")).unwrap(), 0.0, epsilon = 1e-15);

        assert!(matches!(TruncatedTensor::zero(2, 2).log(), Err(Error::Domain(_))));
    }

    #[test]
    fn inner_out_of_depth() {
        let t = TruncatedTensor::identity(2, 2);
        assert_eq!(t.inner(&w("")).unwrap(), 1.0);
        assert!(matches!(t.inner(&w("1,1,1")), Err(Error::OutOfDepth { .. })));
        let e = TruncatedTensor::from_level1(3, &[2.5]).exp().unwrap();
        assert_eq!(e.inner(&w("1")).unwrap(), 2.5);
    }

    #[test]
    fn mismatched_dimension_is_an_error() {
        let a = TruncatedTensor::identity(2, 2);
        let b = TruncatedTensor::identity(3, 2);
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch(_))));
        let c = TruncatedTensor::identity(2, 4);
        assert_eq!(a.mul(&c).unwrap().depth(), 2);
    }

    fn interleavings(u: &[usize], v: &[usize]) -> Vec<Vec<usize>> {
        if u.is_empty() {
            return vec![v.to_vec()];
        }
        if v.is_empty() {
            return vec![u.to_vec()];
        }
        let mut out = Vec::new();
        for mut rest in interleavings(&u[1..], v) {
            rest.insert(0, u[0]);
            out.push(rest);
        }
        for mut rest in interleavings(u, &v[1..]) {
            rest.insert(0, v[0]);
            out.push(rest);
        }
        out
    }

    #[test]
    fn shuffle_examples() {
        let s = shuffle(&w("1"), &w("2"));
        assert_eq!(s.terms().len(), 2);
        assert_eq!(s.terms()[&w("1,2")], 1);
        assert_eq!(s.terms()[&w("2,1")], 1);

        assert_eq!(shuffle(&w("1"), &w("")), Shuffle::single(w("1")));

        // brute-force enumeration of interleavings
        let brute = interleavings(&[1, 1], &[1]);
        assert_eq!(brute.len(), 3);
        let s = shuffle(&w("1,1"), &w("1"));
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.terms()[&w("1,1,1")], 3);
    }

    #[test]
    fn shuffle_matches_brute_force() {
        let pairs = [("1,2", "2,1"), ("1,2,3", "3"), ("2,1", "1,2,2"), ("1", "1,1,1")];
        for (a, b) in pairs {
            let (ua, ub) = (w(a), w(b));
            let mut expected: BTreeMap<Word, u64> = BTreeMap::new();
            for word in interleavings(ua.letters(), ub.letters()) {
                *expected.entry(Word::from_letters(word)).or_insert(0) += 1;
            }
            assert_eq!(shuffle(&ua, &ub).terms(), &expected);
        }
    }

    #[test]
    fn grade_norms_examples() {
        let z = TruncatedTensor::zero(2, 3).grade_norms(NormFlavor::L1);
        assert!(z.norms.iter().all(|&n| n == 0.0));
        let c = -1.3;
        let e = TruncatedTensor::from_level1(5, &[c]).exp().unwrap();
        let norms = e.grade_norms(NormFlavor::L1).norms;
        let mut fact = 1.0;
        for (k, n) in norms.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            assert_abs_diff_eq!(*n, c.abs().powi(k as i32) / fact, epsilon = 1e-14);
        }
    }

    #[test]
    fn dynkin_on_bracket_and_non_lie() {
        let mut bracket = TruncatedTensor::zero(2, 2);
        bracket.set(&w("1,2"), 1.0).unwrap();
        bracket.set(&w("2,1"), -1.0).unwrap();
        assert_eq!(bracket.dynkin_residuals(), vec![0.0, 0.0, 0.0]);

        // D(e1e2) = e1e2 − e2e1, so the residual is ‖−e1e2 − e2e1‖ = √2
        let non_lie = TruncatedTensor::from_word(2, 2, &w("1,2"), 1.0).unwrap();
        assert_abs_diff_eq!(non_lie.dynkin_residuals()[2], 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn json_layout() {
        let t = TruncatedTensor::from_level1(2, &[1.0, 2.0]);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"d":2,"depth":2,"levels":[[0.0],[1.0,2.0],[0.0,0.0,0.0,0.0]]}"#);
        let back: TruncatedTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back.levels(), t.levels());
        assert!(serde_json::from_str::<TruncatedTensor>(r#"{"d":2,"depth":1,"levels":[[1.0],[1.0]]}"#).is_err());
    }
}
