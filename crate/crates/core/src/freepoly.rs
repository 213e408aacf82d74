//! Sparse elements of the full Fock space: free polynomials and their
//! truncated series.
//!
//! A [`FreePoly`] is a finite combination `sum_f a_f e_f` over words. The
//! product is the tensor (concatenation) product, which is associative,
//! bilinear and non-commutative. Coefficients below [`PRUNE_THRESHOLD`] in
//! modulus are dropped after arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::word::Word;

/// Coefficients with modulus below this are dropped after arithmetic.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Coefficients smaller than this fraction of the largest one are ignored
/// when choosing the canonical phase.
pub const PHASE_THRESHOLD: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct FreePoly {
    n: usize,
    terms: BTreeMap<Word, Complex64>,
}

impl FreePoly {
    pub fn zero(n: usize) -> Self {
        assert!(n > 0, "alphabet size must be positive");
        FreePoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// The vacuum `e_0`, identity of the tensor product.
    pub fn one(n: usize) -> Self {
        Self::monomial(n, Word::empty(), Complex64::new(1.0, 0.0))
    }

    pub fn monomial(n: usize, word: Word, coeff: Complex64) -> Self {
        assert!(n > 0, "alphabet size must be positive");
        assert!(
            (word.max_letter() as usize) <= n,
            "word {word} uses letters outside 1..={n}"
        );
        let mut terms = BTreeMap::new();
        if coeff != Complex64::new(0.0, 0.0) {
            terms.insert(word, coeff);
        }
        FreePoly { n, terms }
    }

    /// Validating constructor: letters must be in range, words distinct and
    /// coefficients finite. Exact zeros are dropped.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Complex64)>,
    {
        if n == 0 {
            return Err(FockError::EmptyAlphabet);
        }
        let mut map = BTreeMap::new();
        for (word, c) in terms {
            let top = word.max_letter() as usize;
            if top > n {
                return Err(FockError::LetterOutOfRange { letter: top, n });
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(FockError::NonFinite {
                    word: word.to_string(),
                });
            }
            if map.contains_key(&word) {
                return Err(FockError::DuplicateWord {
                    word: word.to_string(),
                });
            }
            map.insert(word, c);
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(FreePoly { n, terms: map })
    }

    /// Convenience constructor from `(letters, re)` pairs, for tests and
    /// examples. Panics on invalid input.
    pub fn real(n: usize, terms: &[(&[usize], f64)]) -> Self {
        Self::from_terms(
            n,
            terms
                .iter()
                .map(|(w, c)| (Word::new(w, n).unwrap(), Complex64::new(*c, 0.0))),
        )
        .unwrap()
    }

    /// Builds from a map produced by arithmetic, pruning tiny coefficients.
    pub(crate) fn from_raw(n: usize, mut terms: BTreeMap<Word, Complex64>) -> Self {
        terms.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
        FreePoly { n, terms }
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &Word) -> Complex64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    pub fn constant(&self) -> Complex64 {
        self.coeff(&Word::empty())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum word length in the support; `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms.keys().next_back().map_or(-1, |w| w.len() as i64)
    }

    /// Degree as an unsigned length, zero for the zero polynomial.
    pub fn top_degree(&self) -> usize {
        self.degree().max(0) as usize
    }

    /// Shortest word length in the support.
    pub fn low_degree(&self) -> Option<usize> {
        self.terms.keys().next().map(Word::len)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.low_degree()
            .map_or(true, |lo| lo as i64 == self.degree())
    }

    pub fn check_same_alphabet(&self, other: &FreePoly) -> Result<()> {
        if self.n != other.n {
            return Err(FockError::AlphabetMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    fn assert_same_alphabet(&self, other: &FreePoly) {
        assert_eq!(
            self.n, other.n,
            "cannot combine polynomials over different alphabets"
        );
    }

    pub fn scale(&self, c: Complex64) -> FreePoly {
        FreePoly::from_raw(
            self.n,
            self.terms.iter().map(|(w, a)| (w.clone(), a * c)).collect(),
        )
    }

    pub fn scale_real(&self, c: f64) -> FreePoly {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &FreePoly, c: Complex64) -> FreePoly {
        self.assert_same_alphabet(other);
        let mut terms = self.terms.clone();
        for (w, b) in &other.terms {
            *terms.entry(w.clone()).or_default() += b * c;
        }
        FreePoly::from_raw(self.n, terms)
    }

    /// The tensor product; coefficient of `h` is the sum of `a_f b_g` over
    /// all splittings `h = f g`. Panics on mismatched alphabets.
    pub fn tensor(&self, other: &FreePoly) -> FreePoly {
        self.assert_same_alphabet(other);
        let mut terms: BTreeMap<Word, Complex64> = BTreeMap::new();
        for (f, a) in &self.terms {
            for (g, b) in &other.terms {
                *terms.entry(f.concat(g)).or_default() += a * b;
            }
        }
        FreePoly::from_raw(self.n, terms)
    }

    pub fn try_tensor(&self, other: &FreePoly) -> Result<FreePoly> {
        self.check_same_alphabet(other)?;
        Ok(self.tensor(other))
    }

    /// Tensor product with everything above `max_degree` discarded.
    pub fn tensor_truncated(&self, other: &FreePoly, max_degree: usize) -> FreePoly {
        self.assert_same_alphabet(other);
        let mut terms: BTreeMap<Word, Complex64> = BTreeMap::new();
        for (f, a) in &self.terms {
            if f.len() > max_degree {
                break;
            }
            for (g, b) in &other.terms {
                if f.len() + g.len() > max_degree {
                    break;
                }
                *terms.entry(f.concat(g)).or_default() += a * b;
            }
        }
        FreePoly::from_raw(self.n, terms)
    }

    /// `self^k` under the tensor product.
    pub fn pow(&self, k: usize) -> FreePoly {
        let mut out = FreePoly::one(self.n);
        for _ in 0..k {
            out = out.tensor(self);
        }
        out
    }

    /// The flip `U e_f = e_{reverse(f)}`.
    pub fn flip(&self) -> FreePoly {
        FreePoly {
            n: self.n,
            terms: self.terms.iter().map(|(w, c)| (w.reverse(), *c)).collect(),
        }
    }

    /// `sum_f a_f conj(b_f)`, linear in the first argument.
    pub fn inner_product(&self, other: &FreePoly) -> Complex64 {
        self.assert_same_alphabet(other);
        let (small, large, swap) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::default();
        for (w, a) in &small.terms {
            if let Some(b) = large.terms.get(w) {
                acc += if swap { b * a.conj() } else { a * b.conj() };
            }
        }
        acc
    }

    /// Compensated sum of squared moduli.
    pub fn norm2_sqr(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for c in self.terms.values() {
            let x = c.norm_sqr();
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sqr().sqrt()
    }

    /// `sum_f |a_f|`, an upper bound for the multiplier norm since every
    /// monomial is an isometric multiplier.
    pub fn l1_upper_bound(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Unit-norm multiple, or `None` for the zero polynomial.
    pub fn normalized(&self) -> Option<FreePoly> {
        let norm = self.norm2();
        (norm > 0.0).then(|| self.scale_real(1.0 / norm))
    }

    /// Multiplies by the unimodular scalar that makes the first significant
    /// coefficient (graded-lex order) real and positive.
    pub fn normalize_phase(&self) -> FreePoly {
        self.scale(self.canonical_phase().conj())
    }

    /// Phase `c / |c|` of the first coefficient larger than
    /// `PHASE_THRESHOLD` times the largest one.
    pub fn canonical_phase(&self) -> Complex64 {
        let cutoff = PHASE_THRESHOLD * self.max_abs_coeff();
        self.terms
            .values()
            .find(|c| c.norm() > cutoff)
            .map_or(Complex64::new(1.0, 0.0), |c| c / c.norm())
    }

    /// Terms of degree at most `max_degree`.
    pub fn truncate(&self, max_degree: usize) -> FreePoly {
        FreePoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .take_while(|(w, _)| w.len() <= max_degree)
                .map(|(w, c)| (w.clone(), *c))
                .collect(),
        }
    }

    /// Terms of degree strictly above `max_degree`.
    pub fn tail_above(&self, max_degree: usize) -> FreePoly {
        FreePoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .skip_while(|(w, _)| w.len() <= max_degree)
                .map(|(w, c)| (w.clone(), *c))
                .collect(),
        }
    }

    /// Adjoint of left multiplication by `self`, applied to `psi`: the
    /// coefficient of `e_h` is `<psi, self (x) e_h> = sum_f conj(a_f) psi_{f h}`.
    pub fn adjoint_mul(&self, psi: &FreePoly) -> FreePoly {
        self.assert_same_alphabet(psi);
        let mut terms: BTreeMap<Word, Complex64> = BTreeMap::new();
        let max_len = self.top_degree();
        for (w, c) in &psi.terms {
            for k in 0..=w.len().min(max_len) {
                if let Some(a) = self.terms.get(&w.prefix(k)) {
                    *terms.entry(w.suffix(k)).or_default() += a.conj() * c;
                }
            }
        }
        FreePoly::from_raw(self.n, terms)
    }

    /// Homogeneous components, indexed by degree.
    pub fn homogeneous_parts(&self) -> Vec<FreePoly> {
        let mut parts = vec![FreePoly::zero(self.n); self.top_degree() + 1];
        for (w, c) in &self.terms {
            parts[w.len()].terms.insert(w.clone(), *c);
        }
        parts
    }

    /// The unique `psi` of degree at most `max_degree` with
    /// `self (x) psi = e_0` modulo words longer than `max_degree`, built one
    /// degree at a time: `psi_m = -(1/a_0) sum_{j>=1} phi_j (x) psi_{m-j}`.
    pub fn graded_inverse(&self, max_degree: usize) -> Result<FreePoly> {
        let a0 = self.constant();
        if a0 == Complex64::new(0.0, 0.0) {
            return Err(FockError::NotFormallyInvertible);
        }
        let parts = self.homogeneous_parts();
        let inv_a0 = a0.inv();
        let mut levels: Vec<FreePoly> = vec![FreePoly::monomial(self.n, Word::empty(), inv_a0)];
        for m in 1..=max_degree {
            let mut acc: BTreeMap<Word, Complex64> = BTreeMap::new();
            for j in 1..=m.min(parts.len() - 1) {
                for (f, a) in &parts[j].terms {
                    for (g, b) in &levels[m - j].terms {
                        *acc.entry(f.concat(g)).or_default() -= a * b * inv_a0;
                    }
                }
            }
            levels.push(FreePoly::from_raw(self.n, acc));
        }
        let mut terms = BTreeMap::new();
        for level in levels {
            terms.extend(level.terms);
        }
        Ok(FreePoly { n: self.n, terms })
    }

    /// Left creation `S_p`: `e_f -> e_{p f}`.
    pub fn prepend(&self, prefix: &Word) -> FreePoly {
        FreePoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (prefix.concat(w), *c))
                .collect(),
        }
    }

    /// Right multiplication by `e_s`: `e_f -> e_{f s}`.
    pub fn append(&self, suffix: &Word) -> FreePoly {
        FreePoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.concat(suffix), *c))
                .collect(),
        }
    }

    /// Adjoint `S_p^*`: keeps the words starting with `prefix` and deletes it.
    pub fn delete_prefix(&self, prefix: &Word) -> FreePoly {
        FreePoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter_map(|(w, c)| w.strip_prefix(prefix).map(|rest| (rest, *c)))
                .collect(),
        }
    }

    /// `l2` distance to `other`.
    pub fn distance(&self, other: &FreePoly) -> f64 {
        self.add_scaled(other, Complex64::new(-1.0, 0.0)).norm2()
    }

    /// Largest coefficient difference in modulus.
    pub fn max_coeff_distance(&self, other: &FreePoly) -> f64 {
        self.assert_same_alphabet(other);
        let mut worst: f64 = 0.0;
        for (w, a) in &self.terms {
            worst = worst.max((a - other.coeff(w)).norm());
        }
        for (w, b) in &other.terms {
            if !self.terms.contains_key(w) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Coefficients in graded-lex order, as a dense vector over all words of
    /// length at most `max_degree`.
    pub fn to_dense(&self, max_degree: usize) -> Vec<Complex64> {
        let len = crate::word::word_count(self.n, max_degree).expect("dense size overflow");
        let mut v = vec![Complex64::default(); len];
        for (w, c) in self.terms.iter().take_while(|(w, _)| w.len() <= max_degree) {
            v[w.graded_index(self.n)] = *c;
        }
        v
    }

    /// Inverse of [`FreePoly::to_dense`], pruning tiny entries.
    pub fn from_dense(n: usize, coeffs: &[Complex64]) -> FreePoly {
        FreePoly::from_raw(
            n,
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm() >= PRUNE_THRESHOLD)
                .map(|(i, c)| (Word::from_graded_index(n, i), *c))
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolyJson::from_poly(self, None)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<FreePoly> {
        let raw: PolyJson = serde_json::from_str(text)?;
        raw.into_poly()
    }
}

impl fmt::Debug for FreePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FreePoly(n={}; {self})", self.n)
    }
}

impl fmt::Display for FreePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}*{w}", c.re)?;
            } else {
                write!(f, "({}{:+}i)*{w}", c.re, c.im)?;
            }
        }
        Ok(())
    }
}

impl Add for &FreePoly {
    type Output = FreePoly;
    fn add(self, rhs: &FreePoly) -> FreePoly {
        self.add_scaled(rhs, Complex64::new(1.0, 0.0))
    }
}

impl Sub for &FreePoly {
    type Output = FreePoly;
    fn sub(self, rhs: &FreePoly) -> FreePoly {
        self.add_scaled(rhs, Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &FreePoly {
    type Output = FreePoly;
    fn mul(self, rhs: &FreePoly) -> FreePoly {
        self.tensor(rhs)
    }
}

impl Neg for &FreePoly {
    type Output = FreePoly;
    fn neg(self) -> FreePoly {
        self.scale_real(-1.0)
    }
}

/// A polynomial standing in for an infinite series, together with an upper
/// bound on the `l2` norm of everything that was discarded.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    pub poly: FreePoly,
    pub trunc_degree: usize,
    pub tail_bound: f64,
}

impl TruncatedSeries {
    pub fn new(poly: FreePoly, trunc_degree: usize, tail_bound: f64) -> Result<Self> {
        if poly.degree() > trunc_degree as i64 {
            return Err(FockError::Precondition(format!(
                "polynomial degree {} exceeds truncation degree {trunc_degree}",
                poly.degree()
            )));
        }
        if !tail_bound.is_finite() || tail_bound < 0.0 {
            return Err(FockError::Precondition(format!(
                "tail bound {tail_bound} must be finite and nonnegative"
            )));
        }
        Ok(TruncatedSeries {
            poly,
            trunc_degree,
            tail_bound,
        })
    }

    /// Wraps an exact polynomial (zero tail).
    pub fn exact(poly: FreePoly) -> Self {
        let trunc_degree = poly.top_degree();
        TruncatedSeries {
            poly,
            trunc_degree,
            tail_bound: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.tail_bound == 0.0
    }

    pub fn alphabet_size(&self) -> usize {
        self.poly.alphabet_size()
    }

    pub fn flip(&self) -> TruncatedSeries {
        TruncatedSeries {
            poly: self.poly.flip(),
            trunc_degree: self.trunc_degree,
            tail_bound: self.tail_bound,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolyJson::from_poly(
            &self.poly,
            Some((self.trunc_degree, self.tail_bound)),
        ))
        .expect("serializable")
    }

    /// Parses the canonical format; a plain polynomial is read as an exact
    /// series.
    pub fn from_json(text: &str) -> Result<TruncatedSeries> {
        let raw: PolyJson = serde_json::from_str(text)?;
        raw.into_series()
    }
}

impl From<FreePoly> for TruncatedSeries {
    fn from(poly: FreePoly) -> Self {
        TruncatedSeries::exact(poly)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    word: Vec<usize>,
    re: f64,
    im: f64,
}

/// The canonical on-disk form. Series add `trunc_degree` and `tail_bound`,
/// which plain-polynomial readers ignore.
#[derive(Serialize, Deserialize)]
pub(crate) struct PolyJson {
    n: usize,
    terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trunc_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
}

impl PolyJson {
    fn from_poly(poly: &FreePoly, series: Option<(usize, f64)>) -> Self {
        PolyJson {
            n: poly.n,
            terms: poly
                .terms
                .iter()
                .map(|(w, c)| TermJson {
                    word: w.letters().iter().map(|&l| l as usize).collect(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            trunc_degree: series.map(|s| s.0),
            tail_bound: series.map(|s| s.1),
        }
    }

    fn into_poly(self) -> Result<FreePoly> {
        let n = self.n;
        if n == 0 {
            return Err(FockError::EmptyAlphabet);
        }
        let terms = self
            .terms
            .into_iter()
            .map(|t| Ok((Word::new(&t.word, n)?, Complex64::new(t.re, t.im))))
            .collect::<Result<Vec<_>>>()?;
        FreePoly::from_terms(n, terms)
    }

    fn into_series(self) -> Result<TruncatedSeries> {
        let trunc = self.trunc_degree;
        let tail = self.tail_bound.unwrap_or(0.0);
        let poly = self.into_poly()?;
        let trunc = trunc.unwrap_or_else(|| poly.top_degree());
        TruncatedSeries::new(poly, trunc, tail)
    }
}

impl Serialize for FreePoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson::from_poly(self, None).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FreePoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        PolyJson::deserialize(d)?
            .into_poly()
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for TruncatedSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson::from_poly(&self.poly, Some((self.trunc_degree, self.tail_bound))).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        PolyJson::deserialize(d)?
            .into_series()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn tensor_of_monomials() {
        let e1 = FreePoly::real(2, &[(&[1], 1.0)]);
        let e2 = FreePoly::real(2, &[(&[2], 1.0)]);
        assert_eq!(&e1 * &e2, FreePoly::real(2, &[(&[1, 2], 1.0)]));
    }

    #[test]
    fn tensor_expands_all_splittings() {
        let a = FreePoly::real(2, &[(&[1], 1.0), (&[2], 1.0)]);
        let b = FreePoly::real(2, &[(&[1], 1.0), (&[2], -1.0)]);
        let expected = FreePoly::real(
            2,
            &[
                (&[1, 1], 1.0),
                (&[1, 2], -1.0),
                (&[2, 1], 1.0),
                (&[2, 2], -1.0),
            ],
        );
        assert_eq!(&a * &b, expected);
        assert_eq!((&a * &b).degree(), 2);
    }

    #[test]
    fn zero_polynomial_conventions() {
        let z = FreePoly::zero(2);
        assert_eq!(z.degree(), -1);
        assert!((&z * &FreePoly::one(2)).is_zero());
        assert_eq!(z.l1_upper_bound(), 0.0);
        assert!(z.normalized().is_none());
    }

    #[test]
    fn flip_examples() {
        let p = FreePoly::real(2, &[(&[1, 2], 1.0)]);
        assert_eq!(p.flip(), FreePoly::real(2, &[(&[2, 1], 1.0)]));
        let pal = FreePoly::real(2, &[(&[1, 2, 1], 1.0)]);
        assert_eq!(pal.flip(), pal);
    }

    #[test]
    fn inner_products() {
        let e1 = FreePoly::real(2, &[(&[1], 1.0)]);
        let e2 = FreePoly::real(2, &[(&[2], 1.0)]);
        assert_eq!(e1.inner_product(&e1), c(1.0));
        assert_eq!(e1.inner_product(&e2), c(0.0));
        assert_eq!((&e1 + &e2).inner_product(&(&e1 - &e2)), c(0.0));
        let z = FreePoly::from_terms(2, [(Word::letter(1), Complex64::new(0.0, 1.0))]).unwrap();
        // linear in the first slot, conjugate-linear in the second
        assert_eq!(z.inner_product(&e1), Complex64::new(0.0, 1.0));
        assert_eq!(e1.inner_product(&z), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn l1_bounds() {
        assert_eq!(FreePoly::real(2, &[(&[1], 1.0)]).l1_upper_bound(), 1.0);
        assert_eq!(
            FreePoly::real(1, &[(&[], 1.0), (&[1], 1.0)]).l1_upper_bound(),
            2.0
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = FreePoly::real(2, &[(&[1], s), (&[2], s)]);
        assert!((x.l1_upper_bound() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cancellation_leaves_identity() {
        let phi = FreePoly::real(2, &[(&[], 0.3), (&[1, 2], -1.0), (&[2], 2.0)]);
        let prod = &phi * &FreePoly::one(2);
        assert_eq!(prod, phi);
        // phi (x) (1 - e0) vanishes only because 1 - e0 is zero
        let diff = &FreePoly::one(2) - &FreePoly::one(2);
        assert!((&phi * &diff).is_zero());
    }

    #[test]
    fn prefix_operations() {
        let p = FreePoly::real(2, &[(&[1, 2], 2.0), (&[2], 3.0), (&[], 1.0)]);
        let one = Word::letter(1);
        assert_eq!(p.delete_prefix(&one), FreePoly::real(2, &[(&[2], 2.0)]));
        assert_eq!(p.prepend(&one).delete_prefix(&one), p);
        assert_eq!(
            p.append(&Word::letter(2)),
            &p * &FreePoly::real(2, &[(&[2], 1.0)])
        );
    }

    #[test]
    fn phase_normalization() {
        let p = FreePoly::from_terms(
            2,
            [
                (Word::letter(1), Complex64::new(0.0, -2.0)),
                (Word::letter(2), Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let q = p.normalize_phase();
        assert!((q.coeff(&Word::letter(1)) - c(2.0)).norm() < 1e-15);
        assert!((q.norm2() - p.norm2()).abs() < 1e-15);
    }

    #[test]
    fn graded_inverse_of_one_minus_half_shift() {
        let p = FreePoly::real(1, &[(&[], 1.0), (&[1], -0.5)]);
        let inv = p.graded_inverse(6).unwrap();
        for k in 0..=6 {
            let w = Word::letter(1).power(k);
            assert!((inv.coeff(&w) - c(0.5f64.powi(k as i32))).norm() < 1e-15);
        }
        assert!(matches!(
            FreePoly::real(1, &[(&[1], 1.0)]).graded_inverse(3),
            Err(FockError::NotFormallyInvertible)
        ));
        let q = FreePoly::real(2, &[(&[], 2.0), (&[1, 2], 1.0), (&[2], -1.0)]);
        let prod = q.tensor_truncated(&q.graded_inverse(5).unwrap(), 5);
        assert!(prod.distance(&FreePoly::one(2)) < 1e-14);
    }

    #[test]
    fn json_format() {
        let p = FreePoly::from_terms(
            2,
            [
                (Word::empty(), Complex64::new(1.0, 0.0)),
                (Word::new(&[2, 1], 2).unwrap(), Complex64::new(-0.5, 0.25)),
            ],
        )
        .unwrap();
        let text = p.to_json();
        assert_eq!(
            text,
            r#"{"n":2,"terms":[{"word":[],"re":1.0,"im":0.0},{"word":[2,1],"re":-0.5,"im":0.25}]}"#
        );
        assert_eq!(FreePoly::from_json(&text).unwrap(), p);
    }

    #[test]
    fn json_rejects_invalid() {
        let bad_letter = r#"{"n":2,"terms":[{"word":[3],"re":1.0,"im":0.0}]}"#;
        assert!(matches!(
            FreePoly::from_json(bad_letter),
            Err(FockError::LetterOutOfRange { letter: 3, n: 2 })
        ));
        let dup =
            r#"{"n":2,"terms":[{"word":[1],"re":1.0,"im":0.0},{"word":[1],"re":2.0,"im":0.0}]}"#;
        assert!(matches!(
            FreePoly::from_json(dup),
            Err(FockError::DuplicateWord { .. })
        ));
        assert!(matches!(
            FreePoly::from_json("{\"n\":2,"),
            Err(FockError::Json(_))
        ));
        assert!(FreePoly::from_json(r#"{"n":0,"terms":[]}"#).is_err());
    }

    #[test]
    fn series_json_carries_tail() {
        let s = TruncatedSeries::new(FreePoly::real(1, &[(&[1], 0.5)]), 4, 0.125).unwrap();
        let back = TruncatedSeries::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        // readable as a plain polynomial
        assert_eq!(FreePoly::from_json(&s.to_json()).unwrap(), s.poly);
        assert!(TruncatedSeries::new(FreePoly::real(1, &[(&[1, 1], 1.0)]), 1, 0.0).is_err());
        assert!(TruncatedSeries::new(FreePoly::one(1), 1, f64::NAN).is_err());
    }
}
