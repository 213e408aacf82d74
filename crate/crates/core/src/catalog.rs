//! Named families of inner, outer and invertible elements, with explicit
//! tail bounds for the infinite series.

use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::freepoly::{FreePoly, TruncatedSeries};
use crate::word::{words_of_length, Word};

/// Taylor coefficients of a classical one-variable function, with its sup
/// norm on the disk when known.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalCoeffs {
    pub coeffs: Vec<Complex64>,
    pub sup_norm: Option<f64>,
}

impl ClassicalCoeffs {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        ClassicalCoeffs {
            coeffs,
            sup_norm: None,
        }
    }

    pub fn real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Value of the truncated power series at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::default(), |acc, c| acc * z + c)
    }
}

fn check_unit_disk(mu: Complex64) -> Result<()> {
    if !(mu.norm() < 1.0) {
        return Err(FockError::Precondition(format!(
            "|mu| must be below 1, got {}",
            mu.norm()
        )));
    }
    Ok(())
}

fn check_nonempty(f: &Word) -> Result<()> {
    if f.is_empty() {
        return Err(FockError::Precondition("word must be nonempty".into()));
    }
    Ok(())
}

pub fn monomial(n: usize, f: &Word) -> FreePoly {
    FreePoly::monomial(n, f.clone(), Complex64::new(1.0, 0.0))
}

/// Normalized combination of words of a common length.
pub fn homogeneous(n: usize, terms: &[(Word, Complex64)]) -> Result<FreePoly> {
    let Some(first) = terms.first() else {
        return Err(FockError::Precondition("no terms given".into()));
    };
    if terms.iter().any(|(w, _)| w.len() != first.0.len()) {
        return Err(FockError::Precondition(
            "all words must have the same length".into(),
        ));
    }
    FreePoly::from_terms(n, terms.iter().cloned())?
        .normalized()
        .ok_or_else(|| FockError::Precondition("all coefficients are zero".into()))
}

/// Normalized combination of words with pairwise distinct first letters.
pub fn distinct_first_letter(n: usize, terms: &[(Word, Complex64)]) -> Result<FreePoly> {
    let mut seen = Vec::new();
    for (w, _) in terms {
        let Some(first) = w.first() else {
            return Err(FockError::Precondition("empty word not allowed".into()));
        };
        if seen.contains(&first) {
            return Err(FockError::Precondition(format!(
                "first letter {first} repeated"
            )));
        }
        seen.push(first);
    }
    FreePoly::from_terms(n, terms.iter().cloned())?
        .normalized()
        .ok_or_else(|| FockError::Precondition("all coefficients are zero".into()))
}

/// `psi / ||psi|| (x) e_letter`, for `psi` not using `letter`.
pub fn right_letter_inner(psi: &FreePoly, letter: usize) -> Result<FreePoly> {
    let n = psi.alphabet_size();
    let last = Word::new(&[letter], n)?;
    if psi
        .terms()
        .any(|(w, _)| w.letters().contains(&(letter as u8)))
    {
        return Err(FockError::Precondition(format!(
            "support uses letter {letter}"
        )));
    }
    let unit = psi
        .normalized()
        .ok_or_else(|| FockError::Precondition("zero polynomial".into()))?;
    Ok(unit.append(&last))
}

/// `sum_k c_k e_f^k` over `k |f| <= degree`, with the discarded `l2` mass
/// as tail bound.
pub fn inherited(
    n: usize,
    f: &Word,
    c: &ClassicalCoeffs,
    degree: usize,
) -> Result<TruncatedSeries> {
    check_nonempty(f)?;
    let kmax = degree / f.len();
    let mut terms = Vec::new();
    let mut tail_sq = 0.0;
    for (k, ck) in c.coeffs.iter().enumerate() {
        if k <= kmax {
            terms.push((f.power(k), *ck));
        } else {
            tail_sq += ck.norm_sqr();
        }
    }
    let poly = FreePoly::from_terms(n, terms)?;
    TruncatedSeries::new(poly, degree, tail_sq.sqrt())
}

/// Truncation of `(e_f - mu) (x) sum_k conj(mu)^k e_f^k`. The coefficient
/// of `e_f^k` is `-mu` for `k = 0` and `conj(mu)^(k-1) (1 - |mu|^2)` after;
/// the exact tail beyond `K = floor(degree / |f|)` is
/// `|mu|^K sqrt(1 - |mu|^2)`.
pub fn mobius(n: usize, f: &Word, mu: Complex64, degree: usize) -> Result<TruncatedSeries> {
    check_nonempty(f)?;
    check_unit_disk(mu)?;
    if degree < f.len() {
        return Err(FockError::Precondition(format!(
            "degree {degree} is below the word length {}",
            f.len()
        )));
    }
    let kmax = degree / f.len();
    let r2 = mu.norm_sqr();
    let mut terms = vec![(Word::empty(), -mu)];
    let mut power = Complex64::new(1.0, 0.0);
    for k in 1..=kmax {
        terms.push((f.power(k), power * (1.0 - r2)));
        power *= mu.conj();
    }
    let poly = FreePoly::from_terms(n, terms)?;
    let tail = mu.norm().powi(kmax as i32) * (1.0 - r2).sqrt();
    TruncatedSeries::new(poly, degree, if mu.norm() == 0.0 { 0.0 } else { tail })
}

/// Truncation of `sum_k mu^k e_f^k`, tail `|mu|^(K+1) / sqrt(1 - |mu|^2)`.
pub fn h_series(n: usize, f: &Word, mu: Complex64, degree: usize) -> Result<TruncatedSeries> {
    check_nonempty(f)?;
    check_unit_disk(mu)?;
    let kmax = degree / f.len();
    let mut terms = Vec::new();
    let mut power = Complex64::new(1.0, 0.0);
    for k in 0..=kmax {
        terms.push((f.power(k), power));
        power *= mu;
    }
    let poly = FreePoly::from_terms(n, terms)?;
    let tail = mu.norm().powi(kmax as i32 + 1) / (1.0 - mu.norm_sqr()).sqrt();
    TruncatedSeries::new(poly, degree, tail)
}

/// Partial sums of `sum_k phi^k / k!`, stopped once `L^(k+1)/(k+1)! < tol`
/// where `L` is the `l1` norm of the coefficients; the tail bound is the
/// scalar remainder `e^L - sum_{j<=k} L^j / j!`.
pub fn exp_series(phi: &FreePoly, tol: f64) -> Result<TruncatedSeries> {
    if !(tol > 0.0) {
        return Err(FockError::Precondition(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let n = phi.alphabet_size();
    let l1 = phi.l1_upper_bound();
    let mut sum = FreePoly::one(n);
    let mut term = FreePoly::one(n);
    let mut k = 0usize;
    let mut next_bound = l1;
    while next_bound >= tol {
        k += 1;
        term = term.tensor(phi).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        next_bound *= l1 / (k + 1) as f64;
    }
    // remainder of the scalar series, summed forward to avoid cancellation
    let mut tail = 0.0;
    let mut t = next_bound;
    let mut j = k + 1;
    while t > 0.0 && t > tail * f64::EPSILON {
        tail += t;
        j += 1;
        t *= l1 / j as f64;
    }
    let trunc = k * phi.top_degree();
    TruncatedSeries::new(sum, trunc, tail)
}

/// Truncation of `sum_k phi^k`, the inverse of `e_0 - phi`, for
/// `||phi||_1 < 1`. Degree `m` of the series has `l1` norm at most the
/// `m`-th coefficient of `1 / (1 - W(t))` with `W(t) = sum_j w_j t^j` and
/// `w_j` the `l1` norm of the degree-`j` part of `phi`; the tail bound is
/// the sum of those majorants above `degree`.
pub fn geometric_inverse(phi: &FreePoly, degree: usize) -> Result<TruncatedSeries> {
    let n = phi.alphabet_size();
    let l1 = phi.l1_upper_bound();
    if !(l1 < 1.0) {
        return Err(FockError::Precondition(format!(
            "l1 norm {l1} of the coefficients must be below 1"
        )));
    }
    let one_minus = &FreePoly::one(n) - phi;
    let poly = one_minus.graded_inverse(degree)?;

    let w: Vec<f64> = phi
        .homogeneous_parts()
        .iter()
        .map(FreePoly::l1_upper_bound)
        .collect();
    let mut majorant = vec![0.0f64; degree + 1];
    let mut head = 0.0;
    for m in 0..=degree {
        let mut acc = if m == 0 { 1.0 } else { 0.0 };
        for j in 1..w.len().min(m + 1) {
            acc += w[j] * majorant[m - j];
        }
        majorant[m] = acc / (1.0 - w[0]);
        head += majorant[m];
    }
    let total = 1.0 / (1.0 - l1);
    let slack = 4.0 * f64::EPSILON * total * (degree + 1) as f64;
    let tail = if phi.is_zero() {
        0.0
    } else {
        (total - head).max(0.0) + slack
    };
    TruncatedSeries::new(poly, degree, tail)
}

/// `x_k = n^(-k/2) sum_{|f|=k} e_f`: equal weights on all words of length
/// `k`.
pub fn x_k(n: usize, k: usize) -> FreePoly {
    let weight = (n as f64).powf(-(k as f64) / 2.0);
    FreePoly::from_terms(
        n,
        words_of_length(n, k).map(|w| (w, Complex64::new(weight, 0.0))),
    )
    .expect("valid words")
}

/// `(e_1 + e_2^k) / sqrt(2)` in two letters.
pub fn y_k(k: usize) -> FreePoly {
    assert!(k >= 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    FreePoly::from_terms(
        2,
        [
            (Word::letter(1), Complex64::new(s, 0.0)),
            (Word::letter(2).power(k), Complex64::new(s, 0.0)),
        ],
    )
    .expect("valid words")
}
