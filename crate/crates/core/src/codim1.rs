//! The joint eigenvectors `z_lambda` of the backward shifts, the
//! codimension-one invariant subspaces `M_lambda = [z_lambda]^perp`, their
//! projections and wandering vectors, and abelianization.
//!
//! `z_lambda` has coefficient `lambda_f = prod_j lambda_{f(j)}` at `e_f`.
//! Products are always formed from the multidegree in a fixed letter order,
//! so `lambda_f` depends only on the letter counts of `f`, bit for bit.
//! Pairings `<psi, z_lambda> = sum_f a_f conj(lambda_f)` are evaluated by
//! this finite sum, never through a truncated inner product.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FockError, Result};
use crate::freepoly::{FreePoly, TruncatedSeries};
use crate::word::{word_count, words_up_to, Word};

/// Largest number of words a `z_lambda` truncation may enumerate.
pub const MAX_SERIES_TERMS: usize = 2_100_000;

/// A point of the open unit ball in `C^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lambda {
    entries: Vec<Complex64>,
}

impl Lambda {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(FockError::EmptyAlphabet);
        }
        if entries
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(FockError::Precondition("non-finite lambda entry".into()));
        }
        let lambda = Lambda { entries };
        if !(lambda.norm() < 1.0) {
            return Err(FockError::Precondition(format!(
                "||lambda|| must be below 1, got {}",
                lambda.norm()
            )));
        }
        Ok(lambda)
    }

    pub fn real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zero(n: usize) -> Self {
        Lambda {
            entries: vec![Complex64::default(); n],
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entry(&self, letter: usize) -> Complex64 {
        self.entries[letter - 1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|c| *c == Complex64::default())
    }

    pub fn conj(&self) -> Lambda {
        Lambda {
            entries: self.entries.iter().map(Complex64::conj).collect(),
        }
    }

    /// `||z_lambda||^2 = 1 / (1 - ||lambda||^2)`.
    pub fn z_norm_sqr(&self) -> f64 {
        1.0 / (1.0 - self.norm_sqr())
    }

    /// `lambda_f`, from the letter counts of `f`.
    pub fn word_value(&self, f: &Word) -> Complex64 {
        self.multidegree_value(&f.multidegree(self.alphabet_size()))
    }

    pub fn multidegree_value(&self, exponents: &[usize]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (l, &k) in self.entries.iter().zip(exponents) {
            for _ in 0..k {
                acc *= l;
            }
        }
        acc
    }

    fn check_alphabet(&self, psi: &FreePoly) -> Result<()> {
        if psi.alphabet_size() != self.alphabet_size() {
            return Err(FockError::AlphabetMismatch {
                left: psi.alphabet_size(),
                right: self.alphabet_size(),
            });
        }
        Ok(())
    }
}

/// `l2` norm of the part of `z_lambda` above degree `degree`.
pub fn z_tail(lambda: &Lambda, degree: usize) -> f64 {
    let r2 = lambda.norm_sqr();
    (r2.powi(degree as i32 + 1) / (1.0 - r2)).sqrt()
}

/// Smallest degree whose `z_lambda` tail is at most `target`.
pub fn degree_for_tail(lambda: &Lambda, target: f64) -> usize {
    let mut degree = 0;
    while z_tail(lambda, degree) > target {
        degree += 1;
    }
    degree
}

/// `sum_{|f| <= degree} lambda_f e_f`.
pub fn z_lambda(lambda: &Lambda, degree: usize) -> Result<TruncatedSeries> {
    let n = lambda.alphabet_size();
    let count = word_count(n, degree).unwrap_or(usize::MAX);
    if count > MAX_SERIES_TERMS {
        return Err(FockError::ResourceCap {
            columns: count,
            cap: MAX_SERIES_TERMS,
        });
    }
    let poly = FreePoly::from_terms(
        n,
        words_up_to(n, degree).map(|w| {
            let v = lambda.word_value(&w);
            (w, v)
        }),
    )?;
    TruncatedSeries::new(poly, degree, z_tail(lambda, degree))
}

/// `sum_f a_f lambda_f`: the abelianized polynomial evaluated at `lambda`.
pub fn abelian_eval(psi: &FreePoly, lambda: &Lambda) -> Result<Complex64> {
    lambda.check_alphabet(psi)?;
    Ok(psi.terms().map(|(w, a)| a * lambda.word_value(w)).sum())
}

/// `<psi, z_lambda> = sum_f a_f conj(lambda_f)`.
pub fn z_pairing(psi: &FreePoly, lambda: &Lambda) -> Result<Complex64> {
    abelian_eval(psi, &lambda.conj())
}

/// Commutative image of a free polynomial: coefficients summed over words
/// with equal letter counts.
#[derive(Clone, Debug, PartialEq)]
pub struct AbelianPoly {
    pub n: usize,
    pub terms: BTreeMap<Vec<usize>, Complex64>,
    /// For each multidegree, the sum of `|a_f|` over the collapsed words.
    pub magnitudes: BTreeMap<Vec<usize>, f64>,
}

/// Relative size below which a collapsed coefficient counts as cancelled.
pub const CANCELLATION_TOL: f64 = 1e-12;

impl AbelianPoly {
    pub fn eval(&self, lambda: &Lambda) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| c * lambda.multidegree_value(e))
            .sum()
    }

    /// Whether every collapsed coefficient cancels, relative to the mass
    /// that was collapsed into it.
    pub fn vanishes(&self) -> bool {
        self.terms
            .iter()
            .all(|(e, c)| c.norm() <= CANCELLATION_TOL * self.magnitudes[e])
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Term<'a> {
            exponents: &'a [usize],
            re: f64,
            im: f64,
        }
        let terms: Vec<Term> = self
            .terms
            .iter()
            .filter(|(e, c)| c.norm() > CANCELLATION_TOL * self.magnitudes[*e])
            .map(|(e, c)| Term {
                exponents: e,
                re: c.re,
                im: c.im,
            })
            .collect();
        serde_json::json!({ "n": self.n, "terms": terms })
    }
}

pub fn abelianize(psi: &FreePoly) -> AbelianPoly {
    let n = psi.alphabet_size();
    let mut terms: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    let mut magnitudes: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (w, a) in psi.terms() {
        let e = w.multidegree(n);
        *terms.entry(e.clone()).or_default() += a;
        *magnitudes.entry(e).or_default() += a.norm();
    }
    AbelianPoly {
        n,
        terms,
        magnitudes,
    }
}

/// Membership in the commutator ideal: the abelianization vanishes.
pub fn in_commutator_ideal(psi: &FreePoly) -> bool {
    abelianize(psi).vanishes()
}

/// `psi - (<psi, z> / ||z||^2) z_N`, the projection onto `M_lambda`.
pub fn q_lambda(psi: &FreePoly, lambda: &Lambda, degree: usize) -> Result<TruncatedSeries> {
    let (poly, tail) = q_parts(psi, lambda, degree)?;
    let trunc = degree.max(poly.top_degree());
    TruncatedSeries::new(poly, trunc, tail)
}

fn q_parts(psi: &FreePoly, lambda: &Lambda, degree: usize) -> Result<(FreePoly, f64)> {
    let pairing = z_pairing(psi, lambda)?;
    let coeff = pairing / lambda.z_norm_sqr();
    if coeff == Complex64::default() {
        return Ok((psi.clone(), 0.0));
    }
    let z = z_lambda(lambda, degree)?;
    Ok((psi.add_scaled(&z.poly, -coeff), coeff.norm() * z.tail_bound))
}

/// `Q - sum_i S_i Q S_i^*`, the projection onto the wandering subspace of
/// `M_lambda`.
pub fn p_lambda(psi: &FreePoly, lambda: &Lambda, degree: usize) -> Result<TruncatedSeries> {
    let degree = degree.max(1);
    let (mut out, mut tail) = q_parts(psi, lambda, degree)?;
    for i in 1..=lambda.alphabet_size() {
        let letter = Word::letter(i as u8);
        let shifted = psi.delete_prefix(&letter);
        if shifted.is_zero() {
            continue;
        }
        let (q, t) = q_parts(&shifted, lambda, degree - 1)?;
        out = &out - &q.prepend(&letter);
        tail += t;
    }
    let trunc = degree.max(out.top_degree());
    TruncatedSeries::new(out, trunc, tail)
}

/// Unit vectors whose flips span the wandering subspace of `M_lambda`:
/// `phi_0 ~ e_0 - z / ||z||^2` and `phi_i ~ z (x) (e_i - conj(lambda_i))`,
/// truncated at `degree` and phase-normalized. At `lambda = 0` the first
/// one vanishes and is left out.
pub fn wandering_lambda(lambda: &Lambda, degree: usize) -> Result<Vec<TruncatedSeries>> {
    let degree = degree.max(1);
    let n = lambda.alphabet_size();
    let r2 = lambda.norm_sqr();
    let z = z_lambda(lambda, degree)?;
    let z_short = z.poly.truncate(degree - 1);
    let tail_short = z_tail(lambda, degree - 1);
    let mut out = Vec::with_capacity(n + 1);
    if !lambda.is_zero() {
        let a0 = 1.0 / r2.sqrt();
        let poly = (&FreePoly::one(n) - &z.poly.scale_real(1.0 - r2)).scale_real(a0);
        let tail = a0 * (1.0 - r2) * z.tail_bound;
        out.push(TruncatedSeries::new(poly.normalize_phase(), degree, tail)?);
    }
    for i in 1..=n {
        let li = lambda.entry(i);
        let ai = ((1.0 - r2) / (1.0 - li.norm_sqr())).sqrt();
        let poly = z_short
            .append(&Word::letter(i as u8))
            .add_scaled(&z.poly, -li.conj())
            .scale_real(ai);
        let tail = ai * (tail_short + li.norm() * z.tail_bound);
        out.push(TruncatedSeries::new(poly.normalize_phase(), degree, tail)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Containment {
    /// The pairing of the stored polynomial with `z_lambda` vanishes.
    pub contained: bool,
    pub pairing: Complex64,
    /// Bound on the pairing of the discarded tail with `z_lambda`.
    pub uncertainty: f64,
    /// `|pairing|` is within the uncertainty plus rounding.
    pub within_uncertainty: bool,
}

/// Whether the two-sided invariant subspace generated by `psi` lies in
/// `M_lambda`. Since `<e_p psi e_q, z> = conj(lambda_p lambda_q) <psi, z>`,
/// this is the single condition `<psi, z_lambda> = 0`.
pub fn m_lambda_contains(psi: &TruncatedSeries, lambda: &Lambda) -> Result<Containment> {
    let pairing = z_pairing(&psi.poly, lambda)?;
    let scale: f64 = psi
        .poly
        .terms()
        .map(|(w, a)| a.norm() * lambda.word_value(w).norm())
        .sum();
    let rounding = CANCELLATION_TOL * scale;
    let uncertainty = psi.tail_bound * z_tail(lambda, psi.trunc_degree);
    Ok(Containment {
        contained: pairing.norm() <= rounding,
        pairing,
        uncertainty,
        within_uncertainty: pairing.norm() <= rounding + uncertainty,
    })
}
