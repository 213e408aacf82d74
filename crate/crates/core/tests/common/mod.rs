//! Random inputs and independent reference computations shared by the
//! integration tests.

#![allow(dead_code)]

use fockspace::catalog;
use fockspace::codim1::Lambda;
use fockspace::word::words_up_to;
use fockspace::{Complex64, FreePoly, Word};
use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn random_word(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Word {
    Word::from_letters((0..len).map(|_| rng.random_range(1..=n) as u8))
}

/// Random polynomial with up to `terms` distinct words of length at most
/// `max_degree`, complex Gaussian coefficients.
pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_degree: usize, terms: usize) -> FreePoly {
    let words: Vec<Word> = words_up_to(n, max_degree).collect();
    let chosen: Vec<Word> = words
        .choose_multiple(rng, terms.min(words.len()))
        .cloned()
        .collect();
    FreePoly::from_terms(n, chosen.into_iter().map(|w| (w, gaussian(rng)))).unwrap()
}

pub fn random_nonzero_poly(rng: &mut ChaCha8Rng, n: usize, max_degree: usize) -> FreePoly {
    loop {
        let k = rng.random_range(1..=5);
        let p = random_poly(rng, n, max_degree, k);
        if !p.is_zero() {
            return p;
        }
    }
}

pub fn random_unit_poly(rng: &mut ChaCha8Rng, n: usize, max_degree: usize) -> FreePoly {
    random_nonzero_poly(rng, n, max_degree)
        .normalized()
        .unwrap()
}

/// Normalized combination of random words of one length.
pub fn random_homogeneous(rng: &mut ChaCha8Rng, n: usize, len: usize) -> FreePoly {
    let terms: Vec<(Word, Complex64)> = words_up_to(n, len)
        .filter(|w| w.len() == len)
        .map(|w| (w, gaussian(rng)))
        .collect();
    catalog::homogeneous(n, &terms).unwrap()
}

/// Words with distinct first letters and random tails.
pub fn random_distinct_first(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> FreePoly {
    let count = rng.random_range(1..=n);
    let mut letters: Vec<usize> = (1..=n).collect();
    let mut terms = Vec::new();
    for _ in 0..count {
        let idx = rng.random_range(0..letters.len());
        let first = letters.remove(idx);
        let tail_len = rng.random_range(0..max_len);
        let word = Word::letter(first as u8).concat(&random_word(rng, n, tail_len));
        terms.push((word, gaussian(rng)));
    }
    catalog::distinct_first_letter(n, &terms).unwrap()
}

/// `psi / ||psi|| (x) e_n` for random `psi` avoiding the last letter.
pub fn random_right_letter(rng: &mut ChaCha8Rng, n: usize, max_degree: usize) -> FreePoly {
    let psi = loop {
        let terms = rng.random_range(1..=4);
        let p = random_poly(rng, n - 1, max_degree, terms);
        if !p.is_zero() {
            break p;
        }
    };
    let lifted = FreePoly::from_terms(n, psi.terms().map(|(w, c)| (w.clone(), *c))).unwrap();
    catalog::right_letter_inner(&lifted, n).unwrap()
}

/// Uniform sample from the complex ball of radius `radius` in `C^n`.
pub fn random_lambda(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Lambda {
    let v: Vec<Complex64> = (0..n).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (2 * n) as f64);
    Lambda::new(v.into_iter().map(|c| c * (r / norm)).collect()).unwrap()
}

/// Dense matrix of left multiplication by `phi` from words of length at most
/// `degree`, built word by word from the tensor product.
pub fn dense_section(phi: &FreePoly, degree: usize) -> DMatrix<Complex64> {
    let n = phi.alphabet_size();
    let cols: Vec<Word> = words_up_to(n, degree).collect();
    let rows: Vec<Word> = words_up_to(n, degree + phi.top_degree()).collect();
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (j, g) in cols.iter().enumerate() {
        let image = phi.tensor(&FreePoly::monomial(n, g.clone(), Complex64::new(1.0, 0.0)));
        for (i, h) in rows.iter().enumerate() {
            m[(i, j)] = image.coeff(h);
        }
    }
    m
}

pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Largest `|<phi e_f, phi e_g> - delta_fg|` over all words of length at
/// most `degree`, computed from explicit products.
pub fn brute_force_gram_defect(phi: &FreePoly, degree: usize) -> f64 {
    let n = phi.alphabet_size();
    let words: Vec<Word> = words_up_to(n, degree).collect();
    let images: Vec<FreePoly> = words
        .iter()
        .map(|g| phi.tensor(&FreePoly::monomial(n, g.clone(), Complex64::new(1.0, 0.0))))
        .collect();
    let mut worst: f64 = 0.0;
    for (i, a) in images.iter().enumerate() {
        for (j, b) in images.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner_product(b) - delta).norm());
        }
    }
    worst
}

/// `max_{|z| = 1} |sum c_k z^k|` on a uniform grid of the unit circle.
pub fn circle_sup(coeffs: &[Complex64], points: usize) -> f64 {
    (0..points)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / points as f64;
            let z = Complex64::from_polar(1.0, theta);
            coeffs
                .iter()
                .rev()
                .fold(Complex64::default(), |acc, c| acc * z + c)
                .norm()
        })
        .fold(0.0, f64::max)
}

/// Optimal unimodular `alpha` minimizing `||a - alpha b||`, and that distance.
pub fn align_phase(a: &FreePoly, b: &FreePoly) -> (Complex64, f64) {
    let ip = a.inner_product(b);
    let alpha = if ip.norm() > 0.0 {
        ip / ip.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    (alpha, a.distance(&b.scale(alpha)))
}

/// Proptest strategy for polynomials over `n` letters of degree at most
/// `max_degree` with up to `max_terms` terms.
pub fn poly_strategy(
    n: usize,
    max_degree: usize,
    max_terms: usize,
) -> impl proptest::strategy::Strategy<Value = FreePoly> {
    use proptest::prelude::*;
    let term = (
        proptest::collection::vec(1..=n, 0..=max_degree),
        -2.0..2.0f64,
        -2.0..2.0f64,
    );
    proptest::collection::vec(term, 0..=max_terms).prop_map(move |terms| {
        let mut p = FreePoly::zero(n);
        for (letters, re, im) in terms {
            let word = Word::new(&letters, n).unwrap();
            p = p.add_scaled(
                &FreePoly::monomial(n, word, Complex64::new(1.0, 0.0)),
                Complex64::new(re, im),
            );
        }
        p
    })
}

pub fn nonzero_poly_strategy(
    n: usize,
    max_degree: usize,
    max_terms: usize,
) -> impl proptest::strategy::Strategy<Value = FreePoly> {
    use proptest::prelude::*;
    poly_strategy(n, max_degree, max_terms).prop_filter("nonzero", |p| p.norm2() > 1e-3)
}
