//! Random row contractions and empirical checks of the noncommutative von
//! Neumann inequality `||p(T_1, ..., T_n)|| <= ||p||_inf`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FockError, Result};
use crate::freepoly::FreePoly;
use crate::word::{word_count, Word};

/// Slack on the row bound of a constructed tuple.
pub const ROW_BOUND_SLACK: f64 = 1e-12;
/// Slack used when checking the inequality on samples.
pub const VN_SLACK: f64 = 1e-8;

/// `n` square matrices with `||sum T_i T_i^*|| <= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple {
    mats: Vec<DMatrix<Complex64>>,
    row_bound: f64,
}

/// `||sum T_i T_i^*||^(1/2)`.
fn row_norm(mats: &[DMatrix<Complex64>]) -> f64 {
    let d = mats[0].nrows();
    let mut sum = DMatrix::<Complex64>::zeros(d, d);
    for m in mats {
        sum += m * m.adjoint();
    }
    let top = sum
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0, f64::max);
    top.max(0.0).sqrt()
}

impl MatrixTuple {
    pub fn new(mats: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(FockError::EmptyAlphabet);
        };
        let d = first.nrows();
        if d == 0 || mats.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(FockError::Precondition(
                "matrices must be square of one common positive size".into(),
            ));
        }
        let row_bound = row_norm(&mats);
        if row_bound > 1.0 + ROW_BOUND_SLACK {
            return Err(FockError::Precondition(format!(
                "not a row contraction: row norm {row_bound}"
            )));
        }
        Ok(MatrixTuple { mats, row_bound })
    }

    pub fn alphabet_size(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn row_bound(&self) -> f64 {
        self.row_bound
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.mats
    }
}

/// Complex Gaussian matrices scaled onto the boundary `row norm = 1`,
/// deterministic in `(seed, stream)`.
pub fn random_row_contraction_stream(n: usize, d: usize, seed: u64, stream: u64) -> MatrixTuple {
    assert!(n >= 1 && d >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mats: Vec<DMatrix<Complex64>> = (0..n)
        .map(|_| {
            DMatrix::from_fn(d, d, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
        })
        .collect();
    let s = row_norm(&mats);
    let mats: Vec<DMatrix<Complex64>> = mats.into_iter().map(|m| m.unscale(s)).collect();
    let row_bound = row_norm(&mats);
    MatrixTuple { mats, row_bound }
}

pub fn random_row_contraction(n: usize, d: usize, seed: u64) -> MatrixTuple {
    random_row_contraction_stream(n, d, seed, 0)
}

/// `sum_f a_f T_f` with `T_f = T_{f(1)} ... T_{f(k)}` and `T_empty = I`.
/// Word products are built from cached prefixes.
pub fn evaluate(p: &FreePoly, t: &MatrixTuple) -> Result<DMatrix<Complex64>> {
    if p.alphabet_size() != t.alphabet_size() {
        return Err(FockError::AlphabetMismatch {
            left: p.alphabet_size(),
            right: t.alphabet_size(),
        });
    }
    let d = t.dim();
    let mut cache: HashMap<Word, DMatrix<Complex64>> = HashMap::new();
    cache.insert(Word::empty(), DMatrix::identity(d, d));
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    // graded order visits every prefix of a word before the word
    for (w, a) in p.terms() {
        for k in 1..=w.len() {
            let prefix = w.prefix(k);
            if cache.contains_key(&prefix) {
                continue;
            }
            let prev = &cache[&w.prefix(k - 1)];
            let letter = w.letters()[k - 1] as usize;
            let m = prev * &t.mats[letter - 1];
            cache.insert(prefix, m);
        }
        out += &cache[w] * *a;
    }
    Ok(out)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionMax {
    pub dim: usize,
    pub samples: usize,
    pub max_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VnReport {
    pub per_dim: Vec<DimensionMax>,
    /// Largest `||p(T)||` seen: an empirical lower bound for `||p||_inf`.
    pub max_norm: f64,
    pub l1_bound: f64,
    pub l2_norm: f64,
    pub homogeneous: bool,
    /// Samples exceeding `l1_bound + VN_SLACK`, or `l2_norm + VN_SLACK` for
    /// homogeneous `p`.
    pub violations: usize,
    pub holds: bool,
}

/// Samples `samples` boundary row contractions for each dimension in `dims`
/// and records the largest `||p(T)||`. Each sample draws from its own
/// stream derived from the dimension and the sample index.
pub fn vn_check(p: &FreePoly, samples: usize, dims: &[usize], seed: u64) -> Result<VnReport> {
    if samples == 0 {
        return Err(FockError::Precondition("samples must be at least 1".into()));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(FockError::Precondition(
            "dimensions must be positive".into(),
        ));
    }
    let n = p.alphabet_size();
    let l1_bound = p.l1_upper_bound();
    let l2_norm = p.norm2();
    let homogeneous = p.is_homogeneous();
    let limit = if homogeneous {
        l1_bound.min(l2_norm)
    } else {
        l1_bound
    } + VN_SLACK;
    let mut per_dim = Vec::with_capacity(dims.len());
    let mut violations = 0;
    for &d in dims {
        let norms: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let stream = ((d as u64) << 32) | i as u64;
                let t = random_row_contraction_stream(n, d, seed, stream);
                spectral_norm(&evaluate(p, &t).expect("alphabet checked"))
            })
            .collect();
        violations += norms.iter().filter(|&&x| x > limit).count();
        per_dim.push(DimensionMax {
            dim: d,
            samples,
            max_norm: norms.iter().copied().fold(0.0, f64::max),
        });
    }
    let max_norm = per_dim.iter().map(|m| m.max_norm).fold(0.0, f64::max);
    Ok(VnReport {
        per_dim,
        max_norm,
        l1_bound,
        l2_norm,
        homogeneous,
        violations,
        holds: violations == 0,
    })
}

/// Compressions `P_N S_i P_N` of the creation operators to words of length
/// at most `degree`.
pub fn compression_tuple(n: usize, degree: usize) -> Result<MatrixTuple> {
    let d = word_count(n, degree).ok_or(FockError::ResourceCap {
        columns: usize::MAX,
        cap: usize::MAX,
    })?;
    let mut mats = vec![DMatrix::<Complex64>::zeros(d, d); n];
    for col in 0..d {
        let g = Word::from_graded_index(n, col);
        if g.len() == degree {
            continue;
        }
        for (i, m) in mats.iter_mut().enumerate() {
            let row = Word::letter(i as u8 + 1).concat(&g).graded_index(n);
            m[(row, col)] = Complex64::new(1.0, 0.0);
        }
    }
    MatrixTuple::new(mats)
}
