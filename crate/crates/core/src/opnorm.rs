//! Finite sections of left multiplication and lower estimates of the
//! multiplier norm.
//!
//! Columns of a section of degree `N` are indexed by all words of length at
//! most `N`, rows by all words of length at most `N + deg(phi)`, both in
//! graded-lex order. The matrix is never stored: a term `a_f e_f` maps the
//! contiguous block of length-`l` columns to a contiguous block of rows,
//! since `rank(f g) = rank(f) n^l + rank(g)`.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FockError, Result};
use crate::freepoly::{FreePoly, TruncatedSeries};
use crate::linalg::{self, Extreme, LanczosOptions};
use crate::word::{level_offset, word_count, Word};

pub const DEFAULT_COLUMN_CAP: usize = 500_000;

/// Sections with at most this many columns are handled with a dense
/// Hermitian eigensolver for the largest singular value.
const DENSE_MAX_COLUMNS: usize = 256;
/// Same, for the smallest singular value.
const DENSE_MIN_COLUMNS: usize = 1024;

#[derive(Clone, Debug)]
struct SectionTerm {
    len: usize,
    rank: usize,
    coeff: Complex64,
}

#[derive(Clone, Debug)]
pub struct FiniteSection {
    n: usize,
    source_degree: usize,
    poly_degree: usize,
    terms: Vec<SectionTerm>,
    powers: Vec<usize>,
    offsets: Vec<usize>,
    cols: usize,
    rows: usize,
}

/// Largest singular value of a section, as a certified lower bound.
#[derive(Clone, Debug)]
pub struct SigmaMax {
    pub value: f64,
    pub converged: bool,
    pub matvecs: usize,
    /// Approximate top right singular vector, when computed iteratively.
    pub vector: Option<Vec<Complex64>>,
}

/// Smallest singular value of a section, as an interval.
#[derive(Clone, Debug, Serialize)]
pub struct SigmaMin {
    pub degree: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// True when computed by a dense eigensolver.
    pub exact: bool,
}

impl FiniteSection {
    pub fn new(phi: &FreePoly, degree: usize) -> Result<Self> {
        Self::with_cap(phi, degree, DEFAULT_COLUMN_CAP)
    }

    pub fn with_cap(phi: &FreePoly, degree: usize, cap: usize) -> Result<Self> {
        let n = phi.alphabet_size();
        let poly_degree = phi.top_degree();
        let cols = word_count(n, degree).ok_or(FockError::ResourceCap {
            columns: usize::MAX,
            cap,
        })?;
        if cols > cap {
            return Err(FockError::ResourceCap { columns: cols, cap });
        }
        let rows = word_count(n, degree + poly_degree)
            .ok_or(FockError::ResourceCap { columns: cols, cap })?;
        let top = degree + poly_degree;
        let powers: Vec<usize> = (0..=top).map(|k| n.pow(k as u32)).collect();
        let offsets: Vec<usize> = (0..=top).map(|k| level_offset(n, k)).collect();
        let terms = phi
            .terms()
            .map(|(w, c)| SectionTerm {
                len: w.len(),
                rank: w.lex_rank(n),
                coeff: *c,
            })
            .collect();
        Ok(FiniteSection {
            n,
            source_degree: degree,
            poly_degree,
            terms,
            powers,
            offsets,
            cols,
            rows,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    pub fn source_degree(&self) -> usize {
        self.source_degree
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        y.fill(Complex64::default());
        for l in 0..=self.source_degree {
            let size = self.powers[l];
            let src = &x[self.offsets[l]..self.offsets[l] + size];
            for t in &self.terms {
                let start = self.offsets[t.len + l] + t.rank * size;
                linalg::axpy(&mut y[start..start + size], t.coeff, src);
            }
        }
    }

    /// `x = A^* y`.
    pub fn adjoint(&self, y: &[Complex64], x: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        x.fill(Complex64::default());
        for l in 0..=self.source_degree {
            let size = self.powers[l];
            let dst = &mut x[self.offsets[l]..self.offsets[l] + size];
            for t in &self.terms {
                let start = self.offsets[t.len + l] + t.rank * size;
                linalg::axpy(dst, t.coeff.conj(), &y[start..start + size]);
            }
        }
    }

    /// Column `g`, i.e. the coefficient vector of `phi (x) e_g`.
    pub fn column(&self, g: &Word) -> Vec<Complex64> {
        let mut x = vec![Complex64::default(); self.cols];
        x[g.graded_index(self.n)] = Complex64::new(1.0, 0.0);
        let mut y = vec![Complex64::default(); self.rows];
        self.apply(&x, &mut y);
        y
    }

    fn column_position(&self, col: usize) -> (usize, usize) {
        let mut l = 0;
        while l < self.source_degree && self.offsets[l + 1] <= col {
            l += 1;
        }
        (l, col - self.offsets[l])
    }

    /// Nonzero entries `(row, col, value)`, sorted by column then row.
    pub fn to_triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::with_capacity(self.cols * self.terms.len());
        for col in 0..self.cols {
            let (l, r) = self.column_position(col);
            let mut entries: Vec<(usize, usize, Complex64)> = self
                .terms
                .iter()
                .map(|t| {
                    (
                        self.offsets[t.len + l] + t.rank * self.powers[l] + r,
                        col,
                        t.coeff,
                    )
                })
                .collect();
            entries.sort_by_key(|e| e.0);
            out.extend(entries);
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.to_triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Column `col` of `A^* A` as sparse `(row, value)` pairs.
    fn normal_column(&self, col: usize) -> Vec<(usize, Complex64)> {
        let (l, r) = self.column_position(col);
        let mut entries = Vec::new();
        for t in &self.terms {
            let hl = t.len + l;
            let hr = t.rank * self.powers[l] + r;
            for u in &self.terms {
                if u.len > hl || hl - u.len > self.source_degree {
                    continue;
                }
                let rest = hl - u.len;
                let p = self.powers[rest];
                if hr / p == u.rank {
                    entries.push((self.offsets[rest] + hr % p, u.coeff.conj() * t.coeff));
                }
            }
        }
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        entries
    }

    /// Dense `A^* A`.
    pub fn dense_normal(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.cols, self.cols);
        for col in 0..self.cols {
            for (row, v) in self.normal_column(col) {
                m[(row, col)] = v;
            }
        }
        m
    }

    /// Maximum absolute column sum of `A^* A - I`. This bounds the spectral
    /// norm of `A^* A - I`, so every singular value satisfies
    /// `|sigma^2 - 1| <= gram_defect`.
    pub fn gram_defect(&self) -> f64 {
        (0..self.cols)
            .into_par_iter()
            .map(|col| {
                let mut sum = 0.0;
                let mut saw_diag = false;
                for (row, v) in self.normal_column(col) {
                    if row == col {
                        saw_diag = true;
                        sum += (v - 1.0).norm();
                    } else {
                        sum += v.norm();
                    }
                }
                if !saw_diag {
                    sum += 1.0;
                }
                sum
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Interval containing every singular value, from [`Self::gram_defect`].
    pub fn singular_value_enclosure(&self) -> (f64, f64) {
        let d = self.gram_defect();
        ((1.0 - d).max(0.0).sqrt(), (1.0 + d).sqrt())
    }

    pub fn sigma_max(&self, start: Option<&[Complex64]>) -> SigmaMax {
        if self.terms.is_empty() {
            return SigmaMax {
                value: 0.0,
                converged: true,
                matvecs: 0,
                vector: None,
            };
        }
        if self.cols <= DENSE_MAX_COLUMNS {
            let vals = linalg::hermitian_eigenvalues(self.dense_normal());
            let top = vals.last().copied().unwrap_or(0.0).max(0.0);
            return SigmaMax {
                value: top.sqrt(),
                converged: true,
                matvecs: 0,
                vector: None,
            };
        }
        let mut scratch = vec![Complex64::default(); self.rows];
        let est = linalg::lanczos(
            self.cols,
            |x, out| {
                self.apply(x, &mut scratch);
                self.adjoint(&scratch, out);
            },
            start,
            Extreme::Largest,
            &LanczosOptions::for_dim(self.cols),
        );
        SigmaMax {
            value: est.value.max(0.0).sqrt(),
            converged: est.converged,
            matvecs: est.matvecs,
            vector: Some(est.vector),
        }
    }

    pub fn sigma_min(&self) -> SigmaMin {
        if self.terms.is_empty() {
            return SigmaMin {
                degree: self.source_degree,
                value: 0.0,
                lower: 0.0,
                upper: 0.0,
                exact: true,
            };
        }
        if self.cols <= DENSE_MIN_COLUMNS {
            let vals = linalg::hermitian_eigenvalues(self.dense_normal());
            let v = vals[0].max(0.0).sqrt();
            return SigmaMin {
                degree: self.source_degree,
                value: v,
                lower: v,
                upper: v,
                exact: true,
            };
        }
        let mut scratch = vec![Complex64::default(); self.rows];
        let est = linalg::lanczos(
            self.cols,
            |x, out| {
                self.apply(x, &mut scratch);
                self.adjoint(&scratch, out);
            },
            None,
            Extreme::Smallest,
            &LanczosOptions::for_dim(self.cols),
        );
        let upper = est.value.max(0.0).sqrt();
        SigmaMin {
            degree: self.source_degree,
            value: upper,
            lower: 0.0,
            upper,
            exact: false,
        }
    }

    /// Writes the section in Matrix Market coordinate format (1-based).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        let triplets = self.to_triplets();
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(
            w,
            "% left multiplication section, n={}, source degree {}",
            self.n, self.source_degree
        )?;
        writeln!(w, "{} {} {}", self.rows, self.cols, triplets.len())?;
        for (r, c, v) in triplets {
            writeln!(w, "{} {} {:e} {:e}", r + 1, c + 1, v.re, v.im)?;
        }
        Ok(())
    }

    /// The word attached to each row and column index, as JSON.
    pub fn index_table_json(&self) -> serde_json::Value {
        let words = |count: usize| -> Vec<Vec<u8>> {
            (0..count)
                .map(|i| Word::from_graded_index(self.n, i).letters().to_vec())
                .collect()
        };
        serde_json::json!({
            "n": self.n,
            "source_degree": self.source_degree,
            "target_degree": self.source_degree + self.poly_degree,
            "columns": words(self.cols),
            "rows": words(self.rows),
        })
    }
}

/// A lower estimate of a multiplier norm with the interval it certifies.
#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub degree: usize,
}

/// `sigma_max` of the degree-`degree` section: a lower bound for the
/// multiplier norm, nondecreasing in `degree`.
pub fn linf_lower(phi: &FreePoly, degree: usize) -> Result<NormEstimate> {
    linf_lower_with_cap(phi, degree, DEFAULT_COLUMN_CAP)
}

pub fn linf_lower_with_cap(phi: &FreePoly, degree: usize, cap: usize) -> Result<NormEstimate> {
    let section = FiniteSection::with_cap(phi, degree, cap)?;
    let s = section.sigma_max(None);
    Ok(NormEstimate {
        value: s.value,
        lower: s.value,
        upper: phi.l1_upper_bound().max(s.value),
        converged: s.converged,
        degree,
    })
}

/// Section estimate for a truncated series, widened by its tail bound.
pub fn linf_lower_series(
    series: &TruncatedSeries,
    degree: usize,
    cap: usize,
) -> Result<NormEstimate> {
    let mut est = linf_lower_with_cap(&series.poly, degree, cap)?;
    if series.tail_bound > 0.0 {
        est.lower = (est.value - series.tail_bound).max(0.0);
        est.upper = est.value + series.tail_bound;
    }
    Ok(est)
}

#[derive(Clone, Debug, Serialize)]
pub struct LinfEstimate {
    pub estimate: NormEstimate,
    /// Whether successive section values came within the tolerance.
    pub converged: bool,
    /// `(degree, value)` for every section computed.
    pub history: Vec<(usize, f64)>,
}

/// Next section degree: one more level for `n >= 2` (which already doubles
/// the column count), and `2N + 1` for `n = 1`.
fn next_degree(n: usize, degree: usize) -> usize {
    if n == 1 {
        2 * degree + 1
    } else {
        degree + 1
    }
}

/// Grows the section until successive values differ by less than `tol` or
/// `max_degree` is reached. The reported value is the largest seen, a valid
/// lower bound for the norm.
pub fn linf_estimate(phi: &FreePoly, tol: f64, max_degree: usize) -> Result<LinfEstimate> {
    linf_estimate_with_cap(phi, tol, max_degree, DEFAULT_COLUMN_CAP)
}

pub fn linf_estimate_with_cap(
    phi: &FreePoly,
    tol: f64,
    max_degree: usize,
    cap: usize,
) -> Result<LinfEstimate> {
    if !(tol > 0.0) {
        return Err(FockError::Precondition(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let n = phi.alphabet_size();
    let mut degree = 0;
    let mut history = Vec::new();
    let mut best = 0.0f64;
    let mut prev: Option<f64> = None;
    let mut warm: Option<Vec<Complex64>> = None;
    let mut all_converged = true;
    let mut converged = false;
    loop {
        let section = match FiniteSection::with_cap(phi, degree, cap) {
            Ok(s) => s,
            Err(e) if history.is_empty() => return Err(e),
            Err(_) => break,
        };
        let start = warm.take().map(|mut v| {
            v.resize(section.cols(), Complex64::default());
            v
        });
        let s = section.sigma_max(start.as_deref());
        all_converged &= s.converged;
        warm = s.vector;
        history.push((degree, s.value));
        best = best.max(s.value);
        if let Some(p) = prev {
            if (s.value - p).abs() < tol {
                converged = true;
                break;
            }
        }
        prev = Some(s.value);
        if degree >= max_degree {
            break;
        }
        degree = next_degree(n, degree).min(max_degree);
    }
    let last_degree = history.last().map_or(0, |h| h.0);
    Ok(LinfEstimate {
        estimate: NormEstimate {
            value: best,
            lower: best,
            upper: phi.l1_upper_bound().max(best),
            converged: all_converged,
            degree: last_degree,
        },
        converged,
        history,
    })
}

/// Section estimate of `sup { ||p (x) psi|| : ||p|| <= 1 }`, which is the
/// left-multiplier norm of the flipped element.
pub fn right_mult_norm(psi: &FreePoly, degree: usize) -> Result<NormEstimate> {
    linf_lower(&psi.flip(), degree)
}

/// Smallest singular value of the section at each degree. Intervals are
/// intersected with earlier ones, since the sequence is nonincreasing.
pub fn sigma_min_lower_profile(phi: &FreePoly, degrees: &[usize]) -> Result<Vec<SigmaMin>> {
    sigma_min_profile_with_cap(phi, degrees, DEFAULT_COLUMN_CAP)
}

pub fn sigma_min_profile_with_cap(
    phi: &FreePoly,
    degrees: &[usize],
    cap: usize,
) -> Result<Vec<SigmaMin>> {
    if degrees.is_empty() {
        return Err(FockError::Precondition("degree list is empty".into()));
    }
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FockError::Precondition(
            "degree list must be strictly increasing".into(),
        ));
    }
    let mut out: Vec<SigmaMin> = Vec::with_capacity(degrees.len());
    for &d in degrees {
        let mut s = FiniteSection::with_cap(phi, d, cap)?.sigma_min();
        if let Some(prev) = out.last() {
            s.upper = s.upper.min(prev.upper);
            s.value = s.value.min(prev.value);
        }
        out.push(s);
    }
    Ok(out)
}
