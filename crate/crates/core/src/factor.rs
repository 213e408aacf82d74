//! Inner and outer elements: classification, inner-outer factorization,
//! wandering subspaces, inner division and invertibility diagnostics.
//!
//! # Finite inner criterion
//!
//! Left multiplication by `phi` is an isometry iff the vectors
//! `phi (x) e_f` are orthonormal. Two such vectors can only overlap when one
//! index is a suffix of the other, and right multiplication by `e_g` is an
//! isometry, so `<phi e_{s g}, phi e_g> = <phi e_s, phi>`. The full Gram
//! condition therefore reduces to `||phi|| = 1` and `<phi, phi (x) e_s> = 0`
//! for nonempty `s`, which vanishes trivially once `|s| > deg phi`. These
//! numbers are the coefficients of `L_phi^* phi`.
//!
//! # Truncated Wold recursion
//!
//! For generators `v_j` let `M_k = span{e_p (x) v_j : |p| <= k}` and
//! `W_k = span{e_p (x) v_j : 1 <= |p| <= k}`. Since the left creation
//! operators have orthogonal ranges, `W_k` is the orthogonal sum of
//! `S_p L_{k-|p|}` over `1 <= |p| <= k`, where `L_j = M_j - W_j`. Hence
//! projecting onto `W_k` only needs the earlier wandering bases, and only
//! for prefixes `p` that occur in the generators' support.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FockError, Result};
use crate::freepoly::{FreePoly, TruncatedSeries};
use crate::linalg::{self, RANK_THRESHOLD};
use crate::opnorm::{self, FiniteSection, SigmaMin};
use crate::word::Word;

/// Least-squares problems with at most this many unknowns are solved by a
/// dense SVD; larger ones by conjugate gradients on the normal equations.
const DENSE_LSQ_COLUMNS: usize = 400;
const CGLS_MAX_ITERATIONS: usize = 5000;

/// Relative change below which a singular-value profile counts as flat.
pub const PLATEAU_REL_CHANGE: f64 = 1e-2;
/// Smallest singular value a plateau must stay above.
pub const PLATEAU_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct InnerCheck {
    pub verdict: bool,
    pub defect: f64,
    /// Extra slack granted for the tail of a truncated series.
    pub allowance: f64,
}

/// Sup of `|<phi, phi (x) e_s>|` over nonempty `s`, and `| ||phi|| - 1 |`.
pub fn inner_defect(phi: &FreePoly) -> f64 {
    let q = phi.adjoint_mul(phi);
    let shifts = q
        .terms()
        .filter(|(w, _)| !w.is_empty())
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    (phi.norm2() - 1.0).abs().max(shifts)
}

/// Inner test with tolerance `tol`. A tail `t` perturbs every quantity in
/// the defect by at most `2 t ||p|| + t^2`.
pub fn is_inner(phi: &TruncatedSeries, tol: f64) -> InnerCheck {
    let defect = inner_defect(&phi.poly);
    let t = phi.tail_bound;
    let allowance = if t > 0.0 {
        t.max(2.0 * t * phi.poly.norm2() + t * t)
    } else {
        0.0
    };
    InnerCheck {
        verdict: defect <= tol + allowance,
        defect,
        allowance,
    }
}

pub fn is_inner_poly(phi: &FreePoly, tol: f64) -> InnerCheck {
    is_inner(&TruncatedSeries::exact(phi.clone()), tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct OuterProfile {
    /// `dists[m]` is the distance from `e_0` to `psi (x) P_m`.
    pub dists: Vec<f64>,
    pub tol: f64,
    pub outer_at_tolerance: bool,
}

/// Columns of the section of `psi` at degree `degree` that interact with the
/// column of the empty word through `A^* A`. The least-squares distance from
/// `e_0` only depends on this block.
fn coupled_columns(psi: &FreePoly, degree: usize, limit: usize) -> Option<Vec<Word>> {
    let supp: Vec<&Word> = psi.terms().map(|(w, _)| w).collect();
    let support_set: BTreeSet<&Word> = supp.iter().copied().collect();
    let mut seen: BTreeSet<Word> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(Word::empty());
    queue.push_back(Word::empty());
    while let Some(g) = queue.pop_front() {
        for f in &supp {
            let h = f.concat(&g);
            for k in 0..=h.len() {
                if h.len() - k > degree || !support_set.contains(&h.prefix(k)) {
                    continue;
                }
                let next = h.suffix(k);
                if seen.insert(next.clone()) {
                    if seen.len() > limit {
                        return None;
                    }
                    queue.push_back(next);
                }
            }
        }
    }
    Some(seen.into_iter().collect())
}

/// Distance from `e_0` to `psi (x) P_degree` on the coupled block, by dense
/// minimum-norm least squares.
fn dense_outer_distance(psi: &FreePoly, cols: &[Word]) -> f64 {
    let mut rows: HashMap<Word, usize> = HashMap::new();
    rows.insert(Word::empty(), 0);
    let mut entries = Vec::new();
    for (j, g) in cols.iter().enumerate() {
        for (f, a) in psi.terms() {
            let h = f.concat(g);
            let next = rows.len();
            let i = *rows.entry(h).or_insert(next);
            entries.push((i, j, *a));
        }
    }
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (i, j, a) in entries {
        m[(i, j)] += a;
    }
    let mut b = vec![Complex64::default(); rows.len()];
    b[0] = Complex64::new(1.0, 0.0);
    let x = linalg::min_norm_solve(&m, &b);
    let mut r = b;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            r[i] -= m[(i, j)] * x[j];
        }
    }
    linalg::norm(&r)
}

/// Least squares `min ||A x - b||` by CGLS from a warm start; returns the
/// solution and the directly computed residual norm.
fn cgls(section: &FiniteSection, b: &[Complex64], x0: Vec<Complex64>) -> (Vec<Complex64>, f64) {
    let mut x = x0;
    let mut ax = vec![Complex64::default(); section.rows()];
    section.apply(&x, &mut ax);
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut s = vec![Complex64::default(); section.cols()];
    section.adjoint(&r, &mut s);
    let mut p = s.clone();
    let mut gamma = linalg::norm(&s).powi(2);
    let stop = (1e-13 * linalg::norm(b)).powi(2);
    let mut q = vec![Complex64::default(); section.rows()];
    for _ in 0..CGLS_MAX_ITERATIONS {
        if gamma <= stop {
            break;
        }
        section.apply(&p, &mut q);
        let qq = linalg::norm(&q).powi(2);
        if qq == 0.0 {
            break;
        }
        let alpha = Complex64::new(gamma / qq, 0.0);
        linalg::axpy(&mut x, alpha, &p);
        linalg::axpy(&mut r, -alpha, &q);
        section.adjoint(&r, &mut s);
        let next = linalg::norm(&s).powi(2);
        let beta = next / gamma;
        gamma = next;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + *pi * beta;
        }
    }
    section.apply(&x, &mut ax);
    let res = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (x, res)
}

/// `dist_m = min_{deg h <= m} ||psi (x) h - e_0||` for `m = 0..=degree`.
/// The profile is made nonincreasing by a running minimum.
pub fn outer_profile(psi: &FreePoly, degree: usize, tol: f64) -> Result<OuterProfile> {
    outer_profile_with_cap(psi, degree, tol, opnorm::DEFAULT_COLUMN_CAP)
}

pub fn outer_profile_with_cap(
    psi: &FreePoly,
    degree: usize,
    tol: f64,
    cap: usize,
) -> Result<OuterProfile> {
    if psi.is_zero() {
        return Err(FockError::Precondition("zero polynomial".into()));
    }
    let mut dists = Vec::with_capacity(degree + 1);
    let mut warm: Vec<Complex64> = Vec::new();
    for m in 0..=degree {
        let d = if psi.constant() == Complex64::new(0.0, 0.0) {
            // every word of psi (x) h is nonempty
            1.0
        } else if let Some(cols) = coupled_columns(psi, m, DENSE_LSQ_COLUMNS) {
            dense_outer_distance(psi, &cols)
        } else {
            let section = FiniteSection::with_cap(psi, m, cap)?;
            let mut b = vec![Complex64::default(); section.rows()];
            b[0] = Complex64::new(1.0, 0.0);
            warm.resize(section.cols(), Complex64::default());
            let (x, res) = cgls(&section, &b, std::mem::take(&mut warm));
            warm = x;
            res
        };
        let d = dists.last().map_or(d, |prev: &f64| prev.min(d));
        dists.push(d);
    }
    let last = *dists.last().expect("degree 0 is always computed");
    Ok(OuterProfile {
        dists,
        tol,
        outer_at_tolerance: last < tol,
    })
}

/// Orthonormal bases of the truncated wandering subspaces `L_0, L_1, ...`
/// of the left-invariant subspace generated by `generators`.
struct WoldRecursion {
    n: usize,
    generators: Vec<FreePoly>,
    prefixes: Vec<Vec<Word>>,
    scale: f64,
    levels: Vec<Vec<FreePoly>>,
}

impl WoldRecursion {
    fn new(generators: Vec<FreePoly>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(FockError::Precondition("no generators".into()));
        };
        let n = first.alphabet_size();
        for g in &generators {
            first.check_same_alphabet(g)?;
            if g.is_zero() {
                return Err(FockError::Precondition("zero generator".into()));
            }
        }
        let prefixes = generators
            .iter()
            .map(|g| {
                let mut set = BTreeSet::new();
                for (w, _) in g.terms() {
                    for k in 1..=w.len() {
                        set.insert(w.prefix(k));
                    }
                }
                set.into_iter().collect()
            })
            .collect();
        let (rows, cols) = dense_columns(&generators);
        let scale = top_singular_value(&linalg::columns_to_matrix(rows.len(), &cols));
        Ok(WoldRecursion {
            n,
            generators,
            prefixes,
            scale,
            levels: Vec::new(),
        })
    }

    /// `v - proj_{W_k} v` for generator `j` at the next level `k`.
    fn residual(&self, j: usize) -> FreePoly {
        let k = self.levels.len();
        let v = &self.generators[j];
        let mut r = v.clone();
        for p in &self.prefixes[j] {
            if p.len() > k {
                break;
            }
            let shifted = v.delete_prefix(p);
            for b in &self.levels[k - p.len()] {
                let c = shifted.inner_product(b);
                if c.norm() > 0.0 {
                    r = r.add_scaled(&b.prepend(p), -c);
                }
            }
        }
        r
    }

    fn step(&mut self) {
        let residuals: Vec<FreePoly> = (0..self.generators.len())
            .map(|j| self.residual(j))
            .collect();
        let basis = orthonormalize(self.n, &residuals, self.scale);
        self.levels.push(basis);
    }

    fn run_to(&mut self, depth: usize) -> &[FreePoly] {
        while self.levels.len() <= depth {
            self.step();
        }
        &self.levels[depth]
    }
}

/// Union of supports as a row index, and each polynomial as a dense column.
fn dense_columns(polys: &[FreePoly]) -> (Vec<Word>, Vec<Vec<Complex64>>) {
    let words: BTreeSet<&Word> = polys
        .iter()
        .flat_map(|p| p.terms().map(|(w, _)| w))
        .collect();
    let rows: Vec<Word> = words.into_iter().cloned().collect();
    let index: HashMap<&Word, usize> = rows.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let cols = polys
        .iter()
        .map(|p| {
            let mut col = vec![Complex64::default(); rows.len()];
            for (w, c) in p.terms() {
                col[index[w]] = *c;
            }
            col
        })
        .collect();
    (rows, cols)
}

fn top_singular_value(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Orthonormal basis of the span, dropping singular values below
/// `RANK_THRESHOLD * scale`.
fn orthonormalize(n: usize, polys: &[FreePoly], scale: f64) -> Vec<FreePoly> {
    let cutoff = RANK_THRESHOLD * scale;
    if polys.len() == 1 {
        let norm = polys[0].norm2();
        return if norm > cutoff {
            vec![polys[0].scale_real(1.0 / norm)]
        } else {
            Vec::new()
        };
    }
    let (rows, cols) = dense_columns(polys);
    if rows.is_empty() {
        return Vec::new();
    }
    let m = linalg::columns_to_matrix(rows.len(), &cols);
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested U");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > cutoff)
        .map(|(i, _)| {
            FreePoly::from_terms(
                n,
                rows.iter()
                    .cloned()
                    .zip(u.column(i).iter().copied())
                    .filter(|(_, c)| c.norm() >= crate::freepoly::PRUNE_THRESHOLD),
            )
            .expect("rows are valid words")
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct FactorizationResult {
    pub inner_part: TruncatedSeries,
    pub outer_part: TruncatedSeries,
    /// `||psi - inner (x) outer||` with the computed parts.
    pub residual: f64,
    /// Inner defect of the computed inner part.
    pub inner_defect: f64,
    pub trunc_degree: usize,
}

/// Inner-outer factorization `psi = phi (x) g` at truncation `degree`.
///
/// The closed right ideal generated by `psi` is `phi (x) F^2`; after the
/// flip it is the left-invariant subspace generated by `flip(psi)`, whose
/// wandering subspace is one-dimensional and spanned by `flip(phi)`. The
/// wandering vector is computed with depth `degree - deg psi`, and the outer
/// part is `g = L_phi^* psi`.
pub fn inner_outer(psi: &FreePoly, degree: usize) -> Result<FactorizationResult> {
    if psi.is_zero() {
        return Err(FockError::Precondition("zero polynomial".into()));
    }
    let d = psi.top_degree();
    if degree < d {
        return Err(FockError::Precondition(format!(
            "degree {degree} is below the polynomial degree {d}"
        )));
    }
    let mut wold = WoldRecursion::new(vec![psi.flip()])?;
    let level = wold.run_to(degree - d);
    let wandering = level.first().cloned().ok_or_else(|| {
        FockError::Precondition("wandering subspace collapsed below the rank threshold".into())
    })?;
    let phi = wandering.flip().normalize_phase();
    let g = phi.adjoint_mul(psi);
    let residual = psi.distance(&phi.tensor(&g));
    let inner_defect = inner_defect(&phi);
    Ok(FactorizationResult {
        inner_part: TruncatedSeries::new(phi, degree, 0.0)?,
        outer_part: TruncatedSeries::exact(g),
        residual,
        inner_defect,
        trunc_degree: degree,
    })
}

#[derive(Clone, Debug)]
pub struct WanderingBasis {
    /// Orthonormal basis of the truncated wandering subspace; flipping each
    /// element gives an inner function.
    pub generators: Vec<FreePoly>,
    pub trunc_degree: usize,
    pub gram_defect: f64,
}

impl WanderingBasis {
    /// `||x - proj x||` for the projection onto the span of the basis.
    pub fn containment_residual(&self, x: &FreePoly) -> f64 {
        let mut r = x.clone();
        for b in &self.generators {
            r = r.add_scaled(b, -x.inner_product(b));
        }
        r.norm2()
    }
}

/// Wandering subspace `M_N - (S_1 M_{N-1} + ... + S_n M_{N-1})` of
/// `M_N = span{e_p (x) v : v generator, |p| <= N}`.
pub fn wandering_basis(generators: &[FreePoly], degree: usize) -> Result<WanderingBasis> {
    let mut wold = WoldRecursion::new(generators.to_vec())?;
    let basis = wold.run_to(degree).to_vec();
    let mut gram_defect: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_defect = gram_defect.max((a.inner_product(b) - target).norm());
        }
    }
    Ok(WanderingBasis {
        generators: basis,
        trunc_degree: degree,
        gram_defect,
    })
}

/// Inner `phi3` with `phi1 = phi2 (x) phi3`, from `c_h = <phi1, phi2 (x) e_h>`
/// for `|h| <= degree`. Fails with `NotDivisible` when the product misses
/// `phi1` by more than `tol + 2 (t1 + t2)` or the quotient is not inner.
pub fn inner_divide(
    phi1: &TruncatedSeries,
    phi2: &TruncatedSeries,
    degree: usize,
    tol: f64,
) -> Result<TruncatedSeries> {
    phi1.poly.check_same_alphabet(&phi2.poly)?;
    for (name, phi) in [("dividend", phi1), ("divisor", phi2)] {
        let check = is_inner(phi, tol);
        if !check.verdict {
            return Err(FockError::Precondition(format!(
                "{name} is not inner (defect {:.3e})",
                check.defect
            )));
        }
    }
    let quotient = phi2.poly.adjoint_mul(&phi1.poly).truncate(degree);
    let residual = phi1.poly.distance(&phi2.poly.tensor(&quotient));
    let tails = phi1.tail_bound + phi2.tail_bound;
    let allowance = tol + 2.0 * tails;
    let series = TruncatedSeries::new(quotient, degree, tails)?;
    if residual > allowance || !is_inner(&series, tol).verdict {
        return Err(FockError::NotDivisible {
            residual,
            allowance,
        });
    }
    Ok(series)
}

#[derive(Clone, Debug, Serialize)]
pub struct FormalInverse {
    /// `psi_N` with `phi (x) psi_N = e_0` modulo words longer than `N`.
    pub inverse: FreePoly,
    pub degree: usize,
    /// `||psi_k||` for the truncations `k = 0..=N`.
    pub norm_growth: Vec<f64>,
    /// Geometric growth rate of `norm_growth` over its second half.
    pub growth_rate: f64,
    /// Section estimate `linf_lower(psi_N, probe_degree)`.
    pub linf_lower: f64,
    pub probe_degree: usize,
}

/// Section degree used for the multiplier-norm diagnostic of the inverse.
const PROBE_COLUMNS: usize = 4096;

pub fn formal_inverse(phi: &FreePoly, degree: usize) -> Result<FormalInverse> {
    let inverse = phi.graded_inverse(degree)?;
    let mut norm_growth = Vec::with_capacity(degree + 1);
    let mut acc = 0.0;
    let parts = inverse.homogeneous_parts();
    for k in 0..=degree {
        acc += parts.get(k).map_or(0.0, FreePoly::norm2_sqr);
        norm_growth.push(acc.sqrt());
    }
    let half = degree / 2;
    let growth_rate = if degree > half && norm_growth[half] > 0.0 {
        (norm_growth[degree] / norm_growth[half]).powf(1.0 / (degree - half) as f64)
    } else {
        1.0
    };
    let n = phi.alphabet_size();
    let mut probe_degree = 0;
    while probe_degree < degree
        && crate::word::word_count(n, probe_degree + 1).is_some_and(|c| c <= PROBE_COLUMNS)
        && (n > 1 || probe_degree < 64)
    {
        probe_degree += 1;
    }
    let linf_lower = opnorm::linf_lower(&inverse, probe_degree)?.value;
    Ok(FormalInverse {
        inverse,
        degree,
        norm_growth,
        growth_rate,
        linf_lower,
        probe_degree,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Invertible,
    NotInvertible,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvertibilityReport {
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub outer: OuterProfile,
    pub sigma_min: Vec<SigmaMin>,
    pub formal_inverse: Option<FormalInverse>,
}

/// Formal inverses growing at least this fast count as evidence against
/// invertibility.
const DIVERGENT_GROWTH: f64 = 1.05;

/// A distance profile that keeps this fraction of its halfway value counts
/// as stalled rather than slowly converging.
const STALLED_DISTANCE: f64 = 0.9;

pub fn invertibility_report(
    phi: &FreePoly,
    degree: usize,
    tol: f64,
) -> Result<InvertibilityReport> {
    let outer = outer_profile(phi, degree, tol)?;
    let mut sigma_min = Vec::new();
    for d in 0..=degree {
        match opnorm::sigma_min_lower_profile(phi, &[d]) {
            Ok(mut s) => {
                let mut s = s.remove(0);
                if let Some(prev) = sigma_min.last() {
                    let prev: &SigmaMin = prev;
                    s.upper = s.upper.min(prev.upper);
                    s.value = s.value.min(prev.value);
                }
                sigma_min.push(s);
            }
            Err(FockError::ResourceCap { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let formal = match formal_inverse(phi, degree) {
        Ok(f) => Some(f),
        Err(FockError::NotFormallyInvertible) => None,
        Err(e) => return Err(e),
    };

    let mut reasons = Vec::new();
    let dist = *outer.dists.last().expect("nonempty profile");
    let plateau = match sigma_min.as_slice() {
        [.., a, b] => {
            let rel = (a.value - b.value).abs() / a.value.max(f64::MIN_POSITIVE);
            (rel < PLATEAU_REL_CHANGE && b.value > PLATEAU_FLOOR).then_some(b.value)
        }
        _ => None,
    };
    let verdict = if formal.is_none() {
        reasons.push("constant coefficient is zero, so no inverse exists".into());
        Verdict::NotInvertible
    } else if outer.outer_at_tolerance && plateau.is_some() {
        reasons.push(format!("outer at tolerance: dist {dist:.3e} < {tol:.1e}"));
        reasons.push(format!(
            "smallest singular value plateaus at {:.6}",
            plateau.unwrap_or_default()
        ));
        Verdict::Invertible
    } else {
        let mut negative = false;
        if !outer.outer_at_tolerance {
            let halfway = outer.dists[outer.dists.len() / 2];
            if dist >= STALLED_DISTANCE * halfway {
                reasons.push(format!(
                    "not outer: dist stalls at {dist:.3e} (was {halfway:.3e} at half the degree)"
                ));
                negative = true;
            } else {
                reasons.push(format!("not outer at tolerance yet: dist {dist:.3e}"));
            }
        }
        if let Some(f) = &formal {
            if f.growth_rate >= DIVERGENT_GROWTH {
                reasons.push(format!(
                    "formal inverse norm grows like {:.4}^N",
                    f.growth_rate
                ));
                negative = true;
            }
        }
        if plateau.is_none() {
            reasons.push("smallest singular value has not plateaued".into());
        }
        if negative {
            Verdict::NotInvertible
        } else {
            Verdict::Inconclusive
        }
    };
    Ok(InvertibilityReport {
        verdict,
        reasons,
        outer,
        sigma_min,
        formal_inverse: formal,
    })
}
