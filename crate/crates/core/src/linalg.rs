//! Small linear-algebra kernels shared by the norm estimators and the
//! subspace computations: complex vector helpers, a restarted Lanczos
//! solver for extreme eigenpairs of Hermitian operators, and dense
//! Hermitian eigen/SVD wrappers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Singular values below this fraction of the largest are treated as zero
/// in every rank decision.
pub const RANK_THRESHOLD: f64 = 1e-9;

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // <a, b> = sum a_i conj(b_i)
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

pub fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(x: &mut [Complex64], alpha: f64) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Deterministic pseudo-random unit vector.
pub fn random_unit(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    let nv = norm(&v);
    scale(&mut v, 1.0 / nv);
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Largest,
    Smallest,
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Krylov dimension before a restart.
    pub max_subspace: usize,
    /// Relative residual `||A x - theta x|| / scale` at which to stop.
    pub tol: f64,
    pub max_matvecs: usize,
}

impl LanczosOptions {
    /// Subspace size from a memory budget of roughly four million stored
    /// complex entries.
    pub fn for_dim(dim: usize) -> Self {
        let budget = 4_000_000 / dim.max(1);
        LanczosOptions {
            max_subspace: budget.clamp(20, 400).min(dim),
            tol: 1e-10,
            max_matvecs: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenEstimate {
    /// Ritz value; a lower bound for the top eigenvalue (`Largest`) or an
    /// upper bound for the bottom one (`Smallest`).
    pub value: f64,
    pub vector: Vec<Complex64>,
    /// `||A x - value x||` for the returned unit vector.
    pub residual: f64,
    pub converged: bool,
    pub matvecs: usize,
}

/// Relative change of the extreme Ritz value between two checks below which
/// it counts as converged.
const STAGNATION: f64 = 1e-14;

/// Extreme eigenpair of a Hermitian operator given by `apply(x, out)`,
/// using Lanczos with full reorthogonalization, restarted from the current
/// best Ritz vector whenever the subspace fills up.

pub fn lanczos<F>(
    dim: usize,
    mut apply: F,
    start: Option<&[Complex64]>,
    which: Extreme,
    opts: &LanczosOptions,
) -> EigenEstimate
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    assert!(dim > 0);
    let mut x = match start {
        Some(s) if norm(s) > 0.0 => {
            // a little noise keeps warm starts from sitting in an invariant
            // subspace orthogonal to the wanted vector
            let noise = random_unit(dim, 0x5eed);
            let ns = norm(s);
            let mut v: Vec<Complex64> = s
                .iter()
                .zip(&noise)
                .map(|(a, b)| a / ns + b * 1e-3)
                .collect();
            let nv = norm(&v);
            scale(&mut v, 1.0 / nv);
            v
        }
        _ => random_unit(dim, 0x5eed),
    };
    let m_max = opts.max_subspace.clamp(1, dim);
    let mut matvecs = 0usize;
    let mut w = vec![Complex64::default(); dim];
    let mut best_value = match which {
        Extreme::Largest => f64::NEG_INFINITY,
        Extreme::Smallest => f64::INFINITY,
    };
    let mut spectrum_scale: f64 = 0.0;
    let mut stagnated = false;

    loop {
        let mut basis: Vec<Vec<Complex64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut exhausted = false;
        let mut ritz: Option<(f64, Vec<f64>, f64)> = None;

        for j in 0..m_max {
            apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&w, &basis[j]).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(&w, v);
                    axpy(&mut w, -c, v);
                }
            }
            let b = norm(&w);
            let k = alpha.len();
            let check = k % 8 == 0 || k == m_max || matvecs >= opts.max_matvecs;
            let small = b <= 1e-14 * spectrum_scale.max(a.abs()).max(f64::MIN_POSITIVE);
            if check || small {
                let (theta, y) = tridiagonal_extreme(&alpha, &beta, which);
                let top = match which {
                    Extreme::Largest => theta,
                    Extreme::Smallest => tridiagonal_extreme(&alpha, &beta, Extreme::Largest).0,
                };
                spectrum_scale = spectrum_scale.max(top.abs());
                let res = b * y[k - 1].abs();
                let scale_ref = match which {
                    Extreme::Largest => theta.abs(),
                    Extreme::Smallest => spectrum_scale,
                };
                // the Ritz value converges quadratically faster than the
                // vector, so a value frozen at rounding level is final even
                // when a tight cluster keeps the residual large
                let frozen = ritz.as_ref().is_some_and(|(prev, _, _)| {
                    (theta - prev).abs() <= STAGNATION * scale_ref.max(f64::MIN_POSITIVE)
                });
                ritz = Some((theta, y, res));
                if small || frozen || res <= opts.tol * scale_ref.max(f64::MIN_POSITIVE) {
                    stagnated |= frozen;
                    exhausted = true;
                    break;
                }
                if matvecs >= opts.max_matvecs {
                    break;
                }
            }
            if j + 1 == m_max {
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            scale(&mut next, 1.0 / b);
            basis.push(next);
        }

        let (theta, y, _) = ritz.expect("at least one Ritz check per cycle");
        let mut xr = vec![Complex64::default(); dim];
        for (v, yi) in basis.iter().zip(&y) {
            axpy(&mut xr, Complex64::new(*yi, 0.0), v);
        }
        let nx = norm(&xr);
        scale(&mut xr, 1.0 / nx);
        x = xr;
        let improved = match which {
            Extreme::Largest => theta >= best_value,
            Extreme::Smallest => theta <= best_value,
        };
        if improved {
            best_value = theta;
        }
        if exhausted || matvecs >= opts.max_matvecs {
            break;
        }
    }

    // certify with an explicit residual
    apply(&x, &mut w);
    matvecs += 1;
    let rq = dot(&w, &x).re;
    axpy(&mut w, Complex64::new(-rq, 0.0), &x);
    let residual = norm(&w);
    let scale_ref = match which {
        Extreme::Largest => rq.abs(),
        Extreme::Smallest => spectrum_scale.max(rq.abs()),
    };
    let value = match which {
        // both the Rayleigh quotient and the best Ritz value are attained by
        // unit vectors, so the better one is still a valid bound
        Extreme::Largest => rq.max(best_value),
        Extreme::Smallest => rq.min(best_value),
    };
    EigenEstimate {
        value,
        vector: x,
        residual,
        converged: stagnated || residual <= 10.0 * opts.tol * scale_ref.max(f64::MIN_POSITIVE),
        matvecs,
    }
}

/// Extreme eigenvalue and unit eigenvector of the symmetric tridiagonal
/// matrix with diagonal `alpha` and off-diagonal `beta`: Sturm bisection for
/// the value, then inverse iteration with a shift just outside the spectrum,
/// where the shifted matrix is definite and needs no pivoting.
fn tridiagonal_extreme(alpha: &[f64], beta: &[f64], which: Extreme) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let off = |i: usize| if i < beta.len() { beta[i].abs() } else { 0.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = off(i) + if i > 0 { off(i - 1) } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    // eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let b2 = if i > 0 {
                beta[i - 1] * beta[i - 1]
            } else {
                0.0
            };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * scale;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let below = count_below(mid);
        let go_down = match which {
            Extreme::Largest => below == k,
            Extreme::Smallest => below >= 1,
        };
        if go_down {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (theta, shift) = match which {
        Extreme::Largest => (lo, hi + 4.0 * f64::EPSILON * scale),
        Extreme::Smallest => (hi, lo - 4.0 * f64::EPSILON * scale),
    };
    let mut y = vec![1.0; k];
    let mut diag = vec![0.0; k];
    for _ in 0..3 {
        // forward elimination and back substitution for (T - shift) x = y
        let mut rhs = y.clone();
        diag[0] = alpha[0] - shift;
        for i in 1..k {
            let m = beta[i - 1] / diag[i - 1];
            diag[i] = alpha[i] - shift - m * beta[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        y[k - 1] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            y[i] = (rhs[i] - beta[i] * y[i + 1]) / diag[i];
        }
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(ny.is_finite() && ny > 0.0) {
            return tridiagonal_extreme_dense(alpha, beta, which);
        }
        y.iter_mut().for_each(|v| *v /= ny);
    }
    (theta, y)
}

fn tridiagonal_extreme_dense(alpha: &[f64], beta: &[f64], which: Extreme) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut idx = 0;
    for i in 1..k {
        let better = match which {
            Extreme::Largest => eig.eigenvalues[i] > eig.eigenvalues[idx],
            Extreme::Smallest => eig.eigenvalues[i] < eig.eigenvalues[idx],
        };
        if better {
            idx = i;
        }
    }
    let y = eig.eigenvectors.column(idx).iter().copied().collect();
    (eig.eigenvalues[idx], y)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut vals: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Dense matrix whose columns are the given vectors.
pub fn columns_to_matrix(rows: usize, cols: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Orthonormal basis of the column span, dropping directions whose singular
/// value is below `RANK_THRESHOLD` times the largest.
pub fn orthonormal_basis(m: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Vec::new();
    }
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > RANK_THRESHOLD * smax)
        .map(|(i, _)| u.column(i).iter().copied().collect())
        .collect()
}

/// Minimum-norm least-squares solution of `m x = b`, with the rank decided
/// by `RANK_THRESHOLD`.
pub fn min_norm_solve(m: &DMatrix<Complex64>, b: &[Complex64]) -> Vec<Complex64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rhs = DVector::from_column_slice(b);
    let x = svd
        .solve(&rhs, (RANK_THRESHOLD * smax).max(f64::MIN_POSITIVE))
        .expect("U and V were computed");
    x.iter().copied().collect()
}
