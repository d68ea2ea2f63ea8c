//! Dense complex linear algebra: general eigendecomposition and the
//! matrix exponential.
//!
//! The eigensolver follows the classical route for a general complex
//! matrix: Householder reduction to upper Hessenberg form, then single-shift
//! complex QR iterations (Wilkinson shift, exceptional shifts on stagnation)
//! with Givens rotations until the matrix is upper triangular. Right
//! eigenvectors come from back-substitution on the triangular Schur factor,
//! rotated back with the accumulated unitary transformation.

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;

const EPS: f64 = f64::EPSILON;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Iterations allowed per eigenvalue before giving up.
const MAX_ITER_PER_EIGENVALUE: usize = 120;

/// Eigenvalues (unsorted) and optional right eigenvectors (unit columns).
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    pub vectors: Option<DMatrix<Complex64>>,
}

/// Complex Schur form `A = Z T Z^H`.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: DMatrix<Complex64>,
    pub z: DMatrix<Complex64>,
}

/// Eigenvalues and, when `want_vectors`, right eigenvectors of a general
/// complex matrix.
pub fn eig(a: &ComplexMatrix, want_vectors: bool) -> Result<EigenPairs> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::Precondition(
            "eigenproblem of an empty matrix".into(),
        ));
    }
    if a.as_dmatrix()
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::computation(
            describe(a),
            "matrix has non-finite entries",
        ));
    }
    let mut h = a.as_dmatrix().clone();
    let mut z = want_vectors.then(|| DMatrix::identity(n, n));
    hessenberg(&mut h, z.as_mut());
    qr_iterate(&mut h, z.as_mut(), want_vectors).map_err(|r| Error::computation(describe(a), r))?;
    let values: Vec<Complex64> = (0..n).map(|i| h[(i, i)]).collect();
    let vectors = z.map(|z| triangular_eigenvectors(&h, &z));
    Ok(EigenPairs { values, vectors })
}

/// Complex Schur decomposition.
pub fn schur(a: &ComplexMatrix) -> Result<Schur> {
    let n = a.dim();
    let mut t = a.as_dmatrix().clone();
    let mut z = DMatrix::identity(n, n);
    hessenberg(&mut t, Some(&mut z));
    qr_iterate(&mut t, Some(&mut z), true).map_err(|r| Error::computation(describe(a), r))?;
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok(Schur { t, z })
}

fn describe(a: &ComplexMatrix) -> String {
    format!(
        "{n}x{n} matrix (max |entry| {:.3e})",
        a.scale(),
        n = a.dim()
    )
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// transformations into `z` when given.
fn hessenberg(h: &mut DMatrix<Complex64>, mut z: Option<&mut DMatrix<Complex64>>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let xnorm = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0.norm() == 0.0 {
            ONE
        } else {
            x0 / x0.norm()
        };
        let beta = -phase * xnorm;
        for i in 0..len {
            v[i] = h[(k + 1 + i, k)];
        }
        v[0] -= beta;
        let vnorm2: f64 = v[..len].iter().map(|c| c.norm_sqr()).sum();
        let scale = 2.0 / vnorm2;

        // H <- P H on rows k+1.., columns k..
        for j in k..n {
            let s: Complex64 = (0..len).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            let s = s * scale;
            for i in 0..len {
                h[(k + 1 + i, j)] -= v[i] * s;
            }
        }
        // H <- H P on columns k+1..
        for i in 0..n {
            let s: Complex64 = (0..len).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            let s = s * scale;
            for j in 0..len {
                h[(i, k + 1 + j)] -= s * v[j].conj();
            }
        }
        if let Some(z) = z.as_deref_mut() {
            for i in 0..n {
                let s: Complex64 = (0..len).map(|j| z[(i, k + 1 + j)] * v[j]).sum();
                let s = s * scale;
                for j in 0..len {
                    z[(i, k + 1 + j)] -= s * v[j].conj();
                }
            }
        }
        h[(k + 1, k)] = beta;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Plane rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
#[inline]
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, ONE);
    }
    let nx = x.norm();
    let r = nx.hypot(y.norm());
    (nx / r, (x / nx) * y.conj() / r)
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let e1 = mid + disc;
    let e2 = mid - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Single-shift QR on an upper Hessenberg matrix. On return `h` is upper
/// triangular up to negligible subdiagonal entries (set to zero). With
/// `full`, the whole matrix is updated so it is a Schur factor.
fn qr_iterate(
    h: &mut DMatrix<Complex64>,
    mut z: Option<&mut DMatrix<Complex64>>,
    full: bool,
) -> std::result::Result<(), String> {
    let n = h.nrows();
    if n == 1 {
        return Ok(());
    }
    let hnorm = h.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if hnorm == 0.0 {
        return Ok(());
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut diag = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if diag == 0.0 {
                diag = hnorm;
            }
            if sub <= EPS * diag {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_ITER_PER_EIGENVALUE {
            return Err(format!("QR iteration did not converge at row {hi}"));
        }
        let shift = if iter.is_multiple_of(10) {
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        let (row_first, col_last) = if full { (0, n - 1) } else { (l, hi) };

        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let sc = s.conj();
            let col_start = if k == l { l } else { k - 1 };
            for j in col_start..=col_last {
                let t1 = h[(k, j)];
                let t2 = h[(k + 1, j)];
                h[(k, j)] = t1 * c + s * t2;
                h[(k + 1, j)] = -sc * t1 + t2 * c;
            }
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            let row_last = (k + 2).min(hi);
            for i in row_first..=row_last {
                let t1 = h[(i, k)];
                let t2 = h[(i, k + 1)];
                h[(i, k)] = t1 * c + t2 * sc;
                h[(i, k + 1)] = -t1 * s + t2 * c;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let t1 = z[(i, k)];
                    let t2 = z[(i, k + 1)];
                    z[(i, k)] = t1 * c + t2 * sc;
                    z[(i, k + 1)] = -t1 * s + t2 * c;
                }
            }
        }
    }
    Ok(())
}

/// Right eigenvectors from an upper triangular Schur factor `t` and its
/// unitary basis `z`; columns are normalized to unit Euclidean norm.
fn triangular_eigenvectors(t: &DMatrix<Complex64>, z: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    let tnorm = (0..n)
        .flat_map(|j| (0..=j).map(move |i| (i, j)))
        .map(|(i, j)| t[(i, j)].norm())
        .fold(0.0, f64::max);
    let smin = (EPS * tnorm).max(f64::MIN_POSITIVE);
    let mut out = DMatrix::zeros(n, n);
    let mut x = vec![ZERO; n];
    for k in 0..n {
        let lambda = t[(k, k)];
        x[k] = ONE;
        for j in (0..k).rev() {
            let mut sum = ZERO;
            for i in j + 1..=k {
                sum += t[(j, i)] * x[i];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < smin {
                denom = Complex64::new(smin, 0.0);
            }
            x[j] = -sum / denom;
            let big = x[j].norm();
            if big > 1e100 {
                for xi in x[j..=k].iter_mut() {
                    *xi /= big;
                }
            }
        }
        for i in 0..n {
            let mut acc = ZERO;
            for (j, xj) in x[..=k].iter().enumerate() {
                acc += z[(i, j)] * xj;
            }
            out[(i, k)] = acc;
        }
        let norm = out.column(k).norm();
        if norm > 0.0 {
            out.column_mut(k).unscale_mut(norm);
        }
    }
    out
}

/// Matrix exponential by scaling and squaring with a Padé approximant.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_dmatrix(a.as_dmatrix().exp())
}

/// Inverse via LU with partial pivoting, `None` if numerically singular.
pub fn inverse(a: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    a.clone().try_inverse()
}

/// 1-norm condition number from an explicit inverse.
pub fn condition_one(a: &DMatrix<Complex64>, inv: &DMatrix<Complex64>) -> f64 {
    norm_one(a) * norm_one(inv)
}

fn norm_one(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
