//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the library's eigensolver or propagator: the
//! eigenvalue oracle finds roots of the characteristic polynomial, the
//! propagation oracle sums a truncated Taylor series.

#![allow(dead_code)]

use ptring::{Complex64, ComplexMatrix};

pub type C = Complex64;

fn zero() -> C {
    C::new(0.0, 0.0)
}

fn one() -> C {
    C::new(1.0, 0.0)
}

fn dense(h: &ComplexMatrix) -> Vec<Vec<C>> {
    let n = h.dim();
    (0..n)
        .map(|i| (0..n).map(|j| h[(i, j)]).collect())
        .collect()
}

fn matmul(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = a.len();
    let mut out = vec![vec![zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Coefficients `c[0..=n]` of `det(z I - H) = sum_k c[k] z^k` by the
/// Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(h: &ComplexMatrix) -> Vec<C> {
    let n = h.dim();
    let a = dense(h);
    let mut coeffs = vec![zero(); n + 1];
    coeffs[n] = one();
    // M_0 = 0, c_n = 1; M_k = A M_{k-1} + c_{n-k+1} I; c_{n-k} = -tr(A M_k)/k
    let mut m = vec![vec![zero(); n]; n];
    for k in 1..=n {
        let mut next = matmul(&a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[n - k + 1];
        }
        m = next;
        let am = matmul(&a, &m);
        let trace: C = (0..n).map(|i| am[i][i]).sum();
        coeffs[n - k] = -trace / k as f64;
    }
    coeffs
}

fn horner(coeffs: &[C], z: C) -> C {
    coeffs.iter().rev().fold(zero(), |acc, &c| acc * z + c)
}

/// `trace((z I - H)^-1) = p'(z) / p(z)` by Gauss-Jordan elimination with
/// partial pivoting; `None` when `z` is (numerically) an eigenvalue.
fn log_derivative(a: &[Vec<C>], z: C) -> Option<C> {
    let n = a.len();
    let mut m: Vec<Vec<C>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { z - a[i][j] } else { -a[i][j] })
                .collect()
        })
        .collect();
    let mut inv: Vec<Vec<C>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { one() } else { zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))?;
        if m[piv][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != zero() {
                    for j in 0..n {
                        let mj = m[col][j];
                        let ij = inv[col][j];
                        m[r][j] -= f * mj;
                        inv[r][j] -= f * ij;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| inv[i][i]).sum())
}

/// Eigenvalues as roots of the characteristic polynomial: Durand-Kerner on
/// the Faddeev-LeVerrier coefficients, then Newton polishing on
/// `det(z I - H)` itself via its logarithmic derivative.
pub fn polynomial_eigenvalues(h: &ComplexMatrix) -> Vec<C> {
    let n = h.dim();
    let coeffs = characteristic_polynomial(h);
    let radius = 1.0 + coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = C::new(0.4, 0.9);
    let mut roots: Vec<C> = (0..n)
        .map(|k| seed.powu(k as u32) * radius.min(1e3))
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut denom = one();
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = horner(&coeffs, roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    let a = dense(h);
    for r in roots.iter_mut() {
        for _ in 0..50 {
            match log_derivative(&a, *r) {
                Some(d) if d.norm() > 0.0 => {
                    let step = one() / d;
                    *r -= step;
                    if step.norm() < 1e-16 * (1.0 + r.norm()) {
                        break;
                    }
                }
                _ => break,
            }
        }
    }
    roots
}

/// Largest distance in an optimal-by-greedy matching of two multisets.
pub fn multiset_distance(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let j = (0..b.len())
            .filter(|&j| !used[j])
            .min_by(|&p, &q| (b[p] - x).norm().total_cmp(&(b[q] - x).norm()))
            .unwrap();
        used[j] = true;
        worst = worst.max((b[j] - x).norm());
    }
    worst
}

/// Kahan-compensated complex accumulator.
struct Compensated {
    sum: C,
    carry: C,
}

impl Compensated {
    fn new() -> Self {
        Compensated {
            sum: zero(),
            carry: zero(),
        }
    }

    fn add(&mut self, x: C) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// `exp(-i H t_raw) psi` by a `terms`-term Taylor series per substep, with
/// substeps short enough that `||H tau|| <= 1`.
pub fn taylor_propagate(h: &ComplexMatrix, psi: &[C], t_raw: f64, terms: usize) -> Vec<C> {
    let n = h.dim();
    let a = dense(h);
    let norm = h.norm_one();
    let substeps = (norm * t_raw).ceil().max(1.0) as usize;
    let tau = t_raw / substeps as f64;
    let factor = C::new(0.0, -tau);
    let mut state = psi.to_vec();
    for _ in 0..substeps {
        let mut acc: Vec<Compensated> = state
            .iter()
            .map(|&x| {
                let mut c = Compensated::new();
                c.add(x);
                c
            })
            .collect();
        let mut term = state.clone();
        for k in 1..terms {
            let mut next = vec![zero(); n];
            for i in 0..n {
                for j in 0..n {
                    next[i] += a[i][j] * term[j];
                }
                next[i] *= factor / k as f64;
            }
            term = next;
            for (c, &x) in acc.iter_mut().zip(&term) {
                c.add(x);
            }
            if term.iter().all(|x| x.norm() == 0.0) {
                break;
            }
        }
        state = acc.into_iter().map(|c| c.sum).collect();
    }
    state
}
