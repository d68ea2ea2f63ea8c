//! Eigenspectra of lattice Hamiltonians: sorted spectra, reality measures,
//! the quarter-bandwidth energy scale and ring-versus-chain comparisons.

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{CVector, ComplexMatrix};
use crate::model::{build_hamiltonian, LatticeSpec};
use crate::table::{num, Table};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Eigenvalues sorted by real part, ties broken by imaginary part, with
/// optional unit-norm right eigenvectors in the same order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    #[serde(skip)]
    pub eigenvectors: Option<Vec<CVector>>,
    /// `max |Im e|` over the spectrum.
    pub max_imag: f64,
    /// Largest absolute matrix entry of the source matrix.
    pub scale: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Real parts in spectrum order.
    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.re).collect()
    }

    /// CSV with columns `index,re,im` and 1-based indices.
    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["index", "re", "im"]);
        for (i, e) in self.eigenvalues.iter().enumerate() {
            t.row([(i + 1).to_string(), num(e.re), num(e.im)]);
        }
        t.finish()
    }
}

/// Quarter-bandwidth energy scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandMeasure {
    /// `max Re e - min Re e` of the Hermitian (`gamma = 0`) Hamiltonian.
    pub full_width: f64,
    /// `full_width / 4`.
    pub quarter_width: f64,
}

fn spectral_order(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Full eigendecomposition of a general complex matrix.
pub fn eigen(m: &ComplexMatrix, want_vectors: bool) -> Result<Spectrum> {
    let pairs = linalg::eig(m, want_vectors)?;
    let mut order: Vec<usize> = (0..pairs.values.len()).collect();
    order.sort_by(|&i, &j| spectral_order(&pairs.values[i], &pairs.values[j]));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| pairs.values[i]).collect();
    let eigenvectors = pairs
        .vectors
        .map(|v| order.iter().map(|&i| v.column(i).into_owned()).collect());
    let max_imag = eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        max_imag,
        scale: m.scale(),
    })
}

/// Spectrum of the Hamiltonian built from `spec`.
pub fn spectrum(spec: &LatticeSpec, want_vectors: bool) -> Result<Spectrum> {
    eigen(&build_hamiltonian(spec), want_vectors)
}

/// Largest violation of the open-chain recurrence
/// `t(k) f[k+1] + t(k-1) f[k-1] = -(e - V_k) f[k]` over every eigenpair and
/// site, with `t(0) = t(N) = 0` and `V` the impurity potential.
pub fn verify_difference_equation(spec: &LatticeSpec, spectrum: &Spectrum) -> Result<f64> {
    if spec.lambda_ring() != 0.0 {
        return Err(Error::Precondition(
            "difference equation holds for the open chain only (lambda_ring = 0)".into(),
        ));
    }
    let vectors = spectrum
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::Precondition("spectrum carries no eigenvectors".into()))?;
    let n = spec.n_sites();
    if spectrum.len() != n {
        return Err(Error::Precondition(format!(
            "spectrum has {} levels for a {n}-site lattice",
            spectrum.len()
        )));
    }
    let bond = |k: usize| -> f64 {
        if k == 0 || k == n {
            0.0
        } else {
            spec.tunneling(k).expect("bond index in range")
        }
    };
    let potential = |k: usize| -> Complex64 {
        if k == spec.gain_site() {
            Complex64::new(0.0, spec.gamma())
        } else if k == spec.loss_site() {
            Complex64::new(0.0, -spec.gamma())
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let mut worst = 0.0f64;
    for (eps, f) in spectrum.eigenvalues.iter().zip(vectors) {
        // f is 0-based; site k lives at f[k - 1].
        let at = |k: usize| -> Complex64 {
            if k == 0 || k > n {
                Complex64::new(0.0, 0.0)
            } else {
                f[k - 1]
            }
        };
        for k in 1..=n {
            let r = at(k + 1) * bond(k) + at(k - 1) * bond(k - 1) + (eps - potential(k)) * at(k);
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

/// Bandwidth of `H(gamma = 0)` at the spec's `lambda_ring`.
pub fn band_measure(spec: &LatticeSpec) -> Result<BandMeasure> {
    let hermitian = spec.with_gamma(0.0)?;
    let s = spectrum(&hermitian, false)?;
    let lo = s.eigenvalues.first().map(|e| e.re).unwrap_or(0.0);
    let hi = s.eigenvalues.last().map(|e| e.re).unwrap_or(0.0);
    let full_width = hi - lo;
    if full_width <= 0.0 {
        return Err(Error::computation(
            format!("band of {spec:?}"),
            "non-positive bandwidth",
        ));
    }
    Ok(BandMeasure {
        full_width,
        quarter_width: full_width / 4.0,
    })
}

/// Level-by-level `E_ring - E_chain` of the Hermitian lattice, both spectra
/// sorted ascending.
pub fn ring_chain_difference(spec: &LatticeSpec) -> Result<Vec<f64>> {
    if spec.gamma() != 0.0 {
        return Err(Error::Precondition(
            "ring/chain comparison requires gamma = 0".into(),
        ));
    }
    let ring = spectrum(&spec.with_lambda_ring(1.0)?, false)?;
    let chain = spectrum(&spec.with_lambda_ring(0.0)?, false)?;
    Ok(ring
        .eigenvalues
        .iter()
        .zip(&chain.eigenvalues)
        .map(|(r, c)| r.re - c.re)
        .collect())
}

/// CSV with columns `index,delta_e`, 1-based.
pub fn ring_chain_difference_csv(diff: &[f64]) -> String {
    let mut t = Table::new(&["index", "delta_e"]);
    for (i, d) in diff.iter().enumerate() {
        t.row([(i + 1).to_string(), num(*d)]);
    }
    t.finish()
}

/// Largest distance between an eigenvalue and the conjugate it is paired
/// with, pairing greedily by nearest unused partner.
pub fn conjugate_pair_defect(eigenvalues: &[Complex64]) -> f64 {
    let n = eigenvalues.len();
    let mut used = vec![false; n];
    let mut worst = 0.0f64;
    for e in eigenvalues {
        let target = e.conj();
        let best = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (eigenvalues[a] - target)
                    .norm()
                    .total_cmp(&(eigenvalues[b] - target).norm())
            })
            .expect("at least one unused partner");
        used[best] = true;
        worst = worst.max((eigenvalues[best] - target).norm());
    }
    worst
}

/// Largest deviation of a real spectrum from symmetry about zero.
pub fn particle_hole_defect(eigenvalues: &[Complex64]) -> f64 {
    let mut re: Vec<f64> = eigenvalues.iter().map(|e| e.re).collect();
    re.sort_by(f64::total_cmp);
    let n = re.len();
    (0..n)
        .map(|i| (re[i] + re[n - 1 - i]).abs())
        .fold(0.0, f64::max)
}
