//! Lattice parameterization, Hamiltonian assembly and the parity /
//! time-reversal operators.
//!
//! The single-particle Hamiltonian of an `N`-site lattice is
//!
//! ```text
//! H = -sum_k t(k) (|k+1><k| + |k><k+1|)  - lambda * t_R (|1><N| + |N><1|)
//!     + i*gamma |m><m| - i*gamma |m'><m'|
//! ```
//!
//! with `t(k) = t0 * [k (N - k)]^(alpha/2)`, `t_R = t(1)` and the loss site
//! `m' = N + 1 - m`. Sites are numbered `1..=N` throughout the public API.

use crate::error::{Error, Result};
use crate::matrix::{CVector, ComplexMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Keys of the flat key-value record, in serialization order.
pub const SPEC_KEYS: [&str; 6] = [
    "n_sites",
    "alpha",
    "t0",
    "gain_site",
    "gamma",
    "lambda_ring",
];

/// Complete parameterization of a lattice Hamiltonian.
///
/// Construct through [`LatticeSpec::builder`]; every constructor validates,
/// so a `LatticeSpec` value is always admissible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct LatticeSpec {
    n_sites: usize,
    alpha: f64,
    t0: f64,
    gain_site: usize,
    gamma: f64,
    lambda_ring: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawSpec {
    n_sites: usize,
    alpha: f64,
    #[serde(default = "default_t0")]
    t0: f64,
    #[serde(default = "default_gain_site")]
    gain_site: usize,
    #[serde(default)]
    gamma: f64,
    #[serde(default)]
    lambda_ring: f64,
}

fn default_t0() -> f64 {
    1.0
}

fn default_gain_site() -> usize {
    1
}

impl TryFrom<RawSpec> for LatticeSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        let spec = LatticeSpec {
            n_sites: r.n_sites,
            alpha: r.alpha,
            t0: r.t0,
            gain_site: r.gain_site,
            gamma: r.gamma,
            lambda_ring: r.lambda_ring,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<LatticeSpec> for RawSpec {
    fn from(s: LatticeSpec) -> Self {
        RawSpec {
            n_sites: s.n_sites,
            alpha: s.alpha,
            t0: s.t0,
            gain_site: s.gain_site,
            gamma: s.gamma,
            lambda_ring: s.lambda_ring,
        }
    }
}

/// Builder for [`LatticeSpec`]; unset fields take their defaults
/// (`t0 = 1`, `gain_site = 1`, `gamma = 0`, `lambda_ring = 0`).
#[derive(Debug, Clone, Copy)]
pub struct LatticeSpecBuilder(RawSpec);

impl LatticeSpecBuilder {
    pub fn t0(mut self, t0: f64) -> Self {
        self.0.t0 = t0;
        self
    }

    pub fn gain_site(mut self, m: usize) -> Self {
        self.0.gain_site = m;
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.0.gamma = gamma;
        self
    }

    pub fn lambda_ring(mut self, lambda: f64) -> Self {
        self.0.lambda_ring = lambda;
        self
    }

    pub fn build(self) -> Result<LatticeSpec> {
        LatticeSpec::try_from(self.0)
    }
}

impl LatticeSpec {
    pub fn builder(n_sites: usize, alpha: f64) -> LatticeSpecBuilder {
        LatticeSpecBuilder(RawSpec {
            n_sites,
            alpha,
            t0: default_t0(),
            gain_site: default_gain_site(),
            gamma: 0.0,
            lambda_ring: 0.0,
        })
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        if n < 3 {
            return Err(Error::domain("n_sites", format!("need N >= 3, got {n}")));
        }
        if !self.alpha.is_finite() {
            return Err(Error::domain("alpha", "must be finite"));
        }
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::domain(
                "t0",
                format!("must be positive, got {}", self.t0),
            ));
        }
        if self.gain_site < 1 || self.gain_site > n / 2 {
            return Err(Error::domain(
                "gain_site",
                format!("need 1 <= m <= {}, got {}", n / 2, self.gain_site),
            ));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::domain(
                "gamma",
                format!("must be >= 0, got {}", self.gamma),
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda_ring) {
            return Err(Error::domain(
                "lambda_ring",
                format!("must lie in [0, 1], got {}", self.lambda_ring),
            ));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Gain site `m` (1-based).
    pub fn gain_site(&self) -> usize {
        self.gain_site
    }

    /// Loss site `N + 1 - m` (1-based).
    pub fn loss_site(&self) -> usize {
        self.n_sites + 1 - self.gain_site
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda_ring(&self) -> f64 {
        self.lambda_ring
    }

    /// Fractional impurity position `m / N`, in `(0, 1/2]`.
    pub fn mu(&self) -> f64 {
        self.gain_site as f64 / self.n_sites as f64
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        LatticeSpec::try_from(RawSpec {
            gamma,
            ..RawSpec::from(*self)
        })
    }

    pub fn with_lambda_ring(&self, lambda: f64) -> Result<Self> {
        LatticeSpec::try_from(RawSpec {
            lambda_ring: lambda,
            ..RawSpec::from(*self)
        })
    }

    pub fn with_gain_site(&self, m: usize) -> Result<Self> {
        LatticeSpec::try_from(RawSpec {
            gain_site: m,
            ..RawSpec::from(*self)
        })
    }

    pub fn with_t0(&self, t0: f64) -> Result<Self> {
        LatticeSpec::try_from(RawSpec {
            t0,
            ..RawSpec::from(*self)
        })
    }

    /// Tunneling amplitude between sites `k` and `k + 1`.
    pub fn tunneling(&self, k: usize) -> Result<f64> {
        if k < 1 || k >= self.n_sites {
            return Err(Error::domain(
                "k",
                format!("bond index must lie in 1..={}, got {k}", self.n_sites - 1),
            ));
        }
        Ok(self.profile(k))
    }

    #[inline]
    fn profile(&self, k: usize) -> f64 {
        let kk = (k * (self.n_sites - k)) as f64;
        self.t0 * kk.powf(0.5 * self.alpha)
    }

    /// Corner tunneling `t_R = t(1) = t(N - 1)`.
    pub fn ring_tunneling(&self) -> f64 {
        self.profile(1)
    }

    /// Flat key-value record with the field names as keys.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            (SPEC_KEYS[0], self.n_sites.to_string()),
            (SPEC_KEYS[1], self.alpha.to_string()),
            (SPEC_KEYS[2], self.t0.to_string()),
            (SPEC_KEYS[3], self.gain_site.to_string()),
            (SPEC_KEYS[4], self.gamma.to_string()),
            (SPEC_KEYS[5], self.lambda_ring.to_string()),
        ]
    }

    /// Parses a flat key-value record. `n_sites` and `alpha` are required;
    /// unknown keys are rejected.
    pub fn from_kv<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut n_sites = None;
        let mut alpha = None;
        let mut b = LatticeSpec::builder(0, 0.0).0;
        for (key, value) in pairs {
            let value = value.trim();
            match key.trim() {
                "n_sites" => n_sites = Some(parse_kv("n_sites", value)?),
                "alpha" => alpha = Some(parse_kv("alpha", value)?),
                "t0" => b.t0 = parse_kv("t0", value)?,
                "gain_site" => b.gain_site = parse_kv("gain_site", value)?,
                "gamma" => b.gamma = parse_kv("gamma", value)?,
                "lambda_ring" => b.lambda_ring = parse_kv("lambda_ring", value)?,
                other => {
                    return Err(Error::Domain {
                        key: "record",
                        reason: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        b.n_sites = n_sites.ok_or_else(|| Error::domain("n_sites", "missing"))?;
        b.alpha = alpha.ok_or_else(|| Error::domain("alpha", "missing"))?;
        LatticeSpec::try_from(b)
    }
}

fn parse_kv<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::domain(key, format!("cannot parse `{value}`")))
}

/// Assembles the Hamiltonian matrix for `spec`.
///
/// The ring link carries the same negative sign as the chain bonds, so that
/// `lambda = 1, alpha = 0` is the ordinary uniform ring.
pub fn build_hamiltonian(spec: &LatticeSpec) -> ComplexMatrix {
    let n = spec.n_sites;
    let mut h = ComplexMatrix::zeros(n);
    for k in 1..n {
        let t = Complex64::new(-spec.profile(k), 0.0);
        h[(k - 1, k)] = t;
        h[(k, k - 1)] = t;
    }
    let corner = Complex64::new(-spec.lambda_ring * spec.ring_tunneling(), 0.0);
    h[(0, n - 1)] = corner;
    h[(n - 1, 0)] = corner;
    let m = spec.gain_site - 1;
    let mbar = spec.loss_site() - 1;
    h[(m, m)] = Complex64::new(0.0, spec.gamma);
    h[(mbar, mbar)] = Complex64::new(0.0, -spec.gamma);
    h
}

/// Site reversal `k -> N + 1 - k`.
pub fn parity_apply(v: &CVector) -> CVector {
    let n = v.len();
    CVector::from_fn(n, |i, _| v[n - 1 - i])
}

/// `P conj(M) P` with `P` the exchange matrix.
pub fn pt_transform(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    ComplexMatrix::from_fn(n, |i, j| m[(n - 1 - i, n - 1 - j)].conj())
}
