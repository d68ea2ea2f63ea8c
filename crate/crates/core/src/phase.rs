//! PT-symmetric phase detection, threshold search and phase diagrams.
//!
//! A lattice is in the PT-exact phase when every eigenvalue is real to
//! within `tol_im * scale`, where `scale` is the largest matrix entry. The
//! threshold `gamma_pt` is located by bisection on this boolean detector.

use crate::error::{Error, Result};
use crate::model::LatticeSpec;
use crate::spectra::{band_measure, spectrum};
use crate::table::{fmt_sig, num, Table, ROUNDED_DIGITS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative reality tolerance. Near an exceptional point the eigenvalue
/// perturbation grows like the square root of the backward error, so this
/// sits well above the eigensolver floor.
pub const DEFAULT_TOL_IM: f64 = 1e-8;
/// Bisection stops when the bracket is narrower than `tol * delta`.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-4;
/// Initial upper bracket, in units of the quarter bandwidth.
pub const DEFAULT_GAMMA_MAX_FACTOR: f64 = 4.0;
/// Doubling of the upper bracket stops here, in units of the quarter bandwidth.
pub const GAMMA_CAP_FACTOR: f64 = 100.0;
/// Grid size of the single-flip diagnostic.
pub const FLIP_GRID_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    pub tol_im: f64,
    /// Bracket tolerance relative to the quarter bandwidth.
    pub tol: f64,
    /// Initial upper bracket in energy units; `None` means `4 * delta`.
    pub gamma_max: Option<f64>,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            tol_im: DEFAULT_TOL_IM,
            tol: DEFAULT_BISECTION_TOL,
            gamma_max: None,
        }
    }
}

/// A located threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub m: usize,
    pub mu: f64,
    pub lambda_ring: f64,
    /// Bracket midpoint, energy units.
    pub gamma_pt: f64,
    /// `gamma_pt / delta`.
    pub gamma_pt_normalized: f64,
    /// Final bracket width, energy units.
    pub bracket_width: f64,
    /// Quarter bandwidth used for normalization.
    pub delta: f64,
}

/// Result of a threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Found(PhasePoint),
    /// The phase stayed exact up to `cap` (energy units).
    NotFoundBelowCap {
        cap: f64,
        delta: f64,
    },
}

impl Threshold {
    pub fn point(&self) -> Option<&PhasePoint> {
        match self {
            Threshold::Found(p) => Some(p),
            Threshold::NotFoundBelowCap { .. } => None,
        }
    }
}

/// `true` iff every eigenvalue is real within `tol_im * scale`.
pub fn is_pt_exact_with(spec: &LatticeSpec, tol_im: f64) -> Result<bool> {
    let s = spectrum(spec, false)?;
    Ok(s.max_imag <= tol_im * s.scale)
}

/// [`is_pt_exact_with`] at the default tolerance.
pub fn is_pt_exact(spec: &LatticeSpec) -> Result<bool> {
    is_pt_exact_with(spec, DEFAULT_TOL_IM)
}

/// Bisects on `gamma` for the first loss of spectral reality. The `gamma`
/// already stored in `spec` is ignored.
pub fn find_threshold(spec: &LatticeSpec, opts: &ThresholdOptions) -> Result<Threshold> {
    if !(opts.tol > 0.0 && opts.tol_im > 0.0) {
        return Err(Error::domain("tol", "tolerances must be positive"));
    }
    let delta = band_measure(spec)?.quarter_width;
    let exact_at = |g: f64| -> Result<bool> { is_pt_exact_with(&spec.with_gamma(g)?, opts.tol_im) };

    if !exact_at(0.0)? {
        return Err(Error::Precondition(
            "spectrum is not real at gamma = 0".into(),
        ));
    }
    let mut hi = opts.gamma_max.unwrap_or(DEFAULT_GAMMA_MAX_FACTOR * delta);
    if !(hi > 0.0 && hi.is_finite()) {
        return Err(Error::domain(
            "gamma_max",
            format!("must be positive, got {hi}"),
        ));
    }
    let cap = (GAMMA_CAP_FACTOR * delta).max(hi);
    let mut lo = 0.0;
    while exact_at(hi)? {
        if hi >= cap {
            return Ok(Threshold::NotFoundBelowCap { cap, delta });
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
    let width_goal = opts.tol * delta;
    while hi - lo > width_goal {
        let mid = 0.5 * (lo + hi);
        if exact_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma_pt = 0.5 * (lo + hi);
    Ok(Threshold::Found(PhasePoint {
        m: spec.gain_site(),
        mu: spec.mu(),
        lambda_ring: spec.lambda_ring(),
        gamma_pt,
        gamma_pt_normalized: gamma_pt / delta,
        bracket_width: hi - lo,
        delta,
    }))
}

/// Re-checks a bracket with two fresh eigensolves: real at
/// `gamma_pt - bracket_width`, complex at `gamma_pt + bracket_width`.
pub fn verify_bracket(spec: &LatticeSpec, point: &PhasePoint, tol_im: f64) -> Result<bool> {
    let below = (point.gamma_pt - point.bracket_width).max(0.0);
    let above = point.gamma_pt + point.bracket_width;
    Ok(is_pt_exact_with(&spec.with_gamma(below)?, tol_im)?
        && !is_pt_exact_with(&spec.with_gamma(above)?, tol_im)?)
}

/// Number of exact/broken transitions of the detector on a uniform
/// `points`-point grid over `[0, 1.2 * gamma_pt]`. A monotone detector
/// gives exactly one.
pub fn count_phase_flips(
    spec: &LatticeSpec,
    gamma_pt: f64,
    points: usize,
    tol_im: f64,
) -> Result<usize> {
    let top = 1.2 * gamma_pt;
    let mut prev: Option<bool> = None;
    let mut flips = 0;
    for i in 0..points {
        let g = top * i as f64 / (points - 1) as f64;
        let exact = is_pt_exact_with(&spec.with_gamma(g)?, tol_im)?;
        if prev.is_some_and(|p| p != exact) {
            flips += 1;
        }
        prev = Some(exact);
    }
    Ok(flips)
}

/// Per-point outcome of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// The detector flips more than once below `1.2 * gamma_pt`.
    MultiFlip {
        flips: usize,
    },
    NoThresholdBelowCap,
    Failed {
        reason: String,
    },
}

impl PointStatus {
    pub fn is_failure(&self) -> bool {
        matches!(self, PointStatus::Failed { .. })
    }
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointStatus::Ok => f.write_str("ok"),
            PointStatus::MultiFlip { flips } => write!(f, "multi_flip_{flips}"),
            PointStatus::NoThresholdBelowCap => f.write_str("no_threshold_below_cap"),
            // CSV cells must not contain separators.
            PointStatus::Failed { reason } => {
                write!(f, "failed: {}", reason.replace([',', '\n'], ";"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub m: usize,
    pub mu: f64,
    pub lambda_ring: f64,
    pub point: Option<PhasePoint>,
    pub status: PointStatus,
}

/// Thresholds over impurity positions at one `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub alpha: f64,
    pub n_sites: usize,
    pub lambda_ring: f64,
    pub points: Vec<PhaseRecord>,
}

pub const PHASE_CSV_HEADER: [&str; 10] = [
    "alpha",
    "n_sites",
    "lambda",
    "m",
    "mu",
    "gamma_pt",
    "gamma_pt_over_delta",
    "bracket_width",
    "status",
    "gamma_pt_over_delta_r6",
];

impl PhaseDiagram {
    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&PHASE_CSV_HEADER);
        for r in &self.points {
            let (g, gn, bw) = match &r.point {
                Some(p) => (p.gamma_pt, p.gamma_pt_normalized, p.bracket_width),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            t.row([
                num(self.alpha),
                self.n_sites.to_string(),
                num(r.lambda_ring),
                r.m.to_string(),
                num(r.mu),
                num(g),
                num(gn),
                num(bw),
                r.status.to_string(),
                fmt_sig(gn, ROUNDED_DIGITS),
            ]);
        }
        t.finish()
    }

    pub fn has_failures(&self) -> bool {
        self.points.iter().any(|p| p.status.is_failure())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub threshold: ThresholdOptions,
    /// Run the single-flip diagnostic on every located threshold.
    pub check_flips: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            threshold: ThresholdOptions::default(),
            check_flips: true,
        }
    }
}

/// Every admissible gain site `1..=N/2`.
pub fn all_gain_sites(n_sites: usize) -> Vec<usize> {
    (1..=n_sites / 2).collect()
}

fn sweep_point(base: &LatticeSpec, lambda: f64, m: usize, opts: &SweepOptions) -> PhaseRecord {
    let mu = m as f64 / base.n_sites() as f64;
    let fail = |e: Error| PhaseRecord {
        m,
        mu,
        lambda_ring: lambda,
        point: None,
        status: PointStatus::Failed {
            reason: e.to_string(),
        },
    };
    let spec = match base
        .with_lambda_ring(lambda)
        .and_then(|s| s.with_gain_site(m))
        .and_then(|s| s.with_gamma(0.0))
    {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    match find_threshold(&spec, &opts.threshold) {
        Err(e) => fail(e),
        Ok(Threshold::NotFoundBelowCap { .. }) => PhaseRecord {
            m,
            mu,
            lambda_ring: lambda,
            point: None,
            status: PointStatus::NoThresholdBelowCap,
        },
        Ok(Threshold::Found(p)) => {
            let status = if opts.check_flips {
                match count_phase_flips(&spec, p.gamma_pt, FLIP_GRID_POINTS, opts.threshold.tol_im)
                {
                    Ok(1) => PointStatus::Ok,
                    Ok(flips) => PointStatus::MultiFlip { flips },
                    Err(e) => return fail(e),
                }
            } else {
                PointStatus::Ok
            };
            PhaseRecord {
                m,
                mu,
                lambda_ring: lambda,
                point: Some(p),
                status,
            }
        }
    }
}

/// One [`PhaseDiagram`] per `lambda`, each with one record per gain site.
///
/// Grid points are evaluated in parallel on the current rayon pool; the
/// output order is that of the inputs regardless of scheduling.
pub fn sweep_phase_diagram(
    base: &LatticeSpec,
    lambda_values: &[f64],
    m_values: &[usize],
    opts: &SweepOptions,
) -> Vec<PhaseDiagram> {
    let grid: Vec<(f64, usize)> = lambda_values
        .iter()
        .flat_map(|&l| m_values.iter().map(move |&m| (l, m)))
        .collect();
    let records: Vec<PhaseRecord> = grid
        .par_iter()
        .map(|&(l, m)| sweep_point(base, l, m, opts))
        .collect();
    let mut chunks = records.chunks(m_values.len().max(1));
    lambda_values
        .iter()
        .map(|&l| PhaseDiagram {
            alpha: base.alpha(),
            n_sites: base.n_sites(),
            lambda_ring: l,
            points: if m_values.is_empty() {
                Vec::new()
            } else {
                chunks.next().map(<[_]>::to_vec).unwrap_or_default()
            },
        })
        .collect()
}
