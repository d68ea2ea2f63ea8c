//! Non-unitary wave-packet evolution and the ring momentum (chirality)
//! observable.
//!
//! Time is measured in units of `2*pi*hbar / delta` with `hbar = 1`, where
//! `delta` is the quarter bandwidth of the lattice. States carry a separate
//! logarithmic scale so evolution past the PT threshold never overflows.

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{CVector, ComplexMatrix};
use crate::model::{build_hamiltonian, LatticeSpec};
use crate::phase::{find_threshold, Threshold, ThresholdOptions};
use crate::spectra::band_measure;
use crate::table::{fmt_sig, num, Table, ROUNDED_DIGITS};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Quadrature step of the time average, in time units.
pub const DEFAULT_DT: f64 = 0.1;
/// Agreement required between the averages over `[0, T]` and `[0, T/2]`.
pub const SETTLE_TOL: f64 = 0.02;
/// How often the averaging window may be doubled.
pub const MAX_DOUBLINGS: usize = 4;
/// Eigenbasis condition number above which propagation switches to
/// stepped exponentials.
pub const COND_LIMIT: f64 = 1e12;
/// Points in the default chirality grid over `[0, 2 * gamma_pt]`.
pub const DEFAULT_GRID_POINTS: usize = 61;
/// Relative size of the discarded imaginary part of the momentum.
const MOMENTUM_REALITY_TOL: f64 = 1e-10;

/// Default averaging window `100 * N` time units.
pub fn default_window(n_sites: usize) -> f64 {
    100.0 * n_sites as f64
}

/// Wave function `f_j(t)` stored as `amplitudes * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    amplitudes: CVector,
    log_scale: f64,
    time: f64,
}

impl WaveState {
    /// `f_j = delta(j, m0)` at `t = 0`; `m0` is 1-based.
    pub fn localized(n_sites: usize, m0: usize) -> Result<Self> {
        if m0 < 1 || m0 > n_sites {
            return Err(Error::domain(
                "m0",
                format!("initial site must lie in 1..={n_sites}, got {m0}"),
            ));
        }
        let mut v = CVector::zeros(n_sites);
        v[m0 - 1] = Complex64::new(1.0, 0.0);
        Ok(WaveState::new(v, 0.0))
    }

    pub fn new(amplitudes: CVector, time: f64) -> Self {
        WaveState {
            amplitudes,
            log_scale: 0.0,
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Time in units of `2*pi/delta`.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// True amplitudes; may overflow far above threshold.
    pub fn amplitudes(&self) -> CVector {
        if self.log_scale == 0.0 {
            self.amplitudes.clone()
        } else {
            &self.amplitudes * Complex64::new(self.log_scale.exp(), 0.0)
        }
    }

    /// Amplitudes up to an overall positive factor (never overflows).
    pub fn direction(&self) -> &CVector {
        &self.amplitudes
    }

    /// `ln I(t)`.
    pub fn log_intensity(&self) -> f64 {
        self.amplitudes.norm_squared().ln() + 2.0 * self.log_scale
    }

    /// Total intensity `I(t) = sum_j |f_j|^2`.
    pub fn intensity(&self) -> f64 {
        self.log_intensity().exp()
    }

    /// Site intensities `|f_j|^2`.
    pub fn site_intensities(&self) -> Vec<f64> {
        let s = (2.0 * self.log_scale).exp();
        self.amplitudes.iter().map(|z| z.norm_sqr() * s).collect()
    }

    /// Folds the norm into the log scale so `direction()` has unit norm.
    fn renormalize(&mut self) {
        let norm = self.amplitudes.norm();
        if norm > 0.0 && norm.is_finite() {
            self.amplitudes.unscale_mut(norm);
            self.log_scale += norm.ln();
        }
    }
}

/// Expectation of the discrete ring momentum,
/// `-(i/2) sum_j (f*_{j+1} + f*_j)(f_{j+1} - f_j) / sum_j |f_j|^2`
/// with `f_{N+1} = f_1`. Always lies in `[-1, 1]`.
pub fn momentum(state: &WaveState) -> Result<f64> {
    ring_momentum(state.direction())
}

pub(crate) fn ring_momentum(f: &CVector) -> Result<f64> {
    let n = f.len();
    let norm2 = f.norm_squared();
    if n == 0 || norm2 == 0.0 || !norm2.is_finite() {
        return Err(Error::domain("state", "momentum of a zero-norm state"));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let a = f[j];
        let b = f[(j + 1) % n];
        sum += (b.conj() + a.conj()) * (b - a);
    }
    // The real part telescopes to zero; it is rounding noise only.
    if sum.re.abs() > MOMENTUM_REALITY_TOL * norm2 {
        return Err(Error::computation(
            "momentum",
            format!("non-real expectation (residual {:.3e})", sum.re / norm2),
        ));
    }
    // -(i/2) * (i * Im sum) = Im(sum) / 2
    Ok(0.5 * sum.im / norm2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMethod {
    /// `V exp(-i E t) V^-1` from the right eigenbasis.
    Spectral,
    /// Repeated short-time exponentials by scaling and squaring.
    Stepped,
}

enum Engine {
    Spectral {
        values: Vec<Complex64>,
        basis: DMatrix<Complex64>,
        inverse: DMatrix<Complex64>,
        max_growth: f64,
    },
    Stepped,
}

/// Time-evolution operator `exp(-i H t)` for one lattice.
pub struct Propagator {
    hamiltonian: ComplexMatrix,
    delta: f64,
    engine: Engine,
}

impl fmt::Debug for Propagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Propagator")
            .field("dim", &self.hamiltonian.dim())
            .field("delta", &self.delta)
            .field("method", &self.method())
            .finish()
    }
}

impl Propagator {
    /// Spectral propagator, falling back to stepping when the eigenbasis is
    /// near-defective.
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let delta = band_measure(spec)?.quarter_width;
        Self::with_delta(spec, delta, None)
    }

    /// Forces a method; `None` chooses automatically.
    pub fn with_method(spec: &LatticeSpec, method: PropagationMethod) -> Result<Self> {
        let delta = band_measure(spec)?.quarter_width;
        Self::with_delta(spec, delta, Some(method))
    }

    fn with_delta(
        spec: &LatticeSpec,
        delta: f64,
        method: Option<PropagationMethod>,
    ) -> Result<Self> {
        let hamiltonian = build_hamiltonian(spec);
        let engine = match method {
            Some(PropagationMethod::Stepped) => Engine::Stepped,
            Some(PropagationMethod::Spectral) => {
                spectral_engine(&hamiltonian)?.ok_or_else(|| {
                    Error::computation("spectral propagator", "eigenbasis is numerically singular")
                })?
            }
            None => spectral_engine(&hamiltonian)?.unwrap_or(Engine::Stepped),
        };
        Ok(Propagator {
            hamiltonian,
            delta,
            engine,
        })
    }

    pub fn method(&self) -> PropagationMethod {
        match self.engine {
            Engine::Spectral { .. } => PropagationMethod::Spectral,
            Engine::Stepped => PropagationMethod::Stepped,
        }
    }

    /// Quarter bandwidth fixing the time unit.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Raw time (`hbar = 1`) per time unit.
    pub fn time_unit(&self) -> f64 {
        2.0 * PI / self.delta
    }

    /// Evolves `state` forward by `t` time units.
    pub fn propagate(&self, state: &WaveState, t: f64) -> Result<WaveState> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::domain("t", format!("must be >= 0, got {t}")));
        }
        if state.len() != self.hamiltonian.dim() {
            return Err(Error::domain(
                "state",
                "dimension does not match the lattice",
            ));
        }
        if t == 0.0 {
            return Ok(state.clone());
        }
        let raw = t * self.time_unit();
        let mut out = match &self.engine {
            Engine::Spectral {
                values,
                basis,
                inverse,
                max_growth,
            } => {
                let coeffs = inverse * &state.amplitudes;
                let shift = max_growth * raw;
                let evolved = CVector::from_fn(values.len(), |k, _| {
                    let e = values[k];
                    let phase = Complex64::new(e.im * raw - shift, -e.re * raw).exp();
                    coeffs[k] * phase
                });
                WaveState {
                    amplitudes: basis * evolved,
                    log_scale: state.log_scale + shift,
                    time: state.time + t,
                }
            }
            Engine::Stepped => self.stepped(state, raw)?,
        };
        out.time = state.time + t;
        let norm = out.amplitudes.norm();
        if !norm.is_finite() {
            return Err(Error::computation("propagation", "amplitudes overflowed"));
        }
        if !(1e-30..=1e30).contains(&norm) {
            out.renormalize();
        }
        Ok(out)
    }

    fn stepped(&self, state: &WaveState, raw: f64) -> Result<WaveState> {
        // Segments short enough that each exponential has norm <= e.
        let hnorm = self.hamiltonian.norm_one().max(f64::MIN_POSITIVE);
        let segments = (raw * hnorm).ceil().max(1.0);
        if segments > 1e9 {
            return Err(Error::computation(
                "propagation",
                "time span needs too many steps",
            ));
        }
        let segments = segments as usize;
        let step = self.step_operator(raw / segments as f64);
        let mut s = state.clone();
        for _ in 0..segments {
            s.amplitudes = step.mul_vec(&s.amplitudes);
            s.renormalize();
        }
        Ok(s)
    }

    /// `exp(-i H tau)` for a raw time `tau`.
    fn step_operator(&self, tau: f64) -> ComplexMatrix {
        linalg::expm(&self.hamiltonian.scaled(Complex64::new(0.0, -tau)))
    }
}

fn spectral_engine(h: &ComplexMatrix) -> Result<Option<Engine>> {
    let pairs = linalg::eig(h, true)?;
    let basis = pairs.vectors.expect("vectors requested");
    let Some(inverse) = linalg::inverse(&basis) else {
        return Ok(None);
    };
    let cond = linalg::condition_one(&basis, &inverse);
    // NaN conditioning also falls back.
    if cond.is_nan() || cond > COND_LIMIT {
        return Ok(None);
    }
    let max_growth = pairs.values.iter().map(|e| e.im).fold(0.0, f64::max);
    Ok(Some(Engine::Spectral {
        values: pairs.values,
        basis,
        inverse,
        max_growth,
    }))
}

/// `exp(-i H(spec) t) |initial>` for `t` time units.
pub fn propagate(spec: &LatticeSpec, initial: &WaveState, t: f64) -> Result<WaveState> {
    Propagator::new(spec)?.propagate(initial, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOptions {
    /// Quadrature step, time units.
    pub dt: f64,
    /// Averaging window, time units; `None` means `100 * N`.
    pub window: Option<f64>,
    pub settle_tol: f64,
    pub max_doublings: usize,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions {
            dt: DEFAULT_DT,
            window: None,
            settle_tol: SETTLE_TOL,
            max_doublings: MAX_DOUBLINGS,
        }
    }
}

/// Steady-state momentum of a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedMomentum {
    /// Average of `p(t)` over `[0, window]`.
    pub value: f64,
    /// Final window, time units.
    pub window: f64,
    /// `|avg[0, window] - avg[0, window/2]|`.
    pub discrepancy: f64,
    pub settled: bool,
    /// `ln I(window)`.
    pub log_intensity: f64,
}

/// Trapezoid average of uniformly spaced samples `p[0..=k]`.
fn trapezoid_mean(p: &[f64]) -> f64 {
    let k = p.len() - 1;
    if k == 0 {
        return p[0];
    }
    let inner: f64 = p[1..k].iter().sum();
    (inner + 0.5 * (p[0] + p[k])) / k as f64
}

/// Time-averaged momentum of the packet started on site `m0`.
///
/// The average over `[0, T]` is accepted once it agrees with the average over
/// `[0, T/2]` to `settle_tol`; otherwise `T` is doubled (continuing the same
/// trajectory) up to `max_doublings` times and the result is flagged
/// unsettled.
pub fn time_averaged_momentum(
    spec: &LatticeSpec,
    m0: usize,
    opts: &DynamicsOptions,
) -> Result<AveragedMomentum> {
    let delta = band_measure(spec)?.quarter_width;
    averaged_momentum_with_delta(spec, delta, m0, opts)
}

fn averaged_momentum_with_delta(
    spec: &LatticeSpec,
    delta: f64,
    m0: usize,
    opts: &DynamicsOptions,
) -> Result<AveragedMomentum> {
    let window = opts
        .window
        .unwrap_or_else(|| default_window(spec.n_sites()));
    if !(opts.dt > 0.0 && window > 0.0 && window.is_finite()) {
        return Err(Error::domain("window", "window and dt must be positive"));
    }
    let mut state = WaveState::localized(spec.n_sites(), m0)?;
    let h = build_hamiltonian(spec);
    let raw_dt = opts.dt * 2.0 * PI / delta;
    let step = linalg::expm(&h.scaled(Complex64::new(0.0, -raw_dt)));

    let mut steps = (window / opts.dt).round().max(2.0) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(momentum(&state)?);
    let mut doublings = 0;
    loop {
        while samples.len() <= steps {
            state.amplitudes = step.mul_vec(&state.amplitudes);
            state.renormalize();
            samples.push(momentum(&state)?);
        }
        let full = trapezoid_mean(&samples[..=steps]);
        let half = trapezoid_mean(&samples[..=steps / 2]);
        let discrepancy = (full - half).abs();
        let settled = discrepancy <= opts.settle_tol;
        if settled || doublings >= opts.max_doublings {
            return Ok(AveragedMomentum {
                value: full,
                window: steps as f64 * opts.dt,
                discrepancy,
                settled,
                log_intensity: state.log_intensity(),
            });
        }
        doublings += 1;
        steps *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFlag {
    Ok,
    Unsettled,
    Failed(String),
}

impl fmt::Display for CurveFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveFlag::Ok => f.write_str("ok"),
            CurveFlag::Unsettled => f.write_str("unsettled"),
            CurveFlag::Failed(r) => write!(f, "failed: {}", r.replace([',', '\n'], ";")),
        }
    }
}

/// Steady-state momentum as a function of `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiralityCurve {
    pub n_sites: usize,
    pub alpha: f64,
    pub lambda_ring: f64,
    /// Gain site.
    pub m: usize,
    /// Initial site.
    pub m0: usize,
    /// Threshold of the lattice, when one was found.
    pub gamma_pt: Option<f64>,
    pub gamma_values: Vec<f64>,
    /// `NaN` where the point failed.
    pub momentum_values: Vec<f64>,
    /// Averaging window used per point.
    pub averaging_window: Vec<f64>,
    pub flags: Vec<CurveFlag>,
}

pub const CHIRALITY_CSV_HEADER: [&str; 6] = [
    "gamma",
    "gamma_over_gamma_pt",
    "momentum",
    "window",
    "flag",
    "gamma_over_gamma_pt_r6",
];

impl ChiralityCurve {
    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&CHIRALITY_CSV_HEADER);
        for i in 0..self.gamma_values.len() {
            let g = self.gamma_values[i];
            let ratio = self.gamma_pt.map_or(f64::NAN, |gp| g / gp);
            t.row([
                num(g),
                num(ratio),
                num(self.momentum_values[i]),
                num(self.averaging_window[i]),
                self.flags[i].to_string(),
                fmt_sig(ratio, ROUNDED_DIGITS),
            ]);
        }
        t.finish()
    }

    pub fn has_failures(&self) -> bool {
        self.flags.iter().any(|f| matches!(f, CurveFlag::Failed(_)))
    }

    /// Index of the largest `|p|` among successful points.
    pub fn peak_index(&self) -> Option<usize> {
        self.momentum_values
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_finite())
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
    }
}

/// `points` uniformly spaced values over `[0, 2 * gamma_pt]`.
pub fn default_gamma_grid(gamma_pt: f64, points: usize) -> Vec<f64> {
    let top = 2.0 * gamma_pt;
    (0..points)
        .map(|i| top * i as f64 / (points - 1) as f64)
        .collect()
}

/// Steady-state momentum over a `gamma` grid. Without a grid, the threshold
/// is located first and the default 61-point grid over `[0, 2 gamma_pt]` is
/// used. Grid points run in parallel on the current rayon pool.
pub fn chirality_curve(
    spec: &LatticeSpec,
    m0: usize,
    gamma_grid: Option<&[f64]>,
    threshold: &ThresholdOptions,
    opts: &DynamicsOptions,
) -> Result<ChiralityCurve> {
    WaveState::localized(spec.n_sites(), m0)?;
    let base = spec.with_gamma(0.0)?;
    let gamma_pt = match find_threshold(&base, threshold)? {
        Threshold::Found(p) => Some(p.gamma_pt),
        Threshold::NotFoundBelowCap { .. } => None,
    };
    let grid: Vec<f64> = match (gamma_grid, gamma_pt) {
        (Some(g), _) => g.to_vec(),
        (None, Some(gp)) => default_gamma_grid(gp, DEFAULT_GRID_POINTS),
        (None, None) => {
            return Err(Error::Precondition(
                "no threshold below cap; supply an explicit gamma grid".into(),
            ))
        }
    };
    let delta = band_measure(&base)?.quarter_width;
    let results: Vec<Result<AveragedMomentum>> = grid
        .par_iter()
        .map(|&g| {
            let s = base.with_gamma(g)?;
            averaged_momentum_with_delta(&s, delta, m0, opts)
        })
        .collect();

    let mut momentum_values = Vec::with_capacity(grid.len());
    let mut averaging_window = Vec::with_capacity(grid.len());
    let mut flags = Vec::with_capacity(grid.len());
    for r in results {
        match r {
            Ok(a) => {
                momentum_values.push(a.value);
                averaging_window.push(a.window);
                flags.push(if a.settled {
                    CurveFlag::Ok
                } else {
                    CurveFlag::Unsettled
                });
            }
            Err(e) => {
                momentum_values.push(f64::NAN);
                averaging_window.push(f64::NAN);
                flags.push(CurveFlag::Failed(e.to_string()));
            }
        }
    }
    Ok(ChiralityCurve {
        n_sites: spec.n_sites(),
        alpha: spec.alpha(),
        lambda_ring: spec.lambda_ring(),
        m: spec.gain_site(),
        m0,
        gamma_pt,
        gamma_values: grid,
        momentum_values,
        averaging_window,
        flags,
    })
}

/// Sampled trajectory of a single packet.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<WaveState>,
}

/// Samples the packet started on `m0` every `sample_dt` time units up to
/// `t_max`.
pub fn trajectory(spec: &LatticeSpec, m0: usize, t_max: f64, sample_dt: f64) -> Result<Trajectory> {
    if !(sample_dt > 0.0 && t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::domain(
            "sample_dt",
            "need sample_dt > 0 and t_max >= 0",
        ));
    }
    let prop = Propagator::new(spec)?;
    let count = (t_max / sample_dt).round() as usize;
    let mut samples = Vec::with_capacity(count + 1);
    let mut state = WaveState::localized(spec.n_sites(), m0)?;
    samples.push(state.clone());
    for k in 1..=count {
        // Propagate from the previous sample; the clock is reset from k to
        // avoid drift in the reported times.
        state = prop.propagate(&state, sample_dt)?;
        state.time = k as f64 * sample_dt;
        samples.push(state.clone());
    }
    Ok(Trajectory { samples })
}

impl Trajectory {
    /// CSV with columns `t,site,re_f,im_f,intensity`, one row per site and
    /// sample; `intensity` is the site intensity `|f_j|^2`.
    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["t", "site", "re_f", "im_f", "intensity"]);
        for s in &self.samples {
            let amps = s.amplitudes();
            for (j, z) in amps.iter().enumerate() {
                t.row([
                    num(s.time()),
                    (j + 1).to_string(),
                    num(z.re),
                    num(z.im),
                    num(z.norm_sqr()),
                ]);
            }
        }
        t.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(n: usize, alpha: f64, m: usize, lambda: f64, gamma: f64) -> LatticeSpec {
        LatticeSpec::builder(n, alpha)
            .gain_site(m)
            .lambda_ring(lambda)
            .gamma(gamma)
            .build()
            .unwrap()
    }

    #[test]
    fn localized_state() {
        let s = WaveState::localized(5, 5).unwrap();
        assert_eq!(s.intensity(), 1.0);
        assert_eq!(momentum(&s).unwrap(), 0.0);
        assert!(WaveState::localized(5, 0).is_err());
        assert!(WaveState::localized(5, 6).is_err());
    }

    #[test]
    fn zero_state_momentum_is_error() {
        let s = WaveState::new(CVector::zeros(4), 0.0);
        assert!(matches!(momentum(&s), Err(Error::Domain { .. })));
    }

    #[test]
    fn plane_wave_momentum() {
        // f_j = exp(2 pi i j q / N): p = sin(2 pi q / N).
        for (n, q) in [(8usize, 2usize), (8, 1), (12, 5), (9, 4)] {
            let f = CVector::from_fn(n, |j, _| {
                Complex64::from_polar(1.0, 2.0 * PI * ((j + 1) * q) as f64 / n as f64)
            });
            let p = ring_momentum(&f).unwrap();
            assert_abs_diff_eq!(p, (2.0 * PI * q as f64 / n as f64).sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let sp = spec(7, 1.0, 2, 1.0, 0.3);
        let s = WaveState::localized(7, 3).unwrap();
        assert_eq!(propagate(&sp, &s, 0.0).unwrap(), s);
        assert!(propagate(&sp, &s, -1.0).is_err());
    }

    #[test]
    fn hermitian_evolution_is_unitary() {
        for (n, a, l) in [
            (10, 0.0, 0.0),
            (13, 1.0, 1.0),
            (16, -1.0, 0.4),
            (9, 2.0, 1.0),
        ] {
            let sp = spec(n, a, 1, l, 0.0);
            let p = Propagator::new(&sp).unwrap();
            let s = WaveState::localized(n, 2).unwrap();
            for t in [0.37, 10.0, 1000.0] {
                let i = p.propagate(&s, t).unwrap().intensity();
                assert!((i - 1.0).abs() <= 1e-9, "N={n} alpha={a}: I({t}) = {i}");
            }
        }
    }

    #[test]
    fn spectral_and_stepped_agree() {
        let sp = spec(8, 1.0, 2, 1.0, 0.4);
        let s = WaveState::localized(8, 1).unwrap();
        let a = Propagator::with_method(&sp, PropagationMethod::Spectral).unwrap();
        let b = Propagator::with_method(&sp, PropagationMethod::Stepped).unwrap();
        let (fa, fb) = (a.propagate(&s, 3.0).unwrap(), b.propagate(&s, 3.0).unwrap());
        let diff = (fa.amplitudes() - fb.amplitudes()).norm() / fa.amplitudes().norm();
        assert!(diff < 1e-9, "relative difference {diff}");
    }

    #[test]
    fn broken_phase_grows_without_overflow() {
        let base = spec(10, 0.0, 5, 0.0, 0.0);
        let delta = band_measure(&base).unwrap().quarter_width;
        let sp = base.with_gamma(3.0 * delta).unwrap();
        let p = Propagator::new(&sp).unwrap();
        let s = p
            .propagate(&WaveState::localized(10, 1).unwrap(), 1e4)
            .unwrap();
        assert!(s.log_intensity() > 1e3);
        assert!(s.direction().norm().is_finite());
        assert!(momentum(&s).unwrap().abs() <= 1.0);
    }

    #[test]
    fn trapezoid_mean_examples() {
        assert_eq!(trapezoid_mean(&[2.0]), 2.0);
        assert_eq!(trapezoid_mean(&[0.0, 1.0]), 0.5);
        assert_eq!(trapezoid_mean(&[0.0, 1.0, 2.0, 3.0]), 1.5);
    }

    #[test]
    fn hermitian_average_vanishes() {
        let sp = spec(12, 1.0, 2, 1.0, 0.0);
        for m0 in [1, 4, 7] {
            let a = time_averaged_momentum(&sp, m0, &DynamicsOptions::default()).unwrap();
            assert!(a.value.abs() <= 0.02, "m0={m0}: {}", a.value);
            assert!(a.settled);
        }
    }

    #[test]
    fn window_doubling_is_reported() {
        // A settle tolerance of zero can never be met.
        let sp = spec(8, 1.0, 2, 1.0, 0.2);
        let opts = DynamicsOptions {
            window: Some(10.0),
            settle_tol: 0.0,
            max_doublings: 2,
            ..Default::default()
        };
        let a = time_averaged_momentum(&sp, 1, &opts).unwrap();
        assert!(!a.settled);
        assert_abs_diff_eq!(a.window, 40.0, epsilon = 1e-9);
    }

    #[test]
    fn default_grid_layout() {
        let g = default_gamma_grid(2.0, DEFAULT_GRID_POINTS);
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[30], 2.0);
        assert_eq!(g[60], 4.0);
    }

    #[test]
    fn trajectory_csv_rows() {
        let sp = spec(4, 0.0, 1, 1.0, 0.1);
        let tr = trajectory(&sp, 1, 1.0, 0.5).unwrap();
        assert_eq!(tr.samples.len(), 3);
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,site,re_f,im_f,intensity");
        assert_eq!(lines.len(), 1 + 3 * 4);
        assert_eq!(lines[1], "0,1,1,0,1");
        assert!(lines[5].starts_with("0.5,1,"));
    }
}
