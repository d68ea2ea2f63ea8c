//! Numerical toolkit for `N`-site PT-symmetric tight-binding lattices with a
//! position-dependent tunneling profile `t(k) = t0 [k (N - k)]^(alpha/2)`, a
//! balanced pair of gain/loss impurities `+-i gamma`, and a corner link that
//! interpolates from an open chain (`lambda = 0`) to a ring (`lambda = 1`).
//!
//! * [`model`]: lattice parameters, Hamiltonian assembly, PT operators.
//! * [`spectra`]: eigenspectra, the quarter-bandwidth scale, ring vs. chain.
//! * [`phase`]: PT-exact detection, threshold bisection, phase diagrams.
//! * [`dynamics`]: non-unitary evolution, ring momentum, chirality curves.

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod phase;
pub mod spectra;
pub mod table;

pub use dynamics::{
    chirality_curve, momentum, propagate, time_averaged_momentum, trajectory, AveragedMomentum,
    ChiralityCurve, CurveFlag, DynamicsOptions, PropagationMethod, Propagator, Trajectory,
    WaveState,
};
pub use error::{Error, Result};
pub use matrix::{CVector, ComplexMatrix};
pub use model::{build_hamiltonian, parity_apply, pt_transform, LatticeSpec};
pub use num_complex::Complex64;
pub use phase::{
    find_threshold, is_pt_exact, is_pt_exact_with, sweep_phase_diagram, PhaseDiagram, PhasePoint,
    PhaseRecord, PointStatus, SweepOptions, Threshold, ThresholdOptions,
};
pub use spectra::{
    band_measure, eigen, ring_chain_difference, spectrum, verify_difference_equation, BandMeasure,
    Spectrum,
};

/// Crate version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
