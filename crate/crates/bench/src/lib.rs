//! Fixtures shared by the criterion benchmarks in `benches/`.

use ptring::{LatticeSpec, ThresholdOptions};

/// Ring with the linear profile and the impurity next to the corner link.
pub fn ring(n_sites: usize, alpha: f64) -> LatticeSpec {
    LatticeSpec::builder(n_sites, alpha)
        .lambda_ring(1.0)
        .gain_site(2.min(n_sites / 2))
        .build()
        .expect("valid fixture")
}

/// Same ring with `gamma` at `fraction` of its threshold.
pub fn ring_at(n_sites: usize, alpha: f64, fraction: f64) -> LatticeSpec {
    let base = ring(n_sites, alpha);
    let gpt = ptring::find_threshold(&base, &ThresholdOptions::default())
        .expect("threshold search")
        .point()
        .expect("threshold below cap")
        .gamma_pt;
    base.with_gamma(fraction * gpt).expect("valid gamma")
}
