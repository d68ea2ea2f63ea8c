//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one `PASS`/`FAIL` line. The process exits non-zero if any criterion fails.

mod common;

use common::{multiset_distance, polynomial_eigenvalues, taylor_propagate, C};
use ptring::phase::{all_gain_sites, PhaseRecord};
use ptring::spectra::conjugate_pair_defect;
use ptring::{
    band_measure, build_hamiltonian, chirality_curve, eigen, find_threshold, momentum,
    pt_transform, ring_chain_difference, spectrum, sweep_phase_diagram, CVector, ChiralityCurve,
    DynamicsOptions, LatticeSpec, PropagationMethod, Propagator, SweepOptions, ThresholdOptions,
    WaveState,
};
use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normalized(n: usize, alpha: f64, lambda: f64, m: usize) -> Result<f64, String> {
    let spec = LatticeSpec::builder(n, alpha)
        .lambda_ring(lambda)
        .gain_site(m)
        .build()
        .map_err(|e| e.to_string())?;
    let t = find_threshold(&spec, &ThresholdOptions::default()).map_err(|e| e.to_string())?;
    t.point()
        .map(|p| p.gamma_pt_normalized)
        .ok_or_else(|| format!("no threshold below cap for N={n} m={m}"))
}

fn three_site_spectra() -> Outcome {
    let chain = spectrum(&LatticeSpec::builder(3, 0.0).build().unwrap(), false).unwrap();
    let ring = spectrum(
        &LatticeSpec::builder(3, 0.0)
            .lambda_ring(1.0)
            .build()
            .unwrap(),
        false,
    )
    .unwrap();
    let dev = |got: &[C], want: [f64; 3]| {
        let want: Vec<C> = want.iter().map(|&x| C::new(x, 0.0)).collect();
        multiset_distance(got, &want)
    };
    let dc = dev(&chain.eigenvalues, [-SQRT_2, 0.0, SQRT_2]);
    let dr = dev(&ring.eigenvalues, [-2.0, 1.0, 1.0]);
    check(
        dc <= 1e-10 && dr <= 1e-10,
        format!("chain deviation {dc:.2e}, ring deviation {dr:.2e} (tol 1e-10)"),
    )
}

fn uniform_chain_thresholds() -> Outcome {
    let even = normalized(20, 0.0, 0.0, 10)?;
    let odd = normalized(21, 0.0, 0.0, 10)?;
    check(
        (even - 1.0).abs() <= 1e-3 && (odd - 0.5).abs() <= 1e-3,
        format!("N=20: {even:.6} (want 1 +- 1e-3), N=21: {odd:.6} (want 0.5 +- 1e-3)"),
    )
}

fn uniform_ring_collapse() -> Outcome {
    let r = normalized(20, 0.0, 1.0, 5)?;
    check(
        r <= 0.01,
        format!("gamma_pt/delta = {r:.3e} (want <= 0.01)"),
    )
}

fn sweep(n: usize, alpha: f64) -> Result<(Vec<PhaseRecord>, Vec<PhaseRecord>), String> {
    let base = LatticeSpec::builder(n, alpha).build().unwrap();
    let mut d = sweep_phase_diagram(
        &base,
        &[0.0, 1.0],
        &all_gain_sites(n),
        &SweepOptions::default(),
    );
    let ring = d.pop().unwrap().points;
    let chain = d.pop().unwrap().points;
    Ok((chain, ring))
}

fn threshold_of(r: &PhaseRecord) -> Result<(f64, f64, f64), String> {
    r.point
        .as_ref()
        .map(|p| (p.gamma_pt, p.gamma_pt_normalized, p.delta))
        .ok_or_else(|| format!("m={}: {}", r.m, r.status))
}

fn weakened_by_ring() -> Outcome {
    let mut problems = Vec::new();
    for alpha in [1.0, 2.0] {
        let (chain, ring) = sweep(30, alpha)?;
        for (c, r) in chain.iter().zip(&ring) {
            let (gc, nc, delta) = threshold_of(c)?;
            let (gr, _, _) = threshold_of(r)?;
            if gr > gc + 1e-3 * delta {
                problems.push(format!(
                    "alpha={alpha} m={}: ring {gr:.4} > chain {gc:.4}",
                    c.m
                ));
            }
            if alpha == 2.0 && c.mu >= 0.2 && !(0.2..=0.4).contains(&nc) {
                problems.push(format!("alpha=2 m={} chain plateau {nc:.4}", c.m));
            }
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            "ring threshold <= chain for all m; alpha=2 plateau within [0.2, 0.4]".into()
        } else {
            format!("{} violations: {}", problems.len(), problems.join("; "))
        },
    )
}

fn enhanced_by_ring() -> Outcome {
    let (chain, ring) = sweep(30, -1.0)?;
    let mut problems = Vec::new();
    let mut prev: Option<f64> = None;
    for (c, r) in chain.iter().zip(&ring) {
        let (gc, _, _) = threshold_of(c)?;
        let (gr, _, _) = threshold_of(r)?;
        if gr < gc {
            problems.push(format!("m={}: ring {gr:.4} < chain {gc:.4}", c.m));
        }
        if let Some(p) = prev {
            if gr > 1.05 * p {
                problems.push(format!("m={}: ring rises {p:.4} -> {gr:.4}", c.m));
            }
        }
        prev = Some(gr);
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            "ring threshold >= chain for all m and non-increasing in mu".into()
        } else {
            format!("{} violations: {}", problems.len(), problems.join("; "))
        },
    )
}

fn curve(n: usize, alpha: f64, m: usize, m0: usize) -> Result<ChiralityCurve, String> {
    let spec = LatticeSpec::builder(n, alpha)
        .lambda_ring(1.0)
        .gain_site(m)
        .build()
        .unwrap();
    let c = chirality_curve(
        &spec,
        m0,
        None,
        &ThresholdOptions::default(),
        &DynamicsOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    if c.has_failures() {
        return Err(format!("alpha={alpha} m={m} m0={m0}: failed grid points"));
    }
    Ok(c)
}

fn nearest_index(grid: &[f64], x: f64) -> usize {
    (0..grid.len())
        .min_by(|&a, &b| (grid[a] - x).abs().total_cmp(&(grid[b] - x).abs()))
        .unwrap()
}

fn chirality_peak() -> Outcome {
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for alpha in [1.0, 2.0] {
        for m0 in [1, 11] {
            let c = curve(20, alpha, 2, m0)?;
            let p = &c.momentum_values;
            let abs: Vec<f64> = p.iter().map(|x| x.abs()).collect();
            let peak = c.peak_index().unwrap();
            let want = nearest_index(&c.gamma_values, c.gamma_pt.unwrap());
            let tag = format!("alpha={alpha} m0={m0}");
            summary.push(format!(
                "{tag}: p(0)={:.3} peak {:.3}@{peak}",
                p[0], abs[peak]
            ));
            if p[0].abs() > 0.02 {
                problems.push(format!("{tag}: p(0) = {:.4}", p[0]));
            }
            if peak != want {
                problems.push(format!("{tag}: peak at index {peak}, threshold at {want}"));
            }
            if abs[peak] < 0.9 {
                problems.push(format!("{tag}: peak {:.4} < 0.9", abs[peak]));
            }
            for i in 0..peak {
                if abs[i] > abs[i + 1] + 0.05 {
                    problems.push(format!("{tag}: rise breaks at index {i}"));
                }
            }
            for i in peak..abs.len() - 1 {
                if abs[i + 1] > abs[i] + 0.05 {
                    problems.push(format!("{tag}: decay breaks at index {i}"));
                }
            }
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            summary.join("; ")
        } else {
            problems.join("; ")
        },
    )
}

fn location_dependence() -> Outcome {
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for m in [8, 7] {
        let mut peaks = Vec::new();
        for m0 in [1, 11] {
            let c = curve(22, 1.0, m, m0)?;
            let i = c.peak_index().unwrap();
            let p = c.momentum_values[i];
            summary.push(format!("m={m} m0={m0}: {p:.3}"));
            if m == 8 && p >= 0.0 {
                problems.push(format!("m=8 m0={m0}: peak momentum {p:.4} not negative"));
            }
            if m == 7 && p.abs() >= 0.95 {
                problems.push(format!("m=7 m0={m0}: peak |p| {:.4} >= 0.95", p.abs()));
            }
            peaks.push(p.abs());
        }
        if (peaks[0] - peaks[1]).abs() > 0.05 {
            problems.push(format!("m={m}: peaks {:.4} vs {:.4}", peaks[0], peaks[1]));
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            summary.join("; ")
        } else {
            problems.join("; ")
        },
    )
}

fn grid_specs(max_n: usize) -> Vec<LatticeSpec> {
    let mut out = Vec::new();
    for n in 3..=max_n {
        for alpha in [-1.0, 0.0, 1.0, 2.0] {
            for lambda in [0.0, 0.5, 1.0] {
                for gamma in [0.0, 0.3, 1.2] {
                    for m in [1, n / 2] {
                        out.push(
                            LatticeSpec::builder(n, alpha)
                                .lambda_ring(lambda)
                                .gamma(gamma)
                                .gain_site(m)
                                .build()
                                .unwrap(),
                        );
                    }
                }
            }
        }
    }
    out
}

fn min_gap(values: &[C]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

fn property_suite() -> Outcome {
    let mut worst = [0.0f64; 8];
    let names = [
        "pt",
        "conj/scale",
        "unitarity",
        "residual/scale",
        "momentum",
        "composition",
        "taylor",
        "charpoly",
    ];
    for spec in grid_specs(10) {
        let n = spec.n_sites();
        let h = build_hamiltonian(&spec);
        let scale = h.scale();
        worst[0] = worst[0].max(pt_transform(&h).max_abs_diff(&h));

        let s = eigen(&h, true).map_err(|e| e.to_string())?;
        let well_separated = min_gap(&s.eigenvalues) > 1e-3 * scale;
        if well_separated {
            worst[1] = worst[1].max(conjugate_pair_defect(&s.eigenvalues) / scale);
            let oracle = polynomial_eigenvalues(&h);
            worst[7] = worst[7].max(multiset_distance(&s.eigenvalues, &oracle));
        }
        for (e, v) in s.eigenvalues.iter().zip(s.eigenvectors.as_ref().unwrap()) {
            let r = h.mul_vec(v) - v * *e;
            worst[3] = worst[3].max(r.norm() / v.norm() / scale);
        }

        let herm = spec.with_gamma(0.0).unwrap();
        let u = Propagator::new(&herm)
            .unwrap()
            .propagate(&WaveState::localized(n, 1).unwrap(), 1000.0)
            .map_err(|e| e.to_string())?;
        worst[2] = worst[2].max((u.intensity() - 1.0).abs());

        let prop = Propagator::new(&spec).map_err(|e| e.to_string())?;
        let s0 = WaveState::localized(n, n / 2 + 1).unwrap();
        let direct = prop.propagate(&s0, 7.0).map_err(|e| e.to_string())?;
        let split = prop
            .propagate(&prop.propagate(&s0, 3.0).unwrap(), 4.0)
            .map_err(|e| e.to_string())?;
        let (a, b) = (split.amplitudes(), direct.amplitudes());
        worst[5] = worst[5].max((&a - &b).norm() / b.norm());
        let p = momentum(&direct).map_err(|e| e.to_string())?;
        worst[4] = worst[4].max(p.abs());

        if n <= 6 && prop.method() == PropagationMethod::Spectral {
            let delta = band_measure(&spec).unwrap().quarter_width;
            let mut psi = vec![C::new(0.0, 0.0); n];
            psi[n / 2] = C::new(1.0, 0.0);
            let want = taylor_propagate(&h, &psi, 7.0 * 2.0 * PI / delta, 200);
            let want = CVector::from_vec(want);
            worst[6] = worst[6].max((&b - &want).norm() / want.norm());
        }
    }
    let limits = [1e-14, 1e-9, 1e-9, 1e-9, 1.0, 1e-7, 1e-8, 1e-8];
    let ok = worst.iter().zip(&limits).all(|(w, l)| w <= l);
    let detail = names
        .iter()
        .zip(&worst)
        .zip(&limits)
        .map(|((n, w), l)| format!("{n} {w:.1e}/{l:.0e}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(ok, detail)
}

fn band_difference_locations() -> Outcome {
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for alpha in [0.0, 1.0, -1.0] {
        let spec = LatticeSpec::builder(30, alpha).build().unwrap();
        let d = ring_chain_difference(&spec).map_err(|e| e.to_string())?;
        let arg = (0..d.len())
            .max_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()))
            .unwrap();
        let len = d.len();
        let middle = (len / 3..2 * len / 3).contains(&arg);
        let outer = arg < len / 6 || arg >= len - len / 6;
        summary.push(format!("alpha={alpha}: argmax {}", arg + 1));
        let ok = if alpha < 0.0 { outer } else { middle };
        if !ok {
            problems.push(format!(
                "alpha={alpha}: argmax at level {} of {len}",
                arg + 1
            ));
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            summary.join("; ")
        } else {
            problems.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("three-site chain and ring spectra", three_site_spectra),
        ("uniform open-chain thresholds", uniform_chain_thresholds),
        ("uniform ring threshold collapse", uniform_ring_collapse),
        (
            "ring weakens thresholds for alpha in {1, 2}",
            weakened_by_ring,
        ),
        ("ring enhances thresholds for alpha = -1", enhanced_by_ring),
        ("chirality peak at threshold", chirality_peak),
        (
            "impurity-location dependence of chirality",
            location_dependence,
        ),
        ("property suite", property_suite),
        (
            "ring-chain level shift locations",
            band_difference_locations,
        ),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failed += 1;
        }
        println!("{tag} criterion {} ({name}): {detail} [{secs:.1}s]", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
