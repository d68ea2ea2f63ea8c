//! Command dispatch, output files and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ptring::phase::all_gain_sites;
use ptring::spectra::ring_chain_difference_csv;
use ptring::table::num;
use ptring::{
    chirality_curve, ring_chain_difference, spectrum, sweep_phase_diagram, trajectory,
    PhaseDiagram, SweepOptions,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{command_name, Command, Format, RunConfig};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One logical result: the file it goes to and the flags of its points.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub output: Option<String>,
    pub label: String,
    pub flags: Vec<String>,
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub outputs: Vec<PathBuf>,
    pub reports: Vec<PointReport>,
    pub manifest: PathBuf,
}

impl Summary {
    pub fn failed(&self) -> bool {
        self.reports.iter().any(|r| r.failed)
    }
}

struct Artifact {
    stem: String,
    csv: String,
    json: Value,
}

/// Writes via a `.partial` sibling that is renamed once complete; a failed
/// write leaves the `.partial` file behind.
fn write_atomic(path: &Path, body: &str) -> Result<(), RunError> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    let mut f = fs::File::create(&partial).map_err(io_err(&partial))?;
    f.write_all(body.as_bytes()).map_err(io_err(&partial))?;
    f.sync_all().map_err(io_err(&partial))?;
    fs::rename(&partial, path).map_err(io_err(path))
}

fn tag(prefix: &str, x: f64) -> String {
    format!("{prefix}{}", num(x))
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

fn failure(label: String, e: impl ToString) -> (Option<Artifact>, PointReport) {
    (
        None,
        PointReport {
            output: None,
            label,
            flags: vec![format!("failed: {}", e.to_string())],
            failed: true,
        },
    )
}

fn success(
    art: Artifact,
    label: String,
    flags: Vec<String>,
    failed: bool,
) -> (Option<Artifact>, PointReport) {
    (
        Some(art),
        PointReport {
            output: None,
            label,
            flags,
            failed,
        },
    )
}

fn run_spectrum(cfg: &RunConfig) -> Vec<(Option<Artifact>, PointReport)> {
    let mut out = Vec::new();
    for &alpha in &cfg.alpha_values {
        for &lambda in &cfg.lambda_values {
            let label = format!("{}_{}", tag("a", alpha), tag("l", lambda));
            let r = cfg
                .lattice_for(alpha, lambda, cfg.lattice.gain_site())
                .and_then(|s| spectrum(&s, false));
            out.push(match r {
                Ok(s) => success(
                    Artifact {
                        stem: format!("spectrum_{label}"),
                        csv: s.to_csv(),
                        json: json!({ "alpha": alpha, "lambda_ring": lambda, "spectrum": to_json(&s) }),
                    },
                    label,
                    vec!["ok".into()],
                    false,
                ),
                Err(e) => failure(label, e),
            });
        }
    }
    out
}

fn run_ring_chain(cfg: &RunConfig) -> Vec<(Option<Artifact>, PointReport)> {
    cfg.alpha_values
        .iter()
        .map(|&alpha| {
            let label = tag("a", alpha);
            match cfg
                .lattice_for(alpha, 0.0, cfg.lattice.gain_site())
                .and_then(|s| ring_chain_difference(&s))
            {
                Ok(d) => success(
                    Artifact {
                        stem: format!("ring_chain_diff_{label}"),
                        csv: ring_chain_difference_csv(&d),
                        json: json!({ "alpha": alpha, "n_sites": cfg.lattice.n_sites(), "delta_e": d }),
                    },
                    label,
                    vec!["ok".into()],
                    false,
                ),
                Err(e) => failure(label, e),
            }
        })
        .collect()
}

fn diagrams_csv(ds: &[PhaseDiagram]) -> String {
    let mut out = String::new();
    for (i, d) in ds.iter().enumerate() {
        let csv = d.to_csv();
        if i == 0 {
            out.push_str(&csv);
        } else {
            out.extend(csv.split_inclusive('\n').skip(1));
        }
    }
    out
}

fn diagram_report(ds: &[PhaseDiagram]) -> (Vec<String>, bool) {
    let flags = ds
        .iter()
        .flat_map(|d| {
            d.points
                .iter()
                .map(|p| format!("m={} lambda={}: {}", p.m, num(p.lambda_ring), p.status))
        })
        .collect();
    (flags, ds.iter().any(PhaseDiagram::has_failures))
}

fn run_phase(cfg: &RunConfig, per_lambda: bool) -> Vec<(Option<Artifact>, PointReport)> {
    let opts = SweepOptions {
        threshold: cfg.numerics.threshold(),
        ..SweepOptions::default()
    };
    let mut out = Vec::new();
    for &alpha in &cfg.alpha_values {
        let ms = match (&cfg.m_values, per_lambda) {
            (Some(ms), _) => ms.clone(),
            (None, true) => all_gain_sites(cfg.lattice.n_sites()),
            (None, false) => vec![cfg.lattice.gain_site()],
        };
        let base = match cfg.lattice_for(alpha, cfg.lambda_values[0], ms[0]) {
            Ok(b) => b,
            Err(e) => {
                out.push(failure(tag("a", alpha), e));
                continue;
            }
        };
        let diagrams = sweep_phase_diagram(&base, &cfg.lambda_values, &ms, &opts);
        if per_lambda {
            for d in &diagrams {
                let label = format!("{}_{}", tag("a", alpha), tag("l", d.lambda_ring));
                let (flags, failed) = diagram_report(std::slice::from_ref(d));
                out.push(success(
                    Artifact {
                        stem: format!("phase_{label}"),
                        csv: d.to_csv(),
                        json: to_json(d),
                    },
                    label,
                    flags,
                    failed,
                ));
            }
        } else {
            let label = tag("a", alpha);
            let (flags, failed) = diagram_report(&diagrams);
            out.push(success(
                Artifact {
                    stem: format!("threshold_{label}"),
                    csv: diagrams_csv(&diagrams),
                    json: to_json(&diagrams),
                },
                label,
                flags,
                failed,
            ));
        }
    }
    out
}

fn run_chirality(cfg: &RunConfig) -> Vec<(Option<Artifact>, PointReport)> {
    let ms = cfg
        .m_values
        .clone()
        .unwrap_or_else(|| vec![cfg.lattice.gain_site()]);
    let mut out = Vec::new();
    for &alpha in &cfg.alpha_values {
        for &lambda in &cfg.lambda_values {
            for &m in &ms {
                for &m0 in &cfg.m0_values {
                    let label = format!("{}_{}_m{m}_m0{m0}", tag("a", alpha), tag("l", lambda));
                    let r = cfg.lattice_for(alpha, lambda, m).and_then(|s| {
                        chirality_curve(
                            &s,
                            m0,
                            cfg.gamma_grid.as_deref(),
                            &cfg.numerics.threshold(),
                            &cfg.numerics.dynamics(),
                        )
                    });
                    out.push(match r {
                        Ok(c) => {
                            let flags = c.flags.iter().map(ToString::to_string).collect();
                            let failed = c.has_failures();
                            success(
                                Artifact {
                                    stem: format!("chirality_{label}"),
                                    csv: c.to_csv(),
                                    json: to_json(&c),
                                },
                                label,
                                flags,
                                failed,
                            )
                        }
                        Err(e) => failure(label, e),
                    });
                }
            }
        }
    }
    out
}

fn run_trajectory(cfg: &RunConfig) -> Vec<(Option<Artifact>, PointReport)> {
    let alpha = cfg.alpha_values[0];
    let lambda = cfg.lambda_values[0];
    cfg.m0_values
        .iter()
        .map(|&m0| {
            let label = format!("m0{m0}");
            let r = cfg
                .lattice_for(alpha, lambda, cfg.lattice.gain_site())
                .and_then(|s| trajectory(&s, m0, cfg.numerics.t_max, cfg.numerics.sample_dt));
            match r {
                Ok(t) => {
                    let samples: Vec<Value> = t
                        .samples
                        .iter()
                        .map(|s| {
                            let f = s.amplitudes();
                            json!({
                                "t": s.time(),
                                "re_f": f.iter().map(|z| z.re).collect::<Vec<_>>(),
                                "im_f": f.iter().map(|z| z.im).collect::<Vec<_>>(),
                                "log_intensity": s.log_intensity(),
                            })
                        })
                        .collect();
                    success(
                        Artifact {
                            stem: format!("trajectory_{label}"),
                            csv: t.to_csv(),
                            json: json!({ "m0": m0, "samples": samples }),
                        },
                        label,
                        vec!["ok".into()],
                        false,
                    )
                }
                Err(e) => failure(label, e),
            }
        })
        .collect()
}

/// Executes `cfg` on a pool of `cfg.parallelism` workers, writes one file
/// per logical result and a manifest.
pub fn run(cfg: &RunConfig) -> Result<Summary, RunError> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let results = pool.install(|| match cfg.command {
        Command::Spectrum => run_spectrum(cfg),
        Command::RingChainDiff => run_ring_chain(cfg),
        Command::Threshold => run_phase(cfg, false),
        Command::PhaseDiagram => run_phase(cfg, true),
        Command::Chirality => run_chirality(cfg),
        Command::Trajectory => run_trajectory(cfg),
    });

    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    let mut outputs = Vec::new();
    let mut reports = Vec::new();
    for (art, mut report) in results {
        if let Some(art) = art {
            let name = format!("{}.{}", art.stem, cfg.output_format.extension());
            let path = cfg.output_dir.join(&name);
            let body = match cfg.output_format {
                Format::Csv => art.csv,
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&art.json).expect("json value");
                    s.push('\n');
                    s
                }
            };
            write_atomic(&path, &body)?;
            report.output = Some(name);
            outputs.push(path);
        }
        reports.push(report);
    }

    let manifest = json!({
        "program": "ptring",
        "version": ptring::VERSION,
        "command": command_name(cfg.command),
        "inputs": cfg.inputs,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "outputs": reports.iter().filter_map(|r| r.output.clone()).collect::<Vec<_>>(),
        "points": reports,
        "success": !reports.iter().any(|r| r.failed),
    });
    let manifest_path = cfg.output_dir.join(MANIFEST);
    let mut body = serde_json::to_string_pretty(&manifest).expect("json value");
    body.push('\n');
    write_atomic(&manifest_path, &body)?;
    Ok(Summary {
        outputs,
        reports,
        manifest: manifest_path,
    })
}
