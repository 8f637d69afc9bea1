//! Configured runs: one JSON document selects an instance and a pipeline,
//! and every run writes its artifacts plus a manifest of verdicts.

mod checks;
mod rates;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{document::ProblemDocument, ControlId, ProblemInstance};
use crate::shaking::{
    augment_controls, shake_sweep, write_kernel_csv, write_sweep_csv, Kernel, ShakingConfig,
};
use crate::simulate::{simulate_paths, write_paths_csv, McEstimate, PathConfig, Policy};
use crate::solve::{solve_with, LatticeOptions, LatticeSpec};
use crate::verify::Verdict;

pub use checks::{run_check, shake_verdicts, CheckSpec, PolicySpec, Start, Triple, WeakField};
pub use rates::{fitted_order, probe_set, rate_study, RateReport};

/// Where the problem comes from: a gallery entry or a problem document file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gallery: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl InstanceRef {
    pub fn gallery(name: &str) -> Self {
        Self {
            gallery: Some(name.into()),
            params: BTreeMap::new(),
            path: None,
        }
    }

    pub fn resolve(&self) -> Result<ProblemInstance> {
        match (&self.gallery, &self.path) {
            (Some(name), None) => crate::gallery::build(name, &self.params),
            (None, Some(path)) => {
                if !self.params.is_empty() {
                    return Err(Error::Config("params only apply to gallery entries".into()));
                }
                ProblemDocument::load(path)?.build()
            }
            _ => Err(Error::Config(
                "instance needs exactly one of 'gallery' and 'path'".into(),
            )),
        }
    }
}

fn default_probes() -> usize {
    200
}
fn default_rate_threshold() -> f64 {
    0.45
}
fn default_anchors() -> usize {
    6
}
fn default_slack() -> f64 {
    1.5
}
fn default_growth() -> f64 {
    2.2
}
fn default_residual() -> f64 {
    0.1
}

/// What a run does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pipeline", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pipeline {
    Solve {
        lattice: LatticeOptions,
        #[serde(default)]
        level: Option<usize>,
        #[serde(default)]
        eps: f64,
    },
    Simulate {
        start: Start,
        dt: f64,
        n_paths: usize,
        policy: PolicySpec,
        #[serde(default)]
        eps: f64,
    },
    Verify {
        check: CheckSpec,
    },
    Shake {
        deltas: Vec<f64>,
        lattice: LatticeOptions,
        #[serde(default = "default_anchors")]
        anchors: usize,
        /// Allowed factor over the fitted `C δ` at smaller `δ`.
        #[serde(default = "default_slack")]
        slack: f64,
        /// Allowed growth of the second differences per halving of `δ`.
        #[serde(default = "default_growth")]
        growth: f64,
        #[serde(default = "default_residual")]
        residual: f64,
    },
    Rates {
        hs: Vec<f64>,
        #[serde(default = "default_probes")]
        probes: usize,
        #[serde(default = "default_rate_threshold")]
        threshold: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceRef,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub run: Pipeline,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks everything that can be checked before computing.
    pub fn validate(&self) -> Result<ProblemInstance> {
        let instance = self.instance.resolve()?;
        match &self.run {
            Pipeline::Solve { lattice, level, .. } => {
                if let Some(l) = level {
                    instance.level(*l)?;
                }
                check_h(lattice.h)?;
            }
            Pipeline::Simulate {
                dt, n_paths, start, ..
            } => {
                PathConfig::for_instance(&instance, *dt, *n_paths, self.seed)
                    .validate(&instance)?;
                if start.x.len() != instance.dim() {
                    return Err(Error::Config("start point has the wrong dimension".into()));
                }
            }
            Pipeline::Verify { check } => check.validate(&instance)?,
            Pipeline::Shake {
                deltas, lattice, ..
            } => {
                if deltas.is_empty() {
                    return Err(Error::Config("empty delta sweep".into()));
                }
                for &d in deltas {
                    ShakingConfig::new(d)?;
                }
                check_h(lattice.h)?;
            }
            Pipeline::Rates { hs, .. } => {
                if hs.len() < 3 {
                    return Err(Error::Config(
                        "a rate study needs at least 3 values of h".into(),
                    ));
                }
                let mut s = hs.clone();
                s.sort_by(|a, b| a.total_cmp(b));
                if s.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Config(format!("duplicate h values in {hs:?}")));
                }
                for &h in hs {
                    check_h(h)?;
                }
            }
        }
        Ok(instance)
    }
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "spatial step must be positive, got {h}"
        )))
    }
}

/// Paths written and verdicts reached by one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub pipeline: String,
    pub instance: String,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<McEstimate>,
    pub pass: bool,
}

/// Validates, executes the pipeline, writes artifacts and `manifest.json`
/// into the output directory, and returns the manifest.
pub fn run(config: &RunConfig) -> Result<Manifest> {
    let instance = config.validate()?;
    let out = &config.output;
    std::fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    let mut verdicts = Vec::new();
    let mut estimate = None;
    let name = instance.name.clone();
    let pipeline = match &config.run {
        Pipeline::Solve {
            lattice,
            level,
            eps,
        } => {
            let level = level.unwrap_or(instance.controls.n_levels());
            let field = solve_with(&instance, lattice, level, *eps)?;
            let values = out.join("values.csv");
            let meta = out.join("meta.json");
            field.write_csv(&values)?;
            field.write_meta(&meta)?;
            outputs.extend([values, meta]);
            if let Ok(r) = field.one_step_residual() {
                verdicts.push(Verdict::at_most(
                    "one_step_residual",
                    &name,
                    serde_json::json!({ "h": lattice.h }),
                    r,
                    1e-12,
                ));
            }
            "solve"
        }
        Pipeline::Simulate {
            start,
            dt,
            n_paths,
            policy,
            eps,
        } => {
            let cfg = PathConfig::for_instance(&instance, *dt, *n_paths, config.seed);
            let pol: Policy = policy.build(&instance, config.seed)?;
            let paths = simulate_paths(&instance, &pol, start.t, &start.x, *eps, &cfg)?;
            let totals: Vec<f64> = paths.iter().map(|p| p.total()).collect();
            estimate = Some(McEstimate::from_samples(&totals, *dt, config.seed));
            let file = out.join("paths.csv");
            write_paths_csv(&file, &paths)?;
            outputs.push(file);
            "simulate"
        }
        Pipeline::Verify { check } => {
            let (v, files) = run_check(&instance, check, config.seed, out)?;
            verdicts.extend(v);
            outputs.extend(files);
            "verify"
        }
        Pipeline::Shake {
            deltas,
            lattice,
            anchors,
            slack,
            growth,
            residual,
        } => {
            let rows = shake_sweep(&instance, deltas, lattice, *anchors)?;
            let file = out.join("shake_sweep.csv");
            write_sweep_csv(&file, &rows)?;
            outputs.push(file);
            // kernel tables on the shared lattice step, for audit
            let level = instance.controls.n_levels();
            let base = lattice.clone().starting_at(0.0);
            for (i, &delta) in deltas.iter().enumerate() {
                let cfg = ShakingConfig::new(delta)?;
                let shaken = augment_controls(&instance, &cfg, 0.0)?;
                let dt = LatticeSpec::build(&instance, &base, level, 0.0)?
                    .dt
                    .min(LatticeSpec::build(&shaken, &base, level, 0.0)?.dt);
                let kf = out.join(format!("kernel_{i}.csv"));
                write_kernel_csv(&kf, &Kernel::new(&cfg, dt, lattice.h, instance.dim()))?;
                outputs.push(kf);
            }
            verdicts.extend(checks::shake_verdicts(
                &name, &rows, *slack, *growth, *residual,
            ));
            "shake"
        }
        Pipeline::Rates {
            hs,
            probes,
            threshold,
        } => {
            let report = rate_study(&instance, hs, *probes, config.seed, *threshold)?;
            let file = out.join("rates.csv");
            let mut w = csv::Writer::from_path(&file)?;
            w.write_record(["h", "max_error"])?;
            for (h, e) in report.hs.iter().zip(&report.errors) {
                w.write_record([format!("{h:.12e}"), format!("{e:.12e}")])?;
            }
            w.flush()?;
            outputs.push(file);
            verdicts.push(Verdict::at_least(
                "rate_order",
                &name,
                serde_json::json!({ "hs": report.hs, "errors": report.errors, "probes": probes }),
                report.order,
                *threshold,
            ));
            "rates"
        }
    };
    let pass = verdicts.iter().all(|v| v.pass);
    let manifest = Manifest {
        pipeline: pipeline.into(),
        instance: name,
        seed: config.seed,
        outputs,
        verdicts,
        estimate,
        pass,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out.join("manifest.json"), text)?;
    Ok(manifest)
}

/// Control id helper for configs.
pub(crate) fn control(instance: &ProblemInstance, id: usize) -> Result<ControlId> {
    let c = ControlId(id);
    if instance.controls.contains(c) {
        Ok(c)
    } else {
        Err(Error::Config(format!(
            "control {id} does not exist ({} controls)",
            instance.controls.len()
        )))
    }
}
