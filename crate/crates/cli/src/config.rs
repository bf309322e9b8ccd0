//! Run configuration file (TOML).
//!
//! Every field except `problem` is optional; missing values take the
//! problem's defaults. The manifest written after training is a fully
//! resolved `RunConfig` plus a `[run]` record, and can be fed back to
//! `train --config` to repeat the run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use surfpinn::bench::{problem, torus_heating, ExactSolution, ProblemSpec, SolverMode};
use surfpinn::network::MlpParams;
use surfpinn::residuals::LossWeights;
use surfpinn::trainer::{BatchMode, TrainingConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub overrides: ProblemOverrides,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub weights: WeightsSection,
    /// Written into manifests; ignored as input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_scale: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam_betas: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam_eps: Option<f64>,
    /// Points per step; 0 means full batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_window: Option<usize>,
    /// Write 0 for wall-clock seconds so logs are bit-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_grad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hessian: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub version: String,
    pub parameter_count: usize,
    pub iterations_completed: u64,
    pub final_loss: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// The benchmark problem with all overrides applied.
    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let o = &self.overrides;
        let mut p = problem(&self.problem)?;
        if let Some(eps) = o.smoothing {
            if p.name != "torus-heating" {
                bail!("overrides.smoothing applies only to torus-heating");
            }
            let keep = p.clone();
            p = torus_heating(eps);
            p.counts = keep.counts;
        }
        if let Some(s) = &o.solution {
            if p.solution.is_none() {
                bail!("problem `{}` has no exact solution to replace", p.name);
            }
            p = p.with_solution(ExactSolution::parse(s)?);
        }
        match (&mut p.mode, o.stages, o.reference) {
            (SolverMode::Continuous, None, None) => {}
            (SolverMode::Continuous, _, _) => {
                bail!("overrides.stages and overrides.reference need a discrete-time problem")
            }
            (SolverMode::Discrete { stages, reference }, q, r) => {
                if let Some(q) = q {
                    *stages = q;
                }
                if r.is_some() {
                    *reference = r;
                }
            }
        }
        if let Some(h) = o.horizon {
            p.horizon = h;
        }
        if let Some(n) = o.surface_points {
            p.counts.surface_points = n;
        }
        if let Some(n) = o.time_levels {
            p.counts.time_levels = n;
        }
        if let Some(n) = o.initial {
            p.counts.initial = n;
        }
        if let Some(n) = o.eval {
            p.counts.eval = n;
        }
        if let Some(s) = o.seed {
            p.seed = s;
        }
        if let Some(s) = o.output_scale {
            p.output_scale = s;
        }
        let w = &self.weights;
        let d = LossWeights::default();
        p.weights = LossWeights {
            residual: w.residual.unwrap_or(d.residual),
            normal_grad: w.normal_grad.unwrap_or(d.normal_grad),
            hessian: w.hessian.unwrap_or(d.hessian),
            initial: w.initial.unwrap_or(d.initial),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn training_config(&self, problem: &ProblemSpec) -> Result<TrainingConfig> {
        let t = &self.training;
        let d = TrainingConfig::default();
        let default_iterations = match problem.mode {
            SolverMode::Continuous => 50_000,
            SolverMode::Discrete { .. } => 30_000,
        };
        let deterministic = t.deterministic.unwrap_or(false);
        let c = TrainingConfig {
            iterations: t.iterations.unwrap_or(default_iterations),
            learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
            adam_betas: t.adam_betas.unwrap_or(d.adam_betas),
            adam_eps: t.adam_eps.unwrap_or(d.adam_eps),
            batch_mode: match t.batch_size.unwrap_or(0) {
                0 => BatchMode::FullBatch,
                n => BatchMode::MiniBatch(n),
            },
            seed: t.seed.unwrap_or(d.seed),
            log_every: t.log_every.unwrap_or(d.log_every),
            checkpoint_every: t.checkpoint_every.unwrap_or(d.checkpoint_every),
            divergence_window: t.divergence_window.unwrap_or(d.divergence_window),
            reduction: d.reduction,
            record_time: !deterministic,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn layers(&self, problem: &ProblemSpec) -> Vec<usize> {
        self.network
            .layers
            .clone()
            .unwrap_or_else(|| problem.default_layers())
    }

    pub fn initial_network(&self, problem: &ProblemSpec) -> Result<MlpParams> {
        let params = MlpParams::init(&self.layers(problem), self.network.seed.unwrap_or(0))?;
        problem.check_network(&params)?;
        Ok(params)
    }

    /// Copy with every default written out, so the result no longer depends
    /// on library defaults.
    pub fn resolved(&self) -> Result<RunConfig> {
        let p = self.problem_spec()?;
        let c = self.training_config(&p)?;
        let mut r = self.clone();
        let o = &mut r.overrides;
        if let SolverMode::Discrete { stages, reference } = p.mode {
            o.stages = Some(stages);
            o.reference = reference;
        }
        o.solution = p.solution.map(|s| s.name().to_string());
        o.horizon = Some(p.horizon);
        o.surface_points = Some(p.counts.surface_points);
        o.time_levels = Some(p.counts.time_levels);
        o.initial = Some(p.counts.initial);
        o.eval = Some(p.counts.eval);
        o.seed = Some(p.seed);
        o.output_scale = Some(p.output_scale);
        r.network.layers = Some(self.layers(&p));
        r.network.seed = Some(self.network.seed.unwrap_or(0));
        r.training = TrainingSection {
            iterations: Some(c.iterations),
            learning_rate: Some(c.learning_rate),
            adam_betas: Some(c.adam_betas),
            adam_eps: Some(c.adam_eps),
            batch_size: Some(match c.batch_mode {
                BatchMode::FullBatch => 0,
                BatchMode::MiniBatch(n) => n,
            }),
            seed: Some(c.seed),
            log_every: Some(c.log_every),
            checkpoint_every: Some(c.checkpoint_every),
            divergence_window: Some(c.divergence_window),
            deterministic: Some(!c.record_time),
        };
        r.weights = WeightsSection {
            residual: Some(p.weights.residual),
            normal_grad: Some(p.weights.normal_grad),
            hessian: Some(p.weights.hessian),
            initial: Some(p.weights.initial),
        };
        Ok(r)
    }
}
