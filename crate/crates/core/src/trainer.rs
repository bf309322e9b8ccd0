//! Adam training loop with logging, checkpointing and a divergence guard.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diffengine::Reduction;
use crate::error::{Error, Result};
use crate::network::{write_atomic, write_values, LineReader, MlpParams};
use crate::residuals::{evaluate_loss, LossBreakdown, PointLoss};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchMode {
    FullBatch,
    /// Points per step, split across point groups in proportion to their
    /// sizes and drawn without replacement.
    MiniBatch(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub batch_mode: BatchMode,
    pub seed: u64,
    pub log_every: usize,
    pub checkpoint_every: usize,
    /// Iterations per divergence-detector window; 0 disables the detector.
    pub divergence_window: usize,
    pub reduction: Reduction,
    /// Record wall-clock seconds in the log. Off for bit-reproducible logs.
    pub record_time: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            iterations: 50_000,
            learning_rate: 1e-3,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            batch_mode: BatchMode::FullBatch,
            seed: 0,
            log_every: 100,
            checkpoint_every: 5_000,
            divergence_window: 2_000,
            reduction: Reduction::Ordered,
            record_time: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let (b1, b2) = self.adam_betas;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1");
        }
        if self.batch_mode == BatchMode::MiniBatch(0) {
            return bad("mini-batch size must be at least 1");
        }
        Ok(())
    }
}

/// First and second moments plus the number of completed steps.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("surfpinn-adam 1\nstep {}\n", self.step);
        write_values(&mut s, "m", &self.m);
        write_values(&mut s, "v", &self.v);
        s
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut r = LineReader::new(text, origin);
        if r.next_line()? != "surfpinn-adam 1" {
            return Err(r.error("expected `surfpinn-adam 1`"));
        }
        let step = r
            .keyed("step")?
            .parse()
            .map_err(|e: std::num::ParseIntError| r.error(e.to_string()))?;
        let m = r.values("m")?;
        let v = r.values("v")?;
        if m.len() != v.len() {
            return Err(r.error("moment vectors differ in length"));
        }
        Ok(AdamState { m, v, step })
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    params: &mut [f64],
    gradient: &[f64],
    state: &mut AdamState,
    config: &TrainingConfig,
) -> Result<()> {
    if params.len() != gradient.len() || state.m.len() != params.len() {
        return Err(Error::ShapeMismatch {
            expected: params.len(),
            found: gradient.len(),
        });
    }
    let (b1, b2) = config.adam_betas;
    let t = state.step + 1;
    let c1 = 1.0 - b1.powf(t as f64);
    let c2 = 1.0 - b2.powf(t as f64);
    let lr = config.learning_rate;
    let mut next = params.to_vec();
    for i in 0..params.len() {
        let g = gradient[i];
        let m = b1 * state.m[i] + (1.0 - b1) * g;
        let v = b2 * state.v[i] + (1.0 - b2) * g * g;
        state.m[i] = m;
        state.v[i] = v;
        next[i] -= lr * (m / c1) / ((v / c2).sqrt() + config.adam_eps);
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteUpdate);
    }
    params.copy_from_slice(&next);
    state.step = t;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRecord {
    pub iteration: usize,
    pub loss: LossBreakdown,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
}

pub const LOG_HEADER: &str = "iter,total,pde,ng,hess,init,seconds";

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(LOG_HEADER);
        s.push('\n');
        for r in &self.records {
            let l = &r.loss;
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{}",
                r.iteration,
                l.total,
                l.pde_residual,
                l.normal_grad_penalty,
                l.hessian_penalty,
                l.initial_misfit,
                r.seconds
            );
        }
        s
    }

    pub fn last(&self) -> Option<&LogRecord> {
        self.records.last()
    }
}

/// Files written into a run directory.
#[derive(Clone, Debug)]
pub struct RunFiles {
    pub dir: PathBuf,
}

impl RunFiles {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(RunFiles { dir })
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.dir.join("checkpoint.txt")
    }

    pub fn optimizer(&self) -> PathBuf {
        self.dir.join("optimizer.txt")
    }

    pub fn log(&self) -> PathBuf {
        self.dir.join("log.csv")
    }

    fn save(&self, params: &MlpParams, state: &AdamState, log: &TrainingLog) -> Result<()> {
        params.save(&self.checkpoint())?;
        write_atomic(&self.optimizer(), &state.to_text())?;
        write_atomic(&self.log(), &log.to_csv())
    }

    /// Parameters and optimizer state of a previous run.
    pub fn resume(&self) -> Result<(MlpParams, AdamState)> {
        let params = MlpParams::load(&self.checkpoint())?;
        let path = self.optimizer();
        let state = AdamState::from_text(&std::fs::read_to_string(&path)?, &path)?;
        if state.m.len() != params.param_count() {
            return Err(Error::ShapeMismatch {
                expected: params.param_count(),
                found: state.m.len(),
            });
        }
        Ok((params, state))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub state: AdamState,
    pub log: TrainingLog,
}

/// Point ids for one step. Each step draws from its own stream so a resumed
/// run sees the same batches as an uninterrupted one.
fn batch_ids(sizes: &[usize], mode: BatchMode, seed: u64, step: u64) -> Option<Vec<usize>> {
    let BatchMode::MiniBatch(batch) = mode else {
        return None;
    };
    let total: usize = sizes.iter().sum();
    if batch >= total {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut ids = Vec::with_capacity(batch);
    let mut offset = 0;
    for &n in sizes {
        if n > 0 {
            let k = ((batch * n) as f64 / total as f64).round().clamp(1.0, n as f64) as usize;
            let mut chosen: Vec<usize> = sample(&mut rng, n, k).into_iter().collect();
            chosen.sort_unstable();
            ids.extend(chosen.into_iter().map(|i| i + offset));
        }
        offset += n;
    }
    Some(ids)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Run `config.iterations` Adam steps on `loss`, starting from `params` and
/// optimizer `state`.
///
/// On a non-finite loss or update, or when the divergence guard trips, the
/// last good parameters are saved (if `files` is given) and the error is
/// returned.
pub fn train_loss<P: PointLoss + ?Sized>(
    loss: &P,
    mut params: MlpParams,
    mut state: AdamState,
    config: &TrainingConfig,
    files: Option<&RunFiles>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if state.m.len() != params.param_count() {
        return Err(Error::ShapeMismatch {
            expected: params.param_count(),
            found: state.m.len(),
        });
    }
    let sizes = loss.group_sizes();
    let start = Instant::now();
    let mut log = TrainingLog::default();
    let mut window: Vec<f64> = Vec::with_capacity(config.divergence_window);
    let mut previous_median: Option<f64> = None;

    let fail = |e: Error, params: &MlpParams, state: &AdamState, log: &TrainingLog| {
        if let Some(f) = files {
            f.save(params, state, log)?;
        }
        Err(e)
    };

    for it in 0..config.iterations {
        let ids = batch_ids(&sizes, config.batch_mode, config.seed, state.step);
        let (breakdown, gradient) =
            match evaluate_loss(loss, &params, ids.as_deref(), true, config.reduction) {
                Ok(r) => r,
                Err(e) => return fail(e, &params, &state, &log),
            };
        if !breakdown.total.is_finite() {
            return fail(Error::NonFiniteLoss(breakdown.total), &params, &state, &log);
        }

        if config.divergence_window > 0 {
            window.push(breakdown.total);
            if window.len() == config.divergence_window {
                let m = median(&window);
                if let Some(prev) = previous_median {
                    if m > 10.0 * prev {
                        let e = Error::Diverged {
                            previous: prev,
                            current: m,
                        };
                        return fail(e, &params, &state, &log);
                    }
                }
                previous_median = Some(m);
                window.clear();
            }
        }

        let last = it + 1 == config.iterations;
        if (it + 1) % config.log_every == 0 || it == 0 || last {
            let seconds = if config.record_time {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            log.records.push(LogRecord {
                iteration: state.step as usize,
                loss: breakdown,
                seconds,
            });
            log::debug!("iter {} loss {:e}", state.step, breakdown.total);
        }

        let before = params.clone();
        if let Err(e) = adam_step(params.as_flat_mut(), gradient.as_slice(), &mut state, config) {
            return fail(e, &before, &state, &log);
        }

        if let Some(f) = files {
            if config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0 && !last {
                f.save(&params, &state, &log)?;
            }
        }
    }
    if let Some(f) = files {
        f.save(&params, &state, &log)?;
    }
    Ok(TrainOutcome { params, state, log })
}
