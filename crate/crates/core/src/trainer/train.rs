use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamParams};
use super::config::{lr_at, TrainConfig};
use super::data::{sample_batch, Dataset};
use super::eval::{evaluate, EpsrUpsampler};
use crate::error::{EpsrError, Result};
use crate::metrics::{total_loss, LossReport};
use crate::model::{epsr_forward, save_checkpoint, Epsr};
use crate::tensor::{Graph, Tape};

const MEDIAN_WINDOW: usize = 100;
const MEDIAN_MIN_SAMPLES: usize = 10;

/// One line of the loss history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    /// Optimizer step count after the update.
    pub step: u64,
    pub loss: LossReport,
    pub lr: f64,
}

impl fmt::Display for HistoryRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.step, self.loss.l1, self.loss.gradient, self.loss.total, self.lr
        )
    }
}

pub fn format_history(rows: &[HistoryRow]) -> String {
    rows.iter().map(|r| format!("{r}\n")).collect()
}

/// Parses the output of [`format_history`].
pub fn parse_history(text: &str) -> Result<Vec<HistoryRow>> {
    let bad = |line: &str| EpsrError::Checkpoint(format!("malformed history line `{line}`"));
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 {
                return Err(bad(line));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(line));
            Ok(HistoryRow {
                step: f[0].parse().map_err(|_| bad(line))?,
                loss: LossReport {
                    l1: num(1)?,
                    gradient: num(2)?,
                    total: num(3)?,
                },
                lr: num(4)?,
            })
        })
        .collect()
}

/// Everything besides the checkpoint needed to continue a run exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub step: u64,
    pub seed: u64,
    pub word_pos: u128,
    pub recent_losses: Vec<f64>,
}

impl TrainState {
    pub fn to_text(&self) -> String {
        let recent: Vec<String> = self.recent_losses.iter().map(|v| v.to_string()).collect();
        format!(
            "step={}\nseed={}\nword_pos={}\nrecent={}\n",
            self.step,
            self.seed,
            self.word_pos,
            recent.join(",")
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: String| EpsrError::Checkpoint(format!("training state: {m}"));
        let mut state = Self {
            step: 0,
            seed: 0,
            word_pos: 0,
            recent_losses: Vec::new(),
        };
        let mut seen = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("malformed line `{line}`")))?;
            let num = |v: &str| v.trim().parse::<u128>().map_err(|e| bad(format!("{k}: {e}")));
            match k.trim() {
                "step" => state.step = num(v)? as u64,
                "seed" => state.seed = num(v)? as u64,
                "word_pos" => state.word_pos = num(v)?,
                "recent" => {
                    state.recent_losses = v
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<f64>().map_err(|e| bad(format!("recent: {e}"))))
                        .collect::<Result<_>>()?;
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
            seen += 1;
        }
        if seen < 3 {
            return Err(bad("missing keys".into()));
        }
        Ok(state)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Evaluation result recorded during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub step: u64,
    pub psnr: f64,
    pub ssim: f64,
}

/// Sample, forward, loss, backward, Adam; repeated.
pub struct Trainer<'a> {
    model: Epsr<f32>,
    data: &'a Dataset,
    config: TrainConfig,
    rng: ChaCha8Rng,
    history: Vec<HistoryRow>,
    recent: VecDeque<f64>,
    eval_set: Option<&'a Dataset>,
    evals: Vec<EvalPoint>,
}

impl<'a> Trainer<'a> {
    pub fn new(model: Epsr<f32>, data: &'a Dataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if model.config.scale as usize != data.scale() {
            return Err(EpsrError::Config(format!(
                "model scale x{} does not match dataset x{}",
                model.config.scale,
                data.scale()
            )));
        }
        let hp = config.lr_patch * data.scale();
        if !data.images.iter().any(|i| i.hr.width() >= hp && i.hr.height() >= hp) {
            return Err(EpsrError::Config(format!(
                "HR patch {hp}x{hp} is larger than every training image"
            )));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            model,
            data,
            config,
            rng,
            history: Vec::new(),
            recent: VecDeque::new(),
            eval_set: None,
            evals: Vec::new(),
        })
    }

    /// Continues from a checkpointed model (with Adam moments) and its state.
    pub fn resume(model: Epsr<f32>, data: &'a Dataset, config: TrainConfig, state: &TrainState) -> Result<Self> {
        if model.params.step() != state.step {
            return Err(EpsrError::Checkpoint(format!(
                "checkpoint is at step {} but the training state at {}",
                model.params.step(),
                state.step
            )));
        }
        let mut t = Self::new(model, data, config)?;
        t.rng = ChaCha8Rng::seed_from_u64(state.seed);
        t.rng.set_word_pos(state.word_pos);
        t.recent = state.recent_losses.iter().copied().collect();
        Ok(t)
    }

    /// Rows from an earlier part of the run, kept in the saved history.
    pub fn with_history(mut self, rows: Vec<HistoryRow>) -> Self {
        self.history = rows;
        self
    }

    pub fn with_eval_set(mut self, set: &'a Dataset) -> Self {
        self.eval_set = Some(set);
        self
    }

    pub fn model(&self) -> &Epsr<f32> {
        &self.model
    }

    pub fn into_model(self) -> Epsr<f32> {
        self.model
    }

    pub fn history(&self) -> &[HistoryRow] {
        &self.history
    }

    pub fn evals(&self) -> &[EvalPoint] {
        &self.evals
    }

    pub fn step_count(&self) -> u64 {
        self.model.params.step()
    }

    pub fn state(&self) -> TrainState {
        TrainState {
            step: self.step_count(),
            seed: self.config.seed,
            word_pos: self.rng.get_word_pos(),
            recent_losses: self.recent.iter().copied().collect(),
        }
    }

    fn running_median(&self) -> Option<f64> {
        if self.recent.len() < MEDIAN_MIN_SAMPLES {
            return None;
        }
        let mut v: Vec<f64> = self.recent.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Some(v[v.len() / 2])
    }

    fn check_divergence(&self, loss: &LossReport) -> Result<()> {
        let step = self.step_count() + 1;
        if !loss.total.is_finite() {
            return Err(EpsrError::Divergence {
                step,
                reason: format!("non-finite loss (l1 {}, gradient {})", loss.l1, loss.gradient),
            });
        }
        if let Some(median) = self.running_median() {
            if loss.total > self.config.divergence_factor * median {
                return Err(EpsrError::Divergence {
                    step,
                    reason: format!("loss {} exceeds {}x the running median {median}", loss.total, self.config.divergence_factor),
                });
            }
        }
        Ok(())
    }

    /// One optimizer step.
    pub fn step(&mut self) -> Result<HistoryRow> {
        let lr = lr_at(self.config.epoch_of(self.step_count()), &self.config);
        let batch = sample_batch::<f32, _>(self.data, self.config.lr_patch, self.config.batch_size, &mut self.rng)?;
        let mut tape = Tape::new();
        let x = tape.constant(batch.lr);
        let hr = tape.constant(batch.hr);
        let sr = epsr_forward(&mut tape, &self.model.params, &self.model.config, &x)?;
        let (total, loss) = total_loss(&mut tape, &sr, &hr)?;
        self.check_divergence(&loss)?;
        tape.backward(total)?;
        self.model.params.accumulate_from(&tape)?;
        drop(tape);
        let hp = AdamParams {
            beta1: self.config.beta1,
            beta2: self.config.beta2,
            eps: self.config.adam_eps,
        };
        adam_step(&mut self.model.params, lr, hp)?;
        if self.recent.len() == MEDIAN_WINDOW {
            self.recent.pop_front();
        }
        self.recent.push_back(loss.total);
        let row = HistoryRow {
            step: self.step_count(),
            loss,
            lr,
        };
        self.history.push(row);
        Ok(row)
    }

    fn evaluate_now(&mut self) -> Result<()> {
        let Some(set) = self.eval_set else { return Ok(()) };
        let model = EpsrUpsampler {
            net: &self.model,
            ensemble: false,
        };
        let report = evaluate(&model, set, self.config.seed, set.scale())?;
        let point = EvalPoint {
            step: self.step_count(),
            psnr: report.mean_psnr(),
            ssim: report.mean_ssim(),
        };
        log::info!("step {}: {} {:.4} dB / {:.4}", point.step, set.name, point.psnr, point.ssim);
        self.evals.push(point);
        Ok(())
    }

    /// Writes `<name>.ckpt` (with Adam state), `<name>.state`, the loss
    /// history and any evaluation log into `dir`.
    pub fn save(&self, dir: &Path, name: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        save_checkpoint(dir.join(format!("{name}.ckpt")), &self.model.config, &self.model.params, true)?;
        self.state().save(dir.join(format!("{name}.state")))?;
        fs::write(dir.join("history.tsv"), format_history(&self.history))?;
        if !self.evals.is_empty() {
            let rows: String = self
                .evals
                .iter()
                .map(|e| format!("{}\t{}\t{}\n", e.step, e.psnr, e.ssim))
                .collect();
            fs::write(dir.join("eval.tsv"), rows)?;
        }
        Ok(())
    }

    /// Runs `steps` more steps. With a run directory, checkpoints are written
    /// every `checkpoint_interval` steps, at the end (`final`) and before
    /// returning a divergence error (`diverged`).
    pub fn run(&mut self, steps: u64, run_dir: Option<&Path>) -> Result<()> {
        for _ in 0..steps {
            if let Err(e) = self.step() {
                if let (EpsrError::Divergence { .. }, Some(dir)) = (&e, run_dir) {
                    self.save(dir, "diverged")?;
                }
                return Err(e);
            }
            let n = self.step_count();
            if self.config.eval_interval > 0 && n % self.config.eval_interval == 0 {
                self.evaluate_now()?;
            }
            if let Some(dir) = run_dir {
                if self.config.checkpoint_interval > 0 && n % self.config.checkpoint_interval == 0 {
                    self.save(dir, &format!("step{n}"))?;
                }
            }
            if n % 100 == 0 {
                log::debug!("step {n}: total {}", self.history.last().map_or(f64::NAN, |r| r.loss.total));
            }
        }
        if let Some(dir) = run_dir {
            self.save(dir, "final")?;
        }
        Ok(())
    }
}

/// Result of a complete run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Epsr<f32>,
    pub history: Vec<HistoryRow>,
}

/// Trains for `config.total_steps()` steps.
pub fn train(model: Epsr<f32>, data: &Dataset, config: &TrainConfig, run_dir: Option<&Path>) -> Result<TrainOutcome> {
    let mut t = Trainer::new(model, data, config.clone())?;
    t.run(config.total_steps(), run_dir)?;
    let history = t.history.clone();
    Ok(TrainOutcome {
        model: t.into_model(),
        history,
    })
}
