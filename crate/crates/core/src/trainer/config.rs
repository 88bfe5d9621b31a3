use crate::error::{EpsrError, Result};

/// Optimisation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr0: f64,
    /// Epochs between learning-rate halvings.
    pub lr_halving_period: u64,
    /// Optimizer steps per epoch.
    pub steps_per_epoch: u64,
    pub epochs: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// LR patch side; the HR patch side is `lr_patch * scale`.
    pub lr_patch: usize,
    pub seed: u64,
    /// Steps between evaluations; 0 disables.
    pub eval_interval: u64,
    /// Steps between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: u64,
    /// Abort when the loss exceeds this multiple of the running median.
    pub divergence_factor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            lr0: 1e-4,
            lr_halving_period: 200,
            steps_per_epoch: 1000,
            epochs: 1000,
            beta1: 0.9,
            beta2: 0.99,
            adam_eps: 1e-8,
            lr_patch: 48,
            seed: 0,
            eval_interval: 0,
            checkpoint_interval: 0,
            divergence_factor: 1e3,
        }
    }
}

impl TrainConfig {
    pub fn total_steps(&self) -> u64 {
        self.epochs * self.steps_per_epoch
    }

    pub fn epoch_of(&self, step: u64) -> u64 {
        step / self.steps_per_epoch
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EpsrError::Config(m.into()));
        if self.batch_size == 0 || self.lr_patch == 0 {
            return bad("batch size and patch size must be positive");
        }
        if self.steps_per_epoch == 0 || self.epochs == 0 || self.lr_halving_period == 0 {
            return bad("epochs, steps per epoch and the halving period must be positive");
        }
        if !(self.lr0 > 0.0 && self.adam_eps > 0.0 && self.divergence_factor > 1.0) {
            return bad("learning rate and epsilon must be positive, divergence factor above 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Step schedule: `lr0 * 0.5^floor(epoch / period)`.
pub fn lr_at(epoch: u64, config: &TrainConfig) -> f64 {
    let halvings = epoch / config.lr_halving_period;
    config.lr0 * 0.5f64.powi(halvings.min(1100) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_boundaries() {
        let c = TrainConfig::default();
        assert_eq!(lr_at(0, &c), 1e-4);
        assert_eq!(lr_at(199, &c), 1e-4);
        assert_eq!(lr_at(200, &c), 5e-5);
        assert_eq!(lr_at(400, &c), 2.5e-5);
        let mut prev = f64::INFINITY;
        for e in 0..1000 {
            let lr = lr_at(e, &c);
            assert!(lr <= prev);
            prev = lr;
        }
    }

    #[test]
    fn epochs_are_step_blocks() {
        let c = TrainConfig::default();
        assert_eq!(c.epoch_of(999), 0);
        assert_eq!(c.epoch_of(1000), 1);
        assert_eq!(c.total_steps(), 1_000_000);
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let c = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            beta2: 1.0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
