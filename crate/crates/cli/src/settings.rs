//! `key = value` run configuration.

use std::fmt;
use std::path::Path;

use epsr_core::imaging::DegradationSpec;
use epsr_core::model::{Attention, BlockModules, EpResidual};
use epsr_core::trainer::TrainConfig;
use epsr_core::EpsrConfig;

use crate::error::{CliError, CliResult};

/// Everything a run needs besides file paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub model: EpsrConfig,
    pub train: TrainConfig,
    /// `BI`, `BD`, `BD-decimate` or `DN`; combined with `model.scale`.
    pub degradation: String,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            model: EpsrConfig::default(),
            train: TrainConfig::default(),
            degradation: "BI".into(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn attention_name(a: Attention) -> String {
    match a {
        Attention::Eca => "eca".into(),
        Attention::Ca { reduction } => format!("ca{reduction}"),
    }
}

impl Settings {
    /// Defaults, then the file (if any), then `overrides` in order.
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut s = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            s.apply_text(&text)?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override `{o}` is not key=value")))?;
            s.set(k.trim(), v.trim())?;
        }
        s.model.validate()?;
        s.train.validate()?;
        s.degradation_spec()?;
        Ok(s)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let (m, t) = (&mut self.model, &mut self.train);
        match key {
            "fractal_depth" => m.fractal_depth = parse(key, value)?,
            "channels" => m.channels = parse(key, value)?,
            "eca_kernel" => m.eca_kernel = parse(key, value)?,
            "scale" => m.scale = parse(key, value)?,
            "attention" => {
                m.attention = match value.to_ascii_lowercase().as_str() {
                    "eca" => Attention::Eca,
                    v => match v.strip_prefix("ca") {
                        Some(r) => Attention::Ca {
                            reduction: parse(key, r.trim_start_matches(':'))?,
                        },
                        None => return Err(CliError::Config(format!("unknown attention `{value}`"))),
                    },
                }
            }
            "ep_residual" => {
                m.ep_residual = match value.to_ascii_lowercase().as_str() {
                    "fe" => EpResidual::Fe,
                    "recab" => EpResidual::Recab,
                    _ => return Err(CliError::Config(format!("unknown ep_residual `{value}`"))),
                }
            }
            "modules" => m.modules = value.parse::<BlockModules>()?,
            "degradation" => self.degradation = value.to_owned(),
            "batch_size" => t.batch_size = parse(key, value)?,
            "lr" | "lr0" => t.lr0 = parse(key, value)?,
            "lr_halving_period" => t.lr_halving_period = parse(key, value)?,
            "steps_per_epoch" => t.steps_per_epoch = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "beta1" => t.beta1 = parse(key, value)?,
            "beta2" => t.beta2 = parse(key, value)?,
            "adam_eps" => t.adam_eps = parse(key, value)?,
            "lr_patch" => t.lr_patch = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "eval_interval" => t.eval_interval = parse(key, value)?,
            "checkpoint_interval" => t.checkpoint_interval = parse(key, value)?,
            "divergence_factor" => t.divergence_factor = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    pub fn degradation_spec(&self) -> CliResult<DegradationSpec> {
        Ok(DegradationSpec::from_tag(&self.degradation, self.model.scale)?)
    }
}

/// Echo in the same format the parser reads.
impl fmt::Display for Settings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, t) = (&self.model, &self.train);
        let ep = match m.ep_residual {
            EpResidual::Fe => "fe",
            EpResidual::Recab => "recab",
        };
        let rows: [(&str, String); 22] = [
            ("fractal_depth", m.fractal_depth.to_string()),
            ("channels", m.channels.to_string()),
            ("eca_kernel", m.eca_kernel.to_string()),
            ("scale", m.scale.to_string()),
            ("attention", attention_name(m.attention)),
            ("ep_residual", ep.into()),
            ("modules", m.modules.tag().into()),
            ("degradation", self.degradation.clone()),
            ("batch_size", t.batch_size.to_string()),
            ("lr0", t.lr0.to_string()),
            ("lr_halving_period", t.lr_halving_period.to_string()),
            ("steps_per_epoch", t.steps_per_epoch.to_string()),
            ("epochs", t.epochs.to_string()),
            ("beta1", t.beta1.to_string()),
            ("beta2", t.beta2.to_string()),
            ("adam_eps", t.adam_eps.to_string()),
            ("lr_patch", t.lr_patch.to_string()),
            ("seed", t.seed.to_string()),
            ("eval_interval", t.eval_interval.to_string()),
            ("checkpoint_interval", t.checkpoint_interval.to_string()),
            ("divergence_factor", t.divergence_factor.to_string()),
            ("total_steps", t.total_steps().to_string()),
        ];
        for (k, v) in rows {
            if k == "total_steps" {
                writeln!(f, "# {k} = {v}")?;
            } else {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let s = Settings::resolve(
            None,
            &[
                "attention=ca16".into(),
                "ep_residual=recab".into(),
                "modules=recab+cn".into(),
                "lr=0.0005".into(),
                "scale=3".into(),
                "degradation=DN".into(),
            ],
        )
        .unwrap();
        let mut back = Settings::default();
        back.apply_text(&s.to_string()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.degradation_spec().unwrap(), DegradationSpec::Dn);
    }

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "# tiny\nchannels = 8\nfractal_depth = 1 # two blocks\nseed = 4\n").unwrap();
        let s = Settings::resolve(Some(&p), &["seed=9".into()]).unwrap();
        assert_eq!((s.model.channels, s.model.fractal_depth, s.train.seed), (8, 1, 9));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Settings::resolve(None, &["nope=1".into()]).is_err());
        assert!(Settings::resolve(None, &["channels=x".into()]).is_err());
        assert!(Settings::resolve(None, &["channels".into()]).is_err());
        assert!(Settings::resolve(None, &["degradation=BD".into()]).is_err());
        assert!(Settings::resolve(None, &["eca_kernel=4".into()]).is_err());
        let mut s = Settings::default();
        assert!(s.apply_text("channels 8").is_err());
    }
}
