use std::fs;
use std::path::{Path, PathBuf};

use epsr_core::imaging::{degrade, load_png, read_manifest, save_png, write_manifest, DegradationSpec, ManifestEntry};
use epsr_core::model::load_checkpoint;
use epsr_core::trainer::{
    evaluate, parse_history, BicubicUpsampler, Dataset, EpsrUpsampler, SrModel, TrainState, Trainer,
};
use epsr_core::Epsr;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};
use crate::settings::Settings;

/// PNG inputs from a directory, a single PNG or a manifest (HR column).
pub fn collect_inputs(path: &Path) -> CliResult<Vec<PathBuf>> {
    let is_png = |p: &Path| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_png(p))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(CliError::Config(format!("no PNG files in {}", path.display())));
        }
        Ok(files)
    } else if is_png(path) {
        Ok(vec![path.to_path_buf()])
    } else {
        Ok(read_manifest(path)?.into_iter().map(|e| e.hr).collect())
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Runs `f` on every input, reporting failures per file.
fn for_each_file<T>(inputs: &[PathBuf], mut f: impl FnMut(usize, &Path) -> CliResult<T>) -> CliResult<Vec<T>> {
    let mut done = Vec::new();
    let mut failed = 0;
    for (i, p) in inputs.iter().enumerate() {
        match f(i, p) {
            Ok(v) => done.push(v),
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(CliError::PartialFailure {
            failed,
            total: inputs.len(),
        });
    }
    Ok(done)
}

/// Writes `<stem>_x<s>_<TAG>.png` for every HR input plus a paired manifest.
pub fn degrade_cmd(input: &Path, spec: DegradationSpec, seed: u64, out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let inputs = collect_inputs(input)?;
    let mut entries = Vec::new();
    let result = for_each_file(&inputs, |i, hr_path| {
        let hr = load_png(hr_path)?;
        let lr = degrade(&hr, spec, seed + i as u64)?.to_image();
        let lr_path = out.join(spec.lr_file_name(&stem(hr_path)));
        save_png(&lr, &lr_path)?;
        entries.push(ManifestEntry {
            hr: absolute(hr_path),
            lr: Some(absolute(&lr_path)),
        });
        Ok(())
    });
    write_manifest(out.join("manifest.txt"), &entries)?;
    println!("{spec}: wrote {} LR images to {}", entries.len(), out.display());
    result.map(|_| ())
}

pub struct TrainArgs<'a> {
    pub train: &'a Path,
    pub eval: Option<&'a Path>,
    pub steps: Option<u64>,
    pub resume: Option<&'a Path>,
    pub out: &'a Path,
}

pub fn train_cmd(settings: &Settings, args: TrainArgs<'_>) -> CliResult<()> {
    let spec = settings.degradation_spec()?;
    let seed = settings.train.seed;
    fs::create_dir_all(args.out).map_err(|e| CliError::io(args.out, e))?;
    print!("{settings}");
    fs::write(args.out.join("config.txt"), settings.to_string()).map_err(|e| CliError::io(args.out, e))?;

    let data = Dataset::from_manifest(args.train, spec, seed)?;
    let eval_set = args.eval.map(|p| Dataset::from_manifest(p, spec, seed)).transpose()?;
    let cfg = settings.train.clone();
    let mut trainer = match args.resume {
        Some(path) => {
            let ckpt = path.with_extension("ckpt");
            let (config, params) = load_checkpoint::<f32>(&ckpt)?;
            if config != settings.model {
                log::warn!("checkpoint architecture ({config}) overrides the configured one");
            }
            let state = TrainState::load(path.with_extension("state"))?;
            let history = match fs::read_to_string(args.out.join("history.tsv")) {
                Ok(text) => parse_history(&text)?,
                Err(_) => Vec::new(),
            };
            let kept = history.into_iter().filter(|r| r.step <= state.step).collect();
            Trainer::resume(Epsr::new(config, params)?, &data, cfg.clone(), &state)?.with_history(kept)
        }
        None => {
            let model = Epsr::init(settings.model.clone(), &mut ChaCha8Rng::seed_from_u64(seed))?;
            Trainer::new(model, &data, cfg.clone())?
        }
    };
    if let Some(set) = &eval_set {
        trainer = trainer.with_eval_set(set);
    }
    let done = trainer.step_count();
    let steps = args.steps.unwrap_or_else(|| cfg.total_steps().saturating_sub(done));
    println!("training {} ({} images) for {steps} steps from step {done}", trainer.model().config, data.len());
    trainer.run(steps, Some(args.out))?;
    if let Some(last) = trainer.history().last() {
        println!(
            "step {}: l1 {:.6} gradient {:.6} total {:.6}",
            last.step, last.loss.l1, last.loss.gradient, last.loss.total
        );
    }
    println!("checkpoint: {}", args.out.join("final.ckpt").display());
    Ok(())
}

/// A checkpointed network or the bicubic baseline.
pub enum LoadedModel {
    Bicubic(BicubicUpsampler),
    Net(Epsr<f32>),
}

impl LoadedModel {
    /// `bicubic` or a checkpoint path; `scale` applies to the baseline only.
    pub fn load(spec: &str, scale: u32) -> CliResult<Self> {
        if spec.eq_ignore_ascii_case("bicubic") {
            return Ok(Self::Bicubic(BicubicUpsampler { scale: scale as usize }));
        }
        let (config, params) = load_checkpoint::<f32>(spec)?;
        Ok(Self::Net(Epsr::new(config, params)?))
    }

    pub fn scale(&self) -> u32 {
        match self {
            Self::Bicubic(b) => b.scale as u32,
            Self::Net(n) => n.config.scale,
        }
    }

    pub fn upsampler(&self, ensemble: bool) -> Box<dyn SrModel + '_> {
        match self {
            Self::Bicubic(b) => Box::new(*b),
            Self::Net(net) => Box::new(EpsrUpsampler { net, ensemble }),
        }
    }
}

pub struct EvalArgs<'a> {
    pub model: &'a LoadedModel,
    pub data: &'a Path,
    pub shave: Option<usize>,
    pub ensemble: bool,
    pub out: Option<&'a Path>,
}

pub fn eval_cmd(settings: &Settings, args: EvalArgs<'_>) -> CliResult<()> {
    let spec = DegradationSpec::from_tag(&settings.degradation, args.model.scale())?;
    let seed = settings.train.seed;
    let data = Dataset::from_manifest(args.data, spec, seed)?;
    let shave = args.shave.unwrap_or(spec.scale() as usize);
    let report = evaluate(args.model.upsampler(args.ensemble).as_ref(), &data, seed, shave)?;
    print!("{report}");
    if let Some(out) = args.out {
        fs::write(out, report.to_tsv()).map_err(|e| CliError::io(out, e))?;
    }
    Ok(())
}

/// Super-resolves every input into `out/<stem>.png`.
pub fn sr_cmd(model: &LoadedModel, input: &Path, ensemble: bool, out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let inputs = collect_inputs(input)?;
    let up = model.upsampler(ensemble);
    let written = for_each_file(&inputs, |_, p| {
        let sr = up.super_resolve(&load_png(p)?)?;
        let dst = out.join(format!("{}.png", stem(p)));
        save_png(&sr, &dst)?;
        Ok(dst)
    })?;
    println!("wrote {} images to {}", written.len(), out.display());
    Ok(())
}
