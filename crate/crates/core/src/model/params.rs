use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{Attention, EpsrConfig};
use crate::error::{dim_err, EpsrError, Result};
use crate::tensor::{Scalar, Shape, Tensor, Tape};

/// How a parameter is initialised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Normal with standard deviation `gain / sqrt(fan_in)`.
    FanInNormal { gain: f64 },
    Zeros,
    Constant(f64),
}

/// Name, shape and initialiser of one learnable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Shape,
    pub init: Init,
}

impl ParamSpec {
    fn new(name: impl Into<String>, shape: [usize; 4], init: Init) -> Self {
        Self {
            name: name.into(),
            shape: shape.into(),
            init,
        }
    }
}

/// Gain for a conv whose output goes through a ReLU.
const RELU_GAIN: f64 = std::f64::consts::SQRT_2;
/// Gain for a linear conv.
const LINEAR_GAIN: f64 = 1.0;
/// Gain for the last conv of a residual branch, so that stacked residual sums
/// start close to the identity instead of compounding their variance.
const RESIDUAL_GAIN: f64 = 0.1;

fn conv_specs(out: &mut Vec<ParamSpec>, prefix: &str, cout: usize, cin: usize, k: usize, gain: f64) {
    out.push(ParamSpec::new(
        format!("{prefix}.weight"),
        [cout, cin, k, k],
        Init::FanInNormal { gain },
    ));
    out.push(ParamSpec::new(format!("{prefix}.bias"), [1, 1, 1, cout], Init::Zeros));
}

/// Parameters owned by residual block `d`.
pub fn block_param_specs(config: &EpsrConfig, d: usize) -> Vec<ParamSpec> {
    let c = config.channels;
    let p = format!("reeb.{d}");
    let mut v = Vec::new();
    conv_specs(&mut v, &format!("{p}.fe.0"), c, c, 3, RELU_GAIN);
    conv_specs(&mut v, &format!("{p}.fe.1"), c, c, 3, RESIDUAL_GAIN);
    match config.attention {
        Attention::Eca => {
            let k = config.eca_kernel;
            v.push(ParamSpec::new(
                format!("{p}.eca.kernel"),
                [1, 1, 1, k],
                Init::Constant(1.0 / k as f64),
            ));
        }
        Attention::Ca { reduction } => {
            conv_specs(&mut v, &format!("{p}.ca.0"), c / reduction, c, 1, RELU_GAIN);
            conv_specs(&mut v, &format!("{p}.ca.1"), c, c / reduction, 1, LINEAR_GAIN);
        }
    }
    v.push(ParamSpec::new(format!("{p}.fuse.w1"), [1, 1, 1, 1], Init::Constant(1.0)));
    v.push(ParamSpec::new(format!("{p}.fuse.w2"), [1, 1, 1, 1], Init::Constant(1.0)));
    if config.modules.edge_profile {
        conv_specs(&mut v, &format!("{p}.ep.image"), 3, c, 3, LINEAR_GAIN);
        conv_specs(&mut v, &format!("{p}.ep.guide"), c, 6, 3, RESIDUAL_GAIN);
    }
    if config.modules.context {
        for i in 0..4 {
            let gain = if i < 3 { RELU_GAIN } else { RESIDUAL_GAIN };
            conv_specs(&mut v, &format!("{p}.cn.{i}"), c, c, 3, gain);
        }
    }
    v
}

/// Every learnable tensor of the network, in storage order.
pub fn param_specs(config: &EpsrConfig) -> Vec<ParamSpec> {
    let c = config.channels;
    let mut v = Vec::new();
    conv_specs(&mut v, "head", c, 3, 3, LINEAR_GAIN);
    for d in 0..config.block_count() {
        v.extend(block_param_specs(config, d));
    }
    for level in 1..=config.fractal_depth {
        for i in 0..(1usize << (config.fractal_depth - level)) {
            conv_specs(&mut v, &format!("fsc.{level}.{i}"), c, c, 3, RESIDUAL_GAIN);
        }
    }
    for (i, factor) in upscale_stages(config.scale).into_iter().enumerate() {
        conv_specs(&mut v, &format!("up.{i}"), c * factor * factor, c, 3, LINEAR_GAIN);
    }
    conv_specs(&mut v, "tail", 3, c, 3, LINEAR_GAIN);
    v
}

/// Sub-pixel stages used for a scale: x2 and x3 take one, x4 takes two x2 stages.
pub fn upscale_stages(scale: u32) -> Vec<usize> {
    match scale {
        4 => vec![2, 2],
        s => vec![s as usize],
    }
}

/// Element count of a parameter list.
pub fn census(specs: &[ParamSpec]) -> usize {
    specs.iter().map(|s| s.shape.len()).sum()
}

/// Weight entries (biases excluded) of one block's attention module.
pub fn attention_weight_entries(config: &EpsrConfig) -> usize {
    block_param_specs(config, 0)
        .iter()
        .filter(|s| s.name.contains(".eca.") || (s.name.contains(".ca.") && s.name.ends_with(".weight")))
        .map(|s| s.shape.len())
        .sum()
}

/// Attention entries of one block including biases.
pub fn attention_total_entries(config: &EpsrConfig) -> usize {
    block_param_specs(config, 0)
        .iter()
        .filter(|s| s.name.contains(".eca.") || s.name.contains(".ca."))
        .map(|s| s.shape.len())
        .sum()
}

#[derive(Debug, Clone)]
pub(crate) struct Entry<T: Scalar> {
    pub name: String,
    pub tensor: Tensor<T>,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

/// Ordered, uniquely named learnable tensors plus Adam moments.
#[derive(Debug, Clone)]
pub struct ParamStore<T: Scalar> {
    entries: Vec<Entry<T>>,
    index: HashMap<String, usize>,
    step: u64,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            index: HashMap::new(),
            step: 0,
        }
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allocates and initialises every parameter of `config`.
    pub fn init(config: &EpsrConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut store = Self::new();
        for spec in param_specs(config) {
            let t = init_tensor(&spec, rng);
            store.insert(&spec.name, t)?;
        }
        Ok(store)
    }

    /// Allocates every parameter of `config` filled with `value`, except the
    /// fusion weights which are set to 1.
    pub fn constant(config: &EpsrConfig, value: f64) -> Result<Self> {
        config.validate()?;
        let mut store = Self::new();
        for spec in param_specs(config) {
            let v = if spec.name.contains(".fuse.") { 1.0 } else { value };
            store.insert(&spec.name, Tensor::full(spec.shape, T::from_f64(v)))?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor<T>) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(EpsrError::Config(format!("duplicate parameter name `{name}`")));
        }
        let len = tensor.len();
        self.index.insert(name.to_owned(), self.entries.len());
        self.entries.push(Entry {
            name: name.to_owned(),
            tensor,
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
        });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i].tensor)
            .ok_or_else(|| EpsrError::UnknownParameter(name.to_owned()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.entries[i].tensor),
            None => Err(EpsrError::UnknownParameter(name.to_owned())),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|e| (e.name.as_str(), &e.tensor))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.entries.iter_mut().map(|e| (e.name.as_str(), &mut e.tensor))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    /// Total number of learnable scalars.
    pub fn count_parameters(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Entry<T>] {
        &mut self.entries
    }

    pub(crate) fn entries(&self) -> &[Entry<T>] {
        &self.entries
    }

    pub(crate) fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    pub fn clear_grads(&mut self) {
        self.entries.iter_mut().for_each(|e| e.tensor.clear_grad());
    }

    /// Adds the gradients of every named leaf on `tape` into this store.
    pub fn accumulate_from(&mut self, tape: &Tape<T>) -> Result<()> {
        for (name, grad) in tape.param_grads() {
            let Some(grad) = grad else { continue };
            let i = *self
                .index
                .get(name)
                .ok_or_else(|| EpsrError::UnknownParameter(name.to_owned()))?;
            self.entries[i].tensor.accumulate_grad(grad)?;
        }
        Ok(())
    }

    /// Adam first/second moments of a parameter.
    pub fn moments(&self, name: &str) -> Result<(&[T], &[T])> {
        let &i = self
            .index
            .get(name)
            .ok_or_else(|| EpsrError::UnknownParameter(name.to_owned()))?;
        Ok((&self.entries[i].m, &self.entries[i].v))
    }

    pub(crate) fn set_moments(&mut self, name: &str, m: Vec<T>, v: Vec<T>) -> Result<()> {
        let &i = self
            .index
            .get(name)
            .ok_or_else(|| EpsrError::UnknownParameter(name.to_owned()))?;
        let e = &mut self.entries[i];
        if m.len() != e.tensor.len() || v.len() != e.tensor.len() {
            return dim_err(format!("moment length mismatch for `{name}`"));
        }
        e.m = m;
        e.v = v;
        Ok(())
    }

    /// Converts element type; Adam moments and step are carried over.
    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        let conv = |xs: &[T]| xs.iter().map(|x| U::from_f64(x.as_f64())).collect::<Vec<U>>();
        ParamStore {
            entries: self
                .entries
                .iter()
                .map(|e| Entry {
                    name: e.name.clone(),
                    tensor: e.tensor.cast(),
                    m: conv(&e.m),
                    v: conv(&e.v),
                })
                .collect(),
            index: self.index.clone(),
            step: self.step,
        }
    }

    /// Checks that this store holds exactly the parameters `config` needs.
    pub fn check_matches(&self, config: &EpsrConfig) -> Result<()> {
        let specs = param_specs(config);
        if specs.len() != self.len() {
            return Err(EpsrError::Config(format!(
                "parameter store has {} tensors, configuration needs {}",
                self.len(),
                specs.len()
            )));
        }
        for spec in specs {
            let t = self.get(&spec.name)?;
            if t.shape() != spec.shape {
                return dim_err(format!("parameter `{}` has shape {}, expected {}", spec.name, t.shape(), spec.shape));
            }
        }
        Ok(())
    }
}

fn init_tensor<T: Scalar>(spec: &ParamSpec, rng: &mut impl Rng) -> Tensor<T> {
    match spec.init {
        Init::Zeros => Tensor::zeros(spec.shape),
        Init::Constant(v) => Tensor::full(spec.shape, T::from_f64(v)),
        Init::FanInNormal { gain } => {
            let fan_in = (spec.shape.c * spec.shape.h * spec.shape.w).max(1);
            let std = gain / (fan_in as f64).sqrt();
            let data = (0..spec.shape.len())
                .map(|_| T::from_f64(std * rng.sample::<f64, _>(StandardNormal)))
                .collect();
            Tensor::new(spec.shape, data).expect("spec shape and data length agree")
        }
    }
}
