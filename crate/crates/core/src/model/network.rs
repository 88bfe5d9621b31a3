//! Forward pass of the network, written once against [`Graph`].

use super::config::{Attention, EpResidual, EpsrConfig};
use super::params::{upscale_stages, ParamStore};
use crate::error::{dim_err, EpsrError, Result};
use crate::tensor::{Dihedral, Eager, Graph, Scalar, Shape, Tensor};

fn param<T: Scalar, G: Graph<T>>(g: &mut G, store: &ParamStore<T>, name: &str) -> Result<G::Node> {
    Ok(g.param(name, store.get(name)?))
}

/// `prefix.weight` / `prefix.bias` convolution with stride 1.
fn conv<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    prefix: &str,
    x: &G::Node,
    padding: usize,
    dilation: usize,
) -> Result<G::Node> {
    let w = param(g, store, &format!("{prefix}.weight"))?;
    let b = param(g, store, &format!("{prefix}.bias"))?;
    g.conv2d(x, &w, Some(&b), padding, dilation)
}

fn expect_channels<T: Scalar, G: Graph<T>>(g: &G, x: &G::Node, c: usize, what: &str) -> Result<()> {
    let s = g.shape(x);
    if s.c != c {
        return dim_err(format!("{what} expects {c} channels, got input {s}"));
    }
    Ok(())
}

/// Shallow feature extraction: one 3x3 convolution from RGB to `C` channels.
pub fn shallow_extract<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    img: &G::Node,
) -> Result<G::Node> {
    expect_channels(g, img, 3, "shallow feature extraction")?;
    conv(g, store, "head", img, 1, 1)
}

/// conv3x3 -> ReLU -> conv3x3, no normalisation.
pub fn recab_feature_extract<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    x: &G::Node,
    d: usize,
) -> Result<G::Node> {
    let h = conv(g, store, &format!("reeb.{d}.fe.0"), x, 1, 1)?;
    let h = g.relu(&h)?;
    conv(g, store, &format!("reeb.{d}.fe.1"), &h, 1, 1)
}

/// GAP -> channel 1-D convolution -> sigmoid.
pub fn eca_weights<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    feature: &G::Node,
    d: usize,
) -> Result<G::Node> {
    let pooled = g.global_avg_pool(feature)?;
    let k = param(g, store, &format!("reeb.{d}.eca.kernel"))?;
    let mixed = g.conv1d_channel(&pooled, &k)?;
    g.sigmoid(&mixed)
}

/// GAP -> 1x1 conv C->C/r -> ReLU -> 1x1 conv C/r->C -> sigmoid.
pub fn ca_weights<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    feature: &G::Node,
    d: usize,
) -> Result<G::Node> {
    let pooled = g.global_avg_pool(feature)?;
    let h = conv(g, store, &format!("reeb.{d}.ca.0"), &pooled, 0, 1)?;
    let h = g.relu(&h)?;
    let h = conv(g, store, &format!("reeb.{d}.ca.1"), &h, 0, 1)?;
    g.sigmoid(&h)
}

/// `(relu(w1) * input + relu(w2) * rescaled) / (1e-5 + relu(w1) + relu(w2))`.
pub fn weighted_residual_fuse<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    input: &G::Node,
    rescaled: &G::Node,
    d: usize,
) -> Result<G::Node> {
    let w1 = param(g, store, &format!("reeb.{d}.fuse.w1"))?;
    let w2 = param(g, store, &format!("reeb.{d}.fuse.w2"))?;
    g.weighted_fuse(input, rescaled, &w1, &w2)
}

/// Intermediates of the edge-profile module, exposed for inspection.
pub struct EdgeProfile<N> {
    pub image: N,
    pub blurred: N,
    pub mask: N,
    pub output: N,
}

/// Edge-profile module.
///
/// Renders a 3-channel image from the attention output, subtracts its 3x3
/// box blur, keeps the positive part as an edge mask, concatenates image and
/// mask, and maps the six channels back to `C` on top of a residual.
pub fn ep_forward_detailed<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    config: &EpsrConfig,
    f_recab: &G::Node,
    f_fe: &G::Node,
    d: usize,
) -> Result<EdgeProfile<G::Node>> {
    if g.shape(f_recab) != g.shape(f_fe) {
        return dim_err(format!(
            "edge profile inputs differ: {} vs {}",
            g.shape(f_recab),
            g.shape(f_fe)
        ));
    }
    let image = conv(g, store, &format!("reeb.{d}.ep.image"), f_recab, 1, 1)?;
    let blurred = g.avg_pool3x3(&image)?;
    let diff = g.subtract(&image, &blurred)?;
    let mask = g.relu(&diff)?;
    let guided = g.concat_channels(&image, &mask)?;
    let branch = conv(g, store, &format!("reeb.{d}.ep.guide"), &guided, 1, 1)?;
    let residual = match config.ep_residual {
        EpResidual::Fe => f_fe,
        EpResidual::Recab => f_recab,
    };
    let output = g.add(residual, &branch)?;
    Ok(EdgeProfile {
        image,
        blurred,
        mask,
        output,
    })
}

pub fn ep_forward<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    config: &EpsrConfig,
    f_recab: &G::Node,
    f_fe: &G::Node,
    d: usize,
) -> Result<G::Node> {
    Ok(ep_forward_detailed(g, store, config, f_recab, f_fe, d)?.output)
}

/// Dilations of the context network, applied in order.
pub const CONTEXT_DILATIONS: [usize; 4] = [1, 2, 4, 1];

/// Context network: `x + D1(D4(D2(D1(x))))`, ReLU after the first three.
pub fn cn_forward<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    x: &G::Node,
    d: usize,
) -> Result<G::Node> {
    let mut h = x.clone();
    for (i, &dil) in CONTEXT_DILATIONS.iter().enumerate() {
        h = conv(g, store, &format!("reeb.{d}.cn.{i}"), &h, dil, dil)?;
        if i + 1 < CONTEXT_DILATIONS.len() {
            h = g.relu(&h)?;
        }
    }
    g.add(x, &h)
}

/// One residual edge enhance block: attention block, edge profile, context.
pub fn reeb_forward<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    config: &EpsrConfig,
    x: &G::Node,
    d: usize,
) -> Result<G::Node> {
    expect_channels(g, x, config.channels, "residual block")?;
    let fe = recab_feature_extract(g, store, x, d)?;
    let weights = match config.attention {
        Attention::Eca => eca_weights(g, store, &fe, d)?,
        Attention::Ca { .. } => ca_weights(g, store, &fe, d)?,
    };
    let rescaled = g.scale_channels(&fe, &weights)?;
    let recab = weighted_residual_fuse(g, store, x, &rescaled, d)?;
    let ep = if config.modules.edge_profile {
        ep_forward(g, store, config, &recab, &fe, d)?
    } else {
        recab
    };
    if config.modules.context {
        cn_forward(g, store, &ep, d)
    } else {
        Ok(ep)
    }
}

/// Fractal group at `level` starting at block index `first_block`.
///
/// Level 0 is a single block; level `k` is `x + conv(H_{k-1}(H_{k-1}(x)))`
/// where each inner group and each `conv` owns its parameters.
pub fn fractal_forward<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    config: &EpsrConfig,
    x: &G::Node,
    level: u32,
) -> Result<G::Node> {
    if level > config.fractal_depth {
        return Err(EpsrError::Config(format!(
            "fractal level {level} exceeds configured depth {}",
            config.fractal_depth
        )));
    }
    fractal_group(g, store, config, x, level, 0)
}

fn fractal_group<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    config: &EpsrConfig,
    x: &G::Node,
    level: u32,
    first_block: usize,
) -> Result<G::Node> {
    if level == 0 {
        return reeb_forward(g, store, config, x, first_block);
    }
    let half = 1usize << (level - 1);
    let a = fractal_group(g, store, config, x, level - 1, first_block)?;
    let b = fractal_group(g, store, config, &a, level - 1, first_block + half)?;
    let idx = first_block >> level;
    let c = conv(g, store, &format!("fsc.{level}.{idx}"), &b, 1, 1)?;
    g.add(x, &c)
}

/// Sub-pixel upscaling by 2, 3 or 4.
pub fn upscale<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    x: &G::Node,
    scale: u32,
) -> Result<G::Node> {
    if !matches!(scale, 2..=4) {
        return Err(EpsrError::Config(format!("unsupported scale {scale}")));
    }
    let mut h = x.clone();
    for (i, factor) in upscale_stages(scale).into_iter().enumerate() {
        h = conv(g, store, &format!("up.{i}"), &h, 1, 1)?;
        h = g.pixel_shuffle(&h, factor)?;
    }
    Ok(h)
}

/// Full network from a `[0, 1]` LR batch to an unclamped SR batch.
pub fn epsr_forward<T: Scalar, G: Graph<T>>(
    g: &mut G,
    store: &ParamStore<T>,
    config: &EpsrConfig,
    img_lr: &G::Node,
) -> Result<G::Node> {
    let f0 = shallow_extract(g, store, img_lr)?;
    let deep = fractal_forward(g, store, config, &f0, config.fractal_depth)?;
    let up = upscale(g, store, &deep, config.scale)?;
    conv(g, store, "tail", &up, 1, 1)
}

/// A configuration together with its parameters.
#[derive(Debug, Clone)]
pub struct Epsr<T: Scalar> {
    pub config: EpsrConfig,
    pub params: ParamStore<T>,
}

impl<T: Scalar> Epsr<T> {
    pub fn new(config: EpsrConfig, params: ParamStore<T>) -> Result<Self> {
        config.validate()?;
        params.check_matches(&config)?;
        Ok(Self { config, params })
    }

    pub fn init(config: EpsrConfig, rng: &mut impl rand::Rng) -> Result<Self> {
        let params = ParamStore::init(&config, rng)?;
        Ok(Self { config, params })
    }

    /// Inference on an `(N, 3, H, W)` batch without recording.
    pub fn forward(&self, img_lr: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Eager::new();
        let x = g.constant(img_lr.clone());
        let y = epsr_forward(&mut g, &self.params, &self.config, &x)?;
        Ok(std::rc::Rc::try_unwrap(y).unwrap_or_else(|rc| (*rc).clone()))
    }

    /// Average of the forward pass over all eight dihedral transforms.
    pub fn self_ensemble(&self, img_lr: &Tensor<T>) -> Result<Tensor<T>> {
        self_ensemble(&self.params, &self.config, img_lr)
    }

    pub fn output_shape(&self, input: Shape) -> Shape {
        let s = self.config.scale as usize;
        Shape::new(input.n, 3, input.h * s, input.w * s)
    }
}

/// Runs the network on the eight dihedral transforms of the input, undoes
/// each transform on the output and averages the results.
pub fn self_ensemble<T: Scalar>(store: &ParamStore<T>, config: &EpsrConfig, img_lr: &Tensor<T>) -> Result<Tensor<T>> {
    let mut acc: Option<Vec<f64>> = None;
    let mut shape = Shape::default();
    for d in Dihedral::all() {
        let mut g = Eager::new();
        let x = g.constant(d.apply(img_lr));
        let y = epsr_forward(&mut g, store, config, &x)?;
        let back = d.inverse().apply(&y);
        shape = back.shape();
        match &mut acc {
            Some(a) => a.iter_mut().zip(back.data()).for_each(|(a, v)| *a += v.as_f64()),
            None => acc = Some(back.to_f64_vec()),
        }
    }
    let acc = acc.expect("eight transforms were evaluated");
    Tensor::new(shape, acc.into_iter().map(|v| T::from_f64(v / 8.0)).collect())
}

/// Total learnable scalars in a store.
pub fn count_parameters<T: Scalar>(params: &ParamStore<T>) -> usize {
    params.count_parameters()
}
