use std::fmt;
use std::str::FromStr;

use crate::error::{EpsrError, Result};

/// Channel attention flavour used inside each residual block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attention {
    /// 1-D convolution of size `k` over the pooled channel descriptor.
    Eca,
    /// Two 1x1 convolutions with a `C / reduction` bottleneck.
    Ca { reduction: usize },
}

/// Which feature the edge-profile branch is added back onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpResidual {
    /// The pre-attention feature-extraction output.
    #[default]
    Fe,
    /// The fused attention-block output.
    Recab,
}

/// Optional sub-modules of a residual edge enhance block, for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockModules {
    pub edge_profile: bool,
    pub context: bool,
}

impl BlockModules {
    pub const FULL: Self = Self {
        edge_profile: true,
        context: true,
    };

    pub fn is_full(self) -> bool {
        self == Self::FULL
    }

    pub fn tag(self) -> &'static str {
        match (self.edge_profile, self.context) {
            (true, true) => "recab+ep+cn",
            (true, false) => "recab+ep",
            (false, true) => "recab+cn",
            (false, false) => "recab",
        }
    }
}

impl Default for BlockModules {
    fn default() -> Self {
        Self::FULL
    }
}

impl FromStr for BlockModules {
    type Err = EpsrError;

    fn from_str(s: &str) -> Result<Self> {
        let mut m = Self {
            edge_profile: false,
            context: false,
        };
        for part in s.split('+') {
            match part.trim().to_ascii_lowercase().as_str() {
                "recab" => {}
                "ep" => m.edge_profile = true,
                "cn" => m.context = true,
                other => return Err(EpsrError::Config(format!("unknown block module `{other}`"))),
            }
        }
        Ok(m)
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsrConfig {
    /// Fractal depth `g`; the network holds `2^g` residual blocks.
    pub fractal_depth: u32,
    pub channels: usize,
    pub eca_kernel: usize,
    pub scale: u32,
    pub attention: Attention,
    pub ep_residual: EpResidual,
    pub modules: BlockModules,
}

impl Default for EpsrConfig {
    /// Full-size network: depth 7 (128 blocks), 64 channels, ECA kernel 9.
    fn default() -> Self {
        Self {
            fractal_depth: 7,
            channels: 64,
            eca_kernel: 9,
            scale: 2,
            attention: Attention::Eca,
            ep_residual: EpResidual::Fe,
            modules: BlockModules::FULL,
        }
    }
}

pub const MAX_FRACTAL_DEPTH: u32 = 16;

impl EpsrConfig {
    /// Small network for tests and desk-scale experiments.
    pub fn tiny(fractal_depth: u32, channels: usize, scale: u32) -> Self {
        Self {
            fractal_depth,
            channels,
            eca_kernel: 3,
            scale,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EpsrError::Config(m));
        if self.fractal_depth > MAX_FRACTAL_DEPTH {
            return bad(format!("fractal depth {} exceeds {MAX_FRACTAL_DEPTH}", self.fractal_depth));
        }
        if self.channels == 0 {
            return bad("channel width must be positive".into());
        }
        if self.eca_kernel == 0 || self.eca_kernel % 2 == 0 {
            return bad(format!("ECA kernel size must be odd, got {}", self.eca_kernel));
        }
        if !matches!(self.scale, 2..=4) {
            return bad(format!("unsupported scale {}; expected 2, 3 or 4", self.scale));
        }
        if let Attention::Ca { reduction } = self.attention {
            if reduction == 0 || self.channels % reduction != 0 {
                return bad(format!(
                    "CA reduction {reduction} must divide the channel width {}",
                    self.channels
                ));
            }
        }
        Ok(())
    }

    /// Number of residual edge enhance blocks, `2^g`.
    pub fn block_count(&self) -> usize {
        1usize << self.fractal_depth
    }
}

/// Block count for a fractal depth.
pub fn count_blocks(config: &EpsrConfig) -> usize {
    config.block_count()
}

impl fmt::Display for EpsrConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let att = match self.attention {
            Attention::Eca => format!("eca(k={})", self.eca_kernel),
            Attention::Ca { reduction } => format!("ca(r={reduction})"),
        };
        write!(
            f,
            "g={} C={} x{} {} blocks={} residual={:?} modules={}",
            self.fractal_depth,
            self.channels,
            self.scale,
            att,
            self.block_count(),
            self.ep_residual,
            self.modules.tag()
        )
    }
}
