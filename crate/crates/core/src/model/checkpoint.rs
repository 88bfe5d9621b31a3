//! Binary checkpoint format.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! "EPSR"                      magic
//! u32 version                 1, or 2 when the block modules are not the full set
//! u32 g, C, k, scale          architecture
//! u32 attention               0 = ECA, 1 = CA
//! u32 reduction               CA reduction (0 for ECA)
//! u32 ep_residual             0 = FE, 1 = RECAB
//! u32 modules                 version 2 only: bit 0 edge profile, bit 1 context
//! u32 parameter count
//! per parameter:
//!   u16 name length, UTF-8 name, 4 x u32 shape, f32 values
//! u8 adam flag                0 = absent, 1 = present
//! if present:
//!   u64 step, then per parameter (same order): f32 first moments, f32 second moments
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::config::{Attention, BlockModules, EpResidual, EpsrConfig};
use super::params::ParamStore;
use crate::error::{EpsrError, Result};
use crate::tensor::{Scalar, Shape, Tensor};

pub const MAGIC: &[u8; 4] = b"EPSR";
pub const VERSION: u32 = 1;
pub const VERSION_WITH_MODULES: u32 = 2;

fn ckpt_err(msg: impl Into<String>) -> EpsrError {
    EpsrError::Checkpoint(msg.into())
}

fn write_floats<T: Scalar, W: Write>(w: &mut W, xs: &[T]) -> Result<()> {
    for &x in xs {
        w.write_f32::<LE>(x.as_f64() as f32)?;
    }
    Ok(())
}

fn read_floats<T: Scalar, R: Read>(r: &mut R, len: usize) -> Result<Vec<T>> {
    let mut buf = vec![0f32; len];
    r.read_f32_into::<LE>(&mut buf)?;
    Ok(buf.into_iter().map(|v| T::from_f64(v as f64)).collect())
}

pub fn write_checkpoint<T: Scalar, W: Write>(
    w: &mut W,
    config: &EpsrConfig,
    params: &ParamStore<T>,
    with_adam: bool,
) -> Result<()> {
    let version = if config.modules.is_full() {
        VERSION
    } else {
        VERSION_WITH_MODULES
    };
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(version)?;
    let (att, red) = match config.attention {
        Attention::Eca => (0, 0),
        Attention::Ca { reduction } => (1, reduction as u32),
    };
    let res = match config.ep_residual {
        EpResidual::Fe => 0,
        EpResidual::Recab => 1,
    };
    for v in [
        config.fractal_depth,
        config.channels as u32,
        config.eca_kernel as u32,
        config.scale,
        att,
        red,
        res,
    ] {
        w.write_u32::<LE>(v)?;
    }
    if version == VERSION_WITH_MODULES {
        let bits = u32::from(config.modules.edge_profile) | (u32::from(config.modules.context) << 1);
        w.write_u32::<LE>(bits)?;
    }
    w.write_u32::<LE>(params.len() as u32)?;
    for (name, t) in params.iter() {
        let bytes = name.as_bytes();
        let len = u16::try_from(bytes.len()).map_err(|_| ckpt_err(format!("parameter name too long: {name}")))?;
        w.write_u16::<LE>(len)?;
        w.write_all(bytes)?;
        for d in t.shape().dims() {
            w.write_u32::<LE>(d as u32)?;
        }
        write_floats(w, t.data())?;
    }
    w.write_u8(u8::from(with_adam))?;
    if with_adam {
        w.write_u64::<LE>(params.step())?;
        for e in params.entries() {
            write_floats(w, &e.m)?;
            write_floats(w, &e.v)?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: Read>(r: &mut R) -> Result<(EpsrConfig, ParamStore<T>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ckpt_err("bad magic bytes; not a checkpoint"));
    }
    let version = r.read_u32::<LE>()?;
    if version != VERSION && version != VERSION_WITH_MODULES {
        return Err(ckpt_err(format!("unsupported checkpoint version {version}")));
    }
    let mut f = [0u32; 7];
    for v in &mut f {
        *v = r.read_u32::<LE>()?;
    }
    let attention = match f[4] {
        0 => Attention::Eca,
        1 => Attention::Ca { reduction: f[5] as usize },
        t => return Err(ckpt_err(format!("unknown attention tag {t}"))),
    };
    let ep_residual = match f[6] {
        0 => EpResidual::Fe,
        1 => EpResidual::Recab,
        t => return Err(ckpt_err(format!("unknown residual tag {t}"))),
    };
    let modules = if version == VERSION_WITH_MODULES {
        let bits = r.read_u32::<LE>()?;
        BlockModules {
            edge_profile: bits & 1 != 0,
            context: bits & 2 != 0,
        }
    } else {
        BlockModules::FULL
    };
    let config = EpsrConfig {
        fractal_depth: f[0],
        channels: f[1] as usize,
        eca_kernel: f[2] as usize,
        scale: f[3],
        attention,
        ep_residual,
        modules,
    };
    config.validate()?;

    let count = r.read_u32::<LE>()? as usize;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let len = r.read_u16::<LE>()? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| ckpt_err("parameter name is not UTF-8"))?;
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = r.read_u32::<LE>()? as usize;
        }
        let shape = Shape::from(dims);
        let data = read_floats(r, shape.len())?;
        params.insert(&name, Tensor::new(shape, data)?)?;
    }
    params.check_matches(&config)?;

    match r.read_u8()? {
        0 => {}
        1 => {
            params.set_step(r.read_u64::<LE>()?);
            let layout: Vec<(String, usize)> = params.iter().map(|(n, t)| (n.to_owned(), t.len())).collect();
            for (name, len) in layout {
                let m = read_floats(r, len)?;
                let v = read_floats(r, len)?;
                params.set_moments(&name, m, v)?;
            }
        }
        flag => return Err(ckpt_err(format!("bad optimizer-state flag {flag}"))),
    }
    Ok((config, params))
}

pub fn save_checkpoint<T: Scalar>(
    path: impl AsRef<Path>,
    config: &EpsrConfig,
    params: &ParamStore<T>,
    with_adam: bool,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, config, params, with_adam)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<(EpsrConfig, ParamStore<T>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| ckpt_err(format!("cannot open {}: {e}", path.display())))?;
    read_checkpoint(&mut BufReader::new(file))
}
