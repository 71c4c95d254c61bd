//! Binary checkpoint format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "HCPQNET\0"
//! version    u32
//! echo_len   u32, then echo_len bytes of UTF-8 config text
//! activation u32 tag
//! speed      f64 speed normalization
//! n_layers   u32, then (in_dim u32, out_dim u32) per layer
//! params     per layer: in_dim*out_dim weights then out_dim biases, f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::network::{Activation, Dense, QNetwork};
use super::{QError, Result};

const MAGIC: &[u8; 8] = b"HCPQNET\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: QNetwork,
    /// Config text recorded at save time.
    pub config_echo: String,
}

pub fn write_checkpoint<W: Write>(mut w: W, net: &QNetwork, config_echo: &str) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(config_echo.len() as u32).to_le_bytes())?;
    w.write_all(config_echo.as_bytes())?;
    w.write_all(&net.activation().tag().to_le_bytes())?;
    w.write_all(&net.speed_scale().to_le_bytes())?;
    w.write_all(&(net.layers().len() as u32).to_le_bytes())?;
    for l in net.layers() {
        w.write_all(&(l.in_dim() as u32).to_le_bytes())?;
        w.write_all(&(l.out_dim() as u32).to_le_bytes())?;
    }
    for l in net.layers() {
        for p in l.weights().iter().chain(l.bias()) {
            w.write_all(&p.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(QError::Checkpoint("not a network checkpoint".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(QError::Checkpoint(format!("unsupported version {version}")));
    }
    let echo_len = read_u32(&mut r)? as usize;
    let mut echo = vec![0u8; echo_len];
    r.read_exact(&mut echo)?;
    let config_echo = String::from_utf8(echo).map_err(|e| QError::Checkpoint(e.to_string()))?;
    let tag = read_u32(&mut r)?;
    let activation =
        Activation::from_tag(tag).ok_or_else(|| QError::Checkpoint(format!("unknown activation tag {tag}")))?;
    let speed_scale = read_f64(&mut r)?;
    let n_layers = read_u32(&mut r)? as usize;
    if n_layers == 0 || n_layers > 64 {
        return Err(QError::Checkpoint(format!("implausible layer count {n_layers}")));
    }
    let dims = (0..n_layers)
        .map(|_| Ok((read_u32(&mut r)? as usize, read_u32(&mut r)? as usize)))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(n_layers);
    for (in_dim, out_dim) in dims {
        let mut layer = Dense::zeros(in_dim, out_dim);
        for p in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            *p = read_f64(&mut r)?;
        }
        layers.push(layer);
    }
    let network = QNetwork::from_layers(layers, activation, speed_scale);
    if !network.is_finite() {
        return Err(QError::Checkpoint("non-finite parameters".into()));
    }
    Ok(Checkpoint { network, config_echo })
}

pub fn save_checkpoint(path: &Path, net: &QNetwork, config_echo: &str) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), net, config_echo)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path)
        .map_err(|e| QError::Checkpoint(format!("cannot open {}: {e}", path.display())))?;
    read_checkpoint(BufReader::new(file))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
