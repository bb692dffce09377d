//! "ONWT" weight file: header (dims, per-layer hidden sizes, float width),
//! parameter tensors in layout order, normalization bounds, trailing CRC32.

use super::{Layout, LstmNet, NetworkError};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::Cursor;
use std::path::Path;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"ONWT";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloatWidth {
    F32,
    F64,
}

impl FloatWidth {
    fn flag(self) -> u8 {
        match self {
            FloatWidth::F32 => 4,
            FloatWidth::F64 => 8,
        }
    }
}

/// Full-precision save; use `save_weights_with_width` for f32 storage.
pub fn save_weights(net: &LstmNet, path: &Path) -> Result<(), NetworkError> {
    save_weights_with_width(net, path, FloatWidth::F64)
}

pub fn save_weights_with_width(
    net: &LstmNet,
    path: &Path,
    width: FloatWidth,
) -> Result<(), NetworkError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(WEIGHTS_MAGIC);
    buf.write_u32::<LittleEndian>(WEIGHTS_VERSION)?;
    buf.write_u32::<LittleEndian>(net.dim() as u32)?;
    buf.write_u32::<LittleEndian>(net.hidden_sizes().len() as u32)?;
    for &h in net.hidden_sizes() {
        buf.write_u32::<LittleEndian>(h as u32)?;
    }
    buf.push(width.flag());
    // the flat parameter vector is already laid out in declared tensor
    // order: per layer wx, wh, b, then the output map
    for &p in net.params() {
        match width {
            FloatWidth::F32 => buf.write_f32::<LittleEndian>(p as f32)?,
            FloatWidth::F64 => buf.write_f64::<LittleEndian>(p)?,
        }
    }
    for b in net.bounds() {
        buf.write_f64::<LittleEndian>(b[0])?;
        buf.write_f64::<LittleEndian>(b[1])?;
    }
    let crc = crc32fast::hash(&buf);
    buf.write_u32::<LittleEndian>(crc)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<LstmNet, NetworkError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 4 {
        return Err(NetworkError::ShapeMismatch("file shorter than checksum".into()));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(NetworkError::ChecksumMismatch);
    }

    let mut r = Cursor::new(body);
    let mut magic = [0u8; 4];
    std::io::Read::read_exact(&mut r, &mut magic)?;
    if &magic != WEIGHTS_MAGIC {
        return Err(NetworkError::BadMagic);
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != WEIGHTS_VERSION {
        return Err(NetworkError::BadVersion(version));
    }
    let dim = r.read_u32::<LittleEndian>()? as usize;
    let layer_count = r.read_u32::<LittleEndian>()? as usize;
    if dim == 0 || layer_count == 0 {
        return Err(NetworkError::ShapeMismatch(format!(
            "d={dim}, layers={layer_count}: both must be positive"
        )));
    }
    let mut hidden = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let h = r.read_u32::<LittleEndian>()? as usize;
        if h == 0 {
            return Err(NetworkError::ShapeMismatch("hidden size 0".into()));
        }
        hidden.push(h);
    }
    let width_flag = r.read_u8()?;
    let width = match width_flag {
        4 => FloatWidth::F32,
        8 => FloatWidth::F64,
        w => return Err(NetworkError::BadFloatWidth(w)),
    };

    let layout = Layout::new(2 * dim, &hidden, dim);
    let expected = r.position() as usize + layout.total * width_flag as usize + 2 * dim * 8;
    if body.len() != expected {
        return Err(NetworkError::ShapeMismatch(format!(
            "payload is {} bytes but d={dim}, layers={hidden:?} at width {width_flag} requires {}",
            body.len(),
            expected
        )));
    }
    let mut params = Vec::with_capacity(layout.total);
    for _ in 0..layout.total {
        params.push(match width {
            FloatWidth::F32 => r.read_f32::<LittleEndian>()? as f64,
            FloatWidth::F64 => r.read_f64::<LittleEndian>()?,
        });
    }
    let mut norm_lo = Vec::with_capacity(dim);
    let mut norm_hi = Vec::with_capacity(dim);
    for axis in 0..dim {
        let lo = r.read_f64::<LittleEndian>()?;
        let hi = r.read_f64::<LittleEndian>()?;
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(NetworkError::ShapeMismatch(format!(
                "normalization bounds for axis {axis} are invalid: [{lo}, {hi}]"
            )));
        }
        norm_lo.push(lo);
        norm_hi.push(hi);
    }
    Ok(LstmNet::from_parts(dim, hidden, params, norm_lo, norm_hi))
}
