//! The `CTEN1` container: magic `CTEN`, version byte, order byte, `order`
//! little-endian `u32` dims, then interleaved little-endian `f64` pairs
//! `(re, im)` in column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{ComplexTensor, C64};

pub const CTEN_MAGIC: &[u8; 4] = b"CTEN";
pub const CTEN_VERSION: u8 = 1;

pub fn write_cten<W: Write>(t: &ComplexTensor, mut w: W) -> Result<()> {
    let order = u8::try_from(t.order())
        .map_err(|_| Error::Format(format!("order {} does not fit in one byte", t.order())))?;
    w.write_all(CTEN_MAGIC)?;
    w.write_all(&[CTEN_VERSION, order])?;
    for &d in t.dims() {
        let d = u32::try_from(d).map_err(|_| Error::Format(format!("dim {d} does not fit in u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for z in t.data() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_cten<R: Read>(mut r: R) -> Result<ComplexTensor> {
    let mut header = [0u8; 6];
    r.read_exact(&mut header).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &header[..4] != CTEN_MAGIC {
        return Err(Error::Format("bad magic, expected CTEN".into()));
    }
    if header[4] != CTEN_VERSION {
        return Err(Error::Format(format!("unsupported version {}", header[4])));
    }
    let order = header[5] as usize;
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated dims: {e}")))?;
        dims.push(u32::from_le_bytes(b) as usize);
    }
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|_| order > 0 && !dims.contains(&0))
        .ok_or_else(|| Error::Format(format!("invalid dims {dims:?}")))?;
    let mut data = Vec::with_capacity(total);
    let mut pair = [0u8; 16];
    for k in 0..total {
        r.read_exact(&mut pair)
            .map_err(|e| Error::Format(format!("truncated payload at element {k}: {e}")))?;
        let re = f64::from_le_bytes(pair[..8].try_into().unwrap());
        let im = f64::from_le_bytes(pair[8..].try_into().unwrap());
        data.push(C64::new(re, im));
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    ComplexTensor::new(dims, data)
}

pub fn write_cten_file(t: &ComplexTensor, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_cten(t, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_cten_file(path: impl AsRef<Path>) -> Result<ComplexTensor> {
    read_cten(BufReader::new(File::open(path)?))
}
