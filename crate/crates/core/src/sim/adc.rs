//! Raw ADC capture files: little-endian `i16` I/Q pairs plus a JSON sidecar.
//!
//! Byte layout of sample `s` of receiver `rx` in transmit slot `tx` of chirp
//! loop `k` in frame `f` (every index 0-based):
//! `((((f·K + k)·n_tx + tx)·n_rx + rx)·S + s)·4`, where `K` is chirps per
//! frame and `S` samples per chirp. Transmitters and receivers are laid out on
//! `[azimuth, elevation]` grids (default: all along azimuth), and the virtual
//! element of `(tx, rx)` sits at azimuth index `tx_a·rx_grid[0] + rx_a` and
//! elevation index `tx_e·rx_grid[1] + rx_e`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ComplexTensor, C64};

/// Sidecar describing one capture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcSidecar {
    pub version: u32,
    pub n_tx: usize,
    pub n_rx: usize,
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
    pub frame_index: usize,
    /// `"IQ"` or `"QI"`.
    pub iq_order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_grid: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_grid: Option<[usize; 2]>,
    /// Integer counts per unit amplitude; samples are divided by it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IqOrder {
    Iq,
    Qi,
}

impl IqOrder {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "IQ" => Some(IqOrder::Iq),
            "QI" => Some(IqOrder::Qi),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            IqOrder::Iq => "IQ",
            IqOrder::Qi => "QI",
        }
    }
}

fn ingest_err(offset: u64, message: impl Into<String>) -> Error {
    Error::Ingest { offset, message: message.into() }
}

struct Geometry {
    tx: [usize; 2],
    rx: [usize; 2],
}

impl AdcSidecar {
    fn geometry(&self) -> Result<Geometry> {
        let tx = self.tx_grid.unwrap_or([self.n_tx, 1]);
        let rx = self.rx_grid.unwrap_or([self.n_rx, 1]);
        if tx[0] * tx[1] != self.n_tx || rx[0] * rx[1] != self.n_rx {
            return Err(ingest_err(0, format!("grids {tx:?}/{rx:?} do not match n_tx={} n_rx={}", self.n_tx, self.n_rx)));
        }
        Ok(Geometry { tx, rx })
    }

    /// Tensor dims `[I_1, I_2, I_3, I_4]` this sidecar produces.
    pub fn dims(&self) -> Result<[usize; 4]> {
        let g = self.geometry()?;
        Ok([g.tx[0] * g.rx[0], g.tx[1] * g.rx[1], self.samples_per_chirp, self.chirps_per_frame])
    }

    fn frame_bytes(&self) -> usize {
        self.chirps_per_frame * self.n_tx * self.n_rx * self.samples_per_chirp * 4
    }
}

fn virtual_index(g: &Geometry, tx: usize, rx: usize) -> (usize, usize) {
    let (ta, te) = (tx % g.tx[0], tx / g.tx[0]);
    let (ra, re) = (rx % g.rx[0], rx / g.rx[0]);
    (ta * g.rx[0] + ra, te * g.rx[1] + re)
}

/// Decodes one frame from an in-memory capture.
pub fn ingest_adc_bytes(raw: &[u8], sidecar: &AdcSidecar) -> Result<ComplexTensor> {
    if sidecar.version != 1 {
        return Err(ingest_err(0, format!("unsupported sidecar version {}", sidecar.version)));
    }
    let order = IqOrder::parse(&sidecar.iq_order)
        .ok_or_else(|| ingest_err(0, format!("unknown iq_order {:?}", sidecar.iq_order)))?;
    if [sidecar.n_tx, sidecar.n_rx, sidecar.samples_per_chirp, sidecar.chirps_per_frame].contains(&0) {
        return Err(ingest_err(0, "sidecar counts must be positive"));
    }
    let geo = sidecar.geometry()?;
    let dims = sidecar.dims()?;
    let scale = sidecar.scale.unwrap_or(1.0);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ingest_err(0, format!("invalid scale {scale}")));
    }
    if raw.len() % 4 != 0 {
        return Err(ingest_err((raw.len() - raw.len() % 4) as u64, "file ends inside an I/Q pair"));
    }
    let frame_bytes = sidecar.frame_bytes();
    let start = sidecar.frame_index * frame_bytes;
    if start + frame_bytes > raw.len() {
        return Err(ingest_err(
            raw.len() as u64,
            format!("truncated capture: frame {} needs bytes up to {}", sidecar.frame_index, start + frame_bytes),
        ));
    }
    let mut out = ComplexTensor::zeros(&dims);
    let s_len = sidecar.samples_per_chirp;
    let buf = out.data_mut();
    let mut off = start;
    for k in 0..sidecar.chirps_per_frame {
        for tx in 0..sidecar.n_tx {
            for rx in 0..sidecar.n_rx {
                let (i1, i2) = virtual_index(&geo, tx, rx);
                for s in 0..s_len {
                    let a = i16::from_le_bytes([raw[off], raw[off + 1]]) as f64;
                    let b = i16::from_le_bytes([raw[off + 2], raw[off + 3]]) as f64;
                    let (i, q) = match order {
                        IqOrder::Iq => (a, b),
                        IqOrder::Qi => (b, a),
                    };
                    let flat = i1 + dims[0] * (i2 + dims[1] * (s + s_len * k));
                    buf[flat] = C64::new(i / scale, q / scale);
                    off += 4;
                }
            }
        }
    }
    Ok(out)
}

/// Reads a capture file and its sidecar.
pub fn ingest_adc(raw_path: impl AsRef<Path>, sidecar_path: impl AsRef<Path>) -> Result<ComplexTensor> {
    let sidecar: AdcSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
    let raw = std::fs::read(raw_path)?;
    ingest_adc_bytes(&raw, &sidecar)
}

/// Encodes a 4-order tensor as a single-frame capture. The scale is chosen so
/// the largest component maps to ±32767. Returns the bytes and the sidecar.
pub fn export_adc(
    t: &ComplexTensor,
    tx_grid: [usize; 2],
    rx_grid: [usize; 2],
    iq_order: IqOrder,
) -> Result<(Vec<u8>, AdcSidecar)> {
    if t.order() != 4 {
        return Err(Error::invalid("ADC export needs a 4-order tensor"));
    }
    let dims = t.dims();
    if tx_grid[0] * rx_grid[0] != dims[0] || tx_grid[1] * rx_grid[1] != dims[1] {
        return Err(Error::shape(format!("grids {tx_grid:?}/{rx_grid:?} do not tile dims {dims:?}")));
    }
    let peak = t.data().iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
    let scale = if peak > 0.0 { 32767.0 / peak } else { 1.0 };
    let sidecar = AdcSidecar {
        version: 1,
        n_tx: tx_grid[0] * tx_grid[1],
        n_rx: rx_grid[0] * rx_grid[1],
        samples_per_chirp: dims[2],
        chirps_per_frame: dims[3],
        frame_index: 0,
        iq_order: iq_order.as_str().to_string(),
        tx_grid: Some(tx_grid),
        rx_grid: Some(rx_grid),
        scale: Some(scale),
    };
    let geo = sidecar.geometry()?;
    let quant = |x: f64| (x * scale).round().clamp(-32768.0, 32767.0) as i16;
    let mut bytes = Vec::with_capacity(sidecar.frame_bytes());
    for k in 0..dims[3] {
        for tx in 0..sidecar.n_tx {
            for rx in 0..sidecar.n_rx {
                let (i1, i2) = virtual_index(&geo, tx, rx);
                for s in 0..dims[2] {
                    let z = t.get(&[i1, i2, s, k]);
                    let (a, b) = match iq_order {
                        IqOrder::Iq => (z.re, z.im),
                        IqOrder::Qi => (z.im, z.re),
                    };
                    bytes.extend_from_slice(&quant(a).to_le_bytes());
                    bytes.extend_from_slice(&quant(b).to_le_bytes());
                }
            }
        }
    }
    Ok((bytes, sidecar))
}
