//! Binary model checkpoints: a versioned header with the model config and
//! dataset dimensions, the parameter matrices in declaration order as
//! row-major little-endian f32, and an optional tagged regressor section.
//! Two loads of the same file always yield bit-identical predictions.

use std::io::{Read, Write};
use std::path::Path;

use crate::graph::LabelMode;
use crate::ndmath::{Matrix, Param, Real};
use crate::value::ValueRegressor;

use super::{Aggregator, SageConfig, SageParams};

const MAGIC: &[u8; 8] = b"SAGECKPT";
const REGRESSOR_TAG: &[u8; 4] = b"VREG";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    Format(String),
}

fn bad(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Format(msg.into())
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u32(&mut self, v: u32) -> Result<(), CheckpointError> {
        self.0.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    fn u8(&mut self, v: u8) -> Result<(), CheckpointError> {
        self.0.write_all(&[v])?;
        Ok(())
    }

    fn f64(&mut self, v: f64) -> Result<(), CheckpointError> {
        self.0.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    fn matrix(&mut self, m: &Matrix) -> Result<(), CheckpointError> {
        self.u32(m.rows() as u32)?;
        self.u32(m.cols() as u32)?;
        for &v in m.data() {
            self.0.write_all(&(v as f32).to_le_bytes())?;
        }
        Ok(())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        let mut b = [0u8; 4];
        self.0.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        let mut b = [0u8; 1];
        self.0.read_exact(&mut b)?;
        Ok(b[0])
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        let mut b = [0u8; 8];
        self.0.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    fn matrix(&mut self) -> Result<Matrix, CheckpointError> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut b = [0u8; 4];
        for _ in 0..rows * cols {
            self.0.read_exact(&mut b)?;
            data.push(f32::from_le_bytes(b) as Real);
        }
        Ok(Matrix::from_vec(rows, cols, data))
    }
}

/// Write a model (and optionally its value regressor) to `path`.
// `Real as f64/f32` casts are real conversions under the `f32` feature.
#[allow(clippy::unnecessary_cast)]
pub fn save_checkpoint(
    params: &SageParams,
    regressor: Option<&ValueRegressor>,
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    let file = std::fs::File::create(path)?;
    let mut w = Writer(std::io::BufWriter::new(file));
    w.0.write_all(MAGIC)?;
    w.u32(VERSION)?;

    let cfg = params.config();
    w.u32(cfg.layers as u32)?;
    w.u32(cfg.hidden_dim as u32)?;
    w.u8(match cfg.aggregator {
        Aggregator::MeanConcat => 0,
        Aggregator::MeanAdd => 1,
    })?;
    w.u8(cfg.aux_heads as u8)?;
    w.u32(cfg.fanouts.len() as u32)?;
    for &n in &cfg.fanouts {
        w.u32(n as u32)?;
    }
    w.f64(cfg.learning_rate as f64)?;
    w.u32(cfg.batch_size as u32)?;
    w.u32(cfg.epochs as u32)?;

    w.u32(params.feature_dim() as u32)?;
    w.u32(params.label_count() as u32)?;
    w.u8(match params.label_mode() {
        LabelMode::Single => 0,
        LabelMode::Multi => 1,
    })?;

    let mats = params.params();
    w.u32(mats.len() as u32)?;
    for p in mats {
        w.matrix(&p.value)?;
    }

    match regressor {
        Some(reg) => {
            w.u8(1)?;
            w.0.write_all(REGRESSOR_TAG)?;
            w.u32(reg.feature_dim() as u32)?;
            let (wts, b) = reg.weights();
            for &v in wts {
                w.0.write_all(&(v as f32).to_le_bytes())?;
            }
            w.0.write_all(&(b as f32).to_le_bytes())?;
        }
        None => w.u8(0)?,
    }
    w.0.flush()?;
    Ok(())
}

/// Load a checkpoint. Parameters come back at 32-bit precision promoted to
/// the working precision; optimizer state starts fresh.
pub fn load_checkpoint(
    path: impl AsRef<Path>,
) -> Result<(SageParams, Option<ValueRegressor>), CheckpointError> {
    let file = std::fs::File::open(path)?;
    let mut r = Reader(std::io::BufReader::new(file));
    let mut magic = [0u8; 8];
    r.0.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("magic bytes do not match"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }

    let layers = r.u32()? as usize;
    let hidden_dim = r.u32()? as usize;
    let aggregator = match r.u8()? {
        0 => Aggregator::MeanConcat,
        1 => Aggregator::MeanAdd,
        other => return Err(bad(format!("unknown aggregator tag {other}"))),
    };
    let aux_heads = r.u8()? != 0;
    let fanout_count = r.u32()? as usize;
    let mut fanouts = Vec::with_capacity(fanout_count);
    for _ in 0..fanout_count {
        fanouts.push(r.u32()? as usize);
    }
    let learning_rate = r.f64()? as Real;
    let batch_size = r.u32()? as usize;
    let epochs = r.u32()? as usize;
    let config = SageConfig {
        layers,
        hidden_dim,
        aggregator,
        fanouts,
        learning_rate,
        batch_size,
        epochs,
        aux_heads,
    };

    let feature_dim = r.u32()? as usize;
    let label_count = r.u32()? as usize;
    let label_mode = match r.u8()? {
        0 => LabelMode::Single,
        1 => LabelMode::Multi,
        other => return Err(bad(format!("unknown label mode tag {other}"))),
    };

    let mut params = SageParams::init(
        &config,
        feature_dim,
        label_count,
        label_mode,
        crate::rng::RngStream::new(0),
    )
    .map_err(|e| bad(e.to_string()))?;
    let count = r.u32()? as usize;
    {
        let mut slots = params.params_mut();
        if count != slots.len() {
            return Err(bad(format!(
                "expected {} parameter matrices, found {count}",
                slots.len()
            )));
        }
        for slot in slots.iter_mut() {
            let m = r.matrix()?;
            if m.rows() != slot.value.rows() || m.cols() != slot.value.cols() {
                return Err(bad(format!(
                    "parameter shape {}x{} does not match model shape {}x{}",
                    m.rows(),
                    m.cols(),
                    slot.value.rows(),
                    slot.value.cols()
                )));
            }
            **slot = Param::new(m);
        }
    }

    let regressor = match r.u8()? {
        0 => None,
        1 => {
            let mut tag = [0u8; 4];
            r.0.read_exact(&mut tag)?;
            if &tag != REGRESSOR_TAG {
                return Err(bad("regressor section tag missing"));
            }
            let m = r.u32()? as usize;
            let mut wts = Vec::with_capacity(2 * m);
            let mut b4 = [0u8; 4];
            for _ in 0..2 * m {
                r.0.read_exact(&mut b4)?;
                wts.push(f32::from_le_bytes(b4) as Real);
            }
            r.0.read_exact(&mut b4)?;
            let b = f32::from_le_bytes(b4) as Real;
            Some(ValueRegressor::with_weights(wts, b))
        }
        other => return Err(bad(format!("unknown regressor flag {other}"))),
    };

    Ok((params, regressor))
}
