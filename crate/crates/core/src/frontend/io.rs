//! `SPKF1` feature container.
//!
//! Layout (little endian): magic `SPKF1`, `u32` channels, `u32` frames,
//! `f32` frame rate, then `channels * frames` `f32` values row-major. The
//! normalization state and channel centers go to a JSON sidecar.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, FrontendError, NormState};
use crate::Matrix;

pub const FEATURE_MAGIC: &[u8; 5] = b"SPKF1";

#[derive(Serialize, Deserialize)]
struct Sidecar {
    channels: usize,
    frames: usize,
    frame_rate: f64,
    channel_center_hz: Vec<f64>,
    norm_state: Vec<NormState>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_features(path: &Path, f: &FeatureMatrix) -> Result<(), FrontendError> {
    let mut buf = Vec::with_capacity(17 + 4 * f.values.as_slice().len());
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&(f.channels() as u32).to_le_bytes());
    buf.extend_from_slice(&(f.frames() as u32).to_le_bytes());
    buf.extend_from_slice(&(f.frame_rate as f32).to_le_bytes());
    for v in f.values.as_slice() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    std::fs::File::create(path)?.write_all(&buf)?;

    let side = Sidecar {
        channels: f.channels(),
        frames: f.frames(),
        frame_rate: f.frame_rate,
        channel_center_hz: f.channel_center_hz.clone(),
        norm_state: f.norm_state.clone(),
    };
    let json = serde_json::to_string_pretty(&side).map_err(|e| FrontendError::Format(e.to_string()))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix, FrontendError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| FrontendError::Format(format!("{}: {m}", path.display()));
    if bytes.len() < 17 || &bytes[..5] != FEATURE_MAGIC {
        return Err(bad("missing SPKF1 header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let channels = u32_at(5);
    let frames = u32_at(9);
    let frame_rate = f32::from_le_bytes(bytes[13..17].try_into().unwrap()) as f64;
    let payload = &bytes[17..];
    if payload.len() != channels * frames * 4 {
        return Err(bad("payload size does not match header"));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let values = Matrix::from_vec(channels, frames, data).expect("size checked");

    let side: Sidecar = serde_json::from_slice(&std::fs::read(sidecar_path(path))?)
        .map_err(|e| FrontendError::Format(e.to_string()))?;
    if side.channels != channels || side.frames != frames || side.norm_state.len() != channels {
        return Err(bad("sidecar does not match binary header"));
    }
    Ok(FeatureMatrix {
        values,
        channel_center_hz: side.channel_center_hz,
        norm_state: side.norm_state,
        frame_rate,
    })
}
