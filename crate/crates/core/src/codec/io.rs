//! `SPKS1` spike container.
//!
//! Layout (little endian):
//!
//! ```text
//! magic        5 bytes  "SPKS1"
//! codec_id     u8       0 = SF, 1 = MW, 2 = TAE
//! channels     u32
//! frames       u32
//! params       f64 threshold_rel, u32 window, f64 tae_gamma,
//!              f64 tae_tmin_rel, f64 tae_tmax_rel
//! payload      ceil(channels * frames / 4) bytes, 2 bits per entry,
//!              row-major, entry i in bits 2*(i%4).. of byte i/4;
//!              00 = 0, 01 = +1, 10 = -1
//! side info    channels x (f32 initial, f32 threshold)
//! ```
//!
//! Side information is stored at single precision, so a decoded file
//! reproduces the in-memory reconstruction only to about 1e-7.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Codec, CodecConfig, CodecError, SideInfo, SpikeTrain};

pub const SPIKE_MAGIC: &[u8; 5] = b"SPKS1";

const HEADER_LEN: usize = 5 + 1 + 4 + 4 + (8 + 4 + 8 + 8 + 8);

/// Exact size in bytes of a serialized `channels x frames` train.
pub fn serialized_len(channels: usize, frames: usize) -> usize {
    HEADER_LEN + (channels * frames).div_ceil(4) + channels * 8
}

fn code(s: i8) -> u8 {
    match s {
        1 => 0b01,
        -1 => 0b10,
        _ => 0b00,
    }
}

pub fn spikes_to_bytes(st: &SpikeTrain) -> Vec<u8> {
    let mut buf = Vec::with_capacity(serialized_len(st.channels(), st.frames()));
    buf.extend_from_slice(SPIKE_MAGIC);
    buf.push(st.codec.id());
    buf.extend_from_slice(&(st.channels() as u32).to_le_bytes());
    buf.extend_from_slice(&(st.frames() as u32).to_le_bytes());
    let p = &st.params;
    buf.extend_from_slice(&p.threshold_rel.to_le_bytes());
    buf.extend_from_slice(&(p.window as u32).to_le_bytes());
    buf.extend_from_slice(&p.tae_gamma.to_le_bytes());
    buf.extend_from_slice(&p.tae_tmin_rel.to_le_bytes());
    buf.extend_from_slice(&p.tae_tmax_rel.to_le_bytes());
    for chunk in st.as_slice().chunks(4) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (i, &s)| acc | code(s) << (2 * i));
        buf.push(byte);
    }
    for side in &st.side_info {
        buf.extend_from_slice(&(side.initial as f32).to_le_bytes());
        buf.extend_from_slice(&(side.threshold as f32).to_le_bytes());
    }
    buf
}

pub fn spikes_from_bytes(bytes: &[u8]) -> Result<SpikeTrain, CodecError> {
    let bad = |m: &str| CodecError::Format(m.to_string());
    if bytes.len() < HEADER_LEN || &bytes[..5] != SPIKE_MAGIC {
        return Err(bad("missing SPKS1 header"));
    }
    let codec = Codec::from_id(bytes[5]).ok_or_else(|| bad("unknown codec id"))?;
    let mut pos = 6;
    let mut take = |n: usize| {
        let s = &bytes[pos..pos + n];
        pos += n;
        s
    };
    let u32_of = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap()) as usize;
    let f64_of = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
    let channels = u32_of(take(4));
    let frames = u32_of(take(4));
    let params = CodecConfig {
        threshold_rel: f64_of(take(8)),
        window: u32_of(take(4)),
        tae_gamma: f64_of(take(8)),
        tae_tmin_rel: f64_of(take(8)),
        tae_tmax_rel: f64_of(take(8)),
    };
    if bytes.len() != serialized_len(channels, frames) {
        return Err(bad("file size does not match header"));
    }
    let n = channels * frames;
    let payload = &bytes[HEADER_LEN..HEADER_LEN + n.div_ceil(4)];
    let mut spikes = Vec::with_capacity(n);
    for i in 0..n {
        spikes.push(match (payload[i / 4] >> (2 * (i % 4))) & 0b11 {
            0b00 => 0,
            0b01 => 1,
            0b10 => -1,
            _ => return Err(bad("invalid 2-bit spike code 11")),
        });
    }
    let side_info = bytes[HEADER_LEN + n.div_ceil(4)..]
        .chunks_exact(8)
        .map(|c| SideInfo {
            initial: f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
            threshold: f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
        })
        .collect();
    SpikeTrain::new(channels, frames, spikes, side_info, codec, params)
}

#[derive(Serialize)]
struct JsonMirror<'a> {
    codec: Codec,
    channels: usize,
    frames: usize,
    params: &'a CodecConfig,
    side_info: &'a [SideInfo],
    spikes: Vec<&'a [i8]>,
}

fn json_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the binary container and a JSON mirror next to it (`<path>.json`).
pub fn write_spikes(path: &Path, st: &SpikeTrain) -> Result<(), CodecError> {
    std::fs::write(path, spikes_to_bytes(st))?;
    let mirror = JsonMirror {
        codec: st.codec,
        channels: st.channels(),
        frames: st.frames(),
        params: &st.params,
        side_info: &st.side_info,
        spikes: (0..st.channels()).map(|c| st.row(c)).collect(),
    };
    let json = serde_json::to_string(&mirror).map_err(|e| CodecError::Format(e.to_string()))?;
    std::fs::write(json_path(path), json)?;
    Ok(())
}

pub fn read_spikes(path: &Path) -> Result<SpikeTrain, CodecError> {
    spikes_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train() -> SpikeTrain {
        SpikeTrain::new(
            2,
            3,
            vec![0, 1, -1, 1, 1, 0],
            vec![
                SideInfo { initial: 0.5, threshold: 0.25 },
                SideInfo { initial: 0.0, threshold: 0.125 },
            ],
            Codec::Tae,
            CodecConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn payload_packing_is_two_bits_lsb_first() {
        let bytes = spikes_to_bytes(&train());
        assert_eq!(bytes.len(), serialized_len(2, 3));
        assert_eq!(bytes[5], 2);
        // entries 0..4 = [0, +1, -1, +1] -> 00 | 01<<2 | 10<<4 | 01<<6
        assert_eq!(bytes[HEADER_LEN], 0b01_10_01_00);
        // entries 4..6 = [+1, 0]
        assert_eq!(bytes[HEADER_LEN + 1], 0b00_01);
        assert_eq!(spikes_from_bytes(&bytes).unwrap(), train());
    }

    #[test]
    fn rejects_truncated_and_invalid_codes() {
        let mut bytes = spikes_to_bytes(&train());
        assert!(spikes_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[HEADER_LEN] = 0b11;
        assert!(matches!(spikes_from_bytes(&bytes), Err(CodecError::Format(_))));
    }

    #[test]
    fn size_formula_for_a_full_clip() {
        assert_eq!(serialized_len(128, 858), HEADER_LEN + 27_456 + 1024);
    }
}
