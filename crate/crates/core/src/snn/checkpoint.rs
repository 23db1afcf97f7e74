//! `SPKN1` model checkpoint: magic, `u32` length of the config JSON, the JSON
//! itself, then every layer's weights as little-endian `f32` in
//! `[output][input]` row-major order.

use std::path::Path;

use super::{Network, SnnConfig, SnnError};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"SPKN1";

pub fn save_checkpoint(path: &Path, net: &Network) -> Result<(), SnnError> {
    let json = serde_json::to_vec(&net.config).map_err(|e| SnnError::Checkpoint(e.to_string()))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    let widths = net.widths();
    for l in 0..net.n_layers() {
        for o in 0..widths[l + 1] {
            for i in 0..widths[l] {
                buf.extend_from_slice(&(net.weight(l, o, i) as f32).to_le_bytes());
            }
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Network, SnnError> {
    let bytes = std::fs::read(path)?;
    let bad = |m: &str| SnnError::Checkpoint(format!("{}: {m}", path.display()));
    if bytes.len() < 9 || &bytes[..5] != CHECKPOINT_MAGIC {
        return Err(bad("missing SPKN1 header"));
    }
    let json_len = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let json = bytes.get(9..9 + json_len).ok_or_else(|| bad("truncated config"))?;
    let config: SnnConfig = serde_json::from_slice(json).map_err(|e| bad(&e.to_string()))?;
    let mut net = Network::zeros(&config)?;
    let widths = net.widths().to_vec();
    let expected: usize = widths.windows(2).map(|w| w[0] * w[1]).sum();
    let payload = &bytes[9 + json_len..];
    if payload.len() != expected * 4 {
        return Err(bad("weight payload size does not match config"));
    }
    let mut values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
    for l in 0..widths.len() - 1 {
        for o in 0..widths[l + 1] {
            for i in 0..widths[l] {
                net.set_weight(l, o, i, values.next().expect("size checked"));
            }
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_at_single_precision() {
        let cfg = SnnConfig {
            input_size: 3,
            hidden_sizes: vec![4, 2],
            output_size: 2,
            seed: 3,
            ..Default::default()
        };
        let net = Network::new(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.spkn");
        save_checkpoint(&path, &net).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.config, cfg);
        for l in 0..net.n_layers() {
            for (a, b) in net.layer_weights(l).iter().zip(back.layer_weights(l)) {
                assert_eq!(*a as f32, *b as f32);
            }
        }
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..5], b"SPKN1");
        // first weight written is layer 0, output 0, input 0
        let json_len = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let first = f32::from_le_bytes(bytes[9 + json_len..13 + json_len].try_into().unwrap());
        assert_eq!(first, net.weight(0, 0, 0) as f32);
    }
}
