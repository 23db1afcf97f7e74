use super::FrontendError;

/// Edges of the eight analysis bands in Hz.
pub const BAND_EDGES_HZ: [f64; 9] = [
    20.0, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0, 20_000.0,
];

pub const N_BANDS: usize = 8;

/// Assignment of mel channels to the eight analysis bands.
#[derive(Clone, Debug, PartialEq)]
pub struct BandPartition {
    pub edges_hz: [f64; 9],
    /// Band index of every channel.
    pub assignment: Vec<usize>,
}

impl BandPartition {
    /// Channels belonging to `band`, in increasing order. May be empty.
    pub fn channels(&self, band: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, b)| **b == band)
            .map(|(c, _)| c)
            .collect()
    }

    pub fn sizes(&self) -> [usize; N_BANDS] {
        let mut s = [0; N_BANDS];
        for &b in &self.assignment {
            s[b] += 1;
        }
        s
    }

    pub fn label(band: usize) -> String {
        fn fmt(hz: f64) -> String {
            if hz >= 1000.0 {
                format!("{}k", hz / 1000.0)
            } else {
                format!("{hz}")
            }
        }
        format!(
            "{}-{}",
            fmt(BAND_EDGES_HZ[band]),
            fmt(BAND_EDGES_HZ[band + 1])
        )
    }
}

/// Band `b` holds centers in `[edge[b], edge[b+1])`; the last band also
/// includes 20 kHz itself.
pub fn partition_bands(channel_center_hz: &[f64]) -> Result<BandPartition, FrontendError> {
    let (lo, hi) = (BAND_EDGES_HZ[0], BAND_EDGES_HZ[N_BANDS]);
    let mut assignment = Vec::with_capacity(channel_center_hz.len());
    for (c, &hz) in channel_center_hz.iter().enumerate() {
        if !(lo..=hi).contains(&hz) {
            return Err(FrontendError::CenterOutOfRange { channel: c, hz });
        }
        let band = BAND_EDGES_HZ[1..N_BANDS]
            .iter()
            .take_while(|&&edge| hz >= edge)
            .count();
        assignment.push(band);
    }
    Ok(BandPartition {
        edges_hz: BAND_EDGES_HZ,
        assignment,
    })
}
