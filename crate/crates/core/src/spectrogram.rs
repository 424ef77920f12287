//! dB magnitude spectrograms on a uniform Hann DGT, with a CSV form.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::gabor::{dgt_analyze, GaborFrame};
use crate::signal::Signal;

/// Magnitudes below `10^(FLOOR_DB / 20)` are reported at `FLOOR_DB`.
pub const FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub hop: usize,
    pub channels: usize,
    pub sample_rate: u32,
    /// `db[m][n]` for channels `m` in `0..=channels/2` and frames `n`.
    pub db: Vec<Vec<f64>>,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.db.first().map_or(0, Vec::len)
    }

    /// First line `hop=..,channels=..,sample_rate=..`, then one line per
    /// channel with one value per frame, six decimals.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "hop={},channels={},sample_rate={}", self.hop, self.channels, self.sample_rate)?;
        let mut line = String::new();
        for row in &self.db {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:.6}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |msg: &str| Error::CorruptFile(format!("spectrogram csv: {msg}"));
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty"))??;
        let mut fields = [None; 3];
        for part in header.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| bad("malformed header"))?;
            let value: usize = value.trim().parse().map_err(|_| bad("non-numeric header"))?;
            match key.trim() {
                "hop" => fields[0] = Some(value),
                "channels" => fields[1] = Some(value),
                "sample_rate" => fields[2] = Some(value),
                _ => return Err(bad("unknown header key")),
            }
        }
        let [Some(hop), Some(channels), Some(sample_rate)] = fields else {
            return Err(bad("incomplete header"));
        };
        let mut db = Vec::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad("non-numeric value")))
                .collect::<Result<Vec<_>>>()?;
            db.push(row);
        }
        if db.len() != channels / 2 + 1 || db.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(bad("ragged or wrongly sized table"));
        }
        Ok(Self { hop, channels, sample_rate: sample_rate as u32, db })
    }
}

/// Spectrogram of `signal`, zero-padded to a length the lattice accepts.
pub fn spectrogram(signal: &Signal, hop: usize, channels: usize) -> Result<Spectrogram> {
    if hop == 0 || channels < 2 || hop > channels {
        return Err(Error::InvalidConfig(format!("spectrogram lattice ({hop}, {channels}) is not usable")));
    }
    let len = GaborFrame::compatible_len(signal.len(), hop, channels);
    let mut padded = signal.samples().to_vec();
    padded.resize(len, 0.0);
    let c = dgt_analyze(&padded, &GaborFrame::hann(hop, channels, len)?)?;
    let floor = 10f64.powf(FLOOR_DB / 20.0);
    let db = (0..=channels / 2)
        .map(|m| (0..c.frames()).map(|n| 20.0 * c.get(m, n).norm().max(floor).log10()).collect())
        .collect();
    Ok(Spectrogram { hop, channels, sample_rate: signal.sample_rate(), db })
}
