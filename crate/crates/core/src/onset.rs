//! Spectral-flux onset detection on a redundancy-16 Hann DGT.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gabor::{dgt_analyze, GaborFrame};

/// Flux values at or below this fraction of the largest frame magnitude sum
/// are flushed to zero. A real sinusoid's two spectral images beat against each
/// other from frame to frame, leaving a ripple of up to about 1e-4 of that sum.
const FLUX_NOISE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OnsetConfig {
    pub hop: usize,
    pub channels: usize,
    pub neighborhood: usize,
    pub bias: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self { hop: 128, channels: 2048, neighborhood: 10, bias: 1.5 }
    }
}

impl OnsetConfig {
    /// Defaults at 16 kHz, rescaled proportionally for other rates.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        let hop = ((128.0 * sample_rate as f64 / 16000.0).round() as usize).max(1);
        Self { hop, channels: 16 * hop, ..Self::default() }
    }

    /// Delay between the frame whose flux peaks and the attack that caused it.
    ///
    /// A Hann window of length `M` rises fastest a quarter window before its
    /// center, so a sharp attack produces the largest flux increment when the
    /// frame center is about `M/4 - hop/2` samples ahead of it.
    pub fn lag(&self) -> usize {
        (self.channels / 4).saturating_sub(self.hop / 2)
    }
}

/// Detected onsets with the flux curve they were picked from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnsetList {
    /// Onset sample positions, strictly increasing.
    pub onsets: Vec<usize>,
    /// Flux frame index of each onset.
    pub frames: Vec<usize>,
    pub sf_curve: Vec<f64>,
    pub frame_hop: usize,
}

impl OnsetList {
    pub fn empty(frame_hop: usize) -> Self {
        Self { onsets: Vec::new(), frames: Vec::new(), sf_curve: Vec::new(), frame_hop }
    }

    /// Onsets given directly as sample positions, without a flux curve.
    pub fn from_positions(mut onsets: Vec<usize>, frame_hop: usize) -> Self {
        onsets.sort_unstable();
        onsets.dedup();
        Self { frames: Vec::new(), onsets, sf_curve: Vec::new(), frame_hop }
    }

    pub fn len(&self) -> usize {
        self.onsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.onsets.is_empty()
    }

    pub fn sf_value(&self, i: usize) -> Option<f64> {
        self.frames.get(i).and_then(|&n| self.sf_curve.get(n)).copied()
    }
}

/// `SF[n] = sum_m max(0, |c[m,n]| - |c[m,n-1]|)`, `SF[0] = 0`, over all channels
/// of a Hann DGT with window length `channels`. The signal is zero-padded to a
/// length compatible with the lattice and treated circularly.
pub fn spectral_flux(f: &[f64], hop: usize, channels: usize) -> Result<Vec<f64>> {
    if hop == 0 || channels < 2 || hop > channels {
        return Err(Error::InvalidConfig(format!("flux lattice ({hop}, {channels}) is not usable")));
    }
    if f.is_empty() {
        return Err(Error::ShapeMismatch("empty signal".into()));
    }
    let len = GaborFrame::compatible_len(f.len(), hop, channels);
    let mut padded = f.to_vec();
    padded.resize(len, 0.0);
    let frame = GaborFrame::hann(hop, channels, len)?;
    let c = dgt_analyze(&padded, &frame)?;

    let mags: Vec<Vec<f64>> = c.columns().map(|col| col.iter().map(|z| z.norm()).collect()).collect();
    let peak_sum = mags.iter().map(|m| m.iter().sum::<f64>()).fold(0.0, f64::max);
    let floor = FLUX_NOISE_FLOOR * peak_sum;

    let mut sf = vec![0.0; mags.len()];
    for n in 1..mags.len() {
        let v: f64 = mags[n].iter().zip(&mags[n - 1]).map(|(a, b)| (a - b).max(0.0)).sum();
        sf[n] = if v > floor { v } else { 0.0 };
    }
    Ok(sf)
}

/// Frame `n` is an onset when `sf[n]` is a strict interior local maximum and
/// exceeds `bias` times the mean of `sf` over `[n - neighborhood, n + neighborhood]`.
/// Positions are reported as `n * hop`.
pub fn pick_onsets(sf: &[f64], hop: usize, neighborhood: usize, bias: f64) -> OnsetList {
    let neighborhood = neighborhood.max(1);
    let mut frames = Vec::new();
    for n in 1..sf.len().saturating_sub(1) {
        if !(sf[n] > sf[n - 1] && sf[n] > sf[n + 1]) {
            continue;
        }
        let lo = n.saturating_sub(neighborhood);
        let hi = (n + neighborhood).min(sf.len() - 1);
        let mean = sf[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
        if sf[n] > bias * mean {
            frames.push(n);
        }
    }
    OnsetList { onsets: frames.iter().map(|&n| n * hop).collect(), frames, sf_curve: sf.to_vec(), frame_hop: hop }
}

/// Full detector: flux, peak picking, and compensation of the window lag.
/// Onsets falling outside the signal are dropped.
pub fn detect_onsets(f: &[f64], cfg: &OnsetConfig) -> Result<OnsetList> {
    let sf = spectral_flux(f, cfg.hop, cfg.channels)?;
    let mut list = pick_onsets(&sf, cfg.hop, cfg.neighborhood, cfg.bias);
    let lag = cfg.lag();
    let (onsets, frames): (Vec<usize>, Vec<usize>) =
        list.onsets.iter().zip(&list.frames).map(|(&o, &n)| (o + lag, n)).filter(|&(o, _)| o < f.len()).unzip();
    list.onsets = onsets;
    list.frames = frames;
    Ok(list)
}
