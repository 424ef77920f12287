//! Classical phase vocoder on a uniform Hann DGT.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gabor::{
    dgt_analyze, dgt_synthesize_complex, dual_window_for_hop, lcm, princarg, DgtCoefficients, GaborFrame,
};
use crate::scale_frame::check_rate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PvConfig {
    pub hop: usize,
    pub channels: usize,
    pub win_len: usize,
}

impl Default for PvConfig {
    fn default() -> Self {
        Self::new(256, 1024)
    }
}

impl PvConfig {
    /// Hann window as long as the channel count.
    pub fn new(hop: usize, channels: usize) -> Self {
        Self { hop, channels, win_len: channels }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.channels < 2 || self.win_len < 2 {
            return Err(Error::InvalidConfig(format!("unusable PV lattice {self:?}")));
        }
        if self.win_len > self.channels {
            return Err(Error::InvalidConfig(format!(
                "window length {} exceeds {} channels",
                self.win_len, self.channels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvOutput {
    pub samples: Vec<f64>,
    pub synthesis_hop: usize,
    /// `synthesis_hop / hop`, which differs from the request when `r * hop` is not an integer.
    pub realized_rate: f64,
}

/// Deviation of the instantaneous frequency from `omega` (rad/sample) given
/// two phases `hop` samples apart. Always in `(-pi/hop, pi/hop]`.
pub fn phase_increment(prev_phase: f64, phase: f64, omega: f64, hop: usize) -> f64 {
    princarg(phase - prev_phase - omega * hop as f64) / hop as f64
}

/// Snaps the phase of a coefficient that must stay real to the nearer of 0 and pi.
pub(crate) fn real_axis(mag: f64, phase: f64) -> Complex64 {
    Complex64::new(if phase.cos() >= 0.0 { mag } else { -mag }, 0.0)
}

/// Phase-vocoder modification of DGT coefficients for synthesis hop `synthesis_hop`.
/// Only channels `0..=M/2` are processed; the rest mirror them.
pub fn pv_modify(c: &DgtCoefficients, synthesis_hop: usize) -> DgtCoefficients {
    let m_total = c.channels();
    let a = c.frame().hop();
    let half = m_total / 2;
    let mut d = DgtCoefficients::zeros(c.frame().clone());
    let mut acc: Vec<f64> = c.column(0)[..=half].iter().map(|z| z.arg()).collect();
    d.column_mut(0).copy_from_slice(c.column(0));

    for n in 1..c.frames() {
        let (prev, cur) = (c.column(n - 1), c.column(n));
        let out = d.column_mut(n);
        for m in 0..=half {
            let omega = 2.0 * PI * m as f64 / m_total as f64;
            let w = omega + phase_increment(prev[m].arg(), cur[m].arg(), omega, a);
            acc[m] = princarg(acc[m] + w * synthesis_hop as f64);
            let mag = cur[m].norm();
            out[m] =
                if m == 0 || (2 * m == m_total) { real_axis(mag, acc[m]) } else { Complex64::from_polar(mag, acc[m]) };
        }
        for m in half + 1..m_total {
            out[m] = out[m_total - m].conj();
        }
    }
    d
}

/// Stretches `f` by `r` with the classical phase vocoder.
///
/// The signal is zero-padded in front by a whole number of hops and at the end
/// by at least one window, so the circular transform never wraps signal onto
/// signal. The output has exactly `round(r * f.len())` samples.
pub fn pv_stretch(f: &[f64], r: f64, cfg: &PvConfig) -> Result<PvOutput> {
    check_rate(r)?;
    cfg.validate()?;
    if f.is_empty() {
        return Err(Error::ShapeMismatch("empty signal".into()));
    }
    let (a, m) = (cfg.hop, cfg.channels);
    let a_star = ((r * a as f64).round() as usize).max(1);
    let window = crate::gabor::hann_window(cfg.win_len)?;
    let dual = dual_window_for_hop(&window, a_star, m)?;

    let front = m.div_ceil(a) * a;
    let step = lcm(a, m);
    let len = (front + f.len() + m).div_ceil(step) * step;
    let mut padded = vec![0.0; len];
    padded[front..front + f.len()].copy_from_slice(f);

    let frame = GaborFrame::new(window, a, m, len)?;
    let c = dgt_analyze(&padded, &frame)?;
    let d = pv_modify(&c, a_star);
    let y = dgt_synthesize_complex(&d, a_star, &dual)?;

    let skip = front / a * a_star;
    let out_len = (r * f.len() as f64).round() as usize;
    let mut samples: Vec<f64> = y.iter().skip(skip).take(out_len).map(|z| z.re).collect();
    samples.resize(out_len, 0.0);
    Ok(PvOutput { samples, synthesis_hop: a_star, realized_rate: a_star as f64 / a as f64 })
}
