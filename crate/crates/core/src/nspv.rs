//! Phase vocoder on adaptive scale frames with peak locking and transient
//! reinitialization.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gabor::princarg;
use crate::nsgt::{nsgt_analyze, nsgt_synthesize, NsgCoefficients};
use crate::onset::{detect_onsets, OnsetConfig, OnsetList};
use crate::pv::real_axis;
use crate::scale_frame::{build_synthesis_sequence, check_rate, stretch_plan, ScaleFrameConfig, StretchPlan};

/// Magnitudes are floored this far below the row maximum before taking dB.
pub const DB_FLOOR: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NspvConfig {
    pub scale: ScaleFrameConfig,
    pub onset: OnsetConfig,
    /// Reinitialization tolerance in dB.
    pub eps_db: f64,
}

impl Default for NspvConfig {
    fn default() -> Self {
        Self { scale: ScaleFrameConfig::default(), onset: OnsetConfig::default(), eps_db: 2.0 }
    }
}

impl NspvConfig {
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        Self {
            scale: ScaleFrameConfig::for_sample_rate(sample_rate),
            onset: OnsetConfig::for_sample_rate(sample_rate),
            ..Self::default()
        }
    }
}

/// Peaks, valleys and regions of influence of one half-spectrum `0..=M/2`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FramePeaks {
    pub peaks: Vec<usize>,
    pub valleys: Vec<usize>,
    /// Inclusive channel range of each peak's region.
    pub regions: Vec<(usize, usize)>,
    /// Interpolated peak frequencies in radians per sample.
    pub frequencies: Vec<f64>,
}

impl FramePeaks {
    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Index of the region containing channel `m`; a valley belongs to the region below it.
    pub fn region_of(&self, m: usize) -> usize {
        self.valleys.partition_point(|&v| v < m)
    }
}

/// Magnitudes in dB, floored at `DB_FLOOR` below the row maximum.
pub fn row_db(mags: &[f64]) -> Vec<f64> {
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let floor = (max * 10f64.powf(DB_FLOOR / 20.0)).max(f64::MIN_POSITIVE);
    mags.iter().map(|&v| 20.0 * v.max(floor).log10()).collect()
}

/// Peaks are strict local maxima among channels `1..M/2-1`; the valley between
/// two peaks is the lowest-index channel of smallest magnitude. Frequencies are
/// left empty; see [`analyze_peaks`].
pub fn find_peaks_valleys(mags: &[f64]) -> FramePeaks {
    let half = mags.len().saturating_sub(1);
    let peaks: Vec<usize> = (1..half).filter(|&m| mags[m] > mags[m - 1] && mags[m] > mags[m + 1]).collect();
    let valleys: Vec<usize> = peaks
        .windows(2)
        .map(|w| (w[0] + 1..w[1]).fold(w[0] + 1, |best, m| if mags[m] < mags[best] { m } else { best }))
        .collect();
    let regions = if peaks.is_empty() {
        Vec::new()
    } else {
        let mut bounds = Vec::with_capacity(peaks.len());
        let mut lo = 0;
        for &v in &valleys {
            bounds.push((lo, v));
            lo = v + 1;
        }
        bounds.push((lo, half));
        bounds
    };
    FramePeaks { peaks, valleys, regions, frequencies: Vec::new() }
}

/// Offset of the vertex of the parabola through `(-1, alpha), (0, beta), (1, gamma)`.
pub fn peak_offset(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    let denom = alpha - 2.0 * beta + gamma;
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(denom < 0.0) {
        return Err(Error::DegenerateParabola);
    }
    Ok(0.5 * (alpha - gamma) / denom)
}

/// Frequency in radians per sample of the peak at `m_p` in a row of `channels`
/// channels, from the dB magnitudes of the peak and its two neighbours.
pub fn interpolate_frequency(alpha: f64, beta: f64, gamma: f64, m_p: usize, channels: usize) -> f64 {
    let p = peak_offset(alpha, beta, gamma).unwrap_or(0.0);
    2.0 * PI * (m_p as f64 + p) / channels as f64
}

/// Peaks and regions of a half-spectrum, with interpolated frequencies.
pub fn analyze_peaks(mags: &[f64], channels: usize) -> FramePeaks {
    let mut fp = find_peaks_valleys(mags);
    let db = row_db(mags);
    fp.frequencies =
        fp.peaks.iter().map(|&m| interpolate_frequency(db[m - 1], db[m], db[m + 1], m, channels)).collect();
    fp
}

/// Peak of the previous frame whose region holds the channel corresponding to
/// `m_p` at the previous channel count. A channel exactly on a valley goes to
/// the region above it. `None` when the previous frame has no peaks.
pub fn map_peak_to_previous(m_p: usize, channels: usize, prev_channels: usize, prev: &FramePeaks) -> Option<usize> {
    if prev.is_empty() {
        return None;
    }
    let mapped = ((m_p * prev_channels + channels / 2) / channels).min(prev_channels / 2);
    let region = prev.valleys.partition_point(|&v| v <= mapped);
    Some(prev.peaks[region])
}

/// What frame `n - 1` left behind for frame `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub channels: usize,
    /// Synthesis phases of channels `0..=M/2`.
    pub phases: Vec<f64>,
    /// Analysis magnitudes in dB of channels `0..=M/2`.
    pub db: Vec<f64>,
    pub peaks: FramePeaks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    /// Full row of `M` synthesis coefficients.
    pub row: Vec<Complex64>,
    pub state: PhaseState,
    /// Number of peak phase advances computed.
    pub peak_estimates: usize,
}

/// Synthesis coefficients of one frame.
///
/// `hop` is the synthesis distance from the previous frame to this one.
/// `state` is `None` for the first frame. DC and Nyquist are kept on the real
/// axis so the output stays real; every other channel has the analysis
/// magnitude.
pub fn propagate_frame(
    row: &[Complex64],
    hop: usize,
    state: Option<&PhaseState>,
    transient: bool,
    eps_db: f64,
) -> Result<FrameOutput> {
    let channels = row.len();
    if channels < 2 || !channels.is_multiple_of(2) {
        return Err(Error::StateMismatch(format!("row of {channels} channels")));
    }
    let half = channels / 2;
    let mags: Vec<f64> = row[..=half].iter().map(|z| z.norm()).collect();
    let analysis_phase: Vec<f64> = row[..=half].iter().map(|z| z.arg()).collect();
    let peaks = analyze_peaks(&mags, channels);
    let db = row_db(&mags);

    let prev = match state {
        Some(s) if s.phases.len() != s.channels / 2 + 1 || s.db.len() != s.phases.len() => {
            return Err(Error::StateMismatch(format!(
                "state for {} channels carries {} phases",
                s.channels,
                s.phases.len()
            )));
        }
        Some(s) if !s.peaks.is_empty() && !peaks.is_empty() => Some(s),
        _ => None,
    };

    let Some(prev) = prev else {
        let state = PhaseState { channels, phases: analysis_phase, db, peaks };
        return Ok(FrameOutput { row: row.to_vec(), state, peak_estimates: 0 });
    };

    let mut phases = vec![0.0; half + 1];
    for (i, &m_p) in peaks.peaks.iter().enumerate() {
        let prev_peak =
            map_peak_to_previous(m_p, channels, prev.channels, &prev.peaks).expect("previous frame has peaks");
        let advanced = princarg(prev.phases[prev_peak] + peaks.frequencies[i] * hop as f64);
        let threshold = prev.db[prev_peak] + eps_db;
        let reinit = |m: usize| transient && db[m] > threshold;

        let peak_phase = if reinit(m_p) { analysis_phase[m_p] } else { advanced };
        let (lo, hi) = peaks.regions[i];
        for m in lo..=hi {
            phases[m] = if reinit(m) {
                analysis_phase[m]
            } else {
                princarg(peak_phase + analysis_phase[m] - analysis_phase[m_p])
            };
        }
    }

    let mut out = vec![Complex64::new(0.0, 0.0); channels];
    for m in 0..=half {
        out[m] =
            if m == 0 || m == half { real_axis(mags[m], phases[m]) } else { Complex64::from_polar(mags[m], phases[m]) };
    }
    for m in half + 1..channels {
        out[m] = out[channels - m].conj();
    }
    let peak_estimates = peaks.peaks.len();
    Ok(FrameOutput { row: out, state: PhaseState { channels, phases, db, peaks }, peak_estimates })
}

#[derive(Debug, Clone)]
pub struct NspvOutput {
    pub samples: Vec<f64>,
    pub onsets: OnsetList,
    pub plan: StretchPlan,
    pub peaks: Vec<FramePeaks>,
    pub peak_estimates: Vec<usize>,
    /// Sum of channel counts over the analysis length.
    pub analysis_redundancy: f64,
    pub coefficients: NsgCoefficients,
}

/// Stretches `f` by `r`, detecting onsets with `cfg.onset`.
pub fn nspv_stretch(f: &[f64], r: f64, cfg: &NspvConfig) -> Result<NspvOutput> {
    check_rate(r)?;
    if f.is_empty() {
        return Err(Error::ShapeMismatch("empty signal".into()));
    }
    let onsets = detect_onsets(f, &cfg.onset)?;
    nspv_stretch_with_onsets(f, r, cfg, onsets)
}

/// Stretches `f` by `r` around the given onsets.
pub fn nspv_stretch_with_onsets(f: &[f64], r: f64, cfg: &NspvConfig, onsets: OnsetList) -> Result<NspvOutput> {
    check_rate(r)?;
    cfg.scale.validate()?;
    if f.is_empty() {
        return Err(Error::ShapeMismatch("empty signal".into()));
    }
    // trailing zeros keep the circular wrap from folding the end onto the start;
    // short inputs at low rates need extra so the synthesis timeline still
    // holds the largest window
    let max_win = cfg.scale.max_win();
    let mut padded = f.to_vec();
    padded.resize((f.len() + max_win).max((max_win as f64 / r).ceil() as usize + 1), 0.0);

    let (analysis, synthesis) = build_synthesis_sequence(&onsets.onsets, padded.len(), r, &cfg.scale)?;
    let plan = stretch_plan(&analysis, &synthesis, r)?;
    let sys_a = analysis.to_system()?;
    let c = nsgt_analyze(&padded, &sys_a)?;

    let mut rows = Vec::with_capacity(c.frames());
    let mut peaks = Vec::with_capacity(c.frames());
    let mut estimates = Vec::with_capacity(c.frames());
    let mut state: Option<PhaseState> = None;
    for n in 0..c.frames() {
        let hop = if n == 0 { 0 } else { plan.synthesis_hops[n - 1] };
        let out = propagate_frame(c.row(n), hop, state.as_ref(), plan.transient[n], cfg.eps_db)?;
        rows.push(out.row);
        peaks.push(out.state.peaks.clone());
        estimates.push(out.peak_estimates);
        state = Some(out.state);
    }
    let d = NsgCoefficients::from_rows(rows);

    let sys_s = analysis.system_at(&plan.synthesis_centers, plan.synthesis_len)?;
    let y = nsgt_synthesize(&d, &sys_s)?;
    let out_len = (r * f.len() as f64).round() as usize;
    let mut samples: Vec<f64> = y.into_iter().take(out_len).collect();
    samples.resize(out_len, 0.0);

    Ok(NspvOutput {
        samples,
        onsets,
        analysis_redundancy: sys_a.redundancy(),
        plan,
        peaks,
        peak_estimates: estimates,
        coefficients: c,
    })
}

/// One line per peak: `frame,peak_bin,omega,region_lo,region_hi`.
pub fn write_peaks_csv<W: Write>(peaks: &[FramePeaks], mut out: W) -> Result<()> {
    writeln!(out, "frame,peak_bin,omega,region_lo,region_hi")?;
    for (n, fp) in peaks.iter().enumerate() {
        for (i, &m) in fp.peaks.iter().enumerate() {
            let (lo, hi) = fp.regions[i];
            let omega = fp.frequencies.get(i).copied().unwrap_or(f64::NAN);
            writeln!(out, "{n},{m},{omega},{lo},{hi}")?;
        }
    }
    Ok(())
}
