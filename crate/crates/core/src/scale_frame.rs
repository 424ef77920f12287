//! Dyadic scale frames adapted to onsets, and the stretch plan built on them.
//!
//! Windows are Hann windows of length `min_win * 2^k`. Each onset gets a
//! shortest window; between onsets the ladder climbs one scale at a time,
//! holds the longest scale that still leaves room to climb back down, and
//! descends again before the next onset.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gabor::hann_window;
use crate::nsgt::NsgSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScaleFrameConfig {
    pub min_win: usize,
    pub num_scales: usize,
    pub min_channels: usize,
}

impl Default for ScaleFrameConfig {
    fn default() -> Self {
        Self { min_win: 96, num_scales: 5, min_channels: 768 }
    }
}

impl ScaleFrameConfig {
    /// 16 kHz defaults below 32 kHz, the 44.1 kHz set above.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        if sample_rate >= 32000 {
            Self { min_win: 384, num_scales: 5, min_channels: 1536 }
        } else {
            Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_win < 16 {
            return Err(Error::InvalidConfig(format!("min_win {} is below 16", self.min_win)));
        }
        if self.num_scales == 0 || self.num_scales > 16 {
            return Err(Error::InvalidConfig(format!("num_scales {} out of range", self.num_scales)));
        }
        if self.min_channels < self.min_win {
            return Err(Error::InvalidConfig(format!(
                "min_channels {} is below min_win {}",
                self.min_channels, self.min_win
            )));
        }
        Ok(())
    }

    pub fn scale_len(&self, k: usize) -> usize {
        self.min_win << k
    }

    pub fn max_win(&self) -> usize {
        self.scale_len(self.num_scales - 1)
    }

    pub fn channels_for(&self, k: usize) -> usize {
        self.scale_len(k).max(self.min_channels)
    }

    /// Hop between two windows of scale `k` (overlap of a third of the length).
    pub fn equal_hop(&self, k: usize) -> usize {
        ((2 * self.scale_len(k)) as f64 / 3.0).round() as usize
    }

    /// Hop between scales `k` and `k + 1` (overlap of two thirds of the shorter).
    pub fn ladder_hop(&self, k: usize) -> usize {
        ((5 * self.scale_len(k)) as f64 / 6.0).round() as usize
    }

    pub fn hop_between(&self, k1: usize, k2: usize) -> usize {
        if k1 == k2 {
            self.equal_hop(k1)
        } else {
            self.ladder_hop(k1.min(k2))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowFrame {
    pub center: usize,
    pub scale: usize,
    pub win_len: usize,
    pub channels: usize,
    pub transient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSequence {
    pub frames: Vec<WindowFrame>,
    pub len: usize,
    pub config: ScaleFrameConfig,
}

impl WindowSequence {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn centers(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.center).collect()
    }

    pub fn scales(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.scale).collect()
    }

    /// Distances between consecutive centers, the last one wrapping around `len`.
    pub fn hops(&self) -> Vec<usize> {
        let n = self.frames.len();
        (0..n)
            .map(|i| {
                if i + 1 < n {
                    self.frames[i + 1].center - self.frames[i].center
                } else {
                    self.len - self.frames[i].center + self.frames[0].center
                }
            })
            .collect()
    }

    pub fn max_win_len(&self) -> usize {
        self.frames.iter().map(|f| f.win_len).max().unwrap_or(0)
    }

    /// Same frames placed at other centers on another length.
    pub fn with_centers(&self, centers: &[usize], len: usize) -> Result<Self> {
        if centers.len() != self.frames.len() {
            return Err(Error::ShapeMismatch(format!("{} centers for {} frames", centers.len(), self.frames.len())));
        }
        let frames = self.frames.iter().zip(centers).map(|(f, &c)| WindowFrame { center: c, ..*f }).collect();
        Ok(Self { frames, len, config: self.config })
    }

    /// The painless system of Hann windows for this sequence.
    pub fn to_system(&self) -> Result<NsgSystem> {
        self.system_at(&self.centers(), self.len)
    }

    /// The system with this sequence's windows at the given centers.
    pub fn system_at(&self, centers: &[usize], len: usize) -> Result<NsgSystem> {
        let mut used: Vec<usize> = self.scales();
        used.sort_unstable();
        used.dedup();
        let windows = used.iter().map(|&k| hann_window(self.config.scale_len(k))).collect::<Result<Vec<_>>>()?;
        let assignment = self.frames.iter().map(|f| used.binary_search(&f.scale).unwrap()).collect();
        let channels = self.frames.iter().map(|f| f.channels).collect();
        NsgSystem::new(windows, centers.to_vec(), assignment, channels, len)
    }
}

/// Offsets and scales of the frames strictly between two scale-0 anchors `gap` apart.
fn fill_gap(gap: usize, cfg: &ScaleFrameConfig) -> Vec<(usize, usize)> {
    let up = |k: usize| (0..k).map(|j| cfg.ladder_hop(j)).sum::<usize>();
    let top = (0..cfg.num_scales).rev().find(|&k| 2 * up(k) <= gap).unwrap_or(0);

    let mut out = Vec::new();
    let mut pos = 0;
    for j in 0..top {
        pos += cfg.ladder_hop(j);
        out.push((pos, j + 1));
    }
    let rest = gap - 2 * up(top);
    if rest > 0 {
        let q = rest.div_ceil(cfg.equal_hop(top));
        let base = pos;
        for i in 1..q {
            out.push((base + i * rest / q, top));
        }
        pos = base + rest;
        if top > 0 {
            out.push((pos, top));
        }
    }
    for j in (0..top).rev().skip(1) {
        pos += cfg.ladder_hop(j + 1);
        out.push((pos, j + 1));
    }
    debug_assert!(out.last().is_none_or(|&(p, _)| p < gap));
    out
}

/// Window sequence over a circular signal of length `len` with shortest
/// windows at `onsets`. Position 0 is an extra, non-transient anchor unless an
/// onset sits there.
pub fn build_window_sequence(onsets: &[usize], len: usize, cfg: &ScaleFrameConfig) -> Result<WindowSequence> {
    cfg.validate()?;
    if len == 0 {
        return Err(Error::InvalidLength { len, reason: "signal is empty".into() });
    }
    let mut onsets = onsets.to_vec();
    onsets.sort_unstable();
    onsets.dedup();
    if let Some(&o) = onsets.iter().find(|&&o| o >= len) {
        return Err(Error::InvalidConfig(format!("onset {o} outside [0, {len})")));
    }

    let mut anchors: Vec<(usize, bool)> = Vec::with_capacity(onsets.len() + 1);
    if onsets.first() != Some(&0) {
        anchors.push((0, false));
    }
    anchors.extend(onsets.iter().map(|&o| (o, true)));

    let frame = |center, scale, transient| WindowFrame {
        center,
        scale,
        win_len: cfg.scale_len(scale),
        channels: cfg.channels_for(scale),
        transient,
    };
    let mut frames = Vec::new();
    for (i, &(pos, transient)) in anchors.iter().enumerate() {
        frames.push(frame(pos, 0, transient));
        let next = anchors.get(i + 1).map_or(len + anchors[0].0, |a| a.0);
        for (off, k) in fill_gap(next - pos, cfg) {
            frames.push(frame(pos + off, k, false));
        }
    }
    Ok(WindowSequence { frames, len, config: *cfg })
}

/// Pushes values up so they are strictly increasing; fails if that leaves `[0, len)`.
fn strictly_increasing(mut v: Vec<usize>, len: usize, rate: f64) -> Result<Vec<usize>> {
    for i in 1..v.len() {
        if v[i] <= v[i - 1] {
            v[i] = v[i - 1] + 1;
        }
    }
    match v.last() {
        Some(&last) if last >= len => Err(Error::InfeasibleRate { rate, min_rate: f64::NAN }),
        _ => Ok(v),
    }
}

pub fn check_rate(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 && r <= 4.0 {
        Ok(())
    } else {
        Err(Error::InvalidRate(r))
    }
}

/// Analysis and synthesis sequences for stretching by `r`.
///
/// For `r >= 1` the ladder is built on the onsets relocated to `round(r * o)`
/// over `round(r * len)` samples and its centers are mapped back by `1/r`, so
/// the analysis side gets denser as the rate grows. For `r < 1` that map would
/// spread analysis windows apart until they no longer overlap; the ladder is
/// then built on the original timeline and the synthesis centers are scaled
/// by `r` instead.
pub fn build_synthesis_sequence(
    onsets: &[usize],
    len: usize,
    r: f64,
    cfg: &ScaleFrameConfig,
) -> Result<(WindowSequence, WindowSequence)> {
    check_rate(r)?;
    let target = (r * len as f64).round() as usize;
    if target == 0 {
        return Err(Error::InfeasibleRate { rate: r, min_rate: 0.5 / len as f64 });
    }
    if r >= 1.0 {
        let relocated: Vec<usize> = onsets.iter().map(|&o| ((r * o as f64).round() as usize).min(target - 1)).collect();
        let synthesis = build_window_sequence(&relocated, target, cfg)?;
        let back: Vec<usize> = synthesis.frames.iter().map(|f| (f.center as f64 / r).round() as usize).collect();
        let back = strictly_increasing(back, len, r)?;
        let analysis = synthesis.with_centers(&back, len)?;
        Ok((analysis, synthesis))
    } else {
        let analysis = build_window_sequence(onsets, len, cfg)?;
        let fwd: Vec<usize> = analysis.frames.iter().map(|f| (f.center as f64 * r).round() as usize).collect();
        let fwd = strictly_increasing(fwd, target, r)?;
        let synthesis = analysis.with_centers(&fwd, target)?;
        Ok((analysis, synthesis))
    }
}

/// Where each analysis frame lands in the output, and at which local rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StretchPlan {
    pub rate: f64,
    /// Rate applied to every hop not touching a transient frame.
    pub compensated_rate: f64,
    pub analysis_len: usize,
    pub synthesis_len: usize,
    pub analysis_centers: Vec<usize>,
    pub synthesis_centers: Vec<usize>,
    /// Hop `n` runs from frame `n` to frame `n + 1`; the last one wraps.
    pub analysis_hops: Vec<usize>,
    pub synthesis_hops: Vec<usize>,
    pub local_rates: Vec<f64>,
    pub transient: Vec<bool>,
    pub scales: Vec<usize>,
    pub win_lens: Vec<usize>,
    pub channels: Vec<usize>,
}

impl StretchPlan {
    pub fn frames(&self) -> usize {
        self.analysis_centers.len()
    }

    pub fn write_json<W: std::io::Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Synthesis positions for the analysis frames: hops next to a transient frame
/// keep their analysis length, every other hop is scaled by one common factor
/// chosen so the output has `round(r * L)` samples.
pub fn stretch_plan(analysis: &WindowSequence, synthesis: &WindowSequence, r: f64) -> Result<StretchPlan> {
    check_rate(r)?;
    let n = analysis.frame_count();
    if n == 0 || synthesis.frame_count() != n {
        return Err(Error::ShapeMismatch(format!("analysis has {n} frames, synthesis {}", synthesis.frame_count())));
    }
    if analysis.frames.iter().zip(&synthesis.frames).any(|(a, s)| a.scale != s.scale || a.channels != s.channels) {
        return Err(Error::ShapeMismatch("analysis and synthesis frames differ in scale or channels".into()));
    }
    let len = analysis.len;
    let target = (r * len as f64).round() as usize;
    let hops = analysis.hops();
    let transient: Vec<bool> = analysis.frames.iter().map(|f| f.transient).collect();
    let frozen: Vec<bool> = (0..n).map(|i| transient[i] || transient[(i + 1) % n]).collect();
    let frozen_sum: usize = hops.iter().zip(&frozen).filter(|(_, &z)| z).map(|(h, _)| h).sum();
    let free_sum = len - frozen_sum;
    let min_rate = frozen_sum as f64 / len as f64;
    if free_sum == 0 || target <= frozen_sum {
        return Err(Error::InfeasibleRate { rate: r, min_rate });
    }
    let rp = (target - frozen_sum) as f64 / free_sum as f64;
    let local_rates: Vec<f64> = frozen.iter().map(|&z| if z { 1.0 } else { rp }).collect();

    // Piecewise-linear time map through the analysis centers with 0 -> 0; the
    // stretch of [0, a_0] is that of the wrapping hop it belongs to.
    let a0 = analysis.frames[0].center as f64;
    let mut pos = local_rates[n - 1] * a0;
    let mut rounded = Vec::with_capacity(n);
    for i in 0..n {
        rounded.push(pos.round() as usize);
        pos += local_rates[i] * hops[i] as f64;
    }
    let synthesis_centers =
        strictly_increasing(rounded, target, r).map_err(|_| Error::InfeasibleRate { rate: r, min_rate })?;
    let synthesis_hops: Vec<usize> = (0..n)
        .map(|i| {
            if i + 1 < n {
                synthesis_centers[i + 1] - synthesis_centers[i]
            } else {
                target - synthesis_centers[i] + synthesis_centers[0]
            }
        })
        .collect();

    Ok(StretchPlan {
        rate: r,
        compensated_rate: rp,
        analysis_len: len,
        synthesis_len: target,
        analysis_centers: analysis.centers(),
        synthesis_centers,
        analysis_hops: hops,
        synthesis_hops,
        local_rates,
        transient,
        scales: analysis.scales(),
        win_lens: analysis.frames.iter().map(|f| f.win_len).collect(),
        channels: analysis.frames.iter().map(|f| f.channels).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nsgt::frame_diagonal;
    use proptest::prelude::*;

    fn cfg() -> ScaleFrameConfig {
        ScaleFrameConfig::default()
    }

    fn assert_well_formed(seq: &WindowSequence) {
        let n = seq.frame_count();
        for i in 0..n {
            let (a, b) = (&seq.frames[i], &seq.frames[(i + 1) % n]);
            assert!(a.scale.abs_diff(b.scale) <= 1, "ladder broken at {i}");
            assert!(a.win_len <= a.channels);
            if a.transient {
                assert_eq!(a.scale, 0);
            }
        }
        let sys = seq.to_system().unwrap();
        let diag = frame_diagonal(&sys);
        assert!(diag.nonpositive().is_empty(), "gap at {}", diag.argmin);
    }

    #[test]
    fn equal_and_unequal_hops() {
        let c = cfg();
        assert_eq!(c.equal_hop(0), 64);
        assert_eq!(c.ladder_hop(0), 80);
        assert_eq!(c.hop_between(1, 0), 80);
        assert_eq!(c.max_win(), 1536);
        assert_eq!(c.channels_for(0), 768);
        assert_eq!(c.channels_for(4), 1536);
    }

    #[test]
    fn config_validation() {
        assert!(ScaleFrameConfig { min_win: 8, ..cfg() }.validate().is_err());
        assert!(ScaleFrameConfig { num_scales: 0, ..cfg() }.validate().is_err());
        assert!(ScaleFrameConfig { min_channels: 64, ..cfg() }.validate().is_err());
        assert_eq!(ScaleFrameConfig::for_sample_rate(44100).min_win, 384);
    }

    #[test]
    fn no_onsets_gives_symmetric_ramp() {
        let seq = build_window_sequence(&[], 48000, &cfg()).unwrap();
        assert_well_formed(&seq);
        let scales = seq.scales();
        assert_eq!(scales[0], 0);
        assert_eq!(*scales.iter().max().unwrap(), 4);
        let n = scales.len();
        assert_eq!(&scales[1..5], &[1, 2, 3, 4]);
        assert_eq!(&scales[n - 4..], &[4, 3, 2, 1]);
        assert!(scales[4..n - 4].iter().all(|&k| k == 4));
        let hops = seq.hops();
        assert!(hops[4..n - 5].iter().all(|&h| h <= 1024 && h > 900));
        assert!(seq.frames.iter().all(|f| !f.transient));
    }

    #[test]
    fn two_onsets_bracket_the_ladder() {
        let seq = build_window_sequence(&[4000, 12192], 20000, &cfg()).unwrap();
        assert_well_formed(&seq);
        let i = seq.frames.iter().position(|f| f.center == 4000).unwrap();
        let j = seq.frames.iter().position(|f| f.center == 12192).unwrap();
        assert!(seq.frames[i].transient && seq.frames[j].transient);
        assert_eq!(seq.frames[i].scale, 0);
        assert_eq!(seq.frames[j].scale, 0);
        assert_eq!(seq.frames[i + 1].scale, 1);
        assert_eq!(seq.frames[j - 1].scale, 1);
        assert_eq!(seq.frames.iter().filter(|f| f.transient).count(), 2);
    }

    #[test]
    fn short_segments_get_scale_zero_only() {
        let seq = build_window_sequence(&[1000, 1050, 1110], 4000, &cfg()).unwrap();
        assert_well_formed(&seq);
        let i = seq.frames.iter().position(|f| f.center == 1000).unwrap();
        assert_eq!(seq.frames[i + 1].center, 1050);
        assert_eq!(seq.frames[i + 2].center, 1110);
    }

    #[test]
    fn onset_at_zero_replaces_boundary() {
        let seq = build_window_sequence(&[0, 5000], 10000, &cfg()).unwrap();
        assert!(seq.frames[0].transient);
        assert_eq!(seq.frames[0].center, 0);
        assert_eq!(seq.frames.iter().filter(|f| f.center == 0).count(), 1);
    }

    #[test]
    fn onset_outside_signal_is_rejected() {
        assert!(build_window_sequence(&[10000], 10000, &cfg()).is_err());
    }

    #[test]
    fn unit_rate_sequences_coincide() {
        let (a, s) = build_synthesis_sequence(&[3000, 9000], 16000, 1.0, &cfg()).unwrap();
        assert_eq!(a, s);
    }

    #[test]
    fn invalid_rates() {
        for r in [0.0, -1.0, 4.5, f64::NAN] {
            assert!(matches!(build_synthesis_sequence(&[], 16000, r, &cfg()), Err(Error::InvalidRate(_))));
        }
    }

    #[test]
    fn doubling_builds_a_taller_ladder() {
        let onsets = [16000, 32000];
        let (a1, _) = build_synthesis_sequence(&onsets, 48000, 1.0, &cfg()).unwrap();
        let (a2, s2) = build_synthesis_sequence(&onsets, 48000, 2.0, &cfg()).unwrap();
        let between = |seq: &WindowSequence, lo: usize, hi: usize| {
            seq.frames.iter().filter(|f| f.center > lo && f.center < hi && f.scale == 4).count()
        };
        assert_eq!(s2.len, 96000);
        assert!(s2.frames.iter().any(|f| f.center == 64000 && f.transient));
        assert!(between(&s2, 32000, 64000) > between(&a1, 16000, 32000));
        assert!(a2.frames.iter().any(|f| f.center == 16000 && f.transient));
        assert!(a2.frames.iter().any(|f| f.center == 32000 && f.transient));
    }

    #[test]
    fn synthesis_hops_track_analysis_hops() {
        for r in [0.6, 1.5, 2.0, 3.3] {
            let (a, s) = build_synthesis_sequence(&[5000, 11000], 20000, r, &cfg()).unwrap();
            assert_well_formed(&a);
            assert_well_formed(&s);
            // whichever side was obtained by rounding is within one sample of exact
            let (ac, sc) = (a.centers(), s.centers());
            for i in 0..ac.len() - 1 {
                let (da, ds) = ((ac[i + 1] - ac[i]) as f64, (sc[i + 1] - sc[i]) as f64);
                let err = if r >= 1.0 { (ds / r - da).abs() } else { (ds - r * da).abs() };
                assert!(err <= 1.0 + 1e-9, "r {r} hop {i}");
            }
        }
    }

    #[test]
    fn plan_without_transients_scales_uniformly() {
        let (a, s) = build_synthesis_sequence(&[], 16000, 1.5, &cfg()).unwrap();
        let plan = stretch_plan(&a, &s, 1.5).unwrap();
        assert!((plan.compensated_rate - 1.5).abs() < 1e-12);
        for (sh, ah) in plan.synthesis_hops.iter().zip(&plan.analysis_hops) {
            assert!((*sh as f64 - 1.5 * *ah as f64).abs() <= 1.0);
        }
        assert_eq!(plan.synthesis_hops.iter().sum::<usize>(), 24000);
    }

    #[test]
    fn plan_freezes_transient_hops() {
        let c = cfg();
        let seq = build_window_sequence(&[8000], 16000, &c).unwrap();
        let plan = stretch_plan(&seq, &seq, 2.0).unwrap();
        let i = seq.frames.iter().position(|f| f.transient).unwrap();
        assert_eq!(plan.synthesis_hops[i - 1], 80);
        assert_eq!(plan.synthesis_hops[i], 80);
        let expected = (32000.0 - 160.0) / (16000.0 - 160.0);
        assert!((plan.compensated_rate - expected).abs() < 1e-12);
        assert_eq!(plan.local_rates[i], 1.0);
        assert_eq!(plan.synthesis_hops.iter().sum::<usize>(), 32000);
    }

    #[test]
    fn unit_rate_plan_is_identity() {
        let (a, s) = build_synthesis_sequence(&[2000, 7000], 12000, 1.0, &cfg()).unwrap();
        let plan = stretch_plan(&a, &s, 1.0).unwrap();
        assert!(plan.local_rates.iter().all(|&v| v == 1.0));
        assert_eq!(plan.synthesis_centers, plan.analysis_centers);
    }

    #[test]
    fn dense_onsets_make_compression_infeasible() {
        let onsets: Vec<usize> = (1..40).map(|i| i * 100).collect();
        let seq = build_window_sequence(&onsets, 4100, &cfg()).unwrap();
        match stretch_plan(&seq, &seq, 0.5) {
            Err(Error::InfeasibleRate { min_rate, .. }) => assert!(min_rate > 0.5),
            other => panic!("expected InfeasibleRate, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_sequences_rejected() {
        let a = build_window_sequence(&[], 16000, &cfg()).unwrap();
        let b = build_window_sequence(&[4000], 16000, &cfg()).unwrap();
        assert!(matches!(stretch_plan(&a, &b, 1.0), Err(Error::ShapeMismatch(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sequences_are_ladders_and_frames(
            len in 2000usize..60000,
            fractions in proptest::collection::vec(0.0..1.0f64, 0..8),
            r in 0.5..4.0f64,
        ) {
            let onsets: Vec<usize> = fractions.iter().map(|f| (f * len as f64) as usize).collect();
            let seq = build_window_sequence(&onsets, len, &cfg()).unwrap();
            assert_well_formed(&seq);
            let (a, s) = build_synthesis_sequence(&onsets, len, r, &cfg()).unwrap();
            assert_well_formed(&a);
            assert_well_formed(&s);
            let plan = stretch_plan(&a, &s, r);
            let unexpected = matches!(plan, Err(ref e) if !matches!(e, Error::InfeasibleRate { .. }));
            prop_assert!(!unexpected, "unexpected error {:?}", plan.as_ref().err());
            if let Ok(plan) = plan {
                prop_assert_eq!(plan.synthesis_hops.iter().sum::<usize>(), (r * len as f64).round() as usize);
                let sys = a.system_at(&plan.synthesis_centers, plan.synthesis_len).unwrap();
                prop_assert!(frame_diagonal(&sys).nonpositive().is_empty());
                for i in 0..plan.frames() {
                    let ideal = plan.local_rates[i] * plan.analysis_hops[i] as f64;
                    prop_assert!((plan.synthesis_hops[i] as f64 - ideal).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }
}
