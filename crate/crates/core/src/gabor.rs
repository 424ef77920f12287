//! Uniform discrete Gabor transform in the painless case.
//!
//! Windows are stored zero-centered: index `k` holds the window value at
//! offset [`centered_offset`]`(k, len)`, so index 0 is the window center.
//! Coefficients are phase-referenced to each frame's center,
//! `c[m, n] = sum_l f[l] g[l - na] exp(-2 pi i m (l - na) / M)`, with all
//! translations taken modulo the signal length.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::dft;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Offset relative to the window center for zero-centered index `k`.
#[inline]
pub fn centered_offset(k: usize, len: usize) -> isize {
    if k < len.div_ceil(2) {
        k as isize
    } else {
        k as isize - len as isize
    }
}

/// Periodic Hann window of `len` samples, rotated so the peak sits at index 0.
/// Odd lengths are sampled symmetrically around the peak.
pub fn hann_window(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::InvalidLength { len, reason: "Hann window needs at least 2 samples".into() });
    }
    // 0.5 + 0.5 cos(2 pi t / len) at the centered offsets; for even lengths this is
    // exactly the periodic Hann rotated by len/2.
    Ok((0..len).map(|k| 0.5 + 0.5 * (2.0 * PI * centered_offset(k, len) as f64 / len as f64).cos()).collect())
}

/// True when the zero-centered window satisfies `g[t] = g[-t]` for every offset,
/// treating offsets outside the stored support as zero.
pub fn is_symmetric(window: &[f64]) -> bool {
    let len = window.len();
    let scale = window.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    (1..len).all(|k| {
        let t = centered_offset(k, len);
        let mirror = (-t).rem_euclid(len as isize) as usize;
        let other = if centered_offset(mirror, len) == -t { window[mirror] } else { 0.0 };
        (window[k] - other).abs() <= SYMMETRY_TOL * scale
    })
}

/// Principal argument in `(-pi, pi]`.
#[inline]
pub fn princarg(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Lattice description of a painless uniform Gabor system.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborFrame {
    window: Vec<f64>,
    hop: usize,
    channels: usize,
    len: usize,
}

impl GaborFrame {
    pub fn new(window: Vec<f64>, hop: usize, channels: usize, len: usize) -> Result<Self> {
        if hop == 0 || channels == 0 || len == 0 {
            return Err(Error::InvalidConfig("hop, channels and length must be positive".into()));
        }
        if !len.is_multiple_of(hop) || !len.is_multiple_of(channels) {
            return Err(Error::InvalidLength {
                len,
                reason: format!("must be divisible by hop {hop} and channels {channels}"),
            });
        }
        if window.is_empty() || window.len() > channels || window.len() > len {
            return Err(Error::InvalidConfig(format!(
                "window length {} must be in 1..={} (painless)",
                window.len(),
                channels.min(len)
            )));
        }
        if !is_symmetric(&window) {
            return Err(Error::InvalidConfig("window must be symmetric around zero".into()));
        }
        Ok(Self { window, hop, channels, len })
    }

    /// Hann-windowed frame whose window length equals the channel count.
    pub fn hann(hop: usize, channels: usize, len: usize) -> Result<Self> {
        Self::new(hann_window(channels)?, hop, channels, len)
    }

    /// Smallest length `>= signal_len` compatible with `hop` and `channels`.
    pub fn compatible_len(signal_len: usize, hop: usize, channels: usize) -> usize {
        let step = lcm(hop, channels);
        signal_len.max(1).div_ceil(step) * step
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn frames(&self) -> usize {
        self.len / self.hop
    }

    pub fn redundancy(&self) -> f64 {
        (self.channels * self.frames()) as f64 / self.len as f64
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Coefficient matrix `c[m, n]`, stored frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DgtCoefficients {
    coeffs: Vec<Complex64>,
    frame: GaborFrame,
}

impl DgtCoefficients {
    pub fn zeros(frame: GaborFrame) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); frame.channels() * frame.frames()], frame }
    }

    /// Frame-major storage: column `n` occupies `n * M .. (n + 1) * M`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn frame(&self) -> &GaborFrame {
        &self.frame
    }

    pub fn channels(&self) -> usize {
        self.frame.channels
    }

    pub fn frames(&self) -> usize {
        self.frame.frames()
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.coeffs[n * self.frame.channels + m]
    }

    pub fn set(&mut self, m: usize, n: usize, value: Complex64) {
        let c = self.frame.channels;
        self.coeffs[n * c + m] = value;
    }

    /// All channels of frame `n`.
    pub fn column(&self, n: usize) -> &[Complex64] {
        let c = self.frame.channels;
        &self.coeffs[n * c..(n + 1) * c]
    }

    pub fn column_mut(&mut self, n: usize) -> &mut [Complex64] {
        let c = self.frame.channels;
        &mut self.coeffs[n * c..(n + 1) * c]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.coeffs.chunks_exact(self.frame.channels)
    }
}

/// Windowed, center-referenced DFT of one frame: writes `channels` coefficients into `out`.
pub(crate) fn analyze_frame(f: &[f64], center: usize, window: &[f64], out: &mut [Complex64]) {
    let len = f.len() as isize;
    let channels = out.len() as isize;
    out.fill(Complex64::new(0.0, 0.0));
    for (k, &g) in window.iter().enumerate() {
        let t = centered_offset(k, window.len());
        let l = (center as isize + t).rem_euclid(len) as usize;
        out[t.rem_euclid(channels) as usize].re += f[l] * g;
    }
    dft::forward(out);
}

/// Inverse-transforms `row` in place and adds `window`-weighted samples around `center`.
pub(crate) fn overlay_frame(out: &mut [Complex64], center: usize, window: &[f64], row: &mut [Complex64]) {
    dft::inverse(row);
    let len = out.len() as isize;
    let channels = row.len() as isize;
    for (k, &g) in window.iter().enumerate() {
        let t = centered_offset(k, window.len());
        let l = (center as isize + t).rem_euclid(len) as usize;
        out[l] += row[t.rem_euclid(channels) as usize] * g;
    }
}

/// DGT of the real signal `f` with respect to `frame`.
pub fn dgt_analyze(f: &[f64], frame: &GaborFrame) -> Result<DgtCoefficients> {
    if f.len() != frame.len {
        return Err(Error::ShapeMismatch(format!("signal has {} samples, frame expects {}", f.len(), frame.len)));
    }
    let mut c = DgtCoefficients::zeros(frame.clone());
    for n in 0..frame.frames() {
        analyze_frame(f, n * frame.hop, &frame.window, c.column_mut(n));
    }
    Ok(c)
}

/// One period (length `hop`) of the painless frame-operator diagonal
/// `sum_n M g[l - n hop]^2`.
pub fn painless_diagonal(window: &[f64], hop: usize, channels: usize) -> Vec<f64> {
    let mut diag = vec![0.0; hop];
    for (k, &g) in window.iter().enumerate() {
        let t = centered_offset(k, window.len());
        diag[t.rem_euclid(hop as isize) as usize] += channels as f64 * g * g;
    }
    diag
}

/// Canonical dual of `window` for a painless system with the given hop and channel count.
pub fn dual_window_for_hop(window: &[f64], hop: usize, channels: usize) -> Result<Vec<f64>> {
    if hop == 0 || window.len() > channels {
        return Err(Error::InvalidConfig("dual window needs hop > 0 and a painless window".into()));
    }
    let diag = painless_diagonal(window, hop, channels);
    let bad: Vec<usize> = (0..hop).filter(|&j| diag[j] <= 0.0).collect();
    if let Some(&index) = bad.first() {
        return Err(Error::NotAFrame { index, value: diag[index], count: bad.len() });
    }
    Ok(window
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let t = centered_offset(k, window.len());
            g / diag[t.rem_euclid(hop as isize) as usize]
        })
        .collect())
}

/// Canonical dual window of a painless uniform frame.
pub fn painless_dual_window(frame: &GaborFrame) -> Result<Vec<f64>> {
    dual_window_for_hop(&frame.window, frame.hop, frame.channels)
}

/// Overlap-add synthesis at `hop` with the given synthesis (dual) window.
/// The output has `frames * hop` samples, complex-valued.
pub fn dgt_synthesize_complex(c: &DgtCoefficients, hop: usize, dual: &[f64]) -> Result<Vec<Complex64>> {
    let out_len = c.frames() * hop;
    if hop == 0 || dual.len() > c.channels() || dual.len() > out_len {
        return Err(Error::ShapeMismatch(format!(
            "synthesis window of {} samples does not fit {} channels / {} output samples",
            dual.len(),
            c.channels(),
            out_len
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    let mut row = vec![Complex64::new(0.0, 0.0); c.channels()];
    for (n, col) in c.columns().enumerate() {
        row.copy_from_slice(col);
        overlay_frame(&mut out, n * hop, dual, &mut row);
    }
    Ok(out)
}

/// Real part of [`dgt_synthesize_complex`].
pub fn dgt_synthesize(c: &DgtCoefficients, hop: usize, dual: &[f64]) -> Result<Vec<f64>> {
    Ok(dgt_synthesize_complex(c, hop, dual)?.into_iter().map(|z| z.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of the definition over the full length-L window.
    fn naive_dgt(f: &[f64], frame: &GaborFrame) -> Vec<Complex64> {
        let len = frame.len();
        let mut g_full = vec![0.0; len];
        for (k, &g) in frame.window().iter().enumerate() {
            let t = centered_offset(k, frame.window().len());
            g_full[t.rem_euclid(len as isize) as usize] = g;
        }
        let m_count = frame.channels();
        let mut out = Vec::new();
        for n in 0..frame.frames() {
            let a = n * frame.hop();
            for m in 0..m_count {
                let mut acc = Complex64::new(0.0, 0.0);
                for (l, &x) in f.iter().enumerate() {
                    let d = (l + len - a) % len;
                    let ph = -2.0 * PI * (m * d % m_count) as f64 / m_count as f64;
                    acc += Complex64::from_polar(x * g_full[d], ph);
                }
                out.push(acc);
            }
        }
        out
    }

    fn random_signal(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = a.iter().map(|x| x * x).sum();
        (num / den).sqrt()
    }

    #[test]
    fn hann_closed_form() {
        // unrotated {0, .5, 1, .5} becomes {1, .5, 0, .5}
        assert_eq!(hann_window(4).unwrap(), vec![1.0, 0.5, 0.0, 0.5]);
        let w8 = hann_window(8).unwrap();
        assert!((w8[0] - 1.0).abs() < 1e-15);
        assert!(hann_window(1).is_err());
    }

    #[test]
    fn hann_squares_overlap_to_constant_at_75_percent() {
        let len = 64;
        let w = hann_window(len).unwrap();
        let diag = painless_diagonal(&w, len / 4, 1);
        for d in &diag {
            assert!((d - diag[0]).abs() < 1e-12);
        }
        // sum of four shifted sin^4 terms = 3/2
        assert!((diag[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn impulse_at_origin_gives_flat_first_column() {
        let frame = GaborFrame::hann(4, 16, 32).unwrap();
        let mut f = vec![0.0; 32];
        f[0] = 1.0;
        let c = dgt_analyze(&f, &frame).unwrap();
        for m in 0..16 {
            assert!((c.get(m, 0) - Complex64::new(frame.window()[0], 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn matches_naive_sum() {
        for (hop, channels, win, len, seed) in
            [(4, 16, 16, 64, 1), (8, 32, 20, 128, 2), (3, 12, 9, 36, 3), (32, 128, 128, 512, 4)]
        {
            let frame = GaborFrame::new(hann_window(win).unwrap(), hop, channels, len).unwrap();
            let f = random_signal(len, seed);
            let fast = dgt_analyze(&f, &frame).unwrap();
            let slow = naive_dgt(&f, &frame);
            let norm: f64 = slow.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let err: f64 = fast.coeffs.iter().zip(&slow).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(err / norm < 1e-10, "err {err} norm {norm}");
        }
    }

    #[test]
    fn cosine_peaks_at_its_channel() {
        let (hop, channels, len) = (16, 64, 256);
        let frame = GaborFrame::hann(hop, channels, len).unwrap();
        let m0 = 5;
        let f: Vec<f64> = (0..len).map(|l| (2.0 * PI * (m0 * l) as f64 / channels as f64).cos()).collect();
        let c = dgt_analyze(&f, &frame).unwrap();
        for n in 0..frame.frames() {
            let best = (0..=channels / 2).max_by(|&a, &b| c.get(a, n).norm().total_cmp(&c.get(b, n).norm()));
            assert_eq!(best, Some(m0));
        }
    }

    #[test]
    fn real_input_gives_conjugate_symmetric_columns() {
        let frame = GaborFrame::hann(32, 128, 512).unwrap();
        let c = dgt_analyze(&random_signal(512, 9), &frame).unwrap();
        for n in 0..frame.frames() {
            for m in 1..128 {
                assert!((c.get(128 - m, n) - c.get(m, n).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rectangular_window_without_overlap_has_reciprocal_dual() {
        let frame = GaborFrame::new(vec![1.0; 5], 5, 5, 20).unwrap();
        let dual = painless_dual_window(&frame).unwrap();
        for d in dual {
            assert!((d - 1.0 / 5.0).abs() < 1e-15);
        }
    }

    #[test]
    fn coverage_gap_is_not_a_frame() {
        let w = hann_window(8).unwrap();
        let err = dual_window_for_hop(&w, 10, 8).unwrap_err();
        assert!(matches!(err, Error::NotAFrame { .. }));
    }

    #[test]
    fn zero_coefficients_synthesize_to_zero() {
        let frame = GaborFrame::hann(8, 32, 64).unwrap();
        let dual = painless_dual_window(&frame).unwrap();
        let out = dgt_synthesize(&DgtCoefficients::zeros(frame), 8, &dual).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_coefficient_places_modulated_dual() {
        let (hop, channels, len) = (8, 32, 64);
        let frame = GaborFrame::hann(hop, channels, len).unwrap();
        let dual = painless_dual_window(&frame).unwrap();
        let (m, n) = (3, 2);
        let mut c = DgtCoefficients::zeros(frame);
        c.set(m, n, Complex64::new(1.0, 0.0));
        let out = dgt_synthesize_complex(&c, hop, &dual).unwrap();
        let mut expected = vec![Complex64::new(0.0, 0.0); len];
        for (k, &d) in dual.iter().enumerate() {
            let t = centered_offset(k, dual.len());
            let l = (n as isize * hop as isize + t).rem_euclid(len as isize) as usize;
            expected[l] = Complex64::from_polar(d, 2.0 * PI * (m as isize * t) as f64 / channels as f64);
        }
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn partition_of_unity_with_dual() {
        let frame = GaborFrame::hann(24, 96, 192).unwrap();
        let dual = painless_dual_window(&frame).unwrap();
        let len = frame.len();
        let mut acc = vec![0.0; len];
        for n in 0..frame.frames() {
            for (k, (&g, &d)) in frame.window().iter().zip(&dual).enumerate() {
                let t = centered_offset(k, dual.len());
                let l = (n as isize * 24 + t).rem_euclid(len as isize) as usize;
                acc[l] += 96.0 * g * d;
            }
        }
        for v in acc {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn princarg_examples() {
        assert!((princarg(1.5 * PI) + 0.5 * PI).abs() < 1e-15);
        assert_eq!(princarg(-PI), PI);
        assert_eq!(princarg(PI), PI);
        assert_eq!(princarg(0.0), 0.0);
    }

    #[test]
    fn compatible_len_rounds_up_to_lcm() {
        assert_eq!(GaborFrame::compatible_len(1000, 256, 1024), 1024);
        assert_eq!(GaborFrame::compatible_len(1025, 256, 1024), 2048);
        assert_eq!(GaborFrame::compatible_len(7, 3, 4), 12);
    }

    proptest! {
        #[test]
        fn perfect_reconstruction(
            win_half in 2usize..24,
            hop_div in 1usize..4,
            extra in 0usize..8,
            periods in 2usize..6,
            seed in any::<u64>(),
        ) {
            let win = 2 * win_half;
            let hop = (win / (hop_div + 1)).max(1);
            let channels = win + 2 * extra;
            let len = lcm(hop, channels) * periods;
            prop_assume!(len >= win);
            let frame = GaborFrame::new(hann_window(win).unwrap(), hop, channels, len).unwrap();
            let f = random_signal(len, seed);
            let c = dgt_analyze(&f, &frame).unwrap();
            let dual = painless_dual_window(&frame).unwrap();
            let back = dgt_synthesize(&c, hop, &dual).unwrap();
            prop_assert!(rel_err(&f, &back) <= 1e-10);
        }

        #[test]
        fn princarg_is_periodic_and_idempotent(x in -1e3f64..1e3, k in -50i32..50) {
            let p = princarg(x);
            prop_assert!(p > -PI && p <= PI);
            prop_assert_eq!(princarg(p), p);
            let shifted = princarg(x + 2.0 * PI * k as f64);
            let d = (shifted - p).abs();
            prop_assert!(d < 1e-9 || (d - 2.0 * PI).abs() < 1e-9);
        }
    }
}
