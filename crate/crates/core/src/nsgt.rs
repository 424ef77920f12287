//! Painless nonstationary Gabor transform with ragged coefficient storage.
//!
//! Frame `n` uses window `windows[assignment[n]]` centered at `centers[n]` and
//! `channels[n]` frequency channels. Rows are stored with exactly `channels[n]`
//! entries. Synthesis paints every frame with its analysis window and divides
//! by the frame-operator diagonal, which is the canonical dual in the painless case.

use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gabor::{analyze_frame, centered_offset, is_symmetric, overlay_frame};

#[derive(Debug, Clone, PartialEq)]
pub struct NsgSystem {
    windows: Vec<Vec<f64>>,
    centers: Vec<usize>,
    assignment: Vec<usize>,
    channels: Vec<usize>,
    len: usize,
}

impl NsgSystem {
    /// Validates and builds a system. Odd channel counts are rounded up to even.
    pub fn new(
        windows: Vec<Vec<f64>>,
        centers: Vec<usize>,
        assignment: Vec<usize>,
        channels: Vec<usize>,
        len: usize,
    ) -> Result<Self> {
        let frames = centers.len();
        if frames == 0 || windows.is_empty() {
            return Err(Error::InvalidConfig("system needs at least one frame and one window".into()));
        }
        if assignment.len() != frames || channels.len() != frames {
            return Err(Error::ShapeMismatch(format!(
                "{frames} centers but {} assignments and {} channel counts",
                assignment.len(),
                channels.len()
            )));
        }
        if centers.windows(2).any(|w| w[0] >= w[1]) || centers[frames - 1] >= len {
            return Err(Error::InvalidConfig("centers must be strictly increasing within [0, L)".into()));
        }
        for (j, w) in windows.iter().enumerate() {
            if w.is_empty() || w.len() > len {
                return Err(Error::InvalidConfig(format!("window {j} has invalid length {}", w.len())));
            }
            if !is_symmetric(w) {
                return Err(Error::InvalidConfig(format!("window {j} is not symmetric around zero")));
            }
        }
        let mut used = vec![false; windows.len()];
        for &j in &assignment {
            if j >= windows.len() {
                return Err(Error::InvalidConfig(format!("window index {j} out of range")));
            }
            used[j] = true;
        }
        if let Some(j) = used.iter().position(|u| !u) {
            return Err(Error::InvalidConfig(format!("window {j} is never used")));
        }
        let channels: Vec<usize> = channels.into_iter().map(|m| m + m % 2).collect();
        for n in 0..frames {
            let lg = windows[assignment[n]].len();
            if channels[n] == 0 || lg > channels[n] {
                return Err(Error::InvalidConfig(format!(
                    "frame {n}: window length {lg} exceeds {} channels (not painless)",
                    channels[n]
                )));
            }
        }
        Ok(Self { windows, centers, assignment, channels, len })
    }

    /// Uniform system: one window, centers `n * hop`, `channels` everywhere.
    pub fn uniform(window: Vec<f64>, hop: usize, channels: usize, len: usize) -> Result<Self> {
        if hop == 0 || !len.is_multiple_of(hop) {
            return Err(Error::InvalidLength { len, reason: format!("must be divisible by hop {hop}") });
        }
        let frames = len / hop;
        Self::new(vec![window], (0..frames).map(|n| n * hop).collect(), vec![0; frames], vec![channels; frames], len)
    }

    /// Same windows, assignment and channel counts placed at new centers on a new length.
    pub fn relocated(&self, centers: Vec<usize>, len: usize) -> Result<Self> {
        Self::new(self.windows.clone(), centers, self.assignment.clone(), self.channels.clone(), len)
    }

    pub fn windows(&self) -> &[Vec<f64>] {
        &self.windows
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn channels(&self) -> &[usize] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn frames(&self) -> usize {
        self.centers.len()
    }

    pub fn window_of(&self, n: usize) -> &[f64] {
        &self.windows[self.assignment[n]]
    }

    pub fn max_window_len(&self) -> usize {
        self.windows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Total coefficient count divided by the signal length.
    pub fn redundancy(&self) -> f64 {
        self.channels.iter().sum::<usize>() as f64 / self.len as f64
    }
}

/// Ragged coefficient array: row `n` holds `channels[n]` values.
#[derive(Debug, Clone, PartialEq)]
pub struct NsgCoefficients {
    rows: Vec<Vec<Complex64>>,
}

#[derive(Serialize)]
struct CoefficientEntry {
    frame: usize,
    bin: usize,
    re: f64,
    im: f64,
}

impl NsgCoefficients {
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        Self { rows }
    }

    pub fn zeros(sys: &NsgSystem) -> Self {
        Self { rows: sys.channels.iter().map(|&m| vec![Complex64::new(0.0, 0.0); m]).collect() }
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.rows
    }

    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.rows[n]
    }

    pub fn frames(&self) -> usize {
        self.rows.len()
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Debug dump as CSV: `frame,bin,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "frame,bin,re,im")?;
        for (n, row) in self.rows.iter().enumerate() {
            for (m, z) in row.iter().enumerate() {
                writeln!(out, "{n},{m},{:e},{:e}", z.re, z.im)?;
            }
        }
        Ok(())
    }

    /// Debug dump as a JSON array of `{frame, bin, re, im}` objects.
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let entries: Vec<CoefficientEntry> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(frame, row)| {
                row.iter().enumerate().map(move |(bin, z)| CoefficientEntry { frame, bin, re: z.re, im: z.im })
            })
            .collect();
        serde_json::to_writer(out, &entries)?;
        Ok(())
    }
}

pub fn nsgt_analyze(f: &[f64], sys: &NsgSystem) -> Result<NsgCoefficients> {
    if f.len() != sys.len {
        return Err(Error::ShapeMismatch(format!("signal has {} samples, system expects {}", f.len(), sys.len)));
    }
    let rows = (0..sys.frames())
        .into_par_iter()
        .map(|n| {
            let mut row = vec![Complex64::new(0.0, 0.0); sys.channels[n]];
            analyze_frame(f, sys.centers[n], sys.window_of(n), &mut row);
            row
        })
        .collect();
    Ok(NsgCoefficients { rows })
}

/// Frame-operator diagonal of a painless system.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDiagonal {
    pub values: Vec<f64>,
    pub min: f64,
    pub argmin: usize,
}

impl FrameDiagonal {
    pub fn nonpositive(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v <= 0.0).map(|(i, _)| i).collect()
    }

    pub fn ensure_positive(&self) -> Result<()> {
        if self.min > 0.0 {
            return Ok(());
        }
        Err(Error::NotAFrame { index: self.argmin, value: self.min, count: self.nonpositive().len() })
    }
}

pub fn frame_diagonal(sys: &NsgSystem) -> FrameDiagonal {
    let len = sys.len as isize;
    let mut values = vec![0.0; sys.len];
    for n in 0..sys.frames() {
        let w = sys.window_of(n);
        let m = sys.channels[n] as f64;
        for (k, &g) in w.iter().enumerate() {
            let l = (sys.centers[n] as isize + centered_offset(k, w.len())).rem_euclid(len) as usize;
            values[l] += m * g * g;
        }
    }
    let (argmin, min) = values.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or((0, 0.0));
    FrameDiagonal { values, min, argmin }
}

/// Synthesis with the canonical dual of `sys`, complex-valued.
pub fn nsgt_synthesize_complex(c: &NsgCoefficients, sys: &NsgSystem) -> Result<Vec<Complex64>> {
    if c.rows.len() != sys.frames() {
        return Err(Error::ShapeMismatch(format!("{} coefficient rows for {} frames", c.rows.len(), sys.frames())));
    }
    if let Some(n) = (0..sys.frames()).find(|&n| c.rows[n].len() != sys.channels[n]) {
        return Err(Error::ShapeMismatch(format!(
            "row {n} has {} entries, frame expects {}",
            c.rows[n].len(),
            sys.channels[n]
        )));
    }
    let diag = frame_diagonal(sys);
    diag.ensure_positive()?;

    let mut out = vec![Complex64::new(0.0, 0.0); sys.len];
    // Each row is independent; accumulation stays sequential so the result
    // does not depend on the thread schedule.
    let mut scratch: Vec<Complex64> = Vec::new();
    for n in 0..sys.frames() {
        scratch.clear();
        scratch.extend_from_slice(&c.rows[n]);
        overlay_frame(&mut out, sys.centers[n], sys.window_of(n), &mut scratch);
    }
    for (x, d) in out.iter_mut().zip(&diag.values) {
        *x /= *d;
    }
    Ok(out)
}

/// Real part of [`nsgt_synthesize_complex`].
pub fn nsgt_synthesize(c: &NsgCoefficients, sys: &NsgSystem) -> Result<Vec<f64>> {
    Ok(nsgt_synthesize_complex(c, sys)?.into_iter().map(|z| z.re).collect())
}

pub fn redundancy(sys: &NsgSystem) -> f64 {
    sys.redundancy()
}
