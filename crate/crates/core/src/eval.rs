//! Synthetic melodies, their ideal stretches, and the spectrogram error used
//! to score stretching algorithms against them.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gabor::{dgt_analyze, GaborFrame};
use crate::nspv::{nspv_stretch, NspvConfig};
use crate::pv::{pv_stretch, PvConfig};
use crate::signal::Signal;

pub const EVAL_SAMPLE_RATE: u32 = 16000;
pub const MIN_EVAL_RATE: f64 = 0.5;
pub const MAX_EVAL_RATE: f64 = 3.75;

/// Lowest and highest piano fundamentals in Hz.
const PIANO_RANGE: (f64, f64) = (27.5, 4186.01);

pub fn piano_frequency(key: i32) -> f64 {
    440.0 * 2f64.powf((key - 49) as f64 / 12.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Note {
    /// Seconds from the start of the melody.
    pub start: f64,
    pub duration: f64,
    pub key: i32,
    pub frequency: f64,
    pub attack: f64,
    pub release: f64,
    /// Starting phase of each partial.
    pub phases: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MelodySpec {
    pub seed: u64,
    pub notes: Vec<Note>,
    /// Amplitude of the fundamental and of the next three harmonics.
    pub partial_amps: [f64; 4],
    pub gain: f64,
    pub sample_rate: u32,
}

impl MelodySpec {
    /// 4 to 10 consecutive notes of 0.5 s or 1 s, each a step of one or two
    /// semitones from the last, with harmonics at amplitudes `2^-h`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.gen_range(4..=10);
        let mut key: i32 = rng.gen_range(37..=61);
        let mut start = 0.0;
        let mut notes = Vec::with_capacity(count);
        for i in 0..count {
            if i > 0 {
                let step = [-2, -1, 1, 2][rng.gen_range(0..4)];
                key = if (1..=88).contains(&(key + step)) { key + step } else { key - step };
            }
            let duration = if rng.gen_bool(0.5) { 0.5 } else { 1.0 };
            let attack = rng.gen_range(0.005..=0.030);
            let release = rng.gen_range(0.020..=0.100);
            let phases = [0; 4].map(|_| rng.gen_range(0.0..2.0 * PI));
            notes.push(Note { start, duration, key, frequency: piano_frequency(key), attack, release, phases });
            start += duration;
        }
        Self { seed, notes, partial_amps: [1.0, 0.5, 0.25, 0.125], gain: 0.5, sample_rate: EVAL_SAMPLE_RATE }
    }

    pub fn validate(&self) -> Result<()> {
        if self.notes.is_empty() || self.sample_rate == 0 {
            return Err(Error::InvalidConfig("melody needs notes and a sample rate".into()));
        }
        for (i, n) in self.notes.iter().enumerate() {
            // negated so a NaN duration is rejected too
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(n.duration > 0.0) || n.attack < 0.0 || n.release < 0.0 || n.attack + n.release > n.duration {
                return Err(Error::InvalidConfig(format!("note {i} has an inconsistent envelope")));
            }
            if n.frequency < PIANO_RANGE.0 - 1e-9 || n.frequency > PIANO_RANGE.1 {
                return Err(Error::InvalidConfig(format!("note {i} at {} Hz is off the keyboard", n.frequency)));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.notes.iter().map(|n| n.duration).sum()
    }

    /// Every time quantity multiplied by `r`; pitches and phases unchanged.
    pub fn stretched(&self, r: f64) -> Self {
        let notes = self
            .notes
            .iter()
            .map(|n| Note {
                start: n.start * r,
                duration: n.duration * r,
                attack: n.attack * r,
                release: n.release * r,
                ..n.clone()
            })
            .collect();
        Self { notes, ..self.clone() }
    }
}

fn envelope(t: f64, n: &Note) -> f64 {
    let rise = if n.attack > 0.0 { (t / n.attack).min(1.0) } else { 1.0 };
    let fall = if n.release > 0.0 { ((n.duration - t) / n.release).min(1.0) } else { 1.0 };
    rise.min(fall).max(0.0)
}

pub fn synth_melody(spec: &MelodySpec) -> Result<Signal> {
    spec.validate()?;
    let sr = spec.sample_rate as f64;
    let bounds: Vec<(usize, usize)> = spec
        .notes
        .iter()
        .map(|n| ((n.start * sr).round() as usize, ((n.start + n.duration) * sr).round() as usize))
        .collect();
    let len = bounds.iter().map(|b| b.1).max().unwrap_or(0);
    let mut out = vec![0.0; len];
    for (n, &(s, e)) in spec.notes.iter().zip(&bounds) {
        for (h, (&amp, &phase)) in spec.partial_amps.iter().zip(&n.phases).enumerate() {
            let freq = (h + 1) as f64 * n.frequency;
            if amp == 0.0 || freq >= sr / 2.0 {
                continue;
            }
            for (l, v) in out[s..e].iter_mut().enumerate() {
                let t = l as f64 / sr;
                *v += spec.gain * amp * envelope(t, n) * (2.0 * PI * freq * t + phase).sin();
            }
        }
    }
    Signal::new(out, spec.sample_rate)
}

/// The melody as it would sound played `r` times slower.
pub fn perfect_stretch(spec: &MelodySpec, r: f64) -> Result<Signal> {
    if !(MIN_EVAL_RATE..=MAX_EVAL_RATE).contains(&r) {
        return Err(Error::InvalidRate(r));
    }
    synth_melody(&spec.stretched(r))
}

/// Relative L2 distance between the DGT magnitudes of `reference` and `s`,
/// using a Hann window of 2048 samples, hop 128 and 2048 channels. The shorter
/// signal is zero-padded.
pub fn error_measure(reference: &[f64], s: &[f64]) -> Result<f64> {
    if reference.is_empty() || s.is_empty() {
        return Err(Error::ShapeMismatch("error measure needs two nonempty signals".into()));
    }
    let (hop, channels) = (128, 2048);
    let len = GaborFrame::compatible_len(reference.len().max(s.len()), hop, channels);
    let frame = GaborFrame::hann(hop, channels, len)?;
    let magnitudes = |x: &[f64]| -> Result<Vec<f64>> {
        let mut padded = x.to_vec();
        padded.resize(len, 0.0);
        Ok(dgt_analyze(&padded, &frame)?.coeffs().iter().map(|z| z.norm()).collect())
    };
    let (a, b) = (magnitudes(reference)?, magnitudes(s)?);
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    Ok(match (num == 0.0, den == 0.0) {
        (true, _) => 0.0,
        (false, true) => f64::INFINITY,
        _ => (num / den).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateChoice {
    /// Uniform in `[0.5, 3.75]`, drawn per signal from the corpus seed.
    Random,
    /// Cycled over the signals.
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub count: usize,
    pub seed: u64,
    pub rates: RateChoice,
    pub nspv: NspvConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { count: 50, seed: 0, rates: RateChoice::Random, nspv: NspvConfig::default() }
    }
}

pub const PV_CONFIGS: [(usize, usize); 2] = [(256, 1024), (128, 512)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalResult {
    pub seed: u64,
    pub r: f64,
    pub e_pv_256_1024: f64,
    pub e_pv_128_512: f64,
    pub e_nspv: f64,
    pub red_pv: f64,
    pub red_nspv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Averages {
    pub e_pv_256_1024: f64,
    pub e_pv_128_512: f64,
    pub e_nspv: f64,
    pub red_pv: f64,
    pub red_nspv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_signal: Vec<SignalResult>,
    pub averages: Averages,
}

impl EvalReport {
    pub fn from_results(per_signal: Vec<SignalResult>) -> Self {
        let n = per_signal.len().max(1) as f64;
        let mean = |f: fn(&SignalResult) -> f64| per_signal.iter().map(f).sum::<f64>() / n;
        let averages = Averages {
            e_pv_256_1024: mean(|s| s.e_pv_256_1024),
            e_pv_128_512: mean(|s| s.e_pv_128_512),
            e_nspv: mean(|s| s.e_nspv),
            red_pv: mean(|s| s.red_pv),
            red_nspv: mean(|s| s.red_nspv),
        };
        Self { per_signal, averages }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "seed,r,e_pv_256_1024,e_pv_128_512,e_nspv,red_pv,red_nspv")?;
        for s in &self.per_signal {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.seed, s.r, s.e_pv_256_1024, s.e_pv_128_512, s.e_nspv, s.red_pv, s.red_nspv
            )?;
        }
        Ok(())
    }
}

/// Scores both PV configurations and NSPV on one melody at rate `r`.
pub fn evaluate_signal(seed: u64, r: f64, nspv: &NspvConfig) -> Result<SignalResult> {
    let spec = MelodySpec::random(seed);
    let f = synth_melody(&spec)?;
    let reference = perfect_stretch(&spec, r)?;
    let mut e_pv = [0.0; 2];
    for (e, (hop, channels)) in e_pv.iter_mut().zip(PV_CONFIGS) {
        let out = pv_stretch(f.samples(), r, &PvConfig::new(hop, channels))?;
        *e = error_measure(reference.samples(), &out.samples)?;
    }
    let out = nspv_stretch(f.samples(), r, nspv)?;
    Ok(SignalResult {
        seed,
        r,
        e_pv_256_1024: e_pv[0],
        e_pv_128_512: e_pv[1],
        e_nspv: error_measure(reference.samples(), &out.samples)?,
        red_pv: PV_CONFIGS[0].1 as f64 / PV_CONFIGS[0].0 as f64,
        red_nspv: out.analysis_redundancy,
    })
}

/// Per-signal seeds and rates, drawn sequentially so the corpus does not
/// depend on scheduling.
pub fn corpus_draws(cfg: &CorpusConfig) -> Vec<(u64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.count)
        .map(|i| {
            let seed = rng.gen::<u64>();
            let r = match &cfg.rates {
                RateChoice::Random => rng.gen_range(MIN_EVAL_RATE..=MAX_EVAL_RATE),
                RateChoice::List(list) => list[i % list.len()],
            };
            (seed, r)
        })
        .collect()
}

pub fn run_corpus(cfg: &CorpusConfig) -> Result<EvalReport> {
    if cfg.count == 0 {
        return Err(Error::InvalidConfig("corpus needs at least one signal".into()));
    }
    if let RateChoice::List(list) = &cfg.rates {
        if list.is_empty() {
            return Err(Error::InvalidConfig("empty rate list".into()));
        }
    }
    let results = corpus_draws(cfg)
        .into_par_iter()
        .map(|(seed, r)| evaluate_signal(seed, r, &cfg.nspv))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_results(results))
}
