//! Mono audio buffers and WAV input/output.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// A finite, nonempty mono sample buffer with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("no samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidSignal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn map_hound(err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::FormatError(msg) => Error::CorruptFile(msg.to_string()),
        hound::Error::TooWide => Error::UnsupportedFormat("sample width too large".into()),
        hound::Error::UnfinishedSample => Error::CorruptFile("unfinished sample".into()),
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV feature".into()),
        hound::Error::InvalidSampleFormat => Error::UnsupportedFormat("invalid sample format".into()),
    }
}

/// Once the file is open, short reads mean the RIFF structure is truncated.
fn map_hound_read(err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::CorruptFile(format!("truncated file: {e}")),
        other => map_hound(other),
    }
}

/// Reads a 16-bit PCM or 32-bit float WAV file, mixing stereo down to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let file = BufReader::new(File::open(path)?);
    let reader = WavReader::new(file).map_err(map_hound_read)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels != 1 && channels != 2 {
        return Err(Error::UnsupportedFormat(format!("{channels} channels")));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound_read)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound_read)?,
        (fmt, bits) => return Err(Error::UnsupportedFormat(format!("{fmt:?} with {bits} bits per sample"))),
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(Error::CorruptFile("partial sample frame at end of data".into()));
    }

    let samples: Vec<f64> =
        interleaved.chunks_exact(channels).map(|frame| frame.iter().sum::<f64>() / channels as f64).collect();
    if samples.is_empty() {
        return Err(Error::CorruptFile("data chunk holds no samples".into()));
    }
    Signal::new(samples, spec.sample_rate)
}

/// Writes `signal` as a mono 32-bit float WAV file. Samples are not clamped.
pub fn write_wav(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(map_hound)?;
    for &s in &signal.samples {
        writer.write_sample(s as f32).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pcm16(path: &Path, channels: u16, samples: &[i16]) {
        let spec = WavSpec { channels, sample_rate: 16000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &s in samples {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn pcm16_is_scaled_by_32768() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        write_pcm16(&path, 1, &[0, 16384, -16384]);
        let s = read_wav(&path).unwrap();
        assert_eq!(s.samples(), &[0.0, 0.5, -0.5]);
        assert_eq!(s.sample_rate(), 16000);
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = WavSpec { channels: 2, sample_rate: 44100, bits_per_sample: 32, sample_format: SampleFormat::Float };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(1.0f32).unwrap();
        w.write_sample(0.0f32).unwrap();
        w.finalize().unwrap();
        let s = read_wav(&path).unwrap();
        assert_eq!(s.samples(), &[0.5]);
    }

    #[test]
    fn float_roundtrip_keeps_length_and_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let n = 1234;
        let sig = Signal::new((0..n).map(|i| (i as f64 * 0.01).sin()).collect(), 44100).unwrap();
        write_wav(&path, &sig).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.len(), n);
        assert_eq!(back.sample_rate(), 44100);
    }

    #[test]
    fn single_zero_sample_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.wav");
        write_wav(&path, &Signal::new(vec![0.0], 8000).unwrap()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let data = bytes.windows(4).position(|w| w == b"data").unwrap();
        assert_eq!(&bytes[data + 4..data + 8], &4u32.to_le_bytes());
        assert_eq!(&bytes[data + 8..], &[0, 0, 0, 0]);
        assert_eq!(read_wav(&path).unwrap().samples(), &[0.0]);
    }

    #[test]
    fn values_above_one_are_not_clamped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.wav");
        write_wav(&path, &Signal::new(vec![1.5, -2.25], 8000).unwrap()).unwrap();
        assert_eq!(read_wav(&path).unwrap().samples(), &[1.5, -2.25]);
    }

    #[test]
    fn pcm24_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p24.wav");
        let spec = WavSpec { channels: 1, sample_rate: 8000, bits_per_sample: 24, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(100i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn truncated_data_chunk_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        write_pcm16(&path, 1, &[1, 2, 3, 4, 5, 6, 7, 8]);
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        let r = read_wav(&path);
        assert!(matches!(r, Err(Error::CorruptFile(_))), "{r:?}");
    }

    #[test]
    fn signal_rejects_non_finite() {
        assert!(Signal::new(vec![0.0, f64::NAN], 1).is_err());
        assert!(Signal::new(vec![], 1).is_err());
        assert!(Signal::new(vec![0.0], 0).is_err());
    }
}
