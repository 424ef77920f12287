//! Time stretching with the classical phase vocoder and with a phase vocoder
//! built on painless nonstationary Gabor frames.
//!
//! The pipeline for the adaptive vocoder is: spectral-flux onsets
//! ([`onset`]), a dyadic scale-frame window sequence laid out on the stretched
//! time axis ([`scale_frame`]), nonstationary Gabor analysis ([`nsgt`]),
//! peak-locked phase propagation ([`nspv`]) and synthesis with the canonical
//! dual frame at the synthesis positions.

pub mod dft;
pub mod error;
pub mod eval;
pub mod gabor;
pub mod nsgt;
pub mod nspv;
pub mod onset;
pub mod pv;
pub mod scale_frame;
pub mod signal;
pub mod spectrogram;

pub use error::{Error, Result};
pub use signal::{read_wav, write_wav, Signal};
