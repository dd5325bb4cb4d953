//! Multichannel AM-FM demodulation of speech resonances.
//!
//! A Gabor filterbank splits each microphone signal into bands. Energy
//! operators turn every band into instantaneous frequency and amplitude
//! tracks, using cross energies of the least noisy microphone pair when more
//! than one channel is available. The tracks become frame-level MIF and CIF
//! feature matrices.
//!
//! ```
//! use mmdemod::audio::AudioBuffer;
//! use mmdemod::demod::esa_single;
//! use mmdemod::filterbank::{design_filterbank, FilterbankConfig, Profile};
//!
//! let bank = design_filterbank(&FilterbankConfig::for_profile(Profile::Cif, 16000)).unwrap();
//! let band = &bank.filters()[3];
//! let w = band.center_freq();
//! let x = AudioBuffer::new((0..4000).map(|n| (w * n as f64).cos()).collect(), 16000).unwrap();
//! let d = esa_single(&x, band).unwrap();
//! assert!((d.freq[2000] - band.center_hz()).abs() < 0.01 * band.center_hz());
//! ```
//!
//! The guide in `book/` walks through each stage with runnable examples.

pub mod audio;
pub mod demod;
pub mod energy;
pub mod error;
pub mod eval;
pub mod features;
pub mod filterbank;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/energy-operators.md")]
    pub mod energy_operators {}
    #[doc = include_str!("../../../book/src/filterbank.md")]
    pub mod filterbank {}
    #[doc = include_str!("../../../book/src/demodulation.md")]
    pub mod demodulation {}
    #[doc = include_str!("../../../book/src/multichannel.md")]
    pub mod multichannel {}
    #[doc = include_str!("../../../book/src/features.md")]
    pub mod features {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
