//! Baseband PHY for a reliability-oriented OFDMA uplink/downlink system.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure signal
//! processing: packet layouts, bit and symbol coding, OFDM modulation,
//! the STF/LTF/P-LTF carrier frequency offset estimator with mid-packet
//! integer recovery, simulated impairments, frame timing and the multiuser
//! uplink receiver. File formats, the CLI and the Monte-Carlo runner live in
//! the `rofa` crate.
//!
//! Units: frequency offsets are radians per sample unless a name says `hz`;
//! sample indices are `usize` within a buffer and `i64` on a timeline.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cfo;
pub mod channel;
pub mod coding_modem;
mod error;
pub mod framing;
pub mod metrics;
pub mod packet;
pub mod sync_rx;

pub use error::Error;
pub use num_complex::Complex64;

use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

pub type Result<T> = core::result::Result<T, Error>;

/// Complex baseband samples tagged with their sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl SampleStream {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    /// Mean of `|x|^2` over the stream; zero when empty.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }
}

impl Deref for SampleStream {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.samples
    }
}

impl DerefMut for SampleStream {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }
}

pub(crate) fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}
