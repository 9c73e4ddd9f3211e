//! Bit and symbol processing: CRC32, the K=7 rate-1/2 convolutional code,
//! constellation mapping, OFDM (de)modulation and training sequences.

pub mod conv;
pub mod crc;
pub mod fft;
pub mod ofdm;
pub mod qam;
pub mod training;

pub use conv::{conv_encode, viterbi_decode_soft};
pub use crc::{crc32_append, crc32_check};
pub use ofdm::{ofdm_demodulate, ofdm_modulate};
pub use qam::{qam_modulate, qam_soft_demod, Modulation};
pub use training::{synth_training, TrainingSequences};

use alloc::vec::Vec;

/// Unpacks bytes into bits, least significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).map(move |i| (b >> i) & 1))
        .collect()
}

/// Packs bits (LSB first) into bytes; a short final byte is zero-padded.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << i)))
        .collect()
}

/// Hard decision on log-likelihood ratios: positive means bit 1.
pub fn hard_decision(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l > 0.0)).collect()
}
