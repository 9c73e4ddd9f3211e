//! Bit-serial CRC32 (IEEE 802.3, reflected polynomial 0xEDB88320).
//!
//! Bits are fed in sequence order, so a byte stream unpacked LSB-first
//! yields the usual byte-oriented CRC32 value.

use alloc::vec::Vec;

use crate::{Error, Result};

const POLY: u32 = 0xEDB8_8320;

pub fn crc32_bits(bits: &[u8]) -> u32 {
    let mut crc = u32::MAX;
    for &b in bits {
        let fb = (crc ^ u32::from(b & 1)) & 1;
        crc >>= 1;
        if fb != 0 {
            crc ^= POLY;
        }
    }
    !crc
}

/// Returns `bits` followed by their CRC32, LSB first.
pub fn crc32_append(bits: &[u8]) -> Vec<u8> {
    let crc = crc32_bits(bits);
    let mut out = Vec::with_capacity(bits.len() + 32);
    out.extend_from_slice(bits);
    out.extend((0..32).map(|i| ((crc >> i) & 1) as u8));
    out
}

/// Verifies a trailing CRC32 appended by [`crc32_append`].
pub fn crc32_check(bits: &[u8]) -> Result<bool> {
    if bits.len() < 32 {
        return Err(Error::TooShort {
            needed: 32,
            got: bits.len(),
        });
    }
    let (msg, tail) = bits.split_at(bits.len() - 32);
    let crc = crc32_bits(msg);
    Ok(tail
        .iter()
        .enumerate()
        .all(|(i, &b)| u32::from(b & 1) == (crc >> i) & 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding_modem::bytes_to_bits;

    #[test]
    fn check_value() {
        assert_eq!(crc32_bits(&bytes_to_bits(b"123456789")), 0xCBF4_3926);
    }

    #[test]
    fn empty_message() {
        let framed = crc32_append(&[]);
        assert_eq!(framed.len(), 32);
        assert_eq!(crc32_check(&framed), Ok(true));
        assert!(crc32_check(&framed[..31]).is_err());
    }

    #[test]
    fn single_flip_fails() {
        let framed = crc32_append(&bytes_to_bits(b"rofa-crc"));
        for i in 0..framed.len() {
            let mut bad = framed.clone();
            bad[i] ^= 1;
            assert_eq!(crc32_check(&bad), Ok(false), "flip at {i}");
        }
    }
}
