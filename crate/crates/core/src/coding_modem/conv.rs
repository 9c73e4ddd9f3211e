//! Rate-1/2 convolutional code, constraint length 7, generators 133/171
//! (octal), zero-tail terminated, with a soft-input Viterbi decoder.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const CONSTRAINT_LEN: usize = 7;
pub const TAIL_BITS: usize = CONSTRAINT_LEN - 1;
pub const G0: u32 = 0o133;
pub const G1: u32 = 0o171;

const N_STATES: usize = 1 << TAIL_BITS;

#[inline]
fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Coded pair emitted when `input` enters the encoder in `state`, and the
/// next state. The newest bit sits in the register's most significant
/// position.
#[inline]
pub fn step(state: usize, input: u8) -> (u8, u8, usize) {
    let r = (u32::from(input) << TAIL_BITS) | state as u32;
    (parity(r & G0), parity(r & G1), (r >> 1) as usize)
}

/// Encodes `bits` followed by six zero tail bits.
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * (bits.len() + TAIL_BITS));
    let mut state = 0;
    for &b in bits.iter().chain([0u8; TAIL_BITS].iter()) {
        let (c0, c1, next) = step(state, b & 1);
        out.push(c0);
        out.push(c1);
        state = next;
    }
    out
}

/// Path-metric increment for one coded pair. Positive LLR favours bit 1.
#[inline]
pub fn branch_metric(l0: f64, l1: f64, c0: u8, c1: u8) -> f64 {
    let s0 = if c0 == 1 { l0 } else { -l0 };
    let s1 = if c1 == 1 { l1 } else { -l1 };
    s0 + s1
}

/// Maximum-likelihood message under the correlation metric
/// `sum(llr * (2c - 1))`. Exact metric ties go to the lexicographically
/// smaller message. The returned message excludes the tail.
pub fn viterbi_decode_soft(llrs: &[f64]) -> Result<Vec<u8>> {
    if !llrs.len().is_multiple_of(2) {
        return Err(Error::Decode("coded length must be even"));
    }
    if llrs.len() < 2 * TAIL_BITS {
        return Err(Error::TooShort {
            needed: 2 * TAIL_BITS,
            got: llrs.len(),
        });
    }
    let steps = llrs.len() / 2;
    let n_msg = steps - TAIL_BITS;

    // precomputed branch outputs: (c0, c1) for each (state, input)
    let mut out_bits = [[(0u8, 0u8); 2]; N_STATES];
    for (s, o) in out_bits.iter_mut().enumerate() {
        for b in 0..2u8 {
            let (c0, c1, _) = step(s, b);
            o[b as usize] = (c0, c1);
        }
    }

    let mut metric = [f64::NEG_INFINITY; N_STATES];
    metric[0] = 0.0;
    let mut next = [f64::NEG_INFINITY; N_STATES];
    // choice[t * N_STATES + s] = low bit of the predecessor of s at step t
    let mut choice = vec![0u8; steps * N_STATES];

    for t in 0..steps {
        let (l0, l1) = (llrs[2 * t], llrs[2 * t + 1]);
        let input_allowed = if t < n_msg { 2 } else { 1 };
        for (s_next, slot) in next.iter_mut().enumerate() {
            let input = s_next >> (TAIL_BITS - 1);
            if input >= input_allowed {
                *slot = f64::NEG_INFINITY;
                continue;
            }
            let base = (s_next << 1) & (N_STATES - 1);
            let mut best = f64::NEG_INFINITY;
            let mut pick = 0u8;
            for low in 0..2u8 {
                let p = base | low as usize;
                if metric[p] == f64::NEG_INFINITY {
                    continue;
                }
                let (c0, c1) = out_bits[p][input];
                let m = metric[p] + branch_metric(l0, l1, c0, c1);
                if m > best {
                    best = m;
                    pick = low;
                } else if m == best && low == 1 {
                    // both predecessors tie: keep the smaller prefix
                    let p0 = base;
                    if prefix_less(&choice, t, p, p0) {
                        pick = 1;
                    }
                }
            }
            *slot = best;
            choice[t * N_STATES + s_next] = pick;
        }
        core::mem::swap(&mut metric, &mut next);
    }

    let mut bits = vec![0u8; steps];
    let mut s = 0usize;
    for t in (0..steps).rev() {
        bits[t] = (s >> (TAIL_BITS - 1)) as u8;
        s = ((s << 1) & (N_STATES - 1)) | choice[t * N_STATES + s] as usize;
    }
    bits.truncate(n_msg);
    Ok(bits)
}

/// Whether the survivor ending in state `a` after step `t - 1` spells a
/// lexicographically smaller message than the one ending in `b`.
fn prefix_less(choice: &[u8], t: usize, mut a: usize, mut b: usize) -> bool {
    let mut less = false;
    let mut k = t;
    while a != b && k > 0 {
        k -= 1;
        let (ba, bb) = (a >> (TAIL_BITS - 1), b >> (TAIL_BITS - 1));
        if ba != bb {
            less = ba < bb;
        }
        a = ((a << 1) & (N_STATES - 1)) | choice[k * N_STATES + a] as usize;
        b = ((b << 1) & (N_STATES - 1)) | choice[k * N_STATES + b] as usize;
    }
    less
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_llr(coded: &[u8]) -> Vec<f64> {
        coded.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect()
    }

    #[test]
    fn zero_in_zero_out() {
        let c = conv_encode(&[0; 10]);
        assert_eq!(c.len(), 32);
        assert!(c.iter().all(|&b| b == 0));
    }

    #[test]
    fn impulse_response_is_generator_taps() {
        let c = conv_encode(&[1]);
        let g0: Vec<u8> = (0..7).rev().map(|i| ((G0 >> i) & 1) as u8).collect();
        let g1: Vec<u8> = (0..7).rev().map(|i| ((G1 >> i) & 1) as u8).collect();
        let even: Vec<u8> = c.iter().step_by(2).copied().collect();
        let odd: Vec<u8> = c.iter().skip(1).step_by(2).copied().collect();
        assert_eq!(even, g0);
        assert_eq!(odd, g1);
    }

    #[test]
    fn noiseless_round_trip() {
        for m in 0u32..(1 << 16) {
            if m % 257 != 0 {
                continue;
            }
            let msg: Vec<u8> = (0..16).map(|i| ((m >> i) & 1) as u8).collect();
            let dec = viterbi_decode_soft(&to_llr(&conv_encode(&msg))).unwrap();
            assert_eq!(dec, msg);
        }
    }

    #[test]
    fn empty_message_decodes() {
        let c = conv_encode(&[]);
        assert_eq!(viterbi_decode_soft(&to_llr(&c)).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn bad_lengths() {
        assert!(viterbi_decode_soft(&[0.0; 13]).is_err());
        assert!(viterbi_decode_soft(&[0.0; 10]).is_err());
    }

    #[test]
    fn all_zero_llrs_pick_zero_message() {
        assert_eq!(viterbi_decode_soft(&[0.0; 28]).unwrap(), vec![0u8; 8]);
    }
}
