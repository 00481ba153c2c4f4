//! Reproducible random sub-streams.
//!
//! A stream is identified by `(master seed, run index, label)`. The three
//! parts are folded into a 256-bit ChaCha8 key with SplitMix64:
//!
//! ```text
//! x = splitmix(master)
//! x = splitmix(x ^ splitmix(index + 0x632b_e59b_d9b4_e019))
//! x = splitmix(x ^ fnv1a64(label))
//! key words w_i = splitmix(x + i * 0x9e37_79b9_7f4a_7c15), i = 0..4, little endian
//! ```
//!
//! Only fixed-width integer arithmetic is involved, so the same triple
//! yields the same stream on every platform.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Derives the sub-stream for `(master, index, label)`.
pub fn seeded_stream(master: u64, index: u64, label: &str) -> Stream {
    let mut x = splitmix64(master);
    x = splitmix64(x ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)));
    x = splitmix64(x ^ fnv1a64(label.as_bytes()));
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let w = splitmix64(x.wrapping_add((i as u64).wrapping_mul(GOLDEN)));
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in `[0, 1)` from the top 53 bits of one `u64`.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` by multiply-shift on one `u64` draw.
pub fn index_below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefix(mut s: Stream) -> [u64; 8] {
        let mut out = [0; 8];
        for w in &mut out {
            *w = s.next_u64();
        }
        out
    }

    #[test]
    fn same_triple_same_stream() {
        assert_eq!(
            prefix(seeded_stream(7, 3, "env")),
            prefix(seeded_stream(7, 3, "env"))
        );
    }

    #[test]
    fn distinct_labels_and_indices_diverge() {
        let base = prefix(seeded_stream(7, 0, "env"));
        for (idx, label) in [(0, "agent-0"), (0, "agent-1"), (1, "env"), (0, "output")] {
            let other = prefix(seeded_stream(7, idx, label));
            assert_ne!(base, other);
            // no shared word at any position either
            assert!(base.iter().zip(&other).all(|(a, b)| a != b));
        }
        assert_ne!(base, prefix(seeded_stream(8, 0, "env")));
    }

    #[test]
    fn unit_draws_in_range() {
        let mut s = seeded_stream(1, 0, "x");
        for _ in 0..10_000 {
            let u = unit_f64(&mut s);
            assert!((0.0..1.0).contains(&u));
            assert!(index_below(&mut s, 5) < 5);
        }
    }

    #[test]
    fn mixing_is_pinned() {
        // Frozen to catch accidental changes to the documented mixing.
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
