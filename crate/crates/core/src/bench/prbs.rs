//! Maximal-length pseudo-random binary sequences.
//!
//! A 16-bit Galois LFSR with feedback polynomial x¹⁶ + x¹⁴ + x¹³ + x¹¹ + 1
//! (tap mask `0xB400`) cycles through all 65535 nonzero states. The
//! output bit (the bit shifted out) maps to ±1.

/// Tap mask of the feedback polynomial x¹⁶ + x¹⁴ + x¹³ + x¹¹ + 1.
pub const TAPS: u16 = 0xB400;
/// Sequence period, 2¹⁶ − 1.
pub const PERIOD: usize = 65_535;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lfsr {
    state: u16,
}

impl Lfsr {
    /// A zero seed would lock the register; it is mapped to 1.
    pub fn new(seed: u16) -> Self {
        Self {
            state: if seed == 0 { 1 } else { seed },
        }
    }

    /// Seeds from a 64-bit value (folded into a nonzero 16-bit state).
    pub fn from_seed(seed: u64) -> Self {
        let folded = (seed % PERIOD as u64) as u16;
        Self::new(folded.wrapping_add(1))
    }

    pub fn state(&self) -> u16 {
        self.state
    }

    /// Advances one step and returns the output bit.
    pub fn next_bit(&mut self) -> bool {
        let out = self.state & 1 == 1;
        self.state >>= 1;
        if out {
            self.state ^= TAPS;
        }
        out
    }

    pub fn skip(&mut self, steps: usize) {
        for _ in 0..steps % PERIOD {
            self.next_bit();
        }
    }

    /// Next level, `+1` or `−1`.
    pub fn next_level(&mut self) -> f64 {
        if self.next_bit() {
            1.0
        } else {
            -1.0
        }
    }
}

/// `channels` PRBS columns of `length` samples. Channel `c` is the same
/// m-sequence advanced by `c·⌊65535/channels⌋` steps, so channels stay
/// far apart in phase and are nearly uncorrelated.
pub fn prbs_matrix(length: usize, channels: usize, seed: u64) -> nalgebra::DMatrix<f64> {
    let spacing = PERIOD / channels.max(1);
    let mut cols: Vec<Lfsr> = (0..channels)
        .map(|c| {
            let mut l = Lfsr::from_seed(seed);
            l.skip(c * spacing);
            l
        })
        .collect();
    let mut u = nalgebra::DMatrix::zeros(length, channels);
    for k in 0..length {
        for (c, l) in cols.iter_mut().enumerate() {
            u[(k, c)] = l.next_level();
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximal_period() {
        let mut l = Lfsr::new(1);
        let start = l.state();
        let mut n = 0;
        loop {
            l.next_bit();
            n += 1;
            if l.state() == start {
                break;
            }
            assert!(n <= PERIOD);
        }
        assert_eq!(n, PERIOD);
    }

    #[test]
    fn balanced_levels() {
        let mut l = Lfsr::new(0xACE1);
        let ones = (0..PERIOD).filter(|_| l.next_bit()).count();
        // An m-sequence has one more 1 than 0 per period.
        assert_eq!(ones, PERIOD / 2 + 1);
    }

    #[test]
    fn zero_seed_does_not_lock() {
        let mut l = Lfsr::new(0);
        assert!((0..32).any(|_| l.next_bit()));
    }

    #[test]
    fn deterministic_and_decorrelated_channels() {
        let a = prbs_matrix(4000, 3, 42);
        assert_eq!(a, prbs_matrix(4000, 3, 42));
        assert_ne!(a, prbs_matrix(4000, 3, 43));
        for i in 0..3 {
            for j in 0..i {
                let corr: f64 = a.column(i).dot(&a.column(j)) / 4000.0;
                assert!(corr.abs() < 0.1, "corr({i},{j}) = {corr}");
            }
        }
    }
}
