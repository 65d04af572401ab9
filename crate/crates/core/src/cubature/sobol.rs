//! Scrambled Sobol points in up to eight dimensions.
//!
//! Direction numbers follow the Joe–Kuo primitive-polynomial table. Each
//! randomization applies a random lower-triangular binary matrix (Matoušek
//! linear scramble) followed by a random digital shift.

use rand::Rng as _;

use super::MAX_DIM;
use crate::rng::Rng;

const BITS: usize = 32;

/// `(degree, polynomial coefficients, initial m values)` for dimensions 2..=8.
const TABLE: [(usize, u32, &[u32]); MAX_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

fn direction_numbers(dim: usize) -> Vec<[u32; BITS]> {
    let mut out = Vec::with_capacity(dim);
    let mut v0 = [0u32; BITS];
    for (i, v) in v0.iter_mut().enumerate() {
        *v = 1u32 << (BITS - 1 - i);
    }
    out.push(v0);
    for &(s, a, m) in TABLE.iter().take(dim.saturating_sub(1)) {
        let mut v = [0u32; BITS];
        for i in 0..s {
            v[i] = m[i] << (BITS - 1 - i);
        }
        for i in s..BITS {
            let mut x = v[i - s] ^ (v[i - s] >> s);
            for k in 1..s {
                if (a >> (s - 1 - k)) & 1 == 1 {
                    x ^= v[i - k];
                }
            }
            v[i] = x;
        }
        out.push(v);
    }
    out
}

/// A randomized Sobol point generator.
#[derive(Clone)]
pub(crate) struct ScrambledSobol {
    dirs: Vec<[u32; BITS]>,
    shift: Vec<u32>,
    state: Vec<u32>,
    index: u32,
}

impl ScrambledSobol {
    pub(crate) fn new(dim: usize, rng: &mut Rng) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        let raw = direction_numbers(dim);
        let mut dirs = Vec::with_capacity(dim);
        let mut shift = Vec::with_capacity(dim);
        for v in raw {
            // Lower-triangular scramble with unit diagonal: row r of L acts on
            // bit r (counted from the most significant end).
            let rows: Vec<u32> = (0..BITS)
                .map(|r| {
                    let above = if r == 0 { 0 } else { !0u32 << (BITS - r) };
                    (rng.random::<u32>() & above) | (1u32 << (BITS - 1 - r))
                })
                .collect();
            let mut sv = [0u32; BITS];
            for (j, &col) in v.iter().enumerate() {
                let mut y = 0u32;
                for (r, &row) in rows.iter().enumerate() {
                    if (row & col).count_ones() & 1 == 1 {
                        y |= 1u32 << (BITS - 1 - r);
                    }
                }
                sv[j] = y;
            }
            dirs.push(sv);
            shift.push(rng.random::<u32>());
        }
        let state = shift.clone();
        ScrambledSobol { dirs, shift, state, index: 0 }
    }

    /// Writes the next point into `out` (Gray-code order).
    pub(crate) fn next_into(&mut self, out: &mut [f64]) {
        const SCALE: f64 = 1.0 / 4_294_967_296.0;
        for (o, &s) in out.iter_mut().zip(&self.state) {
            *o = (s as f64 + 0.5) * SCALE;
        }
        let c = (!self.index).trailing_zeros() as usize;
        self.index = self.index.wrapping_add(1);
        if c < BITS {
            for (s, d) in self.state.iter_mut().zip(&self.dirs) {
                *s ^= d[c];
            }
        } else {
            self.state.clone_from(&self.shift);
        }
    }
}
