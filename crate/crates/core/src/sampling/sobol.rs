//! Sobol' sequence, Gray-code construction.
//!
//! Direction numbers for dimensions 2..=32 are the Joe & Kuo
//! `new-joe-kuo-6.21201` initialization; the first dimension is the
//! base-2 van der Corput sequence.

use rayon::prelude::*;

use super::PointSet;
use crate::error::{invalid, Error, Result};

pub const MAX_SOBOL_DIM: usize = 32;

const BITS: usize = 32;

/// (degree s, polynomial coefficients a, initial m_1..m_s) for dimensions 2..=32.
const JOE_KUO: [(u32, u32, &[u32]); MAX_SOBOL_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
    (7, 7, &[1, 1, 3, 13, 7, 35, 63]),
    (7, 8, &[1, 3, 5, 9, 1, 25, 53]),
    (7, 14, &[1, 3, 1, 13, 9, 35, 107]),
    (7, 19, &[1, 3, 1, 5, 27, 61, 31]),
    (7, 21, &[1, 1, 5, 11, 19, 41, 61]),
    (7, 28, &[1, 3, 5, 3, 3, 13, 69]),
    (7, 31, &[1, 1, 7, 13, 1, 19, 1]),
    (7, 32, &[1, 3, 7, 5, 13, 19, 59]),
    (7, 37, &[1, 1, 3, 9, 25, 29, 41]),
    (7, 41, &[1, 3, 5, 13, 23, 1, 55]),
    (7, 42, &[1, 3, 7, 3, 13, 59, 17]),
];

type Directions = [u32; BITS];

fn directions(dim: usize) -> Directions {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (31 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (31 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// Points `skip + 1 ..= skip + n` of the `d`-dimensional Sobol' sequence in
/// Gray-code order. The origin (index 0) is never produced.
pub fn sobol_points(n: usize, d: usize, skip: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(invalid(format!(
            "point set needs n >= 1 and d >= 1 (got n = {n}, d = {d})"
        )));
    }
    if d > MAX_SOBOL_DIM {
        return Err(Error::UnsupportedDimension {
            requested: d,
            max: MAX_SOBOL_DIM,
        });
    }
    if skip
        .checked_add(n as u64)
        .is_none_or(|last| last >= 1u64 << BITS)
    {
        return Err(invalid("Sobol' index range exceeds 2^32 - 1"));
    }

    let dirs: Vec<Directions> = (0..d).map(directions).collect();
    let scale = 1.0 / (1u64 << BITS) as f64;
    const CHUNK: usize = 4096;

    let mut values = vec![0.0; n * d];
    values
        .par_chunks_mut(CHUNK * d)
        .enumerate()
        .for_each(|(c, out)| {
            let first = skip + 1 + (c * CHUNK) as u64;
            // Direct evaluation for the first index of the chunk, then the
            // one-XOR-per-step Gray-code recursion.
            let gray = first ^ (first >> 1);
            let mut state: Vec<u32> = dirs
                .iter()
                .map(|v| {
                    (0..BITS)
                        .filter(|&b| (gray >> b) & 1 == 1)
                        .fold(0u32, |acc, b| acc ^ v[b])
                })
                .collect();
            for (index, row) in (first..).zip(out.chunks_exact_mut(d)) {
                if index > first {
                    // Gray code of `index` differs from that of `index - 1` in the
                    // lowest zero bit of `index - 1`.
                    let bit = (index - 1).trailing_ones() as usize;
                    for (x, v) in state.iter_mut().zip(&dirs) {
                        *x ^= v[bit];
                    }
                }
                for (o, &x) in row.iter_mut().zip(&state) {
                    *o = x as f64 * scale;
                }
            }
        });
    Ok(PointSet::from_raw(n, d, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_point_is_centre() {
        let p = sobol_points(1, 2, 0).unwrap();
        assert_eq!(p.values(), &[0.5, 0.5]);
    }

    #[test]
    fn first_coordinates_follow_gray_code() {
        let p = sobol_points(3, 1, 0).unwrap();
        assert_eq!(p.values(), &[0.5, 0.75, 0.25]);
    }

    #[test]
    fn dyadic_balance() {
        let p = sobol_points(1 << 10, 1, 0).unwrap();
        assert_eq!(p.values().iter().filter(|&&x| x < 0.5).count(), 512);
    }

    #[test]
    fn every_coordinate_balanced_on_dyadic_blocks() {
        // Indices n..2n form a complete block since the origin is skipped.
        for k in [4usize, 8, 12] {
            let n = 1 << k;
            let p = sobol_points(n, MAX_SOBOL_DIM, n as u64 - 1).unwrap();
            for j in 0..MAX_SOBOL_DIM {
                let below = p.rows().filter(|r| r[j] < 0.5).count();
                assert_eq!(below, n / 2, "dimension {j}, n = {n}");
            }
        }
    }

    #[test]
    fn rejects_too_many_dimensions() {
        assert_eq!(
            sobol_points(4, 33, 0),
            Err(Error::UnsupportedDimension {
                requested: 33,
                max: 32
            })
        );
    }

    #[test]
    fn skip_matches_tail_of_longer_run() {
        let full = sobol_points(10_000, 5, 0).unwrap();
        let tail = sobol_points(3_000, 5, 7_000).unwrap();
        assert_eq!(tail.values(), &full.values()[7_000 * 5..]);
    }

    #[test]
    fn never_emits_zero_or_one() {
        let p = sobol_points(1 << 14, MAX_SOBOL_DIM, 0).unwrap();
        assert!(p.values().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    // Reference values from an independent Joe-Kuo implementation
    // (unscrambled, 32-bit), indices 6 and 1024 of the 32-dimensional sequence.
    #[test]
    fn matches_reference_points() {
        let p = sobol_points(1024, 32, 0).unwrap();
        let idx6: [f64; 32] = [
            0.875, 0.875, 0.125, 0.375, 0.875, 0.625, 0.875, 0.375, 0.375, 0.125, 0.375, 0.875,
            0.875, 0.125, 0.875, 0.375, 0.875, 0.375, 0.375, 0.625, 0.625, 0.625, 0.875, 0.375,
            0.375, 0.375, 0.875, 0.125, 0.625, 0.625, 0.875, 0.625,
        ];
        assert_eq!(p.row(4), &idx6);
        let idx1024: [f64; 32] = [
            0.0009765625,
            0.7529296875,
            0.6123046875,
            0.1455078125,
            0.1865234375,
            0.4384765625,
            0.1396484375,
            0.6181640625,
            0.3447265625,
            0.8505859375,
            0.6787109375,
            0.0361328125,
            0.1298828125,
            0.6650390625,
            0.3623046875,
            0.4638671875,
            0.3134765625,
            0.8759765625,
            0.5849609375,
            0.3193359375,
            0.8662109375,
            0.0185546875,
            0.7939453125,
            0.1962890625,
            0.2392578125,
            0.3759765625,
            0.5087890625,
            0.7607421875,
            0.8408203125,
            0.4345703125,
            0.9287109375,
            0.6142578125,
        ];
        assert_eq!(p.row(1022), &idx1024);
    }

    /// Order of x modulo the GF(2) polynomial, by repeated multiplication.
    fn order_of_x(poly: u32, degree: u32) -> u64 {
        let mask = 1u32 << degree;
        let mut r = 2u32; // x
        let mut k = 1u64;
        while r != 1 {
            r <<= 1;
            if r & mask != 0 {
                r ^= poly;
            }
            k += 1;
            if k > (1 << degree) {
                break;
            }
        }
        k
    }

    #[test]
    fn table_polynomials_are_primitive() {
        for (s, a, m) in JOE_KUO.iter() {
            let poly = (1 << s) | (a << 1) | 1;
            let expected = (1u64 << s) - 1;
            let order = if *s == 1 { 1 } else { order_of_x(poly, *s) };
            assert_eq!(order, expected, "polynomial s={s} a={a}");
            assert_eq!(m.len(), *s as usize);
            for (k, &mk) in m.iter().enumerate() {
                assert!(mk % 2 == 1 && mk < (1 << (k + 1)), "m_{} = {mk}", k + 1);
            }
        }
    }
}
