//! Quasi-random direction generation on the unit sphere.
//!
//! Ordinate directions are drawn from a two-dimensional low-discrepancy
//! sequence: component one uses base 2, component two uses base 3, and each
//! digit is passed through the reversing permutation `sigma_b(0) = 0`,
//! `sigma_b(k) = b - k` before the radical inverse is formed. The pair
//! `(u1, u2)` of sequence values is mapped onto the first octant of the unit
//! sphere with
//!
//! ```text
//! theta = arccos(1 - u1),   phi = u2 * pi/2,
//! s = (cos(phi) sin(theta), sin(phi) sin(theta), cos(theta)),
//! ```
//!
//! which is area-uniform because `cos(theta)` is uniform in `(0, 1)`. Each
//! first-octant direction is completed to a quadruple by reflecting across
//! the coordinate planes `s1 = 0` and `s2 = 0`, so every draw covers all four
//! quadrants of the upper hemisphere with exactly mirrored in-plane
//! components.
//!
//! Sequence indices start at 1; index 0 would map to the pole and is
//! rejected. Streams are plain functions of the index, so a stream restarted
//! at index `m` reproduces the tail of a stream started at 1.

use crate::error::{Error, Result};

/// Bases of the two sequence components.
pub const HALTON_BASES: (u64, u64) = (2, 3);

/// Choice of low-discrepancy sequence for the direction stream.
///
/// The reversing permutation is the default; the unpermuted Halton sequence
/// is kept available for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SequenceKind {
    #[default]
    ReverseHalton,
    Halton,
}

impl SequenceKind {
    /// Parses the spelling used in config files and CLI flags.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "reverse_halton" | "reverse-halton" => Ok(SequenceKind::ReverseHalton),
            "halton" => Ok(SequenceKind::Halton),
            other => Err(Error::Config(format!(
                "unknown sequence `{other}` (expected `reverse_halton` or `halton`)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SequenceKind::ReverseHalton => "reverse_halton",
            SequenceKind::Halton => "halton",
        }
    }
}

/// A point of the two-dimensional sequence, with both components in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSquarePoint {
    pub u1: f64,
    pub u2: f64,
}

/// A unit direction together with its provenance in the sequence.
///
/// `quadrant` numbers the sign pattern of the in-plane components:
/// 1 = `(+, +)`, 2 = `(-, +)`, 3 = `(-, -)`, 4 = `(+, -)`. `s3 > 0` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub quadrant: u8,
    pub seq_index: u64,
}

impl Direction {
    pub fn norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    /// The direction as an array, convenient for angular closures.
    pub fn components(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }
}

/// The four boundary-reflected copies of one first-octant draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadruple {
    pub index: u64,
    pub directions: [Direction; 4],
}

/// Radical inverse of `i` in `base` with the reversing digit permutation.
///
/// The permuted digit string is folded into an exact integer numerator over
/// `base^k`, so the result is the correctly rounded value of that rational.
/// In base 2 the permutation is the identity and the result is the plain
/// van der Corput value.
///
/// ```
/// assert_eq!(qrdom::directions::reverse_halton(1, 2).unwrap(), 0.5);
/// assert_eq!(qrdom::directions::reverse_halton(3, 3).unwrap(), 2.0 / 9.0);
/// ```
pub fn reverse_halton(i: u64, base: u64) -> Result<f64> {
    radical_inverse(i, base, true)
}

/// Radical inverse with or without the reversing permutation.
pub fn radical_inverse(i: u64, base: u64, reversed: bool) -> Result<f64> {
    if base != 2 && base != 3 {
        return Err(Error::InvalidParameter(format!(
            "radical inverse base must be 2 or 3, got {base}"
        )));
    }
    if i == 0 {
        return Err(Error::InvalidParameter(
            "sequence index 0 is reserved; indices start at 1".into(),
        ));
    }
    // Accumulate sigma(d_1) b^(k-1) + ... + sigma(d_k) over the digits
    // d_1 (least significant) .. d_k of i, then divide by b^k once. All
    // intermediate values are exact integers, so the only rounding is the
    // final division.
    let mut numerator: u128 = 0;
    let mut denominator: u128 = 1;
    let mut n = i;
    while n > 0 {
        let digit = n % base;
        let permuted = if reversed && digit != 0 {
            base - digit
        } else {
            digit
        };
        numerator = numerator * base as u128 + permuted as u128;
        denominator *= base as u128;
        n /= base;
    }
    Ok(numerator as f64 / denominator as f64)
}

/// The `i`-th point of the reverse-Halton pair (bases 2 and 3).
pub fn rh_pair(i: u64) -> Result<UnitSquarePoint> {
    sequence_pair(i, SequenceKind::ReverseHalton)
}

/// The `i`-th point of the configured sequence.
pub fn sequence_pair(i: u64, kind: SequenceKind) -> Result<UnitSquarePoint> {
    let reversed = kind == SequenceKind::ReverseHalton;
    Ok(UnitSquarePoint {
        u1: radical_inverse(i, HALTON_BASES.0, reversed)?,
        u2: radical_inverse(i, HALTON_BASES.1, reversed)?,
    })
}

/// Maps a unit-square point to the first-octant direction with
/// `theta = arccos(1 - u1)` and `phi = u2 pi/2`.
///
/// Both components of `p` must lie strictly inside `(0, 1)`, which every
/// sequence point satisfies; the resulting direction therefore has all three
/// components strictly positive.
pub fn map_to_octant(p: UnitSquarePoint, seq_index: u64) -> Result<Direction> {
    if !(p.u1 > 0.0 && p.u1 < 1.0 && p.u2 > 0.0 && p.u2 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "octant map needs components in (0, 1), got ({}, {})",
            p.u1, p.u2
        )));
    }
    let cos_theta = 1.0 - p.u1;
    let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
    let phi = p.u2 * std::f64::consts::FRAC_PI_2;
    Ok(Direction {
        s1: phi.cos() * sin_theta,
        s2: phi.sin() * sin_theta,
        s3: cos_theta,
        quadrant: 1,
        seq_index,
    })
}

/// Completes a first-octant direction to its four quadrant copies
/// `(s1, s2)`, `(-s1, s2)`, `(-s1, -s2)`, `(s1, -s2)`, all sharing `s3`.
pub fn reflect_quadruple(d: &Direction) -> Result<[Direction; 4]> {
    if d.quadrant != 1 || !(d.s1 > 0.0 && d.s2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadruple reflection expects a first-quadrant direction, got quadrant {} \
             with (s1, s2) = ({}, {})",
            d.quadrant, d.s1, d.s2
        )));
    }
    let mk = |s1: f64, s2: f64, quadrant: u8| Direction {
        s1,
        s2,
        s3: d.s3,
        quadrant,
        seq_index: d.seq_index,
    };
    Ok([
        mk(d.s1, d.s2, 1),
        mk(-d.s1, d.s2, 2),
        mk(-d.s1, -d.s2, 3),
        mk(d.s1, -d.s2, 4),
    ])
}

/// Builds the quadruple for one sequence index.
pub fn quadruple_at(index: u64, kind: SequenceKind) -> Result<Quadruple> {
    let point = sequence_pair(index, kind)?;
    let first = map_to_octant(point, index)?;
    Ok(Quadruple {
        index,
        directions: reflect_quadruple(&first)?,
    })
}

/// An endless stream of direction quadruples starting at a given index.
///
/// The stream carries no state beyond the next index, so restarting at any
/// position reproduces exactly the directions a longer stream would have
/// produced there.
#[derive(Debug, Clone)]
pub struct DirectionStream {
    next_index: u64,
    kind: SequenceKind,
}

impl DirectionStream {
    pub fn new(from_index: u64, kind: SequenceKind) -> Result<Self> {
        if from_index == 0 {
            return Err(Error::InvalidParameter(
                "direction streams start at index 1 or later".into(),
            ));
        }
        Ok(DirectionStream {
            next_index: from_index,
            kind,
        })
    }

    /// Index of the quadruple the next call to `next` will yield.
    pub fn position(&self) -> u64 {
        self.next_index
    }
}

impl Iterator for DirectionStream {
    type Item = Quadruple;

    fn next(&mut self) -> Option<Quadruple> {
        let quad = quadruple_at(self.next_index, self.kind)
            .expect("stream indices are validated at construction");
        self.next_index += 1;
        Some(quad)
    }
}

/// Convenience: the `count` quadruples starting at `from_index`.
pub fn direction_stream(
    from_index: u64,
    count: usize,
    kind: SequenceKind,
) -> Result<Vec<Quadruple>> {
    Ok(DirectionStream::new(from_index, kind)?.take(count).collect())
}
