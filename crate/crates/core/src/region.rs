//! Unions of boundary arcs in arc-length coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative length below which an interval is considered degenerate.
const DEGENERATE_REL: f64 = 1e-12;

/// A maximal arc of a region: starts at `begin` and runs counterclockwise for
/// `length` (possibly across the origin of the arc-length coordinate).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub begin: f64,
    pub length: f64,
}

impl Arc {
    pub fn end(&self) -> f64 {
        self.begin + self.length
    }
}

/// An endpoint of a region together with the sign of the outward tangent:
/// `-1` at the beginning of an arc, `+1` at its end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Endpoint {
    pub s: f64,
    pub sign: f64,
}

/// Disjoint half-open intervals `[s_begin, s_end)` inside `[0, perimeter]`,
/// sorted by `s_begin`. Arcs crossing `s = 0` are stored split in two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRegion {
    intervals: Vec<(f64, f64)>,
    perimeter: f64,
}

impl BoundaryRegion {
    pub fn empty(perimeter: f64) -> Self {
        Self {
            intervals: Vec::new(),
            perimeter,
        }
    }

    pub fn full(perimeter: f64) -> Self {
        Self {
            intervals: vec![(0.0, perimeter)],
            perimeter,
        }
    }

    /// Normalizes raw intervals `(begin, end)` (any real `begin`, `end ≥ begin`)
    /// modulo the perimeter: wraps, merges overlapping or touching pieces and
    /// drops degenerate ones.
    pub fn from_intervals(raw: &[(f64, f64)], perimeter: f64) -> Result<Self> {
        if !(perimeter > 0.0 && perimeter.is_finite()) {
            return Err(Error::Domain(format!("invalid perimeter {perimeter}")));
        }
        let tiny = DEGENERATE_REL * perimeter;
        let mut pieces = Vec::with_capacity(raw.len() + 1);
        for &(begin, end) in raw {
            if !(begin.is_finite() && end.is_finite()) || end < begin {
                return Err(Error::Domain(format!("invalid interval [{begin}, {end})")));
            }
            let length = end - begin;
            if length >= perimeter - tiny {
                return Ok(Self::full(perimeter));
            }
            let mut b = begin.rem_euclid(perimeter);
            if perimeter - b <= tiny {
                b = 0.0;
            }
            // Keep the end point bit-exact when no wrapping was needed.
            let e = if b == begin { end } else { b + length };
            if e > perimeter {
                pieces.push((b, perimeter));
                pieces.push((0.0, e - perimeter));
            } else {
                pieces.push((b, e));
            }
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));

        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (b, e) in pieces {
            match merged.last_mut() {
                Some(last) if b <= last.1 + tiny => last.1 = last.1.max(e),
                _ => merged.push((b, e)),
            }
        }
        merged.retain(|&(b, e)| e - b >= tiny);
        for piece in &mut merged {
            piece.1 = piece.1.min(perimeter);
        }
        if merged.len() == 1 && merged[0].0 <= tiny && merged[0].1 >= perimeter - tiny {
            return Ok(Self::full(perimeter));
        }
        Ok(Self {
            intervals: merged,
            perimeter,
        })
    }

    pub fn from_arcs(arcs: &[Arc], perimeter: f64) -> Result<Self> {
        let raw: Vec<_> = arcs.iter().map(|a| (a.begin, a.end())).collect();
        Self::from_intervals(&raw, perimeter)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(b, e)| e - b).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0] == (0.0, self.perimeter)
    }

    fn wraps(&self) -> bool {
        !self.is_full()
            && self.intervals.len() >= 2
            && self.intervals[0].0 == 0.0
            && self.intervals[self.intervals.len() - 1].1 == self.perimeter
    }

    /// Maximal arcs, merging the two pieces of an arc that crosses `s = 0`.
    /// Sorted by `begin`; a full region is a single arc starting at 0.
    pub fn arcs(&self) -> Vec<Arc> {
        if self.is_full() {
            return vec![Arc {
                begin: 0.0,
                length: self.perimeter,
            }];
        }
        let mut pieces: &[(f64, f64)] = &self.intervals;
        let mut wrap = None;
        if self.wraps() {
            let (first, last) = (pieces[0], pieces[pieces.len() - 1]);
            wrap = Some(Arc {
                begin: last.0,
                length: (self.perimeter - last.0) + first.1,
            });
            pieces = &pieces[1..pieces.len() - 1];
        }
        let mut arcs: Vec<Arc> = pieces
            .iter()
            .map(|&(b, e)| Arc {
                begin: b,
                length: e - b,
            })
            .collect();
        arcs.extend(wrap);
        arcs
    }

    /// Endpoints in arc order: `begin` then `end` of each arc. Empty and full
    /// regions have none.
    pub fn endpoints(&self) -> Vec<Endpoint> {
        if self.is_full() {
            return Vec::new();
        }
        self.arcs()
            .iter()
            .flat_map(|a| {
                [
                    Endpoint {
                        s: a.begin,
                        sign: -1.0,
                    },
                    Endpoint {
                        s: a.end().rem_euclid(self.perimeter),
                        sign: 1.0,
                    },
                ]
            })
            .collect()
    }

    pub fn contains(&self, s: f64) -> bool {
        let s = s.rem_euclid(self.perimeter);
        self.intervals.iter().any(|&(b, e)| b <= s && s < e)
    }

    /// Pieces of the region inside the window `[lo, hi] ⊂ [0, perimeter]`.
    pub fn overlaps(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let start = self.intervals.partition_point(|&(_, e)| e <= lo);
        self.intervals[start..]
            .iter()
            .take_while(move |&&(b, _)| b < hi)
            .filter_map(move |&(b, e)| {
                let (x, y) = (b.max(lo), e.min(hi));
                (y > x).then_some((x, y))
            })
    }

    /// Largest distance between corresponding interval ends, or `None` if the
    /// interval counts differ.
    pub fn distance(&self, other: &Self) -> Option<f64> {
        if self.intervals.len() != other.intervals.len() {
            return None;
        }
        Some(
            self.intervals
                .iter()
                .zip(&other.intervals)
                .map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs()))
                .fold(0.0, f64::max),
        )
    }
}

pub fn region_measure(region: &BoundaryRegion) -> f64 {
    region.measure()
}

/// Single arc of length `length` centered at `center`, wrapped modulo the perimeter.
pub fn arc_region(center: f64, length: f64, perimeter: f64) -> Result<BoundaryRegion> {
    if !(0.0..=perimeter).contains(&length) {
        return Err(Error::Domain(format!(
            "arc length {length} outside [0, {perimeter}]"
        )));
    }
    if length == perimeter {
        return Ok(BoundaryRegion::full(perimeter));
    }
    if length == 0.0 {
        return Ok(BoundaryRegion::empty(perimeter));
    }
    BoundaryRegion::from_intervals(&[(center - 0.5 * length, center + 0.5 * length)], perimeter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const P: f64 = 2.0 * PI;

    #[test]
    fn measures() {
        assert_eq!(region_measure(&BoundaryRegion::full(P)), P);
        let quarter = BoundaryRegion::from_intervals(&[(0.0, PI / 2.0)], P).unwrap();
        assert_eq!(region_measure(&quarter), PI / 2.0);
        let two = BoundaryRegion::from_intervals(&[(1.0, 1.4), (0.0, 0.3)], P).unwrap();
        assert!((region_measure(&two) - 0.7).abs() < 1e-15);
        assert_eq!(two.intervals()[0], (0.0, 0.3));
    }

    #[test]
    fn centered_half_circle_wraps() {
        let r = arc_region(0.0, PI, P).unwrap();
        assert_eq!(r.intervals().len(), 2);
        assert!((r.intervals()[0].1 - PI / 2.0).abs() < 1e-15);
        assert!((r.intervals()[1].0 - 1.5 * PI).abs() < 1e-15);
        let arcs = r.arcs();
        assert_eq!(arcs.len(), 1);
        assert!((arcs[0].length - PI).abs() < 1e-15);
        let ends = r.endpoints();
        assert_eq!(ends.len(), 2);
        assert_eq!((ends[0].sign, ends[1].sign), (-1.0, 1.0));
        assert!((ends[0].s - 1.5 * PI).abs() < 1e-15);
        assert!((ends[1].s - 0.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn full_and_empty_arcs() {
        let full = arc_region(1.0, P, P).unwrap();
        assert!(full.is_full());
        assert!(full.endpoints().is_empty());
        let empty = arc_region(1.0, 0.0, P).unwrap();
        assert!(empty.is_empty());
        assert!(empty.endpoints().is_empty());
        assert!(matches!(arc_region(0.0, -0.1, P), Err(Error::Domain(_))));
        assert!(matches!(arc_region(0.0, P + 0.1, P), Err(Error::Domain(_))));
    }

    #[test]
    fn merges_touching_and_drops_degenerate() {
        let r = BoundaryRegion::from_intervals(&[(0.5, 1.0), (1.0, 2.0), (3.0, 3.0 + 1e-14)], P).unwrap();
        assert_eq!(r.intervals(), &[(0.5, 2.0)]);
        assert!(BoundaryRegion::from_intervals(&[(1.0, 0.5)], P).is_err());
    }

    #[test]
    fn overlaps_clip_to_window() {
        let r = BoundaryRegion::from_intervals(&[(0.2, 0.5), (0.9, 1.3)], P).unwrap();
        let pieces: Vec<_> = r.overlaps(0.4, 1.0).collect();
        assert_eq!(pieces, vec![(0.4, 0.5), (0.9, 1.0)]);
        assert_eq!(r.overlaps(0.5, 0.9).count(), 0);
    }

    proptest! {
        #[test]
        fn arc_measure_is_exact(center in -20.0..20.0f64, frac in 0.0..1.0f64) {
            let length = frac * P;
            let r = arc_region(center, length, P).unwrap();
            let m = region_measure(&r);
            // Lengths under the degenerate cutoff vanish.
            if length >= DEGENERATE_REL * P {
                prop_assert!((m - length).abs() <= 1e-12 * P);
            }
        }

        #[test]
        fn normalization_is_idempotent(raw in proptest::collection::vec((-10.0..10.0f64, 0.0..2.0f64), 0..6)) {
            let raw: Vec<_> = raw.into_iter().map(|(b, l)| (b, b + l)).collect();
            let once = BoundaryRegion::from_intervals(&raw, P).unwrap();
            let twice = BoundaryRegion::from_intervals(once.intervals(), P).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.measure() >= 0.0 && once.measure() <= P + 1e-12);
            for w in once.intervals().windows(2) {
                prop_assert!(w[0].1 < w[1].0);
            }
            let ends = once.endpoints();
            prop_assert_eq!(ends.len() % 2, 0);
            let mut sorted = ends.clone();
            sorted.sort_by(|a, b| a.s.total_cmp(&b.s));
            for w in sorted.windows(2) {
                prop_assert!(w[0].sign != w[1].sign);
            }
        }
    }
}
