//! Integer rectilinear geometry for wires, shadows and spacing queries.
//!
//! All coordinates are integer grid units. Spacing uses the Chebyshev
//! clearance between rectangles (the larger of the two per-axis gaps), which
//! makes `spacing < sp_tp` equivalent to a strict overlap between one wire
//! body and the other wire's shadow.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

pub type Coord = i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: Coord,
    pub y: Coord,
}

impl Point {
    pub const fn new(x: Coord, y: Coord) -> Self {
        Point { x, y }
    }

    pub fn manhattan(&self, other: &Point) -> Coord {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Axis-aligned rectangle on one layer. Bounds are inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: Coord,
    pub y_lo: Coord,
    pub x_hi: Coord,
    pub y_hi: Coord,
    pub layer: u8,
}

impl Rect {
    pub fn new(x_lo: Coord, y_lo: Coord, x_hi: Coord, y_hi: Coord, layer: u8) -> Result<Self, GeometryError> {
        if x_lo > x_hi || y_lo > y_hi {
            return Err(GeometryError::InvertedRect { x_lo, y_lo, x_hi, y_hi });
        }
        Ok(Rect { x_lo, y_lo, x_hi, y_hi, layer })
    }

    pub fn width(&self) -> Coord {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> Coord {
        self.y_hi - self.y_lo
    }

    /// Open-interior overlap; rectangles that only share an edge do not overlap.
    pub fn overlaps_strictly(&self, other: &Rect) -> bool {
        self.layer == other.layer
            && self.x_lo < other.x_hi
            && other.x_lo < self.x_hi
            && self.y_lo < other.y_hi
            && other.y_lo < self.y_hi
    }

    pub fn gap_x(&self, other: &Rect) -> Coord {
        (other.x_lo - self.x_hi).max(self.x_lo - other.x_hi).max(0)
    }

    pub fn gap_y(&self, other: &Rect) -> Coord {
        (other.y_lo - self.y_hi).max(self.y_lo - other.y_hi).max(0)
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.x_lo <= p.x && p.x <= self.x_hi && self.y_lo <= p.y && p.y <= self.y_hi
    }

    pub fn scaled(&self, k: Coord) -> Rect {
        Rect { x_lo: self.x_lo * k, y_lo: self.y_lo * k, x_hi: self.x_hi * k, y_hi: self.y_hi * k, layer: self.layer }
    }
}

/// Grows `r` by `margin` on all four sides.
pub fn expand_rect(r: Rect, margin: Coord) -> Rect {
    debug_assert!(margin >= 0);
    Rect {
        x_lo: r.x_lo - margin,
        y_lo: r.y_lo - margin,
        x_hi: r.x_hi + margin,
        y_hi: r.y_hi + margin,
        layer: r.layer,
    }
}

/// Chebyshev edge-to-edge clearance of two rectangles, ignoring layers.
pub fn rect_spacing(a: &Rect, b: &Rect) -> Coord {
    a.gap_x(b).max(a.gap_y(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetId(pub u32);

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// A straight wire: a center line between two grid points plus a half width.
///
/// `start` is always the lower end along `axis`. Zero-length segments (via
/// landing pads, single-cell pins) are allowed and report `Horizontal`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WireSegment {
    pub id: SegmentId,
    pub net: NetId,
    pub layer: u8,
    pub axis: Axis,
    pub start: Point,
    pub end: Point,
    pub half_width: Coord,
}

impl WireSegment {
    pub fn new(id: SegmentId, net: NetId, layer: u8, a: Point, b: Point, half_width: Coord) -> Result<Self, GeometryError> {
        if half_width < 1 {
            return Err(GeometryError::HalfWidth(half_width));
        }
        let axis = if a.y == b.y {
            Axis::Horizontal
        } else if a.x == b.x {
            Axis::Vertical
        } else {
            return Err(GeometryError::Diagonal { a, b });
        };
        let (start, end) = if a <= b { (a, b) } else { (b, a) };
        Ok(WireSegment { id, net, layer, axis, start, end, half_width })
    }

    pub fn centerline_bbox(&self) -> Rect {
        Rect { x_lo: self.start.x, y_lo: self.start.y, x_hi: self.end.x, y_hi: self.end.y, layer: self.layer }
    }

    /// The drawn metal: center line grown by the half width.
    pub fn body(&self) -> Rect {
        expand_rect(self.centerline_bbox(), self.half_width)
    }

    pub fn length(&self) -> Coord {
        self.start.manhattan(&self.end)
    }

    /// Lower end of the center line along the wire's axis.
    pub fn lo(&self) -> Coord {
        self.along(self.start)
    }

    pub fn hi(&self) -> Coord {
        self.along(self.end)
    }

    /// The fixed cross-axis coordinate of the center line.
    pub fn cross(&self) -> Coord {
        match self.axis {
            Axis::Horizontal => self.start.y,
            Axis::Vertical => self.start.x,
        }
    }

    pub fn along(&self, p: Point) -> Coord {
        match self.axis {
            Axis::Horizontal => p.x,
            Axis::Vertical => p.y,
        }
    }

    pub fn point_at(&self, t: Coord) -> Point {
        match self.axis {
            Axis::Horizontal => Point::new(t, self.start.y),
            Axis::Vertical => Point::new(self.start.x, t),
        }
    }

    /// Piece of this wire between two axis positions, with a new id.
    pub fn piece(&self, id: SegmentId, lo: Coord, hi: Coord) -> WireSegment {
        debug_assert!(self.lo() <= lo && lo <= hi && hi <= self.hi());
        WireSegment { id, start: self.point_at(lo), end: self.point_at(hi), ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacingRules {
    /// Minimum wire spacing.
    pub sp_w: Coord,
    /// Minimum spacing between same-mask features.
    pub sp_tp: Coord,
}

impl SpacingRules {
    pub const DEFAULT_MULTIPLIER: Coord = 3;

    pub fn new(sp_w: Coord, sp_tp: Coord) -> Result<Self, GeometryError> {
        if sp_w < 0 || sp_tp < sp_w {
            return Err(GeometryError::Rules { sp_w, sp_tp });
        }
        Ok(SpacingRules { sp_w, sp_tp })
    }

    pub fn with_multiplier(sp_w: Coord, mult: Coord) -> Result<Self, GeometryError> {
        Self::new(sp_w, sp_w * mult)
    }
}

impl Default for SpacingRules {
    fn default() -> Self {
        SpacingRules { sp_w: 2, sp_tp: 2 * Self::DEFAULT_MULTIPLIER }
    }
}

/// Region in which another wire's body would need a different mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shadow {
    pub owner: SegmentId,
    pub region: Rect,
}

pub fn shadow_of(s: &WireSegment, rules: &SpacingRules) -> Shadow {
    Shadow { owner: s.id, region: expand_rect(s.centerline_bbox(), s.half_width + rules.sp_tp) }
}

pub fn min_spacing(a: &WireSegment, b: &WireSegment) -> Result<Coord, GeometryError> {
    if a.layer != b.layer {
        return Err(GeometryError::LayerMismatch(a.layer, b.layer));
    }
    Ok(rect_spacing(&a.body(), &b.body()))
}

/// Whether two same-layer wires are closer than the mask spacing.
pub fn within_mask_spacing(a: &WireSegment, b: &WireSegment, rules: &SpacingRules) -> bool {
    a.layer == b.layer && rect_spacing(&a.body(), &b.body()) < rules.sp_tp
}

/// Whether two wires must sit on different masks. Touching wires of the
/// same net form one shape and are exempt.
pub fn tpl_conflict(a: &WireSegment, b: &WireSegment, rules: &SpacingRules) -> bool {
    if a.layer != b.layer {
        return false;
    }
    let d = rect_spacing(&a.body(), &b.body());
    d < rules.sp_tp && !(a.net == b.net && d == 0)
}

/// Maximal stretch of a wire's center line (inclusive integer positions
/// along its axis) covered by a fixed set of shadow labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowyInterval<T> {
    pub lo: Coord,
    pub hi: Coord,
    pub labels: BTreeSet<T>,
}

impl<T> ShadowyInterval<T> {
    pub fn midpoint(&self) -> Coord {
        self.lo + (self.hi - self.lo) / 2
    }
}

/// Range of center-line positions of `w` whose body cross-section strictly
/// overlaps `region`, clipped to the wire. `None` when untouched.
pub fn covered_range(w: &WireSegment, region: &Rect) -> Option<(Coord, Coord)> {
    if region.layer != w.layer {
        return None;
    }
    let hw = w.half_width;
    let c = w.cross();
    let (cross_lo, cross_hi, along_lo, along_hi) = match w.axis {
        Axis::Horizontal => (region.y_lo, region.y_hi, region.x_lo, region.x_hi),
        Axis::Vertical => (region.x_lo, region.x_hi, region.y_lo, region.y_hi),
    };
    if !(c - hw < cross_hi && cross_lo < c + hw) {
        return None;
    }
    let lo = (along_lo - hw + 1).max(w.lo());
    let hi = (along_hi + hw - 1).min(w.hi());
    (lo <= hi).then_some((lo, hi))
}

/// Partitions `w`'s center line into maximal intervals of constant label set.
///
/// Adjacent intervals always carry different label sets; stretches with no
/// shadow get an empty set.
pub fn shadowy_intervals<T: Ord + Copy>(w: &WireSegment, shadows: &[(Shadow, T)]) -> Vec<ShadowyInterval<T>> {
    let ranges: Vec<(Coord, Coord, T)> = shadows
        .iter()
        .filter_map(|(s, label)| covered_range(w, &s.region).map(|(lo, hi)| (lo, hi, *label)))
        .collect();

    let mut cuts: Vec<Coord> = vec![w.lo(), w.hi() + 1];
    for &(lo, hi, _) in &ranges {
        cuts.push(lo);
        cuts.push(hi + 1);
    }
    cuts.sort_unstable();
    cuts.dedup();

    let mut out: Vec<ShadowyInterval<T>> = Vec::new();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1] - 1);
        let labels: BTreeSet<T> =
            ranges.iter().filter(|(a, b, _)| *a <= lo && hi <= *b).map(|(_, _, l)| *l).collect();
        match out.last_mut() {
            Some(prev) if prev.labels == labels => prev.hi = hi,
            _ => out.push(ShadowyInterval { lo, hi, labels }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(id: u32, a: (Coord, Coord), b: (Coord, Coord), hw: Coord) -> WireSegment {
        WireSegment::new(SegmentId(id), NetId(id), 0, Point::new(a.0, a.1), Point::new(b.0, b.1), hw).unwrap()
    }

    fn r(x_lo: Coord, y_lo: Coord, x_hi: Coord, y_hi: Coord) -> Rect {
        Rect::new(x_lo, y_lo, x_hi, y_hi, 0).unwrap()
    }

    #[test]
    fn expand_examples() {
        assert_eq!(expand_rect(r(0, 0, 4, 2), 0), r(0, 0, 4, 2));
        assert_eq!(expand_rect(r(0, 0, 4, 2), 3), r(-3, -3, 7, 5));
        assert_eq!(expand_rect(r(5, 5, 5, 9), 2), r(3, 3, 7, 11));
    }

    #[test]
    fn shadow_examples() {
        let rules = SpacingRules::new(1, 3).unwrap();
        assert_eq!(shadow_of(&seg(1, (0, 0), (10, 0), 1), &rules).region, r(-4, -4, 14, 4));
        assert_eq!(shadow_of(&seg(2, (2, 0), (2, 6), 1), &rules).region, r(-2, -4, 6, 10));
        // zero expansion reduces to the center-line box
        let s = seg(3, (2, 0), (2, 6), 1);
        assert_eq!(expand_rect(s.centerline_bbox(), 0), r(2, 0, 2, 6));
    }

    #[test]
    fn spacing_examples() {
        // abutting bodies
        let a = seg(1, (0, 0), (10, 0), 1);
        let b = seg(2, (0, 2), (10, 2), 1);
        assert_eq!(min_spacing(&a, &b).unwrap(), 0);
        // parallel wires, edges five apart
        let c = seg(3, (0, 7), (10, 7), 1);
        assert_eq!(min_spacing(&a, &c).unwrap(), 5);
        let mut d = c;
        d.layer = 1;
        assert!(matches!(min_spacing(&a, &d), Err(GeometryError::LayerMismatch(0, 1))));
    }

    #[test]
    fn spacing_is_max_axis_gap_for_diagonal_offset() {
        let a = r(0, 0, 4, 2);
        let b = r(7, 6, 9, 8);
        assert_eq!(rect_spacing(&a, &b), 4);
    }

    #[test]
    fn rejects_bad_segments() {
        let p = Point::new(0, 0);
        assert!(WireSegment::new(SegmentId(0), NetId(0), 0, p, Point::new(1, 1), 1).is_err());
        assert!(WireSegment::new(SegmentId(0), NetId(0), 0, p, Point::new(1, 0), 0).is_err());
        assert!(Rect::new(3, 0, 1, 0, 0).is_err());
        assert!(SpacingRules::new(4, 3).is_err());
    }

    #[test]
    fn intervals_without_shadows() {
        let w = seg(1, (0, 0), (20, 0), 1);
        let iv = shadowy_intervals::<u32>(&w, &[]);
        assert_eq!(iv.len(), 1);
        assert_eq!((iv[0].lo, iv[0].hi), (0, 20));
        assert!(iv[0].labels.is_empty());
    }

    #[test]
    fn intervals_with_full_cover() {
        let rules = SpacingRules::default();
        let w = seg(1, (0, 0), (20, 0), 1);
        let other = seg(2, (-5, 4), (30, 4), 1);
        let iv = shadowy_intervals(&w, &[(shadow_of(&other, &rules), 7u32)]);
        assert_eq!(iv.len(), 1);
        assert_eq!(iv[0].labels, BTreeSet::from([7]));
    }

    #[test]
    fn intervals_partition_and_alternate() {
        let rules = SpacingRules::default();
        let w = seg(1, (0, 0), (60, 0), 1);
        let a = seg(2, (0, 4), (5, 4), 1);
        let b = seg(3, (30, -4), (34, -4), 1);
        let shadows = [(shadow_of(&a, &rules), 1u32), (shadow_of(&b, &rules), 2u32)];
        let iv = shadowy_intervals(&w, &shadows);
        assert_eq!(iv.first().unwrap().lo, 0);
        assert_eq!(iv.last().unwrap().hi, 60);
        for pair in iv.windows(2) {
            assert_eq!(pair[0].hi + 1, pair[1].lo);
            assert_ne!(pair[0].labels, pair[1].labels);
        }
        let labels: Vec<Vec<u32>> = iv.iter().map(|i| i.labels.iter().copied().collect()).collect();
        assert_eq!(labels, vec![vec![1], vec![], vec![2], vec![]]);
    }
}
