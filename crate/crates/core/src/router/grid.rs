//! Uniform routing grid with per-cell ownership.

use serde::{Deserialize, Serialize};

use crate::format::{Dir, Netlist};
use crate::geometry::{Coord, NetId, Point, Rect, SegmentId, WireSegment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: Coord,
    pub y: Coord,
    pub layer: u8,
}

impl GridPoint {
    pub const fn new(x: Coord, y: Coord, layer: u8) -> Self {
        GridPoint { x, y, layer }
    }
}

#[derive(Clone, Debug)]
pub struct RoutingGrid {
    pub width: Coord,
    pub height: Coord,
    pub dirs: Vec<Dir>,
    /// Track spacing in layout units.
    pub pitch: Coord,
    pub hw: Coord,
    blocked: Vec<bool>,
    owner: Vec<Option<(NetId, u32)>>,
    pin_owner: Vec<Option<NetId>>,
}

impl RoutingGrid {
    pub fn new(width: Coord, height: Coord, dirs: Vec<Dir>, pitch: Coord, hw: Coord) -> Self {
        let n = (width * height) as usize * dirs.len();
        RoutingGrid { width, height, dirs, pitch, hw, blocked: vec![false; n], owner: vec![None; n], pin_owner: vec![None; n] }
    }

    /// Grid with the netlist's obstacles blocked and pins reserved for their nets.
    pub fn from_netlist(nl: &Netlist) -> Self {
        let h = &nl.header;
        let mut g = RoutingGrid::new(h.width, h.height, h.layers.clone(), nl.pitch(), h.hw);
        for o in &nl.obstacles {
            for x in o.x_lo..=o.x_hi {
                for y in o.y_lo..=o.y_hi {
                    let i = g.idx(GridPoint::new(x, y, o.layer));
                    g.blocked[i] = true;
                }
            }
        }
        for (k, d) in nl.nets.iter().enumerate() {
            for p in &d.pins {
                let i = g.idx(GridPoint::new(p.x, p.y, p.layer));
                g.pin_owner[i] = Some(NetId(k as u32));
            }
        }
        g
    }

    pub fn layers(&self) -> u8 {
        self.dirs.len() as u8
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height && p.layer < self.layers()
    }

    pub fn idx(&self, p: GridPoint) -> usize {
        debug_assert!(self.contains(p));
        ((p.layer as Coord * self.height + p.y) * self.width + p.x) as usize
    }

    pub fn is_blocked(&self, p: GridPoint) -> bool {
        self.blocked[self.idx(p)]
    }

    pub fn occupant(&self, p: GridPoint) -> Option<NetId> {
        self.owner[self.idx(p)].map(|(n, _)| n)
    }

    pub fn pin_owner(&self, p: GridPoint) -> Option<NetId> {
        self.pin_owner[self.idx(p)]
    }

    /// Whether `net` may put wire on `p`.
    pub fn passable(&self, p: GridPoint, net: NetId) -> bool {
        let i = self.idx(p);
        !self.blocked[i]
            && self.owner[i].is_none_or(|(n, _)| n == net)
            && self.pin_owner[i].is_none_or(|n| n == net)
    }

    /// Whether `net` could use `p` once other nets' wires are removed.
    pub fn reachable(&self, p: GridPoint, net: NetId) -> bool {
        let i = self.idx(p);
        !self.blocked[i] && self.pin_owner[i].is_none_or(|n| n == net)
    }

    pub fn occupy(&mut self, cells: &[GridPoint], net: NetId) {
        for &p in cells {
            let i = self.idx(p);
            match &mut self.owner[i] {
                Some((n, c)) if *n == net => *c += 1,
                slot => {
                    debug_assert!(slot.is_none(), "cell {p:?} taken");
                    *slot = Some((net, 1));
                }
            }
        }
    }

    pub fn release(&mut self, cells: &[GridPoint], net: NetId) {
        for &p in cells {
            let i = self.idx(p);
            if let Some((n, c)) = &mut self.owner[i] {
                debug_assert_eq!(*n, net);
                *c -= 1;
                if *c == 0 {
                    self.owner[i] = None;
                }
            }
        }
    }

    pub fn point(&self, p: GridPoint) -> Point {
        Point::new(p.x * self.pitch, p.y * self.pitch)
    }

    /// Obstacle cells as layout rectangles.
    pub fn obstacle_rects(&self, nl: &Netlist) -> Vec<Rect> {
        nl.obstacles
            .iter()
            .map(|o| Rect {
                x_lo: o.x_lo * self.pitch - self.hw,
                y_lo: o.y_lo * self.pitch - self.hw,
                x_hi: o.x_hi * self.pitch + self.hw,
                y_hi: o.y_hi * self.pitch + self.hw,
                layer: o.layer,
            })
            .collect()
    }
}

/// Splits a cell path into maximal straight runs per layer.
///
/// Bends share their corner cell between two runs. A run that is a single
/// cell, such as a via landing, gives a point wire.
pub fn path_runs(path: &[GridPoint]) -> Vec<(GridPoint, GridPoint)> {
    let mut runs = Vec::new();
    let Some(&first) = path.first() else {
        return runs;
    };
    let mut start = first;
    let mut prev = first;
    for &p in &path[1..] {
        if p.layer != prev.layer {
            runs.push((start, prev));
            start = p;
        } else if start != prev && (start.x == prev.x) != (prev.x == p.x) {
            runs.push((start, prev));
            start = prev;
        }
        prev = p;
    }
    runs.push((start, prev));
    runs
}

/// Layout wires of a cell path, numbered by `next_id`.
pub fn path_wires(
    grid: &RoutingGrid,
    path: &[GridPoint],
    net: NetId,
    mut next_id: impl FnMut() -> SegmentId,
) -> Vec<WireSegment> {
    path_runs(path)
        .into_iter()
        .map(|(a, b)| {
            WireSegment::new(next_id(), net, a.layer, grid.point(a), grid.point(b), grid.hw)
                .expect("runs are axis aligned")
        })
        .collect()
}

/// Layer changes along a path.
pub fn via_count(path: &[GridPoint]) -> usize {
    path.windows(2).filter(|w| w[0].layer != w[1].layer).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(x: Coord, y: Coord, l: u8) -> GridPoint {
        GridPoint::new(x, y, l)
    }

    #[test]
    fn runs_split_at_bends_and_vias() {
        let path = [gp(0, 0, 0), gp(1, 0, 0), gp(2, 0, 0), gp(2, 1, 0), gp(2, 1, 1), gp(2, 2, 1)];
        assert_eq!(
            path_runs(&path),
            vec![(gp(0, 0, 0), gp(2, 0, 0)), (gp(2, 0, 0), gp(2, 1, 0)), (gp(2, 1, 1), gp(2, 2, 1))]
        );
        assert_eq!(via_count(&path), 1);
        assert_eq!(path_runs(&[gp(3, 3, 0)]), vec![(gp(3, 3, 0), gp(3, 3, 0))]);
        let stack = [gp(0, 0, 0), gp(0, 0, 1), gp(0, 0, 2)];
        assert_eq!(path_runs(&stack).len(), 3);
    }

    #[test]
    fn ownership_counts() {
        let mut g = RoutingGrid::new(4, 4, vec![Dir::H, Dir::V], 4, 1);
        let cells = [gp(0, 0, 0), gp(1, 0, 0)];
        g.occupy(&cells, NetId(1));
        g.occupy(&cells[..1], NetId(1));
        assert!(!g.passable(gp(0, 0, 0), NetId(2)));
        assert!(g.passable(gp(0, 0, 0), NetId(1)));
        g.release(&cells, NetId(1));
        assert_eq!(g.occupant(gp(0, 0, 0)), Some(NetId(1)));
        assert_eq!(g.occupant(gp(1, 0, 0)), None);
        assert_eq!(g.point(gp(2, 3, 1)), Point::new(8, 12));
    }
}
