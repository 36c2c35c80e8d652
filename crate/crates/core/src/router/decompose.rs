//! Multi-pin nets to two-pin connections.

use serde::{Deserialize, Serialize};

use crate::format::{Netlist, Pin};
use crate::geometry::{Coord, NetId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TwoPinId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoPinNet {
    pub id: TwoPinId,
    pub net: NetId,
    pub source: Pin,
    pub target: Pin,
}

impl TwoPinNet {
    pub fn half_perimeter(&self) -> Coord {
        (self.source.x - self.target.x).abs() + (self.source.y - self.target.y).abs()
    }
}

fn pin_distance(a: &Pin, b: &Pin) -> Coord {
    (a.x - b.x).abs() + (a.y - b.y).abs() + (a.layer as Coord - b.layer as Coord).abs()
}

/// Rectilinear spanning tree edges over `pins` as (parent, child) pairs.
pub fn spanning_tree(pins: &[Pin]) -> Vec<(usize, usize)> {
    let n = pins.len();
    if n < 2 {
        return Vec::new();
    }
    let mut best: Vec<(Coord, usize)> = (0..n).map(|i| (pin_distance(&pins[0], &pins[i]), 0)).collect();
    let mut done = vec![false; n];
    done[0] = true;
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let next = (0..n).filter(|&i| !done[i]).min_by_key(|&i| (best[i].0, i)).expect("pins remain");
        done[next] = true;
        edges.push((best[next].1, next));
        for i in 0..n {
            let d = pin_distance(&pins[next], &pins[i]);
            if !done[i] && d < best[i].0 {
                best[i] = (d, next);
            }
        }
    }
    edges
}

/// Two-pin connections of every net, numbered in netlist order.
pub fn decompose_nets(nl: &Netlist) -> Vec<TwoPinNet> {
    let mut out = Vec::new();
    for (k, decl) in nl.nets.iter().enumerate() {
        let mut pins = decl.pins.clone();
        let mut seen = std::collections::BTreeSet::new();
        pins.retain(|p| seen.insert(*p));
        if pins.len() < 2 {
            log::warn!("net {} has fewer than two distinct pins; skipped", decl.name);
            continue;
        }
        for (a, b) in spanning_tree(&pins) {
            out.push(TwoPinNet { id: TwoPinId(out.len() as u32), net: NetId(k as u32), source: pins[a], target: pins[b] });
        }
    }
    out
}
