//! Seeded random netlists.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::format::{Dir, NetDecl, Netlist, NetlistHeader, Obstacle, Pin};
use crate::geometry::Coord;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub width: Coord,
    pub height: Coord,
    pub layers: u8,
    pub nets: usize,
    pub max_pins: usize,
    /// Largest distance of a pin from its net's first pin, per axis.
    pub spread: Coord,
    pub obstacles: usize,
    pub sp_w: Coord,
    pub hw: Coord,
    pub sp_tp_mult: Coord,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            width: 24,
            height: 24,
            layers: 2,
            nets: 30,
            max_pins: 3,
            spread: 8,
            obstacles: 2,
            sp_w: 2,
            hw: 1,
            sp_tp_mult: 3,
        }
    }
}

/// Netlist drawn from `seed`. Pins never share a cell and avoid obstacles.
pub fn generate(p: &GenParams, seed: u64) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers: Vec<Dir> = (0..p.layers).map(|l| if l % 2 == 0 { Dir::H } else { Dir::V }).collect();
    let mut taken: BTreeSet<(Coord, Coord)> = BTreeSet::new();
    let mut obstacles = Vec::new();
    for _ in 0..p.obstacles {
        let w = rng.gen_range(1..=3.min(p.width));
        let h = rng.gen_range(1..=3.min(p.height));
        let x = rng.gen_range(0..=p.width - w);
        let y = rng.gen_range(0..=p.height - h);
        let layer = rng.gen_range(0..p.layers);
        for cx in x..x + w {
            for cy in y..y + h {
                taken.insert((cx, cy));
            }
        }
        obstacles.push(Obstacle { layer, x_lo: x, y_lo: y, x_hi: x + w - 1, y_hi: y + h - 1 });
    }
    let mut nets = Vec::new();
    for k in 0..p.nets {
        let n = rng.gen_range(2..=p.max_pins.max(2));
        let mut pins = Vec::new();
        let mut tries = 0;
        while pins.len() < n && tries < 200 {
            tries += 1;
            let (x, y) = match pins.first() {
                None => (rng.gen_range(0..p.width), rng.gen_range(0..p.height)),
                Some(Pin { x, y, .. }) => (
                    (x + rng.gen_range(-p.spread..=p.spread)).clamp(0, p.width - 1),
                    (y + rng.gen_range(-p.spread..=p.spread)).clamp(0, p.height - 1),
                ),
            };
            if taken.insert((x, y)) {
                pins.push(Pin { x, y, layer: 0 });
            }
        }
        if pins.len() >= 2 {
            nets.push(NetDecl { name: format!("n{k}"), pins });
        }
    }
    Netlist {
        header: NetlistHeader {
            width: p.width,
            height: p.height,
            layers,
            sp_w: p.sp_w,
            hw: p.hw,
            sp_tp: p.sp_w * p.sp_tp_mult,
        },
        obstacles,
        nets,
    }
}
