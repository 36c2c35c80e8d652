//! Cost-driven maze search over (cell, layer, heading).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::grid::{GridPoint, RoutingGrid};
use super::CostWeights;
use crate::format::Dir;
use crate::geometry::NetId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Heading {
    None,
    H,
    V,
}

fn step_cost(grid: &RoutingGrid, w: &CostWeights, from: GridPoint, to: GridPoint, heading: Heading) -> (i64, Heading) {
    if from.layer != to.layer {
        return (w.via_cost, Heading::None);
    }
    let h = if from.y == to.y { Heading::H } else { Heading::V };
    let preferred = match grid.dirs[to.layer as usize] {
        Dir::H => h == Heading::H,
        Dir::V => h == Heading::V,
    };
    let mut c = if preferred { w.unit_wire_cost } else { w.wrong_way_cost };
    if heading != Heading::None && heading != h {
        c += w.bend_cost;
    }
    (c, h)
}

fn moves(grid: &RoutingGrid, p: GridPoint) -> impl Iterator<Item = GridPoint> + '_ {
    let planar = [(1, 0), (-1, 0), (0, 1), (0, -1)].into_iter().map(move |(dx, dy)| GridPoint::new(p.x + dx, p.y + dy, p.layer));
    let up = (p.layer + 1 < grid.layers()).then(|| GridPoint::new(p.x, p.y, p.layer + 1));
    let down = p.layer.checked_sub(1).map(|l| GridPoint::new(p.x, p.y, l));
    planar.chain(up).chain(down).filter(move |q| grid.contains(*q))
}

/// Cheapest path from `src` to `dst` for `net`. `cell` gives the surcharge
/// for entering a cell, or `None` when the cell may not be used; it is only
/// asked about cells the net may occupy.
pub fn maze_search(
    grid: &RoutingGrid,
    net: NetId,
    src: GridPoint,
    dst: GridPoint,
    w: &CostWeights,
    cell: impl FnMut(GridPoint) -> Option<i64>,
) -> Option<(Vec<GridPoint>, i64)> {
    search(grid, net, src, dst, w, cell, false)
}

/// Like [`maze_search`] but cells held by other nets are offered to `cell`
/// too. Used to find which routed wires stand in the way.
pub fn maze_search_through(
    grid: &RoutingGrid,
    net: NetId,
    src: GridPoint,
    dst: GridPoint,
    w: &CostWeights,
    cell: impl FnMut(GridPoint) -> Option<i64>,
) -> Option<(Vec<GridPoint>, i64)> {
    search(grid, net, src, dst, w, cell, true)
}

fn search(
    grid: &RoutingGrid,
    net: NetId,
    src: GridPoint,
    dst: GridPoint,
    w: &CostWeights,
    mut cell: impl FnMut(GridPoint) -> Option<i64>,
    through: bool,
) -> Option<(Vec<GridPoint>, i64)> {
    let ok = |p: GridPoint| if through { grid.reachable(p, net) } else { grid.passable(p, net) };
    if !grid.contains(src) || !grid.contains(dst) || !ok(src) || !ok(dst) {
        return None;
    }
    let n = (grid.width * grid.height) as usize * grid.layers() as usize;
    let key = |p: GridPoint, h: Heading| grid.idx(p) * 3 + h as usize;
    let mut dist = vec![i64::MAX; n * 3];
    let mut prev: Vec<u32> = vec![u32::MAX; n * 3];
    let mut surcharge: Vec<Option<Option<i64>>> = vec![None; n];
    let mut charge = |p: GridPoint| -> Option<i64> {
        let i = grid.idx(p);
        *surcharge[i].get_or_insert_with(|| if ok(p) { cell(p) } else { None })
    };
    let s0 = charge(src)?;
    let start = key(src, Heading::None);
    dist[start] = s0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((s0, start)));
    let decode = |k: usize| -> (GridPoint, Heading) {
        let h = match k % 3 {
            0 => Heading::None,
            1 => Heading::H,
            _ => Heading::V,
        };
        let c = (k / 3) as i64;
        let per_layer = grid.width * grid.height;
        let layer = (c / per_layer) as u8;
        let r = c % per_layer;
        (GridPoint::new(r % grid.width, r / grid.width, layer), h)
    };
    while let Some(Reverse((d, k))) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        let (p, h) = decode(k);
        if p == dst {
            let mut path = vec![p];
            let mut cur = k;
            while prev[cur] != u32::MAX {
                cur = prev[cur] as usize;
                path.push(decode(cur).0);
            }
            path.reverse();
            return Some((path, d));
        }
        for q in moves(grid, p) {
            let Some(sc) = charge(q) else { continue };
            let (c, h2) = step_cost(grid, w, p, q, h);
            let nk = key(q, h2);
            let nd = d + c + sc;
            if nd < dist[nk] {
                dist[nk] = nd;
                prev[nk] = k as u32;
                heap.push(Reverse((nd, nk)));
            }
        }
    }
    None
}

/// Cost of `path` under the same model as [`maze_search`].
pub fn path_cost(grid: &RoutingGrid, path: &[GridPoint], w: &CostWeights, mut cell: impl FnMut(GridPoint) -> Option<i64>) -> Option<i64> {
    let mut total = cell(*path.first()?)?;
    let mut h = Heading::None;
    for pair in path.windows(2) {
        let (c, h2) = step_cost(grid, w, pair[0], pair[1], h);
        total += c + cell(pair[1])?;
        h = h2;
    }
    Some(total)
}
