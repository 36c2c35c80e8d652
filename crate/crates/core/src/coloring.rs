//! Mask assignment, the exhaustive coloring oracle and layout validation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::conflict_graph::{ConflictGraph, VertexId};
use crate::error::OracleError;
use crate::geometry::{rect_spacing, tpl_conflict, Coord, SegmentId, SpacingRules, WireSegment};
use crate::spatial::BucketIndex;
use crate::tecg::Tecg;
use crate::token_graph::{TokenGraph, TokenId};

/// Mask index, 0 to 2.
pub type Mask = u8;

pub const MASKS: Mask = 3;

/// Default vertex bound for the brute force oracle.
pub const ORACLE_BOUND: usize = 20;

/// Node budget per token subgraph before exact search gives up.
const SEARCH_BUDGET: u64 = 2_000_000;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MaskAssignment {
    pub token_colors: BTreeMap<TokenId, Mask>,
    /// Conflict edges whose two ends ended up on one mask.
    pub residual: Vec<(VertexId, VertexId)>,
    /// Token subgraphs for which no proper coloring was found.
    pub uncolorable: Vec<BTreeSet<TokenId>>,
}

impl MaskAssignment {
    pub fn color_of(&self, cg: &ConflictGraph, v: VertexId) -> Option<Mask> {
        cg.token(v).ok().and_then(|t| self.token_colors.get(&t).copied())
    }
}

/// Order in which each next vertex has the most already placed neighbours,
/// ties to the smaller id.
fn search_order<K: Ord + Copy>(nodes: &[K], adj: &BTreeMap<K, BTreeSet<K>>) -> Vec<K> {
    let mut placed: BTreeSet<K> = BTreeSet::new();
    let mut weight: BTreeMap<K, usize> = nodes.iter().map(|&k| (k, 0)).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while order.len() < nodes.len() {
        let (&next, _) = weight
            .iter()
            .filter(|(k, _)| !placed.contains(k))
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .unwrap();
        placed.insert(next);
        order.push(next);
        for n in adj.get(&next).into_iter().flatten() {
            if let Some(w) = weight.get_mut(n) {
                *w += 1;
            }
        }
    }
    order
}

/// Backtracking 3-coloring over `nodes`. `visit` is called for each proper
/// coloring found and returns false to stop. Returns false if the budget ran out.
fn backtrack<K: Ord + Copy>(
    nodes: &[K],
    adj: &BTreeMap<K, BTreeSet<K>>,
    budget: u64,
    visit: &mut dyn FnMut(&BTreeMap<K, Mask>) -> bool,
) -> bool {
    let order = search_order(nodes, adj);
    let mut colors: BTreeMap<K, Mask> = BTreeMap::new();
    let mut steps = 0u64;
    fn go<K: Ord + Copy>(
        i: usize,
        order: &[K],
        adj: &BTreeMap<K, BTreeSet<K>>,
        colors: &mut BTreeMap<K, Mask>,
        steps: &mut u64,
        budget: u64,
        visit: &mut dyn FnMut(&BTreeMap<K, Mask>) -> bool,
    ) -> Option<bool> {
        if i == order.len() {
            return Some(visit(colors));
        }
        *steps += 1;
        if *steps > budget {
            return None;
        }
        let k = order[i];
        for c in 0..MASKS {
            let clash = adj.get(&k).into_iter().flatten().any(|n| colors.get(n) == Some(&c));
            if clash {
                continue;
            }
            colors.insert(k, c);
            let more = go(i + 1, order, adj, colors, steps, budget, visit)?;
            colors.remove(&k);
            if !more {
                return Some(false);
            }
        }
        Some(true)
    }
    go(0, &order, adj, &mut colors, &mut steps, budget, visit).is_some()
}

fn cg_adjacency(cg: &ConflictGraph) -> (Vec<VertexId>, BTreeMap<VertexId, BTreeSet<VertexId>>) {
    let nodes: Vec<VertexId> = cg.vertex_ids().collect();
    let adj = nodes.iter().map(|&v| (v, cg.neighbors(v).collect())).collect();
    (nodes, adj)
}

/// Any proper 3-coloring of the conflict graph, by exhaustive search.
pub fn brute_force_3color(cg: &ConflictGraph, bound: usize) -> Result<Option<BTreeMap<VertexId, Mask>>, OracleError> {
    if cg.vertex_count() > bound {
        return Err(OracleError::TooLarge { size: cg.vertex_count(), bound });
    }
    let (nodes, adj) = cg_adjacency(cg);
    let mut found = None;
    backtrack(&nodes, &adj, u64::MAX, &mut |c| {
        found = Some(c.clone());
        false
    });
    Ok(found)
}

/// Calls `visit` on every proper 3-coloring until it returns false.
pub fn for_each_3coloring(
    cg: &ConflictGraph,
    bound: usize,
    mut visit: impl FnMut(&BTreeMap<VertexId, Mask>) -> bool,
) -> Result<(), OracleError> {
    if cg.vertex_count() > bound {
        return Err(OracleError::TooLarge { size: cg.vertex_count(), bound });
    }
    let (nodes, adj) = cg_adjacency(cg);
    backtrack(&nodes, &adj, u64::MAX, &mut visit);
    Ok(())
}

/// Lowest-first greedy coloring in the given order; `None` where all three
/// masks are taken by neighbours.
pub fn greedy_colors<K: Ord + Copy>(order: &[K], adj: &BTreeMap<K, BTreeSet<K>>) -> BTreeMap<K, Option<Mask>> {
    let mut out: BTreeMap<K, Option<Mask>> = BTreeMap::new();
    for &k in order {
        let used: BTreeSet<Mask> =
            adj.get(&k).into_iter().flatten().filter_map(|n| out.get(n).copied().flatten()).collect();
        out.insert(k, (0..MASKS).find(|c| !used.contains(c)));
    }
    out
}

/// Colors every token subgraph exactly, lowest mask first. Subgraphs with
/// no proper coloring get a greedy fallback and are listed as uncolorable.
pub fn assign_token_colors(tg: &TokenGraph) -> (BTreeMap<TokenId, Mask>, Vec<BTreeSet<TokenId>>) {
    let mut colors = BTreeMap::new();
    let mut bad = Vec::new();
    for comp in tg.components() {
        let nodes: Vec<TokenId> = comp.iter().copied().collect();
        let adj: BTreeMap<TokenId, BTreeSet<TokenId>> =
            nodes.iter().map(|&t| (t, tg.neighbors(t).collect())).collect();
        let mut found = None;
        let finished = backtrack(&nodes, &adj, SEARCH_BUDGET, &mut |c| {
            found = Some(c.clone());
            false
        });
        match found {
            Some(c) => colors.extend(c),
            None => {
                if !finished {
                    log::warn!("coloring search budget exhausted on {} tokens", nodes.len());
                }
                let order = search_order(&nodes, &adj);
                for (t, c) in greedy_colors(&order, &adj) {
                    colors.insert(t, c.unwrap_or(0));
                }
                bad.push(comp);
            }
        }
    }
    (colors, bad)
}

/// Token coloring plus the conflict edges left monochromatic.
pub fn assign_colors(tecg: &Tecg) -> MaskAssignment {
    let (token_colors, uncolorable) = assign_token_colors(tecg.tg());
    let cg = tecg.cg();
    let residual = cg
        .edges()
        .filter(|&(a, b)| {
            let ca = cg.token(a).ok().and_then(|t| token_colors.get(&t));
            let cb = cg.token(b).ok().and_then(|t| token_colors.get(&t));
            ca == cb
        })
        .collect();
    MaskAssignment { token_colors, residual, uncolorable }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SameColorSpacing,
    UncolorableComponent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub segments: Vec<SegmentId>,
    pub distance: Option<Coord>,
}

/// Checks every pair of same-layer wires: a pair that needs different
/// masks but shares one is a violation, and so is an uncolored wire.
pub fn validate_layout(wires: &[(WireSegment, Option<Mask>)], rules: &SpacingRules) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut index = BucketIndex::new((4 * rules.sp_tp).max(16));
    for (i, (w, c)) in wires.iter().enumerate() {
        if c.is_none() {
            out.push(Violation { kind: ViolationKind::UncolorableComponent, segments: vec![w.id], distance: None });
        }
        index.insert(i, &w.body());
    }
    for (i, (a, ca)) in wires.iter().enumerate() {
        let Some(ca) = ca else { continue };
        let zone = crate::geometry::shadow_of(a, rules).region;
        for j in index.query(&zone) {
            if j <= i {
                continue;
            }
            let (b, cb) = &wires[j];
            if cb.as_ref() == Some(ca) && tpl_conflict(a, b, rules) {
                let d = rect_spacing(&a.body(), &b.body());
                out.push(Violation { kind: ViolationKind::SameColorSpacing, segments: vec![a.id, b.id], distance: Some(d) });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NetId, Point};

    fn tg(n: u32, edges: &[(u32, u32)]) -> TokenGraph {
        let mut g = TokenGraph::new();
        for _ in 0..n {
            g.fresh_token();
        }
        for &(a, b) in edges {
            g.add_support(TokenId(a), TokenId(b)).unwrap();
        }
        g
    }

    #[test]
    fn single_token_gets_first_mask() {
        let (c, bad) = assign_token_colors(&tg(1, &[]));
        assert_eq!(c[&TokenId(1)], 0);
        assert!(bad.is_empty());
    }

    #[test]
    fn triangle_with_tail() {
        let (c, _) = assign_token_colors(&tg(4, &[(1, 2), (2, 3), (1, 3), (3, 4)]));
        let got: Vec<Mask> = (1..=4).map(|t| c[&TokenId(t)]).collect();
        assert_eq!(got, vec![0, 1, 2, 0]);
    }

    #[test]
    fn k4_is_reported() {
        let (_, bad) = assign_token_colors(&tg(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]));
        assert_eq!(bad.len(), 1);
    }

    fn abstract_cg(n: usize, edges: &[(usize, usize)]) -> ConflictGraph {
        let mut cg = ConflictGraph::new();
        let vs: Vec<VertexId> = (0..n).map(|i| cg.add_abstract_vertex(TokenId(i as u32 + 1))).collect();
        for &(a, b) in edges {
            cg.add_edge(vs[a], vs[b]).unwrap();
        }
        cg
    }

    #[test]
    fn oracle_on_triangle_and_k4() {
        let tri = abstract_cg(3, &[(0, 1), (1, 2), (0, 2)]);
        let c = brute_force_3color(&tri, ORACLE_BOUND).unwrap().unwrap();
        assert_eq!(c.values().collect::<BTreeSet<_>>().len(), 3);
        let k4 = abstract_cg(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(brute_force_3color(&k4, ORACLE_BOUND).unwrap(), None);
    }

    #[test]
    fn oracle_bound() {
        let cg = abstract_cg(5, &[]);
        assert_eq!(brute_force_3color(&cg, 4), Err(OracleError::TooLarge { size: 5, bound: 4 }));
    }

    #[test]
    fn coloring_count_of_a_path() {
        let cg = abstract_cg(3, &[(0, 1), (1, 2)]);
        let mut n = 0;
        for_each_3coloring(&cg, ORACLE_BOUND, |_| {
            n += 1;
            true
        })
        .unwrap();
        assert_eq!(n, 3 * 2 * 2);
    }

    fn hwire(id: u32, net: u32, y: Coord) -> WireSegment {
        WireSegment::new(SegmentId(id), NetId(net), 0, Point::new(0, y), Point::new(20, y), 1).unwrap()
    }

    #[test]
    fn validation() {
        let rules = SpacingRules::new(2, 6).unwrap();
        assert!(validate_layout(&[], &rules).is_empty());
        // Bodies 2 wide; centre distance 7 leaves spacing 5 = sp_tp - 1.
        let a = hwire(0, 0, 0);
        let b = hwire(1, 1, 7);
        let v = validate_layout(&[(a, Some(1)), (b, Some(1))], &rules);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].distance, Some(5));
        assert!(validate_layout(&[(a, Some(1)), (b, Some(2))], &rules).is_empty());
        let far = hwire(2, 1, 8);
        assert!(validate_layout(&[(a, Some(1)), (far, Some(1))], &rules).is_empty());
        assert_eq!(validate_layout(&[(a, None)], &rules)[0].kind, ViolationKind::UncolorableComponent);
    }
}
