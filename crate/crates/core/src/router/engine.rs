//! What a commit does to the coloring state in each mode.

use std::collections::{BTreeMap, BTreeSet};

use crate::coloring::{assign_colors, validate_layout, Mask, MASKS};
use crate::conflict_graph::{Stitch, VertexId};
use crate::geometry::{covered_range, shadow_of, tpl_conflict, Coord, NetId, SegmentId, SpacingRules, WireSegment};
use crate::spatial::BucketIndex;
use crate::stitcher::{apply_stitches, plan_for_all_sccs, Penalties};
use crate::tecg::Tecg;

/// Coloring outlook for a wire passing one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellRisk {
    Free,
    /// The wire would be pinned to one mask here.
    Tight,
    /// A wire here cannot get a legal mask.
    Forced,
}

#[derive(Clone, Debug, Default)]
pub struct Committed {
    /// Final segments, after any splitting.
    pub segs: Vec<SegmentId>,
    pub stitches: Vec<Stitch>,
    /// Segments of other connections involved in conflicts this commit made.
    pub blockers: BTreeSet<SegmentId>,
    /// Own segments involved in those conflicts.
    pub hot: Vec<WireSegment>,
    pub conflicts: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct Sizes {
    pub cg_vertices: usize,
    pub cg_edges: usize,
    pub tg_tokens: usize,
    pub tg_edges: usize,
}

pub trait Engine {
    fn fresh_segment_id(&mut self) -> SegmentId;
    fn cell_risk(&self, probe: &WireSegment) -> CellRisk;
    fn commit(&mut self, wires: Vec<WireSegment>) -> Committed;
    fn remove(&mut self, segs: &BTreeSet<SegmentId>);
    fn sizes(&self) -> Sizes;
    /// Every committed wire with its mask.
    fn colored(&self) -> Vec<(WireSegment, Option<Mask>)>;
    /// Conflict edges left in the final coloring.
    fn conflict_count(&self) -> usize;
    fn tecg(&self) -> Option<&Tecg> {
        None
    }
}

/// Token graph backed state.
pub struct TriadEngine {
    pub tecg: Tecg,
    pub penalties: Penalties,
    pub allow_stitch: bool,
}

impl TriadEngine {
    pub fn new(rules: SpacingRules, penalties: Penalties, allow_stitch: bool) -> Self {
        TriadEngine { tecg: Tecg::new(rules), penalties, allow_stitch }
    }

    fn conflict_edges(&self) -> BTreeSet<(VertexId, VertexId)> {
        self.tecg.conflicts().map(|c| c.edge).collect()
    }

    fn seg_of(&self, v: VertexId) -> Option<SegmentId> {
        self.tecg.cg().segment(v).map(|s| s.id)
    }
}

impl Engine for TriadEngine {
    fn fresh_segment_id(&mut self) -> SegmentId {
        self.tecg.fresh_segment_id()
    }

    fn cell_risk(&self, probe: &WireSegment) -> CellRisk {
        let cg = self.tecg.cg();
        let tokens: BTreeSet<_> =
            self.tecg.segment_neighbors(probe).into_iter().filter_map(|n| cg.token(n).ok()).collect();
        let mut risk = CellRisk::Free;
        for &t in &tokens {
            for scc in self.tecg.tg().sccs_of(t) {
                match scc.tokens.iter().filter(|x| tokens.contains(x)).count() {
                    3 => return CellRisk::Forced,
                    2 => risk = CellRisk::Tight,
                    _ => {}
                }
            }
        }
        risk
    }

    fn commit(&mut self, wires: Vec<WireSegment>) -> Committed {
        let before = self.conflict_edges();
        let mut mine: BTreeSet<VertexId> = BTreeSet::new();
        for w in wires {
            mine.insert(self.tecg.add_segment(w).expect("fresh segment ids"));
        }
        for &v in &mine {
            self.tecg.connect_geometric(v).expect("live vertex");
        }
        let mut stitches = Vec::new();
        if self.allow_stitch {
            let mut tried = BTreeSet::new();
            loop {
                let bad = self.tecg.conflict_vertices();
                let Some(&v) = mine.iter().find(|v| bad.contains(v) && !tried.contains(*v)) else { break };
                tried.insert(v);
                let rules = *self.tecg.rules();
                let Ok(plan) = plan_for_all_sccs(v, &self.tecg, &rules, &self.penalties) else { continue };
                if !plan.solvable || plan.cuts.is_empty() {
                    continue;
                }
                let (pieces, st) = apply_stitches(&plan, &mut self.tecg).expect("solvable plan");
                mine.remove(&v);
                mine.extend(pieces);
                stitches.extend(st);
            }
        }
        let fresh: Vec<(VertexId, VertexId)> = self.conflict_edges().difference(&before).copied().collect();
        let mut blockers = BTreeSet::new();
        let mut hot = Vec::new();
        for &(a, b) in &fresh {
            for v in [a, b] {
                if mine.contains(&v) {
                    hot.extend(self.tecg.cg().segment(v).copied());
                } else {
                    blockers.extend(self.seg_of(v));
                }
            }
        }
        Committed {
            segs: mine.iter().filter_map(|&v| self.seg_of(v)).collect(),
            stitches,
            blockers,
            hot,
            conflicts: fresh.len(),
        }
    }

    fn remove(&mut self, segs: &BTreeSet<SegmentId>) {
        let cg = self.tecg.cg();
        let vs: BTreeSet<VertexId> = segs.iter().filter_map(|s| cg.vertex_of_segment(*s)).collect();
        self.tecg.remove_vertices(&vs).expect("live vertices");
    }

    fn sizes(&self) -> Sizes {
        Sizes {
            cg_vertices: self.tecg.cg().vertex_count(),
            cg_edges: self.tecg.cg().edge_count(),
            tg_tokens: self.tecg.tg().token_count(),
            tg_edges: self.tecg.tg().edge_count(),
        }
    }

    fn colored(&self) -> Vec<(WireSegment, Option<Mask>)> {
        let ma = assign_colors(&self.tecg);
        let cg = self.tecg.cg();
        cg.vertex_ids().filter_map(|v| Some((*cg.segment(v)?, ma.color_of(cg, v)))).collect()
    }

    fn conflict_count(&self) -> usize {
        let ma = assign_colors(&self.tecg);
        let mut edges = self.conflict_edges();
        edges.extend(ma.residual.iter().map(|&(a, b)| (a.min(b), a.max(b))));
        edges.len()
    }

    fn tecg(&self) -> Option<&Tecg> {
        Some(&self.tecg)
    }
}

/// Fixed masks chosen at commit time.
pub struct GreedyState {
    rules: SpacingRules,
    segs: BTreeMap<SegmentId, (WireSegment, Option<Mask>)>,
    index: BucketIndex<SegmentId>,
    next_id: u32,
    pub allow_stitch: bool,
}

type Bits = u8;
const ALL: Bits = (1 << MASKS) - 1;

fn lowest(bits: Bits) -> Option<Mask> {
    (0..MASKS).find(|c| bits & (1 << c) != 0)
}

impl GreedyState {
    pub fn new(rules: SpacingRules, allow_stitch: bool) -> Self {
        GreedyState { rules, segs: BTreeMap::new(), index: BucketIndex::new((4 * rules.sp_tp).max(16)), next_id: 0, allow_stitch }
    }

    fn neighbors(&self, w: &WireSegment) -> Vec<SegmentId> {
        let zone = shadow_of(w, &self.rules).region;
        self.index
            .query(&zone)
            .into_iter()
            .filter(|id| *id != w.id && tpl_conflict(w, &self.segs[id].0, &self.rules))
            .collect()
    }

    fn insert(&mut self, w: WireSegment, c: Option<Mask>) {
        self.next_id = self.next_id.max(w.id.0 + 1);
        self.index.insert(w.id, &w.body());
        self.segs.insert(w.id, (w, c));
    }

    fn used(&self, w: &WireSegment) -> Bits {
        self.neighbors(w).iter().filter_map(|id| self.segs[id].1).fold(0, |b, c| b | (1 << c))
    }

    /// Lowest mask unused by every closer-than-spacing neighbour, fixed
    /// from then on. `None` when all three are taken; the wire is kept
    /// without a mask.
    pub fn greedy_commit(&mut self, w: WireSegment) -> Option<Mask> {
        let c = lowest(ALL & !self.used(&w));
        self.insert(w, c);
        c
    }

    /// Splits `w` into the fewest pieces that each fit one free mask.
    /// `None` when no split works.
    fn split_plan(&self, w: &WireSegment) -> Option<Vec<(Coord, Coord, Mask)>> {
        let (lo, hi) = (w.lo(), w.hi());
        let mut used = vec![0 as Bits; (hi - lo + 1) as usize];
        for id in self.neighbors(w) {
            let (n, c) = &self.segs[&id];
            let Some(c) = c else { continue };
            if let Some((a, b)) = covered_range(w, &shadow_of(n, &self.rules).region) {
                for t in a..=b {
                    used[(t - lo) as usize] |= 1 << c;
                }
            }
        }
        let allowed = |t: Coord| ALL & !used[(t - lo) as usize];
        let mut pieces = Vec::new();
        let mut s = lo;
        let mut set = allowed(lo);
        if set == 0 {
            return None;
        }
        for t in lo + 1..=hi {
            let next = set & allowed(t);
            if next != 0 {
                set = next;
                continue;
            }
            let e = t - 1;
            if e <= s {
                return None;
            }
            pieces.push((s, e, lowest(set)?));
            s = e;
            set = allowed(e) & allowed(t);
            if set == 0 {
                return None;
            }
        }
        pieces.push((s, hi, lowest(set)?));
        Some(pieces)
    }

    /// Mask for a wire that cannot avoid a conflict: the one shared with
    /// the fewest neighbours, lowest first.
    fn fallback(&self, w: &WireSegment) -> Mask {
        let ns = self.neighbors(w);
        (0..MASKS).min_by_key(|&c| (ns.iter().filter(|id| self.segs[*id].1 == Some(c)).count(), c)).expect("masks")
    }
}

impl Engine for GreedyState {
    fn fresh_segment_id(&mut self) -> SegmentId {
        let id = SegmentId(self.next_id);
        self.next_id += 1;
        id
    }

    fn cell_risk(&self, probe: &WireSegment) -> CellRisk {
        match self.used(probe).count_ones() {
            3 => CellRisk::Forced,
            2 => CellRisk::Tight,
            _ => CellRisk::Free,
        }
    }

    fn commit(&mut self, wires: Vec<WireSegment>) -> Committed {
        let mut out = Committed::default();
        for w in wires {
            let whole = lowest(ALL & !self.used(&w));
            if let Some(c) = whole {
                self.insert(w, Some(c));
                out.segs.push(w.id);
                continue;
            }
            let plan = if self.allow_stitch { self.split_plan(&w) } else { None };
            match plan {
                Some(pieces) => {
                    for (k, &(a, b, c)) in pieces.iter().enumerate() {
                        let id = self.fresh_segment_id();
                        self.insert(w.piece(id, a, b), Some(c));
                        out.segs.push(id);
                        if k > 0 {
                            out.stitches.push(Stitch { net: w.net, layer: w.layer, at: w.point_at(a) });
                        }
                    }
                }
                None => {
                    let c = self.fallback(&w);
                    out.hot.push(w);
                    for id in self.neighbors(&w) {
                        if self.segs[&id].1 == Some(c) {
                            out.blockers.insert(id);
                            out.conflicts += 1;
                        }
                    }
                    self.insert(w, Some(c));
                    out.segs.push(w.id);
                }
            }
        }
        out.blockers.retain(|id| !out.segs.contains(id));
        out
    }

    fn remove(&mut self, segs: &BTreeSet<SegmentId>) {
        for id in segs {
            if let Some((w, _)) = self.segs.remove(id) {
                self.index.remove(*id, &w.body());
            }
        }
    }

    fn sizes(&self) -> Sizes {
        let mut edges = 0;
        for (id, (w, _)) in &self.segs {
            edges += self.neighbors(w).iter().filter(|n| *n > id).count();
        }
        Sizes { cg_vertices: self.segs.len(), cg_edges: edges, tg_tokens: 0, tg_edges: 0 }
    }

    fn colored(&self) -> Vec<(WireSegment, Option<Mask>)> {
        self.segs.values().copied().collect()
    }

    fn conflict_count(&self) -> usize {
        validate_layout(&self.colored(), &self.rules).len()
    }
}

/// Same-net neighbours do not count toward a probe's risk when they touch
/// it, so probes carry the routed net.
pub fn probe(net: NetId, layer: u8, at: crate::geometry::Point, hw: Coord) -> WireSegment {
    WireSegment::new(SegmentId(u32::MAX), net, layer, at, at, hw).expect("point wire")
}
