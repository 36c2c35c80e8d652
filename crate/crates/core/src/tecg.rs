//! Conflict graph and token graph kept in step.
//!
//! Every vertex insertion and every connection is kept in an event log.
//! Disconnecting or removing vertices re-derives the affected token
//! subgraph by replaying the surviving events of its vertices, so the state
//! always matches a fresh build from the log.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};

use crate::conflict_graph::{ConflictGraph, MergingEdge, Stitch, VertexId};
use crate::error::GraphError;
use crate::geometry::{shadow_of, tpl_conflict, Coord, NetId, SpacingRules, WireSegment};
use crate::spatial::BucketIndex;
use crate::token_graph::{token_splitting, MergeObserver, TgConflict, TokenGraph, TokenId};

/// Four CG vertices `(cnt1, cnt2, brdg1, brdg2)` justifying a merge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MergingPattern {
    pub cnt1: VertexId,
    pub cnt2: VertexId,
    pub brdg1: VertexId,
    pub brdg2: VertexId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConflictKind {
    /// Both ends of the new edge already share a token.
    SameToken,
    /// The cascade tried to merge two adjacent tokens.
    AdjacentMerge(TokenId, TokenId),
    /// An implicit edge closed on a single token.
    ImplicitSelf(TokenId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConflictRecord {
    pub edge: (VertexId, VertexId),
    pub token: TokenId,
    pub kind: ConflictKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    Ok,
    Conflict(ConflictRecord),
}

impl Update {
    pub fn is_conflict(&self) -> bool {
        matches!(self, Update::Conflict(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Event {
    AddVertex(VertexId),
    Connect(VertexId, VertexId),
}

fn ekey(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a < b { (a, b) } else { (b, a) }
}

/// Every pattern of supp. merging generation for merging `tw` into `tx`,
/// with `scc = (tx, ty, tz)`.
pub fn merging_pattern_generation(
    cg: &ConflictGraph,
    tw: TokenId,
    tx: TokenId,
    scc: [TokenId; 3],
) -> Vec<MergingPattern> {
    let [sx, ty, tz] = scc;
    debug_assert_eq!(sx, tx);
    let tok = |v: VertexId| cg.vertex(v).map(|x| x.token);
    let mut out = Vec::new();
    for vw in cg.members(tw) {
        let ns: Vec<VertexId> = cg.neighbors(vw).collect();
        for &ad1 in ns.iter().filter(|&&n| tok(n) == Some(ty)) {
            for &ad2 in ns.iter().filter(|&&n| tok(n) == Some(tz)) {
                for adx in cg.neighbors(ad1).filter(|&n| tok(n) == Some(tx)) {
                    out.push(MergingPattern { cnt1: vw, cnt2: adx, brdg1: ad1, brdg2: ad2 });
                }
            }
        }
    }
    out
}

/// One token merge with the members on each side and the merging patterns
/// it produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MergeRecord {
    pub tw: TokenId,
    pub tx: TokenId,
    pub merged: TokenId,
    pub w_members: Vec<VertexId>,
    pub x_members: Vec<VertexId>,
    pub patterns: Vec<MergingPattern>,
}

struct Observer<'a> {
    cg: &'a mut ConflictGraph,
    history: &'a mut Vec<MergeRecord>,
}

impl MergeObserver for Observer<'_> {
    fn before_merge(&mut self, tw: TokenId, tx: TokenId, scc: [TokenId; 3]) {
        let found = merging_pattern_generation(self.cg, tw, tx, scc);
        for mp in &found {
            self.cg.install_merging_edge((mp.cnt1, mp.cnt2), (mp.brdg1, mp.brdg2), tx);
        }
        self.history.push(MergeRecord {
            tw,
            tx,
            merged: tx,
            w_members: self.cg.members(tw).collect(),
            x_members: self.cg.members(tx).collect(),
            patterns: found,
        });
    }

    fn after_merge(&mut self, tw: TokenId, tx: TokenId, merged: TokenId) {
        self.cg.retag(tw, merged);
        self.cg.retag(tx, merged);
        if let Some(last) = self.history.last_mut() {
            last.merged = merged;
        }
    }
}

/// Token-free summary of a TECG: tokens are named by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CanonicalState {
    pub classes: BTreeSet<BTreeSet<VertexId>>,
    pub edges: BTreeSet<(VertexId, VertexId, bool)>,
    pub sccs: BTreeSet<[VertexId; 3]>,
    pub conflicts: BTreeSet<(VertexId, VertexId)>,
}

#[derive(Clone, Debug)]
pub struct Tecg {
    cg: ConflictGraph,
    tg: TokenGraph,
    rules: SpacingRules,
    conflicts: BTreeMap<(VertexId, VertexId), ConflictRecord>,
    events: BTreeMap<u64, Event>,
    vertex_events: BTreeMap<VertexId, BTreeSet<u64>>,
    edge_event: BTreeMap<(VertexId, VertexId), u64>,
    next_seq: u64,
    index: BucketIndex<VertexId>,
    merges: Vec<MergeRecord>,
}

impl Tecg {
    pub fn new(rules: SpacingRules) -> Self {
        let bucket = (4 * rules.sp_tp).max(16);
        Tecg {
            cg: ConflictGraph::new(),
            tg: TokenGraph::new(),
            rules,
            conflicts: BTreeMap::new(),
            events: BTreeMap::new(),
            vertex_events: BTreeMap::new(),
            edge_event: BTreeMap::new(),
            next_seq: 0,
            index: BucketIndex::new(bucket),
            merges: Vec::new(),
        }
    }

    pub fn cg(&self) -> &ConflictGraph {
        &self.cg
    }

    pub fn tg(&self) -> &TokenGraph {
        &self.tg
    }

    pub fn rules(&self) -> &SpacingRules {
        &self.rules
    }

    pub fn token(&self, v: VertexId) -> Result<TokenId, GraphError> {
        self.cg.token(v)
    }

    pub fn conflicts(&self) -> impl Iterator<Item = &ConflictRecord> {
        self.conflicts.values()
    }

    pub fn conflict_count(&self) -> usize {
        self.conflicts.len()
    }

    /// Merges performed by the most recent connection.
    pub fn last_merges(&self) -> &[MergeRecord] {
        &self.merges
    }

    /// Vertices that are an end of some logged conflict.
    pub fn conflict_vertices(&self) -> BTreeSet<VertexId> {
        self.conflicts.keys().flat_map(|&(a, b)| [a, b]).collect()
    }

    fn log(&mut self, e: Event) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.insert(seq, e);
        match e {
            Event::AddVertex(v) => {
                self.vertex_events.entry(v).or_default().insert(seq);
            }
            Event::Connect(a, b) => {
                self.vertex_events.entry(a).or_default().insert(seq);
                self.vertex_events.entry(b).or_default().insert(seq);
                self.edge_event.insert(ekey(a, b), seq);
            }
        }
        seq
    }

    fn unlog(&mut self, seq: u64) {
        match self.events.remove(&seq) {
            Some(Event::AddVertex(v)) => {
                if let Some(s) = self.vertex_events.get_mut(&v) {
                    s.remove(&seq);
                }
            }
            Some(Event::Connect(a, b)) => {
                for v in [a, b] {
                    if let Some(s) = self.vertex_events.get_mut(&v) {
                        s.remove(&seq);
                    }
                }
                self.edge_event.remove(&ekey(a, b));
            }
            None => {}
        }
    }

    /// Adds a wire as a fresh vertex with its own token. No edges are made.
    pub fn add_segment(&mut self, seg: WireSegment) -> Result<VertexId, GraphError> {
        let t = self.tg.fresh_token();
        let v = match self.cg.add_vertex(seg, t) {
            Ok(v) => v,
            Err(e) => {
                self.tg.remove_token(t).expect("token just made");
                return Err(e);
            }
        };
        self.index.insert(v, &seg.body());
        self.log(Event::AddVertex(v));
        Ok(v)
    }

    /// Adds a vertex without geometry, for graph-only use.
    pub fn add_abstract_vertex(&mut self) -> VertexId {
        let t = self.tg.fresh_token();
        let v = self.cg.add_abstract_vertex(t);
        self.log(Event::AddVertex(v));
        v
    }

    pub fn fresh_segment_id(&mut self) -> crate::geometry::SegmentId {
        self.cg.fresh_segment_id()
    }

    /// Connects `vi` and `vj` and updates the token graph.
    pub fn tecg_update(&mut self, vi: VertexId, vj: VertexId) -> Result<Update, GraphError> {
        if vi == vj {
            return Err(GraphError::SelfLoop(vi));
        }
        for v in [vi, vj] {
            if !self.cg.contains(v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        if self.cg.has_edge(vi, vj) {
            return Ok(match self.conflicts.get(&ekey(vi, vj)) {
                Some(c) => Update::Conflict(*c),
                None => Update::Ok,
            });
        }
        self.log(Event::Connect(vi, vj));
        Ok(self.connect(vi, vj))
    }

    fn connect(&mut self, vi: VertexId, vj: VertexId) -> Update {
        self.tg.begin();
        self.merges.clear();
        self.cg.add_edge(vi, vj).expect("vertices checked");
        let (ti, tj) = (self.cg.token(vi).unwrap(), self.cg.token(vj).unwrap());
        let edge = ekey(vi, vj);
        if ti == tj {
            log::debug!("conflict: {vi} and {vj} share {ti}");
            let rec = ConflictRecord { edge, token: ti, kind: ConflictKind::SameToken };
            self.conflicts.insert(edge, rec);
            return Update::Conflict(rec);
        }
        if self.tg.add_support(ti, tj).expect("tokens exist") {
            let mut obs = Observer { cg: &mut self.cg, history: &mut self.merges };
            self.tg.tg_update(ti, tj, &mut obs).expect("edge just added");
            self.tg.implicit_fixpoint(&mut obs);
        }
        let first = self.tg.take_conflicts().into_iter().next();
        match first {
            None => Update::Ok,
            Some(c) => {
                let (token, kind) = match c {
                    TgConflict::AdjacentMerge(a, b) => (a, ConflictKind::AdjacentMerge(a, b)),
                    TgConflict::ImplicitSelf(t) => (t, ConflictKind::ImplicitSelf(t)),
                };
                log::debug!("conflict on {vi}-{vj}: {kind:?}");
                let rec = ConflictRecord { edge, token, kind };
                self.conflicts.insert(edge, rec);
                Update::Conflict(rec)
            }
        }
    }

    /// Vertices that must take a different mask from `v`.
    pub fn geometric_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let Some(seg) = self.cg.segment(v) else {
            return Vec::new();
        };
        self.segment_neighbors(seg)
            .into_iter()
            .filter(|&n| n != v)
            .collect()
    }

    /// Vertices that would need a different mask from `seg`.
    pub fn segment_neighbors(&self, seg: &WireSegment) -> Vec<VertexId> {
        let zone = shadow_of(seg, &self.rules).region;
        self.index
            .query(&zone)
            .into_iter()
            .filter(|&n| {
                self.cg.segment(n).is_some_and(|o| o.id != seg.id && tpl_conflict(seg, o, &self.rules))
            })
            .collect()
    }

    /// Connects `v` to every geometric neighbour. Returns the conflicts hit.
    pub fn connect_geometric(&mut self, v: VertexId) -> Result<Vec<ConflictRecord>, GraphError> {
        let mut out = Vec::new();
        for n in self.geometric_neighbors(v) {
            if let Update::Conflict(c) = self.tecg_update(v, n)? {
                out.push(c);
            }
        }
        Ok(out)
    }

    /// Splits `victim` along its surviving merging edges.
    pub fn token_splitting(&mut self, victim: TokenId) -> Result<Vec<TokenId>, GraphError> {
        token_splitting(&mut self.tg, &mut self.cg, victim)
    }

    /// Disconnects following only the incremental steps: merging edge
    /// removal, support bookkeeping and token splitting.
    pub fn disconnect_incremental(&mut self, vi: VertexId, vj: VertexId) -> Result<Vec<TokenId>, GraphError> {
        let (ti, tj) = (self.cg.token(vi)?, self.cg.token(vj)?);
        let broken = self.cg.remove_edge(vi, vj)?;
        if let Some(seq) = self.edge_event.get(&ekey(vi, vj)).copied() {
            self.unlog(seq);
        }
        self.tg.begin();
        self.conflicts.remove(&ekey(vi, vj));
        if ti != tj && self.tg.support(ti, tj) > 0 {
            self.tg.remove_support(ti, tj)?;
        }
        let victims: BTreeSet<TokenId> = broken.iter().map(|e: &MergingEdge| e.token).collect();
        let mut made = Vec::new();
        for t in victims {
            if self.tg.contains(t) {
                made.extend(self.token_splitting(t)?);
            }
        }
        Ok(made)
    }

    /// Disconnects `vi` and `vj`, then re-derives the affected token subgraph.
    pub fn tecg_disconnect(&mut self, vi: VertexId, vj: VertexId) -> Result<(), GraphError> {
        if !self.cg.has_edge(vi, vj) {
            return Err(GraphError::UnknownEdge(vi, vj));
        }
        let zone = self.zone_of([vi, vj]);
        self.disconnect_incremental(vi, vj)?;
        self.rederive(&zone, &BTreeSet::new());
        Ok(())
    }

    /// Vertices of the token subgraphs containing any of `vs`.
    fn zone_of(&self, vs: impl IntoIterator<Item = VertexId>) -> BTreeSet<VertexId> {
        let mut tokens = BTreeSet::new();
        for v in vs {
            if let Ok(t) = self.cg.token(v) {
                if !tokens.contains(&t) {
                    tokens.extend(self.tg.component_of(t));
                }
            }
        }
        tokens.into_iter().flat_map(|t| self.cg.members(t).collect::<Vec<_>>()).collect()
    }

    /// Removes a vertex and re-derives its token subgraph.
    pub fn remove_vertex(&mut self, v: VertexId) -> Result<(), GraphError> {
        if !self.cg.contains(v) {
            return Err(GraphError::UnknownVertex(v));
        }
        let zone = self.zone_of([v]);
        self.rederive(&zone, &BTreeSet::from([v]));
        Ok(())
    }

    /// Removes every vertex of `net`.
    pub fn remove_net_vertices(&mut self, net: NetId) -> Result<(), GraphError> {
        let drop: BTreeSet<VertexId> =
            self.cg.vertices().filter(|x| x.net() == Some(net)).map(|x| x.id).collect();
        if drop.is_empty() {
            return Err(GraphError::UnknownNet(net));
        }
        self.remove_vertices(&drop)
    }

    /// Removes a set of vertices with a single re-derivation.
    pub fn remove_vertices(&mut self, drop: &BTreeSet<VertexId>) -> Result<(), GraphError> {
        for &v in drop {
            if !self.cg.contains(v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        let zone = self.zone_of(drop.iter().copied());
        self.rederive(&zone, drop);
        Ok(())
    }

    /// Rebuilds tokens, token edges, SCCs, merging edges and conflicts of
    /// `zone` by replaying its logged events, after deleting `drop`.
    fn rederive(&mut self, zone: &BTreeSet<VertexId>, drop: &BTreeSet<VertexId>) {
        let mut seqs: BTreeSet<u64> = BTreeSet::new();
        for v in zone {
            seqs.extend(self.vertex_events.get(v).into_iter().flatten());
        }
        for v in drop {
            let mine: Vec<u64> = self.vertex_events.get(v).into_iter().flatten().copied().collect();
            for s in mine {
                self.unlog(s);
                seqs.remove(&s);
            }
            self.vertex_events.remove(v);
        }
        let tokens: BTreeSet<TokenId> = zone.iter().filter_map(|&v| self.cg.token(v).ok()).collect();
        for &t in &tokens {
            self.cg.clear_merging_edges_of(t);
            if self.tg.contains(t) {
                self.tg.remove_token(t).expect("token exists");
            }
        }
        for &v in zone {
            let ns: Vec<VertexId> = self.cg.neighbors(v).collect();
            for n in ns {
                if v < n || !zone.contains(&n) {
                    let _ = self.cg.remove_edge(v, n);
                }
            }
        }
        self.conflicts.retain(|&(a, b), _| !zone.contains(&a) && !zone.contains(&b));
        for &v in drop {
            if let Some(seg) = self.cg.segment(v).copied() {
                self.index.remove(v, &seg.body());
            }
            self.cg.remove_vertex(v).expect("vertex exists");
        }
        for s in seqs {
            match self.events[&s] {
                Event::AddVertex(v) => {
                    let t = self.tg.fresh_token();
                    self.cg.set_token(v, t).expect("vertex exists");
                }
                Event::Connect(a, b) => {
                    self.connect(a, b);
                }
            }
        }
    }

    /// A copy rebuilt from scratch by replaying the whole event log.
    pub fn rebuilt(&self) -> Tecg {
        let mut copy = self.clone();
        let all: BTreeSet<VertexId> = copy.cg.vertex_ids().collect();
        copy.rederive(&all, &BTreeSet::new());
        copy
    }

    /// Replaces `v` by pieces cut at `cuts` and connects each piece to its
    /// geometric neighbours. Returns the pieces and the stitches.
    pub fn apply_cuts(&mut self, v: VertexId, cuts: &[Coord]) -> Result<(Vec<VertexId>, Vec<Stitch>), GraphError> {
        let seg = *self.cg.segment(v).ok_or(GraphError::NoGeometry(v))?;
        let pieces = self.cg.cut_pieces(v, cuts)?;
        self.remove_vertex(v)?;
        let mut ids = Vec::with_capacity(pieces.len());
        for p in pieces {
            ids.push(self.add_segment(p)?);
        }
        for &id in &ids {
            self.connect_geometric(id)?;
        }
        let stitches = cuts.iter().map(|&c| Stitch { net: seg.net, layer: seg.layer, at: seg.point_at(c) }).collect();
        Ok((ids, stitches))
    }

    /// The token-free summary used for equivalence checks.
    pub fn canonical(&self) -> CanonicalState {
        let name = |t: TokenId| self.cg.members(t).next().expect("token has members");
        let classes = self.tg.tokens().map(|t| self.cg.members(t).collect()).collect();
        let edges = self
            .tg
            .edges()
            .map(|(a, b)| {
                let (x, y) = (name(a), name(b));
                let (x, y) = if x < y { (x, y) } else { (y, x) };
                (x, y, self.tg.is_implicit(a, b))
            })
            .collect();
        let sccs = self
            .tg
            .sccs()
            .map(|s| {
                let mut n = s.tokens.map(name);
                n.sort();
                n
            })
            .collect();
        CanonicalState { classes, edges, sccs, conflicts: self.conflicts.keys().copied().collect() }
    }

    /// Full state as JSON, for inspection and fixtures.
    pub fn dump_json(&self) -> Value {
        let vertices: Vec<Value> = self
            .cg
            .vertices()
            .map(|x| json!({ "id": x.id.0, "token": x.token.0, "segment": x.segment }))
            .collect();
        let edges: Vec<[u32; 2]> = self.cg.edges().map(|(a, b)| [a.0, b.0]).collect();
        let merging: Vec<Value> = self
            .cg
            .merging_edges()
            .map(|e| {
                json!({
                    "ends": [e.ends.0 .0, e.ends.1 .0],
                    "bridges": [e.bridges.0 .0, e.bridges.1 .0],
                    "token": e.token.0,
                })
            })
            .collect();
        let tokens: Vec<Value> = self
            .tg
            .tokens()
            .map(|t| json!({ "id": t.0, "members": self.cg.members(t).map(|v| v.0).collect::<Vec<_>>() }))
            .collect();
        let tg_edges: Vec<Value> = self
            .tg
            .edges()
            .map(|(a, b)| json!({ "a": a.0, "b": b.0, "support": self.tg.support(a, b), "implicit": self.tg.is_implicit(a, b) }))
            .collect();
        let sccs: Vec<[u32; 3]> = self.tg.sccs().map(|s| s.tokens.map(|t| t.0)).collect();
        let conflicts: Vec<&ConflictRecord> = self.conflicts.values().collect();
        json!({
            "vertices": vertices,
            "edges": edges,
            "merging_edges": merging,
            "tokens": tokens,
            "token_edges": tg_edges,
            "sccs": sccs,
            "conflicts": conflicts,
        })
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        self.cg.check_invariants()?;
        self.tg.check_invariants()?;
        let cg_tokens: BTreeSet<TokenId> = self.cg.tokens().collect();
        let tg_tokens: BTreeSet<TokenId> = self.tg.tokens().collect();
        if cg_tokens != tg_tokens {
            return Err(format!("token sets differ: cg {cg_tokens:?} tg {tg_tokens:?}"));
        }
        for (a, b) in self.cg.edges() {
            let (ta, tb) = (self.cg.token(a).unwrap(), self.cg.token(b).unwrap());
            if ta == tb {
                if !self.conflicts.contains_key(&ekey(a, b)) {
                    return Err(format!("edge {a}-{b} inside {ta} has no conflict record"));
                }
            } else if !self.tg.adjacent(ta, tb) {
                return Err(format!("edge {a}-{b} has no token edge {ta}-{tb}"));
            }
        }
        for &(a, b) in self.conflicts.keys() {
            if !self.cg.has_edge(a, b) {
                return Err(format!("conflict on missing edge {a}-{b}"));
            }
        }
        for (a, b) in self.tg.edges() {
            let want = self.cg.members(a).flat_map(|v| self.cg.neighbors(v)).filter(|n| self.cg.token(*n) == Ok(b)).count();
            if self.tg.support(a, b) as usize != want {
                return Err(format!("support of {a}-{b} is {} but {want} conflict edges join them", self.tg.support(a, b)));
            }
        }
        for (&k, &seq) in &self.edge_event {
            if self.events.get(&seq) != Some(&Event::Connect(k.0, k.1)) && self.events.get(&seq) != Some(&Event::Connect(k.1, k.0)) {
                return Err(format!("edge index for {}-{} is stale", k.0, k.1));
            }
        }
        Ok(())
    }
}
