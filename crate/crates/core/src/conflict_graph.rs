//! Conflict graph: one vertex per wire segment, an edge wherever two
//! different-net segments sit closer than the mask spacing.
//!
//! Besides plain adjacency the graph carries the token assignment of every
//! vertex and the merging-edge bookkeeping that records why two groups of
//! vertices were folded into one token.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::GraphError;
use crate::geometry::{within_mask_spacing, Coord, NetId, Point, SegmentId, SpacingRules, WireSegment};
use crate::token_graph::TokenId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MergeEdgeId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CgVertex {
    pub id: VertexId,
    /// `None` for abstract vertices used by graph-only fixtures.
    pub segment: Option<WireSegment>,
    pub token: TokenId,
}

impl CgVertex {
    pub fn net(&self) -> Option<NetId> {
        self.segment.map(|s| s.net)
    }
}

/// Record that `ends` were put under one token because of the two bridges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MergingEdge {
    pub id: MergeEdgeId,
    pub ends: (VertexId, VertexId),
    pub bridges: (VertexId, VertexId),
    pub token: TokenId,
}

impl MergingEdge {
    pub fn vertices(&self) -> [VertexId; 4] {
        [self.ends.0, self.ends.1, self.bridges.0, self.bridges.1]
    }

    fn spans(&self, a: VertexId, b: VertexId) -> bool {
        let vs = self.vertices();
        vs.contains(&a) && vs.contains(&b)
    }
}

/// Stitch position created by splitting a wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Stitch {
    pub net: NetId,
    pub layer: u8,
    pub at: Point,
}

#[derive(Clone, Debug, Default)]
pub struct ConflictGraph {
    vertices: BTreeMap<VertexId, CgVertex>,
    adj: BTreeMap<VertexId, BTreeSet<VertexId>>,
    edge_count: usize,
    merging: BTreeMap<MergeEdgeId, MergingEdge>,
    /// Merging edges in which the vertex is a bridge.
    e_brdg: BTreeMap<VertexId, BTreeSet<MergeEdgeId>>,
    /// Merging edges in which the vertex is an end point.
    e_ends: BTreeMap<VertexId, BTreeSet<MergeEdgeId>>,
    members: BTreeMap<TokenId, BTreeSet<VertexId>>,
    by_segment: HashMap<SegmentId, VertexId>,
    next_vertex: u32,
    next_merge: u32,
    next_segment: u32,
}

impl ConflictGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertex(&self, v: VertexId) -> Option<&CgVertex> {
        self.vertices.get(&v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &CgVertex> {
        self.vertices.values()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains_key(&v)
    }

    pub fn vertex_of_segment(&self, s: SegmentId) -> Option<VertexId> {
        self.by_segment.get(&s).copied()
    }

    pub fn token(&self, v: VertexId) -> Result<TokenId, GraphError> {
        self.vertices.get(&v).map(|x| x.token).ok_or(GraphError::UnknownVertex(v))
    }

    pub fn segment(&self, v: VertexId) -> Option<&WireSegment> {
        self.vertices.get(&v).and_then(|x| x.segment.as_ref())
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj.get(&v).map_or(0, |s| s.len())
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.adj.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adj.iter().flat_map(|(a, ns)| ns.iter().filter(move |b| a < *b).map(move |b| (*a, *b)))
    }

    /// V_t(T): the vertices currently holding `t`.
    pub fn members(&self, t: TokenId) -> impl Iterator<Item = VertexId> + '_ {
        self.members.get(&t).into_iter().flatten().copied()
    }

    pub fn member_count(&self, t: TokenId) -> usize {
        self.members.get(&t).map_or(0, |s| s.len())
    }

    pub fn tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.members.keys().copied()
    }

    pub fn fresh_segment_id(&mut self) -> SegmentId {
        let id = SegmentId(self.next_segment);
        self.next_segment += 1;
        id
    }

    fn alloc_vertex(&mut self, segment: Option<WireSegment>, token: TokenId) -> VertexId {
        let id = VertexId(self.next_vertex);
        self.next_vertex += 1;
        self.vertices.insert(id, CgVertex { id, segment, token });
        self.adj.insert(id, BTreeSet::new());
        self.members.entry(token).or_default().insert(id);
        id
    }

    pub fn add_vertex(&mut self, seg: WireSegment, fresh_token: TokenId) -> Result<VertexId, GraphError> {
        if self.by_segment.contains_key(&seg.id) {
            return Err(GraphError::DuplicateSegment(seg.id));
        }
        self.next_segment = self.next_segment.max(seg.id.0 + 1);
        let id = self.alloc_vertex(Some(seg), fresh_token);
        self.by_segment.insert(seg.id, id);
        Ok(id)
    }

    /// Vertex without geometry, for graph-only constructions.
    pub fn add_abstract_vertex(&mut self, fresh_token: TokenId) -> VertexId {
        self.alloc_vertex(None, fresh_token)
    }

    /// Returns `true` when the edge is new.
    pub fn add_edge(&mut self, a: VertexId, b: VertexId) -> Result<bool, GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        for v in [a, b] {
            if !self.contains(v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        let fresh = self.adj.get_mut(&a).unwrap().insert(b);
        self.adj.get_mut(&b).unwrap().insert(a);
        if fresh {
            self.edge_count += 1;
        }
        Ok(fresh)
    }

    /// Removes the edge and every merging edge whose four vertices include
    /// both end points. The removed merging edges are returned.
    pub fn remove_edge(&mut self, a: VertexId, b: VertexId) -> Result<Vec<MergingEdge>, GraphError> {
        if !self.has_edge(a, b) {
            return Err(GraphError::UnknownEdge(a, b));
        }
        self.adj.get_mut(&a).unwrap().remove(&b);
        self.adj.get_mut(&b).unwrap().remove(&a);
        self.edge_count -= 1;

        let broken: Vec<MergeEdgeId> = self
            .merging_touching(a)
            .into_iter()
            .filter(|id| self.merging[id].spans(a, b))
            .collect();
        Ok(broken.into_iter().filter_map(|id| self.drop_merging_edge(id)).collect())
    }

    fn merging_touching(&self, v: VertexId) -> BTreeSet<MergeEdgeId> {
        let mut ids: BTreeSet<MergeEdgeId> = BTreeSet::new();
        ids.extend(self.e_brdg.get(&v).into_iter().flatten());
        ids.extend(self.e_ends.get(&v).into_iter().flatten());
        ids
    }

    /// Removes an isolated vertex. Merging edges that reference it go too.
    pub fn remove_vertex(&mut self, v: VertexId) -> Result<(CgVertex, Vec<MergingEdge>), GraphError> {
        if !self.contains(v) {
            return Err(GraphError::UnknownVertex(v));
        }
        let ns: Vec<VertexId> = self.neighbors(v).collect();
        let mut dropped = Vec::new();
        for n in ns {
            dropped.extend(self.remove_edge(v, n)?);
        }
        for id in self.merging_touching(v) {
            dropped.extend(self.drop_merging_edge(id));
        }
        let vx = self.vertices.remove(&v).unwrap();
        self.adj.remove(&v);
        self.e_brdg.remove(&v);
        self.e_ends.remove(&v);
        self.detach_member(vx.token, v);
        if let Some(seg) = vx.segment {
            self.by_segment.remove(&seg.id);
        }
        Ok((vx, dropped))
    }

    fn detach_member(&mut self, t: TokenId, v: VertexId) {
        if let Some(set) = self.members.get_mut(&t) {
            set.remove(&v);
            if set.is_empty() {
                self.members.remove(&t);
            }
        }
    }

    pub fn set_token(&mut self, v: VertexId, t: TokenId) -> Result<(), GraphError> {
        let old = self.token(v)?;
        if old == t {
            return Ok(());
        }
        self.detach_member(old, v);
        self.members.entry(t).or_default().insert(v);
        self.vertices.get_mut(&v).unwrap().token = t;
        Ok(())
    }

    /// Moves every member of `from` (and its merging edges) onto `to`.
    pub fn retag(&mut self, from: TokenId, to: TokenId) {
        let moved: Vec<VertexId> = self.members(from).collect();
        for v in moved {
            self.set_token(v, to).expect("member vertex exists");
        }
        for e in self.merging.values_mut() {
            if e.token == from {
                e.token = to;
            }
        }
    }

    /// Moves the listed members of `from` onto `to`, together with the
    /// merging edges of `from` lying entirely inside `vs`.
    pub fn move_members(&mut self, from: TokenId, to: TokenId, vs: &BTreeSet<VertexId>) {
        for &v in vs {
            if self.vertices.get(&v).is_some_and(|x| x.token == from) {
                self.set_token(v, to).expect("member vertex exists");
            }
        }
        for e in self.merging.values_mut() {
            if e.token == from && vs.contains(&e.ends.0) && vs.contains(&e.ends.1) {
                e.token = to;
            }
        }
    }

    pub fn install_merging_edge(
        &mut self,
        ends: (VertexId, VertexId),
        bridges: (VertexId, VertexId),
        token: TokenId,
    ) -> MergeEdgeId {
        let id = MergeEdgeId(self.next_merge);
        self.next_merge += 1;
        self.merging.insert(id, MergingEdge { id, ends, bridges, token });
        self.e_ends.entry(ends.0).or_default().insert(id);
        self.e_ends.entry(ends.1).or_default().insert(id);
        self.e_brdg.entry(bridges.0).or_default().insert(id);
        self.e_brdg.entry(bridges.1).or_default().insert(id);
        id
    }

    fn drop_merging_edge(&mut self, id: MergeEdgeId) -> Option<MergingEdge> {
        let e = self.merging.remove(&id)?;
        for v in [e.ends.0, e.ends.1] {
            if let Some(s) = self.e_ends.get_mut(&v) {
                s.remove(&id);
            }
        }
        for v in [e.bridges.0, e.bridges.1] {
            if let Some(s) = self.e_brdg.get_mut(&v) {
                s.remove(&id);
            }
        }
        Some(e)
    }

    pub fn merging_edges(&self) -> impl Iterator<Item = &MergingEdge> {
        self.merging.values()
    }

    /// E_BRDG(v): merging edges bridged by `v`.
    pub fn bridged_by(&self, v: VertexId) -> impl Iterator<Item = &MergingEdge> {
        self.e_brdg.get(&v).into_iter().flatten().map(|id| &self.merging[id])
    }

    /// Drops all merging edges tagged with `t`.
    pub fn clear_merging_edges_of(&mut self, t: TokenId) {
        let ids: Vec<MergeEdgeId> = self.merging.values().filter(|e| e.token == t).map(|e| e.id).collect();
        for id in ids {
            self.drop_merging_edge(id);
        }
    }

    /// Components of V_t(t) under the merging edges of `t`, in ascending
    /// order of their smallest vertex.
    pub fn merging_components(&self, t: TokenId) -> Vec<BTreeSet<VertexId>> {
        let members: BTreeSet<VertexId> = self.members(t).collect();
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        let mut out = Vec::new();
        for &root in &members {
            if !seen.insert(root) {
                continue;
            }
            let mut comp = BTreeSet::from([root]);
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for id in self.e_ends.get(&v).into_iter().flatten() {
                    let e = &self.merging[id];
                    if e.token != t {
                        continue;
                    }
                    let other = if e.ends.0 == v { e.ends.1 } else { e.ends.0 };
                    if members.contains(&other) && seen.insert(other) {
                        comp.insert(other);
                        queue.push_back(other);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Geometric pieces of `v` cut at `cuts`; each piece gets a fresh segment id.
    pub fn cut_pieces(&mut self, v: VertexId, cuts: &[Coord]) -> Result<Vec<WireSegment>, GraphError> {
        let seg = *self.segment(v).ok_or(GraphError::NoGeometry(v))?;
        let (lo, hi) = (seg.lo(), seg.hi());
        let increasing = cuts.windows(2).all(|w| w[0] < w[1]);
        if cuts.is_empty() || !increasing || cuts[0] <= lo || cuts[cuts.len() - 1] >= hi {
            return Err(GraphError::BadCuts { cuts: cuts.to_vec(), lo, hi });
        }
        let mut bounds = vec![lo];
        bounds.extend_from_slice(cuts);
        bounds.push(hi);
        Ok(bounds.windows(2).map(|w| seg.piece(self.fresh_segment_id(), w[0], w[1])).collect())
    }

    /// Replaces `v` by pieces cut at `cuts`. Each piece takes a token from
    /// `fresh_token` and is connected to the former neighbours it is still
    /// within mask spacing of. Returns the pieces and the stitches created.
    pub fn split_vertex(
        &mut self,
        v: VertexId,
        cuts: &[Coord],
        rules: &SpacingRules,
        mut fresh_token: impl FnMut() -> TokenId,
    ) -> Result<(Vec<VertexId>, Vec<Stitch>), GraphError> {
        let seg = *self.segment(v).ok_or(GraphError::NoGeometry(v))?;
        let pieces = self.cut_pieces(v, cuts)?;
        let former: Vec<VertexId> = self.neighbors(v).collect();
        self.remove_vertex(v)?;
        let mut ids = Vec::with_capacity(pieces.len());
        for piece in pieces {
            let id = self.add_vertex(piece, fresh_token())?;
            for &n in &former {
                let near = self.segment(n).is_none_or(|other| within_mask_spacing(&piece, other, rules));
                if near {
                    self.add_edge(id, n)?;
                }
            }
            ids.push(id);
        }
        let stitches =
            cuts.iter().map(|&c| Stitch { net: seg.net, layer: seg.layer, at: seg.point_at(c) }).collect();
        Ok((ids, stitches))
    }

    /// Structural self-check used by tests and debug builds.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for (t, set) in &self.members {
            if set.is_empty() {
                return Err(format!("token {t} has an empty member set"));
            }
            for v in set {
                if !seen.insert(*v) {
                    return Err(format!("vertex {v} appears under two tokens"));
                }
                if self.vertices.get(v).map(|x| x.token) != Some(*t) {
                    return Err(format!("vertex {v} listed under {t} but holds another token"));
                }
            }
        }
        if seen.len() != self.vertices.len() {
            return Err("token member sets do not cover every vertex".into());
        }
        for (a, ns) in &self.adj {
            for b in ns {
                if a == b || !self.adj.get(b).is_some_and(|s| s.contains(a)) {
                    return Err(format!("asymmetric or self edge {a}-{b}"));
                }
            }
        }
        for e in self.merging.values() {
            let (x, y) = e.ends;
            if self.vertices.get(&x).map(|v| v.token) != Some(e.token)
                || self.vertices.get(&y).map(|v| v.token) != Some(e.token)
            {
                return Err(format!("merging edge {x}-{y} ends no longer share token {}", e.token));
            }
            for v in [e.bridges.0, e.bridges.1] {
                if !self.e_brdg.get(&v).is_some_and(|s| s.contains(&e.id)) {
                    return Err(format!("bridge {v} does not list merging edge {x}-{y}"));
                }
            }
        }
        Ok(())
    }
}
