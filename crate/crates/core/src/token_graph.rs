//! Token graph: tokens, token adjacency, SCCs and implicit edges.
//!
//! Merges are driven through [`MergeObserver`] so the owner of the conflict
//! graph can generate merging edges and retag members.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::conflict_graph::{ConflictGraph, VertexId};
use crate::error::GraphError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TokenId(pub u32);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SccId(pub u32);

/// Three pairwise adjacent tokens that must take three distinct colors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Scc {
    pub id: SccId,
    /// Sorted ascending.
    pub tokens: [TokenId; 3],
}

impl Scc {
    pub fn contains(&self, t: TokenId) -> bool {
        self.tokens.contains(&t)
    }

    /// The two members other than `t`, ascending.
    pub fn others(&self, t: TokenId) -> (TokenId, TokenId) {
        let o: Vec<TokenId> = self.tokens.iter().copied().filter(|x| *x != t).collect();
        (o[0], o[1])
    }
}

/// Something the token graph could not resolve without a coloring conflict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TgConflict {
    /// A rule asked to merge two tokens that are already adjacent.
    AdjacentMerge(TokenId, TokenId),
    /// An implicit edge was derived between a token and itself.
    ImplicitSelf(TokenId),
}

/// Hooks run around every token merge.
pub trait MergeObserver {
    /// `scc` is `(Tx, Ty, Tz)`, the clique that justifies merging `tw` into `tx`.
    fn before_merge(&mut self, _tw: TokenId, _tx: TokenId, _scc: [TokenId; 3]) {}
    fn after_merge(&mut self, _tw: TokenId, _tx: TokenId, _merged: TokenId) {}
}

impl MergeObserver for () {}

/// Records every merge performed, in order. Handy for tests.
#[derive(Clone, Debug, Default)]
pub struct MergeLog(pub Vec<(TokenId, TokenId, TokenId)>);

impl MergeObserver for MergeLog {
    fn after_merge(&mut self, tw: TokenId, tx: TokenId, merged: TokenId) {
        self.0.push((tw, tx, merged));
    }
}

fn key(a: TokenId, b: TokenId) -> (TokenId, TokenId) {
    if a < b { (a, b) } else { (b, a) }
}

fn sorted3(a: TokenId, b: TokenId, c: TokenId) -> [TokenId; 3] {
    let mut t = [a, b, c];
    t.sort();
    t
}

#[derive(Clone, Debug, Default)]
pub struct TokenGraph {
    adj: BTreeMap<TokenId, BTreeSet<TokenId>>,
    /// Number of conflict edges behind each explicit token edge.
    support: BTreeMap<(TokenId, TokenId), u32>,
    implicit: BTreeSet<(TokenId, TokenId)>,
    sccs: BTreeMap<SccId, Scc>,
    scc_index: BTreeMap<[TokenId; 3], SccId>,
    scc_by_token: BTreeMap<TokenId, BTreeSet<SccId>>,
    next_token: u32,
    next_scc: u32,
    forward: BTreeMap<TokenId, TokenId>,
    dirty: BTreeSet<TokenId>,
    conflicts: Vec<TgConflict>,
}

impl TokenGraph {
    pub fn new() -> Self {
        TokenGraph { next_token: 1, ..Default::default() }
    }

    pub fn fresh_token(&mut self) -> TokenId {
        let t = TokenId(self.next_token);
        self.next_token += 1;
        self.adj.insert(t, BTreeSet::new());
        self.dirty.insert(t);
        t
    }

    pub fn contains(&self, t: TokenId) -> bool {
        self.adj.contains_key(&t)
    }

    pub fn tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.adj.keys().copied()
    }

    pub fn token_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(|s| s.len()).sum::<usize>() / 2
    }

    /// Token edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (TokenId, TokenId)> + '_ {
        self.adj.iter().flat_map(|(&a, s)| s.range(a..).map(move |&b| (a, b)))
    }

    pub fn adjacent(&self, a: TokenId, b: TokenId) -> bool {
        self.adj.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn neighbors(&self, t: TokenId) -> impl Iterator<Item = TokenId> + '_ {
        self.adj.get(&t).into_iter().flatten().copied()
    }

    pub fn degree(&self, t: TokenId) -> usize {
        self.adj.get(&t).map_or(0, |s| s.len())
    }

    pub fn support(&self, a: TokenId, b: TokenId) -> u32 {
        self.support.get(&key(a, b)).copied().unwrap_or(0)
    }

    pub fn is_implicit(&self, a: TokenId, b: TokenId) -> bool {
        self.implicit.contains(&key(a, b))
    }

    pub fn implicit_edges(&self) -> impl Iterator<Item = (TokenId, TokenId)> + '_ {
        self.implicit.iter().copied()
    }

    pub fn sccs(&self) -> impl Iterator<Item = &Scc> {
        self.sccs.values()
    }

    pub fn scc_count(&self) -> usize {
        self.sccs.len()
    }

    pub fn sccs_of(&self, t: TokenId) -> impl Iterator<Item = &Scc> {
        self.scc_by_token.get(&t).into_iter().flatten().map(|id| &self.sccs[id])
    }

    pub fn find_scc(&self, a: TokenId, b: TokenId, c: TokenId) -> Option<&Scc> {
        self.scc_index.get(&sorted3(a, b, c)).map(|id| &self.sccs[id])
    }

    /// Follows merge forwarding from the current operation.
    pub fn resolve(&self, mut t: TokenId) -> TokenId {
        while let Some(&n) = self.forward.get(&t) {
            t = n;
        }
        t
    }

    /// Starts a new top level operation: clears forwarding, dirty set and
    /// pending conflicts.
    pub fn begin(&mut self) {
        self.forward.clear();
        self.dirty.clear();
        self.conflicts.clear();
    }

    pub fn take_conflicts(&mut self) -> Vec<TgConflict> {
        std::mem::take(&mut self.conflicts)
    }

    pub fn take_dirty(&mut self) -> BTreeSet<TokenId> {
        std::mem::take(&mut self.dirty)
    }

    pub fn dirty(&self) -> &BTreeSet<TokenId> {
        &self.dirty
    }

    fn link(&mut self, a: TokenId, b: TokenId) -> bool {
        let new = self.adj.get_mut(&a).unwrap().insert(b);
        self.adj.get_mut(&b).unwrap().insert(a);
        new
    }

    fn unlink(&mut self, a: TokenId, b: TokenId) {
        if let Some(s) = self.adj.get_mut(&a) {
            s.remove(&b);
        }
        if let Some(s) = self.adj.get_mut(&b) {
            s.remove(&a);
        }
        self.implicit.remove(&key(a, b));
        self.support.remove(&key(a, b));
        let doomed: Vec<SccId> = self.sccs_of(a).filter(|s| s.contains(b)).map(|s| s.id).collect();
        for id in doomed {
            self.drop_scc(id);
        }
    }

    fn check_tokens(&self, a: TokenId, b: TokenId) -> Result<(), GraphError> {
        for t in [a, b] {
            if !self.contains(t) {
                return Err(GraphError::UnknownToken(t));
            }
        }
        Ok(())
    }

    /// Adds one unit of support to the edge `a`-`b`. Returns true when the
    /// tokens were not adjacent before.
    pub fn add_support(&mut self, a: TokenId, b: TokenId) -> Result<bool, GraphError> {
        self.check_tokens(a, b)?;
        assert_ne!(a, b, "token self edge");
        *self.support.entry(key(a, b)).or_insert(0) += 1;
        let new = self.link(a, b);
        if new {
            self.dirty.extend([a, b]);
        }
        Ok(new)
    }

    /// Removes one unit of support. Returns true when the edge disappeared,
    /// in which case every SCC relying on it is dropped too.
    pub fn remove_support(&mut self, a: TokenId, b: TokenId) -> Result<bool, GraphError> {
        self.check_tokens(a, b)?;
        let k = key(a, b);
        let n = self.support.get_mut(&k).ok_or(GraphError::NotAdjacent(a, b))?;
        *n -= 1;
        if *n > 0 {
            return Ok(false);
        }
        self.support.remove(&k);
        if self.implicit.contains(&k) {
            return Ok(false);
        }
        self.unlink(a, b);
        Ok(true)
    }

    /// Marks `a`-`b` as an implicit edge. Returns true when it is a new edge.
    pub fn add_implicit(&mut self, a: TokenId, b: TokenId) -> Result<bool, GraphError> {
        self.check_tokens(a, b)?;
        assert_ne!(a, b, "token self edge");
        self.implicit.insert(key(a, b));
        let new = self.link(a, b);
        if new {
            self.dirty.extend([a, b]);
        }
        Ok(new)
    }

    /// Drops implicit flags touching `t`, along with edges that had no
    /// explicit support.
    pub fn clear_implicit_of(&mut self, t: TokenId) {
        let pairs: Vec<_> = self.implicit.iter().copied().filter(|&(a, b)| a == t || b == t).collect();
        for (a, b) in pairs {
            self.implicit.remove(&(a, b));
            if !self.support.contains_key(&(a, b)) {
                self.unlink(a, b);
            }
        }
    }

    /// Detaches `t` from everything and deletes it.
    pub fn remove_token(&mut self, t: TokenId) -> Result<(), GraphError> {
        let ns: Vec<TokenId> = self.neighbors(t).collect();
        if !self.contains(t) {
            return Err(GraphError::UnknownToken(t));
        }
        for n in ns {
            self.unlink(t, n);
        }
        self.drop_sccs_of(t);
        self.adj.remove(&t);
        self.dirty.remove(&t);
        Ok(())
    }

    pub fn drop_sccs_of(&mut self, t: TokenId) {
        let ids: Vec<SccId> = self.sccs_of(t).map(|s| s.id).collect();
        for id in ids {
            self.drop_scc(id);
        }
    }

    fn drop_scc(&mut self, id: SccId) {
        if let Some(s) = self.sccs.remove(&id) {
            self.scc_index.remove(&s.tokens);
            for t in s.tokens {
                if let Some(set) = self.scc_by_token.get_mut(&t) {
                    set.remove(&id);
                    if set.is_empty() {
                        self.scc_by_token.remove(&t);
                    }
                }
            }
        }
    }

    /// Registers an SCC unless one with the same tokens exists.
    pub fn add_scc(&mut self, a: TokenId, b: TokenId, c: TokenId) -> SccId {
        let tokens = sorted3(a, b, c);
        if let Some(&id) = self.scc_index.get(&tokens) {
            return id;
        }
        let id = SccId(self.next_scc);
        self.next_scc += 1;
        self.sccs.insert(id, Scc { id, tokens });
        self.scc_index.insert(tokens, id);
        for t in tokens {
            self.scc_by_token.entry(t).or_default().insert(id);
        }
        self.dirty.extend(tokens);
        id
    }

    /// Runs the update cascade for the edge `ti`-`tj`.
    pub fn tg_update<O: MergeObserver + ?Sized>(
        &mut self,
        ti: TokenId,
        tj: TokenId,
        obs: &mut O,
    ) -> Result<(), GraphError> {
        self.check_tokens(ti, tj)?;
        if !self.adjacent(ti, tj) {
            return Err(GraphError::NotAdjacent(ti, tj));
        }
        let mut stack = vec![(ti, tj)];
        let mut steps = 0usize;
        while let Some((a, b)) = stack.pop() {
            let (a, b) = (self.resolve(a), self.resolve(b));
            if a == b || !self.adjacent(a, b) {
                continue;
            }
            steps += 1;
            debug_assert!(steps < 1 << 24, "tg_update does not terminate");
            self.update_step(a, b, obs, &mut stack);
        }
        Ok(())
    }

    fn update_step<O: MergeObserver + ?Sized>(
        &mut self,
        ti: TokenId,
        tj: TokenId,
        obs: &mut O,
        stack: &mut Vec<(TokenId, TokenId)>,
    ) {
        if let Some((w, x, scc)) = self.outer_rule(ti, tj).or_else(|| self.outer_rule(tj, ti)) {
            self.merge(w, x, scc, obs, stack);
            return;
        }
        let shared = self.scc_by_token.get(&ti).and_then(|ids| {
            ids.iter().map(|id| &self.sccs[id]).find(|s| s.contains(tj)).map(|s| s.tokens)
        });
        if let Some(tokens) = shared {
            let tk = tokens.into_iter().find(|t| *t != ti && *t != tj).unwrap();
            if let Some(tcom) = self.common_neighbors(ti, tj).into_iter().find(|t| *t != tk) {
                self.merge(tcom, tk, [tk, ti, tj], obs, stack);
            }
            return;
        }
        if let Some(&tcom) = self.common_neighbors(ti, tj).first() {
            self.add_scc(ti, tj, tcom);
            stack.push((ti, tj));
        }
    }

    /// An SCC of `ti` not holding `tj` in which `tj` touches exactly one
    /// other member. Yields `(tj, untouched member, (untouched, ti, touched))`.
    fn outer_rule(&self, ti: TokenId, tj: TokenId) -> Option<(TokenId, TokenId, [TokenId; 3])> {
        for s in self.sccs_of(ti) {
            if s.contains(tj) {
                continue;
            }
            let (p, q) = s.others(ti);
            let (jp, jq) = (self.adjacent(tj, p), self.adjacent(tj, q));
            if jp && !jq {
                return Some((tj, q, [q, ti, p]));
            }
            if jq && !jp {
                return Some((tj, p, [p, ti, q]));
            }
        }
        None
    }

    fn common_neighbors(&self, a: TokenId, b: TokenId) -> Vec<TokenId> {
        match (self.adj.get(&a), self.adj.get(&b)) {
            (Some(x), Some(y)) => x.intersection(y).copied().collect(),
            _ => Vec::new(),
        }
    }

    /// Folds `tw` and `tx` into a fresh token and queues the follow-up
    /// updates. Adjacent tokens are never merged; that is reported instead.
    fn merge<O: MergeObserver + ?Sized>(
        &mut self,
        tw: TokenId,
        tx: TokenId,
        scc: [TokenId; 3],
        obs: &mut O,
        stack: &mut Vec<(TokenId, TokenId)>,
    ) {
        if tw == tx {
            return;
        }
        if self.adjacent(tw, tx) {
            log::debug!("refusing to merge adjacent tokens {tw} and {tx}");
            self.conflicts.push(TgConflict::AdjacentMerge(tw, tx));
            return;
        }
        obs.before_merge(tw, tx, scc);
        let aw = self.adj[&tw].clone();
        let ax = self.adj[&tx].clone();
        let m = TokenId(self.next_token);
        self.next_token += 1;
        self.adj.insert(m, BTreeSet::new());
        for (old, nbrs) in [(tw, &aw), (tx, &ax)] {
            for &n in nbrs {
                let k = key(old, n);
                let nk = key(m, n);
                if let Some(c) = self.support.remove(&k) {
                    *self.support.entry(nk).or_insert(0) += c;
                }
                if self.implicit.remove(&k) {
                    self.implicit.insert(nk);
                }
                let s = self.adj.get_mut(&n).unwrap();
                s.remove(&old);
                s.insert(m);
                self.adj.get_mut(&m).unwrap().insert(n);
            }
            self.adj.remove(&old);
            let ids: Vec<SccId> = self.scc_by_token.remove(&old).into_iter().flatten().collect();
            for id in ids {
                let s = self.sccs.remove(&id).unwrap();
                self.scc_index.remove(&s.tokens);
                for t in s.tokens {
                    if t != old {
                        if let Some(set) = self.scc_by_token.get_mut(&t) {
                            set.remove(&id);
                        }
                    }
                }
                let renamed = s.tokens.map(|t| if t == old { m } else { t });
                let renamed = sorted3(renamed[0], renamed[1], renamed[2]);
                if self.scc_index.contains_key(&renamed) {
                    continue;
                }
                self.sccs.insert(id, Scc { id, tokens: renamed });
                self.scc_index.insert(renamed, id);
                for t in renamed {
                    self.scc_by_token.entry(t).or_default().insert(id);
                }
            }
            self.scc_by_token.retain(|_, s| !s.is_empty());
            self.forward.insert(old, m);
            self.dirty.remove(&old);
        }
        self.dirty.insert(m);
        log::trace!("merged {tw} and {tx} into {m}");
        obs.after_merge(tw, tx, m);
        let both: BTreeSet<TokenId> = aw.intersection(&ax).copied().collect();
        let follow: Vec<TokenId> = self.adj[&m].iter().copied().filter(|t| !both.contains(t)).collect();
        for &t in follow.iter().rev() {
            stack.push((m, t));
        }
    }

    /// Implicit edges derivable from any pair of SCCs.
    pub fn detect_implicit_edges(&self) -> BTreeSet<(TokenId, TokenId)> {
        let all: Vec<SccId> = self.sccs.keys().copied().collect();
        self.implicit_from(&all)
    }

    /// Implicit edges derivable from SCCs touching `near` or its neighbours.
    pub fn detect_implicit_edges_near(&self, near: &BTreeSet<TokenId>) -> BTreeSet<(TokenId, TokenId)> {
        let mut zone: BTreeSet<TokenId> = BTreeSet::new();
        for &t in near {
            if self.contains(t) {
                zone.insert(t);
                zone.extend(self.neighbors(t));
            }
        }
        let ids: BTreeSet<SccId> =
            zone.iter().flat_map(|t| self.scc_by_token.get(t).into_iter().flatten().copied()).collect();
        self.implicit_from(&ids.into_iter().collect::<Vec<_>>())
    }

    /// Pairs `(Ti, Tj)`, `Ti < Tj`, where two SCCs `(x, y, z)` and `(p, q, r)`
    /// have `x`-`p` adjacent, `Ti` adjacent to `y` and `q`, and `Tj` adjacent
    /// to `z` and `r`. A pair with `Ti == Tj` is returned as `(t, t)`.
    fn implicit_from(&self, ids: &[SccId]) -> BTreeSet<(TokenId, TokenId)> {
        let mut out = BTreeSet::new();
        for id in ids {
            let s1 = self.sccs[id];
            for x in s1.tokens {
                let (y, z) = s1.others(x);
                for p in self.neighbors(x) {
                    if s1.contains(p) {
                        continue;
                    }
                    for s2 in self.sccs_of(p) {
                        if s2.tokens.iter().any(|t| s1.contains(*t)) {
                            continue;
                        }
                        let (q, r) = s2.others(p);
                        for (a, b, c, d) in [(y, q, z, r), (y, r, z, q)] {
                            let left = self.common_neighbors(a, b);
                            if left.is_empty() {
                                continue;
                            }
                            let right = self.common_neighbors(c, d);
                            for &ti in &left {
                                for &tj in &right {
                                    if ti == tj {
                                        out.insert((ti, ti));
                                    } else if !self.adjacent(ti, tj) {
                                        out.insert(key(ti, tj));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Inserts implicit edges near the dirty tokens until none is left,
    /// running the update cascade on each.
    pub fn implicit_fixpoint<O: MergeObserver + ?Sized>(&mut self, obs: &mut O) {
        let mut seen_self: BTreeSet<TokenId> = BTreeSet::new();
        loop {
            let near = self.take_dirty();
            if near.is_empty() {
                return;
            }
            let found = self.detect_implicit_edges_near(&near);
            for (a, b) in found {
                let (a, b) = (self.resolve(a), self.resolve(b));
                if !self.contains(a) || !self.contains(b) {
                    continue;
                }
                if a == b {
                    if seen_self.insert(a) {
                        self.conflicts.push(TgConflict::ImplicitSelf(a));
                    }
                    continue;
                }
                if self.adjacent(a, b) {
                    continue;
                }
                log::trace!("implicit edge {a} - {b}");
                self.add_implicit(a, b).expect("tokens exist");
                self.tg_update(a, b, obs).expect("edge just added");
            }
            let live: BTreeSet<TokenId> = self.dirty.iter().copied().filter(|t| self.contains(*t)).collect();
            self.dirty = live;
        }
    }

    /// Connected components of the token graph, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<BTreeSet<TokenId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &root in self.adj.keys() {
            if !seen.insert(root) {
                continue;
            }
            let mut comp = BTreeSet::from([root]);
            let mut queue = VecDeque::from([root]);
            while let Some(t) = queue.pop_front() {
                for n in self.neighbors(t) {
                    if seen.insert(n) {
                        comp.insert(n);
                        queue.push_back(n);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// The component holding `t`.
    pub fn component_of(&self, t: TokenId) -> BTreeSet<TokenId> {
        let mut comp = BTreeSet::new();
        if !self.contains(t) {
            return comp;
        }
        comp.insert(t);
        let mut queue = VecDeque::from([t]);
        while let Some(u) = queue.pop_front() {
            for n in self.neighbors(u) {
                if comp.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        comp
    }

    /// Graphviz description; implicit edges are dashed.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph tg {\n");
        for t in self.tokens() {
            let _ = writeln!(s, "  {t};");
        }
        for (a, b) in self.edges() {
            let style = if self.is_implicit(a, b) { " [style=dashed]" } else { "" };
            let _ = writeln!(s, "  {a} -- {b}{style};");
        }
        for scc in self.sccs() {
            let [a, b, c] = scc.tokens;
            let _ = writeln!(s, "  // scc {} ({a}, {b}, {c})", scc.id.0);
        }
        s.push_str("}\n");
        s
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for (&a, ns) in &self.adj {
            if ns.contains(&a) {
                return Err(format!("{a} is adjacent to itself"));
            }
            for &b in ns {
                if !self.adj.get(&b).is_some_and(|s| s.contains(&a)) {
                    return Err(format!("adjacency {a} - {b} is not symmetric"));
                }
                let k = key(a, b);
                if !self.support.contains_key(&k) && !self.implicit.contains(&k) {
                    return Err(format!("edge {a} - {b} has neither support nor implicit flag"));
                }
            }
        }
        for &(a, b) in self.support.keys().chain(self.implicit.iter()) {
            if !self.adjacent(a, b) {
                return Err(format!("flagged pair {a} - {b} is not an edge"));
            }
        }
        for s in self.sccs.values() {
            let [a, b, c] = s.tokens;
            if !(self.adjacent(a, b) && self.adjacent(b, c) && self.adjacent(a, c)) {
                return Err(format!("scc ({a}, {b}, {c}) is not a clique"));
            }
            if self.scc_index.get(&s.tokens) != Some(&s.id) {
                return Err(format!("scc ({a}, {b}, {c}) is not indexed"));
            }
            for t in s.tokens {
                if !self.scc_by_token.get(&t).is_some_and(|x| x.contains(&s.id)) {
                    return Err(format!("scc ({a}, {b}, {c}) missing from index of {t}"));
                }
            }
        }
        if self.scc_index.len() != self.sccs.len() {
            return Err("scc index size mismatch".into());
        }
        Ok(())
    }
}

/// Gives each component of `victim` under its surviving merging edges a
/// fresh token and rebuilds their adjacency from conflict edges. A single
/// component keeps the token.
pub fn token_splitting(tg: &mut TokenGraph, cg: &mut ConflictGraph, victim: TokenId) -> Result<Vec<TokenId>, GraphError> {
    if !tg.contains(victim) {
        return Err(GraphError::UnknownToken(victim));
    }
    let comps = cg.merging_components(victim);
    if comps.len() <= 1 {
        return Ok(vec![victim]);
    }
    let members: BTreeSet<VertexId> = comps.iter().flatten().copied().collect();
    tg.remove_token(victim)?;
    let mut fresh = Vec::new();
    for comp in &comps {
        let t = tg.fresh_token();
        cg.move_members(victim, t, comp);
        fresh.push(t);
    }
    cg.clear_merging_edges_of(victim);
    for &v in &members {
        let tv = cg.token(v)?;
        let ns: Vec<VertexId> = cg.neighbors(v).collect();
        for n in ns {
            if members.contains(&n) && n < v {
                continue;
            }
            let tn = cg.token(n)?;
            if tn != tv {
                tg.add_support(tv, tn)?;
            }
        }
    }
    log::debug!("split {victim} into {fresh:?}");
    Ok(fresh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: u32, edges: &[(u32, u32)]) -> TokenGraph {
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
    fn triangle_creates_one_scc() {
        let mut g = graph(3, &[(1, 2), (2, 3), (1, 3)]);
        g.tg_update(TokenId(1), TokenId(2), &mut ()).unwrap();
        assert_eq!(g.scc_count(), 1);
        assert!(g.find_scc(TokenId(1), TokenId(2), TokenId(3)).is_some());
        assert_eq!(g.token_count(), 3);
        g.check_invariants().unwrap();
    }

    #[test]
    fn no_common_neighbour_is_a_no_op() {
        let mut g = graph(2, &[(1, 2)]);
        g.tg_update(TokenId(1), TokenId(2), &mut ()).unwrap();
        assert_eq!((g.token_count(), g.edge_count(), g.scc_count()), (2, 1, 0));
    }

    #[test]
    fn update_on_non_adjacent_tokens_fails() {
        let mut g = graph(2, &[]);
        assert_eq!(g.tg_update(TokenId(1), TokenId(2), &mut ()), Err(GraphError::NotAdjacent(TokenId(1), TokenId(2))));
    }

    #[test]
    fn outer_token_merges_with_far_corner() {
        // scc (1,2,3); token 4 touches 1 and 2, so it must match 3.
        let mut g = graph(4, &[(1, 2), (2, 3), (1, 3)]);
        g.tg_update(TokenId(1), TokenId(2), &mut ()).unwrap();
        g.add_support(TokenId(4), TokenId(1)).unwrap();
        g.tg_update(TokenId(4), TokenId(1), &mut ()).unwrap();
        g.add_support(TokenId(4), TokenId(2)).unwrap();
        let mut log = MergeLog::default();
        g.tg_update(TokenId(4), TokenId(2), &mut log).unwrap();
        assert_eq!(log.0.len(), 1);
        let (w, x, m) = log.0[0];
        assert_eq!(BTreeSet::from([w, x]), BTreeSet::from([TokenId(3), TokenId(4)]));
        assert_eq!(m, TokenId(5));
        assert_eq!((g.token_count(), g.edge_count(), g.scc_count()), (3, 3, 1));
        g.check_invariants().unwrap();
    }

    #[test]
    fn merge_counts() {
        // Merging drops one token and |adj(w)| + |adj(x)| - |adj(m)| edges.
        let mut g = graph(4, &[(1, 2), (2, 3), (1, 3)]);
        g.tg_update(TokenId(1), TokenId(2), &mut ()).unwrap();
        g.add_support(TokenId(4), TokenId(1)).unwrap();
        g.add_support(TokenId(4), TokenId(2)).unwrap();
        let (v0, e0) = (g.token_count(), g.edge_count());
        g.tg_update(TokenId(4), TokenId(2), &mut ()).unwrap();
        assert_eq!(g.token_count(), v0 - 1);
        assert_eq!(g.edge_count(), e0 - (2 + 2 - 2));
    }

    #[test]
    fn adjacent_merge_is_reported() {
        // K4 on tokens: the last update asks to merge adjacent tokens.
        let mut g = graph(4, &[(1, 2), (2, 3), (1, 3)]);
        g.tg_update(TokenId(1), TokenId(2), &mut ()).unwrap();
        for (a, b) in [(4, 1), (4, 2), (4, 3)] {
            g.add_support(TokenId(a), TokenId(b)).unwrap();
        }
        g.tg_update(TokenId(4), TokenId(3), &mut ()).unwrap();
        let c = g.take_conflicts();
        assert!(!c.is_empty());
        assert!(matches!(c[0], TgConflict::AdjacentMerge(..)));
        g.check_invariants().unwrap();
    }

    #[test]
    fn implicit_edge_from_two_sccs() {
        // sccs (3,4,5) and (6,7,8), 3-6 adjacent, 1 ~ {4,7}, 2 ~ {5,8}.
        let edges = [(3, 4), (4, 5), (3, 5), (6, 7), (7, 8), (6, 8), (3, 6), (1, 4), (1, 7), (2, 5), (2, 8)];
        let mut g = graph(8, &edges);
        g.add_scc(TokenId(3), TokenId(4), TokenId(5));
        g.add_scc(TokenId(6), TokenId(7), TokenId(8));
        assert_eq!(g.detect_implicit_edges(), BTreeSet::from([(TokenId(1), TokenId(2))]));
    }

    #[test]
    fn fewer_than_two_sccs_have_no_implicit_edges() {
        let mut g = graph(3, &[(1, 2), (2, 3), (1, 3)]);
        g.add_scc(TokenId(1), TokenId(2), TokenId(3));
        assert!(g.detect_implicit_edges().is_empty());
    }

    #[test]
    fn removing_support_drops_edge_and_scc() {
        let mut g = graph(3, &[(1, 2), (2, 3), (1, 3), (1, 2)]);
        g.tg_update(TokenId(1), TokenId(2), &mut ()).unwrap();
        assert!(!g.remove_support(TokenId(1), TokenId(2)).unwrap());
        assert_eq!(g.scc_count(), 1);
        assert!(g.remove_support(TokenId(1), TokenId(2)).unwrap());
        assert_eq!((g.edge_count(), g.scc_count()), (2, 0));
        g.check_invariants().unwrap();
    }

    #[test]
    fn dot_marks_implicit_edges() {
        let mut g = graph(2, &[]);
        g.add_implicit(TokenId(1), TokenId(2)).unwrap();
        assert!(g.to_dot().contains("T1 -- T2 [style=dashed];"));
    }
}
