//! Net ordering, rip-up and reroute, and the final report.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::decompose::{decompose_nets, TwoPinId, TwoPinNet};
use super::engine::{probe, CellRisk, Engine, GreedyState, Sizes, TriadEngine};
use super::grid::{path_runs, path_wires, via_count, GridPoint, RoutingGrid};
use super::search::{maze_search, maze_search_through, path_cost};
use super::{Mode, RouterConfig};
use crate::conflict_graph::Stitch;
use crate::tecg::Tecg;
use crate::format::{Layout, LayoutSegment, Netlist, NetlistStats, Pin};
use crate::geometry::{Coord, NetId, SegmentId, WireSegment};

#[derive(Clone, Debug)]
struct Routed {
    net: NetId,
    path: Vec<GridPoint>,
    segs: BTreeSet<SegmentId>,
    stitches: Vec<Stitch>,
    /// Commit order, for picking the newest blocker.
    stamp: u64,
}

/// Outcome of one routing attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RouteResult {
    Routed { path: Vec<GridPoint>, cost: i64, stitches: usize, conflicts: usize },
    /// Committing would have made conflicts; nothing was kept.
    Conflicted { blockers: BTreeSet<TwoPinId> },
    /// No free path; these connections are in the way.
    Blocked { victims: BTreeSet<TwoPinId> },
    Unroutable,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IterationStat {
    pub iteration: u32,
    pub conflicts_prohibited: bool,
    pub attempted: usize,
    pub routed: usize,
    pub ripped: usize,
    pub pending: usize,
    pub sizes: Sizes,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowReport {
    pub mode: Mode,
    pub allow_stitch: bool,
    pub netlist: NetlistStats,
    pub routed: usize,
    pub unroutable: usize,
    /// In track units.
    pub wirelength: Coord,
    pub vias: usize,
    pub stitches: usize,
    pub conflicts: usize,
    pub iterations: Vec<IterationStat>,
    pub final_sizes: Sizes,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

pub struct FlowOutput {
    pub report: FlowReport,
    pub layout: Layout,
}

pub struct Router {
    pub grid: RoutingGrid,
    pub cfg: RouterConfig,
    engine: Box<dyn Engine>,
    conns: BTreeMap<TwoPinId, TwoPinNet>,
    routed: BTreeMap<TwoPinId, Routed>,
    seg_owner: BTreeMap<SegmentId, TwoPinId>,
    history: BTreeMap<GridPoint, i64>,
    clock: u64,
}

fn gp(p: &Pin) -> GridPoint {
    GridPoint::new(p.x, p.y, p.layer)
}

impl Router {
    pub fn new(grid: RoutingGrid, cfg: RouterConfig) -> Self {
        let engine: Box<dyn Engine> = match cfg.mode {
            Mode::Triad => Box::new(TriadEngine::new(cfg.rules, cfg.penalties, cfg.allow_stitch)),
            Mode::Greedy => Box::new(GreedyState::new(cfg.rules, cfg.allow_stitch)),
        };
        Router::with_engine(grid, cfg, engine)
    }

    /// Router over an engine that may already hold fixed geometry.
    pub fn with_engine(grid: RoutingGrid, cfg: RouterConfig, engine: Box<dyn Engine>) -> Self {
        Router { grid, cfg, engine, conns: BTreeMap::new(), routed: BTreeMap::new(), seg_owner: BTreeMap::new(), history: BTreeMap::new(), clock: 0 }
    }

    pub fn add_connection(&mut self, c: TwoPinNet) {
        self.conns.insert(c.id, c);
    }

    pub fn engine(&self) -> &dyn Engine {
        self.engine.as_ref()
    }

    pub fn tecg(&self) -> Option<&Tecg> {
        self.engine.tecg()
    }

    pub fn is_routed(&self, id: TwoPinId) -> bool {
        self.routed.contains_key(&id)
    }

    pub fn routed_ids(&self) -> impl Iterator<Item = TwoPinId> + '_ {
        self.routed.keys().copied()
    }

    fn surcharge(&self, net: NetId, p: GridPoint) -> i64 {
        let w = &self.cfg.costs;
        self.history.get(&p).copied().unwrap_or(0)
            + match self.engine.cell_risk(&probe(net, p.layer, self.grid.point(p), self.grid.hw)) {
            CellRisk::Free => 0,
            CellRisk::Tight => w.tight_cost,
            CellRisk::Forced => w.conflict_penalty,
        }
    }

    /// Recomputes the cost of `path` for `net` against the current state.
    pub fn path_cost(&self, net: NetId, path: &[GridPoint]) -> Option<i64> {
        path_cost(&self.grid, path, &self.cfg.costs, |p| Some(self.surcharge(net, p)))
    }

    fn owners_at(&self, p: GridPoint) -> impl Iterator<Item = TwoPinId> + '_ {
        let net = self.grid.occupant(p);
        self.routed.iter().filter(move |(_, r)| Some(r.net) == net && r.path.contains(&p)).map(|(id, _)| *id)
    }

    /// Cheapest path for a connection under the current state, without
    /// committing it.
    pub fn plan_route(&self, id: TwoPinId) -> Option<(Vec<GridPoint>, i64)> {
        let c = &self.conns[&id];
        maze_search(&self.grid, c.net, gp(&c.source), gp(&c.target), &self.cfg.costs, |p| Some(self.surcharge(c.net, p)))
    }

    /// Routes one connection. Conflicts are refused when `prohibit` is set.
    pub fn route_two_pin(&mut self, id: TwoPinId, prohibit: bool) -> RouteResult {
        let c = self.conns[&id].clone();
        let Some((path, cost)) = self.plan_route(id) else {
            let (src, dst) = (gp(&c.source), gp(&c.target));
            let blocked = self.cfg.costs.blocked_cost;
            let through = maze_search_through(&self.grid, c.net, src, dst, &self.cfg.costs, |p| {
                Some(if self.grid.passable(p, c.net) { 0 } else { blocked })
            });
            let Some((path, _)) = through else { return RouteResult::Unroutable };
            let victims: BTreeSet<TwoPinId> = path.iter().flat_map(|&p| self.owners_at(p).collect::<Vec<_>>()).collect();
            return RouteResult::Blocked { victims };
        };
        let engine = &mut self.engine;
        let wires = path_wires(&self.grid, &path, c.net, || engine.fresh_segment_id());
        let done = self.engine.commit(wires);
        if prohibit && done.conflicts > 0 {
            self.engine.remove(&done.segs.iter().copied().collect());
            self.mark_hot(&path, &done.hot);
            let blockers = done.blockers.iter().filter_map(|s| self.seg_owner.get(s).copied()).collect();
            return RouteResult::Conflicted { blockers };
        }
        self.grid.occupy(&path, c.net);
        for &s in &done.segs {
            self.seg_owner.insert(s, id);
        }
        self.clock += 1;
        let stitches = done.stitches.len();
        self.routed.insert(
            id,
            Routed { net: c.net, path: path.clone(), segs: done.segs.into_iter().collect(), stitches: done.stitches, stamp: self.clock },
        );
        RouteResult::Routed { path, cost, stitches, conflicts: done.conflicts }
    }

    fn mark_hot(&mut self, path: &[GridPoint], hot: &[WireSegment]) {
        for &p in path {
            let at = self.grid.point(p);
            if hot.iter().any(|w| w.layer == p.layer && w.body().contains_point(at)) {
                *self.history.entry(p).or_insert(0) += self.cfg.costs.history_cost;
            }
        }
    }

    /// Removes a routed connection's wires.
    pub fn rip_up(&mut self, id: TwoPinId) -> bool {
        let Some(r) = self.routed.remove(&id) else { return false };
        self.grid.release(&r.path, r.net);
        self.engine.remove(&r.segs);
        for s in &r.segs {
            self.seg_owner.remove(s);
        }
        true
    }

    /// Among `cands`, the net of the most recently committed connection.
    fn newest_net(&self, cands: &BTreeSet<TwoPinId>) -> Option<NetId> {
        cands.iter().filter_map(|id| self.routed.get(id)).max_by_key(|r| r.stamp).map(|r| r.net)
    }

    fn routed_of_net(&self, net: NetId) -> Vec<TwoPinId> {
        self.routed.iter().filter(|(_, r)| r.net == net).map(|(id, _)| *id).collect()
    }

    pub fn wirelength(&self) -> Coord {
        self.routed
            .values()
            .flat_map(|r| path_runs(&r.path))
            .map(|(a, b)| (a.x - b.x).abs() + (a.y - b.y).abs())
            .sum()
    }

    pub fn vias(&self) -> usize {
        self.routed.values().map(|r| via_count(&r.path)).sum()
    }

    pub fn stitches(&self) -> Vec<Stitch> {
        self.routed.values().flat_map(|r| r.stitches.iter().copied()).collect()
    }

    /// Routes `order` with rip-up and reroute. Returns per-pass stats and
    /// what is still unrouted.
    pub fn run(&mut self, order: Vec<TwoPinId>) -> (Vec<IterationStat>, Vec<TwoPinId>) {
        let mut queue: VecDeque<TwoPinId> = order.into();
        let mut stats = Vec::new();
        for it in 0..self.cfg.max_iterations {
            let prohibit = it < self.cfg.conflict_prohibited_iterations;
            let last = it + 1 == self.cfg.max_iterations;
            let mut st = IterationStat { iteration: it, conflicts_prohibited: prohibit, ..Default::default() };
            let mut next: VecDeque<TwoPinId> = VecDeque::new();
            let mut front: Vec<TwoPinId> = Vec::new();
            while let Some(id) = queue.pop_front() {
                if self.is_routed(id) {
                    continue;
                }
                st.attempted += 1;
                let mut retried = false;
                loop {
                    let victims = match self.route_two_pin(id, prohibit) {
                        RouteResult::Routed { .. } => {
                            st.routed += 1;
                            break;
                        }
                        RouteResult::Unroutable => {
                            next.push_back(id);
                            break;
                        }
                        RouteResult::Conflicted { blockers } => blockers,
                        RouteResult::Blocked { victims } => victims,
                    };
                    let net = if retried || last { None } else { self.newest_net(&victims) };
                    let Some(net) = net else {
                        next.push_back(id);
                        break;
                    };
                    for v in self.routed_of_net(net) {
                        self.rip_up(v);
                        st.ripped += 1;
                        front.push(v);
                    }
                    retried = true;
                }
            }
            for v in front.into_iter().rev() {
                next.push_front(v);
            }
            st.pending = next.len();
            st.sizes = self.engine.sizes();
            log::debug!("iteration {it}: {st:?}");
            stats.push(st);
            queue = next;
            if queue.is_empty() {
                break;
            }
        }
        let mut left: Vec<TwoPinId> = queue.into_iter().filter(|id| !self.is_routed(*id)).collect();
        left.sort();
        left.dedup();
        (stats, left)
    }

    pub fn layout(&self, nl: &Netlist) -> Layout {
        let mut l = Layout::new(self.grid.layers(), self.cfg.rules);
        l.obstacles = self.grid.obstacle_rects(nl);
        let mut segs: Vec<LayoutSegment> =
            self.engine.colored().iter().map(|(w, c)| LayoutSegment::from_wire(w, *c)).collect();
        segs.sort_by_key(|s| s.id);
        l.segments = segs;
        l.stitches = self.stitches().into_iter().map(Into::into).collect();
        l
    }
}

/// Connection order: shortest half-perimeter first, ties in a seeded shuffle.
pub fn net_order(conns: &[TwoPinNet], seed: u64) -> Vec<TwoPinId> {
    let mut v: Vec<&TwoPinNet> = conns.iter().collect();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v.sort_by_key(|c| c.half_perimeter());
    v.into_iter().map(|c| c.id).collect()
}

pub fn run_flow(nl: &Netlist, cfg: &RouterConfig, record_runtime: bool) -> FlowOutput {
    let t0 = Instant::now();
    let conns = decompose_nets(nl);
    let mut router = Router::new(RoutingGrid::from_netlist(nl), cfg.clone());
    for c in &conns {
        router.add_connection(c.clone());
    }
    let (iterations, left) = router.run(net_order(&conns, cfg.rng_seed));
    let layout = router.layout(nl);
    let report = FlowReport {
        mode: cfg.mode,
        allow_stitch: cfg.allow_stitch,
        netlist: nl.stats(),
        routed: conns.len() - left.len(),
        unroutable: left.len(),
        wirelength: router.wirelength(),
        vias: router.vias(),
        stitches: layout.stitches.len(),
        conflicts: router.engine().conflict_count(),
        iterations,
        final_sizes: router.engine().sizes(),
        runtime_ms: record_runtime.then(|| t0.elapsed().as_millis() as u64),
    };
    FlowOutput { report, layout }
}
