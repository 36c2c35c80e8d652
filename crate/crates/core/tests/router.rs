use std::collections::BTreeSet;

use tplroute::coloring::validate_layout;
use tplroute::format::{Dir, NetDecl, Netlist, NetlistHeader, Obstacle, Pin};
use tplroute::gen::{generate, GenParams};
use tplroute::geometry::{NetId, Point, SegmentId, SpacingRules, WireSegment};
use tplroute::router::engine::TriadEngine;
use tplroute::router::{decompose_nets, net_order, run_flow, Mode, RouteResult, Router, RouterConfig, RoutingGrid, TwoPinId};
use tplroute::stitcher::Penalties;

fn netlist(w: i64, h: i64, layers: Vec<Dir>, obstacles: Vec<Obstacle>, nets: &[&[(i64, i64, u8)]]) -> Netlist {
    Netlist {
        header: NetlistHeader { width: w, height: h, layers, sp_w: 2, hw: 1, sp_tp: 6 },
        obstacles,
        nets: nets
            .iter()
            .enumerate()
            .map(|(k, ps)| NetDecl { name: format!("n{k}"), pins: ps.iter().map(|&(x, y, layer)| Pin { x, y, layer }).collect() })
            .collect(),
    }
}

fn cfg(nl: &Netlist) -> RouterConfig {
    RouterConfig { rules: nl.rules(), ..Default::default() }
}

#[test]
fn adjacent_pins_on_an_empty_grid() {
    let nl = netlist(8, 8, vec![Dir::H, Dir::V], vec![], &[&[(2, 3, 0), (3, 3, 0)]]);
    let conns = decompose_nets(&nl);
    let mut r = Router::new(RoutingGrid::from_netlist(&nl), cfg(&nl));
    r.add_connection(conns[0].clone());
    match r.route_two_pin(conns[0].id, true) {
        RouteResult::Routed { path, cost, stitches, conflicts } => {
            assert_eq!(path.len(), 2);
            assert_eq!(cost, 1);
            assert_eq!((stitches, conflicts), (0, 0));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn single_net_routes_in_one_iteration() {
    let nl = netlist(12, 12, vec![Dir::H, Dir::V], vec![], &[&[(1, 1, 0), (9, 6, 0)]]);
    let out = run_flow(&nl, &cfg(&nl), false);
    let r = &out.report;
    assert_eq!(r.iterations.len(), 1);
    assert_eq!((r.stitches, r.conflicts, r.unroutable), (0, 0, 0));
    assert_eq!(r.wirelength, 8 + 5);
    assert_eq!(out.layout.wirelength(), r.wirelength * nl.pitch());
}

#[test]
fn enclosed_pin_is_unroutable() {
    let walls = vec![
        Obstacle { layer: 0, x_lo: 0, y_lo: 1, x_hi: 2, y_hi: 1 },
        Obstacle { layer: 0, x_lo: 1, y_lo: 0, x_hi: 1, y_hi: 0 },
    ];
    let nl = netlist(6, 6, vec![Dir::H], walls, &[&[(0, 0, 0), (4, 4, 0)]]);
    let out = run_flow(&nl, &cfg(&nl), false);
    assert_eq!(out.report.unroutable, 1);
    assert!(out.layout.segments.is_empty());
}

#[test]
fn returned_cost_matches_recomputed_cost() {
    let p = GenParams { width: 16, height: 16, nets: 24, ..Default::default() };
    let mut audited = 0;
    for seed in 0..10 {
        let nl = generate(&p, seed);
        let conns = decompose_nets(&nl);
        for mode in [Mode::Triad, Mode::Greedy] {
            let mut r = Router::new(RoutingGrid::from_netlist(&nl), RouterConfig { mode, ..cfg(&nl) });
            for c in &conns {
                r.add_connection(c.clone());
            }
            for id in net_order(&conns, seed) {
                if let Some((path, cost)) = r.plan_route(id) {
                    let net = conns[id.0 as usize].net;
                    assert_eq!(r.path_cost(net, &path), Some(cost), "seed {seed} {id:?}");
                    audited += 1;
                }
                r.route_two_pin(id, false);
            }
        }
    }
    assert!(audited > 200);
}

#[test]
fn flow_is_deterministic() {
    let nl = generate(&GenParams::default(), 11);
    for mode in [Mode::Triad, Mode::Greedy] {
        let c = RouterConfig { mode, ..cfg(&nl) };
        let a = run_flow(&nl, &c, false);
        let b = run_flow(&nl, &c, false);
        assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
        assert_eq!(a.layout.to_jsonl(), b.layout.to_jsonl());
    }
}

#[test]
fn prohibited_iterations_commit_no_conflicts() {
    let nl = generate(&GenParams::default(), 5);
    let c = RouterConfig { max_iterations: 15, conflict_prohibited_iterations: 15, ..cfg(&nl) };
    let out = run_flow(&nl, &c, false);
    assert_eq!(out.report.conflicts, 0);
}

#[test]
fn rip_up_keeps_rebuild_equivalence() {
    let p = GenParams { width: 16, height: 16, nets: 30, ..Default::default() };
    let mut ripped = 0;
    for seed in 0..8 {
        let nl = generate(&p, seed);
        let conns = decompose_nets(&nl);
        let mut r = Router::new(RoutingGrid::from_netlist(&nl), cfg(&nl));
        for c in &conns {
            r.add_connection(c.clone());
        }
        for id in net_order(&conns, seed) {
            r.route_two_pin(id, false);
        }
        let routed: Vec<TwoPinId> = r.routed_ids().collect();
        for id in routed.iter().step_by(3) {
            assert!(r.rip_up(*id));
            ripped += 1;
            let g = r.tecg().unwrap();
            g.check_invariants().unwrap();
            let fresh = g.rebuilt();
            assert_eq!(g.canonical(), fresh.canonical(), "seed {seed} after {id:?}");
            assert_eq!(g.conflict_count(), fresh.conflict_count());
        }
        for id in routed.iter().step_by(3) {
            r.route_two_pin(*id, false);
        }
        let g = r.tecg().unwrap();
        assert_eq!(g.canonical(), g.rebuilt().canonical());
    }
    assert!(ripped > 20);
}

fn track_wire(id: u32, net: u32, y: i64, x0: i64, x1: i64) -> WireSegment {
    WireSegment::new(SegmentId(id), NetId(net), 0, Point::new(4 * x0, 4 * y), Point::new(4 * x1, 4 * y), 1).unwrap()
}

/// Corridor at track row 1 between three routed wires whose tokens form a
/// triangle, with the two extra constraints held by abstract vertices.
fn corridor(allow_stitch: bool) -> Router {
    let rows = vec![
        Obstacle { layer: 0, x_lo: 0, y_lo: 0, x_hi: 15, y_hi: 0 },
        Obstacle { layer: 0, x_lo: 0, y_lo: 2, x_hi: 15, y_hi: 2 },
    ];
    let mut nl = netlist(16, 3, vec![Dir::H], rows, &[&[(0, 1, 0), (14, 1, 0)]]);
    nl.header.sp_tp = 8;
    let c = RouterConfig { allow_stitch, ..cfg(&nl) };
    let mut eng = TriadEngine::new(nl.rules(), Penalties::default(), allow_stitch);
    let g = &mut eng.tecg;
    let a = g.add_segment(track_wire(0, 10, 2, 0, 4)).unwrap();
    let b = g.add_segment(track_wire(1, 11, 0, 3, 12)).unwrap();
    let cc = g.add_segment(track_wire(2, 12, 2, 10, 15)).unwrap();
    for v in [a, b, cc] {
        g.connect_geometric(v).unwrap();
    }
    assert_eq!(g.cg().edge_count(), 2);
    let d = g.add_abstract_vertex();
    let e = g.add_abstract_vertex();
    for (x, y) in [(e, a), (e, b), (d, b), (d, e), (d, cc)] {
        g.tecg_update(x, y).unwrap();
    }
    assert_eq!(g.tg().scc_count(), 1);
    let mut r = Router::with_engine(RoutingGrid::from_netlist(&nl), c, Box::new(eng));
    for t in decompose_nets(&nl) {
        r.add_connection(t);
    }
    r
}

#[test]
fn corridor_route_takes_one_stitch() {
    let mut r = corridor(true);
    match r.route_two_pin(TwoPinId(0), false) {
        RouteResult::Routed { path, stitches, conflicts, .. } => {
            assert_eq!(path.len(), 15);
            assert_eq!((stitches, conflicts), (1, 0));
        }
        other => panic!("{other:?}"),
    }
    let e = r.engine();
    assert_eq!(e.conflict_count(), 0);
    let wires: Vec<_> = e.colored().into_iter().collect();
    assert!(validate_layout(&wires, &SpacingRules::new(2, 8).unwrap()).is_empty());
    let f: BTreeSet<_> = wires.iter().filter(|(w, _)| w.net == NetId(0)).map(|(_, c)| *c).collect();
    assert_eq!(f.len(), 2);
}

#[test]
fn corridor_route_without_stitching_has_one_conflict() {
    let mut r = corridor(false);
    match r.route_two_pin(TwoPinId(0), false) {
        RouteResult::Routed { stitches, conflicts, .. } => assert_eq!((stitches, conflicts), (0, 1)),
        other => panic!("{other:?}"),
    }
    assert_eq!(r.engine().conflict_count(), 1);
    let mut r = corridor(false);
    assert!(matches!(r.route_two_pin(TwoPinId(0), true), RouteResult::Conflicted { .. }));
    assert!(!r.is_routed(TwoPinId(0)));
}

