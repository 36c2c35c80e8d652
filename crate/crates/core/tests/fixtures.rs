use std::collections::{BTreeMap, BTreeSet};

use tplroute::coloring::{assign_colors, greedy_colors};
use tplroute::conflict_graph::{ConflictGraph, VertexId};
use tplroute::geometry::{NetId, Point, SegmentId, SpacingRules, WireSegment};
use tplroute::tecg::{ConflictKind, Tecg, Update};
use tplroute::token_graph::{token_splitting, TokenGraph, TokenId};

fn set(vs: &[VertexId]) -> BTreeSet<VertexId> {
    vs.iter().copied().collect()
}

fn wire(id: u32, a: (i64, i64), b: (i64, i64)) -> WireSegment {
    WireSegment::new(SegmentId(id), NetId(id), 0, Point::new(a.0, a.1), Point::new(b.0, b.1), 1).unwrap()
}

#[test]
fn five_token_cascade_reduces_to_one_scc() {
    let mut g = Tecg::new(SpacingRules::default());
    // Vertex i gets token T(i+1).
    let v: Vec<VertexId> = (0..7).map(|_| g.add_abstract_vertex()).collect();
    let t = |i: usize| v[i - 1];
    let edges = [(1, 2), (2, 7), (1, 7), (3, 4), (4, 5), (3, 5), (2, 3), (5, 7), (1, 6), (5, 6)];
    for (a, b) in edges {
        assert_eq!(g.tecg_update(t(a), t(b)).unwrap(), Update::Ok);
    }
    assert_eq!((g.tg().token_count(), g.tg().edge_count(), g.tg().scc_count()), (7, 10, 2));
    assert!(g.last_merges().is_empty());

    assert_eq!(g.tecg_update(t(7), t(3)).unwrap(), Update::Ok);
    assert_eq!((g.tg().token_count(), g.tg().edge_count(), g.tg().scc_count()), (3, 3, 1));
    let pairs: Vec<BTreeSet<TokenId>> =
        g.last_merges().iter().map(|m| [m.tw, m.tx].into_iter().collect()).collect();
    let want: Vec<BTreeSet<TokenId>> = [(1, 3), (2, 5), (4, 7), (6, 10)]
        .iter()
        .map(|&(a, b)| [TokenId(a), TokenId(b)].into_iter().collect())
        .collect();
    assert_eq!(pairs, want);
    let classes = g.canonical().classes;
    assert!(classes.contains(&set(&[t(1), t(3)])));
    assert!(classes.contains(&set(&[t(2), t(5)])));
    assert!(classes.contains(&set(&[t(4), t(6), t(7)])));
    g.check_invariants().unwrap();
}

/// Four vertices A..D where A joins the B, C, D triangle last.
fn rip_up_fixture() -> (Tecg, [VertexId; 4]) {
    let mut g = Tecg::new(SpacingRules::default());
    let [a, b, c, d] = [(); 4].map(|_| g.add_abstract_vertex());
    for (x, y) in [(b, c), (c, d), (b, d), (a, c)] {
        g.tecg_update(x, y).unwrap();
    }
    g.tecg_update(a, b).unwrap();
    (g, [a, b, c, d])
}

#[test]
fn merge_records_pattern_and_merging_edge() {
    let (g, [a, b, c, d]) = rip_up_fixture();
    let m = g.last_merges();
    assert_eq!(m.len(), 1);
    assert_eq!([m[0].tw, m[0].tx].into_iter().collect::<BTreeSet<_>>(), [TokenId(1), TokenId(4)].into());
    assert_eq!(m[0].merged, TokenId(5));
    assert_eq!(g.token(a).unwrap(), TokenId(5));
    assert_eq!(g.token(d).unwrap(), TokenId(5));
    let me: Vec<_> = g.cg().merging_edges().collect();
    assert_eq!(me.len(), 1);
    assert_eq!(set(&[me[0].ends.0, me[0].ends.1]), set(&[a, d]));
    assert_eq!(set(&[me[0].bridges.0, me[0].bridges.1]), set(&[b, c]));
}

#[test]
fn disconnecting_a_pattern_edge_removes_the_merging_edge() {
    for (x, y) in [(0, 2), (1, 2)] {
        let (mut g, v) = rip_up_fixture();
        g.disconnect_incremental(v[x], v[y]).unwrap();
        assert_eq!(g.cg().merging_edges().count(), 0);
    }
}

#[test]
fn rip_up_splits_merged_token() {
    let (mut g, [a, b, c, d]) = rip_up_fixture();
    let made = g.disconnect_incremental(b, c).unwrap();
    assert_eq!(made, vec![TokenId(6), TokenId(7)]);
    assert_eq!(g.tg().scc_count(), 0);
    assert_ne!(g.token(a).unwrap(), g.token(d).unwrap());
    g.check_invariants().unwrap();

    let (mut h, [_, b, c, _]) = rip_up_fixture();
    h.tecg_disconnect(b, c).unwrap();
    assert_eq!(h.canonical(), h.rebuilt().canonical());
    assert_eq!(h.tg().token_count(), 4);
}

#[test]
fn nine_vertex_token_splitting() {
    let mut cg = ConflictGraph::new();
    let mut tg = TokenGraph::new();
    let tok: Vec<TokenId> = (0..7).map(|_| tg.fresh_token()).collect();
    // A, D, G share T1; B, C, E, F, H, I get T2..T7.
    let owner = [0, 1, 2, 0, 3, 4, 0, 5, 6];
    let v: Vec<VertexId> = owner.iter().map(|&k| cg.add_abstract_vertex(tok[k])).collect();
    let [a, b, c, d, e, f, g, h, i] = v[..] else { unreachable!() };
    let edges = [
        (a, b), (a, c), (b, c), (d, b), (d, c),
        (d, e), (d, f), (e, f), (g, e), (g, f),
        (a, h), (a, i), (h, i), (g, h), (g, i),
    ];
    for (x, y) in edges {
        cg.add_edge(x, y).unwrap();
        let (tx, ty) = (cg.token(x).unwrap(), cg.token(y).unwrap());
        tg.add_support(tx, ty).unwrap();
    }
    cg.install_merging_edge((a, d), (b, c), tok[0]);
    cg.install_merging_edge((d, g), (e, f), tok[0]);
    cg.install_merging_edge((a, g), (h, i), tok[0]);

    assert_eq!(cg.remove_edge(h, i).unwrap().len(), 1);
    assert_eq!(cg.remove_edge(a, c).unwrap().len(), 1);
    tg.remove_support(tok[5], tok[6]).unwrap();
    tg.remove_support(tok[0], tok[2]).unwrap();

    let made = token_splitting(&mut tg, &mut cg, tok[0]).unwrap();
    assert_eq!(made, vec![TokenId(8), TokenId(9)]);
    assert_eq!(cg.members(TokenId(8)).collect::<Vec<_>>(), vec![a]);
    assert_eq!(cg.members(TokenId(9)).collect::<BTreeSet<_>>(), set(&[d, g]));
    assert!(!tg.contains(tok[0]));
    assert!(tg.adjacent(TokenId(8), tok[1]));
    assert!(tg.adjacent(TokenId(9), tok[2]));
    tg.check_invariants().unwrap();
}

/// Wires A, B, C, F and abstract D, E forming the routed layout around F.
fn f_corridor() -> (Tecg, [VertexId; 6]) {
    let mut g = Tecg::new(SpacingRules::new(3, 9).unwrap());
    let a = g.add_segment(wire(0, (-30, 5), (2, 5))).unwrap();
    let b = g.add_segment(wire(1, (12, -5), (36, -5))).unwrap();
    let c = g.add_segment(wire(2, (30, 5), (80, 5))).unwrap();
    let d = g.add_abstract_vertex();
    let e = g.add_abstract_vertex();
    for v in [a, b, c] {
        g.connect_geometric(v).unwrap();
    }
    for (x, y) in [(e, a), (e, b), (d, b), (d, e), (d, c)] {
        g.tecg_update(x, y).unwrap();
    }
    let f = g.add_segment(wire(3, (0, 0), (60, 0))).unwrap();
    (g, [a, b, c, d, e, f])
}

#[test]
fn corridor_wire_conflicts_with_three_tokens() {
    let (mut g, [a, b, c, d, e, f]) = f_corridor();
    assert_eq!(g.tg().token_count(), 4);
    assert_eq!(g.tg().scc_count(), 1);
    assert_eq!(g.token(a).unwrap(), g.token(d).unwrap());
    assert_eq!(g.token(c).unwrap(), g.token(e).unwrap());
    assert_eq!(g.geometric_neighbors(f), vec![a, b, c]);
    assert_eq!(g.tecg_update(f, a).unwrap(), Update::Ok);
    assert_eq!(g.tecg_update(f, b).unwrap(), Update::Ok);
    assert_eq!(g.token(f).unwrap(), g.token(c).unwrap());
    match g.tecg_update(f, c).unwrap() {
        Update::Conflict(r) => assert_eq!(r.kind, ConflictKind::SameToken),
        Update::Ok => panic!("expected a conflict"),
    }
    assert_eq!(g.conflict_count(), 1);
}

fn eight_features() -> Vec<WireSegment> {
    [
        ((16, 8), (20, 8)),
        ((4, 12), (4, 12)),
        ((8, 12), (8, 12)),
        ((4, 4), (4, 8)),
        ((12, 12), (12, 12)),
        ((8, 0), (16, 0)),
        ((8, 16), (8, 20)),
        ((12, 8), (12, 8)),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(a, b))| wire(i as u32, a, b))
    .collect()
}

#[test]
fn eight_feature_layout() {
    let rules = SpacingRules::default();
    let mut g = Tecg::new(rules);
    let v: Vec<VertexId> = eight_features().into_iter().map(|w| g.add_segment(w).unwrap()).collect();
    for &x in &v {
        g.connect_geometric(x).unwrap();
    }
    let cg_edges: BTreeSet<(usize, usize)> = g
        .cg()
        .edges()
        .map(|(x, y)| (x.0 as usize, y.0 as usize))
        .map(|(x, y)| (x.min(y), x.max(y)))
        .collect();
    let want: BTreeSet<(usize, usize)> = [
        (0, 4), (0, 7), (1, 2), (1, 3), (1, 6), (2, 3),
        (2, 4), (2, 6), (2, 7), (3, 5), (4, 6), (4, 7),
    ]
    .into();
    assert_eq!(cg_edges, want);
    assert_eq!(g.conflict_count(), 0);

    let ma = assign_colors(&g);
    assert!(ma.uncolorable.is_empty());
    assert!(ma.residual.is_empty());
    let col = |i: usize| ma.color_of(g.cg(), v[i]).unwrap();
    assert_eq!(col(3), col(6));
    assert_eq!(col(3), col(7));

    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(x, y) in &want {
        adj.entry(x).or_default().insert(y);
        adj.entry(y).or_default().insert(x);
    }
    let greedy = greedy_colors(&(0..8).collect::<Vec<_>>(), &adj);
    let stuck: Vec<usize> = (0..8).filter(|&i| greedy[&i].is_none()).collect();
    assert_eq!(stuck, vec![6, 7]);
}
