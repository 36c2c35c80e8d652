use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tplroute::conflict_graph::VertexId;
use tplroute::geometry::SpacingRules;
use tplroute::tecg::Tecg;

struct Dsu(BTreeMap<VertexId, VertexId>);

impl Dsu {
    fn find(&mut self, v: VertexId) -> VertexId {
        let p = *self.0.get(&v).unwrap_or(&v);
        if p == v {
            return v;
        }
        let r = self.find(p);
        self.0.insert(v, r);
        r
    }

    fn union(&mut self, a: VertexId, b: VertexId) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0.insert(a.max(b), a.min(b));
        }
    }
}

/// Merging-edge connectivity inside every token equals what the merge
/// history predicts from the end points of every generated pattern.
#[test]
fn merging_edges_follow_merge_history() {
    let (mut merged, mut patternless) = (0, 0);
    for seed in 0..400u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(4..=12);
        let mut g = Tecg::new(SpacingRules::default());
        let vs: Vec<VertexId> = (0..n).map(|_| g.add_abstract_vertex()).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.35) {
                    edges.push((vs[i], vs[j]));
                }
            }
        }
        edges.shuffle(&mut rng);
        let mut dsu = Dsu(BTreeMap::new());
        for (a, b) in edges {
            g.tecg_update(a, b).unwrap();
            for m in g.last_merges() {
                merged += 1;
                if m.patterns.is_empty() {
                    patternless += 1;
                }
                for p in &m.patterns {
                    dsu.union(p.cnt1, p.cnt2);
                }
            }
        }
        for t in g.tg().tokens() {
            let want: BTreeSet<VertexId> = g.cg().members(t).map(|v| dsu.find(v)).collect();
            assert_eq!(g.cg().merging_components(t).len(), want.len(), "seed {seed} token {t}");
        }
    }
    // Most merges are backed by a pattern.
    assert!(patternless * 10 < merged, "{patternless} of {merged} merges had no pattern");
}

#[test]
fn merges_with_patterns_leave_tokens_connected() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(77 + seed);
        let n = rng.gen_range(4..=10);
        let mut g = Tecg::new(SpacingRules::default());
        let vs: Vec<VertexId> = (0..n).map(|_| g.add_abstract_vertex()).collect();
        let mut all_backed = true;
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.3) {
                    g.tecg_update(vs[i], vs[j]).unwrap();
                    all_backed &= g.last_merges().iter().all(|m| !m.patterns.is_empty());
                }
            }
        }
        if all_backed {
            for t in g.tg().tokens() {
                assert_eq!(g.cg().merging_components(t).len(), 1, "seed {seed}");
            }
        }
    }
}
