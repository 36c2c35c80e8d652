//! Independent 3-coloring enumeration used as a test oracle.

#![allow(dead_code)]

use tplroute::conflict_graph::{ConflictGraph, VertexId};

/// Pairwise facts over every proper 3-coloring of a small graph.
pub struct Oracle {
    pub ids: Vec<VertexId>,
    pub colorings: u64,
    /// `same[i]` has bit j set if i and j share a color in some coloring.
    pub same: Vec<u32>,
    /// `diff[i]` has bit j set if i and j differ in some coloring.
    pub diff: Vec<u32>,
}

impl Oracle {
    pub fn new(cg: &ConflictGraph) -> Oracle {
        let ids: Vec<VertexId> = cg.vertex_ids().collect();
        assert!(ids.len() <= 16, "oracle is for small graphs");
        let n = ids.len();
        let pos = |v: VertexId| ids.iter().position(|x| *x == v).unwrap();
        let mut nbr = vec![0u32; n];
        for (a, b) in cg.edges() {
            nbr[pos(a)] |= 1 << pos(b);
            nbr[pos(b)] |= 1 << pos(a);
        }
        let mut o = Oracle { ids, colorings: 0, same: vec![0; n], diff: vec![0; n] };
        let mut masks = [0u32; 3];
        let mut color = vec![0u8; n];
        o.walk(0, &nbr, &mut masks, &mut color);
        o
    }

    fn walk(&mut self, i: usize, nbr: &[u32], masks: &mut [u32; 3], color: &mut [u8]) {
        let n = nbr.len();
        if i == n {
            self.colorings += 1;
            for (k, &c) in color.iter().enumerate() {
                let s = masks[c as usize];
                self.same[k] |= s;
                self.diff[k] |= !s & ((1u32 << n) - 1);
            }
            return;
        }
        for c in 0..3u8 {
            if masks[c as usize] & nbr[i] == 0 {
                masks[c as usize] |= 1 << i;
                color[i] = c;
                self.walk(i + 1, nbr, masks, color);
                masks[c as usize] &= !(1 << i);
            }
        }
    }

    pub fn colorable(&self) -> bool {
        self.colorings > 0
    }

    fn pos(&self, v: VertexId) -> usize {
        self.ids.iter().position(|x| *x == v).unwrap()
    }

    pub fn can_share(&self, a: VertexId, b: VertexId) -> bool {
        self.same[self.pos(a)] >> self.pos(b) & 1 == 1
    }

    pub fn can_differ(&self, a: VertexId, b: VertexId) -> bool {
        self.diff[self.pos(a)] >> self.pos(b) & 1 == 1
    }
}
