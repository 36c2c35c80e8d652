//! Per-layer bucket grid over rectangles.

use std::collections::HashMap;

use crate::geometry::{Coord, Rect};

#[derive(Clone, Debug)]
pub struct BucketIndex<K> {
    bucket: Coord,
    cells: HashMap<(u8, Coord, Coord), Vec<K>>,
}

impl<K: Copy + Ord> BucketIndex<K> {
    pub fn new(bucket: Coord) -> Self {
        assert!(bucket > 0);
        BucketIndex { bucket, cells: HashMap::new() }
    }

    fn span(&self, r: &Rect) -> impl Iterator<Item = (u8, Coord, Coord)> {
        let b = self.bucket;
        let (x0, x1) = (r.x_lo.div_euclid(b), r.x_hi.div_euclid(b));
        let (y0, y1) = (r.y_lo.div_euclid(b), r.y_hi.div_euclid(b));
        let layer = r.layer;
        (x0..=x1).flat_map(move |x| (y0..=y1).map(move |y| (layer, x, y)))
    }

    pub fn insert(&mut self, key: K, r: &Rect) {
        for cell in self.span(r).collect::<Vec<_>>() {
            self.cells.entry(cell).or_default().push(key);
        }
    }

    pub fn remove(&mut self, key: K, r: &Rect) {
        for cell in self.span(r).collect::<Vec<_>>() {
            if let Some(v) = self.cells.get_mut(&cell) {
                v.retain(|k| *k != key);
                if v.is_empty() {
                    self.cells.remove(&cell);
                }
            }
        }
    }

    /// Keys registered in any bucket touched by `r`, sorted and deduplicated.
    pub fn query(&self, r: &Rect) -> Vec<K> {
        let mut out: Vec<K> = self.span(r).filter_map(|c| self.cells.get(&c)).flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_query_remove() {
        let mut idx = BucketIndex::new(8);
        let a = Rect::new(0, 0, 3, 3, 0).unwrap();
        let b = Rect::new(20, 20, 30, 22, 0).unwrap();
        let c = Rect::new(0, 0, 3, 3, 1).unwrap();
        idx.insert(1u32, &a);
        idx.insert(2u32, &b);
        idx.insert(3u32, &c);
        assert_eq!(idx.query(&Rect::new(-5, -5, 1, 1, 0).unwrap()), vec![1]);
        assert_eq!(idx.query(&Rect::new(0, 0, 40, 40, 0).unwrap()), vec![1, 2]);
        idx.remove(2, &b);
        assert_eq!(idx.query(&Rect::new(0, 0, 40, 40, 0).unwrap()), vec![1]);
    }
}
