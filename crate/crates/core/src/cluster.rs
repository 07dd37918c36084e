//! Single-linkage clustering of point clouds at a fixed radius.

use std::collections::HashMap;

use crate::map::Point;

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Connected components of the graph linking points closer than `eps`.
/// Labels are numbered in order of first appearance.
pub(crate) fn cluster_points(points: &[Point], eps: f64) -> (Vec<usize>, usize) {
    let n = points.len();
    let mut ds = DisjointSet::new(n);
    // cells of diagonal eps: everything sharing a cell is linked outright
    let h = eps / std::f64::consts::SQRT_2;
    let key = |p: &Point| ((p.x / h).floor() as i64, (p.y / h).floor() as i64);
    let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(key(p)).or_default().push(i);
    }
    for members in cells.values() {
        for &b in &members[1..] {
            ds.union(members[0], b);
        }
    }
    let eps2 = eps * eps;
    for (&(ci, cj), members) in &cells {
        // cells up to two apart can hold points within eps; visit each pair once
        for di in -2i64..=2 {
            for dj in -2i64..=2 {
                if (di, dj) <= (0, 0) {
                    continue;
                }
                let gap = |d: i64| (d.abs() - 1).max(0) as f64;
                if gap(di).powi(2) + gap(dj).powi(2) > 2.0 {
                    continue;
                }
                let Some(other) = cells.get(&(ci + di, cj + dj)) else { continue };
                if ds.find(members[0]) == ds.find(other[0]) {
                    continue;
                }
                'pairs: for &a in members {
                    for &b in other {
                        let d = points[a] - points[b];
                        if d.dot(d) <= eps2 {
                            ds.union(a, b);
                            break 'pairs;
                        }
                    }
                }
            }
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut root_label = HashMap::new();
    for i in 0..n {
        let r = ds.find(i);
        let next = root_label.len();
        labels[i] = *root_label.entry(r).or_insert(next);
    }
    (labels, root_label.len())
}
