//! Nearest-neighbour queries over a fixed point set.

use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};

use crate::point::{dist2, Point};

/// Immutable k-d tree over a point slice. Results are ordered by
/// `(distance, index)` so ties resolve deterministically.
pub struct PointIndex {
    tree: Option<ImmutableKdTree<f64, 2>>,
    points: Vec<Point>,
}

impl PointIndex {
    pub fn new(points: &[Point]) -> Self {
        let tree = if points.is_empty() {
            None
        } else {
            Some(ImmutableKdTree::new_from_slice(points).expect("finite coordinates"))
        };
        Self {
            tree,
            points: points.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    /// The `k` nearest points to `q` as `(index, distance)`.
    pub fn nearest(&self, q: Point, k: usize) -> Vec<(usize, f64)> {
        let Some(tree) = &self.tree else {
            return Vec::new();
        };
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        // over-fetch a little so equidistant candidates at the cutoff are ordered by index
        let fetch = (k + 8).min(self.points.len());
        let mut found: Vec<(usize, f64)> = tree
            .query(&q)
            .nearest_n::<SquaredEuclidean<f64>>(NonZero::new(fetch).unwrap())
            .execute()
            .into_iter()
            .map(|r| {
                let i = r.item as usize;
                (i, dist2(self.points[i], q))
            })
            .collect();
        found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        found.truncate(k);
        found.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect()
    }

    /// Indices of all points within `radius` of `q`, ordered by `(distance, index)`.
    pub fn within(&self, q: Point, radius: f64) -> Vec<usize> {
        let Some(tree) = &self.tree else {
            return Vec::new();
        };
        let mut found: Vec<(usize, f64)> = tree
            .query(&q)
            .within::<SquaredEuclidean<f64>>(radius * radius)
            .execute()
            .into_iter()
            .map(|r| {
                let i = r.item as usize;
                (i, dist2(self.points[i], q))
            })
            .collect();
        found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        found.into_iter().map(|(i, _)| i).collect()
    }
}
