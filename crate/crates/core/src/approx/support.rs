use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::point::{dist2, Point};
use crate::spatial::PointIndex;

/// Center node plus its nearest neighbours, nearest first.
#[derive(Clone, Debug, PartialEq)]
pub struct Support {
    pub center: usize,
    pub indices: Vec<usize>,
    /// Root-mean-square distance of the other support nodes to the center.
    pub scale: f64,
}

impl Support {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Builds a support from explicit indices; the first entry is the center.
    pub fn from_indices(positions: &[Point], indices: Vec<usize>) -> Result<Self> {
        let Some(&center) = indices.first() else {
            return Err(Error::InvalidInput("empty support".into()));
        };
        let c = positions[center];
        let n = indices.len();
        let scale = if n > 1 {
            let s: f64 = indices[1..].iter().map(|&j| dist2(positions[j], c)).sum();
            (s / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Support {
            center,
            indices,
            scale,
        })
    }
}

pub fn build_support(index: &PointIndex, l: usize, n: usize) -> Result<Support> {
    if n > index.len() {
        return Err(Error::InvalidConfig(format!(
            "support size {n} exceeds the number of nodes {}",
            index.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("support size must be positive".into()));
    }
    let near = index.nearest(index.point(l), n);
    let mut indices: Vec<usize> = near.into_iter().map(|(j, _)| j).collect();
    // the center is at distance zero; keep it first even under exact ties
    if let Some(pos) = indices.iter().position(|&j| j == l) {
        indices.remove(pos);
    } else {
        indices.pop();
    }
    indices.insert(0, l);
    Support::from_indices(index.points(), indices)
}

pub fn build_supports(index: &PointIndex, n: usize) -> Result<Vec<Support>> {
    (0..index.len())
        .into_par_iter()
        .map(|l| build_support(index, l, n))
        .collect()
}
