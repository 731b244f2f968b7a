//! Error norms and diagnostics evaluated on solved node fields.

use std::collections::HashSet;

use nalgebra::DMatrix;

use super::analytic::to_polar;
use crate::approx::{Basis, LocalSystem, Op, StencilParams, Support};
use crate::constitutive::Voigt;
use crate::error::{Error, Result};
use crate::geometry::NodeKind;
use crate::linsolve::SparsePattern;
use crate::point::{add, dist, scale, sub, Point};
use crate::spatial::PointIndex;

/// Relative discrete L2 error of an interleaved nodal displacement vector.
pub fn e2_norm(u: &[f64], exact: &[Point]) -> Result<f64> {
    if u.len() != 2 * exact.len() {
        return Err(Error::InvalidInput(format!(
            "displacement vector has {} entries for {} nodes",
            u.len(),
            exact.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, e) in exact.iter().enumerate() {
        num += (u[2 * l] - e[0]).powi(2) + (u[2 * l + 1] - e[1]).powi(2);
        den += e[0] * e[0] + e[1] * e[1];
    }
    if den == 0.0 {
        return Err(Error::UndefinedNorm("exact displacement field is zero everywhere".into()));
    }
    Ok((num / den).sqrt())
}

/// Pointwise relative errors; `None` where the reference vanishes.
pub fn line_error(values: &[f64], reference: &[f64]) -> Vec<Option<f64>> {
    values
        .iter()
        .zip(reference)
        .map(|(y, r)| if *r == 0.0 { None } else { Some((y - r).abs() / r.abs()) })
        .collect()
}

/// `n` equally spaced points from `a` to `b`, both ends included.
pub fn line_samples(a: Point, b: Point, n: usize) -> Vec<Point> {
    if n == 1 {
        return vec![scale(add(a, b), 0.5)];
    }
    (0..n)
        .map(|k| add(a, scale(sub(b, a), k as f64 / (n - 1) as f64)))
        .collect()
}

/// Evaluates nodal fields anywhere through the local interpolant of a chosen
/// (by default the nearest) node's support.
pub struct FieldSampler<'a> {
    positions: &'a [Point],
    supports: &'a [Support],
    index: PointIndex,
    basis: Basis,
    m: u32,
}

impl<'a> FieldSampler<'a> {
    pub fn new(positions: &'a [Point], supports: &'a [Support], stencil: &StencilParams) -> Self {
        FieldSampler {
            positions,
            supports,
            index: PointIndex::new(positions),
            basis: stencil.basis(),
            m: stencil.m,
        }
    }

    /// Node index of the `rank`-th nearest node to `q` (0 is the nearest).
    pub fn nearest(&self, q: Point, rank: usize) -> usize {
        self.index.nearest(q, rank + 1)[rank].0
    }

    /// Interpolates a per-node scalar field at `q` from the support of node `l`.
    pub fn value_from(&self, l: usize, q: Point, values: &[f64]) -> Result<f64> {
        let sys = LocalSystem::new(self.positions, &self.supports[l], &self.basis, self.m)?;
        Ok(sys.interpolate(q, values))
    }

    /// Interpolates a displacement (interleaved nodal vector) at `q` from the
    /// support of node `l`.
    pub fn displacement_from(&self, l: usize, q: Point, u: &[f64]) -> Result<Point> {
        let sys = LocalSystem::new(self.positions, &self.supports[l], &self.basis, self.m)?;
        let w = &sys.weights(q, &[Op::Identity])[0];
        let mut out = [0.0; 2];
        for (&j, wj) in self.supports[l].indices.iter().zip(w) {
            out[0] += wj * u[2 * j];
            out[1] += wj * u[2 * j + 1];
        }
        Ok(out)
    }

    pub fn value(&self, q: Point, values: &[f64]) -> Result<f64> {
        self.value_from(self.nearest(q, 0), q, values)
    }

    pub fn displacement(&self, q: Point, u: &[f64]) -> Result<Point> {
        self.displacement_from(self.nearest(q, 0), q, u)
    }
}

/// Splitting point pairs `(l, n(l))` over non-boundary nodes: each node is
/// paired with its nearest neighbour whose pair has not been claimed yet.
pub fn splitting_pairs(positions: &[Point], kinds: &[NodeKind]) -> Vec<(usize, usize)> {
    let index = PointIndex::new(positions);
    let mut claimed: HashSet<(usize, usize)> = HashSet::new();
    let mut out = Vec::new();
    for (l, &p) in positions.iter().enumerate() {
        if kinds[l] == NodeKind::Boundary {
            continue;
        }
        let mut k = 8.min(positions.len());
        let partner = loop {
            let found = index
                .nearest(p, k)
                .into_iter()
                .map(|(j, _)| j)
                .filter(|&j| j != l)
                .find(|&j| !claimed.contains(&(l.min(j), l.max(j))));
            if found.is_some() || k >= positions.len() {
                break found;
            }
            k = (2 * k).min(positions.len());
        };
        if let Some(j) = partner {
            claimed.insert((l.min(j), l.max(j)));
            out.push((l, j));
        }
    }
    out
}

/// Approximation-induced discontinuity: relative L2 mismatch between the two
/// neighbouring supports' interpolants at the splitting points.
pub fn aid_metric(u: &[f64], kinds: &[NodeKind], sampler: &FieldSampler) -> Result<f64> {
    let pairs = splitting_pairs(sampler.positions, kinds);
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no interior nodes for splitting points".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, j) in pairs {
        let q = scale(add(sampler.positions[l], sampler.positions[j]), 0.5);
        let a = sampler.displacement_from(l, q, u)?;
        let b = sampler.displacement_from(j, q, u)?;
        num += (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        den += a[0] * a[0] + a[1] * a[1];
    }
    if den == 0.0 {
        return Err(Error::UndefinedNorm("interpolated displacement is zero at every splitting point".into()));
    }
    Ok((num / den).sqrt())
}

/// Ratio of the extreme singular values of an assembled matrix.
pub fn condition_number(pattern: &SparsePattern, vals: &[f64], dense_limit: usize) -> Result<f64> {
    let n = pattern.n_rows().max(pattern.n_cols());
    if n > dense_limit {
        return Err(Error::DenseLimit { n, limit: dense_limit });
    }
    dense_condition_number(pattern.to_dense(vals))
}

pub fn dense_condition_number(a: DMatrix<f64>) -> Result<f64> {
    let sv = a.singular_values();
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return Err(Error::UndefinedNorm("matrix has no nonzero singular value".into()));
    }
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// Single-point relative error of the displacement extrapolated to each
/// corner through the `rank`-th nearest node's interpolant.
pub fn corner_extrapolation_error(
    u: &[f64],
    sampler: &FieldSampler,
    corners: &[Point],
    rank: usize,
    exact: impl Fn(Point) -> Result<Point>,
) -> Result<Vec<f64>> {
    corners
        .iter()
        .map(|&c| {
            let l = sampler.nearest(c, rank);
            let v = sampler.displacement_from(l, c, u)?;
            let e = exact(c)?;
            let den = e[0].hypot(e[1]);
            if den == 0.0 {
                return Err(Error::UndefinedNorm("exact displacement vanishes at a corner".into()));
            }
            Ok((v[0] - e[0]).hypot(v[1] - e[1]) / den)
        })
        .collect()
}

/// Least-squares slope of `ln e` against `ln h`. Non-positive entries are
/// skipped; `None` with fewer than two usable points.
pub fn fit_slope(hs: &[f64], es: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(es)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `max |σ_rφ| / max |σ_φφ|` over the given points, polar about the origin.
pub fn axisymmetry_ratio(positions: &[Point], stresses: &[Voigt]) -> f64 {
    let mut srp = 0.0f64;
    let mut spp = 0.0f64;
    for (x, s) in positions.iter().zip(stresses) {
        let (_, pp, rp) = to_polar(*x, [s[0], s[1], s[3]]);
        srp = srp.max(rp.abs());
        spp = spp.max(pp.abs());
    }
    srp / spp
}

/// Mean distance from each node to its nearest neighbour, and the extremes.
pub fn nearest_neighbour_stats(positions: &[Point]) -> (f64, f64, f64) {
    let index = PointIndex::new(positions);
    let d: Vec<f64> = positions
        .iter()
        .map(|&p| dist(p, index.point(index.nearest(p, 2)[1].0)))
        .collect();
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = d.iter().cloned().fold(0.0, f64::max);
    (min, d.iter().sum::<f64>() / d.len() as f64, max)
}
