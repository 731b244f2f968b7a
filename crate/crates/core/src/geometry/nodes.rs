use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::domain::{BcTag, DomainSpec};
use crate::error::{Error, Result};
use crate::point::{add, dist, norm, scale, sub, Point};
use crate::spatial::PointIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Boundary,
    InnerBoundary,
    Interior,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Boundary => "boundary",
            NodeKind::InnerBoundary => "inner_boundary",
            NodeKind::Interior => "interior",
        }
    }
}

impl FromStr for NodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boundary" => Ok(NodeKind::Boundary),
            "inner_boundary" => Ok(NodeKind::InnerBoundary),
            "interior" => Ok(NodeKind::Interior),
            other => Err(Error::InvalidInput(format!("unknown node kind `{other}`"))),
        }
    }
}

/// Scattered node arrangement over a domain.
///
/// Boundary nodes come first, followed by the inner-boundary layer and then
/// the relaxed interior nodes. Boundary nodes carry an outward normal and a
/// boundary-condition tag; other nodes carry a zero normal and no tag.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeCloud {
    positions: Vec<Point>,
    kinds: Vec<NodeKind>,
    normals: Vec<Point>,
    bc: Vec<Option<BcTag>>,
    spacing: Vec<f64>,
}

impl NodeCloud {
    pub fn empty() -> Self {
        NodeCloud {
            positions: Vec::new(),
            kinds: Vec::new(),
            normals: Vec::new(),
            bc: Vec::new(),
            spacing: Vec::new(),
        }
    }

    /// Builds a cloud from raw parts, checking the per-node invariants.
    pub fn from_parts(
        positions: Vec<Point>,
        kinds: Vec<NodeKind>,
        normals: Vec<Point>,
        bc: Vec<Option<BcTag>>,
        spacing: Vec<f64>,
    ) -> Result<Self> {
        let n = positions.len();
        if kinds.len() != n || normals.len() != n || bc.len() != n || spacing.len() != n {
            return Err(Error::InvalidInput("node arrays have mismatched lengths".into()));
        }
        for i in 0..n {
            let is_boundary = kinds[i] == NodeKind::Boundary;
            if is_boundary != bc[i].is_some() {
                return Err(Error::InvalidInput(format!(
                    "node {i}: boundary nodes, and only boundary nodes, carry a BC tag"
                )));
            }
            if is_boundary && (norm(normals[i]) - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("node {i}: normal is not unit length")));
            }
            if !(spacing[i] > 0.0) {
                return Err(Error::InvalidInput(format!("node {i}: nonpositive spacing")));
            }
        }
        Ok(NodeCloud {
            positions,
            kinds,
            normals,
            bc,
            spacing,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> Point {
        self.positions[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn normal(&self, i: usize) -> Point {
        self.normals[i]
    }

    pub fn bc(&self, i: usize) -> Option<BcTag> {
        self.bc[i]
    }

    pub fn spacing(&self, i: usize) -> f64 {
        self.spacing[i]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_spacing(&self) -> f64 {
        self.spacing.iter().sum::<f64>() / self.spacing.len().max(1) as f64
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.kinds.iter().filter(|k| **k == kind).count()
    }

    /// Number of boundary nodes (`N_b`).
    pub fn n_boundary(&self) -> usize {
        self.count(NodeKind::Boundary)
    }

    /// Number of non-boundary nodes (inner boundary plus interior).
    pub fn n_inner(&self) -> usize {
        self.len() - self.n_boundary()
    }

    fn push(&mut self, p: Point, kind: NodeKind, n: Point, bc: Option<BcTag>, h: f64) {
        self.positions.push(p);
        self.kinds.push(kind);
        self.normals.push(n);
        self.bc.push(bc);
        self.spacing.push(h);
    }

    /// Applies `f` to every position, keeping everything else.
    pub fn map_positions(&self, f: impl Fn(Point) -> Point, spacing_scale: f64) -> NodeCloud {
        let mut out = self.clone();
        for p in &mut out.positions {
            *p = f(*p);
        }
        for h in &mut out.spacing {
            *h *= spacing_scale;
        }
        out
    }

    /// Space separated text table, one row per node: `x y kind nx ny bc_tag`.
    pub fn to_table(&self) -> String {
        let mut s = String::with_capacity(self.len() * 96);
        s.push_str("# x y kind nx ny bc_tag\n");
        for i in 0..self.len() {
            let p = self.positions[i];
            let n = self.normals[i];
            let tag = self.bc[i].map(|t| t.to_string()).unwrap_or_else(|| "none".into());
            writeln!(
                s,
                "{:.16e} {:.16e} {} {:.16e} {:.16e} {}",
                p[0],
                p[1],
                self.kinds[i].as_str(),
                n[0],
                n[1],
                tag
            )
            .unwrap();
        }
        s
    }

    /// Parses the output of [`NodeCloud::to_table`]; spacing is not part of the
    /// table and is set to `h` for every node.
    pub fn from_table(text: &str, h: f64) -> Result<Self> {
        let mut cloud = NodeCloud::empty();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 6 {
                return Err(Error::InvalidInput(format!(
                    "node table line {}: expected 6 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| {
                    Error::InvalidInput(format!("node table line {}: {e}", lineno + 1))
                })
            };
            let kind: NodeKind = cols[2].parse()?;
            let tag = if cols[5] == "none" {
                None
            } else {
                Some(cols[5].parse()?)
            };
            cloud.push(
                [num(cols[0])?, num(cols[1])?],
                kind,
                [num(cols[3])?, num(cols[4])?],
                tag,
                h,
            );
        }
        NodeCloud::from_parts(cloud.positions, cloud.kinds, cloud.normals, cloud.bc, cloud.spacing)
    }
}

/// Full pipeline: boundary, inner boundary, interior fill and relaxation.
pub fn generate_nodes(spec: &DomainSpec, seed: u64) -> Result<NodeCloud> {
    let cloud = place_boundary_nodes(spec)?;
    let cloud = place_inner_boundary_nodes(&cloud, spec);
    fill_and_relax_interior(&cloud, spec, seed)
}

const ARC_SAMPLES: usize = 4096;

/// Marches along every segment placing nodes approximately `h(p)` apart by
/// arc length. Segment end points (corners) never receive a node; the nodes
/// next to a corner sit one spacing away from it, so the shifted collocation
/// points of two edges meeting there stay apart for `alpha_s < 1`.
pub fn place_boundary_nodes(spec: &DomainSpec) -> Result<NodeCloud> {
    let mut cloud = NodeCloud::empty();
    for (si, seg) in spec.segments().iter().enumerate() {
        // cumulative ∫ ds / h(s) on a fine parameter grid
        let mut ts = Vec::with_capacity(ARC_SAMPLES + 1);
        let mut cum = Vec::with_capacity(ARC_SAMPLES + 1);
        let mut length = 0.0;
        let mut prev = seg.start();
        ts.push(seg.t_start);
        cum.push(0.0);
        for k in 1..=ARC_SAMPLES {
            let t = seg.t_start + (seg.t_end - seg.t_start) * k as f64 / ARC_SAMPLES as f64;
            let p = (seg.position)(t);
            let ds = dist(prev, p);
            let mid = scale(add(prev, p), 0.5);
            length += ds;
            cum.push(cum[k - 1] + ds / spec.spacing(mid));
            ts.push(t);
            prev = p;
        }
        let total = *cum.last().unwrap();
        let intervals = total.round() as usize;
        let closed = dist(seg.start(), seg.end()) < 1e-12 * length.max(1.0);
        let targets: Vec<f64> = if closed {
            let n = intervals.max(1);
            (0..n).map(|k| (k as f64 + 0.5) * total / n as f64).collect()
        } else if intervals < 2 {
            log::warn!(
                "segment {si} (length {length:.4e}) is shorter than twice the local spacing; placing one node at its midpoint"
            );
            vec![0.5 * total]
        } else {
            (1..intervals).map(|k| k as f64 * total / intervals as f64).collect()
        };
        for target in targets {
            let j = cum.partition_point(|c| *c < target).clamp(1, ARC_SAMPLES);
            let frac = if cum[j] > cum[j - 1] {
                (target - cum[j - 1]) / (cum[j] - cum[j - 1])
            } else {
                0.5
            };
            let t = ts[j - 1] + frac * (ts[j] - ts[j - 1]);
            let p = (seg.position)(t);
            let n = (seg.normal)(t);
            cloud.push(p, NodeKind::Boundary, n, Some(seg.bc), spec.spacing(p));
        }
    }
    Ok(cloud)
}

/// Adds one node at `p − h(p)·n` per boundary node. Offsets that leave the
/// domain, or crowd an existing node closer than `h/2`, are skipped.
pub fn place_inner_boundary_nodes(cloud: &NodeCloud, spec: &DomainSpec) -> NodeCloud {
    let mut out = cloud.clone();
    let boundary: Vec<usize> = (0..cloud.len())
        .filter(|&i| cloud.kind(i) == NodeKind::Boundary)
        .collect();
    let mut placed: Vec<Point> = cloud.positions().to_vec();
    for i in boundary {
        let p = cloud.position(i);
        let h = cloud.spacing(i);
        let q = sub(p, scale(cloud.normal(i), h));
        if !spec.contains(q) || spec.distance_to_boundary(q).0 < 1e-9 * h {
            log::warn!("inner-boundary offset of node {i} falls outside the domain; skipped");
            continue;
        }
        let hq = spec.spacing(q);
        if placed.iter().any(|x| dist(*x, q) < 0.5 * hq) {
            log::debug!("inner-boundary offset of node {i} crowds an existing node; skipped");
            continue;
        }
        placed.push(q);
        out.push(q, NodeKind::InnerBoundary, [0.0, 0.0], None, hq);
    }
    out
}

/// Relaxation settings for the interior fill.
#[derive(Clone, Copy, Debug)]
pub struct RelaxSettings {
    /// Interaction cutoff in units of local spacing.
    pub cutoff: f64,
    /// Maximum displacement per sweep in units of local spacing.
    pub max_step: f64,
    /// Stop once every node moves less than this (units of spacing).
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Step gain applied to the dimensionless repulsion force.
    pub gain: f64,
    /// Minimum distance of interior nodes from the boundary in units of
    /// spacing; keeps them off the inner-boundary layer.
    pub clearance: f64,
}

impl Default for RelaxSettings {
    fn default() -> Self {
        RelaxSettings {
            cutoff: 3.0,
            max_step: 0.2,
            tolerance: 0.01,
            max_sweeps: 200,
            gain: 0.05,
            clearance: 1.5,
        }
    }
}

/// Fills the region at least `h(p)` away from the boundary by rejection
/// sampling and relaxes the new nodes with a truncated `1/r²` repulsion.
pub fn fill_and_relax_interior(cloud: &NodeCloud, spec: &DomainSpec, seed: u64) -> Result<NodeCloud> {
    fill_and_relax_with(cloud, spec, seed, RelaxSettings::default())
}

pub fn fill_and_relax_with(
    cloud: &NodeCloud,
    spec: &DomainSpec,
    seed: u64,
    settings: RelaxSettings,
) -> Result<NodeCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = spec.bounding_box();

    // mean and peak density over a coarse grid of inside points
    let grid = 128;
    let (mut rho_sum, mut rho_max, mut hits) = (0.0, 0.0f64, 0usize);
    for a in 0..grid {
        for b in 0..grid {
            let p = [
                lo[0] + (a as f64 + 0.5) / grid as f64 * (hi[0] - lo[0]),
                lo[1] + (b as f64 + 0.5) / grid as f64 * (hi[1] - lo[1]),
            ];
            if spec.contains(p) {
                let r = spec.density(p);
                rho_sum += r;
                rho_max = rho_max.max(r);
                hits += 1;
            }
        }
    }
    if hits == 0 {
        return Ok(cloud.clone());
    }
    let rho_mean = rho_sum / hits as f64;
    // the boundary and inner-boundary rows occupy a strip of about 1.43 h
    let n_b = cloud.n_boundary() as f64;
    let target = (rho_mean * spec.area() - 1.655 * n_b).round().max(0.0) as usize;

    let mut fill: Vec<Point> = Vec::with_capacity(target);
    let max_attempts = 200 * target + 10_000;
    let mut attempts = 0;
    while fill.len() < target && attempts < max_attempts {
        attempts += 1;
        let p = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
        let accept: f64 = rng.random();
        if accept * rho_max > spec.density(p) {
            continue;
        }
        if spec.distance_to_boundary(p).0 < settings.clearance * spec.spacing(p) || !spec.contains(p) {
            continue;
        }
        fill.push(p);
    }
    if fill.len() < target {
        log::debug!("interior fill placed {} of {} nodes", fill.len(), target);
    }
    if fill.is_empty() {
        return Ok(cloud.clone());
    }

    let frozen: Vec<Point> = cloud.positions().to_vec();
    let n_frozen = frozen.len();
    let mut converged = false;
    for _sweep in 0..settings.max_sweeps {
        let mut all = frozen.clone();
        all.extend_from_slice(&fill);
        let index = PointIndex::new(&all);
        let moves: Vec<(Point, f64)> = fill
            .par_iter()
            .enumerate()
            .map(|(k, &p)| {
                let i = n_frozen + k;
                let h = spec.spacing(p);
                let mut force = [0.0, 0.0];
                let inv_cut2 = 1.0 / (settings.cutoff * settings.cutoff);
                for j in index.within(p, settings.cutoff * h) {
                    if j == i {
                        continue;
                    }
                    let d = sub(p, all[j]);
                    let r = norm(d);
                    if r == 0.0 {
                        continue;
                    }
                    // shifted to vanish at the cutoff so the force is continuous
                    let w = ((h / r) * (h / r) - inv_cut2).max(0.0) / r;
                    force = add(force, scale(d, w));
                }
                let mut step = scale(force, settings.gain * h);
                let len = norm(step);
                if len > settings.max_step * h {
                    step = scale(step, settings.max_step * h / len);
                }
                // p keeps the clearance and the step is shorter than it, so q
                // is still inside the domain
                let mut q = add(p, step);
                let c = settings.clearance * h;
                let (d, foot) = spec.distance_to_boundary(q);
                if d < c {
                    let away = sub(q, foot);
                    let l = norm(away);
                    q = if l > 0.0 { add(foot, scale(away, c / l)) } else { p };
                }
                (q, dist(p, q) / h)
            })
            .collect();
        let mut max_move = 0.0f64;
        for (k, (q, m)) in moves.into_iter().enumerate() {
            fill[k] = q;
            max_move = max_move.max(m);
        }
        if max_move < settings.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("interior relaxation did not converge in {} sweeps", settings.max_sweeps);
    }

    let mut out = cloud.clone();
    for p in fill {
        out.push(p, NodeKind::Interior, [0.0, 0.0], None, spec.spacing(p));
    }
    Ok(out)
}
