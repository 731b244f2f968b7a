use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::{dist, dot, norm, sub, Point};
use crate::spatial::PointIndex;

/// Boundary condition carried by a boundary segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BcTag {
    /// Prescribed displacement.
    Dirichlet,
    /// Prescribed traction `σ·n`.
    Traction,
    /// Zero normal displacement and zero tangential traction.
    FreeSlip,
}

impl fmt::Display for BcTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcTag::Dirichlet => "dirichlet",
            BcTag::Traction => "traction",
            BcTag::FreeSlip => "free_slip",
        })
    }
}

impl FromStr for BcTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BcTag::Dirichlet),
            "traction" => Ok(BcTag::Traction),
            "free_slip" => Ok(BcTag::FreeSlip),
            other => Err(Error::InvalidInput(format!("unknown boundary tag `{other}`"))),
        }
    }
}

pub type CurveFn = Arc<dyn Fn(f64) -> Point + Send + Sync>;
pub type DensityFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// One parameterized piece of the boundary loop.
#[derive(Clone)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub position: CurveFn,
    /// Outward unit normal at parameter `t`.
    pub normal: CurveFn,
    pub bc: BcTag,
}

impl Segment {
    /// Straight segment from `a` to `b`; the outward side is to the right of `a → b`.
    pub fn line(a: Point, b: Point, bc: BcTag) -> Self {
        let d = sub(b, a);
        let len = norm(d);
        let n = [d[1] / len, -d[0] / len];
        Segment {
            t_start: 0.0,
            t_end: 1.0,
            position: Arc::new(move |t| [a[0] + t * d[0], a[1] + t * d[1]]),
            normal: Arc::new(move |_| n),
            bc,
        }
    }

    /// Circular arc from angle `theta0` to `theta1`. `outward_from_center` selects
    /// whether the domain normal points away from or toward the center.
    pub fn arc(
        center: Point,
        radius: f64,
        theta0: f64,
        theta1: f64,
        outward_from_center: bool,
        bc: BcTag,
    ) -> Self {
        let sign = if outward_from_center { 1.0 } else { -1.0 };
        Segment {
            t_start: theta0,
            t_end: theta1,
            position: Arc::new(move |t| [center[0] + radius * t.cos(), center[1] + radius * t.sin()]),
            normal: Arc::new(move |t| [sign * t.cos(), sign * t.sin()]),
            bc,
        }
    }

    pub fn start(&self) -> Point {
        (self.position)(self.t_start)
    }

    pub fn end(&self) -> Point {
        (self.position)(self.t_end)
    }
}

/// A closed 2D domain bounded by parameterized segments, plus a node density.
#[derive(Clone)]
pub struct DomainSpec {
    segments: Vec<Segment>,
    density: DensityFn,
    polygon: Polygon,
}

/// Fine polyline approximation of the boundary loop used for inside and
/// distance queries.
#[derive(Clone)]
struct Polygon {
    vertices: Vec<Point>,
    index: Arc<PointIndex>,
    area: f64,
    perimeter: f64,
}

const POLY_RESOLUTION: usize = 4096;

impl DomainSpec {
    /// Builds a domain from a counterclockwise loop of segments and a density
    /// `ρ(p)` in nodes per unit area.
    pub fn new(segments: Vec<Segment>, density: DensityFn) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("domain has no boundary segments".into()));
        }
        // rough sampling to size the polygon
        let mut lengths = Vec::with_capacity(segments.len());
        for seg in &segments {
            lengths.push(polyline_length(seg, 256));
        }
        let total: f64 = lengths.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("boundary has zero length".into()));
        }
        let scale = total;
        for (i, seg) in segments.iter().enumerate() {
            let next = &segments[(i + 1) % segments.len()];
            let gap = dist(seg.end(), next.start());
            if gap > 1e-9 * scale {
                return Err(Error::InvalidInput(format!(
                    "segment {i} does not connect to segment {} (gap {gap:e})",
                    (i + 1) % segments.len()
                )));
            }
            for k in 0..=8 {
                let t = seg.t_start + (seg.t_end - seg.t_start) * k as f64 / 8.0;
                let n = (seg.normal)(t);
                if (norm(n) - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!("segment {i} normal is not unit length")));
                }
            }
        }

        let mut vertices = Vec::new();
        for (seg, len) in segments.iter().zip(&lengths) {
            let n_sub = ((len / total) * POLY_RESOLUTION as f64).ceil().max(8.0) as usize;
            for k in 0..n_sub {
                let t = seg.t_start + (seg.t_end - seg.t_start) * k as f64 / n_sub as f64;
                vertices.push((seg.position)(t));
            }
        }
        let mut area = 0.0;
        let mut perimeter = 0.0;
        for i in 0..vertices.len() {
            let a = vertices[i];
            let b = vertices[(i + 1) % vertices.len()];
            area += a[0] * b[1] - b[0] * a[1];
            perimeter += dist(a, b);
        }
        area *= 0.5;
        if area <= 0.0 {
            return Err(Error::InvalidInput(
                "boundary loop must be counterclockwise with positive area".into(),
            ));
        }
        // outward normals must point to the right of the traversal direction
        for (i, seg) in segments.iter().enumerate() {
            let tm = 0.5 * (seg.t_start + seg.t_end);
            let dt = 1e-6 * (seg.t_end - seg.t_start);
            let tan = sub((seg.position)(tm + dt), (seg.position)(tm - dt));
            let n = (seg.normal)(tm);
            if dot([tan[1], -tan[0]], n) <= 0.0 {
                return Err(Error::InvalidInput(format!("segment {i} normal points inward")));
            }
        }
        let index = Arc::new(PointIndex::new(&vertices));
        let polygon = Polygon {
            vertices,
            index,
            area,
            perimeter,
        };
        Ok(DomainSpec {
            segments,
            density,
            polygon,
        })
    }

    /// Convenience constructor for a constant spacing `h`.
    pub fn with_uniform_spacing(segments: Vec<Segment>, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("spacing must be positive, got {h}")));
        }
        let rho = density_from_spacing(h);
        Self::new(segments, Arc::new(move |_| rho))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn density(&self, p: Point) -> f64 {
        (self.density)(p)
    }

    pub fn spacing(&self, p: Point) -> f64 {
        spacing_from_density(self.density(p)).unwrap_or(f64::INFINITY)
    }

    pub fn area(&self) -> f64 {
        self.polygon.area
    }

    pub fn perimeter(&self) -> f64 {
        self.polygon.perimeter
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.polygon.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Crossing-number test against the boundary polyline.
    pub fn contains(&self, p: Point) -> bool {
        let v = &self.polygon.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Inside the domain or within `tol` of its boundary.
    pub fn contains_with_tolerance(&self, p: Point, tol: f64) -> bool {
        self.contains(p) || self.distance_to_boundary(p).0 <= tol
    }

    /// Distance to the boundary and the closest boundary point.
    pub fn distance_to_boundary(&self, p: Point) -> (f64, Point) {
        let v = &self.polygon.vertices;
        let nv = v.len();
        let mut best = (f64::INFINITY, p);
        for (i, _) in self.polygon.index.nearest(p, 8) {
            for (a, b) in [(v[(i + nv - 1) % nv], v[i]), (v[i], v[(i + 1) % nv])] {
                let q = closest_on_segment(p, a, b);
                let d = dist(p, q);
                if d < best.0 {
                    best = (d, q);
                }
            }
        }
        best
    }
}

fn closest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    if l2 == 0.0 {
        return a;
    }
    let t = (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0);
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

fn polyline_length(seg: &Segment, n: usize) -> f64 {
    let mut len = 0.0;
    let mut prev = seg.start();
    for k in 1..=n {
        let t = seg.t_start + (seg.t_end - seg.t_start) * k as f64 / n as f64;
        let p = (seg.position)(t);
        len += dist(prev, p);
        prev = p;
    }
    len
}

/// Geometric factor of an ideal hexagonal lattice, `√(2/√3)`.
pub fn hex_factor() -> f64 {
    (2.0 / 3f64.sqrt()).sqrt()
}

/// Nodal spacing for a density: `h = θ/√ρ`.
pub fn spacing_from_density(rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidInput(format!("density must be positive and finite, got {rho}")));
    }
    Ok(hex_factor() / rho.sqrt())
}

/// Inverse of [`spacing_from_density`].
pub fn density_from_spacing(h: f64) -> f64 {
    let theta = hex_factor();
    theta * theta / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Segment> {
        vec![
            Segment::line([0.0, 0.0], [1.0, 0.0], BcTag::Traction),
            Segment::line([1.0, 0.0], [1.0, 1.0], BcTag::Traction),
            Segment::line([1.0, 1.0], [0.0, 1.0], BcTag::Traction),
            Segment::line([0.0, 1.0], [0.0, 0.0], BcTag::Dirichlet),
        ]
    }

    #[test]
    fn spacing_formula() {
        let theta = hex_factor();
        assert!((theta - 1.074569931823542).abs() < 1e-12);
        assert!((spacing_from_density(theta * theta).unwrap() - 1.0).abs() < 1e-15);
        assert!((spacing_from_density(1000.0).unwrap() - theta / 1000f64.sqrt()).abs() < 1e-15);
        assert!(spacing_from_density(0.0).is_err());
        assert!(spacing_from_density(-2.0).is_err());
    }

    #[test]
    fn square_queries() {
        let d = DomainSpec::with_uniform_spacing(unit_square(), 0.1).unwrap();
        assert!((d.area() - 1.0).abs() < 1e-12);
        assert!((d.perimeter() - 4.0).abs() < 1e-12);
        assert!(d.contains([0.5, 0.5]));
        assert!(!d.contains([1.5, 0.5]));
        let (dd, q) = d.distance_to_boundary([0.3, 0.1]);
        assert!((dd - 0.1).abs() < 1e-12);
        assert!((q[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_open_or_clockwise_loops() {
        let mut segs = unit_square();
        segs.pop();
        assert!(DomainSpec::with_uniform_spacing(segs, 0.1).is_err());
        let cw = vec![
            Segment::line([0.0, 0.0], [0.0, 1.0], BcTag::Traction),
            Segment::line([0.0, 1.0], [1.0, 1.0], BcTag::Traction),
            Segment::line([1.0, 1.0], [1.0, 0.0], BcTag::Traction),
            Segment::line([1.0, 0.0], [0.0, 0.0], BcTag::Traction),
        ];
        assert!(DomainSpec::with_uniform_spacing(cw, 0.1).is_err());
    }

    #[test]
    fn bc_tag_round_trip() {
        for tag in [BcTag::Dirichlet, BcTag::Traction, BcTag::FreeSlip] {
            assert_eq!(tag.to_string().parse::<BcTag>().unwrap(), tag);
        }
        assert!("neumann".parse::<BcTag>().is_err());
    }
}
