use std::sync::Arc;

use rayon::prelude::*;

use super::config::{shifted_eval_point, Approach, ApproachConfig};
use crate::approx::{build_supports, LocalSystem, Op, Support};
use crate::constitutive::{return_map, Material, MaterialState, Tangent, Voigt};
use crate::error::{Error, Result};
use crate::geometry::{BcTag, DomainSpec, NodeCloud, NodeKind};
use crate::linsolve::SparsePattern;
use crate::point::{add, Point};
use crate::spatial::PointIndex;

/// Boundary data as a function of boundary position, outward normal and load
/// parameter.
pub type BcFn = Arc<dyn Fn(Point, Point, f64) -> Point + Send + Sync>;

/// Node cloud, material and boundary data of one boundary-value problem.
#[derive(Clone)]
pub struct Problem {
    pub cloud: NodeCloud,
    pub material: Material,
    /// Used to check that shifted and secondary points stay in the domain.
    pub domain: Option<DomainSpec>,
    pub dirichlet: BcFn,
    pub traction: BcFn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointRole {
    /// Material point at a node.
    Node(usize),
    /// Shifted collocation point of a boundary node.
    Boundary(usize),
    /// Secondary node `slot` of a collocation node.
    Secondary { node: usize, slot: usize },
}

/// Where stress is evaluated: a position, the support whose interpolant is
/// differentiated there, and the first-derivative weights over it.
#[derive(Clone, Debug)]
pub struct EvalPoint {
    pub pos: Point,
    pub role: PointRole,
    pub cols: Vec<usize>,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
}

impl EvalPoint {
    /// Voigt strain of a nodal displacement vector `u = (u1_0, u2_0, ...)`.
    pub fn strain(&self, u: &[f64]) -> Voigt {
        let mut e = [0.0; 4];
        for ((&j, wx), wy) in self.cols.iter().zip(&self.wx).zip(&self.wy) {
            let (u1, u2) = (u[2 * j], u[2 * j + 1]);
            e[0] += wx * u1;
            e[1] += wy * u2;
            e[3] += wy * u1 + wx * u2;
        }
        e
    }
}

/// `c[0]·σ11 + c[1]·σ22 + c[2]·σ12` at one evaluation point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressTerm {
    pub point: usize,
    pub c: [f64; 3],
}

/// Slack for inside tests, relative to the spacing; covers the polyline
/// approximation of curved boundaries.
const INSIDE_TOL: f64 = 1e-3;

const STRESS_COMPONENTS: [usize; 3] = [0, 1, 3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RowLoad {
    None,
    Traction { node: usize, comp: usize, scale: f64 },
    Dirichlet { node: usize, comp: usize, scale: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Row {
    /// Linear combination of stresses. `direct` marks an interior row of the
    /// direct approach whose tangent uses second-derivative weights at the
    /// given `(node, component)` instead of the stress combination.
    Stress {
        terms: Vec<StressTerm>,
        direct: Option<(usize, usize)>,
        load: RowLoad,
    },
    /// Linear combination of nodal displacement components.
    Displacement { terms: Vec<(usize, f64)>, load: RowLoad },
}

impl Row {
    pub fn load(&self) -> RowLoad {
        match self {
            Row::Stress { load, .. } | Row::Displacement { load, .. } => *load,
        }
    }

    pub fn is_displacement(&self) -> bool {
        matches!(self, Row::Displacement { .. })
    }
}

/// Outcome of updating every evaluation point for a trial displacement
/// increment.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub states: Vec<MaterialState>,
    pub tangents: Vec<Tangent>,
    pub dgamma: Vec<f64>,
    /// `f_int − f_ext` per row.
    pub residual: Vec<f64>,
}

/// Per-node stencils, evaluation points, rows and sparse pattern of one
/// approach on one node cloud. Immutable after construction.
pub struct Discretization {
    config: ApproachConfig,
    n_nodes: usize,
    positions: Vec<Point>,
    normals: Vec<Point>,
    bc: Vec<Option<BcTag>>,
    supports: Vec<Support>,
    points: Vec<EvalPoint>,
    /// Points whose stress enters some row.
    active: Vec<bool>,
    rows: Vec<Row>,
    /// `(dxx, dxy, dyy)` weights at interior nodes, direct approach only.
    second: Vec<Option<[Vec<f64>; 3]>>,
    /// Elastic `∇·(D∇ˢ)` row entries of direct interior rows.
    direct_elastic: Vec<Option<Vec<(usize, f64)>>>,
    /// Effective secondary-node offset per node (hybrid).
    offsets: Vec<f64>,
    pattern: SparsePattern,
    reduced_offsets: usize,
}

struct NodeStencils {
    node: EvalPoint,
    boundary: Option<EvalPoint>,
    secondary: Vec<EvalPoint>,
    second: Option<[Vec<f64>; 3]>,
    offset: f64,
    reduced: bool,
}

impl Discretization {
    pub fn build(problem: &Problem, config: &ApproachConfig) -> Result<Self> {
        let mut config = config.clone();
        config.validate()?;
        problem.material.validate()?;
        let cloud = &problem.cloud;
        let n = cloud.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty node cloud".into()));
        }
        let positions = cloud.positions().to_vec();
        let index = PointIndex::new(&positions);
        let supports = build_supports(&index, config.stencil.n_support())?;
        let basis = config.stencil.basis();
        let m = config.stencil.m;

        let per_node: Vec<NodeStencils> = (0..n)
            .into_par_iter()
            .map(|l| -> Result<NodeStencils> {
                let sys = LocalSystem::new(&positions, &supports[l], &basis, m)?;
                let cols = supports[l].indices.clone();
                let make = |pos: Point, role: PointRole| {
                    let w = sys.weights(pos, &[Op::Dx, Op::Dy]);
                    let mut it = w.into_iter();
                    EvalPoint {
                        pos,
                        role,
                        cols: cols.clone(),
                        wx: it.next().unwrap(),
                        wy: it.next().unwrap(),
                    }
                };
                let p = positions[l];
                let h = cloud.spacing(l);
                let kind = cloud.kind(l);
                let node = make(p, PointRole::Node(l));

                let boundary = match cloud.bc(l) {
                    Some(BcTag::Traction) | Some(BcTag::FreeSlip) => {
                        let q = shifted_eval_point(p, cloud.normal(l), config.alpha_s, h);
                        if let (Some(dom), true) = (&problem.domain, config.alpha_s > 0.0) {
                            if !dom.contains_with_tolerance(q, INSIDE_TOL * h) {
                                return Err(Error::InvalidConfig(format!(
                                    "shifted point of boundary node {l} at ({}, {}) lies outside the domain; reduce alpha_s",
                                    q[0], q[1]
                                )));
                            }
                        }
                        Some(make(q, PointRole::Boundary(l)))
                    }
                    _ => None,
                };

                let mut secondary = Vec::new();
                let mut offset = 0.0;
                let mut reduced = false;
                if config.approach == Approach::Hybrid && kind != NodeKind::Boundary {
                    offset = config.alpha_d * h;
                    let steps: &[f64] = if config.p_fd == 4 { &[1.0, -1.0, 2.0, -2.0] } else { &[1.0, -1.0] };
                    let layout = |d: f64| -> Vec<Point> {
                        let mut v = Vec::new();
                        for axis in 0..2 {
                            for &s in steps {
                                let mut e = [0.0, 0.0];
                                e[axis] = s * d;
                                v.push(add(p, e));
                            }
                        }
                        v
                    };
                    if let Some(dom) = &problem.domain {
                        let mut tries = 0;
                        while layout(offset).iter().any(|q| !dom.contains_with_tolerance(*q, INSIDE_TOL * h)) {
                            if tries == 10 {
                                return Err(Error::Internal(format!(
                                    "secondary nodes of node {l} cannot be placed inside the domain"
                                )));
                            }
                            offset *= 0.5;
                            reduced = true;
                            tries += 1;
                        }
                    }
                    for (slot, q) in layout(offset).into_iter().enumerate() {
                        secondary.push(make(q, PointRole::Secondary { node: l, slot }));
                    }
                }

                let second = if config.approach == Approach::Direct && kind != NodeKind::Boundary {
                    let w = sys.weights(p, &[Op::Dxx, Op::Dxy, Op::Dyy]);
                    let mut it = w.into_iter();
                    Some([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
                } else {
                    None
                };
                Ok(NodeStencils {
                    node,
                    boundary,
                    secondary,
                    second,
                    offset,
                    reduced,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut points: Vec<EvalPoint> = Vec::new();
        let mut second = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        let mut reduced_offsets = 0;
        for s in &per_node {
            points.push(s.node.clone());
        }
        let mut boundary_point = vec![usize::MAX; n];
        for (l, s) in per_node.iter().enumerate() {
            if let Some(b) = &s.boundary {
                boundary_point[l] = points.len();
                points.push(b.clone());
            }
        }
        let mut secondary_start = vec![usize::MAX; n];
        for (l, s) in per_node.into_iter().enumerate() {
            if !s.secondary.is_empty() {
                secondary_start[l] = points.len();
                points.extend(s.secondary);
            }
            if s.reduced {
                reduced_offsets += 1;
            }
            second.push(s.second);
            offsets.push(s.offset);
        }
        if reduced_offsets > 0 {
            log::warn!("secondary-node offset reduced at {reduced_offsets} nodes to stay inside the domain");
        }

        let mu_lambda = problem.material.elastic_tensor()[0][0];
        let mut rows = Vec::with_capacity(2 * n);
        for l in 0..n {
            let lh = supports[l].scale;
            let nrm = cloud.normal(l);
            match cloud.bc(l) {
                None => {
                    for comp in 0..2 {
                        let terms = match config.approach {
                            Approach::Direct | Approach::Composed => {
                                let pt = &points[l];
                                pt.cols
                                    .iter()
                                    .zip(pt.wx.iter().zip(&pt.wy))
                                    .map(|(&j, (&wx, &wy))| StressTerm {
                                        point: j,
                                        c: if comp == 0 { [wx, 0.0, wy] } else { [0.0, wy, wx] },
                                    })
                                    .collect()
                            }
                            Approach::Hybrid => hybrid_terms(secondary_start[l], offsets[l], config.p_fd, comp),
                        };
                        let direct = (config.approach == Approach::Direct).then_some((l, comp));
                        rows.push(Row::Stress {
                            terms,
                            direct,
                            load: RowLoad::None,
                        });
                    }
                }
                Some(BcTag::Dirichlet) => {
                    let s = mu_lambda / (lh * lh);
                    for comp in 0..2 {
                        rows.push(Row::Displacement {
                            terms: vec![(2 * l + comp, s)],
                            load: RowLoad::Dirichlet { node: l, comp, scale: s },
                        });
                    }
                }
                Some(BcTag::Traction) => {
                    let bp = boundary_point[l];
                    let s = 1.0 / lh;
                    rows.push(Row::Stress {
                        terms: vec![StressTerm {
                            point: bp,
                            c: [s * nrm[0], 0.0, s * nrm[1]],
                        }],
                        direct: None,
                        load: RowLoad::Traction { node: l, comp: 0, scale: s },
                    });
                    rows.push(Row::Stress {
                        terms: vec![StressTerm {
                            point: bp,
                            c: [0.0, s * nrm[1], s * nrm[0]],
                        }],
                        direct: None,
                        load: RowLoad::Traction { node: l, comp: 1, scale: s },
                    });
                }
                Some(BcTag::FreeSlip) => {
                    let sd = mu_lambda / (lh * lh);
                    rows.push(Row::Displacement {
                        terms: vec![(2 * l, sd * nrm[0]), (2 * l + 1, sd * nrm[1])],
                        load: RowLoad::None,
                    });
                    let s = 1.0 / lh;
                    let t = [-nrm[1], nrm[0]];
                    rows.push(Row::Stress {
                        terms: vec![StressTerm {
                            point: boundary_point[l],
                            c: [
                                s * t[0] * nrm[0],
                                s * t[1] * nrm[1],
                                s * (t[0] * nrm[1] + t[1] * nrm[0]),
                            ],
                        }],
                        direct: None,
                        load: RowLoad::None,
                    });
                }
            }
        }

        let mut active = vec![false; points.len()];
        for row in &rows {
            if let Row::Stress { terms, direct, .. } = row {
                for t in terms {
                    active[t.point] = true;
                }
                if let Some((node, _)) = direct {
                    for &j in &points[*node].cols {
                        active[j] = true;
                    }
                }
            }
        }

        let mut disc = Discretization {
            config,
            n_nodes: n,
            positions,
            normals: (0..n).map(|l| cloud.normal(l)).collect(),
            bc: (0..n).map(|l| cloud.bc(l)).collect(),
            supports,
            points,
            active,
            rows,
            second,
            direct_elastic: Vec::new(),
            offsets,
            pattern: SparsePattern::new(0, 0, Vec::new(), Vec::new())?,
            reduced_offsets,
        };
        let elastic = Tangent {
            d: problem.material.elastic_tensor(),
            plastic: false,
        };
        let tangents = vec![elastic; disc.points.len()];
        let entries = disc.row_entries_all(&tangents);
        let mut prow = Vec::new();
        let mut pcol = Vec::new();
        for (r, e) in entries.iter().enumerate() {
            for &(c, _) in e {
                prow.push(r);
                pcol.push(c);
            }
        }
        disc.pattern = SparsePattern::new(2 * n, 2 * n, prow, pcol)?;
        disc.direct_elastic = disc
            .rows
            .iter()
            .zip(entries)
            .map(|(row, e)| matches!(row, Row::Stress { direct: Some(_), .. }).then_some(e))
            .collect();
        Ok(disc)
    }

    pub fn config(&self) -> &ApproachConfig {
        &self.config
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_nodes
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn normal(&self, l: usize) -> Point {
        self.normals[l]
    }

    pub fn supports(&self) -> &[Support] {
        &self.supports
    }

    pub fn points(&self) -> &[EvalPoint] {
        &self.points
    }

    pub fn is_active(&self, point: usize) -> bool {
        self.active[point]
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn pattern(&self) -> &SparsePattern {
        &self.pattern
    }

    /// Effective secondary-node offset `δ` at node `l` (0 when none).
    pub fn secondary_offset(&self, l: usize) -> f64 {
        self.offsets[l]
    }

    /// Number of nodes whose secondary-node offset had to be reduced.
    pub fn reduced_offsets(&self) -> usize {
        self.reduced_offsets
    }

    pub fn initial_states(&self) -> Vec<MaterialState> {
        vec![MaterialState::default(); self.points.len()]
    }

    /// External load vector (scaled like the rows) at load parameter `load`.
    pub fn external_force(&self, problem: &Problem, load: f64) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| match row.load() {
                RowLoad::None => 0.0,
                RowLoad::Traction { node, comp, scale } => {
                    scale * (problem.traction)(self.positions[node], self.normals[node], load)[comp]
                }
                RowLoad::Dirichlet { node, comp, scale } => {
                    scale * (problem.dirichlet)(self.positions[node], self.normals[node], load)[comp]
                }
            })
            .collect()
    }

    /// Updates every evaluation point from its committed state with the strain
    /// of `du` and returns the residual `f_int − f_ext` for displacement
    /// `u_committed + du`.
    pub fn evaluate(
        &self,
        material: &Material,
        committed: &[MaterialState],
        u_committed: &[f64],
        du: &[f64],
        f_ext: &[f64],
    ) -> Result<Evaluation> {
        let updates: Vec<_> = self
            .points
            .par_iter()
            .zip(committed.par_iter())
            .enumerate()
            .map(|(k, (pt, st))| {
                let de = pt.strain(du);
                return_map(st, &de, material).map_err(|e| match e {
                    Error::MaterialNonConvergence { residual, .. } => Error::MaterialNonConvergence { point: k, residual },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut states = Vec::with_capacity(updates.len());
        let mut tangents = Vec::with_capacity(updates.len());
        let mut dgamma = Vec::with_capacity(updates.len());
        for u in updates {
            states.push(u.state);
            tangents.push(u.tangent);
            dgamma.push(u.dgamma);
        }
        let residual = self
            .rows
            .par_iter()
            .zip(f_ext.par_iter())
            .enumerate()
            .map(|(r, (row, fe))| {
                let internal = match row {
                    // while the whole stencil is elastic the direct row is the
                    // linear operator its tangent is built from
                    Row::Stress {
                        direct: Some((l, _)), ..
                    } if self.points[*l].cols.iter().all(|&j| states[j].epbar == 0.0) => self.direct_elastic[r]
                        .as_ref()
                        .expect("direct row entries")
                        .iter()
                        .map(|&(dof, c)| c * (u_committed[dof] + du[dof]))
                        .sum::<f64>(),
                    Row::Stress { terms, .. } => terms
                        .iter()
                        .map(|t| {
                            let s = &states[t.point].stress;
                            t.c[0] * s[0] + t.c[1] * s[1] + t.c[2] * s[3]
                        })
                        .sum::<f64>(),
                    Row::Displacement { terms, .. } => terms
                        .iter()
                        .map(|&(dof, c)| c * (u_committed[dof] + du[dof]))
                        .sum::<f64>(),
                };
                internal - fe
            })
            .collect();
        Ok(Evaluation {
            states,
            tangents,
            dgamma,
            residual,
        })
    }

    /// Matrix values in pattern order for the given point tangents.
    pub fn tangent_values(&self, tangents: &[Tangent]) -> Vec<f64> {
        let entries = self.row_entries_all(tangents);
        let mut vals = Vec::with_capacity(self.pattern.len());
        for e in entries {
            vals.extend(e.into_iter().map(|(_, v)| v));
        }
        debug_assert_eq!(vals.len(), self.pattern.len());
        vals
    }

    fn row_entries_all(&self, tangents: &[Tangent]) -> Vec<Vec<(usize, f64)>> {
        let nd = self.n_dofs();
        (0..self.rows.len())
            .into_par_iter()
            .map_init(
                || (vec![0.0f64; nd], vec![false; nd], Vec::<usize>::new()),
                |(acc, seen, touched), r| self.row_entries(r, tangents, acc, seen, touched),
            )
            .collect()
    }

    /// Unique `(column, value)` entries of one row, sorted by column. The
    /// column set depends only on structure, never on values.
    fn row_entries(
        &self,
        r: usize,
        tangents: &[Tangent],
        acc: &mut [f64],
        seen: &mut [bool],
        touched: &mut Vec<usize>,
    ) -> Vec<(usize, f64)> {
        let mut put = |c: usize, v: f64| {
            if !seen[c] {
                seen[c] = true;
                touched.push(c);
            }
            acc[c] += v;
        };
        match &self.rows[r] {
            Row::Displacement { terms, .. } => {
                for &(dof, c) in terms {
                    put(dof, c);
                }
            }
            Row::Stress { terms, direct: None, .. } => {
                for t in terms {
                    let d = &tangents[t.point].d;
                    let g: [f64; 4] = std::array::from_fn(|k| {
                        (0..3).map(|a| t.c[a] * d[STRESS_COMPONENTS[a]][k]).sum()
                    });
                    let pt = &self.points[t.point];
                    for ((&j, &wx), &wy) in pt.cols.iter().zip(&pt.wx).zip(&pt.wy) {
                        put(2 * j, g[0] * wx + g[3] * wy);
                        put(2 * j + 1, g[1] * wy + g[3] * wx);
                    }
                }
            }
            Row::Stress {
                direct: Some((l, comp)),
                ..
            } => {
                let (ra, rb) = if *comp == 0 { (0, 3) } else { (3, 1) };
                let pt = &self.points[*l];
                let d = &tangents[*l].d;
                // divergence of the nodal tangent field
                let mut g = [0.0; 4];
                for ((&j, &wx), &wy) in pt.cols.iter().zip(&pt.wx).zip(&pt.wy) {
                    let dj = &tangents[j].d;
                    for k in 0..4 {
                        g[k] += wx * dj[ra][k] + wy * dj[rb][k];
                    }
                }
                let [wxx, wxy, wyy] = self.second[*l].as_ref().expect("direct stencil at interior node");
                for (s, &j) in pt.cols.iter().enumerate() {
                    let (wx, wy) = (pt.wx[s], pt.wy[s]);
                    let (xx, xy, yy) = (wxx[s], wxy[s], wyy[s]);
                    put(
                        2 * j,
                        g[0] * wx + g[3] * wy + d[ra][0] * xx + d[ra][3] * xy + d[rb][0] * xy + d[rb][3] * yy,
                    );
                    put(
                        2 * j + 1,
                        g[1] * wy + g[3] * wx + d[ra][1] * xy + d[ra][3] * xx + d[rb][1] * yy + d[rb][3] * xy,
                    );
                }
            }
        }
        touched.sort_unstable();
        let out: Vec<(usize, f64)> = touched.iter().map(|&c| (c, acc[c])).collect();
        for &c in touched.iter() {
            acc[c] = 0.0;
            seen[c] = false;
        }
        touched.clear();
        out
    }

    /// Stress map `K_σ` (3 rows per node: σ11, σ22, σ12) and divergence map
    /// `K_div` (2 rows per node over those stresses) for interior rows, as
    /// coordinate lists `(row, col, value)`.
    pub fn composed_factors(&self, tangents: &[Tangent]) -> (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>) {
        let mut ks = Vec::new();
        for j in 0..self.n_nodes {
            let pt = &self.points[j];
            let d = &tangents[j].d;
            for (a, &va) in STRESS_COMPONENTS.iter().enumerate() {
                for ((&q, &wx), &wy) in pt.cols.iter().zip(&pt.wx).zip(&pt.wy) {
                    ks.push((3 * j + a, 2 * q, d[va][0] * wx + d[va][3] * wy));
                    ks.push((3 * j + a, 2 * q + 1, d[va][1] * wy + d[va][3] * wx));
                }
            }
        }
        let mut kd = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            if !self.is_interior_row(r) {
                continue;
            }
            if let Row::Stress { terms, .. } = row {
                for t in terms {
                    for a in 0..3 {
                        kd.push((r, 3 * t.point + a, t.c[a]));
                    }
                }
            }
        }
        (ks, kd)
    }

    /// Rows that are interior collocation rows (not boundary conditions).
    pub fn is_interior_row(&self, r: usize) -> bool {
        self.bc[r / 2].is_none()
    }

    pub fn bc(&self, l: usize) -> Option<BcTag> {
        self.bc[l]
    }
}

/// Finite-difference divergence over the secondary nodes of one node.
fn hybrid_terms(start: usize, delta: f64, p_fd: u32, comp: usize) -> Vec<StressTerm> {
    // slot layout per axis: +δ, −δ (and +2δ, −2δ for fourth order)
    let (per_axis, coef): (usize, Vec<f64>) = if p_fd == 4 {
        (4, vec![8.0 / (12.0 * delta), -8.0 / (12.0 * delta), -1.0 / (12.0 * delta), 1.0 / (12.0 * delta)])
    } else {
        (2, vec![1.0 / (2.0 * delta), -1.0 / (2.0 * delta)])
    };
    let mut terms = Vec::with_capacity(2 * per_axis);
    for axis in 0..2 {
        for (k, &c) in coef.iter().enumerate() {
            // f1 = ∂σ11/∂x + ∂σ12/∂y, f2 = ∂σ12/∂x + ∂σ22/∂y
            let sel = match (comp, axis) {
                (0, 0) => [c, 0.0, 0.0],
                (0, _) => [0.0, 0.0, c],
                (_, 0) => [0.0, 0.0, c],
                _ => [0.0, c, 0.0],
            };
            terms.push(StressTerm {
                point: start + axis * per_axis + k,
                c: sel,
            });
        }
    }
    terms
}
