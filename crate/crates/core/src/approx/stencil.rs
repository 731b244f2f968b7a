use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::basis::{phs_derivatives, Basis};
use super::support::Support;
use crate::error::{Error, Result};
use crate::point::{sub, Point};

/// Reciprocal condition number below which a local system counts as singular.
const RCOND_MIN: f64 = 1e-14;

/// Linear differential operators of order ≤ 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Identity,
    Dx,
    Dy,
    Dxx,
    Dxy,
    Dyy,
    Laplacian,
}

/// Scalar operators stored in a [`StencilWeights`], in slot order.
pub const SCALAR_OPS: [Op; 6] = [Op::Identity, Op::Dx, Op::Dy, Op::Dxx, Op::Dxy, Op::Dyy];

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Identity => "I",
            Op::Dx => "dx",
            Op::Dy => "dy",
            Op::Dxx => "dxx",
            Op::Dxy => "dxy",
            Op::Dyy => "dyy",
            Op::Laplacian => "lap",
        }
    }

    pub fn order(self) -> i32 {
        match self {
            Op::Identity => 0,
            Op::Dx | Op::Dy => 1,
            _ => 2,
        }
    }

    /// Combination of `[f, fx, fy, fxx, fxy, fyy]` this operator picks.
    fn apply(self, v: &[f64; 6]) -> f64 {
        match self {
            Op::Identity => v[0],
            Op::Dx => v[1],
            Op::Dy => v[2],
            Op::Dxx => v[3],
            Op::Dxy => v[4],
            Op::Dyy => v[5],
            Op::Laplacian => v[3] + v[5],
        }
    }
}

/// `[Φ P; Pᵀ 0]` for a support, with monomials in coordinates shifted to the
/// center and scaled by the support scale.
pub fn assemble_interpolation_matrix(
    positions: &[Point],
    support: &Support,
    basis: &Basis,
    m: u32,
) -> DMatrix<f64> {
    let n = support.len();
    let mm = basis.len();
    let s = support.scale;
    let c = positions[support.center];
    let mut a = DMatrix::<f64>::zeros(n + mm, n + mm);
    for (i, &gi) in support.indices.iter().enumerate() {
        let pi = positions[gi];
        for (j, &gj) in support.indices.iter().enumerate().skip(i + 1) {
            let v = phs_derivatives(sub(pi, positions[gj]), s, m)[0];
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        let d = sub(pi, c);
        for k in 0..mm {
            let v = basis.eval(k, d[0] / s, d[1] / s)[0];
            a[(i, n + k)] = v;
            a[(n + k, i)] = v;
        }
    }
    a
}

/// Factored local system of one support; yields weights at any point.
pub struct LocalSystem {
    support: Support,
    center: Point,
    nodes: Vec<Point>,
    basis: Basis,
    m: u32,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl LocalSystem {
    pub fn new(positions: &[Point], support: &Support, basis: &Basis, m: u32) -> Result<Self> {
        if m % 2 == 0 {
            return Err(Error::InvalidConfig(format!("PHS order must be odd, got {m}")));
        }
        let singular = |rcond: f64| Error::SingularStencil {
            node: support.center,
            rcond,
        };
        if support.len() < basis.len() || !(support.scale > 0.0) {
            return Err(singular(0.0));
        }
        let a = assemble_interpolation_matrix(positions, support, basis, m);
        let norm_a = one_norm(&a);
        let lu = a.lu();
        let inv = lu.try_inverse().ok_or_else(|| singular(0.0))?;
        let rcond = 1.0 / (norm_a * one_norm(&inv));
        if !(rcond >= RCOND_MIN) {
            return Err(singular(if rcond.is_finite() { rcond } else { 0.0 }));
        }
        Ok(LocalSystem {
            support: support.clone(),
            center: positions[support.center],
            nodes: support.indices.iter().map(|&j| positions[j]).collect(),
            basis: basis.clone(),
            m,
            lu,
        })
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    fn rhs(&self, eval: Point, ops: &[Op]) -> DMatrix<f64> {
        let n = self.nodes.len();
        let mm = self.basis.len();
        let s = self.support.scale;
        let mut b = DMatrix::<f64>::zeros(n + mm, ops.len());
        for (i, &pi) in self.nodes.iter().enumerate() {
            let v = phs_derivatives(sub(eval, pi), s, self.m);
            for (c, op) in ops.iter().enumerate() {
                b[(i, c)] = op.apply(&v);
            }
        }
        let d = sub(eval, self.center);
        for k in 0..mm {
            let mut v = self.basis.eval(k, d[0] / s, d[1] / s);
            v[1] /= s;
            v[2] /= s;
            for q in &mut v[3..] {
                *q /= s * s;
            }
            for (c, op) in ops.iter().enumerate() {
                b[(n + k, c)] = op.apply(&v);
            }
        }
        b
    }

    /// Weights over the support nodes, one vector per operator.
    pub fn weights(&self, eval: Point, ops: &[Op]) -> Vec<Vec<f64>> {
        let b = self.rhs(eval, ops);
        let x = self.lu.solve(&b).expect("factorization checked nonsingular");
        let n = self.nodes.len();
        (0..ops.len())
            .map(|c| (0..n).map(|i| x[(i, c)]).collect())
            .collect()
    }

    /// All scalar operator weights at `eval`.
    pub fn stencil(&self, eval: Point) -> StencilWeights {
        let w = self.weights(eval, &SCALAR_OPS);
        let mut it = w.into_iter();
        StencilWeights {
            indices: self.support.indices.clone(),
            eval,
            w: std::array::from_fn(|_| it.next().unwrap()),
        }
    }

    /// Interpolated value at `eval` from nodal samples indexed globally.
    pub fn interpolate(&self, eval: Point, values: &[f64]) -> f64 {
        let w = &self.weights(eval, &[Op::Identity])[0];
        self.support
            .indices
            .iter()
            .zip(w)
            .map(|(&j, wj)| wj * values[j])
            .sum()
    }
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Weights of one operator at one evaluation point.
pub fn operator_weights(
    positions: &[Point],
    support: &Support,
    basis: &Basis,
    m: u32,
    op: Op,
    eval: Point,
) -> Result<Vec<f64>> {
    let sys = LocalSystem::new(positions, support, basis, m)?;
    Ok(sys.weights(eval, &[op]).pop().unwrap())
}

/// Scalar operator weights of one evaluation point over its support.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilWeights {
    pub indices: Vec<usize>,
    pub eval: Point,
    /// Indexed like [`SCALAR_OPS`].
    pub w: [Vec<f64>; 6],
}

impl StencilWeights {
    pub fn get(&self, op: Op) -> Vec<f64> {
        match op {
            Op::Laplacian => self.w[3].iter().zip(&self.w[5]).map(|(a, b)| a + b).collect(),
            _ => self.w[SCALAR_OPS.iter().position(|o| *o == op).unwrap()].clone(),
        }
    }

    pub fn identity(&self) -> &[f64] {
        &self.w[0]
    }

    pub fn dx(&self) -> &[f64] {
        &self.w[1]
    }

    pub fn dy(&self) -> &[f64] {
        &self.w[2]
    }

    pub fn dxx(&self) -> &[f64] {
        &self.w[3]
    }

    pub fn dxy(&self) -> &[f64] {
        &self.w[4]
    }

    pub fn dyy(&self) -> &[f64] {
        &self.w[5]
    }

    /// `Σ_j w_j f_j` for a global nodal field.
    pub fn apply(&self, op: Op, values: &[f64]) -> f64 {
        self.get(op)
            .iter()
            .zip(&self.indices)
            .map(|(w, &j)| w * values[j])
            .sum()
    }
}

/// Text rows `l op j weight` for a list of stencils labelled by `l`.
pub fn write_weights_dump<'a>(stencils: impl IntoIterator<Item = (usize, &'a StencilWeights)>) -> String {
    let mut s = String::from("# l op j weight\n");
    for (l, st) in stencils {
        for (k, op) in SCALAR_OPS.iter().enumerate() {
            for (j, w) in st.indices.iter().zip(&st.w[k]) {
                writeln!(s, "{l} {} {j} {w:.16e}", op.name()).unwrap();
            }
        }
    }
    s
}
