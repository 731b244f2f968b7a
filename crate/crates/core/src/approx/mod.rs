//! Local supports, augmented polyharmonic-spline interpolation and operator
//! weights at arbitrary evaluation points.

mod basis;
mod stencil;
mod support;

pub use basis::{phs_derivatives, phs_value, Basis};
pub use stencil::{
    assemble_interpolation_matrix, operator_weights, write_weights_dump, LocalSystem, Op,
    StencilWeights, SCALAR_OPS,
};
pub use support::{build_support, build_supports, Support};

/// Parameters shared by every stencil of a discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilParams {
    /// PHS order (odd).
    pub m: u32,
    /// Augmentation degree.
    pub degree: u32,
    /// Support size; `None` means `2M + 1`.
    pub support_size: Option<usize>,
}

impl StencilParams {
    pub fn new(m: u32, degree: u32) -> Self {
        StencilParams {
            m,
            degree,
            support_size: None,
        }
    }

    pub fn basis(&self) -> Basis {
        Basis::new(self.degree)
    }

    pub fn n_support(&self) -> usize {
        self.support_size
            .unwrap_or_else(|| 2 * Basis::count(self.degree) + 1)
    }
}

impl Default for StencilParams {
    fn default() -> Self {
        StencilParams::new(3, 2)
    }
}
