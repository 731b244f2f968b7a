//! Domain description and scattered node generation.

mod domain;
mod nodes;

pub use domain::{
    density_from_spacing, hex_factor, spacing_from_density, BcTag, CurveFn, DensityFn, DomainSpec,
    Segment,
};
pub use nodes::{
    fill_and_relax_interior, fill_and_relax_with, generate_nodes, place_boundary_nodes,
    place_inner_boundary_nodes, NodeCloud, NodeKind, RelaxSettings,
};
