//! Built-in problem instances.

use nalgebra::{DMatrix, DVector};

use crate::system::{synthesize_vertex_controls, InvariantSetSpec, PolytopicSystem};
use crate::{Polytope, Result};

/// Two-state, single-input system with two generators and a four-facet
/// contractive set (`λ = 0.6`, `|u| ≤ 2`).
pub fn planar_pair() -> Result<(PolytopicSystem, InvariantSetSpec)> {
    let a = vec![
        DMatrix::from_row_slice(2, 2, &[0.32, 0.17, 0.32, 0.86]),
        DMatrix::from_row_slice(2, 2, &[0.46, -0.16, 0.03, 0.63]),
    ];
    let b = vec![
        DMatrix::from_column_slice(2, 1, &[0.06, 0.68]),
        DMatrix::from_column_slice(2, 1, &[0.06, 0.65]),
    ];
    let sys = PolytopicSystem::new(a, b)?;
    let set = Polytope::from_gauge(DMatrix::from_row_slice(
        4,
        2,
        &[1.0, -0.54, -0.37, 1.0, -1.0, 0.54, 0.37, -1.0],
    ))?
    .with_vertices()?;
    let inputs = Polytope::centered_box(&[2.0])?;
    let lambda = 0.6;
    let controls = synthesize_vertex_controls(&sys, &set, lambda, &inputs)?;
    let spec = InvariantSetSpec::new(set, lambda, inputs, controls.controls)?;
    Ok((sys, spec))
}

/// `x⁺ = 0.5 x + 0·u` on the unit box: every controller is identically zero.
pub fn inert_box() -> Result<(PolytopicSystem, InvariantSetSpec)> {
    let sys = PolytopicSystem::new(vec![DMatrix::identity(2, 2) * 0.5], vec![DMatrix::zeros(2, 1)])?;
    let set = Polytope::unit_box(2).with_vertices()?;
    let inputs = Polytope::centered_box(&[1.0])?;
    let zeros = vec![DVector::zeros(1); 4];
    let spec = InvariantSetSpec::new(set, 0.5, inputs, zeros)?;
    Ok((sys, spec))
}
