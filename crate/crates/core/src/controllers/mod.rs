//! Stabilizing piecewise affine state feedbacks built from the vertex controls.

mod minimal_selection;
mod regions;

use nalgebra::{DMatrix, DVector};

use crate::geometry::GEOM_TOL;
use crate::system::InvariantSetSpec;
use crate::{Error, Polytope, Result, Simplex};

pub use minimal_selection::MinimalSelectionLaw;
pub use regions::{AffineKkt, ParametricQp, Partition, Region};

/// Linear law on each simplex of the fan: `u = U_h X_h⁻¹ x`.
#[derive(Clone, Debug)]
pub struct SimplexGainLaw {
    set: Polytope,
    simplices: Vec<Simplex>,
    gains: Vec<DMatrix<f64>>,
}

impl SimplexGainLaw {
    pub fn new(spec: &InvariantSetSpec) -> Result<Self> {
        let simplices = spec.set.triangulate_fan()?;
        let m = spec.vertex_controls.first().map_or(0, |u| u.len());
        if m == 0 {
            return Err(Error::Invalid("vertex controls are required".into()));
        }
        let gains = simplices
            .iter()
            .map(|s| {
                let u = DMatrix::from_fn(m, s.vertex_ids.len(), |i, k| spec.vertex_controls[s.vertex_ids[k]][i]);
                u * &s.x_inv
            })
            .collect();
        Ok(Self { set: spec.set.clone(), simplices, gains })
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn gains(&self) -> &[DMatrix<f64>] {
        &self.gains
    }

    pub fn set(&self) -> &Polytope {
        &self.set
    }

    /// Index of the first simplex containing `x`.
    pub fn locate(&self, x: &DVector<f64>) -> Result<usize> {
        let g = self.set.gauge(x)?;
        if g > 1.0 + 1e-7 {
            return Err(Error::OutsideSet { gauge: g });
        }
        let tol = 1e-9 * (1.0 + x.amax());
        if let Some(h) = self.simplices.iter().position(|s| s.barycentric(x).iter().all(|&c| c >= -tol)) {
            return Ok(h);
        }
        // rounding near a shared edge: take the least negative coordinate
        let score = |s: &Simplex| s.barycentric(x).iter().cloned().fold(f64::INFINITY, f64::min);
        Ok((0..self.simplices.len())
            .max_by(|&a, &b| score(&self.simplices[a]).total_cmp(&score(&self.simplices[b])))
            .unwrap_or(0))
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.gains[self.locate(x)?] * x)
    }

    /// One region per simplex.
    pub fn partition(&self) -> Result<Partition> {
        let n = self.set.dim();
        let norm = self.set.normalized();
        let mut regions = Vec::new();
        for (h, (s, g)) in self.simplices.iter().zip(&self.gains).enumerate() {
            // barycentric coordinates ≥ 0 and the supporting facet
            let mut f = DMatrix::zeros(n + 1, n);
            f.rows_mut(0, n).copy_from(&(-&s.x_inv));
            f.row_mut(n).copy_from(&norm.f().row(s.facet_index));
            let mut rhs = DVector::zeros(n + 1);
            rhs[n] = 1.0;
            let mut vertices = vec![DVector::zeros(n)];
            vertices.extend(s.x.column_iter().map(|c| c.into_owned()));
            regions.push(Region {
                sector: s.facet_index,
                active: vec![h],
                gain: g.clone(),
                offset: DVector::zeros(g.nrows()),
                f,
                rhs,
                vertices,
            });
        }
        Ok(Partition { regions })
    }
}

/// `u = Σ_v γ_v(x) u_v` with `γ` the least-norm convex weights reproducing `x`.
#[derive(Clone, Debug)]
pub struct VertexInterpLaw {
    set: Polytope,
    /// Vertices as columns.
    points: DMatrix<f64>,
    /// Vertex controls as columns.
    controls: DMatrix<f64>,
}

impl VertexInterpLaw {
    pub fn new(spec: &InvariantSetSpec) -> Result<Self> {
        let verts = spec.vertices();
        if spec.vertex_controls.len() != verts.len() {
            return Err(Error::Invalid("one control per vertex is required".into()));
        }
        let n = spec.set.dim();
        let m = spec.vertex_controls[0].len();
        let points = DMatrix::from_fn(n, verts.len(), |i, k| verts[k][i]);
        let controls = DMatrix::from_fn(m, verts.len(), |i, k| spec.vertex_controls[k][i]);
        Ok(Self { set: spec.set.clone(), points, controls })
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn controls(&self) -> &DMatrix<f64> {
        &self.controls
    }

    pub fn set(&self) -> &Polytope {
        &self.set
    }

    /// `min ½‖γ‖²  s.t.  X γ = x,  1ᵀγ = 1,  γ ≥ 0` as a parametric QP in `x`.
    pub fn parametric_qp(&self) -> ParametricQp {
        let n = self.points.nrows();
        let nv = self.points.ncols();
        let mut eq = DMatrix::zeros(n + 1, nv);
        eq.rows_mut(0, n).copy_from(&self.points);
        eq.row_mut(n).fill(1.0);
        let mut eq0 = DVector::zeros(n + 1);
        eq0[n] = 1.0;
        let mut eq_x = DMatrix::zeros(n + 1, n);
        eq_x.rows_mut(0, n).fill_with_identity();
        ParametricQp {
            hess: DMatrix::identity(nv, nv),
            lin_x: DMatrix::zeros(nv, n),
            eq,
            eq0,
            eq_x,
            ineq: -DMatrix::identity(nv, nv),
            ineq0: DVector::zeros(nv),
            ineq_x: DMatrix::zeros(nv, n),
        }
    }

    pub fn weights(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.set.gauge(x)?;
        if g > 1.0 + 1e-7 {
            return Err(Error::OutsideSet { gauge: g });
        }
        match self.parametric_qp().solve_at(x) {
            Ok(s) => Ok(s.x.map(|v| v.max(0.0))),
            Err(Error::QpInfeasible) => Err(Error::OutsideSet { gauge: g }),
            Err(e) => Err(e),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.controls * self.weights(x)?)
    }

    /// Critical regions over `S` (planar sets only).
    pub fn partition(&self) -> Result<Partition> {
        let qp = self.parametric_qp();
        let norm = self.set.normalized();
        let zero = DMatrix::zeros(self.controls.nrows(), self.points.nrows());
        let regions = regions::enumerate_planar(
            &qp,
            norm.f(),
            norm.rhs(),
            regions::OutputMap { v: &self.controls, x: &zero },
            0,
        )?;
        Ok(Partition { regions })
    }
}

/// The three controllers behind one interface.
#[derive(Clone, Debug)]
pub enum PwaController {
    SimplexGain(SimplexGainLaw),
    VertexInterp(VertexInterpLaw),
    MinimalSelection(MinimalSelectionLaw),
}

impl PwaController {
    pub fn kind(&self) -> &'static str {
        match self {
            PwaController::SimplexGain(_) => "simplex_gain",
            PwaController::VertexInterp(_) => "vertex_interp",
            PwaController::MinimalSelection(_) => "minimal_selection",
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            PwaController::SimplexGain(c) => c.eval(x),
            PwaController::VertexInterp(c) => c.eval(x),
            PwaController::MinimalSelection(c) => c.eval(x),
        }
    }

    pub fn set(&self) -> &Polytope {
        match self {
            PwaController::SimplexGain(c) => c.set(),
            PwaController::VertexInterp(c) => c.set(),
            PwaController::MinimalSelection(c) => c.set(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            PwaController::SimplexGain(c) => c.gains[0].nrows(),
            PwaController::VertexInterp(c) => c.controls.nrows(),
            PwaController::MinimalSelection(c) => c.input_dim(),
        }
    }

    pub fn partition(&self) -> Result<Partition> {
        match self {
            PwaController::SimplexGain(c) => c.partition(),
            PwaController::VertexInterp(c) => c.partition(),
            PwaController::MinimalSelection(c) => c.partition(),
        }
    }
}

pub(crate) fn within_set(set: &Polytope, x: &DVector<f64>) -> Result<f64> {
    let g = set.gauge(x)?;
    if g > 1.0 + 1e-7 + GEOM_TOL {
        return Err(Error::OutsideSet { gauge: g });
    }
    Ok(g)
}
