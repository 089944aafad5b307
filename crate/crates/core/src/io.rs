//! JSON documents for polytopes, systems, networks, controllers and partitions.
//!
//! Matrices are row-major nested arrays. Doubles are written in shortest
//! round-trip form and parsed exactly, so save/load is lossless.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::controllers::{MinimalSelectionLaw, Partition, PwaController, Region, SimplexGainLaw, VertexInterpLaw};
use crate::geometry::polygon_vertices;
use crate::relu::{Layer, ReluNetwork};
use crate::system::{InvariantSetSpec, PolytopicSystem};
use crate::{Error, Polytope, Result};

pub fn mat_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `cols` is used only when `rows` is empty.
pub fn rows_to_mat(rows: &[Vec<f64>], cols: usize, what: &str) -> Result<DMatrix<f64>> {
    let c = rows.first().map_or(cols, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Dimension(format!("{what}: ragged rows")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("{what}: non-finite entry")));
    }
    Ok(DMatrix::from_fn(rows.len(), c, |i, k| rows[i][k]))
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn finite_vec(v: &[f64], what: &str) -> Result<DVector<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid(format!("{what}: non-finite entry")));
    }
    Ok(DVector::from_column_slice(v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeDoc {
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    /// Omitted for gauge form (all ones).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
}

impl PolytopeDoc {
    pub fn of(p: &Polytope) -> Self {
        let rhs = (p.rhs().iter().any(|&r| r != 1.0)).then(|| vec_of(p.rhs()));
        let vertices = p.cached_vertices().map(|vs| vs.iter().map(vec_of).collect());
        Self { f: mat_to_rows(p.f()), rhs, vertices }
    }

    pub fn build(&self) -> Result<Polytope> {
        let f = rows_to_mat(&self.f, 0, "F")?;
        let rhs = match &self.rhs {
            Some(r) => finite_vec(r, "rhs")?,
            None => DVector::from_element(f.nrows(), 1.0),
        };
        let p = Polytope::new(f, rhs)?;
        if self.vertices.is_some() {
            p.with_vertices()
        } else {
            Ok(p)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDoc {
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "S")]
    pub set: PolytopeDoc,
    #[serde(rename = "U")]
    pub inputs: PolytopeDoc,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_controls: Option<Vec<Vec<f64>>>,
}

impl SystemDoc {
    pub fn of(sys: &PolytopicSystem, spec: &InvariantSetSpec) -> Self {
        let g = sys.generators();
        Self {
            a: (0..g).map(|i| mat_to_rows(sys.a(i))).collect(),
            b: (0..g).map(|i| mat_to_rows(sys.b(i))).collect(),
            set: PolytopeDoc::of(&spec.set),
            inputs: PolytopeDoc::of(&spec.inputs),
            lambda: spec.lambda,
            vertex_controls: (!spec.vertex_controls.is_empty()).then(|| spec.vertex_controls.iter().map(vec_of).collect()),
        }
    }

    pub fn build(&self) -> Result<(PolytopicSystem, InvariantSetSpec)> {
        let a = self.a.iter().map(|m| rows_to_mat(m, 0, "A")).collect::<Result<Vec<_>>>()?;
        let n = a.first().map_or(0, |m| m.nrows());
        let b = self.b.iter().map(|m| rows_to_mat(m, 0, "B")).collect::<Result<Vec<_>>>()?;
        let sys = PolytopicSystem::new(a, b)?;
        let controls = match &self.vertex_controls {
            Some(us) => us.iter().map(|u| finite_vec(u, "vertex_controls")).collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let set = self.set.build()?;
        if set.dim() != n {
            return Err(Error::Dimension("S does not match the state dimension".into()));
        }
        let spec = InvariantSetSpec::new(set, self.lambda, self.inputs.build()?, controls)?;
        Ok((sys, spec))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDoc {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub layers: Vec<LayerDoc>,
}

impl NetworkDoc {
    pub fn of(net: &ReluNetwork) -> Self {
        let layers = net.layers().iter().map(|l| LayerDoc { w: mat_to_rows(&l.weights), b: vec_of(&l.bias) }).collect();
        Self { layers }
    }

    pub fn build(&self) -> Result<ReluNetwork> {
        let layers = self
            .layers
            .iter()
            .map(|l| Ok(Layer { weights: rows_to_mat(&l.w, 0, "W")?, bias: finite_vec(&l.b, "b")? }))
            .collect::<Result<Vec<_>>>()?;
        ReluNetwork::new(layers)
    }
}

/// Controller variant and the weights it needs beyond the system file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerDoc {
    SimplexGain,
    VertexInterp,
    MinimalSelection {
        #[serde(rename = "H")]
        hess: Vec<Vec<f64>>,
        #[serde(rename = "P")]
        cross: Vec<Vec<f64>>,
    },
}

impl ControllerDoc {
    /// Minimal selection with `H = I`, `P = 0`.
    pub fn default_minimal_selection(n: usize, m: usize) -> Self {
        ControllerDoc::MinimalSelection {
            hess: mat_to_rows(&DMatrix::identity(m, m)),
            cross: mat_to_rows(&DMatrix::zeros(n, m)),
        }
    }

    pub fn of(ctrl: &PwaController) -> Self {
        match ctrl {
            PwaController::SimplexGain(_) => ControllerDoc::SimplexGain,
            PwaController::VertexInterp(_) => ControllerDoc::VertexInterp,
            PwaController::MinimalSelection(c) => ControllerDoc::MinimalSelection {
                hess: mat_to_rows(c.hess()),
                cross: mat_to_rows(c.cross()),
            },
        }
    }

    pub fn build(&self, sys: &PolytopicSystem, spec: &InvariantSetSpec) -> Result<PwaController> {
        Ok(match self {
            ControllerDoc::SimplexGain => PwaController::SimplexGain(SimplexGainLaw::new(spec)?),
            ControllerDoc::VertexInterp => PwaController::VertexInterp(VertexInterpLaw::new(spec)?),
            ControllerDoc::MinimalSelection { hess, cross } => {
                let m = sys.input_dim();
                let h = rows_to_mat(hess, m, "H")?;
                let p = rows_to_mat(cross, m, "P")?;
                PwaController::MinimalSelection(MinimalSelectionLaw::new(sys, spec, h, p)?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDoc {
    pub h: usize,
    pub active: Vec<usize>,
    #[serde(rename = "K")]
    pub gain: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    #[serde(rename = "F_region")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "rhs_region")]
    pub rhs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionDoc {
    pub regions: Vec<RegionDoc>,
}

impl PartitionDoc {
    pub fn of(p: &Partition) -> Self {
        let regions = p
            .regions
            .iter()
            .map(|r| RegionDoc {
                h: r.sector,
                active: r.active.clone(),
                gain: mat_to_rows(&r.gain),
                offset: vec_of(&r.offset),
                f: mat_to_rows(&r.f),
                rhs: vec_of(&r.rhs),
                vertices: r.vertices.iter().map(vec_of).collect(),
            })
            .collect();
        Self { regions }
    }

    /// Planar regions without stored vertices get them recomputed.
    pub fn build(&self) -> Result<Partition> {
        let regions = self
            .regions
            .iter()
            .map(|r| {
                let f = rows_to_mat(&r.f, 0, "F_region")?;
                let rhs = finite_vec(&r.rhs, "rhs_region")?;
                let vertices = if !r.vertices.is_empty() {
                    r.vertices.iter().map(|v| finite_vec(v, "vertices")).collect::<Result<Vec<_>>>()?
                } else if f.ncols() == 2 {
                    polygon_vertices(&f, &rhs)
                } else {
                    Vec::new()
                };
                Ok(Region {
                    sector: r.h,
                    active: r.active.clone(),
                    gain: rows_to_mat(&r.gain, f.ncols(), "K")?,
                    offset: finite_vec(&r.offset, "offset")?,
                    f,
                    rhs,
                    vertices,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition { regions })
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)?)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let mut text = to_json(doc)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
