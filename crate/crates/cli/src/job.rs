//! Job files: paths to the problem data plus certification settings.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use polycert::controllers::{Partition, PwaController};
use polycert::io::{self, ControllerDoc, NetworkDoc, SystemDoc};
use polycert::opt::MilpConfig;
use polycert::relu::ReluNetwork;
use polycert::system::{synthesize_vertex_controls, InvariantSetSpec, PolytopicSystem};
use polycert::{Error, Polytope};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

/// A controller given either inline or as a path to its own file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ControllerRef {
    Path(PathBuf),
    Inline(ControllerDoc),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub system: PathBuf,
    pub controller: ControllerRef,
    #[serde(default)]
    pub network: Option<PathBuf>,
    #[serde(default)]
    pub alpha: Option<String>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub milp: Option<MilpConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    base: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputHash {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

pub struct Loaded {
    pub system: PolytopicSystem,
    pub spec: InvariantSetSpec,
    pub controller: PwaController,
    pub network: Option<ReluNetwork>,
    pub inputs: Vec<InputHash>,
}

pub fn hash_file(path: &Path) -> Result<InputHash, Failure> {
    hash_as("system", path, path)
}

fn hash_as(role: &str, shown: &Path, path: &Path) -> Result<InputHash, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(InputHash {
        role: role.into(),
        path: shown.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl Job {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let mut job: Job = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        job.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        job.out = job.out.map(|o| job.base.join(o));
        Ok(job)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }

    pub fn load(&self, need_network: bool) -> Result<Loaded, Failure> {
        let mut inputs = Vec::new();
        let sys_path = self.resolve(&self.system);
        inputs.push(hash_as("system", &self.system, &sys_path)?);
        let (system, mut spec) = io::read_json::<SystemDoc>(&sys_path)?.build()?;
        if spec.vertex_controls.is_empty() {
            spec.vertex_controls = synthesize_vertex_controls(&system, &spec.set, spec.lambda, &spec.inputs)?.controls;
        }
        let doc = match &self.controller {
            ControllerRef::Inline(d) => d.clone(),
            ControllerRef::Path(p) => {
                let full = self.resolve(p);
                inputs.push(hash_as("controller", p, &full)?);
                io::read_json::<ControllerDoc>(&full)?
            }
        };
        let controller = doc.build(&system, &spec)?;
        let network = match &self.network {
            Some(p) => {
                let full = self.resolve(p);
                inputs.push(hash_as("network", p, &full)?);
                let net = io::read_json::<NetworkDoc>(&full)?.build()?;
                if net.input_dim() != system.state_dim() || net.output_dim() != system.input_dim() {
                    return Err(Failure::Usage("network dimensions do not match the system".into()));
                }
                Some(net)
            }
            None if need_network => return Err(Failure::Usage("the job has no network".into())),
            None => None,
        };
        Ok(Loaded { system, spec, controller, network, inputs })
    }
}

/// Convex hull of all region vertices of a planar partition, in gauge form
/// when the origin is interior.
pub fn partition_hull(part: &Partition) -> Result<Polytope, Error> {
    let mut pts: Vec<(f64, f64)> = part.regions.iter().flat_map(|r| r.vertices.iter().map(|v| (v[0], v[1]))).collect();
    if part.regions.iter().any(|r| r.f.ncols() != 2) || pts.len() < 3 {
        return Err(Error::Unsupported("partition hulls are computed for planar partitions only".into()));
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite vertices"));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-12 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let k = hull.len();
    let mut f = DMatrix::zeros(k, 2);
    let mut rhs = DVector::zeros(k);
    for i in 0..k {
        let (a, b) = (hull[i], hull[(i + 1) % k]);
        // outward normal of a counter-clockwise edge
        let (nx, ny) = (b.1 - a.1, a.0 - b.0);
        f[(i, 0)] = nx;
        f[(i, 1)] = ny;
        rhs[i] = nx * a.0 + ny * a.1;
    }
    Polytope::new(f, rhs)
}
