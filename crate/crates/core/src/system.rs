//! Polytopic uncertain dynamics `x⁺ = Σ wᵢ (Aᵢ x + Bᵢ u)` with `w` in the
//! probability simplex, their λ-contractive invariant set and closed-loop
//! simulation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::opt::{solve_lp, LinExpr, Model, Sense, Status};
use crate::{Error, Parallelism, Polytope, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PolytopicSystem {
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
}

impl PolytopicSystem {
    pub fn new(a: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::Dimension(format!("{} state and {} input generators", a.len(), b.len())));
        }
        let n = a[0].nrows();
        let m = b[0].ncols();
        for (ai, bi) in a.iter().zip(&b) {
            if ai.shape() != (n, n) || bi.shape() != (n, m) {
                return Err(Error::Dimension("generator shapes disagree".into()));
            }
        }
        Ok(Self { a, b })
    }

    pub fn state_dim(&self) -> usize {
        self.a[0].nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b[0].ncols()
    }

    pub fn generators(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self, i: usize) -> &DMatrix<f64> {
        &self.a[i]
    }

    pub fn b(&self, i: usize) -> &DMatrix<f64> {
        &self.b[i]
    }

    pub fn generator_step(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a[i] * x + &self.b[i] * u
    }

    /// One step under the convex weights `w`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.state_dim() || u.len() != self.input_dim() || w.len() != self.generators() {
            return Err(Error::Dimension("step arguments".into()));
        }
        if w.iter().any(|&v| v < -1e-12) || (w.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::NotInSimplex);
        }
        let mut out = DVector::zeros(self.state_dim());
        for i in 0..self.generators() {
            if w[i] != 0.0 {
                out += self.generator_step(i, x, u) * w[i];
            }
        }
        Ok(out)
    }
}

/// Contractive set `S`, its rate `λ`, the input set `U` and one control per vertex of `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantSetSpec {
    pub set: Polytope,
    pub lambda: f64,
    pub inputs: Polytope,
    pub vertex_controls: Vec<DVector<f64>>,
}

impl InvariantSetSpec {
    pub fn new(set: Polytope, lambda: f64, inputs: Polytope, vertex_controls: Vec<DVector<f64>>) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::Invalid(format!("contraction rate {lambda} must lie in [0, 1)")));
        }
        let set = set.with_vertices()?;
        if !vertex_controls.is_empty() && vertex_controls.len() != set.cached_vertices().map_or(0, |v| v.len()) {
            return Err(Error::Dimension("one control per vertex is required".into()));
        }
        Ok(Self { set, lambda, inputs, vertex_controls })
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        self.set.cached_vertices().expect("vertices are cached on construction")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub ok: bool,
    /// `min λ − Ψ(Aᵢ x_v + Bᵢ u_v)` over vertices and generators.
    pub worst_margin: f64,
    pub worst_vertex: usize,
    pub worst_generator: usize,
    /// Largest gauge of a vertex control in `U` (must not exceed 1).
    pub worst_input_gauge: f64,
}

pub fn verify_invariance(sys: &PolytopicSystem, spec: &InvariantSetSpec) -> Result<InvarianceReport> {
    let verts = spec.vertices();
    if spec.vertex_controls.len() != verts.len() {
        return Err(Error::Vertex { vertex: spec.vertex_controls.len().min(verts.len()), reason: "missing control".into() });
    }
    let norm = spec.set.normalized();
    let mut rep = InvarianceReport {
        ok: true,
        worst_margin: f64::INFINITY,
        worst_vertex: 0,
        worst_generator: 0,
        worst_input_gauge: 0.0,
    };
    for (v, (x, u)) in verts.iter().zip(&spec.vertex_controls).enumerate() {
        if u.len() != sys.input_dim() {
            return Err(Error::Dimension(format!("control of vertex {v}")));
        }
        rep.worst_input_gauge = rep.worst_input_gauge.max(spec.inputs.gauge(u)?);
        for i in 0..sys.generators() {
            let margin = spec.lambda - norm.gauge(&sys.generator_step(i, x, u))?;
            if margin < rep.worst_margin {
                rep.worst_margin = margin;
                rep.worst_vertex = v;
                rep.worst_generator = i;
            }
        }
    }
    rep.ok = rep.worst_margin >= -1e-9 && rep.worst_input_gauge <= 1.0 + 1e-9;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexControls {
    pub controls: Vec<DVector<f64>>,
    /// `max_i Ψ(Aᵢ x_v + Bᵢ u_v)` at the returned control.
    pub contraction: Vec<f64>,
}

/// Per-vertex LP `min t  s.t.  F(Aᵢ x_v + Bᵢ u) ≤ t·1,  u ∈ U`; fails when `t > λ`.
pub fn synthesize_vertex_controls(
    sys: &PolytopicSystem,
    set: &Polytope,
    lambda: f64,
    inputs: &Polytope,
) -> Result<VertexControls> {
    let norm = set.normalized();
    let uset = inputs.normalized();
    let m = sys.input_dim();
    let mut out = VertexControls { controls: Vec::new(), contraction: Vec::new() };
    for (v, x) in set.vertices()?.iter().enumerate() {
        let mut model = Model::new();
        let u: Vec<_> = (0..m).map(|k| model.continuous(format!("u{k}"), f64::NEG_INFINITY, f64::INFINITY)).collect();
        let t = model.continuous("t", f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..sys.generators() {
            let ax = norm.f() * (sys.a(i) * x);
            let fb = norm.f() * sys.b(i);
            for j in 0..norm.num_facets() {
                let mut e = LinExpr::dot(fb.row(j).iter().cloned(), &u) - LinExpr::from(t);
                e.constant = ax[j];
                model.le(format!("gen{i}_row{j}"), e, 0.0);
            }
        }
        for j in 0..uset.num_facets() {
            model.le(format!("input{j}"), LinExpr::dot(uset.f().row(j).iter().cloned(), &u), 1.0);
        }
        model.set_objective(Sense::Minimize, t.into());
        let s = solve_lp(&model)?;
        if s.status != Status::Optimal {
            return Err(Error::Vertex { vertex: v, reason: format!("control LP ended with {:?}", s.status) });
        }
        let mut uv = DVector::from_fn(m, |k, _| s.value(u[k]));
        // LP residuals may leave u just outside U; shrinking toward 0 stays in U
        let g = uset.gauge(&uv)?;
        if g > 1.0 {
            uv /= g;
        }
        let t = (0..sys.generators()).map(|i| norm.gauge_unchecked(&sys.generator_step(i, x, &uv))).fold(f64::NEG_INFINITY, f64::max);
        if t > lambda + 1e-9 {
            return Err(Error::Vertex { vertex: v, reason: format!("best contraction {t:.6} exceeds {lambda}") });
        }
        out.controls.push(uv);
        out.contraction.push(t);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DisturbancePolicy {
    /// Always the given generator.
    Vertex(usize),
    /// Uniform on the probability simplex.
    Uniform,
    /// The generator maximising the next gauge.
    GreedyWorstCase,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub weights: Vec<DVector<f64>>,
    /// Gauge of every state, including the initial one.
    pub gauges: Vec<f64>,
    /// First step whose state left the set; the run stops there.
    pub escaped_at: Option<usize>,
}

/// Closed-loop run from `x0 ∈ S` for `steps` steps.
pub fn simulate<C, R>(
    sys: &PolytopicSystem,
    set: &Polytope,
    controller: C,
    x0: &DVector<f64>,
    steps: usize,
    policy: DisturbancePolicy,
    rng: &mut R,
) -> Result<Trajectory>
where
    C: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    R: Rng + ?Sized,
{
    let g0 = set.gauge(x0)?;
    if g0 > 1.0 + 1e-9 {
        return Err(Error::OutsideSet { gauge: g0 });
    }
    let norm = set.normalized();
    let mgen = sys.generators();
    let mut traj = Trajectory {
        states: vec![x0.clone()],
        inputs: Vec::new(),
        weights: Vec::new(),
        gauges: vec![g0],
        escaped_at: None,
    };
    let mut x = x0.clone();
    for k in 0..steps {
        let u = controller(&x)?;
        let w = match policy {
            DisturbancePolicy::Vertex(i) => {
                if i >= mgen {
                    return Err(Error::Invalid(format!("generator {i} out of range")));
                }
                unit(mgen, i)
            }
            DisturbancePolicy::Uniform => {
                let e: Vec<f64> = (0..mgen).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = e.iter().sum();
                DVector::from_iterator(mgen, e.into_iter().map(|v| v / s))
            }
            DisturbancePolicy::GreedyWorstCase => {
                let mut best = (f64::NEG_INFINITY, 0);
                for i in 0..mgen {
                    let g = norm.gauge_unchecked(&sys.generator_step(i, &x, &u));
                    if g > best.0 {
                        best = (g, i);
                    }
                }
                unit(mgen, best.1)
            }
        };
        x = sys.step(&x, &u, &w)?;
        let g = norm.gauge_unchecked(&x);
        traj.inputs.push(u);
        traj.weights.push(w);
        traj.states.push(x.clone());
        traj.gauges.push(g);
        if g > 1.0 + 1e-9 {
            traj.escaped_at = Some(k + 1);
            break;
        }
    }
    Ok(traj)
}

/// Independent runs from each initial state; run `k` draws from a generator
/// seeded with `seed + k`, so results do not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn simulate_batch<C>(
    sys: &PolytopicSystem,
    set: &Polytope,
    controller: &C,
    initial: &[DVector<f64>],
    steps: usize,
    policy: DisturbancePolicy,
    seed: u64,
    par: Parallelism,
) -> Result<Vec<Trajectory>>
where
    C: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync,
{
    par.map_range(initial.len(), |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        simulate(sys, set, controller, &initial[k], steps, policy, &mut rng)
    })
    .into_iter()
    .collect()
}

fn unit(len: usize, i: usize) -> DVector<f64> {
    let mut w = DVector::zeros(len);
    w[i] = 1.0;
    w
}
