//! Worst-case approximation error, Lipschitz constants and the closed-loop
//! stability verdicts for a network approximating a controller.

mod encoding;
pub mod norm;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::controllers::PwaController;
use crate::geometry::induced_norm;
use crate::opt::{solve_milp, BigM, LinExpr, MilpConfig, Model, Sense, Solution, Status, Var};
use crate::relu::{
    at_breakpoint, encode_jacobian_action, kink_margin, mi_encode, mi_encode_separated, state_vars, witness, ReluNetwork,
};
use crate::system::{InvariantSetSpec, PolytopicSystem};
use crate::{Error, Norm, Polytope, Result};

pub use encoding::{
    encode_controller, encode_controller_gain, ControllerEncoding, EncodingDetail, InterpBounds, SectorBlock, SectorBounds,
};
use norm::{direction, maximize_norm};

pub const SCHEMA_VERSION: u32 = 1;

/// Optimal value of a maximisation MILP with its maximiser and solver audit.
#[derive(Clone, Debug, Serialize)]
pub struct MilpBound {
    pub value: f64,
    pub witness: Vec<f64>,
    pub status: Status,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub binaries: usize,
    /// A ReLU pre-activation sits at its breakpoint at the witness.
    pub degenerate: bool,
    pub big_m: Vec<BigM>,
}

impl MilpBound {
    pub(crate) fn from_solution(model: &Model, sol: Solution, x: &[Var]) -> Result<Self> {
        if !sol.has_incumbent() {
            return Err(Error::Solver(format!("no incumbent ({:?})", sol.status)));
        }
        Ok(Self {
            value: sol.objective,
            witness: witness(&sol, x).iter().cloned().collect(),
            status: sol.status,
            best_bound: sol.best_bound,
            gap: sol.gap,
            nodes: sol.nodes,
            lp_iterations: sol.lp_iterations,
            binaries: model.num_binaries(),
            degenerate: false,
            big_m: sol.big_m,
        })
    }

    pub fn witness_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.witness)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

fn check_alpha(alpha: Norm) -> Result<()> {
    match alpha {
        Norm::Two => Err(Error::Unsupported("MILP encodings support α ∈ {1, ∞}".into())),
        _ => Ok(()),
    }
}

fn check_domain(ctrl: &PwaController, x: &Polytope) -> Result<()> {
    if ctrl.set().dim() != x.dim() {
        return Err(Error::Dimension("controller and domain".into()));
    }
    Ok(())
}

fn solve_max(mut model: Model, objective: LinExpr, x: &[Var], cfg: &MilpConfig) -> Result<MilpBound> {
    model.set_objective(Sense::Maximize, objective);
    let sol = solve_milp(&model, cfg)?;
    let mut out = MilpBound::from_solution(&model, sol, x)?;
    // every objective here is a norm; drop round-off below zero
    out.value = out.value.max(0.0);
    Ok(out)
}

/// `max_{x∈X} ‖K(x)‖_α` over the local gains of the controller.
pub fn controller_lipschitz(ctrl: &PwaController, domain: &Polytope, alpha: Norm, cfg: &MilpConfig) -> Result<MilpBound> {
    check_alpha(alpha)?;
    check_domain(ctrl, domain)?;
    let mut model = Model::new();
    let x = state_vars(&mut model, domain)?;
    let enc = encode_controller(&mut model, ctrl, &x, domain)?;
    let s = direction(&mut model, domain.dim(), alpha)?;
    let ks = encode_controller_gain(&mut model, ctrl, &enc, &s)?;
    let obj = maximize_norm(&mut model, &ks, alpha, true, "gain_norm")?;
    solve_max(model, obj, &x, cfg)
}

fn error_at(ctrl: &PwaController, net: &ReluNetwork, x: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(net.forward(x)? - ctrl.eval(x)?)
}

pub fn vector_norm(v: &DVector<f64>, alpha: Norm) -> f64 {
    match alpha {
        Norm::One => v.lp_norm(1),
        Norm::Two => v.norm(),
        Norm::Inf => v.amax(),
    }
}

/// `ē_α = max_{x∈X} ‖Φ_NN(x) − Φ(x)‖_α`, with the witness checked by direct evaluation.
pub fn max_error(ctrl: &PwaController, net: &ReluNetwork, domain: &Polytope, alpha: Norm, cfg: &MilpConfig) -> Result<MilpBound> {
    check_alpha(alpha)?;
    check_domain(ctrl, domain)?;
    if net.input_dim() != domain.dim() || net.output_dim() != ctrl.input_dim() {
        return Err(Error::Dimension("network and controller".into()));
    }
    let bounds = net.bounds_over(domain)?;
    let mut model = Model::new();
    let x = state_vars(&mut model, domain)?;
    let xe: Vec<LinExpr> = x.iter().map(|&v| v.into()).collect();
    let nn = mi_encode(&mut model, net, &xe, &bounds)?;
    let enc = encode_controller(&mut model, ctrl, &x, domain)?;
    let diff: Vec<LinExpr> = nn.output.iter().zip(&enc.output).map(|(a, b)| (a.clone() - b.clone()).compact()).collect();
    let obj = maximize_norm(&mut model, &diff, alpha, false, "err_norm")?;
    let mut out = solve_max(model, obj, &x, cfg)?;
    let w = out.witness_vector();
    let direct = vector_norm(&error_at(ctrl, net, &w)?, alpha);
    if (direct - out.value).abs() > 1e-5 {
        return Err(Error::Solver(format!("error witness evaluates to {direct} but the MILP reports {}", out.value)));
    }
    out.degenerate = at_breakpoint(net, &bounds, &w);
    Ok(out)
}

/// `L_α(e, X) = max_{x∈X} ‖J_NN(x) − K(x)‖_α`.
pub fn error_lipschitz(ctrl: &PwaController, net: &ReluNetwork, domain: &Polytope, alpha: Norm, cfg: &MilpConfig) -> Result<MilpBound> {
    check_alpha(alpha)?;
    check_domain(ctrl, domain)?;
    if net.input_dim() != domain.dim() || net.output_dim() != ctrl.input_dim() {
        return Err(Error::Dimension("network and controller".into()));
    }
    let bounds = net.bounds_over(domain)?;
    let mut model = Model::new();
    let x = state_vars(&mut model, domain)?;
    let xe: Vec<LinExpr> = x.iter().map(|&v| v.into()).collect();
    let nn = mi_encode_separated(&mut model, net, &xe, &bounds, kink_margin(&bounds))?;
    let enc = encode_controller(&mut model, ctrl, &x, domain)?;
    let s = direction(&mut model, domain.dim(), alpha)?;
    let js = encode_jacobian_action(&mut model, net, &nn, &s, "jac")?;
    let ks = encode_controller_gain(&mut model, ctrl, &enc, &s)?;
    let diff: Vec<LinExpr> = js.into_iter().zip(ks).map(|(a, b)| (a - b).compact()).collect();
    let obj = maximize_norm(&mut model, &diff, alpha, true, "err_gain_norm")?;
    let mut out = solve_max(model, obj, &x, cfg)?;
    out.degenerate = at_breakpoint(net, &bounds, &out.witness_vector());
    Ok(out)
}

/// Constants of the stability argument.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityParams {
    /// Gauge growth per unit of input error.
    pub tau: f64,
    /// Euclidean growth of the nominal closed loop; infinite when no bound is available.
    pub varpi: f64,
    /// Euclidean gain from the α-norm Lipschitz constant of the error to the state.
    pub kappa: f64,
    pub varpi_method: String,
    pub warnings: Vec<String>,
}

/// Euclidean distance from the origin to a convex polygon given by its
/// counter-clockwise vertices.
fn polygon_distance(verts: &[DVector<f64>]) -> f64 {
    let k = verts.len();
    let inside = (0..k).all(|i| {
        let (a, b) = (&verts[i], &verts[(i + 1) % k]);
        (b[0] - a[0]) * (-a[1]) - (b[1] - a[1]) * (-a[0]) >= -1e-12
    });
    if inside {
        return 0.0;
    }
    (0..k)
        .map(|i| {
            let (a, b) = (&verts[i], &verts[(i + 1) % k]);
            let d = b - a;
            let t = if d.norm_squared() > 0.0 { (-a.dot(&d) / d.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
            (a + d * t).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn stability_params(sys: &PolytopicSystem, spec: &InvariantSetSpec, ctrl: &PwaController, alpha: Norm) -> Result<StabilityParams> {
    check_alpha(alpha)?;
    let f = spec.set.normalized();
    let b_inf = (0..sys.generators()).map(|i| induced_norm(sys.b(i), Norm::Inf)).fold(0.0, f64::max);
    let b_two = (0..sys.generators()).map(|i| induced_norm(sys.b(i), Norm::Two)).fold(0.0, f64::max);
    let tau = induced_norm(f.f(), Norm::Inf) * b_inf;
    let c = match alpha {
        Norm::Inf => (sys.input_dim() as f64).sqrt(),
        _ => (sys.state_dim() as f64).sqrt(),
    };
    let kappa = c * b_two;
    let closed = |i: usize, g: &DMatrix<f64>| induced_norm(&(sys.a(i) + sys.b(i) * g), Norm::Two);
    let mut warnings = Vec::new();
    let (varpi, method) = match ctrl {
        PwaController::SimplexGain(law) => {
            let v = law
                .gains()
                .iter()
                .flat_map(|g| (0..sys.generators()).map(move |i| (i, g)))
                .map(|(i, g)| closed(i, g))
                .fold(0.0, f64::max);
            (v, "simplex closed-loop spectral norms")
        }
        _ if sys.state_dim() == 2 => {
            let part = ctrl.partition()?;
            let mut v: f64 = 0.0;
            for r in &part.regions {
                for i in 0..sys.generators() {
                    let drift = (sys.b(i) * &r.offset).norm();
                    let extra = if drift <= 1e-9 { 0.0 } else { drift / polygon_distance(&r.vertices) };
                    v = v.max(closed(i, &r.gain) + extra);
                }
            }
            (v, "critical-region closed-loop spectral norms")
        }
        _ => {
            warnings.push("no closed-loop growth bound for this controller above two states".into());
            (f64::INFINITY, "unavailable")
        }
    };
    if varpi >= 1.0 {
        warnings.push(format!("closed-loop growth bound {varpi} is not below 1; the stability verdict is unavailable"));
    }
    Ok(StabilityParams { tau, varpi, kappa, varpi_method: method.into(), warnings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub alpha: Norm,
    pub rho: f64,
    /// Requested terminal level; clamped into the admissible interval.
    pub b: Option<f64>,
    pub milp: MilpConfig,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { alpha: Norm::Inf, rho: 0.9, b: None, milp: MilpConfig::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub controller: String,
    pub alpha: Norm,
    pub max_error: f64,
    pub error_lipschitz: Option<f64>,
    pub lambda: f64,
    pub rho: f64,
    /// Admissible interval for `b`.
    pub b_interval: Option<(f64, f64)>,
    pub b: Option<f64>,
    pub b_clamped: bool,
    pub tau: f64,
    /// `(ρ − λ)/τ`; absent when `τ = 0`.
    pub zeta: Option<f64>,
    pub varpi: Option<f64>,
    pub kappa: f64,
    /// `(1 − ϖ)/ϰ`; absent when `ϰ = 0` or no growth bound exists.
    pub lipschitz_threshold: Option<f64>,
    pub varpi_method: String,
    pub converges_to_level: Verdict,
    pub exponentially_stable: Verdict,
    pub warnings: Vec<String>,
    pub max_error_audit: MilpBound,
    pub error_lipschitz_audit: Option<MilpBound>,
}

impl Certificate {
    /// Pass only when both verdicts pass.
    pub fn overall(&self) -> Verdict {
        match (self.converges_to_level, self.exponentially_stable) {
            (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            _ => Verdict::Inconclusive,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn certify(
    sys: &PolytopicSystem,
    spec: &InvariantSetSpec,
    ctrl: &PwaController,
    net: &ReluNetwork,
    opts: &CertifyOptions,
) -> Result<Certificate> {
    let (lambda, rho) = (spec.lambda, opts.rho);
    if !(lambda < rho && rho < 1.0) {
        return Err(Error::Invalid(format!("need λ < ρ < 1, got λ = {lambda}, ρ = {rho}")));
    }
    let params = stability_params(sys, spec, ctrl, opts.alpha)?;
    let mut warnings = params.warnings.clone();
    let at0 = net.forward(&DVector::zeros(net.input_dim()))?;
    if at0.amax() > 1e-9 {
        warnings.push(format!("network output at the origin is {}, not zero", at0.amax()));
    }

    let set = spec.set.normalized();
    let err = max_error(ctrl, net, &set, opts.alpha, &opts.milp)?;
    let zeta = if params.tau > 0.0 { (rho - lambda) / params.tau } else { f64::INFINITY };
    let converges = if !err.is_optimal() {
        Verdict::Inconclusive
    } else if err.value < zeta {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    let mut b_interval = None;
    let mut b = None;
    let mut b_clamped = false;
    let mut lip = None;
    let threshold = if params.varpi < 1.0 {
        finite(if params.kappa > 0.0 { (1.0 - params.varpi) / params.kappa } else { f64::INFINITY })
    } else {
        None
    };
    let mut stable = Verdict::Inconclusive;
    if converges == Verdict::Pass {
        let lo = if params.tau > 0.0 { params.tau * err.value / (rho - lambda) } else { 0.0 };
        let mid = 0.5 * (lo + 1.0);
        let chosen = match opts.b {
            None => mid,
            Some(v) if v > lo && v < 1.0 => v,
            Some(v) => {
                b_clamped = true;
                warnings.push(format!("requested level {v} lies outside ({lo}, 1)"));
                // pull the request just inside the open interval
                let eps = 1e-6 * (1.0 - lo);
                v.clamp(lo + eps, 1.0 - eps)
            }
        };
        b_interval = Some((lo, 1.0));
        b = Some(chosen);
        let inner = set.scale_sublevel(chosen)?;
        let l = error_lipschitz(ctrl, net, &inner, opts.alpha, &opts.milp)?;
        stable = if params.varpi >= 1.0 || !l.is_optimal() {
            Verdict::Inconclusive
        } else if threshold.is_none_or(|t| l.value < t) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        lip = Some(l);
    }

    Ok(Certificate {
        schema_version: SCHEMA_VERSION,
        controller: ctrl.kind().into(),
        alpha: opts.alpha,
        max_error: err.value,
        error_lipschitz: lip.as_ref().map(|l| l.value),
        lambda,
        rho,
        b_interval,
        b,
        b_clamped,
        tau: params.tau,
        zeta: finite(zeta),
        varpi: finite(params.varpi),
        kappa: params.kappa,
        lipschitz_threshold: threshold,
        varpi_method: params.varpi_method,
        converges_to_level: converges,
        exponentially_stable: stable,
        warnings,
        max_error_audit: err,
        error_lipschitz_audit: lip,
    })
}
