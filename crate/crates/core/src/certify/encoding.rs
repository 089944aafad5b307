//! Mixed-integer encodings of the three controllers and of their local gains.
//!
//! Every big-M constant is derived from the domain `X`, so an
//! encoding built for `bS` is tighter than one built for `S`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::controllers::{AffineKkt, MinimalSelectionLaw, PwaController, SimplexGainLaw, VertexInterpLaw};
use crate::geometry::chebyshev_ball;
use crate::linalg::{combinations, vstack};
use crate::opt::{solve_lp, BigM, Cmp, LinExpr, Model, Sense, Status, Var};
use crate::relu::state_vars;
use crate::{Error, Polytope, Result};

/// Padding applied to every derived bound.
fn pad(v: f64) -> f64 {
    v * (1.0 + 1e-6) + 1e-9
}

/// Range of `c·x + c0` over the vertices.
fn range(c: &[f64], c0: f64, verts: &[DVector<f64>]) -> (f64, f64) {
    verts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let y = c0 + c.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>();
        (lo.min(y), hi.max(y))
    })
}

fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().cloned().collect()
}

fn padded((lo, hi): (f64, f64)) -> (f64, f64) {
    (lo - pad(lo.abs()) + lo.abs(), pad(hi.abs()) - hi.abs() + hi)
}

/// Variables of one sector of the minimal-selection encoding.
#[derive(Clone, Debug)]
pub struct SectorBlock {
    pub v: Vec<Var>,
    pub mu: Vec<Var>,
    /// Row flags, integral through `pattern`.
    pub sigma: Vec<Var>,
    /// One binary per admissible active set.
    pub pattern: Vec<Var>,
    pub delta: Var,
    pub bounds: SectorBounds,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorBounds {
    /// Active sets whose critical region meets the sector in a full-dimensional set.
    pub active_sets: Vec<Vec<usize>>,
    /// `|v_k|` on the sector.
    pub v: Vec<f64>,
    /// Multiplier of each row on the sector.
    pub mu: Vec<f64>,
    /// Row slack anywhere in the domain.
    pub slack: Vec<f64>,
    /// Violation of each row by `v = 0` anywhere in the domain.
    pub primal: Vec<f64>,
    pub d_v: Vec<f64>,
    pub d_mu: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum EncodingDetail {
    SimplexGain { delta: Vec<Var> },
    VertexInterp { gamma: Vec<Var>, sigma: Vec<Var>, bounds: InterpBounds },
    MinimalSelection { blocks: Vec<SectorBlock> },
}

#[derive(Clone, Debug)]
pub struct InterpBounds {
    pub lambda_x: Vec<f64>,
    pub lambda0: f64,
    pub mu: f64,
    pub d_gamma: Vec<f64>,
    pub d_lambda_x: Vec<f64>,
    pub d_lambda0: f64,
    pub d_mu: f64,
}

/// Controller output `Φ(x)` as linear expressions over the model.
#[derive(Clone, Debug)]
pub struct ControllerEncoding {
    pub output: Vec<LinExpr>,
    pub detail: EncodingDetail,
}

/// Controller output over the state variables `x`, which must range over `domain`.
pub fn encode_controller(model: &mut Model, ctrl: &PwaController, x: &[Var], domain: &Polytope) -> Result<ControllerEncoding> {
    if x.len() != domain.dim() || ctrl.set().dim() != domain.dim() {
        return Err(Error::Dimension("state variables and domain".into()));
    }
    let verts = domain.vertices()?;
    match ctrl {
        PwaController::SimplexGain(law) => encode_simplex_gain(model, law, x, &verts),
        PwaController::VertexInterp(law) => encode_vertex_interp(model, law, x, &verts),
        PwaController::MinimalSelection(law) => encode_minimal_selection(model, law, x, domain, &verts),
    }
}

/// Range of `c·x + c0` over `domain ∩ {A x ≤ b}`, or `None` when that set is empty.
fn lp_range(domain: &Polytope, a: &DMatrix<f64>, b: &DVector<f64>, c: &[f64], c0: f64) -> Result<Option<(f64, f64)>> {
    let mut out = (0.0, 0.0);
    for (k, sense) in [Sense::Minimize, Sense::Maximize].into_iter().enumerate() {
        let mut model = Model::new();
        let x = state_vars(&mut model, domain)?;
        for r in 0..a.nrows() {
            model.le(format!("extra[{r}]"), LinExpr::dot(row(a, r), &x), b[r]);
        }
        model.set_objective(sense, LinExpr::dot(c.iter().cloned(), &x));
        let sol = solve_lp(&model)?;
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Ok(None),
            s => return Err(Error::Solver(format!("bounding LP ended with {s:?}"))),
        }
        if k == 0 {
            out.0 = sol.objective + c0;
        } else {
            out.1 = sol.objective + c0;
        }
    }
    Ok(Some(out))
}

/// Sector and critical-region rows of active set `active` of sector `h`:
/// the selection inequalities, primal feasibility and nonnegative multipliers.
fn critical_rows(law: &MinimalSelectionLaw, h: usize, kkt: &AffineKkt) -> (DMatrix<f64>, DVector<f64>) {
    let (sa, sb) = law.sector_domain(h);
    let p = law.set().num_facets();
    let qp = law.parametric_qp(h);
    let n = law.set().dim();
    let k = law.num_rows();
    let na = kkt.mult_gain.nrows();
    let sector = sa.nrows() - p;
    let total = sector + k + na;
    let mut a = DMatrix::zeros(total, n);
    let mut b = DVector::zeros(total);
    a.rows_mut(0, sector).copy_from(&sa.rows(p, sector));
    b.rows_mut(0, sector).copy_from(&sb.rows(p, sector));
    // G (K x + k) ≤ g₀ + Gₓ x
    let lhs = &qp.ineq * &kkt.gain - &qp.ineq_x;
    let rhs = &qp.ineq0 - &qp.ineq * &kkt.offset;
    let tol = 1e-9;
    a.rows_mut(sector, k).copy_from(&lhs);
    for r in 0..k {
        b[sector + r] = rhs[r] + tol;
    }
    a.rows_mut(sector + k, na).copy_from(&(-&kkt.mult_gain));
    for r in 0..na {
        b[sector + k + r] = kkt.mult_offset[r] + tol;
    }
    (a, b)
}

fn sector_bounds(law: &MinimalSelectionLaw, h: usize, domain: &Polytope, verts: &[DVector<f64>]) -> Result<SectorBounds> {
    let m = law.input_dim();
    let kk = law.num_rows();
    let qp = law.parametric_qp(h);
    let sm = law.sector_matrix(h);
    let d = law.rows_rhs();
    let c = law.rows();
    let mut bounds = SectorBounds {
        active_sets: Vec::new(),
        v: vec![0.0; m],
        mu: vec![0.0; kk],
        slack: vec![0.0; kk],
        primal: vec![0.0; kk],
        d_v: vec![0.0; m],
        d_mu: vec![0.0; kk],
    };
    let mut found = false;
    for size in 0..=m.min(kk) {
        for set in combinations(kk, size) {
            if !qp.licq(&set) {
                continue;
            }
            let Some(kkt) = qp.affine_kkt(&set) else { continue };
            let (a, b) = critical_rows(law, h, &kkt);
            let full = vstack(&[&a, domain.f()]);
            let mut fb = DVector::zeros(full.nrows());
            fb.rows_mut(0, b.len()).copy_from(&b);
            fb.rows_mut(b.len(), domain.num_facets()).copy_from(domain.rhs());
            match chebyshev_ball(&full, &fb)? {
                Some((_, r)) if r > 1e-7 * (1.0 + domain.rhs().amax()) => {}
                _ => continue,
            }
            bounds.active_sets.push(set.clone());
            found = true;
            for k in 0..m {
                let Some((lo, hi)) = lp_range(domain, &a, &b, &row(&kkt.gain, k), kkt.offset[k])? else {
                    break;
                };
                bounds.v[k] = bounds.v[k].max(lo.abs()).max(hi.abs());
                bounds.d_v[k] = bounds.d_v[k].max(kkt.gain.row(k).iter().map(|g| g.abs()).sum());
            }
            for (r, &i) in set.iter().enumerate() {
                if let Some((_, hi)) = lp_range(domain, &a, &b, &row(&kkt.mult_gain, r), kkt.mult_offset[r])? {
                    bounds.mu[i] = bounds.mu[i].max(hi);
                    bounds.d_mu[i] = bounds.d_mu[i].max(kkt.mult_gain.row(r).iter().map(|g| g.abs()).sum());
                }
            }
        }
    }
    if !found {
        return Err(Error::Invalid(format!("sector {h} has no feasible active set")));
    }
    for v in bounds.v.iter_mut().chain(bounds.mu.iter_mut()).chain(bounds.d_v.iter_mut()).chain(bounds.d_mu.iter_mut()) {
        *v = pad(*v);
    }
    for i in 0..kk {
        let (lo, hi) = range(&row(&sm, i), d[i], verts);
        let reach: f64 = (0..m).map(|k| c[(i, k)].abs() * bounds.v[k]).sum();
        bounds.slack[i] = pad(hi.max(0.0) + reach);
        bounds.primal[i] = pad((-lo).max(0.0));
    }
    Ok(bounds)
}

/// Exact KKT conditions of `min ½vᵀHv + xᵀPv  s.t.  C v ≤ d + S_h x`, imposed
/// only for the sector whose binary `δ_h` is set; all other blocks are zero.
fn encode_minimal_selection(
    model: &mut Model,
    law: &MinimalSelectionLaw,
    x: &[Var],
    domain: &Polytope,
    verts: &[DVector<f64>],
) -> Result<ControllerEncoding> {
    let m = law.input_dim();
    let n = x.len();
    let kk = law.num_rows();
    let c = law.rows();
    let d = law.rows_rhs();
    let f = law.set().f();
    let p = law.set().num_facets();
    let pt = law.cross().transpose();
    let mut blocks = Vec::with_capacity(p);
    let mut output = vec![LinExpr::zero(); m];
    for h in 0..p {
        let tag = |s: &str| format!("sector[{h}]:{s}");
        let bounds = sector_bounds(law, h, domain, verts)?;
        let sm = law.sector_matrix(h);
        let delta = model.binary(tag("delta"));
        for j in (0..p).filter(|&j| j != h) {
            let diff: Vec<f64> = (0..n).map(|k| f[(j, k)] - f[(h, k)]).collect();
            let b = padded(range(&diff, 0.0, verts));
            model.implies_bounded(&tag(&format!("pick[{j}]")), delta, true, LinExpr::dot(diff, x), Cmp::Le, 0.0, b);
        }
        let v: Vec<Var> = (0..m).map(|k| model.continuous(tag(&format!("v[{k}]")), -bounds.v[k], bounds.v[k])).collect();
        let mu: Vec<Var> = (0..kk).map(|i| model.continuous(tag(&format!("mu[{i}]")), 0.0, bounds.mu[i])).collect();
        let sigma: Vec<Var> = (0..kk).map(|i| model.continuous(tag(&format!("sigma[{i}]")), 0.0, 1.0)).collect();
        let pattern: Vec<Var> =
            (0..bounds.active_sets.len()).map(|r| model.binary(tag(&format!("active_set[{r}]")))).collect();
        model.eq(tag("active_set:one"), LinExpr::dot(vec![1.0; pattern.len()], &pattern) - LinExpr::from(delta), 0.0);
        for (i, &flag) in sigma.iter().enumerate() {
            let members: Vec<Var> =
                bounds.active_sets.iter().zip(&pattern).filter(|(a, _)| a.contains(&i)).map(|(_, &w)| w).collect();
            model.eq(tag(&format!("sigma_def[{i}]")), LinExpr::from(flag) - LinExpr::dot(vec![1.0; members.len()], &members), 0.0);
        }
        for k in 0..m {
            model.le(tag(&format!("v_on_hi[{k}]")), LinExpr::from(v[k]) - LinExpr::term(delta, bounds.v[k]), 0.0);
            model.ge(tag(&format!("v_on_lo[{k}]")), LinExpr::from(v[k]) + LinExpr::term(delta, bounds.v[k]), 0.0);
            model.big_m.push(BigM { label: tag(&format!("v[{k}]")), value: bounds.v[k] });
        }
        // H v + Cᵀ μ + δ Pᵀ x = 0
        for k in 0..m {
            let mut e = LinExpr::dot(law.hess().row(k).iter().cloned(), &v) + LinExpr::dot(c.column(k).iter().cloned(), &mu);
            let coupling = row(&pt, k);
            if coupling.iter().any(|&a| a != 0.0) {
                let b = padded(range(&coupling, 0.0, verts));
                e += LinExpr::from(model.product_bounded(&tag(&format!("coupling[{k}]")), delta, LinExpr::dot(coupling, x), b));
            }
            model.eq(tag(&format!("stat[{k}]")), e, 0.0);
        }
        for i in 0..kk {
            // slack = d_i + S_i x − C_i v
            let mut slack = LinExpr::dot(row(&sm, i), x) - LinExpr::dot(row(c, i), &v);
            slack.constant += d[i];
            let pm = bounds.primal[i];
            model.ge(tag(&format!("primal[{i}]")), slack.clone() + LinExpr::constant(pm) - LinExpr::term(delta, pm), 0.0);
            model.le(tag(&format!("slack_off[{i}]")), slack + LinExpr::term(sigma[i], bounds.slack[i]), bounds.slack[i]);
            model.le(tag(&format!("mu_off[{i}]")), LinExpr::from(mu[i]) - LinExpr::term(sigma[i], bounds.mu[i]), 0.0);
            for (label, value) in [("primal", pm), ("slack", bounds.slack[i]), ("mu", bounds.mu[i])] {
                model.big_m.push(BigM { label: tag(&format!("{label}[{i}]")), value });
            }
        }
        for k in 0..m {
            output[k] += LinExpr::from(v[k]);
        }
        blocks.push(SectorBlock { v, mu, sigma, pattern, delta, bounds });
    }
    let deltas: Vec<Var> = blocks.iter().map(|b| b.delta).collect();
    model.eq("sector:one", LinExpr::dot(vec![1.0; p], &deltas), 1.0);
    Ok(ControllerEncoding { output, detail: EncodingDetail::MinimalSelection { blocks } })
}

/// Per sector: `H Dv + Cᵀ Dμ + δ Pᵀ s = 0`, rows flagged by `σ` hold
/// `C_i Dv = S_i s`, unflagged rows carry no multiplier derivative.
fn minimal_selection_gain(model: &mut Model, law: &MinimalSelectionLaw, blocks: &[SectorBlock], s: &[LinExpr]) -> Result<Vec<LinExpr>> {
    let m = law.input_dim();
    let kk = law.num_rows();
    let c = law.rows();
    let pt = law.cross().transpose();
    let mut out = vec![LinExpr::zero(); m];
    for (h, blk) in blocks.iter().enumerate() {
        let tag = |t: &str| format!("sector[{h}]:{t}");
        let sm = law.sector_matrix(h);
        let b = &blk.bounds;
        let dv: Vec<Var> = (0..m).map(|k| model.continuous(tag(&format!("dv[{k}]")), -b.d_v[k], b.d_v[k])).collect();
        let dmu: Vec<Var> = (0..kk).map(|i| model.continuous(tag(&format!("dmu[{i}]")), -b.d_mu[i], b.d_mu[i])).collect();
        for k in 0..m {
            model.le(tag(&format!("dv_on_hi[{k}]")), LinExpr::from(dv[k]) - LinExpr::term(blk.delta, b.d_v[k]), 0.0);
            model.ge(tag(&format!("dv_on_lo[{k}]")), LinExpr::from(dv[k]) + LinExpr::term(blk.delta, b.d_v[k]), 0.0);
            let mut e = LinExpr::dot(law.hess().row(k).iter().cloned(), &dv) + LinExpr::dot(c.column(k).iter().cloned(), &dmu);
            let coupling = row(&pt, k);
            if coupling.iter().any(|&a| a != 0.0) {
                let r: f64 = coupling.iter().map(|a| a.abs()).sum();
                let ps = LinExpr::combine(coupling, s);
                e += LinExpr::from(model.product_bounded(&tag(&format!("d_coupling[{k}]")), blk.delta, ps, padded((-r, r))));
            }
            model.eq(tag(&format!("d_stat[{k}]")), e, 0.0);
        }
        for i in 0..kk {
            let bm = b.d_mu[i];
            model.le(tag(&format!("dmu_hi[{i}]")), LinExpr::from(dmu[i]) - LinExpr::term(blk.sigma[i], bm), 0.0);
            model.ge(tag(&format!("dmu_lo[{i}]")), LinExpr::from(dmu[i]) + LinExpr::term(blk.sigma[i], bm), 0.0);
            // C_i Dv = S_i s when σ_i = 1
            let e = LinExpr::dot(row(c, i), &dv) - LinExpr::combine(row(&sm, i), s);
            let bnd = model.bounds_of(&e);
            model.implies_bounded(&tag(&format!("d_active[{i}]")), blk.sigma[i], true, e, Cmp::Eq, 0.0, bnd);
        }
        for k in 0..m {
            out[k] += LinExpr::from(dv[k]);
        }
    }
    Ok(out)
}

fn encode_simplex_gain(model: &mut Model, law: &SimplexGainLaw, x: &[Var], verts: &[DVector<f64>]) -> Result<ControllerEncoding> {
    let m = law.gains()[0].nrows();
    let n = x.len();
    let delta: Vec<Var> = (0..law.simplices().len()).map(|h| model.binary(format!("simplex[{h}]"))).collect();
    model.eq("simplex:one", LinExpr::dot(vec![1.0; delta.len()], &delta), 1.0);
    let mut output = vec![LinExpr::zero(); m];
    for (h, (s, g)) in law.simplices().iter().zip(law.gains()).enumerate() {
        for r in 0..n {
            // barycentric coordinate r of simplex h is nonnegative when selected
            let c: Vec<f64> = (0..n).map(|k| -s.x_inv[(r, k)]).collect();
            let b = range(&c, 0.0, verts);
            model.implies_bounded(&format!("simplex[{h}]:bary[{r}]"), delta[h], true, LinExpr::dot(c, x), Cmp::Le, 0.0, padded(b));
        }
        for (i, out) in output.iter_mut().enumerate() {
            let c = row(g, i);
            let b = padded(range(&c, 0.0, verts));
            let y = model.product_bounded(&format!("simplex[{h}]:u[{i}]"), delta[h], LinExpr::dot(c, x), b);
            *out += LinExpr::from(y);
        }
    }
    Ok(ControllerEncoding { output, detail: EncodingDetail::SimplexGain { delta } })
}

/// Bounds of the least-norm interpolation weights, their multipliers and their
/// directional derivatives over every nonsingular active set.
fn interp_bounds(law: &VertexInterpLaw, verts: &[DVector<f64>]) -> Result<InterpBounds> {
    let qp = law.parametric_qp();
    let nv = law.points().ncols();
    let n = law.points().nrows();
    if nv > 16 {
        return Err(Error::Unsupported(format!("interpolation encoding with {nv} vertices")));
    }
    let mut b = InterpBounds {
        lambda_x: vec![0.0; n],
        lambda0: 0.0,
        mu: 0.0,
        d_gamma: vec![0.0; nv],
        d_lambda_x: vec![0.0; n],
        d_lambda0: 0.0,
        d_mu: 0.0,
    };
    let abs_sum = |m: &DMatrix<f64>, r: usize| m.row(r).iter().map(|v| v.abs()).sum::<f64>();
    for k in 0..nv {
        for set in combinations(nv, k) {
            let Some(kkt) = qp.affine_kkt(&set) else { continue };
            for v in verts {
                let lam = &kkt.eq_mult_gain * v + &kkt.eq_mult_offset;
                for r in 0..n {
                    b.lambda_x[r] = b.lambda_x[r].max(lam[r].abs());
                }
                b.lambda0 = b.lambda0.max(lam[n].abs());
                let mu = &kkt.mult_gain * v + &kkt.mult_offset;
                b.mu = b.mu.max(mu.amax());
            }
            for r in 0..nv {
                b.d_gamma[r] = b.d_gamma[r].max(abs_sum(&kkt.gain, r));
            }
            for r in 0..n {
                b.d_lambda_x[r] = b.d_lambda_x[r].max(abs_sum(&kkt.eq_mult_gain, r));
            }
            b.d_lambda0 = b.d_lambda0.max(abs_sum(&kkt.eq_mult_gain, n));
            for r in 0..set.len() {
                b.d_mu = b.d_mu.max(abs_sum(&kkt.mult_gain, r));
            }
        }
    }
    b.lambda_x.iter_mut().chain(b.d_gamma.iter_mut()).chain(b.d_lambda_x.iter_mut()).for_each(|v| *v = pad(*v));
    b.lambda0 = pad(b.lambda0);
    b.mu = pad(b.mu);
    b.d_lambda0 = pad(b.d_lambda0);
    b.d_mu = pad(b.d_mu);
    Ok(b)
}

fn encode_vertex_interp(model: &mut Model, law: &VertexInterpLaw, x: &[Var], verts: &[DVector<f64>]) -> Result<ControllerEncoding> {
    let pts = law.points();
    let (n, nv) = pts.shape();
    let b = interp_bounds(law, verts)?;
    let gamma: Vec<Var> = (0..nv).map(|v| model.continuous(format!("gamma[{v}]"), 0.0, 1.0)).collect();
    let lam: Vec<Var> = (0..n).map(|k| model.continuous(format!("interp:lambda[{k}]"), -b.lambda_x[k], b.lambda_x[k])).collect();
    let lam0 = model.continuous("interp:lambda0", -b.lambda0, b.lambda0);
    let mu: Vec<Var> = (0..nv).map(|v| model.continuous(format!("interp:mu[{v}]"), 0.0, b.mu)).collect();
    let sigma: Vec<Var> = (0..nv).map(|v| model.binary(format!("interp:sigma[{v}]"))).collect();
    for v in 0..nv {
        // γ_v + x_vᵀλ + λ₀ − μ_v = 0
        let mut e = LinExpr::from(gamma[v]) + LinExpr::dot(pts.column(v).iter().cloned(), &lam) + LinExpr::from(lam0);
        e -= LinExpr::from(mu[v]);
        model.eq(format!("interp:stat[{v}]"), e, 0.0);
        model.le(format!("interp:gamma_off[{v}]"), LinExpr::from(gamma[v]) + LinExpr::from(sigma[v]), 1.0);
        model.le(format!("interp:mu_off[{v}]"), LinExpr::from(mu[v]) - LinExpr::term(sigma[v], b.mu), 0.0);
        model.big_m.push(BigM { label: format!("interp:mu[{v}]"), value: b.mu });
    }
    for k in 0..n {
        model.eq(format!("interp:point[{k}]"), LinExpr::dot(pts.row(k).iter().cloned(), &gamma) - LinExpr::from(x[k]), 0.0);
    }
    model.eq("interp:sum", LinExpr::dot(vec![1.0; nv], &gamma), 1.0);
    let ctrl = law.controls();
    let output = (0..ctrl.nrows()).map(|i| LinExpr::dot(ctrl.row(i).iter().cloned(), &gamma)).collect();
    Ok(ControllerEncoding { output, detail: EncodingDetail::VertexInterp { gamma, sigma, bounds: b } })
}

/// `K(x) s` for the local gain selected by the binaries of `enc`; every entry
/// of `s` must lie in `[−1, 1]`.
pub fn encode_controller_gain(
    model: &mut Model,
    ctrl: &PwaController,
    enc: &ControllerEncoding,
    s: &[LinExpr],
) -> Result<Vec<LinExpr>> {
    match (ctrl, &enc.detail) {
        (PwaController::SimplexGain(law), EncodingDetail::SimplexGain { delta }) => {
            let m = law.gains()[0].nrows();
            let mut out = vec![LinExpr::zero(); m];
            for (h, g) in law.gains().iter().enumerate() {
                for (i, o) in out.iter_mut().enumerate() {
                    let r = g.row(i).iter().map(|v| v.abs()).sum::<f64>();
                    let e = LinExpr::combine(g.row(i).iter().cloned(), s);
                    *o += LinExpr::from(model.product_bounded(&format!("simplex[{h}]:gain[{i}]"), delta[h], e, padded((-r, r))));
                }
            }
            Ok(out)
        }
        (PwaController::VertexInterp(law), EncodingDetail::VertexInterp { sigma, bounds, .. }) => {
            let pts = law.points();
            let (n, nv) = pts.shape();
            let dg: Vec<Var> = (0..nv).map(|v| model.continuous(format!("d_gamma[{v}]"), -bounds.d_gamma[v], bounds.d_gamma[v])).collect();
            let dl: Vec<Var> = (0..n).map(|k| model.continuous(format!("d_lambda[{k}]"), -bounds.d_lambda_x[k], bounds.d_lambda_x[k])).collect();
            let dl0 = model.continuous("d_lambda0", -bounds.d_lambda0, bounds.d_lambda0);
            let dmu: Vec<Var> = (0..nv).map(|v| model.continuous(format!("d_mu[{v}]"), -bounds.d_mu, bounds.d_mu)).collect();
            for v in 0..nv {
                let mut e = LinExpr::from(dg[v]) + LinExpr::dot(pts.column(v).iter().cloned(), &dl) + LinExpr::from(dl0);
                e -= LinExpr::from(dmu[v]);
                model.eq(format!("d_interp:stat[{v}]"), e, 0.0);
                // σ_v = 1 ⇒ Dγ_v = 0,  σ_v = 0 ⇒ Dμ_v = 0
                let g = bounds.d_gamma[v];
                model.le(format!("d_interp:gamma_hi[{v}]"), LinExpr::from(dg[v]) + LinExpr::term(sigma[v], g), g);
                model.ge(format!("d_interp:gamma_lo[{v}]"), LinExpr::from(dg[v]) - LinExpr::term(sigma[v], g), -g);
                model.le(format!("d_interp:mu_hi[{v}]"), LinExpr::from(dmu[v]) - LinExpr::term(sigma[v], bounds.d_mu), 0.0);
                model.ge(format!("d_interp:mu_lo[{v}]"), LinExpr::from(dmu[v]) + LinExpr::term(sigma[v], bounds.d_mu), 0.0);
            }
            for k in 0..n {
                model.eq(format!("d_interp:point[{k}]"), LinExpr::dot(pts.row(k).iter().cloned(), &dg) - s[k].clone(), 0.0);
            }
            model.eq("d_interp:sum", LinExpr::dot(vec![1.0; nv], &dg), 0.0);
            let ctrl = law.controls();
            Ok((0..ctrl.nrows()).map(|i| LinExpr::dot(ctrl.row(i).iter().cloned(), &dg)).collect())
        }
        (PwaController::MinimalSelection(law), EncodingDetail::MinimalSelection { blocks }) => {
            minimal_selection_gain(model, law, blocks, s)
        }
        _ => Err(Error::Invalid("encoding does not belong to this controller".into())),
    }
}
