//! Explicit solution of planar multi-parametric QPs by walking across region facets.

use nalgebra::{DMatrix, DVector};

use crate::geometry::{chebyshev_ball, polygon_area, polygon_vertices};
use crate::linalg::rank;
use crate::opt::{Qp, QpConfig, QpSolution};
use crate::{Error, Result};

/// `min ½vᵀHv + (Lx)ᵀv  s.t.  E v = e₀ + Eₓx,  G v ≤ g₀ + Gₓx`.
#[derive(Clone, Debug)]
pub struct ParametricQp {
    pub hess: DMatrix<f64>,
    pub lin_x: DMatrix<f64>,
    pub eq: DMatrix<f64>,
    pub eq0: DVector<f64>,
    pub eq_x: DMatrix<f64>,
    pub ineq: DMatrix<f64>,
    pub ineq0: DVector<f64>,
    pub ineq_x: DMatrix<f64>,
}

/// Primal solution and active multipliers as affine functions of the parameter.
#[derive(Clone, Debug)]
pub struct AffineKkt {
    pub gain: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub mult_gain: DMatrix<f64>,
    pub mult_offset: DVector<f64>,
    pub eq_mult_gain: DMatrix<f64>,
    pub eq_mult_offset: DVector<f64>,
}

impl ParametricQp {
    pub fn num_params(&self) -> usize {
        self.lin_x.ncols()
    }

    pub fn solve_at(&self, x: &DVector<f64>) -> Result<QpSolution> {
        let q = &self.lin_x * x;
        let rhs = &self.ineq0 + &self.ineq_x * x;
        let e = &self.eq0 + &self.eq_x * x;
        let eq = (self.eq.nrows() > 0).then_some((&self.eq, &e));
        Qp { h: &self.hess, q: &q, g: &self.ineq, rhs: &rhs, eq }.solve(QpConfig::default())
    }

    /// Whether the equality rows and the given inequality rows are linearly independent.
    pub fn licq(&self, active: &[usize]) -> bool {
        let nv = self.hess.nrows();
        let ne = self.eq.nrows();
        let mut a = DMatrix::zeros(ne + active.len(), nv);
        a.rows_mut(0, ne).copy_from(&self.eq);
        for (r, &i) in active.iter().enumerate() {
            a.row_mut(ne + r).copy_from(&self.ineq.row(i));
        }
        rank(&a, 1e-9) == a.nrows()
    }

    /// Solves the KKT system of the given active set for every parameter at once.
    pub fn affine_kkt(&self, active: &[usize]) -> Option<AffineKkt> {
        let nv = self.hess.nrows();
        let ne = self.eq.nrows();
        let na = active.len();
        let n = self.num_params();
        let dim = nv + ne + na;
        let mut k = DMatrix::zeros(dim, dim);
        k.view_mut((0, 0), (nv, nv)).copy_from(&self.hess);
        let mut rhs = DMatrix::zeros(dim, n + 1);
        rhs.view_mut((0, 0), (nv, n)).copy_from(&(-&self.lin_x));
        for r in 0..ne {
            for c in 0..nv {
                k[(nv + r, c)] = self.eq[(r, c)];
                k[(c, nv + r)] = self.eq[(r, c)];
            }
            for c in 0..n {
                rhs[(nv + r, c)] = self.eq_x[(r, c)];
            }
            rhs[(nv + r, n)] = self.eq0[r];
        }
        for (r, &i) in active.iter().enumerate() {
            for c in 0..nv {
                k[(nv + ne + r, c)] = self.ineq[(i, c)];
                k[(c, nv + ne + r)] = self.ineq[(i, c)];
            }
            for c in 0..n {
                rhs[(nv + ne + r, c)] = self.ineq_x[(i, c)];
            }
            rhs[(nv + ne + r, n)] = self.ineq0[i];
        }
        if rank(&k, 1e-11) < dim {
            return None;
        }
        let s = k.lu().solve(&rhs)?;
        Some(AffineKkt {
            gain: s.view((0, 0), (nv, n)).into_owned(),
            offset: s.view((0, n), (nv, 1)).column(0).into_owned(),
            mult_gain: s.view((nv + ne, 0), (na, n)).into_owned(),
            mult_offset: s.view((nv + ne, n), (na, 1)).column(0).into_owned(),
            eq_mult_gain: s.view((nv, 0), (ne, n)).into_owned(),
            eq_mult_offset: s.view((nv, n), (ne, 1)).column(0).into_owned(),
        })
    }
}

/// Polyhedral piece on which a controller is affine: `u = K x + k` for `F x ≤ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub sector: usize,
    pub active: Vec<usize>,
    pub gain: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub f: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Counter-clockwise vertices (planar regions only).
    pub vertices: Vec<DVector<f64>>,
}

impl Region {
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let fx = &self.f * x;
        (0..fx.len()).all(|j| fx[j] <= self.rhs[j] + tol * (1.0 + self.rhs[j].abs()))
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.gain * x + &self.offset
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Partition {
    pub regions: Vec<Region>,
}

impl Partition {
    pub fn locate(&self, x: &DVector<f64>, tol: f64) -> Option<&Region> {
        self.regions.iter().find(|r| r.contains(x, tol))
    }
}

/// Full-dimensional polygon `{A x ≤ b}` reduced to its facet rows, or `None`.
pub(crate) fn planar_piece(a: &DMatrix<f64>, b: &DVector<f64>, min_area: f64) -> Option<(DMatrix<f64>, DVector<f64>, Vec<DVector<f64>>)> {
    let verts = polygon_vertices(a, b);
    if verts.len() < 3 || polygon_area(&verts) <= min_area {
        return None;
    }
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for j in 0..a.nrows() {
        let norm = a.row(j).norm();
        if norm < 1e-12 {
            continue;
        }
        let row = a.row(j).transpose() / norm;
        let r = b[j] / norm;
        let on = verts.iter().filter(|v| (row.dot(v) - r).abs() <= 1e-8 * (1.0 + r.abs())).count();
        if on >= 2 && !rows.iter().any(|(q, s)| (q - &row).amax() < 1e-9 && (s - r).abs() < 1e-9) {
            rows.push((row, r));
        }
    }
    let f = DMatrix::from_fn(rows.len(), a.ncols(), |i, k| rows[i].0[k]);
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|x| x.1));
    Some((f, rhs, verts))
}

/// Output map `u = O v + Oₓ x` applied to the solution of a [`ParametricQp`].
pub(crate) struct OutputMap<'a> {
    pub v: &'a DMatrix<f64>,
    pub x: &'a DMatrix<f64>,
}

/// All full-dimensional critical regions of `qp` over the planar domain `{A x ≤ b}`.
pub(crate) fn enumerate_planar(
    qp: &ParametricQp,
    domain_a: &DMatrix<f64>,
    domain_b: &DVector<f64>,
    out: OutputMap<'_>,
    sector: usize,
) -> Result<Vec<Region>> {
    if qp.num_params() != 2 {
        return Err(Error::Unsupported(format!("region enumeration in dimension {}", qp.num_params())));
    }
    let dverts = polygon_vertices(domain_a, domain_b);
    let total = polygon_area(&dverts);
    if dverts.len() < 3 || total <= 0.0 {
        return Ok(Vec::new());
    }
    let diam = dverts
        .iter()
        .flat_map(|p| dverts.iter().map(move |q| (p - q).norm()))
        .fold(0.0, f64::max);
    let step = 1e-6 * diam;
    let min_area = 1e-12 * total;
    let same_domain_edge = |p: &DVector<f64>, q: &DVector<f64>| {
        (0..domain_a.nrows()).any(|j| {
            let tol = 1e-8 * domain_a.row(j).norm().max(1.0) * (1.0 + diam);
            ((domain_a.row(j) * p)[0] - domain_b[j]).abs() <= tol && ((domain_a.row(j) * q)[0] - domain_b[j]).abs() <= tol
        })
    };

    let mut regions: Vec<Region> = Vec::new();
    let mut queue: Vec<DVector<f64>> = Vec::new();
    if let Some((c, _)) = chebyshev_ball(domain_a, domain_b)? {
        queue.push(c);
    }
    let inside_domain = |x: &DVector<f64>| {
        let ax = domain_a * x;
        (0..ax.len()).all(|j| ax[j] < domain_b[j])
    };
    let mut probes_used = false;
    loop {
        while let Some(x) = queue.pop() {
            if !inside_domain(&x) || regions.iter().any(|r| r.contains(&x, 1e-12)) {
                continue;
            }
            let region = region_at(qp, domain_a, domain_b, &out, sector, &x, min_area)?;
            if regions.iter().any(|r| r.active == region.active) {
                continue;
            }
            let p = region.vertices.len();
            for k in 0..p {
                let (a, b) = (&region.vertices[k], &region.vertices[(k + 1) % p]);
                if same_domain_edge(a, b) {
                    continue;
                }
                let edge = b - a;
                // outward normal of a counter-clockwise polygon
                let normal = DVector::from_vec(vec![edge[1], -edge[0]]) / edge.norm();
                for t in [0.5, 0.2, 0.8] {
                    queue.push(a + &edge * t + &normal * step);
                }
            }
            regions.push(region);
        }
        let covered: f64 = regions.iter().map(Region::area).sum();
        if (total - covered).abs() <= 1e-7 * total {
            break;
        }
        if probes_used {
            return Err(Error::Solver(format!(
                "region walk covered {covered:.9} of {total:.9} in sector {sector}"
            )));
        }
        probes_used = true;
        let (lo, hi) = dverts.iter().fold(
            (DVector::from_element(2, f64::INFINITY), DVector::from_element(2, f64::NEG_INFINITY)),
            |(lo, hi), v| (lo.inf(v), hi.sup(v)),
        );
        let k = 97;
        for i in 0..k {
            for j in 0..k {
                let t = DVector::from_vec(vec![(i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64]);
                queue.push(&lo + (&hi - &lo).component_mul(&t));
            }
        }
    }
    Ok(regions)
}

fn region_at(
    qp: &ParametricQp,
    domain_a: &DMatrix<f64>,
    domain_b: &DVector<f64>,
    out: &OutputMap<'_>,
    sector: usize,
    x: &DVector<f64>,
    min_area: f64,
) -> Result<Region> {
    let sol = qp.solve_at(x)?;
    let scale = 1.0 + sol.multipliers.amax();
    let mut strong: Vec<usize> = (0..sol.multipliers.len()).filter(|&i| sol.multipliers[i] > 1e-9 * scale).collect();
    strong.sort_unstable();
    let mut working = sol.active.clone();
    working.sort_unstable();
    for cand in [&strong, &working] {
        if !qp.licq(cand) {
            continue;
        }
        let Some(kkt) = qp.affine_kkt(cand) else { continue };
        let (a, b) = critical_rows(qp, domain_a, domain_b, cand, &kkt);
        let Some((f, rhs, vertices)) = planar_piece(&a, &b, min_area) else { continue };
        let fx = &f * x;
        if (0..fx.len()).any(|j| fx[j] > rhs[j] + 1e-7) {
            continue;
        }
        return Ok(Region {
            sector,
            active: cand.clone(),
            gain: out.v * &kkt.gain + out.x,
            offset: out.v * &kkt.offset,
            f,
            rhs,
            vertices,
        });
    }
    Err(Error::Licq { sector, active: strong })
}

/// Domain rows, primal feasibility of inactive rows and nonnegativity of active multipliers.
fn critical_rows(
    qp: &ParametricQp,
    domain_a: &DMatrix<f64>,
    domain_b: &DVector<f64>,
    active: &[usize],
    kkt: &AffineKkt,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = qp.num_params();
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for j in 0..domain_a.nrows() {
        rows.push((domain_a.row(j).transpose(), domain_b[j]));
    }
    for i in 0..qp.ineq.nrows() {
        if active.contains(&i) {
            continue;
        }
        let g = qp.ineq.row(i);
        let coef = (g * &kkt.gain).transpose() - qp.ineq_x.row(i).transpose();
        rows.push((coef, qp.ineq0[i] - (g * &kkt.offset)[0]));
    }
    for r in 0..active.len() {
        rows.push((-kkt.mult_gain.row(r).transpose(), kkt.mult_offset[r]));
    }
    let a = DMatrix::from_fn(rows.len(), n, |i, k| rows[i].0[k]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    (a, b)
}
