//! Polyhedral primitives: gauge functions, sublevel scaling, vertex
//! enumeration, facet sectors, fan triangulation and induced matrix norms.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{combinations, rank};
use crate::opt::{solve_lp, LinExpr, Model, Sense, Status};
use crate::{Error, Result};

/// Default absolute tolerance for containment and activity tests.
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::One => "1",
            Norm::Two => "2",
            Norm::Inf => "inf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "one" | "l1" => Ok(Norm::One),
            "2" | "two" | "l2" => Ok(Norm::Two),
            "inf" | "infinity" | "∞" | "linf" => Ok(Norm::Inf),
            other => Err(Error::Invalid(format!("unknown norm `{other}`"))),
        }
    }
}

impl Norm {
    pub fn of(self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::One => v.iter().map(|x| x.abs()).sum(),
            Norm::Two => v.norm(),
            Norm::Inf => v.amax(),
        }
    }
}

/// Operator norm of `m` induced by the vector norm `alpha`.
pub fn induced_norm(m: &DMatrix<f64>, alpha: Norm) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    match alpha {
        Norm::One => m.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max),
        Norm::Inf => m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max),
        Norm::Two => spectral_norm(m),
    }
}

/// Largest singular value by power iteration on `MᵀM`.
fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let mtm = m.transpose() * m;
    let n = mtm.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i as f64 + 1.0) * 1.618).sin());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let w = &mtm * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-15 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// H-polytope `{x | F x ≤ rhs}` with `rhs > 0`, optionally with its vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    f: DMatrix<f64>,
    rhs: DVector<f64>,
    vertices: Option<Vec<DVector<f64>>>,
}

impl Polytope {
    pub fn new(f: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if f.nrows() != rhs.len() {
            return Err(Error::Dimension(format!("{} facet rows but {} bounds", f.nrows(), rhs.len())));
        }
        if f.iter().chain(rhs.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidPolytope("non-finite entry".into()));
        }
        if rhs.iter().any(|&r| r <= 0.0) {
            return Err(Error::InvalidPolytope("origin is not strictly inside".into()));
        }
        Ok(Self { f, rhs, vertices: None })
    }

    /// `{x | F x ≤ 1}`.
    pub fn from_gauge(f: DMatrix<f64>) -> Result<Self> {
        let p = f.nrows();
        Self::new(f, DVector::from_element(p, 1.0))
    }

    /// Box `{x | |x_k| ≤ half_widths[k]}` with rows `e_k / w_k` followed by `−e_k / w_k`.
    pub fn centered_box(half_widths: &[f64]) -> Result<Self> {
        let n = half_widths.len();
        let mut f = DMatrix::zeros(2 * n, n);
        for (k, &w) in half_widths.iter().enumerate() {
            f[(k, k)] = 1.0 / w;
            f[(n + k, k)] = -1.0 / w;
        }
        Self::from_gauge(f)
    }

    pub fn unit_box(n: usize) -> Self {
        Self::centered_box(&vec![1.0; n]).expect("unit box")
    }

    /// Regular polygon with `p` edges circumscribing the unit circle.
    pub fn regular_polygon(p: usize) -> Result<Self> {
        if p < 3 {
            return Err(Error::InvalidPolytope("a polygon needs at least 3 edges".into()));
        }
        let f = DMatrix::from_fn(p, 2, |j, k| {
            let a = 2.0 * std::f64::consts::PI * j as f64 / p as f64;
            if k == 0 {
                a.cos()
            } else {
                a.sin()
            }
        });
        Self::from_gauge(f)
    }

    pub fn with_vertices(mut self) -> Result<Self> {
        if self.vertices.is_none() {
            self.vertices = Some(self.enumerate_vertices()?);
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.f.ncols()
    }

    pub fn num_facets(&self) -> usize {
        self.f.nrows()
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn cached_vertices(&self) -> Option<&[DVector<f64>]> {
        self.vertices.as_deref()
    }

    /// Vertices, from the cache when present.
    pub fn vertices(&self) -> Result<Vec<DVector<f64>>> {
        match &self.vertices {
            Some(v) => Ok(v.clone()),
            None => self.enumerate_vertices(),
        }
    }

    /// Same set with every row divided by its bound, so that `rhs = 1`.
    pub fn normalized(&self) -> Self {
        let mut f = self.f.clone();
        for (j, mut row) in f.row_iter_mut().enumerate() {
            row /= self.rhs[j];
        }
        Self { rhs: DVector::from_element(self.rhs.len(), 1.0), f, vertices: self.vertices.clone() }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!("point of size {} in a {}-dimensional set", x.len(), self.dim())));
        }
        Ok(())
    }

    /// Minkowski gauge `max_j F_j x / rhs_j`.
    pub fn gauge(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.gauge_unchecked(x))
    }

    pub(crate) fn gauge_unchecked(&self, x: &DVector<f64>) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for j in 0..self.f.nrows() {
            let v = self.f.row(j).iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() / self.rhs[j];
            best = best.max(v);
        }
        best
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim() && self.gauge_unchecked(x) <= 1.0 + tol
    }

    /// The sublevel set `b·S` in gauge form.
    pub fn scale_sublevel(&self, b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Invalid(format!("scaling factor {b} must be positive")));
        }
        let mut out = self.normalized();
        out.f /= b;
        if let Some(v) = &mut out.vertices {
            for x in v.iter_mut() {
                *x *= b;
            }
        }
        Ok(out)
    }

    /// Smallest row index attaining the gauge (within `tol`).
    pub fn facet_sector(&self, x: &DVector<f64>) -> Result<usize> {
        self.check_dim(x)?;
        let vals: Vec<f64> = (0..self.num_facets())
            .map(|j| (self.f.row(j) * x)[0] / self.rhs[j])
            .collect();
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top > 1.0 + 1e-7 {
            return Err(Error::OutsideSet { gauge: top });
        }
        Ok(vals.iter().position(|&v| v >= top - GEOM_TOL).unwrap_or(0))
    }

    /// Brute-force vertex enumeration over `n`-subsets of facets. Vertices are
    /// returned in counter-clockwise angular order for `n = 2` and in
    /// lexicographic order otherwise.
    pub fn enumerate_vertices(&self) -> Result<Vec<DVector<f64>>> {
        let n = self.dim();
        if n == 0 || n > 4 {
            return Err(Error::Unsupported(format!("vertex enumeration in dimension {n}")));
        }
        let mut out: Vec<DVector<f64>> = Vec::new();
        for rows in combinations(self.num_facets(), n) {
            let a = DMatrix::from_fn(n, n, |i, k| self.f[(rows[i], k)]);
            let b = DVector::from_fn(n, |i, _| self.rhs[rows[i]]);
            let Some(x) = a.clone().lu().solve(&b) else { continue };
            if rank(&a, 1e-10) < n || !x.iter().all(|v| v.is_finite()) {
                continue;
            }
            let fx = &self.f * &x;
            if (0..fx.len()).any(|j| fx[j] > self.rhs[j] + 1e-7 * (1.0 + self.rhs[j])) {
                continue;
            }
            if !out.iter().any(|v| (v - &x).amax() <= 1e-7 * (1.0 + x.amax())) {
                out.push(x);
            }
        }
        if out.len() <= n {
            return Err(Error::InvalidPolytope("unbounded or degenerate polytope".into()));
        }
        if n == 2 {
            out.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
        } else {
            out.sort_by(|a, b| {
                a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
            });
        }
        Ok(out)
    }

    /// Rows active at `x` within `tol`.
    pub fn active_rows(&self, x: &DVector<f64>, tol: f64) -> Vec<usize> {
        (0..self.num_facets())
            .filter(|&j| ((self.f.row(j) * x)[0] - self.rhs[j]).abs() <= tol * (1.0 + self.rhs[j]))
            .collect()
    }

    /// Axis-aligned bounding box of the vertex set.
    pub fn bounding_box(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        let v = self.vertices()?;
        let n = self.dim();
        let mut lo = DVector::from_element(n, f64::INFINITY);
        let mut hi = DVector::from_element(n, f64::NEG_INFINITY);
        for x in &v {
            for k in 0..n {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        Ok((lo, hi))
    }

    /// `max_x c·x` over the set, by LP.
    pub fn support(&self, c: &DVector<f64>) -> Result<Option<f64>> {
        let mut m = Model::new();
        let n = self.dim();
        let x: Vec<_> = (0..n).map(|k| m.continuous(format!("x{k}"), f64::NEG_INFINITY, f64::INFINITY)).collect();
        for j in 0..self.num_facets() {
            m.le(format!("f{j}"), LinExpr::dot(self.f.row(j).iter().cloned(), &x), self.rhs[j]);
        }
        m.set_objective(Sense::Maximize, LinExpr::dot(c.iter().cloned(), &x));
        let s = solve_lp(&m)?;
        match s.status {
            Status::Optimal => Ok(Some(s.objective)),
            Status::Unbounded => Ok(None),
            _ => Err(Error::Solver(format!("support LP ended with {:?}", s.status))),
        }
    }

    /// Boundedness by LP along every coordinate direction.
    pub fn is_bounded(&self) -> Result<bool> {
        let n = self.dim();
        for k in 0..n {
            for s in [1.0, -1.0] {
                let mut c = DVector::zeros(n);
                c[k] = s;
                if self.support(&c)?.is_none() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Rows whose removal does not change the set.
    pub fn redundant_rows(&self) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        let n = self.dim();
        for j in 0..self.num_facets() {
            let mut m = Model::new();
            let x: Vec<_> = (0..n).map(|k| m.continuous(format!("x{k}"), f64::NEG_INFINITY, f64::INFINITY)).collect();
            for i in 0..self.num_facets() {
                let rhs = if i == j { self.rhs[i] + 1.0 } else { self.rhs[i] };
                m.le(format!("f{i}"), LinExpr::dot(self.f.row(i).iter().cloned(), &x), rhs);
            }
            m.set_objective(Sense::Maximize, LinExpr::dot(self.f.row(j).iter().cloned(), &x));
            let s = solve_lp(&m)?;
            if s.status == Status::Optimal && s.objective <= self.rhs[j] + 1e-9 {
                out.push(j);
            }
        }
        Ok(out)
    }

    /// Full invariant check: origin inside, bounded, minimal, cached vertices valid.
    pub fn validate(&self) -> Result<()> {
        if !self.is_bounded()? {
            return Err(Error::InvalidPolytope("unbounded".into()));
        }
        let red = self.redundant_rows()?;
        if !red.is_empty() {
            return Err(Error::InvalidPolytope(format!("redundant rows {red:?}")));
        }
        if let Some(vs) = &self.vertices {
            for v in vs {
                if !self.contains(v, 1e-7) || self.active_rows(v, 1e-7).len() < self.dim() {
                    return Err(Error::InvalidPolytope("cached vertex is not a vertex".into()));
                }
            }
        }
        Ok(())
    }

    /// Lebesgue measure, as the sum of the fan simplices' volumes.
    pub fn volume(&self) -> Result<f64> {
        let n = self.dim();
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        Ok(self.triangulate_fan()?.iter().map(|s| s.x.determinant().abs() / fact).sum())
    }

    /// Complete simplicial fan: each simplex is the origin plus `n` vertices
    /// lying on one facet.
    pub fn triangulate_fan(&self) -> Result<Vec<Simplex>> {
        let verts = self.vertices()?;
        let n = self.dim();
        let norm = self.normalized();
        let on_row = |v: &DVector<f64>, j: usize| ((norm.f.row(j) * v)[0] - 1.0).abs() <= 1e-7;
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        if n == 2 {
            let p = verts.len();
            for k in 0..p {
                let (a, b) = (k, (k + 1) % p);
                let h = (0..norm.num_facets())
                    .find(|&j| on_row(&verts[a], j) && on_row(&verts[b], j))
                    .ok_or_else(|| Error::InvalidPolytope("consecutive vertices share no facet".into()))?;
                groups.push((h, vec![a, b]));
            }
        } else {
            for h in 0..norm.num_facets() {
                let face: Vec<usize> = (0..verts.len()).filter(|&v| on_row(&verts[v], h)).collect();
                if affine_rank(&verts, &face) + 1 < n {
                    continue;
                }
                let mut seen: Vec<Vec<usize>> = Vec::new();
                for tri in pull_triangulate(&norm, &verts, &face, vec![h], n - 1) {
                    let mut key = tri.clone();
                    key.sort_unstable();
                    if !seen.contains(&key) {
                        seen.push(key);
                        groups.push((h, tri));
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(groups.len());
        for (h, ids) in groups {
            let x = DMatrix::from_fn(n, n, |i, k| verts[ids[k]][i]);
            let x_inv = x
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidPolytope("degenerate simplex in fan".into()))?;
            out.push(Simplex { facet_index: h, vertex_ids: ids, x, x_inv });
        }
        Ok(out)
    }
}

/// Dimension of the affine hull of the selected vertices.
fn affine_rank(verts: &[DVector<f64>], ids: &[usize]) -> usize {
    if ids.len() < 2 {
        return 0;
    }
    let n = verts[ids[0]].len();
    let d = DMatrix::from_fn(n, ids.len() - 1, |i, k| verts[ids[k + 1]][i] - verts[ids[0]][i]);
    rank(&d, 1e-9)
}

/// Pulling triangulation of a `dim`-dimensional face: cone its sub-faces not
/// containing the lexicographically first vertex over that vertex.
fn pull_triangulate(
    p: &Polytope,
    verts: &[DVector<f64>],
    face: &[usize],
    face_rows: Vec<usize>,
    dim: usize,
) -> Vec<Vec<usize>> {
    let apex = *face
        .iter()
        .min_by(|&&a, &&b| {
            verts[a].iter().zip(verts[b].iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty face");
    if dim == 0 {
        return vec![vec![apex]];
    }
    if dim == 1 {
        let other: Vec<usize> = face.iter().cloned().filter(|&v| v != apex).collect();
        return other.into_iter().map(|v| vec![apex, v]).take(1).collect();
    }
    let mut out = Vec::new();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for j in 0..p.num_facets() {
        if face_rows.contains(&j) {
            continue;
        }
        let sub: Vec<usize> = face
            .iter()
            .cloned()
            .filter(|&v| ((p.f.row(j) * &verts[v])[0] - 1.0).abs() <= 1e-7)
            .collect();
        if sub.contains(&apex) || affine_rank(verts, &sub) + 1 != dim || seen.contains(&sub) {
            continue;
        }
        seen.push(sub.clone());
        let mut rows = face_rows.clone();
        rows.push(j);
        for mut tri in pull_triangulate(p, verts, &sub, rows, dim - 1) {
            tri.insert(0, apex);
            out.push(tri);
        }
    }
    out
}

/// Cone over `n` vertices of one facet, intersected with the polytope.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    pub facet_index: usize,
    /// Indices into the polytope's vertex list.
    pub vertex_ids: Vec<usize>,
    /// Vertices as columns.
    pub x: DMatrix<f64>,
    pub x_inv: DMatrix<f64>,
}

impl Simplex {
    pub fn barycentric(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.x_inv * x
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let l = self.barycentric(x);
        l.iter().all(|&c| c >= -tol) && l.sum() <= 1.0 + tol
    }
}

/// Chebyshev ball of `{x | A x ≤ b}`: `(center, radius)`, or `None` when empty or unbounded.
pub fn chebyshev_ball(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Option<(DVector<f64>, f64)>> {
    let n = a.ncols();
    let mut m = Model::new();
    let x: Vec<_> = (0..n).map(|k| m.continuous(format!("x{k}"), f64::NEG_INFINITY, f64::INFINITY)).collect();
    let r = m.continuous("r", 0.0, f64::INFINITY);
    for j in 0..a.nrows() {
        let norm = a.row(j).norm();
        let mut e = LinExpr::dot(a.row(j).iter().cloned(), &x);
        e.add_term(r, norm);
        m.le(format!("row{j}"), e, b[j]);
    }
    m.set_objective(Sense::Maximize, r.into());
    let s = solve_lp(&m)?;
    match s.status {
        Status::Optimal => Ok(Some((DVector::from_fn(n, |k, _| s.values[x[k].index()]), s.value(r)))),
        _ => Ok(None),
    }
}

/// Vertices of a bounded 2-D polygon `{x | A x ≤ b}` in counter-clockwise order
/// around its centroid.
pub fn polygon_vertices(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for rows in combinations(a.nrows(), 2) {
        let m = DMatrix::from_fn(2, 2, |i, k| a[(rows[i], k)]);
        if m.determinant().abs() < 1e-12 {
            continue;
        }
        let rhs = DVector::from_fn(2, |i, _| b[rows[i]]);
        let Some(x) = m.lu().solve(&rhs) else { continue };
        let ax = a * &x;
        if (0..ax.len()).all(|j| ax[j] <= b[j] + 1e-8 * (1.0 + b[j].abs())) && !out.iter().any(|v| (v - &x).amax() < 1e-9) {
            out.push(x);
        }
    }
    if out.is_empty() {
        return out;
    }
    let c = out.iter().fold(DVector::zeros(2), |acc, v| acc + v) / out.len() as f64;
    out.sort_by(|p, q| (p[1] - c[1]).atan2(p[0] - c[0]).total_cmp(&(q[1] - c[1]).atan2(q[0] - c[0])));
    out
}

/// Shoelace area of a polygon given in order.
pub fn polygon_area(v: &[DVector<f64>]) -> f64 {
    let k = v.len();
    (0..k).map(|i| v[i][0] * v[(i + 1) % k][1] - v[(i + 1) % k][0] * v[i][1]).sum::<f64>().abs() / 2.0
}
