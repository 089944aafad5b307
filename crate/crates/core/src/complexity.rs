//! Depth and width requirements for a ReLU network that reproduces a
//! piecewise affine controller exactly, plus the geometric checks on planar
//! partitions that feed them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::controllers::Partition;
use crate::relu::{Layer, ReluNetwork};
use crate::{Error, Polytope, Result};

/// Region count `N^r`, state and input dimensions and highest order of intersection `k̄`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityQuery {
    pub regions: u64,
    pub state_dim: usize,
    pub input_dim: usize,
    pub depth: usize,
}

impl ComplexityQuery {
    /// `k̄` defaults to the state dimension.
    pub fn new(regions: u64, state_dim: usize, input_dim: usize) -> Self {
        Self { regions, state_dim, input_dim, depth: state_dim }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    /// Query built from a planar partition, with `k̄` detected from its boundaries.
    pub fn from_partition(partition: &Partition, set: &Polytope, input_dim: usize) -> Result<Self> {
        let depth = intersection_order(partition, set)?;
        Ok(Self { regions: partition.regions.len() as u64, state_dim: set.dim(), input_dim, depth })
    }

    fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.depth == 0 {
            return Err(Error::Invalid("state dimension and depth must be positive".into()));
        }
        Ok(())
    }
}

/// Smallest uniform width together with the depth it applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidthBound {
    pub width: usize,
    pub depth: usize,
    /// Regions guaranteed by `depth` layers of `width` neurons.
    pub capacity: u128,
}

/// `Σ_{i=0}^{n} C(m, i)`, with `C(m, i) = 0` for `i > m`.
pub fn binomial_sum(m: usize, n: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for i in 0..=n.min(m) {
        total = total.saturating_add(c);
        c = c.saturating_mul((m - i) as u128) / (i as u128 + 1);
    }
    total
}

/// Lower bound on the affine regions of a network with the given hidden widths:
/// `∏ ⌊n_j/n⌋ⁿ · Σ C(m, i)`, saturating.
pub fn region_capacity(state_dim: usize, input_dim: usize, widths: &[usize]) -> u128 {
    let mut cap = binomial_sum(input_dim, state_dim);
    for &w in widths {
        let q = (w / state_dim) as u128;
        for _ in 0..state_dim {
            cap = cap.saturating_mul(q);
        }
    }
    cap
}

/// Smallest `N̄ ≥ n` with `⌊N̄/n⌋^{n k̄} Σ C(m, i) ≥ N^r`.
pub fn min_uniform_width(q: &ComplexityQuery) -> Result<WidthBound> {
    q.validate()?;
    let n = q.state_dim;
    let target = q.regions as u128;
    // capacity only changes at multiples of n
    let mut width = n;
    loop {
        let capacity = region_capacity(n, q.input_dim, &vec![width; q.depth]);
        if capacity >= target {
            return Ok(WidthBound { width, depth: q.depth, capacity });
        }
        width += n;
    }
}

/// Whether hidden layers of the given widths guarantee `N^r` regions.
pub fn check_widths(q: &ComplexityQuery, widths: &[usize]) -> Result<bool> {
    q.validate()?;
    if widths.len() != q.depth {
        return Err(Error::Dimension(format!("{} widths for depth {}", widths.len(), q.depth)));
    }
    Ok(region_capacity(q.state_dim, q.input_dim, widths) >= q.regions as u128)
}

/// Segment shared by two regions, with the line oriented so that `normal·x + offset > 0`
/// on the side of `positive`.
#[derive(Clone, Debug)]
struct SharedEdge {
    negative: usize,
    positive: usize,
    normal: DVector<f64>,
    offset: f64,
    ends: (DVector<f64>, DVector<f64>),
}

fn extent(partition: &Partition) -> f64 {
    let pts = partition.regions.iter().flat_map(|r| r.vertices.iter());
    pts.clone().flat_map(|p| pts.clone().map(move |q| (p - q).amax())).fold(0.0, f64::max)
}

/// Unit normal with its first significant component positive.
fn canonical_line(normal: DVector<f64>, offset: f64) -> (DVector<f64>, f64, bool) {
    let flip = normal.iter().find(|c| c.abs() > 1e-9).is_some_and(|&c| c < 0.0);
    if flip {
        (-normal, -offset, true)
    } else {
        (normal, offset, false)
    }
}

fn shared_edges(partition: &Partition) -> Result<Vec<SharedEdge>> {
    let regs = &partition.regions;
    if regs.iter().any(|r| r.vertices.first().is_some_and(|v| v.len() != 2)) {
        return Err(Error::Unsupported("boundary analysis needs a planar partition".into()));
    }
    let tol = 1e-8 * (1.0 + extent(partition));
    let edges = |k: usize| {
        let v = &regs[k].vertices;
        (0..v.len()).map(move |i| (v[i].clone(), v[(i + 1) % v.len()].clone()))
    };
    let mut out = Vec::new();
    for p in 0..regs.len() {
        for (a, b) in edges(p) {
            let dir = &b - &a;
            let len = dir.norm();
            if len <= tol {
                continue;
            }
            let u = &dir / len;
            // outward normal of a counter-clockwise polygon
            let normal = DVector::from_vec(vec![u[1], -u[0]]);
            let offset = -normal.dot(&a);
            for q in (p + 1)..regs.len() {
                for (c, d) in edges(q) {
                    let on_line = |x: &DVector<f64>| (normal.dot(x) + offset).abs() <= tol;
                    if !on_line(&c) || !on_line(&d) {
                        continue;
                    }
                    let (s0, s1) = (u.dot(&(&c - &a)), u.dot(&(&d - &a)));
                    let lo = s0.min(s1).max(0.0);
                    let hi = s0.max(s1).min(len);
                    if hi - lo <= tol {
                        continue;
                    }
                    let (normal, offset, flip) = canonical_line(normal.clone(), offset);
                    // region p lies on the non-positive side of its outward normal
                    let (negative, positive) = if flip { (q, p) } else { (p, q) };
                    out.push(SharedEdge { negative, positive, normal, offset, ends: (&a + &u * lo, &a + &u * hi) });
                }
            }
        }
    }
    Ok(out)
}

/// Highest order of intersection of a planar partition: 0 without interior
/// boundaries, 1 if boundaries never cross, 2 if two boundary lines meet in `S`.
pub fn intersection_order(partition: &Partition, set: &Polytope) -> Result<usize> {
    if set.dim() != 2 {
        return Err(Error::Unsupported(format!("intersection order in dimension {}", set.dim())));
    }
    let edges: Vec<SharedEdge> = shared_edges(partition)?.into_iter().filter(|e| has_jump(partition, e)).collect();
    if edges.is_empty() {
        return Ok(0);
    }
    let tol = 1e-7 * (1.0 + extent(partition));
    for e in &edges {
        for point in [&e.ends.0, &e.ends.1] {
            let crossing = edges.iter().any(|o| {
                let touches = (&o.ends.0 - point).norm() <= tol || (&o.ends.1 - point).norm() <= tol;
                touches && (o.normal.dot(&e.normal).abs() < 1.0 - 1e-9)
            });
            if crossing {
                return Ok(2);
            }
        }
    }
    Ok(1)
}

fn jump(partition: &Partition, e: &SharedEdge) -> (DMatrix<f64>, DVector<f64>) {
    let (p, q) = (&partition.regions[e.positive], &partition.regions[e.negative]);
    (&p.gain - &q.gain, &p.offset - &q.offset)
}

fn has_jump(partition: &Partition, e: &SharedEdge) -> bool {
    let (d, g) = jump(partition, e);
    let scale = 1.0 + partition.regions[e.positive].gain.amax() + partition.regions[e.negative].gain.amax();
    d.amax() > 1e-9 * scale || g.amax() > 1e-9 * scale
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Gain jump across the boundary is not of the form `γ αᵀ`.
    NotRankOne,
    /// Two pieces of the same boundary line carry different jumps.
    InconsistentJump,
    /// The boundary line stops inside a region instead of crossing the set.
    Interrupted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryViolation {
    pub kind: ViolationKind,
    /// Boundary `{x | normalᵀx + offset = 0}`.
    pub normal: DVector<f64>,
    pub offset: f64,
    pub regions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub holds: bool,
    pub violation: Option<BoundaryViolation>,
}

/// Boundary line carrying the jump `G₊ − G₋ = γ αᵀ`, `g₊ − g₋ = δ`.
struct JumpLine {
    normal: DVector<f64>,
    offset: f64,
    gamma: DVector<f64>,
    delta: DVector<f64>,
}

fn jump_lines(partition: &Partition) -> Result<std::result::Result<Vec<JumpLine>, BoundaryViolation>> {
    let edges: Vec<SharedEdge> = shared_edges(partition)?.into_iter().filter(|e| has_jump(partition, e)).collect();
    let tol = 1e-7 * (1.0 + partition.regions.iter().map(|r| r.gain.amax() + r.offset.amax()).fold(0.0, f64::max));
    let geo = 1e-7 * (1.0 + extent(partition));
    let fail = |kind, e: &SharedEdge, regions: Vec<usize>| {
        Ok(Err(BoundaryViolation { kind, normal: e.normal.clone(), offset: e.offset, regions }))
    };
    let mut lines: Vec<(usize, JumpLine)> = Vec::new();
    for (k, e) in edges.iter().enumerate() {
        let (d, delta) = jump(partition, e);
        let gamma = &d * &e.normal;
        if (&d - &gamma * e.normal.transpose()).amax() > tol {
            return fail(ViolationKind::NotRankOne, e, vec![e.positive, e.negative]);
        }
        let same_line = |o: &JumpLine| (&o.normal - &e.normal).amax() <= 1e-9 && (o.offset - e.offset).abs() <= geo;
        match lines.iter().find(|(_, l)| same_line(l)) {
            Some((i, l)) => {
                if (&gamma - &l.gamma).amax() > tol || (&delta - &l.delta).amax() > tol {
                    let o = &edges[*i];
                    return fail(ViolationKind::InconsistentJump, e, vec![e.positive, e.negative, o.positive, o.negative]);
                }
            }
            None => lines.push((k, JumpLine { normal: e.normal.clone(), offset: e.offset, gamma, delta })),
        }
    }
    for (i, l) in &lines {
        for (r, region) in partition.regions.iter().enumerate() {
            let side = region.vertices.iter().map(|v| l.normal.dot(v) + l.offset);
            let (lo, hi) = side.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
            if lo < -geo && hi > geo {
                return fail(ViolationKind::Interrupted, &edges[*i], vec![r]);
            }
        }
    }
    Ok(Ok(lines.into_iter().map(|(_, l)| l).collect()))
}

/// Consistent variation test on a planar partition: every boundary line
/// carries one jump `G_p − G_p′ = γ αᵀ`, `g_p − g_p′ = δ` along its whole
/// extent, and no line ends inside a region.
pub fn consistent_variation_check(partition: &Partition) -> Result<VariationReport> {
    Ok(match jump_lines(partition)? {
        Ok(_) => VariationReport { holds: true, violation: None },
        Err(v) => VariationReport { holds: false, violation: Some(v) },
    })
}

/// One-hidden-layer network reproducing a continuous planar PWA map with the
/// consistent variation property: `Lx + l + Σ_q ½γ_q |α_qᵀx + β_q|`, each
/// absolute value spelled as two ReLUs.
pub fn one_layer_replica(partition: &Partition) -> Result<ReluNetwork> {
    let lines = match jump_lines(partition)? {
        Ok(l) => l,
        Err(v) => return Err(Error::Invalid(format!("consistent variation fails: {:?}", v.kind))),
    };
    let first = partition.regions.first().ok_or_else(|| Error::Invalid("empty partition".into()))?;
    let (m, n) = first.gain.shape();
    let scale = 1.0 + first.gain.amax() + first.offset.amax();
    if lines.iter().any(|l| (&l.delta - &l.gamma * l.offset).amax() > 1e-7 * scale) {
        return Err(Error::Invalid("map is discontinuous across a boundary".into()));
    }
    // remove the kinks seen from the first region to get the linear part
    let centre = first.vertices.iter().fold(DVector::zeros(n), |acc, v| acc + v) / first.vertices.len().max(1) as f64;
    let mut lin = first.gain.clone();
    let mut off = first.offset.clone();
    for l in &lines {
        let s = (l.normal.dot(&centre) + l.offset).signum();
        lin -= &l.gamma * l.normal.transpose() * (0.5 * s);
        off -= &l.gamma * (0.5 * s * l.offset);
    }
    let k = 2 * n + 2 * lines.len();
    let mut w1 = DMatrix::zeros(k, n);
    let mut b1 = DVector::zeros(k);
    let mut w2 = DMatrix::zeros(m, k);
    for i in 0..n {
        // x = relu(x) − relu(−x)
        w1[(2 * i, i)] = 1.0;
        w1[(2 * i + 1, i)] = -1.0;
        w2.column_mut(2 * i).copy_from(&lin.column(i));
        w2.column_mut(2 * i + 1).copy_from(&(-lin.column(i)));
    }
    for (q, l) in lines.iter().enumerate() {
        let r = 2 * n + 2 * q;
        w1.row_mut(r).copy_from(&l.normal.transpose());
        w1.row_mut(r + 1).copy_from(&(-l.normal.transpose()));
        b1[r] = l.offset;
        b1[r + 1] = -l.offset;
        w2.column_mut(r).copy_from(&(&l.gamma * 0.5));
        w2.column_mut(r + 1).copy_from(&(&l.gamma * 0.5));
    }
    ReluNetwork::new(vec![Layer { weights: w1, bias: b1 }, Layer { weights: w2, bias: off }])
}
