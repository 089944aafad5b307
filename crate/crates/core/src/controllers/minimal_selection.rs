//! Minimal-selection control: on each facet sector solve
//! `min ½vᵀHv + xᵀPv` over the inputs that keep every generator's successor
//! inside `λ·Ψ(x)·S` and the input inside `U`.

use nalgebra::{DMatrix, DVector};

use super::regions::{self, ParametricQp, Partition};
use super::within_set;
use crate::linalg::rank;
use crate::opt::{Qp, QpConfig, QpSolution};
use crate::system::{InvariantSetSpec, PolytopicSystem};
use crate::{Error, Polytope, Result};

#[derive(Clone, Debug)]
pub struct MinimalSelectionLaw {
    set: Polytope,
    lambda: f64,
    hess: DMatrix<f64>,
    cross: DMatrix<f64>,
    /// Constraint rows on `v`: input rows first, then `F Bᵢ` per generator.
    rows: DMatrix<f64>,
    rows_rhs: DVector<f64>,
    /// `F Aᵢ` stacked per generator.
    state_rows: DMatrix<f64>,
    num_input_rows: usize,
}

impl MinimalSelectionLaw {
    /// `hess` is the `m×m` positive definite weight and `cross` the `n×m` coupling.
    pub fn new(sys: &PolytopicSystem, spec: &InvariantSetSpec, hess: DMatrix<f64>, cross: DMatrix<f64>) -> Result<Self> {
        let n = sys.state_dim();
        let m = sys.input_dim();
        if hess.shape() != (m, m) || cross.shape() != (n, m) {
            return Err(Error::Dimension("cost weights".into()));
        }
        if (&hess - hess.transpose()).amax() > 1e-12 * (1.0 + hess.amax()) || hess.clone().cholesky().is_none() {
            return Err(Error::Invalid("cost Hessian must be symmetric positive definite".into()));
        }
        let set = spec.set.normalized();
        let inputs = spec.inputs.normalized();
        let p = set.num_facets();
        let l = inputs.num_facets();
        let k = l + p * sys.generators();
        let mut rows = DMatrix::zeros(k, m);
        let mut rows_rhs = DVector::zeros(k);
        let mut state_rows = DMatrix::zeros(k, n);
        rows.rows_mut(0, l).copy_from(inputs.f());
        rows_rhs.rows_mut(0, l).fill(1.0);
        for i in 0..sys.generators() {
            rows.rows_mut(l + i * p, p).copy_from(&(set.f() * sys.b(i)));
            state_rows.rows_mut(l + i * p, p).copy_from(&(set.f() * sys.a(i)));
        }
        Ok(Self {
            set,
            lambda: spec.lambda,
            hess,
            cross,
            rows,
            rows_rhs,
            state_rows,
            num_input_rows: l,
        })
    }

    pub fn set(&self) -> &Polytope {
        &self.set
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn hess(&self) -> &DMatrix<f64> {
        &self.hess
    }

    pub fn cross(&self) -> &DMatrix<f64> {
        &self.cross
    }

    pub fn input_dim(&self) -> usize {
        self.hess.nrows()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn num_input_rows(&self) -> usize {
        self.num_input_rows
    }

    /// Constraint matrix `C` on the input.
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Constant right-hand side `d`.
    pub fn rows_rhs(&self) -> &DVector<f64> {
        &self.rows_rhs
    }

    /// State coefficient of the right-hand side on sector `h`: input rows are
    /// zero and generator rows read `λ F_h − F_j Aᵢ`.
    pub fn sector_matrix(&self, h: usize) -> DMatrix<f64> {
        let mut s = -self.state_rows.clone();
        let fh = self.set.f().row(h).into_owned() * self.lambda;
        for r in self.num_input_rows..s.nrows() {
            let row = s.row(r) + &fh;
            s.row_mut(r).copy_from(&row);
        }
        s
    }

    /// Right-hand side coefficient after the shift `z = v + H⁻¹Pᵀx` that removes the cross term.
    pub fn shifted_sector_matrix(&self, h: usize) -> DMatrix<f64> {
        self.sector_matrix(h) + &self.rows * self.shift()
    }

    /// `H⁻¹Pᵀ`.
    pub fn shift(&self) -> DMatrix<f64> {
        self.hess.clone().lu().solve(&self.cross.transpose()).expect("positive definite")
    }

    pub fn solve_sector(&self, x: &DVector<f64>, h: usize) -> Result<QpSolution> {
        let q = self.cross.transpose() * x;
        let rhs = &self.rows_rhs + self.sector_matrix(h) * x;
        Qp { h: &self.hess, q: &q, g: &self.rows, rhs: &rhs, eq: None }.solve(QpConfig::default())
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        within_set(&self.set, x)?;
        let h = self.set.facet_sector(x)?;
        Ok(self.solve_sector(x, h)?.x)
    }

    /// Rows with zero slack at the optimum of sector `facet_sector(x)`.
    pub fn active_rows(&self, x: &DVector<f64>, tol: f64) -> Result<Vec<usize>> {
        within_set(&self.set, x)?;
        let h = self.set.facet_sector(x)?;
        let v = self.solve_sector(x, h)?.x;
        let slack = &self.rows_rhs + self.sector_matrix(h) * x - &self.rows * v;
        Ok((0..slack.len()).filter(|&i| slack[i].abs() <= tol).collect())
    }

    /// Whether the active rows at `x` are linearly independent.
    pub fn check_licq(&self, x: &DVector<f64>) -> Result<bool> {
        let act = self.active_rows(x, 1e-9)?;
        let c = DMatrix::from_fn(act.len(), self.input_dim(), |i, k| self.rows[(act[i], k)]);
        Ok(rank(&c, 1e-9) == act.len())
    }

    pub fn parametric_qp(&self, h: usize) -> ParametricQp {
        let m = self.input_dim();
        let n = self.set.dim();
        ParametricQp {
            hess: self.hess.clone(),
            lin_x: self.cross.transpose(),
            eq: DMatrix::zeros(0, m),
            eq0: DVector::zeros(0),
            eq_x: DMatrix::zeros(0, n),
            ineq: self.rows.clone(),
            ineq0: self.rows_rhs.clone(),
            ineq_x: self.sector_matrix(h),
        }
    }

    /// `{x ∈ S | F_h x ≥ F_j x  ∀j}` as `(A, b)`.
    pub fn sector_domain(&self, h: usize) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.set.num_facets();
        let n = self.set.dim();
        let f = self.set.f();
        let mut a = DMatrix::zeros(2 * p - 1, n);
        let mut b = DVector::zeros(2 * p - 1);
        a.rows_mut(0, p).copy_from(f);
        b.rows_mut(0, p).fill(1.0);
        let mut r = p;
        for j in (0..p).filter(|&j| j != h) {
            a.row_mut(r).copy_from(&(f.row(j) - f.row(h)));
            r += 1;
        }
        (a, b)
    }

    /// Critical regions of every sector (planar sets only).
    pub fn partition(&self) -> Result<Partition> {
        let m = self.input_dim();
        let n = self.set.dim();
        let id = DMatrix::identity(m, m);
        let zero = DMatrix::zeros(m, n);
        let mut out = Vec::new();
        for h in 0..self.set.num_facets() {
            let (a, b) = self.sector_domain(h);
            out.extend(regions::enumerate_planar(
                &self.parametric_qp(h),
                &a,
                &b,
                regions::OutputMap { v: &id, x: &zero },
                h,
            )?);
        }
        Ok(Partition { regions: out })
    }
}
