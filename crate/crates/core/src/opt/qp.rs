//! Strictly convex QP `min ½vᵀHv + qᵀv  s.t.  G v ≤ h,  E v = e`.
//!
//! Active-set method in the dual (Goldfarb–Idnani) form: it starts from the
//! unconstrained minimiser with an empty active set and adds the most violated
//! inequality one at a time, dropping active constraints whose multipliers
//! would turn negative. No feasible starting point is needed and every
//! intermediate iterate is dual feasible.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// One multiplier per inequality row (zero when inactive).
    pub multipliers: DVector<f64>,
    pub eq_multipliers: DVector<f64>,
    /// Inequality rows in the final working set, in insertion order.
    pub active: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct QpConfig {
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for QpConfig {
    fn default() -> Self {
        Self { feas_tol: 1e-10, max_iter: 10_000 }
    }
}

pub struct Qp<'a> {
    pub h: &'a DMatrix<f64>,
    pub q: &'a DVector<f64>,
    pub g: &'a DMatrix<f64>,
    pub rhs: &'a DVector<f64>,
    pub eq: Option<(&'a DMatrix<f64>, &'a DVector<f64>)>,
}

pub fn solve_qp(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    g: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> Result<QpSolution> {
    Qp { h, q, g, rhs, eq: None }.solve(QpConfig::default())
}

impl Qp<'_> {
    pub fn solve(&self, cfg: QpConfig) -> Result<QpSolution> {
        let n = self.h.nrows();
        if self.h.ncols() != n || self.q.len() != n || self.g.ncols() != n || self.g.nrows() != self.rhs.len() {
            return Err(Error::Dimension("QP data".into()));
        }
        if self.h.clone().cholesky().is_none() {
            return Err(Error::Invalid("QP Hessian is not positive definite".into()));
        }
        let (e_mat, e_rhs) = match self.eq {
            Some((e, r)) => (e.clone(), r.clone()),
            None => (DMatrix::zeros(0, n), DVector::zeros(0)),
        };
        let ne = e_mat.nrows();
        let mi = self.g.nrows();
        let scale: f64 = 1.0 + self.rhs.amax();

        // equality-constrained start
        let (mut x, mut lam) = {
            let k = self.kkt(&e_mat, &[]);
            let mut r = DVector::zeros(n + ne);
            r.rows_mut(0, n).copy_from(&(-self.q));
            r.rows_mut(n, ne).copy_from(&e_rhs);
            let s = k
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Invalid("dependent equality constraints".into()))?;
            (s.rows(0, n).into_owned(), s.rows(n, ne).into_owned())
        };
        let mut active: Vec<usize> = Vec::new();
        let mut u: Vec<f64> = Vec::new();
        let mut iterations = 0;

        loop {
            // most violated inequality
            let mut p = None;
            let mut worst = cfg.feas_tol * scale;
            for i in 0..mi {
                if active.contains(&i) {
                    continue;
                }
                let v = (self.g.row(i) * &x)[0] - self.rhs[i];
                if v > worst {
                    worst = v;
                    p = Some(i);
                }
            }
            let Some(p) = p else { break };
            let gp = self.g.row(p).transpose();
            let mut up = 0.0;
            loop {
                iterations += 1;
                if iterations > cfg.max_iter {
                    return Err(Error::Solver("QP iteration limit".into()));
                }
                let k = self.kkt(&e_mat, &active);
                let na = active.len();
                let mut r = DVector::zeros(n + ne + na);
                r.rows_mut(0, n).copy_from(&(-&gp));
                let s = k
                    .lu()
                    .solve(&r)
                    .ok_or_else(|| Error::Solver("singular KKT system in QP".into()))?;
                let dx = s.rows(0, n).into_owned();
                let dlam = s.rows(n, ne).into_owned();
                let du = s.rows(n + ne, na).into_owned();
                let viol = gp.dot(&x) - self.rhs[p];
                let rate = gp.dot(&dx);
                let t_full = if rate < -1e-14 * (1.0 + gp.norm_squared()) {
                    (viol / -rate).max(0.0)
                } else {
                    f64::INFINITY
                };
                let mut t_dual = f64::INFINITY;
                let mut block = None;
                for (k, &dk) in du.iter().enumerate() {
                    if dk < -1e-14 {
                        let t = u[k] / -dk;
                        if t < t_dual {
                            t_dual = t;
                            block = Some(k);
                        }
                    }
                }
                if t_full.is_infinite() && t_dual.is_infinite() {
                    return Err(Error::QpInfeasible);
                }
                let t = t_full.min(t_dual);
                x += &dx * t;
                lam += &dlam * t;
                for (k, uk) in u.iter_mut().enumerate() {
                    *uk += t * du[k];
                }
                up += t;
                if t_full <= t_dual {
                    active.push(p);
                    u.push(up);
                    break;
                }
                let b = block.expect("blocking constraint");
                active.remove(b);
                u.remove(b);
            }
        }
        let mut multipliers = DVector::zeros(mi);
        for (k, &i) in active.iter().enumerate() {
            multipliers[i] = u[k].max(0.0);
        }
        Ok(QpSolution { x, multipliers, eq_multipliers: lam, active, iterations })
    }

    fn kkt(&self, e: &DMatrix<f64>, active: &[usize]) -> DMatrix<f64> {
        let n = self.h.nrows();
        let ne = e.nrows();
        let na = active.len();
        let dim = n + ne + na;
        let mut k = DMatrix::zeros(dim, dim);
        k.view_mut((0, 0), (n, n)).copy_from(self.h);
        for r in 0..ne {
            for c in 0..n {
                k[(n + r, c)] = e[(r, c)];
                k[(c, n + r)] = e[(r, c)];
            }
        }
        for (r, &i) in active.iter().enumerate() {
            for c in 0..n {
                k[(n + ne + r, c)] = self.g[(i, c)];
                k[(c, n + ne + r)] = self.g[(i, c)];
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_lower_bound() {
        let h = DMatrix::from_element(1, 1, 1.0);
        let q = DVector::zeros(1);
        let g = DMatrix::from_element(1, 1, -1.0);
        let r = DVector::from_element(1, -1.0);
        let s = solve_qp(&h, &q, &g, &r).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.multipliers[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unconstrained_minimiser() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let q = DVector::from_vec(vec![1.0, -1.0]);
        let g = DMatrix::zeros(0, 2);
        let r = DVector::zeros(0);
        let s = solve_qp(&h, &q, &g, &r).unwrap();
        let expect = h.clone().lu().solve(&(-&q)).unwrap();
        assert!((s.x - expect).amax() < 1e-12);
    }

    #[test]
    fn infeasible_pair() {
        let h = DMatrix::identity(1, 1);
        let q = DVector::zeros(1);
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let r = DVector::from_vec(vec![-1.0, -1.0]);
        assert!(matches!(solve_qp(&h, &q, &g, &r), Err(Error::QpInfeasible)));
    }
}
