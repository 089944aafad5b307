use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Affine expression `Σ coef·var + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(var: Var, coef: f64) -> Self {
        Self { terms: vec![(var, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, var: Var, coef: f64) {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
    }

    /// `Σ coefs[k]·vars[k]`.
    pub fn dot(coefs: impl IntoIterator<Item = f64>, vars: &[Var]) -> Self {
        let mut e = Self::zero();
        for (c, &v) in coefs.into_iter().zip(vars) {
            e.add_term(v, c);
        }
        e
    }

    /// `Σ coefs[k]·exprs[k]`.
    pub fn combine(coefs: impl IntoIterator<Item = f64>, exprs: &[LinExpr]) -> Self {
        let mut e = Self::zero();
        for (c, x) in coefs.into_iter().zip(exprs) {
            if c != 0.0 {
                e += x.clone() * c;
            }
        }
        e
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Merges repeated variables and drops zero coefficients.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(Var, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }
}

impl From<Var> for LinExpr {
    fn from(v: Var) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign for LinExpr {
    fn add_assign(&mut self, rhs: LinExpr) {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
    }
}

impl SubAssign for LinExpr {
    fn sub_assign(&mut self, rhs: LinExpr) {
        *self += -rhs;
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self += rhs;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self -= rhs;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug)]
pub struct VarData {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(Var, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A big-M constant as it entered the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigM {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstraintId(pub usize);

/// Linear (mixed-integer) program under construction.
#[derive(Clone, Debug)]
pub struct Model {
    pub vars: Vec<VarData>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
    pub objective: LinExpr,
    pub big_m: Vec<BigM>,
}

impl Default for Model {
    fn default() -> Self {
        Self::new()
    }
}

impl Model {
    pub fn new() -> Self {
        Self {
            vars: Vec::new(),
            constraints: Vec::new(),
            sense: Sense::Minimize,
            objective: LinExpr::zero(),
            big_m: Vec::new(),
        }
    }

    pub fn continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64) -> Var {
        assert!(lb <= ub, "empty bounds [{lb}, {ub}]");
        self.vars.push(VarData { name: name.into(), lb, ub, kind: VarKind::Continuous });
        Var(self.vars.len() - 1)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Var {
        self.vars.push(VarData { name: name.into(), lb: 0.0, ub: 1.0, kind: VarKind::Binary });
        Var(self.vars.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn var(&self, v: Var) -> &VarData {
        &self.vars[v.0]
    }

    pub fn set_bounds(&mut self, v: Var, lb: f64, ub: f64) {
        assert!(lb <= ub, "empty bounds [{lb}, {ub}]");
        self.vars[v.0].lb = lb;
        self.vars[v.0].ub = ub;
    }

    pub fn fix(&mut self, v: Var, value: f64) {
        self.set_bounds(v, value, value);
    }

    /// Adds `expr cmp rhs`; the expression's constant moves to the right-hand side.
    pub fn constrain(&mut self, name: impl Into<String>, expr: LinExpr, cmp: Cmp, rhs: f64) -> ConstraintId {
        let expr = expr.compact();
        self.constraints.push(Constraint {
            name: name.into(),
            rhs: rhs - expr.constant,
            terms: expr.terms,
            cmp,
        });
        ConstraintId(self.constraints.len() - 1)
    }

    pub fn le(&mut self, name: impl Into<String>, expr: LinExpr, rhs: f64) -> ConstraintId {
        self.constrain(name, expr, Cmp::Le, rhs)
    }

    pub fn ge(&mut self, name: impl Into<String>, expr: LinExpr, rhs: f64) -> ConstraintId {
        self.constrain(name, expr, Cmp::Ge, rhs)
    }

    pub fn eq(&mut self, name: impl Into<String>, expr: LinExpr, rhs: f64) -> ConstraintId {
        self.constrain(name, expr, Cmp::Eq, rhs)
    }

    pub fn set_objective(&mut self, sense: Sense, expr: LinExpr) {
        self.sense = sense;
        self.objective = expr.compact();
    }

    /// Interval enclosure of an expression from the variable bounds.
    pub fn bounds_of(&self, expr: &LinExpr) -> (f64, f64) {
        let mut lo = expr.constant;
        let mut hi = expr.constant;
        for &(v, c) in &expr.terms {
            let d = &self.vars[v.0];
            if c > 0.0 {
                lo += c * d.lb;
                hi += c * d.ub;
            } else if c < 0.0 {
                lo += c * d.ub;
                hi += c * d.lb;
            }
        }
        (lo, hi)
    }

    fn finite_bounds(&self, label: &str, expr: &LinExpr) -> Result<(f64, f64)> {
        let (lo, hi) = self.bounds_of(expr);
        if lo.is_finite() && hi.is_finite() {
            Ok((lo, hi))
        } else {
            Err(Error::Unbounded(label.to_string()))
        }
    }

    fn record(&mut self, label: &str, value: f64) {
        self.big_m.push(BigM { label: label.to_string(), value });
    }

    /// Big-M form of `a = on ⇒ expr cmp rhs`.
    pub fn implies(
        &mut self,
        name: &str,
        a: Var,
        on: bool,
        expr: LinExpr,
        cmp: Cmp,
        rhs: f64,
    ) -> Result<Vec<ConstraintId>> {
        let bounds = self.finite_bounds(name, &expr)?;
        Ok(self.implies_bounded(name, a, on, expr, cmp, rhs, bounds))
    }

    /// [`Model::implies`] with caller-supplied bounds `(lo, hi)` on `expr`.
    #[allow(clippy::too_many_arguments)]
    pub fn implies_bounded(
        &mut self,
        name: &str,
        a: Var,
        on: bool,
        expr: LinExpr,
        cmp: Cmp,
        rhs: f64,
        (lo, hi): (f64, f64),
    ) -> Vec<ConstraintId> {
        // slack(a) is 0 when a takes the triggering value and 1 otherwise
        let slack = |m: f64| -> LinExpr {
            if on {
                LinExpr::constant(m) - LinExpr::term(a, m)
            } else {
                LinExpr::term(a, m)
            }
        };
        let mut ids = Vec::new();
        if matches!(cmp, Cmp::Le | Cmp::Eq) {
            let m = (hi - rhs).max(0.0);
            self.record(name, m);
            ids.push(self.le(format!("{name}:le"), expr.clone() - slack(m), rhs));
        }
        if matches!(cmp, Cmp::Ge | Cmp::Eq) {
            let m = (rhs - lo).max(0.0);
            self.record(name, m);
            ids.push(self.ge(format!("{name}:ge"), expr + slack(m), rhs));
        }
        ids
    }

    /// `out = inputs[0] ∧ inputs[1] ∧ …` for binaries.
    pub fn and(&mut self, name: &str, out: Var, inputs: &[Var]) -> Vec<ConstraintId> {
        let mut ids = Vec::new();
        for (k, &x) in inputs.iter().enumerate() {
            ids.push(self.le(format!("{name}:{k}"), LinExpr::from(out) - LinExpr::from(x), 0.0));
        }
        let mut sum = LinExpr::from(out);
        for &x in inputs {
            sum -= LinExpr::from(x);
        }
        ids.push(self.ge(format!("{name}:all"), sum, 1.0 - inputs.len() as f64));
        ids
    }

    /// New variable equal to `a·expr` for binary `a`.
    pub fn product(&mut self, name: &str, a: Var, expr: LinExpr) -> Result<Var> {
        let bounds = self.finite_bounds(name, &expr)?;
        Ok(self.product_bounded(name, a, expr, bounds))
    }

    /// [`Model::product`] with caller-supplied bounds `(lo, hi)` on `expr`.
    pub fn product_bounded(&mut self, name: &str, a: Var, expr: LinExpr, (lo, hi): (f64, f64)) -> Var {
        let y = self.continuous(name, lo.min(0.0), hi.max(0.0));
        self.record(name, lo.abs().max(hi.abs()));
        self.le(format!("{name}:hi"), LinExpr::from(y) - LinExpr::term(a, hi), 0.0);
        self.ge(format!("{name}:lo"), LinExpr::from(y) - LinExpr::term(a, lo), 0.0);
        let off = |m: f64| LinExpr::constant(m) - LinExpr::term(a, m);
        self.le(format!("{name}:on_hi"), LinExpr::from(y) - expr.clone() + off(lo), 0.0);
        self.ge(format!("{name}:on_lo"), LinExpr::from(y) - expr + off(hi), 0.0);
        y
    }

    /// Largest violation of bounds, integrality or constraints at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, d) in self.vars.iter().enumerate() {
            worst = worst.max(d.lb - x[v]).max(x[v] - d.ub);
            if d.kind == VarKind::Binary {
                worst = worst.max((x[v] - x[v].round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * x[v.0]).sum();
            worst = worst.max(match c.cmp {
                Cmp::Le => lhs - c.rhs,
                Cmp::Ge => c.rhs - lhs,
                Cmp::Eq => (lhs - c.rhs).abs(),
            });
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_merges_terms() {
        let mut m = Model::new();
        let x = m.continuous("x", 0.0, 1.0);
        let e = (LinExpr::from(x) + LinExpr::term(x, 2.0) - LinExpr::term(x, 3.0)).compact();
        assert!(e.terms.is_empty());
    }

    #[test]
    fn bounds_follow_coefficient_signs() {
        let mut m = Model::new();
        let x = m.continuous("x", -1.0, 2.0);
        let y = m.continuous("y", 0.0, 3.0);
        let e = LinExpr::term(x, 2.0) - LinExpr::term(y, 1.0) + LinExpr::constant(1.0);
        assert_eq!(m.bounds_of(&e), (-4.0, 5.0));
    }

    #[test]
    fn constant_moves_to_rhs() {
        let mut m = Model::new();
        let x = m.continuous("x", 0.0, 1.0);
        m.le("c", LinExpr::from(x) + LinExpr::constant(2.0), 5.0);
        assert_eq!(m.constraints[0].rhs, 3.0);
    }

    #[test]
    fn implies_rejects_unbounded_expressions() {
        let mut m = Model::new();
        let x = m.continuous("x", 0.0, f64::INFINITY);
        let a = m.binary("a");
        assert!(m.implies("c", a, true, x.into(), Cmp::Le, 1.0).is_err());
    }
}
