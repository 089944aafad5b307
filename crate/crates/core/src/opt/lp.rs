//! Bounded dual simplex on `A x − y = 0`, `lb ≤ (x, y) ≤ ub`.
//!
//! Every row gets a logical variable `y_i` carrying the row bounds, so the
//! all-logical basis is always available as a start. Variables with an infinite
//! bound on the side their cost pushes them to are parked at an artificial
//! bound of magnitude [`LpConfig::big_bound`]; if one is still there at the
//! optimum with a nonzero reduced cost the problem is reported unbounded.

use nalgebra::DMatrix;

use super::model::{Cmp, Model, Sense, VarKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LpConfig {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    pub big_bound: f64,
    pub max_iter: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-7,
            refactor_every: 80,
            big_bound: 1e7,
            max_iter: 200_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    /// The objective provably exceeds the supplied cutoff.
    Cutoff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Zero,
}

#[derive(Clone, Debug)]
pub(crate) struct Lp {
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    /// Objective before the anti-degeneracy perturbation.
    orig_cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    d: Vec<f64>,
    /// Column-major `m×m` basis inverse.
    binv: Vec<f64>,
    since_refactor: usize,
    pub iterations: usize,
    cfg: LpConfig,
    sign: f64,
}

impl Lp {
    pub fn new(model: &Model, cfg: LpConfig) -> Self {
        let n = model.vars.len();
        let m = model.constraints.len();
        let mut cols = vec![Vec::new(); n];
        let mut lb = Vec::with_capacity(n + m);
        let mut ub = Vec::with_capacity(n + m);
        for v in &model.vars {
            match v.kind {
                VarKind::Binary => {
                    lb.push(v.lb.max(0.0));
                    ub.push(v.ub.min(1.0));
                }
                VarKind::Continuous => {
                    lb.push(v.lb);
                    ub.push(v.ub);
                }
            }
        }
        for (i, c) in model.constraints.iter().enumerate() {
            for &(v, a) in &c.terms {
                cols[v.0].push((i, a));
            }
            let (l, u) = match c.cmp {
                Cmp::Le => (f64::NEG_INFINITY, c.rhs),
                Cmp::Ge => (c.rhs, f64::INFINITY),
                Cmp::Eq => (c.rhs, c.rhs),
            };
            lb.push(l);
            ub.push(u);
        }
        let sign = match model.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n + m];
        for &(v, c) in &model.objective.terms {
            cost[v.0] += sign * c;
        }
        let mut lp = Self {
            n,
            m,
            cols,
            orig_cost: cost.clone(),
            cost,
            lb,
            ub,
            basis: (n..n + m).collect(),
            state: vec![State::Lower; n + m],
            x: vec![0.0; n + m],
            d: vec![0.0; n + m],
            binv: Vec::new(),
            since_refactor: 0,
            iterations: 0,
            cfg,
            sign,
        };
        lp.slack_basis();
        lp
    }

    fn slack_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.basis = (n..n + m).collect();
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
            self.state[n + i] = State::Basic;
        }
        for j in 0..n {
            self.d[j] = self.cost[j];
            self.state[j] = self.dual_feasible_state(j);
        }
        for i in 0..m {
            self.d[n + i] = 0.0;
        }
        self.since_refactor = 0;
        self.compute_primal();
    }

    fn dual_feasible_state(&self, j: usize) -> State {
        let (l, u, dj) = (self.lb[j], self.ub[j], self.d[j]);
        if dj > 0.0 || (dj == 0.0 && l.is_finite()) {
            State::Lower
        } else if dj < 0.0 || u.is_finite() {
            State::Upper
        } else {
            State::Zero
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Lower if self.lb[j].is_finite() => self.lb[j],
            State::Lower => -self.cfg.big_bound,
            State::Upper if self.ub[j].is_finite() => self.ub[j],
            State::Upper => self.cfg.big_bound,
            State::Zero => 0.0,
            State::Basic => self.x[j],
        }
    }

    fn at_artificial_bound(&self, j: usize) -> bool {
        match self.state[j] {
            State::Lower => !self.lb[j].is_finite(),
            State::Upper => !self.ub[j].is_finite(),
            _ => false,
        }
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lb[j], self.ub[j])
    }

    /// Changes structural bounds; call [`Lp::resolve`] afterwards.
    pub fn set_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        self.lb[j] = lb;
        self.ub[j] = ub;
        if self.state[j] != State::Basic {
            if self.state[j] == State::Zero && (lb.is_finite() || ub.is_finite()) {
                self.state[j] = self.dual_feasible_state(j);
            }
            self.x[j] = self.nonbasic_value(j);
        }
    }

    /// `B⁻¹ a_j` for the extended column `j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j < self.n {
            for &(k, a) in &self.cols[j] {
                let col = &self.binv[k * m..(k + 1) * m];
                for i in 0..m {
                    out[i] += a * col[i];
                }
            }
        } else {
            let k = j - self.n;
            let col = &self.binv[k * m..(k + 1) * m];
            for i in 0..m {
                out[i] = -col[i];
            }
        }
        out
    }

    fn col_dot(&self, v: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(k, a)| a * v[k]).sum()
        } else {
            -v[j - self.n]
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let mut b = DMatrix::<f64>::zeros(m, m);
        for (pos, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                for &(k, a) in &self.cols[j] {
                    b[(k, pos)] = a;
                }
            } else {
                b[(j - self.n, pos)] = -1.0;
            }
        }
        let inv = b
            .try_inverse()
            .ok_or_else(|| Error::Solver("singular basis during refactorisation".into()))?;
        self.binv.copy_from_slice(inv.as_slice());
        self.since_refactor = 0;
        Ok(())
    }

    fn compute_primal(&mut self) {
        let m = self.m;
        let mut r = vec![0.0; m];
        for j in 0..self.n + self.m {
            if self.state[j] == State::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(k, a) in &self.cols[j] {
                    r[k] += a * v;
                }
            } else {
                r[j - self.n] -= v;
            }
        }
        for (pos, &j) in self.basis.iter().enumerate() {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[k * m + pos] * r[k];
            }
            self.x[j] = -s;
        }
    }

    fn compute_duals(&mut self) {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (pos, &j) in self.basis.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                for k in 0..m {
                    y[k] += c * self.binv[k * m + pos];
                }
            }
        }
        for j in 0..self.n + self.m {
            self.d[j] = if self.state[j] == State::Basic {
                0.0
            } else {
                self.cost[j] - self.col_dot(&y, j)
            };
        }
    }

    /// Moves nonbasic variables whose reduced cost has the wrong sign to the
    /// opposite bound when that bound is finite.
    fn restore_dual_feasibility(&mut self) {
        let tol = self.cfg.opt_tol;
        let mut changed = false;
        for j in 0..self.n + self.m {
            let s = self.state[j];
            let flip = match s {
                State::Lower => self.d[j] < -tol && self.ub[j].is_finite(),
                State::Upper => self.d[j] > tol && self.lb[j].is_finite(),
                _ => false,
            };
            if flip {
                self.state[j] = if s == State::Lower { State::Upper } else { State::Lower };
                changed = true;
            }
        }
        if changed {
            self.compute_primal();
        }
    }

    fn refresh(&mut self) -> Result<()> {
        if self.refactor().is_err() {
            // numerically lost basis: restart from the logical one
            self.slack_basis();
        }
        self.compute_duals();
        self.restore_dual_feasibility();
        self.compute_primal();
        Ok(())
    }

    pub fn objective(&self) -> f64 {
        self.sign * self.internal_objective()
    }

    /// Objective in minimisation form (negated for maximisation models).
    pub fn internal_objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Row duals in the sign convention of the original objective.
    pub fn duals(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.sign * self.d[self.n + i]).collect()
    }

    pub fn reduced_costs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.sign * self.d[j]).collect()
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lb[j] {
            self.lb[j] - v
        } else if v > self.ub[j] {
            v - self.ub[j]
        } else {
            0.0
        }
    }

    fn pivot(&mut self, r: usize, q: usize, col: &[f64]) {
        let m = self.m;
        let piv = col[r];
        for k in 0..m {
            let c = &mut self.binv[k * m..(k + 1) * m];
            let pr = c[r] / piv;
            if pr != 0.0 {
                for i in 0..m {
                    c[i] -= col[i] * pr;
                }
            }
            c[r] = pr;
        }
        self.basis[r] = q;
        self.state[q] = State::Basic;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    /// Solves from scratch starting at the all-logical basis.
    pub fn solve(&mut self) -> Result<LpOutcome> {
        self.slack_basis();
        self.resolve(None)
    }

    /// Re-optimises from the current (dual feasible) basis. The cutoff is in
    /// the internal minimisation sense (see [`Lp::internal_objective`]).
    pub fn resolve(&mut self, cutoff: Option<f64>) -> Result<LpOutcome> {
        self.perturb();
        self.compute_duals();
        self.restore_dual_feasibility();
        self.compute_primal();
        let outcome = self.dual_phase(cutoff);
        self.cost.copy_from_slice(&self.orig_cost);
        match outcome? {
            LpOutcome::Optimal => {
                match self.primal_phase()? {
                    LpOutcome::Optimal => self.cleanup_artificial(),
                    other => Ok(other),
                }
            }
            other => {
                self.compute_duals();
                Ok(other)
            }
        }
    }

    /// Small deterministic cost shifts that break dual ties; removed before
    /// the primal clean-up.
    fn perturb(&mut self) {
        for j in 0..self.n {
            let c = self.orig_cost[j];
            let mag = 1e-7 * (1.0 + c.abs()) * (1.0 + (j as f64 * 0.618_033_988_7).fract());
            let up = match (self.lb[j].is_finite(), self.ub[j].is_finite()) {
                (true, false) => true,
                (false, true) => false,
                _ => c >= 0.0,
            };
            self.cost[j] = if up { c + mag } else { c - mag };
        }
    }

    /// Largest change of the objective the perturbation can explain at the current point.
    fn perturbation_slack(&self) -> f64 {
        (0..self.n)
            .map(|j| {
                let reach = self.lb[j].abs().max(self.ub[j].abs());
                let reach = if reach.is_finite() { reach } else { self.x[j].abs() };
                (self.cost[j] - self.orig_cost[j]).abs() * reach
            })
            .sum()
    }

    /// Primal simplex from a primal feasible basis; fixes the dual
    /// infeasibilities left after the perturbation is removed.
    fn primal_phase(&mut self) -> Result<LpOutcome> {
        let m = self.m;
        let tol = self.cfg.opt_tol;
        let start = self.iterations;
        let mut stalled = 0usize;
        let mut last_obj = f64::INFINITY;
        loop {
            if self.iterations - start > self.cfg.max_iter {
                return Err(Error::Solver("LP iteration limit".into()));
            }
            if self.since_refactor >= self.cfg.refactor_every {
                if self.refactor().is_err() {
                    return Err(Error::Solver("singular basis in the primal phase".into()));
                }
                self.compute_primal();
            }
            self.compute_duals();
            let bland = stalled > 50;
            let mut q = usize::MAX;
            let mut best = tol;
            for j in 0..self.n + m {
                if self.state[j] == State::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let gain = match self.state[j] {
                    State::Lower => -self.d[j],
                    State::Upper => self.d[j],
                    State::Zero => self.d[j].abs(),
                    State::Basic => 0.0,
                };
                if gain > best * (1.0 + self.cost[j].abs()) {
                    q = j;
                    if bland {
                        break;
                    }
                    best = gain;
                }
            }
            if q == usize::MAX {
                return Ok(LpOutcome::Optimal);
            }
            let dir = match self.state[q] {
                State::Lower => 1.0,
                State::Upper => -1.0,
                _ => -self.d[q].signum(),
            };
            let col = self.ftran(q);
            let (lq, uq) = (self.lb[q], self.ub[q]);
            let mut t = if lq.is_finite() && uq.is_finite() { uq - lq } else { f64::INFINITY };
            let mut block: Option<(usize, State)> = None;
            let mut block_piv = 0.0;
            for pos in 0..m {
                let b = self.basis[pos];
                let rate = -col[pos] * dir;
                if rate.abs() <= self.cfg.pivot_tol {
                    continue;
                }
                let (lim, st) = if rate < 0.0 {
                    if !self.lb[b].is_finite() {
                        continue;
                    }
                    ((self.x[b] - self.lb[b]).max(0.0) / -rate, State::Lower)
                } else {
                    if !self.ub[b].is_finite() {
                        continue;
                    }
                    ((self.ub[b] - self.x[b]).max(0.0) / rate, State::Upper)
                };
                let tie = (lim - t).abs() <= 1e-12 * (1.0 + t.abs());
                if lim < t && !tie || (tie && block.is_some() && rate.abs() > block_piv) {
                    t = lim;
                    block = Some((pos, st));
                    block_piv = rate.abs();
                }
            }
            if !t.is_finite() {
                return Ok(LpOutcome::Unbounded);
            }
            for pos in 0..m {
                let b = self.basis[pos];
                self.x[b] -= col[pos] * dir * t;
            }
            self.x[q] += dir * t;
            match block {
                Some((pos, st)) => {
                    let b = self.basis[pos];
                    self.x[b] = if st == State::Lower { self.lb[b] } else { self.ub[b] };
                    self.state[b] = st;
                    self.pivot(pos, q, &col);
                }
                None => {
                    self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                    self.x[q] = self.nonbasic_value(q);
                    self.iterations += 1;
                }
            }
            let obj = self.internal_objective();
            if obj < last_obj - 1e-12 * (1.0 + obj.abs()) {
                stalled = 0;
                last_obj = obj;
            } else {
                stalled += 1;
            }
        }
    }

    fn dual_phase(&mut self, cutoff: Option<f64>) -> Result<LpOutcome> {
        let m = self.m;
        let ftol = self.cfg.feas_tol;
        let mut stalled = 0usize;
        let mut last_obj = f64::NEG_INFINITY;
        let start = self.iterations;
        loop {
            if self.iterations - start > self.cfg.max_iter {
                return Err(Error::Solver("LP iteration limit".into()));
            }
            if self.since_refactor >= self.cfg.refactor_every {
                self.refresh()?;
            }
            let bland = stalled > 50;
            // leaving row
            let mut r = usize::MAX;
            let mut best = ftol;
            for pos in 0..m {
                let j = self.basis[pos];
                let inf = self.infeasibility(j);
                if inf > best {
                    if bland {
                        if r == usize::MAX || j < self.basis[r] {
                            r = pos;
                        }
                    } else {
                        best = inf;
                        r = pos;
                    }
                }
            }
            if r == usize::MAX {
                return Ok(LpOutcome::Optimal);
            }
            let leaving = self.basis[r];
            let (target, s) = if self.x[leaving] < self.lb[leaving] {
                (self.lb[leaving], 1.0)
            } else {
                (self.ub[leaving], -1.0)
            };
            let rho: Vec<f64> = (0..m).map(|k| self.binv[k * m + r]).collect();
            // ratio test (Harris two-pass)
            let mut alpha = vec![0.0; self.n + m];
            let mut theta_max = f64::INFINITY;
            let mut cand = Vec::new();
            for j in 0..self.n + m {
                let st = self.state[j];
                if st == State::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let a = self.col_dot(&rho, j);
                if a.abs() <= self.cfg.pivot_tol {
                    continue;
                }
                let ok = match st {
                    State::Lower => a * s < 0.0,
                    State::Upper => a * s > 0.0,
                    State::Zero => true,
                    State::Basic => false,
                };
                if !ok {
                    continue;
                }
                alpha[j] = a;
                let dj = match st {
                    State::Lower => self.d[j].max(0.0),
                    State::Upper => (-self.d[j]).max(0.0),
                    _ => self.d[j].abs(),
                };
                theta_max = theta_max.min((dj + self.cfg.opt_tol) / a.abs());
                cand.push((j, dj / a.abs()));
            }
            if cand.is_empty() {
                return Ok(LpOutcome::Infeasible);
            }
            let mut q = usize::MAX;
            let mut best_a = 0.0;
            for &(j, ratio) in &cand {
                if ratio <= theta_max {
                    let a = alpha[j].abs();
                    let better = if bland { q == usize::MAX } else { a > best_a };
                    if better {
                        q = j;
                        best_a = a;
                    }
                }
            }
            let aq = alpha[q];
            let col = self.ftran(q);
            if (col[r] - aq).abs() > 1e-7 * (1.0 + aq.abs()) && self.since_refactor > 0 {
                self.refresh()?;
                continue;
            }
            // full row of alphas for the dual update (non-candidates too)
            let theta_d = self.d[q] / aq;
            if theta_d != 0.0 {
                for j in 0..self.n + m {
                    if self.state[j] == State::Basic || j == q {
                        continue;
                    }
                    let a = if alpha[j] != 0.0 { alpha[j] } else { self.col_dot(&rho, j) };
                    if a != 0.0 {
                        self.d[j] -= theta_d * a;
                    }
                }
            }
            self.d[q] = 0.0;
            self.d[leaving] = -theta_d;
            let step = (self.x[leaving] - target) / col[r];
            for pos in 0..m {
                let j = self.basis[pos];
                self.x[j] -= col[pos] * step;
            }
            self.x[q] += step;
            self.x[leaving] = target;
            self.state[leaving] = if s > 0.0 { State::Lower } else { State::Upper };
            self.pivot(r, q, &col);
            let obj = self.internal_objective();
            if obj > last_obj + 1e-12 * (1.0 + obj.abs()) {
                stalled = 0;
                last_obj = obj;
            } else {
                stalled += 1;
            }
            if let Some(c) = cutoff {
                if obj - self.perturbation_slack() > c + 1e-9 * (1.0 + c.abs()) && !self.any_artificial() {
                    return Ok(LpOutcome::Cutoff);
                }
            }
        }
    }

    fn any_artificial(&self) -> bool {
        (0..self.n).any(|j| self.at_artificial_bound(j))
    }

    /// Moves variables off artificial bounds; reports unboundedness when that
    /// would change the objective.
    fn cleanup_artificial(&mut self) -> Result<LpOutcome> {
        let m = self.m;
        for j in 0..self.n {
            let mut guard = 0;
            while self.at_artificial_bound(j) {
                guard += 1;
                if guard > m + 2 {
                    return Err(Error::Solver("artificial bound cleanup did not terminate".into()));
                }
                if self.d[j].abs() > self.cfg.opt_tol * (1.0 + self.cost[j].abs()) {
                    return Ok(LpOutcome::Unbounded);
                }
                let dir = if self.state[j] == State::Lower { 1.0 } else { -1.0 };
                let (target, target_state) = if dir > 0.0 {
                    if self.ub[j].is_finite() && self.ub[j] <= 0.0 {
                        (self.ub[j], State::Upper)
                    } else {
                        (0.0, State::Zero)
                    }
                } else if self.lb[j].is_finite() && self.lb[j] >= 0.0 {
                    (self.lb[j], State::Lower)
                } else {
                    (0.0, State::Zero)
                };
                let own = (target - self.x[j]).abs();
                let col = self.ftran(j);
                let mut t = own;
                let mut block = None;
                for pos in 0..m {
                    let b = self.basis[pos];
                    let rate = -col[pos] * dir;
                    if rate < -self.cfg.pivot_tol && self.lb[b].is_finite() {
                        let lim = (self.x[b] - self.lb[b]).max(0.0) / -rate;
                        if lim < t {
                            t = lim;
                            block = Some((pos, State::Lower));
                        }
                    } else if rate > self.cfg.pivot_tol && self.ub[b].is_finite() {
                        let lim = (self.ub[b] - self.x[b]).max(0.0) / rate;
                        if lim < t {
                            t = lim;
                            block = Some((pos, State::Upper));
                        }
                    }
                }
                for pos in 0..m {
                    let b = self.basis[pos];
                    self.x[b] -= col[pos] * dir * t;
                }
                self.x[j] += dir * t;
                match block {
                    Some((pos, st)) => {
                        let b = self.basis[pos];
                        self.x[b] = if st == State::Lower { self.lb[b] } else { self.ub[b] };
                        self.state[b] = st;
                        self.pivot(pos, j, &col);
                        self.refresh()?;
                    }
                    None => {
                        self.state[j] = target_state;
                        self.x[j] = target;
                    }
                }
            }
        }
        Ok(LpOutcome::Optimal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::model::LinExpr;

    #[test]
    fn bounded_two_variable_lp() {
        let mut m = Model::new();
        let x = m.continuous("x", 0.0, 4.0);
        let y = m.continuous("y", 0.0, 4.0);
        m.le("a", LinExpr::from(x) + LinExpr::from(y), 5.0);
        m.le("b", LinExpr::term(x, 2.0) + LinExpr::from(y), 8.0);
        m.set_objective(Sense::Maximize, LinExpr::term(x, 3.0) + LinExpr::term(y, 2.0));
        let mut lp = Lp::new(&m, LpConfig::default());
        assert_eq!(lp.solve().unwrap(), LpOutcome::Optimal);
        assert!((lp.objective() - 13.0).abs() < 1e-9);
        assert!((lp.values()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn free_variable_with_cost() {
        let mut m = Model::new();
        let t = m.continuous("t", f64::NEG_INFINITY, f64::INFINITY);
        let u = m.continuous("u", f64::NEG_INFINITY, f64::INFINITY);
        m.ge("a", LinExpr::from(t) - LinExpr::from(u), 1.0);
        m.ge("b", LinExpr::from(t) + LinExpr::from(u), 3.0);
        m.set_objective(Sense::Minimize, t.into());
        let mut lp = Lp::new(&m, LpConfig::default());
        assert_eq!(lp.solve().unwrap(), LpOutcome::Optimal);
        assert!((lp.objective() - 2.0).abs() < 1e-9);
        assert!((lp.values()[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_ray() {
        let mut m = Model::new();
        let x = m.continuous("x", 0.0, f64::INFINITY);
        m.ge("a", x.into(), 1.0);
        m.set_objective(Sense::Maximize, x.into());
        let mut lp = Lp::new(&m, LpConfig::default());
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }
}
