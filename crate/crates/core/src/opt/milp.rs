//! LP-based branch and bound over the binaries of a [`Model`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::lp::{Lp, LpConfig, LpOutcome};
use super::model::{BigM, Model, VarKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped at the node limit with the gap above tolerance.
    GapLimit,
    TimeLimit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MilpConfig {
    /// Absolute-or-relative optimality gap, whichever is looser.
    pub gap_tol: f64,
    /// Seconds.
    pub time_limit: f64,
    pub threads: usize,
    pub node_limit: usize,
    pub int_tol: f64,
}

impl Default for MilpConfig {
    fn default() -> Self {
        Self { gap_tol: 1e-6, time_limit: 300.0, threads: 1, node_limit: 5_000_000, int_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    pub values: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    /// Row duals (pure LPs only).
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub big_m: Vec<BigM>,
}

impl Solution {
    fn empty(status: Status, model: &Model) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            gap: f64::INFINITY,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            nodes: 0,
            lp_iterations: 0,
            big_m: model.big_m.clone(),
        }
    }

    pub fn value(&self, v: super::Var) -> f64 {
        self.values[v.index()]
    }

    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }
}

/// Hook for substituting an external MILP solver behind the same model contract.
pub trait MilpBackend: Sync {
    fn name(&self) -> &str;
    fn solve(&self, model: &Model, cfg: &MilpConfig) -> Result<Solution>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BuiltinBackend;

impl MilpBackend for BuiltinBackend {
    fn name(&self) -> &str {
        "builtin-branch-and-bound"
    }

    fn solve(&self, model: &Model, cfg: &MilpConfig) -> Result<Solution> {
        solve_milp(model, cfg)
    }
}

pub fn solve_lp(model: &Model) -> Result<Solution> {
    if model.num_binaries() > 0 {
        return Err(Error::Invalid("solve_lp called on a model with binaries".into()));
    }
    let mut lp = Lp::new(model, LpConfig::default());
    let outcome = lp.solve()?;
    let status = match outcome {
        LpOutcome::Optimal => Status::Optimal,
        LpOutcome::Infeasible => Status::Infeasible,
        LpOutcome::Unbounded => Status::Unbounded,
        LpOutcome::Cutoff => unreachable!("no cutoff given"),
    };
    let mut sol = Solution::empty(status, model);
    sol.lp_iterations = lp.iterations;
    if status == Status::Optimal {
        sol.values = lp.values().to_vec();
        sol.objective = lp.objective() + model.objective.constant;
        sol.best_bound = sol.objective;
        sol.gap = 0.0;
        sol.duals = lp.duals();
        sol.reduced_costs = lp.reduced_costs();
    }
    Ok(sol)
}

#[derive(Clone, Debug)]
struct Node {
    id: usize,
    depth: usize,
    /// Internal (minimisation) bound inherited from the parent relaxation.
    bound: f64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: best (smallest) bound first, then deeper, then older
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a Model,
    cfg: &'a MilpConfig,
    binaries: Vec<usize>,
    base: Vec<(f64, f64)>,
    applied: Vec<(f64, f64)>,
    incumbent: Option<(f64, Vec<f64>)>,
    /// Smallest bound among nodes discarded against the incumbent.
    pruned: f64,
    nodes: usize,
    next_id: usize,
}

impl Search<'_> {
    fn tolerance(&self, inc: f64) -> f64 {
        self.cfg.gap_tol.max(self.cfg.gap_tol * inc.abs())
    }

    fn cutoff(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(v, _)| v - self.tolerance(*v))
    }

    fn apply(&mut self, lp: &mut Lp, fixings: &[(usize, f64)]) {
        let mut want = self.base.clone();
        for &(k, v) in fixings {
            want[k] = (v, v);
        }
        for (k, &w) in want.iter().enumerate() {
            if self.applied[k] != w {
                lp.set_bounds(self.binaries[k], w.0, w.1);
                self.applied[k] = w;
            }
        }
    }

    fn offer(&mut self, obj: f64, values: Vec<f64>) {
        let better = match &self.incumbent {
            None => true,
            Some((best, vals)) => {
                obj < best - 1e-12 * (1.0 + best.abs())
                    || (obj <= best + 1e-12 * (1.0 + best.abs()) && lexicographically_less(&values, vals))
            }
        };
        if better {
            self.incumbent = Some((obj, values));
        }
    }
}

fn lexicographically_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

pub fn solve_milp(model: &Model, cfg: &MilpConfig) -> Result<Solution> {
    let start = Instant::now();
    let binaries: Vec<usize> = (0..model.vars.len())
        .filter(|&j| model.vars[j].kind == VarKind::Binary)
        .collect();
    let mut lp = Lp::new(model, LpConfig::default());
    let base: Vec<(f64, f64)> = binaries.iter().map(|&j| lp.bounds(j)).collect();
    let sign = if model.sense == super::Sense::Minimize { 1.0 } else { -1.0 };
    let mut search = Search {
        model,
        cfg,
        applied: base.clone(),
        base,
        binaries,
        incumbent: None,
        pruned: f64::INFINITY,
        nodes: 0,
        next_id: 1,
    };

    let root = lp.solve()?;
    match root {
        LpOutcome::Infeasible => {
            let mut s = Solution::empty(Status::Infeasible, model);
            s.lp_iterations = lp.iterations;
            return Ok(s);
        }
        LpOutcome::Unbounded => {
            let mut s = Solution::empty(Status::Unbounded, model);
            s.lp_iterations = lp.iterations;
            return Ok(s);
        }
        _ => {}
    }

    let mut open: BinaryHeap<Node> = BinaryHeap::new();
    let mut dive: Option<Node> = Some(Node { id: 0, depth: 0, bound: f64::NEG_INFINITY, fixings: Vec::new() });
    let mut first = true;
    let mut stop = None;

    loop {
        let node = match dive.take() {
            Some(n) => n,
            None => match open.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if let Some(c) = search.cutoff() {
            if node.bound >= c {
                search.pruned = search.pruned.min(node.bound);
                continue;
            }
        }
        if start.elapsed().as_secs_f64() > cfg.time_limit {
            open.push(node);
            stop = Some(Status::TimeLimit);
            break;
        }
        if search.nodes >= cfg.node_limit {
            open.push(node);
            stop = Some(Status::GapLimit);
            break;
        }
        search.nodes += 1;
        let outcome = if first {
            first = false;
            LpOutcome::Optimal
        } else {
            search.apply(&mut lp, &node.fixings);
            lp.resolve(search.cutoff())?
        };
        match outcome {
            LpOutcome::Infeasible => continue,
            LpOutcome::Cutoff => {
                search.pruned = search.pruned.min(lp.internal_objective());
                continue;
            }
            LpOutcome::Unbounded => {
                return Err(Error::Solver("unbounded relaxation below the root".into()));
            }
            LpOutcome::Optimal => {}
        }
        let obj = lp.internal_objective();
        if let Some(c) = search.cutoff() {
            if obj >= c {
                search.pruned = search.pruned.min(obj);
                continue;
            }
        }
        let x = lp.values().to_vec();
        let mut branch = None;
        let mut best_frac = cfg.int_tol;
        for (k, &j) in search.binaries.iter().enumerate() {
            let f = x[j] - x[j].floor();
            let frac = f.min(1.0 - f);
            if frac > best_frac {
                best_frac = frac;
                branch = Some((k, f));
            }
        }
        if branch.is_none() {
            // re-solve with every binary fixed to its rounded value so the
            // continuous part is exact rather than within the integrality tolerance
            let rounded: Vec<(usize, f64)> = search.binaries.iter().enumerate().map(|(k, &j)| (k, x[j].round())).collect();
            let mut vals = x.to_vec();
            for &j in &search.binaries {
                vals[j] = vals[j].round();
            }
            search.apply(&mut lp, &rounded);
            if lp.resolve(None)? == LpOutcome::Optimal {
                search.offer(lp.internal_objective(), lp.values().to_vec());
                continue;
            }
            // the rounding is infeasible: branch on any residual fraction instead
            branch = search
                .binaries
                .iter()
                .enumerate()
                .map(|(k, &j)| (k, vals[j] - x[j]))
                .filter(|&(_, d)| d != 0.0)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(k, _)| (k, x[search.binaries[k]] - x[search.binaries[k]].floor()));
            if branch.is_none() {
                search.offer(obj, vals);
                continue;
            }
        }
        match branch {
            None => unreachable!("handled above"),
            Some((k, f)) => {
                let up_first = f >= 0.5;
                let mk = |v: f64, s: &mut Search| {
                    let mut fx = node.fixings.clone();
                    fx.push((k, v));
                    s.next_id += 1;
                    Node { id: s.next_id, depth: node.depth + 1, bound: obj, fixings: fx }
                };
                let (a, b) = if up_first { (1.0, 0.0) } else { (0.0, 1.0) };
                let near = mk(a, &mut search);
                let far = mk(b, &mut search);
                open.push(far);
                dive = Some(near);
            }
        }
    }

    let lp_iterations = lp.iterations;
    let Some((inc, values)) = search.incumbent.clone() else {
        let status = stop.unwrap_or(Status::Infeasible);
        let mut s = Solution::empty(status, model);
        s.nodes = search.nodes;
        s.lp_iterations = lp_iterations;
        if status != Status::Infeasible {
            let b = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
            s.best_bound = sign * b + model.objective.constant;
        }
        return Ok(s);
    };
    let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let bound = open_bound.min(search.pruned).min(inc);
    let gap = (inc - bound).max(0.0) / inc.abs().max(1.0);
    let mut s = Solution::empty(stop.unwrap_or(Status::Optimal), model);
    s.objective = sign * inc + model.objective.constant;
    s.best_bound = sign * bound + model.objective.constant;
    s.gap = gap;
    s.values = values;
    s.nodes = search.nodes;
    s.lp_iterations = lp_iterations;
    debug_assert!(search.model.max_violation(&s.values) < 1e-5);
    Ok(s)
}
