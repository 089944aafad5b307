//! Induced-norm objectives over a unit direction.

use crate::opt::{Cmp, LinExpr, Model};
use crate::{Error, Norm, Result};

/// Direction `s` whose images attain the induced `α`-norm: sign vectors for
/// `α = ∞`, canonical basis vectors for `α = 1`. Every entry lies in `[−1, 1]`.
pub fn direction(model: &mut Model, n: usize, alpha: Norm) -> Result<Vec<LinExpr>> {
    match alpha {
        Norm::Inf => Ok((0..n)
            .map(|k| {
                let b = model.binary(format!("sign[{k}]"));
                LinExpr::term(b, 2.0) - LinExpr::constant(1.0)
            })
            .collect()),
        Norm::One => {
            let c: Vec<_> = (0..n).map(|k| model.binary(format!("basis[{k}]"))).collect();
            model.eq("basis:one", LinExpr::dot(vec![1.0; n], &c), 1.0);
            Ok(c.into_iter().map(LinExpr::from).collect())
        }
        Norm::Two => Err(Error::Unsupported("MILP encodings support α ∈ {1, ∞}".into())),
    }
}

/// Objective expression equal to `‖v‖_α` at the optimum of a maximisation.
/// With `symmetric`, the feasible set is closed under `v ↦ −v`, so for `α = ∞`
/// the largest entry suffices and no sign binaries are needed.
pub fn maximize_norm(model: &mut Model, v: &[LinExpr], alpha: Norm, symmetric: bool, name: &str) -> Result<LinExpr> {
    let bounds: Vec<(f64, f64)> = v.iter().map(|e| model.bounds_of(e)).collect();
    if bounds.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::Unbounded(name.into()));
    }
    match alpha {
        Norm::Inf => {
            let mut cands: Vec<(LinExpr, (f64, f64))> = Vec::new();
            for (e, &(lo, hi)) in v.iter().zip(&bounds) {
                cands.push((e.clone(), (lo, hi)));
                if !symmetric {
                    cands.push((-e.clone(), (-hi, -lo)));
                }
            }
            if cands.len() == 1 {
                return Ok(cands.pop().expect("one candidate").0);
            }
            let top = cands.iter().map(|c| c.1 .1).fold(f64::NEG_INFINITY, f64::max);
            let floor = cands.iter().map(|c| c.1 .0).fold(f64::NEG_INFINITY, f64::max).min(top);
            let t = model.continuous(format!("{name}:t"), floor, top);
            let pick: Vec<_> = (0..cands.len()).map(|k| model.binary(format!("{name}:pick[{k}]"))).collect();
            model.eq(format!("{name}:one"), LinExpr::dot(vec![1.0; pick.len()], &pick), 1.0);
            for (k, (e, (lo, _))) in cands.into_iter().enumerate() {
                // t ≤ e + (top − lo)(1 − pick)
                let m = (top - lo).max(0.0);
                model.big_m.push(crate::opt::BigM { label: format!("{name}:pick[{k}]"), value: m });
                model.constrain(
                    format!("{name}:cap[{k}]"),
                    LinExpr::from(t) - e - LinExpr::constant(m) + LinExpr::term(pick[k], m),
                    Cmp::Le,
                    0.0,
                );
            }
            Ok(t.into())
        }
        Norm::One => {
            let mut sum = LinExpr::zero();
            for (k, (e, &(lo, hi))) in v.iter().zip(&bounds).enumerate() {
                if lo >= 0.0 {
                    sum += e.clone();
                } else if hi <= 0.0 {
                    sum -= e.clone();
                } else {
                    let r = hi.max(-lo);
                    let t = model.continuous(format!("{name}:abs[{k}]"), 0.0, r);
                    let b = model.binary(format!("{name}:pos[{k}]"));
                    // t ≤ e + 2r(1 − b),  t ≤ −e + 2r·b
                    model.big_m.push(crate::opt::BigM { label: format!("{name}:abs[{k}]"), value: 2.0 * r });
                    model.le(
                        format!("{name}:abs[{k}]:pos"),
                        LinExpr::from(t) - e.clone() - LinExpr::constant(2.0 * r) + LinExpr::term(b, 2.0 * r),
                        0.0,
                    );
                    model.le(format!("{name}:abs[{k}]:neg"), LinExpr::from(t) + e.clone() - LinExpr::term(b, 2.0 * r), 0.0);
                    sum += LinExpr::from(t);
                }
            }
            Ok(sum)
        }
        Norm::Two => Err(Error::Unsupported("MILP encodings support α ∈ {1, ∞}".into())),
    }
}
