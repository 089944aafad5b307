//! Export of a [`Model`] in CPLEX LP text format for cross-checking with
//! external solvers.

use std::fmt::Write;

use super::model::{Cmp, Model, Sense, VarKind};

fn sanitize(name: &str, idx: usize, prefix: char) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() || !s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
        s.insert(0, prefix);
    }
    format!("{s}_{idx}")
}

fn terms(out: &mut String, t: &[(super::Var, f64)], names: &[String]) {
    if t.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (v, c) in t {
        let sign = if *c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {:e} {}", c.abs(), names[v.index()]);
    }
}

pub fn to_lp_string(model: &Model) -> String {
    let names: Vec<String> = model.vars.iter().enumerate().map(|(i, v)| sanitize(&v.name, i, 'x')).collect();
    let mut out = String::new();
    out.push_str(match model.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    terms(&mut out, &model.objective.terms, &names);
    if model.objective.constant != 0.0 {
        let _ = write!(out, " + {:e}", model.objective.constant);
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = write!(out, " {}:", sanitize(&c.name, i, 'c'));
        terms(&mut out, &c.terms, &names);
        let op = match c.cmp {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        };
        let _ = writeln!(out, " {op} {:e}", c.rhs);
    }
    out.push_str("Bounds\n");
    for (i, v) in model.vars.iter().enumerate() {
        if v.kind == VarKind::Binary {
            continue;
        }
        let lo = if v.lb.is_finite() { format!("{:e}", v.lb) } else { "-inf".into() };
        let hi = if v.ub.is_finite() { format!("{:e}", v.ub) } else { "+inf".into() };
        let _ = writeln!(out, " {lo} <= {} <= {hi}", names[i]);
    }
    let bins: Vec<&String> = model
        .vars
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for b in bins {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}
