use std::cmp::Ordering;

use crate::model::{CmpOp, Env, Expr, Pred, Value, VAR_T};
use crate::symbolic::Solver;

use super::{CriteriaError, CriterionOutput, Scc};

/// Time intervals `[a, b]` and points to probe.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimeSpec {
    pub intervals: Vec<(Expr, Expr)>,
    pub points: Vec<Expr>,
    /// Merge every endpoint into one ordered sequence of points and open
    /// intervals between them instead of classifying each interval alone.
    pub refine: bool,
}

fn t() -> Expr {
    Expr::var(VAR_T)
}

fn lt(a: Expr, b: Expr) -> Pred {
    Pred::cmp(CmpOp::Lt, a, b)
}

fn at(p: &Expr) -> Pred {
    Pred::cmp(CmpOp::Eq, t(), p.clone())
}

fn between(a: &Expr, b: &Expr) -> Pred {
    Pred::And(vec![lt(a.clone(), t()), lt(t(), b.clone())])
}

fn after(p: &Expr) -> Pred {
    Pred::cmp(CmpOp::Gt, t(), p.clone())
}

fn value(solver: &Solver, e: &Expr) -> Option<Value> {
    match solver.ctx.eval(e, &Env::new(), &[]) {
        Ok(v @ (Value::Num(_) | Value::Inf)) => Some(v),
        _ => None,
    }
}

/// Five classes per interval and three per point, all over any state.
/// Endpoints that depend on the state restrict the initial states to those
/// where the interval is non-empty.
pub fn time_partition_criterion(solver: &Solver, spec: &TimeSpec) -> Result<CriterionOutput, CriteriaError> {
    let mut out = CriterionOutput::default();
    let mut push = |ini: Pred, pairs: Pred| {
        let label = pairs.to_string();
        out.sccs.push(Scc::new(ini, pairs, "time", label));
    };
    if spec.refine {
        let mut pts: Vec<(Value, Expr)> = Vec::new();
        let all = spec.intervals.iter().flat_map(|(a, b)| [a, b]).chain(&spec.points);
        for e in all {
            let v = value(solver, e).ok_or_else(|| CriteriaError::BadEndpoint(e.to_string()))?;
            if !pts.iter().any(|(w, _)| *w == v) {
                pts.push((v, e.clone()));
            }
        }
        check_intervals(solver, spec)?;
        pts.sort_by(|a, b| a.0.num_cmp(&b.0).unwrap_or(Ordering::Equal));
        if let Some((v, p)) = pts.first() {
            if v.num_cmp(&Value::int(0)) == Some(Ordering::Greater) {
                push(Pred::True, lt(t(), p.clone()));
            }
        }
        for (i, (_, p)) in pts.iter().enumerate() {
            push(Pred::True, at(p));
            match pts.get(i + 1) {
                Some((_, q)) => push(Pred::True, between(p, q)),
                None => push(Pred::True, after(p)),
            }
        }
        return Ok(out);
    }
    check_intervals(solver, spec)?;
    for (a, b) in &spec.intervals {
        let ini = if value(solver, a).is_some() && value(solver, b).is_some() {
            Pred::True
        } else {
            lt(a.clone(), b.clone())
        };
        push(ini.clone(), lt(t(), a.clone()));
        push(ini.clone(), at(a));
        push(ini.clone(), between(a, b));
        push(ini.clone(), at(b));
        push(ini, after(b));
    }
    for p in &spec.points {
        push(Pred::True, lt(t(), p.clone()));
        push(Pred::True, at(p));
        push(Pred::True, after(p));
    }
    Ok(out)
}

fn check_intervals(solver: &Solver, spec: &TimeSpec) -> Result<(), CriteriaError> {
    for (a, b) in &spec.intervals {
        if let (Some(va), Some(vb)) = (value(solver, a), value(solver, b)) {
            if va.num_cmp(&vb) != Some(Ordering::Less) {
                return Err(CriteriaError::BadInterval { a: a.to_string(), b: b.to_string() });
            }
        }
    }
    Ok(())
}
