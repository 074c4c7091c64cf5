use std::collections::BTreeMap;

use crate::model::{Expr, FunctionKind, Pred, VAR_E, VAR_T, VAR_X};
use crate::symbolic::Solver;

use super::{tau_pairs, CriterionOutput, Scc};

/// Replaces let-bound names with their definitions. Later lets may refer to
/// earlier ones, so substitution runs from the last binding back.
pub fn inline_lets(p: &Pred, lets: &[(String, Expr)]) -> Pred {
    let mut out = p.clone();
    for (name, e) in lets.iter().rev() {
        if out.mentions(name) {
            out = out.subst(&BTreeMap::from([(name.clone(), e.clone())]));
        }
    }
    out
}

/// `p` with the elapsed time read as the input pair's time.
pub(crate) fn elapsed_as_time(p: &Pred) -> Pred {
    p.subst(&BTreeMap::from([(VAR_E.to_string(), Expr::var(VAR_T))]))
}

/// Initial states and input pairs of one guard: external guards are split by
/// projection, internal ones keep the guard and take `(tau, 0)`.
pub(crate) fn guard_class(solver: &Solver, kind: FunctionKind, guard: &Pred) -> (Scc, usize) {
    if kind != FunctionKind::Dext {
        return (Scc::new(guard.clone(), tau_pairs(), "", ""), 0);
    }
    let ini = solver.project_exists(guard, &[VAR_X.to_string(), VAR_E.to_string()]);
    let link = elapsed_as_time(guard);
    let state: Vec<String> = solver.universe.state_vars().to_vec();
    let pairs = solver.project_exists(&link, &state);
    let mut scc = Scc::new(ini.pred, pairs.pred, "", "");
    if guard.mentions(VAR_E) {
        scc.notes.push("guard constrains e; t is read as the elapsed time".into());
    }
    scc.link = Some(link);
    (scc, usize::from(ini.unknown) + usize::from(pairs.unknown))
}

/// One class per external and internal case, in declaration order.
pub fn cases_criterion(solver: &Solver, include_otherwise: bool) -> CriterionOutput {
    let model = solver.ctx.model;
    let mut out = CriterionOutput::default();
    for kind in [FunctionKind::Dext, FunctionKind::Dint] {
        let func = model.function(kind).expect("case function");
        for case in &func.cases {
            if case.otherwise && !include_otherwise {
                continue;
            }
            let guard = inline_lets(&case.guard, &func.lets);
            let (mut scc, unknown) = guard_class(solver, kind, &guard);
            scc.provenance.criterion = "cases".into();
            scc.provenance.target =
                if case.otherwise { format!("{kind} otherwise") } else { format!("{kind} case {}", case.id) };
            if unknown > 0 {
                scc.notes.push("projection undecided within budget".into());
            }
            out.unknown += unknown;
            out.sccs.push(scc);
        }
    }
    out
}
