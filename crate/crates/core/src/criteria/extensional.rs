use crate::model::{CmpOp, Expr, Model, Pred, SetRef, Sort, Value, VAR_X};

use super::{CriteriaError, Scc};

/// Class predicates covering every element of `sort` for `var`: one per
/// enumerated value or extension literal, and a single membership class for
/// an infinite base.
fn element_classes(var: &str, sort: &Sort) -> Result<Vec<Pred>, CriteriaError> {
    let v = Expr::var(var);
    let eq = |val: Value| Pred::cmp(CmpOp::Eq, v.clone(), Expr::Const(val));
    Ok(match sort {
        Sort::Enum(lits) => lits.iter().map(|l| eq(Value::lit(l.clone()))).collect(),
        Sort::Range(lo, hi) => (*lo..=*hi).map(|n| eq(Value::int(n))).collect(),
        Sort::Extended(base, lit) => {
            let mut out = match element_classes(var, base) {
                Ok(cs) => cs,
                Err(_) => vec![Pred::In(v.clone(), SetRef::Sort((**base).clone()))],
            };
            out.push(eq(Value::lit(lit.clone())));
            out
        }
        _ => return Err(CriteriaError::NotEnumerated(var.to_string())),
    })
}

/// One class per element of a state variable's set (with any input pair),
/// or of the input set (from any state).
pub fn extensional_criterion(model: &Model, target: &str) -> Result<Vec<Scc>, CriteriaError> {
    let sort = if target == VAR_X {
        model.input.clone()
    } else {
        let i = model.state.index_of(target).ok_or_else(|| CriteriaError::UnknownTarget(target.to_string()))?;
        model.state.vars[i].sort.clone()
    };
    let classes = element_classes(target, &sort)?;
    Ok(classes
        .into_iter()
        .map(|p| {
            let label = p.to_string();
            if target == VAR_X {
                Scc::new(Pred::True, p, "extensional", label)
            } else {
                Scc::new(p, Pred::True, "extensional", label)
            }
        })
        .collect())
}
