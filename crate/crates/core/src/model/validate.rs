use std::collections::BTreeSet;
use std::fmt;

use super::{CmpOp, Expr, FunctionKind, Model, Pred, SetRef, Sort, Value, VAR_E, VAR_T, VAR_X};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    /// Where the problem is, e.g. `dext case 3`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

struct Checker<'m> {
    model: &'m Model,
    errors: Vec<ValidationError>,
}

/// Static checks: names resolve, arities match, literals belong to the sorts
/// they are compared with or assigned to, and `otherwise` comes last.
pub fn validate(model: &Model) -> Result<(), Vec<ValidationError>> {
    let mut c = Checker { model, errors: Vec::new() };
    c.check_schema();
    c.check_operators();
    let scope = c.base_scope();
    c.check_expr(&model.ta, &scope, "ta");
    for kind in [FunctionKind::Dext, FunctionKind::Dint, FunctionKind::Lambda] {
        let func = model.function(kind).expect("case function");
        let mut local = scope.clone();
        if kind == FunctionKind::Dext {
            local.insert(VAR_X.to_string());
            local.insert(VAR_E.to_string());
        }
        for (name, e) in &func.lets {
            c.check_expr(e, &local, &format!("{kind} let {name}"));
            local.insert(name.clone());
        }
        let last = func.cases.len();
        for (i, case) in func.cases.iter().enumerate() {
            let loc = format!("{kind} case {}", case.id);
            if case.otherwise && i + 1 != last {
                c.err(&loc, "`otherwise` must be the last case");
            }
            c.check_pred(&case.guard, &local, &loc);
            c.check_expr(&case.result, &local, &loc);
            if kind == FunctionKind::Lambda {
                c.check_assign(&case.result, &model.output, &loc);
            } else {
                c.check_assign(&case.result, &model.state.sort(), &loc);
            }
        }
    }
    if c.errors.is_empty() {
        Ok(())
    } else {
        Err(c.errors)
    }
}

impl<'m> Checker<'m> {
    fn err(&mut self, loc: &str, msg: impl Into<String>) {
        self.errors.push(ValidationError { location: loc.to_string(), message: msg.into() });
    }

    fn base_scope(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.model.state.names().map(str::to_string).collect();
        s.extend(self.model.constants.iter().map(|c| c.name.clone()));
        s
    }

    fn check_schema(&mut self) {
        let mut seen = BTreeSet::new();
        for v in &self.model.state.vars {
            if [VAR_X, VAR_E, VAR_T].contains(&v.name.as_str()) {
                self.err("state", format!("`{}` is reserved and cannot name a state variable", v.name));
            }
            if !seen.insert(v.name.clone()) {
                self.err("state", format!("duplicate state variable `{}`", v.name));
            }
            if v.time && v.sort != Sort::Time {
                self.err("state", format!("`{}` is marked @time but has sort {}", v.name, v.sort));
            }
        }
        let mut consts = BTreeSet::new();
        for c in &self.model.constants {
            if !consts.insert(c.name.clone()) || seen.contains(&c.name) {
                self.err("const", format!("duplicate name `{}`", c.name));
            }
        }
    }

    fn check_operators(&mut self) {
        let mut names = BTreeSet::new();
        for op in &self.model.operators {
            if !names.insert(op.name.clone()) {
                self.err(&format!("op {}", op.name), "duplicate operator");
            }
            let mut scope: BTreeSet<String> = self.model.constants.iter().map(|c| c.name.clone()).collect();
            scope.extend(op.params.iter().cloned());
            self.check_expr(&op.body, &scope, &format!("op {}", op.name));
        }
    }

    fn check_expr(&mut self, e: &Expr, scope: &BTreeSet<String>, loc: &str) {
        match e {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                if !scope.contains(v) {
                    self.err(loc, format!("unbound variable `{v}`"));
                }
            }
            Expr::Neg(a) | Expr::Proj(a, _) => self.check_expr(a, scope, loc),
            Expr::Bin(_, a, b) => {
                self.check_expr(a, scope, loc);
                self.check_expr(b, scope, loc);
            }
            Expr::Min(xs) | Expr::Max(xs) | Expr::Tuple(xs) => xs.iter().for_each(|x| self.check_expr(x, scope, loc)),
            Expr::Apply(name, args) => {
                match self.model.operator(name) {
                    None => self.err(loc, format!("unknown operator `{name}`")),
                    Some(op) if op.params.len() != args.len() => self.err(
                        loc,
                        format!("operator `{name}` expects {} arguments, got {}", op.params.len(), args.len()),
                    ),
                    Some(_) => {}
                }
                args.iter().for_each(|x| self.check_expr(x, scope, loc))
            }
            Expr::Ite(c, a, b) => {
                self.check_pred(c, scope, loc);
                self.check_expr(a, scope, loc);
                self.check_expr(b, scope, loc);
            }
        }
    }

    fn check_pred(&mut self, p: &Pred, scope: &BTreeSet<String>, loc: &str) {
        match p {
            Pred::True | Pred::False => {}
            Pred::Cmp(op, a, b) => {
                self.check_expr(a, scope, loc);
                self.check_expr(b, scope, loc);
                if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    self.check_literal_against(a, b, loc);
                    self.check_literal_against(b, a, loc);
                }
            }
            Pred::In(a, set) => {
                self.check_expr(a, scope, loc);
                if let SetRef::Values(vals) = set {
                    for v in vals {
                        self.check_literal_against(a, &Expr::Const(v.clone()), loc);
                    }
                }
            }
            Pred::Not(q) => self.check_pred(q, scope, loc),
            Pred::And(qs) | Pred::Or(qs) => qs.iter().for_each(|q| self.check_pred(q, scope, loc)),
            Pred::Implies(a, b) => {
                self.check_pred(a, scope, loc);
                self.check_pred(b, scope, loc);
            }
            Pred::Exists(vars, body) => {
                let mut inner = scope.clone();
                inner.extend(vars.iter().cloned());
                self.check_pred(body, &inner, loc);
            }
        }
    }

    /// `var = lit` where `lit` cannot be a value of the variable's sort.
    fn check_literal_against(&mut self, var: &Expr, lit: &Expr, loc: &str) {
        let (Expr::Var(name), Expr::Const(v @ Value::Lit(l))) = (var, lit) else {
            return;
        };
        if let Some(sort) = self.model.var_sort(name) {
            if !sort.contains(v) {
                self.err(loc, format!("literal `{l}` is not a value of `{name}` ({sort})"));
            }
        }
    }

    fn check_assign(&mut self, e: &Expr, sort: &Sort, loc: &str) {
        match (e, sort) {
            (Expr::Tuple(items), Sort::Tuple(sorts)) => {
                if items.len() != sorts.len() {
                    self.err(loc, format!("expected a {}-tuple, found {} components", sorts.len(), items.len()));
                    return;
                }
                for (i, s) in items.iter().zip(sorts) {
                    self.check_assign(i, s, loc);
                }
            }
            (Expr::Const(v), s) if !s.contains(v) => {
                self.err(loc, format!("`{v}` is not a value of {s}"));
            }
            _ => {}
        }
    }
}
