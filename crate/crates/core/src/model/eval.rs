use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::{is_nonneg, BinOp, CaseFunction, CmpOp, Expr, FunctionKind, Model, Pred, Rational, SetRef, Sort, Value};

const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{op}` expects {expected} arguments, got {got}")]
    Arity { op: String, expected: usize, got: usize },
    #[error("type mismatch: {0}")]
    Type(String),
    #[error("division by zero")]
    DivByZero,
    #[error("undefined arithmetic on inf: {0}")]
    Infinite(String),
    #[error("subtraction below zero in {0} arithmetic")]
    Underflow(&'static str),
    #[error("no bounded domain for quantified variable `{0}`")]
    NoDomain(String),
    #[error("projection .{index} out of range for a {len}-tuple")]
    Projection { index: usize, len: usize },
    #[error("operator nesting exceeds {MAX_DEPTH} levels")]
    Depth,
}

/// Finite domains for variables bound by `exists`.
pub trait Domains: Sync {
    fn domain(&self, var: &str) -> Option<&[Value]>;
}

/// Variable bindings, searched innermost first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    vars: Vec<(String, Value)>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    /// Binds each state variable to the matching component of `state`.
    pub fn from_state(model: &Model, state: &Value) -> Env {
        let mut env = Env::new();
        if let Value::Tuple(items) = state {
            for (v, val) in model.state.vars.iter().zip(items) {
                env.push(&v.name, val.clone());
            }
        }
        env
    }

    pub fn with(mut self, name: &str, value: Value) -> Env {
        self.set(name, value);
        self
    }

    pub fn push(&mut self, name: &str, value: Value) {
        self.vars.push((name.to_string(), value));
    }

    pub fn pop(&mut self) {
        self.vars.pop();
    }

    /// Replaces an existing binding or adds a new one.
    pub fn set(&mut self, name: &str, value: Value) {
        match self.vars.iter_mut().rev().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.push(name, value),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.vars.iter().map(|(n, v)| (n.as_str(), v))
    }
}

/// Statically known floor of an arithmetic expression, used to reject
/// subtraction that leaves `nat` or `time`.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Floor {
    Nat,
    Time,
    Other,
}

/// A model together with concrete values for its constants.
pub struct EvalContext<'m> {
    pub model: &'m Model,
    consts: BTreeMap<String, Value>,
    domains: Option<&'m dyn Domains>,
}

impl<'m> EvalContext<'m> {
    /// Resolves every constant: defined ones by evaluation, symbolic ones from `bindings`.
    /// Symbolic constants missing from `bindings` stay unbound until used.
    pub fn new(model: &'m Model, bindings: &BTreeMap<String, Value>) -> Result<Self, EvalError> {
        let mut ctx = EvalContext { model, consts: BTreeMap::new(), domains: None };
        for c in &model.constants {
            let v = match (&c.value, bindings.get(&c.name)) {
                (_, Some(v)) => Some(v.clone()),
                (Some(e), None) => Some(ctx.eval(e, &Env::new(), &[])?),
                (None, None) => None,
            };
            if let Some(v) = v {
                ctx.consts.insert(c.name.clone(), v);
            }
        }
        Ok(ctx)
    }

    pub fn with_domains(mut self, domains: &'m dyn Domains) -> Self {
        self.domains = Some(domains);
        self
    }

    pub fn constants(&self) -> &BTreeMap<String, Value> {
        &self.consts
    }

    pub fn constant(&self, name: &str) -> Option<&Value> {
        self.consts.get(name)
    }

    pub fn eval(&self, e: &Expr, env: &Env, lets: &[(String, Expr)]) -> Result<Value, EvalError> {
        self.eval_expr(e, &mut env.clone(), lets, 0)
    }

    pub fn holds(&self, p: &Pred, env: &Env, lets: &[(String, Expr)]) -> Result<bool, EvalError> {
        self.eval_pred(p, &mut env.clone(), lets, 0)
    }

    /// Time advance of a state.
    pub fn ta(&self, env: &Env) -> Result<Value, EvalError> {
        self.eval(&self.model.ta, env, &[])
    }

    /// First case of `kind` whose guard holds, with its evaluated result.
    pub fn fire(&self, kind: FunctionKind, env: &Env) -> Result<Option<(u32, Value)>, EvalError> {
        let Some(func) = self.model.function(kind) else {
            return Ok(Some((0, self.ta(env)?)));
        };
        self.fire_in(func, env)
    }

    fn fire_in(&self, func: &CaseFunction, env: &Env) -> Result<Option<(u32, Value)>, EvalError> {
        let mut scratch = env.clone();
        for case in &func.cases {
            if self.eval_pred(&case.guard, &mut scratch, &func.lets, 0)? {
                let v = self.eval_expr(&case.result, &mut scratch, &func.lets, 0)?;
                return Ok(Some((case.id, v)));
            }
        }
        Ok(None)
    }

    fn lookup(&self, name: &str, env: &mut Env, lets: &[(String, Expr)], depth: usize) -> Result<Value, EvalError> {
        if let Some(v) = env.get(name) {
            return Ok(v.clone());
        }
        if let Some(i) = lets.iter().position(|(n, _)| n == name) {
            return self.eval_expr(&lets[i].1, env, &lets[..i], depth + 1);
        }
        if let Some(v) = self.consts.get(name) {
            return Ok(v.clone());
        }
        Err(EvalError::Unbound(name.to_string()))
    }

    fn eval_expr(&self, e: &Expr, env: &mut Env, lets: &[(String, Expr)], depth: usize) -> Result<Value, EvalError> {
        if depth > MAX_DEPTH {
            return Err(EvalError::Depth);
        }
        match e {
            Expr::Const(v) => Ok(v.clone()),
            Expr::Var(name) => self.lookup(name, env, lets, depth),
            Expr::Neg(a) => match self.eval_expr(a, env, lets, depth)? {
                Value::Num(r) => Ok(Value::Num(-r)),
                Value::Inf => Err(EvalError::Infinite("-inf".into())),
                v => Err(EvalError::Type(format!("cannot negate {v}"))),
            },
            Expr::Bin(op, a, b) => {
                let va = self.eval_expr(a, env, lets, depth)?;
                let vb = self.eval_expr(b, env, lets, depth)?;
                let out = arith(*op, &va, &vb)?;
                if *op == BinOp::Sub {
                    if let Value::Num(r) = &out {
                        if r.is_negative() {
                            match self.floor(e, env, lets) {
                                Floor::Nat => return Err(EvalError::Underflow("nat")),
                                Floor::Time => return Err(EvalError::Underflow("time")),
                                Floor::Other => {}
                            }
                        }
                    }
                }
                Ok(out)
            }
            Expr::Min(xs) | Expr::Max(xs) => {
                let want = if matches!(e, Expr::Min(_)) { Ordering::Less } else { Ordering::Greater };
                let mut best: Option<Value> = None;
                for x in xs {
                    let v = self.eval_expr(x, env, lets, depth)?;
                    if !v.is_numeric() {
                        return Err(EvalError::Type(format!("min/max of non-numeric {v}")));
                    }
                    best = match best {
                        None => Some(v),
                        Some(b) => Some(if v.num_cmp(&b) == Some(want) { v } else { b }),
                    };
                }
                best.ok_or_else(|| EvalError::Type("min/max of nothing".into()))
            }
            Expr::Tuple(xs) => {
                Ok(Value::Tuple(xs.iter().map(|x| self.eval_expr(x, env, lets, depth)).collect::<Result<_, _>>()?))
            }
            Expr::Proj(a, i) => match self.eval_expr(a, env, lets, depth)? {
                Value::Tuple(mut items) => {
                    let len = items.len();
                    if *i < len {
                        Ok(items.swap_remove(*i))
                    } else {
                        Err(EvalError::Projection { index: *i, len })
                    }
                }
                v => Err(EvalError::Type(format!("projection .{i} of non-tuple {v}"))),
            },
            Expr::Apply(name, args) => {
                let op = self.model.operator(name).ok_or_else(|| EvalError::UnknownOperator(name.clone()))?;
                if op.params.len() != args.len() {
                    return Err(EvalError::Arity { op: name.clone(), expected: op.params.len(), got: args.len() });
                }
                let mut inner = Env::new();
                for (p, a) in op.params.iter().zip(args) {
                    let v = self.eval_expr(a, env, lets, depth)?;
                    inner.push(p, v);
                }
                self.eval_expr(&op.body, &mut inner, &[], depth + 1)
            }
            Expr::Ite(c, a, b) => {
                if self.eval_pred(c, env, lets, depth)? {
                    self.eval_expr(a, env, lets, depth)
                } else {
                    self.eval_expr(b, env, lets, depth)
                }
            }
        }
    }

    fn eval_pred(&self, p: &Pred, env: &mut Env, lets: &[(String, Expr)], depth: usize) -> Result<bool, EvalError> {
        match p {
            Pred::True => Ok(true),
            Pred::False => Ok(false),
            Pred::Cmp(op, a, b) => {
                let va = self.eval_expr(a, env, lets, depth)?;
                let vb = self.eval_expr(b, env, lets, depth)?;
                Ok(compare(*op, &va, &vb))
            }
            Pred::In(a, set) => {
                let v = self.eval_expr(a, env, lets, depth)?;
                Ok(match set {
                    SetRef::Values(vals) => vals.contains(&v),
                    SetRef::Sort(s) => s.contains(&v),
                })
            }
            Pred::Not(q) => Ok(!self.eval_pred(q, env, lets, depth)?),
            Pred::And(qs) => {
                for q in qs {
                    if !self.eval_pred(q, env, lets, depth)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Pred::Or(qs) => {
                for q in qs {
                    if self.eval_pred(q, env, lets, depth)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Pred::Implies(a, b) => Ok(!self.eval_pred(a, env, lets, depth)? || self.eval_pred(b, env, lets, depth)?),
            Pred::Exists(vars, body) => {
                let doms = self.domains;
                let mut ranges = Vec::with_capacity(vars.len());
                for v in vars {
                    let d = doms.and_then(|d| d.domain(v)).ok_or_else(|| EvalError::NoDomain(v.clone()))?;
                    ranges.push(d);
                }
                self.exists_rec(vars, &ranges, body, env, lets, depth)
            }
        }
    }

    fn exists_rec(
        &self,
        vars: &[String],
        ranges: &[&[Value]],
        body: &Pred,
        env: &mut Env,
        lets: &[(String, Expr)],
        depth: usize,
    ) -> Result<bool, EvalError> {
        let Some((first, rest)) = vars.split_first() else {
            return self.eval_pred(body, env, lets, depth);
        };
        for v in ranges[0] {
            env.push(first, v.clone());
            let hit = self.exists_rec(rest, &ranges[1..], body, env, lets, depth);
            env.pop();
            // a witness where the body errors does not count
            if let Ok(true) = hit {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn floor(&self, e: &Expr, env: &Env, lets: &[(String, Expr)]) -> Floor {
        self.floor_rec(e, env, lets, 0)
    }

    fn floor_rec(&self, e: &Expr, env: &Env, lets: &[(String, Expr)], depth: usize) -> Floor {
        if depth > MAX_DEPTH {
            return Floor::Other;
        }
        let join = |a: Floor, b: Floor| match (a, b) {
            (Floor::Nat, Floor::Nat) => Floor::Nat,
            (Floor::Time, Floor::Nat | Floor::Time) | (Floor::Nat, Floor::Time) => Floor::Time,
            _ => Floor::Other,
        };
        match e {
            Expr::Const(Value::Num(r)) if r.is_integer() && is_nonneg(r) => Floor::Nat,
            Expr::Const(_) => Floor::Other,
            Expr::Var(name) => {
                // bound parameters inside operator bodies carry no sort
                if env.get(name).is_none() && !self.consts.contains_key(name) {
                    if let Some(i) = lets.iter().position(|(n, _)| n == name) {
                        return self.floor_rec(&lets[i].1, env, &lets[..i], depth + 1);
                    }
                }
                match self.model.var_sort(name).as_ref().map(Sort::base) {
                    Some(Sort::Nat) => Floor::Nat,
                    Some(Sort::Time) => Floor::Time,
                    _ => Floor::Other,
                }
            }
            Expr::Bin(BinOp::Add | BinOp::Sub | BinOp::Mul, a, b) => {
                join(self.floor_rec(a, env, lets, depth + 1), self.floor_rec(b, env, lets, depth + 1))
            }
            Expr::Min(xs) | Expr::Max(xs) => {
                xs.iter().map(|x| self.floor_rec(x, env, lets, depth + 1)).reduce(join).unwrap_or(Floor::Other)
            }
            _ => Floor::Other,
        }
    }
}

fn arith(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    use Value::{Inf, Num};
    let sym = match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::IntDiv => "div",
    };
    let inf_err = || EvalError::Infinite(format!("{a} {sym} {b}"));
    match (op, a, b) {
        (_, Num(x), Num(y)) => match op {
            BinOp::Add => Ok(Num(x + y)),
            BinOp::Sub => Ok(Num(x - y)),
            BinOp::Mul => Ok(Num(x * y)),
            BinOp::Div if y.is_zero() => Err(EvalError::DivByZero),
            BinOp::Div => Ok(Num(x / y)),
            BinOp::IntDiv if y.is_zero() => Err(EvalError::DivByZero),
            BinOp::IntDiv => Ok(Num(Rational::from_integer((x / y).floor().to_integer()))),
        },
        (BinOp::Add, Inf, Num(_) | Inf) | (BinOp::Add, Num(_), Inf) => Ok(Inf),
        (BinOp::Sub, Inf, Num(_)) => Ok(Inf),
        (BinOp::Mul, Inf, Num(r)) | (BinOp::Mul, Num(r), Inf) if r.is_positive() => Ok(Inf),
        (BinOp::Mul, Inf, Inf) => Ok(Inf),
        (BinOp::Div, Inf, Num(r)) if r.is_positive() => Ok(Inf),
        (BinOp::Div | BinOp::IntDiv, Num(_), Inf) => Ok(Value::int(0)),
        (_, Inf | Num(_), Inf | Num(_)) => Err(inf_err()),
        _ => Err(EvalError::Type(format!("arithmetic on non-numbers: {a} {sym} {b}"))),
    }
}

/// Equality is structural; ordering holds only between numeric values.
pub(crate) fn compare(op: CmpOp, a: &Value, b: &Value) -> bool {
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        _ => match a.num_cmp(b) {
            None => false,
            Some(ord) => match op {
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Gt => ord == Ordering::Greater,
                CmpOp::Ge => ord != Ordering::Less,
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constant, StateSchema, StateVar};

    fn tiny() -> Model {
        Model {
            name: "tiny".into(),
            constants: vec![Constant { name: "K".into(), sort: Some(Sort::Time), value: None }],
            state: StateSchema {
                vars: vec![
                    StateVar { name: "n".into(), sort: Sort::Nat, time: false, group: None },
                    StateVar { name: "w".into(), sort: Sort::Time, time: true, group: None },
                ],
            },
            input: Sort::Nat,
            output: Sort::Nat,
            operators: vec![],
            ta: Expr::var("w"),
            dext: CaseFunction::default(),
            dint: CaseFunction::default(),
            lambda: CaseFunction::default(),
        }
    }

    fn ctx(m: &Model) -> EvalContext<'_> {
        let mut b = BTreeMap::new();
        b.insert("K".to_string(), Value::int(2));
        EvalContext::new(m, &b).unwrap()
    }

    #[test]
    fn nat_underflow_is_an_error() {
        let m = tiny();
        let c = ctx(&m);
        let env = Env::new().with("n", Value::int(0));
        let e = Expr::bin(BinOp::Sub, Expr::var("n"), Expr::int(1));
        assert_eq!(c.eval(&e, &env, &[]), Err(EvalError::Underflow("nat")));
        let ok = Expr::bin(BinOp::Sub, Expr::int(0), Expr::int(1));
        assert_eq!(c.eval(&ok, &env, &[]), Err(EvalError::Underflow("nat")));
        let neg = Expr::bin(BinOp::Sub, Expr::Const(Value::int(-1)), Expr::int(1));
        assert_eq!(c.eval(&neg, &env, &[]), Ok(Value::int(-2)));
    }

    #[test]
    fn infinity_arithmetic() {
        let m = tiny();
        let c = ctx(&m);
        let env = Env::new().with("w", Value::Inf);
        let sub = Expr::bin(BinOp::Sub, Expr::var("w"), Expr::var("K"));
        assert_eq!(c.eval(&sub, &env, &[]), Ok(Value::Inf));
        let bad = Expr::bin(BinOp::Sub, Expr::var("w"), Expr::var("w"));
        assert!(matches!(c.eval(&bad, &env, &[]), Err(EvalError::Infinite(_))));
        let m2 = Expr::Min(vec![Expr::var("w"), Expr::var("K")]);
        assert_eq!(c.eval(&m2, &env, &[]), Ok(Value::int(2)));
    }

    #[test]
    fn division() {
        let m = tiny();
        let c = ctx(&m);
        let env = Env::new();
        let d = Expr::bin(BinOp::Div, Expr::int(7), Expr::int(4));
        assert_eq!(c.eval(&d, &env, &[]), Ok(Value::rat(7, 4)));
        let z = Expr::bin(BinOp::Div, Expr::int(7), Expr::int(0));
        assert_eq!(c.eval(&z, &env, &[]), Err(EvalError::DivByZero));
        let fl = Expr::bin(BinOp::IntDiv, Expr::Const(Value::rat(7, 4)), Expr::Const(Value::rat(1, 2)));
        assert_eq!(c.eval(&fl, &env, &[]), Ok(Value::int(3)));
    }

    #[test]
    fn ordering_against_literals_is_false() {
        assert!(!compare(CmpOp::Lt, &Value::lit("empty"), &Value::int(3)));
        assert!(!compare(CmpOp::Ge, &Value::lit("empty"), &Value::int(3)));
        assert!(compare(CmpOp::Ne, &Value::lit("empty"), &Value::int(3)));
        assert!(compare(CmpOp::Le, &Value::int(3), &Value::Inf));
    }

    #[test]
    fn lets_see_earlier_lets() {
        let m = tiny();
        let c = ctx(&m);
        let lets = vec![
            ("a".to_string(), Expr::bin(BinOp::Add, Expr::var("n"), Expr::int(1))),
            ("b".to_string(), Expr::bin(BinOp::Mul, Expr::var("a"), Expr::int(2))),
        ];
        let env = Env::new().with("n", Value::int(3));
        assert_eq!(c.eval(&Expr::var("b"), &env, &lets), Ok(Value::int(8)));
    }
}
