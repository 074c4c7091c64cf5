//! Typed representation of an atomic DEVS model and its expression language.

mod eval;
mod validate;
mod value;

use std::collections::BTreeMap;
use std::fmt;

pub use eval::{Domains, Env, EvalContext, EvalError};
pub use validate::{validate, ValidationError};
pub use value::{fmt_rational, Rational, Value};

pub(crate) use value::is_nonneg;

/// Names reserved for the input event, the elapsed time and the time of an
/// injected input pair.
pub const VAR_X: &str = "x";
pub const VAR_E: &str = "e";
pub const VAR_T: &str = "t";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Nat,
    Int,
    Rational,
    /// Non-negative rationals extended with `inf`.
    Time,
    /// Closed integer interval, used for flags such as `0..1`.
    Range(i64, i64),
    Enum(Vec<String>),
    Tuple(Vec<Sort>),
    /// A base sort plus one extra literal, e.g. `nat | empty`.
    Extended(Box<Sort>, String),
}

impl Sort {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Sort::Nat, Value::Num(r)) => r.is_integer() && is_nonneg(r),
            (Sort::Int, Value::Num(r)) => r.is_integer(),
            (Sort::Rational, Value::Num(_)) => true,
            (Sort::Time, Value::Num(r)) => is_nonneg(r),
            (Sort::Time, Value::Inf) => true,
            (Sort::Range(lo, hi), Value::Num(r)) => r.is_integer() && *lo <= r.to_integer() && r.to_integer() <= *hi,
            (Sort::Enum(lits), Value::Lit(l)) => lits.contains(l),
            (Sort::Tuple(sorts), Value::Tuple(items)) => {
                sorts.len() == items.len() && sorts.iter().zip(items).all(|(s, v)| s.contains(v))
            }
            (Sort::Extended(base, lit), v) => matches!(v, Value::Lit(l) if l == lit) || base.contains(v),
            _ => false,
        }
    }

    /// Every literal that may appear in a value of this sort.
    pub fn literals(&self, out: &mut Vec<String>) {
        match self {
            Sort::Enum(lits) => out.extend(lits.iter().cloned()),
            Sort::Tuple(items) => items.iter().for_each(|s| s.literals(out)),
            Sort::Extended(base, lit) => {
                base.literals(out);
                out.push(lit.clone());
            }
            _ => {}
        }
    }

    /// The innermost non-extended sort.
    pub fn base(&self) -> &Sort {
        match self {
            Sort::Extended(b, _) => b.base(),
            s => s,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.base(), Sort::Nat | Sort::Int | Sort::Rational | Sort::Time | Sort::Range(..))
    }

    /// True when the set of values is finite without any bounds.
    pub fn is_enumerated(&self) -> bool {
        match self {
            Sort::Range(..) | Sort::Enum(_) => true,
            Sort::Tuple(items) => items.iter().all(Sort::is_enumerated),
            Sort::Extended(base, _) => base.is_enumerated(),
            _ => false,
        }
    }

    pub fn is_keyword_sort(name: &str) -> Option<Sort> {
        match name {
            "nat" => Some(Sort::Nat),
            "int" => Some(Sort::Int),
            "rational" => Some(Sort::Rational),
            "time" => Some(Sort::Time),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Nat => write!(f, "nat"),
            Sort::Int => write!(f, "int"),
            Sort::Rational => write!(f, "rational"),
            Sort::Time => write!(f, "time"),
            Sort::Range(lo, hi) => write!(f, "{lo}..{hi}"),
            Sort::Enum(lits) => write!(f, "enum {{{}}}", lits.join(", ")),
            Sort::Tuple(items) => {
                write!(f, "(")?;
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, ")")
            }
            Sort::Extended(base, lit) => write!(f, "{base} | {lit}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    IntDiv,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(Value),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
    Tuple(Vec<Expr>),
    /// Zero-based component access, written `e.0`.
    Proj(Box<Expr>, usize),
    Apply(String, Vec<Expr>),
    Ite(Box<Pred>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Value::int(n))
    }

    pub fn lit(name: &str) -> Expr {
        Expr::Const(Value::lit(name))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Calls `f` on every variable name occurring free in the expression.
    pub fn visit_vars(&self, f: &mut dyn FnMut(&str)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(v),
            Expr::Neg(a) | Expr::Proj(a, _) => a.visit_vars(f),
            Expr::Bin(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Min(xs) | Expr::Max(xs) | Expr::Tuple(xs) | Expr::Apply(_, xs) => {
                xs.iter().for_each(|x| x.visit_vars(f))
            }
            Expr::Ite(c, a, b) => {
                c.visit_vars(f);
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Capture-free substitution of variables by expressions.
    pub fn subst(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(Box::new(a.subst(map))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.subst(map), b.subst(map)),
            Expr::Min(xs) => Expr::Min(xs.iter().map(|x| x.subst(map)).collect()),
            Expr::Max(xs) => Expr::Max(xs.iter().map(|x| x.subst(map)).collect()),
            Expr::Tuple(xs) => Expr::Tuple(xs.iter().map(|x| x.subst(map)).collect()),
            Expr::Proj(a, i) => Expr::Proj(Box::new(a.subst(map)), *i),
            Expr::Apply(n, xs) => Expr::Apply(n.clone(), xs.iter().map(|x| x.subst(map)).collect()),
            Expr::Ite(c, a, b) => Expr::Ite(Box::new(c.subst(map)), Box::new(a.subst(map)), Box::new(b.subst(map))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Right-hand side of a membership test.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetRef {
    Values(Vec<Value>),
    Sort(Sort),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    In(Expr, SetRef),
    Not(Box<Pred>),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Implies(Box<Pred>, Box<Pred>),
    Exists(Vec<String>, Box<Pred>),
}

impl Pred {
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Pred {
        Pred::Cmp(op, a, b)
    }

    pub fn not(p: Pred) -> Pred {
        Pred::Not(Box::new(p))
    }

    /// Conjunction that skips `true` operands and collapses trivial cases.
    pub fn and(parts: Vec<Pred>) -> Pred {
        let mut out: Vec<Pred> = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Pred::True => {}
                Pred::False => return Pred::False,
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Pred::True,
            1 => out.pop().unwrap(),
            _ => Pred::And(out),
        }
    }

    /// Disjunction that skips `false` operands and collapses trivial cases.
    pub fn or(parts: Vec<Pred>) -> Pred {
        let mut out: Vec<Pred> = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Pred::False => {}
                Pred::True => return Pred::True,
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Pred::False,
            1 => out.pop().unwrap(),
            _ => Pred::Or(out),
        }
    }

    pub fn visit_vars(&self, f: &mut dyn FnMut(&str)) {
        match self {
            Pred::True | Pred::False => {}
            Pred::Cmp(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Pred::In(a, _) => a.visit_vars(f),
            Pred::Not(p) => p.visit_vars(f),
            Pred::And(ps) | Pred::Or(ps) => ps.iter().for_each(|p| p.visit_vars(f)),
            Pred::Implies(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Pred::Exists(bound, body) => body.visit_vars(&mut |v| {
                if !bound.iter().any(|b| b == v) {
                    f(v)
                }
            }),
        }
    }

    pub fn free_vars(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.visit_vars(&mut |v| {
            out.insert(v.to_string());
        });
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut hit = false;
        self.visit_vars(&mut |v| hit |= v == name);
        hit
    }

    pub fn subst(&self, map: &BTreeMap<String, Expr>) -> Pred {
        match self {
            Pred::True | Pred::False => self.clone(),
            Pred::Cmp(op, a, b) => Pred::Cmp(*op, a.subst(map), b.subst(map)),
            Pred::In(a, set) => Pred::In(a.subst(map), set.clone()),
            Pred::Not(p) => Pred::not(p.subst(map)),
            Pred::And(ps) => Pred::And(ps.iter().map(|p| p.subst(map)).collect()),
            Pred::Or(ps) => Pred::Or(ps.iter().map(|p| p.subst(map)).collect()),
            Pred::Implies(a, b) => Pred::Implies(Box::new(a.subst(map)), Box::new(b.subst(map))),
            Pred::Exists(bound, body) => {
                let inner: BTreeMap<String, Expr> =
                    map.iter().filter(|(k, _)| !bound.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
                Pred::Exists(bound.clone(), Box::new(body.subst(&inner)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constant {
    pub name: String,
    /// Declared sort of a symbolic constant whose value comes from a bounds file.
    pub sort: Option<Sort>,
    pub value: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVar {
    pub name: String,
    pub sort: Sort,
    /// Marked `@time`: a timer that may hold `inf`.
    pub time: bool,
    /// Name of the `group { ... }` block the variable was declared in, if any.
    pub group: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateSchema {
    pub vars: Vec<StateVar>,
}

impl StateSchema {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }

    pub fn sort(&self) -> Sort {
        Sort::Tuple(self.vars.iter().map(|v| v.sort.clone()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionKind {
    Dext,
    Dint,
    Lambda,
    Ta,
}

impl FunctionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            FunctionKind::Dext => "dext",
            FunctionKind::Dint => "dint",
            FunctionKind::Lambda => "lambda",
            FunctionKind::Ta => "ta",
        }
    }

    pub fn from_keyword(s: &str) -> Option<FunctionKind> {
        match s {
            "dext" => Some(FunctionKind::Dext),
            "dint" => Some(FunctionKind::Dint),
            "lambda" => Some(FunctionKind::Lambda),
            "ta" => Some(FunctionKind::Ta),
            _ => None,
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardedCase {
    /// One-based position within the function.
    pub id: u32,
    pub guard: Pred,
    /// Either a tuple in state-variable order or, for `lambda`, an output value.
    pub result: Expr,
    /// Declared with `otherwise`; the guard is `true` and first-match order makes it a fallback.
    pub otherwise: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CaseFunction {
    pub lets: Vec<(String, Expr)>,
    pub cases: Vec<GuardedCase>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    pub constants: Vec<Constant>,
    pub state: StateSchema,
    pub input: Sort,
    pub output: Sort,
    pub operators: Vec<OperatorDef>,
    pub ta: Expr,
    pub dext: CaseFunction,
    pub dint: CaseFunction,
    pub lambda: CaseFunction,
}

impl Model {
    /// A model with no state and no cases, for evaluating free-standing predicates.
    pub fn empty() -> Model {
        Model {
            name: String::new(),
            constants: Vec::new(),
            state: StateSchema::default(),
            input: Sort::Nat,
            output: Sort::Nat,
            operators: Vec::new(),
            ta: Expr::Const(Value::Inf),
            dext: CaseFunction::default(),
            dint: CaseFunction::default(),
            lambda: CaseFunction::default(),
        }
    }

    pub fn function(&self, kind: FunctionKind) -> Option<&CaseFunction> {
        match kind {
            FunctionKind::Dext => Some(&self.dext),
            FunctionKind::Dint => Some(&self.dint),
            FunctionKind::Lambda => Some(&self.lambda),
            FunctionKind::Ta => None,
        }
    }

    pub fn operator(&self, name: &str) -> Option<&OperatorDef> {
        self.operators.iter().find(|o| o.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// Sort of a state variable, `x`, `e`/`t`, or a sorted constant.
    pub fn var_sort(&self, name: &str) -> Option<Sort> {
        if let Some(v) = self.state.vars.iter().find(|v| v.name == name) {
            return Some(v.sort.clone());
        }
        match name {
            VAR_X => Some(self.input.clone()),
            VAR_E | VAR_T => Some(Sort::Time),
            _ => self.constant(name).and_then(|c| c.sort.clone()),
        }
    }

    /// All literal names known to the model's sorts.
    pub fn literals(&self) -> Vec<String> {
        let mut out = Vec::new();
        for v in &self.state.vars {
            v.sort.literals(&mut out);
        }
        self.input.literals(&mut out);
        self.output.literals(&mut out);
        out.sort();
        out.dedup();
        out
    }

    pub fn case_counts(&self) -> (usize, usize, usize) {
        (self.dext.cases.len(), self.dint.cases.len(), self.lambda.cases.len())
    }
}

/// Counts in the form `dext/dint/lambda`, e.g. `18/18/25 cases`.
pub fn case_summary(model: &Model) -> String {
    let (a, b, c) = model.case_counts();
    format!("{a}/{b}/{c} cases")
}
