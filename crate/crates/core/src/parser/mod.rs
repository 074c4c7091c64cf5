//! Text formats: models, bounds files and partition tables.

mod grammar;
mod lexer;

use std::collections::{BTreeMap, BTreeSet};

pub use grammar::Parser;
pub use lexer::{ParseError, Pos, Tok};

use crate::model::{
    validate, CaseFunction, Constant, Expr, FunctionKind, GuardedCase, Model, OperatorDef, Pred, StateSchema, StateVar,
    ValidationError, Value, VAR_E, VAR_T, VAR_X,
};

/// Parse failure or a model that parsed but does not type-check.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ValidationError>),
}

/// Parses and validates a model.
pub fn load_model(src: &str) -> Result<Model, ModelError> {
    let m = parse_model(src)?;
    validate(&m).map_err(ModelError::Invalid)?;
    Ok(m)
}

/// Parses a model file. Names that are not in scope but match a literal of a
/// declared sort become literal constants.
pub fn parse_model(src: &str) -> Result<Model, ParseError> {
    let mut p = Parser::new(src)?;
    if p.at_eof() {
        return Err(p.error("empty model: expected `model <name> { ... }`"));
    }
    p.expect_kw("model")?;
    let name = p.name()?;
    p.expect(Tok::LBrace)?;

    let mut constants = Vec::new();
    let mut state: Option<StateSchema> = None;
    let mut input = None;
    let mut output = None;
    let mut operators = Vec::new();
    let mut ta = None;
    let mut funcs: BTreeMap<FunctionKind, CaseFunction> = BTreeMap::new();

    while !p.eat(&Tok::RBrace) {
        let here = p.pos();
        if p.at_eof() {
            return Err(p.error("unexpected end of input: model body is not closed with `}`"));
        }
        let kw = p.ident()?;
        match kw.as_str() {
            "const" => {
                let name = p.name()?;
                let sort = if p.eat(&Tok::Colon) { Some(p.sort()?) } else { None };
                let value = if p.eat(&Tok::Eq) { Some(p.expr()?) } else { None };
                if sort.is_none() && value.is_none() {
                    return Err(p.error("constant needs a sort or a value"));
                }
                p.expect(Tok::Semi)?;
                constants.push(Constant { name, sort, value });
            }
            "state" => {
                if state.is_some() {
                    return Err(ParseError::at(here, "duplicate `state` block"));
                }
                state = Some(parse_state(&mut p)?);
            }
            "input" | "output" => {
                let s = p.sort()?;
                p.expect(Tok::Semi)?;
                let slot = if kw == "input" { &mut input } else { &mut output };
                if slot.replace(s).is_some() {
                    return Err(ParseError::at(here, format!("duplicate `{kw}` declaration")));
                }
            }
            "op" => {
                let name = p.name()?;
                p.expect(Tok::LParen)?;
                let params = p.comma_list(Tok::RParen, |p| p.name())?;
                p.expect(Tok::Eq)?;
                let body = p.expr()?;
                p.expect(Tok::Semi)?;
                operators.push(OperatorDef { name, params, body });
            }
            "ta" => {
                p.expect(Tok::Eq)?;
                let e = p.expr()?;
                p.expect(Tok::Semi)?;
                if ta.replace(e).is_some() {
                    return Err(ParseError::at(here, "duplicate `ta`"));
                }
            }
            "dext" | "dint" | "lambda" => {
                let kind = FunctionKind::from_keyword(&kw).unwrap();
                if funcs.contains_key(&kind) {
                    return Err(ParseError::at(here, format!("duplicate `{kw}` block")));
                }
                funcs.insert(kind, parse_function(&mut p)?);
            }
            other => {
                return Err(ParseError::at(
                    here,
                    format!(
                    "expected a declaration (const, state, input, output, op, ta, dext, dint, lambda), found `{other}`"
                ),
                ))
            }
        }
    }
    let end = p.pos();
    if !p.at_eof() {
        return Err(p.unexpected("end of input after the model body"));
    }
    let missing = |what: &str| ParseError::at(end, format!("model has no `{what}` declaration"));
    let mut model = Model {
        name,
        constants,
        state: state.ok_or_else(|| missing("state"))?,
        input: input.ok_or_else(|| missing("input"))?,
        output: output.ok_or_else(|| missing("output"))?,
        operators,
        ta: ta.ok_or_else(|| missing("ta"))?,
        dext: funcs.remove(&FunctionKind::Dext).unwrap_or_default(),
        dint: funcs.remove(&FunctionKind::Dint).unwrap_or_default(),
        lambda: funcs.remove(&FunctionKind::Lambda).unwrap_or_default(),
    };
    resolve_model(&mut model);
    Ok(model)
}

fn parse_state(p: &mut Parser) -> Result<StateSchema, ParseError> {
    p.expect(Tok::LBrace)?;
    let mut vars = Vec::new();
    while !p.eat(&Tok::RBrace) {
        let name = p.name()?;
        if p.eat(&Tok::LBrace) {
            while !p.eat(&Tok::RBrace) {
                vars.push(parse_var(p, Some(name.clone()))?);
            }
        } else {
            vars.push(finish_var(p, name, None)?);
        }
    }
    Ok(StateSchema { vars })
}

fn parse_var(p: &mut Parser, group: Option<String>) -> Result<StateVar, ParseError> {
    let name = p.name()?;
    finish_var(p, name, group)
}

fn finish_var(p: &mut Parser, name: String, group: Option<String>) -> Result<StateVar, ParseError> {
    p.expect(Tok::Colon)?;
    let sort = p.sort()?;
    let time = if p.eat(&Tok::At) {
        p.expect_kw("time")?;
        true
    } else {
        false
    };
    p.expect(Tok::Semi)?;
    Ok(StateVar { name, sort, time, group })
}

fn parse_function(p: &mut Parser) -> Result<CaseFunction, ParseError> {
    // an optional signature such as `(s, e, x)` is documentation only
    if p.eat(&Tok::LParen) {
        p.comma_list(Tok::RParen, |p| p.name())?;
    }
    p.expect(Tok::LBrace)?;
    let mut func = CaseFunction::default();
    while p.eat_kw("let") {
        let name = p.name()?;
        p.expect(Tok::Eq)?;
        let e = p.expr()?;
        p.expect(Tok::Semi)?;
        func.lets.push((name, e));
    }
    while !p.eat(&Tok::RBrace) {
        let id = func.cases.len() as u32 + 1;
        if p.eat_kw("otherwise") {
            p.expect(Tok::Arrow)?;
            let result = p.expr()?;
            p.expect(Tok::Semi)?;
            func.cases.push(GuardedCase { id, guard: Pred::True, result, otherwise: true });
            continue;
        }
        if !p.eat_kw("case") {
            return Err(p.unexpected("`case`, `otherwise` or `}`"));
        }
        let guard = p.pred()?;
        p.expect(Tok::Arrow)?;
        let result = p.expr()?;
        p.expect(Tok::Semi)?;
        func.cases.push(GuardedCase { id, guard, result, otherwise: false });
    }
    Ok(func)
}

fn resolve_model(m: &mut Model) {
    let lits: BTreeSet<String> = m.literals().into_iter().collect();
    let mut base: BTreeSet<String> = m.state.names().map(str::to_string).collect();
    base.extend(m.constants.iter().map(|c| c.name.clone()));
    let consts_only: BTreeSet<String> = m.constants.iter().map(|c| c.name.clone()).collect();
    for c in &mut m.constants {
        if let Some(e) = &mut c.value {
            resolve_expr(e, &consts_only, &lits);
        }
    }
    for op in &mut m.operators {
        let mut scope = consts_only.clone();
        scope.extend(op.params.iter().cloned());
        resolve_expr(&mut op.body, &scope, &lits);
    }
    resolve_expr(&mut m.ta, &base, &lits);
    for (kind, func) in
        [(FunctionKind::Dext, &mut m.dext), (FunctionKind::Dint, &mut m.dint), (FunctionKind::Lambda, &mut m.lambda)]
    {
        let mut scope = base.clone();
        if kind == FunctionKind::Dext {
            scope.insert(VAR_X.into());
            scope.insert(VAR_E.into());
        }
        for (name, e) in &mut func.lets {
            resolve_expr(e, &scope, &lits);
            scope.insert(name.clone());
        }
        for case in &mut func.cases {
            resolve_pred(&mut case.guard, &scope, &lits);
            resolve_expr(&mut case.result, &scope, &lits);
        }
    }
}

pub fn resolve_expr(e: &mut Expr, scope: &BTreeSet<String>, lits: &BTreeSet<String>) {
    match e {
        Expr::Const(_) => {}
        Expr::Var(v) => {
            if !scope.contains(v.as_str()) && lits.contains(v.as_str()) {
                *e = Expr::Const(Value::Lit(std::mem::take(v)));
            }
        }
        Expr::Neg(a) | Expr::Proj(a, _) => resolve_expr(a, scope, lits),
        Expr::Bin(_, a, b) => {
            resolve_expr(a, scope, lits);
            resolve_expr(b, scope, lits);
        }
        Expr::Min(xs) | Expr::Max(xs) | Expr::Tuple(xs) | Expr::Apply(_, xs) => {
            xs.iter_mut().for_each(|x| resolve_expr(x, scope, lits))
        }
        Expr::Ite(c, a, b) => {
            resolve_pred(c, scope, lits);
            resolve_expr(a, scope, lits);
            resolve_expr(b, scope, lits);
        }
    }
}

pub fn resolve_pred(p: &mut Pred, scope: &BTreeSet<String>, lits: &BTreeSet<String>) {
    match p {
        Pred::True | Pred::False => {}
        Pred::Cmp(_, a, b) => {
            resolve_expr(a, scope, lits);
            resolve_expr(b, scope, lits);
        }
        Pred::In(a, _) => resolve_expr(a, scope, lits),
        Pred::Not(q) => resolve_pred(q, scope, lits),
        Pred::And(qs) | Pred::Or(qs) => qs.iter_mut().for_each(|q| resolve_pred(q, scope, lits)),
        Pred::Implies(a, b) => {
            resolve_pred(a, scope, lits);
            resolve_pred(b, scope, lits);
        }
        Pred::Exists(vars, body) => {
            let mut inner = scope.clone();
            inner.extend(vars.iter().cloned());
            resolve_pred(body, &inner, lits);
        }
    }
}

/// Names visible to a predicate written against a model: state variables,
/// constants, `x`, `e`, `t` and any `extra` binders.
pub fn model_scope(model: &Model, extra: &[String]) -> BTreeSet<String> {
    let mut scope: BTreeSet<String> = model.state.names().map(str::to_string).collect();
    scope.extend(model.constants.iter().map(|c| c.name.clone()));
    scope.extend([VAR_X, VAR_E, VAR_T].map(String::from));
    scope.extend(extra.iter().cloned());
    scope
}

/// Parses a standalone predicate, resolving literal names against `model`.
pub fn parse_pred(src: &str, model: Option<&Model>, extra: &[String]) -> Result<Pred, ParseError> {
    let mut p = Parser::new(src)?;
    let mut pred = p.pred()?;
    if !p.at_eof() {
        return Err(p.unexpected("end of predicate"));
    }
    if let Some(m) = model {
        let lits = m.literals().into_iter().collect();
        resolve_pred(&mut pred, &model_scope(m, extra), &lits);
    }
    Ok(pred)
}

/// Parses a standalone expression, resolving literal names against `model`.
pub fn parse_expr(src: &str, model: Option<&Model>, extra: &[String]) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let mut e = p.expr()?;
    if !p.at_eof() {
        return Err(p.unexpected("end of expression"));
    }
    if let Some(m) = model {
        let lits = m.literals().into_iter().collect();
        resolve_expr(&mut e, &model_scope(m, extra), &lits);
    }
    Ok(e)
}

/// Parses a constant value as printed by `Value`'s `Display`.
pub fn parse_value(src: &str) -> Result<Value, ParseError> {
    let mut p = Parser::new(src)?;
    let v = p.value()?;
    if !p.at_eof() {
        return Err(p.unexpected("end of value"));
    }
    Ok(v)
}

/// How time points are sampled when enumerating time-sorted variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum TimeSamples {
    /// Zero, every time constant, midpoints between them and one point past the largest.
    #[default]
    Auto,
    Explicit(Vec<Expr>),
}

/// Contents of a bounds file. Absent entries fall back to defaults.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundsSpec {
    pub nat: Option<(i64, i64)>,
    pub int: Option<(i64, i64)>,
    /// `lo..hi / den`: the rationals `k/den` for `k` in `lo..=hi`.
    pub rational: Option<(i64, i64, i64)>,
    pub vars: BTreeMap<String, Vec<Value>>,
    pub time_samples: TimeSamples,
    pub consts: BTreeMap<String, Expr>,
    pub budget: Option<u64>,
    pub dnf_cap: Option<usize>,
}

pub fn parse_bounds(src: &str) -> Result<BoundsSpec, ParseError> {
    let mut p = Parser::new(src)?;
    let mut b = BoundsSpec::default();
    while !p.at_eof() {
        let here = p.pos();
        let kw = p.ident()?;
        match kw.as_str() {
            "nat" | "int" => {
                p.expect(Tok::Eq)?;
                let lo = p.integer()?;
                p.expect(Tok::DotDot)?;
                let hi = p.integer()?;
                if lo > hi || (kw == "nat" && lo < 0) {
                    return Err(ParseError::at(here, format!("invalid {kw} range {lo}..{hi}")));
                }
                if kw == "nat" {
                    b.nat = Some((lo, hi));
                } else {
                    b.int = Some((lo, hi));
                }
            }
            "rational" => {
                p.expect(Tok::Eq)?;
                let lo = p.integer()?;
                p.expect(Tok::DotDot)?;
                let hi = p.integer()?;
                let den = if p.eat(&Tok::Slash) { p.integer()? } else { 1 };
                if lo > hi || den <= 0 {
                    return Err(ParseError::at(here, "invalid rational range"));
                }
                b.rational = Some((lo, hi, den));
            }
            "var" => {
                let name = p.name()?;
                p.expect(Tok::Eq)?;
                let vals = if p.eat(&Tok::LBrace) {
                    p.comma_list(Tok::RBrace, |p| p.value())?
                } else {
                    let lo = p.integer()?;
                    p.expect(Tok::DotDot)?;
                    let hi = p.integer()?;
                    (lo..=hi).map(Value::int).collect()
                };
                b.vars.insert(name, vals);
            }
            "time" => {
                p.expect_kw("samples")?;
                p.expect(Tok::Eq)?;
                b.time_samples = if p.eat_kw("auto") {
                    TimeSamples::Auto
                } else {
                    p.expect(Tok::LBrace)?;
                    TimeSamples::Explicit(p.comma_list(Tok::RBrace, |p| p.expr())?)
                };
            }
            "const" => {
                let name = p.name()?;
                p.expect(Tok::Eq)?;
                b.consts.insert(name, p.expr()?);
            }
            "budget" => {
                p.expect(Tok::Eq)?;
                b.budget = Some(p.integer()?.max(0) as u64);
            }
            "dnf" => {
                p.expect_kw("cap")?;
                p.expect(Tok::Eq)?;
                b.dnf_cap = Some(p.integer()?.max(1) as usize);
            }
            other => {
                return Err(ParseError::at(here, format!("unknown bounds entry `{other}`")));
            }
        }
        p.expect(Tok::Semi)?;
    }
    Ok(b)
}

/// A named partition of a binary (or n-ary) operator's argument space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionTable {
    pub name: String,
    pub params: Vec<String>,
    pub cells: Vec<Pred>,
}

pub fn parse_partitions(src: &str) -> Result<Vec<PartitionTable>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        p.expect_kw("partition")?;
        let name = match p.bump() {
            Tok::Str(s) | Tok::Ident(s) => s,
            _ => return Err(p.error("expected a partition name")),
        };
        p.expect(Tok::LParen)?;
        let params = p.comma_list(Tok::RParen, |p| p.name())?;
        p.expect(Tok::LBrace)?;
        let mut cells = Vec::new();
        while !p.eat(&Tok::RBrace) {
            cells.push(p.pred()?);
            p.expect(Tok::Semi)?;
        }
        if cells.is_empty() {
            return Err(p.error(format!("partition `{name}` has no cells")));
        }
        out.push(PartitionTable { name, params, cells });
    }
    Ok(out)
}
