use std::collections::BTreeMap;

use crate::model::{Domains, Env, EvalContext, EvalError, Model, Rational, Sort, Value, VAR_E, VAR_T, VAR_X};
use crate::parser::{BoundsSpec, TimeSamples};

use super::dnf::DEFAULT_DNF_CAP;

pub const DEFAULT_BUDGET: u64 = 2_000_000;
const DEFAULT_NAT: (i64, i64) = (0, 3);
const DEFAULT_INT: (i64, i64) = (-2, 2);
const DEFAULT_RATIONAL: (i64, i64, i64) = (-2, 4, 2);
/// Tuples larger than this are not enumerated.
const MAX_TUPLE_DOMAIN: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BoundsError {
    #[error("constant `{0}`: {1}")]
    Constant(String, EvalError),
    #[error("time sample {0} is not a non-negative number")]
    BadSample(String),
    #[error("domain of `{0}` is empty")]
    Empty(String),
    #[error("domain of `{0}` has more than {MAX_TUPLE_DOMAIN} values")]
    TooLarge(String),
}

/// Finite value sets for every variable a predicate may mention.
#[derive(Clone, Debug)]
pub struct Universe {
    state: Vec<String>,
    domains: BTreeMap<String, Vec<Value>>,
    fallback: Vec<Value>,
    /// Finite time samples in ascending order; always contains 0.
    pub time_samples: Vec<Value>,
    pub consts: BTreeMap<String, Value>,
    pub budget: u64,
    pub dnf_cap: usize,
}

impl Domains for Universe {
    fn domain(&self, var: &str) -> Option<&[Value]> {
        Some(self.domains.get(var).map_or(&self.fallback[..], |d| &d[..]))
    }
}

fn range(lo: i64, hi: i64) -> Vec<Value> {
    (lo..=hi).map(Value::int).collect()
}

impl Universe {
    /// Domains for the state variables, `x` (input values and `tau`), `e` and `t`.
    /// Names the model does not declare range over the integer bounds.
    pub fn new(model: &Model, spec: &BoundsSpec) -> Result<Universe, BoundsError> {
        let consts = resolve_consts(model, spec)?;
        let nat = spec.nat.unwrap_or(DEFAULT_NAT);
        let int = spec.int.unwrap_or(DEFAULT_INT);
        let (rlo, rhi, den) = spec.rational.unwrap_or(DEFAULT_RATIONAL);
        let time_samples = time_samples(model, spec, &consts)?;
        let sorts = SortDomains {
            nat: range(nat.0, nat.1),
            int: range(int.0, int.1),
            rational: (rlo..=rhi).map(|k| Value::rat(k, den)).collect(),
            time: time_samples.iter().cloned().chain([Value::Inf]).collect(),
        };
        let mut domains = BTreeMap::new();
        for v in &model.state.vars {
            let d = match spec.vars.get(&v.name) {
                Some(vals) => vals.clone(),
                None => sorts.of(&v.sort).ok_or_else(|| BoundsError::TooLarge(v.name.clone()))?,
            };
            if d.is_empty() {
                return Err(BoundsError::Empty(v.name.clone()));
            }
            domains.insert(v.name.clone(), d);
        }
        let mut xs = match spec.vars.get(VAR_X) {
            Some(vals) => vals.clone(),
            None => sorts.of(&model.input).ok_or_else(|| BoundsError::TooLarge(VAR_X.into()))?,
        };
        if !xs.contains(&Value::Tau) {
            xs.push(Value::Tau);
        }
        domains.insert(VAR_X.to_string(), xs);
        domains.insert(VAR_E.to_string(), time_samples.clone());
        domains.insert(VAR_T.to_string(), time_samples.clone());
        for (name, vals) in &spec.vars {
            domains.entry(name.clone()).or_insert_with(|| vals.clone());
        }
        // Constants left symbolic range over their sort.
        for c in &model.constants {
            if let (false, Some(s)) = (consts.contains_key(&c.name), &c.sort) {
                if let Some(d) = sorts.of(s) {
                    domains.entry(c.name.clone()).or_insert(d);
                }
            }
        }
        Ok(Universe {
            state: model.state.names().map(str::to_string).collect(),
            domains,
            fallback: sorts.int,
            time_samples,
            consts,
            budget: spec.budget.unwrap_or(DEFAULT_BUDGET),
            dnf_cap: spec.dnf_cap.unwrap_or(DEFAULT_DNF_CAP),
        })
    }

    /// A universe over explicitly listed variables, in the given order.
    pub fn with_vars(vars: Vec<(String, Vec<Value>)>) -> Universe {
        Universe {
            state: vars.iter().map(|(n, _)| n.clone()).collect(),
            domains: vars.into_iter().collect(),
            fallback: range(DEFAULT_INT.0, DEFAULT_INT.1),
            time_samples: vec![Value::int(0)],
            consts: BTreeMap::new(),
            budget: DEFAULT_BUDGET,
            dnf_cap: DEFAULT_DNF_CAP,
        }
    }

    pub fn set_domain(&mut self, var: &str, values: Vec<Value>) {
        self.domains.insert(var.to_string(), values);
    }

    pub fn domain_of(&self, var: &str) -> &[Value] {
        self.domain(var).unwrap_or(&[])
    }

    pub fn state_vars(&self) -> &[String] {
        &self.state
    }

    /// Position in the declared variable order: state variables, then `x`,
    /// `e`, `t`, then any other name alphabetically.
    pub fn rank(&self, var: &str) -> (usize, String) {
        if let Some(i) = self.state.iter().position(|s| s == var) {
            return (i, String::new());
        }
        let n = self.state.len();
        match var {
            VAR_X => (n, String::new()),
            VAR_E => (n + 1, String::new()),
            VAR_T => (n + 2, String::new()),
            other => (n + 3, other.to_string()),
        }
    }

    pub fn sort_vars(&self, vars: &mut [String]) {
        vars.sort_by_cached_key(|v| self.rank(v));
    }
}

struct SortDomains {
    nat: Vec<Value>,
    int: Vec<Value>,
    rational: Vec<Value>,
    time: Vec<Value>,
}

impl SortDomains {
    fn of(&self, s: &Sort) -> Option<Vec<Value>> {
        Some(match s {
            Sort::Nat => self.nat.clone(),
            Sort::Int => self.int.clone(),
            Sort::Rational => self.rational.clone(),
            Sort::Time => self.time.clone(),
            Sort::Range(lo, hi) => range(*lo, *hi),
            Sort::Enum(lits) => lits.iter().map(|l| Value::lit(l.clone())).collect(),
            Sort::Extended(base, lit) => {
                let mut d = self.of(base)?;
                d.push(Value::lit(lit.clone()));
                d
            }
            Sort::Tuple(parts) => {
                let mut acc: Vec<Vec<Value>> = vec![vec![]];
                for p in parts {
                    let d = self.of(p)?;
                    if acc.len() * d.len() > MAX_TUPLE_DOMAIN {
                        return None;
                    }
                    acc = acc
                        .iter()
                        .flat_map(|pre| {
                            d.iter().map(move |v| {
                                let mut t = pre.clone();
                                t.push(v.clone());
                                t
                            })
                        })
                        .collect();
                }
                acc.into_iter().map(Value::Tuple).collect()
            }
        })
    }
}

/// Model constants with bounds-file values taking precedence.
fn resolve_consts(model: &Model, spec: &BoundsSpec) -> Result<BTreeMap<String, Value>, BoundsError> {
    let mut bound = BTreeMap::new();
    for (name, e) in &spec.consts {
        let ctx = EvalContext::new(model, &bound).map_err(|err| BoundsError::Constant(name.clone(), err))?;
        let v = ctx.eval(e, &Env::new(), &[]).map_err(|err| BoundsError::Constant(name.clone(), err))?;
        bound.insert(name.clone(), v);
    }
    let ctx = EvalContext::new(model, &bound).map_err(|err| BoundsError::Constant("?".into(), err))?;
    Ok(ctx.constants().clone())
}

fn time_samples(model: &Model, spec: &BoundsSpec, consts: &BTreeMap<String, Value>) -> Result<Vec<Value>, BoundsError> {
    let mut pts: Vec<Rational> = vec![Rational::from_integer(0)];
    match &spec.time_samples {
        TimeSamples::Explicit(es) => {
            let ctx = EvalContext::new(model, consts).map_err(|err| BoundsError::Constant("?".into(), err))?;
            for e in es {
                match ctx.eval(e, &Env::new(), &[]) {
                    Ok(Value::Num(r)) if r >= Rational::from_integer(0) => pts.push(r),
                    _ => return Err(BoundsError::BadSample(e.to_string())),
                }
            }
            pts.sort();
            pts.dedup();
        }
        TimeSamples::Auto => {
            for c in &model.constants {
                let is_time = c.sort.as_ref().is_none_or(|s| matches!(s, Sort::Time));
                if let (true, Some(Value::Num(r))) = (is_time, consts.get(&c.name)) {
                    if *r >= Rational::from_integer(0) {
                        pts.push(*r);
                    }
                }
            }
            pts.sort();
            pts.dedup();
            let mut full = Vec::with_capacity(pts.len() * 2 + 1);
            for w in pts.windows(2) {
                full.push(w[0]);
                full.push((w[0] + w[1]) / Rational::from_integer(2));
            }
            let last = *pts.last().unwrap();
            full.push(last);
            full.push(last + Rational::from_integer(1));
            pts = full;
        }
    }
    Ok(pts.into_iter().map(Value::Num).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_bounds, parse_model};

    const TIMED: &str = "model T { const A : time; const B : time = 4; state { w : time @time; k : 0..2; } \
        input enum {go}; output nat; ta = w; dext { } dint { } lambda { } }";

    #[test]
    fn auto_samples_interleave_constants() {
        let m = parse_model(TIMED).unwrap();
        let u = Universe::new(&m, &parse_bounds("const A = 2;").unwrap()).unwrap();
        let show: Vec<String> = u.time_samples.iter().map(|v| v.to_string()).collect();
        assert_eq!(show, ["0", "1", "2", "3", "4", "5"]);
        assert_eq!(u.domain_of("w").last(), Some(&Value::Inf));
        assert!(!u.domain_of("t").contains(&Value::Inf));
        assert_eq!(u.domain_of("x"), &[Value::lit("go"), Value::Tau]);
        assert_eq!(u.domain_of("k").len(), 3);
    }

    #[test]
    fn rank_follows_declaration() {
        let m = parse_model(TIMED).unwrap();
        let u = Universe::new(&m, &BoundsSpec::default()).unwrap();
        let mut vs: Vec<String> = ["t", "zz", "k", "x", "w", "e", "aa"].map(String::from).to_vec();
        u.sort_vars(&mut vs);
        assert_eq!(vs, ["w", "k", "x", "e", "t", "aa", "zz"]);
    }
}
