//! Partition criteria: each turns a model plus a selection into simulation
//! configuration classes.

mod cases;
mod extensional;
mod standard;
mod time;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::model::{CmpOp, Expr, FunctionKind, Model, Pred, Value, VAR_T, VAR_X};
use crate::parser::{parse_expr, parse_pred, ParseError, PartitionTable};
use crate::symbolic::{normalize, to_dnf, DnfError, Solver, Universe};

pub use cases::{cases_criterion, inline_lets};
pub use extensional::extensional_criterion;
pub use standard::{
    builtin_table, domain_propagation, standard_partition_criterion, table_health, Occurrence, OccurrenceOp,
    TableHealth,
};
pub use time::{time_partition_criterion, TimeSpec};

/// A simulation configuration class: a set of initial states and a set of
/// (event, time) pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scc {
    pub id: u32,
    /// Over state variables.
    pub ini_st: Pred,
    /// Over `x` and `t`.
    pub in_pairs: Pred,
    /// The originating external guard with `e` read as `t`; ties state and
    /// input witnesses together when present.
    pub link: Option<Pred>,
    pub provenance: Provenance,
    pub combined_from: Vec<u32>,
    pub notes: Vec<String>,
}

impl Scc {
    pub fn new(ini_st: Pred, in_pairs: Pred, criterion: &str, target: impl Into<String>) -> Scc {
        Scc {
            id: 0,
            ini_st,
            in_pairs,
            link: None,
            provenance: Provenance { criterion: criterion.to_string(), target: target.into() },
            combined_from: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Structural identity used for deduplication.
    pub fn key(&self) -> (Pred, Pred) {
        (normalize(&self.ini_st), normalize(&self.in_pairs))
    }

    pub fn is_internal(&self) -> bool {
        self.in_pairs == tau_pairs()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Provenance {
    pub criterion: String,
    pub target: String,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.criterion, self.target)
    }
}

/// `x = tau & t = 0`, the input pair of classes driven by internal transitions.
pub fn tau_pairs() -> Pred {
    Pred::And(vec![
        Pred::cmp(CmpOp::Eq, Expr::var(VAR_X), Expr::Const(Value::Tau)),
        Pred::cmp(CmpOp::Eq, Expr::var(VAR_T), Expr::int(0)),
    ])
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CriteriaError {
    #[error("unknown criterion `{0}`")]
    Unknown(String),
    #[error("in criterion `{spec}`: {err}")]
    Parse { spec: String, err: ParseError },
    #[error("extensional criterion requires enumerated set: `{0}`")]
    NotEnumerated(String),
    #[error("unknown extensional target `{0}`")]
    UnknownTarget(String),
    #[error("no case {kind} {id}")]
    NoSuchCase { kind: FunctionKind, id: u32 },
    #[error("no `{op}` occurrence in {kind} case {id}")]
    NoOccurrence { kind: FunctionKind, id: u32, op: String },
    #[error("unknown partition table `{0}`")]
    UnknownTable(String),
    #[error("partition `{table}` takes {expected} operands, occurrence has {got}")]
    Arity { table: String, expected: usize, got: usize },
    #[error("time interval [{a}, {b}] is empty or reversed")]
    BadInterval { a: String, b: String },
    #[error("time endpoint `{0}` does not evaluate to a time")]
    BadEndpoint(String),
    #[error(transparent)]
    Dnf(#[from] DnfError),
    #[error("{0}")]
    Solver(String),
}

impl CriteriaError {
    /// The selection itself is wrong, as opposed to the engine running out
    /// of room while applying it.
    pub fn is_selection(&self) -> bool {
        !matches!(self, CriteriaError::Dnf(_) | CriteriaError::Solver(_))
    }
}

/// A user selection of one criterion and its target.
#[derive(Clone, Debug, PartialEq)]
pub enum Criterion {
    Cases,
    Extensional(Vec<String>),
    Intentional(Pred),
    Standard { table: Option<String>, occurrences: Vec<Occurrence> },
    Time(TimeSpec),
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Cases => "cases",
            Criterion::Extensional(_) => "extensional",
            Criterion::Intentional(_) => "intentional",
            Criterion::Standard { .. } => "standard",
            Criterion::Time(_) => "time",
        }
    }
}

/// Parses a selection such as `cases`, `extensional:m,x`,
/// `intentional:n * m > 0 => n > m`, `standard:order:dint6:>,dint7:<`
/// or `time:[0,T];P;refine`.
pub fn parse_criterion(src: &str, model: &Model) -> Result<Criterion, CriteriaError> {
    let src = src.trim();
    let (head, rest) = match src.split_once(':') {
        Some((h, r)) => (h.trim(), r.trim()),
        None => (src, ""),
    };
    let perr = |err| CriteriaError::Parse { spec: src.to_string(), err };
    match head {
        "cases" if rest.is_empty() => Ok(Criterion::Cases),
        "extensional" => {
            let targets: Vec<String> =
                rest.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
            if targets.is_empty() {
                return Err(CriteriaError::UnknownTarget(String::new()));
            }
            Ok(Criterion::Extensional(targets))
        }
        "intentional" => {
            let extra: Vec<String> = {
                let lits = model.literals();
                let p = parse_pred(rest, None, &[]).map_err(perr)?;
                p.free_vars().into_iter().filter(|v| !lits.contains(v)).collect()
            };
            Ok(Criterion::Intentional(parse_pred(rest, Some(model), &extra).map_err(perr)?))
        }
        "standard" => standard::parse_standard(rest).ok_or_else(|| CriteriaError::Unknown(src.to_string())),
        "time" => {
            let mut spec = TimeSpec::default();
            for part in rest.split(';').map(str::trim).filter(|p| !p.is_empty()) {
                if part == "refine" {
                    spec.refine = true;
                } else if let Some(inner) = part.strip_prefix('[').and_then(|p| p.strip_suffix(']')) {
                    let (a, b) = inner.split_once(',').ok_or_else(|| CriteriaError::Unknown(src.to_string()))?;
                    let a = parse_expr(a.trim(), Some(model), &[]).map_err(perr)?;
                    let b = parse_expr(b.trim(), Some(model), &[]).map_err(perr)?;
                    spec.intervals.push((a, b));
                } else {
                    spec.points.push(parse_expr(part, Some(model), &[]).map_err(perr)?);
                }
            }
            Ok(Criterion::Time(spec))
        }
        _ => Err(CriteriaError::Unknown(src.to_string())),
    }
}

/// Reads one selection per line, skipping blank lines and `--` comments.
pub fn parse_criteria_file(src: &str, model: &Model) -> Result<Vec<Criterion>, CriteriaError> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("--"))
        .map(|l| parse_criterion(l, model))
        .collect()
}

/// What a single criterion produced.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CriterionOutput {
    pub sccs: Vec<Scc>,
    /// Standard-partition cells found empty within bounds.
    pub infeasible: usize,
    /// Projections or emptiness checks cut off by the budget.
    pub unknown: usize,
    pub notes: Vec<String>,
}

/// Inputs shared by every criterion.
pub struct CriteriaInput<'a> {
    pub model: &'a Model,
    pub universe: &'a Universe,
    pub tables: &'a [PartitionTable],
    pub include_otherwise: bool,
}

pub fn apply(c: &Criterion, input: &CriteriaInput) -> Result<CriterionOutput, CriteriaError> {
    let solver = Solver::new(input.model, input.universe).map_err(|e| CriteriaError::Solver(e.to_string()))?;
    match c {
        Criterion::Cases => Ok(cases_criterion(&solver, input.include_otherwise)),
        Criterion::Extensional(targets) => {
            let mut out = CriterionOutput::default();
            for t in targets {
                out.sccs.extend(extensional_criterion(input.model, t)?);
            }
            Ok(out)
        }
        Criterion::Intentional(p) => intentional_criterion(&solver, p),
        Criterion::Standard { table, occurrences } => {
            standard_partition_criterion(&solver, input.tables, table.as_deref(), occurrences)
        }
        Criterion::Time(spec) => time_partition_criterion(&solver, spec),
    }
}

/// One class per DNF clause of `p`. Clauses over state names only narrow the
/// initial states, clauses over `x`/`t` only narrow the input pairs, and
/// mixed clauses are split by projection.
pub fn intentional_criterion(solver: &Solver, p: &Pred) -> Result<CriterionOutput, CriteriaError> {
    let clauses = to_dnf(p, solver.universe.dnf_cap)?;
    let input_vars: BTreeSet<String> = [VAR_X, VAR_T].map(String::from).into();
    let mut out = CriterionOutput::default();
    for clause in clauses {
        let c = Pred::and(clause);
        let vars = c.free_vars();
        let (ini, pairs) = if vars.is_disjoint(&input_vars) {
            (c.clone(), Pred::True)
        } else if vars.is_subset(&input_vars) {
            (Pred::True, c.clone())
        } else {
            let others: Vec<String> = vars.difference(&input_vars).cloned().collect();
            let ini = solver.project_exists(&c, &[VAR_X.to_string(), VAR_T.to_string()]);
            let pairs = solver.project_exists(&c, &others);
            out.unknown += usize::from(ini.unknown) + usize::from(pairs.unknown);
            (ini.pred, pairs.pred)
        };
        out.sccs.push(Scc::new(ini, pairs, "intentional", c.to_string()));
    }
    Ok(out)
}

/// The base catalog: every selection applied, merged in selection order and
/// numbered from 1. Repeats within one selection are dropped; a class that
/// repeats one from an earlier selection is kept and noted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Catalog {
    pub sccs: Vec<Scc>,
    /// Classes contributed by each selection, after deduplication.
    pub counts: Vec<(String, usize)>,
    pub duplicates: usize,
    pub infeasible: usize,
    pub unknown: usize,
    pub notes: Vec<String>,
}

pub fn build_catalog(selections: &[Criterion], input: &CriteriaInput) -> Result<Catalog, CriteriaError> {
    let outputs: Vec<Result<CriterionOutput, CriteriaError>> = selections.par_iter().map(|c| apply(c, input)).collect();
    let mut cat = Catalog::default();
    let mut earlier: BTreeMap<(Pred, Pred), u32> = BTreeMap::new();
    for (c, out) in selections.iter().zip(outputs) {
        let out = out?;
        cat.infeasible += out.infeasible;
        cat.unknown += out.unknown;
        cat.notes.extend(out.notes);
        let mut n = 0;
        let mut seen: BTreeSet<(Pred, Pred)> = BTreeSet::new();
        for mut scc in out.sccs {
            let key = scc.key();
            if !seen.insert(key.clone()) {
                cat.duplicates += 1;
                cat.notes.push(format!("duplicate class from {} dropped", scc.provenance));
                continue;
            }
            let id = cat.sccs.len() as u32 + 1;
            if let Some(prev) = earlier.get(&key) {
                cat.notes.push(format!("class {id} ({}) repeats class {prev}", scc.provenance));
            } else {
                earlier.insert(key, id);
            }
            scc.id = cat.sccs.len() as u32 + 1;
            cat.sccs.push(scc);
            n += 1;
        }
        cat.counts.push((c.name().to_string(), n));
    }
    Ok(cat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_bounds, parse_model};

    #[test]
    fn implication_gives_two_classes() {
        let m = parse_model(
            "model M { state { n : int; m : int; } input nat; output nat; ta = inf; dext { } dint { } lambda { } }",
        )
        .unwrap();
        let u = Universe::new(&m, &parse_bounds("int = -3..3;").unwrap()).unwrap();
        let s = Solver::new(&m, &u).unwrap();
        let c = parse_criterion("intentional: n * m > 0 => n > m", &m).unwrap();
        let Criterion::Intentional(p) = c else { panic!() };
        let out = intentional_criterion(&s, &p).unwrap();
        let ini: Vec<String> = out.sccs.iter().map(|s| s.ini_st.to_string()).collect();
        assert_eq!(ini, ["!(n * m > 0)", "n > m"]);
        assert!(out.sccs.iter().all(|s| s.in_pairs == Pred::True));
    }

    #[test]
    fn criteria_file_skips_comments() {
        let m = parse_model(
            "model M { state { k : 0..1; } input enum {go}; output nat; ta = inf; dext { } dint { } lambda { } }",
        )
        .unwrap();
        let cs = parse_criteria_file("-- note\n\ncases\nextensional:k , x\n", &m).unwrap();
        assert_eq!(cs, vec![Criterion::Cases, Criterion::Extensional(vec!["k".into(), "x".into()])]);
        assert!(parse_criterion("bogus", &m).is_err());
    }
}
