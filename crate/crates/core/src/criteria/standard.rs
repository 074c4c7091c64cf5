use std::collections::BTreeMap;

use crate::model::{BinOp, CmpOp, Env, Expr, FunctionKind, Pred};
use crate::parser::PartitionTable;
use crate::symbolic::{SatResult, Solver, Universe};

use super::cases::{guard_class, inline_lets};
use super::{CriteriaError, Criterion, CriterionOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OccurrenceOp {
    Cmp(CmpOp),
    Arith(BinOp),
    Min,
}

impl OccurrenceOp {
    pub fn parse(s: &str) -> Option<OccurrenceOp> {
        Some(match s {
            "<" => OccurrenceOp::Cmp(CmpOp::Lt),
            "<=" => OccurrenceOp::Cmp(CmpOp::Le),
            ">" => OccurrenceOp::Cmp(CmpOp::Gt),
            ">=" => OccurrenceOp::Cmp(CmpOp::Ge),
            "=" => OccurrenceOp::Cmp(CmpOp::Eq),
            "!=" => OccurrenceOp::Cmp(CmpOp::Ne),
            "+" => OccurrenceOp::Arith(BinOp::Add),
            "-" => OccurrenceOp::Arith(BinOp::Sub),
            "*" => OccurrenceOp::Arith(BinOp::Mul),
            "/" => OccurrenceOp::Arith(BinOp::Div),
            "div" => OccurrenceOp::Arith(BinOp::IntDiv),
            "min" => OccurrenceOp::Min,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            OccurrenceOp::Cmp(op) => op.symbol(),
            OccurrenceOp::Arith(BinOp::Add) => "+",
            OccurrenceOp::Arith(BinOp::Sub) => "-",
            OccurrenceOp::Arith(BinOp::Mul) => "*",
            OccurrenceOp::Arith(BinOp::Div) => "/",
            OccurrenceOp::Arith(BinOp::IntDiv) => "div",
            OccurrenceOp::Min => "min",
        }
    }
}

/// The first application of an operator inside one case, written `dint6:>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub kind: FunctionKind,
    pub case: u32,
    pub op: OccurrenceOp,
}

impl Occurrence {
    fn parse(s: &str) -> Option<Occurrence> {
        let (loc, op) = s.trim().split_once(':')?;
        let digits = loc.find(|c: char| c.is_ascii_digit())?;
        let kind = FunctionKind::from_keyword(&loc[..digits])?;
        if kind == FunctionKind::Ta {
            return None;
        }
        Some(Occurrence { kind, case: loc[digits..].parse().ok()?, op: OccurrenceOp::parse(op.trim())? })
    }
}

/// `[table:]loc:op,loc:op,...`
pub(crate) fn parse_standard(rest: &str) -> Option<Criterion> {
    let starts_with_loc = ["dext", "dint", "lambda"]
        .iter()
        .any(|k| rest.strip_prefix(k).is_some_and(|r| r.starts_with(|c: char| c.is_ascii_digit())));
    let (table, occs) = if starts_with_loc {
        (None, rest)
    } else {
        let (t, o) = rest.split_once(':')?;
        (Some(t.trim().to_string()), o)
    };
    let occurrences = occs.split(',').map(Occurrence::parse).collect::<Option<Vec<_>>>()?;
    if occurrences.is_empty() {
        return None;
    }
    Some(Criterion::Standard { table, occurrences })
}

/// The sign table over `(a, b)`: each operand negative, zero or positive,
/// first operand varying slowest.
pub fn builtin_table(op: &str) -> Option<PartitionTable> {
    const BUILTIN: [&str; 12] = ["<", "<=", ">", ">=", "=", "!=", "+", "-", "*", "/", "div", "min"];
    if !BUILTIN.contains(&op) {
        return None;
    }
    let sign = |v: &str, op: CmpOp| Pred::cmp(op, Expr::var(v), Expr::int(0));
    let mut cells = Vec::with_capacity(9);
    for oa in [CmpOp::Lt, CmpOp::Eq, CmpOp::Gt] {
        for ob in [CmpOp::Lt, CmpOp::Eq, CmpOp::Gt] {
            cells.push(Pred::And(vec![sign("a", oa), sign("b", ob)]));
        }
    }
    Some(PartitionTable { name: op.to_string(), params: vec!["a".into(), "b".into()], cells })
}

fn lookup_table(tables: &[PartitionTable], name: &str) -> Result<PartitionTable, CriteriaError> {
    tables
        .iter()
        .find(|t| t.name == name)
        .cloned()
        .or_else(|| builtin_table(name))
        .ok_or_else(|| CriteriaError::UnknownTable(name.to_string()))
}

/// Replaces the first atom equal to `target`, splicing conjunctions.
fn replace_atom(p: &Pred, target: &Pred, with: &Pred, done: &mut bool) -> Pred {
    if *done {
        return p.clone();
    }
    if p == target {
        *done = true;
        return with.clone();
    }
    match p {
        Pred::Not(q) => Pred::Not(Box::new(replace_atom(q, target, with, done))),
        Pred::And(qs) => {
            let mut out = Vec::with_capacity(qs.len());
            for q in qs {
                match replace_atom(q, target, with, done) {
                    Pred::And(inner) if q == target => out.extend(inner),
                    r => out.push(r),
                }
            }
            Pred::And(out)
        }
        Pred::Or(qs) => Pred::Or(qs.iter().map(|q| replace_atom(q, target, with, done)).collect()),
        Pred::Implies(a, b) => {
            let a = replace_atom(a, target, with, done);
            Pred::Implies(Box::new(a), Box::new(replace_atom(b, target, with, done)))
        }
        _ => p.clone(),
    }
}

fn first_cmp(p: &Pred, op: CmpOp) -> Option<Pred> {
    match p {
        Pred::Cmp(o, ..) if *o == op => Some(p.clone()),
        Pred::Not(q) => first_cmp(q, op),
        Pred::And(qs) | Pred::Or(qs) => qs.iter().find_map(|q| first_cmp(q, op)),
        Pred::Implies(a, b) => first_cmp(a, op).or_else(|| first_cmp(b, op)),
        _ => None,
    }
}

fn first_apply_expr(e: &Expr, op: OccurrenceOp) -> Option<Vec<Expr>> {
    match (e, op) {
        (Expr::Bin(o, a, b), OccurrenceOp::Arith(want)) if *o == want => {
            return Some(vec![(**a).clone(), (**b).clone()])
        }
        (Expr::Min(xs), OccurrenceOp::Min) => return Some(xs.clone()),
        _ => {}
    }
    match e {
        Expr::Const(_) | Expr::Var(_) => None,
        Expr::Neg(a) | Expr::Proj(a, _) => first_apply_expr(a, op),
        Expr::Bin(_, a, b) => first_apply_expr(a, op).or_else(|| first_apply_expr(b, op)),
        Expr::Min(xs) | Expr::Max(xs) | Expr::Tuple(xs) | Expr::Apply(_, xs) => {
            xs.iter().find_map(|x| first_apply_expr(x, op))
        }
        Expr::Ite(c, a, b) => {
            first_apply_pred(c, op).or_else(|| first_apply_expr(a, op)).or_else(|| first_apply_expr(b, op))
        }
    }
}

fn first_apply_pred(p: &Pred, op: OccurrenceOp) -> Option<Vec<Expr>> {
    match p {
        Pred::True | Pred::False => None,
        Pred::Cmp(_, a, b) => first_apply_expr(a, op).or_else(|| first_apply_expr(b, op)),
        Pred::In(a, _) => first_apply_expr(a, op),
        Pred::Not(q) | Pred::Exists(_, q) => first_apply_pred(q, op),
        Pred::And(qs) | Pred::Or(qs) => qs.iter().find_map(|q| first_apply_pred(q, op)),
        Pred::Implies(a, b) => first_apply_pred(a, op).or_else(|| first_apply_pred(b, op)),
    }
}

fn inline_expr(e: &Expr, lets: &[(String, Expr)]) -> Expr {
    let mut out = e.clone();
    for (name, def) in lets.iter().rev() {
        out = out.subst(&BTreeMap::from([(name.clone(), def.clone())]));
    }
    out
}

fn instantiate(cell: &Pred, params: &[String], operands: &[Expr]) -> Pred {
    let map: BTreeMap<String, Expr> = params.iter().cloned().zip(operands.iter().cloned()).collect();
    cell.subst(&map)
}

/// One class per feasible cell of `table` at each occurrence. The cell,
/// instantiated with the occurrence's operands, takes the place of a
/// comparison atom in its guard or is conjoined with the guard otherwise.
pub fn standard_partition_criterion(
    solver: &Solver,
    tables: &[PartitionTable],
    table: Option<&str>,
    occurrences: &[Occurrence],
) -> Result<CriterionOutput, CriteriaError> {
    let model = solver.ctx.model;
    let mut out = CriterionOutput::default();
    for occ in occurrences {
        let func = model.function(occ.kind).expect("case function");
        let case = func
            .cases
            .iter()
            .find(|c| c.id == occ.case && !c.otherwise)
            .ok_or(CriteriaError::NoSuchCase { kind: occ.kind, id: occ.case })?;
        let guard = inline_lets(&case.guard, &func.lets);
        let table = lookup_table(tables, table.unwrap_or(occ.op.symbol()))?;
        let missing = || CriteriaError::NoOccurrence { kind: occ.kind, id: occ.case, op: occ.op.symbol().to_string() };
        // Either an atom to replace or operands to conjoin a cell with.
        let (atom, operands) = match occ.op {
            OccurrenceOp::Cmp(op) => {
                let atom = first_cmp(&guard, op).ok_or_else(missing)?;
                let Pred::Cmp(_, a, b) = &atom else { unreachable!() };
                let ops = vec![a.clone(), b.clone()];
                (Some(atom), ops)
            }
            op => {
                let ops = first_apply_pred(&guard, op)
                    .or_else(|| {
                        first_apply_expr(&case.result, op)
                            .map(|xs| xs.iter().map(|x| inline_expr(x, &func.lets)).collect())
                    })
                    .ok_or_else(missing)?;
                (None, ops)
            }
        };
        if operands.len() != table.params.len() {
            return Err(CriteriaError::Arity {
                table: table.name.clone(),
                expected: table.params.len(),
                got: operands.len(),
            });
        }
        for (k, cell) in table.cells.iter().enumerate() {
            let inst = instantiate(cell, &table.params, &operands);
            let full = match &atom {
                Some(a) => replace_atom(&guard, a, &inst, &mut false),
                None => Pred::and(vec![guard.clone(), inst.clone()]),
            };
            let unknown = match solver.sat(&full, &[]) {
                SatResult::Unsat => {
                    out.infeasible += 1;
                    continue;
                }
                SatResult::Unknown => 1,
                SatResult::Sat(_) => 0,
            };
            let (mut scc, proj_unknown) = guard_class(solver, occ.kind, &full);
            scc.provenance.criterion = "standard".into();
            scc.provenance.target =
                format!("operator {} at {} case {}, cell {} ({})", occ.op.symbol(), occ.kind, occ.case, k + 1, inst);
            if unknown + proj_unknown > 0 {
                scc.notes.push("feasibility undecided within budget".into());
            }
            out.unknown += unknown + proj_unknown;
            out.sccs.push(scc);
        }
    }
    if out.infeasible > 0 {
        out.notes.push(format!("standard: {} infeasible cells dropped", out.infeasible));
    }
    Ok(out)
}

/// Partition of a composed operation: every inner cell paired with every
/// outer cell whose `operand` is replaced by `composed`. Empty cells are pruned.
pub fn domain_propagation(
    solver: &Solver,
    outer: &PartitionTable,
    inner: &PartitionTable,
    composed: &Expr,
    operand: usize,
) -> PartitionTable {
    let fed = &outer.params[operand];
    let mut params = inner.params.clone();
    params.extend(outer.params.iter().filter(|p| *p != fed).cloned());
    let map = BTreeMap::from([(fed.clone(), composed.clone())]);
    let mut cells = Vec::new();
    for i in &inner.cells {
        for o in &outer.cells {
            let cell = Pred::and(vec![i.clone(), o.subst(&map)]);
            if solver.sat(&cell, &[]) != SatResult::Unsat {
                cells.push(cell);
            }
        }
    }
    PartitionTable { name: format!("{}({})", outer.name, inner.name), params, cells }
}

/// Per-point cell counts of a table over a grid of its parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableHealth {
    pub points: usize,
    /// Points lying in more than one cell.
    pub overlaps: usize,
    /// Points lying in no cell.
    pub gaps: usize,
}

/// Checks disjointness and coverage of `table` by enumerating the domains
/// `universe` assigns to its parameters.
pub fn table_health(table: &PartitionTable, universe: &Universe) -> TableHealth {
    let model = crate::model::Model::empty();
    let solver = Solver::new(&model, universe).expect("empty model");
    let domains: Vec<_> = table.params.iter().map(|p| universe.domain_of(p)).collect();
    let mut health = TableHealth { points: 0, overlaps: 0, gaps: 0 };
    let mut idx = vec![0usize; domains.len()];
    if domains.iter().any(|d| d.is_empty()) {
        return health;
    }
    loop {
        let mut env = Env::new();
        for (k, p) in table.params.iter().enumerate() {
            env.push(p, domains[k][idx[k]].clone());
        }
        let hits = table.cells.iter().filter(|c| solver.holds(c, &env)).count();
        health.points += 1;
        health.overlaps += usize::from(hits > 1);
        health.gaps += usize::from(hits == 0);
        let mut k = idx.len();
        loop {
            if k == 0 {
                return health;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Value;
    use crate::parser::{parse_expr, parse_pred};

    fn grid(vars: &[&str], lo: i64, hi: i64) -> Universe {
        Universe::with_vars(vars.iter().map(|v| (v.to_string(), (lo..=hi).map(Value::int).collect())).collect())
    }

    #[test]
    fn sign_table_partitions_the_grid() {
        let t = builtin_table("<").unwrap();
        assert_eq!(t.cells.len(), 9);
        assert_eq!(t.cells[0].to_string(), "a < 0 & b < 0");
        assert_eq!(t.cells[8].to_string(), "a > 0 & b > 0");
        let h = table_health(&t, &grid(&["a", "b"], -2, 2));
        assert_eq!(h, TableHealth { points: 25, overlaps: 0, gaps: 0 });
        assert!(builtin_table("max").is_none());
    }

    #[test]
    fn occurrence_syntax() {
        let Some(Criterion::Standard { table, occurrences }) = parse_standard("order:dint6:>,lambda12:min") else {
            panic!()
        };
        assert_eq!(table.as_deref(), Some("order"));
        assert_eq!(occurrences[1], Occurrence { kind: FunctionKind::Lambda, case: 12, op: OccurrenceOp::Min });
        let Some(Criterion::Standard { table, .. }) = parse_standard("dext3:+") else { panic!() };
        assert_eq!(table, None);
        assert!(parse_standard("order:ta1:<").is_none());
    }

    #[test]
    fn atom_replacement_splices() {
        let g = parse_pred("k = 1 & p > q & r = 0", None, &[]).unwrap();
        let atom = parse_pred("p > q", None, &[]).unwrap();
        let cell = parse_pred("p = q & q = 0", None, &[]).unwrap();
        let r = replace_atom(&g, &atom, &cell, &mut false);
        assert_eq!(r.to_string(), "k = 1 & p = q & q = 0 & r = 0");
    }

    #[test]
    fn propagation_multiplies_cells() {
        let u = grid(&["a", "b", "c"], -2, 2);
        let m = crate::model::Model::empty();
        let s = Solver::new(&m, &u).unwrap();
        let plus = builtin_table("+").unwrap();
        let lt = PartitionTable {
            name: "<".into(),
            params: vec!["p".into(), "c".into()],
            cells: builtin_table("<")
                .unwrap()
                .cells
                .iter()
                .map(|c| {
                    c.subst(&BTreeMap::from([("a".to_string(), Expr::var("p")), ("b".to_string(), Expr::var("c"))]))
                })
                .collect(),
        };
        let composed = parse_expr("a + b", None, &[]).unwrap();
        let t = domain_propagation(&s, &lt, &plus, &composed, 0);
        assert_eq!(t.params, ["a", "b", "c"]);
        // Sign combinations of (a, b, a + b) that occur: 13, times 3 signs of c.
        assert_eq!(t.cells.len(), 39);
        let trivial =
            PartitionTable { name: "all".into(), params: vec!["a".into(), "b".into()], cells: vec![Pred::True] };
        let same = domain_propagation(&s, &lt, &trivial, &Expr::var("a"), 0);
        assert_eq!(same.cells.len(), 9);
        let h = table_health(&t, &u);
        assert_eq!((h.overlaps, h.gaps), (0, 0));
    }
}
