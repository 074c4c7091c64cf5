//! Generators and checks shared by the property tests and the acceptance run.
//! Predicates are generated in a small AST of their own and evaluated on
//! plain integers, so the library's evaluator is never its own oracle.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use devs_scc::algebra::{intersect, CombinationPlan};
use devs_scc::campaign::{catalog, CampaignSpec};
use devs_scc::criteria::{parse_criteria_file, Scc};
use devs_scc::model::{Env, Model, Pred, Rational, Value, VAR_T, VAR_X};
use devs_scc::parser::parse_pred;
use devs_scc::project::Project;
use devs_scc::select::{select_config, SelectError, SimulationConfig};
use devs_scc::sequencer::{build_sequences, replay};
use devs_scc::sim::{init, step, EventKind, SimError, SimState};
use devs_scc::symbolic::{from_dnf, normalize, to_dnf, Solver, Universe, DEFAULT_DNF_CAP};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR")))
}

pub fn load(name: &str) -> Project {
    Project::load(&fixture(name), None, None).unwrap_or_else(|e| panic!("{name}: {e}"))
}

// Integer predicates over a and b.

pub const GRID: i64 = 3;
const VARS: [&str; 2] = ["a", "b"];
pub const OPS: [&str; 6] = ["=", "!=", "<", "<=", ">", ">="];

#[derive(Clone, Debug)]
pub enum TE {
    Var(usize),
    Int(i64),
    Add(Box<TE>, Box<TE>),
    Sub(Box<TE>, Box<TE>),
    Mul(Box<TE>, Box<TE>),
}

#[derive(Clone, Debug)]
pub enum TP {
    True,
    False,
    Cmp(&'static str, TE, TE),
    Not(Box<TP>),
    And(Vec<TP>),
    Or(Vec<TP>),
    Imp(Box<TP>, Box<TP>),
}

impl TE {
    /// Subtraction between variable-free operands is nat arithmetic in the
    /// model language and may underflow, so those pairs are added instead.
    pub fn sub(a: TE, b: TE) -> TE {
        if a.has_var() || b.has_var() {
            TE::Sub(Box::new(a), Box::new(b))
        } else {
            TE::Add(Box::new(a), Box::new(b))
        }
    }

    fn has_var(&self) -> bool {
        match self {
            TE::Var(_) => true,
            TE::Int(_) => false,
            TE::Add(a, b) | TE::Sub(a, b) | TE::Mul(a, b) => a.has_var() || b.has_var(),
        }
    }

    pub fn eval(&self, v: [i64; 2]) -> i64 {
        match self {
            TE::Var(i) => v[*i],
            TE::Int(n) => *n,
            TE::Add(a, b) => a.eval(v) + b.eval(v),
            TE::Sub(a, b) => a.eval(v) - b.eval(v),
            TE::Mul(a, b) => a.eval(v) * b.eval(v),
        }
    }

    pub fn render(&self) -> String {
        match self {
            TE::Var(i) => VARS[*i].to_string(),
            TE::Int(n) if *n < 0 => format!("(-{})", -n),
            TE::Int(n) => n.to_string(),
            TE::Add(a, b) => format!("({} + {})", a.render(), b.render()),
            TE::Sub(a, b) => format!("({} - {})", a.render(), b.render()),
            TE::Mul(a, b) => format!("({} * {})", a.render(), b.render()),
        }
    }
}

impl TP {
    pub fn eval(&self, v: [i64; 2]) -> bool {
        match self {
            TP::True => true,
            TP::False => false,
            TP::Cmp(op, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match *op {
                    "=" => a == b,
                    "!=" => a != b,
                    "<" => a < b,
                    "<=" => a <= b,
                    ">" => a > b,
                    _ => a >= b,
                }
            }
            TP::Not(p) => !p.eval(v),
            TP::And(ps) => ps.iter().all(|p| p.eval(v)),
            TP::Or(ps) => ps.iter().any(|p| p.eval(v)),
            TP::Imp(a, b) => !a.eval(v) || b.eval(v),
        }
    }

    pub fn render(&self) -> String {
        let join = |ps: &[TP], sep: &str| ps.iter().map(|p| format!("({})", p.render())).collect::<Vec<_>>().join(sep);
        match self {
            TP::True => "true".into(),
            TP::False => "false".into(),
            TP::Cmp(op, a, b) => format!("{} {op} {}", a.render(), b.render()),
            TP::Not(p) => format!("!({})", p.render()),
            TP::And(ps) => join(ps, " & "),
            TP::Or(ps) => join(ps, " | "),
            TP::Imp(a, b) => format!("({}) => ({})", a.render(), b.render()),
        }
    }
}

pub fn gen_expr(rng: &mut impl Rng, depth: u32) -> TE {
    if depth == 0 || rng.gen_bool(0.5) {
        return if rng.gen_bool(0.6) { TE::Var(rng.gen_range(0..2)) } else { TE::Int(rng.gen_range(-2..=2)) };
    }
    let (a, b) = (gen_expr(rng, depth - 1), gen_expr(rng, depth - 1));
    match rng.gen_range(0..3) {
        0 => TE::Add(Box::new(a), Box::new(b)),
        1 => TE::sub(a, b),
        _ => TE::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn gen_pred(rng: &mut impl Rng, depth: u32) -> TP {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..20) {
            0 => TP::True,
            1 => TP::False,
            _ => TP::Cmp(OPS[rng.gen_range(0..OPS.len())], gen_expr(rng, 1), gen_expr(rng, 1)),
        };
    }
    match rng.gen_range(0..4) {
        0 => TP::Not(Box::new(gen_pred(rng, depth - 1))),
        1 => TP::And((0..rng.gen_range(2..=3)).map(|_| gen_pred(rng, depth - 1)).collect()),
        2 => TP::Or((0..rng.gen_range(2..=3)).map(|_| gen_pred(rng, depth - 1)).collect()),
        _ => TP::Imp(Box::new(gen_pred(rng, depth - 1)), Box::new(gen_pred(rng, depth - 1))),
    }
}

pub fn grid() -> Universe {
    let dom: Vec<Value> = (-GRID..=GRID).map(Value::int).collect();
    Universe::with_vars(VARS.iter().map(|v| (v.to_string(), dom.clone())).collect())
}

fn is_literal(p: &Pred) -> bool {
    match p {
        Pred::Cmp(..) | Pred::In(..) => true,
        Pred::Not(q) => matches!(q.as_ref(), Pred::Cmp(..) | Pred::In(..)),
        _ => false,
    }
}

/// The parsed predicate, its DNF and its normal form all agree with the
/// generated one on every grid point, and DNF clauses hold only literals.
pub fn check_dnf(tp: &TP, solver: &Solver) -> Result<(), String> {
    let src = tp.render();
    let p = parse_pred(&src, None, &[]).map_err(|e| format!("{src}: {e}"))?;
    let clauses = to_dnf(&p, DEFAULT_DNF_CAP).map_err(|e| format!("{src}: {e}"))?;
    if let Some(bad) = clauses.iter().flatten().find(|l| !is_literal(l)) {
        return Err(format!("{src}: clause member {bad} is not a literal"));
    }
    let back = from_dnf(&clauses);
    let norm = normalize(&p);
    for a in -GRID..=GRID {
        for b in -GRID..=GRID {
            let want = tp.eval([a, b]);
            let env = Env::new().with("a", Value::int(a)).with("b", Value::int(b));
            for (what, q) in [("parsed", &p), ("dnf", &back), ("normal form", &norm)] {
                if solver.holds(q, &env) != want {
                    return Err(format!("{what} of {src} disagrees at a = {a}, b = {b}"));
                }
            }
        }
    }
    Ok(())
}

// Classes over the two-variable toy model.

pub const TOY: &str = "model Toy { state { n : nat; m : enum {ON, OFF}; } input nat; output nat; \
    ta = inf; dext { case m = ON -> (n + x, m); case m = OFF -> (n, ON); } dint { } lambda { } }";

const TOY_STATE_ATOMS: [&str; 6] = ["n <= K", "n > K", "n = K", "n != K", "m = ON", "m = OFF"];
const TOY_PAIR_ATOMS: [&str; 4] = ["x = K", "x > K", "t = 0", "t > K"];

fn gen_atoms(rng: &mut impl Rng, pool: &[&str]) -> String {
    let n = rng.gen_range(1..=3);
    let mut s = String::new();
    for i in 0..n {
        if i > 0 {
            s.push_str(if rng.gen_bool(0.6) { " & " } else { " | " });
        }
        let atom = pool.choose(rng).unwrap().replace('K', &rng.gen_range(0..=4).to_string());
        s.push_str(&format!("({atom})"));
    }
    if rng.gen_bool(0.2) {
        s = format!("!({s})");
    }
    s
}

pub fn gen_toy_scc(rng: &mut impl Rng, model: &Model, id: u32) -> Scc {
    let ini = gen_atoms(rng, &TOY_STATE_ATOMS);
    let pairs = gen_atoms(rng, &TOY_PAIR_ATOMS);
    let mut s = Scc::new(
        parse_pred(&ini, Some(model), &[]).unwrap(),
        parse_pred(&pairs, Some(model), &[]).unwrap(),
        "generated",
        "",
    );
    s.id = id;
    s
}

fn same(a: &Scc, b: &Scc) -> bool {
    a.ini_st == b.ini_st && a.in_pairs == b.in_pairs && a.combined_from == b.combined_from
}

/// Commutativity and associativity as equality of canonical forms, plus the
/// intersection meaning the conjunction of both initial-state sets.
pub fn check_intersect(a: &Scc, b: &Scc, c: &Scc, solver: &Solver) -> Result<(), String> {
    let ab = intersect(a, b);
    if !same(&ab, &intersect(b, a)) {
        return Err(format!("not commutative: {} / {} vs {} / {}", a.ini_st, a.in_pairs, b.ini_st, b.in_pairs));
    }
    let left = intersect(&ab, c);
    let right = intersect(a, &intersect(b, c));
    if !same(&left, &right) {
        return Err(format!("not associative: {} vs {}", left.ini_st, right.ini_st));
    }
    for n in 0..=6 {
        for m in ["ON", "OFF"] {
            let env = Env::new().with("n", Value::int(n)).with("m", Value::lit(m));
            let want = solver.holds(&a.ini_st, &env) && solver.holds(&b.ini_st, &env);
            if solver.holds(&ab.ini_st, &env) != want {
                return Err(format!("{} is not the conjunction of {} and {}", ab.ini_st, a.ini_st, b.ini_st));
            }
        }
    }
    Ok(())
}

// Witness soundness.

/// Every class of the soda catalog and of the combined elevator catalog gets
/// a configuration that is well sorted and satisfies the class conditions.
pub fn witness_soundness() -> Result<usize, String> {
    let plan: CombinationPlan =
        serde_json::from_str(&std::fs::read_to_string(fixture("elevator.plan.json")).unwrap()).unwrap();
    let elevator = std::fs::read_to_string(fixture("elevator.criteria")).unwrap();
    let mut checked = 0;
    for (name, criteria, plan) in
        [("soda.devs", "cases\nextensional:m,x".to_string(), None), ("elevator.devs", elevator, Some(plan))]
    {
        let p = load(name);
        let spec = CampaignSpec {
            criteria: parse_criteria_file(&criteria, &p.model).map_err(|e| e.to_string())?,
            plan,
            include_otherwise: false,
            probe_k: 0,
        };
        let (cat, _) = catalog(&p, &spec).map_err(|e| e.to_string())?;
        let solver = Solver::new(&p.model, &p.universe).unwrap();
        for scc in &cat.sccs {
            let (cfg, _) = select_config(&solver, scc).map_err(|e| format!("{name}: {e}"))?;
            witness_ok(&p.model, &solver, scc, &cfg).map_err(|e| format!("{name} class {}: {e}", scc.id))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn witness_ok(model: &Model, solver: &Solver, scc: &Scc, cfg: &SimulationConfig) -> Result<(), String> {
    if cfg.state.len() != model.state.vars.len() {
        return Err("state has the wrong arity".into());
    }
    for (var, (name, val)) in model.state.vars.iter().zip(&cfg.state) {
        if var.name != *name || !var.sort.contains(val) {
            return Err(format!("{name} = {val} is outside its sort"));
        }
    }
    match &cfg.time {
        Value::Num(r) if *r >= Rational::from_integer(0) => {}
        other => return Err(format!("time {other} is not a non-negative number")),
    }
    let env = cfg.state_env().with(VAR_X, cfg.event.clone()).with(VAR_T, cfg.time.clone());
    let holds = |p: &Pred| solver.ctx.holds(p, &env, &[]).unwrap_or(false);
    if !holds(&scc.ini_st) {
        return Err(format!("state violates {}", scc.ini_st));
    }
    if !holds(&scc.in_pairs) {
        return Err(format!("({}, {}) violates {}", cfg.event, cfg.time, scc.in_pairs));
    }
    if scc.link.as_ref().is_some_and(|l| !holds(l)) {
        return Err("link condition violated".into());
    }
    Ok(())
}

// Elapsed time stays within the time advance.

fn time_advance(solver: &Solver, st: &SimState) -> Option<Rational> {
    match solver.ctx.ta(&st.env(solver.ctx.model)) {
        Ok(Value::Num(r)) => Some(r),
        _ => None,
    }
}

/// Random walks on the toggle and soda models from the states the case
/// classes select. External inputs arrive at random elapsed times, some of
/// them past the deadline, which must be refused. Returns the number of
/// steps attempted.
pub fn q_invariant(rng: &mut impl Rng, steps: usize) -> Result<usize, String> {
    let projects = [load("toggle.devs"), load("soda.devs")];
    let mut worlds = Vec::new();
    for p in &projects {
        let solver = Solver::new(&p.model, &p.universe).unwrap();
        let cases = parse_criteria_file("cases", &p.model).unwrap();
        let cat = devs_scc::criteria::build_catalog(&cases, &p.criteria_input(false)).unwrap();
        let starts: Vec<Vec<Value>> = cat
            .sccs
            .iter()
            .filter_map(|s| select_config(&solver, s).ok())
            .map(|(c, _)| c.state.into_iter().map(|(_, v)| v).collect())
            .collect();
        let inputs: Vec<Value> = p.universe.domain_of(VAR_X).iter().filter(|v| **v != Value::Tau).cloned().collect();
        worlds.push((p, starts, inputs));
    }
    let zero = Rational::from_integer(0);
    let quarter = Rational::new(1, 4);
    let mut done = 0;
    while done < steps {
        let (p, starts, inputs) = &worlds[rng.gen_range(0..worlds.len())];
        let solver = Solver::new(&p.model, &p.universe).unwrap();
        let mut st = init(&p.model, starts.choose(rng).unwrap().clone()).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            if done >= steps {
                break;
            }
            done += 1;
            let ta = time_advance(&solver, &st);
            if st.elapsed() != zero {
                return Err(format!("elapsed {} right after a transition", st.elapsed()));
            }
            if let Some(ta) = ta.filter(|_| rng.gen_bool(0.3)) {
                match step(&solver.ctx, &st, None) {
                    Ok(s) => {
                        let at = st.last + ta;
                        let ok = s.events.len() == 2
                            && matches!(s.events[0].kind, EventKind::Output(_))
                            && s.events[1].kind == EventKind::Internal
                            && s.events.iter().all(|e| e.at == at)
                            && s.state.clock == at;
                        if !ok {
                            return Err(format!("internal step not at the deadline {at}"));
                        }
                        st = s.state;
                    }
                    Err(e) if e.is_finding() => break,
                    Err(e) => return Err(format!("internal step: {e}")),
                }
                continue;
            }
            let Some(x) = inputs.choose(rng) else { break };
            let e = match ta {
                Some(ta) if rng.gen_bool(0.2) => ta,
                Some(ta) if rng.gen_bool(0.2) => ta + quarter,
                _ => Rational::new(rng.gen_range(0..=12), 4),
            };
            let late = ta.is_some_and(|ta| e > ta);
            match step(&solver.ctx, &st, Some((x, st.last + e))) {
                Ok(s) => {
                    if late {
                        return Err(format!("input accepted at elapsed {e} past time advance {}", ta.unwrap()));
                    }
                    if e < zero || s.state.clock != st.last + e || s.events[0].tie != (ta == Some(e)) {
                        return Err(format!("external step at elapsed {e} misplaced"));
                    }
                    st = s.state;
                }
                Err(SimError::AfterDeadline { .. }) if late => {}
                Err(err) if err.is_finding() => break,
                Err(err) => return Err(format!("input {x} at elapsed {e}: {err}")),
            }
        }
    }
    Ok(done)
}

// Sequencing covers every class exactly once.

const TOGGLE_STATE_ATOMS: [&str; 7] =
    ["lamp = off", "lamp = on", "left = inf", "left = 0", "left > 0", "left = T", "true"];
const TOGGLE_PAIR_ATOMS: [&str; 5] =
    ["x = press", "x = tau & t = 0", "x = press & t = 1", "x = press & t > 100", "t = 2"];

fn select_id(e: &SelectError) -> u32 {
    match e {
        SelectError::Empty { id, .. } | SelectError::Budget { id } => *id,
    }
}

/// Random class sets over the toggle model. Every class is either covered by
/// exactly one sequence or reported unselectable, sequences start at the
/// least remaining id, chained steps satisfy their class, and replaying a
/// sequence reproduces its trace.
pub fn coverage_partition(rng: &mut impl Rng, sets: usize) -> Result<usize, String> {
    let p = load("toggle.devs");
    let solver = Solver::new(&p.model, &p.universe).unwrap();
    let mut classes = 0;
    for _ in 0..sets {
        let mut ids: Vec<u32> = (1..=20).collect();
        ids.shuffle(rng);
        ids.truncate(rng.gen_range(1..=8));
        let sccs: Vec<Scc> = ids
            .iter()
            .map(|&id| {
                let pick = |pool: &[&str], rng: &mut _| {
                    let a = pool.choose(rng).unwrap();
                    parse_pred(a, Some(&p.model), &[]).unwrap()
                };
                let mut s = Scc::new(pick(&TOGGLE_STATE_ATOMS, rng), pick(&TOGGLE_PAIR_ATOMS, rng), "generated", "");
                s.id = id;
                s
            })
            .collect();
        classes += sccs.len();
        let r = build_sequences(&solver, &sccs);
        let mut seen = BTreeSet::new();
        for id in r.sequences.iter().flat_map(|s| s.covered()).chain(r.unselectable.iter().map(select_id)) {
            if !seen.insert(id) {
                return Err(format!("class {id} appears twice in {ids:?}"));
            }
        }
        let all: BTreeSet<u32> = ids.iter().copied().collect();
        if seen != all {
            return Err(format!("covered {seen:?}, expected {all:?}"));
        }
        let unselectable: BTreeSet<u32> = r.unselectable.iter().map(select_id).collect();
        let expected: BTreeSet<u32> =
            sccs.iter().filter(|s| select_config(&solver, s).is_err()).map(|s| s.id).collect();
        if unselectable != expected {
            return Err(format!("unselectable {unselectable:?}, expected {expected:?}"));
        }
        let firsts: Vec<u32> = r.sequences.iter().map(|s| s.covered()[0]).collect();
        if firsts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("sequences start out of order: {firsts:?}"));
        }
        for seq in &r.sequences {
            for st in seq.steps.iter().skip(1) {
                let scc = sccs.iter().find(|s| s.id == st.scc_id).unwrap();
                let cfg = SimulationConfig {
                    scc_id: Some(st.scc_id),
                    state: st.state_used.clone(),
                    event: st.event.clone(),
                    time: st.time.clone(),
                };
                witness_ok(&p.model, &solver, scc, &cfg).map_err(|e| format!("chained class {}: {e}", st.scc_id))?;
            }
            let cfgs: Vec<SimulationConfig> = seq
                .steps
                .iter()
                .map(|st| SimulationConfig {
                    scc_id: Some(st.scc_id),
                    state: st.state_used.clone(),
                    event: st.event.clone(),
                    time: st.time.clone(),
                })
                .collect();
            if seq.failure.is_none() && !cfgs.is_empty() && replay(&solver, &cfgs) != seq.trace() {
                return Err(format!("replay of {:?} differs", seq.covered()));
            }
        }
    }
    Ok(classes)
}
