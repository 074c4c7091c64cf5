//! Picking a concrete simulation configuration out of each class.

use std::fmt;

use serde_json::{json, Map, Value as Json};

use crate::criteria::Scc;
use crate::model::{CmpOp, Env, Expr, Model, Pred, Value, VAR_T, VAR_X};
use crate::parser::parse_value;
use crate::symbolic::{SatResult, Solver, Witness};

pub const SCHEMA: &str = "devs-scc/1";

/// An initial state plus one (event, time) input pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationConfig {
    pub scc_id: Option<u32>,
    /// Every state variable, in declared order.
    pub state: Vec<(String, Value)>,
    pub event: Value,
    pub time: Value,
}

impl SimulationConfig {
    pub fn state_env(&self) -> Env {
        let mut env = Env::new();
        for (n, v) in &self.state {
            env.push(n, v.clone());
        }
        env
    }

    pub fn is_internal(&self) -> bool {
        self.event == Value::Tau
    }

    pub fn to_json(&self) -> Json {
        let mut state = Map::new();
        for (n, v) in &self.state {
            state.insert(n.clone(), Json::String(v.to_string()));
        }
        let mut out = json!({ "schema": SCHEMA });
        if let Some(id) = self.scc_id {
            out["scc"] = json!(id);
        }
        out["state"] = Json::Object(state);
        out["event"] = json!(self.event.to_string());
        out["time"] = json!(self.time.to_string());
        out
    }

    /// Reads a config record, checking every state variable is present and
    /// sort-correct.
    pub fn from_json(model: &Model, j: &Json) -> Result<SimulationConfig, String> {
        let field = |name: &str| j.get(name).ok_or_else(|| format!("missing field `{name}`"));
        if let Some(s) = j.get("schema") {
            if s != SCHEMA {
                return Err(format!("unsupported schema {s}"));
            }
        }
        let value = |what: &str, v: &Json| -> Result<Value, String> {
            let text = match v {
                Json::String(s) => s.clone(),
                Json::Number(n) => n.to_string(),
                other => return Err(format!("{what}: expected a string, got {other}")),
            };
            parse_value(&text).map_err(|e| format!("{what}: {e}"))
        };
        let state_obj = field("state")?.as_object().ok_or("`state` must be an object")?;
        let mut state = Vec::new();
        for var in &model.state.vars {
            let raw = state_obj.get(&var.name).ok_or_else(|| format!("state lacks `{}`", var.name))?;
            let v = value(&var.name, raw)?;
            if !var.sort.contains(&v) {
                return Err(format!("`{}` = {v} is not in {}", var.name, var.sort));
            }
            state.push((var.name.clone(), v));
        }
        if let Some(extra) = state_obj.keys().find(|k| model.state.index_of(k).is_none()) {
            return Err(format!("unknown state variable `{extra}`"));
        }
        let event = value("event", field("event")?)?;
        if event != Value::Tau && !model.input.contains(&event) {
            return Err(format!("event {event} is not in {}", model.input));
        }
        let time = value("time", field("time")?)?;
        if !matches!(&time, Value::Num(r) if *r >= 0.into()) {
            return Err(format!("time {time} must be a finite non-negative number"));
        }
        let scc_id = j.get("scc").and_then(Json::as_u64).map(|n| n as u32);
        Ok(SimulationConfig { scc_id, state, event, time })
    }
}

impl fmt::Display for SimulationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let state: Vec<String> = self.state.iter().map(|(n, v)| format!("{n} = {v}")).collect();
        write!(f, "[{}] ({}, {})", state.join(", "), self.event, self.time)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("class {id}: no representative within bounds ({what} empty)")]
    Empty { id: u32, what: &'static str },
    #[error("class {id}: witness search exhausted its budget")]
    Budget { id: u32 },
}

/// The class conditions plus the requirement that the input can actually be
/// delivered: external events no later than the time advance, internal ones
/// only from states that are not passive.
pub fn joint_predicate(model: &Model, scc: &Scc) -> Pred {
    let x = Expr::var(VAR_X);
    let t = Expr::var(VAR_T);
    let tau = Expr::Const(Value::Tau);
    let deliverable = Pred::Or(vec![
        Pred::And(vec![Pred::cmp(CmpOp::Eq, x.clone(), tau.clone()), finite(&model.ta)]),
        Pred::And(vec![Pred::cmp(CmpOp::Ne, x, tau), at_most(&t, &model.ta)]),
    ]);
    let mut parts = vec![scc.ini_st.clone(), scc.in_pairs.clone()];
    parts.extend(scc.link.clone());
    parts.push(deliverable);
    Pred::And(parts)
}

// A `min` is split so each operand is checked as soon as its own variables
// are assigned.
fn at_most(t: &Expr, ta: &Expr) -> Pred {
    match ta {
        Expr::Min(items) => Pred::And(items.iter().map(|i| at_most(t, i)).collect()),
        _ => Pred::cmp(CmpOp::Le, t.clone(), ta.clone()),
    }
}

fn finite(ta: &Expr) -> Pred {
    match ta {
        Expr::Min(items) => Pred::Or(items.iter().map(finite).collect()),
        _ => Pred::cmp(CmpOp::Lt, ta.clone(), Expr::Const(Value::Inf)),
    }
}

// Input first: the deliverability literals then prune each state variable
// as soon as it is assigned.
fn config_vars(solver: &Solver) -> Vec<String> {
    let mut vars = vec![VAR_X.to_string(), VAR_T.to_string()];
    vars.extend(solver.universe.state_vars().iter().cloned());
    vars
}

fn from_witness(scc: &Scc, vars: &[String], w: &Witness) -> SimulationConfig {
    let get = |name: &str| w.get(name).cloned().unwrap_or(Value::int(0));
    SimulationConfig {
        scc_id: Some(scc.id),
        state: vars[2..].iter().map(|v| (v.clone(), get(v))).collect(),
        event: get(VAR_X),
        time: get(VAR_T),
    }
}

/// Least configuration of `scc`, ordering by event, then time, then the
/// state variables in declared order. State and input are searched together
/// so that the pair is deliverable from the state; when no such combination
/// exists within bounds each side is chosen on its own and the second value
/// of the result says so.
pub fn select_config(solver: &Solver, scc: &Scc) -> Result<(SimulationConfig, bool), SelectError> {
    let vars = config_vars(solver);
    let joint = joint_predicate(solver.ctx.model, scc);
    if let SatResult::Sat(w) = solver.sat_from(&joint, &vars, &vec![0; vars.len()]) {
        return Ok((from_witness(scc, &vars, &w), true));
    }
    let ini = match solver.sat(&scc.ini_st, &vars[2..]) {
        SatResult::Sat(w) => w,
        SatResult::Unsat => return Err(SelectError::Empty { id: scc.id, what: "initial states" }),
        SatResult::Unknown => return Err(SelectError::Budget { id: scc.id }),
    };
    let pairs = match solver.sat(&scc.in_pairs, &vars[..2]) {
        SatResult::Sat(w) => w,
        SatResult::Unsat => return Err(SelectError::Empty { id: scc.id, what: "input pairs" }),
        SatResult::Unknown => return Err(SelectError::Budget { id: scc.id }),
    };
    let mut all = ini.vars;
    all.extend(pairs.vars);
    Ok((from_witness(scc, &vars, &Witness { vars: all }), false))
}

/// Up to `k` distinct configurations spread over the bounded grid. Probe `i`
/// starts variable `j` at the `(i + j) mod k` stratum of its domain, so no
/// two variables move in lockstep.
pub fn stratified_configs(solver: &Solver, scc: &Scc, k: usize) -> Vec<SimulationConfig> {
    if k == 0 {
        return Vec::new();
    }
    let vars = config_vars(solver);
    let joint = joint_predicate(solver.ctx.model, scc);
    let sizes: Vec<usize> = vars.iter().map(|v| solver.universe.domain_of(v).len()).collect();
    let mut out: Vec<SimulationConfig> = Vec::new();
    let least: Vec<usize> = match solver.sat_from(&joint, &vars, &vec![0; vars.len()]) {
        SatResult::Sat(w) => vars
            .iter()
            .map(|v| {
                let val = w.get(v).expect("witness covers every variable");
                solver.universe.domain_of(v).iter().position(|d| d == val).unwrap_or(0)
            })
            .collect(),
        _ => return Vec::new(),
    };
    for i in 0..k {
        let mut start: Vec<usize> = sizes.iter().enumerate().map(|(j, &n)| (i + j) % k * n / k).collect();
        // Leading variables are often pinned by the class; fall back to the
        // least witness's value for them one at a time.
        let mut found = None;
        for p in 0..=start.len() {
            if p > 0 {
                start[p - 1] = least[p - 1];
            }
            match solver.sat_from(&joint, &vars, &start) {
                SatResult::Sat(w) => {
                    found = Some(w);
                    break;
                }
                SatResult::Unknown => break,
                SatResult::Unsat => {}
            }
        }
        let Some(w) = found else { continue };
        let c = from_witness(scc, &vars, &w);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Whether `c` belongs to `scc`, by direct evaluation.
pub fn is_member(solver: &Solver, scc: &Scc, c: &SimulationConfig) -> bool {
    let env = c.state_env().with(VAR_X, c.event.clone()).with(VAR_T, c.time.clone());
    solver.holds(&scc.ini_st, &env) && solver.holds(&scc.in_pairs, &env)
}
