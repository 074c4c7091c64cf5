//! Chaining configurations so that the state one class leaves behind starts
//! the next one.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value as Json};

use crate::criteria::Scc;
use crate::model::{Expr, Value, VAR_T, VAR_X};
use crate::select::{joint_predicate, select_config, SelectError, SimulationConfig, SCHEMA};
use crate::sim::{init, step, SimError, SimState, Trace, TraceEvent};
use crate::symbolic::{SatResult, Solver};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqStep {
    pub scc_id: u32,
    /// The state the step started from, by variable name.
    pub state_used: Vec<(String, Value)>,
    pub event: Value,
    /// Elapsed time since the previous transition.
    pub time: Value,
    pub events: Vec<TraceEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationSequence {
    pub steps: Vec<SeqStep>,
    /// The step that could not be simulated, which ends the sequence.
    pub failure: Option<(u32, SimError)>,
}

impl SimulationSequence {
    pub fn covered(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.steps.iter().map(|s| s.scc_id).collect();
        ids.extend(self.failure.as_ref().map(|(id, _)| *id));
        ids
    }

    pub fn trace(&self) -> Trace {
        Trace {
            scc_id: self.steps.first().map(|s| s.scc_id).or(self.failure.as_ref().map(|f| f.0)),
            events: self.steps.iter().flat_map(|s| s.events.clone()).collect(),
            error: self.failure.as_ref().map(|f| f.1.clone()),
        }
    }

    pub fn to_json(&self) -> Json {
        let steps: Vec<Json> = self
            .steps
            .iter()
            .map(|s| {
                let state: serde_json::Map<String, Json> =
                    s.state_used.iter().map(|(n, v)| (n.clone(), json!(v.to_string()))).collect();
                json!({
                    "scc": s.scc_id,
                    "state": state,
                    "event": s.event.to_string(),
                    "time": s.time.to_string(),
                })
            })
            .collect();
        json!({
            "schema": SCHEMA,
            "covered": self.covered(),
            "steps": steps,
            "failure": self.failure.as_ref().map(|(id, e)| json!({ "scc": id, "finding": e.is_finding(), "message": e.to_string() })),
        })
    }
}

/// Sequences plus the classes for which no configuration could be chosen.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sequencing {
    pub sequences: Vec<SimulationSequence>,
    pub unselectable: Vec<SelectError>,
}

fn named_state(solver: &Solver, st: &SimState) -> Vec<(String, Value)> {
    solver.universe.state_vars().iter().cloned().zip(st.state.iter().cloned()).collect()
}

/// Least deliverable input pair of `scc` from the concrete state `st`.
fn chained_pair(solver: &Solver, scc: &Scc, st: &SimState) -> Option<(Value, Value)> {
    if !solver.holds(&scc.ini_st, &st.env(solver.ctx.model)) {
        return None;
    }
    let fixed: BTreeMap<String, Expr> =
        solver.universe.state_vars().iter().zip(&st.state).map(|(n, v)| (n.clone(), Expr::Const(v.clone()))).collect();
    let joint = joint_predicate(solver.ctx.model, scc).subst(&fixed);
    let vars = [VAR_X.to_string(), VAR_T.to_string()];
    match solver.sat_from(&joint, &vars, &[0, 0]) {
        SatResult::Sat(w) => Some((w.get(VAR_X)?.clone(), w.get(VAR_T)?.clone())),
        _ => None,
    }
}

fn simulate(
    solver: &Solver,
    st: &SimState,
    event: &Value,
    time: &Value,
) -> Result<(SimState, Vec<TraceEvent>), SimError> {
    let injected = match (event, time) {
        (Value::Tau, _) => None,
        (x, Value::Num(e)) => Some((x, st.clock + e)),
        (_, other) => return Err(SimError::BadTimeAdvance(other.to_string())),
    };
    let s = step(&solver.ctx, st, injected)?;
    Ok((s.state, s.events))
}

/// Classes are started in ascending id order from their least configuration.
/// After each step, the lowest-numbered remaining class whose initial states
/// contain the reached state, and which has an input deliverable from it,
/// continues the sequence. Every class ends up in exactly one sequence
/// unless no configuration of it exists within bounds.
pub fn build_sequences(solver: &Solver, sccs: &[Scc]) -> Sequencing {
    let by_id: BTreeMap<u32, &Scc> = sccs.iter().map(|s| (s.id, s)).collect();
    let mut remaining: BTreeSet<u32> = by_id.keys().copied().collect();
    let mut out = Sequencing::default();
    while let Some(id) = remaining.pop_first() {
        let scc = by_id[&id];
        let cfg: SimulationConfig = match select_config(solver, scc) {
            Ok((c, _)) => c,
            Err(e) => {
                out.unselectable.push(e);
                continue;
            }
        };
        let mut seq = SimulationSequence { steps: Vec::new(), failure: None };
        let state0 = cfg.state.iter().map(|(_, v)| v.clone()).collect();
        let mut current = match init(solver.ctx.model, state0) {
            Ok(st) => st,
            Err(e) => {
                seq.failure = Some((id, e));
                out.sequences.push(seq);
                continue;
            }
        };
        let mut next = Some((id, cfg.event, cfg.time));
        while let Some((sid, event, time)) = next.take() {
            let used = named_state(solver, &current);
            match simulate(solver, &current, &event, &time) {
                Ok((st, events)) => {
                    seq.steps.push(SeqStep { scc_id: sid, state_used: used, event, time, events });
                    current = st;
                }
                Err(e) => {
                    seq.failure = Some((sid, e));
                    break;
                }
            }
            next = remaining
                .iter()
                .find_map(|cand| chained_pair(solver, by_id[cand], &current).map(|(x, t)| (*cand, x, t)));
            if let Some((cand, _, _)) = &next {
                remaining.remove(cand);
            }
        }
        out.sequences.push(seq);
    }
    out
}

/// Runs a recorded sequence again: the first configuration's state, then
/// every configuration's input in turn, each timed from the previous
/// transition. Later states in `configs` are ignored.
pub fn replay(solver: &Solver, configs: &[SimulationConfig]) -> Trace {
    let mut trace = Trace { scc_id: configs.first().and_then(|c| c.scc_id), events: Vec::new(), error: None };
    let Some(first) = configs.first() else { return trace };
    let mut current = match init(solver.ctx.model, first.state.iter().map(|(_, v)| v.clone()).collect()) {
        Ok(st) => st,
        Err(e) => {
            trace.error = Some(e);
            return trace;
        }
    };
    for c in configs {
        match simulate(solver, &current, &c.event, &c.time) {
            Ok((st, events)) => {
                trace.events.extend(events);
                current = st;
            }
            Err(e) => {
                trace.error = Some(e);
                break;
            }
        }
    }
    trace
}
