//! Abstract simulator for a single atomic model on concrete states.

use std::cmp::Ordering;
use std::fmt;

use serde_json::{json, Value as Json};

use crate::criteria::Scc;
use crate::model::{Env, EvalContext, EvalError, FunctionKind, Model, Rational, Value, VAR_E, VAR_X};
use crate::select::{stratified_configs, SimulationConfig, SCHEMA};
use crate::symbolic::Solver;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    /// One value per state variable, in declared order.
    pub state: Vec<Value>,
    pub clock: Rational,
    pub last: Rational,
}

impl SimState {
    pub fn env(&self, model: &Model) -> Env {
        let mut env = Env::new();
        for (v, val) in model.state.vars.iter().zip(&self.state) {
            env.push(&v.name, val.clone());
        }
        env
    }

    pub fn elapsed(&self) -> Rational {
        self.clock - self.last
    }

    pub fn render(&self, model: &Model) -> String {
        let parts: Vec<String> =
            model.state.vars.iter().zip(&self.state).map(|(v, val)| format!("{} = {val}", v.name)).collect();
        parts.join(", ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    Internal,
    External(Value),
    Output(Value),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub at: Rational,
    pub kind: EventKind,
    pub function: FunctionKind,
    pub case: u32,
    pub state_after: Vec<Value>,
    /// An external event delivered exactly at the internal deadline.
    pub tie: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("undefined transition: no {function} case holds at time {at} in state [{state}]{}", input.as_ref().map(|i| format!(" for input {i}")).unwrap_or_default())]
    Undefined { function: FunctionKind, at: String, state: String, input: Option<String> },
    #[error("event after internal deadline: input at {at} but the internal transition is due at {deadline}")]
    AfterDeadline { at: String, deadline: String },
    #[error("event at {at} precedes the clock {clock}")]
    BeforeClock { at: String, clock: String },
    #[error("passive state, no internal transition")]
    Passive,
    #[error("{} {value} is outside the state set", if *function == FunctionKind::Ta { "initial state".to_string() } else { format!("{function} result") })]
    IllSorted { function: FunctionKind, value: String },
    #[error("time advance is {0}, not a non-negative time")]
    BadTimeAdvance(String),
    #[error("{0}")]
    Eval(#[from] EvalError),
}

impl SimError {
    /// Errors that reveal a gap in the model rather than a misuse of the
    /// simulator: no case covering the situation, or arithmetic leaving its set.
    pub fn is_finding(&self) -> bool {
        matches!(self, SimError::Undefined { .. } | SimError::Eval(EvalError::Underflow(_)))
    }
}

fn sort_check(model: &Model, function: FunctionKind, v: Value) -> Result<Vec<Value>, SimError> {
    let items = match v {
        Value::Tuple(items) if model.state.vars.len() != 1 => items,
        other => vec![other],
    };
    let ok = items.len() == model.state.vars.len()
        && model.state.vars.iter().zip(&items).all(|(var, val)| var.sort.contains(val));
    if ok {
        Ok(items)
    } else {
        let shown = if items.len() == 1 { items[0].to_string() } else { Value::Tuple(items).to_string() };
        Err(SimError::IllSorted { function, value: shown })
    }
}

fn time_advance(ctx: &EvalContext, st: &SimState) -> Result<Option<Rational>, SimError> {
    match ctx.ta(&st.env(ctx.model))? {
        Value::Inf => Ok(None),
        Value::Num(r) if r >= Rational::from_integer(0) => Ok(Some(r)),
        other => Err(SimError::BadTimeAdvance(other.to_string())),
    }
}

/// Clock and last transition both at 0.
pub fn init(model: &Model, s0: Vec<Value>) -> Result<SimState, SimError> {
    let ok =
        s0.len() == model.state.vars.len() && model.state.vars.iter().zip(&s0).all(|(var, val)| var.sort.contains(val));
    if !ok {
        return Err(SimError::IllSorted { function: FunctionKind::Ta, value: Value::Tuple(s0).to_string() });
    }
    let zero = Rational::from_integer(0);
    Ok(SimState { state: s0, clock: zero, last: zero })
}

/// What one step produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub state: SimState,
    pub output: Option<Value>,
    /// The output event, if any, followed by the transition.
    pub events: Vec<TraceEvent>,
}

/// Without an input, advances to the internal deadline, emits the output of
/// the current state and applies the internal transition. With one, applies
/// the external transition at its time. An input exactly at the deadline
/// takes precedence over the internal transition and is marked as a tie.
pub fn step(ctx: &EvalContext, st: &SimState, injected: Option<(&Value, Rational)>) -> Result<Step, SimError> {
    let model = ctx.model;
    let ta = time_advance(ctx, st)?;
    let deadline = ta.map(|ta| st.last + ta);
    let env = st.env(model);
    let undefined = |function, at: Rational, input: Option<&Value>| SimError::Undefined {
        function,
        at: Value::Num(at).to_string(),
        state: st.render(model),
        input: input.map(Value::to_string),
    };
    match injected {
        None => {
            let at = deadline.ok_or(SimError::Passive)?;
            let (lcase, out) =
                ctx.fire(FunctionKind::Lambda, &env)?.ok_or_else(|| undefined(FunctionKind::Lambda, at, None))?;
            let (dcase, next) =
                ctx.fire(FunctionKind::Dint, &env)?.ok_or_else(|| undefined(FunctionKind::Dint, at, None))?;
            let next = sort_check(model, FunctionKind::Dint, next)?;
            let after = SimState { state: next.clone(), clock: at, last: at };
            time_advance(ctx, &after)?;
            let events = vec![
                TraceEvent {
                    at,
                    kind: EventKind::Output(out.clone()),
                    function: FunctionKind::Lambda,
                    case: lcase,
                    state_after: st.state.clone(),
                    tie: false,
                },
                TraceEvent {
                    at,
                    kind: EventKind::Internal,
                    function: FunctionKind::Dint,
                    case: dcase,
                    state_after: next,
                    tie: false,
                },
            ];
            Ok(Step { state: after, output: Some(out), events })
        }
        Some((x, at)) => {
            if at < st.clock {
                return Err(SimError::BeforeClock {
                    at: Value::Num(at).to_string(),
                    clock: Value::Num(st.clock).to_string(),
                });
            }
            let tie = match deadline {
                Some(d) => match at.cmp(&d) {
                    Ordering::Greater => {
                        return Err(SimError::AfterDeadline {
                            at: Value::Num(at).to_string(),
                            deadline: Value::Num(d).to_string(),
                        })
                    }
                    Ordering::Equal => true,
                    Ordering::Less => false,
                },
                None => false,
            };
            let e = at - st.last;
            let env = env.with(VAR_X, x.clone()).with(VAR_E, Value::Num(e));
            let (case, next) =
                ctx.fire(FunctionKind::Dext, &env)?.ok_or_else(|| undefined(FunctionKind::Dext, at, Some(x)))?;
            let next = sort_check(model, FunctionKind::Dext, next)?;
            let after = SimState { state: next.clone(), clock: at, last: at };
            time_advance(ctx, &after)?;
            let ev = TraceEvent {
                at,
                kind: EventKind::External(x.clone()),
                function: FunctionKind::Dext,
                case,
                state_after: next,
                tie,
            };
            Ok(Step { state: after, output: None, events: vec![ev] })
        }
    }
}

/// Events of one simulation run and how it ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub scc_id: Option<u32>,
    pub events: Vec<TraceEvent>,
    pub error: Option<SimError>,
}

impl Trace {
    /// Case firings and output shapes, used to compare runs within a class.
    pub fn signature(&self) -> String {
        let mut parts: Vec<String> = self
            .events
            .iter()
            .map(|ev| match &ev.kind {
                EventKind::Output(v) => format!("{}{}:{}", ev.function, ev.case, shape(v)),
                _ => format!("{}{}", ev.function, ev.case),
            })
            .collect();
        if let Some(err) = &self.error {
            parts.push(match err {
                SimError::Undefined { function, .. } => format!("undefined {function}"),
                SimError::Eval(EvalError::Underflow(_)) => "underflow".into(),
                other => format!("error {}", error_kind(other)),
            });
        }
        parts.join(" ")
    }
}

fn error_kind(e: &SimError) -> &'static str {
    match e {
        SimError::Undefined { .. } => "undefined",
        SimError::AfterDeadline { .. } => "after-deadline",
        SimError::BeforeClock { .. } => "before-clock",
        SimError::Passive => "passive",
        SimError::IllSorted { .. } => "ill-sorted",
        SimError::BadTimeAdvance(_) => "bad-ta",
        SimError::Eval(EvalError::Underflow(_)) => "underflow",
        SimError::Eval(_) => "eval",
    }
}

/// Constructor shape of an output: literal names are kept, numbers are not.
fn shape(v: &Value) -> String {
    match v {
        Value::Num(_) => "num".into(),
        Value::Inf => "inf".into(),
        Value::Tau => "tau".into(),
        Value::Lit(l) => l.clone(),
        Value::Tuple(items) => format!("({})", items.iter().map(shape).collect::<Vec<_>>().join(", ")),
    }
}

fn config_state(c: &SimulationConfig) -> Vec<Value> {
    c.state.iter().map(|(_, v)| v.clone()).collect()
}

/// Starts from the configured state and delivers its input: a `tau` input
/// waits for the internal transition, anything else is applied at its time.
pub fn run_config(ctx: &EvalContext, c: &SimulationConfig) -> Trace {
    let mut trace = Trace { scc_id: c.scc_id, events: Vec::new(), error: None };
    let result = init(ctx.model, config_state(c)).and_then(|st| {
        if c.is_internal() {
            step(ctx, &st, None)
        } else {
            let at = c.time.as_num().ok_or_else(|| SimError::BadTimeAdvance(c.time.to_string()))?;
            step(ctx, &st, Some((&c.event, at)))
        }
    });
    match result {
        Ok(s) => trace.events = s.events,
        Err(e) => trace.error = Some(e),
    }
    trace
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeReport {
    pub scc_id: u32,
    pub witnesses: usize,
    /// Distinct signatures in first-seen order.
    pub signatures: Vec<String>,
    pub uniform: bool,
    pub skipped: Option<String>,
}

impl ProbeReport {
    pub fn to_json(&self) -> Json {
        json!({
            "scc": self.scc_id,
            "witnesses": self.witnesses,
            "uniform": self.uniform,
            "signatures": self.signatures,
            "skipped": self.skipped,
        })
    }
}

/// Runs up to `k` spread-out members of `scc` and compares their behavior.
/// Differing signatures mean one representative does not stand for the
/// whole class and it should be partitioned further.
pub fn uniformity_probe(solver: &Solver, scc: &Scc, k: usize) -> ProbeReport {
    let configs = if k >= 2 { stratified_configs(solver, scc, k) } else { Vec::new() };
    let mut report =
        ProbeReport { scc_id: scc.id, witnesses: configs.len(), signatures: Vec::new(), uniform: true, skipped: None };
    if configs.len() < 2 {
        report.skipped = Some(format!("{} witness(es) available, need 2", configs.len()));
        return report;
    }
    for c in &configs {
        let sig = run_config(&solver.ctx, c).signature();
        if !report.signatures.contains(&sig) {
            report.signatures.push(sig);
        }
    }
    report.uniform = report.signatures.len() == 1;
    report
}

impl TraceEvent {
    pub fn to_json(&self, model: &Model) -> Json {
        let mut j = json!({
            "schema": SCHEMA,
            "at": Value::Num(self.at).to_string(),
            "function": self.function.keyword(),
            "case": self.case,
        });
        match &self.kind {
            EventKind::Internal => j["kind"] = json!("internal"),
            EventKind::External(x) => {
                j["kind"] = json!("external");
                j["input"] = json!(x.to_string());
            }
            EventKind::Output(y) => {
                j["kind"] = json!("output");
                j["output"] = json!(y.to_string());
            }
        }
        let mut state = serde_json::Map::new();
        for (v, val) in model.state.vars.iter().zip(&self.state_after) {
            state.insert(v.name.clone(), json!(val.to_string()));
        }
        j["state"] = Json::Object(state);
        if self.tie {
            j["tie"] = json!(true);
        }
        j
    }
}

/// One JSON object per line: every event, then a closing error record when
/// the run stopped early.
pub fn trace_jsonl(model: &Model, trace: &Trace) -> String {
    let mut out = String::new();
    for ev in &trace.events {
        let mut j = ev.to_json(model);
        if let Some(id) = trace.scc_id {
            j["scc"] = json!(id);
        }
        out.push_str(&j.to_string());
        out.push('\n');
    }
    if let Some(err) = &trace.error {
        let j = json!({
            "schema": SCHEMA,
            "scc": trace.scc_id,
            "kind": "error",
            "error": error_kind(err),
            "finding": err.is_finding(),
            "message": err.to_string(),
        });
        out.push_str(&j.to_string());
        out.push('\n');
    }
    out
}

/// `scc,events,outputs,outcome,signature`, one row per trace.
pub fn traces_csv(traces: &[Trace]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let row = |w: &mut csv::Writer<Vec<u8>>, fields: [String; 5]| w.write_record(fields).expect("in-memory write");
    row(&mut w, ["scc", "events", "outputs", "outcome", "signature"].map(String::from));
    for t in traces {
        let outputs = t.events.iter().filter(|e| matches!(e.kind, EventKind::Output(_))).count();
        row(
            &mut w,
            [
                t.scc_id.map(|i| i.to_string()).unwrap_or_default(),
                t.events.len().to_string(),
                outputs.to_string(),
                t.error.as_ref().map_or("ok", error_kind).to_string(),
                t.signature(),
            ],
        );
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = Value::Num(self.at);
        match &self.kind {
            EventKind::Internal => write!(f, "{at}: internal ({} case {})", self.function, self.case),
            EventKind::External(x) => {
                write!(
                    f,
                    "{at}: input {x} ({} case {}){}",
                    self.function,
                    self.case,
                    if self.tie { " [tie]" } else { "" }
                )
            }
            EventKind::Output(y) => write!(f, "{at}: output {y} ({} case {})", self.function, self.case),
        }
    }
}
