//! Command-line driver.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use devs_scc::algebra::{combine_and_prune, CombinationPlan};
use devs_scc::campaign::{catalog, catalog_json, run_campaign, CampaignError, CampaignSpec, Outcome};
use devs_scc::criteria::{parse_criteria_file, parse_criterion, Criterion};
use devs_scc::model::case_summary;
use devs_scc::project::{read, Project, ProjectError};
use devs_scc::select::{select_config, SimulationConfig, SCHEMA};
use devs_scc::sequencer::{build_sequences, replay};
use devs_scc::sim::{trace_jsonl, traces_csv, Trace};
use devs_scc::symbolic::Solver;

#[derive(Parser)]
#[command(name = "devs-scc", version, about = "Simulation configuration classes for atomic DEVS models")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Model file (.devs).
    #[arg(long)]
    model: PathBuf,
    /// Bounds file; defaults to the model's sibling `.bounds` file.
    #[arg(long)]
    bounds: Option<PathBuf>,
    /// Partition tables; defaults to the model's sibling `.parts` file.
    #[arg(long)]
    parts: Option<PathBuf>,
}

#[derive(Args)]
struct Selection {
    /// A criterion selection such as `cases`, `extensional:x,d` or
    /// `time:[0,TA];refine`. Repeatable.
    #[arg(long = "criteria", value_name = "SPEC")]
    criteria: Vec<String>,
    /// File with one selection per line.
    #[arg(long)]
    criteria_file: Option<PathBuf>,
    /// Also build classes for `otherwise` cases.
    #[arg(long)]
    include_otherwise: bool,
    /// Combination plan (JSON).
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a model.
    Parse {
        /// Model file (.devs).
        path: Option<PathBuf>,
        /// Same as the positional path.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Build the base class catalog.
    Criteria {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        selection: Selection,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Intersect classes; without a plan every pair of base classes is tried.
    Combine {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        selection: Selection,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick one configuration per class.
    Select {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        selection: Selection,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chain configurations into simulation sequences.
    Sequence {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        selection: Selection,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate configurations or sequences from a JSON file.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// A configuration, a list of them, or sequences with `steps`.
        input: PathBuf,
        /// Directory for traces.jsonl and traces.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage and write all artifacts.
    Campaign {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        selection: Selection,
        /// Directory for the report and every artifact.
        #[arg(long)]
        out: PathBuf,
        /// Witnesses per class for the uniformity probe (0 disables it).
        #[arg(long, default_value_t = 0)]
        probe_k: usize,
    },
    /// Summarize a campaign report for reading.
    Report {
        /// A campaign's report.json.
        path: PathBuf,
    },
}

/// A failure with its exit code.
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Failure {
        Failure { code: 1, message: format!("{}: {e}", path.display()) }
    }

    fn parse(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }

    fn exec(message: impl Into<String>) -> Failure {
        Failure { code: 4, message: message.into() }
    }
}

impl From<ProjectError> for Failure {
    fn from(e: ProjectError) -> Failure {
        let code = if e.is_parse() { 2 } else { 1 };
        Failure { code, message: e.to_string() }
    }
}

fn load(args: &ModelArgs) -> Result<Project, Failure> {
    Ok(Project::load(&args.model, args.bounds.as_deref(), args.parts.as_deref())?)
}

fn selections(project: &Project, sel: &Selection) -> Result<Vec<Criterion>, Failure> {
    let mut out = Vec::new();
    if let Some(path) = &sel.criteria_file {
        let src = read(path)?;
        out.extend(
            parse_criteria_file(&src, &project.model)
                .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?,
        );
    }
    for c in &sel.criteria {
        out.push(parse_criterion(c, &project.model).map_err(|e| Failure::parse(e.to_string()))?);
    }
    Ok(out)
}

fn plan(sel: &Selection) -> Result<Option<CombinationPlan>, Failure> {
    let Some(path) = &sel.plan else { return Ok(None) };
    let src = read(path)?;
    serde_json::from_str(&src).map(Some).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn spec(project: &Project, sel: &Selection, probe_k: usize) -> Result<CampaignSpec, Failure> {
    Ok(CampaignSpec {
        criteria: selections(project, sel)?,
        plan: plan(sel)?,
        include_otherwise: sel.include_otherwise,
        probe_k,
    })
}

fn pretty(j: &Json) -> String {
    let mut s = serde_json::to_string_pretty(j).expect("json serializes");
    s.push('\n');
    s
}

fn emit(j: &Json, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, pretty(j)).map_err(|e| Failure::io(path, e)),
        None => {
            print!("{}", pretty(j));
            Ok(())
        }
    }
}

fn stage(e: CampaignError) -> Failure {
    match &e {
        CampaignError::Criteria(c) if c.is_selection() => Failure::parse(e.to_string()),
        CampaignError::Algebra(_) => Failure::parse(e.to_string()),
        _ => Failure::exec(e.to_string()),
    }
}

fn solver(project: &Project) -> Result<Solver<'_>, Failure> {
    Solver::new(&project.model, &project.universe).map_err(|e| Failure::exec(format!("constants: {e}")))
}

/// Reads configurations from a single config, a list of them, a `select`
/// output, a sequence, or a `sequence` output. Each entry of the result is
/// run as one trace.
fn read_runs(project: &Project, j: &Json) -> Result<Vec<Vec<SimulationConfig>>, String> {
    let cfg = |j: &Json| SimulationConfig::from_json(&project.model, j);
    if let Some(items) = j.as_array() {
        let mut out = Vec::new();
        for item in items {
            out.extend(read_runs(project, item)?);
        }
        return Ok(out);
    }
    for key in ["configs", "sequences"] {
        if let Some(inner) = j.get(key) {
            return read_runs(project, inner);
        }
    }
    if let Some(steps) = j.get("steps").and_then(Json::as_array) {
        let mut seq = Vec::new();
        for s in steps {
            seq.push(cfg(s)?);
        }
        return Ok(vec![seq]);
    }
    Ok(vec![vec![cfg(j)?]])
}

fn write_traces(project: &Project, dir: &Path, traces: &[Trace]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let jsonl: String = traces.iter().map(|t| trace_jsonl(&project.model, t)).collect();
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Failure::io(&p, e))
    };
    write("traces.jsonl", &jsonl)?;
    write("traces.csv", &traces_csv(traces))
}

fn human_report(j: &Json) -> String {
    let mut s = String::new();
    let n = |v: &Json| v.as_u64().unwrap_or(0);
    let _ = writeln!(s, "Model {}", j["model"].as_str().unwrap_or("?"));
    let _ = writeln!(s, "\nClasses per criterion:");
    for c in j["criteria"].as_array().into_iter().flatten() {
        let _ = writeln!(s, "  {:<12} {}", c["criterion"].as_str().unwrap_or("?"), n(&c["classes"]));
    }
    let sizes = &j["sizes"];
    let _ = writeln!(
        s,
        "\nCatalog: {} base + {} combined - {} dropped = {} classes",
        n(&sizes["base"]),
        n(&sizes["combined"]),
        n(&sizes["dropped"]),
        n(&sizes["catalog"])
    );
    if n(&j["infeasible"]) > 0 {
        let _ = writeln!(s, "Infeasible partition cells: {}", n(&j["infeasible"]));
    }
    let seqs = j["sequences"].as_array().map_or(0, Vec::len);
    let _ = writeln!(s, "Sequences: {seqs}");
    for (title, key) in [("Findings (undefined transitions and underflows)", "findings"), ("Failures", "failures")] {
        let items = j[key].as_array().cloned().unwrap_or_default();
        let _ = writeln!(s, "\n{title}: {}", items.len());
        for f in items {
            let _ = writeln!(
                s,
                "  class {} [{}] {}",
                f["scc"],
                f["stage"].as_str().unwrap_or("?"),
                f["message"].as_str().unwrap_or("")
            );
        }
    }
    let mixed: Vec<&Json> =
        j["probes"].as_array().into_iter().flatten().filter(|p| p["uniform"] == json!(false)).collect();
    if !mixed.is_empty() {
        let _ = writeln!(s, "\nClasses whose members behave differently (consider partitioning further):");
        for p in mixed {
            let sigs: Vec<&str> = p["signatures"].as_array().into_iter().flatten().filter_map(Json::as_str).collect();
            let _ = writeln!(s, "  class {}: {}", p["scc"], sigs.join(" | "));
        }
    }
    s
}

pub fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Parse { path, model } => {
            let path = path.or(model).ok_or_else(|| Failure::usage("parse: give a model path"))?;
            let p = Project::load(&path, None, None)?;
            let m = &p.model;
            println!(
                "{}: {}, {} state variables, {} constants",
                m.name,
                case_summary(m),
                m.state.vars.len(),
                m.constants.len()
            );
            Ok(0)
        }
        Command::Criteria { model, selection, out } => {
            let p = load(&model)?;
            let spec = spec(&p, &selection, 0)?;
            let (cat, comb) = catalog(&p, &spec).map_err(stage)?;
            emit(&catalog_json(&p, &cat, comb.as_ref()), out.as_deref())?;
            Ok(0)
        }
        Command::Combine { model, selection, out } => {
            let p = load(&model)?;
            let mut spec = spec(&p, &selection, 0)?;
            let explicit = spec.plan.take();
            let (base, _) = catalog(&p, &spec).map_err(stage)?;
            let plan = explicit.unwrap_or_else(|| {
                let ids: Vec<u32> = base.sccs.iter().map(|s| s.id).collect();
                CombinationPlan::all_pairs(&ids, devs_scc::algebra::DEFAULT_PLAN_BUDGET)
            });
            let (all, rep) = combine_and_prune(&p.model, &p.universe, &base.sccs, &plan)
                .map_err(|e| Failure::parse(format!("plan: {e}")))?;
            let mut cat = base;
            cat.sccs = all;
            emit(&catalog_json(&p, &cat, Some(&rep)), out.as_deref())?;
            Ok(0)
        }
        Command::Select { model, selection, out } => {
            let p = load(&model)?;
            let spec = spec(&p, &selection, 0)?;
            let (cat, _) = catalog(&p, &spec).map_err(stage)?;
            let s = solver(&p)?;
            let mut configs = Vec::new();
            let mut errors = Vec::new();
            for scc in &cat.sccs {
                match select_config(&s, scc) {
                    Ok((c, _)) => configs.push(c.to_json()),
                    Err(e) => errors.push(json!(e.to_string())),
                }
            }
            let code = if errors.is_empty() { 0 } else { 4 };
            emit(
                &json!({ "schema": SCHEMA, "model": p.model.name, "configs": configs, "errors": errors }),
                out.as_deref(),
            )?;
            Ok(code)
        }
        Command::Sequence { model, selection, out } => {
            let p = load(&model)?;
            let spec = spec(&p, &selection, 0)?;
            let (cat, _) = catalog(&p, &spec).map_err(stage)?;
            let s = solver(&p)?;
            let r = build_sequences(&s, &cat.sccs);
            let seqs: Vec<Json> = r.sequences.iter().map(|q| q.to_json()).collect();
            let errors: Vec<String> = r.unselectable.iter().map(ToString::to_string).collect();
            emit(
                &json!({ "schema": SCHEMA, "model": p.model.name, "sequences": seqs, "errors": errors }),
                out.as_deref(),
            )?;
            let outcome =
                r.sequences.iter().map(|q| Outcome::of(q.failure.as_ref().map(|f| &f.1))).max().unwrap_or_default();
            Ok(if errors.is_empty() { outcome.exit_code() } else { 4 })
        }
        Command::Simulate { model, input, out } => {
            let p = load(&model)?;
            let src = read(&input)?;
            let j: Json =
                serde_json::from_str(&src).map_err(|e| Failure::parse(format!("{}: {e}", input.display())))?;
            let runs = read_runs(&p, &j).map_err(|e| Failure::parse(format!("{}: {e}", input.display())))?;
            let s = solver(&p)?;
            let traces: Vec<Trace> = runs.iter().map(|r| replay(&s, r)).collect();
            let mut outcome = Outcome::Clean;
            for t in &traces {
                for ev in &t.events {
                    println!("{ev}");
                }
                if let Some(e) = &t.error {
                    println!("{}: {e}", if e.is_finding() { "finding" } else { "error" });
                }
                outcome = outcome.max(Outcome::of(t.error.as_ref()));
            }
            if let Some(dir) = &out {
                write_traces(&p, dir, &traces)?;
            }
            Ok(outcome.exit_code())
        }
        Command::Campaign { model, selection, out, probe_k } => {
            let p = load(&model)?;
            let spec = spec(&p, &selection, probe_k)?;
            fs::create_dir_all(&out).map_err(|e| Failure::io(&out, e))?;
            let write = |name: &str, body: String| {
                let path = out.join(name);
                fs::write(&path, body).map_err(|e| Failure::io(&path, e))
            };
            let result = match run_campaign(&p, &spec) {
                Ok(r) => r,
                Err(e) => {
                    write("failures.json", pretty(&json!({ "schema": SCHEMA, "stage_error": e.to_string() })))?;
                    return Err(stage(e));
                }
            };
            let report = result.report(&p);
            write("report.json", pretty(&report))?;
            write("catalog.json", pretty(&catalog_json(&p, &result.catalog, result.combination.as_ref())))?;
            let configs: Vec<Json> =
                result.classes.iter().filter_map(|c| c.config.as_ref().ok()).map(|(c, _)| c.to_json()).collect();
            write("configs.json", pretty(&json!({ "schema": SCHEMA, "configs": configs })))?;
            let seqs: Vec<Json> = result.sequencing.sequences.iter().map(|q| q.to_json()).collect();
            write("sequences.json", pretty(&json!({ "schema": SCHEMA, "sequences": seqs })))?;
            let mut traces: Vec<Trace> = result.classes.iter().filter_map(|c| c.trace.clone()).collect();
            traces.extend(result.sequencing.sequences.iter().map(|q| q.trace()));
            write_traces(&p, &out, &traces)?;
            let failures = report["failures"].as_array().map_or(0, Vec::len);
            if failures > 0 {
                write("failures.json", pretty(&json!({ "schema": SCHEMA, "failures": report["failures"] })))?;
            }
            print!("{}", human_report(&report));
            Ok(result.outcome().exit_code())
        }
        Command::Report { path } => {
            let src = read(&path)?;
            let j: Json = serde_json::from_str(&src).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
            print!("{}", human_report(&j));
            Ok(0)
        }
    }
}
