//! The whole pipeline on one model: criteria, combination, selection,
//! simulation, sequencing and the report.

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::algebra::{combine_and_prune, AlgebraError, CombinationPlan, CombineReport};
use crate::criteria::{build_catalog, Catalog, CriteriaError, Criterion, Scc};
use crate::project::Project;
use crate::select::{select_config, SelectError, SimulationConfig, SCHEMA};
use crate::sequencer::{build_sequences, Sequencing};
use crate::sim::{run_config, uniformity_probe, ProbeReport, SimError, Trace};
use crate::symbolic::Solver;

pub struct CampaignSpec {
    pub criteria: Vec<Criterion>,
    pub plan: Option<CombinationPlan>,
    pub include_otherwise: bool,
    /// Witnesses per class for the uniformity probe; below 2 disables it.
    pub probe_k: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("criteria: {0}")]
    Criteria(#[from] CriteriaError),
    #[error("combination: {0}")]
    Algebra(#[from] AlgebraError),
    #[error("constants: {0}")]
    Constants(String),
}

pub struct ClassRun {
    pub scc: Scc,
    pub config: Result<(SimulationConfig, bool), SelectError>,
    pub trace: Option<Trace>,
}

pub struct CampaignResult {
    pub catalog: Catalog,
    pub combination: Option<CombineReport>,
    pub classes: Vec<ClassRun>,
    pub sequencing: Sequencing,
    pub probes: Vec<ProbeReport>,
}

/// How a simulation ended, in the terms of the exit-code contract.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    #[default]
    Clean,
    Finding,
    Failure,
}

impl Outcome {
    pub fn of(err: Option<&SimError>) -> Outcome {
        match err {
            None => Outcome::Clean,
            Some(e) if e.is_finding() => Outcome::Finding,
            Some(_) => Outcome::Failure,
        }
    }

    /// 0 clean, 3 when some run revealed a model gap, 4 when some run could
    /// not be carried out at all. Execution failures take precedence.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Clean => 0,
            Outcome::Finding => 3,
            Outcome::Failure => 4,
        }
    }
}

/// Base catalog, optionally extended by a combination plan.
pub fn catalog(project: &Project, spec: &CampaignSpec) -> Result<(Catalog, Option<CombineReport>), CampaignError> {
    let mut cat = build_catalog(&spec.criteria, &project.criteria_input(spec.include_otherwise))?;
    let mut report = None;
    if let Some(plan) = &spec.plan {
        let (all, rep) = combine_and_prune(&project.model, &project.universe, &cat.sccs, plan)?;
        cat.sccs = all;
        report = Some(rep);
    }
    Ok((cat, report))
}

pub fn run_campaign(project: &Project, spec: &CampaignSpec) -> Result<CampaignResult, CampaignError> {
    let (catalog, combination) = catalog(project, spec)?;
    let classes: Vec<ClassRun> = catalog
        .sccs
        .par_iter()
        .map_init(
            || Solver::new(&project.model, &project.universe),
            |solver, scc| {
                let solver = solver.as_ref().map_err(|e| CampaignError::Constants(e.to_string()))?;
                let config = select_config(solver, scc);
                let trace = config.as_ref().ok().map(|(c, _)| run_config(&solver.ctx, c));
                Ok(ClassRun { scc: scc.clone(), config, trace })
            },
        )
        .collect::<Result<_, CampaignError>>()?;
    let solver = Solver::new(&project.model, &project.universe).map_err(|e| CampaignError::Constants(e.to_string()))?;
    let sequencing = build_sequences(&solver, &catalog.sccs);
    let probes = if spec.probe_k >= 2 {
        catalog
            .sccs
            .par_iter()
            .map_init(
                || Solver::new(&project.model, &project.universe).expect("constants evaluated above"),
                |s, scc| uniformity_probe(s, scc, spec.probe_k),
            )
            .collect()
    } else {
        Vec::new()
    };
    Ok(CampaignResult { catalog, combination, classes, sequencing, probes })
}

pub fn scc_json(scc: &Scc) -> Json {
    let mut j = json!({
        "id": scc.id,
        "ini_st": scc.ini_st.to_string(),
        "in_pairs": scc.in_pairs.to_string(),
        "provenance": scc.provenance.to_string(),
    });
    if let Some(link) = &scc.link {
        j["link"] = json!(link.to_string());
    }
    if !scc.combined_from.is_empty() {
        j["combined_from"] = json!(scc.combined_from);
    }
    if !scc.notes.is_empty() {
        j["notes"] = json!(scc.notes);
    }
    j
}

pub fn catalog_json(project: &Project, cat: &Catalog, combination: Option<&CombineReport>) -> Json {
    let counts: Vec<Json> = cat.counts.iter().map(|(c, n)| json!({ "criterion": c, "classes": n })).collect();
    let mut j = json!({
        "schema": SCHEMA,
        "model": project.model.name,
        "criteria": counts,
        "infeasible": cat.infeasible,
        "unknown": cat.unknown,
        "duplicates": cat.duplicates,
        "notes": cat.notes,
    });
    if let Some(rep) = combination {
        j["combination"] = serde_json::to_value(rep).expect("report serializes");
    }
    j["sccs"] = cat.sccs.iter().map(scc_json).collect();
    j
}

impl CampaignResult {
    pub fn base_size(&self) -> usize {
        self.catalog.counts.iter().map(|(_, n)| n).sum()
    }

    /// Worst outcome over every run: per-class configurations and sequences.
    pub fn outcome(&self) -> Outcome {
        let class = self.classes.iter().filter_map(|c| c.trace.as_ref()).map(|t| Outcome::of(t.error.as_ref()));
        let seq = self.sequencing.sequences.iter().map(|s| Outcome::of(s.failure.as_ref().map(|f| &f.1)));
        class.chain(seq).max().unwrap_or_default()
    }

    pub fn report(&self, project: &Project) -> Json {
        let base = self.base_size();
        let mut findings = Vec::new();
        let mut failures = Vec::new();
        let mut classes = Vec::new();
        for run in &self.classes {
            let mut j = scc_json(&run.scc);
            match &run.config {
                Ok((c, joint)) => {
                    j["config"] = c.to_json();
                    j["config"].as_object_mut().expect("object").remove("schema");
                    if !joint {
                        j["config_note"] = json!("state and input chosen separately; the input may not be deliverable");
                    }
                }
                Err(e) => {
                    j["select_error"] = json!(e.to_string());
                    failures.push(json!({ "scc": run.scc.id, "stage": "select", "message": e.to_string() }));
                }
            }
            if let Some(t) = &run.trace {
                j["signature"] = json!(t.signature());
                if let Some(e) = &t.error {
                    let rec = json!({ "scc": run.scc.id, "stage": "simulate", "message": e.to_string() });
                    if e.is_finding() {
                        findings.push(rec);
                    } else {
                        failures.push(rec);
                    }
                }
            }
            classes.push(j);
        }
        let sequences: Vec<Json> = self
            .sequencing
            .sequences
            .iter()
            .map(|s| {
                if let Some((id, e)) = &s.failure {
                    let rec = json!({ "scc": id, "stage": "sequence", "message": e.to_string() });
                    if e.is_finding() {
                        findings.push(rec);
                    } else {
                        failures.push(rec);
                    }
                }
                json!({
                    "covered": s.covered(),
                    "steps": s.steps.len(),
                    "failure": s.failure.as_ref().map(|(id, e)| json!({ "scc": id, "message": e.to_string() })),
                })
            })
            .collect();
        let combined = self.combination.as_ref().map_or(0, |r| r.kept + r.unknown + r.dropped);
        let dropped = self.combination.as_ref().map_or(0, |r| r.dropped);
        let mut j = catalog_json(project, &self.catalog, self.combination.as_ref());
        let obj = j.as_object_mut().expect("object");
        obj.remove("sccs");
        obj.insert(
            "sizes".into(),
            json!({ "base": base, "combined": combined, "dropped": dropped, "catalog": self.catalog.sccs.len() }),
        );
        obj.insert("sccs".into(), Json::Array(classes));
        obj.insert("sequences".into(), Json::Array(sequences));
        obj.insert("findings".into(), Json::Array(findings));
        obj.insert("failures".into(), Json::Array(failures));
        obj.insert("probes".into(), self.probes.iter().map(ProbeReport::to_json).collect());
        obj.insert("exit_code".into(), json!(self.outcome().exit_code()));
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::parse_criteria_file;

    const TOY: &str = "model Toy { state { n : nat; m : enum {ON, OFF}; } input nat; output nat; \
        ta = inf; dext { case m = ON -> (n + x, m); case m = OFF -> (n, ON); } dint { } lambda { } }";

    #[test]
    fn sizes_reconcile() {
        let p = Project::from_sources(TOY, Some("nat = 0..3;"), None).unwrap();
        let spec = CampaignSpec {
            criteria: parse_criteria_file("cases\nextensional:m", &p.model).unwrap(),
            plan: Some(CombinationPlan::all_pairs(&[1, 2, 3, 4], 100)),
            include_otherwise: false,
            probe_k: 3,
        };
        let r = run_campaign(&p, &spec).unwrap();
        let rep = r.report(&p);
        let sizes = &rep["sizes"];
        let n = |k: &str| sizes[k].as_u64().unwrap();
        assert_eq!(n("base") + n("combined") - n("dropped"), n("catalog"));
        assert_eq!(n("base"), 4);
        assert_eq!(rep["exit_code"], 0);
        assert_eq!(rep["probes"].as_array().unwrap().len(), n("catalog") as usize);
    }

    #[test]
    fn empty_selection() {
        let p = Project::from_sources(TOY, None, None).unwrap();
        let spec = CampaignSpec { criteria: vec![], plan: None, include_otherwise: false, probe_k: 0 };
        let r = run_campaign(&p, &spec).unwrap();
        assert_eq!(r.report(&p)["sizes"]["catalog"], 0);
        assert_eq!(r.outcome(), Outcome::Clean);
    }

    #[test]
    fn failures_outrank_findings() {
        assert_eq!([Outcome::Finding, Outcome::Failure, Outcome::Clean].into_iter().max().unwrap().exit_code(), 4);
    }
}
