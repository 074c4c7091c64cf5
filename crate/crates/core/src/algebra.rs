//! Combining classes by intersection and pruning the empty results.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{Provenance, Scc};
use crate::model::{Model, Pred};
use crate::symbolic::{normalize, SatResult, Solver, Universe};

pub const DEFAULT_MAX_ARITY: usize = 2;
pub const DEFAULT_PLAN_BUDGET: usize = 10_000;

/// Which base classes to intersect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinationPlan {
    pub groups: Vec<Vec<u32>>,
    #[serde(default = "default_arity")]
    pub max_arity: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_arity() -> usize {
    DEFAULT_MAX_ARITY
}

fn default_budget() -> usize {
    DEFAULT_PLAN_BUDGET
}

impl CombinationPlan {
    pub fn new(groups: Vec<Vec<u32>>) -> CombinationPlan {
        let max_arity = groups.iter().map(Vec::len).max().unwrap_or(2).max(2);
        CombinationPlan { groups, max_arity, budget: DEFAULT_PLAN_BUDGET }
    }

    /// Every pair among `ids`, in ascending order, up to `budget` pairs.
    pub fn all_pairs(ids: &[u32], budget: usize) -> CombinationPlan {
        let mut groups = Vec::new();
        'outer: for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                if groups.len() == budget {
                    break 'outer;
                }
                groups.push(vec![*a, *b]);
            }
        }
        CombinationPlan { groups, max_arity: 2, budget }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("plan max_arity must be at least 2, got {0}")]
    Arity(usize),
    #[error("group {0:?} needs between 2 and {1} distinct classes")]
    GroupSize(Vec<u32>, usize),
    #[error("group {0:?} names unknown class {1}")]
    UnknownId(Vec<u32>, u32),
}

/// Base classes a class descends from.
pub fn ancestry(s: &Scc) -> Vec<u32> {
    if s.combined_from.is_empty() {
        vec![s.id]
    } else {
        s.combined_from.clone()
    }
}

fn conj(a: &Pred, b: &Pred) -> Pred {
    normalize(&Pred::And(vec![a.clone(), b.clone()]))
}

/// Conjunction of both state sets and both pair sets.
pub fn intersect(a: &Scc, b: &Scc) -> Scc {
    let mut from = ancestry(a);
    from.extend(ancestry(b));
    from.sort_unstable();
    from.dedup();
    let link = match (&a.link, &b.link) {
        (Some(x), Some(y)) => Some(conj(x, y)),
        (Some(x), None) | (None, Some(x)) => Some(normalize(x)),
        (None, None) => None,
    };
    Scc {
        id: 0,
        ini_st: conj(&a.ini_st, &b.ini_st),
        in_pairs: conj(&a.in_pairs, &b.in_pairs),
        link,
        provenance: Provenance {
            criterion: "combined".into(),
            target: from.iter().map(u32::to_string).collect::<Vec<_>>().join(" & "),
        },
        combined_from: from,
        notes: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Kept,
    Dropped,
    /// Kept because emptiness could not be decided within the budget.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupOutcome {
    pub group: Vec<u32>,
    pub status: Status,
    /// Id given to the combined class when it is kept.
    pub id: Option<u32>,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CombineReport {
    pub kept: usize,
    pub dropped: usize,
    pub unknown: usize,
    /// Groups beyond the plan budget that were not attempted.
    pub skipped: usize,
    pub groups: Vec<GroupOutcome>,
}

fn emptiness(solver: &Solver, s: &Scc) -> (Status, Option<String>) {
    let mut unknown = false;
    for (what, p) in [("initial states", &s.ini_st), ("input pairs", &s.in_pairs)] {
        match solver.sat(p, &[]) {
            SatResult::Unsat => return (Status::Dropped, Some(format!("{what} empty within bounds"))),
            SatResult::Unknown => unknown = true,
            SatResult::Sat(_) => {}
        }
    }
    if unknown {
        (Status::Unknown, Some("emptiness undecided within budget".into()))
    } else {
        (Status::Kept, None)
    }
}

/// Intersects each planned group and keeps the non-empty results. The
/// returned catalog holds every base class followed by the kept
/// combinations, numbered after the largest base id.
pub fn combine_and_prune(
    model: &Model,
    universe: &Universe,
    base: &[Scc],
    plan: &CombinationPlan,
) -> Result<(Vec<Scc>, CombineReport), AlgebraError> {
    if plan.max_arity < 2 {
        return Err(AlgebraError::Arity(plan.max_arity));
    }
    let by_id: BTreeMap<u32, &Scc> = base.iter().map(|s| (s.id, s)).collect();
    for g in &plan.groups {
        let mut distinct = g.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 || distinct.len() > plan.max_arity || distinct.len() != g.len() {
            return Err(AlgebraError::GroupSize(g.clone(), plan.max_arity));
        }
        if let Some(missing) = g.iter().find(|id| !by_id.contains_key(id)) {
            return Err(AlgebraError::UnknownId(g.clone(), *missing));
        }
    }
    let attempted = &plan.groups[..plan.groups.len().min(plan.budget)];
    let results: Vec<(Scc, Status, Option<String>)> = attempted
        .par_iter()
        .map_init(
            || Solver::new(model, universe).ok(),
            |solver, g| {
                let mut acc = by_id[&g[0]].clone();
                for id in &g[1..] {
                    acc = intersect(&acc, by_id[id]);
                }
                let (status, reason) = match solver {
                    Some(s) => emptiness(s, &acc),
                    None => (Status::Unknown, Some("constants do not evaluate".into())),
                };
                (acc, status, reason)
            },
        )
        .collect();
    let mut next = base.iter().map(|s| s.id).max().unwrap_or(0) + 1;
    let mut out: Vec<Scc> = base.to_vec();
    let mut report = CombineReport { skipped: plan.groups.len() - attempted.len(), ..Default::default() };
    for ((mut scc, status, reason), g) in results.into_iter().zip(attempted) {
        let id = match status {
            Status::Dropped => {
                report.dropped += 1;
                None
            }
            Status::Kept | Status::Unknown => {
                if status == Status::Unknown {
                    report.unknown += 1;
                    scc.notes.push(reason.clone().unwrap_or_default());
                } else {
                    report.kept += 1;
                }
                scc.id = next;
                next += 1;
                out.push(scc);
                Some(next - 1)
            }
        };
        report.groups.push(GroupOutcome { group: g.clone(), status, id, reason });
    }
    Ok((out, report))
}
