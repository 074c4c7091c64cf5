use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{Env, EvalContext, EvalError, Model, Pred, Value};

use super::dnf::{normalize, to_dnf, Clause};
use super::universe::Universe;

/// Mixed components whose free variables span more assignments than this
/// are kept as `exists` rather than decided.
const MAX_PROJECTION_ASSIGNMENTS: usize = 4096;

/// A satisfying assignment, in declared variable order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub vars: Vec<(String, Value)>,
}

impl Witness {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn env(&self) -> Env {
        let mut env = Env::new();
        for (n, v) in &self.vars {
            env.push(n, v.clone());
        }
        env
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, v)) in self.vars.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n} = {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Witness),
    Unsat,
    /// The evaluation budget ran out before a witness or refutation was found.
    Unknown,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn witness(self) -> Option<Witness> {
        match self {
            SatResult::Sat(w) => Some(w),
            _ => None,
        }
    }
}

/// Result of eliminating variables from a predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    pub pred: Pred,
    /// Some component could not be decided within the budget.
    pub unknown: bool,
}

enum Outcome {
    Found(Vec<usize>),
    None,
    OutOfBudget,
}

/// Bounded decision procedure over a [`Universe`].
pub struct Solver<'a> {
    pub universe: &'a Universe,
    pub ctx: EvalContext<'a>,
    spent: Cell<u64>,
}

impl<'a> Solver<'a> {
    pub fn new(model: &'a Model, universe: &'a Universe) -> Result<Solver<'a>, EvalError> {
        let ctx = EvalContext::new(model, &universe.consts)?.with_domains(universe);
        Ok(Solver { universe, ctx, spent: Cell::new(0) })
    }

    /// Evaluations used by the last top-level query.
    pub fn spent(&self) -> u64 {
        self.spent.get()
    }

    /// Truth under `env`; evaluation errors count as false.
    pub fn holds(&self, p: &Pred, env: &Env) -> bool {
        self.ctx.holds(p, env, &[]).unwrap_or(false)
    }

    /// Free names of `p` that are not constants, in declared order.
    pub fn search_vars(&self, p: &Pred) -> Vec<String> {
        let mut vs: Vec<String> = p.free_vars().into_iter().filter(|v| self.ctx.constant(v).is_none()).collect();
        self.universe.sort_vars(&mut vs);
        vs
    }

    fn clauses(&self, p: &Pred) -> Vec<Clause> {
        match to_dnf(p, self.universe.dnf_cap) {
            Ok(cs) => cs,
            Err(_) => vec![vec![p.clone()]],
        }
    }

    fn all_vars(&self, p: &Pred, want: &[String]) -> Vec<String> {
        let mut set: BTreeSet<String> = self.search_vars(p).into_iter().collect();
        set.extend(want.iter().filter(|v| self.ctx.constant(v).is_none()).cloned());
        let mut vs: Vec<String> = set.into_iter().collect();
        self.universe.sort_vars(&mut vs);
        vs
    }

    fn witness(&self, vars: &[String], idx: &[usize]) -> Witness {
        Witness {
            vars: vars.iter().zip(idx).map(|(v, &i)| (v.clone(), self.universe.domain_of(v)[i].clone())).collect(),
        }
    }

    /// Lexicographically least witness over the free variables of `p` plus
    /// `want`, comparing domain positions in declared order.
    pub fn sat(&self, p: &Pred, want: &[String]) -> SatResult {
        self.spent.set(0);
        let vars = self.all_vars(p, want);
        if vars.iter().any(|v| self.universe.domain_of(v).is_empty()) {
            return SatResult::Unsat;
        }
        let mut best: Option<Vec<usize>> = None;
        let mut unknown = false;
        'clauses: for clause in self.clauses(p) {
            let mut idx = vec![0usize; vars.len()];
            for comp in self.components(&clause, &vars) {
                let cvars: Vec<String> = comp.1.iter().map(|&i| vars[i].clone()).collect();
                match self.search(&comp.0, &cvars, &Env::new(), None) {
                    Outcome::Found(found) => {
                        for (k, &i) in comp.1.iter().enumerate() {
                            idx[i] = found[k];
                        }
                    }
                    Outcome::None => continue 'clauses,
                    Outcome::OutOfBudget => {
                        unknown = true;
                        continue 'clauses;
                    }
                }
            }
            if best.as_ref().is_none_or(|b| idx < *b) {
                best = Some(idx);
            }
        }
        match best {
            Some(idx) => SatResult::Sat(self.witness(&vars, &idx)),
            None if unknown => SatResult::Unknown,
            None => SatResult::Unsat,
        }
    }

    /// Least witness of `p` over `vars` (which must cover its free names)
    /// whose domain positions are not below `start`. Components are not
    /// split so the search order is exactly lexicographic.
    pub fn sat_from(&self, p: &Pred, vars: &[String], start: &[usize]) -> SatResult {
        self.spent.set(0);
        let mut unknown = false;
        let mut best: Option<Vec<usize>> = None;
        for clause in self.clauses(p) {
            match self.search(&clause, vars, &Env::new(), Some(start)) {
                Outcome::Found(idx) => {
                    if best.as_ref().is_none_or(|b| idx < *b) {
                        best = Some(idx);
                    }
                }
                Outcome::None => {}
                Outcome::OutOfBudget => unknown = true,
            }
        }
        match best {
            Some(idx) => SatResult::Sat(self.witness(vars, &idx)),
            None if unknown => SatResult::Unknown,
            None => SatResult::Unsat,
        }
    }

    /// Splits a clause into groups of literals connected through shared
    /// variables among `vars`. Each group comes
    /// with the positions (into `vars`) of its variables. Variables no literal
    /// mentions end up in singleton groups with no literals.
    fn components(&self, clause: &[Pred], vars: &[String]) -> Vec<(Vec<Pred>, Vec<usize>)> {
        let pos: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut parent: Vec<usize> = (0..vars.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let lit_vars: Vec<Vec<usize>> = clause
            .iter()
            .map(|l| l.free_vars().iter().filter_map(|v| pos.get(v.as_str()).copied()).collect())
            .collect();
        for vs in &lit_vars {
            for w in vs.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, (Vec<Pred>, Vec<usize>)> = BTreeMap::new();
        let mut closed: Vec<Pred> = Vec::new();
        for (l, vs) in clause.iter().zip(&lit_vars) {
            match vs.first() {
                Some(&v) => {
                    let r = find(&mut parent, v);
                    groups.entry(r).or_default().0.push(l.clone());
                }
                None => closed.push(l.clone()),
            }
        }
        for i in 0..vars.len() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().1.push(i);
        }
        let mut out: Vec<(Vec<Pred>, Vec<usize>)> = groups.into_values().collect();
        if !closed.is_empty() {
            out.push((closed, vec![]));
        }
        out
    }

    fn charge(&self) -> bool {
        let n = self.spent.get() + 1;
        self.spent.set(n);
        n <= self.universe.budget
    }

    /// Backtracking over `vars` in order; each literal is checked as soon as
    /// its last variable is assigned.
    fn search(&self, lits: &[Pred], vars: &[String], base: &Env, start: Option<&[usize]>) -> Outcome {
        let mut at_level: Vec<Vec<&Pred>> = vec![Vec::new(); vars.len() + 1];
        for l in lits {
            let level =
                l.free_vars().iter().filter_map(|v| vars.iter().position(|w| w == v)).map(|i| i + 1).max().unwrap_or(0);
            at_level[level].push(l);
        }
        let mut env = base.clone();
        for l in &at_level[0] {
            if !self.charge() {
                return Outcome::OutOfBudget;
            }
            if !self.holds(l, &env) {
                return Outcome::None;
            }
        }
        let domains: Vec<&[Value]> = vars.iter().map(|v| self.universe.domain_of(v)).collect();
        let mut idx = vec![0usize; vars.len()];
        match self.descend(0, vars, &domains, &at_level, &mut env, &mut idx, start) {
            Some(true) => Outcome::Found(idx),
            Some(false) => Outcome::None,
            None => Outcome::OutOfBudget,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        depth: usize,
        vars: &[String],
        domains: &[&[Value]],
        at_level: &[Vec<&Pred>],
        env: &mut Env,
        idx: &mut [usize],
        start: Option<&[usize]>,
    ) -> Option<bool> {
        if depth == vars.len() {
            return Some(true);
        }
        let from = start.map_or(0, |s| s.get(depth).copied().unwrap_or(0));
        'values: for i in from..domains[depth].len() {
            env.push(&vars[depth], domains[depth][i].clone());
            for l in &at_level[depth + 1] {
                if !self.charge() {
                    return None;
                }
                if !self.holds(l, env) {
                    env.pop();
                    continue 'values;
                }
            }
            idx[depth] = i;
            let tight = if i == from { start } else { None };
            let r = self.descend(depth + 1, vars, domains, at_level, env, idx, tight);
            env.pop();
            match r {
                Some(false) => {}
                other => return other,
            }
        }
        Some(false)
    }

    /// Eliminates `drop` from `p` by bounded existential quantification.
    /// Components that are valid or closed and satisfiable vanish, unsatisfiable
    /// ones falsify their clause, and the rest stay as `exists`.
    pub fn project_exists(&self, p: &Pred, drop: &[String]) -> Projection {
        self.spent.set(0);
        let mut unknown = false;
        let mut out: Vec<Pred> = Vec::new();
        'clauses: for clause in self.clauses(p) {
            let mut kept: Vec<Pred> = Vec::new();
            let mut touching: Vec<Pred> = Vec::new();
            for l in clause {
                let vs = self.search_vars(&l);
                if vs.is_empty() {
                    if !self.holds(&l, &Env::new()) {
                        continue 'clauses;
                    }
                } else if vs.iter().any(|v| drop.contains(v)) {
                    touching.push(l);
                } else {
                    kept.push(l);
                }
            }
            // Connect literals through dropped variables only.
            let dvars: Vec<String> = {
                let mut s: BTreeSet<String> = BTreeSet::new();
                for l in &touching {
                    s.extend(self.search_vars(l).into_iter().filter(|v| drop.contains(v)));
                }
                let mut v: Vec<String> = s.into_iter().collect();
                self.universe.sort_vars(&mut v);
                v
            };
            for (lits, pos) in self.components(&touching, &dvars) {
                if lits.is_empty() {
                    continue;
                }
                let bound: Vec<String> = pos.iter().map(|&i| dvars[i].clone()).collect();
                match self.decide_component(&lits, &bound) {
                    Decision::Valid => {}
                    Decision::Never => continue 'clauses,
                    Decision::Keep(undecided) => {
                        unknown |= undecided;
                        let mut b = bound.clone();
                        b.sort();
                        kept.push(Pred::Exists(b, Box::new(Pred::and(lits))));
                    }
                }
            }
            out.push(Pred::and(kept));
        }
        Projection { pred: normalize(&Pred::or(out)), unknown }
    }

    fn decide_component(&self, lits: &[Pred], bound: &[String]) -> Decision {
        let mut free: BTreeSet<String> = BTreeSet::new();
        for l in lits {
            free.extend(self.search_vars(l).into_iter().filter(|v| !bound.contains(v)));
        }
        let mut free: Vec<String> = free.into_iter().collect();
        self.universe.sort_vars(&mut free);
        let domains: Vec<&[Value]> = free.iter().map(|v| self.universe.domain_of(v)).collect();
        let total = domains.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.len()));
        match total {
            Some(0) => return Decision::Never,
            Some(n) if n <= MAX_PROJECTION_ASSIGNMENTS => {}
            _ => return Decision::Keep(false),
        }
        let (mut some, mut all) = (false, true);
        let mut idx = vec![0usize; free.len()];
        loop {
            let mut env = Env::new();
            for (k, v) in free.iter().enumerate() {
                env.push(v, domains[k][idx[k]].clone());
            }
            match self.search(lits, bound, &env, None) {
                Outcome::Found(_) => some = true,
                Outcome::None => all = false,
                Outcome::OutOfBudget => return Decision::Keep(true),
            }
            if some && !all {
                return Decision::Keep(false);
            }
            // Mixed-radix increment, last variable fastest.
            let mut k = free.len();
            loop {
                if k == 0 {
                    return if all { Decision::Valid } else { Decision::Never };
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
}

enum Decision {
    Valid,
    Never,
    /// Depends on the free variables; the flag marks a budget cutoff.
    Keep(bool),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_bounds, parse_model, parse_pred};

    const TOY: &str = "model Toy { state { n : nat; m : enum {ON, OFF}; } input nat; output nat; \
        ta = inf; dext { case m = ON -> (n + x, m); case m = OFF -> (n, ON); } dint { } lambda { } }";

    fn setup(bounds: &str) -> (Model, Universe) {
        let m = parse_model(TOY).unwrap();
        let u = Universe::new(&m, &parse_bounds(bounds).unwrap()).unwrap();
        (m, u)
    }

    #[test]
    fn contradiction_is_unsat() {
        let (m, u) = setup("");
        let s = Solver::new(&m, &u).unwrap();
        let p = parse_pred("m = ON & m = OFF", Some(&m), &[]).unwrap();
        assert_eq!(s.sat(&p, &[]), SatResult::Unsat);
    }

    #[test]
    fn least_witness() {
        let (m, u) = setup("nat = 0..20;");
        let s = Solver::new(&m, &u).unwrap();
        let p = parse_pred("n <= 10 & m = ON", Some(&m), &[]).unwrap();
        let w = s.sat(&p, &[]).witness().unwrap();
        assert_eq!(w.to_string(), "n = 0, m = ON");
        let p = parse_pred("n > 3 & m = OFF | n = 2", Some(&m), &[]).unwrap();
        let w = s.sat(&p, &["x".to_string()]).witness().unwrap();
        assert_eq!(w.to_string(), "n = 2, m = ON, x = 0");
    }

    #[test]
    fn start_position_moves_witness() {
        let (m, u) = setup("nat = 0..5;");
        let s = Solver::new(&m, &u).unwrap();
        let p = parse_pred("n >= 1", Some(&m), &[]).unwrap();
        let vars = vec!["n".to_string(), "m".to_string()];
        let w = s.sat_from(&p, &vars, &[3, 1]).witness().unwrap();
        assert_eq!(w.to_string(), "n = 3, m = OFF");
        let w = s.sat_from(&p, &vars, &[5, 2]).witness();
        assert!(w.is_none());
    }

    #[test]
    fn projection_cases() {
        let (m, u) = setup("nat = 0..4;");
        let s = Solver::new(&m, &u).unwrap();
        let drop = vec!["x".to_string()];
        let p = parse_pred("m = ON & x in nat", Some(&m), &[]).unwrap();
        assert_eq!(s.project_exists(&p, &drop).pred.to_string(), "m = ON");
        let p = parse_pred("m = ON & x > n", Some(&m), &[]).unwrap();
        assert_eq!(s.project_exists(&p, &drop).pred.to_string(), "(exists x: x > n) & m = ON");
        let p = parse_pred("m = ON & x >= n", Some(&m), &[]).unwrap();
        assert_eq!(s.project_exists(&p, &drop).pred.to_string(), "m = ON");
        let p = parse_pred("m = ON & x > 9", Some(&m), &[]).unwrap();
        assert_eq!(s.project_exists(&p, &drop).pred, Pred::False);
    }

    #[test]
    fn budget_exhaustion_is_unknown() {
        let (m, mut u) = setup("nat = 0..50;");
        u.budget = 10;
        let s = Solver::new(&m, &u).unwrap();
        let p = parse_pred("n = 49", Some(&m), &[]).unwrap();
        assert_eq!(s.sat(&p, &[]), SatResult::Unknown);
    }
}
