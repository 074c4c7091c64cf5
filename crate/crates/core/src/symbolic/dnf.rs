use crate::model::Pred;

/// A conjunction of literals; the empty clause is `true`.
pub type Clause = Vec<Pred>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("DNF of `{subformula}` exceeds {cap} clauses")]
pub struct DnfError {
    pub subformula: String,
    pub cap: usize,
}

pub const DEFAULT_DNF_CAP: usize = 4096;

/// Disjunctive normal form. Implications and negations of compound formulas
/// are eliminated; negated atoms stay as `!atom`. Quantified subformulas are
/// treated as atoms.
pub fn to_dnf(p: &Pred, cap: usize) -> Result<Vec<Clause>, DnfError> {
    let clauses = dnf_rec(p, false, cap)?;
    Ok(tidy(clauses))
}

/// Rebuilds a predicate from clauses.
pub fn from_dnf(clauses: &[Clause]) -> Pred {
    Pred::or(clauses.iter().map(|c| Pred::and(c.clone())).collect())
}

fn literal(p: &Pred, negated: bool) -> Vec<Clause> {
    let lit = if negated { Pred::Not(Box::new(p.clone())) } else { p.clone() };
    vec![vec![lit]]
}

fn dnf_rec(p: &Pred, neg: bool, cap: usize) -> Result<Vec<Clause>, DnfError> {
    match (p, neg) {
        (Pred::True, false) | (Pred::False, true) => Ok(vec![vec![]]),
        (Pred::True, true) | (Pred::False, false) => Ok(vec![]),
        (Pred::Not(q), _) => dnf_rec(q, !neg, cap),
        (Pred::And(qs), false) | (Pred::Or(qs), true) => {
            let mut acc: Vec<Clause> = vec![vec![]];
            for q in qs {
                let rhs = dnf_rec(q, neg, cap)?;
                if acc.len().saturating_mul(rhs.len()) > cap {
                    return Err(DnfError { subformula: p.to_string(), cap });
                }
                let mut next = Vec::with_capacity(acc.len() * rhs.len());
                for a in &acc {
                    for b in &rhs {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        (Pred::Or(qs), false) | (Pred::And(qs), true) => {
            let mut acc = Vec::new();
            for q in qs {
                acc.extend(dnf_rec(q, neg, cap)?);
                if acc.len() > cap {
                    return Err(DnfError { subformula: p.to_string(), cap });
                }
            }
            Ok(acc)
        }
        (Pred::Implies(a, b), false) => {
            let mut acc = dnf_rec(a, true, cap)?;
            acc.extend(dnf_rec(b, false, cap)?);
            if acc.len() > cap {
                return Err(DnfError { subformula: p.to_string(), cap });
            }
            Ok(acc)
        }
        (Pred::Implies(a, b), true) => {
            let conj = Pred::And(vec![(**a).clone(), Pred::Not(b.clone())]);
            dnf_rec(&conj, false, cap)
        }
        (Pred::Cmp(..) | Pred::In(..) | Pred::Exists(..), _) => Ok(literal(p, neg)),
    }
}

fn complement(a: &Pred, b: &Pred) -> bool {
    matches!(a, Pred::Not(x) if **x == *b) || matches!(b, Pred::Not(x) if **x == *a)
}

/// Drops repeated literals, contradictory clauses and repeated clauses.
fn tidy(clauses: Vec<Clause>) -> Vec<Clause> {
    let mut out: Vec<Clause> = Vec::new();
    'clauses: for c in clauses {
        let mut lits: Clause = Vec::with_capacity(c.len());
        for l in c {
            if lits.iter().any(|m| complement(m, &l)) {
                continue 'clauses;
            }
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        if lits.is_empty() {
            return vec![vec![]];
        }
        if !out.contains(&lits) {
            out.push(lits);
        }
    }
    out
}

/// Canonical form used for structural comparison: flattened, sorted and
/// deduplicated conjunctions and disjunctions, double negation removed.
pub fn normalize(p: &Pred) -> Pred {
    match p {
        Pred::True | Pred::False | Pred::Cmp(..) | Pred::In(..) => p.clone(),
        Pred::Not(q) => match normalize(q) {
            Pred::Not(inner) => *inner,
            Pred::True => Pred::False,
            Pred::False => Pred::True,
            n => Pred::Not(Box::new(n)),
        },
        Pred::And(qs) => assoc(qs, true),
        Pred::Or(qs) => assoc(qs, false),
        Pred::Implies(a, b) => Pred::Implies(Box::new(normalize(a)), Box::new(normalize(b))),
        Pred::Exists(vars, body) => {
            let mut vars = vars.clone();
            vars.sort();
            vars.dedup();
            match normalize(body) {
                b @ (Pred::True | Pred::False) => b,
                b => Pred::Exists(vars, Box::new(b)),
            }
        }
    }
}

fn assoc(qs: &[Pred], is_and: bool) -> Pred {
    let (unit, zero) = if is_and { (Pred::True, Pred::False) } else { (Pred::False, Pred::True) };
    let mut flat: Vec<Pred> = Vec::new();
    let mut stack: Vec<Pred> = qs.iter().rev().cloned().collect();
    while let Some(q) = stack.pop() {
        let n = normalize(&q);
        match n {
            Pred::And(inner) if is_and => flat.extend(inner),
            Pred::Or(inner) if !is_and => flat.extend(inner),
            n if n == unit => {}
            n if n == zero => return zero,
            n => flat.push(n),
        }
    }
    let mut keyed: Vec<(String, Pred)> = flat.into_iter().map(|q| (q.to_string(), q)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let mut items: Vec<Pred> = keyed.into_iter().map(|(_, q)| q).collect();
    match items.len() {
        0 => unit,
        1 => items.pop().unwrap(),
        _ if is_and => Pred::And(items),
        _ => Pred::Or(items),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_pred;

    fn p(s: &str) -> Pred {
        parse_pred(s, None, &[]).unwrap()
    }

    fn render(cs: &[Clause]) -> Vec<String> {
        cs.iter().map(|c| Pred::and(c.clone()).to_string()).collect()
    }

    #[test]
    fn implication() {
        let cs = to_dnf(&p("n * m > 0 => n > m"), DEFAULT_DNF_CAP).unwrap();
        assert_eq!(render(&cs), vec!["!(n * m > 0)", "n > m"]);
    }

    #[test]
    fn negated_conjunction() {
        let cs = to_dnf(&p("!(a = 1 & (b = 1 | c = 1))"), DEFAULT_DNF_CAP).unwrap();
        assert_eq!(render(&cs), vec!["!(a = 1)", "!(b = 1) & !(c = 1)"]);
    }

    #[test]
    fn contradictions_and_constants() {
        assert_eq!(to_dnf(&p("a = 1 & !(a = 1)"), 10).unwrap(), Vec::<Clause>::new());
        assert_eq!(to_dnf(&p("a = 1 | true"), 10).unwrap(), vec![Vec::<Pred>::new()]);
        assert_eq!(to_dnf(&Pred::False, 10).unwrap(), Vec::<Clause>::new());
    }

    #[test]
    fn cap_names_the_formula() {
        let big = p("(a = 1 | a = 2) & (b = 1 | b = 2) & (c = 1 | c = 2)");
        let err = to_dnf(&big, 4).unwrap_err();
        assert_eq!(err.cap, 4);
        assert!(err.subformula.contains("c = 2"));
    }

    #[test]
    fn normalize_is_order_free() {
        let a = normalize(&p("(m = ON & n <= 10) & true"));
        let b = normalize(&p("n <= 10 & (m = ON & m = ON)"));
        assert_eq!(a, b);
        assert_eq!(normalize(&p("!!(a = 1)")), p("a = 1"));
        assert_eq!(normalize(&p("a = 1 & false")), Pred::False);
    }
}
