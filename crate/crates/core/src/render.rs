//! Pretty-printing that the parser reads back to the same tree.

use std::fmt::{self, Write as _};

use crate::model::{BinOp, Expr, Model, Pred, SetRef, Sort, Value};

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Ite(..) => 0,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Const(Value::Num(r)) if *r < num_rational::Ratio::from_integer(0) => 3,
        _ => 4,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[Expr]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Bin(op, a, b) => {
                let p = expr_prec(self);
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::IntDiv => "div",
                };
                write_child(f, a, expr_prec(a) < p)?;
                write!(f, " {sym} ")?;
                // a negative literal is a factor, so it needs no parentheses on the right
                let rp = expr_prec(b);
                write_child(f, b, rp <= p && rp != 3)
            }
            Expr::Min(xs) => {
                write!(f, "min(")?;
                write_list(f, xs)?;
                write!(f, ")")
            }
            Expr::Max(xs) => {
                write!(f, "max(")?;
                write_list(f, xs)?;
                write!(f, ")")
            }
            Expr::Tuple(xs) => {
                write!(f, "(")?;
                write_list(f, xs)?;
                write!(f, ")")
            }
            Expr::Proj(a, i) => {
                write_child(f, a, expr_prec(a) < 4 || matches!(**a, Expr::Const(Value::Num(_))))?;
                write!(f, ".{i}")
            }
            Expr::Apply(name, xs) => {
                write!(f, "{name}(")?;
                write_list(f, xs)?;
                write!(f, ")")
            }
            Expr::Ite(c, a, b) => write!(f, "if {c} then {a} else {b}"),
        }
    }
}

fn pred_prec(p: &Pred) -> u8 {
    match p {
        Pred::Exists(..) => 0,
        Pred::Implies(..) => 1,
        Pred::Or(_) => 2,
        Pred::And(_) => 3,
        _ => 4,
    }
}

fn write_pred_child(f: &mut fmt::Formatter<'_>, p: &Pred, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({p})")
    } else {
        write!(f, "{p}")
    }
}

fn write_set(f: &mut fmt::Formatter<'_>, set: &SetRef) -> fmt::Result {
    match set {
        SetRef::Values(vals) => {
            write!(f, "{{")?;
            for (i, v) in vals.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "}}")
        }
        SetRef::Sort(s @ Sort::Extended(..)) => write!(f, "({s})"),
        SetRef::Sort(s) => write!(f, "{s}"),
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::True => write!(f, "true"),
            Pred::False => write!(f, "false"),
            Pred::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Pred::In(a, set) => {
                write!(f, "{a} in ")?;
                write_set(f, set)
            }
            Pred::Not(q) => {
                write!(f, "!")?;
                write_pred_child(f, q, !matches!(**q, Pred::True | Pred::False | Pred::Not(_)))
            }
            Pred::And(qs) | Pred::Or(qs) => {
                let me = pred_prec(self);
                let sym = if me == 3 { " & " } else { " | " };
                for (i, q) in qs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sym)?;
                    }
                    // nested chains keep their parentheses so the tree survives a round trip
                    write_pred_child(f, q, pred_prec(q) <= me)?;
                }
                Ok(())
            }
            Pred::Implies(a, b) => {
                write_pred_child(f, a, pred_prec(a) <= 1)?;
                write!(f, " => ")?;
                write_pred_child(f, b, pred_prec(b) <= 1)
            }
            Pred::Exists(vars, body) => write!(f, "exists {}: {body}", vars.join(", ")),
        }
    }
}

/// Renders a model in the DSL accepted by the parser.
pub fn render_model(m: &Model) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model {} {{", m.name);
    for c in &m.constants {
        let _ = write!(s, "  const {}", c.name);
        if let Some(sort) = &c.sort {
            let _ = write!(s, " : {sort}");
        }
        if let Some(v) = &c.value {
            let _ = write!(s, " = {v}");
        }
        s.push_str(";\n");
    }
    s.push_str("\n  state {\n");
    let mut open: Option<&str> = None;
    for v in &m.state.vars {
        if open != v.group.as_deref() {
            if open.is_some() {
                s.push_str("    }\n");
            }
            if let Some(g) = &v.group {
                let _ = writeln!(s, "    {g} {{");
            }
            open = v.group.as_deref();
        }
        let indent = if open.is_some() { "      " } else { "    " };
        let _ = write!(s, "{indent}{} : {}", v.name, v.sort);
        if v.time {
            s.push_str(" @time");
        }
        s.push_str(";\n");
    }
    if open.is_some() {
        s.push_str("    }\n");
    }
    s.push_str("  }\n\n");
    let _ = writeln!(s, "  input {};", m.input);
    let _ = writeln!(s, "  output {};", m.output);
    if !m.operators.is_empty() {
        s.push('\n');
    }
    for op in &m.operators {
        let _ = writeln!(s, "  op {}({}) = {};", op.name, op.params.join(", "), op.body);
    }
    let _ = writeln!(s, "\n  ta = {};", m.ta);
    for (kw, func) in [("dext", &m.dext), ("dint", &m.dint), ("lambda", &m.lambda)] {
        let _ = writeln!(s, "\n  {kw} {{");
        for (name, e) in &func.lets {
            let _ = writeln!(s, "    let {name} = {e};");
        }
        for c in &func.cases {
            if c.otherwise {
                let _ = writeln!(s, "    otherwise -> {};", c.result);
            } else {
                let _ = writeln!(s, "    case {} -> {};", c.guard, c.result);
            }
        }
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}
