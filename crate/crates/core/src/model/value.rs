use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, Zero};

/// Exact rational used for every numeric quantity, time included.
pub type Rational = num_rational::Ratio<i64>;

/// A runtime value. Numbers are exact; `Inf` is the top element of the
/// time domain and `Tau` is the artificial "no event" input marker.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Num(Rational),
    Inf,
    Lit(String),
    Tau,
    Tuple(Vec<Value>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Num(Rational::from_integer(n))
    }

    pub fn rat(n: i64, d: i64) -> Value {
        Value::Num(Rational::new(n, d))
    }

    pub fn lit(name: impl Into<String>) -> Value {
        Value::Lit(name.into())
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Num(_) | Value::Inf)
    }

    pub fn as_num(&self) -> Option<Rational> {
        match self {
            Value::Num(r) => Some(*r),
            _ => None,
        }
    }

    /// Numeric order with `Inf` as top. `None` when either side is not numeric.
    pub fn num_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => Some(a.cmp(b)),
            (Value::Num(_), Value::Inf) => Some(Ordering::Less),
            (Value::Inf, Value::Num(_)) => Some(Ordering::Greater),
            (Value::Inf, Value::Inf) => Some(Ordering::Equal),
            _ => None,
        }
    }
}

/// Renders a rational the way the DSL reads it back: integers plainly,
/// terminating fractions as decimals, anything else as `rat(n, d)`.
pub fn fmt_rational(r: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() {
        return write!(f, "{}", r.numer());
    }
    let mut den = *r.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return write!(f, "rat({}, {})", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scale = 10i64.pow(digits);
    let scaled = r * Rational::from_integer(scale);
    debug_assert!(scaled.is_integer());
    let n = scaled.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let (int_part, frac_part) = n.abs().div_rem(&scale);
    write!(f, "{sign}{int_part}.{frac:0width$}", frac = frac_part, width = digits as usize)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(r) => fmt_rational(r, f),
            Value::Inf => write!(f, "inf"),
            Value::Lit(name) => write!(f, "{name}"),
            Value::Tau => write!(f, "tau"),
            Value::Tuple(items) => {
                write!(f, "(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

pub(crate) fn is_nonneg(r: &Rational) -> bool {
    !r.is_negative() || r.is_zero()
}
