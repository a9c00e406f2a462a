use std::fmt;

use super::cf::{cf_value, CFTerms};
use super::{ExtendedRational, TangleError};

/// A tangle built from the rational-tangle constructors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TangleExpr {
    /// `[n]`, a horizontal twist.
    Integer(i64),
    /// `[∞]`.
    Infinity,
    /// `1/[n]`, a vertical twist.
    Vertical(i64),
    Sum(Box<TangleExpr>, Box<TangleExpr>),
    Star(Box<TangleExpr>, Box<TangleExpr>),
    /// Quarter turn in the plane.
    Rot(Box<TangleExpr>),
    /// All crossings switched.
    Mirror(Box<TangleExpr>),
    /// Twist-form tangle given by its continued-fraction terms.
    CF(CFTerms),
}

impl TangleExpr {
    pub fn cf(terms: impl Into<Vec<i64>>) -> Self {
        Self::CF(CFTerms::new(terms))
    }

    pub fn sum(l: TangleExpr, r: TangleExpr) -> Self {
        Self::Sum(Box::new(l), Box::new(r))
    }

    pub fn star(l: TangleExpr, r: TangleExpr) -> Self {
        Self::Star(Box::new(l), Box::new(r))
    }

    pub fn rot(t: TangleExpr) -> Self {
        Self::Rot(Box::new(t))
    }

    pub fn mirror(t: TangleExpr) -> Self {
        Self::Mirror(Box::new(t))
    }

    /// `l - r`, shorthand for `l + mirror(r)`.
    pub fn difference(l: TangleExpr, r: TangleExpr) -> Self {
        Self::sum(l, Self::mirror(r))
    }

    /// Terms of the twist-form diagram when the expression is directly one
    /// (a CF list, an integer or vertical twist, `[∞]`, or a mirror of those).
    pub fn as_twist_form(&self) -> Option<CFTerms> {
        match self {
            TangleExpr::CF(t) => Some(t.clone()),
            TangleExpr::Integer(n) => Some(CFTerms::new(vec![*n])),
            TangleExpr::Vertical(n) => Some(CFTerms::new(vec![0, *n])),
            TangleExpr::Infinity => Some(CFTerms::default()),
            TangleExpr::Mirror(inner) => inner.as_twist_form().map(|t| t.mirror()),
            _ => None,
        }
    }

    /// Flattens nested sums left to right.
    pub fn summands(&self) -> Vec<&TangleExpr> {
        match self {
            TangleExpr::Sum(l, r) => {
                let mut v = l.summands();
                v.extend(r.summands());
                v
            }
            other => vec![other],
        }
    }
}

/// The fraction `F(T)`.
pub fn eval_fraction(expr: &TangleExpr) -> Result<ExtendedRational, TangleError> {
    match expr {
        TangleExpr::Integer(n) => Ok(ExtendedRational::integer(*n)),
        TangleExpr::Infinity => Ok(ExtendedRational::infinity()),
        TangleExpr::Vertical(n) => Ok(ExtendedRational::integer(*n).recip()),
        TangleExpr::Sum(l, r) => eval_fraction(l)?.checked_add(&eval_fraction(r)?),
        TangleExpr::Star(l, r) => {
            let inv = eval_fraction(l)?.recip().checked_add(&eval_fraction(r)?.recip())?;
            Ok(inv.recip())
        }
        TangleExpr::Rot(t) => Ok(eval_fraction(t)?.recip().neg()),
        TangleExpr::Mirror(t) => Ok(eval_fraction(t)?.neg()),
        TangleExpr::CF(t) => Ok(cf_value(t)),
    }
}

/// Conway's theorem: rational tangles are isotopic exactly when their
/// fractions agree. Expressions whose fraction is undefined are never
/// equivalent to anything.
pub fn tangles_equivalent(a: &TangleExpr, b: &TangleExpr) -> bool {
    match (eval_fraction(a), eval_fraction(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyName {
    /// `U(n) = N([[n+1]] - [[n]])`.
    U,
    /// `[n.m] = N([[n]] - [[m]])`.
    BracketPair,
    /// `K(n; T) = N(([[n+1]], T) - [[n]])`.
    K,
}

/// A knot or link given as a closure of a tangle, or as a named family.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum KnotSpecExpr {
    Numerator(TangleExpr),
    Denominator(TangleExpr),
    Family { name: FamilyName, params: Vec<i64>, payload: Option<CFTerms> },
}

impl KnotSpecExpr {
    pub fn unknot_challenge(n: i64) -> Self {
        Self::Family { name: FamilyName::U, params: vec![n], payload: None }
    }

    pub fn bracket_pair(n: i64, m: i64) -> Self {
        Self::Family { name: FamilyName::BracketPair, params: vec![n, m], payload: None }
    }

    pub fn complexified(n: i64, payload: CFTerms) -> Self {
        Self::Family { name: FamilyName::K, params: vec![n], payload: Some(payload) }
    }

    /// Replaces a family node by its defining closure; other closures are
    /// returned unchanged.
    pub fn expand(&self) -> Result<KnotSpecExpr, TangleError> {
        match self {
            KnotSpecExpr::Family { name, params, payload } => make_family(*name, params, payload.as_ref()),
            other => Ok(other.clone()),
        }
    }
}

fn ones(n: i64) -> Result<CFTerms, TangleError> {
    usize::try_from(n)
        .map(CFTerms::ones)
        .map_err(|_| TangleError::ParameterRange(format!("[[{n}]] needs n >= 0")))
}

/// Expands a family into its numerator-closure definition.
pub fn make_family(
    name: FamilyName,
    params: &[i64],
    payload: Option<&CFTerms>,
) -> Result<KnotSpecExpr, TangleError> {
    let closure = |left: CFTerms, right: CFTerms| {
        KnotSpecExpr::Numerator(TangleExpr::difference(TangleExpr::CF(left), TangleExpr::CF(right)))
    };
    match (name, params, payload) {
        (FamilyName::U, &[n], None) => {
            if n < 1 {
                return Err(TangleError::ParameterRange(format!("U({n}) needs n >= 1")));
            }
            Ok(closure(ones(n + 1)?, ones(n)?))
        }
        (FamilyName::BracketPair, &[n, m], None) => {
            if n < 0 || m < 0 {
                return Err(TangleError::ParameterRange(format!("[{n}.{m}] needs n, m >= 0")));
            }
            Ok(closure(ones(n)?, ones(m)?))
        }
        (FamilyName::K, &[n], Some(terms)) => {
            if n < 0 || terms.is_empty() {
                return Err(TangleError::ParameterRange(format!(
                    "K({n}; {terms}) needs n >= 0 and a non-empty payload"
                )));
            }
            Ok(closure(ones(n + 1)?.concat(terms), ones(n)?))
        }
        _ => Err(TangleError::ParameterRange(format!(
            "malformed family {name:?} with params {params:?}"
        ))),
    }
}

// Pretty-printing. The output is accepted by the parser and re-parses to the
// same tree.

fn write_sum(e: &TangleExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        TangleExpr::Sum(l, r) => {
            write_sum(l, f)?;
            match r.as_ref() {
                TangleExpr::Mirror(inner) => {
                    write!(f, "-")?;
                    write_prod(inner, f)
                }
                other => {
                    write!(f, "+")?;
                    write_prod(other, f)
                }
            }
        }
        TangleExpr::Mirror(inner) => {
            write!(f, "-")?;
            write_prod(inner, f)
        }
        other => write_prod(other, f),
    }
}

fn write_prod(e: &TangleExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        TangleExpr::Star(l, r) => {
            write_prod(l, f)?;
            write!(f, "*")?;
            write_atom(r, f)
        }
        other => write_atom(other, f),
    }
}

fn write_atom(e: &TangleExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        TangleExpr::Integer(n) => write!(f, "[{n}]"),
        TangleExpr::Infinity => write!(f, "[inf]"),
        TangleExpr::Vertical(n) => write!(f, "1/[{n}]"),
        TangleExpr::Rot(t) => {
            write!(f, "rot(")?;
            write_sum(t, f)?;
            write!(f, ")")
        }
        TangleExpr::CF(t) if t.is_empty() => write!(f, "[[0]]"),
        TangleExpr::CF(t) => write!(f, "{t}"),
        grouped => {
            write!(f, "(")?;
            write_sum(grouped, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for TangleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_sum(self, f)
    }
}

impl fmt::Display for KnotSpecExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnotSpecExpr::Numerator(t) => write!(f, "N({t})"),
            KnotSpecExpr::Denominator(t) => write!(f, "D({t})"),
            KnotSpecExpr::Family { name, params, payload } => match (name, params.as_slice(), payload) {
                (FamilyName::U, [n], _) => write!(f, "U({n})"),
                (FamilyName::BracketPair, [n, m], _) => write!(f, "[{n}.{m}]"),
                (FamilyName::K, [n], Some(t)) => write!(f, "K({n};{t})"),
                _ => write!(f, "<malformed {name:?} {params:?}>"),
            },
        }
    }
}
