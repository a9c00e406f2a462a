use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::cf::{box_compose, cf_value, reverse_terms, simplify_terms, CFTerms};
use super::expr::{eval_fraction, KnotSpecExpr, TangleExpr};
use super::{ExtendedRational, TangleError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum KnotTag {
    Unknot,
    TwoBridgeKnot,
    TwoComponentLink,
    NonRationalClosure,
}

/// Classification of a closure by its determinant-form fraction `p/q`,
/// normalised so that `p >= 0` (for `∞`, `p = 1` and `q = 0`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KnotClass {
    pub p: BigInt,
    pub q: BigInt,
    pub tag: KnotTag,
}

impl KnotClass {
    pub fn fraction(&self) -> ExtendedRational {
        ExtendedRational::new(self.p.clone(), self.q.clone()).expect("p and q never both zero")
    }
}

impl fmt::Display for KnotClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}/{}", self.tag, self.p, self.q)
    }
}

/// Whether mirror images count as the same knot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Chirality {
    #[default]
    Insensitive,
    Sensitive,
}

fn determinant_form(f: &ExtendedRational) -> (BigInt, BigInt) {
    if f.is_infinite() {
        return (BigInt::one(), BigInt::zero());
    }
    if f.numer().is_negative() {
        (-f.numer().clone(), -f.denom().clone())
    } else {
        (f.numer().clone(), f.denom().clone())
    }
}

/// Schubert-style classification of the numerator closure of a rational
/// tangle with fraction `f`.
pub fn classify_two_bridge(f: &ExtendedRational) -> KnotClass {
    let (p, q) = determinant_form(f);
    let tag = if p.is_one() {
        KnotTag::Unknot
    } else if p.is_even() {
        KnotTag::TwoComponentLink
    } else {
        KnotTag::TwoBridgeKnot
    };
    KnotClass { p, q, tag }
}

/// `N(p/q) ≅ N(p'/q')` iff `p = p'` and `q' ≡ q^{±1} (mod p)`, with the
/// extra sign `q' ≡ -q^{±1}` allowed when chirality is ignored.
pub fn equivalent(f1: &ExtendedRational, f2: &ExtendedRational) -> bool {
    equivalent_with(f1, f2, Chirality::Insensitive)
}

pub fn equivalent_with(f1: &ExtendedRational, f2: &ExtendedRational, chirality: Chirality) -> bool {
    let (p1, q1) = determinant_form(f1);
    let (p2, q2) = determinant_form(f2);
    if p1 != p2 {
        return false;
    }
    if p1.is_zero() {
        return true;
    }
    let p = &p1;
    let a = q1.mod_floor(p);
    let b = q2.mod_floor(p);
    let ab = (&a * &b).mod_floor(p);
    let one = BigInt::one().mod_floor(p);
    let minus_one = (p - BigInt::one()).mod_floor(p);
    let minus_a = (-&a).mod_floor(p);
    let direct = b == a || ab == one;
    match chirality {
        Chirality::Sensitive => direct,
        Chirality::Insensitive => direct || b == minus_a || ab == minus_one,
    }
}

/// Outcome of reducing a closure: a zero-free term list whose numerator
/// closure is isotopic to the input, and its classification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub terms: CFTerms,
    pub class: KnotClass,
}

fn twist_form(t: &TangleExpr) -> Result<CFTerms, TangleError> {
    t.as_twist_form()
        .ok_or_else(|| TangleError::NonRationalClosure(format!("{t} is not a continued-fraction tangle")))
}

/// Merges integer summands into a neighbouring twist-form summand. Integer
/// tangles slide freely around a numerator closure.
fn absorb_integers(summands: &[&TangleExpr]) -> Result<Vec<CFTerms>, TangleError> {
    let mut shift: i64 = 0;
    let mut rest = Vec::new();
    for s in summands {
        match s {
            TangleExpr::Integer(n) => {
                shift = shift.checked_add(*n).ok_or_else(|| TangleError::Overflow(format!("{shift} + {n}")))?;
            }
            TangleExpr::Mirror(inner) if matches!(inner.as_ref(), TangleExpr::Integer(_)) => {
                let TangleExpr::Integer(n) = inner.as_ref() else { unreachable!() };
                shift = shift.checked_sub(*n).ok_or_else(|| TangleError::Overflow(format!("{shift} - {n}")))?;
            }
            other => rest.push(twist_form(other)?),
        }
    }
    if shift != 0 || rest.is_empty() {
        match rest.iter_mut().find(|t| !t.is_empty()) {
            Some(t) => {
                t.0[0] = t.0[0].checked_add(shift).ok_or_else(|| TangleError::Overflow(format!("{} + {shift}", t.0[0])))?;
            }
            None => rest.push(CFTerms::new(vec![shift])),
        }
    }
    Ok(rest)
}

/// Terms of a tangle whose numerator closure is the denominator closure of
/// `t`: `D(T) = N(T^rot)` and `F(T^rot) = -1/F(T) = (0, -a1, …, -an)`.
fn rotated(t: &CFTerms) -> CFTerms {
    let mut v = vec![0];
    v.extend(t.0.iter().map(|a| -a));
    CFTerms(v)
}

/// Simplifies with the value-preserving rules, then clears a leading zero by
/// reversal (which fixes the numerator closure).
fn zero_free(t: &CFTerms) -> Result<CFTerms, TangleError> {
    let mut t = simplify_terms(t)?;
    if t.len() > 1 && t.0[0] == 0 {
        t = simplify_terms(&reverse_terms(&t))?;
    }
    Ok(t)
}

/// Collapses a closure to a zero-free continued fraction and classifies it.
///
/// Supported shapes: numerator or denominator closures of a twist-form
/// tangle, of a sum of two twist-form tangles (with any number of integer
/// summands), and the named families. Sums of three or more non-integer
/// summands are reported as [`KnotTag::NonRationalClosure`] with the fraction
/// sum as their determinant-form fraction.
pub fn reduce_closure(expr: &KnotSpecExpr) -> Result<Reduction, TangleError> {
    let (tangle, denominator) = match expr.expand()? {
        KnotSpecExpr::Numerator(t) => (t, false),
        KnotSpecExpr::Denominator(t) => (t, true),
        KnotSpecExpr::Family { .. } => unreachable!("expand removes families"),
    };
    let summands = absorb_integers(&tangle.summands())?;
    let combined = match summands.as_slice() {
        [t] => t.clone(),
        [t, s] if denominator => {
            return Err(TangleError::NonRationalClosure(format!(
                "denominator closure of the sum {t} + {s}"
            )))
        }
        [t, s] => match (t.is_empty(), s.is_empty()) {
            // N(X + [∞]) = D(X)
            (false, true) => rotated(t),
            (true, false) => rotated(s),
            (true, true) => CFTerms::new(vec![0]),
            (false, false) => box_compose(t, s)?,
        },
        many => {
            let mut f = ExtendedRational::zero();
            for t in many {
                f = f.checked_add(&cf_value(t))?;
            }
            let (p, q) = determinant_form(&f);
            return Ok(Reduction {
                terms: CFTerms::default(),
                class: KnotClass { p, q, tag: KnotTag::NonRationalClosure },
            });
        }
    };
    let combined = if denominator { rotated(&combined) } else { combined };
    let terms = zero_free(&combined)?;
    let class = classify_two_bridge(&cf_value(&terms));
    Ok(Reduction { terms, class })
}

/// Fraction of the rational tangle inside a closure, when it has one.
pub fn closure_fraction(expr: &KnotSpecExpr) -> Result<ExtendedRational, TangleError> {
    match expr.expand()? {
        KnotSpecExpr::Numerator(t) => eval_fraction(&t),
        KnotSpecExpr::Denominator(t) => Ok(eval_fraction(&t)?.recip().neg()),
        KnotSpecExpr::Family { .. } => unreachable!("expand removes families"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tangle::parse::parse_closure;

    fn q(n: i64, d: i64) -> ExtendedRational {
        ExtendedRational::new(n, d).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_two_bridge(&ExtendedRational::infinity()).tag, KnotTag::Unknot);
        assert_eq!(classify_two_bridge(&q(-1, 2)).tag, KnotTag::Unknot);
        assert_eq!(classify_two_bridge(&q(0, 1)).tag, KnotTag::TwoComponentLink);
        assert_eq!(classify_two_bridge(&q(4, 1)).tag, KnotTag::TwoComponentLink);
        let c = classify_two_bridge(&q(-7, 5));
        assert_eq!((c.p.clone(), c.q.clone(), c.tag), (BigInt::from(7), BigInt::from(-5), KnotTag::TwoBridgeKnot));
    }

    #[test]
    fn schubert_equivalence() {
        assert!(equivalent(&q(30, 13), &q(30, 7)));
        assert!(equivalent(&q(5, 2), &q(5, 3)));
        assert!(equivalent_with(&q(5, 2), &q(5, 3), Chirality::Sensitive));
        // trefoil and its mirror
        assert!(equivalent(&q(3, 1), &q(3, 2)));
        assert!(!equivalent_with(&q(3, 1), &q(3, 2), Chirality::Sensitive));
        assert!(!equivalent(&q(5, 1), &q(5, 2)));
        assert!(!equivalent(&q(7, 1), &q(9, 1)));
        assert!(equivalent(&ExtendedRational::infinity(), &q(1, 5)));
    }

    #[test]
    fn bracket_pair_collapses() {
        let r = reduce_closure(&KnotSpecExpr::bracket_pair(7, 3)).unwrap();
        assert_eq!(r.terms, CFTerms::new(vec![1, 1, 1]));
        assert_eq!(r.class.fraction(), q(3, 2));
        assert_eq!(r.class.tag, KnotTag::TwoBridgeKnot);
    }

    #[test]
    fn truncate_difference_is_unknot() {
        let r = reduce_closure(&parse_closure("N((1,2,3)-(1,2))").unwrap()).unwrap();
        assert_eq!(r.class.tag, KnotTag::Unknot);
        assert!(r.terms.is_empty());
    }

    #[test]
    fn fifteen_ten_is_n4_not_n6() {
        let r = reduce_closure(&KnotSpecExpr::bracket_pair(15, 10)).unwrap();
        assert_eq!(r.terms, CFTerms::ones(4));
        assert_eq!(r.class.fraction(), q(5, 3));
        assert!(equivalent(&r.class.fraction(), &q(5, 2)));
        assert!(!equivalent(&cf_value(&CFTerms::ones(6)), &q(5, 2)));
    }

    #[test]
    fn complexified_matches_payload() {
        let payload = CFTerms::new(vec![2, 3, 4]);
        let k = reduce_closure(&KnotSpecExpr::complexified(1, payload.clone())).unwrap();
        let n = reduce_closure(&KnotSpecExpr::Numerator(TangleExpr::CF(payload))).unwrap();
        assert_eq!(k.class.p, n.class.p);
        assert!(equivalent(&k.class.fraction(), &n.class.fraction()));
    }

    #[test]
    fn k_zero_uses_infinity_tangle() {
        let payload = CFTerms::new(vec![3, -2, 5]);
        let k = reduce_closure(&KnotSpecExpr::complexified(0, payload.clone())).unwrap();
        let n = reduce_closure(&KnotSpecExpr::Numerator(TangleExpr::CF(payload))).unwrap();
        assert!(equivalent(&k.class.fraction(), &n.class.fraction()));
    }

    #[test]
    fn integer_summands_are_absorbed() {
        let a = reduce_closure(&parse_closure("N((2,3)+[4]+(1,1)-[4])").unwrap()).unwrap();
        let b = reduce_closure(&parse_closure("N((2,3)+(1,1))").unwrap()).unwrap();
        assert_eq!(a, b);
        let c = reduce_closure(&parse_closure("N([5])").unwrap()).unwrap();
        assert_eq!(c.class.p, BigInt::from(5));
    }

    #[test]
    fn denominator_closure() {
        // D([n]) is the unknot, D(1/[n]) = N([n]).
        assert_eq!(reduce_closure(&parse_closure("D([5])").unwrap()).unwrap().class.tag, KnotTag::Unknot);
        let d = reduce_closure(&parse_closure("D(1/[3])").unwrap()).unwrap();
        assert_eq!(d.class.p, BigInt::from(3));
    }

    #[test]
    fn unsupported_shapes() {
        let r = reduce_closure(&parse_closure("N((2,1)+(3,1)+(2,2))").unwrap()).unwrap();
        assert_eq!(r.class.tag, KnotTag::NonRationalClosure);
        assert!(matches!(
            reduce_closure(&parse_closure("N([2]*[3])").unwrap()),
            Err(TangleError::NonRationalClosure(_))
        ));
    }
}
