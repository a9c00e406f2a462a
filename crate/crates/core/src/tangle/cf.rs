use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{ExtendedRational, TangleError};

/// Continued-fraction terms read outer to inner: `(a, b, c) = a + 1/(b + 1/c)`.
///
/// The empty list is the value `∞` (the `[∞]` tangle), which makes the
/// innermost-first evaluation a plain fold and keeps truncation total.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CFTerms(pub Vec<i64>);

impl CFTerms {
    pub fn new(terms: impl Into<Vec<i64>>) -> Self {
        Self(terms.into())
    }

    /// `[[n]]`: `n` consecutive ones.
    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of crossings in the twist-form diagram.
    pub fn crossings(&self) -> u64 {
        self.0.iter().map(|a| a.unsigned_abs()).sum()
    }

    /// Term-wise negation: the mirror image of the twist-form tangle.
    pub fn mirror(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    pub fn concat(&self, tail: &CFTerms) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        Self(v)
    }
}

impl From<Vec<i64>> for CFTerms {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

impl fmt::Display for CFTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "[inf]");
        }
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Exact value of the continued fraction, evaluated innermost-first.
pub fn cf_value(terms: &CFTerms) -> ExtendedRational {
    terms
        .0
        .iter()
        .rev()
        .fold(ExtendedRational::infinity(), |acc, &a| acc.cf_step(a))
}

/// Euclid's algorithm. Positive fractions give non-negative terms, negative
/// fractions the negated expansion of `|f|`, zero gives `(0)` and `∞` the
/// empty list. Whenever the result has more than one term, the last term is
/// at least 2 in absolute value.
pub fn canonical_cf(f: &ExtendedRational) -> Result<CFTerms, TangleError> {
    if f.is_infinite() {
        return Ok(CFTerms::default());
    }
    let negative = f.numer().is_negative();
    let mut p = f.numer().abs();
    let mut q = f.denom().clone();
    let mut out = Vec::new();
    loop {
        let (a, r) = p.div_rem(&q);
        out.push(to_term(&a)?);
        if r.is_zero() {
            break;
        }
        p = q;
        q = r;
    }
    if negative {
        out.iter_mut().for_each(|a| *a = -*a);
    }
    Ok(CFTerms(out))
}

fn to_term(a: &BigInt) -> Result<i64, TangleError> {
    a.to_i64().ok_or_else(|| TangleError::Overflow(a.to_string()))
}

/// `(a1..an) ↦ (an..a1)`; the numerator closure is unchanged.
pub fn reverse_terms(t: &CFTerms) -> CFTerms {
    CFTerms(t.0.iter().rev().copied().collect())
}

/// `T □ S = (an, …, a2, a1 + b1, b2, …, bm)`, whose numerator closure is
/// isotopic to `N(T + S)`.
pub fn box_compose(t: &CFTerms, s: &CFTerms) -> Result<CFTerms, TangleError> {
    let (Some((&a1, a_rest)), Some((&b1, b_rest))) = (t.0.split_first(), s.0.split_first()) else {
        return Err(TangleError::EmptyOperand("box composition"));
    };
    let joint = a1
        .checked_add(b1)
        .ok_or_else(|| TangleError::Overflow(format!("{a1} + {b1}")))?;
    let mut out: Vec<i64> = a_rest.iter().rev().copied().collect();
    out.push(joint);
    out.extend_from_slice(b_rest);
    Ok(CFTerms(out))
}

/// Removes zero terms while keeping the value fixed:
/// `(…, b, 0, c, …) → (…, b + c, …)` and `(…, y, 0) → (…)`.
///
/// A sole `(0)` and a leading zero are left in place; neither can be removed
/// without changing the value.
pub fn simplify_terms(t: &CFTerms) -> Result<CFTerms, TangleError> {
    let mut v = t.0.clone();
    loop {
        let n = v.len();
        let Some(i) = (1..n).find(|&i| v[i] == 0) else {
            return Ok(CFTerms(v));
        };
        if i == n - 1 {
            v.truncate(n - 2);
        } else {
            let merged = v[i - 1]
                .checked_add(v[i + 1])
                .ok_or_else(|| TangleError::Overflow(format!("{} + {}", v[i - 1], v[i + 1])))?;
            v.splice(i - 1..=i + 1, [merged]);
        }
    }
}

/// Drops the last term.
pub fn truncate(t: &CFTerms) -> Result<CFTerms, TangleError> {
    match t.0.split_last() {
        Some((_, rest)) => Ok(CFTerms(rest.to_vec())),
        None => Err(TangleError::EmptyOperand("truncate")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cf(v: &[i64]) -> CFTerms {
        CFTerms(v.to_vec())
    }

    fn q(n: i64, d: i64) -> ExtendedRational {
        ExtendedRational::new(n, d).unwrap()
    }

    /// Independent evaluation through f64-free bottom-up rationals, written
    /// as the recurrence on convergents h/k.
    fn convergent(v: &[i64]) -> ExtendedRational {
        let (mut h0, mut h1) = (BigInt::from(1), BigInt::from(0));
        let (mut k0, mut k1) = (BigInt::from(0), BigInt::from(1));
        for &a in v {
            let h2 = BigInt::from(a) * &h0 + &h1;
            let k2 = BigInt::from(a) * &k0 + &k1;
            h1 = h0;
            h0 = h2;
            k1 = k0;
            k0 = k2;
        }
        ExtendedRational::new(h0, k0).unwrap()
    }

    #[test]
    fn cf_value_examples() {
        assert_eq!(cf_value(&cf(&[1, 2, 2])), q(7, 5));
        assert_eq!(cf_value(&cf(&[1, 1, 1, 1, 1, 1])), q(13, 8));
        assert_eq!(cf_value(&cf(&[4, 0])), ExtendedRational::infinity());
        assert_eq!(cf_value(&cf(&[])), ExtendedRational::infinity());
        assert_eq!(cf_value(&cf(&[0])), ExtendedRational::zero());
    }

    #[test]
    fn cf_value_matches_convergent_recurrence() {
        for v in [&[2, 3, 4][..], &[4, 3, 2], &[1, 3, -2], &[-7, 2, 9, -1, 3], &[0, 5, 3]] {
            assert_eq!(cf_value(&cf(v)), convergent(v), "{v:?}");
        }
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonical_cf(&q(7, 5)).unwrap(), cf(&[1, 2, 2]));
        assert_eq!(canonical_cf(&q(3, 2)).unwrap(), cf(&[1, 2]));
        assert_eq!(canonical_cf(&q(-1, 1)).unwrap(), cf(&[-1]));
        assert_eq!(canonical_cf(&q(-3, 5)).unwrap(), cf(&[0, -1, -1, -2]));
        assert_eq!(canonical_cf(&ExtendedRational::zero()).unwrap(), cf(&[0]));
        assert_eq!(canonical_cf(&ExtendedRational::infinity()).unwrap(), cf(&[]));
    }

    #[test]
    fn box_examples() {
        assert_eq!(box_compose(&cf(&[2, 3, 4]), &cf(&[3, 2, 2])).unwrap(), cf(&[4, 3, 5, 2, 2]));
        assert_eq!(box_compose(&cf(&[6]), &cf(&[-4])).unwrap(), cf(&[2]));
        assert_eq!(box_compose(&CFTerms::ones(3), &cf(&[-1, -1])).unwrap(), cf(&[1, 1, 0, -1]));
        assert!(matches!(box_compose(&cf(&[]), &cf(&[1])), Err(TangleError::EmptyOperand(_))));
    }

    #[test]
    fn simplify_examples() {
        assert_eq!(simplify_terms(&cf(&[1, 2, 0, 3, 4])).unwrap(), cf(&[1, 5, 4]));
        assert_eq!(cf_value(&cf(&[1, 5, 4])), q(25, 21));
        assert_eq!(simplify_terms(&cf(&[1, 1, 1, 1, 0])).unwrap(), cf(&[1, 1, 1]));
        assert_eq!(simplify_terms(&cf(&[2, 3, 4, 0])).unwrap(), cf(&[2, 3]));
        assert_eq!(simplify_terms(&cf(&[0])).unwrap(), cf(&[0]));
        assert_eq!(simplify_terms(&cf(&[0, 3, 0, 2])).unwrap(), cf(&[0, 5]));
        assert_eq!(simplify_terms(&cf(&[3, 0])).unwrap(), cf(&[]));
    }

    #[test]
    fn truncate_and_reverse() {
        assert_eq!(truncate(&cf(&[1, 2, 3])).unwrap(), cf(&[1, 2]));
        assert_eq!(truncate(&cf(&[5])).unwrap(), cf(&[]));
        assert!(truncate(&cf(&[])).is_err());
        assert_eq!(reverse_terms(&cf(&[2, 3, 4])), cf(&[4, 3, 2]));
        assert_eq!(reverse_terms(&cf(&[7])), cf(&[7]));
    }
}
