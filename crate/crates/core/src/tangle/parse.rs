//! Recursive-descent parser for the ASCII tangle notation.
//!
//! ```text
//! expr    := closure | tangle
//! closure := "N(" tsum ")" | "D(" tsum ")" | "[" int "." int "]" | "U(" int ")" | "K(" int ";" cf ")"
//! tsum    := ["-"] tprod (("+" | "-") tprod)*
//! tprod   := atom ("*" atom)*
//! atom    := "[" int "]" | "[inf]" | "1/[" int "]" | "rot(" tsum ")" | cf | "[[" int "]]" | "(" tsum ")"
//! cf      := "(" int ("," int)* ")"
//! ```
//!
//! Whitespace between tokens is ignored. A parenthesised group whose first
//! token is not an integer is a grouped sum, not a continued fraction.

use std::fmt;

use super::cf::CFTerms;
use super::expr::{FamilyName, KnotSpecExpr, TangleExpr};
use super::TangleError;

/// Result of parsing a notation string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Parsed {
    Closure(KnotSpecExpr),
    Tangle(TangleExpr),
}

impl Parsed {
    pub fn into_closure(self) -> Result<KnotSpecExpr, TangleError> {
        match self {
            Parsed::Closure(k) => Ok(k),
            Parsed::Tangle(t) => Err(TangleError::NotAClosure(t.to_string())),
        }
    }
}

impl fmt::Display for Parsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parsed::Closure(k) => k.fmt(f),
            Parsed::Tangle(t) => t.fmt(f),
        }
    }
}

pub fn parse_tangle(text: &str) -> Result<Parsed, TangleError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(out)
}

/// Parses a string that must denote a knot or link (a closure or family).
pub fn parse_closure(text: &str) -> Result<KnotSpecExpr, TangleError> {
    parse_tangle(text)?.into_closure()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> TangleError {
        TangleError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn peek_at(&mut self, k: usize) -> Option<u8> {
        self.skip_ws();
        let mut i = self.pos;
        let mut seen = 0;
        while i < self.src.len() {
            if !self.src[i].is_ascii_whitespace() {
                if seen == k {
                    return Some(self.src[i]);
                }
                seen += 1;
            }
            i += 1;
        }
        None
    }

    fn starts_with(&mut self, lit: &str) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(lit.as_bytes())
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), TangleError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {lit:?}")))
        }
    }

    fn int(&mut self) -> Result<i64, TangleError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits {
            self.pos = start;
            return Err(self.error("expected integer"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<i64>().map_err(|_| TangleError::Overflow(format!("{text} at offset {start}")))
    }

    fn expr(&mut self) -> Result<Parsed, TangleError> {
        if self.eat("N(") {
            let t = self.tsum()?;
            self.expect(")")?;
            return Ok(Parsed::Closure(KnotSpecExpr::Numerator(t)));
        }
        if self.eat("D(") {
            let t = self.tsum()?;
            self.expect(")")?;
            return Ok(Parsed::Closure(KnotSpecExpr::Denominator(t)));
        }
        if self.eat("U(") {
            let n = self.int()?;
            self.expect(")")?;
            return Ok(Parsed::Closure(KnotSpecExpr::Family { name: FamilyName::U, params: vec![n], payload: None }));
        }
        if self.eat("K(") {
            let n = self.int()?;
            self.expect(";")?;
            if self.peek() != Some(b'(') {
                return Err(self.error("expected continued fraction"));
            }
            let terms = self.cf()?;
            self.expect(")")?;
            return Ok(Parsed::Closure(KnotSpecExpr::Family {
                name: FamilyName::K,
                params: vec![n],
                payload: Some(terms),
            }));
        }
        // "[n.m]" versus the integer tangle "[n]".
        if self.peek() == Some(b'[') && self.peek_at(1) != Some(b'[') {
            let save = self.pos;
            self.pos += 1;
            if let Ok(n) = self.int() {
                if self.eat(".") {
                    let m = self.int()?;
                    self.expect("]")?;
                    return Ok(Parsed::Closure(KnotSpecExpr::Family {
                        name: FamilyName::BracketPair,
                        params: vec![n, m],
                        payload: None,
                    }));
                }
            }
            self.pos = save;
        }
        Ok(Parsed::Tangle(self.tsum()?))
    }

    fn tsum(&mut self) -> Result<TangleExpr, TangleError> {
        let mut acc = if self.eat("-") {
            TangleExpr::mirror(self.tprod()?)
        } else {
            self.tprod()?
        };
        loop {
            if self.eat("+") {
                acc = TangleExpr::sum(acc, self.tprod()?);
            } else if self.eat("-") {
                acc = TangleExpr::difference(acc, self.tprod()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn tprod(&mut self) -> Result<TangleExpr, TangleError> {
        let mut acc = self.atom()?;
        while self.eat("*") {
            acc = TangleExpr::star(acc, self.atom()?);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<TangleExpr, TangleError> {
        if self.eat("[[") {
            let n = self.int()?;
            self.expect("]]")?;
            let n = usize::try_from(n).map_err(|_| self.error("[[n]] needs n >= 0"))?;
            return Ok(TangleExpr::CF(CFTerms::ones(n)));
        }
        if self.eat("[inf]") {
            return Ok(TangleExpr::Infinity);
        }
        if self.eat("[") {
            let n = self.int()?;
            self.expect("]")?;
            return Ok(TangleExpr::Integer(n));
        }
        if self.eat("1/[") {
            let n = self.int()?;
            self.expect("]")?;
            return Ok(TangleExpr::Vertical(n));
        }
        if self.eat("rot(") {
            let t = self.tsum()?;
            self.expect(")")?;
            return Ok(TangleExpr::rot(t));
        }
        if self.peek() == Some(b'(') {
            let next = self.peek_at(1);
            let is_cf = matches!(next, Some(c) if c.is_ascii_digit())
                || (next == Some(b'-') && matches!(self.peek_at(2), Some(c) if c.is_ascii_digit()));
            if is_cf {
                return Ok(TangleExpr::CF(self.cf()?));
            }
            self.expect("(")?;
            let t = self.tsum()?;
            self.expect(")")?;
            return Ok(t);
        }
        Err(self.error("expected tangle"))
    }

    fn cf(&mut self) -> Result<CFTerms, TangleError> {
        self.expect("(")?;
        let mut terms = vec![self.int()?];
        while self.eat(",") {
            terms.push(self.int()?);
        }
        self.expect(")")?;
        Ok(CFTerms::new(terms))
    }
}
