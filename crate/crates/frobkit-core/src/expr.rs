//! Element expression language: integer literals, p, the unramified
//! generator g, the uniformizer t, with + - * / ^ and parentheses. Parsing
//! reports byte offsets; serialization uses the canonical form produced by
//! PadicElement::to_expr_string, which round-trips.

use num_bigint::BigInt;

use crate::coeff::{CoeffRing, RingElt};
use crate::error::{Error, Result};
use crate::padic::{Field, PadicElement};

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    field: Field,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> Error {
        Error::Syntax { offset: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn expression(&mut self) -> Result<PadicElement> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = acc.add(&rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = acc.sub(&rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<PadicElement> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = acc.mul(&rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = acc.div(&rhs).map_err(|_| self.err("division by zero at precision"))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<PadicElement> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.factor()?.neg())
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<PadicElement> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let e = self.integer()?;
            let e: i64 = e
                .try_into()
                .map_err(|_| self.err("exponent out of range"))?;
            let e = if neg { -e } else { e };
            return base.pow(e).map_err(|_| self.err("cannot invert zero"));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an integer"));
        }
        let s = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
        s.parse::<BigInt>().map_err(|_| self.err("bad integer"))
    }

    fn atom(&mut self) -> Result<PadicElement> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expression()?;
                if self.bump() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(b'p') => {
                self.pos += 1;
                Ok(PadicElement::from_i64(&self.field, self.field.p() as i64))
            }
            Some(b'g') => {
                self.pos += 1;
                Ok(PadicElement::generator(&self.field))
            }
            Some(b't') => {
                self.pos += 1;
                Ok(PadicElement::uniformizer(&self.field))
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(PadicElement::from_bigint(&self.field, &n))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Parse one element expression over the given field.
pub fn parse_element(text: &str, field: &Field) -> Result<PadicElement> {
    let mut p = Parser { text: text.as_bytes(), pos: 0, field: field.clone() };
    let v = p.expression()?;
    p.skip_ws();
    if p.pos != p.text.len() {
        return Err(p.err("trailing input"));
    }
    Ok(v)
}

/// Parse a ring element from its component expression strings.
pub fn parse_ring_element(components: &[String], ring: &CoeffRing) -> Result<RingElt> {
    if components.len() != ring.factor_count() {
        return Err(Error::Syntax {
            offset: 0,
            message: format!(
                "expected {} components, got {}",
                ring.factor_count(),
                components.len()
            ),
        });
    }
    let comp = components
        .iter()
        .map(|s| parse_element(s, ring.factor_field()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RingElt::from_components(ring, comp))
}

pub fn ring_element_strings(z: &RingElt) -> Vec<String> {
    z.components().iter().map(|c| c.to_expr_string()).collect()
}
