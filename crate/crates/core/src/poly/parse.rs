//! Recursive-descent parser for polynomial expressions such as
//! `y^2+(u^2*x+1)*(v*x-1)`.
//!
//! Grammar:
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*        // '/' only by nonzero constants
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' integer)?
//! atom    := number | identifier | '(' expr ')'
//! ```
//! Numbers may be integers or decimals (`0.25` is read as exactly `1/4`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{PolyError, Polynomial};

pub fn parse_polynomial<S: AsRef<str>>(src: &str, vars: &[S]) -> Result<Polynomial, PolyError> {
    let vars: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
    let mut p = Parser { src: src.as_bytes(), pos: 0, vars: &vars };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> PolyError {
        PolyError::Parse { pos: self.pos, msg: msg.to_string() }
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

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                b'/' => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.unary()?;
                    let c = d.as_constant().ok_or(PolyError::Parse {
                        pos: at,
                        msg: "division only by constants".into(),
                    })?;
                    if c.is_zero() {
                        return Err(PolyError::Parse { pos: at, msg: "division by zero".into() });
                    }
                    acc = acc.scale(&c.recip());
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected a nonnegative integer exponent"));
            }
            let k: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Polynomial::var(self.vars, name).map_err(|_| PolyError::Parse {
                    pos: start,
                    msg: format!("unknown variable `{name}`"),
                })
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Polynomial, PolyError> {
        let start = self.pos;
        let mut int_part = String::new();
        let mut frac_part = String::new();
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            int_part.push(self.src[self.pos] as char);
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                frac_part.push(self.src[self.pos] as char);
                self.pos += 1;
            }
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(PolyError::Parse { pos: start, msg: "malformed number".into() });
        }
        let digits = format!("{int_part}{frac_part}");
        let num: BigInt = digits.parse().map_err(|_| PolyError::Parse {
            pos: start,
            msg: "malformed number".into(),
        })?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(num, if den.is_zero() { BigInt::one() } else { den });
        Ok(Polynomial::constant(self.vars, value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn parses_long_nested_expression() {
        let vars = ["x", "y", "u", "v"];
        let p = parse_polynomial("y^2+(u^2*x+1)*(v*x-1)*(x^2+(v-u^2)*x+1)", &vars).unwrap();
        // u^2*x * v*x * (-u^2*x) contributes degree 8
        assert_eq!(p.total_degree(), 8);
    }

    #[test]
    fn decimals_and_division_are_exact() {
        let vars = ["x"];
        let a = parse_polynomial("0.25*x + 1/3", &vars).unwrap();
        assert_eq!(a.eval_exact(&[rat(4, 1)]).unwrap(), rat(4, 3));
        let b = parse_polynomial("x/4 + 2/6", &vars).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let vars = ["x"];
        let p = parse_polynomial("-x^2", &vars).unwrap();
        assert_eq!(p.eval_exact(&[rat(3, 1)]).unwrap(), rat(-9, 1));
    }

    #[test]
    fn rejects_bad_input() {
        let vars = ["x"];
        assert!(matches!(parse_polynomial("x +", &vars), Err(PolyError::Parse { .. })));
        assert!(matches!(parse_polynomial("x / x", &vars), Err(PolyError::Parse { .. })));
        assert!(matches!(parse_polynomial("w", &vars), Err(PolyError::Parse { .. })));
        assert!(matches!(parse_polynomial("x^-1", &vars), Err(PolyError::Parse { .. })));
        assert!(matches!(parse_polynomial("(x", &vars), Err(PolyError::Parse { .. })));
    }
}
