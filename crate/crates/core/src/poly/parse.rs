//! Recursive-descent parser for polynomial expressions.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' integer)?
//! atom  := number | variable | '(' expr ')'
//! ```
//!
//! Division is only allowed by a nonzero constant and exponents must be
//! nonnegative integer literals. Decimal literals are read exactly from their
//! printed digits, so `0.1` is `1/10`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{Poly, Rational};
use crate::chart::Chart;
use crate::error::{GeoError, Result};

pub fn parse(expr: &str, chart: &Chart) -> Result<Poly> {
    let mut p = Parser {
        src: expr.as_bytes(),
        pos: 0,
        chart,
    };
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
    chart: &'a Chart,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> GeoError {
        GeoError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
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

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = acc.checked_mul(&rhs)?;
                }
                b'/' => {
                    self.pos += 1;
                    let at = self.pos;
                    let rhs = self.unary()?;
                    if !rhs.is_constant() {
                        return Err(GeoError::Syntax {
                            offset: at,
                            message: "division is only allowed by a numeric constant".into(),
                        });
                    }
                    let c = rhs.constant_term();
                    if c.is_zero() {
                        return Err(GeoError::Syntax {
                            offset: at,
                            message: "division by zero".into(),
                        });
                    }
                    acc = acc.scale(&(Rational::one() / c));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly> {
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

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("exponent must be a nonnegative integer literal"));
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
            let e: u32 = text
                .parse()
                .map_err(|_| self.error("exponent too large"))?;
            let mut acc = Poly::one(base.nvars());
            for _ in 0..e {
                acc = acc.checked_mul(&base)?;
            }
            return Ok(acc);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly> {
        let nvars = self.chart.dim();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let value = self.number()?;
                Ok(Poly::constant(nvars, value))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii name");
                match self.chart.var_index(name) {
                    Some(i) => Ok(Poly::var(nvars, i)),
                    None => Err(GeoError::UnknownVariable {
                        name: name.to_string(),
                        kind: self.chart.kind(),
                        n: self.chart.n(),
                    }),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Rational> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac_len: i64 = 0;
        let mut seen_dot = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                digits.push(c as char);
                if seen_dot {
                    frac_len += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        let mut exp10: i64 = -frac_len;
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            match self.src.get(self.pos) {
                Some(b'-') => {
                    sign = -1;
                    self.pos += 1;
                }
                Some(b'+') => self.pos += 1,
                _ => {}
            }
            let es = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if es == self.pos {
                self.pos = save;
                return Err(self.error("malformed exponent"));
            }
            let text = std::str::from_utf8(&self.src[es..self.pos]).expect("digits");
            let e: i64 = text.parse().map_err(|_| self.error("exponent too large"))?;
            exp10 += sign * e;
        }
        let mantissa: BigInt = digits.parse().expect("digit string");
        let ten = BigInt::from(10);
        let scale = num_traits::pow(ten, exp10.unsigned_abs() as usize);
        Ok(if exp10 >= 0 {
            Rational::from_integer(mantissa * scale)
        } else {
            Rational::new(mantissa, scale)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartKind;
    use crate::poly::{int, rat};

    fn chart(kind: ChartKind, n: usize) -> Chart {
        Chart::new(kind, n).unwrap()
    }

    #[test]
    fn harmonic_oscillator() {
        let c = chart(ChartKind::Symplectic, 1);
        let h = parse("p1^2/2 + q1^2/2", &c).unwrap();
        assert_eq!(h.coeff(&[2, 0]), rat(1, 2));
        assert_eq!(h.coeff(&[0, 2]), rat(1, 2));
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn chart_gating() {
        let c = chart(ChartKind::Symplectic, 1);
        match parse("z", &c) {
            Err(GeoError::UnknownVariable { name, kind, .. }) => {
                assert_eq!(name, "z");
                assert_eq!(kind, ChartKind::Symplectic);
            }
            other => panic!("expected unknown variable, got {other:?}"),
        }
        assert!(parse("q2", &c).is_err());
        assert!(parse("t", &c).is_err());
    }

    #[test]
    fn contact_example() {
        let c = chart(ChartKind::Contact, 1);
        let h = parse("p1^2/2 + z", &c).unwrap();
        assert_eq!(h.coeff(&[0, 2, 0]), rat(1, 2));
        assert_eq!(h.coeff(&[0, 0, 1]), int(1));
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn decimals_are_exact() {
        let c = chart(ChartKind::Symplectic, 1);
        assert_eq!(parse("0.1", &c).unwrap().constant_term(), rat(1, 10));
        assert_eq!(parse("2.5e-1", &c).unwrap().constant_term(), rat(1, 4));
        assert_eq!(parse("3E2", &c).unwrap().constant_term(), int(300));
    }

    #[test]
    fn precedence_and_unary() {
        let c = chart(ChartKind::Symplectic, 1);
        let a = parse("-q1^2 + 2*(q1 - p1)*p1", &c).unwrap();
        let q = Poly::var(2, 0);
        let p = Poly::var(2, 1);
        assert_eq!(a, -(&q * &q) + (&q - &p).scale_int(2) * &p);
        assert_eq!(parse("1/2/2", &c).unwrap().constant_term(), rat(1, 4));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let c = chart(ChartKind::Symplectic, 1);
        assert!(matches!(
            parse("q1 / p1", &c),
            Err(GeoError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(parse("q1 + ", &c), Err(GeoError::Syntax { offset: 5, .. })));
        assert!(matches!(parse("q1^-1", &c), Err(GeoError::Syntax { .. })));
        assert!(matches!(parse("(q1", &c), Err(GeoError::Syntax { .. })));
        assert!(matches!(parse("q1 / 0", &c), Err(GeoError::Syntax { .. })));
        assert!(matches!(parse("q1 q1", &c), Err(GeoError::Syntax { offset: 3, .. })));
    }
}
