//! Recursive-descent parser for the formula grammar
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := atom '^-1'* | '-' factor
//! atom   := var | integer | '(' expr ')'
//! var    := 'x' digits | 'x' | 'y' | 'z' digits
//! ```
//!
//! Whitespace is ignored everywhere. `x<d>` is variable `d`, a bare `x` is
//! variable 1 and `y` is variable 0, so bivariate text reads back as the
//! pair (x, y). `z<d>` is variable `d + 1`.

use super::Formula;
use crate::error::{Error, Result};
use crate::field::PrimeField;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(String),
    Var(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Lexer<'_> {
    fn next(&mut self) -> Result<(usize, Tok)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        self.pos += 1;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                Tok::Num(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Var(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            _ => {
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character {:?}", c as char),
                })
            }
        };
        Ok((start, tok))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    peeked: (usize, Tok),
    universe: u32,
    field: PrimeField,
}

impl Parser<'_> {
    fn bump(&mut self) -> Result<(usize, Tok)> {
        let next = self.lex.next()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let (pos, tok) = self.bump()?;
        if tok == want {
            Ok(())
        } else {
            Err(unexpected(pos, &tok, what))
        }
    }

    fn expr(&mut self) -> Result<Formula> {
        let mut acc = self.term()?;
        loop {
            match self.peeked.1 {
                Tok::Plus => {
                    self.bump()?;
                    acc = Formula::add(acc, self.term()?);
                }
                Tok::Minus => {
                    self.bump()?;
                    acc = Formula::sub(self.field, acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Formula> {
        let mut acc = self.factor()?;
        while self.peeked.1 == Tok::Star {
            self.bump()?;
            acc = Formula::mul(acc, self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Formula> {
        if self.peeked.1 == Tok::Minus {
            self.bump()?;
            return Ok(Formula::neg(self.field, self.factor()?));
        }
        let mut f = self.atom()?;
        while self.peeked.1 == Tok::Caret {
            self.bump()?;
            self.expect(Tok::Minus, "'-' after '^'")?;
            let (pos, tok) = self.bump()?;
            if tok != Tok::Num("1".into()) {
                return Err(unexpected(pos, &tok, "'1' in '^-1'"));
            }
            f = Formula::inv(f);
        }
        Ok(f)
    }

    fn atom(&mut self) -> Result<Formula> {
        let (pos, tok) = self.bump()?;
        match tok {
            Tok::Num(digits) => Ok(Formula::constant(self.field.from_decimal(&digits))),
            Tok::Var(name) => self.variable(pos, name),
            Tok::LParen => {
                let f = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            other => Err(unexpected(pos, &other, "a variable, integer or '('")),
        }
    }

    fn variable(&self, pos: usize, name: String) -> Result<Formula> {
        let unknown = || Error::UnknownVariable {
            pos,
            name: name.clone(),
        };
        let index = match (name.as_bytes()[0], &name[1..]) {
            (b'x', "") => Some(1),
            (b'y', "") => Some(0),
            (b'x', d) if is_digits(d) => d.parse::<u32>().ok(),
            (b'z', d) if is_digits(d) => d.parse::<u32>().ok().and_then(|i| i.checked_add(1)),
            _ => None,
        };
        match index {
            Some(i) if i <= self.universe => Ok(Formula::var(i)),
            _ => Err(unknown()),
        }
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(n) => format!("integer {n}"),
        Tok::Var(v) => format!("variable {v}"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::End => "end of input".into(),
    }
}

fn unexpected(pos: usize, tok: &Tok, want: &str) -> Error {
    Error::Syntax {
        pos,
        msg: format!("expected {want}, found {}", describe(tok)),
    }
}

/// Parses `text`, rejecting variable indices above `universe`. Integer
/// literals are reduced mod p. No folding or rebalancing takes place.
pub fn parse_formula(text: &str, universe: u32, field: PrimeField) -> Result<Formula> {
    let mut lex = Lexer {
        src: text.as_bytes(),
        pos: 0,
    };
    let first = lex.next()?;
    let mut p = Parser {
        lex,
        peeked: first,
        universe,
        field,
    };
    let f = p.expr()?;
    let (pos, tok) = p.bump()?;
    if tok != Tok::End {
        return Err(unexpected(pos, &tok, "an operator or end of input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Node;

    fn parse(s: &str) -> Result<Formula> {
        parse_formula(s, 16, PrimeField::default())
    }

    #[test]
    fn grammar_examples() {
        let f = parse("x1*x2 + 3").unwrap();
        let want = Formula::add(
            Formula::mul(Formula::var(1), Formula::var(2)),
            Formula::constant(3),
        );
        assert_eq!(f, want);
        let g = parse("(x1 + x2)^-1").unwrap();
        assert_eq!(g, Formula::inv(Formula::add(Formula::var(1), Formula::var(2))));
    }

    #[test]
    fn syntax_error_position() {
        match parse("x1 * * x2") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("(x1"), Err(Error::Syntax { pos: 3, .. })));
        assert!(matches!(parse("x1 x2"), Err(Error::Syntax { pos: 3, .. })));
        assert!(matches!(parse("x1^2"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn unknown_variables() {
        assert!(matches!(
            parse("w + x1"),
            Err(Error::UnknownVariable { pos: 0, .. })
        ));
        assert!(matches!(
            parse_formula("x1 + x5", 4, PrimeField::default()),
            Err(Error::UnknownVariable { pos: 5, .. })
        ));
    }

    #[test]
    fn subtraction_is_sugar() {
        let f = PrimeField::new(7).unwrap();
        let g = parse_formula("x1 - x2", 2, f).unwrap();
        assert_eq!(
            g,
            Formula::add(
                Formula::var(1),
                Formula::mul(Formula::constant(6), Formula::var(2))
            )
        );
        let h = parse_formula("-x1", 2, f).unwrap();
        assert!(matches!(h.node(), Node::Mul(c, _) if c.is_const(6)));
    }

    #[test]
    fn literals_reduce_and_variables_map() {
        let f = PrimeField::new(7).unwrap();
        assert!(parse_formula("w1", 3, f).is_err());
        assert_eq!(parse_formula("100", 3, f).unwrap(), Formula::constant(2));
        assert_eq!(parse_formula("y", 3, f).unwrap(), Formula::var(0));
        assert_eq!(parse_formula("x", 3, f).unwrap(), Formula::var(1));
        assert_eq!(parse_formula("z2", 3, f).unwrap(), Formula::var(3));
        let w = parse_formula(" x1 ^ - 1 ^-1", 3, f).unwrap();
        assert_eq!(w, Formula::inv(Formula::inv(Formula::var(1))));
    }
}
