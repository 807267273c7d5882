use std::fmt::Write;

use super::{Formula, Node};
use crate::field::PrimeField;

/// How variables are spelled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VarStyle {
    /// `x1, x2, ...`, with variable 0 spelled `x0`.
    #[default]
    Indexed,
    /// Variable 1 is `x` and variable 0 is `y`; anything else is indexed.
    Bivariate,
}

/// Prints in the parser's grammar; `parse_formula(format_formula(f))`
/// rebuilds `f` node for node.
pub fn format_formula(f: &Formula, field: PrimeField) -> String {
    format_formula_with(f, field, VarStyle::Indexed)
}

pub fn format_formula_with(f: &Formula, field: PrimeField, style: VarStyle) -> String {
    let mut out = String::new();
    Printer { field, style }.expr(f, &mut out);
    out
}

struct Printer {
    field: PrimeField,
    style: VarStyle,
}

impl Printer {
    fn negated<'a>(&self, f: &'a Formula) -> Option<&'a Formula> {
        match f.node() {
            Node::Mul(c, b) if c.is_const(self.field.minus_one()) => Some(b),
            _ => None,
        }
    }

    fn expr(&self, f: &Formula, out: &mut String) {
        match f.node() {
            Node::Add(a, b) => {
                self.expr(a, out);
                match self.negated(b) {
                    Some(b) => {
                        out.push_str(" - ");
                        self.term(b, out);
                    }
                    None => {
                        out.push_str(" + ");
                        self.term(b, out);
                    }
                }
            }
            _ => self.term(f, out),
        }
    }

    fn term(&self, f: &Formula, out: &mut String) {
        if let Some(b) = self.negated(f) {
            out.push('-');
            self.factor(b, out);
            return;
        }
        match f.node() {
            Node::Mul(a, b) => {
                self.term(a, out);
                out.push('*');
                self.factor(b, out);
            }
            Node::Add(..) => {
                out.push('(');
                self.expr(f, out);
                out.push(')');
            }
            _ => self.factor(f, out),
        }
    }

    fn factor(&self, f: &Formula, out: &mut String) {
        match f.node() {
            Node::Var(i) => match (self.style, i) {
                (VarStyle::Bivariate, 0) => out.push('y'),
                (VarStyle::Bivariate, 1) => out.push('x'),
                _ => write!(out, "x{i}").unwrap(),
            },
            Node::Const(c) => write!(out, "{c}").unwrap(),
            Node::Inv(a) => {
                out.push('(');
                self.expr(a, out);
                out.push_str(")^-1");
            }
            Node::Add(..) | Node::Mul(..) => {
                out.push('(');
                self.expr(f, out);
                out.push(')');
            }
        }
    }
}
