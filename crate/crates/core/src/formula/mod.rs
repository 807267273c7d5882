//! Noncommutative rational formulas.
//!
//! A [`Formula`] is an immutable tree of `+`, `*` and unary inverse gates over
//! variables and field constants. Subtrees are reference counted, so
//! transformations share structure freely; every algorithm still treats the
//! object as a tree (fan-out one), and all counts below are tree counts.
//!
//! Gates are addressed by their preorder index, root = 0, left child first.

mod parse;
mod print;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::PrimeField;

pub use parse::parse_formula;
pub use print::{format_formula, format_formula_with, VarStyle};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Var(u32),
    Const(u64),
    Add(Formula, Formula),
    Mul(Formula, Formula),
    Inv(Formula),
}

struct Inner {
    node: Node,
    size: u64,
    depth: u32,
    leaves: u64,
    invs: u64,
    sums: u64,
}

/// Shared handle to a formula node.
#[derive(Clone)]
pub struct Formula(Arc<Inner>);

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.size == other.0.size && self.0.node == other.0.node)
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.node.hash(state)
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Var(i) => write!(f, "Var({i})"),
            Node::Const(c) => write!(f, "Const({c})"),
            Node::Add(a, b) => write!(f, "Add({a:?}, {b:?})"),
            Node::Mul(a, b) => write!(f, "Mul({a:?}, {b:?})"),
            Node::Inv(a) => write!(f, "Inv({a:?})"),
        }
    }
}

/// Which child of its parent a path node is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Only,
}

/// One step of a root-to-gate path: the ancestor and the side taken below it.
#[derive(Clone, Debug)]
pub struct PathStep {
    pub node: Formula,
    pub index: usize,
    pub side: Side,
}

/// Gate counts of a formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Metrics {
    pub size: u64,
    pub depth: u32,
    pub leaves: u64,
    pub inverses: u64,
    pub sums: u64,
}

impl Formula {
    fn build(node: Node) -> Self {
        let (size, depth, leaves, invs, sums) = match &node {
            Node::Var(_) | Node::Const(_) => (1, 0, 1, 0, 0),
            Node::Add(a, b) | Node::Mul(a, b) => {
                let (a, b) = (&a.0, &b.0);
                (
                    1 + a.size + b.size,
                    1 + a.depth.max(b.depth),
                    a.leaves + b.leaves,
                    a.invs + b.invs,
                    a.sums + b.sums + matches!(node, Node::Add(..)) as u64,
                )
            }
            Node::Inv(a) => {
                let a = &a.0;
                (1 + a.size, 1 + a.depth, a.leaves, a.invs + 1, a.sums)
            }
        };
        Formula(Arc::new(Inner {
            node,
            size,
            depth,
            leaves,
            invs,
            sums,
        }))
    }

    pub fn var(i: u32) -> Self {
        Self::build(Node::Var(i))
    }

    /// A constant leaf; the caller supplies a reduced residue.
    pub fn constant(c: u64) -> Self {
        Self::build(Node::Const(c))
    }

    pub fn add(a: Formula, b: Formula) -> Self {
        Self::build(Node::Add(a, b))
    }

    pub fn mul(a: Formula, b: Formula) -> Self {
        Self::build(Node::Mul(a, b))
    }

    pub fn inv(a: Formula) -> Self {
        Self::build(Node::Inv(a))
    }

    /// `Const(p-1) * a`, the only representation of negation.
    pub fn neg(field: PrimeField, a: Formula) -> Self {
        Self::mul(Self::constant(field.minus_one()), a)
    }

    /// `a + (-1) * b`.
    pub fn sub(field: PrimeField, a: Formula, b: Formula) -> Self {
        Self::add(a, Self::neg(field, b))
    }

    /// Balanced product of a nonempty slice.
    pub fn product(factors: &[Formula]) -> Self {
        match factors.len() {
            0 => panic!("empty product"),
            1 => factors[0].clone(),
            n => Self::mul(Self::product(&factors[..n / 2]), Self::product(&factors[n / 2..])),
        }
    }

    /// Balanced sum of a nonempty slice.
    pub fn sum(terms: &[Formula]) -> Self {
        match terms.len() {
            0 => panic!("empty sum"),
            1 => terms[0].clone(),
            n => Self::add(Self::sum(&terms[..n / 2]), Self::sum(&terms[n / 2..])),
        }
    }

    #[inline]
    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Identity of the shared node, for memoization over DAG-shaped values.
    #[inline]
    pub fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Formula) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn as_const(&self) -> Option<u64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const(&self, c: u64) -> bool {
        self.as_const() == Some(c)
    }

    pub fn is_zero(&self) -> bool {
        self.is_const(0)
    }

    pub fn is_one(&self) -> bool {
        self.is_const(1)
    }

    /// Total node count (leaves and gates).
    #[inline]
    pub fn size(&self) -> u64 {
        self.0.size
    }

    /// Longest root-to-leaf edge count.
    #[inline]
    pub fn depth(&self) -> u32 {
        self.0.depth
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            size: self.0.size,
            depth: self.0.depth,
            leaves: self.0.leaves,
            inverses: self.0.invs,
            sums: self.0.sums,
        }
    }

    pub fn leaf_count(&self) -> u64 {
        self.0.leaves
    }

    pub fn inverse_count(&self) -> u64 {
        self.0.invs
    }

    pub fn sum_count(&self) -> u64 {
        self.0.sums
    }

    pub fn is_division_free(&self) -> bool {
        self.0.invs == 0
    }

    /// Subformula weights in preorder; `weights()[v] = size(Φ_v)`.
    pub fn weights(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.size() as usize);
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            out.push(f.size());
            match f.node() {
                Node::Add(a, b) | Node::Mul(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Node::Inv(a) => stack.push(a),
                _ => {}
            }
        }
        out
    }

    /// Distinct variable indices.
    pub fn variables(&self) -> BTreeSet<u32> {
        let mut seen = std::collections::HashSet::new();
        let mut vars = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if !seen.insert(f.id()) {
                continue;
            }
            match f.node() {
                Node::Var(i) => {
                    vars.insert(*i);
                }
                Node::Const(_) => {}
                Node::Add(a, b) | Node::Mul(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                Node::Inv(a) => stack.push(a),
            }
        }
        vars
    }

    pub fn contains_var(&self, var: u32) -> bool {
        self.occurrences(var) > 0
    }

    /// Number of leaves equal to `Var(var)`, counted with tree multiplicity.
    pub fn occurrences(&self, var: u32) -> u64 {
        fn go(f: &Formula, var: u32, memo: &mut HashMap<usize, u64>) -> u64 {
            if let Some(&c) = memo.get(&f.id()) {
                return c;
            }
            let c = match f.node() {
                Node::Var(i) => (*i == var) as u64,
                Node::Const(_) => 0,
                Node::Add(a, b) | Node::Mul(a, b) => go(a, var, memo) + go(b, var, memo),
                Node::Inv(a) => go(a, var, memo),
            };
            memo.insert(f.id(), c);
            c
        }
        go(self, var, &mut HashMap::new())
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self.node() {
            Node::Add(a, b) | Node::Mul(a, b) => vec![a, b],
            Node::Inv(a) => vec![a],
            _ => vec![],
        }
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index as u64 >= self.size() {
            return Err(Error::OutOfRange(format!(
                "gate {index} in a formula of size {}",
                self.size()
            )));
        }
        Ok(())
    }

    /// Root-to-gate path; the last step is the gate itself with `Side::Only`
    /// standing in for "no child taken".
    pub fn path_to(&self, index: usize) -> Result<Vec<PathStep>> {
        self.check_index(index)?;
        let mut path = Vec::new();
        let mut cur = self.clone();
        let mut at = 0usize;
        while at != index {
            let (next, side, next_at) = match cur.node() {
                Node::Add(a, b) | Node::Mul(a, b) => {
                    let split = at + 1 + a.size() as usize;
                    if index < split {
                        (a.clone(), Side::Left, at + 1)
                    } else {
                        (b.clone(), Side::Right, split)
                    }
                }
                Node::Inv(a) => (a.clone(), Side::Only, at + 1),
                _ => unreachable!("index within bounds"),
            };
            path.push(PathStep {
                node: cur,
                index: at,
                side,
            });
            cur = next;
            at = next_at;
        }
        path.push(PathStep {
            node: cur,
            index: at,
            side: Side::Only,
        });
        Ok(path)
    }

    pub fn subformula_at(&self, index: usize) -> Result<Formula> {
        Ok(self.path_to(index)?.pop().expect("nonempty path").node)
    }

    /// Replaces the subformula at `index` by `new`, sharing everything off
    /// the path.
    pub fn replace_at(&self, index: usize, new: Formula) -> Result<Formula> {
        let mut path = self.path_to(index)?;
        path.pop();
        Ok(rebuild(&path, new))
    }

    /// First preorder gate `v` with `s/3 <= wt(v) < 2s/3`, `s` the size.
    pub fn find_splitter(&self) -> Result<usize> {
        let s = self.size();
        let in_window = |w: u64| 3 * w >= s && 3 * w < 2 * s;
        let mut cur = self;
        let mut at = 0usize;
        loop {
            if in_window(cur.size()) {
                return Ok(at);
            }
            // weights only shrink downwards; follow the unique heavy child
            let next = match cur.node() {
                Node::Add(a, b) | Node::Mul(a, b) => {
                    if 3 * a.size() >= s {
                        Some((a, at + 1))
                    } else if 3 * b.size() >= s {
                        Some((b, at + 1 + a.size() as usize))
                    } else {
                        None
                    }
                }
                Node::Inv(a) if 3 * a.size() >= s => Some((a, at + 1)),
                _ => None,
            };
            match next {
                Some((f, i)) => {
                    cur = f;
                    at = i;
                }
                None => return Err(Error::NoSplitter(s)),
            }
        }
    }

    /// Splitter with a heavy-path fallback: when the window is empty, the
    /// first gate on the heavy path whose weight drops below `2s/3`.
    pub fn split_gate(&self) -> usize {
        if let Ok(v) = self.find_splitter() {
            return v;
        }
        let s = self.size();
        let mut cur = self;
        let mut at = 0usize;
        while 3 * cur.size() >= 2 * s {
            let (f, i) = match cur.node() {
                Node::Add(a, b) | Node::Mul(a, b) => {
                    if a.size() >= b.size() {
                        (a, at + 1)
                    } else {
                        (b, at + 1 + a.size() as usize)
                    }
                }
                Node::Inv(a) => (a, at + 1),
                _ => break,
            };
            cur = f;
            at = i;
        }
        at
    }

    /// Substitutes `var -> image(var)` at every leaf whose image is `Some`.
    pub fn substitute(&self, image: &dyn Fn(u32) -> Option<Formula>) -> Formula {
        fn go(
            f: &Formula,
            image: &dyn Fn(u32) -> Option<Formula>,
            memo: &mut HashMap<usize, Formula>,
        ) -> Formula {
            if let Some(g) = memo.get(&f.id()) {
                return g.clone();
            }
            let g = match f.node() {
                Node::Var(i) => image(*i).unwrap_or_else(|| f.clone()),
                Node::Const(_) => f.clone(),
                Node::Add(a, b) => {
                    let (x, y) = (go(a, image, memo), go(b, image, memo));
                    if x.ptr_eq(a) && y.ptr_eq(b) {
                        f.clone()
                    } else {
                        Formula::add(x, y)
                    }
                }
                Node::Mul(a, b) => {
                    let (x, y) = (go(a, image, memo), go(b, image, memo));
                    if x.ptr_eq(a) && y.ptr_eq(b) {
                        f.clone()
                    } else {
                        Formula::mul(x, y)
                    }
                }
                Node::Inv(a) => {
                    let x = go(a, image, memo);
                    if x.ptr_eq(a) {
                        f.clone()
                    } else {
                        Formula::inv(x)
                    }
                }
            };
            memo.insert(f.id(), g.clone());
            g
        }
        go(self, image, &mut HashMap::new())
    }

    pub fn max_var(&self) -> Option<u32> {
        self.variables().iter().next_back().copied()
    }
}

/// Rebuilds the ancestors in `path` around a new bottom subformula.
pub fn rebuild(path: &[PathStep], mut new: Formula) -> Formula {
    for step in path.iter().rev() {
        new = match (step.node.node(), step.side) {
            (Node::Add(_, b), Side::Left) => Formula::add(new, b.clone()),
            (Node::Add(a, _), Side::Right) => Formula::add(a.clone(), new),
            (Node::Mul(_, b), Side::Left) => Formula::mul(new, b.clone()),
            (Node::Mul(a, _), Side::Right) => Formula::mul(a.clone(), new),
            (Node::Inv(_), _) => Formula::inv(new),
            _ => unreachable!("path steps are gates"),
        };
    }
    new
}

/// Constant-folding constructors used by the transformations. The parser
/// never folds, so parse/format round trips stay structural.
pub mod smart {
    use super::{Formula, Node};
    use crate::field::PrimeField;

    pub fn add(f: PrimeField, a: Formula, b: Formula) -> Formula {
        match (a.as_const(), b.as_const()) {
            (Some(0), _) => b,
            (_, Some(0)) => a,
            (Some(x), Some(y)) => Formula::constant(f.add(x, y)),
            _ => Formula::add(a, b),
        }
    }

    pub fn mul(f: PrimeField, a: Formula, b: Formula) -> Formula {
        match (a.as_const(), b.as_const()) {
            (Some(0), _) | (_, Some(0)) => Formula::constant(0),
            (Some(1), _) => b,
            (_, Some(1)) => a,
            (Some(x), Some(y)) => Formula::constant(f.mul(x, y)),
            // c * (d * g) = (cd) * g for scalar c, d
            (Some(x), None) => match b.node() {
                Node::Mul(l, r) if l.as_const().is_some() => {
                    let c = f.mul(x, l.as_const().unwrap());
                    mul(f, Formula::constant(c), r.clone())
                }
                _ => Formula::mul(a, b),
            },
            _ => Formula::mul(a, b),
        }
    }

    pub fn neg(f: PrimeField, a: Formula) -> Formula {
        mul(f, Formula::constant(f.minus_one()), a)
    }

    pub fn sub(f: PrimeField, a: Formula, b: Formula) -> Formula {
        add(f, a, neg(f, b))
    }

    /// Inverse with scalar folding; `inv(0)` is kept symbolic.
    pub fn inv(f: PrimeField, a: Formula) -> Formula {
        match a.as_const() {
            Some(c) if c != 0 => Formula::constant(f.inv(c).expect("nonzero")),
            _ => match a.node() {
                Node::Inv(g) => g.clone(),
                _ => Formula::inv(a),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u32) -> Formula {
        Formula::var(i)
    }

    pub(crate) fn left_comb(n: u32) -> Formula {
        (2..=n).fold(x(1), |acc, i| Formula::mul(acc, x(i)))
    }

    fn complete_tree(levels: u32, next: &mut u32) -> Formula {
        if levels == 0 {
            *next += 1;
            return x(*next);
        }
        let a = complete_tree(levels - 1, next);
        let b = complete_tree(levels - 1, next);
        Formula::mul(a, b)
    }

    #[test]
    fn metrics_of_small_formulas() {
        let v = x(1);
        assert_eq!((v.size(), v.depth()), (1, 0));
        assert_eq!(v.weights(), vec![1]);
        let m = Formula::mul(x(1), x(2));
        assert_eq!((m.size(), m.depth()), (3, 1));
    }

    #[test]
    fn left_comb_weights_along_spine() {
        let c = left_comb(4);
        assert_eq!((c.size(), c.depth()), (7, 3));
        let w = c.weights();
        assert_eq!(&w[..3], &[7, 5, 3]);
    }

    #[test]
    fn splitter_examples() {
        let c = left_comb(4);
        let v = c.find_splitter().unwrap();
        assert_eq!(c.weights()[v], 3);
        assert!(matches!(x(1).find_splitter(), Err(Error::NoSplitter(1))));
        let t = complete_tree(3, &mut 0);
        assert_eq!(t.size(), 15);
        assert_eq!(t.find_splitter().unwrap(), 1);
        assert_eq!(t.weights()[1], 7);
    }

    #[test]
    fn split_gate_falls_back_on_empty_window() {
        // root 10 = 1 + 7 + 2, heavy child 7 = 1 + 3 + 3: window [4, 6] is empty
        let three = || Formula::mul(x(1), x(2));
        let heavy = Formula::mul(three(), three());
        let f = Formula::mul(heavy, Formula::inv(x(3)));
        assert_eq!(f.size(), 10);
        assert!(f.find_splitter().is_err());
        let v = f.split_gate();
        assert_eq!(f.weights()[v], 3);
    }

    #[test]
    fn path_and_replace() {
        let f = Formula::add(Formula::mul(x(1), x(2)), Formula::inv(x(3)));
        // preorder: 0 Add, 1 Mul, 2 x1, 3 x2, 4 Inv, 5 x3
        assert_eq!(f.subformula_at(5).unwrap(), x(3));
        let p = f.path_to(3).unwrap();
        assert_eq!(p.iter().map(|s| s.index).collect::<Vec<_>>(), vec![0, 1, 3]);
        assert_eq!(p[1].side, Side::Right);
        let g = f.replace_at(4, x(7)).unwrap();
        assert_eq!(g, Formula::add(Formula::mul(x(1), x(2)), x(7)));
        assert!(f.subformula_at(6).is_err());
    }

    #[test]
    fn gate_counts() {
        let f = Formula::add(Formula::mul(x(1), x(2)), Formula::inv(x(1)));
        let m = f.metrics();
        assert_eq!((m.leaves, m.inverses, m.sums), (3, 1, 1));
        assert_eq!(f.occurrences(1), 2);
        assert_eq!(f.variables().into_iter().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn smart_constructors_fold() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(smart::mul(f, Formula::constant(0), x(1)), Formula::constant(0));
        assert_eq!(smart::add(f, Formula::constant(0), x(1)), x(1));
        assert_eq!(
            smart::mul(f, Formula::constant(3), Formula::constant(5)),
            Formula::constant(1)
        );
        assert_eq!(smart::inv(f, Formula::constant(3)), Formula::constant(5));
        let n = smart::neg(f, smart::neg(f, x(2)));
        assert_eq!(n, x(2));
    }
}
