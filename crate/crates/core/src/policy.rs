//! Monotone boolean policies, their span programs, and linear secret sharing.
//!
//! Grammar (AND binds tighter than OR):
//!
//! ```text
//! expr   := term ('OR' term)*
//! term   := factor ('AND' factor)*
//! factor := attribute | '(' expr ')'
//! attribute := [A-Za-z0-9_:]+
//! ```

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use ark_ff::PrimeField;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::scalar_dec_matrix;

/// Default cap on span-program rows.
pub const DEFAULT_MAX_ROWS: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("empty policy")]
    Empty,
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("policy has {rows} leaves, limit is {limit}")]
    TooLarge { rows: usize, limit: usize },
}

/// A monotone access structure as an AND/OR tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessTree {
    Leaf(String),
    And(Box<AccessTree>, Box<AccessTree>),
    Or(Box<AccessTree>, Box<AccessTree>),
}

impl AccessTree {
    pub fn leaf(attribute: impl Into<String>) -> Self {
        Self::Leaf(attribute.into())
    }

    pub fn and(left: AccessTree, right: AccessTree) -> Self {
        Self::And(Box::new(left), Box::new(right))
    }

    pub fn or(left: AccessTree, right: AccessTree) -> Self {
        Self::Or(Box::new(left), Box::new(right))
    }

    /// Right-nested conjunction of all attributes.
    pub fn all_of<S: AsRef<str>>(attributes: &[S]) -> Option<Self> {
        fold_right(attributes.iter().map(|a| Self::leaf(a.as_ref())).collect(), Self::and)
    }

    /// Right-nested disjunction of all attributes.
    pub fn any_of<S: AsRef<str>>(attributes: &[S]) -> Option<Self> {
        fold_right(attributes.iter().map(|a| Self::leaf(a.as_ref())).collect(), Self::or)
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Self::Leaf(_) => 1,
            Self::And(l, r) | Self::Or(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    pub fn and_count(&self) -> usize {
        match self {
            Self::Leaf(_) => 0,
            Self::And(l, r) => 1 + l.and_count() + r.and_count(),
            Self::Or(l, r) => l.and_count() + r.and_count(),
        }
    }

    pub fn attributes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_attributes(&mut out);
        out
    }

    fn collect_attributes(&self, out: &mut BTreeSet<String>) {
        match self {
            Self::Leaf(a) => {
                out.insert(a.clone());
            }
            Self::And(l, r) | Self::Or(l, r) => {
                l.collect_attributes(out);
                r.collect_attributes(out);
            }
        }
    }

    /// Direct boolean evaluation under the attribute set `theta`.
    pub fn is_satisfied_by(&self, theta: &BTreeSet<String>) -> bool {
        match self {
            Self::Leaf(a) => theta.contains(a),
            Self::And(l, r) => l.is_satisfied_by(theta) && r.is_satisfied_by(theta),
            Self::Or(l, r) => l.is_satisfied_by(theta) || r.is_satisfied_by(theta),
        }
    }
}

fn fold_right(
    mut items: Vec<AccessTree>,
    join: fn(AccessTree, AccessTree) -> AccessTree,
) -> Option<AccessTree> {
    let mut acc = items.pop()?;
    while let Some(next) = items.pop() {
        acc = join(next, acc);
    }
    Some(acc)
}

impl fmt::Display for AccessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Leaf(a) => f.write_str(a),
            Self::And(l, r) => {
                write_operand(f, l, true)?;
                f.write_str(" AND ")?;
                write_operand(f, r, true)
            }
            Self::Or(l, r) => {
                write_operand(f, l, false)?;
                f.write_str(" OR ")?;
                write_operand(f, r, false)
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, node: &AccessTree, in_and: bool) -> fmt::Result {
    match node {
        AccessTree::Or(..) if in_and => write!(f, "({node})"),
        _ => write!(f, "{node}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Attr(String),
    And,
    Or,
    Open,
    Close,
}

fn is_attr_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b':'
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, PolicyError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
        } else if b == b'(' {
            out.push((i, Token::Open));
            i += 1;
        } else if b == b')' {
            out.push((i, Token::Close));
            i += 1;
        } else if is_attr_byte(b) {
            let start = i;
            while i < bytes.len() && is_attr_byte(bytes[i]) {
                i += 1;
            }
            let word = &text[start..i];
            let token = match word {
                "AND" => Token::And,
                "OR" => Token::Or,
                _ => Token::Attr(word.to_string()),
            };
            out.push((start, token));
        } else {
            return Err(PolicyError::Syntax {
                position: i,
                message: alloc::format!("unexpected character {:?}", b as char),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, message: &str) -> PolicyError {
        PolicyError::Syntax { position: self.offset(), message: message.to_string() }
    }

    fn expr(&mut self) -> Result<AccessTree, PolicyError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(fold_right(terms, AccessTree::or).expect("at least one term"))
    }

    fn term(&mut self) -> Result<AccessTree, PolicyError> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(fold_right(factors, AccessTree::and).expect("at least one factor"))
    }

    fn factor(&mut self) -> Result<AccessTree, PolicyError> {
        match self.peek().cloned() {
            Some(Token::Attr(a)) => {
                self.pos += 1;
                Ok(AccessTree::Leaf(a))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => Err(self.error("expected attribute or '('")),
            None => Err(self.error("unexpected end of policy")),
        }
    }
}

/// Parse a policy string into an access tree.
pub fn parse_policy(text: &str) -> Result<AccessTree, PolicyError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(PolicyError::Empty);
    }
    let mut parser = Parser { tokens, pos: 0, end: text.len() };
    let tree = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(tree)
}

/// Monotone span program: share-generating matrix plus row labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Msp<F: PrimeField> {
    #[serde(with = "scalar_dec_matrix")]
    pub matrix: Vec<Vec<F>>,
    pub labels: Vec<String>,
}

impl<F: PrimeField> Msp<F> {
    /// Build from a tree with the counter-based labeling: the root vector is
    /// `(1)`; OR copies the parent vector to both children; AND with counter
    /// `c` gives the left child `parent || 0.. || 1` and the right child
    /// `0^c || -1`, then increments `c`.
    pub fn from_tree(tree: &AccessTree) -> Self {
        let mut rows: Vec<(Vec<F>, String)> = Vec::with_capacity(tree.leaf_count());
        let mut counter = 1usize;
        label(tree, vec![F::one()], &mut counter, &mut rows);
        let width = counter;
        let (matrix, labels) = rows
            .into_iter()
            .map(|(mut v, l)| {
                v.resize(width, F::zero());
                (v, l)
            })
            .unzip();
        Self { matrix, labels }
    }

    pub fn from_tree_limited(tree: &AccessTree, max_rows: usize) -> Result<Self, PolicyError> {
        let rows = tree.leaf_count();
        if rows > max_rows {
            return Err(PolicyError::TooLarge { rows, limit: max_rows });
        }
        Ok(Self::from_tree(tree))
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    /// Rows whose label lies in `theta`, in index order.
    pub fn rows_for(&self, theta: &BTreeSet<String>) -> Vec<usize> {
        (0..self.rows()).filter(|&u| theta.contains(&self.labels[u])).collect()
    }
}

fn label<F: PrimeField>(
    node: &AccessTree,
    vector: Vec<F>,
    counter: &mut usize,
    rows: &mut Vec<(Vec<F>, String)>,
) {
    match node {
        AccessTree::Leaf(a) => rows.push((vector, a.clone())),
        AccessTree::Or(l, r) => {
            label(l, vector.clone(), counter, rows);
            label(r, vector, counter, rows);
        }
        AccessTree::And(l, r) => {
            let c = *counter;
            let mut left = vector;
            left.resize(c, F::zero());
            left.push(F::one());
            let mut right = vec![F::zero(); c];
            right.push(-F::one());
            *counter += 1;
            label(l, left, counter, rows);
            label(r, right, counter, rows);
        }
    }
}

/// Shares `lambda = M v` of a secret `s = v[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareVector<F> {
    pub secret: F,
    pub blinding: Vec<F>,
    pub shares: Vec<F>,
}

/// Share `secret` with fresh uniform `r_2..r_{n2}`.
pub fn share_secret<F: PrimeField, R: RngCore + ?Sized>(
    msp: &Msp<F>,
    secret: F,
    rng: &mut R,
) -> ShareVector<F> {
    let mut v = Vec::with_capacity(msp.cols());
    v.push(secret);
    for _ in 1..msp.cols() {
        v.push(F::rand(rng));
    }
    share_with(msp, v)
}

/// Share with an explicit column vector `v = (s, r_2, ..)`.
pub fn share_with<F: PrimeField>(msp: &Msp<F>, v: Vec<F>) -> ShareVector<F> {
    assert_eq!(v.len(), msp.cols(), "vector width must match the span program");
    let shares = msp
        .matrix
        .iter()
        .map(|row| row.iter().zip(&v).map(|(m, x)| *m * x).sum())
        .collect();
    ShareVector { secret: v[0], blinding: v, shares }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("attribute set does not satisfy the policy")]
pub struct Unauthorized;

/// Solve `gamma^T M_I = (1, 0, .., 0)` over `Z_q` for the rows `I` labeled in
/// `theta`. Free variables are set to zero; zero coefficients are omitted.
pub fn reconstruction_coeffs<F: PrimeField>(
    msp: &Msp<F>,
    theta: &BTreeSet<String>,
) -> Result<BTreeMap<usize, F>, Unauthorized> {
    let rows = msp.rows_for(theta);
    let cols = msp.cols();
    if rows.is_empty() || cols == 0 {
        return Err(Unauthorized);
    }
    let unknowns = rows.len();
    // One equation per column of M; augmented with the target vector.
    let mut system: Vec<Vec<F>> = (0..cols)
        .map(|j| {
            let mut eq: Vec<F> = rows.iter().map(|&u| msp.matrix[u][j]).collect();
            eq.push(if j == 0 { F::one() } else { F::zero() });
            eq
        })
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next_eq = 0;
    for var in 0..unknowns {
        let Some(p) = (next_eq..cols).find(|&e| !system[e][var].is_zero()) else {
            continue;
        };
        system.swap(next_eq, p);
        let inv = system[next_eq][var].inverse().expect("pivot is nonzero");
        for x in system[next_eq].iter_mut() {
            *x *= inv;
        }
        let pivot_row = system[next_eq].clone();
        for (e, eq) in system.iter_mut().enumerate() {
            if e != next_eq && !eq[var].is_zero() {
                let factor = eq[var];
                for (x, p) in eq.iter_mut().zip(&pivot_row) {
                    *x -= factor * p;
                }
            }
        }
        pivots.push((next_eq, var));
        next_eq += 1;
        if next_eq == cols {
            break;
        }
    }
    // Inconsistent if a zeroed equation still demands a nonzero target.
    if system[next_eq..].iter().any(|eq| !eq[unknowns].is_zero()) {
        return Err(Unauthorized);
    }
    Ok(pivots
        .into_iter()
        .filter(|&(e, _)| !system[e][unknowns].is_zero())
        .map(|(e, var)| (rows[var], system[e][unknowns]))
        .collect())
}
