use std::fmt;

use thiserror::Error;

use crate::lob::{Price, PriceBounds, Side};

/// Nesting limit for parsed genomes. Evolution uses its own, tighter bound.
pub const PARSE_DEPTH_LIMIT: usize = 256;

/// Value types flowing along tree edges. Only numeric prices exist today,
/// but crossover and mutation match on this so further types slot in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueType {
    Number,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> char {
        match self {
            Op::Add => 'A',
            Op::Sub => 'S',
            Op::Mul => 'M',
            Op::Div => 'D',
        }
    }

    pub fn arg_types(self) -> [ValueType; 2] {
        [ValueType::Number, ValueType::Number]
    }

    pub fn output_type(self) -> ValueType {
        ValueType::Number
    }

    /// Protected arithmetic: division by zero yields 1.
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b == 0.0 {
                    1.0
                } else {
                    a / b
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Terminal {
    Const(i64),
    /// Best price on the trader's own side of the book.
    BestSame,
    /// Limit price of the current customer order.
    Limit,
}

impl Terminal {
    pub fn output_type(self) -> ValueType {
        ValueType::Number
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprTree {
    Op(Op, Box<ExprTree>, Box<ExprTree>),
    Term(Terminal),
}

/// Inputs a genome can read while quoting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalContext {
    pub best_same: Option<Price>,
    pub limit: Price,
    /// Substituted for `best_same` when the own side of the book is empty.
    pub fallback_same: Price,
}

impl EvalContext {
    /// Empty-side fallback is the own-side stub price (system minimum for a
    /// buyer, maximum for a seller).
    pub fn new(best_same: Option<Price>, limit: Price, side: Side, bounds: PriceBounds) -> Self {
        let fallback_same = match side {
            Side::Bid => bounds.min,
            Side::Ask => bounds.max,
        };
        EvalContext { best_same, limit, fallback_same }
    }

    fn best_same_value(&self) -> f64 {
        self.best_same.unwrap_or(self.fallback_same).0 as f64
    }
}

/// How an evaluated genome becomes a quote.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuoteMapping {
    /// The expression value is the quote price.
    #[default]
    Direct,
    /// The expression value is an offset added to the limit price.
    LimitOffset,
}

impl ExprTree {
    pub fn op(op: Op, lhs: ExprTree, rhs: ExprTree) -> Self {
        ExprTree::Op(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn konst(v: i64) -> Self {
        ExprTree::Term(Terminal::Const(v))
    }

    pub fn best_same() -> Self {
        ExprTree::Term(Terminal::BestSame)
    }

    pub fn limit() -> Self {
        ExprTree::Term(Terminal::Limit)
    }

    /// `(S,(S,Pbest,1),LIMIT)`: the shaver written as a genome.
    pub fn shaver_seed() -> Self {
        ExprTree::op(Op::Sub, ExprTree::op(Op::Sub, ExprTree::best_same(), ExprTree::konst(1)), ExprTree::limit())
    }

    pub fn output_type(&self) -> ValueType {
        match self {
            ExprTree::Op(op, ..) => op.output_type(),
            ExprTree::Term(t) => t.output_type(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ExprTree::Op(_, l, r) => 1 + l.size() + r.size(),
            ExprTree::Term(_) => 1,
        }
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            ExprTree::Op(_, l, r) => 1 + l.depth().max(r.depth()),
            ExprTree::Term(_) => 1,
        }
    }

    pub fn is_well_typed(&self) -> bool {
        match self {
            ExprTree::Op(op, l, r) => {
                let [a, b] = op.arg_types();
                l.output_type() == a && r.output_type() == b && l.is_well_typed() && r.is_well_typed()
            }
            ExprTree::Term(_) => true,
        }
    }

    pub fn eval(&self, ctx: &EvalContext) -> f64 {
        match self {
            ExprTree::Op(op, l, r) => op.apply(l.eval(ctx), r.eval(ctx)),
            ExprTree::Term(Terminal::Const(c)) => *c as f64,
            ExprTree::Term(Terminal::BestSame) => ctx.best_same_value(),
            ExprTree::Term(Terminal::Limit) => ctx.limit.0 as f64,
        }
    }

    /// Maps the genome's value to a loss-avoiding quote inside `bounds`.
    pub fn quote(&self, ctx: &EvalContext, side: Side, bounds: PriceBounds, mapping: QuoteMapping) -> Price {
        let raw = match mapping {
            QuoteMapping::Direct => self.eval(ctx),
            QuoteMapping::LimitOffset => ctx.limit.0 as f64 + self.eval(ctx),
        };
        let limit = ctx.limit.0;
        let v = if raw.is_nan() {
            limit
        } else {
            // float-to-int `as` saturates, so infinities land on the i64 range ends
            raw.round() as i64
        };
        let capped = match side {
            Side::Bid => v.min(limit),
            Side::Ask => v.max(limit),
        };
        bounds.clamp(capped)
    }

    /// Preorder node list.
    pub fn nodes(&self) -> Vec<&ExprTree> {
        let mut out = Vec::with_capacity(16);
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            if let ExprTree::Op(_, l, r) = n {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    /// Subtree at preorder index `idx`.
    pub fn subtree(&self, idx: usize) -> Option<&ExprTree> {
        self.nodes().get(idx).copied()
    }

    pub(crate) fn subtree_mut(&mut self, mut idx: usize) -> Option<&mut ExprTree> {
        let mut cur = self;
        loop {
            if idx == 0 {
                return Some(cur);
            }
            idx -= 1;
            match cur {
                ExprTree::Op(_, l, r) => {
                    let ls = l.size();
                    if idx < ls {
                        cur = l;
                    } else {
                        idx -= ls;
                        cur = r;
                    }
                }
                ExprTree::Term(_) => return None,
            }
        }
    }

    /// Replaces the subtree at preorder index `idx`, returning the old one.
    pub fn replace_subtree(&mut self, idx: usize, new: ExprTree) -> Option<ExprTree> {
        let slot = self.subtree_mut(idx)?;
        Some(std::mem::replace(slot, new))
    }

    /// Depth of the node at preorder index `idx` (root is 1).
    pub fn node_level(&self, idx: usize) -> Option<usize> {
        let mut cur = self;
        let mut idx = idx;
        let mut level = 1;
        loop {
            if idx == 0 {
                return Some(level);
            }
            idx -= 1;
            level += 1;
            match cur {
                ExprTree::Op(_, l, r) => {
                    let ls = l.size();
                    if idx < ls {
                        cur = l;
                    } else {
                        idx -= ls;
                        cur = r;
                    }
                }
                ExprTree::Term(_) => return None,
            }
        }
    }

    pub fn parse(src: &str) -> Result<ExprTree, ParseError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let tree = p.expr(0)?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(ParseError::Trailing(p.pos));
        }
        Ok(tree)
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Const(c) => write!(f, "{c}"),
            Terminal::BestSame => f.write_str("Pbest"),
            Terminal::Limit => f.write_str("LIMIT"),
        }
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprTree::Op(op, l, r) => write!(f, "({},{},{})", op.symbol(), l, r),
            ExprTree::Term(t) => t.fmt(f),
        }
    }
}

impl std::str::FromStr for ExprTree {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExprTree::parse(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected character at byte {0}")]
    Unexpected(usize),
    #[error("unknown operator at byte {0}")]
    UnknownOp(usize),
    #[error("unknown terminal `{0}`")]
    UnknownTerminal(String),
    #[error("constant out of range at byte {0}")]
    BadConst(usize),
    #[error("nesting deeper than {PARSE_DEPTH_LIMIT}")]
    TooDeep,
    #[error("trailing input at byte {0}")]
    Trailing(usize),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(ParseError::Unexpected(self.pos)),
            None => Err(ParseError::Eof),
        }
    }

    fn expr(&mut self, depth: usize) -> Result<ExprTree, ParseError> {
        if depth >= PARSE_DEPTH_LIMIT {
            return Err(ParseError::TooDeep);
        }
        match self.peek() {
            None => Err(ParseError::Eof),
            Some(b'(') => {
                self.pos += 1;
                let at = self.pos;
                let op = match self.peek() {
                    Some(b'A') => Op::Add,
                    Some(b'S') => Op::Sub,
                    Some(b'M') => Op::Mul,
                    Some(b'D') => Op::Div,
                    Some(_) => return Err(ParseError::UnknownOp(at)),
                    None => return Err(ParseError::Eof),
                };
                self.pos += 1;
                self.expect(b',')?;
                let l = self.expr(depth + 1)?;
                self.expect(b',')?;
                let r = self.expr(depth + 1)?;
                self.expect(b')')?;
                Ok(ExprTree::op(op, l, r))
            }
            Some(_) => self.terminal(),
        }
    }

    fn terminal(&mut self) -> Result<ExprTree, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && !matches!(self.src[self.pos], b',' | b')' | b'(') {
            self.pos += 1;
        }
        let raw = &self.src[start..self.pos];
        let word = std::str::from_utf8(raw).map_err(|_| ParseError::Unexpected(start))?.trim();
        if word.is_empty() {
            return Err(ParseError::Unexpected(start));
        }
        let first = word.as_bytes()[0];
        if first == b'-' || first == b'+' || first.is_ascii_digit() {
            return word.parse::<i64>().map(ExprTree::konst).map_err(|_| ParseError::BadConst(start));
        }
        match word.to_ascii_lowercase().as_str() {
            "pbest" | "psame" | "p*" => Ok(ExprTree::best_same()),
            "limit" | "lambda" | "λ" => Ok(ExprTree::limit()),
            _ => Err(ParseError::UnknownTerminal(word.to_string())),
        }
    }
}
