//! Canonical form for genomes, so syntactically different spellings of the
//! same quoting rule compare equal.
//!
//! Two rewrites, applied bottom-up:
//! * constant subtrees fold to a single constant when the value is an exact
//!   integer small enough to survive f64 arithmetic;
//! * an add/subtract chain over one variable terminal and any number of
//!   constants collapses to `(S,var,c)` or `(A,var,c)` with `c > 0`.
//!
//! Both rewrites leave the value of `eval` unchanged on every integer-priced
//! context.

use super::expr::{ExprTree, Op, Terminal};

/// Largest magnitude folded into a constant; f64 integer arithmetic is exact
/// well below 2^53.
const EXACT_LIMIT: i64 = 1 << 52;

pub fn canonicalize(tree: &ExprTree) -> ExprTree {
    match tree {
        ExprTree::Term(_) => tree.clone(),
        ExprTree::Op(op, l, r) => {
            let l = canonicalize(l);
            let r = canonicalize(r);
            let node = ExprTree::op(*op, l, r);
            if let Some(c) = fold_constant(&node) {
                return ExprTree::konst(c);
            }
            normalize_chain(&node).unwrap_or(node)
        }
    }
}

fn fold_constant(node: &ExprTree) -> Option<i64> {
    let ExprTree::Op(op, l, r) = node else { return None };
    let (ExprTree::Term(Terminal::Const(a)), ExprTree::Term(Terminal::Const(b))) = (&**l, &**r) else {
        return None;
    };
    let v = op.apply(*a as f64, *b as f64);
    if v.is_finite() && v.fract() == 0.0 && v.abs() <= EXACT_LIMIT as f64 {
        Some(v as i64)
    } else {
        None
    }
}

/// Leaves of an add/subtract chain with their signs.
fn flatten<'a>(t: &'a ExprTree, sign: i64, out: &mut Vec<(i64, &'a ExprTree)>) {
    match t {
        ExprTree::Op(Op::Add, l, r) => {
            flatten(l, sign, out);
            flatten(r, sign, out);
        }
        ExprTree::Op(Op::Sub, l, r) => {
            flatten(l, sign, out);
            flatten(r, -sign, out);
        }
        _ => out.push((sign, t)),
    }
}

fn normalize_chain(node: &ExprTree) -> Option<ExprTree> {
    if !matches!(node, ExprTree::Op(Op::Add | Op::Sub, ..)) {
        return None;
    }
    let mut leaves = Vec::new();
    flatten(node, 1, &mut leaves);
    let mut var = None;
    let mut sum: i64 = 0;
    let mut magnitude: i64 = 0;
    for (sign, leaf) in leaves {
        match leaf {
            ExprTree::Term(Terminal::Const(c)) => {
                sum = sum.checked_add(sign.checked_mul(*c)?)?;
                magnitude = magnitude.checked_add(c.checked_abs()?)?;
            }
            ExprTree::Term(t @ (Terminal::BestSame | Terminal::Limit)) if sign == 1 && var.is_none() => {
                var = Some(*t);
            }
            _ => return None,
        }
    }
    let var = var?;
    // every partial sum must stay exactly representable
    if magnitude > EXACT_LIMIT {
        return None;
    }
    let v = ExprTree::Term(var);
    Some(match sum {
        0 => v,
        c if c > 0 => ExprTree::op(Op::Add, v, ExprTree::konst(c)),
        c => ExprTree::op(Op::Sub, v, ExprTree::konst(-c)),
    })
}
