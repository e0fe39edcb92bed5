//! Genetic operators. Both respect node types and the depth bound.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::expr::{ExprTree, Op, Terminal};

/// Subtree crossover. A uniformly chosen node of `p1` is swapped with a
/// uniformly chosen type-compatible node of `p2`. A child that would exceed
/// `max_depth` is replaced by a copy of its own parent.
pub fn crossover<R: Rng + ?Sized>(p1: &ExprTree, p2: &ExprTree, max_depth: usize, rng: &mut R) -> (ExprTree, ExprTree) {
    let n1 = p1.nodes();
    let i = rng.random_range(0..n1.len());
    let want = n1[i].output_type();
    let compatible: Vec<usize> =
        p2.nodes().iter().enumerate().filter(|(_, n)| n.output_type() == want).map(|(j, _)| j).collect();
    let Some(&j) = compatible.choose(rng) else {
        return (p1.clone(), p2.clone());
    };
    crossover_at(p1, i, p2, j, max_depth)
}

/// Swaps the subtree at preorder `i` of `p1` with the one at `j` of `p2`.
pub fn crossover_at(p1: &ExprTree, i: usize, p2: &ExprTree, j: usize, max_depth: usize) -> (ExprTree, ExprTree) {
    let (Some(s1), Some(s2)) = (p1.subtree(i), p2.subtree(j)) else {
        return (p1.clone(), p2.clone());
    };
    let (s1, s2) = (s1.clone(), s2.clone());
    let mut c1 = p1.clone();
    let mut c2 = p2.clone();
    c1.replace_subtree(i, s2);
    c2.replace_subtree(j, s1);
    if c1.depth() > max_depth {
        c1 = p1.clone();
    }
    if c2.depth() > max_depth {
        c2 = p2.clone();
    }
    (c1, c2)
}

fn terminal_alternatives(current: Terminal, pool: &[i64]) -> Vec<Terminal> {
    let mut alts = vec![Terminal::BestSame, Terminal::Limit];
    alts.extend(pool.iter().map(|&c| Terminal::Const(c)));
    alts.dedup();
    alts.retain(|&t| t != current);
    alts
}

fn mutate_node<R: Rng + ?Sized>(node: &mut ExprTree, pool: &[i64], rng: &mut R) {
    match node {
        ExprTree::Op(op, ..) => {
            let others: Vec<Op> = Op::ALL.iter().copied().filter(|o| o != op).collect();
            *op = *others.choose(rng).expect("four operators");
        }
        ExprTree::Term(t) => {
            if let Some(&alt) = terminal_alternatives(*t, pool).choose(rng) {
                *t = alt;
            }
        }
    }
}

/// Each node independently, with probability `p_mut`, switches to a
/// different symbol of the same arity. Shape is untouched.
pub fn point_mutate<R: Rng + ?Sized>(tree: &ExprTree, pool: &[i64], p_mut: f64, rng: &mut R) -> ExprTree {
    let mut out = tree.clone();
    if p_mut <= 0.0 {
        return out;
    }
    let mut stack = vec![&mut out];
    while let Some(node) = stack.pop() {
        if rng.random_bool(p_mut.min(1.0)) {
            mutate_node(node, pool, rng);
        }
        if let ExprTree::Op(_, l, r) = node {
            stack.push(r);
            stack.push(l);
        }
    }
    out
}

/// Mutates exactly the node at preorder `idx`.
pub fn mutate_at<R: Rng + ?Sized>(tree: &ExprTree, idx: usize, pool: &[i64], rng: &mut R) -> ExprTree {
    let mut out = tree.clone();
    if let Some(node) = out.subtree_mut(idx) {
        mutate_node(node, pool, rng);
    }
    out
}
