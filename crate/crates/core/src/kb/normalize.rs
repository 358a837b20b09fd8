//! Rewrites n-ary conjunctions and disjunctions into right-nested binary
//! prefix trees, e.g. `a & b & c & d` becomes `&(a, &(b, &(c, d)))`.

use super::ast::{Expr, KnowledgeBase, TemporalFormula};

pub fn normalize_lhs(expr: Expr) -> Expr {
    match expr {
        Expr::And(..) => {
            let mut parts = Vec::new();
            flatten_and(expr, &mut parts);
            fold_right(parts.into_iter().map(normalize_lhs).collect(), |a, b| Expr::And(Box::new(a), Box::new(b)))
        }
        Expr::Or(..) => {
            let mut parts = Vec::new();
            flatten_or(expr, &mut parts);
            fold_right(parts.into_iter().map(normalize_lhs).collect(), |a, b| Expr::Or(Box::new(a), Box::new(b)))
        }
        Expr::Not(inner) => Expr::Not(Box::new(normalize_lhs(*inner))),
        atom => atom,
    }
}

fn flatten_and(e: Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::And(a, b) => {
            flatten_and(*a, out);
            flatten_and(*b, out);
        }
        other => out.push(other),
    }
}

fn flatten_or(e: Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Or(a, b) => {
            flatten_or(*a, out);
            flatten_or(*b, out);
        }
        other => out.push(other),
    }
}

fn fold_right<T>(mut parts: Vec<T>, join: impl Fn(T, T) -> T) -> T {
    let mut acc = parts.pop().expect("at least one operand");
    while let Some(x) = parts.pop() {
        acc = join(x, acc);
    }
    acc
}

pub fn normalize_temporal(f: TemporalFormula) -> TemporalFormula {
    use TemporalFormula as T;
    fn flatten(f: T, and: bool, out: &mut Vec<T>) {
        match f {
            T::And(a, b) if and => {
                flatten(*a, and, out);
                flatten(*b, and, out);
            }
            T::Or(a, b) if !and => {
                flatten(*a, and, out);
                flatten(*b, and, out);
            }
            other => out.push(other),
        }
    }
    match f {
        T::And(..) | T::Or(..) => {
            let and = matches!(f, T::And(..));
            let mut parts = Vec::new();
            flatten(f, and, &mut parts);
            let parts = parts.into_iter().map(normalize_temporal).collect();
            if and {
                fold_right(parts, |a, b| T::And(Box::new(a), Box::new(b)))
            } else {
                fold_right(parts, |a, b| T::Or(Box::new(a), Box::new(b)))
            }
        }
        T::Not(inner) => T::Not(Box::new(normalize_temporal(*inner))),
        atom => atom,
    }
}

/// Normalizes every rule LHS and every event/interval condition.
pub fn normalize_kb(mut kb: KnowledgeBase) -> KnowledgeBase {
    for rule in &mut kb.rules {
        rule.condition = rule.condition.take().map(normalize_lhs);
        rule.temporal = rule.temporal.take().map(normalize_temporal);
    }
    for ev in &mut kb.events {
        ev.origin = normalize_lhs(ev.origin.clone());
    }
    for iv in &mut kb.intervals {
        iv.open = normalize_lhs(iv.open.clone());
        iv.close = normalize_lhs(iv.close.clone());
    }
    kb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{parse_expr, parse_temporal};

    fn norm(s: &str) -> String {
        normalize_lhs(parse_expr(s).unwrap()).to_string()
    }

    #[test]
    fn right_nested_chain() {
        assert_eq!(norm("a.x & a.y & a.z & a.w"), "(a.x & (a.y & (a.z & a.w)))");
    }

    #[test]
    fn single_atom_is_identity() {
        assert_eq!(norm("a.x"), "a.x");
    }

    #[test]
    fn nested_disjunction() {
        assert_eq!(norm("a.x & (a.y v a.z)"), "(a.x & (a.y v a.z))");
        assert_eq!(norm("(a.x v a.y) v a.z"), "(a.x v (a.y v a.z))");
    }

    #[test]
    fn temporal_chain() {
        let f = normalize_temporal(parse_temporal("E & F & G").unwrap());
        assert_eq!(f.to_string(), "(E & (F & G))");
    }
}
