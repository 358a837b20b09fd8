//! Rule instantiations, their ranking and the conflict set.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::kb::AttrId;
use crate::temporal::Occurrence;
use crate::values::TruthValue;

/// Priority of an instantiation. `Ord` sorts the preferred tuple first:
/// specificity descending, novelty descending, reliability descending,
/// declaration index ascending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTuple {
    /// Atomic conditions on the LHS.
    pub specificity: usize,
    /// Latest `asserted_at` among the matched facts; `None` sorts last.
    pub novelty: Option<u64>,
    /// Rule cf times antecedent truth.
    pub reliability: f64,
    /// Rule declaration index.
    pub index: usize,
}

impl Eq for RankTuple {}

impl Ord for RankTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .specificity
            .cmp(&self.specificity)
            .then_with(|| other.novelty.cmp(&self.novelty))
            .then_with(|| other.reliability.total_cmp(&self.reliability))
            .then_with(|| self.index.cmp(&other.index))
    }
}

impl PartialOrd for RankTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Identity of an instantiation for refractoriness: the rule, the serials
/// of the facts it read, the state of the temporal objects it mentions and,
/// for periodic and response rules, the activation tick.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    pub rule: usize,
    pub deps: Vec<(AttrId, u64)>,
    pub temporal: Vec<(usize, Option<Occurrence>)>,
    pub activation: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instantiation {
    pub rule: usize,
    pub truth: TruthValue,
    pub rank: RankTuple,
    pub signature: Signature,
}

/// Ordered instantiations plus the set of signatures already fired.
#[derive(Debug, Clone, Default)]
pub struct ConflictSet {
    items: Vec<Instantiation>,
    fired: HashSet<Signature>,
}

impl ConflictSet {
    pub fn items(&self) -> &[Instantiation] {
        &self.items
    }

    pub fn clear_items(&mut self) {
        self.items.clear();
    }

    pub fn has_fired(&self, sig: &Signature) -> bool {
        self.fired.contains(sig)
    }

    /// Keeps the items whose entry in `keep` is set, merges the new ones
    /// (ignoring signatures already present) and restores rank order.
    pub fn resolve(&mut self, fresh: Vec<Instantiation>, keep: &[bool]) {
        let mut flags = keep.iter();
        self.items.retain(|_| *flags.next().unwrap_or(&false));
        for inst in fresh {
            if !self.items.iter().any(|i| i.signature == inst.signature) {
                self.items.push(inst);
            }
        }
        self.items.sort_by_key(|a| a.rank);
    }

    /// Removes and returns the head, marking its signature as fired.
    pub fn take_head(&mut self) -> Option<Instantiation> {
        if self.items.is_empty() {
            return None;
        }
        let head = self.items.remove(0);
        self.fired.insert(head.signature.clone());
        Some(head)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: usize, n: Option<u64>, r: f64, i: usize) -> RankTuple {
        RankTuple { specificity: s, novelty: n, reliability: r, index: i }
    }

    #[test]
    fn cascade() {
        assert!(t(3, Some(0), 0.1, 5) < t(2, Some(9), 1.0, 0));
        assert!(t(2, Some(5), 0.1, 5) < t(2, Some(4), 1.0, 0));
        assert!(t(2, Some(4), 0.1, 5) < t(2, None, 1.0, 0));
        assert!(t(2, Some(4), 0.9, 5) < t(2, Some(4), 0.8, 0));
        assert!(t(2, Some(4), 0.8, 0) < t(2, Some(4), 0.8, 1));
    }

    fn inst(rule: usize, rank: RankTuple) -> Instantiation {
        Instantiation {
            rule,
            truth: TruthValue::TRUE,
            rank,
            signature: Signature { rule, deps: vec![], temporal: vec![], activation: None },
        }
    }

    #[test]
    fn head_is_best_and_refractory() {
        let mut cs = ConflictSet::default();
        cs.resolve(vec![inst(0, t(1, None, 1.0, 0)), inst(1, t(2, None, 1.0, 1))], &[]);
        let head = cs.take_head().unwrap();
        assert_eq!(head.rule, 1);
        assert!(cs.has_fired(&head.signature));
        assert_eq!(cs.items().len(), 1);
        cs.resolve(vec![], &[false]);
        assert!(cs.take_head().is_none());
    }
}
