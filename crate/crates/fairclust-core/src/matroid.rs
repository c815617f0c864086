//! Partition matroids over facility ground sets.
//!
//! A partition matroid splits the ground set into disjoint parts `P_i` with
//! capacities `k_i`; a set is independent when it takes at most `k_i`
//! elements from each part. Its rank function is
//! `r(S) = Σ_i min(|S ∩ P_i|, k_i)`, and its base polytope is exactly the
//! per-part capacity rows plus the `[0,1]` box, which is what
//! [`emit_lp_constraints`](PartitionMatroid::emit_lp_constraints) produces.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::lp::{Constraint, Relation};

/// Ground-set element identifier (facility id).
pub type ElementId = u32;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MatroidError {
    #[error("parts and caps must have the same length")]
    LengthMismatch,
    #[error("element {0} appears in more than one part")]
    OverlappingParts(ElementId),
    #[error("element {0} is not in the ground set")]
    UnknownElement(ElementId),
    #[error("element {0} appears more than once in the query set")]
    DuplicateElement(ElementId),
}

/// A partition matroid with explicit parts and capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionMatroid {
    parts: Vec<Vec<ElementId>>,
    caps: Vec<usize>,
    part_of: BTreeMap<ElementId, usize>,
}

impl PartitionMatroid {
    /// Parts must be pairwise disjoint; together they are the ground set.
    /// Capacities may be zero (the part is then unusable) and empty parts
    /// are allowed.
    pub fn new(parts: Vec<Vec<ElementId>>, caps: Vec<usize>) -> Result<Self, MatroidError> {
        if parts.len() != caps.len() {
            return Err(MatroidError::LengthMismatch);
        }
        let mut part_of = BTreeMap::new();
        for (i, part) in parts.iter().enumerate() {
            for &e in part {
                if part_of.insert(e, i).is_some() {
                    return Err(MatroidError::OverlappingParts(e));
                }
            }
        }
        Ok(PartitionMatroid { parts, caps, part_of })
    }

    /// Single part containing the whole ground set with capacity `k`
    /// (a uniform matroid).
    pub fn uniform(ground: Vec<ElementId>, k: usize) -> Self {
        PartitionMatroid::new(alloc::vec![ground], alloc::vec![k]).expect("one part")
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn part(&self, i: usize) -> &[ElementId] {
        &self.parts[i]
    }

    pub fn cap(&self, i: usize) -> usize {
        self.caps[i]
    }

    pub fn ground_size(&self) -> usize {
        self.part_of.len()
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.part_of.contains_key(&e)
    }

    pub fn part_of(&self, e: ElementId) -> Result<usize, MatroidError> {
        self.part_of.get(&e).copied().ok_or(MatroidError::UnknownElement(e))
    }

    /// Ground-set ids in ascending order.
    pub fn ground(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.part_of.keys().copied()
    }

    fn part_counts(&self, set: &[ElementId]) -> Result<Vec<usize>, MatroidError> {
        let mut seen = BTreeSet::new();
        let mut counts = alloc::vec![0usize; self.parts.len()];
        for &e in set {
            if !seen.insert(e) {
                return Err(MatroidError::DuplicateElement(e));
            }
            counts[self.part_of(e)?] += 1;
        }
        Ok(counts)
    }

    /// Is `set` independent (`|set ∩ P_i| ≤ k_i` for every part)?
    pub fn is_independent(&self, set: &[ElementId]) -> Result<bool, MatroidError> {
        let counts = self.part_counts(set)?;
        Ok(counts.iter().zip(&self.caps).all(|(&c, &k)| c <= k))
    }

    /// Matroid rank `r(S) = Σ_i min(|S ∩ P_i|, k_i)`.
    pub fn rank(&self, set: &[ElementId]) -> Result<usize, MatroidError> {
        let counts = self.part_counts(set)?;
        Ok(counts.iter().zip(&self.caps).map(|(&c, &k)| c.min(k)).sum())
    }

    /// Per-part capacity rows `Σ_{u ∈ P_i} y_u ≤ k_i` in the LP vocabulary.
    ///
    /// `var_of` maps a ground-set id to its LP variable index. Together with
    /// `0 ≤ y_u ≤ 1` variable bounds (the caller declares those), the rows
    /// describe the full matroid polytope of a partition matroid.
    pub fn emit_lp_constraints(&self, var_of: impl Fn(ElementId) -> usize) -> Vec<Constraint> {
        self.parts
            .iter()
            .zip(&self.caps)
            .filter(|(part, _)| !part.is_empty())
            .map(|(part, &cap)| Constraint {
                coeffs: part.iter().map(|&e| (var_of(e), 1.0)).collect(),
                relation: Relation::Le,
                rhs: cap as f64,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> PartitionMatroid {
        PartitionMatroid::new(
            alloc::vec![alloc::vec![0, 1, 2], alloc::vec![3, 4], alloc::vec![5]],
            alloc::vec![2, 1, 0],
        )
        .unwrap()
    }

    #[test]
    fn independence_respects_caps() {
        let m = sample();
        assert!(m.is_independent(&[]).unwrap());
        assert!(m.is_independent(&[0, 1, 3]).unwrap());
        assert!(!m.is_independent(&[0, 1, 2]).unwrap(), "part 0 cap is 2");
        assert!(!m.is_independent(&[3, 4]).unwrap(), "part 1 cap is 1");
        assert!(!m.is_independent(&[5]).unwrap(), "cap 0 forbids the element");
    }

    #[test]
    fn rank_formula_matches_counts() {
        let m = sample();
        assert_eq!(m.rank(&[]).unwrap(), 0);
        assert_eq!(m.rank(&[0, 1, 2, 3, 4, 5]).unwrap(), 3);
        assert_eq!(m.rank(&[0, 3, 4]).unwrap(), 2);
    }

    #[test]
    fn construction_rejects_overlap_and_length_mismatch() {
        assert_eq!(
            PartitionMatroid::new(alloc::vec![alloc::vec![0, 1], alloc::vec![1]], alloc::vec![1, 1])
                .unwrap_err(),
            MatroidError::OverlappingParts(1)
        );
        assert_eq!(
            PartitionMatroid::new(alloc::vec![alloc::vec![0]], alloc::vec![]).unwrap_err(),
            MatroidError::LengthMismatch
        );
    }

    #[test]
    fn queries_reject_foreign_and_duplicate_elements() {
        let m = sample();
        assert_eq!(m.is_independent(&[9]).unwrap_err(), MatroidError::UnknownElement(9));
        assert_eq!(m.rank(&[0, 0]).unwrap_err(), MatroidError::DuplicateElement(0));
    }

    #[test]
    fn lp_rows_mirror_parts() {
        let m = sample();
        let rows = m.emit_lp_constraints(|e| e as usize);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].coeffs, alloc::vec![(0, 1.0), (1, 1.0), (2, 1.0)]);
        assert_eq!(rows[0].rhs, 2.0);
        assert!(matches!(rows[0].relation, Relation::Le));
        assert_eq!(rows[2].rhs, 0.0);
    }

    fn arb_matroid() -> impl Strategy<Value = PartitionMatroid> {
        (1usize..4, 1usize..8).prop_flat_map(|(nparts, per)| {
            let caps = proptest::collection::vec(0usize..=per, nparts);
            caps.prop_map(move |caps| {
                let mut parts = Vec::new();
                let mut next = 0u32;
                for _ in 0..nparts {
                    parts.push((next..next + per as u32).collect::<Vec<_>>());
                    next += per as u32;
                }
                PartitionMatroid::new(parts, caps).unwrap()
            })
        })
    }

    proptest! {
        /// `is_independent(S) ⟺ rank(S) = |S|`.
        #[test]
        fn independence_iff_full_rank(m in arb_matroid(), picks in proptest::collection::btree_set(0u32..24, 0..10)) {
            let set: Vec<ElementId> = picks.into_iter().filter(|e| m.contains(*e)).collect();
            let indep = m.is_independent(&set).unwrap();
            let rank = m.rank(&set).unwrap();
            prop_assert_eq!(indep, rank == set.len());
        }

        /// Rank is monotone and submodular on random pairs.
        #[test]
        fn rank_monotone_submodular(
            m in arb_matroid(),
            a in proptest::collection::btree_set(0u32..24, 0..10),
            b in proptest::collection::btree_set(0u32..24, 0..10),
        ) {
            let a: BTreeSet<u32> = a.into_iter().filter(|e| m.contains(*e)).collect();
            let b: BTreeSet<u32> = b.into_iter().filter(|e| m.contains(*e)).collect();
            let v = |s: &BTreeSet<u32>| s.iter().copied().collect::<Vec<_>>();
            let union: BTreeSet<u32> = a.union(&b).copied().collect();
            let inter: BTreeSet<u32> = a.intersection(&b).copied().collect();
            let (ra, rb) = (m.rank(&v(&a)).unwrap(), m.rank(&v(&b)).unwrap());
            let (ru, ri) = (m.rank(&v(&union)).unwrap(), m.rank(&v(&inter)).unwrap());
            prop_assert!(ra <= ru && rb <= ru, "monotonicity");
            prop_assert!(ra + rb >= ru + ri, "submodularity");
        }
    }
}
