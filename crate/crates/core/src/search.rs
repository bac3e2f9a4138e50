//! Deterministic subset searches: first-match enumeration over a ground set,
//! greedy shrinking to inclusion-wise minimal sets, and greedy growing to
//! inclusion-wise maximal sets.
//!
//! Enumeration order is always increasing cardinality, then ascending bit
//! pattern; greedy scans run over ascending item indices. The exhaustive
//! searches are exponential in the ground-set size by design.

use crate::classify::Regime;
use crate::error::{FairDivError, Result};
use crate::valuation::{ItemSet, SetValuation};

/// Enumerates subsets of `ground` by increasing cardinality, then ascending
/// bit pattern, and returns the first one accepted by `pred`.
pub fn first_subset_matching(
    ground: ItemSet,
    mut pred: impl FnMut(ItemSet) -> bool,
) -> Option<ItemSet> {
    let positions: Vec<usize> = ground.items().collect();
    let k = positions.len();
    for card in 0..=k {
        if card == 0 {
            if pred(ItemSet::EMPTY) {
                return Some(ItemSet::EMPTY);
            }
            continue;
        }
        // Gosper's hack over a compressed k-bit space; the compressed order
        // matches the real bit-pattern order because decompression maps bit i
        // to the i-th smallest ground item.
        let mut comb: u64 = (1u64 << card) - 1;
        let limit: u64 = 1u64 << k;
        while comb < limit {
            let real = decompress(comb, &positions);
            if pred(real) {
                return Some(real);
            }
            let c = comb & comb.wrapping_neg();
            let r = comb + c;
            comb = (((r ^ comb) >> 2) / c) | r;
        }
    }
    None
}

fn decompress(comb: u64, positions: &[usize]) -> ItemSet {
    let mut real = ItemSet::EMPTY;
    let mut bits = comb;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        real = real.with(positions[i]);
    }
    real
}

/// First subset of `ground` valued `target`, or `None` if no such subset
/// exists (equivalently, full enumeration finds no witness).
pub fn find_any_subset_with_value(
    v: &SetValuation,
    ground: ItemSet,
    target: i64,
) -> Option<ItemSet> {
    first_subset_matching(ground, |s| v.value(s) == target)
}

/// A maximum-cardinality subset of `ground` valued `target` (ties broken by
/// ascending bit pattern), or `None` if no subset has that value.
///
/// Maximum cardinality makes the witness inclusion-wise maximal in the
/// strong sense: no superset within `ground` takes the value either. For
/// non-monotone set functions this is strictly stronger than having no
/// one-item extension, and the trilean solvers' transfer pass relies on the
/// strong form — a flexible bundle must not reach the opposite value under
/// any extension by leftover items.
pub fn find_maximal_subset_with_value(
    v: &SetValuation,
    ground: ItemSet,
    target: i64,
) -> Option<ItemSet> {
    let positions: Vec<usize> = ground.items().collect();
    let k = positions.len();
    for card in (0..=k).rev() {
        if card == 0 {
            if v.value(ItemSet::EMPTY) == target {
                return Some(ItemSet::EMPTY);
            }
            continue;
        }
        let mut comb: u64 = (1u64 << card) - 1;
        let limit: u64 = 1u64 << k;
        while comb < limit {
            let real = decompress(comb, &positions);
            if v.value(real) == target {
                return Some(real);
            }
            let c = comb & comb.wrapping_neg();
            let r = comb + c;
            comb = (((r ^ comb) >> 2) / c) | r;
        }
    }
    None
}

/// Shrinks `ground` to an inclusion-wise minimal set on which every valuation
/// in `vs` still takes `target`.
///
/// Every valuation must take `target` on `ground` itself. Greedy scans over
/// ascending item indices repeat to a fixpoint, so the result is
/// deterministic but not necessarily of minimum cardinality.
pub fn find_minimal_common_value(
    vs: &[&SetValuation],
    ground: ItemSet,
    target: i64,
) -> Result<ItemSet> {
    for (k, v) in vs.iter().enumerate() {
        if v.value(ground) != target {
            return Err(FairDivError::PreconditionFailed(format!(
                "valuation {k} takes {} on the ground set, expected {target}",
                v.value(ground)
            )));
        }
    }
    let mut s = ground;
    loop {
        let mut changed = false;
        for x in s.items().collect::<Vec<_>>() {
            if !s.contains(x) {
                continue;
            }
            let cand = s.without(x);
            if vs.iter().all(|v| v.value(cand) == target) {
                s = cand;
                changed = true;
            }
        }
        if !changed {
            return Ok(s);
        }
    }
}

/// Grows `seed` within `ground` to an inclusion-wise maximal set valued
/// `target`: no single item of `ground` can be added without changing the
/// value. Greedy adds over ascending item indices, repeated to a fixpoint.
pub fn grow_to_maximal(
    v: &SetValuation,
    seed: ItemSet,
    ground: ItemSet,
    target: i64,
) -> Result<ItemSet> {
    if !seed.is_subset_of(ground) {
        return Err(FairDivError::PreconditionFailed(
            "seed is not a subset of the ground set".into(),
        ));
    }
    if v.value(seed) != target {
        return Err(FairDivError::PreconditionFailed(format!(
            "seed is valued {}, expected {target}",
            v.value(seed)
        )));
    }
    let mut s = seed;
    loop {
        let mut changed = false;
        for x in ground.minus(s).items().collect::<Vec<_>>() {
            let cand = s.with(x);
            if v.value(cand) == target {
                s = cand;
                changed = true;
            }
        }
        if !changed {
            return Ok(s);
        }
    }
}

/// First favourable subset of `ground` in enumeration order: value 1 with a
/// child valued -1 or value -1 with a child valued 1 (negative regime), value
/// 2 with a child valued 0 or value 0 with a child valued 2 (positive).
pub fn find_favourable(v: &SetValuation, ground: ItemSet, regime: Regime) -> Option<ItemSet> {
    first_subset_matching(ground, |s| is_favourable(v, s, regime))
}

pub fn is_favourable(v: &SetValuation, s: ItemSet, regime: Regime) -> bool {
    let (hi, lo) = match regime {
        Regime::Negative => (1, -1),
        Regime::Positive => (2, 0),
    };
    let val = v.value(s);
    if val != hi && val != lo {
        return false;
    }
    let want = if val == hi { lo } else { hi };
    s.items().any(|x| v.value(s.without(x)) == want)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spiky_valuation() -> SetValuation {
        let table: Vec<i64> = (0u32..8)
            .map(|s| match s.count_ones() {
                0 => 0,
                1 => 1,
                _ => -1,
            })
            .collect();
        SetValuation::new(3, table).unwrap()
    }

    /// Brute-force check that no proper subset of `s` satisfies `pred`.
    fn inclusion_minimal(s: ItemSet, mut pred: impl FnMut(ItemSet) -> bool) -> bool {
        let bits = s.bits();
        if bits == 0 {
            return true;
        }
        let mut sub = (bits - 1) & bits;
        loop {
            if pred(ItemSet::from_bits(sub)) {
                return false;
            }
            if sub == 0 {
                return true;
            }
            sub = (sub - 1) & bits;
        }
    }

    #[test]
    fn minimal_common_single_agent() {
        let v = spiky_valuation();
        let got = find_minimal_common_value(&[&v], ItemSet::full(3), -1).unwrap();
        assert_eq!(v.value(got), -1);
        assert!(inclusion_minimal(got, |s| v.value(s) == -1));
        // Ascending greedy shrink drops item 0 first, leaving {1,2}.
        assert_eq!(got, ItemSet::from_items([1, 2]));
    }

    #[test]
    fn minimal_common_empty_ground() {
        let v = spiky_valuation();
        let got = find_minimal_common_value(&[&v], ItemSet::EMPTY, 0).unwrap();
        assert_eq!(got, ItemSet::EMPTY);
    }

    #[test]
    fn minimal_common_two_agents_nothing_removable() {
        // v1(S) = -1 iff item 0 in S; v2(S) = -1 iff item 1 in S.
        let v1 = SetValuation::new(2, vec![0, -1, 0, -1]).unwrap();
        let v2 = SetValuation::new(2, vec![0, 0, -1, -1]).unwrap();
        let got = find_minimal_common_value(&[&v1, &v2], ItemSet::full(2), -1).unwrap();
        assert_eq!(got, ItemSet::full(2));
    }

    #[test]
    fn minimal_common_precondition() {
        let v = spiky_valuation();
        assert!(matches!(
            find_minimal_common_value(&[&v], ItemSet::full(3), 1),
            Err(FairDivError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn find_any_subset_examples() {
        let v = spiky_valuation();
        assert_eq!(
            find_any_subset_with_value(&v, ItemSet::full(3), 1),
            Some(ItemSet::singleton(0))
        );
        assert_eq!(
            find_any_subset_with_value(&v, ItemSet::full(3), 0),
            Some(ItemSet::EMPTY)
        );
        assert_eq!(
            find_any_subset_with_value(&v, ItemSet::singleton(2), -1),
            None
        );
    }

    #[test]
    fn grow_to_maximal_examples() {
        let v = spiky_valuation();
        // Adding any single item to the empty set gives value 1.
        assert_eq!(
            grow_to_maximal(&v, ItemSet::EMPTY, ItemSet::full(3), 0).unwrap(),
            ItemSet::EMPTY
        );
        // A seed pair valued -1 grows to the full set, still -1.
        assert_eq!(
            grow_to_maximal(&v, ItemSet::from_items([0, 1]), ItemSet::full(3), -1).unwrap(),
            ItemSet::full(3)
        );
        // An already-maximal seed comes back unchanged.
        let seed = ItemSet::singleton(1);
        assert_eq!(grow_to_maximal(&v, seed, seed, 1).unwrap(), seed);
    }

    #[test]
    fn grow_to_maximal_preconditions() {
        let v = spiky_valuation();
        assert!(grow_to_maximal(&v, ItemSet::singleton(0), ItemSet::singleton(1), 1).is_err());
        assert!(grow_to_maximal(&v, ItemSet::EMPTY, ItemSet::full(3), 1).is_err());
    }

    #[test]
    fn favourable_examples() {
        let v = spiky_valuation();
        // First favourable in order: the pair {0,1} valued -1 with 1-children.
        assert_eq!(
            find_favourable(&v, ItemSet::full(3), Regime::Negative),
            Some(ItemSet::from_items([0, 1]))
        );

        let zero = SetValuation::new(3, vec![0; 8]).unwrap();
        assert_eq!(
            find_favourable(&zero, ItemSet::full(3), Regime::Negative),
            None
        );
        assert_eq!(
            find_favourable(&zero, ItemSet::full(3), Regime::Positive),
            None
        );

        // Positive regime: v({0,1}) = 2 with v({0}) = 0 qualifies (2 -> 0).
        let v = SetValuation::new(2, vec![0, 0, 1, 2]).unwrap();
        assert_eq!(
            find_favourable(&v, ItemSet::full(2), Regime::Positive),
            Some(ItemSet::from_items([0, 1]))
        );
    }

    #[test]
    fn maximal_subset_search_examples() {
        let v = spiky_valuation();
        // The whole ground set is the unique maximum-cardinality -1 witness.
        assert_eq!(
            find_maximal_subset_with_value(&v, ItemSet::full(3), -1),
            Some(ItemSet::full(3))
        );
        // Value 1 only occurs on singletons; the lowest bit pattern wins.
        assert_eq!(
            find_maximal_subset_with_value(&v, ItemSet::full(3), 1),
            Some(ItemSet::singleton(0))
        );
        assert_eq!(
            find_maximal_subset_with_value(&v, ItemSet::full(3), 7),
            None
        );
        assert_eq!(
            find_maximal_subset_with_value(&v, ItemSet::EMPTY, 0),
            Some(ItemSet::EMPTY)
        );
    }

    #[test]
    fn maximal_subset_beats_greedy_growth_on_gapped_tables() {
        // v = -1 on {0} and on {0,1,2}, zero elsewhere: greedy growth from
        // {0} cannot cross the zero-valued middle layer, but the true
        // maximal witness is the full set.
        let mut table = vec![0i64; 8];
        table[0b001] = -1;
        table[0b111] = -1;
        let v = SetValuation::new(3, table).unwrap();
        let grown = grow_to_maximal(&v, ItemSet::singleton(0), ItemSet::full(3), -1).unwrap();
        assert_eq!(grown, ItemSet::singleton(0));
        let maximal = find_maximal_subset_with_value(&v, ItemSet::full(3), -1).unwrap();
        assert_eq!(maximal, ItemSet::full(3));
    }

    #[test]
    fn enumeration_order_is_cardinality_then_bit_pattern() {
        let mut seen = Vec::new();
        first_subset_matching(ItemSet::from_items([0, 2, 3]), |s| {
            seen.push(s.bits());
            false
        });
        assert_eq!(
            seen,
            vec![0b0000, 0b0001, 0b0100, 0b1000, 0b0101, 0b1001, 0b1100, 0b1101]
        );
    }
}
