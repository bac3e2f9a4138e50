//! Core domain types: item sets as bitmasks, dense set-function valuations,
//! fair-division instances, and (possibly partial) allocations.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{FairDivError, Result};

/// Hard cap on the item count; valuations are dense `2^m` tables.
pub const MAX_ITEMS: usize = 20;

/// A set of item indices stored as a bitmask, item `k` <-> bit `k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ItemSet(u32);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn from_bits(bits: u32) -> Self {
        ItemSet(bits)
    }

    /// The set `{0, .., m-1}`.
    pub fn full(m: usize) -> Self {
        assert!(m <= MAX_ITEMS, "item count {m} exceeds cap {MAX_ITEMS}");
        if m == 0 {
            ItemSet(0)
        } else {
            ItemSet(((1u64 << m) - 1) as u32)
        }
    }

    pub fn singleton(item: usize) -> Self {
        assert!(item < MAX_ITEMS);
        ItemSet(1 << item)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        let mut s = ItemSet::EMPTY;
        for x in items {
            s = s.with(x);
        }
        s
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, item: usize) -> bool {
        item < 32 && self.0 & (1 << item) != 0
    }

    #[must_use]
    pub fn with(self, item: usize) -> Self {
        assert!(item < MAX_ITEMS);
        ItemSet(self.0 | (1 << item))
    }

    #[must_use]
    pub fn without(self, item: usize) -> Self {
        ItemSet(self.0 & !(1u32 << item))
    }

    #[must_use]
    pub fn union(self, other: Self) -> Self {
        ItemSet(self.0 | other.0)
    }

    #[must_use]
    pub fn minus(self, other: Self) -> Self {
        ItemSet(self.0 & !other.0)
    }

    #[must_use]
    pub fn intersect(self, other: Self) -> Self {
        ItemSet(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Item indices in ascending order.
    pub fn items(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let x = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(x)
            }
        })
    }

    pub fn lowest(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize)
        }
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, x) in self.items().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// A dense set-function valuation: one integer per subset of `{0, .., m-1}`,
/// indexed by the subset's bit pattern. The empty set is always worth 0.
#[derive(Clone, PartialEq, Eq)]
pub struct SetValuation {
    m: usize,
    table: Vec<i64>,
}

impl SetValuation {
    pub fn new(m: usize, table: Vec<i64>) -> Result<Self> {
        if m > MAX_ITEMS {
            return Err(FairDivError::Structure(format!(
                "item count {m} exceeds cap {MAX_ITEMS}"
            )));
        }
        let expected = 1usize << m;
        if table.len() != expected {
            return Err(FairDivError::Structure(format!(
                "valuation table has {} entries, expected 2^{m} = {expected}",
                table.len()
            )));
        }
        if table[0] != 0 {
            return Err(FairDivError::Structure(format!(
                "value of the empty set must be 0, found {}",
                table[0]
            )));
        }
        Ok(SetValuation { m, table })
    }

    pub fn item_count(&self) -> usize {
        self.m
    }

    pub fn table(&self) -> &[i64] {
        &self.table
    }

    /// Looks up `v(S)`. Panics if `S` contains an item index `>= m`.
    pub fn value(&self, s: ItemSet) -> i64 {
        self.table[s.bits() as usize]
    }

    /// All distinct nonzero values occurring anywhere in the table.
    pub fn distinct_nonzero_values(&self) -> BTreeSet<i64> {
        self.table.iter().copied().filter(|&v| v != 0).collect()
    }

    /// True if every table entry lies in `allowed`.
    pub fn range_within(&self, allowed: &[i64]) -> bool {
        self.table.iter().all(|v| allowed.contains(v))
    }

    /// True if every subset of `ground` is valued within `allowed`.
    pub fn range_within_ground(&self, ground: ItemSet, allowed: &[i64]) -> bool {
        let g = ground.bits();
        let mut s = g;
        loop {
            if !allowed.contains(&self.table[s as usize]) {
                return false;
            }
            if s == 0 {
                return true;
            }
            s = (s - 1) & g;
        }
    }
}

impl fmt::Debug for SetValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetValuation")
            .field("m", &self.m)
            .field("table", &self.table)
            .finish()
    }
}

/// The value of a set together with the multiset of its children's values
/// (one child per removable item), stored sorted for deterministic equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChildSummary {
    pub value: i64,
    pub child_values: Vec<i64>,
}

impl ChildSummary {
    /// `v(S) = a -> b`: value `a` with some child valued `b`.
    pub fn has_arrow(&self, a: i64, b: i64) -> bool {
        self.value == a && self.child_values.contains(&b)
    }

    /// `v(S) = a => B`: value `a` with every child's value in `B`.
    /// Vacuously true for the empty set.
    pub fn has_double_arrow(&self, a: i64, allowed: &[i64]) -> bool {
        self.value == a && self.child_values.iter().all(|c| allowed.contains(c))
    }
}

/// Enumerates `v(S \ {x})` for every `x` in `S`.
pub fn child_summary(v: &SetValuation, s: ItemSet) -> ChildSummary {
    let mut child_values: Vec<i64> = s.items().map(|x| v.value(s.without(x))).collect();
    child_values.sort_unstable();
    ChildSummary {
        value: v.value(s),
        child_values,
    }
}

/// A fair-division instance: `n` agents, `m` items, one valuation per agent.
#[derive(Clone, Debug)]
pub struct Instance {
    n: usize,
    m: usize,
    valuations: Vec<SetValuation>,
    identical: bool,
}

impl Instance {
    /// The `identical` flag is checked against the tables, not assumed.
    pub fn new(valuations: Vec<SetValuation>, identical: bool) -> Result<Self> {
        if valuations.is_empty() {
            return Err(FairDivError::Structure(
                "instance needs at least one agent".into(),
            ));
        }
        let m = valuations[0].item_count();
        if valuations.iter().any(|v| v.item_count() != m) {
            return Err(FairDivError::Structure(
                "valuations disagree on the item count".into(),
            ));
        }
        if identical && valuations.iter().any(|v| v != &valuations[0]) {
            return Err(FairDivError::NotIdentical(
                "instance flagged identical but tables differ".into(),
            ));
        }
        Ok(Instance {
            n: valuations.len(),
            m,
            valuations,
            identical,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn item_count(&self) -> usize {
        self.m
    }

    pub fn valuation(&self, agent: usize) -> &SetValuation {
        &self.valuations[agent]
    }

    pub fn valuations(&self) -> &[SetValuation] {
        &self.valuations
    }

    pub fn identical_flag(&self) -> bool {
        self.identical
    }

    /// Actual pairwise table equality, independent of the stored flag.
    pub fn tables_identical(&self) -> bool {
        self.valuations.iter().all(|v| v == &self.valuations[0])
    }

    /// The shared valuation of an identical instance.
    pub fn common_valuation(&self) -> Result<&SetValuation> {
        if self.tables_identical() {
            Ok(&self.valuations[0])
        } else {
            Err(FairDivError::NotIdentical(
                "agents have differing valuation tables".into(),
            ))
        }
    }

    pub fn all_items(&self) -> ItemSet {
        ItemSet::full(self.m)
    }
}

/// Per-agent pairwise-disjoint bundles; the allocation is complete when the
/// bundles cover all `m` items.
#[derive(Clone, PartialEq, Eq)]
pub struct Allocation {
    bundles: Vec<ItemSet>,
}

impl Allocation {
    pub fn new(bundles: Vec<ItemSet>, m: usize) -> Result<Self> {
        let all = ItemSet::full(m);
        let mut seen = ItemSet::EMPTY;
        for (i, &b) in bundles.iter().enumerate() {
            if !b.is_subset_of(all) {
                return Err(FairDivError::Structure(format!(
                    "bundle of agent {i} contains an item index >= {m}"
                )));
            }
            if !seen.intersect(b).is_empty() {
                return Err(FairDivError::Structure(format!(
                    "bundle of agent {i} overlaps an earlier bundle"
                )));
            }
            seen = seen.union(b);
        }
        Ok(Allocation { bundles })
    }

    pub fn empty(n: usize) -> Self {
        Allocation {
            bundles: vec![ItemSet::EMPTY; n],
        }
    }

    pub(crate) fn from_bundles_unchecked(bundles: Vec<ItemSet>) -> Self {
        Allocation { bundles }
    }

    pub fn agent_count(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundle(&self, agent: usize) -> ItemSet {
        self.bundles[agent]
    }

    pub fn bundles(&self) -> &[ItemSet] {
        &self.bundles
    }

    pub fn assigned(&self) -> ItemSet {
        self.bundles
            .iter()
            .fold(ItemSet::EMPTY, |acc, &b| acc.union(b))
    }

    pub fn is_complete(&self, m: usize) -> bool {
        self.assigned() == ItemSet::full(m)
    }
}

impl fmt::Debug for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.bundles.iter()).finish()
    }
}
