//! Solver-agnostic fairness verification: EF1 and EFX⁺₋ predicates with
//! re-checkable witnesses, classification-based violation candidates, and
//! exhaustive allocation-search oracles.
//!
//! Everything here is independent of the solver implementations: the
//! predicates work straight from the definitions, and the brute-force
//! searches enumerate raw item-to-agent assignments in lexicographic order.

use crate::classify::{AgentClassSet, ClassFlag, Regime};
use crate::error::{FairDivError, Result};
use crate::ssp::{QuantityAllocation, SspInstance};
use crate::valuation::{Allocation, Instance, ItemSet, SetValuation};

/// Default cap on the number of assignments a brute-force search may visit.
pub const DEFAULT_BRUTE_BUDGET: u64 = 10_000_000;

/// Which fairness predicate a witness refutes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    /// No item in either bundle resolves the envy when removed.
    Ef1NoResolvingItem,
    /// The marginal union `M⁺(A_j) ∪ M⁻(A_i)` is empty.
    EfxEmptyMarginalUnion,
    /// An item from the marginal union whose removal leaves the envy.
    EfxUnresolvedItem { item: usize },
}

/// A concrete, re-checkable fairness violation for an ordered envious pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationWitness {
    pub envious: usize,
    pub envied: usize,
    pub kind: WitnessKind,
}

impl ViolationWitness {
    /// Re-verifies the claim against the instance it was produced from.
    pub fn recheck(&self, inst: &Instance, alloc: &Allocation) -> bool {
        let v = inst.valuation(self.envious);
        let a_i = alloc.bundle(self.envious);
        let a_j = alloc.bundle(self.envied);
        if v.value(a_i) >= v.value(a_j) {
            return false;
        }
        match self.kind {
            WitnessKind::Ef1NoResolvingItem => !ef1_pair_resolvable(v, a_i, a_j),
            WitnessKind::EfxEmptyMarginalUnion => {
                let (mp, _) = marginal_sets(v, a_j);
                let (_, mm) = marginal_sets(v, a_i);
                mp.union(mm).is_empty()
            }
            WitnessKind::EfxUnresolvedItem { item } => {
                let (mp, _) = marginal_sets(v, a_j);
                let (_, mm) = marginal_sets(v, a_i);
                mp.union(mm).contains(item)
                    && v.value(a_i.without(item)) < v.value(a_j.without(item))
            }
        }
    }
}

/// True if removing some single item of `a_i ∪ a_j` makes the envious agent
/// (valuing with `v`) weakly prefer its own bundle. Removal takes the item
/// out of whichever bundle contains it; the other side is unchanged.
pub fn ef1_pair_resolvable(v: &SetValuation, a_i: ItemSet, a_j: ItemSet) -> bool {
    a_i.union(a_j)
        .items()
        .any(|x| v.value(a_i.without(x)) >= v.value(a_j.without(x)))
}

/// EF1 check; `None` means the allocation is EF1, otherwise the witness for
/// the lexicographically first unresolvable envious pair.
pub fn check_ef1(inst: &Instance, alloc: &Allocation) -> Option<ViolationWitness> {
    let n = inst.agent_count();
    for i in 0..n {
        let v = inst.valuation(i);
        let a_i = alloc.bundle(i);
        for j in 0..n {
            if i == j || v.value(a_i) >= v.value(alloc.bundle(j)) {
                continue;
            }
            if !ef1_pair_resolvable(v, a_i, alloc.bundle(j)) {
                return Some(ViolationWitness {
                    envious: i,
                    envied: j,
                    kind: WitnessKind::Ef1NoResolvingItem,
                });
            }
        }
    }
    None
}

pub fn is_ef1(inst: &Instance, alloc: &Allocation) -> bool {
    check_ef1(inst, alloc).is_none()
}

/// All ordered pairs `(envious, envied)` whose envy no single removal
/// resolves.
pub fn ef1_violating_pairs(inst: &Instance, alloc: &Allocation) -> Vec<(usize, usize)> {
    let n = inst.agent_count();
    let mut out = Vec::new();
    for i in 0..n {
        let v = inst.valuation(i);
        let a_i = alloc.bundle(i);
        for j in 0..n {
            if i != j
                && v.value(a_i) < v.value(alloc.bundle(j))
                && !ef1_pair_resolvable(v, a_i, alloc.bundle(j))
            {
                out.push((i, j));
            }
        }
    }
    out
}

/// Items of `s` with strictly positive marginal value (removal decreases the
/// value) and strictly negative marginal value (removal increases it).
pub fn marginal_sets(v: &SetValuation, s: ItemSet) -> (ItemSet, ItemSet) {
    let val = v.value(s);
    let mut plus = ItemSet::EMPTY;
    let mut minus = ItemSet::EMPTY;
    for x in s.items() {
        let child = v.value(s.without(x));
        if val > child {
            plus = plus.with(x);
        } else if val < child {
            minus = minus.with(x);
        }
    }
    (plus, minus)
}

/// EFX⁺₋ check: for every envious pair, the union of positive-marginal items
/// of the envied bundle and negative-marginal items of the envious bundle
/// must be nonempty, and removing any one of them must resolve the envy.
pub fn check_efx_pm(inst: &Instance, alloc: &Allocation) -> Option<ViolationWitness> {
    let n = inst.agent_count();
    for i in 0..n {
        let v = inst.valuation(i);
        let a_i = alloc.bundle(i);
        for j in 0..n {
            if i == j || v.value(a_i) >= v.value(alloc.bundle(j)) {
                continue;
            }
            let a_j = alloc.bundle(j);
            let (mp, _) = marginal_sets(v, a_j);
            let (_, mm) = marginal_sets(v, a_i);
            let union = mp.union(mm);
            if union.is_empty() {
                return Some(ViolationWitness {
                    envious: i,
                    envied: j,
                    kind: WitnessKind::EfxEmptyMarginalUnion,
                });
            }
            for x in union.items() {
                if v.value(a_i.without(x)) < v.value(a_j.without(x)) {
                    return Some(ViolationWitness {
                        envious: i,
                        envied: j,
                        kind: WitnessKind::EfxUnresolvedItem { item: x },
                    });
                }
            }
        }
    }
    None
}

pub fn is_efx_pm(inst: &Instance, alloc: &Allocation) -> bool {
    check_efx_pm(inst, alloc).is_none()
}

/// Unordered agent pairs `(i, j)`, `i < j`, whose classifications match a
/// pattern under which an EF1 violation is possible. Every actual violating
/// pair is listed; listed pairs need not actually violate.
pub fn class_violation_filter(classes: &[AgentClassSet], regime: Regime) -> Vec<(usize, usize)> {
    let candidate = |x: AgentClassSet, y: AgentClassSet| -> bool {
        match regime {
            Regime::Negative => {
                (x.contains(ClassFlag::BadPlus)
                    && (y.contains(ClassFlag::Zero)
                        || y.contains(ClassFlag::FlexMinus)
                        || y.contains(ClassFlag::ResMinus)
                        || y.contains(ClassFlag::BadMinus)))
                    || (x.contains(ClassFlag::BadMinus)
                        && (y.contains(ClassFlag::Zero)
                            || y.contains(ClassFlag::FlexPlus)
                            || y.contains(ClassFlag::ResPlus)
                            || y.contains(ClassFlag::BadPlus)))
                    || (x.contains(ClassFlag::ResPlus) && y.contains(ClassFlag::ResMinus))
            }
            Regime::Positive => {
                (x.contains(ClassFlag::Bad)
                    && (y.contains(ClassFlag::Zero)
                        || y.contains(ClassFlag::Flex)
                        || y.contains(ClassFlag::ResStar)))
                    || (x.contains(ClassFlag::Zero)
                        && (y.contains(ClassFlag::Res) || y.contains(ClassFlag::ResStar)))
            }
        }
    };
    let mut out = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            if candidate(classes[i], classes[j]) || candidate(classes[j], classes[i]) {
                out.push((i, j));
            }
        }
    }
    out
}

fn budget_for(base: u64, m: usize, budget: u64) -> Result<u64> {
    let total = (base as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if total > budget as u128 {
        return Err(FairDivError::BudgetExceeded(format!(
            "{base}^{m} assignments exceed the budget of {budget}"
        )));
    }
    Ok(total as u64)
}

fn enumerate_allocations(
    n: usize,
    m: usize,
    complete_only: bool,
    budget: u64,
    mut visit: impl FnMut(&Allocation) -> bool,
) -> Result<Option<Allocation>> {
    // Digit d assigns item d's owner; base n, or n+1 with "unassigned" as the
    // extra top digit when partial allocations are enumerated. Counting with
    // the last item as the fastest digit yields lexicographic order.
    let base = if complete_only { n } else { n + 1 };
    budget_for(base as u64, m, budget)?;
    let mut digits = vec![0usize; m];
    loop {
        let mut bundles = vec![ItemSet::EMPTY; n];
        for (item, &agent) in digits.iter().enumerate() {
            if agent < n {
                bundles[agent] = bundles[agent].with(item);
            }
        }
        let alloc = Allocation::from_bundles_unchecked(bundles);
        if visit(&alloc) {
            return Ok(Some(alloc));
        }
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < base {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Exhaustively searches item-to-agent assignments in lexicographic order and
/// returns the first EF1 allocation, or `None` when no assignment is EF1.
/// With `complete_only` unset, every item may also stay unassigned.
pub fn brute_force_find_ef1(
    inst: &Instance,
    complete_only: bool,
    budget: u64,
) -> Result<Option<Allocation>> {
    enumerate_allocations(
        inst.agent_count(),
        inst.item_count(),
        complete_only,
        budget,
        |alloc| is_ef1(inst, alloc),
    )
}

/// First complete EFX⁺₋ allocation in lexicographic order, if any exists.
pub fn brute_force_find_efx_pm(inst: &Instance, budget: u64) -> Result<Option<Allocation>> {
    enumerate_allocations(
        inst.agent_count(),
        inst.item_count(),
        true,
        budget,
        |alloc| is_efx_pm(inst, alloc),
    )
}

// ------------------------------------------------------------------
// Quantity-grid EF1 for separable single-peaked instances. Items within a
// type are interchangeable, so removing "one item of type j" is the set-based
// removal of any item of that type.

pub fn quantity_envies(inst: &SspInstance, q: &QuantityAllocation, i: usize, k: usize) -> bool {
    inst.value(i, q.row(i)) < inst.value(i, q.row(k))
}

/// True if the envy of `i` toward `k` disappears after removing one item of
/// some type from `k`'s bundle, or (unless `from_envied_only`) from `i`'s.
pub fn quantity_pair_resolvable(
    inst: &SspInstance,
    q: &QuantityAllocation,
    i: usize,
    k: usize,
    from_envied_only: bool,
) -> bool {
    let own = inst.value(i, q.row(i));
    let other = inst.value(i, q.row(k));
    for j in 0..inst.type_count() {
        if q.get(k, j) > 0 {
            let mut row = q.row(k).to_vec();
            row[j] -= 1;
            if own >= inst.value(i, &row) {
                return true;
            }
        }
        if !from_envied_only && q.get(i, j) > 0 {
            let mut row = q.row(i).to_vec();
            row[j] -= 1;
            if inst.value(i, &row) >= other {
                return true;
            }
        }
    }
    false
}

/// First envious pair (in lexicographic order) that no single removal
/// resolves, or `None` when the quantity allocation is EF1.
pub fn check_ef1_quantity(inst: &SspInstance, q: &QuantityAllocation) -> Option<(usize, usize)> {
    let n = inst.agent_count();
    for i in 0..n {
        for k in 0..n {
            if i != k
                && quantity_envies(inst, q, i, k)
                && !quantity_pair_resolvable(inst, q, i, k, false)
            {
                return Some((i, k));
            }
        }
    }
    None
}

pub fn is_ef1_quantity(inst: &SspInstance, q: &QuantityAllocation) -> bool {
    check_ef1_quantity(inst, q).is_none()
}

/// Exhaustive EF1 search over quantity grids: enumerates, in lexicographic
/// order, every way to split each type's items among the agents, and returns
/// the first complete EF1 allocation. The budget caps the number of grids.
pub fn brute_force_find_ef1_quantity(
    inst: &SspInstance,
    budget: u64,
) -> Result<Option<QuantityAllocation>> {
    let n = inst.agent_count();
    let mut per_type: Vec<Vec<Vec<usize>>> = Vec::with_capacity(inst.type_count());
    let mut total: u128 = 1;
    for ty in inst.types() {
        let comps = compositions(ty.count, n);
        total = total.saturating_mul(comps.len() as u128);
        if total > budget as u128 {
            return Err(FairDivError::BudgetExceeded(format!(
                "quantity grids exceed the budget of {budget}"
            )));
        }
        per_type.push(comps);
    }
    let t = inst.type_count();
    let mut index = vec![0usize; t];
    loop {
        let counts: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..t).map(|j| per_type[j][index[j]][i]).collect())
            .collect();
        let q = QuantityAllocation::new(counts, inst)?;
        if is_ef1_quantity(inst, &q) {
            return Ok(Some(q));
        }
        let mut pos = t;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < per_type[pos].len() {
                break;
            }
            index[pos] = 0;
        }
    }
}

/// All ways to split `total` identical items among `n` agents, in
/// lexicographic order of the count vectors.
fn compositions(total: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fn rec(pos: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.clone());
            return;
        }
        for take in 0..=left {
            current[pos] = take;
            rec(pos + 1, left - take, current, out);
        }
    }
    rec(0, total, &mut current, &mut out);
    out
}

/// All ordered envy edges of the quantity allocation.
pub fn quantity_envy_edges(inst: &SspInstance, q: &QuantityAllocation) -> Vec<(usize, usize)> {
    let n = inst.agent_count();
    let mut out = Vec::new();
    for i in 0..n {
        for k in 0..n {
            if i != k && quantity_envies(inst, q, i, k) {
                out.push((i, k));
            }
        }
    }
    out
}
