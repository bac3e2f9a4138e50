//! The EFX⁺₋ non-existence demonstration: a three-item instance with two
//! identical agents where every complete allocation fails EFX⁺₋ while EF1
//! allocations exist.

use fairdiv_core::verify::{brute_force_find_ef1, check_efx_pm, is_ef1, WitnessKind};
use fairdiv_core::{Allocation, Instance, ItemSet, SetValuation};

/// Two identical agents, three items: the empty set is worth 0, singletons 1,
/// and anything larger -1. Negative trilean, and also separable
/// single-peaked with a single type (peak at one item).
pub fn efx_nonexistence_instance() -> Instance {
    let table: Vec<i64> = (0u32..8)
        .map(|s| match s.count_ones() {
            0 => 0,
            1 => 1,
            _ => -1,
        })
        .collect();
    let v = SetValuation::new(3, table).expect("static table");
    Instance::new(vec![v.clone(), v], true).expect("static instance")
}

fn fmt_set(s: ItemSet) -> String {
    let inner: Vec<String> = s.items().map(|x| format!("x{}", x + 1)).collect();
    format!("{{{}}}", inner.join(","))
}

/// Enumerates all complete allocations, prints the case table, and checks
/// that none is EFX⁺₋ while an EF1 allocation exists. Returns the process
/// exit code.
pub fn run_efx_nonexistence(budget: u64) -> i32 {
    let inst = efx_nonexistence_instance();
    let n = inst.agent_count();
    let m = inst.item_count();
    let total = (n as u32).pow(m as u32);

    println!("instance: {n} identical agents, {m} items");
    println!("          v(S) = 0 if S is empty, 1 if |S| = 1, -1 otherwise");
    println!();
    println!(
        "{:<16} {:<16} {:>5} {:>5}  {:<6} reason",
        "A1", "A2", "v(A1)", "v(A2)", "EFX+-"
    );

    let mut efx_count = 0u32;
    for code in 0..total {
        let mut bundles = vec![ItemSet::EMPTY; n];
        let mut c = code;
        for item in (0..m).rev() {
            bundles[(c % n as u32) as usize] = bundles[(c % n as u32) as usize].with(item);
            c /= n as u32;
        }
        let alloc = Allocation::new(bundles, m).expect("enumerated bundles are disjoint");
        let witness = check_efx_pm(&inst, &alloc);
        let verdict = if witness.is_none() { "yes" } else { "no" };
        if witness.is_none() {
            efx_count += 1;
        }
        let reason = match &witness {
            None => String::new(),
            Some(w) => match w.kind {
                WitnessKind::EfxEmptyMarginalUnion => format!(
                    "agent {} envies agent {}; marginal union is empty",
                    w.envious + 1,
                    w.envied + 1
                ),
                WitnessKind::EfxUnresolvedItem { item } => format!(
                    "agent {} envies agent {}; removing x{} leaves the envy",
                    w.envious + 1,
                    w.envied + 1,
                    item + 1
                ),
                WitnessKind::Ef1NoResolvingItem => unreachable!("EFX witness kinds only"),
            },
        };
        let v = inst.valuation(0);
        println!(
            "{:<16} {:<16} {:>5} {:>5}  {:<6} {reason}",
            fmt_set(alloc.bundle(0)),
            fmt_set(alloc.bundle(1)),
            v.value(alloc.bundle(0)),
            v.value(alloc.bundle(1)),
            verdict
        );
    }

    println!();
    println!("EFX+- allocations found: {efx_count} of {total} complete allocations");

    let ef1 = match brute_force_find_ef1(&inst, true, budget) {
        Ok(found) => found,
        Err(e) => {
            eprintln!("error: EF1 search failed: {e}");
            return crate::EXIT_SOLVE_FAIL;
        }
    };
    match &ef1 {
        Some(alloc) => {
            debug_assert!(is_ef1(&inst, alloc));
            println!(
                "EF1 allocation exists: A1 = {}, A2 = {}",
                fmt_set(alloc.bundle(0)),
                fmt_set(alloc.bundle(1))
            );
        }
        None => println!("EF1 allocation exists: none found"),
    }

    if efx_count == 0 && ef1.is_some() {
        0
    } else {
        eprintln!("error: expected no EFX+- allocation and at least one EF1 allocation");
        crate::EXIT_SOLVE_FAIL
    }
}
