//! EF1 solvers for Boolean valuations.
//!
//! For possibly nonidentical `{0,-1}` valuations, the solver repeatedly
//! assigns an inclusion-wise minimal set that every unserved agent values at
//! -1 to an agent whose envy that set resolves; the tail hands the residue to
//! a zero-valuing agent when one exists, else to the last agent standing.
//!
//! For identical `{0,1}` valuations, the solver hands out inclusion-wise
//! minimal value-1 sets in agent order and gives the final agent the residue.
//! Both produce allocations with the resolved-or-zero structure the trilean
//! solvers rely on.

use crate::error::{FairDivError, Result};
use crate::search::{find_any_subset_with_value, find_minimal_common_value};
use crate::valuation::{Allocation, Instance, ItemSet, SetValuation};

/// Which part of a Boolean solver produced an assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BooleanPhase {
    /// Inclusion-wise minimal set assigned inside the main loop.
    MinimalSet,
    /// Residue handed to an agent that values it at zero.
    ZeroResidue,
    /// Residue handed to the last remaining agent.
    Residue,
}

#[derive(Clone, Debug)]
pub struct BooleanStep {
    pub agent: usize,
    pub items: ItemSet,
    pub phase: BooleanPhase,
}

/// Allocation plus the assignment order that produced it.
#[derive(Clone, Debug)]
pub struct BooleanRun {
    pub allocation: Allocation,
    pub steps: Vec<BooleanStep>,
}

pub(crate) fn neg_boolean_engine(
    inst: &Instance,
    ground: ItemSet,
    agents: &[usize],
    bundles: &mut [ItemSet],
    steps: &mut Vec<BooleanStep>,
) -> Result<()> {
    for &a in agents {
        if !inst.valuation(a).range_within_ground(ground, &[0, -1]) {
            return Err(FairDivError::InvalidRange(format!(
                "agent {a} values some subset of the ground set outside {{0,-1}}"
            )));
        }
    }
    if agents.is_empty() {
        return Err(FairDivError::Structure("no agents to serve".into()));
    }
    let mut active: Vec<usize> = agents.to_vec();
    let mut remaining = ground;
    while !remaining.is_empty()
        && active.len() >= 2
        && active
            .iter()
            .all(|&a| inst.valuation(a).value(remaining) == -1)
    {
        let vs: Vec<&SetValuation> = active.iter().map(|&a| inst.valuation(a)).collect();
        let s = find_minimal_common_value(&vs, remaining, -1)?;
        // Minimality guarantees an agent whose value drops to 0 when some
        // item of s is removed.
        let chosen = active
            .iter()
            .copied()
            .find(|&a| {
                let v = inst.valuation(a);
                s.items().any(|x| v.value(s.without(x)) == 0)
            })
            .ok_or_else(|| {
                FairDivError::Structure(
                    "minimal common set has no agent with a zero-valued child".into(),
                )
            })?;
        bundles[chosen] = s;
        steps.push(BooleanStep {
            agent: chosen,
            items: s,
            phase: BooleanPhase::MinimalSet,
        });
        active.retain(|&a| a != chosen);
        remaining = remaining.minus(s);
    }
    if !remaining.is_empty() && active.len() >= 2 {
        // The loop guard failed on the all-minus-one test, so some active
        // agent values the residue at zero.
        let chosen = active
            .iter()
            .copied()
            .find(|&a| inst.valuation(a).value(remaining) == 0)
            .ok_or_else(|| {
                FairDivError::Structure("no active agent values the residue at zero".into())
            })?;
        bundles[chosen] = remaining;
        steps.push(BooleanStep {
            agent: chosen,
            items: remaining,
            phase: BooleanPhase::ZeroResidue,
        });
    } else {
        let chosen = active[0];
        bundles[chosen] = remaining;
        steps.push(BooleanStep {
            agent: chosen,
            items: remaining,
            phase: BooleanPhase::Residue,
        });
    }
    Ok(())
}

/// EF1 allocation for `{0,-1}` valuations, identical or not.
pub fn neg_boolean_ef1(inst: &Instance) -> Result<Allocation> {
    neg_boolean_ef1_traced(inst).map(|run| run.allocation)
}

pub fn neg_boolean_ef1_traced(inst: &Instance) -> Result<BooleanRun> {
    for (a, v) in inst.valuations().iter().enumerate() {
        if !v.range_within(&[0, -1]) {
            return Err(FairDivError::InvalidRange(format!(
                "agent {a} has values outside {{0,-1}}"
            )));
        }
    }
    let agents: Vec<usize> = (0..inst.agent_count()).collect();
    let mut bundles = vec![ItemSet::EMPTY; inst.agent_count()];
    let mut steps = Vec::new();
    neg_boolean_engine(inst, inst.all_items(), &agents, &mut bundles, &mut steps)?;
    Ok(BooleanRun {
        allocation: Allocation::new(bundles, inst.item_count())?,
        steps,
    })
}

pub(crate) fn boolean_identical_engine(
    v: &SetValuation,
    ground: ItemSet,
    agents: &[usize],
    bundles: &mut [ItemSet],
    steps: &mut Vec<BooleanStep>,
) -> Result<()> {
    if !v.range_within_ground(ground, &[0, 1]) {
        return Err(FairDivError::InvalidRange(
            "some subset of the ground set is valued outside {0,1}".into(),
        ));
    }
    if agents.is_empty() {
        return Err(FairDivError::Structure("no agents to serve".into()));
    }
    let mut remaining = ground;
    for (pos, &agent) in agents.iter().enumerate() {
        if pos + 1 == agents.len() {
            bundles[agent] = remaining;
            steps.push(BooleanStep {
                agent,
                items: remaining,
                phase: BooleanPhase::Residue,
            });
            return Ok(());
        }
        // Cardinality-first enumeration makes the witness inclusion-wise
        // minimal: every child is valued 0.
        match find_any_subset_with_value(v, remaining, 1) {
            Some(s) => {
                bundles[agent] = s;
                steps.push(BooleanStep {
                    agent,
                    items: s,
                    phase: BooleanPhase::MinimalSet,
                });
                remaining = remaining.minus(s);
            }
            None => {
                // No value-1 subset is left, so the residue and all its
                // subsets are worth 0.
                bundles[agent] = remaining;
                steps.push(BooleanStep {
                    agent,
                    items: remaining,
                    phase: BooleanPhase::ZeroResidue,
                });
                return Ok(());
            }
        }
    }
    Ok(())
}

/// EF1 allocation for identical `{0,1}` valuations.
pub fn boolean_ef1_identical(inst: &Instance) -> Result<Allocation> {
    boolean_ef1_identical_traced(inst).map(|run| run.allocation)
}

pub fn boolean_ef1_identical_traced(inst: &Instance) -> Result<BooleanRun> {
    let v = inst.common_valuation()?;
    if !v.range_within(&[0, 1]) {
        return Err(FairDivError::InvalidRange(
            "valuation has values outside {0,1}".into(),
        ));
    }
    let agents: Vec<usize> = (0..inst.agent_count()).collect();
    let mut bundles = vec![ItemSet::EMPTY; inst.agent_count()];
    let mut steps = Vec::new();
    boolean_identical_engine(v, inst.all_items(), &agents, &mut bundles, &mut steps)?;
    Ok(BooleanRun {
        allocation: Allocation::new(bundles, inst.item_count())?,
        steps,
    })
}

/// Structural postcondition of the identical Boolean solvers, with
/// `sign = -1` for the `{0,-1}` case and `sign = 1` for `{0,1}`: either every
/// listed agent holds a resolved-or-zero bundle, or all but the last listed
/// agent hold resolved bundles.
pub fn boolean_structure_holds(
    v: &SetValuation,
    bundles: &[ItemSet],
    agents: &[usize],
    sign: i64,
) -> bool {
    let is_res = |s: ItemSet| v.value(s) == sign && s.items().any(|x| v.value(s.without(x)) == 0);
    let cond1 = agents
        .iter()
        .all(|&a| is_res(bundles[a]) || v.value(bundles[a]) == 0);
    let cond2 = !agents.is_empty()
        && agents[..agents.len() - 1]
            .iter()
            .all(|&a| is_res(bundles[a]));
    cond1 || cond2
}
