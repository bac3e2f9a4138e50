//! EF1 solvers for identical trilean valuations.
//!
//! The negative solver (`{0,-1,1}`) assigns favourable sets while they exist,
//! then flexible sets built from inclusion-wise maximal opposite-sign
//! subsets, and finally either hands the residue to the last agent or
//! dispatches to a Boolean subroutine; a transfer pass repairs the one
//! violation shape that can remain (a bad last bundle against flexible
//! agents). The positive solver (`{0,1,2}`) mirrors this with its own label
//! set. `trilean_ef1` canonicalizes an arbitrary `{0,a,b}` range first and
//! dispatches on the detected kind.

use crate::boolean::{boolean_identical_engine, neg_boolean_engine, BooleanStep};
use crate::classify::{
    canonicalize_trilean, classify_in_regime, detect_kind, AgentClassSet, ClassFlag, Regime,
    TrileanKind,
};
use crate::error::{FairDivError, Result};
use crate::search::{find_any_subset_with_value, find_favourable, find_maximal_subset_with_value};
use crate::valuation::{Allocation, Instance, ItemSet, SetValuation};
use crate::verify::ef1_pair_resolvable;

/// Which stage of a trilean solve produced an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseTag {
    Favourable,
    Flexible,
    ZeroResidue,
    Residue,
    BooleanDispatch,
    FixTransfer,
    FixOuterEnd,
}

#[derive(Clone, Debug)]
pub struct TraceEvent {
    pub phase: PhaseTag,
    pub agent: usize,
    pub items: ItemSet,
    pub class_after: AgentClassSet,
}

/// Where the solver returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalBranch {
    /// Favourable and flexible sets consumed every item.
    AllPlaced,
    /// The residue was zero-valued and went to the next agent.
    ZeroResidue,
    /// Agents ran out; the last agent took the residue and violations were
    /// fixed by transfers.
    LastAgentResidue,
    /// Residue dispatched to the identical `{0,1}` subroutine.
    BooleanDispatchPos,
    /// Residue dispatched to the `{0,-1}` subroutine.
    BooleanDispatchNeg,
}

/// Transfer-pass accounting: bundle size of the last agent at entry and the
/// loop iteration counts.
#[derive(Clone, Copy, Debug)]
pub struct FixReport {
    pub entry_bundle_size: usize,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
}

/// Snapshot taken when a Boolean subroutine returns, before any fixing.
#[derive(Clone, Debug)]
pub struct BooleanDispatchReport {
    pub first_agent: usize,
    pub positive: bool,
    pub allocation: Allocation,
    pub assignment_order: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SolverTrace {
    pub regime: Regime,
    pub events: Vec<TraceEvent>,
    pub terminal: TerminalBranch,
    pub fix: Option<FixReport>,
    pub boolean_dispatch: Option<BooleanDispatchReport>,
}

/// Final allocation constructor; debug builds re-check completeness and EF1
/// through the independent verifier.
fn sealed_allocation(inst: &Instance, bundles: Vec<ItemSet>) -> Result<Allocation> {
    let allocation = Allocation::new(bundles, inst.item_count())?;
    debug_assert!(allocation.is_complete(inst.item_count()));
    debug_assert!(
        crate::verify::is_ef1(inst, &allocation),
        "solver output failed the EF1 check"
    );
    Ok(allocation)
}

struct EventSink {
    keep: bool,
    events: Vec<TraceEvent>,
}

impl EventSink {
    fn new(keep: bool) -> Self {
        EventSink {
            keep,
            events: Vec::new(),
        }
    }

    fn push(&mut self, phase: PhaseTag, agent: usize, items: ItemSet, class_after: AgentClassSet) {
        if self.keep {
            self.events.push(TraceEvent {
                phase,
                agent,
                items,
                class_after,
            });
        }
    }
}

/// EF1 allocation for identical negative trilean (`{0,-1,1}`) valuations,
/// with a full event trace.
pub fn trilean_neg_ef1(inst: &Instance) -> Result<(Allocation, SolverTrace)> {
    trilean_neg_ef1_traced(inst, true)
}

/// Same solver; `keep_events` drops per-step events for fuzzing throughput
/// while retaining the terminal branch, fix report, and dispatch snapshot.
pub fn trilean_neg_ef1_traced(
    inst: &Instance,
    keep_events: bool,
) -> Result<(Allocation, SolverTrace)> {
    let v = inst.common_valuation()?;
    if !v.range_within(&[-1, 0, 1]) {
        return Err(FairDivError::InvalidRange(
            "valuation has values outside {0,-1,1}".into(),
        ));
    }
    let regime = Regime::Negative;
    let n = inst.agent_count();
    let m = inst.item_count();
    let mut bundles = vec![ItemSet::EMPTY; n];
    let mut sink = EventSink::new(keep_events);
    let mut remaining = ItemSet::full(m);
    let mut next = 0usize;

    while next + 1 < n {
        let Some(s) = find_favourable(v, remaining, regime) else {
            break;
        };
        bundles[next] = s;
        sink.push(
            PhaseTag::Favourable,
            next,
            s,
            classify_in_regime(v, s, regime),
        );
        remaining = remaining.minus(s);
        next += 1;
    }

    while !remaining.is_empty() && next + 1 < n {
        let val = v.value(remaining);
        if val == 0 {
            break;
        }
        let target = -val;
        // No subset of the opposite sign means the residue is Boolean-valued;
        // fall through to the dispatch branches below. The witness must be
        // maximal in the strong sense: no superset of it may take the
        // opposite value, or later transfers into this bundle could flip it.
        let Some(s) = find_maximal_subset_with_value(v, remaining, target) else {
            break;
        };
        let extra = remaining
            .minus(s)
            .lowest()
            .expect("a maximal subset of the opposite sign is proper");
        let bundle = s.with(extra);
        // Maximality of s rules out value `target`, and a favourable bundle
        // would contradict the exhausted favourable loop, so this is a
        // flexible zero-valued bundle.
        debug_assert_eq!(v.value(bundle), 0);
        bundles[next] = bundle;
        sink.push(
            PhaseTag::Flexible,
            next,
            bundle,
            classify_in_regime(v, bundle, regime),
        );
        remaining = remaining.minus(bundle);
        next += 1;
    }

    if remaining.is_empty() {
        let allocation = sealed_allocation(inst, bundles)?;
        return Ok((
            allocation,
            SolverTrace {
                regime,
                events: sink.events,
                terminal: TerminalBranch::AllPlaced,
                fix: None,
                boolean_dispatch: None,
            },
        ));
    }
    if v.value(remaining) == 0 {
        bundles[next] = remaining;
        sink.push(
            PhaseTag::ZeroResidue,
            next,
            remaining,
            classify_in_regime(v, remaining, regime),
        );
        let allocation = sealed_allocation(inst, bundles)?;
        return Ok((
            allocation,
            SolverTrace {
                regime,
                events: sink.events,
                terminal: TerminalBranch::ZeroResidue,
                fix: None,
                boolean_dispatch: None,
            },
        ));
    }
    if next == n - 1 {
        bundles[next] = remaining;
        sink.push(
            PhaseTag::Residue,
            next,
            remaining,
            classify_in_regime(v, remaining, regime),
        );
        let fix = fix_violations(v, &mut bundles, regime, &mut sink)?;
        let allocation = sealed_allocation(inst, bundles)?;
        return Ok((
            allocation,
            SolverTrace {
                regime,
                events: sink.events,
                terminal: TerminalBranch::LastAgentResidue,
                fix: Some(fix),
                boolean_dispatch: None,
            },
        ));
    }

    let rest: Vec<usize> = (next..n).collect();
    let mut steps: Vec<BooleanStep> = Vec::new();
    let positive = find_any_subset_with_value(v, remaining, -1).is_none();
    if positive {
        boolean_identical_engine(v, remaining, &rest, &mut bundles, &mut steps)?;
    } else {
        neg_boolean_engine(inst, remaining, &rest, &mut bundles, &mut steps)?;
    }
    for step in &steps {
        sink.push(
            PhaseTag::BooleanDispatch,
            step.agent,
            step.items,
            classify_in_regime(v, step.items, regime),
        );
    }
    let dispatch = BooleanDispatchReport {
        first_agent: next,
        positive,
        allocation: Allocation::new(bundles.clone(), m)?,
        assignment_order: steps.iter().map(|s| s.agent).collect(),
    };
    let fix = fix_violations(v, &mut bundles, regime, &mut sink)?;
    let allocation = sealed_allocation(inst, bundles)?;
    Ok((
        allocation,
        SolverTrace {
            regime,
            events: sink.events,
            terminal: if positive {
                TerminalBranch::BooleanDispatchPos
            } else {
                TerminalBranch::BooleanDispatchNeg
            },
            fix: Some(fix),
            boolean_dispatch: Some(dispatch),
        },
    ))
}

/// EF1 allocation for identical positive trilean (`{0,1,2}`) valuations.
pub fn trilean_pos_ef1(inst: &Instance) -> Result<(Allocation, SolverTrace)> {
    trilean_pos_ef1_traced(inst, true)
}

pub fn trilean_pos_ef1_traced(
    inst: &Instance,
    keep_events: bool,
) -> Result<(Allocation, SolverTrace)> {
    let v = inst.common_valuation()?;
    if !v.range_within(&[0, 1, 2]) {
        return Err(FairDivError::InvalidRange(
            "valuation has values outside {0,1,2}".into(),
        ));
    }
    let regime = Regime::Positive;
    let n = inst.agent_count();
    let m = inst.item_count();
    let mut bundles = vec![ItemSet::EMPTY; n];
    let mut sink = EventSink::new(keep_events);
    let mut remaining = ItemSet::full(m);
    let mut next = 0usize;

    while next + 1 < n {
        let Some(s) = find_favourable(v, remaining, regime) else {
            break;
        };
        bundles[next] = s;
        sink.push(
            PhaseTag::Favourable,
            next,
            s,
            classify_in_regime(v, s, regime),
        );
        remaining = remaining.minus(s);
        next += 1;
    }

    while !remaining.is_empty() && next + 1 < n {
        let val = v.value(remaining);
        if val == 0 {
            break;
        }
        // Without a 2-valued subset the residue is Boolean {0,1}-valued.
        if find_any_subset_with_value(v, remaining, 2).is_none() {
            break;
        }
        let s = find_maximal_subset_with_value(v, remaining, 0)
            .expect("the empty set is always zero-valued");
        let extra = remaining
            .minus(s)
            .lowest()
            .expect("a maximal zero-valued subset is proper here");
        let bundle = s.with(extra);
        // Value 2 would make the bundle favourable (2 -> 0), value 0 would
        // contradict maximality of s.
        debug_assert_eq!(v.value(bundle), 1);
        bundles[next] = bundle;
        sink.push(
            PhaseTag::Flexible,
            next,
            bundle,
            classify_in_regime(v, bundle, regime),
        );
        remaining = remaining.minus(bundle);
        next += 1;
    }

    if remaining.is_empty() {
        let allocation = sealed_allocation(inst, bundles)?;
        return Ok((
            allocation,
            SolverTrace {
                regime,
                events: sink.events,
                terminal: TerminalBranch::AllPlaced,
                fix: None,
                boolean_dispatch: None,
            },
        ));
    }
    if v.value(remaining) == 0 {
        bundles[next] = remaining;
        sink.push(
            PhaseTag::ZeroResidue,
            next,
            remaining,
            classify_in_regime(v, remaining, regime),
        );
        let allocation = sealed_allocation(inst, bundles)?;
        return Ok((
            allocation,
            SolverTrace {
                regime,
                events: sink.events,
                terminal: TerminalBranch::ZeroResidue,
                fix: None,
                boolean_dispatch: None,
            },
        ));
    }
    if next == n - 1 {
        bundles[next] = remaining;
        sink.push(
            PhaseTag::Residue,
            next,
            remaining,
            classify_in_regime(v, remaining, regime),
        );
        let fix = fix_violations(v, &mut bundles, regime, &mut sink)?;
        let allocation = sealed_allocation(inst, bundles)?;
        return Ok((
            allocation,
            SolverTrace {
                regime,
                events: sink.events,
                terminal: TerminalBranch::LastAgentResidue,
                fix: Some(fix),
                boolean_dispatch: None,
            },
        ));
    }

    // Residue is Boolean {0,1}-valued; the subroutine's output needs no
    // fixing in the positive regime.
    let rest: Vec<usize> = (next..n).collect();
    let mut steps: Vec<BooleanStep> = Vec::new();
    boolean_identical_engine(v, remaining, &rest, &mut bundles, &mut steps)?;
    for step in &steps {
        sink.push(
            PhaseTag::BooleanDispatch,
            step.agent,
            step.items,
            classify_in_regime(v, step.items, regime),
        );
    }
    let dispatch = BooleanDispatchReport {
        first_agent: next,
        positive: true,
        allocation: Allocation::new(bundles.clone(), m)?,
        assignment_order: steps.iter().map(|s| s.agent).collect(),
    };
    let allocation = sealed_allocation(inst, bundles)?;
    Ok((
        allocation,
        SolverTrace {
            regime,
            events: sink.events,
            terminal: TerminalBranch::BooleanDispatchPos,
            fix: None,
            boolean_dispatch: Some(dispatch),
        },
    ))
}

/// Repairs EF1 violations by moving items from the last agent's bundle to
/// flexible agents, one at a time, until one side is resolved.
///
/// Every violation in the input must pair the last agent holding a bad
/// bundle with a flexible agent of the opposite sign; anything else is
/// rejected as `UnexpectedViolation`.
fn fix_violations(
    v: &SetValuation,
    bundles: &mut [ItemSet],
    regime: Regime,
    sink: &mut EventSink,
) -> Result<FixReport> {
    let n = bundles.len();
    let last = n - 1;
    let entry_bundle_size = bundles[last].len();

    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j
                && v.value(bundles[i]) < v.value(bundles[j])
                && !ef1_pair_resolvable(v, bundles[i], bundles[j])
            {
                violations.push((i, j));
            }
        }
    }
    if violations.is_empty() {
        return Ok(FixReport {
            entry_bundle_size,
            inner_iterations: 0,
            outer_iterations: 0,
        });
    }

    let cls_last = classify_in_regime(v, bundles[last], regime);
    for &(a, b) in &violations {
        let other = if a == last {
            b
        } else if b == last {
            a
        } else {
            return Err(FairDivError::UnexpectedViolation(format!(
                "violating pair ({a},{b}) does not involve the last agent"
            )));
        };
        let cls_other = classify_in_regime(v, bundles[other], regime);
        let repairable = match regime {
            Regime::Negative => {
                (cls_last.contains(ClassFlag::BadPlus) && cls_other.contains(ClassFlag::FlexMinus))
                    || (cls_last.contains(ClassFlag::BadMinus)
                        && cls_other.contains(ClassFlag::FlexPlus))
            }
            Regime::Positive => {
                cls_last.contains(ClassFlag::Bad) && cls_other.contains(ClassFlag::Flex)
            }
        };
        if !repairable {
            return Err(FairDivError::UnexpectedViolation(format!(
                "pair ({a},{b}) with classes {cls_last:?} / {cls_other:?} matches no repairable pattern"
            )));
        }
    }

    let (bad_flag, flex_flag, res_flag) = match regime {
        Regime::Negative => {
            if cls_last.contains(ClassFlag::BadPlus) {
                (ClassFlag::BadPlus, ClassFlag::FlexMinus, ClassFlag::ResPlus)
            } else {
                (
                    ClassFlag::BadMinus,
                    ClassFlag::FlexPlus,
                    ClassFlag::ResMinus,
                )
            }
        }
        Regime::Positive => (ClassFlag::Bad, ClassFlag::Flex, ClassFlag::Res),
    };

    let mut inner_iterations = 0usize;
    let mut outer_iterations = 0usize;
    while classify_in_regime(v, bundles[last], regime).contains(bad_flag) {
        let Some(i) =
            (0..last).find(|&i| classify_in_regime(v, bundles[i], regime).contains(flex_flag))
        else {
            break;
        };
        loop {
            let Some(x) = bundles[last].lowest() else {
                return Err(FairDivError::UnexpectedViolation(
                    "the last bundle emptied before either side resolved".into(),
                ));
            };
            bundles[last] = bundles[last].without(x);
            bundles[i] = bundles[i].with(x);
            inner_iterations += 1;
            sink.push(
                PhaseTag::FixTransfer,
                i,
                ItemSet::singleton(x),
                classify_in_regime(v, bundles[i], regime),
            );
            if classify_in_regime(v, bundles[i], regime).contains(res_flag)
                || classify_in_regime(v, bundles[last], regime).contains(res_flag)
            {
                break;
            }
        }
        outer_iterations += 1;
        sink.push(
            PhaseTag::FixOuterEnd,
            i,
            ItemSet::EMPTY,
            classify_in_regime(v, bundles[i], regime),
        );
        sink.push(
            PhaseTag::FixOuterEnd,
            last,
            ItemSet::EMPTY,
            classify_in_regime(v, bundles[last], regime),
        );
    }
    Ok(FixReport {
        entry_bundle_size,
        inner_iterations,
        outer_iterations,
    })
}

/// Public transfer-repair pass for identical negative trilean allocations.
pub fn fix_ef1_violations_neg(inst: &Instance, alloc: &Allocation) -> Result<Allocation> {
    fix_public(inst, alloc, Regime::Negative)
}

/// Public transfer-repair pass for identical positive trilean allocations.
pub fn fix_ef1_violations_pos(inst: &Instance, alloc: &Allocation) -> Result<Allocation> {
    fix_public(inst, alloc, Regime::Positive)
}

fn fix_public(inst: &Instance, alloc: &Allocation, regime: Regime) -> Result<Allocation> {
    let v = inst.common_valuation()?;
    if !v.range_within(regime.allowed_values()) {
        return Err(FairDivError::InvalidRange(format!(
            "valuation has values outside the {regime:?} regime range"
        )));
    }
    if alloc.agent_count() != inst.agent_count() {
        return Err(FairDivError::Structure(
            "allocation agent count does not match the instance".into(),
        ));
    }
    let mut bundles = alloc.bundles().to_vec();
    let mut sink = EventSink::new(false);
    fix_violations(v, &mut bundles, regime, &mut sink)?;
    Allocation::new(bundles, inst.item_count())
}

/// EF1 solver for any identical trilean instance: detects the kind,
/// canonicalizes a general `{0,a,b}` range, and dispatches. The returned
/// item assignment is EF1 under the original valuations.
pub fn trilean_ef1(inst: &Instance) -> Result<Allocation> {
    inst.common_valuation()?;
    let kind = detect_kind(inst)?;
    match kind {
        TrileanKind::BoolPos => crate::boolean::boolean_ef1_identical(inst),
        TrileanKind::BoolNeg => crate::boolean::neg_boolean_ef1(inst),
        TrileanKind::NegTrilean => trilean_neg_ef1_traced(inst, false).map(|(a, _)| a),
        TrileanKind::PosTrilean => trilean_pos_ef1_traced(inst, false).map(|(a, _)| a),
        TrileanKind::General { a, b } => {
            let (canon, _) = canonicalize_trilean(inst, a, b)?;
            // The canonical kind is always one of the named ones.
            trilean_ef1(&canon)
        }
    }
}
