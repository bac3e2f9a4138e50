//! Bundle classification by `(value, child values)` patterns, detection of
//! the trilean kind of an instance, and canonicalization of `{0,a,b}` ranges
//! onto `{0,-1,1}` or `{0,1,2}`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{FairDivError, Result};
use crate::valuation::{child_summary, Instance, ItemSet, SetValuation};

/// Which canonical label set classification uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Values `{0,-1,1}`; also covers Boolean `{0,1}` and `{0,-1}` bundles.
    Negative,
    /// Values `{0,1,2}`; also covers Boolean `{0,1}` bundles.
    Positive,
}

impl Regime {
    pub fn allowed_values(self) -> &'static [i64] {
        match self {
            Regime::Negative => &[-1, 0, 1],
            Regime::Positive => &[0, 1, 2],
        }
    }
}

/// The value range of an instance, from most specific to most general.
///
/// `General` carries the one or two nonzero values encountered; `a == b`
/// encodes a degenerate range with a single nonzero value outside the named
/// kinds (for example `{0,-7}`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrileanKind {
    /// Range within `{0,1}`.
    BoolPos,
    /// Range within `{0,-1}`.
    BoolNeg,
    /// Range within `{0,-1,1}`.
    NegTrilean,
    /// Range within `{0,1,2}`.
    PosTrilean,
    /// Range `{0,a,b}` for arbitrary nonzero `a`, `b`.
    General { a: i64, b: i64 },
}

impl TrileanKind {
    /// The classification regime a kind maps onto, if unambiguous.
    pub fn regime(self) -> Option<Regime> {
        match self {
            TrileanKind::NegTrilean | TrileanKind::BoolNeg => Some(Regime::Negative),
            TrileanKind::PosTrilean => Some(Regime::Positive),
            TrileanKind::BoolPos | TrileanKind::General { .. } => None,
        }
    }
}

impl fmt::Display for TrileanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrileanKind::BoolPos => write!(f, "boolean {{0,1}}"),
            TrileanKind::BoolNeg => write!(f, "boolean {{0,-1}}"),
            TrileanKind::NegTrilean => write!(f, "negative trilean {{0,-1,1}}"),
            TrileanKind::PosTrilean => write!(f, "positive trilean {{0,1,2}}"),
            TrileanKind::General { a, b } if a == b => write!(f, "general {{0,{a}}}"),
            TrileanKind::General { a, b } => write!(f, "general {{0,{a},{b}}}"),
        }
    }
}

/// Membership flags a bundle can hold. The `Plus`/`Minus` variants belong to
/// the negative regime, the unsigned ones to the positive regime; `U`, `Zero`
/// and `Fav` are shared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassFlag {
    U,
    Zero,
    Fav,
    FlexPlus,
    FlexMinus,
    ResPlus,
    ResMinus,
    BadPlus,
    BadMinus,
    Flex,
    Res,
    ResStar,
    Bad,
}

const ALL_FLAGS: [ClassFlag; 13] = [
    ClassFlag::U,
    ClassFlag::Zero,
    ClassFlag::Fav,
    ClassFlag::FlexPlus,
    ClassFlag::FlexMinus,
    ClassFlag::ResPlus,
    ClassFlag::ResMinus,
    ClassFlag::BadPlus,
    ClassFlag::BadMinus,
    ClassFlag::Flex,
    ClassFlag::Res,
    ClassFlag::ResStar,
    ClassFlag::Bad,
];

/// The set of classification flags an agent currently holds.
#[derive(Clone, Copy, Default, PartialEq, Eq)]
pub struct AgentClassSet {
    bits: u16,
}

impl AgentClassSet {
    pub fn empty() -> Self {
        AgentClassSet { bits: 0 }
    }

    pub fn insert(&mut self, flag: ClassFlag) {
        self.bits |= 1 << flag as u16;
    }

    #[must_use]
    pub fn with(mut self, flag: ClassFlag) -> Self {
        self.insert(flag);
        self
    }

    pub fn contains(self, flag: ClassFlag) -> bool {
        self.bits & (1 << flag as u16) != 0
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ClassFlag> {
        ALL_FLAGS.into_iter().filter(move |&f| self.contains(f))
    }
}

impl fmt::Debug for AgentClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, flag) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{flag:?}")?;
        }
        write!(f, "}}")
    }
}

/// Classifies a bundle under `regime`, assuming all values in the bundle's
/// subset lattice lie in the regime's range. Exhaustive for in-range values:
/// the result is never empty.
pub fn classify_in_regime(v: &SetValuation, bundle: ItemSet, regime: Regime) -> AgentClassSet {
    let cs = child_summary(v, bundle);
    let mut out = AgentClassSet::empty();
    if bundle.is_empty() {
        out.insert(ClassFlag::U);
    }
    if cs.value == 0 {
        out.insert(ClassFlag::Zero);
    }
    match regime {
        Regime::Negative => {
            if cs.has_arrow(1, -1) || cs.has_arrow(-1, 1) {
                out.insert(ClassFlag::Fav);
            }
            if cs.has_arrow(0, 1) {
                out.insert(ClassFlag::FlexPlus);
            }
            if cs.has_arrow(0, -1) {
                out.insert(ClassFlag::FlexMinus);
            }
            if cs.has_arrow(1, 0) {
                out.insert(ClassFlag::ResPlus);
            }
            if cs.has_arrow(-1, 0) {
                out.insert(ClassFlag::ResMinus);
            }
            if !bundle.is_empty() && cs.has_double_arrow(1, &[1]) {
                out.insert(ClassFlag::BadPlus);
            }
            if !bundle.is_empty() && cs.has_double_arrow(-1, &[-1]) {
                out.insert(ClassFlag::BadMinus);
            }
        }
        Regime::Positive => {
            if cs.has_arrow(2, 0) || cs.has_arrow(0, 2) {
                out.insert(ClassFlag::Fav);
            }
            if cs.has_arrow(1, 0) {
                out.insert(ClassFlag::Flex);
            }
            if cs.has_arrow(2, 1) {
                out.insert(ClassFlag::Res);
            }
            if !bundle.is_empty() && cs.has_double_arrow(1, &[1, 2]) {
                out.insert(ClassFlag::ResStar);
            }
            if !bundle.is_empty() && cs.has_double_arrow(2, &[2]) {
                out.insert(ClassFlag::Bad);
            }
        }
    }
    out
}

/// Classifies a bundle under the regime of `kind`, first checking that every
/// subset of the bundle is valued within the regime's range.
pub fn classify_agent(
    v: &SetValuation,
    bundle: ItemSet,
    kind: TrileanKind,
) -> Result<AgentClassSet> {
    let regime = kind.regime().ok_or_else(|| {
        FairDivError::InvalidRegime(format!(
            "classification requires a negative or positive trilean regime, got {kind}"
        ))
    })?;
    if !v.range_within_ground(bundle, regime.allowed_values()) {
        return Err(FairDivError::InvalidRegime(format!(
            "bundle {bundle:?} has subset values outside the {kind} range"
        )));
    }
    Ok(classify_in_regime(v, bundle, regime))
}

/// Scans every table of the instance and returns the most specific matching
/// kind, or `NotTrilean` if more than two distinct nonzero values occur.
pub fn detect_kind(inst: &Instance) -> Result<TrileanKind> {
    let mut values: BTreeSet<i64> = BTreeSet::new();
    for v in inst.valuations() {
        values.extend(v.distinct_nonzero_values());
    }
    if values.len() > 2 {
        return Err(FairDivError::NotTrilean(format!(
            "found {} distinct nonzero values: {values:?}",
            values.len()
        )));
    }
    let within = |allowed: &[i64]| values.iter().all(|v| allowed.contains(v));
    if within(&[1]) {
        return Ok(TrileanKind::BoolPos);
    }
    if within(&[-1]) {
        return Ok(TrileanKind::BoolNeg);
    }
    if within(&[-1, 1]) {
        return Ok(TrileanKind::NegTrilean);
    }
    if within(&[1, 2]) {
        return Ok(TrileanKind::PosTrilean);
    }
    let vals: Vec<i64> = values.into_iter().collect();
    Ok(match vals.as_slice() {
        [x] => TrileanKind::General { a: *x, b: *x },
        [x, y] => {
            if *x < 0 && *y < 0 {
                // Both negative: a is the value closer to zero.
                TrileanKind::General { a: *y, b: *x }
            } else {
                TrileanKind::General { a: *x, b: *y }
            }
        }
        _ => unreachable!("nonzero value count checked above"),
    })
}

/// Relabeling between an original `{0,a,b}` range and its canonical range.
#[derive(Clone, Debug)]
pub struct ValueBackMap {
    /// `(canonical, original)` pairs; zero maps to zero implicitly.
    entries: Vec<(i64, i64)>,
    order_reversing: bool,
}

impl ValueBackMap {
    pub fn to_original(&self, canonical: i64) -> Option<i64> {
        if canonical == 0 {
            return Some(0);
        }
        self.entries
            .iter()
            .find(|(c, _)| *c == canonical)
            .map(|&(_, o)| o)
    }

    pub fn to_canonical(&self, original: i64) -> Option<i64> {
        if original == 0 {
            return Some(0);
        }
        self.entries
            .iter()
            .find(|(_, o)| *o == original)
            .map(|&(c, _)| c)
    }

    /// True when larger original values map to smaller canonical ones (the
    /// both-negative case).
    pub fn order_reversing(&self) -> bool {
        self.order_reversing
    }
}

/// Relabels an identical `{0,a,b}` instance onto `{0,-1,1}` or `{0,1,2}`.
///
/// With `a` or `b` nonnegative the relabeling preserves the value order, so
/// every envy comparison survives unchanged. With both negative, `0 > a > b`
/// maps to `a -> 1`, `b -> 2`, reversing the order; an EF1 allocation of the
/// canonical instance is still EF1 in the original one because the roles of
/// envied and envious swap symmetrically under identical valuations.
pub fn canonicalize_trilean(inst: &Instance, a: i64, b: i64) -> Result<(Instance, ValueBackMap)> {
    if a == 0 || b == 0 {
        return Err(FairDivError::InvalidRange(
            "canonicalization parameters a, b must be nonzero".into(),
        ));
    }
    let v = inst.common_valuation()?;
    if !v.range_within(&[0, a, b]) {
        return Err(FairDivError::InvalidRange(format!(
            "table has values outside {{0,{a},{b}}}"
        )));
    }
    let (entries, order_reversing): (Vec<(i64, i64)>, bool) = if a == b {
        // Degenerate single nonzero value.
        if a > 0 {
            (vec![(1, a)], false)
        } else {
            (vec![(-1, a)], false)
        }
    } else if a < 0 && b < 0 {
        let hi = a.max(b);
        let lo = a.min(b);
        (vec![(1, hi), (2, lo)], true)
    } else if a > 0 && b > 0 {
        let lo = a.min(b);
        let hi = a.max(b);
        (vec![(1, lo), (2, hi)], false)
    } else {
        let neg = a.min(b);
        let pos = a.max(b);
        (vec![(-1, neg), (1, pos)], false)
    };
    let map = ValueBackMap {
        entries,
        order_reversing,
    };
    let table: Vec<i64> = v
        .table()
        .iter()
        .map(|&orig| map.to_canonical(orig).expect("range checked above"))
        .collect();
    let canon = SetValuation::new(v.item_count(), table)?;
    let canon_inst = Instance::new(vec![canon; inst.agent_count()], true)?;
    Ok((canon_inst, map))
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

    fn spiky_instance() -> Instance {
        let v = spiky_valuation();
        Instance::new(vec![v.clone(), v], true).unwrap()
    }

    #[test]
    fn classify_pair_is_favourable() {
        let v = spiky_valuation();
        let cls = classify_agent(&v, ItemSet::from_items([0, 1]), TrileanKind::NegTrilean).unwrap();
        assert!(cls.contains(ClassFlag::Fav));
        assert_eq!(cls.iter().count(), 1);
    }

    #[test]
    fn classify_empty_bundle() {
        let v = spiky_valuation();
        let cls = classify_agent(&v, ItemSet::EMPTY, TrileanKind::NegTrilean).unwrap();
        assert!(cls.contains(ClassFlag::U));
        assert!(cls.contains(ClassFlag::Zero));
        assert!(!cls.contains(ClassFlag::FlexPlus));
        assert!(!cls.contains(ClassFlag::FlexMinus));
    }

    #[test]
    fn classify_full_set_is_bad_minus() {
        let v = spiky_valuation();
        let cls = classify_agent(&v, ItemSet::full(3), TrileanKind::NegTrilean).unwrap();
        assert!(cls.contains(ClassFlag::BadMinus));
        assert!(!cls.contains(ClassFlag::Fav));
    }

    #[test]
    fn classify_rejects_boolean_kinds_without_regime() {
        let v = spiky_valuation();
        let err = classify_agent(&v, ItemSet::EMPTY, TrileanKind::BoolPos).unwrap_err();
        assert!(matches!(err, FairDivError::InvalidRegime(_)));
    }

    #[test]
    fn classify_rejects_out_of_range_sublattice() {
        let v = SetValuation::new(2, vec![0, 2, 0, 1]).unwrap();
        let err = classify_agent(&v, ItemSet::full(2), TrileanKind::NegTrilean).unwrap_err();
        assert!(matches!(err, FairDivError::InvalidRegime(_)));
    }

    #[test]
    fn singleton_with_value_one_is_res_plus_not_bad() {
        let v = spiky_valuation();
        let cls = classify_in_regime(&v, ItemSet::singleton(0), Regime::Negative);
        assert!(cls.contains(ClassFlag::ResPlus));
        assert!(!cls.contains(ClassFlag::BadPlus));
    }

    #[test]
    fn detect_kind_examples() {
        assert_eq!(
            detect_kind(&spiky_instance()).unwrap(),
            TrileanKind::NegTrilean
        );

        let zero = SetValuation::new(2, vec![0; 4]).unwrap();
        let inst = Instance::new(vec![zero.clone(), zero], true).unwrap();
        assert_eq!(detect_kind(&inst).unwrap(), TrileanKind::BoolPos);

        let v = SetValuation::new(2, vec![0, -3, -7, -3]).unwrap();
        let inst = Instance::new(vec![v.clone(), v], true).unwrap();
        assert_eq!(
            detect_kind(&inst).unwrap(),
            TrileanKind::General { a: -3, b: -7 }
        );

        let v = SetValuation::new(2, vec![0, 1, 2, 3]).unwrap();
        let inst = Instance::new(vec![v], false).unwrap();
        assert!(matches!(
            detect_kind(&inst),
            Err(FairDivError::NotTrilean(_))
        ));
    }

    #[test]
    fn detect_kind_spans_agents() {
        let v1 = SetValuation::new(1, vec![0, 1]).unwrap();
        let v2 = SetValuation::new(1, vec![0, -1]).unwrap();
        let inst = Instance::new(vec![v1, v2], false).unwrap();
        assert_eq!(detect_kind(&inst).unwrap(), TrileanKind::NegTrilean);
    }

    #[test]
    fn canonicalize_both_negative_reverses_order() {
        let v = SetValuation::new(2, vec![0, -3, -7, -3]).unwrap();
        let inst = Instance::new(vec![v.clone(), v], true).unwrap();
        let (canon, map) = canonicalize_trilean(&inst, -3, -7).unwrap();
        assert!(map.order_reversing());
        assert_eq!(map.to_canonical(-3), Some(1));
        assert_eq!(map.to_canonical(-7), Some(2));
        assert_eq!(map.to_original(2), Some(-7));
        let cv = canon.valuation(0);
        assert_eq!(cv.table(), &[0, 1, 2, 1]);

        // Order reversal on all subset pairs.
        let orig = inst.valuation(0);
        for s in 0u32..4 {
            for t in 0u32..4 {
                let (s, t) = (ItemSet::from_bits(s), ItemSet::from_bits(t));
                assert_eq!(
                    orig.value(s) > orig.value(t),
                    cv.value(s) < cv.value(t),
                    "pair {s:?} {t:?}"
                );
            }
        }
    }

    #[test]
    fn canonicalize_identity_for_negative_trilean() {
        let inst = spiky_instance();
        let (canon, map) = canonicalize_trilean(&inst, 1, -1).unwrap();
        assert!(!map.order_reversing());
        assert_eq!(canon.valuation(0).table(), inst.valuation(0).table());
    }

    #[test]
    fn canonicalize_both_positive_preserves_order() {
        let v = SetValuation::new(2, vec![0, 5, 9, 5]).unwrap();
        let inst = Instance::new(vec![v.clone(), v], true).unwrap();
        let (canon, map) = canonicalize_trilean(&inst, 5, 9).unwrap();
        assert!(!map.order_reversing());
        let cv = canon.valuation(0);
        assert_eq!(cv.table(), &[0, 1, 2, 1]);
        let orig = inst.valuation(0);
        for s in 0u32..4 {
            for t in 0u32..4 {
                let (s, t) = (ItemSet::from_bits(s), ItemSet::from_bits(t));
                assert_eq!(orig.value(s) > orig.value(t), cv.value(s) > cv.value(t));
            }
        }
    }

    #[test]
    fn canonicalize_rejects_nonidentical() {
        let v1 = SetValuation::new(1, vec![0, -3]).unwrap();
        let v2 = SetValuation::new(1, vec![0, -7]).unwrap();
        let inst = Instance::new(vec![v1, v2], false).unwrap();
        assert!(matches!(
            canonicalize_trilean(&inst, -3, -7),
            Err(FairDivError::NotIdentical(_))
        ));
    }

    #[test]
    fn canonicalize_rejects_out_of_range() {
        let v = SetValuation::new(2, vec![0, -3, -7, 4]).unwrap();
        let inst = Instance::new(vec![v.clone(), v], true).unwrap();
        assert!(matches!(
            canonicalize_trilean(&inst, -3, -7),
            Err(FairDivError::InvalidRange(_))
        ));
    }
}
