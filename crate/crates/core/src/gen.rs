//! Seeded deterministic instance generators for fuzzing and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FairDivError, Result};
use crate::ssp::{SspInstance, SspType};
use crate::valuation::{Instance, SetValuation};

/// Cap on generated item counts; loaded instances may go up to `MAX_ITEMS`.
pub const MAX_GENERATED_ITEMS: usize = 12;

fn gen_tables(n: usize, m: usize, palette: &[i64], identical: bool, seed: u64) -> Result<Instance> {
    if m > MAX_GENERATED_ITEMS {
        return Err(FairDivError::Structure(format!(
            "generator caps items at {MAX_GENERATED_ITEMS}, got {m}"
        )));
    }
    if n == 0 {
        return Err(FairDivError::Structure("need at least one agent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_table = |rng: &mut ChaCha8Rng| -> Vec<i64> {
        (0usize..1 << m)
            .map(|s| {
                if s == 0 {
                    0
                } else {
                    palette[rng.random_range(0..palette.len())]
                }
            })
            .collect()
    };
    let valuations: Vec<SetValuation> = if identical {
        let table = draw_table(&mut rng);
        vec![SetValuation::new(m, table)?; n]
    } else {
        (0..n)
            .map(|_| SetValuation::new(m, draw_table(&mut rng)))
            .collect::<Result<_>>()?
    };
    Instance::new(valuations, identical)
}

/// Random trilean instance: every nonempty subset's value is drawn
/// independently and uniformly from `{0, a, b}`.
pub fn gen_trilean(
    n: usize,
    m: usize,
    a: i64,
    b: i64,
    identical: bool,
    seed: u64,
) -> Result<Instance> {
    if a == 0 || b == 0 {
        return Err(FairDivError::InvalidRange(
            "palette values a, b must be nonzero".into(),
        ));
    }
    gen_tables(n, m, &[0, a, b], identical, seed)
}

/// Random Boolean instance over `{0,-1}` (negative) or `{0,1}`.
pub fn gen_boolean(
    n: usize,
    m: usize,
    negative: bool,
    identical: bool,
    seed: u64,
) -> Result<Instance> {
    let palette = if negative { [0, -1] } else { [0, 1] };
    gen_tables(n, m, &palette, identical, seed)
}

/// Random identical trilean instance containing no favourable subset at all:
/// values are drawn level by level, excluding for each set the values that
/// would pair it favourably with one of its children. Uniform tables almost
/// always contain favourable sets, so this family drives the solvers through
/// their flexible, dispatch, and transfer branches instead.
pub fn gen_trilean_no_favourable(
    n: usize,
    m: usize,
    positive: bool,
    seed: u64,
) -> Result<Instance> {
    if m > MAX_GENERATED_ITEMS {
        return Err(FairDivError::Structure(format!(
            "generator caps items at {MAX_GENERATED_ITEMS}, got {m}"
        )));
    }
    if n == 0 {
        return Err(FairDivError::Structure("need at least one agent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = vec![0i64; 1 << m];
    for s in 1usize..(1 << m) {
        let mut child_has = [false; 3];
        let mut bits = s;
        while bits != 0 {
            let x = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let c = table[s & !(1 << x)];
            let slot = if positive { c } else { c + 1 };
            child_has[slot as usize] = true;
        }
        let mut allowed: Vec<i64> = if positive {
            vec![0, 1, 2]
        } else {
            vec![0, -1, 1]
        };
        if positive {
            // 2 -> 0 and 0 -> 2 are the favourable patterns.
            if child_has[0] {
                allowed.retain(|&v| v != 2);
            }
            if child_has[2] {
                allowed.retain(|&v| v != 0);
            }
        } else {
            // 1 -> -1 and -1 -> 1 are the favourable patterns.
            if child_has[0] {
                allowed.retain(|&v| v != 1);
            }
            if child_has[2] {
                allowed.retain(|&v| v != -1);
            }
        }
        table[s] = allowed[rng.random_range(0..allowed.len())];
    }
    let v = SetValuation::new(m, table)?;
    Instance::new(vec![v; n], true)
}

/// Random separable single-peaked instance. Per type: a count in
/// `1..=max_count`, thresholds uniform in `0..=count` (shared across agents
/// when `common_thresholds` is set), and tables built from uniform step
/// deltas in `0..=value_bound`, nondecreasing up to the threshold and
/// nonincreasing after it.
pub fn gen_ssp(
    n: usize,
    t: usize,
    max_count: usize,
    value_bound: i64,
    common_thresholds: bool,
    seed: u64,
) -> Result<SspInstance> {
    if n == 0 {
        return Err(FairDivError::Structure("need at least one agent".into()));
    }
    if max_count == 0 {
        return Err(FairDivError::Structure(
            "max_count must be at least one".into(),
        ));
    }
    if value_bound < 0 {
        return Err(FairDivError::Structure(
            "value_bound must be nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut types = Vec::with_capacity(t);
    for _ in 0..t {
        let count = rng.random_range(1..=max_count);
        let thresholds: Vec<usize> = if common_thresholds {
            vec![rng.random_range(0..=count); n]
        } else {
            (0..n).map(|_| rng.random_range(0..=count)).collect()
        };
        let tables: Vec<Vec<i64>> = thresholds
            .iter()
            .map(|&theta| {
                let mut table = vec![0i64; count + 1];
                for x in 1..=count {
                    let delta = rng.random_range(0..=value_bound);
                    table[x] = if x <= theta {
                        table[x - 1] + delta
                    } else {
                        table[x - 1] - delta
                    };
                }
                table
            })
            .collect();
        types.push(SspType {
            count,
            thresholds,
            tables,
        });
    }
    SspInstance::new(n, types)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{detect_kind, TrileanKind};

    #[test]
    fn trilean_generation_is_deterministic() {
        let a = gen_trilean(3, 5, -1, 1, true, 42).unwrap();
        let b = gen_trilean(3, 5, -1, 1, true, 42).unwrap();
        for i in 0..3 {
            assert_eq!(a.valuation(i).table(), b.valuation(i).table());
        }
        let c = gen_trilean(3, 5, -1, 1, true, 43).unwrap();
        assert_ne!(a.valuation(0).table(), c.valuation(0).table());
    }

    #[test]
    fn generated_range_is_contained() {
        let inst = gen_trilean(2, 6, -3, -7, true, 7).unwrap();
        for v in inst.valuations() {
            assert!(v.range_within(&[0, -3, -7]));
        }
        assert!(matches!(
            detect_kind(&inst),
            Ok(TrileanKind::General { .. }) | Ok(TrileanKind::BoolPos)
        ));
    }

    #[test]
    fn identical_flag_replicates_one_table() {
        let inst = gen_trilean(4, 4, -1, 1, true, 9).unwrap();
        assert!(inst.tables_identical());
        let inst = gen_boolean(3, 4, true, false, 9).unwrap();
        for v in inst.valuations() {
            assert!(v.range_within(&[0, -1]));
        }
    }

    #[test]
    fn value_histogram_is_roughly_uniform() {
        // Chi-squared against the uniform draw over {0,a,b}, 2 degrees of
        // freedom; 13.8155 is the 99.9% quantile.
        let mut counts = [0u64; 3];
        let mut total = 0u64;
        for seed in 0..40 {
            let inst = gen_trilean(1, 9, -1, 1, true, seed).unwrap();
            for (s, &val) in inst.valuation(0).table().iter().enumerate() {
                if s == 0 {
                    continue;
                }
                let slot = match val {
                    0 => 0,
                    -1 => 1,
                    1 => 2,
                    _ => unreachable!(),
                };
                counts[slot] += 1;
                total += 1;
            }
        }
        assert!(total >= 10_000);
        let expected = total as f64 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 <= 13.8155, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn no_favourable_generator_excludes_favourable_sets() {
        use crate::classify::Regime;
        use crate::search::find_favourable;
        use crate::valuation::ItemSet;
        for seed in 0..30u64 {
            let inst = gen_trilean_no_favourable(2, 6, false, seed).unwrap();
            let v = inst.valuation(0);
            assert!(v.range_within(&[-1, 0, 1]));
            assert_eq!(find_favourable(v, ItemSet::full(6), Regime::Negative), None);

            let inst = gen_trilean_no_favourable(2, 6, true, seed).unwrap();
            let v = inst.valuation(0);
            assert!(v.range_within(&[0, 1, 2]));
            assert_eq!(find_favourable(v, ItemSet::full(6), Regime::Positive), None);
        }
    }

    #[test]
    fn ssp_generation_is_single_peaked_and_deterministic() {
        let a = gen_ssp(4, 3, 9, 50, false, 11).unwrap();
        let b = gen_ssp(4, 3, 9, 50, false, 11).unwrap();
        for (ta, tb) in a.types().iter().zip(b.types()) {
            assert_eq!(ta.count, tb.count);
            assert_eq!(ta.thresholds, tb.thresholds);
            assert_eq!(ta.tables, tb.tables);
        }
        // Construction already passed SspInstance::new validation.
        let common = gen_ssp(5, 4, 6, 20, true, 3).unwrap();
        assert!(common.common_thresholds().is_some());
    }
}
