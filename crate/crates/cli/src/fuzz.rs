//! Seeded solve-and-verify fuzzing with counterexample shrinking.
//!
//! Every case generates an instance from the class and a derived seed, runs
//! the matching solver, and checks the output with the independent verifier
//! together with the transfer-pass iteration bounds. A failing case is
//! shrunk by dropping items, agents, or types while the failure persists,
//! and written out as a reproduction instance file.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;

use crate::format::{save_json, InstanceFile};
use fairdiv_core::classify::Regime;
use fairdiv_core::gen::{gen_boolean, gen_ssp, gen_trilean};
use fairdiv_core::ssp::{ssp3_ef1, ssp_common_threshold_ef1, SspInstance, SspType};
use fairdiv_core::trilean::{trilean_neg_ef1_traced, trilean_pos_ef1_traced};
use fairdiv_core::verify::{check_ef1, check_ef1_quantity};
use fairdiv_core::{Instance, SetValuation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FuzzClass {
    /// Identical negative trilean `{0,-1,1}` instances.
    Negtrilean,
    /// Identical positive trilean `{0,1,2}` instances.
    Postrilean,
    /// Nonidentical Boolean `{0,-1}` instances.
    Boolneg,
    /// Three-agent separable single-peaked instances.
    Ssp3,
    /// Common-threshold separable single-peaked instances, up to 5 agents.
    SspCommon,
}

impl fmt::Display for FuzzClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FuzzClass::Negtrilean => "negtrilean",
            FuzzClass::Postrilean => "postrilean",
            FuzzClass::Boolneg => "boolneg",
            FuzzClass::Ssp3 => "ssp3",
            FuzzClass::SspCommon => "ssp-common",
        };
        f.write_str(name)
    }
}

enum FuzzInstance {
    SetFunction(Instance),
    Ssp(SspInstance),
}

fn generate(class: FuzzClass, seed: u64) -> Result<FuzzInstance> {
    let n = 2 + (seed % 3) as usize;
    let m = 4 + (seed % 5) as usize;
    Ok(match class {
        FuzzClass::Negtrilean => FuzzInstance::SetFunction(gen_trilean(n, m, -1, 1, true, seed)?),
        FuzzClass::Postrilean => FuzzInstance::SetFunction(gen_trilean(n, m, 1, 2, true, seed)?),
        FuzzClass::Boolneg => FuzzInstance::SetFunction(gen_boolean(n, m, true, false, seed)?),
        FuzzClass::Ssp3 => {
            FuzzInstance::Ssp(gen_ssp(3, 1 + (seed % 4) as usize, 9, 50, false, seed)?)
        }
        FuzzClass::SspCommon => FuzzInstance::Ssp(gen_ssp(
            1 + (seed % 5) as usize,
            1 + (seed % 4) as usize,
            9,
            50,
            true,
            seed,
        )?),
    })
}

/// Solves and verifies one instance. `Err` carries the failure description.
fn solve_and_verify(class: FuzzClass, inst: &FuzzInstance) -> std::result::Result<(), String> {
    match (class, inst) {
        (FuzzClass::Negtrilean, FuzzInstance::SetFunction(inst)) => {
            let (alloc, trace) =
                trilean_neg_ef1_traced(inst, false).map_err(|e| format!("solver error: {e}"))?;
            check_fix_bound(trace.fix, Regime::Negative)?;
            check_ef1(inst, &alloc).map_or(Ok(()), |w| Err(format!("EF1 violation: {w:?}")))
        }
        (FuzzClass::Postrilean, FuzzInstance::SetFunction(inst)) => {
            let (alloc, trace) =
                trilean_pos_ef1_traced(inst, false).map_err(|e| format!("solver error: {e}"))?;
            check_fix_bound(trace.fix, Regime::Positive)?;
            check_ef1(inst, &alloc).map_or(Ok(()), |w| Err(format!("EF1 violation: {w:?}")))
        }
        (FuzzClass::Boolneg, FuzzInstance::SetFunction(inst)) => {
            let alloc = fairdiv_core::boolean::neg_boolean_ef1(inst)
                .map_err(|e| format!("solver error: {e}"))?;
            check_ef1(inst, &alloc).map_or(Ok(()), |w| Err(format!("EF1 violation: {w:?}")))
        }
        (FuzzClass::Ssp3, FuzzInstance::Ssp(inst)) => {
            let (alloc, _) = ssp3_ef1(inst).map_err(|e| format!("solver error: {e}"))?;
            check_ef1_quantity(inst, &alloc)
                .map_or(Ok(()), |p| Err(format!("EF1 violation for pair {p:?}")))
        }
        (FuzzClass::SspCommon, FuzzInstance::Ssp(inst)) => {
            let (alloc, _) =
                ssp_common_threshold_ef1(inst).map_err(|e| format!("solver error: {e}"))?;
            check_ef1_quantity(inst, &alloc)
                .map_or(Ok(()), |p| Err(format!("EF1 violation for pair {p:?}")))
        }
        _ => Err("internal: class and instance kind disagree".into()),
    }
}

fn check_fix_bound(
    fix: Option<fairdiv_core::trilean::FixReport>,
    regime: Regime,
) -> std::result::Result<(), String> {
    if let Some(fix) = fix {
        let slack = match regime {
            Regime::Negative => 1,
            Regime::Positive => 2,
        };
        if fix.inner_iterations > 0 && fix.inner_iterations + slack > fix.entry_bundle_size {
            return Err(format!(
                "transfer pass ran {} iterations from a bundle of {}",
                fix.inner_iterations, fix.entry_bundle_size
            ));
        }
    }
    Ok(())
}

/// Removes item `x` from a dense instance by projecting every table onto the
/// subsets that avoid it.
fn drop_item(inst: &Instance, x: usize) -> Instance {
    let m = inst.item_count();
    let new_m = m - 1;
    let low_mask = (1u32 << x) - 1;
    let valuations: Vec<SetValuation> = inst
        .valuations()
        .iter()
        .map(|v| {
            let table: Vec<i64> = (0u32..(1u32 << new_m))
                .map(|s| {
                    let expanded = ((s & !low_mask) << 1) | (s & low_mask);
                    v.table()[expanded as usize]
                })
                .collect();
            SetValuation::new(new_m, table).expect("projection keeps the table well-formed")
        })
        .collect();
    Instance::new(valuations, inst.identical_flag()).expect("projection keeps agents consistent")
}

fn drop_agent(inst: &Instance, a: usize) -> Instance {
    let valuations: Vec<SetValuation> = inst
        .valuations()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != a)
        .map(|(_, v)| v.clone())
        .collect();
    Instance::new(valuations, inst.identical_flag()).expect("dropping an agent stays consistent")
}

fn shrink_set_function(class: FuzzClass, inst: Instance) -> Instance {
    let mut current = inst;
    loop {
        let mut reduced = None;
        for x in 0..current.item_count() {
            let cand = drop_item(&current, x);
            if solve_and_verify(class, &FuzzInstance::SetFunction(cand.clone())).is_err() {
                reduced = Some(cand);
                break;
            }
        }
        if reduced.is_none() && current.agent_count() > 2 {
            for a in 0..current.agent_count() {
                let cand = drop_agent(&current, a);
                if solve_and_verify(class, &FuzzInstance::SetFunction(cand.clone())).is_err() {
                    reduced = Some(cand);
                    break;
                }
            }
        }
        match reduced {
            Some(c) => current = c,
            None => return current,
        }
    }
}

fn ssp_without_type(inst: &SspInstance, j: usize) -> SspInstance {
    let types: Vec<SspType> = inst
        .types()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, t)| t.clone())
        .collect();
    SspInstance::new(inst.agent_count(), types).expect("type removal stays consistent")
}

fn ssp_with_fewer_items(inst: &SspInstance, j: usize) -> Option<SspInstance> {
    let ty = &inst.types()[j];
    if ty.count <= 1 {
        return None;
    }
    let new_count = ty.count - 1;
    let mut types = inst.types().to_vec();
    types[j] = SspType {
        count: new_count,
        thresholds: ty.thresholds.iter().map(|&t| t.min(new_count)).collect(),
        tables: ty.tables.iter().map(|t| t[..=new_count].to_vec()).collect(),
    };
    SspInstance::new(inst.agent_count(), types).ok()
}

fn ssp_without_agent(inst: &SspInstance, a: usize) -> SspInstance {
    let types: Vec<SspType> = inst
        .types()
        .iter()
        .map(|ty| SspType {
            count: ty.count,
            thresholds: ty
                .thresholds
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != a)
                .map(|(_, &t)| t)
                .collect(),
            tables: ty
                .tables
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != a)
                .map(|(_, t)| t.clone())
                .collect(),
        })
        .collect();
    SspInstance::new(inst.agent_count() - 1, types).expect("agent removal stays consistent")
}

fn shrink_ssp(class: FuzzClass, inst: SspInstance) -> SspInstance {
    let mut current = inst;
    loop {
        let mut reduced = None;
        for j in 0..current.type_count() {
            let cand = ssp_without_type(&current, j);
            if solve_and_verify(class, &FuzzInstance::Ssp(cand.clone())).is_err() {
                reduced = Some(cand);
                break;
            }
        }
        if reduced.is_none() {
            for j in 0..current.type_count() {
                if let Some(cand) = ssp_with_fewer_items(&current, j) {
                    if solve_and_verify(class, &FuzzInstance::Ssp(cand.clone())).is_err() {
                        reduced = Some(cand);
                        break;
                    }
                }
            }
        }
        if reduced.is_none() && class == FuzzClass::SspCommon && current.agent_count() > 1 {
            for a in 0..current.agent_count() {
                let cand = ssp_without_agent(&current, a);
                if solve_and_verify(class, &FuzzInstance::Ssp(cand.clone())).is_err() {
                    reduced = Some(cand);
                    break;
                }
            }
        }
        match reduced {
            Some(c) => current = c,
            None => return current,
        }
    }
}

/// Runs `count` cases from `seed`. On a failure, shrinks the instance,
/// writes it to the artifact path, and returns the fuzz exit code.
pub fn run_fuzz(class: FuzzClass, count: u64, seed: u64, artifact: Option<PathBuf>) -> i32 {
    for k in 0..count {
        let case_seed = seed.wrapping_add(k);
        let inst = match generate(class, case_seed) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("error: generator failed on seed {case_seed}: {e}");
                return crate::EXIT_IO;
            }
        };
        if let Err(reason) = solve_and_verify(class, &inst) {
            eprintln!("fuzz failure: class {class}, seed {case_seed}: {reason}");
            let path = artifact
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("fuzz-repro-{class}.json")));
            let meta = format!("fuzz reproduction: class {class}, seed {case_seed}: {reason}");
            let file = match inst {
                FuzzInstance::SetFunction(i) => {
                    let shrunk = shrink_set_function(class, i);
                    InstanceFile::from_instance(&shrunk, Some(case_seed), Some(meta))
                }
                FuzzInstance::Ssp(i) => {
                    let shrunk = shrink_ssp(class, i);
                    InstanceFile::from_ssp(&shrunk, Some(case_seed), Some(meta))
                }
            };
            if let Err(e) = write_artifact(&path, &file) {
                eprintln!("error: could not write the reproduction file: {e}");
                return crate::EXIT_IO;
            }
            eprintln!("reproduction instance written to {}", path.display());
            return crate::EXIT_FUZZ_FAIL;
        }
    }
    println!("fuzz: {count} {class} case(s) solved and verified");
    0
}

fn write_artifact(path: &Path, file: &InstanceFile) -> Result<()> {
    save_json(path, file)
}
