//! Command-line interface: solve instances, verify allocations, search
//! exhaustively for fair allocations, fuzz the solvers, and run the packaged
//! demonstrations.

pub mod demo;
pub mod format;
pub mod fuzz;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use fairdiv_core::ssp::{
    expand_allocation, expand_to_set_instance, ssp3_ef1, ssp_common_threshold_ef1,
    QuantityAllocation, SspInstance,
};
use fairdiv_core::trilean::trilean_ef1;
use fairdiv_core::verify::{
    brute_force_find_ef1, brute_force_find_efx_pm, check_ef1, check_ef1_quantity, check_efx_pm,
    is_efx_pm, DEFAULT_BRUTE_BUDGET,
};
use fairdiv_core::{detect_kind, Allocation, FairDivError, Instance, TrileanKind};
use format::{
    load_allocation_file, load_instance_file, save_json, AllocationFile, FairnessReport,
    LoadedInstance, WitnessFile,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_SOLVE_FAIL: i32 = 2;
pub const EXIT_BRUTE_NONE: i32 = 3;
pub const EXIT_FUZZ_FAIL: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

/// Environment variable overriding the brute-force assignment budget.
pub const BUDGET_ENV_VAR: &str = "FAIRDIV_BUDGET";

#[derive(Parser)]
#[command(
    name = "fairdiv",
    about = "EF1 allocation solvers and fairness verification for indivisible items",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file and write a verified allocation.
    Solve {
        /// Instance file (JSON).
        input: PathBuf,
        /// Output path for the allocation file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check an allocation file against an instance.
    Verify {
        /// Instance file (JSON).
        input: PathBuf,
        /// Allocation file (JSON).
        allocation: PathBuf,
        /// Check EFX+- instead of EF1.
        #[arg(long)]
        efx: bool,
    },
    /// Exhaustively search item assignments for a fair allocation.
    Brute {
        /// Instance file (JSON).
        input: PathBuf,
        /// Search for an EFX+- allocation instead of EF1.
        #[arg(long)]
        efx: bool,
        /// Also enumerate partial allocations (items may stay unassigned).
        #[arg(long, conflicts_with = "efx")]
        partial: bool,
    },
    /// Generate, solve, and verify a stream of random instances.
    Fuzz {
        /// Instance class to generate.
        #[arg(long, value_enum)]
        class: fuzz::FuzzClass,
        /// Number of cases.
        #[arg(long, default_value_t = 100)]
        count: u64,
        /// Base seed; case k uses seed + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write a failing instance (default fuzz-repro-<class>.json).
        #[arg(long)]
        artifact: Option<PathBuf>,
    },
    /// Run a packaged demonstration.
    Demo {
        #[arg(value_enum)]
        what: DemoKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    /// Show by exhaustion that EFX+- allocations can fail to exist while EF1
    /// allocations do not.
    EfxNonexistence,
}

/// Parses arguments and runs a subcommand, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Solve { input, output } => cmd_solve(&input, output.as_deref()),
        Command::Verify {
            input,
            allocation,
            efx,
        } => cmd_verify(&input, &allocation, efx),
        Command::Brute {
            input,
            efx,
            partial,
        } => cmd_brute(&input, efx, partial),
        Command::Fuzz {
            class,
            count,
            seed,
            artifact,
        } => fuzz::run_fuzz(class, count, seed, artifact),
        Command::Demo { what } => match what {
            DemoKind::EfxNonexistence => demo::run_efx_nonexistence(brute_budget()),
        },
    }
}

/// The brute-force assignment budget, overridable via `FAIRDIV_BUDGET`.
pub fn brute_budget() -> u64 {
    std::env::var(BUDGET_ENV_VAR)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_BRUTE_BUDGET)
}

fn solver_id_for(kind: &TrileanKind) -> &'static str {
    match kind {
        TrileanKind::BoolPos => "boolean-ef1-identical",
        TrileanKind::BoolNeg => "neg-boolean-ef1",
        TrileanKind::NegTrilean => "trilean-neg-ef1",
        TrileanKind::PosTrilean => "trilean-pos-ef1",
        TrileanKind::General { .. } => "trilean-ef1-canonicalized",
    }
}

fn solve_set_function(inst: &Instance) -> Result<(Allocation, String), FairDivError> {
    let kind = detect_kind(inst)?;
    if inst.tables_identical() {
        let alloc = trilean_ef1(inst)?;
        Ok((alloc, solver_id_for(&kind).to_string()))
    } else if kind == TrileanKind::BoolNeg {
        let alloc = fairdiv_core::boolean::neg_boolean_ef1(inst)?;
        Ok((alloc, "neg-boolean-ef1".to_string()))
    } else {
        Err(FairDivError::NotIdentical(format!(
            "no solver covers nonidentical {kind} valuations"
        )))
    }
}

fn solve_ssp(inst: &SspInstance) -> Result<(QuantityAllocation, String), FairDivError> {
    let (q, trace, base) = if inst.common_thresholds().is_some() {
        let (q, trace) = ssp_common_threshold_ef1(inst)?;
        (q, trace, "ssp-common-threshold-ef1")
    } else if inst.agent_count() == 3 {
        let (q, trace) = ssp3_ef1(inst)?;
        (q, trace, "ssp-three-agents-ef1")
    } else {
        return Err(FairDivError::NotCommonThreshold(format!(
            "no solver covers {} agents with differing thresholds",
            inst.agent_count()
        )));
    };
    let id = match trace.recovery {
        None => base.to_string(),
        Some(fairdiv_core::ssp::SspRecovery::Relabeled { rotation }) => {
            format!("{base}+relabeled-retry-{rotation}")
        }
        Some(fairdiv_core::ssp::SspRecovery::Exhaustive) => {
            format!("{base}+exhaustive-fallback")
        }
    };
    Ok((q, id))
}

fn emit_allocation(path: Option<&std::path::Path>, file: &AllocationFile) -> i32 {
    match path {
        Some(p) => {
            if let Err(e) = save_json(p, file) {
                eprintln!("error: {e:#}");
                return EXIT_IO;
            }
            println!("allocation written to {}", p.display());
            EXIT_OK
        }
        None => {
            match format::canonical_json(file) {
                Ok(s) => print!("{s}"),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return EXIT_IO;
                }
            }
            EXIT_OK
        }
    }
}

fn cmd_solve(input: &std::path::Path, output: Option<&std::path::Path>) -> i32 {
    let loaded = match load_instance_file(input).and_then(|f| f.to_core()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_IO;
        }
    };
    match loaded {
        LoadedInstance::SetFunction(inst) => {
            let (alloc, solver) = match solve_set_function(&inst) {
                Ok(x) => x,
                Err(e) => {
                    eprintln!("solve error: {e}");
                    return EXIT_SOLVE_FAIL;
                }
            };
            // The solver's output never leaves without the independent
            // verifier agreeing.
            if let Some(w) = check_ef1(&inst, &alloc) {
                eprintln!("internal verification failure: solver output is not EF1: {w:?}");
                return EXIT_SOLVE_FAIL;
            }
            let efxpm = is_efx_pm(&inst, &alloc);
            let mut file = AllocationFile::from_allocation(&alloc);
            file.solver = Some(solver);
            file.fairness = Some(FairnessReport {
                ef1: true,
                efxpm: Some(efxpm),
                witnesses: Vec::new(),
            });
            file.trace = Some(format!(
                "complete allocation of {} items to {} agents",
                inst.item_count(),
                inst.agent_count()
            ));
            emit_allocation(output, &file)
        }
        LoadedInstance::Ssp(inst) => {
            let (q, solver) = match solve_ssp(&inst) {
                Ok(x) => x,
                Err(e) => {
                    eprintln!("solve error: {e}");
                    return EXIT_SOLVE_FAIL;
                }
            };
            if let Some((i, k)) = check_ef1_quantity(&inst, &q) {
                eprintln!(
                    "internal verification failure: agent {i} has unresolvable envy toward {k}"
                );
                return EXIT_SOLVE_FAIL;
            }
            // EFX status via the labeled expansion, when small enough to
            // densify.
            let efxpm = if inst.total_items() <= 12 {
                expand_to_set_instance(&inst)
                    .and_then(|si| expand_allocation(&inst, &q).map(|a| is_efx_pm(&si, &a)))
                    .ok()
            } else {
                None
            };
            let mut file = AllocationFile::from_quantities(&q);
            file.solver = Some(solver);
            file.fairness = Some(FairnessReport {
                ef1: true,
                efxpm,
                witnesses: Vec::new(),
            });
            file.trace = Some(format!(
                "complete allocation of {} items across {} types to {} agents",
                inst.total_items(),
                inst.type_count(),
                inst.agent_count()
            ));
            emit_allocation(output, &file)
        }
    }
}

fn cmd_verify(input: &std::path::Path, allocation: &std::path::Path, efx: bool) -> i32 {
    let loaded = match load_instance_file(input).and_then(|f| f.to_core()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_IO;
        }
    };
    let alloc_file = match load_allocation_file(allocation) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_IO;
        }
    };
    match loaded {
        LoadedInstance::SetFunction(inst) => {
            let alloc = match alloc_file.to_allocation(&inst) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return EXIT_IO;
                }
            };
            let witness = if efx {
                check_efx_pm(&inst, &alloc)
            } else {
                check_ef1(&inst, &alloc)
            };
            report_verdict(efx, witness.map(|w| WitnessFile::from_witness(&w)))
        }
        LoadedInstance::Ssp(inst) => {
            let q = match alloc_file.to_quantities(&inst) {
                Ok(q) => q,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return EXIT_IO;
                }
            };
            if efx {
                let (si, a) = match expand_to_set_instance(&inst)
                    .and_then(|si| expand_allocation(&inst, &q).map(|a| (si, a)))
                {
                    Ok(x) => x,
                    Err(e) => {
                        eprintln!("error: EFX check needs a dense expansion: {e}");
                        return EXIT_IO;
                    }
                };
                report_verdict(
                    true,
                    check_efx_pm(&si, &a).map(|w| WitnessFile::from_witness(&w)),
                )
            } else {
                match check_ef1_quantity(&inst, &q) {
                    None => {
                        println!("EF1: pass");
                        EXIT_OK
                    }
                    Some((i, k)) => {
                        println!("EF1: fail");
                        println!(
                            "witness: agent {i} envies agent {k}; no single-item removal resolves it"
                        );
                        EXIT_VERIFY_FAIL
                    }
                }
            }
        }
    }
}

fn report_verdict(efx: bool, witness: Option<WitnessFile>) -> i32 {
    let label = if efx { "EFX+-" } else { "EF1" };
    match witness {
        None => {
            println!("{label}: pass");
            EXIT_OK
        }
        Some(w) => {
            println!("{label}: fail");
            let item = w.item.map(|x| format!(" (item {x})")).unwrap_or_default();
            println!(
                "witness: agent {} envies agent {}; {}{item}",
                w.envious, w.envied, w.kind
            );
            EXIT_VERIFY_FAIL
        }
    }
}

fn cmd_brute(input: &std::path::Path, efx: bool, partial: bool) -> i32 {
    let loaded = match load_instance_file(input).and_then(|f| f.to_core()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_IO;
        }
    };
    let budget = brute_budget();
    let inst = match loaded {
        LoadedInstance::SetFunction(inst) => inst,
        LoadedInstance::Ssp(ssp) => match expand_to_set_instance(&ssp) {
            Ok(inst) => inst,
            Err(e) => {
                eprintln!("error: exhaustive search needs a dense expansion: {e}");
                return EXIT_USAGE;
            }
        },
    };
    let result = if efx {
        brute_force_find_efx_pm(&inst, budget)
    } else {
        brute_force_find_ef1(&inst, !partial, budget)
    };
    match result {
        Ok(Some(alloc)) => {
            let mut file = AllocationFile::from_allocation(&alloc);
            file.solver = Some(if efx {
                "brute-force-efxpm".into()
            } else {
                "brute-force-ef1".into()
            });
            match format::canonical_json(&file) {
                Ok(s) => print!("{s}"),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return EXIT_IO;
                }
            }
            EXIT_OK
        }
        Ok(None) => {
            println!("none");
            EXIT_BRUTE_NONE
        }
        Err(e) => {
            eprintln!("error: {e} (raise {BUDGET_ENV_VAR} to allow a larger search)");
            EXIT_USAGE
        }
    }
}
