//! On-disk JSON formats for instances and allocations, with field-path
//! diagnostics on validation failures.
//!
//! Set-function instances store one dense table per agent, indexed by the
//! subset's bit pattern (item `k` is bit `k`). Separable single-peaked
//! instances store per-type counts, thresholds, and value tables. Canonical
//! output is pretty-printed JSON with a fixed field order, so re-saving a
//! loaded file is byte-identical.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fairdiv_core::ssp::{QuantityAllocation, SspInstance, SspType};
use fairdiv_core::verify::ViolationWitness;
use fairdiv_core::{Allocation, Instance, ItemSet, SetValuation, MAX_ITEMS};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InstanceFile {
    #[serde(rename = "set-function")]
    SetFunction(SetFunctionFile),
    #[serde(rename = "ssp")]
    Ssp(SspFile),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetFunctionFile {
    pub agents: usize,
    pub identical: bool,
    pub items: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub values: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SspFile {
    pub agents: usize,
    #[serde(default)]
    pub identical: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub types: Vec<SspTypeFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SspTypeFile {
    pub count: usize,
    pub tables: Vec<Vec<i64>>,
    pub thresholds: Vec<usize>,
}

/// A parsed and validated instance of either kind.
pub enum LoadedInstance {
    SetFunction(Instance),
    Ssp(SspInstance),
}

impl InstanceFile {
    pub fn to_core(&self) -> Result<LoadedInstance> {
        match self {
            InstanceFile::SetFunction(f) => f.to_core().map(LoadedInstance::SetFunction),
            InstanceFile::Ssp(f) => f.to_core().map(LoadedInstance::Ssp),
        }
    }

    pub fn from_instance(inst: &Instance, seed: Option<u64>, meta: Option<String>) -> Self {
        InstanceFile::SetFunction(SetFunctionFile {
            agents: inst.agent_count(),
            identical: inst.identical_flag(),
            items: inst.item_count(),
            meta,
            seed,
            values: inst
                .valuations()
                .iter()
                .map(|v| v.table().to_vec())
                .collect(),
        })
    }

    pub fn from_ssp(inst: &SspInstance, seed: Option<u64>, meta: Option<String>) -> Self {
        InstanceFile::Ssp(SspFile {
            agents: inst.agent_count(),
            identical: false,
            meta,
            seed,
            types: inst
                .types()
                .iter()
                .map(|ty| SspTypeFile {
                    count: ty.count,
                    tables: ty.tables.clone(),
                    thresholds: ty.thresholds.clone(),
                })
                .collect(),
        })
    }
}

impl SetFunctionFile {
    pub fn to_core(&self) -> Result<Instance> {
        if self.agents == 0 {
            bail!("agents: must be at least 1");
        }
        if self.items > MAX_ITEMS {
            bail!(
                "items: {} exceeds the loader cap of {MAX_ITEMS}",
                self.items
            );
        }
        if self.values.len() != self.agents {
            bail!(
                "values: expected {} agent tables, found {}",
                self.agents,
                self.values.len()
            );
        }
        let expect = 1usize << self.items;
        let mut valuations = Vec::with_capacity(self.agents);
        for (i, table) in self.values.iter().enumerate() {
            if table.len() != expect {
                bail!(
                    "values[{i}]: expected 2^{} = {expect} entries, found {}",
                    self.items,
                    table.len()
                );
            }
            if table[0] != 0 {
                bail!(
                    "values[{i}][0]: the empty set must be valued 0, found {}",
                    table[0]
                );
            }
            valuations.push(
                SetValuation::new(self.items, table.clone())
                    .with_context(|| format!("values[{i}]"))?,
            );
        }
        if self.identical {
            for i in 1..self.agents {
                if self.values[i] != self.values[0] {
                    bail!(
                        "values[{i}]: identical flag is set but the table differs from values[0]"
                    );
                }
            }
        }
        Instance::new(valuations, self.identical).context("instance")
    }
}

impl SspFile {
    pub fn to_core(&self) -> Result<SspInstance> {
        if self.agents == 0 {
            bail!("agents: must be at least 1");
        }
        let mut types = Vec::with_capacity(self.types.len());
        for (j, ty) in self.types.iter().enumerate() {
            if ty.thresholds.len() != self.agents {
                bail!(
                    "types[{j}].thresholds: expected {} entries, found {}",
                    self.agents,
                    ty.thresholds.len()
                );
            }
            if ty.tables.len() != self.agents {
                bail!(
                    "types[{j}].tables: expected {} agent tables, found {}",
                    self.agents,
                    ty.tables.len()
                );
            }
            for (i, table) in ty.tables.iter().enumerate() {
                if table.len() != ty.count + 1 {
                    bail!(
                        "types[{j}].tables[{i}]: expected {} entries for counts 0..={}, found {}",
                        ty.count + 1,
                        ty.count,
                        table.len()
                    );
                }
                if table[0] != 0 {
                    bail!("types[{j}].tables[{i}][0]: zero items must be valued 0");
                }
                let peak = ty.thresholds[i].min(ty.count);
                for x in 1..=ty.count {
                    if (x <= peak && table[x] < table[x - 1])
                        || (x > peak && table[x] > table[x - 1])
                    {
                        bail!(
                            "types[{j}].tables[{i}]: not single-peaked around threshold {} at count {x}",
                            ty.thresholds[i]
                        );
                    }
                }
            }
            if self.identical {
                if ty.thresholds.iter().any(|&t| t != ty.thresholds[0]) {
                    bail!("types[{j}].thresholds: identical flag is set but thresholds differ");
                }
                if ty.tables.iter().any(|t| t != &ty.tables[0]) {
                    bail!("types[{j}].tables: identical flag is set but tables differ");
                }
            }
            types.push(SspType {
                count: ty.count,
                thresholds: ty.thresholds.clone(),
                tables: ty.tables.clone(),
            });
        }
        SspInstance::new(self.agents, types).context("instance")
    }
}

/// Allocation output: per-agent sorted item-index lists for set-function
/// instances, per-agent per-type counts for separable single-peaked ones.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AllocationFile {
    pub bundles: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FairnessReport {
    pub ef1: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efxpm: Option<bool>,
    pub witnesses: Vec<WitnessFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessFile {
    pub envied: usize,
    pub envious: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<usize>,
    pub kind: String,
}

impl WitnessFile {
    pub fn from_witness(w: &ViolationWitness) -> Self {
        use fairdiv_core::verify::WitnessKind;
        let (kind, item) = match w.kind {
            WitnessKind::Ef1NoResolvingItem => ("ef1-no-resolving-item", None),
            WitnessKind::EfxEmptyMarginalUnion => ("efx-empty-marginal-union", None),
            WitnessKind::EfxUnresolvedItem { item } => ("efx-unresolved-item", Some(item)),
        };
        WitnessFile {
            envied: w.envied,
            envious: w.envious,
            item,
            kind: kind.to_string(),
        }
    }
}

impl AllocationFile {
    pub fn from_allocation(alloc: &Allocation) -> Self {
        AllocationFile {
            bundles: alloc
                .bundles()
                .iter()
                .map(|b| b.items().collect())
                .collect(),
            fairness: None,
            solver: None,
            trace: None,
        }
    }

    pub fn from_quantities(q: &QuantityAllocation) -> Self {
        AllocationFile {
            bundles: q.rows().to_vec(),
            fairness: None,
            solver: None,
            trace: None,
        }
    }

    /// Interprets the bundles as item-index lists for a set-function
    /// instance.
    pub fn to_allocation(&self, inst: &Instance) -> Result<Allocation> {
        if self.bundles.len() != inst.agent_count() {
            bail!(
                "bundles: expected {} agents, found {}",
                inst.agent_count(),
                self.bundles.len()
            );
        }
        let mut sets = Vec::with_capacity(self.bundles.len());
        for (i, items) in self.bundles.iter().enumerate() {
            let mut s = ItemSet::EMPTY;
            for &x in items {
                if x >= inst.item_count() {
                    bail!("bundles[{i}]: item index {x} out of range");
                }
                if s.contains(x) {
                    bail!("bundles[{i}]: item {x} listed twice");
                }
                s = s.with(x);
            }
            sets.push(s);
        }
        Allocation::new(sets, inst.item_count()).context("bundles")
    }

    /// Interprets the bundles as per-type counts for a separable
    /// single-peaked instance.
    pub fn to_quantities(&self, inst: &SspInstance) -> Result<QuantityAllocation> {
        QuantityAllocation::new(self.bundles.clone(), inst).context("bundles")
    }
}

/// Canonical serialization: pretty JSON with a fixed field order and a
/// trailing newline. Re-saving a loaded file is byte-identical.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn load_instance_file(path: &Path) -> Result<InstanceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_allocation_file(path: &Path) -> Result<AllocationFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, canonical_json(value)?).with_context(|| format!("writing {}", path.display()))
}
