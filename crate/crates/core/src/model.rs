//! Scenario data model: materials, factories, fleet, and order allocations.
//!
//! A [`Scenario`] is loaded from JSON and validated once; everything downstream
//! works on material and factory indices into its lists.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A raw material consumed by the single product.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub id: String,
    /// Units of this material consumed per unit of product.
    pub per_unit: f64,
}

/// A production site holding material stock.
#[derive(Debug, Clone, PartialEq)]
pub struct Factory {
    pub id: String,
    pub unit_production_cost: f64,
    /// Stock on hand, indexed like [`Scenario::materials`].
    pub inventory: Vec<f64>,
}

/// Identical trucks available for inter-factory transfers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    /// Material units one truck carries, summed over material kinds.
    pub truck_capacity: f64,
    pub max_trucks: u64,
    /// Cost of one truck trip.
    pub unit_trip_cost: f64,
}

/// A validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub order: u64,
    pub materials: Vec<Material>,
    pub factories: Vec<Factory>,
    pub fleet: Fleet,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    order: i64,
    materials: Vec<MaterialDoc>,
    factories: Vec<FactoryDoc>,
    fleet: FleetDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialDoc {
    id: String,
    per_unit: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactoryDoc {
    id: String,
    unit_production_cost: f64,
    #[serde(default)]
    inventory: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FleetDoc {
    truck_capacity: f64,
    max_trucks: i64,
    unit_trip_cost: f64,
}

fn non_negative(field: impl FnOnce() -> String, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::validation(field(), "must be finite"));
    }
    if value < 0.0 {
        return Err(Error::validation(field(), format!("must be >= 0, got {value}")));
    }
    Ok(value)
}

/// Parses and validates a scenario document.
///
/// Inventory entries missing for a declared material read as zero.
pub fn load_scenario(raw: &[u8]) -> Result<Scenario> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Parse(e.to_string()))?;
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Scenario::from_doc(doc)
}

impl Scenario {
    fn from_doc(doc: ScenarioDoc) -> Result<Self> {
        let order = u64::try_from(doc.order)
            .map_err(|_| Error::validation("order", format!("must be >= 0, got {}", doc.order)))?;

        if doc.materials.is_empty() {
            return Err(Error::validation("materials", "at least one material is required"));
        }
        let mut material_index = BTreeMap::new();
        let mut materials = Vec::with_capacity(doc.materials.len());
        for (k, m) in doc.materials.into_iter().enumerate() {
            if m.id.is_empty() {
                return Err(Error::validation(format!("materials[{k}].id"), "must not be empty"));
            }
            let per_unit = non_negative(|| format!("materials[{k}].per_unit"), m.per_unit)?;
            if material_index.insert(m.id.clone(), k).is_some() {
                return Err(Error::validation(
                    format!("materials[{k}].id"),
                    format!("duplicate material id `{}`", m.id),
                ));
            }
            materials.push(Material { id: m.id, per_unit });
        }
        if materials.iter().all(|m| m.per_unit == 0.0) {
            return Err(Error::validation(
                "materials",
                "at least one material needs per_unit > 0",
            ));
        }

        if doc.factories.is_empty() {
            return Err(Error::validation("factories", "at least one factory is required"));
        }
        let mut factory_ids = HashSet::new();
        let mut factories = Vec::with_capacity(doc.factories.len());
        for (i, f) in doc.factories.into_iter().enumerate() {
            if f.id.is_empty() {
                return Err(Error::validation(format!("factories[{i}].id"), "must not be empty"));
            }
            if !factory_ids.insert(f.id.clone()) {
                return Err(Error::validation(
                    format!("factories[{i}].id"),
                    format!("duplicate factory id `{}`", f.id),
                ));
            }
            let unit_production_cost = non_negative(
                || format!("factories[{i}].unit_production_cost"),
                f.unit_production_cost,
            )?;
            let mut inventory = vec![0.0; materials.len()];
            for (mat, qty) in f.inventory {
                let field = || format!("factories[{i}].inventory.{mat}");
                let Some(&k) = material_index.get(&mat) else {
                    return Err(Error::validation(field(), "unknown material id"));
                };
                inventory[k] = non_negative(field, qty)?;
            }
            factories.push(Factory {
                id: f.id,
                unit_production_cost,
                inventory,
            });
        }

        let fleet = doc.fleet;
        let truck_capacity = non_negative(|| "fleet.truck_capacity".into(), fleet.truck_capacity)?;
        if truck_capacity == 0.0 {
            return Err(Error::validation("fleet.truck_capacity", "must be > 0"));
        }
        let max_trucks = u64::try_from(fleet.max_trucks).map_err(|_| {
            Error::validation(
                "fleet.max_trucks",
                format!("must be >= 0, got {}", fleet.max_trucks),
            )
        })?;
        let unit_trip_cost = non_negative(|| "fleet.unit_trip_cost".into(), fleet.unit_trip_cost)?;

        Ok(Scenario {
            order,
            materials,
            factories,
            fleet: Fleet {
                truck_capacity,
                max_trucks,
                unit_trip_cost,
            },
        })
    }

    fn to_doc(&self) -> ScenarioDoc {
        ScenarioDoc {
            order: self.order as i64,
            materials: self
                .materials
                .iter()
                .map(|m| MaterialDoc {
                    id: m.id.clone(),
                    per_unit: m.per_unit,
                })
                .collect(),
            factories: self
                .factories
                .iter()
                .map(|f| FactoryDoc {
                    id: f.id.clone(),
                    unit_production_cost: f.unit_production_cost,
                    inventory: self
                        .materials
                        .iter()
                        .zip(&f.inventory)
                        .map(|(m, &q)| (m.id.clone(), q))
                        .collect(),
                })
                .collect(),
            fleet: FleetDoc {
                truck_capacity: self.fleet.truck_capacity,
                max_trucks: self.fleet.max_trucks as i64,
                unit_trip_cost: self.fleet.unit_trip_cost,
            },
        }
    }

    /// Serializes to the scenario JSON format accepted by [`load_scenario`].
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scenario document serializes")
    }

    /// Number of factories.
    pub fn n(&self) -> usize {
        self.factories.len()
    }

    /// Number of material kinds.
    pub fn m(&self) -> usize {
        self.materials.len()
    }

    /// Material needed minus material held at factory `i` for material `k`
    /// when the factory produces `quantity` units. Positive means a shortage.
    pub fn imbalance(&self, i: usize, k: usize, quantity: u64) -> f64 {
        self.materials[k].per_unit * quantity as f64 - self.factories[i].inventory[k]
    }

    pub fn factory_index(&self, id: &str) -> Option<usize> {
        self.factories.iter().position(|f| f.id == id)
    }

    pub fn material_index(&self, id: &str) -> Option<usize> {
        self.materials.iter().position(|m| m.id == id)
    }
}

/// Per-factory production quantities; entry `i` belongs to factory `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(pub Vec<u64>);

impl Allocation {
    pub fn new(quantities: Vec<u64>) -> Self {
        Allocation(quantities)
    }

    pub fn quantities(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Parses comma-separated integers such as `8,2`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Vec::new();
        for (index, part) in text.split(',').enumerate() {
            let value: i64 = part
                .trim()
                .parse()
                .map_err(|_| Error::validation("alloc", format!("`{}` is not an integer", part.trim())))?;
            if value < 0 {
                return Err(Error::NegativeEntry { index, value });
            }
            out.push(value as u64);
        }
        Ok(Allocation(out))
    }

    /// Splits `total` across `weights.len()` slots proportionally to `weights`
    /// with largest-remainder rounding. Remainder ties go to the lower index.
    /// All-zero weights are treated as equal weights.
    pub fn proportional(total: u64, weights: &[u64]) -> Self {
        let n = weights.len();
        if n == 0 {
            return Allocation(Vec::new());
        }
        let equal;
        let mut weights = weights;
        let mut weight_sum: u128 = weights.iter().map(|&w| w as u128).sum();
        if weight_sum == 0 {
            equal = vec![1u64; n];
            weights = &equal;
            weight_sum = n as u128;
        }
        let mut out = Vec::with_capacity(n);
        let mut remainders = Vec::with_capacity(n);
        let mut assigned: u128 = 0;
        for (i, &w) in weights.iter().enumerate() {
            let scaled = w as u128 * total as u128;
            let share = scaled / weight_sum;
            assigned += share;
            out.push(share as u64);
            remainders.push((scaled % weight_sum, i));
        }
        remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let leftover = (total as u128 - assigned) as usize;
        for &(_, i) in remainders.iter().take(leftover) {
            out[i] += 1;
        }
        Allocation(out)
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for q in &self.0 {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

/// Checks that `a` has one entry per factory and sums to the order.
pub fn validate_allocation(s: &Scenario, a: &Allocation) -> Result<()> {
    if a.len() != s.n() {
        return Err(Error::DimensionMismatch {
            expected: s.n(),
            found: a.len(),
        });
    }
    let found = a.0.iter().try_fold(0u64, |acc, &q| acc.checked_add(q)).unwrap_or(u64::MAX);
    if found != s.order {
        return Err(Error::SumMismatch {
            expected: s.order,
            found,
        });
    }
    Ok(())
}
