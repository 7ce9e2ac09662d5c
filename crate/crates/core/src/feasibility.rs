//! Inventory checks: aggregate coverage per material, the transport trigger,
//! and the per-factory shortage/surplus breakdown.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{Allocation, Scenario};
use crate::transport::TransportPlan;
use crate::TOLERANCE;

/// One (factory, material) cell with a strictly positive deficit or excess.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Imbalance {
    pub factory: String,
    pub material: String,
    pub amount: f64,
}

/// Shortage/surplus decomposition of an allocation against on-hand stock.
///
/// Entries are listed in factory order, then material order. Cells where need
/// equals stock appear in neither list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortageReport {
    pub shortages: Vec<Imbalance>,
    pub surpluses: Vec<Imbalance>,
    pub transport_needed: bool,
    /// Materials that at least one factory is short of, in material order.
    pub affected_materials: Vec<String>,
}

impl ShortageReport {
    pub fn shortage(&self, factory: &str, material: &str) -> Option<f64> {
        find(&self.shortages, factory, material)
    }

    pub fn surplus(&self, factory: &str, material: &str) -> Option<f64> {
        find(&self.surpluses, factory, material)
    }
}

fn find(cells: &[Imbalance], factory: &str, material: &str) -> Option<f64> {
    cells
        .iter()
        .find(|c| c.factory == factory && c.material == material)
        .map(|c| c.amount)
}

/// Indices of materials whose total stock cannot cover the whole order.
pub fn infeasible_materials(s: &Scenario) -> Vec<usize> {
    (0..s.m())
        .filter(|&k| {
            let held: f64 = s.factories.iter().map(|f| f.inventory[k]).sum();
            let needed = s.order as f64 * s.materials[k].per_unit;
            held < needed - TOLERANCE
        })
        .collect()
}

/// Per material: does the network as a whole hold enough to build the order?
pub fn aggregate_feasible(s: &Scenario) -> BTreeMap<String, bool> {
    let bad = infeasible_materials(s);
    s.materials
        .iter()
        .enumerate()
        .map(|(k, m)| (m.id.clone(), !bad.contains(&k)))
        .collect()
}

/// True iff some factory needs more of some material than it holds.
pub fn transport_needed(s: &Scenario, a: &Allocation) -> bool {
    a.quantities()
        .iter()
        .enumerate()
        .any(|(i, &y)| (0..s.m()).any(|k| s.imbalance(i, k, y) > 0.0))
}

pub fn check_inventory(s: &Scenario, a: &Allocation) -> ShortageReport {
    let mut shortages = Vec::new();
    let mut surpluses = Vec::new();
    let mut affected = vec![false; s.m()];
    for (i, &y) in a.quantities().iter().enumerate() {
        for k in 0..s.m() {
            let gap = s.imbalance(i, k, y);
            let cell = |amount| Imbalance {
                factory: s.factories[i].id.clone(),
                material: s.materials[k].id.clone(),
                amount,
            };
            if gap > 0.0 {
                affected[k] = true;
                shortages.push(cell(gap));
            } else if gap < 0.0 {
                surpluses.push(cell(-gap));
            }
        }
    }
    ShortageReport {
        transport_needed: !shortages.is_empty(),
        shortages,
        surpluses,
        affected_materials: s
            .materials
            .iter()
            .zip(affected)
            .filter(|(_, hit)| *hit)
            .map(|(m, _)| m.id.clone())
            .collect(),
    }
}

/// Route indicator: `[i][j]` is true iff any material moves from `i` to `j`.
pub fn delta_matrix(p: &TransportPlan) -> Vec<Vec<bool>> {
    let mut delta = vec![vec![false; p.factories]; p.factories];
    for s in &p.shipments {
        if s.qty > 0.0 && s.from != s.to {
            delta[s.from][s.to] = true;
        }
    }
    delta
}
