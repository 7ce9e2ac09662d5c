//! Shipment planning from surplus factories to shortage factories.
//!
//! Quantities are aggregated per route before counting trucks: one truck
//! carries up to `truck_capacity` units of any mix of materials.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::infeasible_materials;
use crate::model::{Allocation, Fleet, Scenario};
use crate::TOLERANCE;

/// `qty` units of `material` moved from factory `from` to factory `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shipment {
    pub from: usize,
    pub to: usize,
    pub material: usize,
    pub qty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteTrucks {
    pub from: usize,
    pub to: usize,
    pub trucks: u64,
}

/// Consolidated shipments with per-route truck counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// Number of factories in the scenario the plan was built for.
    pub factories: usize,
    /// Sorted by (from, to, material); one entry per key.
    pub shipments: Vec<Shipment>,
    /// Sorted by (from, to).
    pub route_trucks: Vec<RouteTrucks>,
    pub total_trucks: u64,
}

impl TransportPlan {
    pub fn empty(factories: usize) -> Self {
        TransportPlan {
            factories,
            shipments: Vec::new(),
            route_trucks: Vec::new(),
            total_trucks: 0,
        }
    }

    /// Merges shipments sharing (from, to, material), drops non-positive
    /// quantities, and counts trucks per route.
    pub fn from_shipments(factories: usize, shipments: Vec<Shipment>, capacity: f64) -> Self {
        let mut merged: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for s in shipments {
            if s.qty > 0.0 && s.from != s.to {
                *merged.entry((s.from, s.to, s.material)).or_default() += s.qty;
            }
        }
        let mut loads: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (&(from, to, _), &qty) in &merged {
            *loads.entry((from, to)).or_default() += qty;
        }
        let route_trucks: Vec<RouteTrucks> = loads
            .into_iter()
            .map(|((from, to), load)| RouteTrucks {
                from,
                to,
                trucks: trucks_for_route(load, capacity).expect("positive load and capacity"),
            })
            .collect();
        TransportPlan {
            factories,
            total_trucks: route_trucks.iter().map(|r| r.trucks).sum(),
            shipments: merged
                .into_iter()
                .map(|((from, to, material), qty)| Shipment {
                    from,
                    to,
                    material,
                    qty,
                })
                .collect(),
            route_trucks,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.shipments.is_empty()
    }

    /// Total quantity of `material` leaving factory `i`.
    pub fn outflow(&self, i: usize, material: usize) -> f64 {
        self.shipments
            .iter()
            .filter(|s| s.from == i && s.material == material)
            .map(|s| s.qty)
            .sum()
    }

    /// Total quantity of `material` arriving at factory `i`.
    pub fn inflow(&self, i: usize, material: usize) -> f64 {
        self.shipments
            .iter()
            .filter(|s| s.to == i && s.material == material)
            .map(|s| s.qty)
            .sum()
    }

    /// Renders the plan with factory and material ids.
    pub fn report(&self, s: &Scenario) -> PlanReport {
        PlanReport {
            shipments: self
                .shipments
                .iter()
                .map(|sh| ShipmentRecord {
                    from: s.factories[sh.from].id.clone(),
                    to: s.factories[sh.to].id.clone(),
                    material: s.materials[sh.material].id.clone(),
                    qty: sh.qty,
                })
                .collect(),
            route_trucks: self
                .route_trucks
                .iter()
                .map(|r| RouteRecord {
                    from: s.factories[r.from].id.clone(),
                    to: s.factories[r.to].id.clone(),
                    trucks: r.trucks,
                })
                .collect(),
            total_trucks: self.total_trucks,
        }
    }
}

/// JSON form of a [`TransportPlan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub shipments: Vec<ShipmentRecord>,
    pub route_trucks: Vec<RouteRecord>,
    pub total_trucks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShipmentRecord {
    pub from: String,
    pub to: String,
    pub material: String,
    pub qty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteRecord {
    pub from: String,
    pub to: String,
    pub trucks: u64,
}

/// Trucks needed to carry `quantity` units: the smallest `t` with
/// `t * capacity >= quantity`.
pub fn trucks_for_route(quantity: f64, capacity: f64) -> Result<u64> {
    if quantity.is_nan() || quantity < 0.0 {
        return Err(Error::NegativeQuantity(quantity));
    }
    if !(capacity > 0.0) || !quantity.is_finite() {
        return Err(Error::InvalidParams {
            name: "truck_capacity",
            message: format!("cannot load {quantity} into trucks of capacity {capacity}"),
        });
    }
    if quantity == 0.0 {
        return Ok(0);
    }
    let mut trucks = (quantity / capacity).ceil().max(1.0) as u64;
    // Division and ceil round independently; settle on the multiplication test.
    while (trucks as f64) * capacity < quantity {
        trucks += 1;
    }
    while trucks > 1 && ((trucks - 1) as f64) * capacity >= quantity {
        trucks -= 1;
    }
    Ok(trucks)
}

pub fn check_fleet(p: &TransportPlan, fleet: &Fleet) -> bool {
    p.total_trucks <= fleet.max_trucks
}

/// Per-cell surplus left after the allocation's own consumption.
fn surpluses(s: &Scenario, a: &Allocation) -> Vec<Vec<f64>> {
    a.quantities()
        .iter()
        .enumerate()
        .map(|(i, &y)| (0..s.m()).map(|k| (-s.imbalance(i, k, y)).max(0.0)).collect())
        .collect()
}

fn ensure_coverable(s: &Scenario) -> Result<()> {
    let bad = infeasible_materials(s);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible {
            materials: bad.into_iter().map(|k| s.materials[k].id.clone()).collect(),
        })
    }
}

fn within_fleet(plan: TransportPlan, fleet: &Fleet) -> Result<TransportPlan> {
    if check_fleet(&plan, fleet) {
        Ok(plan)
    } else {
        Err(Error::FleetExceeded {
            trucks: plan.total_trucks,
            limit: fleet.max_trucks,
            plan: Box::new(plan),
        })
    }
}

/// Deterministic covering plan.
///
/// Shortage cells are visited in factory order, then material order. Each one
/// draws from donors holding the most remaining surplus first, lower index on
/// ties. Returns [`Error::FleetExceeded`] carrying the plan when it needs more
/// trucks than the fleet has.
pub fn greedy_plan(s: &Scenario, a: &Allocation) -> Result<TransportPlan> {
    ensure_coverable(s)?;
    let mut available = surpluses(s, a);
    let mut shipments = Vec::new();
    let mut donors: Vec<usize> = Vec::with_capacity(s.n());
    for (i, &y) in a.quantities().iter().enumerate() {
        for k in 0..s.m() {
            let mut remaining = s.imbalance(i, k, y);
            if remaining <= 0.0 {
                continue;
            }
            donors.clear();
            donors.extend((0..s.n()).filter(|&j| j != i && available[j][k] > 0.0));
            donors.sort_by(|&p, &q| available[q][k].total_cmp(&available[p][k]).then(p.cmp(&q)));
            for &j in &donors {
                if remaining <= 0.0 {
                    break;
                }
                let take = remaining.min(available[j][k]);
                available[j][k] -= take;
                remaining -= take;
                shipments.push(Shipment {
                    from: j,
                    to: i,
                    material: k,
                    qty: take,
                });
            }
        }
    }
    within_fleet(
        TransportPlan::from_shipments(s.n(), shipments, s.fleet.truck_capacity),
        &s.fleet,
    )
}

/// Candidate-plan budget for [`exact_min_truck_plan`].
pub const EXACT_PLAN_LIMIT: u128 = 100_000;

/// Exhaustive minimum-truck plan on a 1.0-unit grid. See
/// [`exact_min_truck_plan_with_resolution`].
pub fn exact_min_truck_plan(s: &Scenario, a: &Allocation) -> Result<TransportPlan> {
    exact_min_truck_plan_with_resolution(s, a, 1.0)
}

struct Demand {
    to: usize,
    material: usize,
    deficit: f64,
    donors: Vec<usize>,
}

/// Share values tried for one non-final donor of a demand.
fn grid(cap: f64, resolution: f64) -> Vec<f64> {
    let mut values = Vec::new();
    let mut step = 0u64;
    loop {
        let v = step as f64 * resolution;
        if v > cap + TOLERANCE {
            break;
        }
        values.push(v.min(cap));
        step += 1;
    }
    if values.last().is_none_or(|&v| v < cap - TOLERANCE) {
        values.push(cap);
    }
    values
}

/// Enumerates every covering, surplus-only split of each deficit across its
/// donors, with all but the last donor's share on a grid of `resolution`
/// units (the last donor takes the remainder). Picks the fewest trucks, then
/// the fewest routes, then the lexicographically smallest route list.
pub fn exact_min_truck_plan_with_resolution(
    s: &Scenario,
    a: &Allocation,
    resolution: f64,
) -> Result<TransportPlan> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidParams {
            name: "resolution",
            message: format!("must be > 0, got {resolution}"),
        });
    }
    ensure_coverable(s)?;
    let surplus = surpluses(s, a);
    let mut demands = Vec::new();
    for (i, &y) in a.quantities().iter().enumerate() {
        for k in 0..s.m() {
            let deficit = s.imbalance(i, k, y);
            if deficit > 0.0 {
                let donors = (0..s.n()).filter(|&j| j != i && surplus[j][k] > 0.0).collect();
                demands.push(Demand {
                    to: i,
                    material: k,
                    deficit,
                    donors,
                });
            }
        }
    }

    let mut grids: Vec<Vec<Vec<f64>>> = Vec::with_capacity(demands.len());
    let mut count: u128 = 1;
    for d in &demands {
        let mut per_donor = Vec::new();
        for &j in d.donors.iter().take(d.donors.len().saturating_sub(1)) {
            let cap = d.deficit.min(surplus[j][d.material]);
            // Bound the grid before materializing it.
            let steps = (cap / resolution).floor() as u128 + 2;
            count = count.saturating_mul(steps);
            if count > EXACT_PLAN_LIMIT {
                return Err(Error::InstanceTooLarge {
                    count,
                    limit: EXACT_PLAN_LIMIT,
                });
            }
            per_donor.push(grid(cap, resolution));
        }
        grids.push(per_donor);
    }

    let mut search = ExactSearch {
        demands: &demands,
        grids: &grids,
        capacity: s.fleet.truck_capacity,
        remaining: surplus,
        current: Vec::new(),
        best: None,
    };
    search.visit(0);
    let shipments = search.best.map(|b| b.shipments).unwrap_or_default();
    within_fleet(
        TransportPlan::from_shipments(s.n(), shipments, s.fleet.truck_capacity),
        &s.fleet,
    )
}

struct Candidate {
    key: (u64, usize, Vec<(usize, usize)>),
    shipments: Vec<Shipment>,
}

struct ExactSearch<'a> {
    demands: &'a [Demand],
    grids: &'a [Vec<Vec<f64>>],
    capacity: f64,
    remaining: Vec<Vec<f64>>,
    current: Vec<Shipment>,
    best: Option<Candidate>,
}

impl ExactSearch<'_> {
    fn visit(&mut self, demand: usize) {
        if demand == self.demands.len() {
            self.score();
            return;
        }
        self.split(demand, 0, self.demands[demand].deficit);
    }

    fn split(&mut self, demand: usize, slot: usize, left: f64) {
        let d = &self.demands[demand];
        let k = d.material;
        if slot + 1 >= d.donors.len() {
            // Last donor absorbs whatever is left.
            let Some(&j) = d.donors.last() else {
                if left <= TOLERANCE {
                    self.visit(demand + 1);
                }
                return;
            };
            if left < -TOLERANCE || left > self.remaining[j][k] + TOLERANCE {
                return;
            }
            let qty = left.max(0.0);
            self.take(j, demand, qty, |search| search.visit(demand + 1));
            return;
        }
        let j = d.donors[slot];
        for idx in 0..self.grids[demand][slot].len() {
            let qty = self.grids[demand][slot][idx];
            if qty > left + TOLERANCE || qty > self.remaining[j][k] + TOLERANCE {
                continue;
            }
            let qty = qty.min(left);
            self.take(j, demand, qty, |search| search.split(demand, slot + 1, left - qty));
        }
    }

    fn take(&mut self, j: usize, demand: usize, qty: f64, next: impl FnOnce(&mut Self)) {
        let d = &self.demands[demand];
        let (to, material) = (d.to, d.material);
        self.remaining[j][material] -= qty;
        let pushed = qty > 0.0;
        if pushed {
            self.current.push(Shipment {
                from: j,
                to,
                material,
                qty,
            });
        }
        next(self);
        if pushed {
            self.current.pop();
        }
        self.remaining[j][material] += qty;
    }

    fn score(&mut self) {
        let mut loads: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for s in &self.current {
            *loads.entry((s.from, s.to)).or_default() += s.qty;
        }
        let trucks = loads
            .values()
            .map(|&q| trucks_for_route(q, self.capacity).expect("valid load"))
            .sum();
        let routes: Vec<(usize, usize)> = loads.keys().copied().collect();
        let key = (trucks, routes.len(), routes);
        if self.best.as_ref().is_none_or(|b| key < b.key) {
            self.best = Some(Candidate {
                key,
                shipments: self.current.clone(),
            });
        }
    }
}
