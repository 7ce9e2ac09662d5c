//! Production and transport cost of an allocation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, Fleet, Scenario};
use crate::transport::{check_fleet, greedy_plan, TransportPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub production: f64,
    pub transport: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(production: f64, transport: f64) -> Self {
        CostBreakdown {
            production,
            transport,
            total: production + transport,
        }
    }
}

pub fn production_cost(s: &Scenario, a: &Allocation) -> f64 {
    s.factories
        .iter()
        .zip(a.quantities())
        .map(|(f, &y)| f.unit_production_cost * y as f64)
        .sum()
}

/// Trip cost is per truck and independent of route and load.
pub fn transport_cost(p: &TransportPlan, fleet: &Fleet) -> f64 {
    p.total_trucks as f64 * fleet.unit_trip_cost
}

/// Everything the optimizer and reports need to know about one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cost: CostBreakdown,
    pub plan: TransportPlan,
    /// The plan fits within the fleet.
    pub fleet_ok: bool,
    /// Trucks beyond the fleet limit; zero iff `fleet_ok`.
    pub violation: f64,
}

/// Decodes `a` into its greedy plan and prices it. A plan over the fleet limit
/// is reported through `fleet_ok`, not as an error.
pub fn evaluate(s: &Scenario, a: &Allocation) -> Result<Evaluation> {
    debug_assert_eq!(a.len(), s.n());
    let plan = match greedy_plan(s, a) {
        Ok(plan) => plan,
        Err(Error::FleetExceeded { plan, .. }) => *plan,
        Err(e) => return Err(e),
    };
    let fleet_ok = check_fleet(&plan, &s.fleet);
    let violation = plan.total_trucks.saturating_sub(s.fleet.max_trucks) as f64;
    Ok(Evaluation {
        cost: CostBreakdown::new(production_cost(s, a), transport_cost(&plan, &s.fleet)),
        plan,
        fleet_ok,
        violation,
    })
}
