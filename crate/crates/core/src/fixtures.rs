//! Small hand-checkable instances used by tests, examples and docs.

use crate::model::{Factory, Fleet, Material, Scenario};

/// Builds a scenario with materials `k1..` and factories `f1..`.
///
/// `factories` holds `(unit_production_cost, inventory)` pairs and `fleet`
/// is `(truck_capacity, max_trucks, unit_trip_cost)`.
pub fn scenario(order: u64, per_unit: &[f64], factories: &[(f64, &[f64])], fleet: (f64, u64, f64)) -> Scenario {
    Scenario {
        order,
        materials: per_unit
            .iter()
            .enumerate()
            .map(|(k, &per_unit)| Material {
                id: format!("k{}", k + 1),
                per_unit,
            })
            .collect(),
        factories: factories
            .iter()
            .enumerate()
            .map(|(i, &(cost, inventory))| Factory {
                id: format!("f{}", i + 1),
                unit_production_cost: cost,
                inventory: inventory.to_vec(),
            })
            .collect(),
        fleet: Fleet {
            truck_capacity: fleet.0,
            max_trucks: fleet.1,
            unit_trip_cost: fleet.2,
        },
    }
}

/// Two factories, one material with recipe 1, costs (2, 3), trucks of
/// capacity 5 costing 4 per trip, at most 10 trips.
pub fn two_factory(order: u64, inventory: [f64; 2]) -> Scenario {
    scenario(
        order,
        &[1.0],
        &[(2.0, &[inventory[0]]), (3.0, &[inventory[1]])],
        (5.0, 10, 4.0),
    )
}

/// The two-factory instance with order 10 and stock (3, 8).
pub fn reference() -> Scenario {
    two_factory(10, [3.0, 8.0])
}
