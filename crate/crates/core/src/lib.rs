//! Production split and material-transport planning across a network of
//! factories that build one product from shared raw materials.
//!
//! Given an order, per-factory stock and costs, and a truck fleet, the
//! planner chooses how many units each factory builds and how surplus
//! material moves to factories that are short, minimizing production cost
//! plus transport cost.
//!
//! - [`model`]: scenario types, JSON loading, allocation checks
//! - [`feasibility`]: aggregate coverage, shortage/surplus report
//! - [`transport`]: greedy and exhaustive shipment plans, truck counting
//! - [`cost`]: production and transport cost of an allocation
//! - [`moea`]: evolutionary search for the (PC, TC) Pareto front
//! - [`oracle`]: exhaustive enumeration for small instances
//! - [`cli`]: the `mitplan` command-line front end

pub mod cli;
pub mod cost;
pub mod error;
pub mod feasibility;
pub mod fixtures;
pub mod model;
pub mod moea;
pub mod oracle;
pub mod transport;

pub use cost::{evaluate, production_cost, transport_cost, CostBreakdown, Evaluation};
pub use error::{Error, Result};
pub use feasibility::{aggregate_feasible, check_inventory, delta_matrix, transport_needed, ShortageReport};
pub use model::{load_scenario, validate_allocation, Allocation, Factory, Fleet, Material, Scenario};
pub use moea::{dominates, non_dominated_sort, optimize, pick_solution, Individual, MoeaParams, ParetoResult, Policy};
pub use oracle::{brute_force, enumerate_allocations, OracleResult};
pub use transport::{check_fleet, exact_min_truck_plan, greedy_plan, trucks_for_route, Shipment, TransportPlan};

/// Absolute slack for comparing material quantities and money.
pub const TOLERANCE: f64 = 1e-9;
