#![allow(dead_code)]

use mitplan::fixtures::scenario;
use mitplan::{Allocation, Scenario};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Bounds for [`random_scenario`].
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_factories: usize,
    pub max_materials: usize,
    pub max_order: u64,
    /// Generate whole-unit recipes and stock only.
    pub integral: bool,
}

pub const FUZZ: Limits = Limits {
    max_factories: 5,
    max_materials: 4,
    max_order: 50,
    integral: false,
};

pub const SMALL: Limits = Limits {
    max_factories: 3,
    max_materials: 2,
    max_order: 12,
    integral: true,
};

/// Recipes and stock are multiples of 0.5, so every sum and product the
/// planner forms is exact in binary floating point.
pub fn random_scenario<R: Rng>(rng: &mut R, limits: Limits) -> Scenario {
    let n = rng.random_range(1..=limits.max_factories);
    let m = rng.random_range(1..=limits.max_materials);
    let order = rng.random_range(0..=limits.max_order);
    let recipe_choices: &[f64] = if limits.integral { &[0.0, 1.0, 1.0, 2.0, 3.0] } else { &[0.0, 0.5, 1.0, 2.0, 3.0] };
    let mut per_unit: Vec<f64> = (0..m).map(|_| *recipe_choices.choose(rng).unwrap()).collect();
    if per_unit.iter().all(|&l| l == 0.0) {
        per_unit[0] = 1.0;
    }
    let step = if limits.integral { 1.0 } else { 0.5 };
    let mut inventories = vec![vec![0.0; m]; n];
    for k in 0..m {
        let need = order as f64 * per_unit[k];
        // Aim total stock around 0.8x..1.6x the aggregate need.
        let target = need * rng.random_range(0.8..1.6) + rng.random_range(0.0..3.0);
        let mut weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0f64).powi(2)).collect();
        let wsum: f64 = weights.iter().sum::<f64>().max(1e-12);
        weights.iter_mut().for_each(|w| *w /= wsum);
        for i in 0..n {
            inventories[i][k] = ((target * weights[i]) / step).round() * step;
        }
        if rng.random_bool(0.15) {
            // Pin aggregate stock to exactly the need.
            let held: f64 = inventories.iter().map(|inv| inv[k]).sum();
            let j = rng.random_range(0..n);
            inventories[j][k] = (inventories[j][k] + need - held).max(0.0);
        }
    }
    let costs: Vec<f64> = (0..n).map(|_| rng.random_range(1..=9) as f64).collect();
    let factories: Vec<(f64, &[f64])> = costs
        .iter()
        .zip(&inventories)
        .map(|(&c, inv)| (c, inv.as_slice()))
        .collect();
    let capacity = rng.random_range(1..=20) as f64 * step;
    let max_trucks = rng.random_range(0..=30);
    let trip_cost = rng.random_range(1..=12) as f64;
    scenario(order, &per_unit, &factories, (capacity, max_trucks, trip_cost))
}

/// Uniformly random composition of the scenario's order.
pub fn random_allocation<R: Rng>(rng: &mut R, s: &Scenario) -> Allocation {
    let n = s.n();
    let mut cuts: Vec<u64> = (0..n - 1).map(|_| rng.random_range(0..=s.order)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(s.order - prev);
    Allocation::new(out)
}

/// Total surplus minus total deficit of material `k`. A surplus-only covering
/// plan exists iff this is non-negative for every material, since any donor
/// may ship to any recipient.
pub fn slack(s: &Scenario, a: &Allocation, k: usize) -> f64 {
    a.quantities()
        .iter()
        .enumerate()
        .map(|(i, &y)| s.factories[i].inventory[k] - s.materials[k].per_unit * y as f64)
        .sum()
}

pub fn deficit(s: &Scenario, a: &Allocation, i: usize, k: usize) -> f64 {
    (s.materials[k].per_unit * a.quantities()[i] as f64 - s.factories[i].inventory[k]).max(0.0)
}

pub fn excess(s: &Scenario, a: &Allocation, i: usize, k: usize) -> f64 {
    (s.factories[i].inventory[k] - s.materials[k].per_unit * a.quantities()[i] as f64).max(0.0)
}
