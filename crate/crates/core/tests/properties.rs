mod common;

use common::{random_allocation, random_scenario, FUZZ, SMALL};
use mitplan::feasibility::infeasible_materials;
use mitplan::moea::{init_population, select_and_vary};
use mitplan::{
    aggregate_feasible, brute_force, check_inventory, dominates, evaluate, exact_min_truck_plan, greedy_plan,
    load_scenario, non_dominated_sort, optimize, production_cost, transport_cost, transport_needed,
    trucks_for_route, Allocation, Error, Individual, MoeaParams, Scenario,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario_from(seed: u64) -> (Scenario, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_scenario(&mut rng, FUZZ), rng)
}

fn coverable_from(seed: u64) -> (Scenario, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let s = random_scenario(&mut rng, FUZZ);
        if infeasible_materials(&s).is_empty() {
            return (s, rng);
        }
    }
}

fn assert_invariants(s: &Scenario) {
    assert!(s.n() >= 1 && s.m() >= 1);
    assert!(s.materials.iter().all(|m| m.per_unit >= 0.0));
    assert!(s.materials.iter().any(|m| m.per_unit > 0.0));
    assert!(s.factories.iter().all(|f| f.unit_production_cost >= 0.0
        && f.inventory.len() == s.m()
        && f.inventory.iter().all(|&q| q >= 0.0)));
    let mut ids: Vec<&str> = s.factories.iter().map(|f| f.id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), s.n());
    let mut mids: Vec<&str> = s.materials.iter().map(|m| m.id.as_str()).collect();
    mids.sort();
    mids.dedup();
    assert_eq!(mids.len(), s.m());
    assert!(s.fleet.truck_capacity > 0.0 && s.fleet.unit_trip_cost >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scenario_json_round_trip(seed in any::<u64>()) {
        let (s, _) = scenario_from(seed);
        prop_assert_eq!(load_scenario(s.to_json().as_bytes()).unwrap(), s);
    }

    #[test]
    fn random_bytes_never_load(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        if let Ok(s) = load_scenario(&bytes) {
            assert_invariants(&s);
        }
    }

    #[test]
    fn corrupted_documents_load_only_when_valid(seed in any::<u64>(), edits in proptest::collection::vec((any::<prop::sample::Index>(), prop::sample::select(vec!["-", "0", "\"", "}", "", "1e999", "k1", "f1", "-1"])), 1..4)) {
        let (s, _) = scenario_from(seed);
        let mut text = s.to_json();
        for (at, insert) in edits {
            let mut pos = at.index(text.len() + 1);
            while !text.is_char_boundary(pos) {
                pos -= 1;
            }
            text.insert_str(pos, insert);
        }
        if let Ok(loaded) = load_scenario(text.as_bytes()) {
            assert_invariants(&loaded);
        }
    }

    #[test]
    fn imbalance_conservation(seed in any::<u64>()) {
        let (s, mut rng) = scenario_from(seed);
        let a = random_allocation(&mut rng, &s);
        let report = check_inventory(&s, &a);
        for (k, m) in s.materials.iter().enumerate() {
            let short: f64 = report.shortages.iter().filter(|c| c.material == m.id).map(|c| c.amount).sum();
            let spare: f64 = report.surpluses.iter().filter(|c| c.material == m.id).map(|c| c.amount).sum();
            let held: f64 = s.factories.iter().map(|f| f.inventory[k]).sum();
            let expected = s.order as f64 * m.per_unit - held;
            prop_assert!((short - spare - expected).abs() <= 1e-9);
            if aggregate_feasible(&s)[&m.id] {
                prop_assert!(spare >= short - 1e-9);
            }
        }
        for c in report.shortages.iter() {
            prop_assert!(c.amount > 0.0);
            prop_assert!(report.surplus(&c.factory, &c.material).is_none());
        }
        prop_assert!(report.surpluses.iter().all(|c| c.amount > 0.0));
        prop_assert_eq!(report.transport_needed, transport_needed(&s, &a));
        let affected: Vec<&String> = s.materials.iter().map(|m| &m.id)
            .filter(|id| report.shortages.iter().any(|c| &c.material == *id)).collect();
        prop_assert_eq!(report.affected_materials.iter().collect::<Vec<_>>(), affected);
    }

    #[test]
    fn no_shortage_means_no_transport(seed in any::<u64>()) {
        let (s, mut rng) = coverable_from(seed);
        let a = random_allocation(&mut rng, &s);
        if !transport_needed(&s, &a) {
            let p = greedy_plan(&s, &a).unwrap();
            prop_assert!(p.is_empty());
            prop_assert_eq!(transport_cost(&p, &s.fleet), 0.0);
        }
    }

    #[test]
    fn cost_scaling(seed in any::<u64>(), c in 0.01f64..100.0) {
        let (s, mut rng) = coverable_from(seed);
        let a = random_allocation(&mut rng, &s);
        let mut scaled = s.clone();
        scaled.factories.iter_mut().for_each(|f| f.unit_production_cost *= c);
        scaled.fleet.unit_trip_cost *= c;
        let (base, up) = (evaluate(&s, &a).unwrap(), evaluate(&scaled, &a).unwrap());
        prop_assert!((production_cost(&scaled, &a) - c * production_cost(&s, &a)).abs() <= 1e-9 * (1.0 + up.cost.production));
        prop_assert!((up.cost.transport - c * base.cost.transport).abs() <= 1e-9 * (1.0 + up.cost.transport));
        prop_assert!((up.cost.total - up.cost.production - up.cost.transport).abs() <= 1e-9);
        prop_assert!(up.cost.production >= 0.0 && up.cost.transport >= 0.0);
    }

    #[test]
    fn reordering_factories(seed in any::<u64>()) {
        let (s, mut rng) = coverable_from(seed);
        let a = random_allocation(&mut rng, &s);
        let mut order: Vec<usize> = (0..s.n()).collect();
        order.shuffle(&mut rng);
        let mut permuted = s.clone();
        permuted.factories = order.iter().map(|&i| s.factories[i].clone()).collect();
        let pa = Allocation::new(order.iter().map(|&i| a.quantities()[i]).collect());
        let (x, y) = (evaluate(&s, &a).unwrap(), evaluate(&permuted, &pa).unwrap());
        prop_assert!((x.cost.production - y.cost.production).abs() <= 1e-9);
        // The greedy decoding breaks surplus ties by list position, so the truck
        // count is only order-free when the donor choice is unambiguous.
        let report = check_inventory(&s, &a);
        let mut spare: Vec<f64> = report.surpluses.iter().map(|c| c.amount).collect();
        spare.sort_by(f64::total_cmp);
        let distinct = spare.windows(2).all(|w| w[0] != w[1]);
        if s.m() == 1 && report.shortages.len() <= 1 && distinct {
            prop_assert!((x.cost.total - y.cost.total).abs() <= 1e-9);
        }
    }

    #[test]
    fn trucks_monotone(q1 in 0.0f64..1e4, q2 in 0.0f64..1e4, v1 in 0.01f64..100.0, v2 in 0.01f64..100.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let (small, big) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
        prop_assert!(trucks_for_route(lo, small).unwrap() <= trucks_for_route(hi, small).unwrap());
        prop_assert!(trucks_for_route(hi, big).unwrap() <= trucks_for_route(hi, small).unwrap());
        let t = trucks_for_route(hi, small).unwrap();
        prop_assert!(t as f64 * small >= hi);
        prop_assert!(t == 0 || (t - 1) as f64 * small < hi);
    }

    #[test]
    fn greedy_never_beats_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = random_scenario(&mut rng, SMALL);
        s.fleet.max_trucks = 1_000;
        if infeasible_materials(&s).is_empty() {
            let a = random_allocation(&mut rng, &s);
            match exact_min_truck_plan(&s, &a) {
                Ok(exact) => prop_assert!(greedy_plan(&s, &a).unwrap().total_trucks >= exact.total_trucks),
                Err(Error::InstanceTooLarge { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}

fn random_population(rng: &mut ChaCha8Rng, size: usize) -> Vec<Individual> {
    (0..size)
        .map(|_| {
            let feasible = rng.random_bool(0.7);
            Individual {
                allocation: Allocation::new(vec![]),
                pc: rng.random_range(0..6) as f64,
                tc: rng.random_range(0..6) as f64,
                feasible,
                violation: if feasible { 0.0 } else { rng.random_range(1..4) as f64 },
                rank: 0,
                crowding: 0.0,
            }
        })
        .collect()
}

/// Rank by repeated peeling with the pairwise relation.
fn peel_ranks(pop: &[Individual]) -> Vec<usize> {
    let mut rank = vec![usize::MAX; pop.len()];
    let mut level = 0;
    while rank.contains(&usize::MAX) {
        let current: Vec<usize> = (0..pop.len())
            .filter(|&i| rank[i] == usize::MAX)
            .filter(|&i| !(0..pop.len()).any(|j| rank[j] == usize::MAX && dominates(&pop[j], &pop[i])))
            .collect();
        for i in current {
            rank[i] = level;
        }
        level += 1;
    }
    rank
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sorting_matches_pairwise_peeling(seed in any::<u64>(), size in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pop = random_population(&mut rng, size);
        let fronts = non_dominated_sort(&mut pop);
        let expected = peel_ranks(&pop);
        prop_assert_eq!(pop.iter().map(|i| i.rank).collect::<Vec<_>>(), expected);
        let mut all: Vec<usize> = fronts.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..size).collect::<Vec<_>>());
        for front in &fronts {
            for &a in front {
                prop_assert!(pop[a].crowding >= 0.0);
                for &b in front {
                    prop_assert!(!dominates(&pop[a], &pop[b]));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn offspring_are_valid_allocations(seed in any::<u64>()) {
        let (s, mut rng) = coverable_from(seed);
        let params = MoeaParams { population_size: 16, ..MoeaParams::default() };
        let mut pop = init_population(&s, &params, &mut rng).unwrap();
        non_dominated_sort(&mut pop);
        for child in select_and_vary(&pop, &params, &mut rng) {
            prop_assert_eq!(child.len(), s.n());
            prop_assert_eq!(child.total(), s.order);
        }
    }

    #[test]
    fn search_is_sound_and_reproducible(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, exact) = loop {
            let s = random_scenario(&mut rng, SMALL);
            if let Ok(r) = brute_force(&s) {
                break (s, r);
            }
        };
        let params = MoeaParams { generations: 40, seed, ..MoeaParams::default() };
        let r = optimize(&s, &params).unwrap();
        prop_assert_eq!(&r, &optimize(&s, &params).unwrap());
        prop_assert!(r.best_scalarized.total() >= exact.best_total - 1e-9);
        prop_assert!(r.best_scalarized.feasible);
        let seen = r.history.iter().position(Option::is_some).unwrap();
        prop_assert!(r.history[seen..].iter().all(Option::is_some));
        let history: Vec<f64> = r.history.iter().flatten().copied().collect();
        prop_assert!(history.windows(2).all(|w| w[1] <= w[0]));
        for a in &r.front {
            prop_assert!(a.feasible);
            prop_assert!(r.best_scalarized.total() <= a.total() + 1e-9);
            for b in &r.front {
                prop_assert!(!dominates(a, b));
            }
        }
    }

    #[test]
    fn oracle_is_exhaustive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, SMALL);
        let Ok(r) = brute_force(&s) else { return Ok(()); };
        let mut count = 0u128;
        for a in mitplan::enumerate_allocations(s.n(), s.order).unwrap() {
            count += 1;
            let e = evaluate(&s, &a).unwrap();
            if !e.fleet_ok {
                continue;
            }
            prop_assert!(e.cost.total >= r.best_total - 1e-9);
            prop_assert!(r.exact_front.iter().any(|f| f.pc <= e.cost.production && f.tc <= e.cost.transport));
        }
        prop_assert_eq!(count, r.evaluated_count);
        for a in &r.exact_front {
            for b in &r.exact_front {
                let strictly = b.pc <= a.pc && b.tc <= a.tc && (b.pc < a.pc || b.tc < a.tc);
                prop_assert!(!strictly);
            }
        }
    }
}

#[test]
fn reordering_can_change_greedy_trucks() {
    // Equal k1 surplus at f2 and f3; only f3 holds k2. Visiting f2 first
    // opens a second route.
    use mitplan::fixtures::scenario;
    let s = scenario(
        2,
        &[1.0, 1.0],
        &[(1.0, &[0.0, 0.0]), (1.0, &[5.0, 0.0]), (1.0, &[5.0, 5.0])],
        (10.0, 10, 1.0),
    );
    let a = Allocation::new(vec![2, 0, 0]);
    assert_eq!(greedy_plan(&s, &a).unwrap().total_trucks, 2);
    let mut swapped = s.clone();
    swapped.factories.swap(1, 2);
    assert_eq!(greedy_plan(&swapped, &a).unwrap().total_trucks, 1);
}
