//! Elitist multi-objective evolutionary search over allocations.
//!
//! The genome is the allocation vector; its transport plan is always the
//! greedy decoding, so every genome maps to exactly one (PC, TC) point.
//! Survival uses non-dominated sorting with crowding distance under
//! constraint domination, where the constraint is the fleet size.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cost::evaluate;
use crate::error::{Error, Result};
use crate::feasibility::infeasible_materials;
use crate::model::{Allocation, Scenario};

/// Search settings. `mutation_prob: None` means `1 / n` per gene.
#[derive(Debug, Clone, PartialEq)]
pub struct MoeaParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: Option<f64>,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for MoeaParams {
    fn default() -> Self {
        MoeaParams {
            population_size: 64,
            generations: 200,
            crossover_prob: 0.9,
            mutation_prob: None,
            tournament_size: 2,
            seed: 0,
        }
    }
}

impl MoeaParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, message: String| Err(Error::InvalidParams { name, message });
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return bad(
                "population_size",
                format!("must be an even number >= 4, got {}", self.population_size),
            );
        }
        if self.generations < 1 {
            return bad("generations", "must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad("crossover_prob", format!("must be in [0, 1], got {}", self.crossover_prob));
        }
        if let Some(pm) = self.mutation_prob {
            if !(0.0..=1.0).contains(&pm) {
                return bad("mutation_prob", format!("must be in [0, 1], got {pm}"));
            }
        }
        if self.tournament_size < 2 {
            return bad("tournament_size", format!("must be >= 2, got {}", self.tournament_size));
        }
        Ok(())
    }

    fn gene_mutation_prob(&self, n: usize) -> f64 {
        self.mutation_prob.unwrap_or(1.0 / n as f64)
    }
}

/// An evaluated allocation with its sorting metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub allocation: Allocation,
    pub pc: f64,
    pub tc: f64,
    /// The decoded plan fits within the fleet.
    pub feasible: bool,
    /// Trucks over the fleet limit.
    pub violation: f64,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn total(&self) -> f64 {
        self.pc + self.tc
    }

    pub fn objectives(&self) -> (f64, f64) {
        (self.pc, self.tc)
    }

    fn record(&self) -> SolutionRecord {
        SolutionRecord {
            allocation: self.allocation.clone(),
            pc: self.pc,
            tc: self.tc,
            total: self.total(),
        }
    }
}

/// One point of a front as written to JSON and CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionRecord {
    pub allocation: Allocation,
    pub pc: f64,
    pub tc: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoResult {
    /// Distinct rank-0 feasible allocations of the final population, sorted
    /// by (PC, TC, allocation).
    pub front: Vec<Individual>,
    /// Lowest PC + TC among all feasible individuals ever evaluated.
    pub best_scalarized: Individual,
    /// Best total after each generation; `None` until a feasible individual
    /// has been seen.
    pub history: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct ParetoResultDoc {
    front: Vec<SolutionRecord>,
    best: SolutionRecord,
    history: Vec<Option<f64>>,
}

impl Serialize for ParetoResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ParetoResultDoc {
            front: self.front.iter().map(Individual::record).collect(),
            best: self.best_scalarized.record(),
            history: self.history.clone(),
        }
        .serialize(serializer)
    }
}

impl ParetoResult {
    pub fn front_records(&self) -> Vec<SolutionRecord> {
        self.front.iter().map(Individual::record).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    MinTotal,
    MinPc,
    MinTc,
}

/// Constraint domination: feasible beats infeasible, infeasible pairs compare
/// by violation, feasible pairs by Pareto dominance on (PC, TC).
pub fn dominates(a: &Individual, b: &Individual) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => pareto_dominates(a.objectives(), b.objectives()),
    }
}

fn pareto_dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Partitions `pop` into fronts of indices and sets `rank` and `crowding`.
///
/// Feasible individuals are sorted on the two objectives; infeasible ones form
/// one front per distinct violation level, after every feasible front.
pub fn non_dominated_sort(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let mut feasible: Vec<usize> = (0..pop.len()).filter(|&i| pop[i].feasible).collect();
    feasible.sort_by(|&a, &b| {
        pop[a]
            .pc
            .total_cmp(&pop[b].pc)
            .then(pop[a].tc.total_cmp(&pop[b].tc))
            .then(a.cmp(&b))
    });

    // In lexicographic order a point is dominated by a front iff it is
    // dominated by that front's most recent member.
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    for i in feasible {
        let p = pop[i].objectives();
        let slot = fronts
            .iter()
            .position(|f| !pareto_dominates(pop[*f.last().unwrap()].objectives(), p));
        match slot {
            Some(f) => fronts[f].push(i),
            None => fronts.push(vec![i]),
        }
    }

    let mut infeasible: Vec<usize> = (0..pop.len()).filter(|&i| !pop[i].feasible).collect();
    infeasible.sort_by(|&a, &b| pop[a].violation.total_cmp(&pop[b].violation).then(a.cmp(&b)));
    let mut last_violation = None;
    for i in infeasible {
        let v = pop[i].violation;
        if last_violation == Some(v) {
            fronts.last_mut().unwrap().push(i);
        } else {
            fronts.push(vec![i]);
            last_violation = Some(v);
        }
    }

    for (rank, front) in fronts.iter_mut().enumerate() {
        front.sort_unstable();
        for &i in front.iter() {
            pop[i].rank = rank;
        }
        assign_crowding(pop, front);
    }
    fronts
}

fn assign_crowding(pop: &mut [Individual], front: &[usize]) {
    for &i in front {
        pop[i].crowding = 0.0;
    }
    if front.len() <= 2 {
        for &i in front {
            pop[i].crowding = f64::INFINITY;
        }
        return;
    }
    let objectives: [fn(&Individual) -> f64; 2] = [|x| x.pc, |x| x.tc];
    let mut order = front.to_vec();
    for objective in objectives {
        order.sort_by(|&a, &b| objective(&pop[a]).total_cmp(&objective(&pop[b])).then(a.cmp(&b)));
        let first = order[0];
        let last = *order.last().unwrap();
        let span = objective(&pop[last]) - objective(&pop[first]);
        pop[first].crowding = f64::INFINITY;
        pop[last].crowding = f64::INFINITY;
        if span <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            let gap = objective(&pop[w[2]]) - objective(&pop[w[0]]);
            pop[w[1]].crowding += gap / span;
        }
    }
}

/// Lower rank wins, then larger crowding distance.
fn crowded_cmp(a: &Individual, b: &Individual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding.total_cmp(&a.crowding))
}

/// Uniformly random composition of `total` into `parts` non-negative integers.
fn random_composition<R: Rng>(total: u64, parts: usize, rng: &mut R) -> Allocation {
    if parts == 1 {
        return Allocation::new(vec![total]);
    }
    let slots = total as usize + parts - 1;
    let mut cuts = index::sample(rng, slots, parts - 1).into_vec();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for (j, &cut) in cuts.iter().enumerate() {
        let start = if j == 0 { 0 } else { prev + 1 };
        out.push((cut - start) as u64);
        prev = cut;
    }
    let start = prev + 1;
    out.push((slots - start) as u64);
    Allocation::new(out)
}

#[derive(Debug, Clone, Copy)]
struct Scores {
    pc: f64,
    tc: f64,
    feasible: bool,
    violation: f64,
}

/// Memoizing evaluator; decoding is pure, so repeats are served from cache.
struct Evaluator<'a> {
    scenario: &'a Scenario,
    cache: HashMap<Allocation, Scores>,
}

/// Batches smaller than this are evaluated on the calling thread.
const PARALLEL_BATCH: usize = 32;

impl<'a> Evaluator<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        Evaluator {
            scenario,
            cache: HashMap::new(),
        }
    }

    fn evaluate(&mut self, allocations: Vec<Allocation>) -> Result<Vec<Individual>> {
        let mut seen = HashSet::new();
        let fresh: Vec<&Allocation> = allocations
            .iter()
            .filter(|a| !self.cache.contains_key(*a) && seen.insert(*a))
            .collect();
        let s = self.scenario;
        let score = |a: &&Allocation| {
            evaluate(s, a).map(|e| Scores {
                pc: e.cost.production,
                tc: e.cost.transport,
                feasible: e.fleet_ok,
                violation: e.violation,
            })
        };
        let scored: Vec<Result<Scores>> = if fresh.len() >= PARALLEL_BATCH {
            fresh.par_iter().map(score).collect()
        } else {
            fresh.iter().map(score).collect()
        };
        for (a, scores) in fresh.into_iter().zip(scored) {
            self.cache.insert(a.clone(), scores?);
        }
        Ok(allocations
            .into_iter()
            .map(|allocation| {
                let sc = self.cache[&allocation];
                Individual {
                    allocation,
                    pc: sc.pc,
                    tc: sc.tc,
                    feasible: sc.feasible,
                    violation: sc.violation,
                    rank: 0,
                    crowding: 0.0,
                }
            })
            .collect())
    }
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

/// Random initial population, evaluated.
pub fn init_population<R: Rng>(s: &Scenario, p: &MoeaParams, rng: &mut R) -> Result<Vec<Individual>> {
    ensure_coverable(s)?;
    p.validate()?;
    init_with(&mut Evaluator::new(s), p, rng)
}

fn init_with<R: Rng>(eval: &mut Evaluator<'_>, p: &MoeaParams, rng: &mut R) -> Result<Vec<Individual>> {
    let (order, n) = (eval.scenario.order, eval.scenario.n());
    let genomes = (0..p.population_size)
        .map(|_| random_composition(order, n, rng))
        .collect();
    eval.evaluate(genomes)
}

fn tournament<'p, R: Rng>(pop: &'p [Individual], size: usize, rng: &mut R) -> &'p Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let challenger = &pop[rng.random_range(0..pop.len())];
        if crowded_cmp(challenger, best) == Ordering::Less {
            best = challenger;
        }
    }
    best
}

/// Restores `Σ = total` by largest-remainder rescaling.
fn repair(genes: Vec<u64>, total: u64) -> Vec<u64> {
    if genes.iter().sum::<u64>() == total {
        genes
    } else {
        Allocation::proportional(total, &genes).0
    }
}

/// Each gene triggers, with probability `prob`, a move of 1..=max(1, Y/10)
/// units from a random non-empty factory to a different random factory.
fn mutate<R: Rng>(genes: &mut [u64], total: u64, prob: f64, rng: &mut R) {
    let n = genes.len();
    if n < 2 || total == 0 {
        return;
    }
    let max_step = (total / 10).max(1);
    for _ in 0..n {
        if rng.random::<f64>() >= prob {
            continue;
        }
        let donors: Vec<usize> = (0..n).filter(|&i| genes[i] > 0).collect();
        let from = donors[rng.random_range(0..donors.len())];
        let mut to = rng.random_range(0..n - 1);
        if to >= from {
            to += 1;
        }
        let amount = rng.random_range(1..=max_step).min(genes[from]);
        genes[from] -= amount;
        genes[to] += amount;
    }
}

/// Tournament selection, uniform crossover with repair, and transfer
/// mutation. Returns `population_size` offspring allocations.
pub fn select_and_vary<R: Rng>(pop: &[Individual], p: &MoeaParams, rng: &mut R) -> Vec<Allocation> {
    let n = pop[0].allocation.len();
    let total = pop[0].allocation.total();
    let pm = p.gene_mutation_prob(n);
    let mut offspring = Vec::with_capacity(p.population_size);
    while offspring.len() < p.population_size {
        let a = tournament(pop, p.tournament_size, rng).allocation.quantities();
        let b = tournament(pop, p.tournament_size, rng).allocation.quantities();
        let (mut c1, mut c2) = (a.to_vec(), b.to_vec());
        if rng.random::<f64>() < p.crossover_prob {
            for g in 0..n {
                if rng.random::<bool>() {
                    std::mem::swap(&mut c1[g], &mut c2[g]);
                }
            }
            c1 = repair(c1, total);
            c2 = repair(c2, total);
        }
        for mut child in [c1, c2] {
            mutate(&mut child, total, pm, rng);
            offspring.push(Allocation::new(child));
        }
    }
    offspring.truncate(p.population_size);
    offspring
}

/// Keeps the best `size` individuals by front, then crowding distance.
/// Repeated allocations only survive when there are fewer than `size`
/// distinct ones.
fn survive(combined: Vec<Individual>, size: usize) -> Vec<Individual> {
    let mut seen = HashSet::new();
    let (unique, repeats): (Vec<Individual>, Vec<Individual>) =
        combined.into_iter().partition(|i| seen.insert(i.allocation.clone()));
    let mut kept = truncate_by_rank(unique, size);
    let missing = size - kept.len();
    kept.extend(repeats.into_iter().take(missing));
    kept
}

fn truncate_by_rank(mut combined: Vec<Individual>, size: usize) -> Vec<Individual> {
    let size = size.min(combined.len());
    let fronts = non_dominated_sort(&mut combined);
    let mut keep = Vec::with_capacity(size);
    for mut front in fronts {
        if keep.len() + front.len() <= size {
            keep.extend(front);
        } else {
            front.sort_by(|&a, &b| combined[b].crowding.total_cmp(&combined[a].crowding).then(a.cmp(&b)));
            keep.extend(front.into_iter().take(size - keep.len()));
        }
        if keep.len() == size {
            break;
        }
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().unwrap()).collect()
}

fn better_scalarized(candidate: &Individual, incumbent: Option<&Individual>) -> bool {
    match incumbent {
        None => true,
        Some(best) => match candidate.total().total_cmp(&best.total()) {
            Ordering::Less => true,
            Ordering::Equal => candidate.allocation < best.allocation,
            Ordering::Greater => false,
        },
    }
}

fn track_best(best: &mut Option<Individual>, pop: &[Individual]) {
    for ind in pop.iter().filter(|i| i.feasible) {
        if better_scalarized(ind, best.as_ref()) {
            *best = Some(ind.clone());
        }
    }
}

/// Runs the evolutionary search. Deterministic for a fixed seed regardless of
/// how many threads evaluate individuals.
pub fn optimize(s: &Scenario, p: &MoeaParams) -> Result<ParetoResult> {
    ensure_coverable(s)?;
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut eval = Evaluator::new(s);

    let mut pop = init_with(&mut eval, p, &mut rng)?;
    non_dominated_sort(&mut pop);
    let mut best = None;
    track_best(&mut best, &pop);

    let mut history = Vec::with_capacity(p.generations);
    for _ in 0..p.generations {
        let children = eval.evaluate(select_and_vary(&pop, p, &mut rng))?;
        track_best(&mut best, &children);
        pop.extend(children);
        pop = survive(pop, p.population_size);
        non_dominated_sort(&mut pop);
        history.push(best.as_ref().map(Individual::total));
    }

    let best_scalarized = best.ok_or(Error::NoFeasibleSolution)?;
    let mut seen = HashSet::new();
    let mut front: Vec<Individual> = pop
        .into_iter()
        .filter(|i| i.rank == 0 && i.feasible)
        .filter(|i| seen.insert(i.allocation.clone()))
        .collect();
    front.sort_by(|a, b| {
        a.pc.total_cmp(&b.pc)
            .then(a.tc.total_cmp(&b.tc))
            .then_with(|| a.allocation.cmp(&b.allocation))
    });
    Ok(ParetoResult {
        front,
        best_scalarized,
        history,
    })
}

/// Chooses one front member by policy; ties go to the smallest allocation.
pub fn pick_solution(result: &ParetoResult, policy: Policy) -> Result<&Individual> {
    let key = |i: &Individual| match policy {
        Policy::MinTotal => i.total(),
        Policy::MinPc => i.pc,
        Policy::MinTc => i.tc,
    };
    result
        .front
        .iter()
        .min_by(|a, b| key(a).total_cmp(&key(b)).then_with(|| a.allocation.cmp(&b.allocation)))
        .ok_or(Error::EmptyFront)
}
