//! Exhaustive search over every allocation of a small instance.
//!
//! Uses the same greedy decoding as the optimizer, so any disagreement with
//! the optimizer is a search failure rather than a decoding difference.

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::evaluate;
use crate::error::{Error, Result};
use crate::feasibility::infeasible_materials;
use crate::model::{Allocation, Scenario};
use crate::moea::SolutionRecord;
use crate::TOLERANCE;

/// Largest number of compositions [`enumerate_allocations`] will walk.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// `C(total + parts - 1, parts - 1)`, saturating at `u128::MAX`.
pub fn composition_count(parts: usize, total: u64) -> u128 {
    let mut count: u128 = 1;
    for i in 1..parts as u128 {
        count = match count.checked_mul(total as u128 + i) {
            Some(c) => c / i,
            None => return u128::MAX,
        };
    }
    count
}

/// Lexicographic walk over compositions of a total.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u64>>,
}

impl Iterator for Compositions {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        let out = self.current.clone()?;
        let c = self.current.as_mut().unwrap();
        let n = c.len();
        let mut tail = 0;
        let mut advanced = false;
        for i in (0..n.saturating_sub(1)).rev() {
            tail += c[i + 1];
            if tail > 0 {
                c[i] += 1;
                c[i + 1..].iter_mut().for_each(|q| *q = 0);
                c[n - 1] = tail - 1;
                advanced = true;
                break;
            }
        }
        if !advanced {
            self.current = None;
        }
        Some(Allocation::new(out))
    }
}

/// Every composition of `total` into `parts` non-negative integers, in
/// lexicographic order.
pub fn enumerate_allocations(parts: usize, total: u64) -> Result<Compositions> {
    if parts == 0 {
        return Err(Error::InvalidParams {
            name: "parts",
            message: "need at least one factory".into(),
        });
    }
    let count = composition_count(parts, total);
    if count > ENUMERATION_LIMIT {
        return Err(Error::InstanceTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut start = vec![0; parts];
    start[parts - 1] = total;
    Ok(Compositions {
        current: Some(start),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_total: f64,
    /// Allocations within tolerance of `best_total`, lexicographic order.
    pub best_allocations: Vec<Allocation>,
    /// Non-dominated feasible points sorted by (PC, TC, allocation).
    pub exact_front: Vec<SolutionRecord>,
    pub evaluated_count: u128,
}

#[derive(Serialize)]
struct OracleDoc<'a> {
    front: &'a [SolutionRecord],
    best: &'a SolutionRecord,
    best_allocations: &'a [Allocation],
    evaluated_count: u64,
}

impl OracleResult {
    /// The lexicographically smallest optimal allocation as a front record.
    pub fn best(&self) -> SolutionRecord {
        let a = &self.best_allocations[0];
        self.exact_front
            .iter()
            .find(|r| &r.allocation == a)
            .cloned()
            .expect("an optimal allocation is never dominated")
    }
}

impl Serialize for OracleResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        OracleDoc {
            front: &self.exact_front,
            best: &self.best(),
            best_allocations: &self.best_allocations,
            evaluated_count: self.evaluated_count as u64,
        }
        .serialize(serializer)
    }
}

/// Evaluates every allocation and keeps the fleet-feasible ones.
pub fn brute_force(s: &Scenario) -> Result<OracleResult> {
    let bad = infeasible_materials(s);
    if !bad.is_empty() {
        return Err(Error::Infeasible {
            materials: bad.into_iter().map(|k| s.materials[k].id.clone()).collect(),
        });
    }
    let allocations: Vec<Allocation> = enumerate_allocations(s.n(), s.order)?.collect();
    let evaluated_count = allocations.len() as u128;
    let scored: Vec<Option<SolutionRecord>> = allocations
        .into_par_iter()
        .map(|a| {
            evaluate(s, &a).map(|e| {
                e.fleet_ok.then(|| SolutionRecord {
                    allocation: a,
                    pc: e.cost.production,
                    tc: e.cost.transport,
                    total: e.cost.total,
                })
            })
        })
        .collect::<Result<_>>()?;
    let feasible: Vec<SolutionRecord> = scored.into_iter().flatten().collect();

    let best_total = feasible
        .iter()
        .map(|r| r.total)
        .min_by(f64::total_cmp)
        .ok_or(Error::NoFeasibleSolution)?;
    let best_allocations = feasible
        .iter()
        .filter(|r| (r.total - best_total).abs() <= TOLERANCE)
        .map(|r| r.allocation.clone())
        .collect();

    Ok(OracleResult {
        best_total,
        best_allocations,
        exact_front: pareto_filter(feasible),
        evaluated_count,
    })
}

/// Keeps points no other point dominates; identical points are all kept.
fn pareto_filter(mut points: Vec<SolutionRecord>) -> Vec<SolutionRecord> {
    points.sort_by(|a, b| {
        a.pc.total_cmp(&b.pc)
            .then(a.tc.total_cmp(&b.tc))
            .then_with(|| a.allocation.cmp(&b.allocation))
    });
    // Lowest TC seen so far and the lowest PC that reached it.
    let mut frontier: Option<(f64, f64)> = None;
    points
        .into_iter()
        .filter(|p| match frontier {
            None => {
                frontier = Some((p.tc, p.pc));
                true
            }
            Some((tc, _)) if p.tc < tc => {
                frontier = Some((p.tc, p.pc));
                true
            }
            Some((tc, pc)) => p.tc == tc && p.pc == pc,
        })
        .collect()
}
