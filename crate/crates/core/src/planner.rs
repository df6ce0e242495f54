//! Joint cut-pair and allocation search, plus the even-allocation benchmarks.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocator::{allocate_even, allocate_optimal, Allocation};
use crate::error::{Error, Result};
use crate::latency::CutPair;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    #[serde(flatten)]
    pub cuts: CutPair,
    pub round_latency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub best_cuts: CutPair,
    pub allocation: Allocation,
    pub round_latency: f64,
    /// Every feasible cut pair under optimal allocation, best first.
    pub search_table: Vec<SearchEntry>,
    /// Number of per-pair allocations solved to build the table.
    #[serde(default)]
    pub evaluations: usize,
}

/// All `(a, b)` with `1 <= a <= b <= layers - 1`, in lexicographic order.
pub fn enumerate_cuts(layers: usize) -> Vec<CutPair> {
    (1..layers)
        .flat_map(|a| (a..layers).map(move |b| CutPair::new(a, b)))
        .collect()
}

fn rank(a: &SearchEntry, b: &SearchEntry) -> Ordering {
    a.round_latency
        .total_cmp(&b.round_latency)
        .then_with(|| a.cuts.cmp(&b.cuts))
}

/// Exhaustive search over cut pairs with the optimal allocation for each.
/// Pairs are evaluated in parallel; the result does not depend on order.
pub fn solve_lscra(scenario: &Scenario) -> Result<PlanResult> {
    if scenario.clients.is_empty() {
        return Err(Error::EmptyScenario);
    }
    let candidates = enumerate_cuts(scenario.profile.layer_count());
    let solved: Vec<(CutPair, Allocation)> = candidates
        .par_iter()
        .map(|&cuts| allocate_optimal(scenario, cuts).map(|a| (cuts, a)))
        .collect::<Result<_>>()?;
    let evaluations = solved.len();

    let mut search_table: Vec<SearchEntry> = solved
        .iter()
        .map(|(cuts, a)| SearchEntry {
            cuts: *cuts,
            round_latency: a.round_latency,
        })
        .collect();
    search_table.sort_by(rank);

    let best_cuts = search_table[0].cuts;
    let allocation = solved
        .into_iter()
        .find(|(cuts, _)| *cuts == best_cuts)
        .map(|(_, a)| a)
        .expect("best cuts come from the solved set");
    Ok(PlanResult {
        best_cuts,
        round_latency: allocation.round_latency,
        allocation,
        search_table,
        evaluations,
    })
}

fn with_even_allocation(scenario: &Scenario, plan: &PlanResult, cuts: CutPair) -> Result<PlanResult> {
    let allocation = allocate_even(scenario, cuts)?;
    Ok(PlanResult {
        best_cuts: cuts,
        round_latency: allocation.round_latency,
        allocation,
        search_table: plan.search_table.clone(),
        evaluations: plan.evaluations,
    })
}

/// Benchmark (a): the optimal cuts, server budget split evenly.
pub fn benchmark_even_optimal(scenario: &Scenario) -> Result<PlanResult> {
    benchmark_even_optimal_from(scenario, &solve_lscra(scenario)?)
}

pub fn benchmark_even_optimal_from(scenario: &Scenario, plan: &PlanResult) -> Result<PlanResult> {
    with_even_allocation(scenario, plan, plan.best_cuts)
}

/// Benchmark (b): the runner-up cuts of the search table, budget split evenly.
pub fn benchmark_even_suboptimal(scenario: &Scenario) -> Result<PlanResult> {
    benchmark_even_suboptimal_from(scenario, &solve_lscra(scenario)?)
}

pub fn benchmark_even_suboptimal_from(scenario: &Scenario, plan: &PlanResult) -> Result<PlanResult> {
    let second = plan.search_table.get(1).ok_or(Error::NoSecondCandidate)?;
    with_even_allocation(scenario, plan, second.cuts)
}

/// Round latencies of LSCRA and both benchmarks for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub lscra: f64,
    pub even_optimal: f64,
    pub even_suboptimal: f64,
}

pub fn compare(scenario: &Scenario) -> Result<Comparison> {
    let plan = solve_lscra(scenario)?;
    Ok(Comparison {
        lscra: plan.round_latency,
        even_optimal: benchmark_even_optimal_from(scenario, &plan)?.round_latency,
        even_suboptimal: benchmark_even_suboptimal_from(scenario, &plan)?.round_latency,
    })
}
