//! Server compute allocation for a fixed cut pair.
//!
//! With cuts fixed, client `n`'s round latency is `T_n = local_n + eps_n / f_n`
//! where `f_n` is its server share. The min-max optimum spends the whole
//! budget and equalizes every `T_n`. Anchoring on the client `k` with the
//! largest `local_k`, equal latencies give
//!
//! ```text
//! f_n = eps_n * f_k / (eps_k + f_k * (local_k - local_n))
//! ```
//!
//! and the budget constraint `sum_n f_n = F_s` becomes a scalar equation in
//! `f_k` whose left side is strictly increasing, so it is solved by bisection
//! on `[0, F_s]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency::{self, client_step_latencies, split_workloads, ClientDecomposition, CutPair};
use crate::scenario::Scenario;

/// Relative tolerance on the budget residual, as a fraction of `F_s`.
pub const BUDGET_TOLERANCE: f64 = 1e-9;
/// Safety cap; a double-precision bracket collapses long before this.
pub const MAX_BISECTION_ITERATIONS: usize = 200;

pub const ORACLE_MAX_CLIENTS: usize = 4;
pub const ORACLE_MIN_RESOLUTION: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Server cycles/s given to each client.
    pub shares: Vec<f64>,
    pub client_latencies: Vec<f64>,
    pub round_latency: f64,
    /// Client with the largest share-independent latency.
    pub anchor_index: usize,
    /// Bisection steps taken; zero when no root finding was needed.
    #[serde(default)]
    pub iterations: usize,
}

impl Allocation {
    fn from_shares(scenario: &Scenario, cuts: CutPair, shares: Vec<f64>, anchor_index: usize, iterations: usize) -> Result<Self> {
        let client_latencies = latency::client_latencies(scenario, cuts, &shares)?;
        let round_latency = client_latencies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Allocation {
            shares,
            client_latencies,
            round_latency,
            anchor_index,
            iterations,
        })
    }

    pub fn total_share(&self) -> f64 {
        self.shares.iter().sum()
    }
}

/// First index of the maximum; ties go to the lowest index.
fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Left side of the budget equation minus `F_s`, as a function of the
/// anchor's share `f_sk`. Requires `k` to maximize `t_local` so that every
/// denominator stays at least `eps[k]`.
pub fn balance_residual(f_sk: f64, eps: &[f64], t_local: &[f64], k: usize, capacity: f64) -> f64 {
    shares_for_anchor(f_sk, eps, t_local, k).sum::<f64>() - capacity
}

fn shares_for_anchor<'a>(f_sk: f64, eps: &'a [f64], t_local: &'a [f64], k: usize) -> impl Iterator<Item = f64> + 'a {
    let (eps_k, local_k) = (eps[k], t_local[k]);
    eps.iter().zip(t_local).map(move |(&e, &l)| {
        if e == 0.0 {
            0.0
        } else {
            e * f_sk / (eps_k + f_sk * (local_k - l))
        }
    })
}

/// Root of [`balance_residual`] on `[0, capacity]`, approached from below
/// so the returned shares never exceed the budget.
///
/// Stops once the residual lies in `[-tol * capacity / 2, 0]`, or when the
/// bracket can no longer be halved in double precision.
pub fn solve_anchor_share(eps: &[f64], t_local: &[f64], k: usize, capacity: f64) -> Result<(f64, usize)> {
    let tol = 0.5 * BUDGET_TOLERANCE * capacity;
    let (mut lo, mut hi) = (0.0_f64, capacity);
    for iteration in 1..=MAX_BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok((lo, iteration));
        }
        let r = balance_residual(mid, eps, t_local, k, capacity);
        if r > 0.0 {
            hi = mid;
        } else if r >= -tol {
            return Ok((mid, iteration));
        } else {
            lo = mid;
        }
    }
    Err(Error::BisectionStalled {
        iterations: MAX_BISECTION_ITERATIONS,
    })
}

/// Min-max optimal split of the server budget for fixed cuts.
pub fn allocate_optimal(scenario: &Scenario, cuts: CutPair) -> Result<Allocation> {
    if scenario.clients.is_empty() {
        return Err(Error::EmptyScenario);
    }
    let decomposition = latency::decompose_all(scenario, cuts)?;
    allocate_from_decomposition(scenario, cuts, &decomposition)
}

pub(crate) fn allocate_from_decomposition(scenario: &Scenario, cuts: CutPair, decomposition: &[ClientDecomposition]) -> Result<Allocation> {
    let n = decomposition.len();
    let eps: Vec<f64> = decomposition.iter().map(|d| d.epsilon).collect();
    let local: Vec<f64> = decomposition.iter().map(|d| d.local_latency).collect();
    let capacity = scenario.server.capacity_hz;

    // Empty body: nothing runs on the server.
    if eps.iter().all(|&e| e == 0.0) {
        return Allocation::from_shares(scenario, cuts, vec![0.0; n], argmax(local.iter().copied()), 0);
    }

    // Cuts are global, so either every client or no client has server work.
    // Clients without server work keep a zero share and drop out of the balance.
    let anchor = argmax(eps.iter().zip(&local).map(|(&e, &l)| if e > 0.0 { l } else { f64::NEG_INFINITY }));
    let active = eps.iter().filter(|&&e| e > 0.0).count();
    if active == 1 {
        let mut shares = vec![0.0; n];
        shares[anchor] = capacity;
        return Allocation::from_shares(scenario, cuts, shares, anchor, 0);
    }

    let (f_sk, iterations) = solve_anchor_share(&eps, &local, anchor, capacity)?;
    let shares: Vec<f64> = shares_for_anchor(f_sk, &eps, &local, anchor).collect();
    Allocation::from_shares(scenario, cuts, shares, anchor, iterations)
}

/// Equal split of the server budget.
pub fn allocate_even(scenario: &Scenario, cuts: CutPair) -> Result<Allocation> {
    if scenario.clients.is_empty() {
        return Err(Error::EmptyScenario);
    }
    let n = scenario.n_clients();
    let decomposition = latency::decompose_all(scenario, cuts)?;
    let anchor = argmax(decomposition.iter().map(|d| d.local_latency));
    let shares = vec![scenario.server.capacity_hz / n as f64; n];
    Allocation::from_shares(scenario, cuts, shares, anchor, 0)
}

/// Exhaustive grid search over full-budget allocations with `resolution`
/// cells; test oracle for [`allocate_optimal`].
pub fn oracle_grid_allocate(scenario: &Scenario, cuts: CutPair, resolution: usize) -> Result<Allocation> {
    oracle_grid_allocate_refined(scenario, cuts, resolution, 0)
}

/// [`oracle_grid_allocate`] followed by `passes` zoom passes, each
/// re-gridding a window of two cells either side of the incumbent at 25x
/// finer spacing.
pub fn oracle_grid_allocate_refined(scenario: &Scenario, cuts: CutPair, resolution: usize, passes: usize) -> Result<Allocation> {
    let n = scenario.n_clients();
    if n == 0 {
        return Err(Error::EmptyScenario);
    }
    if n > ORACLE_MAX_CLIENTS {
        return Err(Error::TooManyClientsForOracle {
            max: ORACLE_MAX_CLIENTS,
            got: n,
        });
    }
    if resolution < ORACLE_MIN_RESOLUTION {
        return Err(Error::OracleResolution {
            min: ORACLE_MIN_RESOLUTION,
            got: resolution,
        });
    }
    let grid = Grid::new(scenario, cuts)?;
    let capacity = scenario.server.capacity_hz;
    let step = capacity / resolution as f64;
    let windows = vec![(0.0, resolution); n.saturating_sub(1)];
    let (mut best, mut best_value) = grid.search(&windows, step);

    const ZOOM_CELLS: usize = 100;
    let mut step = step;
    for _ in 0..passes {
        let fine = 4.0 * step / ZOOM_CELLS as f64;
        let windows: Vec<(f64, usize)> = best[..n - 1]
            .iter()
            .map(|&s| ((s - 2.0 * step).max(0.0), ZOOM_CELLS))
            .collect();
        let (candidate, value) = grid.search(&windows, fine);
        if value <= best_value {
            best = candidate;
            best_value = value;
        }
        step = fine;
    }
    let anchor = argmax(grid.decomposition.iter().map(|d| d.local_latency));
    Allocation::from_shares(scenario, cuts, best, anchor, 0)
}

/// Evaluates client latencies straight from the step formulas.
struct Grid<'a> {
    scenario: &'a Scenario,
    workloads: latency::SplitWorkloads,
    decomposition: Vec<ClientDecomposition>,
}

impl<'a> Grid<'a> {
    fn new(scenario: &'a Scenario, cuts: CutPair) -> Result<Self> {
        Ok(Grid {
            scenario,
            workloads: split_workloads(&scenario.profile, cuts)?,
            decomposition: latency::decompose_all(scenario, cuts)?,
        })
    }

    fn latency(&self, client: usize, share: f64) -> f64 {
        if share < 0.0 {
            return f64::INFINITY;
        }
        let c = &self.scenario.clients[client];
        client_step_latencies(&self.workloads, c, self.scenario.server.compute_intensity, share)
            .map(|s| latency::client_round_latency(&s))
            .unwrap_or(f64::INFINITY)
    }

    /// Minimizes the max latency over allocations where client `i < N-1`
    /// gets `lower_i + m * step` for `m` in `0..=cells_i`, and the last
    /// client takes whatever budget remains.
    fn search(&self, windows: &[(f64, usize)], step: f64) -> (Vec<f64>, f64) {
        let n = self.scenario.n_clients();
        let capacity = self.scenario.server.capacity_hz;
        if n == 1 {
            return (vec![capacity], self.latency(0, capacity));
        }
        let mut shares = vec![0.0; n];
        let mut best = (shares.clone(), f64::INFINITY);
        self.enumerate(0, windows, step, capacity, f64::NEG_INFINITY, &mut shares, &mut best);
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &self,
        client: usize,
        windows: &[(f64, usize)],
        step: f64,
        remaining: f64,
        running_max: f64,
        shares: &mut Vec<f64>,
        best: &mut (Vec<f64>, f64),
    ) {
        let n = shares.len();
        if client == n - 2 {
            // Last two clients: T_i falls and T_last rises with the cell index,
            // so the grid minimizer of their max sits at the crossover.
            let (lower, cells) = windows[client];
            let pair_max = |m: usize| {
                let s = lower + m as f64 * step;
                self.latency(client, s).max(self.latency(n - 1, remaining - s))
            };
            let crossing = partition_point(cells + 1, |m| {
                let s = lower + m as f64 * step;
                self.latency(client, s) > self.latency(n - 1, remaining - s)
            });
            for m in [crossing.saturating_sub(1), crossing.min(cells)] {
                let value = pair_max(m).max(running_max);
                if value < best.1 {
                    let s = lower + m as f64 * step;
                    shares[client] = s;
                    shares[n - 1] = remaining - s;
                    best.0.clone_from(shares);
                    best.1 = value;
                }
            }
            return;
        }
        let (lower, cells) = windows[client];
        for m in 0..=cells {
            let s = lower + m as f64 * step;
            if s > remaining {
                break;
            }
            let t = self.latency(client, s);
            let bound = running_max.max(t);
            if bound >= best.1 {
                continue;
            }
            shares[client] = s;
            self.enumerate(client + 1, windows, step, remaining - s, bound, shares, best);
        }
    }
}

/// First index in `0..len` where `pred` is false, for `pred` true-then-false.
fn partition_point(len: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
