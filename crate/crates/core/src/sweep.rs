//! Seeded parameter sweeps comparing LSCRA against the two benchmarks.
//!
//! Each sweep point averages `trials` scenarios drawn with seeds
//! `seed, seed + 1, ..`. Within one trial the client pool is fixed across
//! the sweep: the capacity sweep reuses the same clients at every capacity,
//! and the client sweep takes nested prefixes of one pool.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::planner::{compare, Comparison};
use crate::profile::LayerProfile;
use crate::scenario::{sample_scenario, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<X> {
    pub x: X,
    pub lscra_s: f64,
    pub bench_a_s: f64,
    pub bench_b_s: f64,
}

impl<X> SweepRow<X> {
    /// Relative latency gap of benchmark (a) over LSCRA.
    pub fn gap_a(&self) -> f64 {
        (self.bench_a_s - self.lscra_s) / self.lscra_s
    }
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive; a single step yields `lo`.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Integer grid from `lo` to `hi`, rounded to the nearest client count.
pub fn client_grid(lo: usize, hi: usize, steps: usize) -> Vec<usize> {
    linspace(lo as f64, hi as f64, steps)
        .into_iter()
        .map(|x| x.round() as usize)
        .collect()
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvariantViolation("trials >= 1".into()));
    }
    Ok(())
}

fn average<X>(x: X, rows: &[Comparison]) -> SweepRow<X> {
    let k = rows.len() as f64;
    SweepRow {
        x,
        lscra_s: rows.iter().map(|c| c.lscra).sum::<f64>() / k,
        bench_a_s: rows.iter().map(|c| c.even_optimal).sum::<f64>() / k,
        bench_b_s: rows.iter().map(|c| c.even_suboptimal).sum::<f64>() / k,
    }
}

fn pools(n_clients: usize, capacity: f64, profile: &LayerProfile, seed: u64, trials: usize) -> Result<Vec<Scenario>> {
    (0..trials as u64)
        .map(|t| sample_scenario(n_clients, capacity, profile, seed.wrapping_add(t)))
        .collect()
}

pub fn sweep_capacity(
    n_clients: usize,
    capacities: &[f64],
    profile: &LayerProfile,
    seed: u64,
    trials: usize,
) -> Result<Vec<SweepRow<f64>>> {
    check_trials(trials)?;
    let first = capacities.first().copied().unwrap_or(1.0);
    let pools = pools(n_clients, first, profile, seed, trials)?;
    capacities
        .par_iter()
        .map(|&fs| {
            let rows = pools
                .iter()
                .map(|s| compare(&s.with_capacity(fs)))
                .collect::<Result<Vec<_>>>()?;
            Ok(average(fs, &rows))
        })
        .collect()
}

pub fn sweep_clients(
    counts: &[usize],
    capacity: f64,
    profile: &LayerProfile,
    seed: u64,
    trials: usize,
) -> Result<Vec<SweepRow<usize>>> {
    check_trials(trials)?;
    let largest = counts.iter().copied().max().unwrap_or(1);
    let pools = pools(largest, capacity, profile, seed, trials)?;
    counts
        .par_iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::InvariantViolation("client count >= 1".into()));
            }
            let rows = pools
                .iter()
                .map(|s| compare(&s.prefix(n)))
                .collect::<Result<Vec<_>>>()?;
            Ok(average(n, &rows))
        })
        .collect()
}

/// Writes a sweep as CSV with header `<x_column>,lscra_s,bench_a_s,bench_b_s`.
pub fn write_sweep_csv<X: ToString, W: Write>(rows: &[SweepRow<X>], x_column: &str, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record([x_column, "lscra_s", "bench_a_s", "bench_b_s"])?;
    for r in rows {
        writer.write_record([
            r.x.to_string(),
            r.lscra_s.to_string(),
            r.bench_a_s.to_string(),
            r.bench_b_s.to_string(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io("sweep csv", e))?;
    Ok(())
}
