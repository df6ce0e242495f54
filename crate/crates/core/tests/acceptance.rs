//! Acceptance criteria. Each criterion prints one `[PASS]`/`[FAIL]` line;
//! run with `cargo test -p splitplan --test acceptance -- --nocapture` to see them.
//!
//! Every criterion also renders the numbers it checked as a CSV artifact so
//! that criterion 9 can verify reruns are byte-identical.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitplan::allocator::{allocate_optimal, balance_residual, oracle_grid_allocate_refined, MAX_BISECTION_ITERATIONS};
use splitplan::latency::{self, split_workloads, CutPair};
use splitplan::planner::{benchmark_even_optimal_from, benchmark_even_suboptimal_from, enumerate_cuts, solve_lscra};
use splitplan::profile::{resnet18_profile, toy_profile, LayerProfile};
use splitplan::scenario::{sample_scenario, GHZ};
use splitplan::simulator::simulate_round;
use splitplan::sweep::{client_grid, linspace, sweep_capacity, sweep_clients, write_sweep_csv, SweepRow};

/// Outcome of one criterion.
struct Verdict {
    id: u8,
    pass: bool,
    detail: String,
    artifact: String,
}

impl Verdict {
    fn report(self) -> Self {
        println!(
            "[{}] criterion {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.detail
        );
        self
    }

    fn assert(self) {
        let v = self.report();
        assert!(v.pass, "criterion {} failed: {}", v.id, v.detail);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn cuts_with_body(layers: usize) -> Vec<CutPair> {
    enumerate_cuts(layers).into_iter().filter(CutPair::has_body).collect()
}

// 1. allocate_optimal vs refined grid oracle, 50 scenarios, N in {2, 3},
//    toy profile, F_s across three decades; 1e-4 relative, < 60 s.
const C1_SCENARIOS: u64 = 50;
const C1_TOLERANCE: f64 = 1e-4;
const C1_RESOLUTION: usize = 10_000;
const C1_REFINE_PASSES: usize = 3;
const C1_UNSPENT_SLACK: f64 = 1e-7;
const C1_BUDGET: Duration = Duration::from_secs(60);

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let profile = toy_profile();
    let body_cuts = cuts_with_body(profile.layer_count());
    let mut artifact = String::from("seed,n,fs_hz,first_cut,second_cut,optimal_s,oracle_s\n");
    let mut worst = 0.0_f64;
    let mut oracle_below = 0;
    for seed in 0..C1_SCENARIOS {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + seed);
        let n = rng.gen_range(2..=3);
        // 1e2 .. 1e5 cycles/s: server time dominates at the low end and is
        // comparable to link time at the high end
        let fs = 10f64.powf(rng.gen_range(2.0..=5.0));
        let cuts = body_cuts[rng.gen_range(0..body_cuts.len())];
        let s = sample_scenario(n, fs, &profile, seed).unwrap();
        let optimal = allocate_optimal(&s, cuts).unwrap();
        let oracle = oracle_grid_allocate_refined(&s, cuts, C1_RESOLUTION, C1_REFINE_PASSES).unwrap();
        worst = worst.max(rel(optimal.round_latency, oracle.round_latency));
        // the bisection may leave up to 1e-9 of the budget unspent
        if oracle.round_latency < optimal.round_latency * (1.0 - C1_UNSPENT_SLACK) {
            oracle_below += 1;
        }
        writeln!(
            artifact,
            "{seed},{n},{fs},{},{},{},{}",
            cuts.first_cut, cuts.second_cut, optimal.round_latency, oracle.round_latency
        )
        .unwrap();
    }
    let elapsed = start.elapsed();
    Verdict {
        id: 1,
        pass: worst <= C1_TOLERANCE && oracle_below == 0 && elapsed < C1_BUDGET,
        detail: format!(
            "oracle equivalence: worst relative gap {worst:.3e} (<= {C1_TOLERANCE:e}), oracle below optimum {oracle_below} times, {:.2?} (< {C1_BUDGET:?})",
            elapsed
        ),
        artifact,
    }
}

// 2 and 3. Equalization, budget exhaustion and bisection effort over 1000
// scenarios with server-side work.
const C2_SCENARIOS: u64 = 1000;
const C2_SPREAD: f64 = 1e-6;
const C2_BUDGET_TOL: f64 = 1e-9;
const C2_TIME: Duration = Duration::from_secs(10);
const C3_MAX_ITERATIONS: usize = 60;
const C3_EVALUATIONS: usize = 100_000;

struct EqualizationRun {
    worst_spread: f64,
    worst_budget: f64,
    max_iterations: usize,
    elapsed: Duration,
    artifact: String,
}

fn equalization_run() -> EqualizationRun {
    let start = Instant::now();
    let profile = resnet18_profile();
    let body_cuts = cuts_with_body(profile.layer_count());
    let mut artifact = String::from("seed,n,fs_hz,first_cut,second_cut,round_s,spread_rel,budget_rel,iterations\n");
    let (mut worst_spread, mut worst_budget, mut max_iterations) = (0.0_f64, 0.0_f64, 0);
    for seed in 0..C2_SCENARIOS {
        let mut rng = ChaCha8Rng::seed_from_u64(2_000 + seed);
        let n = rng.gen_range(2..=100);
        let fs = rng.gen_range(10.0 * GHZ..=50.0 * GHZ);
        let cuts = body_cuts[rng.gen_range(0..body_cuts.len())];
        let s = sample_scenario(n, fs, &profile, seed).unwrap();
        let a = allocate_optimal(&s, cuts).unwrap();
        let hi = a.client_latencies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = a.client_latencies.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = (hi - lo) / hi;
        let budget = (a.total_share() - fs).abs() / fs;
        worst_spread = worst_spread.max(spread);
        worst_budget = worst_budget.max(budget);
        max_iterations = max_iterations.max(a.iterations);
        writeln!(
            artifact,
            "{seed},{n},{fs},{},{},{},{spread},{budget},{}",
            cuts.first_cut, cuts.second_cut, a.round_latency, a.iterations
        )
        .unwrap();
    }
    EqualizationRun {
        worst_spread,
        worst_budget,
        max_iterations,
        elapsed: start.elapsed(),
        artifact,
    }
}

fn criterion_2() -> Verdict {
    let r = equalization_run();
    Verdict {
        id: 2,
        pass: r.worst_spread <= C2_SPREAD && r.worst_budget <= C2_BUDGET_TOL && r.elapsed < C2_TIME,
        detail: format!(
            "equalization + budget over {C2_SCENARIOS} scenarios: worst spread {:.3e} (<= {C2_SPREAD:e}), worst budget residual {:.3e} (<= {C2_BUDGET_TOL:e}), {:.2?} (< {C2_TIME:?})",
            r.worst_spread, r.worst_budget, r.elapsed
        ),
        artifact: r.artifact,
    }
}

fn criterion_3() -> Verdict {
    let profile = resnet18_profile();
    let body_cuts = cuts_with_body(profile.layer_count());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut evaluations = 0;
    let mut artifact = String::from("instance,x1,x2,r1,r2\n");
    let mut instance = 0;
    while evaluations < C3_EVALUATIONS {
        let n = rng.gen_range(2..=50);
        let fs = rng.gen_range(10.0 * GHZ..=50.0 * GHZ);
        let cuts = body_cuts[rng.gen_range(0..body_cuts.len())];
        let s = sample_scenario(n, fs, &profile, rng.gen()).unwrap();
        let d = latency::decompose_all(&s, cuts).unwrap();
        let eps: Vec<f64> = d.iter().map(|c| c.epsilon).collect();
        let local: Vec<f64> = d.iter().map(|c| c.local_latency).collect();
        let k = (0..n).fold(0, |k, i| if local[i] > local[k] { i } else { k });
        for _ in 0..1000 {
            let a = rng.gen_range(0.0..=fs);
            let b = rng.gen_range(0.0..=fs);
            let (x1, x2) = if a < b { (a, b) } else { (b, a) };
            if x2 - x1 < 1e-9 * fs {
                continue;
            }
            let (r1, r2) = (balance_residual(x1, &eps, &local, k, fs), balance_residual(x2, &eps, &local, k, fs));
            if r1.is_nan() || r2.is_nan() || r1 >= r2 {
                violations += 1;
            }
            if evaluations % 1000 == 0 {
                writeln!(artifact, "{instance},{x1},{x2},{r1},{r2}").unwrap();
            }
            evaluations += 1;
        }
        instance += 1;
    }
    let iterations = equalization_run().max_iterations;
    writeln!(artifact, "max_iterations,{iterations}").unwrap();
    Verdict {
        id: 3,
        pass: violations == 0 && iterations <= C3_MAX_ITERATIONS && iterations < MAX_BISECTION_ITERATIONS,
        detail: format!(
            "balance residual monotone in {evaluations} ordered pairs ({violations} violations); max bisection iterations {iterations} (<= {C3_MAX_ITERATIONS})"
        ),
        artifact,
    }
}

// 4. Dominance over 200 sampled scenarios with N = 5..20 on ResNet-18.
const C4_SCENARIOS: u64 = 200;
const C4_SLACK: f64 = 1e-9;
const C4_STRICT_SHARE: f64 = 0.5;

fn criterion_4() -> Verdict {
    let profile = resnet18_profile();
    let mut artifact = String::from("seed,n,fs_hz,lscra_s,bench_a_s,bench_b_s\n");
    let (mut dominated, mut strict) = (0, 0);
    for seed in 0..C4_SCENARIOS {
        let mut rng = ChaCha8Rng::seed_from_u64(4_000 + seed);
        let n = rng.gen_range(5..=20);
        let fs = rng.gen_range(10.0 * GHZ..=50.0 * GHZ);
        let s = sample_scenario(n, fs, &profile, seed).unwrap();
        let plan = solve_lscra(&s).unwrap();
        let a = benchmark_even_optimal_from(&s, &plan).unwrap().round_latency;
        let b = benchmark_even_suboptimal_from(&s, &plan).unwrap().round_latency;
        let t = plan.round_latency;
        if t <= a * (1.0 + C4_SLACK) && t <= b * (1.0 + C4_SLACK) {
            dominated += 1;
        }
        if t < a * (1.0 - C4_SLACK) && t < b * (1.0 - C4_SLACK) {
            strict += 1;
        }
        writeln!(artifact, "{seed},{n},{fs},{t},{a},{b}").unwrap();
    }
    let share = strict as f64 / C4_SCENARIOS as f64;
    Verdict {
        id: 4,
        pass: dominated == C4_SCENARIOS && share >= C4_STRICT_SHARE,
        detail: format!(
            "dominance: {dominated}/{C4_SCENARIOS} scenarios with LSCRA <= both benchmarks, strict improvement in {:.1}% (>= {:.0}%)",
            100.0 * share,
            100.0 * C4_STRICT_SHARE
        ),
        artifact,
    }
}

// 5. Simulator vs analytic model over 100 scenarios.
const C5_SCENARIOS: u64 = 100;
const C5_MAKESPAN_TOL: f64 = 1e-9;
const C5_CLIENT_TOL: f64 = 1e-12;

fn criterion_5() -> Verdict {
    let profile = resnet18_profile();
    let mut artifact = String::from("seed,n,simulated_s,analytic_s\n");
    let (mut worst_makespan, mut worst_client) = (0.0_f64, 0.0_f64);
    let mut share_violations = 0;
    for seed in 0..C5_SCENARIOS {
        let mut rng = ChaCha8Rng::seed_from_u64(5_000 + seed);
        let n = rng.gen_range(1..=40);
        let fs = rng.gen_range(10.0 * GHZ..=50.0 * GHZ);
        let s = sample_scenario(n, fs, &profile, seed).unwrap();
        let plan = solve_lscra(&s).unwrap();
        let trace = simulate_round(&s, plan.best_cuts, &plan.allocation).unwrap();
        let analytic = latency::round_latency(&s, plan.best_cuts, &plan.allocation.shares).unwrap();
        worst_makespan = worst_makespan.max(rel(trace.round_makespan, analytic));
        for (i, t) in plan.allocation.client_latencies.iter().enumerate() {
            worst_client = worst_client.max(rel(trace.busy_time(i), *t));
        }
        if trace.sweep_server_share(&plan.allocation.shares) > fs * (1.0 + 1e-9) {
            share_violations += 1;
        }
        writeln!(artifact, "{seed},{n},{},{analytic}", trace.round_makespan).unwrap();
    }
    Verdict {
        id: 5,
        pass: worst_makespan <= C5_MAKESPAN_TOL && worst_client <= C5_CLIENT_TOL && share_violations == 0,
        detail: format!(
            "simulator agreement: worst makespan gap {worst_makespan:.3e} (<= {C5_MAKESPAN_TOL:e}), worst per-client gap {worst_client:.3e} (<= {C5_CLIENT_TOL:e}), server over-subscription {share_violations}"
        ),
        artifact,
    }
}

// 6 and 7. Sweep trends. Each point averages SWEEP_TRIALS seeded client
// pools; pools are fixed across a sweep.
const SWEEP_SEED: u64 = 42;
const SWEEP_TRIALS: usize = 20;
const C6_CLIENTS: usize = 100;
const C6_STEPS: usize = 9;
const C6_TIME: Duration = Duration::from_secs(120);
const C7_CAPACITY: f64 = 50.0 * GHZ;

fn sweep_artifact<X: ToString>(rows: &[SweepRow<X>], column: &str) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(rows, column, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let grid = linspace(10.0 * GHZ, 50.0 * GHZ, C6_STEPS);
    let rows = sweep_capacity(C6_CLIENTS, &grid, &resnet18_profile(), SWEEP_SEED, SWEEP_TRIALS).unwrap();
    let elapsed = start.elapsed();
    let monotone = rows.windows(2).all(|w| w[1].lscra_s <= w[0].lscra_s);
    let (first, last) = (rows.first().unwrap(), rows.last().unwrap());
    let dominance = rows.iter().all(|r| r.lscra_s <= r.bench_a_s && r.lscra_s <= r.bench_b_s);
    Verdict {
        id: 6,
        pass: monotone && first.gap_a() > last.gap_a() && dominance && elapsed < C6_TIME,
        detail: format!(
            "capacity sweep: LSCRA non-increasing {monotone}, gap to benchmark (a) {:.4} at 10 GHz vs {:.4} at 50 GHz, dominance {dominance}, {:.2?} (< {C6_TIME:?})",
            first.gap_a(),
            last.gap_a(),
            elapsed
        ),
        artifact: sweep_artifact(&rows, "fs_hz"),
    }
}

fn criterion_7() -> Verdict {
    let rows = sweep_clients(&client_grid(10, 100, 10), C7_CAPACITY, &resnet18_profile(), SWEEP_SEED, SWEEP_TRIALS).unwrap();
    let nondecreasing = |f: fn(&SweepRow<usize>) -> f64| rows.windows(2).all(|w| f(&w[1]) >= f(&w[0]));
    let lscra_up = nondecreasing(|r| r.lscra_s);
    let a_up = nondecreasing(|r| r.bench_a_s);
    let b_up = nondecreasing(|r| r.bench_b_s);
    let (first, last) = (rows.first().unwrap(), rows.last().unwrap());
    let rise = (
        last.lscra_s - first.lscra_s,
        last.bench_a_s - first.bench_a_s,
        last.bench_b_s - first.bench_b_s,
    );
    Verdict {
        id: 7,
        pass: lscra_up && a_up && b_up && rise.1 > rise.0 && rise.2 > rise.0,
        detail: format!(
            "client sweep: non-decreasing lscra {lscra_up} / bench a {a_up} / bench b {b_up}; increase 10->100: lscra {:.3} s, bench a {:.3} s, bench b {:.3} s",
            rise.0, rise.1, rise.2
        ),
        artifact: sweep_artifact(&rows, "n"),
    }
}

// 8. Cut enumeration and telescoping for L = 2..=20.
fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let mut pairs = 0;
    for layers in 2..=20usize {
        let cuts = enumerate_cuts(layers);
        if cuts.len() != (layers - 1) * layers / 2 {
            failures.push(format!("L={layers}: {} pairs", cuts.len()));
        }
        // integer-valued workloads are exact in f64, so the identity is exact
        let fp: Vec<f64> = (0..layers).map(|_| rng.gen_range(1..1_000_000_000u64) as f64).collect();
        let bp: Vec<f64> = (0..layers).map(|_| rng.gen_range(1..1_000_000_000u64) as f64).collect();
        let act: Vec<f64> = (0..layers).map(|_| rng.gen_range(1..1_000_000u64) as f64).collect();
        let p = LayerProfile::build(&fp, &bp, &act).unwrap();
        for c in cuts {
            let w = split_workloads(&p, c).unwrap();
            pairs += 1;
            if w.head_fp + w.body_fp + w.tail_fp != p.total_fp() || w.head_bp + w.body_bp + w.tail_bp != p.total_bp() {
                failures.push(format!("L={layers} cut {c}"));
            }
        }
    }
    Verdict {
        id: 8,
        pass: failures.is_empty(),
        detail: format!("enumeration + telescoping over {pairs} cut pairs for L = 2..=20, failures: {failures:?}"),
        artifact: String::new(),
    }
}

#[test]
fn criterion_1_oracle_equivalence() {
    criterion_1().assert();
}

#[test]
fn criterion_2_equalization_and_budget() {
    criterion_2().assert();
}

#[test]
fn criterion_3_residual_monotonicity() {
    criterion_3().assert();
}

#[test]
fn criterion_4_dominance() {
    criterion_4().assert();
}

#[test]
fn criterion_5_simulator_agreement() {
    criterion_5().assert();
}

#[test]
fn criterion_6_capacity_trend() {
    criterion_6().assert();
}

#[test]
fn criterion_7_client_trend() {
    criterion_7().assert();
}

#[test]
fn criterion_8_enumeration_and_telescoping() {
    criterion_8().assert();
}

#[test]
fn criterion_9_determinism() {
    let runs: [fn() -> Verdict; 7] = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7];
    let artifacts = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| runs.iter().map(|f| f().artifact).collect())
    };
    let first = artifacts(1);
    let second = artifacts(4);
    let differing: Vec<usize> = (0..runs.len()).filter(|&i| first[i] != second[i]).map(|i| i + 1).collect();
    let bytes: usize = first.iter().map(String::len).sum();
    Verdict {
        id: 9,
        pass: differing.is_empty() && first.iter().all(|a| !a.is_empty()),
        detail: format!("determinism: criteria 1-7 rerun with 1 and 4 threads, {bytes} artifact bytes, differing criteria {differing:?}"),
        artifact: String::new(),
    }
    .assert();
}
