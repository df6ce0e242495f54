//! Discrete-event simulation of one training round.
//!
//! Each client walks through nine phases (compute and transfer legs of the
//! five steps). Server-side body computation runs on a share-partitioned
//! server: every client's body job proceeds at that client's allocated rate
//! regardless of what other clients are doing, so jobs of different clients
//! overlap in time but never exceed the server capacity in aggregate.
//!
//! Event order is fully determined by `(time, client, phase)`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::allocator::Allocation;
use crate::error::{Error, Result};
use crate::latency::{split_workloads, CutPair, SplitWorkloads};
use crate::planner::PlanResult;
use crate::scenario::{ClientConfig, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Compute,
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Site {
    Client,
    Server,
    Link,
}

/// One leg of a step. Nine legs make a round.
#[derive(Debug, Clone, Copy)]
struct Leg {
    step: u8,
    phase: Phase,
    site: Site,
}

const LEGS: [Leg; 9] = [
    Leg { step: 1, phase: Phase::Compute, site: Site::Client },
    Leg { step: 1, phase: Phase::Uplink, site: Site::Link },
    Leg { step: 2, phase: Phase::Compute, site: Site::Server },
    Leg { step: 2, phase: Phase::Downlink, site: Site::Link },
    Leg { step: 3, phase: Phase::Compute, site: Site::Client },
    Leg { step: 3, phase: Phase::Uplink, site: Site::Link },
    Leg { step: 4, phase: Phase::Compute, site: Site::Server },
    Leg { step: 4, phase: Phase::Downlink, site: Site::Link },
    Leg { step: 5, phase: Phase::Compute, site: Site::Client },
];

/// Index of the body-backward leg; the server averages body gradients once
/// every client has passed it.
const BODY_BACKWARD: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub client: usize,
    pub step: u8,
    pub phase: Phase,
    pub start_s: f64,
    pub end_s: f64,
}

impl TraceEvent {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn on_server(&self) -> bool {
        self.phase == Phase::Compute && matches!(self.step, 2 | 4)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventTrace {
    /// Per client, events in execution order.
    pub clients: Vec<Vec<TraceEvent>>,
    /// Zero-duration body update after the last body backward pass.
    pub server_update_s: f64,
    pub round_makespan: f64,
    /// Largest aggregate server rate in use at any instant.
    pub peak_server_share: f64,
}

impl EventTrace {
    /// Sum of a client's event durations.
    pub fn busy_time(&self, client: usize) -> f64 {
        self.clients[client].iter().map(TraceEvent::duration).sum()
    }

    pub fn events(&self) -> impl Iterator<Item = &TraceEvent> {
        self.clients.iter().flatten()
    }

    /// Recomputes the peak aggregate server rate from the trace by sweeping
    /// over interval endpoints.
    pub fn sweep_server_share(&self, shares: &[f64]) -> f64 {
        let mut edges: Vec<(f64, f64)> = self
            .events()
            .filter(|e| e.on_server() && e.end_s > e.start_s)
            .flat_map(|e| [(e.start_s, shares[e.client]), (e.end_s, -shares[e.client])])
            .collect();
        // releases before acquisitions at equal times
        edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut active = 0.0_f64;
        let mut peak = 0.0_f64;
        for (_, delta) in edges {
            active += delta;
            peak = peak.max(active);
        }
        peak
    }

    fn shifted(mut self, offset: f64) -> Self {
        for e in self.clients.iter_mut().flatten() {
            e.start_s += offset;
            e.end_s += offset;
        }
        self.server_update_s += offset;
        self
    }
}

/// Pending completion of a leg.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    client: usize,
    leg: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.client.cmp(&other.client))
            .then(self.leg.cmp(&other.leg))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Server whose capacity is statically partitioned into per-client rates.
struct PartitionedServer {
    capacity: f64,
    shares: Vec<f64>,
    running: Vec<bool>,
    in_use: f64,
    peak: f64,
}

impl PartitionedServer {
    fn new(capacity: f64, shares: &[f64]) -> Self {
        PartitionedServer {
            capacity,
            shares: shares.to_vec(),
            running: vec![false; shares.len()],
            in_use: 0.0,
            peak: 0.0,
        }
    }

    /// Starts a body job of `cycles` for `client`; returns its duration.
    fn admit(&mut self, client: usize, cycles: f64) -> Result<f64> {
        if cycles == 0.0 {
            return Ok(0.0);
        }
        let share = self.shares[client];
        if share.is_nan() || share <= 0.0 {
            return Err(Error::ZeroShareWithNonzeroBody { client });
        }
        self.running[client] = true;
        self.in_use += share;
        self.peak = self.peak.max(self.in_use);
        if self.in_use > self.capacity * (1.0 + 1e-9) {
            return Err(Error::InvariantViolation(format!(
                "server rate {} exceeds capacity {}",
                self.in_use, self.capacity
            )));
        }
        Ok(cycles / share)
    }

    fn release(&mut self, client: usize) {
        if std::mem::take(&mut self.running[client]) {
            self.in_use -= self.shares[client];
        }
    }
}

fn leg_duration(leg: usize, w: &SplitWorkloads, c: &ClientConfig, k_s: f64, server: &mut PartitionedServer, client: usize) -> Result<f64> {
    let beta = c.batch_size;
    let on_client = |flops: f64| beta * flops * c.compute_intensity / c.compute_hz;
    Ok(match leg {
        0 => on_client(w.head_fp),
        1 => beta * w.act1_bits / c.uplink_bps,
        2 => server.admit(client, beta * w.body_fp * k_s)?,
        3 => beta * w.act2_bits / c.downlink_bps,
        4 => on_client(w.tail_fp + w.tail_bp),
        5 => beta * w.act2_bits / c.uplink_bps,
        6 => server.admit(client, beta * w.body_bp * k_s)?,
        7 => beta * w.act1_bits / c.downlink_bps,
        8 => on_client(w.head_bp),
        _ => unreachable!("a round has nine legs"),
    })
}

/// Simulates one round starting at time zero.
pub fn simulate_round(scenario: &Scenario, cuts: CutPair, allocation: &Allocation) -> Result<EventTrace> {
    let n = scenario.n_clients();
    if allocation.shares.len() != n {
        return Err(Error::AllocationLength {
            expected: n,
            got: allocation.shares.len(),
        });
    }
    let w = split_workloads(&scenario.profile, cuts)?;
    let k_s = scenario.server.compute_intensity;
    let mut server = PartitionedServer::new(scenario.server.capacity_hz, &allocation.shares);

    let mut queue = BinaryHeap::new();
    let mut started = vec![0.0; n];
    let mut clients: Vec<Vec<TraceEvent>> = vec![Vec::with_capacity(LEGS.len()); n];
    for (i, c) in scenario.clients.iter().enumerate() {
        let d = leg_duration(0, &w, c, k_s, &mut server, i)?;
        queue.push(Reverse(Pending { time: d, client: i, leg: 0 }));
    }

    let mut body_backward_done = 0;
    let mut server_update_s = 0.0;
    while let Some(Reverse(done)) = queue.pop() {
        let leg = LEGS[done.leg];
        let i = done.client;
        clients[i].push(TraceEvent {
            client: i,
            step: leg.step,
            phase: leg.phase,
            start_s: started[i],
            end_s: done.time,
        });
        if leg.site == Site::Server {
            server.release(i);
        }
        if done.leg == BODY_BACKWARD {
            body_backward_done += 1;
            if body_backward_done == n {
                server_update_s = done.time;
            }
        }
        let next = done.leg + 1;
        if next < LEGS.len() {
            started[i] = done.time;
            let d = leg_duration(next, &w, &scenario.clients[i], k_s, &mut server, i)?;
            queue.push(Reverse(Pending {
                time: done.time + d,
                client: i,
                leg: next,
            }));
        }
    }

    let round_makespan = clients
        .iter()
        .filter_map(|events| events.last().map(|e| e.end_s))
        .fold(0.0, f64::max);
    Ok(EventTrace {
        clients,
        server_update_s,
        round_makespan,
        peak_server_share: server.peak,
    })
}

/// Simulates `rounds` back-to-back rounds of a plan; returns each round's
/// makespan and the traces with absolute timestamps.
pub fn simulate_training(scenario: &Scenario, plan: &PlanResult, rounds: usize) -> Result<(Vec<f64>, Vec<EventTrace>)> {
    if rounds == 0 {
        return Err(Error::InvariantViolation("rounds >= 1".into()));
    }
    let mut makespans = Vec::with_capacity(rounds);
    let mut traces = Vec::with_capacity(rounds);
    let mut clock = 0.0;
    for _ in 0..rounds {
        let trace = simulate_round(scenario, plan.best_cuts, &plan.allocation)?;
        makespans.push(trace.round_makespan);
        let span = trace.round_makespan;
        traces.push(trace.shifted(clock));
        clock += span;
    }
    Ok((makespans, traces))
}

/// Writes `client,step,phase,start_s,end_s` rows for every event.
pub fn write_trace_csv<'a, W: Write>(traces: impl IntoIterator<Item = &'a EventTrace>, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["client", "step", "phase", "start_s", "end_s"])?;
    for trace in traces {
        for e in trace.events() {
            writer.serialize((e.client, e.step, e.phase, e.start_s, e.end_s))?;
        }
    }
    writer.flush().map_err(|e| Error::io("trace csv", e))?;
    Ok(())
}
