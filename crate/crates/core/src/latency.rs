//! Analytic per-round latency of U-shaped parallel split learning.
//!
//! Each client runs five sequential steps per round:
//!
//! 1. head forward on the client, upload of the first-cut activations;
//! 2. body forward on the server, download of the second-cut activations;
//! 3. tail forward and backward on the client, upload of the second-cut gradients;
//! 4. body backward on the server, download of the first-cut gradients;
//! 5. head backward on the client.
//!
//! Every term scales with the client's batch size. Server compute runs at
//! the client's allocated share of the server, everything else at the
//! client's own frequency or link rate. Steps do not overlap, so a client's
//! round latency is the plain sum of its five step latencies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::LayerProfile;
use crate::scenario::{ClientConfig, Scenario};

/// The two split indices. Layers `1..=first_cut` form the head,
/// `first_cut+1..=second_cut` the body, and the rest the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CutPair {
    pub first_cut: usize,
    pub second_cut: usize,
}

impl CutPair {
    pub fn new(first_cut: usize, second_cut: usize) -> Self {
        CutPair {
            first_cut,
            second_cut,
        }
    }

    /// Checks `1 <= first_cut <= second_cut <= layers - 1`.
    pub fn validate(&self, layers: usize) -> Result<()> {
        if self.first_cut >= 1 && self.first_cut <= self.second_cut && self.second_cut < layers {
            Ok(())
        } else {
            Err(Error::CutOutOfRange {
                first: self.first_cut,
                second: self.second_cut,
                layers,
            })
        }
    }

    pub fn has_body(&self) -> bool {
        self.second_cut > self.first_cut
    }
}

impl std::fmt::Display for CutPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.first_cut, self.second_cut)
    }
}

/// Per-sample workloads (FLOPs) and cut activation sizes (bits) for one cut pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitWorkloads {
    pub head_fp: f64,
    pub head_bp: f64,
    pub body_fp: f64,
    pub body_bp: f64,
    pub tail_fp: f64,
    pub tail_bp: f64,
    pub act1_bits: f64,
    pub act2_bits: f64,
}

/// Step latencies of one client, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLatencies {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
}

impl StepLatencies {
    pub fn as_array(&self) -> [f64; 5] {
        [self.t1, self.t2, self.t3, self.t4, self.t5]
    }
}

/// Splits a client's round latency into `local_latency + epsilon / share`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClientDecomposition {
    /// Server cycles needed by the client's body forward and backward pass.
    pub epsilon: f64,
    /// Everything that does not depend on the server share, in seconds.
    pub local_latency: f64,
}

impl ClientDecomposition {
    /// Round latency at a given server share. A zero share is only finite
    /// when the client has no server work.
    pub fn latency_at(&self, share: f64) -> f64 {
        if self.epsilon == 0.0 {
            self.local_latency
        } else {
            self.local_latency + self.epsilon / share
        }
    }
}

pub fn split_workloads(profile: &LayerProfile, cuts: CutPair) -> Result<SplitWorkloads> {
    cuts.validate(profile.layer_count())?;
    let (a, b) = (cuts.first_cut, cuts.second_cut);
    Ok(SplitWorkloads {
        head_fp: profile.rho(a),
        head_bp: profile.omega(a),
        body_fp: profile.rho(b) - profile.rho(a),
        body_bp: profile.omega(b) - profile.omega(a),
        tail_fp: profile.total_fp() - profile.rho(b),
        tail_bp: profile.total_bp() - profile.omega(b),
        act1_bits: profile.psi(a),
        act2_bits: profile.psi(b),
    })
}

/// Seconds spent on `work` FLOPs at `intensity` cycles/FLOP and `rate` cycles/s.
/// Zero work takes zero time at any rate.
fn compute_time(batch: f64, work: f64, intensity: f64, rate: f64) -> f64 {
    if work == 0.0 {
        0.0
    } else {
        batch * work * intensity / rate
    }
}

pub fn client_step_latencies(w: &SplitWorkloads, c: &ClientConfig, k_s: f64, f_share: f64) -> Result<StepLatencies> {
    let has_server_work = w.body_fp > 0.0 || w.body_bp > 0.0;
    if has_server_work && (f_share.is_nan() || f_share <= 0.0) {
        return Err(Error::ZeroShareWithNonzeroBody { client: 0 });
    }
    let beta = c.batch_size;
    let k_c = c.compute_intensity;
    let f_n = c.compute_hz;
    Ok(StepLatencies {
        t1: compute_time(beta, w.head_fp, k_c, f_n) + beta * w.act1_bits / c.uplink_bps,
        t2: compute_time(beta, w.body_fp, k_s, f_share) + beta * w.act2_bits / c.downlink_bps,
        t3: compute_time(beta, w.tail_fp + w.tail_bp, k_c, f_n) + beta * w.act2_bits / c.uplink_bps,
        t4: compute_time(beta, w.body_bp, k_s, f_share) + beta * w.act1_bits / c.downlink_bps,
        // head backward runs on the client, at the client's frequency
        t5: compute_time(beta, w.head_bp, k_c, f_n),
    })
}

pub fn client_round_latency(steps: &StepLatencies) -> f64 {
    steps.t1 + steps.t2 + steps.t3 + steps.t4 + steps.t5
}

pub fn decompose(w: &SplitWorkloads, c: &ClientConfig, k_s: f64) -> ClientDecomposition {
    let beta = c.batch_size;
    let client_compute = beta * c.compute_intensity * (w.head_fp + w.tail_fp + w.tail_bp + w.head_bp) / c.compute_hz;
    let comm = beta * (w.act1_bits + w.act2_bits) / c.uplink_bps + beta * (w.act2_bits + w.act1_bits) / c.downlink_bps;
    ClientDecomposition {
        epsilon: beta * k_s * (w.body_fp + w.body_bp),
        local_latency: client_compute + comm,
    }
}

/// Decomposition of every client of a scenario for one cut pair.
pub fn decompose_all(scenario: &Scenario, cuts: CutPair) -> Result<Vec<ClientDecomposition>> {
    let w = split_workloads(&scenario.profile, cuts)?;
    let k_s = scenario.server.compute_intensity;
    Ok(scenario.clients.iter().map(|c| decompose(&w, c, k_s)).collect())
}

/// Step latencies of every client at the given shares.
pub fn all_step_latencies(scenario: &Scenario, cuts: CutPair, shares: &[f64]) -> Result<Vec<StepLatencies>> {
    if shares.len() != scenario.n_clients() {
        return Err(Error::AllocationLength {
            expected: scenario.n_clients(),
            got: shares.len(),
        });
    }
    let w = split_workloads(&scenario.profile, cuts)?;
    let k_s = scenario.server.compute_intensity;
    scenario
        .clients
        .iter()
        .zip(shares)
        .enumerate()
        .map(|(n, (c, &share))| {
            client_step_latencies(&w, c, k_s, share).map_err(|e| match e {
                Error::ZeroShareWithNonzeroBody { .. } => Error::ZeroShareWithNonzeroBody { client: n },
                other => other,
            })
        })
        .collect()
}

/// Per-client round latencies at the given shares.
pub fn client_latencies(scenario: &Scenario, cuts: CutPair, shares: &[f64]) -> Result<Vec<f64>> {
    Ok(all_step_latencies(scenario, cuts, shares)?
        .iter()
        .map(client_round_latency)
        .collect())
}

/// Round makespan: the slowest client's round latency.
pub fn round_latency(scenario: &Scenario, cuts: CutPair, shares: &[f64]) -> Result<f64> {
    Ok(client_latencies(scenario, cuts, shares)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}
