//! Server and client configurations, randomized scenario sampling and the
//! scenario file format.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::LayerProfile;

pub const GHZ: f64 = 1e9;
pub const MBPS: f64 = 1e6;

/// Sampling ranges and constants for randomized scenarios.
pub mod defaults {
    use super::{GHZ, MBPS};

    pub const CLIENT_HZ: (f64, f64) = (0.5 * GHZ, 1.5 * GHZ);
    pub const UPLINK_BPS: (f64, f64) = (5.0 * MBPS, 30.0 * MBPS);
    /// Downlink rate as a multiple of the same client's uplink rate.
    pub const DOWNLINK_FACTOR: (f64, f64) = (2.0, 10.0);
    pub const BATCH_SIZE: f64 = 64.0;
    pub const SERVER_INTENSITY: f64 = 1.0 / 32.0;
    pub const CLIENT_INTENSITY: f64 = 1.0 / 16.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    /// Cycles per second.
    pub compute_hz: f64,
    /// Samples per mini-batch.
    pub batch_size: f64,
    pub uplink_bps: f64,
    pub downlink_bps: f64,
    /// Cycles per FLOP.
    #[serde(rename = "k_c")]
    pub compute_intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerConfig {
    pub capacity_hz: f64,
    #[serde(rename = "k_s")]
    pub compute_intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub server: ServerConfig,
    pub clients: Vec<ClientConfig>,
    pub profile: LayerProfile,
}

/// Where a scenario file gets its profile from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ProfileSource {
    Inline { profile: LayerProfile },
    Path { profile_path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    server: ServerConfig,
    clients: Vec<ClientConfig>,
    #[serde(flatten)]
    profile: ProfileSource,
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ClientConfig {
    pub fn validate(&self, index: usize) -> Result<()> {
        for (name, v) in [
            ("compute_hz", self.compute_hz),
            ("batch_size", self.batch_size),
            ("uplink_bps", self.uplink_bps),
            ("downlink_bps", self.downlink_bps),
            ("k_c", self.compute_intensity),
        ] {
            if !positive(v) {
                return Err(Error::InvariantViolation(format!(
                    "clients[{index}].{name} must be positive (got {v})"
                )));
            }
        }
        Ok(())
    }
}

impl ServerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("capacity_hz", self.capacity_hz), ("k_s", self.compute_intensity)] {
            if !positive(v) {
                return Err(Error::InvariantViolation(format!(
                    "server.{name} must be positive (got {v})"
                )));
            }
        }
        Ok(())
    }
}

impl Scenario {
    pub fn new(server: ServerConfig, clients: Vec<ClientConfig>, profile: LayerProfile) -> Result<Self> {
        let s = Scenario {
            server,
            clients,
            profile,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clients.is_empty() {
            return Err(Error::InvariantViolation("scenario needs at least one client".into()));
        }
        self.server.validate()?;
        for (i, c) in self.clients.iter().enumerate() {
            c.validate(i)?;
        }
        Ok(())
    }

    pub fn n_clients(&self) -> usize {
        self.clients.len()
    }

    /// Same clients and profile under a different server budget.
    pub fn with_capacity(&self, capacity_hz: f64) -> Scenario {
        let mut s = self.clone();
        s.server.capacity_hz = capacity_hz;
        s
    }

    /// The first `n` clients of this scenario.
    pub fn prefix(&self, n: usize) -> Scenario {
        let mut s = self.clone();
        s.clients.truncate(n);
        s
    }

    /// Loads a scenario; a relative `profile_path` resolves against the
    /// scenario file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let profile = match file.profile {
            ProfileSource::Inline { profile } => profile,
            ProfileSource::Path { profile_path } => {
                let resolved = match path.parent() {
                    Some(dir) if profile_path.is_relative() => dir.join(&profile_path),
                    _ => profile_path,
                };
                LayerProfile::load(resolved)?
            }
        };
        Scenario::new(file.server, file.clients, profile)
    }

    /// Writes the scenario with its profile inline.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            server: self.server,
            clients: self.clients.clone(),
            profile: ProfileSource::Inline {
                profile: self.profile.clone(),
            },
        };
        serde_json::to_string_pretty(&file).expect("scenario serialization is infallible")
    }
}

/// Draws one client from the default parameter ranges.
pub fn sample_client<R: Rng + ?Sized>(rng: &mut R) -> ClientConfig {
    let compute_hz = rng.gen_range(defaults::CLIENT_HZ.0..=defaults::CLIENT_HZ.1);
    let uplink_bps = rng.gen_range(defaults::UPLINK_BPS.0..=defaults::UPLINK_BPS.1);
    let factor = rng.gen_range(defaults::DOWNLINK_FACTOR.0..=defaults::DOWNLINK_FACTOR.1);
    ClientConfig {
        compute_hz,
        batch_size: defaults::BATCH_SIZE,
        uplink_bps,
        downlink_bps: factor * uplink_bps,
        compute_intensity: defaults::CLIENT_INTENSITY,
    }
}

/// Samples a seeded scenario. Clients are drawn sequentially from one
/// ChaCha8 stream, so the scenario for `n` clients is a prefix of the one
/// for any larger `n` under the same seed.
pub fn sample_scenario(n_clients: usize, server_capacity_hz: f64, profile: &LayerProfile, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clients = (0..n_clients).map(|_| sample_client(&mut rng)).collect();
    Scenario::new(
        ServerConfig {
            capacity_hz: server_capacity_hz,
            compute_intensity: defaults::SERVER_INTENSITY,
        },
        clients,
        profile.clone(),
    )
}
