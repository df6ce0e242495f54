//! Cut-layer placement and server compute allocation for U-shaped parallel
//! split learning.
//!
//! Every client keeps the head and the tail of the model and offloads the
//! body to a shared edge server. For a [`Scenario`] the planner picks the two
//! cut layers and splits the server's compute budget across clients so that
//! the slowest client's per-round latency is as small as possible.
//!
//! ```
//! use splitplan::{profile, scenario, planner};
//!
//! let p = profile::resnet18_profile();
//! let s = scenario::sample_scenario(5, 50e9, &p, 42).unwrap();
//! let plan = planner::solve_lscra(&s).unwrap();
//! assert!(plan.search_table.iter().all(|e| plan.round_latency <= e.round_latency));
//! ```

pub mod allocator;
pub mod cli;
pub mod error;
pub mod latency;
pub mod planner;
pub mod profile;
pub mod scenario;
pub mod simulator;
pub mod sweep;

pub use allocator::{allocate_even, allocate_optimal, Allocation};
pub use error::{Error, Result};
pub use latency::CutPair;
pub use planner::{solve_lscra, PlanResult};
pub use profile::LayerProfile;
pub use scenario::{ClientConfig, Scenario, ServerConfig};
