//! Combined shared/dedicated (CSD) resource allocation for D2D pairs in a
//! single uplink cell.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: random drops and deterministic path-loss gains
//! - [`radio`]: noise floor, shared-region power restriction, SINR and
//!   per-RB transmission efficiency
//! - [`igraph`]: CUE/DUE neighbor relations, reuse subgraphs and maximal
//!   cliques
//! - [`allocator`]: the CSD allocation and the Max S/D baseline
//! - [`simkit`]: Monte-Carlo campaigns and the τ_N grid search
//! - [`config`], [`fixture`], [`cli`]: file formats and the command line

pub mod allocator;
pub mod cli;
pub mod config;
pub mod fixture;
pub mod igraph;
pub mod matrix;
pub mod radio;
pub mod scenario;
pub mod simkit;

pub use allocator::{run_csd, run_max_sd, AllocationPlan, CapacityReport};
pub use matrix::Matrix;
pub use scenario::{generate_drop, Scenario, SimConfig};
pub use simkit::{run_campaign, CampaignResult, CampaignSpec, Scheme};
