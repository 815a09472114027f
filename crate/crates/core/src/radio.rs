//! Link-budget math: noise floor, the shared-region power restriction, the
//! three SINR expressions and the per-RB transmission efficiency Γ.

use thiserror::Error;

use crate::allocator::{AllocationPlan, Transmission};
use crate::scenario::{Scenario, SimConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RadioError {
    #[error("{region} RB {rb} does not exist in the plan")]
    NoSuchRb { region: &'static str, rb: usize },
    #[error("shared RB {rb} is owned by CUE {owner}, not CUE {cue}")]
    NotOwner { cue: usize, rb: usize, owner: usize },
    #[error("pair {pair} does not transmit on {region} RB {rb}")]
    NotTransmitting {
        pair: usize,
        rb: usize,
        region: &'static str,
    },
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) / 1000.0
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1000.0)
}

/// Thermal noise over one RB, in watts.
pub fn noise_per_rb(noise_psd_dbm_hz: f64, rb_bandwidth_hz: f64) -> f64 {
    assert!(rb_bandwidth_hz > 0.0, "RB bandwidth must be positive");
    dbm_to_watts(noise_psd_dbm_hz + linear_to_db(rb_bandwidth_hz))
}

/// Shared-region transmit power of a DUE-T: the level at which its signal
/// reaches the eNB `tau_due` times below `ni_enb`, capped at `p_max`.
pub fn restricted_shared_power(gain_to_enb: f64, ni_enb: f64, tau_due: f64, p_max: f64) -> f64 {
    debug_assert!(gain_to_enb > 0.0 && tau_due > 0.0);
    p_max.min(ni_enb / (tau_due * gain_to_enb))
}

/// Noise plus interference floors. Single cell: no adjacent-cell term, so
/// every receiver sees the same thermal noise.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub ni_per_rb: f64,
    pub ni_enb: f64,
    pub ni_rx: Vec<f64>,
}

impl NoiseModel {
    pub fn single_cell(config: &SimConfig, num_pairs: usize) -> Self {
        let ni = noise_per_rb(config.noise_psd_dbm_hz, config.rb_bandwidth_hz);
        Self {
            ni_per_rb: ni,
            ni_enb: ni,
            ni_rx: vec![ni; num_pairs],
        }
    }
}

/// Per-RB transmit powers in watts.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile {
    pub p_cue: f64,
    pub p_due_dedicated: f64,
    pub p_due_shared: Vec<f64>,
    pub p_max: f64,
}

impl PowerProfile {
    pub fn new(config: &SimConfig, scenario: &Scenario, noise: &NoiseModel) -> Self {
        let p_max = dbm_to_watts(config.p_max_dbm);
        let p_due_shared = scenario
            .gains
            .due_enb
            .iter()
            .map(|&g| restricted_shared_power(g, noise.ni_enb, config.tau_due, p_max))
            .collect();
        Self {
            p_cue: dbm_to_watts(config.pt_cue_dbm),
            p_due_dedicated: dbm_to_watts(config.pt_due_dedicated_dbm),
            p_due_shared,
            p_max,
        }
    }
}

/// Bits carried by one RB at a given SINR: zero below `gamma_min`, capped
/// Shannon above it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Efficiency {
    pub gamma_min: f64,
    pub rb_symbols: f64,
    pub max_bits_per_symbol: f64,
}

impl Efficiency {
    pub const RB_SYMBOLS: f64 = 168.0;
    pub const MAX_BITS_PER_SYMBOL: f64 = 6.0;

    pub fn new(gamma_min_db: f64) -> Self {
        Self {
            gamma_min: db_to_linear(gamma_min_db),
            rb_symbols: Self::RB_SYMBOLS,
            max_bits_per_symbol: Self::MAX_BITS_PER_SYMBOL,
        }
    }

    pub fn bits(&self, sinr: f64) -> f64 {
        if sinr < self.gamma_min {
            0.0
        } else {
            self.rb_symbols * (1.0 + sinr).log2().min(self.max_bits_per_symbol)
        }
    }
}

/// Everything the SINR formulas need for one drop.
#[derive(Clone, Copy)]
pub struct LinkBudget<'a> {
    pub scenario: &'a Scenario,
    pub powers: &'a PowerProfile,
    pub noise: &'a NoiseModel,
}

impl LinkBudget<'_> {
    /// SINR of pair `j` on an RB of CUE `cue`, with the listed pairs also
    /// transmitting at their restricted shared powers.
    pub fn shared_sinr(&self, cue: usize, j: usize, co_reusers: &[usize]) -> f64 {
        let g = &self.scenario.gains;
        let p = &self.powers.p_due_shared;
        let interference: f64 = co_reusers
            .iter()
            .filter(|&&i| i != j)
            .map(|&i| g.txi_rxj[(i, j)] * p[i])
            .sum();
        g.txj_rxj[j] * p[j] / (self.noise.ni_rx[j] + interference + g.cue_rxj[(cue, j)] * self.powers.p_cue)
    }

    /// SINR of pair `j` on a dedicated RB with the listed pairs co-channel.
    pub fn dedicated_sinr(&self, j: usize, co_channel: &[usize]) -> f64 {
        let g = &self.scenario.gains;
        let p = self.powers.p_due_dedicated;
        let interference: f64 = co_channel
            .iter()
            .filter(|&&i| i != j)
            .map(|&i| g.txi_rxj[(i, j)] * p)
            .sum();
        g.txj_rxj[j] * p / (self.noise.ni_rx[j] + interference)
    }
}

fn find(transmitters: &[Transmission], pair: usize) -> Option<&Transmission> {
    transmitters.iter().find(|t| t.pair == pair)
}

/// CUE SINR at the eNB on a shared RB.
pub fn sinr_enb(
    cue: usize,
    rb: usize,
    plan: &AllocationPlan,
    scenario: &Scenario,
    powers: &PowerProfile,
    noise: &NoiseModel,
) -> Result<f64, RadioError> {
    let slot = plan
        .shared
        .get(rb)
        .ok_or(RadioError::NoSuchRb { region: "shared", rb })?;
    if slot.owner != cue {
        return Err(RadioError::NotOwner {
            cue,
            rb,
            owner: slot.owner,
        });
    }
    let g = &scenario.gains;
    let interference: f64 = slot
        .transmitters
        .iter()
        .map(|t| g.due_enb[t.pair] * t.power_w)
        .sum();
    Ok(g.cue_enb[cue] * powers.p_cue / (noise.ni_enb + interference))
}

/// SINR at DUE-R `j` on a shared RB, from the plan's actual transmitters.
pub fn sinr_shared(
    j: usize,
    rb: usize,
    plan: &AllocationPlan,
    scenario: &Scenario,
    powers: &PowerProfile,
    noise: &NoiseModel,
) -> Result<f64, RadioError> {
    let slot = plan
        .shared
        .get(rb)
        .ok_or(RadioError::NoSuchRb { region: "shared", rb })?;
    let me = find(&slot.transmitters, j).ok_or(RadioError::NotTransmitting {
        pair: j,
        rb,
        region: "shared",
    })?;
    let g = &scenario.gains;
    let interference: f64 = slot
        .transmitters
        .iter()
        .filter(|t| t.pair != j)
        .map(|t| g.txi_rxj[(t.pair, j)] * t.power_w)
        .sum();
    let cue_term = g.cue_rxj[(slot.owner, j)] * powers.p_cue;
    Ok(g.txj_rxj[j] * me.power_w / (noise.ni_rx[j] + interference + cue_term))
}

/// SINR at DUE-R `j` on a dedicated RB, from the plan's actual transmitters.
pub fn sinr_dedicated(
    j: usize,
    rb: usize,
    plan: &AllocationPlan,
    scenario: &Scenario,
    noise: &NoiseModel,
) -> Result<f64, RadioError> {
    let slot = plan
        .dedicated
        .get(rb)
        .ok_or(RadioError::NoSuchRb { region: "dedicated", rb })?;
    let me = find(&slot.transmitters, j).ok_or(RadioError::NotTransmitting {
        pair: j,
        rb,
        region: "dedicated",
    })?;
    let g = &scenario.gains;
    let interference: f64 = slot
        .transmitters
        .iter()
        .filter(|t| t.pair != j)
        .map(|t| g.txi_rxj[(t.pair, j)] * t.power_w)
        .sum();
    Ok(g.txj_rxj[j] * me.power_w / (noise.ni_rx[j] + interference))
}
