//! Hand-built gain-level scenarios for the four-pair allocation example.
//!
//! `fig1` encodes the neighbor graph of the decomposition example and
//! `fig2` the one used by the allocation walkthrough (they differ only in
//! which pairs may reuse the RBs of CUE 1). Both files live in
//! `fixtures/` and document their gain choices inline.

use std::str::FromStr;

use serde::Deserialize;

use crate::matrix::Matrix;
use crate::radio::db_to_linear;
use crate::scenario::{Gains, Scenario, SimConfig};

const FIG1: &str = include_str!("../fixtures/fig1.json");
const FIG2: &str = include_str!("../fixtures/fig2.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureName {
    Fig1,
    Fig2,
}

impl FromStr for FixtureName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            other => Err(format!("unknown fixture `{other}` (expected fig1 or fig2)")),
        }
    }
}

#[derive(Deserialize)]
struct Params {
    n_s: usize,
    n_d: usize,
    pt_cue_dbm: f64,
    pt_due_dedicated_dbm: f64,
    tau_n_db: f64,
}

#[derive(Deserialize)]
struct GainsDb {
    cue_enb: Vec<f64>,
    due_enb: Vec<f64>,
    direct: Vec<f64>,
    cross: Vec<Vec<Option<f64>>>,
    cue_rx: Vec<Vec<f64>>,
}

/// Relations the gains are built to produce, 1-based labels.
#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct Expected {
    /// Per CUE: the pairs allowed to reuse its RBs.
    pub shared_members: Vec<Vec<usize>>,
    /// Mutual-neighbor pairs.
    pub due_edges: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct FixtureFile {
    name: String,
    summary: String,
    params: Params,
    gains_db: GainsDb,
    expected: Expected,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub summary: String,
    pub config: SimConfig,
    pub scenario: Scenario,
    pub expected: Expected,
}

pub fn load(name: FixtureName) -> Fixture {
    let text = match name {
        FixtureName::Fig1 => FIG1,
        FixtureName::Fig2 => FIG2,
    };
    let file: FixtureFile = serde_json::from_str(text).expect("embedded fixture is valid JSON");
    let g = &file.gains_db;
    let c = g.cue_enb.len();
    let d = g.direct.len();
    let lin = |v: &[f64]| v.iter().copied().map(db_to_linear).collect::<Vec<_>>();
    let gains = Gains {
        cue_enb: lin(&g.cue_enb),
        due_enb: lin(&g.due_enb),
        txj_rxj: lin(&g.direct),
        txi_rxj: Matrix::from_fn(d, d, |i, j| db_to_linear(g.cross[i][j].unwrap_or(g.direct[j]))),
        cue_rxj: Matrix::from_fn(c, d, |z, j| db_to_linear(g.cue_rx[z][j])),
    };
    let p = &file.params;
    let config = SimConfig {
        num_cues: c,
        num_pairs: d,
        rb_total: p.n_s + p.n_d,
        overhead_fraction: 0.0,
        n_s: p.n_s,
        n_d: p.n_d,
        pt_cue_dbm: p.pt_cue_dbm,
        pt_due_dedicated_dbm: p.pt_due_dedicated_dbm,
        tau_n_db: p.tau_n_db,
        drops: 1,
        ..SimConfig::reference()
    };
    Fixture {
        name: file.name,
        summary: file.summary,
        scenario: Scenario::from_gains(config.area_side_m, gains),
        config,
        expected: file.expected,
    }
}
