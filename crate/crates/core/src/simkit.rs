//! Monte-Carlo campaigns over (#pairs, Pt, τ_N) and the τ_N grid search.
//!
//! Every drop is a pure function of the base seed, the number of pairs and
//! the drop index, and larger pair counts extend smaller ones. All power
//! levels, thresholds and schemes are evaluated on the same drops.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::Engine;
use crate::scenario::{generate_drop, ConfigError, SimConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Csd,
    MaxSd,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Csd => "csd",
            Scheme::MaxSd => "max_sd",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub base: SimConfig,
    pub pair_counts: Vec<usize>,
    pub pt_dbm_values: Vec<f64>,
    pub tau_n_values_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub drops: usize,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

impl CampaignSpec {
    /// The reference grid: 5..=75 pairs in steps of 5, Pt in {10, 15, 20}
    /// dBm, τ_N from -30 to 0 dB in 2 dB steps, both schemes.
    pub fn reference(drops: usize) -> Self {
        Self {
            base: SimConfig {
                drops,
                ..SimConfig::reference()
            },
            pair_counts: (1..=15).map(|k| 5 * k).collect(),
            pt_dbm_values: vec![10.0, 15.0, 20.0],
            tau_n_values_db: (0..=15).map(|k| -30.0 + 2.0 * k as f64).collect(),
            schemes: vec![Scheme::Csd, Scheme::MaxSd],
            drops,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base.validate()?;
        let non_empty = |field: &'static str, empty: bool| {
            if empty {
                Err(ConfigError {
                    field,
                    message: "must not be empty".into(),
                })
            } else {
                Ok(())
            }
        };
        non_empty("pair_counts", self.pair_counts.is_empty())?;
        non_empty("pt_dbm_values", self.pt_dbm_values.is_empty())?;
        non_empty("tau_n_values_db", self.tau_n_values_db.is_empty())?;
        non_empty("schemes", self.schemes.is_empty())?;
        if self.drops == 0 {
            return Err(ConfigError {
                field: "drops",
                message: "must be >= 1".into(),
            });
        }
        for (field, values) in [("pt_dbm_values", &self.pt_dbm_values), ("tau_n_values_db", &self.tau_n_values_db)] {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError {
                    field,
                    message: "all values must be finite".into(),
                });
            }
        }
        Ok(())
    }

    /// Listed τ_N values plus the base τ_N, ascending and deduplicated.
    pub fn tau_grid(&self) -> Vec<f64> {
        let mut v = self.tau_n_values_db.clone();
        v.push(self.base.tau_n_db);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn schemes_sorted(&self) -> Vec<Scheme> {
        let mut s = self.schemes.clone();
        s.sort();
        s.dedup();
        s
    }

    fn pairs_sorted(&self) -> Vec<usize> {
        let mut p = self.pair_counts.clone();
        p.sort_unstable();
        p.dedup();
        p
    }

    fn pts_sorted(&self) -> Vec<f64> {
        let mut p = self.pt_dbm_values.clone();
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }

    /// Configuration of one grid cell. Pt drives both the CUE power and
    /// the DUE dedicated-region power.
    pub fn cell_config(&self, num_pairs: usize, pt_dbm: f64, tau_n_db: f64) -> SimConfig {
        SimConfig {
            num_pairs,
            pt_cue_dbm: pt_dbm,
            pt_due_dedicated_dbm: pt_dbm,
            tau_n_db,
            drops: self.drops,
            ..self.base.clone()
        }
    }
}

/// Capacity of one drop under one scheme, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropSample {
    pub c_sum: f64,
    pub c_shared: f64,
    pub c_dedicated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub scheme: Scheme,
    pub num_pairs: usize,
    pub pt_dbm: f64,
    pub tau_n_db: f64,
    pub drops: usize,
    pub mean_csum: f64,
    pub stderr: f64,
    pub mean_cshared: f64,
    pub mean_cdedicated: f64,
}

impl CellStats {
    fn from_samples(scheme: Scheme, num_pairs: usize, pt_dbm: f64, tau_n_db: f64, samples: &[DropSample]) -> Self {
        let n = samples.len() as f64;
        let mean = |f: fn(&DropSample) -> f64| samples.iter().map(f).sum::<f64>() / n;
        let mean_csum = mean(|s| s.c_sum);
        let stderr = if samples.len() > 1 {
            let var = samples.iter().map(|s| (s.c_sum - mean_csum).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            scheme,
            num_pairs,
            pt_dbm,
            tau_n_db,
            drops: samples.len(),
            mean_csum,
            stderr,
            mean_cshared: mean(|s| s.c_shared),
            mean_cdedicated: mean(|s| s.c_dedicated),
        }
    }
}

/// Aggregates ordered by scheme, #pairs, Pt, then τ_N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub cells: Vec<CellStats>,
}

impl CampaignResult {
    pub fn cell(&self, scheme: Scheme, num_pairs: usize, pt_dbm: f64, tau_n_db: f64) -> Option<&CellStats> {
        self.cells.iter().find(|c| {
            c.scheme == scheme && c.num_pairs == num_pairs && c.pt_dbm == pt_dbm && c.tau_n_db == tau_n_db
        })
    }
}

/// Samples of every (Pt, τ_N, scheme) combination for one drop, in that
/// nesting order.
fn evaluate_drop(spec: &CampaignSpec, num_pairs: usize, drop: u64, pts: &[f64], taus: &[f64], schemes: &[Scheme]) -> Vec<DropSample> {
    let geometry = spec.cell_config(num_pairs, pts[0], taus[0]);
    let scenario = generate_drop(&geometry, drop);
    let mut out = Vec::with_capacity(pts.len() * taus.len() * schemes.len());
    for &pt in pts {
        for &tau in taus {
            let cfg = spec.cell_config(num_pairs, pt, tau);
            let engine = Engine::new(&scenario, &cfg);
            for scheme in schemes {
                let alloc = match scheme {
                    Scheme::Csd => engine.csd(),
                    Scheme::MaxSd => engine.max_sd(),
                };
                out.push(DropSample {
                    c_sum: alloc.report.c_sum,
                    c_shared: alloc.report.c_shared,
                    c_dedicated: alloc.report.c_dedicated,
                });
            }
        }
    }
    out
}

pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult, SimError> {
    run_campaign_with_threads(spec, None)
}

/// Runs the campaign on a pool of `threads` workers (rayon's default when
/// `None`). The result does not depend on the thread count.
pub fn run_campaign_with_threads(spec: &CampaignSpec, threads: Option<usize>) -> Result<CampaignResult, SimError> {
    spec.validate()?;
    let pairs = spec.pairs_sorted();
    let pts = spec.pts_sorted();
    let taus = spec.tau_grid();
    let schemes = spec.schemes_sorted();

    let tasks: Vec<(usize, u64)> = pairs
        .iter()
        .flat_map(|&p| (0..spec.drops as u64).map(move |d| (p, d)))
        .collect();
    let run = || -> Vec<Vec<DropSample>> {
        tasks
            .par_iter()
            .map(|&(p, d)| evaluate_drop(spec, p, d, &pts, &taus, &schemes))
            .collect()
    };
    let per_task = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?
            .install(run),
        None => run(),
    };

    let combos = pts.len() * taus.len() * schemes.len();
    let mut cells = Vec::new();
    for (si, &scheme) in schemes.iter().enumerate() {
        for (pi, &num_pairs) in pairs.iter().enumerate() {
            let block = &per_task[pi * spec.drops..(pi + 1) * spec.drops];
            for (ti, &pt) in pts.iter().enumerate() {
                for (ui, &tau) in taus.iter().enumerate() {
                    let idx = (ti * taus.len() + ui) * schemes.len() + si;
                    debug_assert!(idx < combos);
                    let samples: Vec<DropSample> = block.iter().map(|s| s[idx]).collect();
                    cells.push(CellStats::from_samples(scheme, num_pairs, pt, tau, &samples));
                }
            }
        }
    }
    Ok(CampaignResult { cells })
}

/// Mean sum capacity against τ_N for one (scheme, #pairs, Pt).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauCurve {
    pub scheme: Scheme,
    pub num_pairs: usize,
    pub pt_dbm: f64,
    /// `(tau_n_db, mean_csum, stderr)`, ascending in τ_N.
    pub points: Vec<(f64, f64, f64)>,
    pub argmax_tau_db: f64,
}

/// Grid search for the capacity-maximizing τ_N of every (scheme, #pairs,
/// Pt) in the result. Ties go to the lower τ_N.
pub fn sweep_tau(result: &CampaignResult) -> Vec<TauCurve> {
    let mut curves: Vec<TauCurve> = Vec::new();
    for cell in &result.cells {
        let point = (cell.tau_n_db, cell.mean_csum, cell.stderr);
        match curves
            .iter_mut()
            .find(|c| c.scheme == cell.scheme && c.num_pairs == cell.num_pairs && c.pt_dbm == cell.pt_dbm)
        {
            Some(c) => c.points.push(point),
            None => curves.push(TauCurve {
                scheme: cell.scheme,
                num_pairs: cell.num_pairs,
                pt_dbm: cell.pt_dbm,
                points: vec![point],
                argmax_tau_db: f64::NAN,
            }),
        }
    }
    for c in &mut curves {
        c.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = c.points[0];
        for &p in &c.points[1..] {
            if p.1 > best.1 {
                best = p;
            }
        }
        c.argmax_tau_db = best.0;
    }
    curves
}
