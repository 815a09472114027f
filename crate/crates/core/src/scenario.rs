//! Drop generation and deterministic channel gains.
//!
//! A drop places the CUEs and D2D transmitters uniformly in a square cell
//! with the eNB at its center. Each DUE-R is drawn uniformly from the disk of
//! radius `max_pair_dist_m` around its DUE-T, rejecting points that fall
//! outside the area. Gains are frequency-flat, so one value per link covers
//! every RB.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid value for `{field}`: {message}")]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl ConfigError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

/// Log-distance path-loss constants, `PL = intercept + slope·log10(d_km)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossModel {
    pub cellular_intercept_db: f64,
    pub cellular_slope_db: f64,
    pub d2d_intercept_db: f64,
    pub d2d_slope_db: f64,
    pub min_distance_m: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            cellular_intercept_db: 128.1,
            cellular_slope_db: 37.6,
            d2d_intercept_db: 148.0,
            d2d_slope_db: 40.0,
            min_distance_m: 3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkKind {
    /// UE to eNB.
    Cellular,
    /// UE to UE (DUE-DUE and CUE-DUE).
    D2d,
}

impl PathLossModel {
    pub fn path_loss_db(&self, kind: LinkKind, distance_m: f64) -> f64 {
        let d_km = distance_m.max(self.min_distance_m) / 1000.0;
        match kind {
            LinkKind::Cellular => self.cellular_intercept_db + self.cellular_slope_db * d_km.log10(),
            LinkKind::D2d => self.d2d_intercept_db + self.d2d_slope_db * d_km.log10(),
        }
    }

    pub fn gain(&self, kind: LinkKind, distance_m: f64) -> f64 {
        gain_from_path_loss_db(self.path_loss_db(kind, distance_m))
    }
}

/// Path loss with the default model constants.
pub fn path_loss_db(kind: LinkKind, distance_m: f64) -> f64 {
    PathLossModel::default().path_loss_db(kind, distance_m)
}

pub fn gain_from_path_loss_db(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 10.0)
}

/// Simulation parameters for one drop. Powers are in dBm, thresholds in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub area_side_m: f64,
    pub num_cues: usize,
    pub num_pairs: usize,
    pub max_pair_dist_m: f64,
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub rb_total: usize,
    pub overhead_fraction: f64,
    pub n_s: usize,
    pub n_d: usize,
    pub pt_cue_dbm: f64,
    pub pt_due_dedicated_dbm: f64,
    /// Linear factor; the DUE signal at the eNB sits this far below NI_e.
    pub tau_due: f64,
    pub tau_n_db: f64,
    pub gamma_min_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub drops: usize,
    pub rng_seed: u64,
    #[serde(default = "default_rb_bandwidth_hz")]
    pub rb_bandwidth_hz: f64,
    #[serde(default = "default_p_max_dbm")]
    pub p_max_dbm: f64,
    #[serde(default)]
    pub pathloss: PathLossModel,
}

fn default_rb_bandwidth_hz() -> f64 {
    180_000.0
}

fn default_p_max_dbm() -> f64 {
    23.0
}

impl SimConfig {
    /// Parameter set of the reference evaluation: 20 CUEs, 25 pairs,
    /// 750/750 RBs, Pt = 10 dBm, τ_N = 0 dB.
    pub fn reference() -> Self {
        Self {
            area_side_m: 500.0,
            num_cues: 20,
            num_pairs: 25,
            max_pair_dist_m: 200.0,
            carrier_ghz: 2.0,
            bandwidth_mhz: 20.0,
            rb_total: 2000,
            overhead_fraction: 0.25,
            n_s: 750,
            n_d: 750,
            pt_cue_dbm: 10.0,
            pt_due_dedicated_dbm: 10.0,
            tau_due: 10.0,
            tau_n_db: 0.0,
            gamma_min_db: -9.478,
            noise_psd_dbm_hz: -174.0,
            drops: 200,
            rng_seed: 1,
            rb_bandwidth_hz: default_rb_bandwidth_hz(),
            p_max_dbm: default_p_max_dbm(),
            pathloss: PathLossModel::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be a positive number, got {v}")))
            }
        };
        let finite = |field: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(field, "must be finite"))
            }
        };
        let count = |field: &'static str, v: usize| {
            if v > 0 {
                Ok(())
            } else {
                Err(ConfigError::new(field, "must be > 0"))
            }
        };

        positive("area_side_m", self.area_side_m)?;
        count("num_cues", self.num_cues)?;
        positive("max_pair_dist_m", self.max_pair_dist_m)?;
        if self.max_pair_dist_m > self.area_side_m {
            return Err(ConfigError::new(
                "max_pair_dist_m",
                format!("{} exceeds area_side_m {}", self.max_pair_dist_m, self.area_side_m),
            ));
        }
        positive("carrier_ghz", self.carrier_ghz)?;
        positive("bandwidth_mhz", self.bandwidth_mhz)?;
        count("rb_total", self.rb_total)?;
        if !(0.0..1.0).contains(&self.overhead_fraction) {
            return Err(ConfigError::new("overhead_fraction", "must lie in [0, 1)"));
        }
        count("n_s", self.n_s)?;
        count("n_d", self.n_d)?;
        let data_rbs = self.rb_total as f64 * (1.0 - self.overhead_fraction);
        if ((self.n_s + self.n_d) as f64 - data_rbs).abs() > 1e-6 {
            return Err(ConfigError::new(
                "n_s",
                format!(
                    "n_s + n_d = {} but rb_total x (1 - overhead_fraction) = {data_rbs}",
                    self.n_s + self.n_d
                ),
            ));
        }
        finite("pt_cue_dbm", self.pt_cue_dbm)?;
        finite("pt_due_dedicated_dbm", self.pt_due_dedicated_dbm)?;
        positive("tau_due", self.tau_due)?;
        finite("tau_n_db", self.tau_n_db)?;
        finite("gamma_min_db", self.gamma_min_db)?;
        finite("noise_psd_dbm_hz", self.noise_psd_dbm_hz)?;
        count("drops", self.drops)?;
        positive("rb_bandwidth_hz", self.rb_bandwidth_hz)?;
        finite("p_max_dbm", self.p_max_dbm)?;
        positive("pathloss.min_distance_m", self.pathloss.min_distance_m)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPos {
    pub tx: Point,
    pub rx: Point,
}

/// Linear channel gains of one drop.
///
/// `txi_rxj[(i, j)]` is the gain from DUE-T `i` to DUE-R `j`; its diagonal
/// repeats `txj_rxj` and is never read as interference.
/// `cue_rxj[(c, j)]` is the gain from CUE `c` to DUE-R `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub cue_enb: Vec<f64>,
    pub due_enb: Vec<f64>,
    pub txj_rxj: Vec<f64>,
    pub txi_rxj: Matrix<f64>,
    pub cue_rxj: Matrix<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub area_side_m: f64,
    pub enb_pos: Point,
    pub cue_pos: Vec<Point>,
    pub pair_pos: Vec<PairPos>,
    pub gains: Gains,
}

impl Scenario {
    pub fn num_cues(&self) -> usize {
        self.cue_pos.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_pos.len()
    }

    /// Builds a scenario directly from gain tables, without geometry.
    /// Every node is reported at the eNB position.
    pub fn from_gains(area_side_m: f64, gains: Gains) -> Self {
        let c = gains.cue_enb.len();
        let d = gains.txj_rxj.len();
        assert_eq!(gains.due_enb.len(), d);
        assert_eq!(gains.txi_rxj.dims(), (d, d));
        assert_eq!(gains.cue_rxj.dims(), (c, d));
        let center = Point::new(area_side_m / 2.0, area_side_m / 2.0);
        Self {
            area_side_m,
            enb_pos: center,
            cue_pos: vec![center; c],
            pair_pos: vec![PairPos { tx: center, rx: center }; d],
            gains,
        }
    }
}

/// 64-bit finalizer from SplitMix64.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for one drop, from the base seed and the drop index only.
/// CUEs are placed first and pairs one after another, so drop `k` with `n`
/// pairs extends drop `k` with fewer pairs, and the geometry is shared by
/// every power level, τ_N value and scheme evaluated on it.
pub fn drop_seed(base_seed: u64, drop_index: u64) -> u64 {
    mix64(mix64(base_seed) ^ drop_index)
}

pub fn generate_drop(config: &SimConfig, drop_index: u64) -> Scenario {
    let seed = drop_seed(config.rng_seed, drop_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = config.area_side_m;
    let uniform_point = |rng: &mut ChaCha8Rng| {
        Point::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side))
    };

    let cue_pos: Vec<Point> = (0..config.num_cues).map(|_| uniform_point(&mut rng)).collect();
    let mut pair_pos = Vec::with_capacity(config.num_pairs);
    for _ in 0..config.num_pairs {
        let tx = uniform_point(&mut rng);
        let rx = loop {
            let r = config.max_pair_dist_m * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let p = Point::new(tx.x + r * theta.cos(), tx.y + r * theta.sin());
            if (0.0..=side).contains(&p.x) && (0.0..=side).contains(&p.y) {
                break p;
            }
        };
        pair_pos.push(PairPos { tx, rx });
    }

    let enb_pos = Point::new(side / 2.0, side / 2.0);
    let gains = compute_gains(&config.pathloss, &enb_pos, &cue_pos, &pair_pos);
    Scenario {
        area_side_m: side,
        enb_pos,
        cue_pos,
        pair_pos,
        gains,
    }
}

pub fn compute_gains(model: &PathLossModel, enb: &Point, cues: &[Point], pairs: &[PairPos]) -> Gains {
    let cell = |p: &Point| model.gain(LinkKind::Cellular, p.distance(enb));
    let d2d = |a: &Point, b: &Point| model.gain(LinkKind::D2d, a.distance(b));
    Gains {
        cue_enb: cues.iter().map(cell).collect(),
        due_enb: pairs.iter().map(|p| cell(&p.tx)).collect(),
        txj_rxj: pairs.iter().map(|p| d2d(&p.tx, &p.rx)).collect(),
        txi_rxj: Matrix::from_fn(pairs.len(), pairs.len(), |i, j| d2d(&pairs[i].tx, &pairs[j].rx)),
        cue_rxj: Matrix::from_fn(cues.len(), pairs.len(), |c, j| d2d(&cues[c], &pairs[j].rx)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn path_loss_reference_points() {
        assert!((path_loss_db(LinkKind::Cellular, 1000.0) - 128.1).abs() < 1e-12);
        assert!((path_loss_db(LinkKind::D2d, 100.0) - 108.0).abs() < 1e-12);
        assert_eq!(path_loss_db(LinkKind::D2d, 2.0), path_loss_db(LinkKind::D2d, 3.0));
        assert_eq!(path_loss_db(LinkKind::Cellular, 0.0), path_loss_db(LinkKind::Cellular, 3.0));
    }

    #[test]
    fn gain_unit_conversion() {
        assert!(close(gain_from_path_loss_db(100.0), 1e-10, 1e-12));
        let m = PathLossModel::default();
        assert_eq!(m.gain(LinkKind::D2d, 57.3), m.gain(LinkKind::D2d, 57.3));
    }

    #[test]
    fn reference_drop_shape() {
        let cfg = SimConfig::reference();
        cfg.validate().unwrap();
        let s = generate_drop(&cfg, 0);
        assert_eq!(s.num_cues(), 20);
        assert_eq!(s.num_pairs(), 25);
        assert_eq!(s.gains.txi_rxj.dims(), (25, 25));
        assert_eq!(s.gains.cue_rxj.dims(), (20, 25));
        assert_eq!(s.gains.due_enb.len(), 25);
        for j in 0..25 {
            assert_eq!(s.gains.txi_rxj[(j, j)], s.gains.txj_rxj[j]);
        }
        for p in &s.pair_pos {
            assert!(p.tx.distance(&p.rx) <= 200.0);
        }
    }

    #[test]
    fn empty_pair_drop() {
        let cfg = SimConfig {
            num_pairs: 0,
            ..SimConfig::reference()
        };
        let s = generate_drop(&cfg, 0);
        assert!(s.pair_pos.is_empty());
        assert_eq!(s.gains.txi_rxj.dims(), (0, 0));
        assert_eq!(s.gains.cue_rxj.dims(), (20, 0));
    }

    #[test]
    fn drop_is_deterministic() {
        let cfg = SimConfig::reference();
        let a = serde_json::to_string(&generate_drop(&cfg, 7)).unwrap();
        let b = serde_json::to_string(&generate_drop(&cfg, 7)).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&generate_drop(&cfg, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn geometry_independent_of_power_and_threshold() {
        let cfg = SimConfig::reference();
        let other = SimConfig {
            pt_cue_dbm: 20.0,
            pt_due_dedicated_dbm: 20.0,
            tau_n_db: -16.0,
            ..cfg.clone()
        };
        assert_eq!(generate_drop(&cfg, 3), generate_drop(&other, 3));
    }

    #[test]
    fn validation_catches_split_mismatch() {
        let cfg = SimConfig {
            n_s: 700,
            ..SimConfig::reference()
        };
        assert_eq!(cfg.validate().unwrap_err().field, "n_s");
        let cfg = SimConfig {
            max_pair_dist_m: 600.0,
            ..SimConfig::reference()
        };
        assert_eq!(cfg.validate().unwrap_err().field, "max_pair_dist_m");
    }
}
