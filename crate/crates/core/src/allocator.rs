//! CSD allocation and the Max S/D baseline.
//!
//! CSD runs in seven steps: the shared region is split evenly among the
//! CUEs; CUE neighbors decide which pairs may reuse each CUE's RBs; maximal
//! cliques of each CUE subgraph decide which reusers conflict; every clique
//! hands the CUE's RBs to its most efficient member; the dedicated region is
//! split into per-pair default quotas proportional to clique counts; and
//! finally the default RBs of each pair are reused by the winners of the
//! cliques of that pair's subgraph.
//!
//! A pair that sits in several cliques of one subgraph transmits only if it
//! wins all of them, which keeps every transmitter set independent in the
//! DUE adjacency.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::igraph::{build_subgraphs, build_subgraphs_among, CliqueSet, NeighborRelations, SubgraphSet};
use crate::matrix::Matrix;
use crate::radio::{self, Efficiency, LinkBudget, NoiseModel, PowerProfile};
use crate::scenario::{Scenario, SimConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub pair: usize,
    pub power_w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedRb {
    pub owner: usize,
    pub transmitters: Vec<Transmission>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DedicatedRb {
    pub owner: Option<usize>,
    pub transmitters: Vec<Transmission>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub shared: Vec<SharedRb>,
    pub dedicated: Vec<DedicatedRb>,
}

impl AllocationPlan {
    /// Plan with CUE ownership of the shared region and nothing else.
    pub fn with_cue_ownership(cue_ranges: &[Range<usize>], n_d: usize) -> Self {
        let mut shared = Vec::new();
        for (cue, range) in cue_ranges.iter().enumerate() {
            for _ in range.clone() {
                shared.push(SharedRb {
                    owner: cue,
                    transmitters: Vec::new(),
                });
            }
        }
        let dedicated = vec![
            DedicatedRb {
                owner: None,
                transmitters: Vec::new(),
            };
            n_d
        ];
        Self { shared, dedicated }
    }

    pub fn transmitters_of_shared(&self, rb: usize) -> Vec<usize> {
        self.shared[rb].transmitters.iter().map(|t| t.pair).collect()
    }

    pub fn transmitters_of_dedicated(&self, rb: usize) -> Vec<usize> {
        self.dedicated[rb].transmitters.iter().map(|t| t.pair).collect()
    }
}

/// Sum D2D capacity of a plan, in bits per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub c_shared: f64,
    pub c_dedicated: f64,
    pub c_sum: f64,
    pub per_pair: Vec<f64>,
}

/// Even contiguous split of the shared region; the first `n_s mod C` CUEs
/// get one extra RB.
pub fn allocate_cue_rbs(n_s: usize, num_cues: usize) -> Vec<Range<usize>> {
    assert!(num_cues > 0, "at least one CUE is required");
    let base = n_s / num_cues;
    let extra = n_s % num_cues;
    let mut start = 0;
    (0..num_cues)
        .map(|c| {
            let len = base + usize::from(c < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Default dedicated RBs per pair, proportional to the pair's clique count.
/// Largest-remainder rounding, ties to the lowest id; the result sums to
/// `n_d` whenever any count is non-zero.
pub fn default_dedicated_quota(n_d: usize, nmc_counts: &[usize]) -> Vec<usize> {
    let total: u128 = nmc_counts.iter().map(|&c| c as u128).sum();
    if total == 0 || n_d == 0 {
        return vec![0; nmc_counts.len()];
    }
    let mut quotas: Vec<usize> = Vec::with_capacity(nmc_counts.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(nmc_counts.len());
    for (i, &c) in nmc_counts.iter().enumerate() {
        let num = n_d as u128 * c as u128;
        quotas.push((num / total) as usize);
        remainders.push((num % total, i));
    }
    let leftover = n_d - quotas.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(leftover) {
        quotas[i] += 1;
    }
    quotas
}

/// Contiguous dedicated RB ranges in pair-id order.
pub fn quota_ranges(quotas: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    quotas
        .iter()
        .map(|&q| {
            let r = start..start + q;
            start += q;
            r
        })
        .collect()
}

/// Γ values used to pick clique winners, computed before any reuse
/// pattern exists.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionEfficiency {
    /// `(z, j)`: bits per RB for pair `j` on an RB of CUE `z`, no co-reusers.
    pub shared: Matrix<f64>,
    /// `(z, j)`: bits per RB for pair `j` on a default RB of pair `z`, with
    /// `z` as the only interferer. The diagonal is the owner alone.
    pub dedicated: Matrix<f64>,
}

impl SelectionEfficiency {
    pub fn compute(link: &LinkBudget<'_>, efficiency: &Efficiency) -> Self {
        let c = link.scenario.num_cues();
        let d = link.scenario.num_pairs();
        Self {
            shared: Matrix::from_fn(c, d, |z, j| efficiency.bits(link.shared_sinr(z, j, &[]))),
            dedicated: Matrix::from_fn(d, d, |z, j| efficiency.bits(link.dedicated_sinr(j, &[z]))),
        }
    }
}

/// Pairs that win every clique they belong to. The winner of a clique is
/// its member with the highest score, ties going to the lowest id.
/// Returned sorted.
pub fn clique_winners(cliques: &[Vec<usize>], score: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut memberships: Vec<(usize, usize, usize)> = Vec::new(); // (pair, member-of, won)
    let mut entry = |pair: usize, won: bool| match memberships.iter_mut().find(|e| e.0 == pair) {
        Some(e) => {
            e.1 += 1;
            e.2 += usize::from(won);
        }
        None => memberships.push((pair, 1, usize::from(won))),
    };
    for clique in cliques {
        let mut best: Option<(usize, f64)> = None;
        for &m in clique {
            let s = score(m);
            best = match best {
                Some((b, bs)) if bs > s || (bs == s && b < m) => Some((b, bs)),
                _ => Some((m, s)),
            };
        }
        let winner = best.map(|(b, _)| b);
        for &m in clique {
            entry(m, Some(m) == winner);
        }
    }
    let mut winners: Vec<usize> = memberships
        .into_iter()
        .filter(|&(_, member, won)| member == won)
        .map(|(p, _, _)| p)
        .collect();
    winners.sort_unstable();
    winners
}

/// Step 4: fill the shared RBs of every CUE with its clique winners.
/// Winners with zero efficiency stay silent.
pub fn allocate_shared(
    plan: &mut AllocationPlan,
    cue_ranges: &[Range<usize>],
    cliques: &CliqueSet,
    selection: &SelectionEfficiency,
    powers: &PowerProfile,
) {
    for (z, range) in cue_ranges.iter().enumerate() {
        let winners = clique_winners(&cliques.shared[z], |j| selection.shared[(z, j)]);
        let tx: Vec<Transmission> = winners
            .into_iter()
            .filter(|&j| selection.shared[(z, j)] > 0.0)
            .map(|j| Transmission {
                pair: j,
                power_w: powers.p_due_shared[j],
            })
            .collect();
        for rb in range.clone() {
            debug_assert_eq!(plan.shared[rb].owner, z);
            plan.shared[rb].transmitters = tx.clone();
        }
    }
}

/// Steps 5-7: hand every pair its default quota and let the clique winners
/// of its subgraph reuse it. The owner always transmits on its own RBs.
pub fn allocate_dedicated(
    plan: &mut AllocationPlan,
    quotas: &[usize],
    cliques: &CliqueSet,
    selection: &SelectionEfficiency,
    powers: &PowerProfile,
) {
    for (z, range) in quota_ranges(quotas).into_iter().enumerate() {
        if range.is_empty() {
            continue;
        }
        let score = |j: usize| {
            if j == z {
                f64::INFINITY
            } else {
                selection.dedicated[(z, j)]
            }
        };
        let mut pairs: Vec<usize> = clique_winners(&cliques.dedicated[z], score)
            .into_iter()
            .filter(|&j| j == z || selection.dedicated[(z, j)] > 0.0)
            .collect();
        if !pairs.contains(&z) {
            pairs.push(z);
            pairs.sort_unstable();
        }
        let tx: Vec<Transmission> = pairs
            .into_iter()
            .map(|j| Transmission {
                pair: j,
                power_w: powers.p_due_dedicated,
            })
            .collect();
        for rb in range {
            plan.dedicated[rb].owner = Some(z);
            plan.dedicated[rb].transmitters = tx.clone();
        }
    }
}

/// Capacity of a finished plan, using the actual transmitter sets.
pub fn evaluate_capacity(plan: &AllocationPlan, link: &LinkBudget<'_>, efficiency: &Efficiency) -> CapacityReport {
    let d = link.scenario.num_pairs();
    let mut per_pair = vec![0.0; d];
    let mut c_shared = 0.0;
    let mut c_dedicated = 0.0;

    // Gains are flat across RBs, so a run of RBs with the same owner and
    // transmitters carries the same bits on each RB.
    let mut cached: Option<(usize, &[Transmission], Vec<f64>)> = None;
    for (rb, slot) in plan.shared.iter().enumerate() {
        let hit = matches!(&cached, Some((o, t, _)) if *o == slot.owner && *t == slot.transmitters.as_slice());
        if !hit {
            let bits = slot
                .transmitters
                .iter()
                .map(|t| {
                    let sinr = radio::sinr_shared(t.pair, rb, plan, link.scenario, link.powers, link.noise)
                        .expect("transmitter listed on its own RB");
                    efficiency.bits(sinr)
                })
                .collect();
            cached = Some((slot.owner, slot.transmitters.as_slice(), bits));
        }
        let (_, _, bits) = cached.as_ref().unwrap();
        for (t, b) in slot.transmitters.iter().zip(bits) {
            per_pair[t.pair] += b;
            c_shared += b;
        }
    }

    let mut cached: Option<(&[Transmission], Vec<f64>)> = None;
    for (rb, slot) in plan.dedicated.iter().enumerate() {
        let hit = matches!(&cached, Some((t, _)) if *t == slot.transmitters.as_slice());
        if !hit {
            let bits = slot
                .transmitters
                .iter()
                .map(|t| {
                    let sinr = radio::sinr_dedicated(t.pair, rb, plan, link.scenario, link.noise)
                        .expect("transmitter listed on its own RB");
                    efficiency.bits(sinr)
                })
                .collect();
            cached = Some((slot.transmitters.as_slice(), bits));
        }
        let (_, bits) = cached.as_ref().unwrap();
        for (t, b) in slot.transmitters.iter().zip(bits) {
            per_pair[t.pair] += b;
            c_dedicated += b;
        }
    }

    CapacityReport {
        c_shared,
        c_dedicated,
        c_sum: c_shared + c_dedicated,
        per_pair,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Shared,
    Dedicated,
}

/// Result of one allocation run with its intermediate structures.
#[derive(Clone, Debug)]
pub struct Allocation {
    pub plan: AllocationPlan,
    pub report: CapacityReport,
    pub subgraphs: SubgraphSet,
    pub cliques: CliqueSet,
    pub quotas: Vec<usize>,
    /// Per-pair access mode; `None` for CSD, where every pair uses both.
    pub modes: Option<Vec<Mode>>,
}

/// Per-drop state shared by CSD and Max S/D: noise, powers, neighbor
/// relations and selection efficiencies.
pub struct Engine<'a> {
    pub scenario: &'a Scenario,
    pub n_d: usize,
    pub noise: NoiseModel,
    pub powers: PowerProfile,
    pub efficiency: Efficiency,
    pub relations: NeighborRelations,
    pub selection: SelectionEfficiency,
    pub cue_ranges: Vec<Range<usize>>,
}

impl<'a> Engine<'a> {
    pub fn new(scenario: &'a Scenario, config: &SimConfig) -> Self {
        let noise = NoiseModel::single_cell(config, scenario.num_pairs());
        let powers = PowerProfile::new(config, scenario, &noise);
        let efficiency = Efficiency::new(config.gamma_min_db);
        let link = LinkBudget {
            scenario,
            powers: &powers,
            noise: &noise,
        };
        let relations = crate::igraph::neighbor_relations(&link, efficiency.gamma_min, config.tau_n_db);
        let selection = SelectionEfficiency::compute(&link, &efficiency);
        Self {
            scenario,
            n_d: config.n_d,
            cue_ranges: allocate_cue_rbs(config.n_s, scenario.num_cues()),
            noise,
            powers,
            efficiency,
            relations,
            selection,
        }
    }

    pub fn link(&self) -> LinkBudget<'_> {
        LinkBudget {
            scenario: self.scenario,
            powers: &self.powers,
            noise: &self.noise,
        }
    }

    fn allocate(&self, subgraphs: SubgraphSet, modes: Option<Vec<Mode>>) -> Allocation {
        let cliques = CliqueSet::of(&subgraphs);
        let mut plan = AllocationPlan::with_cue_ownership(&self.cue_ranges, self.n_d);
        allocate_shared(&mut plan, &self.cue_ranges, &cliques, &self.selection, &self.powers);
        let quotas = default_dedicated_quota(self.n_d, &cliques.dedicated_counts());
        allocate_dedicated(&mut plan, &quotas, &cliques, &self.selection, &self.powers);
        let report = evaluate_capacity(&plan, &self.link(), &self.efficiency);
        Allocation {
            plan,
            report,
            subgraphs,
            cliques,
            quotas,
            modes,
        }
    }

    pub fn csd(&self) -> Allocation {
        let subgraphs = build_subgraphs(&self.relations);
        debug_assert!(
            self.scenario.num_pairs() == 0 || subgraphs.dedicated.iter().all(|s| !s.vertices.is_empty()),
            "every pair owns a non-empty dedicated subgraph"
        );
        self.allocate(subgraphs, None)
    }

    /// Per-pair capacity estimates `(shared, dedicated)` from a full
    /// selection pass under `relations`, used to pick Max S/D modes.
    pub fn mode_estimates(&self, relations: &NeighborRelations) -> Vec<(f64, f64)> {
        let d = self.scenario.num_pairs();
        let cliques = CliqueSet::of(&build_subgraphs(relations));
        let mut est = vec![(0.0, 0.0); d];

        for (z, range) in self.cue_ranges.iter().enumerate() {
            for j in clique_winners(&cliques.shared[z], |j| self.selection.shared[(z, j)]) {
                est[j].0 += range.len() as f64 * self.selection.shared[(z, j)];
            }
        }
        let quotas = default_dedicated_quota(self.n_d, &cliques.dedicated_counts());
        for z in 0..d {
            let q = quotas[z] as f64;
            est[z].1 += q * self.selection.dedicated[(z, z)];
            let score = |j: usize| {
                if j == z {
                    f64::INFINITY
                } else {
                    self.selection.dedicated[(z, j)]
                }
            };
            for j in clique_winners(&cliques.dedicated[z], score) {
                if j != z {
                    est[j].1 += q * self.selection.dedicated[(z, j)];
                }
            }
        }
        est
    }

    /// Relations seen by the baseline. With `d2d_reuse` off every pair
    /// conflicts with every other, so an RB carries at most one pair.
    pub fn baseline_relations(&self, d2d_reuse: bool) -> NeighborRelations {
        let mut rel = self.relations.clone();
        if !d2d_reuse {
            let d = self.scenario.num_pairs();
            rel.due_adjacency = Matrix::from_fn(d, d, |i, j| i != j);
        }
        rel
    }

    /// Max S/D: each pair uses only the region with the larger estimate
    /// (ties to dedicated), and each region is then allocated among its own
    /// pairs. The baseline gives every RB to at most one pair.
    pub fn max_sd(&self) -> Allocation {
        self.max_sd_with(false)
    }

    /// Max S/D variant; `d2d_reuse` lets pairs of one mode share RBs through
    /// the CSD clique machinery.
    pub fn max_sd_with(&self, d2d_reuse: bool) -> Allocation {
        let relations = self.baseline_relations(d2d_reuse);
        let modes: Vec<Mode> = self
            .mode_estimates(&relations)
            .into_iter()
            .map(|(s, d)| if s > d { Mode::Shared } else { Mode::Dedicated })
            .collect();
        let shared_mask: Vec<bool> = modes.iter().map(|&m| m == Mode::Shared).collect();
        let dedicated_mask: Vec<bool> = modes.iter().map(|&m| m == Mode::Dedicated).collect();
        let subgraphs = build_subgraphs_among(&relations, &shared_mask, &dedicated_mask);
        self.allocate(subgraphs, Some(modes))
    }
}

pub fn run_csd(scenario: &Scenario, config: &SimConfig) -> (AllocationPlan, CapacityReport) {
    let a = Engine::new(scenario, config).csd();
    (a.plan, a.report)
}

pub fn run_max_sd(scenario: &Scenario, config: &SimConfig) -> (AllocationPlan, CapacityReport) {
    let a = Engine::new(scenario, config).max_sd();
    (a.plan, a.report)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    AdjacentTransmitters { region: &'static str, rb: usize, a: usize, b: usize },
    CueNeighborTransmits { rb: usize, cue: usize, pair: usize },
    CliqueConflict { region: &'static str, rb: usize, clique: Vec<usize> },
    OutsideSubgraph { region: &'static str, rb: usize, pair: usize },
    QuotaSum { expected: usize, got: usize },
    OwnerMismatch { region: &'static str, rb: usize },
    PowerMismatch { region: &'static str, rb: usize, pair: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AdjacentTransmitters { region, rb, a, b } => {
                write!(f, "{region} RB {rb}: neighbors {a} and {b} both transmit")
            }
            Violation::CueNeighborTransmits { rb, cue, pair } => {
                write!(f, "shared RB {rb}: pair {pair} is a neighbor of owner CUE {cue}")
            }
            Violation::CliqueConflict { region, rb, clique } => {
                write!(f, "{region} RB {rb}: several members of clique {clique:?} transmit")
            }
            Violation::OutsideSubgraph { region, rb, pair } => {
                write!(f, "{region} RB {rb}: pair {pair} is not in the owner's subgraph")
            }
            Violation::QuotaSum { expected, got } => write!(f, "quotas sum to {got}, expected {expected}"),
            Violation::OwnerMismatch { region, rb } => write!(f, "{region} RB {rb}: owner disagrees with the split"),
            Violation::PowerMismatch { region, rb, pair } => {
                write!(f, "{region} RB {rb}: pair {pair} transmits at the wrong power")
            }
        }
    }
}

/// Checks a finished allocation against the plan invariants.
pub fn verify_allocation(engine: &Engine<'_>, alloc: &Allocation) -> Vec<Violation> {
    let mut out = Vec::new();
    let adj = &engine.relations.due_adjacency;
    let plan = &alloc.plan;
    let rel_eps = 1e-12;
    let same_power = |a: f64, b: f64| (a - b).abs() <= rel_eps * b.abs();

    let check_independent = |region: &'static str, rb: usize, tx: &[Transmission], out: &mut Vec<Violation>| {
        for (k, a) in tx.iter().enumerate() {
            for b in &tx[k + 1..] {
                if adj[(a.pair, b.pair)] {
                    out.push(Violation::AdjacentTransmitters {
                        region,
                        rb,
                        a: a.pair,
                        b: b.pair,
                    });
                }
            }
        }
    };
    let check_cliques =
        |region: &'static str, rb: usize, cliques: &[Vec<usize>], tx: &[Transmission], out: &mut Vec<Violation>| {
            for clique in cliques {
                if tx.iter().filter(|t| clique.contains(&t.pair)).count() > 1 {
                    out.push(Violation::CliqueConflict {
                        region,
                        rb,
                        clique: clique.clone(),
                    });
                }
            }
        };

    let mut rb = 0;
    for (cue, range) in engine.cue_ranges.iter().enumerate() {
        for _ in range.clone() {
            if plan.shared.get(rb).map(|s| s.owner) != Some(cue) {
                out.push(Violation::OwnerMismatch { region: "shared", rb });
            }
            rb += 1;
        }
    }
    if plan.shared.len() != rb {
        out.push(Violation::OwnerMismatch { region: "shared", rb });
    }

    for (rb, slot) in plan.shared.iter().enumerate() {
        check_independent("shared", rb, &slot.transmitters, &mut out);
        if let Some(cliques) = alloc.cliques.shared.get(slot.owner) {
            check_cliques("shared", rb, cliques, &slot.transmitters, &mut out);
        }
        for t in &slot.transmitters {
            if engine.relations.cue_neighbor[(slot.owner, t.pair)] {
                out.push(Violation::CueNeighborTransmits {
                    rb,
                    cue: slot.owner,
                    pair: t.pair,
                });
            }
            if !alloc.subgraphs.shared[slot.owner].contains(t.pair) {
                out.push(Violation::OutsideSubgraph {
                    region: "shared",
                    rb,
                    pair: t.pair,
                });
            }
            if !same_power(t.power_w, engine.powers.p_due_shared[t.pair]) {
                out.push(Violation::PowerMismatch {
                    region: "shared",
                    rb,
                    pair: t.pair,
                });
            }
        }
    }

    let quota_total: usize = alloc.quotas.iter().sum();
    let nmc_total: usize = alloc.cliques.dedicated_counts().iter().sum();
    let expected = if nmc_total > 0 { engine.n_d } else { 0 };
    if quota_total != expected {
        out.push(Violation::QuotaSum {
            expected,
            got: quota_total,
        });
    }
    let ranges = quota_ranges(&alloc.quotas);
    for (rb, slot) in plan.dedicated.iter().enumerate() {
        let expected_owner = ranges.iter().position(|r| r.contains(&rb));
        if slot.owner != expected_owner {
            out.push(Violation::OwnerMismatch { region: "dedicated", rb });
        }
        check_independent("dedicated", rb, &slot.transmitters, &mut out);
        if let Some(z) = slot.owner {
            check_cliques("dedicated", rb, &alloc.cliques.dedicated[z], &slot.transmitters, &mut out);
            if !slot.transmitters.iter().any(|t| t.pair == z) {
                out.push(Violation::OwnerMismatch { region: "dedicated", rb });
            }
            for t in &slot.transmitters {
                if !alloc.subgraphs.dedicated[z].contains(t.pair) {
                    out.push(Violation::OutsideSubgraph {
                        region: "dedicated",
                        rb,
                        pair: t.pair,
                    });
                }
            }
        } else if !slot.transmitters.is_empty() {
            out.push(Violation::OwnerMismatch { region: "dedicated", rb });
        }
        for t in &slot.transmitters {
            if !same_power(t.power_w, engine.powers.p_due_dedicated) {
                out.push(Violation::PowerMismatch {
                    region: "dedicated",
                    rb,
                    pair: t.pair,
                });
            }
        }
    }
    out
}
