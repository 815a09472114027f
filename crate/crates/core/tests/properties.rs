use d2d_csd::allocator::{verify_allocation, Engine};
use d2d_csd::igraph::{cue_neighbors, due_neighbors};
use d2d_csd::radio::{db_to_linear, restricted_shared_power, Efficiency, NoiseModel, PowerProfile};
use d2d_csd::scenario::{path_loss_db, LinkKind, PathLossModel};
use d2d_csd::{generate_drop, SimConfig};
use proptest::prelude::*;

fn config(pairs: usize) -> SimConfig {
    SimConfig {
        num_pairs: pairs,
        ..SimConfig::reference()
    }
}

#[test]
fn geometry_over_ten_thousand_drops() {
    let cfg = SimConfig {
        num_cues: 1,
        num_pairs: 5,
        ..SimConfig::reference()
    };
    let side = cfg.area_side_m;
    let inside = |p: &d2d_csd::scenario::Point| (0.0..=side).contains(&p.x) && (0.0..=side).contains(&p.y);
    for k in 0..10_000 {
        let s = generate_drop(&cfg, k);
        for p in &s.pair_pos {
            assert!(p.tx.distance(&p.rx) <= cfg.max_pair_dist_m, "drop {k}");
            assert!(inside(&p.tx) && inside(&p.rx), "drop {k}");
        }
        assert!(s.cue_pos.iter().all(inside));
    }
}

#[test]
fn cue_positions_centered() {
    let cfg = config(1);
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
    for k in 0..1000 {
        for p in generate_drop(&cfg, k).cue_pos {
            sx += p.x;
            sy += p.y;
            n += 1.0;
        }
    }
    let c = cfg.area_side_m / 2.0;
    assert!((sx / n - c).abs() < 0.05 * c);
    assert!((sy / n - c).abs() < 0.05 * c);
}

#[test]
fn drops_differ_by_index_and_nest_by_pair_count() {
    let a = generate_drop(&config(10), 0);
    let b = generate_drop(&config(10), 1);
    let c = generate_drop(&config(15), 0);
    assert_ne!(a.cue_pos, b.cue_pos);
    assert_eq!(a.cue_pos, c.cue_pos);
    assert_eq!(a.pair_pos[..], c.pair_pos[..10]);
    let other_seed = SimConfig { rng_seed: 2, ..config(10) };
    assert_ne!(generate_drop(&other_seed, 0).cue_pos, a.cue_pos);
}

proptest! {
    #[test]
    fn gain_monotone_in_distance(d1 in 0.1f64..2000.0, d2 in 0.1f64..2000.0) {
        let m = PathLossModel::default();
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        for kind in [LinkKind::Cellular, LinkKind::D2d] {
            prop_assert!(m.gain(kind, far) <= m.gain(kind, near));
            prop_assert!(path_loss_db(kind, far) >= path_loss_db(kind, near));
            prop_assert!(m.gain(kind, near) > 0.0 && m.gain(kind, near) <= 1.0);
        }
    }

    #[test]
    fn restricted_power_respects_cap_and_protection(g_db in -160f64..-40.0, tau in 1f64..100.0) {
        let g = db_to_linear(g_db);
        let ni = 7.166e-16;
        let p_max = 0.2;
        let p = restricted_shared_power(g, ni, tau, p_max);
        prop_assert!(p > 0.0 && p <= p_max);
        prop_assert!(p * g <= ni / tau * (1.0 + 1e-12));
        if p < p_max {
            prop_assert!((p * g - ni / tau).abs() <= 1e-12 * ni / tau);
        }
    }

    #[test]
    fn efficiency_bounded(sinr_db in -40f64..60.0) {
        let e = Efficiency::new(-9.478);
        let b = e.bits(db_to_linear(sinr_db));
        prop_assert!((0.0..=168.0 * 6.0).contains(&b));
        if sinr_db < -9.478 {
            prop_assert_eq!(b, 0.0);
        }
    }

    #[test]
    fn due_neighbors_shrink_as_threshold_rises(seed in 0u64..200, lo in -30f64..0.0, step in 0f64..10.0) {
        let cfg = SimConfig { rng_seed: seed, ..config(15) };
        let s = generate_drop(&cfg, 0);
        let noise = NoiseModel::single_cell(&cfg, s.num_pairs());
        let powers = PowerProfile::new(&cfg, &s, &noise);
        let link = d2d_csd::radio::LinkBudget { scenario: &s, powers: &powers, noise: &noise };
        // more negative τ_N means a higher bar for being a neighbor
        let dense = due_neighbors(&link, lo + step);
        let sparse = due_neighbors(&link, lo);
        for (a, b) in sparse.iter().zip(dense.iter()) {
            prop_assert!(!*a || *b);
        }
    }

    #[test]
    fn cue_neighbors_grow_with_gamma_min(seed in 0u64..200, g_db in -20f64..10.0) {
        let cfg = SimConfig { rng_seed: seed, ..config(15) };
        let s = generate_drop(&cfg, 0);
        let noise = NoiseModel::single_cell(&cfg, s.num_pairs());
        let powers = PowerProfile::new(&cfg, &s, &noise);
        let link = d2d_csd::radio::LinkBudget { scenario: &s, powers: &powers, noise: &noise };
        let low = cue_neighbors(&link, db_to_linear(g_db));
        let high = cue_neighbors(&link, db_to_linear(g_db + 3.0));
        for (a, b) in low.iter().zip(high.iter()) {
            prop_assert!(!*a || *b);
        }
    }

    #[test]
    fn plans_satisfy_invariants(seed in 0u64..1000, pairs in 0usize..40, tau in -30f64..0.0, pt in 10f64..20.0) {
        let cfg = SimConfig {
            rng_seed: seed,
            num_pairs: pairs,
            tau_n_db: tau,
            pt_cue_dbm: pt,
            pt_due_dedicated_dbm: pt,
            ..SimConfig::reference()
        };
        let s = generate_drop(&cfg, 0);
        let engine = Engine::new(&s, &cfg);
        for alloc in [engine.csd(), engine.max_sd(), engine.max_sd_with(true)] {
            let v = verify_allocation(&engine, &alloc);
            prop_assert!(v.is_empty(), "{:?}", v);
            prop_assert_eq!(alloc.report.per_pair.len(), pairs);
            prop_assert!(alloc.report.c_sum >= 0.0);
        }
    }
}
