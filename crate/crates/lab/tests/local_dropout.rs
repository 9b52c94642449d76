mod common;

use common::{cfg, oracle_sum};
use lightsecagg_core::baseline::PairwiseParams;
use lightsecagg_core::coding::combinations;
use lightsecagg_core::stream::{Seed, SeedStream};
use lightsecagg_lab::local::pairwise_round;
use lightsecagg_lab::seeds::RoundSeeds;
use lightsecagg_lab::DropoutPlan;

#[test]
fn secagg_survives_every_dropout_set_up_to_d() {
    let c = cfg(8, 3, 4, 4, 3);
    let params = PairwiseParams::secagg(&c);
    let seeds = RoundSeeds::new(2, 0);
    let mut cases = 0;
    for k in 0..=5 {
        for idx in combinations(8, k) {
            let victims: Vec<u32> = idx.iter().map(|&i| i as u32 + 1).collect();
            let out = pairwise_round(&c, &params, &seeds, &victims).unwrap();
            let survivors: Vec<u32> = (1..=8).filter(|u| !victims.contains(u)).collect();
            if k <= 4 {
                assert_eq!(out.aggregate.unwrap().values(), oracle_sum(&c, &seeds, &survivors), "victims {victims:?}");
            } else {
                assert!(out.aggregate.is_err(), "victims {victims:?}");
            }
            cases += 1;
        }
    }
    assert_eq!(cases, 1 + 8 + 28 + 56 + 70 + 56);
}

/// Harary `H_{k,n}` neighbours, built from its definition.
fn harary_neighbours(n: usize, k: usize, v: usize) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    for s in 1..=k / 2 {
        out.push(((v + s) % n) as u32 + 1);
        out.push(((v + n - s) % n) as u32 + 1);
    }
    if k % 2 == 1 {
        out.push(((v + n / 2) % n) as u32 + 1);
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[test]
fn secagg_plus_recovers_exactly_when_local_thresholds_hold() {
    let (n, k) = (20, 9);
    let c = cfg(n, 10, 6, 14, 2);
    let params = PairwiseParams::secagg_plus(&c, k).unwrap();
    let t_local = k.div_ceil(2);
    assert_eq!(params.share_degree, t_local);
    let nbrs: Vec<Vec<u32>> = (0..n).map(|v| harary_neighbours(n, k, v)).collect();
    for (v, nb) in nbrs.iter().enumerate() {
        assert_eq!(params.graph.neighbours(v as u32 + 1), nb.as_slice());
    }

    let mut failures = 0;
    for p in [0.1, 0.3] {
        for trial in 0..1000u64 {
            let plan = DropoutPlan::random(n, p, &mut SeedStream::new(Seed::from_u64(trial)));
            let alive = |u: u32| !plan.victims.contains(&u);
            let holders_alive = |u: u32| nbrs[u as usize - 1].iter().filter(|&&h| alive(h)).count() + alive(u) as usize;
            let ok = (1..=n as u32).all(|u| {
                let needed = alive(u) || nbrs[u as usize - 1].iter().any(|&h| alive(h));
                !needed || holders_alive(u) > t_local
            });
            let seeds = RoundSeeds::new(trial, 0);
            let out = pairwise_round(&c, &params, &seeds, &plan.victims).unwrap();
            assert_eq!(out.aggregate.is_ok(), ok, "p={p} trial {trial} victims {:?}", plan.victims);
            if let Ok(agg) = out.aggregate {
                assert_eq!(agg.values(), oracle_sum(&c, &seeds, &plan.survivors(n)));
            } else {
                failures += 1;
            }
        }
    }
    assert!(failures > 0, "the predicate should be exercised on both sides");
}
