//! Sequential single-threaded drivers for one round of each protocol.
//!
//! These drive the same state machines as the threaded harness but pass
//! messages by hand, which makes exhaustive sweeps over thousands of
//! dropout sets cheap.

use lightsecagg_core::baseline::{PairwiseParams, SecAggServer, SecAggUser};
use lightsecagg_core::coding::{build_tprivate_mds, EncodedMaskShare, TPrivateMdsMatrix};
use lightsecagg_core::lightsecagg::{LsaServer, LsaUser};
use lightsecagg_core::wire::Message;
use lightsecagg_core::{Error, FieldVector, Meter, ProtocolConfig, Result};

use crate::seeds::RoundSeeds;

#[derive(Debug, Clone)]
pub struct LocalOutcome {
    pub survivors: Vec<u32>,
    pub aggregate: Result<FieldVector>,
    pub server: Meter,
}

/// Runs LightSecAgg with `victims` dropping after upload. `responders`
/// caps how many aggregated shares reach the server (all survivors by
/// default), in survivor order.
pub fn lsa_round(
    cfg: &ProtocolConfig,
    seeds: &RoundSeeds,
    victims: &[u32],
    responders: Option<usize>,
) -> Result<LocalOutcome> {
    let matrix = build_tprivate_mds(&cfg.field()?, cfg.users, cfg.target, cfg.privacy)?;
    lsa_round_with(cfg, matrix, seeds, victims, responders)
}

pub fn lsa_round_with(
    cfg: &ProtocolConfig,
    matrix: TPrivateMdsMatrix,
    seeds: &RoundSeeds,
    victims: &[u32],
    responders: Option<usize>,
) -> Result<LocalOutcome> {
    let field = cfg.field()?;
    let n = cfg.users as u32;
    let mut users = (1..=n)
        .map(|u| LsaUser::new(cfg, u, matrix.clone(), seeds.round, seeds.lsa_mask(u), seeds.lsa_noise(u)))
        .collect::<Result<Vec<_>>>()?;
    let mut inbox: Vec<Vec<EncodedMaskShare>> = vec![Vec::new(); cfg.users];
    for u in users.iter_mut() {
        for (to, msg) in u.offline_round()? {
            match msg {
                Message::EncodedShare(s) => inbox[to as usize - 1].push(s),
                _ => return Err(Error::Malformed("offline message")),
            }
        }
    }
    for (u, shares) in users.iter_mut().zip(inbox) {
        for s in shares {
            u.receive_share(s)?;
        }
    }
    let mut server = LsaServer::new(cfg, matrix)?;
    for u in users.iter_mut() {
        let x = seeds.model(&field, u.id(), cfg.model_len)?;
        match u.mask_weighted_model(&x, cfg.weight(u.id()))? {
            Message::MaskedModel(m) => server.receive_masked_model(u.id(), m)?,
            _ => return Err(Error::Malformed("upload message")),
        }
    }
    let survivors: Vec<u32> = (1..=n).filter(|u| !victims.contains(u)).collect();
    server.close_upload(&survivors)?;
    let limit = responders.unwrap_or(survivors.len());
    for &u in survivors.iter().take(limit) {
        match users[u as usize - 1].aggregate_shares(&survivors)? {
            Message::AggregatedShare(v) => server.receive_aggregated_share(u, v)?,
            _ => return Err(Error::Malformed("recovery message")),
        }
    }
    let before = server.meter;
    let aggregate = server.recover();
    Ok(LocalOutcome { survivors, aggregate, server: server.meter - before })
}

/// Runs SecAgg or SecAgg+ (chosen by `params`) with `victims` dropping
/// after upload.
pub fn pairwise_round(
    cfg: &ProtocolConfig,
    params: &PairwiseParams,
    seeds: &RoundSeeds,
    victims: &[u32],
) -> Result<LocalOutcome> {
    let field = cfg.field()?;
    let n = cfg.users as u32;
    let mut users = (1..=n)
        .map(|u| SecAggUser::new(cfg, u, params.clone(), seeds.secagg(u)))
        .collect::<Result<Vec<_>>>()?;
    let mut server = SecAggServer::new(cfg, params.clone())?;
    for u in &users {
        match u.public_key() {
            Message::PublicKey(pk) => server.receive_public_key(u.id(), pk)?,
            _ => return Err(Error::Malformed("key message")),
        }
    }
    let mut inbox: Vec<Vec<(u32, FieldVector, FieldVector)>> = vec![Vec::new(); cfg.users];
    for u in users.iter_mut() {
        let keys = match server.public_key_list(u.id()) {
            Message::PublicKeyList(k) => k,
            _ => return Err(Error::Malformed("key list")),
        };
        for (to, msg) in u.receive_public_keys(&keys)? {
            if let Message::SeedShares { owner, seed_share, key_share } = msg {
                inbox[to as usize - 1].push((owner, seed_share, key_share));
            }
        }
    }
    for (u, shares) in users.iter_mut().zip(inbox) {
        for (o, s, k) in shares {
            u.receive_seed_shares(o, s, k)?;
        }
    }
    for u in users.iter_mut() {
        let x = seeds.model(&field, u.id(), cfg.model_len)?;
        let x = field.scale(&x, field.elem(cfg.weight(u.id())), &mut Meter::new());
        match u.mask_model(&x)? {
            Message::MaskedModel(m) => server.receive_masked_model(u.id(), m)?,
            _ => return Err(Error::Malformed("upload message")),
        }
    }
    let survivors: Vec<u32> = (1..=n).filter(|u| !victims.contains(u)).collect();
    let (alive, dropped) = match server.close_upload(&survivors)? {
        Message::UnmaskRequest { survivors, dropped } => (survivors, dropped),
        _ => return Err(Error::Malformed("unmask request")),
    };
    for &u in &survivors {
        match users[u as usize - 1].unmask(&alive, &dropped)? {
            Message::UnmaskResponse { seed_shares, key_shares } => {
                server.receive_unmask_response(u, seed_shares, key_shares)?
            }
            _ => return Err(Error::Malformed("unmask response")),
        }
    }
    let before = server.meter;
    let aggregate = server.recover();
    Ok(LocalOutcome { survivors, aggregate, server: server.meter - before })
}

/// Weighted field sum of the survivors' models, computed directly.
pub fn expected_sum(cfg: &ProtocolConfig, seeds: &RoundSeeds, survivors: &[u32]) -> Result<FieldVector> {
    let f = cfg.field()?;
    let mut acc = f.zeros(cfg.model_len);
    for &u in survivors {
        let x = seeds.model(&f, u, cfg.model_len)?;
        f.scaled_add_assign(&mut acc, f.elem(cfg.weight(u)), &x, &mut Meter::new())?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lightsecagg_core::baseline::default_degree;

    fn cfg(n: usize, t: usize, dr: usize, u: usize, d: usize) -> ProtocolConfig {
        ProtocolConfig { users: n, privacy: t, dropout: dr, target: u, model_len: d, modulus: 2_147_483_647, weights: None }
    }

    #[test]
    fn lsa_matches_direct_sum() {
        let c = cfg(6, 2, 2, 4, 9);
        let s = RoundSeeds::new(3, 0);
        let out = lsa_round(&c, &s, &[2, 5], None).unwrap();
        assert_eq!(out.aggregate.unwrap(), expected_sum(&c, &s, &[1, 3, 4, 6]).unwrap());
        assert_eq!(out.server.decodes, 1);
    }

    #[test]
    fn lsa_short_of_responders_fails() {
        let c = cfg(6, 2, 2, 4, 9);
        let out = lsa_round(&c, &RoundSeeds::new(3, 0), &[], Some(3)).unwrap();
        assert!(matches!(out.aggregate, Err(Error::InsufficientShares { needed: 4, got: 3 })));
    }

    #[test]
    fn pairwise_variants_match_direct_sum() {
        let c = cfg(9, 3, 3, 6, 5);
        let s = RoundSeeds::new(8, 1);
        let full = PairwiseParams::secagg(&c);
        let out = pairwise_round(&c, &full, &s, &[4, 7]).unwrap();
        assert_eq!(out.aggregate.unwrap(), expected_sum(&c, &s, &out.survivors).unwrap());
        let sparse = PairwiseParams::secagg_plus(&c, default_degree(9)).unwrap();
        let out = pairwise_round(&c, &sparse, &s, &[1, 5]).unwrap();
        assert_eq!(out.aggregate.unwrap(), expected_sum(&c, &s, &out.survivors).unwrap());
    }

    #[test]
    fn weights_scale_the_sum() {
        let mut c = cfg(4, 1, 1, 3, 4);
        c.weights = Some(vec![1, 2, 3, 4]);
        let s = RoundSeeds::new(1, 0);
        let f = c.field().unwrap();
        let lsa = lsa_round(&c, &s, &[2], None).unwrap().aggregate.unwrap();
        let pw = pairwise_round(&c, &PairwiseParams::secagg(&c), &s, &[2]).unwrap().aggregate.unwrap();
        let mut manual = f.zeros(4);
        for (u, w) in [(1u32, 1u64), (3, 3), (4, 4)] {
            for _ in 0..w {
                f.add_assign(&mut manual, &s.model(&f, u, 4).unwrap(), &mut Meter::new()).unwrap();
            }
        }
        assert_eq!(lsa, manual);
        assert_eq!(pw, manual);
    }
}
