mod common;

use common::cfg;
use lightsecagg_core::lightsecagg::regenerate_mask;
use lightsecagg_core::wire::{Envelope, Message, Phase, SERVER};
use lightsecagg_lab::harness::{run_round, Protocol, RoundSpec};
use lightsecagg_lab::transcript::RoundTranscript;
use lightsecagg_lab::verify::{render, server_intake_formula, verify_round, verify_transcript};
use lightsecagg_lab::{DropoutPlan, Violation};

#[test]
fn healthy_rounds_verify_clean() {
    let c = cfg(7, 2, 3, 4, 10);
    let plan = DropoutPlan::explicit(7, vec![2, 7]);
    for p in Protocol::ALL {
        let r = run_round(&RoundSpec::new(p, c.clone(), plan.clone())).unwrap();
        assert_eq!(verify_round(&r.transcript, &c, &plan), vec![], "{}", p.name());
        let back = RoundTranscript::from_bytes(&r.transcript.to_bytes()).unwrap();
        assert_eq!(render(&verify_transcript(&back)), "ok\n");
    }
}

#[test]
fn raw_mask_upload_is_flagged() {
    let c = cfg(5, 1, 2, 3, 9);
    let spec = RoundSpec::new(Protocol::LightSecAgg, c.clone(), DropoutPlan::none());
    let mut t = run_round(&spec).unwrap().transcript;
    let field = t.field().unwrap();
    let z1 = regenerate_mask(&field, spec.seeds().lsa_mask(1), c.model_len);
    let i = t.records.iter().position(|r| r.phase == Phase::Upload && r.sender == 1 && r.receiver == SERVER).unwrap();
    t.records[i].bytes = Envelope::new(t.header.round, Phase::Upload, 1, SERVER, &Message::MaskedModel(z1)).encode();
    let v = verify_transcript(&t);
    assert!(v.contains(&Violation::MaskLeak { index: i, sender: 1, receiver: SERVER, owner: 1 }), "{v:?}");
}

#[test]
fn wrong_config_is_a_header_mismatch() {
    let c = cfg(4, 1, 1, 3, 6);
    let plan = DropoutPlan::explicit(4, vec![4]);
    let r = run_round(&RoundSpec::new(Protocol::SecAgg, c.clone(), plan.clone())).unwrap();
    let other = cfg(4, 1, 1, 3, 7);
    assert!(verify_round(&r.transcript, &other, &plan).contains(&Violation::HeaderMismatch("config")));
    assert!(verify_round(&r.transcript, &c, &DropoutPlan::none()).contains(&Violation::HeaderMismatch("victims")));
}

#[test]
fn recovery_messages_carry_one_segment() {
    let c = cfg(10, 5, 3, 7, 700);
    let plan = DropoutPlan::explicit(10, vec![1, 4, 8]);
    let r = run_round(&RoundSpec::new(Protocol::LightSecAgg, c.clone(), plan)).unwrap();
    let t = &r.transcript;
    let field = t.field().unwrap();
    let sizes: Vec<usize> = t
        .records
        .iter()
        .filter(|r| r.phase == Phase::Recovery && r.receiver == SERVER)
        .map(|r| r.message(&field).unwrap().field_elements())
        .collect();
    assert_eq!(sizes, vec![350; 7]);
    assert_eq!(server_intake_formula(&c), 2450);
    let decode = &t.outcome.as_ref().unwrap().decode_set;
    assert_eq!(decode.len(), 7);
    assert_eq!(verify_transcript(t), vec![]);
}
