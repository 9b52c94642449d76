//! Acceptance criteria, one result line each. Exits non-zero when any
//! criterion fails.

mod common;

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use common::{cfg, oracle_sum};
use lightsecagg_core::coding::{build_tprivate_mds, combinations, MaskSegments, TPrivateMdsMatrix};
use lightsecagg_core::wire::{Message, Phase, SERVER};
use lightsecagg_core::{Error, FieldVector, Meter, PrimeField};
use lightsecagg_lab::cli::cmd_report;
use lightsecagg_lab::cost::{write_csv, CostPhase, CostReport};
use lightsecagg_lab::experiment::ExperimentSpec;
use lightsecagg_lab::harness::{run_round, Pipeline, Protocol, RoundSpec};
use lightsecagg_lab::local::lsa_round_with;
use lightsecagg_lab::report::SCALE_NOTE;
use lightsecagg_lab::seeds::RoundSeeds;
use lightsecagg_lab::transport::LatencyModel;
use lightsecagg_lab::DropoutPlan;

type Outcome = Result<String, String>;

struct Line {
    id: &'static str,
    name: &'static str,
    outcome: Outcome,
}

fn line(id: &'static str, name: &'static str, outcome: Outcome) -> Line {
    Line { id, name, outcome }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs one criterion group and appends the runtime check.
fn timed(limit_s: f64, f: impl FnOnce() -> Vec<Line>) -> Vec<Line> {
    let t0 = Instant::now();
    let mut lines = f();
    let secs = t0.elapsed().as_secs_f64();
    for l in lines.iter_mut() {
        let within = secs < limit_s;
        l.outcome = match std::mem::replace(&mut l.outcome, Ok(String::new())) {
            Ok(s) if within => Ok(format!("{s}; {secs:.2} s < {limit_s} s")),
            Ok(s) => Err(format!("{s}; took {secs:.2} s, limit {limit_s} s")),
            Err(e) => Err(format!("{e}; {secs:.2} s of {limit_s} s")),
        };
    }
    lines
}

fn recovery(r: &CostReport) -> &lightsecagg_lab::cost::PhaseCost {
    r.server().phase(CostPhase::Recovery)
}

// 1: SecAgg, three users, user 1 drops after upload.
fn secagg_three_users() -> Vec<Line> {
    let d = 1000;
    let run = || -> Outcome {
        let c = cfg(3, 1, 1, 2, d);
        let spec = RoundSpec::new(Protocol::SecAgg, c.clone(), DropoutPlan::explicit(3, vec![1]));
        let r = run_round(&spec).map_err(|e| e.to_string())?;
        let got = r.aggregate().map_err(|e| e.to_string())?.values();
        ensure(got == oracle_sum(&c, &spec.seeds(), &[2, 3]), || "aggregate is not x_2 + x_3".into())?;
        let rec = recovery(&r.cost);
        ensure(rec.prg_streams == 4 && rec.prg_elems == 4 * d as u64, || {
            format!("server expanded {} streams, {} elements; expected 4 and {}", rec.prg_streams, rec.prg_elems, 4 * d)
        })?;
        Ok(format!("4 mask streams, {} = 4d PRG elements, exact x_2 + x_3 at d = {d}", rec.prg_elems))
    };
    vec![line("1", "SecAgg three-user reconstruction", run())]
}

// 2: LightSecAgg with the explicit three-user matrix [[-1, 2, 1], [1, 1, 1]].
fn lightsecagg_three_users() -> Vec<Line> {
    let run = || -> Outcome {
        let q = 7u32;
        let f7 = PrimeField::new(q as u64).map_err(|e| e.to_string())?;
        let m = TPrivateMdsMatrix::three_user_example(&f7).map_err(|e| e.to_string())?;
        // share of user i held by user j: z * c0[j] + n * c1[j]
        let c0 = [q - 1, 2, 1];
        let c1 = [1, 1, 1];
        let oracle = |z: u32, n: u32, j: usize| (z * c0[j] + n * c1[j]) % q;
        let mut meter = Meter::new();
        let mut cases = 0;
        for (z2, n2, z3, n3) in (0..q).flat_map(|a| (0..q).flat_map(move |b| (0..q).flat_map(move |c| (0..q).map(move |e| (a, b, c, e))))) {
            let enc = |z: u32, n: u32| -> Result<Vec<FieldVector>, String> {
                let seg = MaskSegments::from_mask(&f7.vector([z as u64]), vec![f7.vector([n as u64])], 1).map_err(|e| e.to_string())?;
                m.encode(&seg, &mut Meter::new()).map_err(|e| e.to_string())
            };
            let (s2, s3) = (enc(z2, n2)?, enc(z3, n3)?);
            for j in 0..3 {
                ensure(s2[j].values() == [oracle(z2, n2, j)] && s3[j].values() == [oracle(z3, n3, j)], || {
                    format!("encoding differs from the matrix at z=({z2},{z3}) n=({n2},{n3})")
                })?;
            }
            let a2 = (oracle(z2, n2, 1) + oracle(z3, n3, 1)) % q;
            let a3 = (oracle(z2, n2, 2) + oracle(z3, n3, 2)) % q;
            let identity = (a2 + q - a3) % q;
            ensure(identity == (z2 + z3) % q, || format!("difference identity fails at z=({z2},{z3})"))?;
            let before = meter.decodes;
            let out = m
                .decode_aggregate(&[(2, f7.vector([a2 as u64])), (3, f7.vector([a3 as u64]))], &mut meter)
                .map_err(|e| e.to_string())?;
            ensure(out.len() == 1 && out[0].values() == [identity] && meter.decodes == before + 1, || {
                format!("decode at z=({z2},{z3}) gave {:?}", out.iter().map(|v| v.values()).collect::<Vec<_>>())
            })?;
            cases += 1;
        }

        let d = 1000;
        let c = cfg(3, 1, 1, 2, d);
        let field = c.field().map_err(|e| e.to_string())?;
        let seeds = RoundSeeds::new(11, 0);
        let example = TPrivateMdsMatrix::three_user_example(&field).map_err(|e| e.to_string())?;
        let out = lsa_round_with(&c, example, &seeds, &[1], None).map_err(|e| e.to_string())?;
        let agg = out.aggregate.map_err(|e| e.to_string())?;
        ensure(agg.values() == oracle_sum(&c, &seeds, &[2, 3]), || "protocol sum is not x_2 + x_3".into())?;
        ensure(out.server.decodes == 1 && out.server.decoded_elems == d as u64, || {
            format!("{} decodes over {} elements, expected 1 over {d}", out.server.decodes, out.server.decoded_elems)
        })?;
        Ok(format!(
            "z_2 + z_3 = (z~22 + z~32) - (z~23 + z~33) on all {cases} (z, n) at q = 7; protocol run: 1 decode over {d} = d elements"
        ))
    };
    vec![line("2", "LightSecAgg three-user one-shot recovery", run())]
}

// 3: exact recovery for every feasible (N, T, D, U) and victim set, N <= 10.
fn exhaustive_dropouts() -> Vec<Line> {
    let run = || -> Outcome {
        let results: Vec<Result<(usize, usize), String>> = std::thread::scope(|s| {
            let handles: Vec<_> = (1..=10usize).map(|n| s.spawn(move || dropouts_for(n))).collect();
            handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("worker panicked".into()))).collect()
        });
        let mut rounds = 0;
        let mut configs = 0;
        for r in results {
            let (c, k) = r?;
            configs += c;
            rounds += k;
        }
        Ok(format!("{configs} configurations, {rounds} victim sets recovered exactly; U - 1 responders always refused"))
    };
    vec![line("3", "exhaustive dropout resiliency, N <= 10", run())]
}

fn dropouts_for(n: usize) -> Result<(usize, usize), String> {
    let d = 3;
    let seeds = RoundSeeds::new(n as u64, 1);
    let (mut configs, mut rounds) = (0, 0);
    for t in 0..n {
        for dr in 0..n - t {
            for u in t + 1..=n - dr {
                let c = cfg(n, t, dr, u, d);
                let field = c.field().map_err(|e| e.to_string())?;
                let matrix = build_tprivate_mds(&field, n, u, t).map_err(|e| e.to_string())?;
                configs += 1;
                for k in 0..=dr {
                    for idx in combinations(n, k) {
                        let victims: Vec<u32> = idx.iter().map(|&i| i as u32 + 1).collect();
                        let survivors: Vec<u32> = (1..=n as u32).filter(|v| !victims.contains(v)).collect();
                        let tag = || format!("N={n} T={t} D={dr} U={u} victims={victims:?}");
                        let full = lsa_round_with(&c, matrix.clone(), &seeds, &victims, None).map_err(|e| format!("{}: {e}", tag()))?;
                        let agg = full.aggregate.map_err(|e| format!("{}: {e}", tag()))?;
                        ensure(agg.values() == oracle_sum(&c, &seeds, &survivors), || format!("{}: wrong sum", tag()))?;
                        let short = |_: ()| lsa_round_with(&c, matrix.clone(), &seeds, &victims, Some(u - 1));
                        let (a, b) = (short(()).map_err(|e| e.to_string())?, short(()).map_err(|e| e.to_string())?);
                        let refused = |r: &lightsecagg_core::Result<FieldVector>| {
                            matches!(r, Err(Error::InsufficientShares { needed, got }) if *needed == u && *got == u - 1)
                        };
                        ensure(refused(&a.aggregate) && a.aggregate == b.aggregate, || {
                            format!("{}: U - 1 responders gave {:?}", tag(), a.aggregate.as_ref().map(|v| v.values()))
                        })?;
                        rounds += 1;
                    }
                }
            }
        }
    }
    Ok((configs, rounds))
}

// 4: brute-force privacy at q = 7, d = 1, N = 3, U = 2, T = 1.
fn privacy_brute_force() -> Vec<Line> {
    const Q: usize = 7;
    let setup = || -> Result<[[u8; 3]; Q * Q], String> {
        let f = PrimeField::new(Q as u64).map_err(|e| e.to_string())?;
        let m = build_tprivate_mds(&f, 3, 2, 1).map_err(|e| e.to_string())?;
        // table[z * Q + n][j] = share of a user with mask z and noise n, held by j
        let mut table = [[0u8; 3]; Q * Q];
        for z in 0..Q {
            for n in 0..Q {
                let seg = MaskSegments::from_mask(&f.vector([z as u64]), vec![f.vector([n as u64])], 1).map_err(|e| e.to_string())?;
                let enc = m.encode(&seg, &mut Meter::new()).map_err(|e| e.to_string())?;
                for j in 0..3 {
                    table[z * Q + n][j] = enc[j].values()[0] as u8;
                }
            }
        }
        Ok(table)
    };
    let table = match setup() {
        Ok(t) => t,
        Err(e) => return vec![line("4a", "colluder shares independent of masks", Err(e.clone())), line("4b", "view reveals only the aggregate", Err(e))],
    };
    let share = |z: usize, n: usize, j: usize| table[z * Q + n][j] as usize;

    let independence = || -> Outcome {
        for j in 0..3 {
            let mut reference: Option<Vec<u32>> = None;
            for za in 0..Q {
                for zb in 0..Q {
                    let mut hist = vec![0u32; Q * Q];
                    for na in 0..Q {
                        for nb in 0..Q {
                            hist[share(za, na, j) * Q + share(zb, nb, j)] += 1;
                        }
                    }
                    ensure(hist.iter().all(|&c| c == 1), || {
                        format!("colluder {} sees a non-uniform share pair for z = ({za}, {zb})", j + 1)
                    })?;
                    match &reference {
                        None => reference = Some(hist),
                        Some(r) => ensure(r == &hist, || format!("colluder {} distribution depends on z", j + 1))?,
                    }
                }
            }
        }
        Ok("each colluder's received share pair is uniform on F_7^2 for all 49 mask pairs".into())
    };

    let fiber = || -> Outcome {
        let mut views = 0usize;
        for j in 0..3 {
            let (a, b) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let xj = 3usize;
            // view -> (aggregate seen, bad flag, count by x_a)
            let mut map: HashMap<u64, (u8, bool, [u32; Q])> = HashMap::new();
            for xa in 0..Q {
                for xb in 0..Q {
                    for z in 0..Q * Q * Q {
                        let zs = [z % Q, z / Q % Q, z / (Q * Q)];
                        for n in 0..Q * Q * Q {
                            let ns = [n % Q, n / Q % Q, n / (Q * Q)];
                            let x = {
                                let mut x = [0; 3];
                                x[a] = xa;
                                x[b] = xb;
                                x[j] = xj;
                                x
                            };
                            let mut digits = Vec::with_capacity(10);
                            for i in 0..3 {
                                digits.push((x[i] + zs[i]) % Q);
                            }
                            digits.push(zs[j]);
                            digits.push(ns[j]);
                            digits.push(share(zs[a], ns[a], j));
                            digits.push(share(zs[b], ns[b], j));
                            for k in 0..3 {
                                digits.push((0..3).map(|i| share(zs[i], ns[i], k)).sum::<usize>() % Q);
                            }
                            let key = digits.iter().fold(0u64, |acc, &v| acc * Q as u64 + v as u64);
                            let s = ((xa + xb) % Q) as u8;
                            let e = map.entry(key).or_insert((s, false, [0; Q]));
                            if e.0 != s {
                                e.1 = true;
                            }
                            e.2[xa] += 1;
                        }
                    }
                }
            }
            for (view, (_, bad, counts)) in &map {
                ensure(!bad, || format!("colluder {}: view {view} is consistent with two aggregates", j + 1))?;
                ensure(counts.iter().all(|&c| c == counts[0] && c > 0), || {
                    format!("colluder {}: view {view} is not uniform on its fiber: {counts:?}", j + 1)
                })?;
            }
            views += map.len();
        }
        Ok(format!("{views} server+colluder views over 3 colluders; each fixes x_a + x_b and is uniform on its 7-point fiber"))
    };
    vec![
        line("4a", "colluder shares independent of masks", independence()),
        line("4b", "view reveals only the aggregate", fiber()),
    ]
}

fn rank_mod(mut m: Vec<Vec<u64>>, q: u64) -> usize {
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        b %= q;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % q;
            }
            b = b * b % q;
            e >>= 1;
        }
        r
    };
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_multiple_of(q)) else { continue };
        m.swap(rank, p);
        let inv = pow(m[rank][c], q - 2);
        let pivot = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row[c] != 0 {
                let k = row[c] * inv % q;
                for (x, &p) in row.iter_mut().zip(&pivot) {
                    *x = (*x + q * q - k * p) % q;
                }
            }
        }
        rank += 1;
    }
    rank
}

// 5: MDS and T-privacy ranks of the Lagrange matrix over F_257.
fn rank_suite() -> Vec<Line> {
    let run = || -> Outcome {
        let q = 257u64;
        let f = PrimeField::new(q).map_err(|e| e.to_string())?;
        let (mut mats, mut subs) = (0, 0);
        for n in 1..=8 {
            for u in 1..=n {
                for t in 0..u {
                    let m = build_tprivate_mds(&f, n, u, t).map_err(|e| e.to_string())?;
                    let rows: Vec<Vec<u64>> = m.rows().iter().map(|r| r.iter().map(|e| e.value() as u64).collect()).collect();
                    for cols in combinations(n, u) {
                        let sub: Vec<Vec<u64>> = rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
                        ensure(rank_mod(sub, q) == u, || format!("N={n} U={u} T={t}: columns {cols:?} are singular"))?;
                        subs += 1;
                    }
                    for cols in combinations(n, t) {
                        let sub: Vec<Vec<u64>> = rows[u - t..].iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
                        ensure(rank_mod(sub, q) == t, || format!("N={n} U={u} T={t}: bottom rows on {cols:?} lose rank"))?;
                        subs += 1;
                    }
                    ensure(m.check_mds() && m.check_t_private(), || format!("N={n} U={u} T={t}: library rank check disagrees"))?;
                    mats += 1;
                }
            }
        }
        Ok(format!("{mats} matrices, {subs} submatrices at full rank"))
    };
    vec![line("5", "MDS and T-private rank suite, N <= 8, q = 257", run())]
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn sweep_spec(text: &str) -> Result<Vec<RoundSpec>, String> {
    let s = ExperimentSpec::parse(text).map_err(|e| e.to_string())?;
    Ok(s.cells().map_err(|e| e.to_string())?.into_iter().map(|c| c.spec).collect())
}

// 6: recovery op-count slopes in N at p = 0.3, d = 10^4.
fn scaling_laws(reports: &mut Vec<CostReport>) -> Vec<Line> {
    let specs = match sweep_spec("n = [20, 40, 80]\np = 0.3\nprotocols = [lightsecagg, secagg, secagg+]\nd = 10000\ndropout = spread\n") {
        Ok(s) => s,
        Err(e) => return vec![line("6", "scaling sweep", Err(e))],
    };
    let mut pts: HashMap<Protocol, Vec<(f64, f64)>> = HashMap::new();
    let mut norm: Vec<(f64, f64)> = Vec::new();
    for spec in &specs {
        let r = match run_round(spec) {
            Ok(r) if !r.failed() => r,
            Ok(r) => return vec![line("6", "scaling sweep", Err(format!("{:?}", r.aggregate)))],
            Err(e) => return vec![line("6", "scaling sweep", Err(e.to_string()))],
        };
        let c = &spec.config;
        let ops = recovery(&r.cost).field_ops as f64;
        pts.entry(spec.protocol).or_default().push((c.users as f64, ops));
        if spec.protocol == Protocol::LightSecAgg {
            // direct Lagrange decoding: U^2 coefficient work per segment position
            let law = (c.target * c.target * c.segment_len() + (c.users - spec.plan.victims.len()) * c.model_len) as f64;
            norm.push((c.users as f64, ops / law));
        }
        reports.push(r.cost);
    }
    let fmt = |p: &[(f64, f64)]| p.iter().map(|(n, y)| format!("N={n}:{y:.0}")).collect::<Vec<_>>().join(" ");
    let check = |id, name, p: Protocol, lo: f64, hi: f64| {
        let s = slope(&pts[&p]);
        let detail = format!("slope {s:.3}, allowed [{lo}, {hi}]; ops {}", fmt(&pts[&p]));
        line(id, name, if (lo..=hi).contains(&s) { Ok(detail) } else { Err(detail) })
    };
    let mut lines = vec![
        check("6a", "SecAgg recovery ops ~ N^2", Protocol::SecAgg, 1.7, 2.3),
        check("6b", "SecAgg+ recovery ops ~ N log N", Protocol::SecAggPlus, 1.0, 1.4),
        check("6c", "LightSecAgg recovery ops flat in N", Protocol::LightSecAgg, f64::NEG_INFINITY, 0.3),
    ];
    if let Err(e) = &mut lines[2].outcome {
        e.push_str(&format!("; normalized to the direct decoder's U^2 d/(U-T) + |U1| d law the slope is {:.3}", slope(&norm)));
    }
    lines
}

// 7: recovery message size, server intake and offline storage.
fn communication_formulas() -> Vec<Line> {
    let run = || -> Outcome {
        let specs = sweep_spec("n = 10\np = 0.3\nprotocols = lightsecagg\nd = 700\ndropout = spread\n")?;
        let spec = &specs[0];
        let c = &spec.config;
        let (n, u, t, d) = (c.users, c.target, c.privacy, c.model_len);
        ensure((n, u, t) == (10, 7, 5), || format!("unexpected config N={n} U={u} T={t}"))?;
        let per_msg = d.div_ceil(u - t);
        let intake = u * d / (u - t);
        let storage = d + n * d / (u - t);
        let r = run_round(spec).map_err(|e| e.to_string())?;
        r.aggregate().map_err(|e| e.to_string())?;
        let tr = &r.transcript;
        let field = tr.field().map_err(|e| e.to_string())?;
        let outcome = tr.outcome.as_ref().ok_or("no outcome")?;
        let mut sizes = HashMap::new();
        for rec in tr.records.iter().filter(|r| r.phase == Phase::Recovery && r.receiver == SERVER) {
            if let Message::AggregatedShare(v) = rec.message(&field).map_err(|e| e.to_string())? {
                sizes.insert(rec.sender, v.len());
            }
        }
        ensure(sizes.len() == outcome.survivors.len() && sizes.values().all(|&s| s == per_msg), || {
            format!("recovery messages {sizes:?}, expected {per_msg} each")
        })?;
        let got: usize = outcome.decode_set.iter().map(|s| sizes[s]).sum();
        ensure(got == intake && outcome.decode_set.len() == u, || format!("intake {got}, expected {intake}"))?;
        ensure(r.cost.meta.storage.iter().all(|&s| s == storage), || {
            format!("storage {:?}, expected {storage}", r.cost.meta.storage)
        })?;
        Ok(format!("{per_msg} elements per recovery message, intake {intake}, storage {storage} per user at N=10 U=7 T=5 d=700"))
    };
    vec![line("7", "communication and storage accounting", run())]
}

// 8: offline work hidden behind training.
fn overlap() -> Vec<Line> {
    let run = || -> Outcome {
        let base = sweep_spec("n = 20\np = 0.3\nprotocols = lightsecagg\nd = 1000\ndropout = spread\n")?.remove(0);
        let with = |pipeline, delay| {
            let mut s = base.clone();
            s.latency = Some(LatencyModel { base_ms: 2.0, per_mb_ms: 0.0 });
            s.pipeline = pipeline;
            s.training_delay_ms = delay;
            s
        };
        let pilot = run_round(&with(Pipeline::NonOverlapped, 0)).map_err(|e| e.to_string())?;
        let (a, b) = pilot.cost.meta.windows[0];
        let training = (3.0 * (b - a)).ceil() as u64;
        let best = |pipeline| -> Result<(f64, f64, CostReport), String> {
            let mut out: Option<(f64, f64, CostReport)> = None;
            for _ in 0..3 {
                let r = run_round(&with(pipeline, training)).map_err(|e| e.to_string())?;
                r.aggregate().map_err(|e| e.to_string())?;
                let (s, e) = r.cost.meta.windows[0];
                let total = r.cost.meta.round_wall_ms;
                if out.as_ref().is_none_or(|o| total < o.0) {
                    out = Some((total, e - s, r.cost));
                }
            }
            out.ok_or_else(|| "no runs".into())
        };
        let (non, offline, rn) = best(Pipeline::NonOverlapped)?;
        let (over, _, ro) = best(Pipeline::Overlapped)?;
        let (x, y) = (recovery(&rn), recovery(&ro));
        ensure((x.field_ops, x.decodes, x.decoded_elems, x.bytes_in) == (y.field_ops, y.decodes, y.decoded_elems, y.bytes_in), || {
            "recovery counters differ between pipelines".into()
        })?;
        let detail = format!(
            "training {training} ms, offline {offline:.1} ms; non-overlapped {non:.1} ms, overlapped {over:.1} ms, saved {:.1} ms, need >= {:.1} ms",
            non - over,
            0.8 * offline
        );
        ensure(over < non && non - over >= 0.8 * offline, || detail.clone())?;
        Ok(format!("{detail}; recovery counters identical"))
    };
    vec![line("8", "overlapped pipeline hides the offline phase", run())]
}

// 9: U = floor(0.7 N) costs no more than U = N/2 + 1 at N = 40.
fn u_policy() -> Vec<Line> {
    let run = || -> Outcome {
        let ops = |u: &str| -> Result<(usize, u64), String> {
            let spec = sweep_spec(&format!("n = 40\np = 0.3\nprotocols = lightsecagg\nd = 1000\ndropout = spread\nu = {u}\n"))?.remove(0);
            let r = run_round(&spec).map_err(|e| e.to_string())?;
            r.aggregate().map_err(|e| e.to_string())?;
            Ok((spec.config.target, recovery(&r.cost).field_ops))
        };
        let (ua, a) = ops("auto")?;
        let (ub, b) = ops("fixed:21")?;
        let detail = format!("U={ua}: {a} ops, U={ub}: {b} ops");
        ensure(ua == 28 && ub == 21 && a <= b, || detail.clone())?;
        Ok(detail)
    };
    vec![line("9", "U policy ordering at N = 40", run())]
}

// 10: the report states that cloud wall-clock multipliers are out of scope.
fn scale_note(reports: &[CostReport]) -> Vec<Line> {
    let run = || -> Outcome {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("costs.csv");
        write_csv(std::fs::File::create(&path).map_err(|e| e.to_string())?, reports).map_err(|e| e.to_string())?;
        let text = cmd_report(&[path], None).map_err(|e| e.to_string())?;
        ensure(!reports.is_empty() && text.contains(SCALE_NOTE), || "report lacks the scale note".into())?;
        ensure(SCALE_NOTE.contains("not reproduced") && SCALE_NOTE.contains("counters"), || "scale note wording".into())?;
        Ok("report documents that desk-scale timings do not reproduce cloud speedups".into())
    };
    vec![line("10", "scale disclaimer in report", run())]
}

fn main() {
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    let mut emit = |lines: Vec<Line>, out: &mut std::io::StdoutLock| {
        for l in lines {
            let (tag, detail) = match &l.outcome {
                Ok(d) => ("PASS", d.as_str()),
                Err(d) => {
                    failed += 1;
                    ("FAIL", d.as_str())
                }
            };
            let _ = writeln!(out, "[{tag}] {} {}: {detail}", l.id, l.name);
            let _ = out.flush();
        }
    };
    let mut reports = Vec::new();
    emit(timed(1.0, secagg_three_users), &mut out);
    emit(timed(1.0, lightsecagg_three_users), &mut out);
    emit(timed(300.0, exhaustive_dropouts), &mut out);
    emit(timed(120.0, privacy_brute_force), &mut out);
    emit(timed(60.0, rank_suite), &mut out);
    emit(timed(600.0, || scaling_laws(&mut reports)), &mut out);
    emit(timed(60.0, communication_formulas), &mut out);
    emit(timed(120.0, overlap), &mut out);
    emit(timed(120.0, u_policy), &mut out);
    emit(timed(60.0, || scale_note(&reports)), &mut out);
    let _ = writeln!(out, "acceptance: {failed} failed");
    drop(out);
    if failed > 0 {
        std::process::exit(1);
    }
}
