//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p zkmech --test acceptance`.

use std::collections::{BTreeMap, HashMap};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, RngCore};

use zkmech::analysis::noise::{truncated_pmf, NoiseSampler};
use zkmech::analysis::{
    ex3_ic_lemma_check, groves_extract_weights, groves_outcome, noise_ratio_report, transcript_distribution_equality,
    GrovesInstance,
};
use zkmech::codec::{transcript_from_str, transcript_to_string, Frame, Transcript};
use zkmech::commit::{binding_break_to_dlog, commit_bit};
use zkmech::group::{derive_generators, seeded_rng, GroupParams, RefString};
use zkmech::mpc::run_mpc;
use zkmech::protocols::{
    run_example, run_session, verify_transcript, Buyer, ExampleKind, Mechanism, MechanismSpec, Outcome, Seller,
};
use zkmech::sigma::{
    all_coin_vectors, cds_extract, cds_prove_first_with, cds_simulate_with, simulation_coin_count, CdsStatement,
    CdsWitness, Cell, ProverCoins,
};

type Check = Result<String, String>;

/// Name, check and time limit in seconds.
type Criterion = (&'static str, fn() -> Check, u64);

/// 256-bit safe prime, the output of `gen_params_seeded(256, b"zkmech acceptance")`.
const Q256: &str = "e486cbffe1a2506b4db0fb86c11aeb6b46a09dd0b04522e2799d8275c7100153";

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn toy(q: u32, seed: &[u8]) -> RefString {
    let params = if q == 7 { GroupParams::toy7() } else { GroupParams::toy23() };
    derive_generators(&params, seed).unwrap()
}

fn mid_group() -> RefString {
    let q = BigUint::parse_bytes(Q256.as_bytes(), 16).unwrap();
    derive_generators(&GroupParams::from_safe_prime(q).unwrap(), b"acceptance").unwrap()
}

fn spec(m: Mechanism, h: u64) -> MechanismSpec {
    MechanismSpec::new(m, h).unwrap()
}

/// Runs a session, checks its transcript independently and returns both.
fn honest(rf: &RefString, sp: &MechanismSpec, report: &[u64], seed: u64) -> Result<(Outcome, Transcript), String> {
    let tag = seed.to_be_bytes();
    let (o, t) = run_example(rf, sp, report, seeded_rng(b"seller", &tag), seeded_rng(b"buyer", &tag))
        .map_err(|e| format!("{sp:?} report {report:?}: {e}"))?;
    let replay = verify_transcript(Some(rf), &t).map_err(|e| format!("{sp:?} report {report:?}: replay: {e}"))?;
    ensure(replay == o, || format!("{sp:?} report {report:?}: replay outcome differs"))?;
    Ok((o, t))
}

fn c1_completeness() -> Check {
    let rf = toy(23, b"acceptance");
    let mut runs = 0u64;
    let mut seed = 0u64;
    let mut next = || {
        seed += 1;
        seed
    };
    let mut expect_run = |sp: &MechanismSpec, report: &[u64], seed: u64| -> Result<(), String> {
        let (o, _) = honest(&rf, sp, report, seed)?;
        let want = sp.outcome(report, o.lottery_draw.unwrap_or(0)).unwrap();
        ensure(o == want, || format!("{sp:?} report {report:?}: got {o}, mechanism says {want}"))?;
        runs += 1;
        Ok(())
    };
    for s in 0..8 {
        for v in 0..8 {
            expect_run(&spec(Mechanism::Ex1 { s }, 8), &[v], next())?;
        }
    }
    for s in 0..4 {
        for v1 in 0..4 {
            for v2 in 0..4 {
                expect_run(&spec(Mechanism::Ex1Multi { s, n_buyers: 2 }, 4), &[v1, v2], next())?;
            }
        }
    }
    for s1 in 0..8 {
        for s2 in 0..8 {
            let sp = spec(Mechanism::Ex2 { s1, s2 }, 8);
            for v1 in 0..8 {
                for v2 in 0..8 {
                    expect_run(&sp, &[v1, v2], next())?;
                }
            }
        }
    }
    for s1 in 0..8 {
        for s2 in s1..8 {
            let sp = spec(Mechanism::Ex3 { s1, s2 }, 8);
            for v in 0..8 {
                expect_run(&sp, &[v], next())?;
            }
        }
    }
    // Ex4 over every seller coin x and buyer mask y.
    let mut ex4 = 0;
    for s in 0..4 {
        let sp = spec(Mechanism::Ex4 { s }, 4);
        for v in 0..4 {
            for x in 0..4u64 {
                for y in 0..4u64 {
                    let tag = [s as u8, v as u8, x as u8, y as u8];
                    let mut seller =
                        Seller::new(rf.clone(), sp.clone(), seeded_rng(b"seller4", &tag)).unwrap().with_coin(x);
                    let mut buyer = Buyer::new(rf.clone(), ExampleKind::Ex4, 4, vec![v], seeded_rng(b"buyer4", &tag))
                        .unwrap()
                        .with_mask(y);
                    let (o, t) = run_session(&mut seller, &mut buyer).map_err(|e| format!("ex4 s={s} v={v}: {e}"))?;
                    let want = sp.outcome(&[v], x ^ y).unwrap();
                    ensure(o == want, || format!("ex4 s={s} v={v} x={x} y={y}: got {o}, want {want}"))?;
                    ensure(verify_transcript(Some(&rf), &t).ok() == Some(o), || format!("ex4 s={s} v={v}: replay"))?;
                    ex4 += 1;
                }
            }
        }
    }
    Ok(format!("{} runs verified", runs + ex4))
}

fn shapes(rf: &RefString) -> Vec<(&'static str, CdsStatement)> {
    let p = rf.params();
    let e = |x: u32| p.pow(rf.g(), &BigUint::from(x));
    let cell = |b: &zkmech::group::GroupElement, t: u32| Cell::new(b.clone(), e(t));
    let (g, h) = (rf.g(), rf.h());
    vec![
        ("1x1", CdsStatement::new(vec![vec![cell(g, 2)]]).unwrap()),
        ("2x1", CdsStatement::new(vec![vec![cell(h, 1)], vec![cell(g, 2)]]).unwrap()),
        ("2x2", CdsStatement::new(vec![vec![cell(g, 1), cell(h, 2)], vec![cell(h, 1), cell(g, 1)]]).unwrap()),
        ("{1,1,2}", CdsStatement::new(vec![vec![cell(g, 2)], vec![cell(h, 2)], vec![cell(g, 1), cell(h, 1)]]).unwrap()),
    ]
}

fn c2_special_soundness() -> Check {
    let rf = toy(7, b"acceptance");
    let params = rf.params();
    let p = params.p().to_u64().unwrap();
    let mut pairs = 0u64;
    for (name, stmt) in shapes(&rf) {
        // The simulator over all coins and challenges lists every accepting
        // transcript exactly once.
        let mut by_first: HashMap<_, Vec<(BigUint, _)>> = HashMap::new();
        for beta in 1..=p {
            let beta = BigUint::from(beta);
            for flat in all_coin_vectors(p, simulation_coin_count(&stmt)) {
                let (first, resp) = cds_simulate_with(params, &stmt, &beta, &flat).unwrap();
                by_first.entry(first).or_default().push((beta.clone(), resp));
            }
        }
        for (first, ts) in &by_first {
            for (b1, r1) in ts {
                for (b2, r2) in ts {
                    if b1 == b2 {
                        continue;
                    }
                    let wit =
                        cds_extract(params, &stmt, first, (b1, r1), (b2, r2)).map_err(|e| format!("{name}: {e}"))?;
                    ensure(stmt.is_satisfied_by(params, &wit), || format!("{name}: extracted witness is invalid"))?;
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} transcript pairs extracted"))
}

fn c3_hvzk() -> Check {
    let rf = toy(7, b"acceptance");
    let params = rf.params();
    let p = params.p().to_u64().unwrap();
    let e = |x: u32| params.pow(rf.g(), &BigUint::from(x));
    let schnorr = CdsStatement::schnorr(rf.g().clone(), e(2)).unwrap();
    let two_row =
        CdsStatement::new(vec![vec![Cell::new(rf.h().clone(), e(1))], vec![Cell::new(rf.g().clone(), e(2))]]).unwrap();
    let h_log = (1..p).find(|&x| params.pow(rf.g(), &BigUint::from(x)) == *rf.h()).unwrap();
    let cases = [
        ("schnorr", schnorr, CdsWitness { row: 0, exps: vec![BigUint::from(2u32)] }),
        // h^x = g^1 with x = 1/log_g h.
        ("2-row", two_row, CdsWitness { row: 0, exps: vec![params.exp_inv(&BigUint::from(h_log)).unwrap()] }),
    ];
    let mut total = 0;
    for (name, stmt, wit) in cases {
        ensure(stmt.is_satisfied_by(params, &wit), || format!("{name}: bad witness"))?;
        let mut real: BTreeMap<Vec<BigUint>, u64> = BTreeMap::new();
        let mut sim: BTreeMap<Vec<BigUint>, u64> = BTreeMap::new();
        let flatten = |first: &zkmech::sigma::SigmaFirst, beta: &BigUint, resp: &zkmech::sigma::SigmaResponse| {
            let mut v: Vec<BigUint> = first.alphas.iter().flatten().map(|a| a.value().clone()).collect();
            v.push(beta.clone());
            v.extend(resp.betas.iter().cloned());
            v.extend(resp.gammas.iter().flatten().cloned());
            v
        };
        for beta in 1..=p {
            let beta = BigUint::from(beta);
            for flat in all_coin_vectors(p, ProverCoins::free_count(&stmt, wit.row)) {
                let coins = ProverCoins::from_flat(&stmt, wit.row, &flat);
                let (first, state) = cds_prove_first_with(params, &stmt, &wit, coins).unwrap();
                let resp = state.respond(&beta).unwrap();
                *real.entry(flatten(&first, &beta, &resp)).or_default() += 1;
            }
            for flat in all_coin_vectors(p, simulation_coin_count(&stmt)) {
                let (first, resp) = cds_simulate_with(params, &stmt, &beta, &flat).unwrap();
                *sim.entry(flatten(&first, &beta, &resp)).or_default() += 1;
            }
        }
        ensure(real == sim, || format!("{name}: distributions differ"))?;
        total += real.values().sum::<u64>();
    }
    Ok(format!("{total} transcripts compared"))
}

fn c4_hiding() -> Check {
    for q in [7, 23] {
        let rf = toy(q, b"acceptance");
        let params = rf.params();
        let p = params.p().to_u64().unwrap();
        let set = |bit: bool| {
            let mut v: Vec<BigUint> =
                (1..p).map(|r| commit_bit(&rf, bit, &BigUint::from(r)).unwrap().0.value().clone()).collect();
            v.sort();
            v
        };
        let mut nonzero: Vec<BigUint> =
            params.enumerate_elements().into_iter().filter(|x| !x.is_identity()).map(|x| x.value().clone()).collect();
        nonzero.sort();
        ensure(set(false) == nonzero && set(true) == nonzero, || format!("q={q}: commitment multisets differ"))?;
    }
    Ok("bit 0 and bit 1 both give G minus 1".into())
}

fn c5_strong_hiding() -> Check {
    let rf = toy(7, b"acceptance");
    let configs: [(Mechanism, u64, Vec<u64>); 6] = [
        (Mechanism::Ex1 { s: 1 }, 2, vec![0]),
        (Mechanism::Ex1 { s: 1 }, 2, vec![1]),
        (Mechanism::Ex1 { s: 3 }, 4, vec![1]),
        (Mechanism::Ex1 { s: 2 }, 4, vec![0]),
        (Mechanism::Ex2 { s1: 0, s2: 1 }, 2, vec![1, 1]),
        (Mechanism::Ex2 { s1: 1, s2: 1 }, 2, vec![0, 0]),
    ];
    for (m, h, report) in &configs {
        let sp = spec(m.clone(), *h);
        let eq = transcript_distribution_equality(&rf, &sp, report, 50_000_000).map_err(|e| format!("{m:?}: {e}"))?;
        ensure(eq, || format!("{m:?} H={h} report {report:?}: real and simulated views differ"))?;
    }
    Ok(format!("{} configurations equal", configs.len()))
}

fn c6_binding() -> Check {
    let params = GroupParams::toy23();
    let mut rng = seeded_rng(b"acceptance", b"binding");
    let g = params.generator();
    for i in 0..1000 {
        let rho = loop {
            let r = params.exp_sample(&mut rng);
            if r != BigUint::from(1u32) {
                break r;
            }
        };
        let h = params.pow(&g, &rho);
        let rf = RefString::with_generators(params.clone(), b"planted".to_vec(), g.clone(), h.clone()).unwrap();
        let r_one = params.exp_sample(&mut rng);
        let r_zero = params.mul_exp(&rho, &r_one);
        let ell = binding_break_to_dlog(&rf, &r_zero, &r_one).map_err(|e| format!("trial {i}: {e}"))?;
        ensure(params.pow(&g, &ell) == h, || format!("trial {i}: g^l != h"))?;
    }
    Ok("1000 double openings reduced".into())
}

fn c7_ic_lemma() -> Check {
    ensure(ex3_ic_lemma_check(8).map_err(|e| e.to_string())?, || "lemma check returned false".into())?;
    Ok("64 price pairs agree".into())
}

fn c8_payment_law() -> Check {
    let rf = toy(23, b"acceptance");
    for s in 0..4 {
        let sp = spec(Mechanism::Ex4 { s }, 4);
        let mut paid = 0;
        for x in 0..4 {
            let mut seller =
                Seller::new(rf.clone(), sp.clone(), seeded_rng(b"law", &[s as u8, x as u8])).unwrap().with_coin(x);
            let mut buyer = Buyer::new(rf.clone(), ExampleKind::Ex4, 4, vec![3], seeded_rng(b"law-b", &[s as u8]))
                .unwrap()
                .with_mask(0);
            let (o, _) = run_session(&mut seller, &mut buyer).map_err(|e| e.to_string())?;
            ensure(o.payment == 0 || o.payment == 4, || format!("s={s}: payment {}", o.payment))?;
            paid += (o.payment == 4) as u64;
        }
        ensure(paid == s, || format!("s={s}: {paid} of 4 draws pay H"))?;
    }
    Ok("exactly s of 4 draws pay H".into())
}

fn c9_noise() -> Check {
    let (alpha, n, draws) = (0.9, 50i64, 1_000_000usize);
    let pmf = truncated_pmf(alpha, -n, n).map_err(|e| e.to_string())?;
    let sampler = NoiseSampler::new(alpha, (-n, n)).map_err(|e| e.to_string())?;
    let mut rng = seeded_rng(b"acceptance", b"noise");
    let mut counts = vec![0u64; pmf.len()];
    for _ in 0..draws {
        counts[(sampler.sample(&mut rng) + n) as usize] += 1;
    }
    // Interior bins exclude the two window ends.
    for i in 1..pmf.len() - 1 {
        let (c, p) = (counts[i] as f64, pmf[i]);
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        ensure((c - draws as f64 * p).abs() <= 3.0 * sd, || {
            format!("bin {}: {c} vs {}", i as i64 - n, draws as f64 * p)
        })?;
    }
    for ell in 1..=3 {
        let r = noise_ratio_report(0.1, ell, n).map_err(|e| e.to_string())?;
        let want = ell as f64 * 0.9f64.ln();
        for b in r.bins.iter().filter(|b| !b.boundary && b.y >= ell as i64) {
            let got = b.log_ratio.ok_or("interior bin without ratio")?;
            ensure((got - want).abs() <= 1e-9, || format!("ell={ell} y={}: {got} vs {want}", b.y))?;
        }
    }
    Ok("99 interior bins within 3 sigma".into())
}

fn random_rational<R: RngCore>(rng: &mut R, max: i64) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(0..=max)), BigInt::from(rng.gen_range(1..=max)))
}

fn c10_groves() -> Check {
    let mut rng = seeded_rng(b"acceptance", b"groves");
    let mut done = 0;
    while done < 500 {
        let raw: Vec<BigRational> = (0..3)
            .map(|_| BigRational::new(BigInt::from(rng.gen_range(1..=50)), BigInt::from(rng.gen_range(1..=50))))
            .collect();
        let total: BigRational = raw.iter().sum();
        let w: Vec<BigRational> = raw.iter().map(|x| x / &total).collect();
        let t: Vec<Vec<BigRational>> =
            (0..3).map(|_| (0..4).map(|_| random_rational(&mut rng, 20)).collect()).collect();
        if t.iter().flatten().all(|x| *x == BigRational::from_integer(0.into())) {
            continue;
        }
        let inst = GrovesInstance::new(w.clone(), t.clone()).map_err(|e| e.to_string())?;
        let out = groves_outcome(&inst);
        let back = groves_extract_weights(&t, &out).map_err(|e| format!("instance {done}: {e}"))?;
        ensure(back == w, || format!("instance {done}: recovered {back:?}, want {w:?}"))?;
        done += 1;
    }
    Ok("500 weight vectors recovered exactly".into())
}

fn c11_mpc() -> Check {
    let rf = mid_group();
    let mut seller_rng = seeded_rng(b"acceptance", b"mpc-seller");
    let mut buyer_rng = seeded_rng(b"acceptance", b"mpc-buyer");
    for s in 0..8 {
        for v in 0..8 {
            let o = run_mpc(&rf, s, v, 8, &mut seller_rng, &mut buyer_rng).map_err(|e| format!("s={s} v={v}: {e}"))?;
            ensure(o.trade == (v >= s), || format!("s={s} v={v}: trade={}", o.trade))?;
            ensure(!o.trade || o.payment == s, || format!("s={s} v={v}: paid {}", o.payment))?;
        }
    }
    Ok("64 runs trade iff v >= s".into())
}

/// Flips bit `bit` of the encoded frame `index` and re-reads the text.
fn mutate(t: &Transcript, index: usize, bit: usize) -> Option<Transcript> {
    let mut text = String::new();
    for line in transcript_to_string(t).lines().enumerate().map(|(i, l)| {
        if i == index + 1 {
            let mut bytes = hex::decode(l).unwrap();
            bytes[bit / 8] ^= 1 << (bit % 8);
            hex::encode(bytes)
        } else {
            l.to_string()
        }
    }) {
        text.push_str(&line);
        text.push('\n');
    }
    transcript_from_str(&text).ok()
}

fn c12_tamper() -> Check {
    let rf = mid_group();
    let bases = [
        honest(&rf, &spec(Mechanism::Ex1 { s: 5 }, 8), &[3], 1)?.1,
        honest(&rf, &spec(Mechanism::Ex1 { s: 5 }, 8), &[6], 2)?.1,
        honest(&rf, &spec(Mechanism::Ex3 { s1: 2, s2: 5 }, 8), &[7], 3)?.1,
        honest(&rf, &spec(Mechanism::Ex3 { s1: 1, s2: 3 }, 8), &[5], 4)?.1,
        honest(&rf, &spec(Mechanism::Ex3 { s1: 1, s2: 2 }, 8), &[7], 5)?.1,
    ];
    let mut rng = seeded_rng(b"acceptance", b"tamper");
    let mut parse_rejects = 0;
    for i in 0..500 {
        let t = &bases[i % bases.len()];
        let index = rng.gen_range(0..t.frames.len());
        let bits = Frame::encode(&t.frames[index]).len() * 8;
        let bit = rng.gen_range(0..bits);
        match mutate(t, index, bit) {
            None => parse_rejects += 1,
            Some(m) => {
                if let Ok(o) = verify_transcript(None, &m) {
                    return Err(format!("mutant {i} (frame {index}, bit {bit}) accepted with outcome {o}"));
                }
            }
        }
    }
    Ok(format!("500 mutants rejected ({parse_rejects} at parse)"))
}

fn c13_performance() -> Check {
    let rf = derive_generators(&GroupParams::rfc3526_2048(), b"acceptance").unwrap();
    let h = 1u64 << 16;
    // s = v + 1 = 2^16 - 1 makes every bound bit 1: the largest proof.
    let sp = spec(Mechanism::Ex1 { s: h - 1 }, h);
    let (o, t) = honest(&rf, &sp, &[h - 2], 13)?;
    ensure(!o.trade, || "expected no trade".into())?;
    Ok(format!("{} frames", t.frames.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("completeness", c1_completeness, 60),
        ("sigma special soundness", c2_special_soundness, 10),
        ("perfect HVZK", c3_hvzk, 10),
        ("perfect hiding of commitments", c4_hiding, 1),
        ("strong-hiding simulation", c5_strong_hiding, 120),
        ("binding reduction", c6_binding, 5),
        ("two-part pricing IC lemma", c7_ic_lemma, 5),
        ("randomized payment law", c8_payment_law, 5),
        ("geometric noise", c9_noise, 30),
        ("Groves weight recovery", c10_groves, 10),
        ("MPC correctness", c11_mpc, 10),
        ("tamper resistance", c12_tamper, 60),
        ("performance smoke", c13_performance, 60),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let over = took > Duration::from_secs(*limit);
        let (verdict, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; exceeded {limit} s")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {verdict} {name} [{:.2} s, limit {limit} s]: {detail}", i + 1, took.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
