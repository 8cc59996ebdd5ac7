//! Turns a seller who can break binding into a discrete-log solver.
//!
//! The driver plays the single-price game against a rewindable seller
//! strategy: it commits once, then replays the evaluation for every possible
//! report, and answers every proof with two different challenges. Openings
//! seen in reveals and openings pulled out of proofs by the extractor are
//! pooled per committed bit; a bit opened both ways yields `log_g h`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::commit::{
    binding_break_to_dlog, commit_int, to_bits, verify_opening, BitCommitment, BitOpening, IntCommitment,
};
use crate::error::Result;
use crate::gadgets::{ge_public_statements, ge_public_witnesses};
use crate::group::RefString;
use crate::sigma::{
    cds_extract, cds_prove_first_with, cds_verify, CdsStatement, CdsWitness, ProverCoins, SigmaFirst, SigmaResponse,
};

/// What the seller sends after hearing report `v`.
#[derive(Clone, Debug)]
pub enum SellerMove {
    /// Opens the price, claiming trade.
    Reveal(Vec<BitOpening>),
    /// Claims `s >= bound`: one first message per comparison statement.
    Prove { bound: u64, firsts: Vec<SigmaFirst> },
}

/// A seller the driver can rewind by cloning.
pub trait SellerStrategy: Clone {
    fn commit(&mut self, rf: &RefString, width: usize) -> IntCommitment;
    fn evaluate(&mut self, rf: &RefString, v: u64) -> SellerMove;
    /// Answers the challenges of a pending proof; `None` gives up.
    fn respond(&mut self, rf: &RefString, challenges: &[BigUint]) -> Option<Vec<SigmaResponse>>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttackResult {
    /// `log_g h`, checked.
    Extracted(BigUint),
    /// Every opening the strategy produced was consistent.
    Failure,
}

#[derive(Default)]
struct Pool {
    zero: Option<BigUint>,
    one: Option<BigUint>,
}

/// Plays against `strategy` for prices below `h` (a power of two).
pub fn commitment_attack_driver<S: SellerStrategy>(rf: &RefString, h: u64, mut strategy: S) -> Result<AttackResult> {
    let width = crate::protocols::mechanism::width_of(h)?;
    let com = strategy.commit(rf, width);
    if com.width() != width {
        return Ok(AttackResult::Failure);
    }
    let mut pools: BTreeMap<usize, Pool> = BTreeMap::new();
    let mut record = |k: usize, op: &BitOpening| {
        let pool = pools.entry(k).or_default();
        let slot = if op.bit { &mut pool.one } else { &mut pool.zero };
        slot.get_or_insert_with(|| op.r.clone());
    };
    let (b1, b2) = (BigUint::from(1u32), BigUint::from(2u32));
    for v in 0..h {
        let mut run = strategy.clone();
        match run.evaluate(rf, v) {
            SellerMove::Reveal(ops) => {
                if ops.len() == width && com.bits.iter().zip(&ops).all(|(c, o)| verify_opening(rf, c, o)) {
                    ops.iter().enumerate().for_each(|(k, o)| record(k, o));
                }
            }
            SellerMove::Prove { bound, firsts } => {
                let Ok(stmts) = ge_public_statements(rf, &com, bound) else { continue };
                if stmts.len() != firsts.len() {
                    continue;
                }
                let mut left = run.clone();
                let mut right = run;
                let (Some(r1), Some(r2)) = (
                    left.respond(rf, &vec![b1.clone(); stmts.len()]),
                    right.respond(rf, &vec![b2.clone(); stmts.len()]),
                ) else {
                    continue;
                };
                for (((pos, stmt), first), (x, y)) in stmts.iter().zip(&firsts).zip(r1.iter().zip(&r2)) {
                    if let Ok(wit) = cds_extract(rf.params(), stmt, first, (&b1, x), (&b2, y)) {
                        let k = ge_positions(bound, width, *pos as usize)[wit.row];
                        record(k, &BitOpening { bit: true, r: wit.exps[0].clone() });
                    }
                }
            }
        }
    }
    for pool in pools.values() {
        if let (Some(r0), Some(r1)) = (&pool.zero, &pool.one) {
            return Ok(AttackResult::Extracted(binding_break_to_dlog(rf, r0, r1)?));
        }
    }
    Ok(AttackResult::Failure)
}

/// Bit positions covered, row by row, by the statement at position `i` of
/// `s >= w`: every earlier 0-bit of `w`, then `i` itself. Each row is a
/// single cell with base `h`.
fn ge_positions(w: u64, width: usize, i: usize) -> Vec<usize> {
    let wb = to_bits(w, width).expect("bound was accepted by the statement builder");
    (0..i).filter(|&j| !wb[j]).chain([i]).collect()
}

/// Shared machinery for strategies that prove with known openings.
#[derive(Clone, Debug, Default)]
struct Pending {
    proofs: Vec<(CdsStatement, CdsWitness, Vec<BigUint>)>,
}

impl Pending {
    fn start<R: rand::RngCore>(
        rf: &RefString,
        com: &IntCommitment,
        ops: &[BitOpening],
        bound: u64,
        rng: &mut R,
    ) -> Option<(Self, SellerMove)> {
        let stmts = ge_public_statements(rf, com, bound).ok()?;
        let wits = ge_public_witnesses(ops, bound).ok()?;
        let params = rf.params();
        let mut pending = Pending::default();
        let mut firsts = Vec::new();
        for ((_, stmt), wit) in stmts.into_iter().zip(wits) {
            let flat: Vec<BigUint> =
                (0..ProverCoins::free_count(&stmt, wit.row)).map(|_| params.scalar_sample(rng)).collect();
            let coins = ProverCoins::from_flat(&stmt, wit.row, &flat);
            let (first, _) = cds_prove_first_with(params, &stmt, &wit, coins).ok()?;
            firsts.push(first);
            pending.proofs.push((stmt, wit, flat));
        }
        Some((pending, SellerMove::Prove { bound, firsts }))
    }

    /// Rebuilds each prover state from its stored coins and answers.
    fn respond(&self, rf: &RefString, challenges: &[BigUint]) -> Option<Vec<SigmaResponse>> {
        if challenges.len() != self.proofs.len() {
            return None;
        }
        self.proofs
            .iter()
            .zip(challenges)
            .map(|((stmt, wit, flat), beta)| {
                let coins = ProverCoins::from_flat(stmt, wit.row, flat);
                let (first, state) = cds_prove_first_with(rf.params(), stmt, wit, coins).ok()?;
                let resp = state.respond(beta).ok()?;
                cds_verify(rf.params(), stmt, &first, beta, &resp).ok()?.then_some(resp)
            })
            .collect()
    }
}

/// Follows the protocol with price `s`.
#[derive(Clone, Debug)]
pub struct HonestSeller {
    s: u64,
    rng: ChaCha20Rng,
    com: IntCommitment,
    ops: Vec<BitOpening>,
    pending: Pending,
}

impl HonestSeller {
    pub fn new(s: u64, seed: u64) -> Self {
        HonestSeller {
            s,
            rng: ChaCha20Rng::seed_from_u64(seed),
            com: IntCommitment::default(),
            ops: Vec::new(),
            pending: Pending::default(),
        }
    }
}

impl SellerStrategy for HonestSeller {
    fn commit(&mut self, rf: &RefString, width: usize) -> IntCommitment {
        let (com, ops) = commit_int(rf, self.s, width, &mut self.rng).expect("price fits the width");
        self.com = com.clone();
        self.ops = ops;
        com
    }

    fn evaluate(&mut self, rf: &RefString, v: u64) -> SellerMove {
        if self.s <= v {
            return SellerMove::Reveal(self.ops.clone());
        }
        let (pending, mv) = Pending::start(rf, &self.com, &self.ops, v + 1, &mut self.rng).expect("honest claim holds");
        self.pending = pending;
        mv
    }

    fn respond(&mut self, rf: &RefString, challenges: &[BigUint]) -> Option<Vec<SigmaResponse>> {
        self.pending.respond(rf, challenges)
    }
}

/// Knows `ρ = log_g h`, commits `g^u` to every bit and opens the price as
/// whatever the buyer can afford.
#[derive(Clone, Debug)]
pub struct EquivocatingSeller {
    rho: BigUint,
    rng: ChaCha20Rng,
    exps: Vec<BigUint>,
}

impl EquivocatingSeller {
    pub fn new(rho: BigUint, seed: u64) -> Self {
        EquivocatingSeller { rho, rng: ChaCha20Rng::seed_from_u64(seed), exps: Vec::new() }
    }
}

/// Opens `g^u` commitments as `value`, using the trapdoor on 1 bits.
fn equivocal_openings(rf: &RefString, rho: &BigUint, exps: &[BigUint], value: u64) -> Vec<BitOpening> {
    let params = rf.params();
    let rho_inv = params.exp_inv(rho).expect("trapdoor is invertible");
    to_bits(value, exps.len())
        .expect("value fits")
        .into_iter()
        .zip(exps)
        .map(|(bit, u)| BitOpening { bit, r: if bit { params.mul_exp(u, &rho_inv) } else { u.clone() } })
        .collect()
}

fn commit_zeros<R: rand::RngCore>(rf: &RefString, width: usize, rng: &mut R) -> (IntCommitment, Vec<BigUint>) {
    let params = rf.params();
    let exps: Vec<BigUint> = (0..width).map(|_| params.exp_sample(rng)).collect();
    let bits = exps.iter().map(|u| BitCommitment(params.pow(rf.g(), u))).collect();
    (IntCommitment { bits }, exps)
}

impl SellerStrategy for EquivocatingSeller {
    fn commit(&mut self, rf: &RefString, width: usize) -> IntCommitment {
        let (com, exps) = commit_zeros(rf, width, &mut self.rng);
        self.exps = exps;
        com
    }

    fn evaluate(&mut self, rf: &RefString, v: u64) -> SellerMove {
        SellerMove::Reveal(equivocal_openings(rf, &self.rho, &self.exps, v))
    }

    fn respond(&mut self, _: &RefString, _: &[BigUint]) -> Option<Vec<SigmaResponse>> {
        None
    }
}

/// Claims the top price to a buyer reporting 0 (proving `s >= 1` with
/// equivocal openings) and reveals price 0 to everyone else.
#[derive(Clone, Debug)]
pub struct ScriptedLiar {
    rho: BigUint,
    rng: ChaCha20Rng,
    com: IntCommitment,
    exps: Vec<BigUint>,
    pending: Pending,
}

impl ScriptedLiar {
    pub fn new(rho: BigUint, seed: u64) -> Self {
        ScriptedLiar {
            rho,
            rng: ChaCha20Rng::seed_from_u64(seed),
            com: IntCommitment::default(),
            exps: Vec::new(),
            pending: Pending::default(),
        }
    }
}

impl SellerStrategy for ScriptedLiar {
    fn commit(&mut self, rf: &RefString, width: usize) -> IntCommitment {
        let (com, exps) = commit_zeros(rf, width, &mut self.rng);
        self.com = com.clone();
        self.exps = exps;
        com
    }

    fn evaluate(&mut self, rf: &RefString, v: u64) -> SellerMove {
        if v > 0 {
            return SellerMove::Reveal(equivocal_openings(rf, &self.rho, &self.exps, 0));
        }
        let top = (1u64 << self.exps.len()) - 1;
        let ops = equivocal_openings(rf, &self.rho, &self.exps, top);
        let (pending, mv) =
            Pending::start(rf, &self.com, &ops, 1, &mut self.rng).expect("equivocal openings satisfy the claim");
        self.pending = pending;
        mv
    }

    fn respond(&mut self, rf: &RefString, challenges: &[BigUint]) -> Option<Vec<SigmaResponse>> {
        self.pending.respond(rf, challenges)
    }
}
