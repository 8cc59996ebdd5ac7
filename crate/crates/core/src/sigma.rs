//! Sigma protocols for knowledge of discrete logarithms.
//!
//! A [`CdsStatement`] is a matrix of `(base, target)` cells with possibly
//! different row widths. The prover claims to know, for at least one row `i`,
//! exponents `r_j` with `base_ij^r_j = target_ij` for every cell of that row.
//!
//! * Schnorr is the 1x1 case.
//! * AND over several bases (extended Schnorr) is a single row of width m.
//! * The OR composition of Cramer, Damgard and Schoenmakers is k rows of width 1.
//! * The general k-row case hides which row is known; each row shares one
//!   per-row challenge share and all shares sum to the verifier's challenge.
//!
//! Nonces, simulated challenge shares and simulated responses are uniform on
//! `Z_p`, which makes honest and simulated transcripts identically distributed.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::codec;
use crate::error::{Error, Result};
use crate::group::{expand_hash, GroupElement, GroupParams};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub base: GroupElement,
    pub target: GroupElement,
}

impl Cell {
    pub fn new(base: GroupElement, target: GroupElement) -> Self {
        Cell { base, target }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CdsStatement {
    rows: Vec<Vec<Cell>>,
}

impl CdsStatement {
    pub fn new(rows: Vec<Vec<Cell>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::MalformedStatement("no rows".into()));
        }
        for row in &rows {
            if row.is_empty() {
                return Err(Error::MalformedStatement("empty row".into()));
            }
            if row.iter().any(|c| c.base.is_identity() || c.target.is_identity()) {
                return Err(Error::MalformedStatement("identity base or target".into()));
            }
        }
        Ok(CdsStatement { rows })
    }

    /// Knowledge of `log_base target`.
    pub fn schnorr(base: GroupElement, target: GroupElement) -> Result<Self> {
        Self::new(vec![vec![Cell::new(base, target)]])
    }

    /// Knowledge of every `log_base_j target_j` (a single row).
    pub fn all_of(cells: Vec<Cell>) -> Result<Self> {
        Self::new(vec![cells])
    }

    /// Knowledge of at least one `log_base_i target_i` (width-1 rows).
    pub fn any_of(cells: Vec<Cell>) -> Result<Self> {
        Self::new(cells.into_iter().map(|c| vec![c]).collect())
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn shape(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_satisfied_by(&self, params: &GroupParams, wit: &CdsWitness) -> bool {
        let Some(row) = self.rows.get(wit.row) else {
            return false;
        };
        row.len() == wit.exps.len() && row.iter().zip(&wit.exps).all(|(c, r)| params.pow(&c.base, r) == c.target)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdsWitness {
    pub row: usize,
    pub exps: Vec<BigUint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SigmaFirst {
    pub alphas: Vec<Vec<GroupElement>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SigmaResponse {
    pub betas: Vec<BigUint>,
    pub gammas: Vec<Vec<BigUint>>,
}

/// Explicit prover randomness, for reproducible runs and exhaustive enumeration.
///
/// `nonces` has the width of the witness row. `betas` and `gammas` are indexed
/// like the statement; entries belonging to the witness row are ignored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProverCoins {
    pub nonces: Vec<BigUint>,
    pub betas: Vec<BigUint>,
    pub gammas: Vec<Vec<BigUint>>,
}

impl ProverCoins {
    pub fn sample<R: RngCore + ?Sized>(params: &GroupParams, stmt: &CdsStatement, row: usize, rng: &mut R) -> Self {
        let nonces = (0..stmt.rows[row].len()).map(|_| params.scalar_sample(rng)).collect();
        let mut betas = Vec::with_capacity(stmt.num_rows());
        let mut gammas = Vec::with_capacity(stmt.num_rows());
        for (i, r) in stmt.rows.iter().enumerate() {
            if i == row {
                betas.push(BigUint::zero());
                gammas.push(vec![BigUint::zero(); r.len()]);
            } else {
                betas.push(params.scalar_sample(rng));
                gammas.push(r.iter().map(|_| params.scalar_sample(rng)).collect());
            }
        }
        ProverCoins { nonces, betas, gammas }
    }

    /// Number of free coins for a witness in `row`: its nonces plus one share and
    /// one response per cell of every other row.
    pub fn free_count(stmt: &CdsStatement, row: usize) -> usize {
        stmt.rows.iter().enumerate().map(|(i, r)| if i == row { r.len() } else { 1 + r.len() }).sum()
    }

    /// Builds coins from a flat vector in the order: witness-row nonces, then for
    /// every other row its share followed by its responses.
    pub fn from_flat(stmt: &CdsStatement, row: usize, flat: &[BigUint]) -> Self {
        assert_eq!(flat.len(), Self::free_count(stmt, row));
        let mut it = flat.iter().cloned();
        let nonces = (0..stmt.rows[row].len()).map(|_| it.next().unwrap()).collect();
        let mut betas = Vec::new();
        let mut gammas = Vec::new();
        for (i, r) in stmt.rows.iter().enumerate() {
            if i == row {
                betas.push(BigUint::zero());
                gammas.push(vec![BigUint::zero(); r.len()]);
            } else {
                betas.push(it.next().unwrap());
                gammas.push((0..r.len()).map(|_| it.next().unwrap()).collect());
            }
        }
        ProverCoins { nonces, betas, gammas }
    }
}

/// Prover state between the first message and the response. Consumed by
/// [`ProverState::respond`] so a nonce can never answer two challenges.
#[derive(Debug)]
pub struct ProverState {
    params: GroupParams,
    row: usize,
    exps: Vec<BigUint>,
    coins: ProverCoins,
}

pub fn cds_prove_first<R: RngCore + ?Sized>(
    params: &GroupParams,
    stmt: &CdsStatement,
    wit: &CdsWitness,
    rng: &mut R,
) -> Result<(SigmaFirst, ProverState)> {
    if !stmt.is_satisfied_by(params, wit) {
        return Err(Error::InvalidWitness);
    }
    let coins = ProverCoins::sample(params, stmt, wit.row, rng);
    cds_prove_first_with(params, stmt, wit, coins)
}

pub fn cds_prove_first_with(
    params: &GroupParams,
    stmt: &CdsStatement,
    wit: &CdsWitness,
    coins: ProverCoins,
) -> Result<(SigmaFirst, ProverState)> {
    if !stmt.is_satisfied_by(params, wit) {
        return Err(Error::InvalidWitness);
    }
    let mut alphas = Vec::with_capacity(stmt.num_rows());
    for (i, row) in stmt.rows.iter().enumerate() {
        if i == wit.row {
            alphas.push(row.iter().zip(&coins.nonces).map(|(c, s)| params.pow(&c.base, s)).collect());
        } else {
            let beta = &coins.betas[i];
            alphas.push(
                row.iter().zip(&coins.gammas[i]).map(|(c, gamma)| simulated_alpha(params, c, beta, gamma)).collect(),
            );
        }
    }
    let state = ProverState { params: params.clone(), row: wit.row, exps: wit.exps.clone(), coins };
    Ok((SigmaFirst { alphas }, state))
}

/// `alpha = base^gamma / target^beta`, the unique first message that verifies
/// for the chosen `(beta, gamma)`.
fn simulated_alpha(params: &GroupParams, cell: &Cell, beta: &BigUint, gamma: &BigUint) -> GroupElement {
    params.mul(&params.pow(&cell.base, gamma), &params.pow_neg(&cell.target, beta))
}

fn check_challenge(params: &GroupParams, beta: &BigUint) -> Result<()> {
    if beta.is_zero() || beta > params.p() {
        return Err(Error::InvalidInput("challenge outside 1..=p".into()));
    }
    Ok(())
}

impl ProverState {
    pub fn respond(self, beta: &BigUint) -> Result<SigmaResponse> {
        let params = &self.params;
        check_challenge(params, beta)?;
        let others = self
            .coins
            .betas
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.row)
            .fold(BigUint::zero(), |acc, (_, b)| params.add_exp(&acc, b));
        let own = params.sub_exp(beta, &others);
        let mut betas = self.coins.betas.clone();
        betas[self.row] = own.clone();
        let mut gammas = self.coins.gammas.clone();
        gammas[self.row] = self
            .coins
            .nonces
            .iter()
            .zip(&self.exps)
            .map(|(s, r)| params.add_exp(s, &params.mul_exp(&own, r)))
            .collect();
        for b in betas.iter_mut() {
            *b = params.reduce(b);
        }
        for row in gammas.iter_mut() {
            for g in row.iter_mut() {
                *g = params.reduce(g);
            }
        }
        Ok(SigmaResponse { betas, gammas })
    }
}

fn shapes_match(stmt: &CdsStatement, first: &SigmaFirst, resp: &SigmaResponse) -> bool {
    let shape = stmt.shape();
    first.alphas.iter().map(Vec::len).eq(shape.iter().copied())
        && resp.gammas.iter().map(Vec::len).eq(shape.iter().copied())
        && resp.betas.len() == shape.len()
}

/// Checks the share-sum constraint and every cell equation
/// `base^gamma = alpha * target^beta_i`.
pub fn cds_verify(
    params: &GroupParams,
    stmt: &CdsStatement,
    first: &SigmaFirst,
    beta: &BigUint,
    resp: &SigmaResponse,
) -> Result<bool> {
    if !shapes_match(stmt, first, resp) {
        return Err(Error::ShapeMismatch);
    }
    if beta.is_zero() || beta > params.p() {
        return Ok(false);
    }
    let p = params.p();
    if resp.betas.iter().chain(resp.gammas.iter().flatten()).any(|x| x >= p) {
        return Ok(false);
    }
    let sum = resp.betas.iter().fold(BigUint::zero(), |acc, b| params.add_exp(&acc, b));
    if sum != params.reduce(beta) {
        return Ok(false);
    }
    for (i, row) in stmt.rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let lhs = params.pow(&cell.base, &resp.gammas[i][j]);
            let rhs = params.mul(&first.alphas[i][j], &params.pow(&cell.target, &resp.betas[i]));
            if lhs != rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Knowledge extractor from two accepting transcripts sharing a first message.
pub fn cds_extract(
    params: &GroupParams,
    stmt: &CdsStatement,
    first: &SigmaFirst,
    t1: (&BigUint, &SigmaResponse),
    t2: (&BigUint, &SigmaResponse),
) -> Result<CdsWitness> {
    let (beta1, r1) = t1;
    let (beta2, r2) = t2;
    if params.reduce(beta1) == params.reduce(beta2) {
        return Err(Error::EqualChallenges);
    }
    if !cds_verify(params, stmt, first, beta1, r1)? || !cds_verify(params, stmt, first, beta2, r2)? {
        return Err(Error::BadTranscripts);
    }
    let row = (0..stmt.num_rows()).find(|&i| r1.betas[i] != r2.betas[i]).ok_or(Error::BadTranscripts)?;
    // base^(g1 - g2) = target^(b1 - b2)  =>  r = (g1 - g2) / (b1 - b2)
    let inv = params.exp_inv(&params.sub_exp(&r1.betas[row], &r2.betas[row]))?;
    let exps = r1.gammas[row]
        .iter()
        .zip(&r2.gammas[row])
        .map(|(g1, g2)| params.mul_exp(&params.sub_exp(g1, g2), &inv))
        .collect();
    let wit = CdsWitness { row, exps };
    assert!(stmt.is_satisfied_by(params, &wit), "extracted witness must satisfy its row");
    Ok(wit)
}

/// Number of free coins used by [`cds_simulate_with`]: a share for every row but
/// the first, and one response per cell.
pub fn simulation_coin_count(stmt: &CdsStatement) -> usize {
    stmt.num_rows() - 1 + stmt.rows.iter().map(Vec::len).sum::<usize>()
}

/// Honest-verifier simulator: produces an accepting transcript for `beta`
/// without any witness.
pub fn cds_simulate<R: RngCore + ?Sized>(
    params: &GroupParams,
    stmt: &CdsStatement,
    beta: &BigUint,
    rng: &mut R,
) -> Result<(SigmaFirst, SigmaResponse)> {
    let flat: Vec<BigUint> = (0..simulation_coin_count(stmt)).map(|_| params.scalar_sample(rng)).collect();
    cds_simulate_with(params, stmt, beta, &flat)
}

/// Simulator with explicit coins: shares for rows `1..k`, then all responses
/// row-major. Row 0's share is fixed by the sum constraint.
pub fn cds_simulate_with(
    params: &GroupParams,
    stmt: &CdsStatement,
    beta: &BigUint,
    flat: &[BigUint],
) -> Result<(SigmaFirst, SigmaResponse)> {
    check_challenge(params, beta)?;
    if flat.len() != simulation_coin_count(stmt) {
        return Err(Error::InvalidInput("wrong number of simulation coins".into()));
    }
    let k = stmt.num_rows();
    let mut it = flat.iter().map(|x| params.reduce(x));
    let mut betas = vec![BigUint::zero(); k];
    for b in betas.iter_mut().skip(1) {
        *b = it.next().unwrap();
    }
    let rest = betas[1..].iter().fold(BigUint::zero(), |acc, b| params.add_exp(&acc, b));
    betas[0] = params.sub_exp(beta, &rest);
    let gammas: Vec<Vec<BigUint>> =
        stmt.rows.iter().map(|row| row.iter().map(|_| it.next().unwrap()).collect()).collect();
    let alphas = stmt
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().zip(&gammas[i]).map(|(c, g)| simulated_alpha(params, c, &betas[i], g)).collect())
        .collect();
    Ok((SigmaFirst { alphas }, SigmaResponse { betas, gammas }))
}

/// Uniform challenge on `{1, ..., p}` for an interactive verifier.
pub fn sample_challenge<R: RngCore + ?Sized>(params: &GroupParams, rng: &mut R) -> BigUint {
    let x = params.scalar_sample(rng);
    if x.is_zero() {
        params.p().clone()
    } else {
        x
    }
}

/// One full interactive run: prover first message, verifier challenge,
/// response, verdict.
pub fn run_interactive<R1: RngCore + ?Sized, R2: RngCore + ?Sized>(
    params: &GroupParams,
    stmt: &CdsStatement,
    wit: &CdsWitness,
    prover_rng: &mut R1,
    verifier_rng: &mut R2,
) -> Result<(SigmaFirst, BigUint, SigmaResponse, bool)> {
    let (first, state) = cds_prove_first(params, stmt, wit, prover_rng)?;
    let beta = sample_challenge(params, verifier_rng);
    let resp = state.respond(&beta)?;
    let ok = cds_verify(params, stmt, &first, &beta, &resp)?;
    Ok((first, beta, resp, ok))
}

/// Challenge derived from a hash of `context`: SHA-256 expanded to twice the
/// bit length of p plus 128 bits, reduced mod p, with 0 mapped to p. The extra
/// bits keep the bias negligible in toy groups too.
pub fn fiat_shamir_challenge(params: &GroupParams, context: &[u8]) -> BigUint {
    let p = params.p();
    let nbytes = (2 * p.bits() as usize + 128).div_ceil(8);
    let mut counter = 0u32;
    loop {
        let wide = expand_hash(b"zkmech/fiat-shamir", context, counter, nbytes);
        if wide.iter().all(|&x| x == 0) {
            counter += 1;
            continue;
        }
        let x = BigUint::from_bytes_be(&wide) % p;
        return if x.is_zero() { p.clone() } else { x };
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NiProof {
    pub first: SigmaFirst,
    pub challenge: BigUint,
    pub response: SigmaResponse,
    pub context_digest: [u8; 32],
}

fn challenge_input(context: &[u8], first: &SigmaFirst) -> Vec<u8> {
    let mut input = context.to_vec();
    input.extend_from_slice(&codec::to_bytes(first));
    input
}

pub fn ni_prove<R: RngCore + ?Sized>(
    params: &GroupParams,
    stmt: &CdsStatement,
    wit: &CdsWitness,
    context: &[u8],
    rng: &mut R,
) -> Result<NiProof> {
    let (first, state) = cds_prove_first(params, stmt, wit, rng)?;
    let challenge = fiat_shamir_challenge(params, &challenge_input(context, &first));
    let response = state.respond(&challenge)?;
    Ok(NiProof { first, challenge, response, context_digest: Sha256::digest(context).into() })
}

pub fn ni_verify(params: &GroupParams, stmt: &CdsStatement, proof: &NiProof, context: &[u8]) -> bool {
    let digest: [u8; 32] = Sha256::digest(context).into();
    if digest != proof.context_digest {
        return false;
    }
    if proof.challenge != fiat_shamir_challenge(params, &challenge_input(context, &proof.first)) {
        return false;
    }
    cds_verify(params, stmt, &proof.first, &proof.challenge, &proof.response).unwrap_or(false)
}

/// Every vector in `Z_p^len`, in lexicographic order. For toy-group enumeration.
pub fn all_coin_vectors(p: u64, len: usize) -> impl Iterator<Item = Vec<BigUint>> {
    let total = p.checked_pow(len as u32).expect("enumeration size fits u64");
    (0..total).map(move |mut idx| {
        let mut v = vec![BigUint::zero(); len];
        for slot in v.iter_mut().rev() {
            *slot = BigUint::from(idx % p);
            idx /= p;
        }
        v
    })
}
