//! Two-party single-item pricing in which neither the price nor the bid is
//! disclosed; only the outcome is, and the price as well when trade happens.
//!
//! The seller commits to a one-hot vector `σ` with `σ_s = 1` and proves it is
//! one-hot. For every price `i` the buyer sends `K_i`, a commitment to
//! `β_i = [i <= v]`, together with `Z_i = C_i^{ρ_i}` when `β_i = 1` and a
//! uniform element otherwise. The seller trades iff `Z_s = K_s^{r_s}`.
//!
//! Honest runs with `v < s` still trade with probability `1/p`, since a
//! uniform `Z_s` can hit `K_s^{r_s}`. Toy groups make this visible.

use num_bigint::BigUint;
use rand::RngCore;

use crate::codec::{setup_frame, Frame, Reader, Wire, Writer};
use crate::commit::{commit_bit_random, verify_opening, BitCommitment, BitOpening};
use crate::error::{Error, Result};
use crate::gadgets::proof_context;
use crate::group::{GroupElement, RefString};
use crate::protocols::Outcome;
use crate::sigma::{ni_prove, ni_verify, CdsStatement, CdsWitness, Cell, NiProof};

pub const DEFAULT_MAX_H: u64 = 64;

pub const TAG_INDICATOR: u8 = 0x11;
pub const TAG_RESPONSE: u8 = 0x12;
pub const TAG_SETTLE: u8 = 0x13;

const LABEL: &str = "indicator";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorCommitment {
    pub sigmas: Vec<BitCommitment>,
    pub proof: NiProof,
}

#[derive(Clone, Debug)]
pub struct SellerSecrets {
    pub price: u64,
    pub openings: Vec<BitOpening>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuyerResponse {
    pub k: Vec<GroupElement>,
    pub z: Vec<GroupElement>,
}

#[derive(Clone, Debug)]
pub struct BuyerSecrets {
    pub value: u64,
    pub openings: Vec<BitOpening>,
}

/// The seller's last message: on trade, the price and the exponent opening
/// `C_s` to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settlement(pub Option<(u64, BigUint)>);

/// Row `t` claims `log_h C_t` and `log_g C_i` for every other `i`.
pub fn indicator_statement(rf: &RefString, sigmas: &[BitCommitment]) -> Result<CdsStatement> {
    let rows = (0..sigmas.len())
        .map(|t| {
            sigmas
                .iter()
                .enumerate()
                .map(|(i, c)| Cell::new(if i == t { rf.h() } else { rf.g() }.clone(), c.0.clone()))
                .collect()
        })
        .collect();
    CdsStatement::new(rows)
}

fn context(rf: &RefString, stmt: &CdsStatement) -> Vec<u8> {
    proof_context(&setup_frame(rf).encode(), LABEL, 0, stmt)
}

fn check_h(h: u64, max_h: u64) -> Result<()> {
    if h == 0 || h > max_h {
        return Err(Error::InvalidInput(format!("H must lie in 1..={max_h}, got {h}")));
    }
    Ok(())
}

/// Commits to an arbitrary bit vector and proves it one-hot. Refuses unless
/// exactly one bit is set.
pub fn commit_indicator<R: RngCore + ?Sized>(
    rf: &RefString,
    sigma: &[bool],
    rng: &mut R,
) -> Result<(IndicatorCommitment, Vec<BitOpening>)> {
    let (sigmas, openings): (Vec<_>, Vec<_>) = sigma.iter().map(|&b| commit_bit_random(rf, b, rng)).unzip();
    let stmt = indicator_statement(rf, &sigmas)?;
    let ones: Vec<usize> = sigma.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
    let [row] = ones[..] else {
        return Err(Error::RefuseToProve(format!("indicator has {} set bits", ones.len())));
    };
    let wit = CdsWitness { row, exps: openings.iter().map(|o| o.r.clone()).collect() };
    let proof = ni_prove(rf.params(), &stmt, &wit, &context(rf, &stmt), rng)?;
    Ok((IndicatorCommitment { sigmas, proof }, openings))
}

pub fn mpc_seller_commit<R: RngCore + ?Sized>(
    rf: &RefString,
    s: u64,
    h: u64,
    max_h: u64,
    rng: &mut R,
) -> Result<(IndicatorCommitment, SellerSecrets)> {
    check_h(h, max_h)?;
    if s >= h {
        return Err(Error::ValueOutOfRange { value: s, width: h as usize });
    }
    let sigma: Vec<bool> = (0..h).map(|i| i == s).collect();
    let (ic, openings) = commit_indicator(rf, &sigma, rng)?;
    Ok((ic, SellerSecrets { price: s, openings }))
}

pub fn verify_indicator(rf: &RefString, ic: &IndicatorCommitment) -> bool {
    indicator_statement(rf, &ic.sigmas).is_ok_and(|stmt| ni_verify(rf.params(), &stmt, &ic.proof, &context(rf, &stmt)))
}

/// One column of the buyer's answer: `K = f^ρ` with `f = h` when willing,
/// and `Z = C^ρ` when willing, else the supplied filler.
pub fn response_entry(
    rf: &RefString,
    c: &BitCommitment,
    willing: bool,
    rho: &BigUint,
    filler: &GroupElement,
) -> (GroupElement, GroupElement) {
    let params = rf.params();
    let f = if willing { rf.h() } else { rf.g() };
    let z = if willing { params.pow(&c.0, rho) } else { filler.clone() };
    (params.pow(f, rho), z)
}

pub fn mpc_buyer_respond<R: RngCore + ?Sized>(
    rf: &RefString,
    ic: &IndicatorCommitment,
    v: u64,
    rng: &mut R,
) -> Result<(BuyerResponse, BuyerSecrets)> {
    if !verify_indicator(rf, ic) {
        return Err(Error::VerificationFailed {
            phase: "indicator".into(),
            index: 1,
            reason: "one-hot proof is invalid".into(),
        });
    }
    if v >= ic.sigmas.len() as u64 {
        return Err(Error::ValueOutOfRange { value: v, width: ic.sigmas.len() });
    }
    let params = rf.params();
    let mut resp = BuyerResponse { k: Vec::new(), z: Vec::new() };
    let mut openings = Vec::new();
    for (i, c) in ic.sigmas.iter().enumerate() {
        let willing = i as u64 <= v;
        let rho = params.exp_sample(rng);
        let filler = params.uniform_element(rng);
        let (k, z) = response_entry(rf, c, willing, &rho, &filler);
        resp.k.push(k);
        resp.z.push(z);
        openings.push(BitOpening { bit: willing, r: rho });
    }
    Ok((resp, BuyerSecrets { value: v, openings }))
}

/// The seller's decision. Trade reveals the price and `r_s`.
pub fn mpc_seller_finalize(
    rf: &RefString,
    secrets: &SellerSecrets,
    resp: &BuyerResponse,
) -> Result<(Outcome, Settlement)> {
    let h = secrets.openings.len();
    if resp.k.len() != h || resp.z.len() != h {
        return Err(Error::LengthMismatch { expected: h, got: resp.k.len().min(resp.z.len()) });
    }
    let s = secrets.price as usize;
    let r_s = &secrets.openings[s].r;
    if rf.params().pow(&resp.k[s], r_s) == resp.z[s] {
        Ok((Outcome::sale(secrets.price), Settlement(Some((secrets.price, r_s.clone())))))
    } else {
        Ok((Outcome::no_trade(), Settlement(None)))
    }
}

/// The buyer's check of the settlement: the revealed exponent must open
/// `C_s` to 1 at a price the buyer agreed to.
pub fn mpc_buyer_settle(
    rf: &RefString,
    ic: &IndicatorCommitment,
    secrets: &BuyerSecrets,
    settlement: &Settlement,
) -> Result<Outcome> {
    let fail = |reason: &str| Error::VerificationFailed { phase: "settle".into(), index: 3, reason: reason.into() };
    match &settlement.0 {
        None => Ok(Outcome::no_trade()),
        Some((s, r)) => {
            let c = ic.sigmas.get(*s as usize).ok_or_else(|| fail("price is out of range"))?;
            if !verify_opening(rf, c, &BitOpening { bit: true, r: r.clone() }) {
                return Err(fail("revealed exponent does not open the price commitment to 1"));
            }
            if *s > secrets.value {
                return Err(fail("price exceeds the buyer's value"));
            }
            Ok(Outcome::sale(*s))
        }
    }
}

/// Runs both parties in-process and returns the buyer-verified outcome.
pub fn run_mpc<R1: RngCore + ?Sized, R2: RngCore + ?Sized>(
    rf: &RefString,
    s: u64,
    v: u64,
    h: u64,
    seller_rng: &mut R1,
    buyer_rng: &mut R2,
) -> Result<Outcome> {
    let (ic, ss) = mpc_seller_commit(rf, s, h, DEFAULT_MAX_H, seller_rng)?;
    let ic = round_trip(rf, &ic)?;
    let (resp, bs) = mpc_buyer_respond(rf, &ic, v, buyer_rng)?;
    let resp = round_trip(rf, &resp)?;
    let (seller_view, settlement) = mpc_seller_finalize(rf, &ss, &resp)?;
    let settlement = round_trip(rf, &settlement)?;
    let buyer_view = mpc_buyer_settle(rf, &ic, &bs, &settlement)?;
    debug_assert_eq!(seller_view, buyer_view);
    Ok(buyer_view)
}

/// Sends a message through its frame encoding, as it would travel.
fn round_trip<T: MpcMessage>(rf: &RefString, x: &T) -> Result<T> {
    T::from_frame(rf, &x.to_frame())
}

pub trait MpcMessage: Wire {
    const TAG: u8;

    fn to_frame(&self) -> Frame {
        Frame::new(Self::TAG, crate::codec::to_bytes(self))
    }

    fn from_frame(rf: &RefString, frame: &Frame) -> Result<Self> {
        if frame.tag != Self::TAG {
            return Err(Error::Malformed {
                offset: 0,
                reason: format!("expected tag {:#04x}, got {:#04x}", Self::TAG, frame.tag),
            });
        }
        crate::codec::from_bytes(rf.params(), &frame.payload)
    }
}

impl Wire for IndicatorCommitment {
    fn write(&self, w: &mut Writer) {
        w.list(&self.sigmas).put(&self.proof);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(IndicatorCommitment { sigmas: r.list()?, proof: r.get()? })
    }
}

impl Wire for BuyerResponse {
    fn write(&self, w: &mut Writer) {
        w.list(&self.k).list(&self.z);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(BuyerResponse { k: r.list()?, z: r.list()? })
    }
}

impl Wire for Settlement {
    fn write(&self, w: &mut Writer) {
        match &self.0 {
            None => w.u8(0),
            Some((s, r)) => w.u8(1).u64(*s).int(r),
        };
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let at = r.offset();
        Ok(Settlement(match r.u8()? {
            0 => None,
            1 => Some((r.u64()?, r.int()?)),
            x => return Err(Error::Malformed { offset: at, reason: format!("bad settlement flag {x}") }),
        }))
    }
}

impl MpcMessage for IndicatorCommitment {
    const TAG: u8 = TAG_INDICATOR;
}

impl MpcMessage for BuyerResponse {
    const TAG: u8 = TAG_RESPONSE;
}

impl MpcMessage for Settlement {
    const TAG: u8 = TAG_SETTLE;
}
