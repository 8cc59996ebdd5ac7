//! Bit commitments: `g^r` commits to 0, `h^r` commits to 1.
//!
//! Integers are committed bit by bit, most significant bit first, so index 0
//! of an [`IntCommitment`] holds the highest bit.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::group::{GroupElement, RefString};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitCommitment(pub GroupElement);

impl BitCommitment {
    pub fn element(&self) -> &GroupElement {
        &self.0
    }
}

/// Secret opening of a bit commitment. Never part of a public record except
/// inside an explicit reveal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitOpening {
    pub bit: bool,
    pub r: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntCommitment {
    pub bits: Vec<BitCommitment>,
}

impl IntCommitment {
    pub fn width(&self) -> usize {
        self.bits.len()
    }
}

/// MSB-first binary expansion of `value` on `width` bits.
pub fn to_bits(value: u64, width: usize) -> Result<Vec<bool>> {
    if width < 64 && value >> width != 0 {
        return Err(Error::ValueOutOfRange { value, width });
    }
    Ok((0..width).map(|i| (value >> (width - 1 - i)) & 1 == 1).collect())
}

pub fn from_bits(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

pub fn commit_bit(rf: &RefString, bit: bool, r: &BigUint) -> Result<BitCommitment> {
    let params = rf.params();
    if r.is_zero() || r >= params.p() {
        return Err(Error::ExponentOutOfRange);
    }
    let base = if bit { rf.h() } else { rf.g() };
    Ok(BitCommitment(params.pow(base, r)))
}

/// Commits to `bit` with a fresh exponent and returns the opening alongside.
pub fn commit_bit_random<R: RngCore + ?Sized>(rf: &RefString, bit: bool, rng: &mut R) -> (BitCommitment, BitOpening) {
    let r = rf.params().exp_sample(rng);
    let com = commit_bit(rf, bit, &r).expect("sampled exponent is in range");
    (com, BitOpening { bit, r })
}

pub fn verify_opening(rf: &RefString, com: &BitCommitment, op: &BitOpening) -> bool {
    commit_bit(rf, op.bit, &op.r).is_ok_and(|c| &c == com)
}

pub fn commit_int<R: RngCore + ?Sized>(
    rf: &RefString,
    value: u64,
    width: usize,
    rng: &mut R,
) -> Result<(IntCommitment, Vec<BitOpening>)> {
    let bits = to_bits(value, width)?;
    Ok(commit_bits(rf, &bits, rng))
}

pub fn commit_bits<R: RngCore + ?Sized>(
    rf: &RefString,
    bits: &[bool],
    rng: &mut R,
) -> (IntCommitment, Vec<BitOpening>) {
    let (coms, ops) = bits.iter().map(|&b| commit_bit_random(rf, b, rng)).unzip();
    (IntCommitment { bits: coms }, ops)
}

/// Checks every opening and returns the committed value.
pub fn reveal_int(rf: &RefString, com: &IntCommitment, ops: &[BitOpening]) -> Result<u64> {
    if com.width() != ops.len() {
        return Err(Error::LengthMismatch { expected: com.width(), got: ops.len() });
    }
    if com.width() > 64 {
        return Err(Error::InvalidInput("width above 64 bits".into()));
    }
    for (index, (c, op)) in com.bits.iter().zip(ops).enumerate() {
        if !verify_opening(rf, c, op) {
            return Err(Error::OpeningMismatch { index });
        }
    }
    Ok(from_bits(&ops.iter().map(|o| o.bit).collect::<Vec<_>>()))
}

/// Turns a double opening `g^r_zero = h^r_one` into `l` with `g^l = h`.
pub fn binding_break_to_dlog(rf: &RefString, r_zero: &BigUint, r_one: &BigUint) -> Result<BigUint> {
    let params = rf.params();
    if params.pow(rf.g(), r_zero) != params.pow(rf.h(), r_one) {
        return Err(Error::NotDoubleOpening);
    }
    let inv = params.exp_inv(r_one).map_err(|_| Error::NotDoubleOpening)?;
    let ell = params.mul_exp(r_zero, &inv);
    assert_eq!(&params.pow(rf.g(), &ell), rf.h(), "extracted exponent must be log_g h");
    Ok(ell)
}
