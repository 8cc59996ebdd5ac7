//! Tagged protocol messages and their frame encoding.

use crate::codec::{Frame, Reader, Wire, Writer};
use crate::commit::{BitOpening, IntCommitment};
use crate::error::{Error, Result};
use crate::gadgets::{ComplementPair, ProofBundle};
use crate::group::GroupParams;

use super::mechanism::Outcome;

pub const TAG_COMMIT: u8 = 0x01;
pub const TAG_COMMIT_PROOF: u8 = 0x02;
pub const TAG_TYPE_REPORT: u8 = 0x03;
pub const TAG_REVEAL: u8 = 0x04;
pub const TAG_EVAL_PROOF: u8 = 0x05;
pub const TAG_COIN_PAIR: u8 = 0x06;
pub const TAG_COIN_MASK: u8 = 0x07;
pub const TAG_VERDICT: u8 = 0x08;
pub const TAG_OUTCOME: u8 = 0x09;

/// Reveal slot naming the selected coin commitment rather than a price.
pub const COIN_SLOT: u8 = 0xFF;

/// What an evaluation proof claims.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Claim {
    /// Committed price `slot` is at least `bound`.
    GePublic { slot: u8, bound: u64 },
    /// Committed price `slot` is at most `bound`.
    LePublic { slot: u8, bound: u64 },
    /// The two committed prices add up to `sum`; carries are committed.
    Sum { sum: u64, carries: IntCommitment },
}

impl Wire for Claim {
    fn write(&self, w: &mut Writer) {
        match self {
            Claim::GePublic { slot, bound } => w.u8(0).u8(*slot).u64(*bound),
            Claim::LePublic { slot, bound } => w.u8(1).u8(*slot).u64(*bound),
            Claim::Sum { sum, carries } => w.u8(2).u64(*sum).put(carries),
        };
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let at = r.offset();
        Ok(match r.u8()? {
            0 => Claim::GePublic { slot: r.u8()?, bound: r.u64()? },
            1 => Claim::LePublic { slot: r.u8()?, bound: r.u64()? },
            2 => Claim::Sum { sum: r.u64()?, carries: r.get()? },
            x => return Err(Error::Malformed { offset: at, reason: format!("unknown claim kind {x}") }),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Commit(Vec<IntCommitment>),
    CommitProof(ProofBundle),
    TypeReport(Vec<u64>),
    Reveal { slot: u8, openings: Vec<BitOpening> },
    EvalProof { claim: Claim, proofs: ProofBundle },
    CoinPair { pairs: Vec<ComplementPair>, proofs: ProofBundle },
    CoinMask(Vec<bool>),
    Verdict { verdict: bool, borrows: IntCommitment, proofs: ProofBundle },
    Outcome(Outcome),
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::Commit(_) => TAG_COMMIT,
            Message::CommitProof(_) => TAG_COMMIT_PROOF,
            Message::TypeReport(_) => TAG_TYPE_REPORT,
            Message::Reveal { .. } => TAG_REVEAL,
            Message::EvalProof { .. } => TAG_EVAL_PROOF,
            Message::CoinPair { .. } => TAG_COIN_PAIR,
            Message::CoinMask(_) => TAG_COIN_MASK,
            Message::Verdict { .. } => TAG_VERDICT,
            Message::Outcome(_) => TAG_OUTCOME,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Message::Commit(_) => "Commit",
            Message::CommitProof(_) => "CommitProof",
            Message::TypeReport(_) => "TypeReport",
            Message::Reveal { .. } => "Reveal",
            Message::EvalProof { .. } => "EvalProof",
            Message::CoinPair { .. } => "CoinPair",
            Message::CoinMask(_) => "CoinMask",
            Message::Verdict { .. } => "Verdict",
            Message::Outcome(_) => "Outcome",
        }
    }

    /// True for messages the buyer sends.
    pub fn from_buyer(&self) -> bool {
        matches!(self, Message::TypeReport(_) | Message::CoinMask(_))
    }

    pub fn to_frame(&self) -> Frame {
        let mut w = Writer::new();
        match self {
            Message::Commit(coms) => {
                w.list(coms);
            }
            Message::CommitProof(b) => {
                w.put(b);
            }
            Message::TypeReport(vs) => {
                w.list(vs);
            }
            Message::Reveal { slot, openings } => {
                w.u8(*slot).list(openings);
            }
            Message::EvalProof { claim, proofs } => {
                w.put(claim).put(proofs);
            }
            Message::CoinPair { pairs, proofs } => {
                w.list(pairs).put(proofs);
            }
            Message::CoinMask(bits) => {
                w.list(bits);
            }
            Message::Verdict { verdict, borrows, proofs } => {
                w.put(verdict).put(borrows).put(proofs);
            }
            Message::Outcome(o) => {
                w.put(o);
            }
        }
        Frame::new(self.tag(), w.finish())
    }

    pub fn from_frame(params: &GroupParams, frame: &Frame) -> Result<Message> {
        let mut r = Reader::new(params, &frame.payload);
        let msg = match frame.tag {
            TAG_COMMIT => Message::Commit(r.list()?),
            TAG_COMMIT_PROOF => Message::CommitProof(r.get()?),
            TAG_TYPE_REPORT => Message::TypeReport(r.list()?),
            TAG_REVEAL => Message::Reveal { slot: r.u8()?, openings: r.list()? },
            TAG_EVAL_PROOF => Message::EvalProof { claim: r.get()?, proofs: r.get()? },
            TAG_COIN_PAIR => Message::CoinPair { pairs: r.list()?, proofs: r.get()? },
            TAG_COIN_MASK => Message::CoinMask(r.list()?),
            TAG_VERDICT => Message::Verdict { verdict: r.get()?, borrows: r.get()?, proofs: r.get()? },
            TAG_OUTCOME => Message::Outcome(r.get()?),
            t => return Err(Error::Malformed { offset: 0, reason: format!("unknown message tag {t:#04x}") }),
        };
        r.finish()?;
        Ok(msg)
    }
}
