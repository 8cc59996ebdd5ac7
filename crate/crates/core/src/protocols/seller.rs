//! The seller: commits to the prices, then answers the type report with
//! reveals and proofs. The seller never computes anything that depends on a
//! buyer's value before the report arrives.

use std::collections::VecDeque;

use rand::RngCore;

use crate::codec::{setup_frame, Frame};
use crate::commit::{commit_int, to_bits, BitOpening, IntCommitment};
use crate::error::{Error, Result};
use crate::gadgets::{
    coin_flip, coin_openings, complement_commit, prove_complement, prove_ge_public, prove_le_committed,
    prove_le_public, prove_lt_committed, prove_sum, ComplementPair,
};
use crate::group::RefString;

use super::mechanism::{ex2_unsold_bound, top_two, Branch, MechanismSpec};
use super::message::{Claim, Message, COIN_SLOT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    AwaitReport,
    AwaitMask,
    Done,
}

pub struct Seller {
    rf: RefString,
    spec: MechanismSpec,
    rng: Box<dyn RngCore + Send>,
    coms: Vec<IntCommitment>,
    ops: Vec<Vec<BitOpening>>,
    frames: Vec<Frame>,
    prefix: Vec<u8>,
    outbox: VecDeque<Message>,
    state: State,
    report: Vec<u64>,
    coin_x: Option<u64>,
    coin: Option<(Vec<ComplementPair>, Vec<[BitOpening; 2]>, u64)>,
}

impl Seller {
    /// Commits to the prices (and, for two-part pricing, proves they are
    /// ordered). The commit messages are queued for [`Seller::poll`].
    pub fn new(rf: RefString, spec: MechanismSpec, rng: impl RngCore + Send + 'static) -> Result<Self> {
        let setup = setup_frame(&rf);
        let mut s = Seller {
            prefix: setup.encode(),
            frames: vec![setup],
            rf,
            spec,
            rng: Box::new(rng),
            coms: Vec::new(),
            ops: Vec::new(),
            outbox: VecDeque::new(),
            state: State::AwaitReport,
            report: Vec::new(),
            coin_x: None,
            coin: None,
        };
        let width = s.spec.width();
        for price in s.spec.prices() {
            let (c, o) = commit_int(&s.rf, price, width, &mut s.rng)?;
            s.coms.push(c);
            s.ops.push(o);
        }
        s.emit(Message::Commit(s.coms.clone()));
        if s.coms.len() == 2 && s.spec.kind() == super::ExampleKind::Ex3 {
            let bundle =
                prove_le_committed(&s.rf, &s.coms[0], &s.ops[0], &s.coms[1], &s.ops[1], &s.prefix, &mut s.rng)?;
            s.emit(Message::CommitProof(bundle));
        }
        Ok(s)
    }

    /// Fixes the seller's lottery coin `x` instead of drawing it.
    pub fn with_coin(mut self, x: u64) -> Self {
        self.coin_x = Some(x);
        self
    }

    pub fn spec(&self) -> &MechanismSpec {
        &self.spec
    }

    pub fn commitments(&self) -> &[IntCommitment] {
        &self.coms
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn is_done(&self) -> bool {
        self.state == State::Done && self.outbox.is_empty()
    }

    pub fn poll(&mut self) -> Option<Message> {
        self.outbox.pop_front()
    }

    fn emit(&mut self, msg: Message) {
        let frame = msg.to_frame();
        self.prefix.extend_from_slice(&frame.encode());
        self.frames.push(frame);
        self.outbox.push_back(msg);
    }

    fn out_of_order(&self, msg: &Message) -> Error {
        Error::OutOfOrder {
            phase: format!("{:?}", self.state),
            detail: format!("seller did not expect {}", msg.name()),
        }
    }

    /// Handles a buyer message and queues the seller's answers.
    pub fn receive(&mut self, msg: &Message) -> Result<()> {
        if !self.outbox.is_empty() {
            return Err(self.out_of_order(msg));
        }
        match (self.state, msg) {
            (State::AwaitReport, Message::TypeReport(vs)) => {
                let branch = self.spec.branch(vs)?;
                self.report = vs.clone();
                self.frames.push(msg.to_frame());
                self.prefix.extend_from_slice(&msg.to_frame().encode());
                self.evaluate(branch)
            }
            (State::AwaitMask, Message::CoinMask(y)) => {
                let width = self.coin.as_ref().map(|c| c.0.len()).unwrap_or(0);
                if y.len() != width {
                    return Err(Error::InvalidInput("coin mask has the wrong width".into()));
                }
                self.frames.push(msg.to_frame());
                self.prefix.extend_from_slice(&msg.to_frame().encode());
                self.finish_lottery(y)
            }
            _ => Err(self.out_of_order(msg)),
        }
    }

    fn prove(&mut self, claim: Claim) -> Result<()> {
        let proofs = match &claim {
            Claim::GePublic { slot, bound } => {
                let i = *slot as usize;
                prove_ge_public(&self.rf, &self.coms[i], &self.ops[i], *bound, &self.prefix, &mut self.rng)?
            }
            Claim::LePublic { slot, bound } => {
                let i = *slot as usize;
                prove_le_public(&self.rf, &self.coms[i], &self.ops[i], *bound, &self.prefix, &mut self.rng)?
            }
            Claim::Sum { .. } => unreachable!("sum claims are built by prove_sum"),
        };
        self.emit(Message::EvalProof { claim, proofs });
        Ok(())
    }

    fn reveal(&mut self, slot: u8) {
        let openings = self.ops[slot as usize].clone();
        self.emit(Message::Reveal { slot, openings });
    }

    fn announce(&mut self, draw: u64) -> Result<()> {
        let outcome = self.spec.outcome(&self.report, draw)?;
        self.emit(Message::Outcome(outcome));
        self.state = State::Done;
        Ok(())
    }

    fn start_lottery(&mut self, width: usize) -> Result<()> {
        let x = match self.coin_x {
            Some(x) => x,
            None => self.rng.next_u64() & ((1u64 << width) - 1),
        };
        let (pairs, ops): (Vec<_>, Vec<_>) =
            to_bits(x, width)?.into_iter().map(|b| complement_commit(&self.rf, b, &mut self.rng)).unzip();
        let proofs = prove_complement(&self.rf, &pairs, &ops, &self.prefix, &mut self.rng)?;
        self.emit(Message::CoinPair { pairs: pairs.clone(), proofs });
        self.coin = Some((pairs, ops, x));
        self.state = State::AwaitMask;
        Ok(())
    }

    fn finish_lottery(&mut self, y: &[bool]) -> Result<()> {
        let (pairs, ops, _) = self.coin.clone().expect("lottery started");
        let z_com = coin_flip(&pairs, y, true)?.z_com;
        let z_ops = coin_openings(&ops, y);
        let z = crate::commit::from_bits(&z_ops.iter().map(|o| o.bit).collect::<Vec<_>>());
        match self.spec.branch(&self.report)? {
            Branch::HalfLottery { .. } => {
                self.emit(Message::Reveal { slot: COIN_SLOT, openings: z_ops });
            }
            Branch::PaymentLottery { .. } => {
                let lt = prove_lt_committed(
                    &self.rf,
                    &z_com,
                    &z_ops,
                    &self.coms[0],
                    &self.ops[0],
                    &self.prefix,
                    &mut self.rng,
                )?;
                self.emit(Message::Verdict { verdict: lt.verdict, borrows: lt.borrows, proofs: lt.bundle });
            }
            other => unreachable!("no lottery in branch {other:?}"),
        }
        self.announce(z)
    }

    fn evaluate(&mut self, branch: Branch) -> Result<()> {
        use super::ExampleKind as K;
        let v = self.report.clone();
        match (self.spec.kind(), branch) {
            (K::Ex1 | K::Ex4, Branch::NoTrade) => self.prove(Claim::GePublic { slot: 0, bound: v[0] + 1 })?,
            (K::Ex1, Branch::Sell { .. }) | (K::Ex1Multi, Branch::AuctionReserve { .. }) => self.reveal(0),
            (K::Ex1Multi, Branch::NoTrade) => {
                let (_, max, _) = top_two(&v);
                self.prove(Claim::GePublic { slot: 0, bound: max + 1 })?
            }
            (K::Ex1Multi, Branch::AuctionSecond { payment, .. }) => {
                self.prove(Claim::LePublic { slot: 0, bound: payment })?
            }
            (K::Ex2, Branch::SellItem { item, payment }) => {
                self.reveal(item);
                let bound = ex2_unsold_bound(item, payment, [v[0], v[1]]);
                if bound > 0 {
                    self.prove(Claim::GePublic { slot: 1 - item, bound: bound as u64 })?;
                }
            }
            (K::Ex2, Branch::NoTrade) => {
                self.prove(Claim::GePublic { slot: 0, bound: v[0] + 1 })?;
                self.prove(Claim::GePublic { slot: 1, bound: v[1] + 1 })?;
            }
            (K::Ex3, Branch::NoTrade) => self.prove(Claim::GePublic { slot: 0, bound: v[0] / 2 + 1 })?,
            (K::Ex3, Branch::HalfLottery { .. }) => {
                self.reveal(0);
                self.prove(Claim::GePublic { slot: 1, bound: v[0] / 2 + 1 })?;
                return self.start_lottery(1);
            }
            (K::Ex3, Branch::Sell { .. }) => {
                let sp = prove_sum(
                    &self.rf,
                    &self.coms[0],
                    &self.ops[0],
                    &self.coms[1],
                    &self.ops[1],
                    &self.prefix,
                    &mut self.rng,
                )?;
                self.emit(Message::EvalProof {
                    claim: Claim::Sum { sum: sp.sum, carries: sp.carries },
                    proofs: sp.bundle,
                });
                self.prove(Claim::LePublic { slot: 1, bound: v[0] / 2 })?;
            }
            (K::Ex4, Branch::PaymentLottery { .. }) => {
                self.prove(Claim::LePublic { slot: 0, bound: v[0] })?;
                return self.start_lottery(self.spec.width());
            }
            (kind, b) => unreachable!("branch {b:?} does not occur for {kind}"),
        }
        self.announce(0)
    }
}
