//! Buyer-side verification: a phase machine that checks every message in
//! order and derives the outcome the seller must announce.

use std::collections::VecDeque;

use rand::RngCore;

use crate::codec::{read_setup, setup_frame, Frame, Transcript};
use crate::commit::{reveal_int, to_bits, BitOpening, IntCommitment};
use crate::error::{Error, Result};
use crate::gadgets::{
    coin_flip, verify_complement, verify_ge_public, verify_le_committed, verify_le_public, verify_lt_committed,
    verify_sum, ComplementPair, LtProof, ProofBundle, SumProof,
};
use crate::group::RefString;

use super::mechanism::{check_report, ex2_unsold_bound, top_two, width_of, ExampleKind, Outcome};
use super::message::{Claim, Message, COIN_SLOT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Seller,
    Buyer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Ge(u8, u64),
    Le(u8, u64),
    CoinPair(usize),
    CoinMask(usize),
    CoinReveal,
    Verdict,
    Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Commit,
    CommitProof,
    Report,
    Evaluate,
    Steps,
    Done,
}

/// Reason a single message fails; turned into a positioned error by `observe`.
type Check = std::result::Result<(), String>;

#[derive(Clone, Debug)]
pub struct Verifier {
    rf: RefString,
    kind: ExampleKind,
    h: u64,
    width: usize,
    frames: Vec<Frame>,
    prefix: Vec<u8>,
    phase: Phase,
    steps: VecDeque<Step>,
    coms: Vec<IntCommitment>,
    report: Vec<u64>,
    pairs: Vec<ComplementPair>,
    z_com: Option<IntCommitment>,
    expected: Outcome,
    outcome: Option<Outcome>,
    poisoned: bool,
}

impl Verifier {
    pub fn new(rf: RefString, kind: ExampleKind, h: u64) -> Result<Self> {
        let width = width_of(h)?;
        let setup = setup_frame(&rf);
        Ok(Verifier {
            prefix: setup.encode(),
            frames: vec![setup],
            rf,
            kind,
            h,
            width,
            phase: Phase::Commit,
            steps: VecDeque::new(),
            coms: Vec::new(),
            report: Vec::new(),
            pairs: Vec::new(),
            z_com: None,
            expected: Outcome::no_trade(),
            outcome: None,
            poisoned: false,
        })
    }

    pub fn ref_string(&self) -> &RefString {
        &self.rf
    }

    pub fn kind(&self) -> ExampleKind {
        self.kind
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn transcript(&self) -> Transcript {
        Transcript { kind: self.kind.to_string(), h: self.h, frames: self.frames.clone() }
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn commitments(&self) -> &[IntCommitment] {
        &self.coms
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Who must send the next message, or `None` once the outcome is verified.
    pub fn next_speaker(&self) -> Option<Role> {
        match self.phase {
            Phase::Done => None,
            Phase::Report => Some(Role::Buyer),
            Phase::Steps if matches!(self.steps.front(), Some(Step::CoinMask(_))) => Some(Role::Buyer),
            _ => Some(Role::Seller),
        }
    }

    /// Width of the coin mask the buyer must send next, if any.
    pub fn pending_mask_width(&self) -> Option<usize> {
        match (self.phase, self.steps.front()) {
            (Phase::Steps, Some(Step::CoinMask(w))) => Some(*w),
            _ => None,
        }
    }

    pub fn phase_name(&self) -> &'static str {
        match self.phase {
            Phase::Commit => "commit",
            Phase::CommitProof => "commit-verify",
            Phase::Report => "report",
            Phase::Evaluate => "evaluate",
            Phase::Done => "done",
            Phase::Steps => match self.steps.front() {
                Some(Step::Ge(..) | Step::Le(..) | Step::Verdict) => "evaluate",
                Some(Step::CoinPair(_) | Step::CoinMask(_) | Step::CoinReveal) => "eval-randomness",
                Some(Step::Outcome) | None => "outcome",
            },
        }
    }

    /// Checks `msg` as the next message of the session. Any failure is
    /// terminal: later calls fail too.
    pub fn observe(&mut self, msg: &Message) -> Result<()> {
        let index = self.frames.len();
        let phase = self.phase_name().to_string();
        if self.poisoned {
            return Err(Error::VerificationFailed { phase, index, reason: "session already aborted".into() });
        }
        if let Err(reason) = self.check(msg) {
            self.poisoned = true;
            return Err(Error::VerificationFailed { phase, index, reason });
        }
        let frame = msg.to_frame();
        self.prefix.extend_from_slice(&frame.encode());
        self.frames.push(frame);
        Ok(())
    }

    fn check(&mut self, msg: &Message) -> Check {
        match self.phase {
            Phase::Commit => self.on_commit(msg),
            Phase::CommitProof => match msg {
                Message::CommitProof(bundle) => {
                    ensure(
                        verify_le_committed(&self.rf, &self.coms[0], &self.coms[1], &self.prefix, bundle),
                        "proof that the first price is at most the second is invalid",
                    )?;
                    self.phase = Phase::Report;
                    Ok(())
                }
                other => unexpected(other, "CommitProof"),
            },
            Phase::Report => match msg {
                Message::TypeReport(vs) => {
                    check_report(self.kind, self.h, vs).map_err(|e| e.to_string())?;
                    self.report = vs.clone();
                    self.phase = Phase::Evaluate;
                    Ok(())
                }
                other => unexpected(other, "TypeReport"),
            },
            Phase::Evaluate => {
                self.on_evaluate(msg)?;
                self.phase = Phase::Steps;
                Ok(())
            }
            Phase::Steps => {
                let step = self.steps.pop_front().expect("steps phase has a pending step");
                self.on_step(step, msg)?;
                if step == Step::Outcome {
                    self.phase = Phase::Done;
                }
                Ok(())
            }
            Phase::Done => Err(format!("{} after the outcome", msg.name())),
        }
    }

    fn on_commit(&mut self, msg: &Message) -> Check {
        let Message::Commit(coms) = msg else {
            return unexpected(msg, "Commit");
        };
        if coms.len() != self.kind.num_prices() {
            return Err(format!("expected {} committed prices, got {}", self.kind.num_prices(), coms.len()));
        }
        if let Some(c) = coms.iter().find(|c| c.width() != self.width) {
            return Err(format!("commitment width {} differs from log2 H = {}", c.width(), self.width));
        }
        self.coms = coms.clone();
        self.phase = if self.kind == ExampleKind::Ex3 { Phase::CommitProof } else { Phase::Report };
        Ok(())
    }

    fn reveal(&self, slot: u8, openings: &[BitOpening]) -> std::result::Result<u64, String> {
        let com = self.coms.get(slot as usize).ok_or_else(|| format!("no committed price in slot {slot}"))?;
        reveal_int(&self.rf, com, openings).map_err(|e| e.to_string())
    }

    fn verify_claim(&self, claim: &Claim, proofs: &ProofBundle) -> Check {
        let ok = match claim {
            Claim::GePublic { slot, bound } => {
                let com = self.coms.get(*slot as usize).ok_or("claim names a missing slot")?;
                if *bound >= self.h {
                    return Err(format!("claimed price >= {bound} is impossible below H={}", self.h));
                }
                verify_ge_public(&self.rf, com, *bound, &self.prefix, proofs)
            }
            Claim::LePublic { slot, bound } => {
                let com = self.coms.get(*slot as usize).ok_or("claim names a missing slot")?;
                verify_le_public(&self.rf, com, *bound, &self.prefix, proofs)
            }
            Claim::Sum { sum, carries } => {
                if self.coms.len() != 2 {
                    return Err("sum claim needs two committed prices".into());
                }
                let sp = SumProof { sum: *sum, carries: carries.clone(), bundle: proofs.clone() };
                verify_sum(&self.rf, &self.coms[0], &self.coms[1], &sp, &self.prefix)
            }
        };
        ensure(ok, "evaluation proof is invalid")
    }

    /// The first evaluation message selects the branch.
    fn on_evaluate(&mut self, msg: &Message) -> Check {
        let v = self.report.clone();
        let ge = |slot: u8, bound: u64| Claim::GePublic { slot, bound };
        match (self.kind, msg) {
            (ExampleKind::Ex1, Message::Reveal { slot: 0, openings }) => {
                let s = self.reveal(0, openings)?;
                ensure(s <= v[0], "revealed price exceeds the reported value")?;
                self.expect(Outcome::sale(s), [Step::Outcome])
            }
            (ExampleKind::Ex1 | ExampleKind::Ex4, Message::EvalProof { claim, proofs })
                if *claim == ge(0, v[0] + 1) =>
            {
                self.verify_claim(claim, proofs)?;
                self.expect(Outcome::no_trade(), [Step::Outcome])
            }
            (ExampleKind::Ex1Multi, _) => {
                let (winner, max, second) = top_two(&v);
                let winner = Some(winner as u8);
                match msg {
                    Message::EvalProof { claim, proofs } if *claim == ge(0, max + 1) => {
                        self.verify_claim(claim, proofs)?;
                        self.expect(Outcome::no_trade(), [Step::Outcome])
                    }
                    Message::Reveal { slot: 0, openings } => {
                        let s = self.reveal(0, openings)?;
                        ensure(second < s && s <= max, "revealed reserve is not between the top two bids")?;
                        self.expect(Outcome { winner, ..Outcome::sale(s) }, [Step::Outcome])
                    }
                    Message::EvalProof { claim: claim @ Claim::LePublic { slot: 0, bound }, proofs }
                        if *bound == second =>
                    {
                        self.verify_claim(claim, proofs)?;
                        self.expect(Outcome { winner, ..Outcome::sale(second) }, [Step::Outcome])
                    }
                    other => unexpected(other, "an evaluation for the reported bids"),
                }
            }
            (ExampleKind::Ex2, Message::Reveal { slot, openings }) if *slot < 2 => {
                let s = self.reveal(*slot, openings)?;
                let j = *slot as usize;
                ensure(s <= v[j], "revealed price exceeds the reported value for that item")?;
                let sale = Outcome { item: Some(*slot), ..Outcome::sale(s) };
                let bound = ex2_unsold_bound(*slot, s, [v[0], v[1]]);
                if bound > 0 {
                    self.expect(sale, [Step::Ge(1 - *slot, bound as u64), Step::Outcome])
                } else {
                    self.expect(sale, [Step::Outcome])
                }
            }
            (ExampleKind::Ex2, Message::EvalProof { claim, proofs }) if *claim == ge(0, v[0] + 1) => {
                self.verify_claim(claim, proofs)?;
                self.expect(Outcome::no_trade(), [Step::Ge(1, v[1] + 1), Step::Outcome])
            }
            (ExampleKind::Ex3, _) => {
                let half = v[0] / 2;
                match msg {
                    Message::EvalProof { claim, proofs } if *claim == ge(0, half + 1) => {
                        self.verify_claim(claim, proofs)?;
                        self.expect(Outcome::no_trade(), [Step::Outcome])
                    }
                    Message::Reveal { slot: 0, openings } => {
                        let s1 = self.reveal(0, openings)?;
                        ensure(s1 <= half, "revealed first price exceeds half the reported value")?;
                        let pending =
                            Outcome { trade: false, item: None, winner: None, payment: s1, lottery_draw: None };
                        self.expect(
                            pending,
                            [
                                Step::Ge(1, half + 1),
                                Step::CoinPair(1),
                                Step::CoinMask(1),
                                Step::CoinReveal,
                                Step::Outcome,
                            ],
                        )
                    }
                    Message::EvalProof { claim: claim @ Claim::Sum { sum, .. }, proofs } => {
                        self.verify_claim(claim, proofs)?;
                        self.expect(Outcome::sale(*sum), [Step::Le(1, half), Step::Outcome])
                    }
                    other => unexpected(other, "an evaluation for the reported value"),
                }
            }
            (ExampleKind::Ex4, Message::EvalProof { claim, proofs })
                if *claim == (Claim::LePublic { slot: 0, bound: v[0] }) =>
            {
                self.verify_claim(claim, proofs)?;
                let w = self.width;
                self.expect(Outcome::sale(0), [Step::CoinPair(w), Step::CoinMask(w), Step::Verdict, Step::Outcome])
            }
            (_, other) => unexpected(other, "an evaluation for the reported value"),
        }
    }

    fn expect<const N: usize>(&mut self, outcome: Outcome, steps: [Step; N]) -> Check {
        self.expected = outcome;
        self.steps = steps.into_iter().collect();
        Ok(())
    }

    fn on_step(&mut self, step: Step, msg: &Message) -> Check {
        match (step, msg) {
            (Step::Ge(slot, bound), Message::EvalProof { claim, proofs })
                if *claim == (Claim::GePublic { slot, bound }) =>
            {
                self.verify_claim(claim, proofs)
            }
            (Step::Le(slot, bound), Message::EvalProof { claim, proofs })
                if *claim == (Claim::LePublic { slot, bound }) =>
            {
                self.verify_claim(claim, proofs)
            }
            (Step::CoinPair(w), Message::CoinPair { pairs, proofs }) => {
                ensure(pairs.len() == w, "wrong number of coin pairs")?;
                ensure(verify_complement(&self.rf, pairs, &self.prefix, proofs), "complement-pair proof is invalid")?;
                self.pairs = pairs.clone();
                Ok(())
            }
            (Step::CoinMask(w), Message::CoinMask(y)) => {
                ensure(y.len() == w, "wrong coin mask width")?;
                let coin = coin_flip(&self.pairs, y, true).map_err(|e| e.to_string())?;
                self.z_com = Some(coin.z_com);
                Ok(())
            }
            (Step::CoinReveal, Message::Reveal { slot: COIN_SLOT, openings }) => {
                let z_com = self.z_com.as_ref().ok_or("coin was not flipped")?;
                let z = reveal_int(&self.rf, z_com, openings).map_err(|e| e.to_string())?;
                self.expected.trade = z == 1;
                self.expected.lottery_draw = Some(z);
                Ok(())
            }
            (Step::Verdict, Message::Verdict { verdict, borrows, proofs }) => {
                let z_com = self.z_com.as_ref().ok_or("coin was not flipped")?;
                let lt = LtProof { verdict: *verdict, borrows: borrows.clone(), bundle: proofs.clone() };
                ensure(
                    verify_lt_committed(&self.rf, z_com, &self.coms[0], &lt, &self.prefix),
                    "lottery verdict proof is invalid",
                )?;
                self.expected.payment = if *verdict { self.h } else { 0 };
                Ok(())
            }
            (Step::Outcome, Message::Outcome(o)) => {
                if *o != self.expected {
                    return Err(format!("announced outcome ({o}) differs from the verified one ({})", self.expected));
                }
                self.outcome = Some(o.clone());
                Ok(())
            }
            (step, other) => unexpected(other, &format!("{step:?}")),
        }
    }
}

fn ensure(cond: bool, reason: &str) -> Check {
    if cond {
        Ok(())
    } else {
        Err(reason.to_string())
    }
}

fn unexpected(msg: &Message, wanted: &str) -> Check {
    Err(format!("unexpected {} message, wanted {wanted}", msg.name()))
}

type ValueSource = Box<dyn FnMut() -> Result<Vec<u64>> + Send>;

/// The buyer: a [`Verifier`] that also sends the type report and coin mask.
pub struct Buyer {
    verifier: Verifier,
    values: ValueSource,
    rng: Box<dyn RngCore + Send>,
    mask: Option<u64>,
}

impl Buyer {
    pub fn new(
        rf: RefString,
        kind: ExampleKind,
        h: u64,
        values: Vec<u64>,
        rng: impl RngCore + Send + 'static,
    ) -> Result<Self> {
        Self::with_value_source(rf, kind, h, Box::new(move || Ok(values.clone())), rng)
    }

    /// The value source is called once, when the report is due, so an
    /// interactive buyer can decide after seeing the commitments.
    pub fn with_value_source(
        rf: RefString,
        kind: ExampleKind,
        h: u64,
        values: ValueSource,
        rng: impl RngCore + Send + 'static,
    ) -> Result<Self> {
        Ok(Buyer { verifier: Verifier::new(rf, kind, h)?, values, rng: Box::new(rng), mask: None })
    }

    /// Fixes the coin mask instead of drawing it.
    pub fn with_mask(mut self, y: u64) -> Self {
        self.mask = Some(y);
        self
    }

    pub fn verifier(&self) -> &Verifier {
        &self.verifier
    }

    pub fn receive(&mut self, msg: &Message) -> Result<()> {
        if msg.from_buyer() {
            return Err(Error::OutOfOrder {
                phase: self.verifier.phase_name().into(),
                detail: format!("buyer received its own {} message kind", msg.name()),
            });
        }
        self.verifier.observe(msg)
    }

    /// The buyer's next message, when it is the buyer's turn.
    pub fn poll(&mut self) -> Result<Option<Message>> {
        if self.verifier.next_speaker() != Some(Role::Buyer) {
            return Ok(None);
        }
        let msg = if let Some(w) = self.verifier.pending_mask_width() {
            let y = match self.mask {
                Some(y) => y,
                None => self.rng.next_u64() & ((1u64 << w) - 1),
            };
            Message::CoinMask(to_bits(y, w)?)
        } else {
            Message::TypeReport((self.values)()?)
        };
        self.verifier.observe(&msg)?;
        Ok(Some(msg))
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.verifier.outcome()
    }
}

/// Replays a transcript through a fresh verifier. With `rf` given, the
/// transcript's setup must name the same group and seed.
pub fn verify_transcript(rf: Option<&RefString>, t: &Transcript) -> Result<Outcome> {
    let fail =
        |phase: &str, index: usize, reason: String| Error::VerificationFailed { phase: phase.into(), index, reason };
    let setup = t.frames.first().ok_or_else(|| fail("setup", 0, "empty transcript".into()))?;
    let ref_string = match rf {
        Some(expected) => {
            if setup_frame(expected) != *setup {
                return Err(fail("setup", 0, "transcript was produced under a different reference string".into()));
            }
            expected.clone()
        }
        None => {
            let derived = read_setup(setup, None).map_err(|e| fail("setup", 0, e.to_string()))?;
            if setup_frame(&derived) != *setup {
                return Err(fail("setup", 0, "non-canonical setup frame".into()));
            }
            derived
        }
    };
    let kind: ExampleKind = t.kind.parse().map_err(|e: Error| fail("setup", 0, e.to_string()))?;
    let mut v = Verifier::new(ref_string, kind, t.h).map_err(|e| fail("setup", 0, e.to_string()))?;
    for (index, frame) in t.frames.iter().enumerate().skip(1) {
        let msg = super::message::Message::from_frame(v.rf.params(), frame)
            .map_err(|e| fail(v.phase_name(), index, e.to_string()))?;
        if msg.to_frame() != *frame {
            return Err(fail(v.phase_name(), index, "non-canonical message encoding".into()));
        }
        v.observe(&msg)?;
    }
    v.outcome.clone().ok_or_else(|| fail(v.phase_name(), t.frames.len(), "transcript ends before the outcome".into()))
}
