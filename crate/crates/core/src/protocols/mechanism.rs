//! The five mechanism families, their parameters and their outcome rules.

use std::fmt;
use std::str::FromStr;

use crate::codec::{Reader, Wire, Writer};
use crate::error::{Error, Result};

/// Largest supported price bound.
pub const MAX_H: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExampleKind {
    /// Single buyer, hidden posted price.
    Ex1,
    /// Several bidders, hidden reserve, second-price payment.
    Ex1Multi,
    /// Two items, unit-demand buyer.
    Ex2,
    /// Two-part pricing with a half-probability first tier.
    Ex3,
    /// Hidden price paid in expectation via a verifiable lottery.
    Ex4,
}

impl ExampleKind {
    pub const ALL: [ExampleKind; 5] =
        [ExampleKind::Ex1, ExampleKind::Ex1Multi, ExampleKind::Ex2, ExampleKind::Ex3, ExampleKind::Ex4];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleKind::Ex1 => "ex1",
            ExampleKind::Ex1Multi => "ex1-multi",
            ExampleKind::Ex2 => "ex2",
            ExampleKind::Ex3 => "ex3",
            ExampleKind::Ex4 => "ex4",
        }
    }

    /// Number of committed prices.
    pub fn num_prices(self) -> usize {
        match self {
            ExampleKind::Ex2 | ExampleKind::Ex3 => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ExampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExampleKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown example kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mechanism {
    Ex1 { s: u64 },
    Ex1Multi { s: u64, n_buyers: usize },
    Ex2 { s1: u64, s2: u64 },
    Ex3 { s1: u64, s2: u64 },
    Ex4 { s: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismSpec {
    mech: Mechanism,
    h: u64,
}

/// Checks that `h` is a power of two in `[2, MAX_H]` and returns its bit width.
pub fn width_of(h: u64) -> Result<usize> {
    if !h.is_power_of_two() || !(2..=MAX_H).contains(&h) {
        return Err(Error::InvalidInput(format!("H={h} must be a power of two in [2, 2^32]")));
    }
    Ok(h.trailing_zeros() as usize)
}

impl MechanismSpec {
    pub fn new(mech: Mechanism, h: u64) -> Result<Self> {
        width_of(h)?;
        let spec = MechanismSpec { mech, h };
        if let Some(&bad) = spec.prices().iter().find(|&&x| x >= h) {
            return Err(Error::InvalidInput(format!("price {bad} is not below H={h}")));
        }
        match spec.mech {
            Mechanism::Ex1Multi { n_buyers, .. } if n_buyers < 2 => {
                return Err(Error::InvalidInput("multi-buyer auction needs at least two buyers".into()))
            }
            Mechanism::Ex3 { s1, s2 } if s1 > s2 => return Err(Error::IcViolation { s1, s2 }),
            _ => {}
        }
        Ok(spec)
    }

    pub fn mechanism(&self) -> &Mechanism {
        &self.mech
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn width(&self) -> usize {
        self.h.trailing_zeros() as usize
    }

    pub fn kind(&self) -> ExampleKind {
        match self.mech {
            Mechanism::Ex1 { .. } => ExampleKind::Ex1,
            Mechanism::Ex1Multi { .. } => ExampleKind::Ex1Multi,
            Mechanism::Ex2 { .. } => ExampleKind::Ex2,
            Mechanism::Ex3 { .. } => ExampleKind::Ex3,
            Mechanism::Ex4 { .. } => ExampleKind::Ex4,
        }
    }

    pub fn prices(&self) -> Vec<u64> {
        match self.mech {
            Mechanism::Ex1 { s } | Mechanism::Ex1Multi { s, .. } | Mechanism::Ex4 { s } => vec![s],
            Mechanism::Ex2 { s1, s2 } | Mechanism::Ex3 { s1, s2 } => vec![s1, s2],
        }
    }

    /// Number of values in a type report.
    pub fn report_len(&self) -> usize {
        match self.mech {
            Mechanism::Ex1Multi { n_buyers, .. } => n_buyers,
            Mechanism::Ex2 { .. } => 2,
            _ => 1,
        }
    }

    /// Which branch the mechanism takes for a report.
    pub fn branch(&self, report: &[u64]) -> Result<Branch> {
        check_report(self.kind(), self.h, report)?;
        if report.len() != self.report_len() {
            return Err(Error::InvalidInput(format!(
                "expected {} reported values, got {}",
                self.report_len(),
                report.len()
            )));
        }
        Ok(match self.mech {
            Mechanism::Ex1 { s } => {
                if s <= report[0] {
                    Branch::Sell { payment: s }
                } else {
                    Branch::NoTrade
                }
            }
            Mechanism::Ex1Multi { s, .. } => {
                let (winner, max, second) = top_two(report);
                if s > max {
                    Branch::NoTrade
                } else if s > second {
                    Branch::AuctionReserve { winner, payment: s }
                } else {
                    Branch::AuctionSecond { winner, payment: second }
                }
            }
            Mechanism::Ex2 { s1, s2 } => match ex2_choice([s1, s2], [report[0], report[1]]) {
                Some(item) => Branch::SellItem { item, payment: [s1, s2][item as usize] },
                None => Branch::NoTrade,
            },
            Mechanism::Ex3 { s1, s2 } => {
                let half = report[0] / 2;
                if s1 > half {
                    Branch::NoTrade
                } else if s2 > half {
                    Branch::HalfLottery { payment: s1 }
                } else {
                    Branch::Sell { payment: s1 + s2 }
                }
            }
            Mechanism::Ex4 { s } => {
                if report[0] < s {
                    Branch::NoTrade
                } else {
                    Branch::PaymentLottery { s }
                }
            }
        })
    }

    /// Outcome for a report. `draw` is the public coin for the half lottery
    /// (0 or 1) or the uniform `z` in `[0, H)` for the payment lottery; it is
    /// ignored by deterministic branches.
    pub fn outcome(&self, report: &[u64], draw: u64) -> Result<Outcome> {
        Ok(match self.branch(report)? {
            Branch::NoTrade => Outcome::no_trade(),
            Branch::Sell { payment } => Outcome::sale(payment),
            Branch::AuctionReserve { winner, payment } | Branch::AuctionSecond { winner, payment } => {
                Outcome { winner: Some(winner as u8), ..Outcome::sale(payment) }
            }
            Branch::SellItem { item, payment } => Outcome { item: Some(item), ..Outcome::sale(payment) },
            Branch::HalfLottery { payment } => {
                Outcome { trade: draw == 1, item: None, winner: None, payment, lottery_draw: Some(draw) }
            }
            Branch::PaymentLottery { s } => Outcome::sale(if draw < s { self.h } else { 0 }),
        })
    }
}

/// Validates a type report against the price bound.
pub fn check_report(kind: ExampleKind, h: u64, report: &[u64]) -> Result<()> {
    let ok_len = match kind {
        ExampleKind::Ex1Multi => report.len() >= 2 && report.len() <= 255,
        ExampleKind::Ex2 => report.len() == 2,
        _ => report.len() == 1,
    };
    if !ok_len {
        return Err(Error::InvalidInput(format!("wrong number of reported values for {kind}")));
    }
    if let Some(&bad) = report.iter().find(|&&v| v >= h) {
        return Err(Error::InvalidInput(format!("reported value {bad} is not below H={h}")));
    }
    Ok(())
}

/// Highest bid (lowest index wins ties), its index and the second-highest bid.
pub fn top_two(bids: &[u64]) -> (usize, u64, u64) {
    let (winner, &max) =
        bids.iter().enumerate().fold((0, &bids[0]), |best, (i, b)| if b > best.1 { (i, b) } else { best });
    let second = bids.iter().enumerate().filter(|&(i, _)| i != winner).map(|(_, &b)| b).max().unwrap_or(0);
    (winner, max, second)
}

/// Utility-maximizing affordable item, lower index on ties.
pub fn ex2_choice(prices: [u64; 2], values: [u64; 2]) -> Option<u8> {
    let util = |i: usize| (prices[i] <= values[i]).then(|| values[i] as i64 - prices[i] as i64);
    match (util(0), util(1)) {
        (None, None) => None,
        (Some(_), None) => Some(0),
        (None, Some(_)) => Some(1),
        (Some(a), Some(b)) => Some(if a >= b { 0 } else { 1 }),
    }
}

/// Lower bound on the unsold item's price when item `sold` sells at `price`:
/// buying the other item must not be strictly better (or equally good with a
/// lower index). Non-positive bounds are vacuous.
pub fn ex2_unsold_bound(sold: u8, price: u64, values: [u64; 2]) -> i64 {
    let j = sold as usize;
    let i = 1 - j;
    price as i64 - values[j] as i64 + values[i] as i64 + (i < j) as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    NoTrade,
    Sell { payment: u64 },
    AuctionReserve { winner: usize, payment: u64 },
    AuctionSecond { winner: usize, payment: u64 },
    SellItem { item: u8, payment: u64 },
    HalfLottery { payment: u64 },
    PaymentLottery { s: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub trade: bool,
    pub item: Option<u8>,
    pub winner: Option<u8>,
    pub payment: u64,
    /// Public coin of a half-probability allocation.
    pub lottery_draw: Option<u64>,
}

impl Outcome {
    pub fn no_trade() -> Self {
        Outcome { trade: false, item: None, winner: None, payment: 0, lottery_draw: None }
    }

    pub fn sale(payment: u64) -> Self {
        Outcome { trade: true, item: None, winner: None, payment, lottery_draw: None }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trade={} payment={}", self.trade, self.payment)?;
        if let Some(i) = self.item {
            write!(f, " item={}", i + 1)?;
        }
        if let Some(w) = self.winner {
            write!(f, " winner={}", w + 1)?;
        }
        if let Some(d) = self.lottery_draw {
            write!(f, " lottery_draw={d}")?;
        }
        Ok(())
    }
}

fn write_opt_u8(w: &mut Writer, x: Option<u8>) {
    match x {
        None => w.u8(0),
        Some(v) => w.u8(1).u8(v),
    };
}

fn read_opt_u8(r: &mut Reader<'_>) -> Result<Option<u8>> {
    Ok(if r.bool()? { Some(r.u8()?) } else { None })
}

impl Wire for Outcome {
    fn write(&self, w: &mut Writer) {
        w.put(&self.trade);
        write_opt_u8(w, self.item);
        write_opt_u8(w, self.winner);
        w.u64(self.payment);
        match self.lottery_draw {
            None => w.u8(0),
            Some(d) => w.u8(1).u64(d),
        };
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let trade = r.bool()?;
        let item = read_opt_u8(r)?;
        let winner = read_opt_u8(r)?;
        let payment = r.u64()?;
        let lottery_draw = if r.bool()? { Some(r.u64()?) } else { None };
        Ok(Outcome { trade, item, winner, payment, lottery_draw })
    }
}
