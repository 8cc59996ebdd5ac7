//! Exact incentive checks for finite direct mechanisms.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A finite direct mechanism with lotteries over outcomes and exact
/// utilities. Types and outcomes are referred to by index; the labels are
/// only for reporting.
#[derive(Clone, Debug)]
pub struct FiniteMechanism {
    type_labels: Vec<Vec<String>>,
    outcome_labels: Vec<String>,
    table: BTreeMap<Vec<usize>, Vec<BigRational>>,
    utility: Vec<Vec<Vec<BigRational>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// Truthful participation has negative expected utility.
    Ir,
    /// Some misreport does strictly better than the truth.
    Dsic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub agent: usize,
    pub profile: Vec<usize>,
    pub misreport: Option<usize>,
    /// Utility lost by truthful behaviour, always positive.
    pub gain: BigRational,
}

impl FiniteMechanism {
    /// `table` maps each type profile to a distribution over outcomes;
    /// `utility[i][t][x]` is agent `i`'s utility for outcome `x` at type `t`.
    pub fn new(
        type_labels: Vec<Vec<String>>,
        outcome_labels: Vec<String>,
        table: BTreeMap<Vec<usize>, Vec<BigRational>>,
        utility: Vec<Vec<Vec<BigRational>>>,
    ) -> Result<Self> {
        let n = type_labels.len();
        if n == 0 || type_labels.iter().any(Vec::is_empty) || outcome_labels.is_empty() {
            return Err(Error::InvalidInput("mechanism needs agents, types and outcomes".into()));
        }
        if utility.len() != n
            || utility
                .iter()
                .zip(&type_labels)
                .any(|(u, ts)| u.len() != ts.len() || u.iter().any(|row| row.len() != outcome_labels.len()))
        {
            return Err(Error::InvalidInput("utility table has the wrong shape".into()));
        }
        let m = FiniteMechanism { type_labels, outcome_labels, table, utility };
        let profiles = m.profiles();
        if m.table.len() != profiles.len() {
            return Err(Error::InvalidInput("table must list every type profile exactly once".into()));
        }
        for p in &profiles {
            let dist = m.table.get(p).ok_or_else(|| Error::InvalidInput(format!("missing profile {p:?}")))?;
            if dist.len() != m.outcome_labels.len() || dist.iter().any(Signed::is_negative) {
                return Err(Error::InvalidInput(format!("bad distribution at profile {p:?}")));
            }
            if dist.iter().sum::<BigRational>() != BigRational::one() {
                return Err(Error::InvalidInput(format!("distribution at profile {p:?} does not sum to 1")));
            }
        }
        Ok(m)
    }

    pub fn num_agents(&self) -> usize {
        self.type_labels.len()
    }

    pub fn num_types(&self, agent: usize) -> usize {
        self.type_labels[agent].len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcome_labels.len()
    }

    pub fn type_label(&self, agent: usize, t: usize) -> &str {
        &self.type_labels[agent][t]
    }

    pub fn outcome_label(&self, x: usize) -> &str {
        &self.outcome_labels[x]
    }

    pub fn distribution(&self, profile: &[usize]) -> &[BigRational] {
        &self.table[profile]
    }

    pub fn utility(&self, agent: usize, t: usize, x: usize) -> &BigRational {
        &self.utility[agent][t][x]
    }

    /// Every type profile in lexicographic order.
    pub fn profiles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for labels in &self.type_labels {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..labels.len()).map(move |t| {
                        let mut q = p.clone();
                        q.push(t);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Expected utility of `agent` with true type `t` when the reported
    /// profile is `reported`.
    pub fn expected_utility(&self, agent: usize, t: usize, reported: &[usize]) -> BigRational {
        self.table[reported].iter().zip(&self.utility[agent][t]).map(|(p, u)| p * u).sum()
    }

    pub fn describe(&self, v: &Violation) -> String {
        let profile: Vec<&str> = v.profile.iter().enumerate().map(|(i, &t)| self.type_label(i, t)).collect();
        match v.misreport {
            Some(m) => format!(
                "agent {} with profile ({}) gains {} by reporting {}",
                v.agent,
                profile.join(", "),
                v.gain,
                self.type_label(v.agent, m)
            ),
            None => {
                format!("agent {} with profile ({}) loses {} by participating", v.agent, profile.join(", "), v.gain)
            }
        }
    }
}

/// All IR and DSIC violations, in profile order. Empty iff the mechanism is
/// individually rational and truthful in dominant strategies.
pub fn check_dsic_ir(m: &FiniteMechanism) -> Vec<Violation> {
    let mut out = Vec::new();
    for profile in m.profiles() {
        for agent in 0..m.num_agents() {
            let t = profile[agent];
            let truthful = m.expected_utility(agent, t, &profile);
            if truthful.is_negative() {
                out.push(Violation {
                    kind: ViolationKind::Ir,
                    agent,
                    profile: profile.clone(),
                    misreport: None,
                    gain: -truthful.clone(),
                });
            }
            for lie in 0..m.num_types(agent) {
                let mut reported = profile.clone();
                reported[agent] = lie;
                let gain = m.expected_utility(agent, t, &reported) - &truthful;
                if gain.is_positive() {
                    out.push(Violation {
                        kind: ViolationKind::Dsic,
                        agent,
                        profile: profile.clone(),
                        misreport: Some(lie),
                        gain,
                    });
                }
            }
        }
    }
    out
}

fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn half_label(k: u64) -> String {
    if k.is_multiple_of(2) {
        (k / 2).to_string()
    } else {
        format!("{}.5", k / 2)
    }
}

/// Single-buyer posted price `s` with values `0..h`.
pub fn posted_price_mechanism(s: u64, h: u64) -> FiniteMechanism {
    let types: Vec<String> = (0..h).map(|v| v.to_string()).collect();
    let outcomes = vec!["no trade".to_string(), format!("trade at {s}")];
    let mut table = BTreeMap::new();
    let mut util = Vec::new();
    for v in 0..h {
        let trade = v >= s;
        table.insert(vec![v as usize], vec![int(!trade as i64), int(trade as i64)]);
        util.push(vec![BigRational::zero(), int(v as i64 - s as i64)]);
    }
    FiniteMechanism::new(vec![types], outcomes, table, vec![util]).expect("posted price table is well formed")
}

/// The two-part pricing mechanism with prices `s1` (first half chance) and
/// `s2` (second half). Values run over the half-integer grid `[0, 2h)`, so
/// every value whose half is compared to a price is present, including the
/// misreport `2 s1`.
pub fn two_part_mechanism(s1: u64, s2: u64, h: u64) -> FiniteMechanism {
    let grid: Vec<u64> = (0..4 * h).collect();
    let types: Vec<String> = grid.iter().map(|&k| half_label(k)).collect();
    let outcomes = vec![
        "nothing".to_string(),
        format!("item, pay {s1}"),
        format!("no item, pay {s1}"),
        format!("item, pay {}", s1 + s2),
    ];
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut table = BTreeMap::new();
    let mut util = Vec::new();
    for &k in &grid {
        // v = k/2, so v/2 < s  iff  k < 4s.
        let dist = if k < 4 * s1 {
            vec![int(1), int(0), int(0), int(0)]
        } else if k < 4 * s2 {
            vec![int(0), half.clone(), half.clone(), int(0)]
        } else {
            vec![int(0), int(0), int(0), int(1)]
        };
        table.insert(vec![k as usize], dist);
        let v = BigRational::new(BigInt::from(k), BigInt::from(2));
        util.push(vec![BigRational::zero(), &v - int(s1 as i64), -int(s1 as i64), &v - int((s1 + s2) as i64)]);
    }
    FiniteMechanism::new(vec![types], outcomes, table, vec![util]).expect("two-part table is well formed")
}

/// Index of value `v` (an integer) in [`two_part_mechanism`]'s type list.
pub fn two_part_type_index(v: u64) -> usize {
    (2 * v) as usize
}

/// Checks, for every price pair below `h`, that the two-part mechanism has
/// no violation exactly when `s1 <= s2`.
pub fn ex3_ic_lemma_check(h: u64) -> Result<bool> {
    if h == 0 || h > 32 {
        return Err(Error::InvalidInput(format!("H must lie in 1..=32, got {h}")));
    }
    Ok((0..h).all(|s1| (0..h).all(|s2| check_dsic_ir(&two_part_mechanism(s1, s2, h)).is_empty() == (s1 <= s2))))
}

/// Line report of the lemma scan.
#[derive(Clone, Debug)]
pub struct IcLemmaReport {
    pub h: u64,
    pub rows: Vec<(u64, u64, usize)>,
    pub holds: bool,
}

pub fn ic_lemma_report(h: u64) -> Result<IcLemmaReport> {
    let holds = ex3_ic_lemma_check(h)?;
    let rows = (0..h)
        .flat_map(|s1| (0..h).map(move |s2| (s1, s2)))
        .map(|(s1, s2)| (s1, s2, check_dsic_ir(&two_part_mechanism(s1, s2, h)).len()))
        .collect();
    Ok(IcLemmaReport { h, rows, holds })
}

impl fmt::Display for IcLemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s1, s2, n) in &self.rows {
            let verdict = if *n == 0 { "ic" } else { "not-ic" };
            writeln!(f, "s1={s1} s2={s2} violations={n} {verdict}")?;
        }
        let pairs = self.rows.len();
        let ic = self.rows.iter().filter(|r| r.2 == 0).count();
        writeln!(f, "H={}", self.h)?;
        writeln!(f, "pairs={pairs}")?;
        writeln!(f, "ic_pairs={ic}")?;
        writeln!(f, "lemma_holds={}", self.holds)
    }
}
