//! Exact comparison of real and simulated transcript distributions.
//!
//! The real seller commits to its prices and answers the report with reveals
//! and interactive proofs. The simulator knows `ρ = log_g h`, commits to
//! zeros, and only after seeing the outcome picks some prices consistent
//! with it, opening each bit as needed: `g^u` opens to 0 with `u` and to 1
//! with `u/ρ`. Both are enumerated over all of their randomness and all
//! verifier challenges in a toy group.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::commit::{commit_bit, to_bits, BitOpening, IntCommitment};
use crate::error::{Error, Result};
use crate::gadgets::{
    ge_public_statements, ge_public_witnesses, le_public_statements, le_public_witnesses, Statements,
};
use crate::group::RefString;
use crate::protocols::mechanism::{ex2_unsold_bound, top_two};
use crate::protocols::{Branch, ExampleKind, Mechanism, MechanismSpec};
use crate::sigma::{all_coin_vectors, cds_prove_first_with, CdsWitness, ProverCoins};

pub const DEFAULT_BUDGET: u128 = 5_000_000;

/// Public flattening of one interactive run.
type View = Vec<BigUint>;
type Dist = HashMap<View, BigRational>;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Step {
    Reveal(usize),
    Ge(usize, u64),
    Le(usize, u64),
}

/// What the seller sends after the report, for the kinds without lotteries.
fn plan(spec: &MechanismSpec, report: &[u64]) -> Result<Vec<Step>> {
    use ExampleKind as K;
    let v = report;
    Ok(match (spec.kind(), spec.branch(report)?) {
        (K::Ex1, Branch::NoTrade) => vec![Step::Ge(0, v[0] + 1)],
        (K::Ex1, Branch::Sell { .. }) | (K::Ex1Multi, Branch::AuctionReserve { .. }) => vec![Step::Reveal(0)],
        (K::Ex1Multi, Branch::NoTrade) => vec![Step::Ge(0, top_two(v).1 + 1)],
        (K::Ex1Multi, Branch::AuctionSecond { payment, .. }) => vec![Step::Le(0, payment)],
        (K::Ex2, Branch::SellItem { item, payment }) => {
            let bound = ex2_unsold_bound(item, payment, [v[0], v[1]]);
            let mut steps = vec![Step::Reveal(item as usize)];
            if bound > 0 {
                steps.push(Step::Ge(1 - item as usize, bound as u64));
            }
            steps
        }
        (K::Ex2, Branch::NoTrade) => vec![Step::Ge(0, v[0] + 1), Step::Ge(1, v[1] + 1)],
        (kind, _) => {
            return Err(Error::InvalidInput(format!("{kind} involves lotteries and is not enumerated")));
        }
    })
}

fn respec(spec: &MechanismSpec, prices: &[u64]) -> Result<MechanismSpec> {
    let mech = match *spec.mechanism() {
        Mechanism::Ex1 { .. } => Mechanism::Ex1 { s: prices[0] },
        Mechanism::Ex1Multi { n_buyers, .. } => Mechanism::Ex1Multi { s: prices[0], n_buyers },
        Mechanism::Ex2 { .. } => Mechanism::Ex2 { s1: prices[0], s2: prices[1] },
        Mechanism::Ex3 { .. } => Mechanism::Ex3 { s1: prices[0], s2: prices[1] },
        Mechanism::Ex4 { .. } => Mechanism::Ex4 { s: prices[0] },
    };
    MechanismSpec::new(mech, spec.h())
}

/// The simulator's choice: the first price vector, in lexicographic order,
/// that yields the observed outcome on this report.
pub fn post_hoc_prices(spec: &MechanismSpec, report: &[u64]) -> Result<Vec<u64>> {
    let target = spec.outcome(report, 0)?;
    let k = spec.prices().len();
    let h = spec.h();
    let total = h.pow(k as u32);
    for idx in 0..total {
        let prices: Vec<u64> = (0..k).rev().map(|j| (idx / h.pow(j as u32)) % h).collect();
        if let Ok(cand) = respec(spec, &prices) {
            if cand.outcome(report, 0)? == target {
                return Ok(prices);
            }
        }
    }
    unreachable!("the real prices are always consistent")
}

fn step_statements(
    rf: &RefString,
    coms: &[IntCommitment],
    ops: &[Vec<BitOpening>],
    step: &Step,
) -> Result<(Statements, Vec<CdsWitness>)> {
    Ok(match *step {
        Step::Ge(i, w) => (ge_public_statements(rf, &coms[i], w)?, ge_public_witnesses(&ops[i], w)?),
        Step::Le(i, w) => (le_public_statements(rf, &coms[i], w)?, le_public_witnesses(&ops[i], w)?),
        Step::Reveal(_) => (Vec::new(), Vec::new()),
    })
}

fn cross(a: Vec<(View, BigRational)>, b: &[(View, BigRational)]) -> Vec<(View, BigRational)> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (va, pa) in &a {
        for (vb, pb) in b {
            let mut v = va.clone();
            v.extend_from_slice(vb);
            out.push((v, pa * pb));
        }
    }
    out
}

/// Everything one interactive proof can show, with its probability.
fn proof_views(
    rf: &RefString,
    stmt: &crate::sigma::CdsStatement,
    wit: &CdsWitness,
) -> Result<Vec<(View, BigRational)>> {
    let params = rf.params();
    let p = params.p().to_u64().expect("toy group");
    let n = ProverCoins::free_count(stmt, wit.row);
    let leaves = p.pow(n as u32 + 1);
    let weight = BigRational::new(1.into(), leaves.into());
    let mut out = Vec::with_capacity(leaves as usize);
    for flat in all_coin_vectors(p, n) {
        for beta in 1..=p {
            let coins = ProverCoins::from_flat(stmt, wit.row, &flat);
            let (first, state) = cds_prove_first_with(params, stmt, wit, coins)?;
            let beta = BigUint::from(beta);
            let resp = state.respond(&beta)?;
            let mut view: View = first.alphas.iter().flatten().map(|a| a.value().clone()).collect();
            view.push(beta);
            view.extend(resp.betas);
            view.extend(resp.gammas.into_iter().flatten());
            out.push((view, weight.clone()));
        }
    }
    Ok(out)
}

/// Distribution of the public view when the prices are committed with
/// exponents `exps` and opened by `open`.
fn view_distribution<F>(
    rf: &RefString,
    width: usize,
    count: usize,
    steps: &[Step],
    open: F,
    budget: u128,
) -> Result<Dist>
where
    F: Fn(usize, usize, &BigUint) -> BitOpening,
{
    let params = rf.params();
    let p = params.p().to_u64().expect("toy group");
    let nbits = width * count;
    let commit_space = (p - 1).pow(nbits as u32) as u128;
    let mut dist = Dist::new();
    let mut seen: u128 = 0;
    let base_weight = BigRational::new(1.into(), commit_space.into());
    for flat in all_coin_vectors(p - 1, nbits) {
        let exps: Vec<BigUint> = flat.into_iter().map(|e| e + 1u32).collect();
        let ops: Vec<Vec<BitOpening>> =
            (0..count).map(|i| (0..width).map(|j| open(i, j, &exps[i * width + j])).collect()).collect();
        let coms: Vec<IntCommitment> = ops
            .iter()
            .map(|o| Ok(IntCommitment { bits: o.iter().map(|b| commit_bit(rf, b.bit, &b.r)).collect::<Result<_>>()? }))
            .collect::<Result<_>>()?;
        let head: View = coms.iter().flat_map(|c| c.bits.iter().map(|b| b.0.value().clone())).collect();
        let mut runs = vec![(head, base_weight.clone())];
        for step in steps {
            if let Step::Reveal(i) = *step {
                let shown: View = ops[i].iter().flat_map(|o| [BigUint::from(o.bit as u8), o.r.clone()]).collect();
                runs = cross(runs, &[(shown, BigRational::one())]);
                continue;
            }
            let (stmts, wits) = step_statements(rf, &coms, &ops, step)?;
            for ((_, stmt), wit) in stmts.iter().zip(&wits) {
                let pv = proof_views(rf, stmt, wit)?;
                if seen + (runs.len() * pv.len()) as u128 > budget {
                    return Err(Error::BudgetExceeded(seen + (runs.len() * pv.len()) as u128));
                }
                runs = cross(runs, &pv);
            }
        }
        seen += runs.len() as u128;
        if seen > budget {
            return Err(Error::BudgetExceeded(seen));
        }
        for (v, w) in runs {
            *dist.entry(v).or_insert_with(|| BigRational::new(0.into(), 1.into())) += w;
        }
    }
    Ok(dist)
}

/// Brute-force `log_g h`, the simulator's trapdoor.
fn trapdoor(rf: &RefString) -> BigUint {
    let params = rf.params();
    let p = params.p().to_u64().expect("toy group");
    (1..p).map(BigUint::from).find(|e| params.pow(rf.g(), e) == *rf.h()).expect("h lies in the group generated by g")
}

/// True iff the real and simulated interactive transcripts have the same
/// distribution, compared exactly.
pub fn transcript_distribution_equality(
    rf: &RefString,
    spec: &MechanismSpec,
    report: &[u64],
    budget: u128,
) -> Result<bool> {
    let q = rf.params().q().to_u64();
    if !matches!(q, Some(7) | Some(23)) {
        return Err(Error::InvalidInput("enumeration needs the q = 7 or q = 23 group".into()));
    }
    if spec.width() > 2 {
        return Err(Error::InvalidInput("enumeration needs H <= 4".into()));
    }
    let width = spec.width();
    let real_prices = spec.prices();
    let steps = plan(spec, report)?;

    let real_bits: Vec<Vec<bool>> = real_prices.iter().map(|&s| to_bits(s, width)).collect::<Result<_>>()?;
    let real = view_distribution(
        rf,
        width,
        real_prices.len(),
        &steps,
        |i, j, e| BitOpening { bit: real_bits[i][j], r: e.clone() },
        budget,
    )?;

    let sim_prices = post_hoc_prices(spec, report)?;
    let sim_spec = respec(spec, &sim_prices)?;
    if plan(&sim_spec, report)? != steps {
        return Ok(false);
    }
    let params = rf.params();
    let rho_inv = params.exp_inv(&trapdoor(rf))?;
    let sim_bits: Vec<Vec<bool>> = sim_prices.iter().map(|&s| to_bits(s, width)).collect::<Result<_>>()?;
    // The simulator commits g^u everywhere and equivocates on the 1 bits.
    let sim = view_distribution(
        rf,
        width,
        sim_prices.len(),
        &steps,
        |i, j, u| {
            if sim_bits[i][j] {
                BitOpening { bit: true, r: params.mul_exp(u, &rho_inv) }
            } else {
                BitOpening { bit: false, r: u.clone() }
            }
        },
        budget,
    )?;
    Ok(real == sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{derive_generators, GroupParams};

    fn toy7() -> RefString {
        derive_generators(&GroupParams::toy7(), b"hiding").unwrap()
    }

    #[test]
    fn ex1_no_trade_is_simulatable() {
        let spec = MechanismSpec::new(Mechanism::Ex1 { s: 1 }, 2).unwrap();
        assert!(transcript_distribution_equality(&toy7(), &spec, &[0], DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn ex1_trade_reveals_everything() {
        let spec = MechanismSpec::new(Mechanism::Ex1 { s: 1 }, 2).unwrap();
        assert!(transcript_distribution_equality(&toy7(), &spec, &[1], DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn ex1_wider_prices_hide_which_one() {
        // The simulator picks s' = 2 while the real price is 3.
        let spec = MechanismSpec::new(Mechanism::Ex1 { s: 3 }, 4).unwrap();
        assert_eq!(post_hoc_prices(&spec, &[1]).unwrap(), vec![2]);
        assert!(transcript_distribution_equality(&toy7(), &spec, &[1], DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn ex2_selected_case() {
        let spec = MechanismSpec::new(Mechanism::Ex2 { s1: 0, s2: 1 }, 2).unwrap();
        assert!(transcript_distribution_equality(&toy7(), &spec, &[1, 1], DEFAULT_BUDGET).unwrap());
        let spec = MechanismSpec::new(Mechanism::Ex2 { s1: 1, s2: 1 }, 2).unwrap();
        assert!(transcript_distribution_equality(&toy7(), &spec, &[0, 0], DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn a_leaky_simulator_is_caught() {
        // Committing with the real bits but the wrong base on one bit shifts
        // the commitment distribution, which the comparison must notice.
        let rf = toy7();
        let spec = MechanismSpec::new(Mechanism::Ex1 { s: 1 }, 2).unwrap();
        let steps = plan(&spec, &[1]).unwrap();
        let a = view_distribution(&rf, 1, 1, &steps, |_, _, e| BitOpening { bit: true, r: e.clone() }, DEFAULT_BUDGET)
            .unwrap();
        let b = view_distribution(
            &rf,
            1,
            1,
            &steps,
            |_, _, e| BitOpening { bit: true, r: rf.params().mul_exp(e, e) },
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn limits() {
        let spec = MechanismSpec::new(Mechanism::Ex1 { s: 1 }, 2).unwrap();
        assert!(matches!(transcript_distribution_equality(&toy7(), &spec, &[0], 10), Err(Error::BudgetExceeded(_))));
        let spec = MechanismSpec::new(Mechanism::Ex4 { s: 1 }, 2).unwrap();
        assert!(transcript_distribution_equality(&toy7(), &spec, &[0], DEFAULT_BUDGET).is_err());
        let big = derive_generators(&GroupParams::rfc3526_2048(), b"x").unwrap();
        let spec = MechanismSpec::new(Mechanism::Ex1 { s: 1 }, 2).unwrap();
        assert!(transcript_distribution_equality(&big, &spec, &[0], DEFAULT_BUDGET).is_err());
    }
}
