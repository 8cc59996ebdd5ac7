//! Weighted Groves transfers without a pivot, and recovery of the weights
//! from a single outcome.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrovesInstance {
    /// Weights, each in (0, 1), summing to 1.
    pub w: Vec<BigRational>,
    /// `t[i][y]`: player `i`'s nonnegative value for unpriced outcome `y`.
    pub t: Vec<Vec<BigRational>>,
}

/// Chosen outcome and the transfer `s^i` of every player.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrovesOutcome {
    pub y: usize,
    pub s: Vec<BigRational>,
}

impl GrovesInstance {
    pub fn new(w: Vec<BigRational>, t: Vec<Vec<BigRational>>) -> Result<Self> {
        if w.is_empty() || w.len() != t.len() {
            return Err(Error::InvalidInput("need one valuation per weight".into()));
        }
        let ys = t[0].len();
        if ys == 0 || t.iter().any(|ti| ti.len() != ys) {
            return Err(Error::InvalidInput("valuations must share a nonempty outcome set".into()));
        }
        if t.iter().flatten().any(Signed::is_negative) {
            return Err(Error::InvalidInput("valuations must be nonnegative".into()));
        }
        check_weights(&w)?;
        Ok(GrovesInstance { w, t })
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.t[0].len()
    }

    fn welfare(&self, y: usize) -> BigRational {
        self.w.iter().zip(&self.t).map(|(wi, ti)| wi * &ti[y]).sum()
    }
}

pub fn check_weights(w: &[BigRational]) -> Result<()> {
    let (zero, one) = (BigRational::zero(), BigRational::one());
    if w.iter().any(|x| *x <= zero || *x >= one) {
        return Err(Error::InvalidInput("weights must lie strictly between 0 and 1".into()));
    }
    if w.iter().sum::<BigRational>() != one {
        return Err(Error::InvalidInput("weights must sum to 1".into()));
    }
    Ok(())
}

/// Maximizes weighted welfare (first index on ties) and charges
/// `s^i = -(1/w_i) Σ_{j≠i} w_j t_j(y)`.
pub fn groves_outcome(inst: &GrovesInstance) -> GrovesOutcome {
    let mut y = 0;
    let mut best = inst.welfare(0);
    for cand in 1..inst.num_outcomes() {
        let wf = inst.welfare(cand);
        if wf > best {
            best = wf;
            y = cand;
        }
    }
    let s = (0..inst.n())
        .map(|i| {
            let others: BigRational = (0..inst.n()).filter(|&j| j != i).map(|j| &inst.w[j] * &inst.t[j][y]).sum();
            -others / &inst.w[i]
        })
        .collect();
    GrovesOutcome { y, s }
}

/// Recovers the weights from the reported valuations and one outcome:
/// `w_i ∝ 1 / (s^i - t_i(y))`.
pub fn groves_extract_weights(t: &[Vec<BigRational>], outcome: &GrovesOutcome) -> Result<Vec<BigRational>> {
    if t.iter().flatten().all(Zero::is_zero) {
        return Err(Error::Degenerate("every player is indifferent between all outcomes".into()));
    }
    if t.len() != outcome.s.len() || t.iter().any(|ti| outcome.y >= ti.len()) {
        return Err(Error::InvalidInput("outcome does not match the valuation profile".into()));
    }
    let inv = outcome
        .s
        .iter()
        .zip(t)
        .map(|(si, ti)| {
            let d = si - &ti[outcome.y];
            if d.is_zero() {
                Err(Error::Degenerate("zero denominator; outcome is not from these valuations".into()))
            } else {
                Ok(d.recip())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let total: BigRational = inv.iter().sum();
    Ok(inv.into_iter().map(|x| x / &total).collect())
}

impl fmt::Display for GrovesOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y={}", self.y)?;
        for (i, s) in self.s.iter().enumerate() {
            write!(f, " s{}={s}", i + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn hand_example() {
        let inst =
            GrovesInstance::new(vec![q(1, 2), q(1, 2)], vec![vec![q(4, 1), q(0, 1)], vec![q(0, 1), q(4, 1)]]).unwrap();
        let out = groves_outcome(&inst);
        assert_eq!(out, GrovesOutcome { y: 0, s: vec![q(0, 1), q(-4, 1)] });
        assert_eq!(groves_extract_weights(&inst.t, &out).unwrap(), inst.w);
    }

    #[test]
    fn degenerate_valuations() {
        let t = vec![vec![q(0, 1); 3]; 2];
        let out = GrovesOutcome { y: 0, s: vec![q(0, 1), q(0, 1)] };
        assert!(matches!(groves_extract_weights(&t, &out), Err(Error::Degenerate(_))));
    }

    #[test]
    fn weight_validation() {
        let t = vec![vec![q(1, 1)], vec![q(1, 1)]];
        assert!(GrovesInstance::new(vec![q(1, 2), q(1, 3)], t.clone()).is_err());
        assert!(GrovesInstance::new(vec![q(1, 1), q(0, 1)], t.clone()).is_err());
        assert!(GrovesInstance::new(vec![q(1, 2), q(1, 2)], vec![vec![q(-1, 1)], vec![q(1, 1)]]).is_err());
        assert!(GrovesInstance::new(vec![q(1, 2), q(1, 2)], t).is_ok());
    }
}
