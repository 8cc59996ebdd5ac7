//! Two-sided geometric noise on a truncation window, and how far apart the
//! output distributions for shifted inputs can be.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Pow};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};

/// `Pr[Noise = z] = (1 - α)/(1 + α) · α^|z|` before truncation, exactly.
pub fn geometric_pmf_exact(alpha: &BigRational, z: i64) -> BigRational {
    let one = BigRational::one();
    (&one - alpha) / (&one + alpha) * Pow::pow(alpha, z.unsigned_abs())
}

fn check(alpha: f64, lo: i64, hi: i64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if lo > 0 || hi < 0 || lo == hi {
        return Err(Error::Degenerate(format!("window [{lo}, {hi}] must contain 0 and another point")));
    }
    Ok(())
}

/// The pmf renormalized over `[lo, hi]`, indexed from `lo`.
pub fn truncated_pmf(alpha: f64, lo: i64, hi: i64) -> Result<Vec<f64>> {
    check(alpha, lo, hi)?;
    let w: Vec<f64> = (lo..=hi).map(|z| alpha.powi(z.unsigned_abs() as i32)).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// One draw from the truncated two-sided geometric distribution.
pub fn geometric_noise<R: Rng + ?Sized>(alpha: f64, bounds: (i64, i64), rng: &mut R) -> Result<i64> {
    let (lo, hi) = bounds;
    let pmf = truncated_pmf(alpha, lo, hi)?;
    let dist = WeightedIndex::new(&pmf).map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok(lo + dist.sample(rng) as i64)
}

/// Sampler reusable across many draws.
pub struct NoiseSampler {
    lo: i64,
    dist: WeightedIndex<f64>,
}

impl NoiseSampler {
    pub fn new(alpha: f64, bounds: (i64, i64)) -> Result<Self> {
        let pmf = truncated_pmf(alpha, bounds.0, bounds.1)?;
        let dist = WeightedIndex::new(&pmf).map_err(|e| Error::Degenerate(e.to_string()))?;
        Ok(NoiseSampler { lo: bounds.0, dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.lo + self.dist.sample(rng) as i64
    }
}

#[derive(Clone, Debug)]
pub struct RatioBin {
    pub y: i64,
    /// `ln(Pr[x + N = y] / Pr[x + ℓ + N = y])`, or `None` when one side is zero.
    pub log_ratio: Option<f64>,
    pub boundary: bool,
}

/// Compares `x + Noise` with `x + ℓ + Noise` for noise on `[-n, n]`.
#[derive(Clone, Debug)]
pub struct NoiseReport {
    pub epsilon: f64,
    pub ell: u32,
    pub n: i64,
    pub bins: Vec<RatioBin>,
    /// `ℓ · |ln(1 - ε)|`.
    pub bound: f64,
    pub max_interior: f64,
    pub boundary_bins: usize,
}

impl NoiseReport {
    /// Largest amount by which an interior log ratio exceeds the bound.
    pub fn max_excess(&self) -> f64 {
        (self.max_interior - self.bound).max(0.0)
    }

    pub fn holds(&self) -> bool {
        self.max_excess() <= 1e-9
    }
}

/// Interior bins are outputs both inputs reach without touching a window
/// end; boundary bins are reported but not judged.
pub fn noise_ratio_report(epsilon: f64, ell: u32, n: i64) -> Result<NoiseReport> {
    let alpha = 1.0 - epsilon;
    let pmf = truncated_pmf(alpha, -n, n)?;
    if ell as i64 > n {
        return Err(Error::Degenerate(format!("shift {ell} exceeds the window half-width {n}")));
    }
    let l = ell as i64;
    let at = |z: i64| if (-n..=n).contains(&z) { pmf[(z + n) as usize] } else { 0.0 };
    let mut bins = Vec::new();
    // x = 0: outputs of the unshifted input are y, of the shifted y - ℓ.
    for y in -n..=n + l {
        let (a, b) = (at(y), at(y - l));
        let boundary = !((-n + 1..n).contains(&y) && (-n + 1..n).contains(&(y - l)));
        let log_ratio = (a > 0.0 && b > 0.0).then(|| (a / b).ln());
        bins.push(RatioBin { y, log_ratio, boundary });
    }
    let max_interior =
        bins.iter().filter(|b| !b.boundary).filter_map(|b| b.log_ratio.map(f64::abs)).fold(0.0, f64::max);
    let boundary_bins = bins.iter().filter(|b| b.boundary).count();
    Ok(NoiseReport { epsilon, ell, n, bins, bound: ell as f64 * alpha.ln().abs(), max_interior, boundary_bins })
}

impl fmt::Display for NoiseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bins {
            let r = b.log_ratio.map_or("inf".to_string(), |r| format!("{r:.6}"));
            let tag = if b.boundary { " boundary" } else { "" };
            writeln!(f, "y={} log_ratio={r}{tag}", b.y)?;
        }
        writeln!(f, "epsilon={}", self.epsilon)?;
        writeln!(f, "ell={}", self.ell)?;
        writeln!(f, "window={}", self.n)?;
        writeln!(f, "bound={:.9}", self.bound)?;
        writeln!(f, "max_interior={:.9}", self.max_interior)?;
        writeln!(f, "max_excess={:.3e}", self.max_excess())?;
        writeln!(f, "boundary_bins={}", self.boundary_bins)?;
        writeln!(f, "holds={}", self.holds())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::seeded_rng;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exact_pmf() {
        let alpha = q(9, 10);
        assert_eq!(geometric_pmf_exact(&alpha, 0), q(1, 19));
        for z in 1..20 {
            assert_eq!(geometric_pmf_exact(&alpha, z) / geometric_pmf_exact(&alpha, z - 1), alpha);
            assert_eq!(geometric_pmf_exact(&alpha, -z), geometric_pmf_exact(&alpha, z));
        }
    }

    #[test]
    fn interior_ratio_is_one_minus_epsilon() {
        let r = noise_ratio_report(0.1, 1, 20).unwrap();
        let want = 0.9f64.ln();
        for b in r.bins.iter().filter(|b| !b.boundary && b.y >= 1) {
            assert!((b.log_ratio.unwrap() - want).abs() < 1e-12, "{b:?}");
        }
        assert!(r.holds());
        assert!(r.boundary_bins > 0);
        let r3 = noise_ratio_report(0.1, 3, 20).unwrap();
        assert!((r3.max_interior - 3.0 * 0.9f64.ln().abs()).abs() < 1e-9);
        assert!(r3.to_string().contains("holds=true"));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(truncated_pmf(1.0, -3, 3).is_err());
        assert!(truncated_pmf(0.5, 0, 0).is_err());
        assert!(truncated_pmf(0.5, 1, 3).is_err());
        assert!(noise_ratio_report(0.1, 5, 3).is_err());
        let mut rng = seeded_rng(b"t", b"noise-one");
        let z = geometric_noise(0.5, (0, 4), &mut rng).unwrap();
        assert!((0..=4).contains(&z));
    }

    #[test]
    fn empirical_pmf_within_three_sigma() {
        let (alpha, n, draws) = (0.9, 50, 1_000_000usize);
        let pmf = truncated_pmf(alpha, -n, n).unwrap();
        let sampler = NoiseSampler::new(alpha, (-n, n)).unwrap();
        let mut rng = seeded_rng(b"t", b"noise-3sigma");
        let mut counts = vec![0u64; pmf.len()];
        for _ in 0..draws {
            counts[(sampler.sample(&mut rng) + n) as usize] += 1;
        }
        for (i, (&c, &p)) in counts.iter().zip(&pmf).enumerate() {
            let mean = draws as f64 * p;
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((c as f64 - mean).abs() <= 3.0 * sd, "bin {} count {c} mean {mean}", i as i64 - n);
        }
    }
}
