//! Standard-normal primitives and upper-truncated Gaussian quantities.
//!
//! Everything here is in nats. The hot-path functions take `f64` and return
//! `f64`; infinite arguments are treated as their limits (`Ψ(+∞) = 1`,
//! `log Ψ(−∞) = −∞`) so callers can express "no truncation" with an infinite
//! bound. The `try_*` variants reject non-finite input.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// `0.5 · ln(2π)`
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `log_std_cdf` switches to the continued-fraction branch.
pub const LOG_CDF_ASYMPTOTIC_THRESHOLD: f64 = -8.0;

const MILLS_CF_TERMS: usize = 80;

/// Standard normal density ψ(z).
pub fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `ln ψ(z)`
pub fn log_std_pdf(z: f64) -> f64 {
    -0.5 * z * z - HALF_LN_2PI
}

/// Standard normal distribution function Ψ(z).
pub fn std_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `ln Ψ(z)`, finite for every finite `z`.
pub fn log_std_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z > 0.0 {
        // Ψ(z) = 1 − Ψ(−z); keep the small complement exact.
        (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else if z >= LOG_CDF_ASYMPTOTIC_THRESHOLD {
        std_cdf(z).ln()
    } else if z == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        // Ψ(z) = ψ(z) · R(−z) with R the Mills ratio.
        log_std_pdf(z) + mills_ratio(-z).ln()
    }
}

/// Mills ratio `R(x) = Ψ(−x) / ψ(x)` for `x ≥ 8`, by backward evaluation of
/// `1 / (x + 1/(x + 2/(x + 3/(x + …))))`.
fn mills_ratio(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=MILLS_CF_TERMS).rev() {
        tail = x + k as f64 / tail;
    }
    1.0 / tail
}

/// Inverse Mills ratio `ψ(z) / Ψ(z)`, the derivative of `ln Ψ(z)`.
pub fn inverse_mills(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 0.0;
    }
    if z == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    (log_std_pdf(z) - log_std_cdf(z)).exp()
}

fn finite(z: f64) -> Result<f64> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::InvalidInput(format!("non-finite argument {z}")))
    }
}

pub fn try_std_pdf(z: f64) -> Result<f64> {
    finite(z).map(std_pdf)
}

pub fn try_std_cdf(z: f64) -> Result<f64> {
    finite(z).map(std_cdf)
}

pub fn try_log_std_cdf(z: f64) -> Result<f64> {
    finite(z).map(log_std_cdf)
}

/// Density of `𝓝(mean, variance)` at `y`.
pub fn gaussian_pdf(y: f64, mean: f64, variance: f64) -> f64 {
    let sd = variance.sqrt();
    std_pdf((y - mean) / sd) / sd
}

pub fn log_gaussian_pdf(y: f64, mean: f64, variance: f64) -> f64 {
    let sd = variance.sqrt();
    log_std_pdf((y - mean) / sd) - sd.ln()
}

/// `ln Σ exp(vᵢ)` without overflow.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("log_sum_exp of an empty vector".into()));
    }
    Ok(log_sum_exp_nonempty(values))
}

/// Same as [`log_sum_exp`] for callers that guarantee a nonempty slice.
/// A single element is returned unchanged.
pub(crate) fn log_sum_exp_nonempty(values: &[f64]) -> f64 {
    if values.len() == 1 {
        return values[0];
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// A Gaussian restricted to `(−∞, upper]` and renormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperTruncatedGaussian {
    mean: f64,
    stddev: f64,
    upper: f64,
}

impl UpperTruncatedGaussian {
    /// `upper` may be `+∞` (no truncation).
    pub fn new(mean: f64, stddev: f64, upper: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidInput(format!("truncated Gaussian mean {mean}")));
        }
        if !(stddev.is_finite() && stddev > 0.0) {
            return Err(Error::InvalidInput(format!(
                "truncated Gaussian stddev must be positive, got {stddev}"
            )));
        }
        if upper.is_nan() || upper == f64::NEG_INFINITY {
            return Err(Error::InvalidInput(format!(
                "truncated Gaussian upper bound {upper}"
            )));
        }
        Ok(Self {
            mean,
            stddev,
            upper,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stddev(&self) -> f64 {
        self.stddev
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Standardized bound `h = (u − μ) / σ`.
    pub fn standardized_bound(&self) -> f64 {
        (self.upper - self.mean) / self.stddev
    }

    /// Density at `y`; zero above the bound.
    pub fn pdf(&self, y: f64) -> f64 {
        if y > self.upper {
            return 0.0;
        }
        let z = (y - self.mean) / self.stddev;
        (log_std_pdf(z) - self.stddev.ln() - log_std_cdf(self.standardized_bound())).exp()
    }

    /// Differential entropy in nats:
    /// `½ ln(2πeσ²) + ln Ψ(h) − h ψ(h) / (2 Ψ(h))`.
    pub fn entropy(&self) -> f64 {
        let gaussian = 0.5 * (2.0 * PI * std::f64::consts::E * self.stddev * self.stddev).ln();
        let h = self.standardized_bound();
        if h == f64::INFINITY {
            return gaussian;
        }
        gaussian + log_std_cdf(h) - 0.5 * h * inverse_mills(h)
    }
}

/// Entropy of an upper-truncated Gaussian.
pub fn trunc_gauss_entropy(tg: &UpperTruncatedGaussian) -> f64 {
    tg.entropy()
}

/// Density of an upper-truncated Gaussian at `y`.
pub fn trunc_gauss_pdf(tg: &UpperTruncatedGaussian, y: f64) -> f64 {
    tg.pdf(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pdf_and_cdf_at_zero() {
        assert_eq!(std_cdf(0.0), 0.5);
        assert!((std_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
    }

    #[test]
    fn log_cdf_deep_tail_matches_extended_precision() {
        // 50-digit reference values, log of the normal cdf
        let cases = [
            (-40.0, -804.608_442_013_753_8),
            (-8.5, -39.197_396_428_217_67),
            (-10.0, -53.231_285_150_512_47),
            (-1.0e3, -500_007.826_694_812_18),
        ];
        for (z, want) in cases {
            let got = log_std_cdf(z);
            assert!(
                ((got - want) / want).abs() < 1e-10,
                "z={z}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn log_cdf_finite_far_out() {
        assert!(log_std_cdf(-1e6).is_finite());
        assert_eq!(log_std_cdf(f64::INFINITY), 0.0);
        assert_eq!(log_std_cdf(f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert!(try_log_std_cdf(f64::NAN).is_err());
        assert!(try_std_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn log_cdf_branches_agree_where_both_apply() {
        let mut z = -8.0;
        while z < 8.0 {
            let diff = (log_std_cdf(z) - std_cdf(z).ln()).abs();
            assert!(diff < 1e-12, "z={z}: diff {diff}");
            z += 0.013;
        }
        // continuity across the branch switch
        let left = log_std_cdf(-8.0 - 1e-9);
        let right = log_std_cdf(-8.0);
        assert!((left - right).abs() < 1e-7);
    }

    #[test]
    fn log_sum_exp_cases() {
        assert_eq!(log_sum_exp(&[3.25]).unwrap(), 3.25);
        assert!((log_sum_exp(&[0.0, 0.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(log_sum_exp(&[]).is_err());
        assert!((log_sum_exp(&[1000.0, 1000.0]).unwrap() - 1000.0 - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn truncated_pdf_examples() {
        let tg = UpperTruncatedGaussian::new(0.0, 1.0, 0.5).unwrap();
        assert_eq!(tg.pdf(0.6), 0.0);
        let want = std_pdf(0.0) / std_cdf(0.5);
        assert!(((tg.pdf(0.0) - want) / want).abs() < 1e-14);

        let open = UpperTruncatedGaussian::new(0.3, 2.0, f64::INFINITY).unwrap();
        for y in [-3.0, 0.0, 0.3, 4.0] {
            let want = gaussian_pdf(y, 0.3, 4.0);
            assert!(((open.pdf(y) - want) / want).abs() < 1e-14);
        }
    }

    #[test]
    fn untruncated_entropy_is_gaussian() {
        let tg = UpperTruncatedGaussian::new(1.0, 0.7, f64::INFINITY).unwrap();
        let want = 0.5 * (2.0 * PI * std::f64::consts::E * 0.49).ln();
        assert!((tg.entropy() - want).abs() < 1e-15);
    }

    #[test]
    fn entropy_never_nan_deep_in_tail() {
        for h in [-37.5, -100.0, -1e4, -1e6] {
            let tg = UpperTruncatedGaussian::new(0.0, 1.0, h).unwrap();
            assert!(tg.entropy().is_finite(), "h={h}");
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(UpperTruncatedGaussian::new(0.0, 0.0, 1.0).is_err());
        assert!(UpperTruncatedGaussian::new(0.0, 1.0, f64::NEG_INFINITY).is_err());
        assert!(UpperTruncatedGaussian::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn averaged_truncations_differ_from_the_untruncated_gaussian() {
        // The mixture of truncations over a finite bound set is not 𝓝(0, 1):
        // it carries more mass below the bounds and none above the largest.
        let bounds = [0.7, 0.9, 1.0, 1.5, 3.0];
        let mixture = |y: f64| {
            bounds
                .iter()
                .map(|&u| UpperTruncatedGaussian::new(0.0, 1.0, u).unwrap().pdf(y))
                .sum::<f64>()
                / bounds.len() as f64
        };
        assert!(mixture(0.0) > std_pdf(0.0) * 1.05);
        assert_eq!(mixture(3.1), 0.0);
        assert!(std_pdf(3.1) > 0.0);
    }

    proptest! {
        #[test]
        fn pdf_symmetric_and_cdf_complementary(z in -30.0f64..30.0) {
            prop_assert_eq!(std_pdf(z), std_pdf(-z));
            prop_assert!((std_cdf(z) + std_cdf(-z) - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn log_sum_exp_shift_invariant(
            v in proptest::collection::vec(-50.0f64..50.0, 1..8),
            c in -100.0f64..100.0,
        ) {
            let base = log_sum_exp(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            prop_assert!((log_sum_exp(&shifted).unwrap() - base - c).abs() < 1e-10);
        }

        #[test]
        fn entropy_scale_law(mu in -5.0f64..5.0, sd in 0.01f64..20.0, u in -10.0f64..10.0) {
            let tg = UpperTruncatedGaussian::new(mu, sd, u).unwrap();
            let unit = UpperTruncatedGaussian::new(0.0, 1.0, (u - mu) / sd).unwrap();
            prop_assert!((tg.entropy() - unit.entropy() - sd.ln()).abs() < 1e-10);
        }
    }
}
