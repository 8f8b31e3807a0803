//! Independent numerical oracles used by the conformance checks.
//!
//! Nothing here is on the optimization path. The routines deliberately take
//! the slow, direct route (dense inverses, nested quadrature, textbook
//! formulas evaluated without log-space tricks) so they can check the
//! production code rather than restate it.

use nalgebra::{DMatrix, DVector};

use crate::gaussian_stats::{gaussian_pdf, log_std_cdf, std_cdf, std_pdf};
use crate::gp::{Dataset, KernelHyperparams};

// 15-point Kronrod nodes on [-1, 1] (nonnegative half) with the embedded
// 7-point Gauss rule.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// The interval is first cut at every breakpoint inside `(a, b)` and into
/// `panels` equal pieces, then the piece with the largest error estimate is
/// bisected until the summed estimate falls below `tol` (absolute).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breakpoints: &[f64], panels: usize, tol: f64) -> f64 {
    assert!(a < b, "integration bounds must be ordered");
    let mut cuts: Vec<f64> = (0..=panels.max(1))
        .map(|i| a + (b - a) * i as f64 / panels.max(1) as f64)
        .chain(breakpoints.iter().copied().filter(|p| *p > a && *p < b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut pieces: Vec<(f64, f64, f64, f64)> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gauss_kronrod(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    for _ in 0..200_000 {
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= tol {
            break;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty partition");
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gauss_kronrod(&f, lo, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // sum small pieces first
    let mut values: Vec<f64> = pieces.iter().map(|p| p.2).collect();
    values.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    values.iter().sum()
}

/// Posterior mean and latent variance at `x` by explicit matrix inversion.
pub fn dense_posterior(data: &Dataset, hyper: &KernelHyperparams, jitter: f64, x: &[f64]) -> (f64, f64) {
    let k = dense_gram(data, hyper, jitter);
    let inv = k.try_inverse().expect("invertible Gram matrix");
    let kx = DVector::from_iterator(
        data.len(),
        data.inputs().iter().map(|xi| textbook_kernel(x, xi, hyper)),
    );
    let y = DVector::from_column_slice(data.outputs());
    let mean = (kx.transpose() * &inv * y)[(0, 0)];
    let var = hyper.signal_variance - (kx.transpose() * &inv * &kx)[(0, 0)];
    (mean, var)
}

/// Log marginal likelihood from an LU determinant and an explicit inverse.
pub fn dense_log_marginal_likelihood(data: &Dataset, hyper: &KernelHyperparams, jitter: f64) -> f64 {
    let n = data.len();
    let k = dense_gram(data, hyper, jitter);
    let det = k.clone().lu().determinant();
    let inv = k.try_inverse().expect("invertible Gram matrix");
    let y = DVector::from_column_slice(data.outputs());
    let quad = (y.transpose() * inv * &y)[(0, 0)];
    -0.5 * quad - 0.5 * det.ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

fn textbook_kernel(a: &[f64], b: &[f64], hyper: &KernelHyperparams) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).powi(2) / hyper.lengthscales[i].powi(2);
    }
    hyper.signal_variance * (-s / 2.0).exp()
}

fn dense_gram(data: &Dataset, hyper: &KernelHyperparams, jitter: f64) -> DMatrix<f64> {
    let n = data.len();
    DMatrix::from_fn(n, n, |i, j| {
        let mut v = textbook_kernel(&data.inputs()[i], &data.inputs()[j], hyper);
        if i == j {
            v += hyper.noise_variance + jitter;
        }
        v
    })
}

/// Central finite-difference gradient.
pub fn finite_difference_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Parameters of a latent Gaussian, an observation-noise level and a max-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyMaxSetting {
    pub mean: f64,
    pub latent_variance: f64,
    pub noise_variance: f64,
    pub max_value: f64,
}

impl NoisyMaxSetting {
    fn latent_std(&self) -> f64 {
        self.latent_variance.sqrt()
    }

    fn obs_std(&self) -> f64 {
        (self.latent_variance + self.noise_variance).sqrt()
    }

    /// Integration range covering all but a negligible tail of `y | f*`.
    pub fn y_range(&self) -> (f64, f64) {
        let s = self.obs_std();
        (self.mean - 10.0 * s, self.max_value.max(self.mean) + 10.0 * s)
    }

    /// Points where the density of `y | f*` changes character.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (sx2, sn2) = (self.latent_variance, self.noise_variance);
        let s2 = sx2 + sn2;
        let g_zero = (s2 * self.max_value - sn2 * self.mean) / sx2;
        let sn = sn2.sqrt();
        vec![
            self.mean,
            self.max_value,
            g_zero,
            self.max_value - 3.0 * sn,
            self.max_value + 3.0 * sn,
        ]
    }

    /// Density of `y = f + ε` with `f ~ 𝓝(μ, σ_x²)` truncated above at f* and
    /// `ε ~ 𝓝(0, σ_n²)`, by quadrature of the convolution integral.
    pub fn convolution_density(&self, y: f64) -> f64 {
        let sx = self.latent_std();
        let sn = self.noise_variance.sqrt();
        let norm = std_cdf((self.max_value - self.mean) / sx);
        let lo = (y - 14.0 * sn).max(self.mean.min(self.max_value) - 40.0 * sx);
        let hi = (y + 14.0 * sn).min(self.max_value);
        if lo >= hi {
            return 0.0;
        }
        let integrand = |f: f64| {
            gaussian_pdf(y - f, 0.0, self.noise_variance) * gaussian_pdf(f, self.mean, self.latent_variance) / norm
        };
        integrate(integrand, lo, hi, &[y], 8, 1e-15)
    }

    /// Density of `y | f*` from the closed form, evaluated directly.
    pub fn closed_form_density(&self, y: f64) -> f64 {
        let sx = self.latent_std();
        let sn = self.noise_variance.sqrt();
        let sp = self.obs_std();
        let g = (sp * sp * self.max_value - self.noise_variance * self.mean - self.latent_variance * y) / (sx * sn * sp);
        let h = (self.max_value - self.mean) / sx;
        // Φ(g)/Φ(h) in log space: both underflow when f* sits far in the lower tail.
        gaussian_pdf(y, self.mean, sp * sp) * (log_std_cdf(g) - log_std_cdf(h)).exp()
    }
}

/// Differential entropy `−∫ p log p` of a density supported on `[a, b]`.
pub fn quadrature_entropy<F: Fn(f64) -> f64>(pdf: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> f64 {
    integrate(
        |y| {
            let p = pdf(y);
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        },
        a,
        b,
        breakpoints,
        64,
        tol,
    )
}

fn mixture_range(settings: &[NoisyMaxSetting]) -> (f64, f64, Vec<f64>) {
    let lo = settings.iter().map(|s| s.y_range().0).fold(f64::INFINITY, f64::min);
    let hi = settings.iter().map(|s| s.y_range().1).fold(f64::NEG_INFINITY, f64::max);
    let bps = settings.iter().flat_map(NoisyMaxSetting::breakpoints).collect();
    (lo, hi, bps)
}

/// Mutual information between `y` and a max-value drawn uniformly from a
/// finite set: `(1/|F|) Σ ∫ p(y|f*) log(p(y|f*) / p̄(y)) dy` with `p̄` the
/// equal mixture.
pub fn finite_set_mutual_information(settings: &[NoisyMaxSetting]) -> f64 {
    let (lo, hi, bps) = mixture_range(settings);
    let k = settings.len() as f64;
    integrate(
        |y| {
            let ps: Vec<f64> = settings.iter().map(|s| s.closed_form_density(y)).collect();
            // p / p̄ as k·p/Σp: dividing the sum by k first can underflow to zero.
            let total = ps.iter().sum::<f64>();
            ps.iter()
                .filter(|p| **p > 0.0)
                .map(|p| p * (k * (p / total)).ln())
                .sum::<f64>()
                / k
        },
        lo,
        hi,
        &bps,
        64,
        1e-13,
    )
}

/// The same mutual information as `H(p̄) − (1/|F|) Σ H(p(·|f*))`.
pub fn finite_set_entropy_difference(settings: &[NoisyMaxSetting]) -> f64 {
    let (lo, hi, bps) = mixture_range(settings);
    let k = settings.len() as f64;
    let mixture = |y: f64| settings.iter().map(|s| s.closed_form_density(y)).sum::<f64>() / k;
    let h_mix = quadrature_entropy(mixture, lo, hi, &bps, 1e-13);
    let h_cond: f64 = settings
        .iter()
        .map(|s| quadrature_entropy(|y| s.closed_form_density(y), lo, hi, &bps, 1e-13))
        .sum::<f64>()
        / k;
    h_mix - h_cond
}

/// Expected improvement `E[max(f − best, 0)]` for `f ~ 𝓝(μ, σ²)` by quadrature.
pub fn quadrature_expected_improvement(mean: f64, std: f64, best: f64) -> f64 {
    if std == 0.0 {
        return (mean - best).max(0.0);
    }
    let hi = best.max(mean) + 12.0 * std;
    if best >= hi {
        return 0.0;
    }
    integrate(|f| (f - best) * std_pdf((f - mean) / std) / std, best, hi, &[mean], 32, 1e-14)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_polynomials_and_gaussians() {
        let v = integrate(|x| x * x, 0.0, 3.0, &[], 1, 1e-14);
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate(std_pdf, -12.0, 12.0, &[], 4, 1e-14);
        assert!((v - 1.0).abs() < 1e-13);
        // a narrow spike is invisible to the coarse rule; bracketing it with
        // breakpoints lets the refinement resolve it
        let v = integrate(|x| gaussian_pdf(x, 3.3, 1e-6), -50.0, 50.0, &[3.29, 3.3, 3.31], 4, 1e-13);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn convolution_and_closed_form_agree_on_a_simple_case() {
        let s = NoisyMaxSetting {
            mean: 0.0,
            latent_variance: 4.0,
            noise_variance: 1.0,
            max_value: 0.5,
        };
        for y in [-3.0, 0.0, 1.0, 2.5] {
            let a = s.convolution_density(y);
            let b = s.closed_form_density(y);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn fd_gradient_of_quadratic() {
        let g = finite_difference_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, 1.0], 1e-4);
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }
}
