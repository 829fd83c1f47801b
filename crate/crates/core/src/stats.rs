//! Normal and Student-t helpers, exact normal-model profit, empirical CDFs with
//! DKW confidence bounds, and the Monte Carlo optimality-gap interval.

use libm::erfc;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::solver::Scenario;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn normal_cdf_with(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    Ok(normal_cdf((x - mu) / sigma))
}

pub fn normal_pdf_with(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    Ok(normal_pdf((x - mu) / sigma) / sigma)
}

/// Inverse of [`normal_cdf`], by safeguarded Newton iteration on a bracket.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if q <= 0.0 || q >= 1.0 || q.is_nan() {
        return Err(Error::InfiniteQuantile(q));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let mut x = 0.0;
    for _ in 0..200 {
        let residual = normal_cdf(x) - q;
        if residual.abs() <= 1e-15 * q.min(1.0 - q).max(1e-300) {
            break;
        }
        if residual > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = residual / normal_pdf(x);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Student-t CDF with `df` degrees of freedom, through the regularized
/// incomplete beta function.
pub fn t_cdf(x: f64, df: f64) -> f64 {
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + x * x));
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Student-t quantile by bisection on [`t_cdf`].
pub fn t_quantile(q: f64, df: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) || !(df >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "t quantile needs q in (0, 1) and df >= 1 (q = {q}, df = {df})"
        )));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    if q < 0.5 {
        return t_quantile(1.0 - q, df).map(|x| -x);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while t_cdf(hi, df) < q {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InfiniteQuantile(q));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf(mid, df) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expected profit of order `o` at price `p` and advertising `v` when demand
/// is `Normal(mu, sigma^2)`.
pub fn exact_expected_profit(
    p: f64,
    v: f64,
    o: f64,
    mu: f64,
    sigma: f64,
    scenario: &Scenario,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if o < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "order must be non-negative, got {o}"
        )));
    }
    let s = scenario.salvage;
    let c = scenario.cost;
    let z = (o - mu) / sigma;
    let big_f = normal_cdf(z);
    let small_f = normal_pdf(z) / sigma;
    Ok(
        (p - s) * (mu * big_f - sigma * sigma * small_f) + p * o * (1.0 - big_f) + s * o * big_f
            - c * o
            - scenario.ad_cost_scale * v,
    )
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("empirical CDF needs samples".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument(
                "empirical CDF samples contain NaN".into(),
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `x` with `F_n(x) >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    /// Smallest sample `x` whose DKW lower bound on `F(x)` reaches `level`.
    pub fn dkw_threshold(&self, level: f64, epsilon: f64) -> Result<Option<f64>> {
        let n = self.sorted.len();
        for (i, &x) in self.sorted.iter().enumerate() {
            // skip ties so F_n is evaluated at the last equal sample
            if i + 1 < n && self.sorted[i + 1] == x {
                continue;
            }
            if dkw_lower_bound((i + 1) as f64 / n as f64, n, epsilon)? >= level {
                return Ok(Some(x));
            }
        }
        Ok(None)
    }
}

/// Smallest epsilon for which the one-sided DKW inequality is stated.
pub fn dkw_min_epsilon(n: usize) -> f64 {
    (std::f64::consts::LN_2 / (2.0 * n as f64)).sqrt()
}

/// Lower confidence bound `(F_n(x) - eps)(1 - exp(-2 n eps^2))` on `F(x)`.
pub fn dkw_lower_bound(fn_x: f64, n: usize, epsilon: f64) -> Result<f64> {
    let threshold = dkw_min_epsilon(n);
    if n == 0 || epsilon < threshold {
        return Err(Error::DkwEpsilon {
            epsilon,
            threshold,
            n,
        });
    }
    if !(0.0..=1.0).contains(&fn_x) {
        return Err(Error::InvalidArgument(format!(
            "F_n(x) = {fn_x} is not a probability"
        )));
    }
    let coverage = -(-2.0 * n as f64 * epsilon * epsilon).exp_m1();
    Ok(((fn_x - epsilon) * coverage).max(0.0))
}

/// How replication dispersion enters the gap interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DispersionConvention {
    /// Sample standard deviations used as printed, without the `1/sqrt(M)`.
    AsPrinted,
    /// Standard errors of the replication means.
    #[default]
    StandardError,
}

/// Replicated SAA optimal values and their out-of-sample evaluations.
#[derive(Debug, Clone)]
pub struct GapStudy {
    pub saa_values: Vec<f64>,
    pub true_values: Vec<f64>,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapInterval {
    pub lower: f64,
    pub upper: f64,
    pub gap_fraction: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Confidence interval `[lower, upper]` on the true optimum and the relative
/// gap `(upper - lower) / lower`.
pub fn optimality_gap_ci(
    study: &GapStudy,
    convention: DispersionConvention,
) -> Result<GapInterval> {
    let m = study.saa_values.len();
    if m < 2 || study.true_values.len() != m {
        return Err(Error::InvalidArgument(format!(
            "gap study needs two equal-length lists of at least 2 values (got {} and {})",
            m,
            study.true_values.len()
        )));
    }
    if !(study.alpha > 0.0 && study.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {} not in (0, 1)",
            study.alpha
        )));
    }
    let df = (m - 1) as f64;
    let scale = match convention {
        DispersionConvention::AsPrinted => 1.0,
        DispersionConvention::StandardError => 1.0 / (m as f64).sqrt(),
    };
    let (mean_true, sd_true) = mean_sd(&study.true_values);
    let (mean_saa, sd_saa) = mean_sd(&study.saa_values);
    let lower = mean_true + t_quantile(study.alpha / 2.0, df)? * sd_true * scale;
    let upper = mean_saa + t_quantile(1.0 - study.alpha / 2.0, df)? * sd_saa * scale;
    if !(lower > 0.0) {
        return Err(Error::UndefinedGap(lower));
    }
    Ok(GapInterval {
        lower,
        upper,
        gap_fraction: (upper - lower) / lower,
    })
}
