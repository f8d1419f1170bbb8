//! Scalar fractional-calculus kernels.
//!
//! Mittag-Leffler evaluation on the real line, forward and backward
//! Riemann-Liouville integrals by product-trapezoid quadrature, the L1
//! approximation of the Caputo derivative and its weights.

use std::f64::consts::PI;

use crate::discretization::TimeGrid;
use crate::error::{Error, Result};

/// Gamma function. Relative accuracy is better than 1e-14 on (0, 50).
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Order of a single-term Caputo derivative, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Domain(format!(
                "fractional order must lie in (0, 1), got {alpha}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Coefficients `b_k = (k+1)^{1-α} - k^{1-α}` of the L1 scheme.
#[derive(Debug, Clone)]
pub struct L1Weights {
    pub alpha: FractionalOrder,
    pub tau: f64,
    pub b: Vec<f64>,
}

impl L1Weights {
    /// `τ^{-α} / Γ(2-α)`, the factor multiplying the weighted differences.
    pub fn scale(&self) -> f64 {
        let a = self.alpha.value();
        self.tau.powf(-a) / gamma(2.0 - a)
    }
}

/// L1 weights for `n_steps` steps of a uniform grid with step `tau`.
pub fn l1_weights(alpha: FractionalOrder, tau: f64, n_steps: usize) -> L1Weights {
    let e = 1.0 - alpha.value();
    let b = (0..n_steps.max(1))
        .map(|k| {
            let k = k as f64;
            (k + 1.0).powf(e) - k.powf(e)
        })
        .collect();
    L1Weights { alpha, tau, b }
}

/// L1 approximation of the Caputo derivative at every node of `grid`.
///
/// The value at `t_0` is reported as zero.
pub fn caputo_l1(alpha: FractionalOrder, u: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(u, grid)?;
    let w = l1_weights(alpha, grid.tau(), grid.steps());
    let scale = w.scale();
    let mut out = vec![0.0; u.len()];
    for n in 1..u.len() {
        let mut acc = 0.0;
        for k in 0..n {
            acc += w.b[k] * (u[n - k] - u[n - k - 1]);
        }
        out[n] = scale * acc;
    }
    Ok(out)
}

/// Forward Riemann-Liouville integral `(J^α_{0+} g)(t_n)` at every node.
pub fn rl_integral(alpha: f64, g: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "integral order must be positive, got {alpha}"
        )));
    }
    check_len(g, grid)?;
    let tau = grid.tau();
    let g0 = gamma(alpha + 1.0);
    let g1 = gamma(alpha + 2.0);
    let p0: Vec<f64> = (0..=grid.steps())
        .map(|l| (l as f64 * tau).powf(alpha) / g0)
        .collect();
    let p1: Vec<f64> = (0..=grid.steps())
        .map(|l| (l as f64 * tau).powf(alpha + 1.0) / g1)
        .collect();
    Ok(ConvolutionWeights::from_primitives(&p0, &p1, tau).apply(g))
}

/// Backward Riemann-Liouville integral `(J^α_{T-} g)(t_n)` at every node.
pub fn rl_integral_backward(alpha: f64, g: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    let reflected: Vec<f64> = g.iter().rev().copied().collect();
    let mut out = rl_integral(alpha, &reflected, grid)?;
    out.reverse();
    Ok(out)
}

fn check_len(u: &[f64], grid: &TimeGrid) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Product-trapezoid weights for a causal convolution `∫_0^{t_m} k(t_m-s) g(s) ds`
/// on a uniform grid, with `g` interpolated linearly and the kernel integrated
/// exactly.
///
/// Built from the kernel primitives `P0(σ) = ∫_0^σ k` and `P1(σ) = ∫_0^σ P0`
/// sampled at the lags `l·τ`, so that
/// `out_m = Σ_l (older[l] g_{m-l-1} + newer[l] g_{m-l})`.
#[derive(Debug, Clone)]
pub struct ConvolutionWeights {
    older: Vec<f64>,
    newer: Vec<f64>,
}

impl ConvolutionWeights {
    pub fn from_primitives(p0: &[f64], p1: &[f64], tau: f64) -> Self {
        assert_eq!(p0.len(), p1.len());
        let lags = p0.len().saturating_sub(1);
        let mut older = Vec::with_capacity(lags);
        let mut newer = Vec::with_capacity(lags);
        for l in 0..lags {
            let mass = p0[l + 1] - p0[l];
            // ∫ k(σ) ((l+1)τ - σ) dσ / τ over [lτ, (l+1)τ]: the share of the newer node
            let tilt = (p1[l + 1] - p1[l] - tau * p0[l]) / tau;
            older.push(mass - tilt);
            newer.push(tilt);
        }
        Self { older, newer }
    }

    pub fn lags(&self) -> usize {
        self.older.len()
    }

    /// Weight pair `(older, newer)` for lag `l`.
    #[inline]
    pub fn pair(&self, l: usize) -> (f64, f64) {
        (self.older[l], self.newer[l])
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        for m in 1..g.len() {
            let mut acc = 0.0;
            for l in 0..m {
                let (wo, wn) = self.pair(l);
                acc += wo * g[m - l - 1] + wn * g[m - l];
            }
            out[m] = acc;
        }
        out
    }
}

/// Two-parameter Mittag-Leffler function `E_{α,β}(z)` for real `z`.
///
/// Power series for `|z| <= 1` and for positive `z`. For `z < -1` and
/// `0 < α < 1` the function is evaluated from its real-line integral
/// representation (valid for `β < 1 + α`, reached by the recurrence
/// `E_{α,β}(z) = (E_{α,β-α}(z) - 1/Γ(β-α)) / z`). `α = 1` with integer `β`
/// goes through the exponential. Other `α >= 1` fall back to the series.
pub fn mittag_leffler(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "Mittag-Leffler parameter alpha must be positive, got {alpha}"
        )));
    }
    if !beta.is_finite() || !z.is_finite() {
        return Err(Error::Domain("non-finite Mittag-Leffler argument".into()));
    }
    Ok(ml_eval(alpha, beta, z))
}

fn ml_eval(alpha: f64, beta: f64, z: f64) -> f64 {
    if z == 0.0 {
        return rgamma(beta);
    }
    if beta <= 0.0 {
        // E_{α,β}(z) = 1/Γ(β) + z E_{α,α+β}(z)
        return rgamma(beta) + z * ml_eval(alpha, alpha + beta, z);
    }
    if alpha == 1.0 && beta == beta.round() {
        return ml_alpha_one(beta as u32, z);
    }
    if z > 0.0 || z >= -1.0 || alpha >= 1.0 {
        return ml_series(alpha, beta, z);
    }
    if beta > 1.0 {
        let lower = beta - alpha;
        return (ml_eval(alpha, lower, z) - rgamma(lower)) / z;
    }
    ml_integral(alpha, beta, -z)
}

/// `1/Γ(x)`, zero at the poles.
fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

fn ml_alpha_one(beta: u32, z: f64) -> f64 {
    // E_{1,k+1}(z) = (E_{1,k}(z) - 1/(k-1)!) / z
    if beta == 1 || z.abs() < 1.0 {
        return if beta == 1 {
            z.exp()
        } else {
            ml_series(1.0, beta as f64, z)
        };
    }
    let mut e = z.exp();
    for k in 1..beta {
        e = (e - rgamma(k as f64)) / z;
    }
    e
}

/// Power series with Neumaier-compensated summation.
fn ml_series(alpha: f64, beta: f64, z: f64) -> f64 {
    const MAX_TERMS: usize = 5000;
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut zk = 1.0_f64;
    let mut prev_small = false;
    let log_abs_z = z.abs().ln();
    for k in 0..MAX_TERMS {
        let arg = alpha * k as f64 + beta;
        let term = if arg < 170.0 && zk.is_finite() && zk.abs() < 1e300 {
            zk / gamma(arg)
        } else {
            let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            sign * (k as f64 * log_abs_z - libm::lgamma(arg)).exp()
        };
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        zk *= z;
        let small = term.abs() <= 1e-17 * (sum + comp).abs().max(1e-300);
        if small && prev_small && arg > 1.0 {
            break;
        }
        prev_small = small;
    }
    sum + comp
}

/// `E_{α,β}(-x)` for `x > 0`, `0 < α < 1`, `0 < β <= 1` from
///
/// `E_{α,β}(-x) = 1/(απ) ∫_0^∞ r^{(1-β)/α} e^{-r^{1/α}}
///     (r sin(π(1-β)) + x sin(π(1-β+α))) / (r² + 2 r x cos(πα) + x²) dr`.
fn ml_integral(alpha: f64, beta: f64, x: f64) -> f64 {
    let s1 = (PI * (1.0 - beta)).sin();
    let s2 = (PI * (1.0 - beta + alpha)).sin();
    let c = (PI * alpha).cos();
    let p = (1.0 - beta) / alpha;
    let inv_a = 1.0 / alpha;
    let integrand = |r: f64| {
        if r <= 0.0 {
            return if p == 0.0 { s2 * x / (x * x) } else { 0.0 };
        }
        let num = r * s1 + x * s2;
        let den = r * r + 2.0 * r * x * c + x * x;
        r.powf(p) * (-r.powf(inv_a)).exp() * num / den
    };
    // e^{-r^{1/α}} is below 1e-20 past r = 46^α
    let r_max = 46f64.powf(alpha);
    let mut breaks = vec![0.0, r_max];
    let peak = if c < 0.0 { -x * c } else { 0.0 };
    for b in [peak, 0.5 * x, x, 2.0 * x, 1.0] {
        if b > 0.0 && b < r_max {
            breaks.push(b);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let total: f64 = breaks
        .windows(2)
        .map(|w| quadrature::double_exponential::integrate(integrand, w[0], w[1], 1e-16).integral)
        .sum();
    total / (alpha * PI)
}
