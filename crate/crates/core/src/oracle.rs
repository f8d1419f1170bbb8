//! Independent reference solutions used for verification.
//!
//! Eigenfunction expansion of the forward problem for `A = -Δ + 1` on the
//! unit box with Neumann conditions, and the Duhamel representation of the
//! inhomogeneous solution through the homogeneous one.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;

use crate::discretization::{assemble_operator, inner_product, Field, SpaceGrid, SpaceTimeField, TimeGrid};
use crate::error::{Error, Result};
use crate::fraccalc::{gamma, mittag_leffler, ConvolutionWeights, FractionalOrder};
use crate::forward::{solve_forward, solve_homogeneous, ProblemSpec};

/// Neumann eigenpair `(λ, φ)` of `-Δ + 1` on `[0,1]^dim`, with
/// `φ` a product of `1` (index 0) and `√2 cos(nπx)` (index `n >= 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenMode {
    pub dim: usize,
    pub index: [usize; 2],
}

impl EigenMode {
    pub fn new(dim: usize, index: [usize; 2]) -> Self {
        Self { dim, index }
    }

    pub fn eigenvalue(&self) -> f64 {
        let k2: f64 = self.index[..self.dim]
            .iter()
            .map(|&n| (n as f64 * PI).powi(2))
            .sum();
        k2 + 1.0
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        (0..self.dim)
            .map(|d| match self.index[d] {
                0 => 1.0,
                n => SQRT_2 * (n as f64 * PI * x[d]).cos(),
            })
            .product()
    }

    pub fn sample(&self, grid: SpaceGrid) -> Field {
        Field::from_fn(grid, |x| self.value(x))
    }
}

/// All modes with every axis index in `0..=max_index`.
pub fn modes(dim: usize, max_index: usize) -> Vec<EigenMode> {
    match dim {
        1 => (0..=max_index).map(|n| EigenMode::new(1, [n, 0])).collect(),
        _ => (0..=max_index)
            .flat_map(|j| (0..=max_index).map(move |i| EigenMode::new(2, [i, j])))
            .collect(),
    }
}

/// `Σ c_p t^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `1 + 10π t²`.
    pub fn reference_profile() -> Self {
        Self::new(vec![1.0, 0.0, 10.0 * PI])
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn sample(&self, tgrid: &TimeGrid) -> Vec<f64> {
        tgrid.sample(|t| self.eval(t))
    }
}

/// Modal Duhamel solution `Σ_n u_n(t) φ_n` with
/// `u_n(t) = (f, φ_n) ∫_0^t (t-s)^{α-1} E_{α,α}(-λ_n (t-s)^α) μ(s) ds`,
/// the convolution done by product-trapezoid quadrature against `μ`.
pub fn eigen_forward(
    alpha: FractionalOrder,
    modes: &[EigenMode],
    f: &Field,
    mu: &[f64],
    tgrid: &TimeGrid,
) -> Result<SpaceTimeField> {
    if modes.is_empty() {
        return Err(Error::Domain("eigen expansion needs at least one mode".into()));
    }
    if mu.len() != tgrid.len() {
        return Err(Error::LengthMismatch {
            expected: tgrid.len(),
            got: mu.len(),
        });
    }
    let grid = f.grid();
    if modes.iter().any(|m| m.dim != grid.dim()) {
        return Err(Error::GridMismatch("mode dimension differs from field".into()));
    }
    let a = alpha.value();
    let tau = tgrid.tau();
    let amplitudes: Vec<(Field, Vec<f64>)> = modes
        .par_iter()
        .map(|mode| -> Result<(Field, Vec<f64>)> {
            let phi = mode.sample(grid);
            let coef = inner_product(f, &phi)?;
            let lambda = mode.eigenvalue();
            // ∫_0^σ k = σ^α E_{α,α+1}(-λσ^α), ∫_0^σ∫_0^ρ k = σ^{α+1} E_{α,α+2}(-λσ^α)
            let mut p0 = vec![0.0; tgrid.len()];
            let mut p1 = vec![0.0; tgrid.len()];
            for l in 1..tgrid.len() {
                let s = l as f64 * tau;
                let z = -lambda * s.powf(a);
                p0[l] = s.powf(a) * mittag_leffler(a, a + 1.0, z)?;
                p1[l] = s.powf(a + 1.0) * mittag_leffler(a, a + 2.0, z)?;
            }
            let amp: Vec<f64> = ConvolutionWeights::from_primitives(&p0, &p1, tau)
                .apply(mu)
                .into_iter()
                .map(|v| coef * v)
                .collect();
            Ok((phi, amp))
        })
        .collect::<Result<_>>()?;
    let mut u = SpaceTimeField::zeros(grid, *tgrid);
    for (phi, amp) in &amplitudes {
        for (n, &c) in amp.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (v, p) in u.at_mut(n).iter_mut().zip(phi.values()) {
                *v += c * p;
            }
        }
    }
    Ok(u)
}

/// `θ = d/dt J^α μ` for polynomial `μ`, kept as a sum of powers
/// `Σ c_p Γ(p+1)/Γ(p+α) t^{p+α-1}`.
#[derive(Debug, Clone)]
pub struct DuhamelKernel {
    alpha: f64,
    mu: Polynomial,
}

impl DuhamelKernel {
    fn sum(&self, shift: f64, t: f64) -> f64 {
        // Σ c_p Γ(p+1)/Γ(p+α+shift) t^{p+α+shift-1}
        self.mu
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(p, c)| {
                let p = p as f64;
                let e = p + self.alpha + shift;
                c * gamma(p + 1.0) / gamma(e) * t.powf(e - 1.0)
            })
            .sum()
    }

    /// `θ(t)`; infinite at `t = 0` when `μ(0) ≠ 0`.
    pub fn value(&self, t: f64) -> f64 {
        self.sum(0.0, t)
    }

    /// `∫_0^t θ = J^α μ (t)`.
    pub fn primitive(&self, t: f64) -> f64 {
        self.sum(1.0, t)
    }

    /// `∫_0^t J^α μ`.
    pub fn second_primitive(&self, t: f64) -> f64 {
        self.sum(2.0, t)
    }

    /// Samples of `θ` at the nodes; the `t = 0` entry is the analytic limit.
    pub fn sample(&self, tgrid: &TimeGrid) -> Vec<f64> {
        tgrid.sample(|t| self.value(t))
    }

    pub fn convolution_weights(&self, tgrid: &TimeGrid) -> ConvolutionWeights {
        let p0 = tgrid.sample(|t| self.primitive(t));
        let p1 = tgrid.sample(|t| self.second_primitive(t));
        ConvolutionWeights::from_primitives(&p0, &p1, tgrid.tau())
    }
}

/// Solution `θ` of `J^{1-α} θ = μ`.
pub fn duhamel_theta(alpha: FractionalOrder, mu: &Polynomial) -> DuhamelKernel {
    DuhamelKernel {
        alpha: alpha.value(),
        mu: mu.clone(),
    }
}

/// Relative `L²(Q)` gap between `u(f)` from the time stepper and the Duhamel
/// convolution `∫_0^t θ(t-s) v(s) ds` of the stepped homogeneous solution `v`
/// with initial value `f`.
pub fn duhamel_check(alpha: FractionalOrder, f: &Field, mu: &Polynomial, tgrid: &TimeGrid) -> Result<f64> {
    let grid = f.grid();
    let spec = ProblemSpec::new(alpha, *tgrid, assemble_operator(grid), mu.sample(tgrid))?;
    let u = solve_forward(&spec, f)?;
    let v = solve_homogeneous(&spec, f)?;
    let weights = duhamel_theta(alpha, mu).convolution_weights(tgrid);
    let mut conv = SpaceTimeField::zeros(grid, *tgrid);
    for m in 1..tgrid.len() {
        let out = conv.at_mut(m);
        for l in 0..m {
            let (wo, wn) = weights.pair(l);
            for ((o, a), b) in out.iter_mut().zip(v.at(m - l - 1)).zip(v.at(m - l)) {
                *o += wo * a + wn * b;
            }
        }
    }
    let scale = u.norm_l2();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(u.sub(&conv)?.norm_l2() / scale)
}
