//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

use fracinv::discretization::{assemble_operator, Field, SpaceGrid, TimeGrid};
use fracinv::forward::ProblemSpec;
use fracinv::fraccalc::FractionalOrder;
use fracinv::oracle::Polynomial;

/// `E_{α,β}(z)` for real `z ≤ 0` by inverting its Laplace transform
/// `s^{α-β}/(s^α - z)` at `t = 1` along a hyperbolic contour with the
/// trapezoid rule (node count balanced against the `e^{0.35 n}` round-off
/// growth near the vertex). No pole lies on the principal sheet when `α < 1` and
/// `z ≤ 0`, so the sum converges geometrically in the node count.
pub fn ml_contour(alpha: f64, beta: f64, z: f64) -> f64 {
    let n = 24;
    let sigma = 1.1721;
    let h = 1.0818 / n as f64;
    let mu = 4.4921 * n as f64;
    let i = Complex64::i();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -n..=n {
        let u = k as f64 * h;
        let w = i * u - sigma;
        let s = mu * (1.0 + w.sin());
        let ds = mu * i * w.cos();
        acc += s.exp() * s.powf(alpha - beta) / (s.powf(alpha) - z) * ds;
    }
    (acc * h / (2.0 * PI * i)).re
}

/// Problem on the unit interval or square with `μ = 1 + 10πt²`.
pub fn reference_problem(dim: usize, nodes: usize, steps: usize, alpha: f64) -> ProblemSpec {
    let tgrid = TimeGrid::new(1.0, steps).unwrap();
    ProblemSpec::new(
        FractionalOrder::new(alpha).unwrap(),
        tgrid,
        assemble_operator(SpaceGrid::new(dim, nodes).unwrap()),
        Polynomial::reference_profile().sample(&tgrid),
    )
    .unwrap()
}

/// Cosine combination `Σ c_n cos(nπx₁)` (1D) or with `cos(nπx₂)` factors (2D).
pub fn cosine_field(grid: SpaceGrid, coeffs: &[f64]) -> Field {
    Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                let m = n as f64 * PI;
                let y = if grid.dim() == 2 { (m * x[1]).cos() } else { 1.0 };
                c * (m * x[0]).cos() * y
            })
            .sum()
    })
}
