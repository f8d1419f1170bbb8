//! Oracle suite behind the `verify` subcommand.

use std::f64::consts::PI;

use rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::adjoint::solve_adjoint;
use crate::discretization::{
    assemble_operator, inner_product, masked_inner_product, Field, Region, ObservationMask,
    SpaceGrid, TimeGrid,
};
use crate::error::Result;
use crate::forward::{solve_forward, ProblemSpec};
use crate::fraccalc::{caputo_l1, gamma, mittag_leffler, rl_integral, FractionalOrder};
use crate::inversion::{unit_uniform, weighted_time_integral};
use crate::oracle::{duhamel_check, eigen_forward, modes, Polynomial};

/// Outcome of one check: measured `value` against `tolerance`.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `true` when a larger value is the good direction (convergence orders).
    pub at_least: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, at_least: false }
    }

    fn above(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.tolerance
        } else {
            self.value <= self.tolerance
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rel = if self.at_least { ">=" } else { "<=" };
        write!(
            f,
            "[{}] {}: {:.3e} (want {rel} {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )
    }
}

/// Largest relative deviation from `exp` and from the `erfc` closed form of
/// `E_{1/2,1}(-x) = exp(x²) erfc(x)`.
pub fn mittag_leffler_errors() -> Result<(f64, f64)> {
    let mut exp_err: f64 = 0.0;
    for i in 0..=1100 {
        let z = -10.0 + i as f64 * 0.01;
        let e = z.exp();
        exp_err = exp_err.max((mittag_leffler(1.0, 1.0, z)? - e).abs() / e);
    }
    let mut erfc_err: f64 = 0.0;
    for i in 0..=700 {
        let x = i as f64 * 0.01;
        let exact = (x * x).exp() * libm::erfc(x);
        erfc_err = erfc_err.max((mittag_leffler(0.5, 1.0, -x)? - exact).abs() / exact);
    }
    Ok((exp_err, erfc_err))
}

/// Observed orders `log2(e_N / e_2N)` for the L1 derivative of `t²` and the
/// product-trapezoid integral of `t²` over `N ∈ {40, 80, 160}`.
pub fn fractional_operator_orders(alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let order = FractionalOrder::new(alpha)?;
    let mut d_err = Vec::new();
    let mut i_err = Vec::new();
    for steps in [40, 80, 160] {
        let g = TimeGrid::new(1.0, steps)?;
        let u = g.sample(|t| t * t);
        let d = caputo_l1(order, &u, &g)?;
        let j = rl_integral(alpha, &u, &g)?;
        let mut de: f64 = 0.0;
        let mut ie: f64 = 0.0;
        for (n, t) in g.nodes().enumerate() {
            de = de.max((d[n] - 2.0 * t.powf(2.0 - alpha) / gamma(3.0 - alpha)).abs());
            ie = ie.max((j[n] - 2.0 * t.powf(2.0 + alpha) / gamma(3.0 + alpha)).abs());
        }
        d_err.push(de);
        i_err.push(ie);
    }
    let orders = |e: &[f64]| e.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok((orders(&d_err), orders(&i_err)))
}

/// Problem on `[0,1]` with the reference profile `μ = 1 + 10πt²`.
pub fn reference_problem(dim: usize, nodes: usize, steps: usize, alpha: f64) -> Result<ProblemSpec> {
    let tgrid = TimeGrid::new(1.0, steps)?;
    ProblemSpec::new(
        FractionalOrder::new(alpha)?,
        tgrid,
        assemble_operator(SpaceGrid::new(dim, nodes)?),
        Polynomial::reference_profile().sample(&tgrid),
    )
}

/// Relative `L²(Q)` gap between the stepper and the eigen expansion for
/// `f = cos(πx)`.
pub fn forward_oracle_gap(nodes: usize, steps: usize, alpha: f64) -> Result<f64> {
    let spec = reference_problem(1, nodes, steps, alpha)?;
    let f = Field::from_fn(spec.grid(), |x| (PI * x[0]).cos());
    let u = solve_forward(&spec, &f)?;
    let exact = eigen_forward(spec.alpha(), &modes(1, 3), &f, spec.mu(), &spec.tgrid())?;
    Ok(u.sub(&exact)?.norm_l2() / exact.norm_l2())
}

/// Worst relative gap of `⟨u(g), χ u(f)⟩_Q` against `⟨g, ∫μz dt⟩` over
/// `pairs` random nodal pairs.
pub fn adjoint_pairing_gap(nodes: usize, steps: usize, alpha: f64, pairs: usize, seed: u64) -> Result<f64> {
    let spec = reference_problem(1, nodes, steps, alpha)?;
    let grid = spec.grid();
    let mask = ObservationMask::from_boxes(grid, &[Region::interval(0.0, 0.05), Region::interval(0.95, 1.0)])?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let mut draw = || Field::new(grid, (0..grid.len()).map(|_| unit_uniform(&mut rng)).collect());
        let (f, g) = (draw()?, draw()?);
        let uf = solve_forward(&spec, &f)?;
        let ug = solve_forward(&spec, &g)?;
        let lhs = masked_inner_product(&ug, &uf, &mask)?;
        let z = solve_adjoint(&spec, &uf, &mask)?;
        let rhs = inner_product(&g, &weighted_time_integral(&spec, &z))?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs());
    }
    Ok(worst)
}

/// Duhamel gap for `f = cos(πx)` and the reference profile.
pub fn duhamel_gap(nodes: usize, steps: usize, alpha: f64) -> Result<f64> {
    let grid = SpaceGrid::new(1, nodes)?;
    let f = Field::from_fn(grid, |x| (PI * x[0]).cos());
    duhamel_check(
        FractionalOrder::new(alpha)?,
        &f,
        &Polynomial::reference_profile(),
        &TimeGrid::new(1.0, steps)?,
    )
}

/// The whole suite on the default 41-node, 40-step mesh.
pub fn run_suite() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let (exp_err, erfc_err) = mittag_leffler_errors()?;
    out.push(Check::below("Mittag-Leffler E_{1,1} vs exp on [-10,1]", exp_err, 1e-12));
    out.push(Check::below("Mittag-Leffler E_{1/2,1} vs erfc form on [-7,0]", erfc_err, 1e-10));
    let (d, i) = fractional_operator_orders(0.5)?;
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    out.push(Check::above("L1 derivative order (t^2, alpha 0.5)", min(&d), 1.3));
    out.push(Check::above("fractional integral order (t^2, alpha 0.5)", min(&i), 1.3));
    for alpha in [0.3, 0.5, 0.8] {
        out.push(Check::below(
            format!("forward vs eigen expansion, alpha {alpha}"),
            forward_oracle_gap(41, 40, alpha)?,
            1e-2,
        ));
    }
    out.push(Check::below("adjoint pairing, 21 nodes", adjoint_pairing_gap(21, 20, 0.5, 10, 7)?, 1e-2));
    out.push(Check::below("Duhamel representation, 41 nodes", duhamel_gap(41, 40, 0.5)?, 1e-2));
    Ok(out)
}
