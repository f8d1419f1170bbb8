//! Tikhonov objective, its adjoint-based gradient and the iterative
//! thresholding reconstruction of the spatial source component.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::adjoint::solve_adjoint;
use crate::discretization::{
    inner_product, masked_inner_product, norm_l2, Field, ObservationMask, SpaceTimeField,
};
use crate::error::{Error, Result};
use crate::forward::{solve_forward, ProblemSpec};

pub const DEFAULT_MAX_ITER: usize = 1000;

/// Knobs of the thresholding iteration.
#[derive(Debug, Clone)]
pub struct ReconstructionConfig {
    pub rho: f64,
    pub m: f64,
    pub eps: f64,
    pub f0: Field,
    pub max_iter: usize,
}

impl ReconstructionConfig {
    pub fn new(rho: f64, m: f64, eps: f64, f0: Field, max_iter: usize) -> Result<Self> {
        for (name, v) in [("rho", rho), ("M", m), ("eps", eps)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(Self {
            rho,
            m,
            eps,
            f0,
            max_iter,
        })
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `Φ(f_k)`
    pub phi: f64,
    /// `‖f_{k+1} - f_k‖ / ‖f_k‖`
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub f: Field,
    /// Number of updates performed.
    pub iterations: usize,
    /// Relative `L²` error against the true source, when it was supplied.
    pub err: Option<f64>,
    /// `Φ(f_0), …, Φ(f_K)`.
    pub phi_history: Vec<f64>,
    pub log: Vec<IterationRecord>,
}

fn check_inputs(spec: &ProblemSpec, f: &Field, u_obs: &SpaceTimeField, mask: &ObservationMask) -> Result<()> {
    if f.grid() != spec.grid() || u_obs.grid() != spec.grid() || mask.grid() != spec.grid() {
        return Err(Error::GridMismatch("inversion inputs must share the problem grid".into()));
    }
    if u_obs.tgrid() != spec.tgrid() {
        return Err(Error::GridMismatch("observation lives on another time grid".into()));
    }
    Ok(())
}

/// `∫_0^T μ(t) z(·, t) dt`, pairing `z(t_n)` with `μ(t_{n+1})` on each step.
///
/// This is the quadrature under which [`solve_adjoint`] is the transpose of
/// the discrete forward map; `z(T) = 0` carries no weight.
pub fn weighted_time_integral(spec: &ProblemSpec, z: &SpaceTimeField) -> Field {
    let mut acc = vec![0.0; spec.grid().len()];
    let tau = spec.tgrid().tau();
    for (n, mu) in spec.mu().iter().enumerate().skip(1) {
        let c = tau * mu;
        for (a, v) in acc.iter_mut().zip(z.at(n - 1)) {
            *a += c * v;
        }
    }
    Field::new(spec.grid(), acc).expect("grid length")
}

/// Misfit over ω×(0,T) plus `ρ‖f‖²`, given the forward solution for `f`.
fn objective_from(
    u: &SpaceTimeField,
    f: &Field,
    u_obs: &SpaceTimeField,
    mask: &ObservationMask,
    rho: f64,
) -> Result<(f64, SpaceTimeField)> {
    let r = u.sub(u_obs)?;
    let misfit = masked_inner_product(&r, &r, mask)?;
    Ok((misfit + rho * inner_product(f, f)?, r))
}

/// `Φ(f) = ‖u(f) - u^δ‖²_{L²(ω×(0,T))} + ρ‖f‖²_{L²(Ω)}`.
pub fn objective(
    spec: &ProblemSpec,
    f: &Field,
    u_obs: &SpaceTimeField,
    mask: &ObservationMask,
    rho: f64,
) -> Result<f64> {
    check_inputs(spec, f, u_obs, mask)?;
    let u = solve_forward(spec, f)?;
    Ok(objective_from(&u, f, u_obs, mask, rho)?.0)
}

/// `∫_0^T μ z(f) dt + ρ f`, half the Fréchet derivative of `Φ`.
pub fn gradient(
    spec: &ProblemSpec,
    f: &Field,
    u_obs: &SpaceTimeField,
    mask: &ObservationMask,
    rho: f64,
) -> Result<Field> {
    check_inputs(spec, f, u_obs, mask)?;
    let u = solve_forward(spec, f)?;
    let r = u.sub(u_obs)?;
    let z = solve_adjoint(spec, &r, mask)?;
    weighted_time_integral(spec, &z).axpy(rho, f)
}

/// Iterative thresholding:
/// `f_{k+1} = M/(M+ρ) f_k - 1/(M+ρ) ∫_0^T μ z(f_k) dt`,
/// stopped once `‖f_{k+1} - f_k‖ < ε max(‖f_k‖, 1e-14)` or after `max_iter` updates.
pub fn iterate(
    spec: &ProblemSpec,
    u_obs: &SpaceTimeField,
    mask: &ObservationMask,
    cfg: &ReconstructionConfig,
    f_true: Option<&Field>,
) -> Result<ReconstructionResult> {
    check_inputs(spec, &cfg.f0, u_obs, mask)?;
    let (m, rho) = (cfg.m, cfg.rho);
    let keep = m / (m + rho);
    let step = 1.0 / (m + rho);
    let mut f = cfg.f0.clone();
    let mut phi_history = Vec::new();
    let mut log = Vec::new();
    let mut k = 0;
    loop {
        let u = solve_forward(spec, &f)?;
        let (phi, r) = objective_from(&u, &f, u_obs, mask, rho)?;
        phi_history.push(phi);
        let z = solve_adjoint(spec, &r, mask)?;
        let next = f.scaled(keep).axpy(-step, &weighted_time_integral(spec, &z))?;
        let diff = norm_l2(&next.axpy(-1.0, &f)?);
        let size = norm_l2(&f);
        log.push(IterationRecord {
            k,
            phi,
            ratio: diff / size,
        });
        f = next;
        k += 1;
        if diff < cfg.eps * size.max(1e-14) || k >= cfg.max_iter {
            break;
        }
    }
    phi_history.push(objective(spec, &f, u_obs, mask, rho)?);
    let err = match f_true {
        Some(t) => Some(relative_error(&f, t)?),
        None => None,
    };
    Ok(ReconstructionResult {
        f,
        iterations: k,
        err,
        phi_history,
        log,
    })
}

/// `‖f - f_true‖ / ‖f_true‖`.
pub fn relative_error(f: &Field, f_true: &Field) -> Result<f64> {
    Ok(norm_l2(&f.axpy(-1.0, f_true)?) / norm_l2(f_true))
}

/// Normal operator `f ↦ ∫_0^T μ z dt` with `z` the adjoint state of `χ_ω u(f)`.
pub fn normal_operator(spec: &ProblemSpec, mask: &ObservationMask, f: &Field) -> Result<Field> {
    let u = solve_forward(spec, f)?;
    let z = solve_adjoint(spec, &u, mask)?;
    Ok(weighted_time_integral(spec, &z))
}

/// Rayleigh quotients `⟨v_j, N v_j⟩` of power iteration on the normal operator.
pub fn power_iteration_trace(
    spec: &ProblemSpec,
    mask: &ObservationMask,
    iters: usize,
) -> Result<Vec<f64>> {
    if iters == 0 {
        return Err(Error::Config("power iteration needs at least one step".into()));
    }
    let grid = spec.grid();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed_f00d);
    let mut restarts = 0;
    let mut v = Field::zeros(grid);
    let mut trace = Vec::with_capacity(iters);
    while trace.len() < iters {
        if norm_l2(&v) == 0.0 {
            if restarts == 2 {
                // χ_ω u(f) vanishes for every start: the operator is zero
                trace.resize(iters, 0.0);
                break;
            }
            restarts += 1;
            let draws = (0..grid.len()).map(|_| unit_uniform(&mut rng) - 0.5).collect();
            v = Field::new(grid, draws)?;
            v = v.scaled(1.0 / norm_l2(&v));
        }
        let w = normal_operator(spec, mask, &v)?;
        trace.push(inner_product(&v, &w)?);
        let nw = norm_l2(&w);
        v = if nw > 0.0 { w.scaled(1.0 / nw) } else { Field::zeros(grid) };
    }
    Ok(trace)
}

/// Power-iteration estimate of `‖A‖²_op` for `A: f ↦ u(f)|_{ω×(0,T)}`.
pub fn estimate_m(spec: &ProblemSpec, mask: &ObservationMask, iters: usize) -> Result<f64> {
    Ok(*power_iteration_trace(spec, mask, iters)?.last().unwrap_or(&0.0))
}

/// Uniform draw in `[0, 1)` from the top 53 bits of a 64-bit output.
pub fn unit_uniform<R: Rng>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_operator, Region, SpaceGrid, TimeGrid};
    use crate::fraccalc::FractionalOrder;
    use std::f64::consts::PI;

    fn setup() -> (ProblemSpec, ObservationMask) {
        let grid = SpaceGrid::new(1, 21).unwrap();
        let tgrid = TimeGrid::new(1.0, 20).unwrap();
        let mu = tgrid.sample(|t| 1.0 + 10.0 * PI * t * t);
        let spec =
            ProblemSpec::new(FractionalOrder::new(0.5).unwrap(), tgrid, assemble_operator(grid), mu)
                .unwrap();
        let mask = ObservationMask::from_boxes(
            grid,
            &[Region::interval(0.0, 0.1), Region::interval(0.9, 1.0)],
        )
        .unwrap();
        (spec, mask)
    }

    #[test]
    fn objective_trivial_cases() {
        let (spec, mask) = setup();
        let zero = Field::zeros(spec.grid());
        let none = SpaceTimeField::zeros(spec.grid(), spec.tgrid());
        assert_eq!(objective(&spec, &zero, &none, &mask, 1e-5).unwrap(), 0.0);
        let obs = SpaceTimeField::from_fn(spec.grid(), spec.tgrid(), |x, t| x[0] + t);
        let phi = objective(&spec, &zero, &obs, &mask, 1e-5).unwrap();
        let direct = masked_inner_product(&obs, &obs, &mask).unwrap();
        assert!((phi - direct).abs() < 1e-15);
    }

    #[test]
    fn gradient_at_exact_data_is_rho_f() {
        let (spec, mask) = setup();
        let f = Field::from_fn(spec.grid(), |x| (PI * x[0]).sin() + 1.0);
        let obs = solve_forward(&spec, &f).unwrap();
        let g = gradient(&spec, &f, &obs, &mask, 0.25).unwrap();
        assert_eq!(g, f.scaled(0.25));
        let zero = Field::zeros(spec.grid());
        let none = SpaceTimeField::zeros(spec.grid(), spec.tgrid());
        let g0 = gradient(&spec, &zero, &none, &mask, 0.0).unwrap();
        assert!(g0.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_data_zero_start_is_a_fixed_point() {
        let (spec, mask) = setup();
        let none = SpaceTimeField::zeros(spec.grid(), spec.tgrid());
        let cfg = ReconstructionConfig::new(1e-5, 1.0, 1e-3, Field::zeros(spec.grid()), 50).unwrap();
        let res = iterate(&spec, &none, &mask, &cfg, None).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.f.values().iter().all(|&v| v == 0.0));
        assert_eq!(res.phi_history.len(), 2);
        assert!(res.err.is_none());
    }

    #[test]
    fn config_validation() {
        let f0 = Field::zeros(SpaceGrid::new(1, 5).unwrap());
        assert!(ReconstructionConfig::new(0.0, 1.0, 1e-3, f0.clone(), 10).is_err());
        assert!(ReconstructionConfig::new(1e-5, -1.0, 1e-3, f0.clone(), 10).is_err());
        assert!(ReconstructionConfig::new(1e-5, 1.0, 0.0, f0.clone(), 10).is_err());
        assert!(ReconstructionConfig::new(1e-5, 1.0, 1e-3, f0, 0).is_err());
    }

    #[test]
    fn empty_mask_has_zero_norm_estimate() {
        let (spec, _) = setup();
        let empty = ObservationMask::from_indicator(spec.grid(), vec![0.0; spec.grid().len()]).unwrap();
        assert_eq!(estimate_m(&spec, &empty, 5).unwrap(), 0.0);
    }

    #[test]
    fn uniform_draws_are_in_unit_interval() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        for _ in 0..1000 {
            let u = unit_uniform(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
