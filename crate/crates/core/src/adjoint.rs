//! Backward (adjoint) problem driven by the masked residual.
//!
//! With `s = T - t` the backward Caputo derivative turns into the forward one,
//! so the forward L1 stepper is reused with zero data at `s = 0` (`t = T`).
//! The residual enters each reversed step at the start of that step, scaled by
//! its trapezoid weight. Together with the quadrature in
//! [`crate::inversion::weighted_time_integral`] this makes the adjoint the
//! exact transpose of the discrete forward map, so gradients are consistent
//! to round-off rather than to `O(τ)`.

use crate::discretization::{ObservationMask, SpaceTimeField};
use crate::error::{Error, Result};
use crate::forward::ProblemSpec;

/// Adjoint state `z` for the residual `u(f) - u^δ` restricted to ω.
pub fn solve_adjoint(
    spec: &ProblemSpec,
    residual: &SpaceTimeField,
    mask: &ObservationMask,
) -> Result<SpaceTimeField> {
    if residual.grid() != spec.grid() || mask.grid() != spec.grid() {
        return Err(Error::GridMismatch("adjoint inputs live on another spatial grid".into()));
    }
    if residual.tgrid() != spec.tgrid() {
        return Err(Error::GridMismatch("residual lives on another time grid".into()));
    }
    let last = spec.tgrid().steps();
    let chi = mask.indicator();
    let tau = spec.tgrid().tau();
    let wt = spec.tgrid().weights();
    let reversed = spec.march(None, |m, rhs| {
        let n = last + 1 - m;
        let scale = wt[n] / tau;
        for ((acc, ri), ci) in rhs.iter_mut().zip(residual.at(n)).zip(chi) {
            *acc += scale * ci * ri;
        }
    });
    Ok(reversed.time_reversed())
}
