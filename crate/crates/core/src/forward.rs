//! L1 time stepping for `∂_t^α u + A u = f(x) μ(t)` with zero initial value
//! and homogeneous Neumann data.

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;

use crate::discretization::{EllipticOperator, Field, SpaceGrid, SpaceTimeField, TimeGrid};
use crate::error::{Error, Result};
use crate::fraccalc::{l1_weights, FractionalOrder, L1Weights};

/// Everything the solvers need besides the spatial source: order, grids,
/// operator, temporal profile, and the factorized step matrix.
pub struct ProblemSpec {
    alpha: FractionalOrder,
    tgrid: TimeGrid,
    op: EllipticOperator,
    mu: Vec<f64>,
    weights: L1Weights,
    // Cholesky factor of W (c I + A) = c W + S, fixed for the lifetime of the spec
    step: CscCholesky<f64>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("alpha", &self.alpha)
            .field("tgrid", &self.tgrid)
            .field("grid", &self.op.grid())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        alpha: FractionalOrder,
        tgrid: TimeGrid,
        op: EllipticOperator,
        mu: Vec<f64>,
    ) -> Result<Self> {
        if mu.len() != tgrid.len() {
            return Err(Error::LengthMismatch {
                expected: tgrid.len(),
                got: mu.len(),
            });
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("temporal component has non-finite samples".into()));
        }
        let weights = l1_weights(alpha, tgrid.tau(), tgrid.steps());
        let c = weights.scale();
        let s = op.symmetric_matrix();
        let mut shifted: CscMatrix<f64> = s.clone();
        {
            let offsets = shifted.col_offsets().to_vec();
            let rows = shifted.row_indices().to_vec();
            let vals = shifted.values_mut();
            for col in 0..offsets.len() - 1 {
                for idx in offsets[col]..offsets[col + 1] {
                    if rows[idx] == col {
                        vals[idx] += c * op.weights()[col];
                    }
                }
            }
        }
        let step = CscCholesky::factor(&shifted)
            .map_err(|e| Error::Solver(format!("step matrix factorization failed: {e:?}")))?;
        Ok(Self {
            alpha,
            tgrid,
            op,
            mu,
            weights,
            step,
        })
    }

    #[inline]
    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    #[inline]
    pub fn tgrid(&self) -> TimeGrid {
        self.tgrid
    }

    #[inline]
    pub fn grid(&self) -> SpaceGrid {
        self.op.grid()
    }

    #[inline]
    pub fn operator(&self) -> &EllipticOperator {
        &self.op
    }

    #[inline]
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch(format!(
                "field on {:?}, problem on {:?}",
                f.grid(),
                self.grid()
            )));
        }
        Ok(())
    }

    /// Runs the L1 scheme from `initial`; `source(n, rhs)` adds the source
    /// sampled at `t_n` into `rhs` for every `n >= 1`.
    pub(crate) fn march(
        &self,
        initial: Option<&[f64]>,
        mut source: impl FnMut(usize, &mut [f64]),
    ) -> SpaceTimeField {
        let m = self.grid().len();
        let steps = self.tgrid.steps();
        let c = self.weights.scale();
        let b = &self.weights.b;
        let w = self.op.weights();
        let mut u = SpaceTimeField::zeros(self.grid(), self.tgrid);
        if let Some(a) = initial {
            u.at_mut(0).copy_from_slice(a);
        }
        let mut rhs = vec![0.0; m];
        for n in 1..=steps {
            // c u^{n-1} - c Σ_{k=1}^{n-1} b_k (u^{n-k} - u^{n-k-1})
            rhs.copy_from_slice(u.at(n - 1));
            for k in 1..n {
                let bk = b[k];
                let (newer, older) = (u.at(n - k), u.at(n - k - 1));
                for i in 0..m {
                    rhs[i] -= bk * (newer[i] - older[i]);
                }
            }
            for v in rhs.iter_mut() {
                *v *= c;
            }
            source(n, &mut rhs);
            let mut col = DMatrix::from_iterator(m, 1, rhs.iter().zip(w).map(|(r, wi)| r * wi));
            self.step.solve_mut(&mut col);
            u.at_mut(n).copy_from_slice(col.as_slice());
        }
        u
    }
}

/// Solution `u(f)` of the forward problem at every space-time node.
pub fn solve_forward(spec: &ProblemSpec, f: &Field) -> Result<SpaceTimeField> {
    spec.check_field(f)?;
    let fv = f.values();
    Ok(spec.march(None, |n, rhs| {
        let mu = spec.mu[n];
        for (r, fi) in rhs.iter_mut().zip(fv) {
            *r += fi * mu;
        }
    }))
}

/// Homogeneous problem with initial value `a` and zero source.
pub fn solve_homogeneous(spec: &ProblemSpec, a: &Field) -> Result<SpaceTimeField> {
    spec.check_field(a)?;
    Ok(spec.march(Some(a.values()), |_, _| {}))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_operator, norm_l2};
    use std::f64::consts::PI;

    fn spec(dim: usize, nx: usize, nt: usize, alpha: f64) -> ProblemSpec {
        let grid = SpaceGrid::new(dim, nx).unwrap();
        let tgrid = TimeGrid::new(1.0, nt).unwrap();
        let mu = tgrid.sample(|t| 1.0 + 10.0 * PI * t * t);
        ProblemSpec::new(FractionalOrder::new(alpha).unwrap(), tgrid, assemble_operator(grid), mu)
            .unwrap()
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let s = spec(1, 21, 20, 0.5);
        let u = solve_forward(&s, &Field::zeros(s.grid())).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
        let v = solve_homogeneous(&s, &Field::zeros(s.grid())).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn forward_map_is_linear() {
        let s = spec(2, 9, 12, 0.3);
        let f1 = Field::from_fn(s.grid(), |x| (PI * x[0]).cos() + x[1]);
        let f2 = Field::from_fn(s.grid(), |x| (x[0] * x[1]).exp());
        let sum = f1.axpy(1.0, &f2).unwrap();
        let u1 = solve_forward(&s, &f1).unwrap();
        let u2 = solve_forward(&s, &f2).unwrap();
        let u12 = solve_forward(&s, &sum).unwrap();
        let scale = u12.norm_l2();
        for ((a, b), c) in u1.values().iter().zip(u2.values()).zip(u12.values()) {
            assert!((a + b - c).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn constant_initial_value_decays_like_mittag_leffler() {
        let s = spec(1, 11, 200, 0.5);
        let v = solve_homogeneous(&s, &Field::constant(s.grid(), 1.0)).unwrap();
        let exact = crate::fraccalc::mittag_leffler(0.5, 1.0, -1.0).unwrap();
        let got = v.at(200)[3];
        assert!((got - exact).abs() < 5e-3, "{got} vs {exact}");
        // spatially constant
        assert!(v.at(200).iter().all(|x| (x - got).abs() < 1e-12));
    }

    #[test]
    fn single_mode_amplitude_is_positive_and_nonincreasing() {
        let s = spec(1, 41, 80, 0.7);
        let a = Field::from_fn(s.grid(), |x| (PI * x[0]).cos());
        let v = solve_homogeneous(&s, &a).unwrap();
        let mut prev = f64::INFINITY;
        for n in 0..s.tgrid().len() {
            let amp = v.at(n)[0];
            assert!(amp > 0.0 && amp <= prev + 1e-15, "step {n}: {amp} vs {prev}");
            prev = amp;
        }
        assert!(norm_l2(&v.snapshot(80)) < norm_l2(&a));
    }

    #[test]
    fn mismatched_field_is_rejected() {
        let s = spec(1, 21, 10, 0.5);
        let other = Field::zeros(SpaceGrid::new(1, 11).unwrap());
        assert!(matches!(solve_forward(&s, &other), Err(Error::GridMismatch(_))));
        assert!(ProblemSpec::new(
            FractionalOrder::new(0.5).unwrap(),
            TimeGrid::new(1.0, 10).unwrap(),
            assemble_operator(SpaceGrid::new(1, 5).unwrap()),
            vec![1.0; 3],
        )
        .is_err());
    }
}
