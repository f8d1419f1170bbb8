//! Grids, fields, observation masks and the discrete operator `-Δ + 1` with
//! homogeneous Neumann boundary conditions on the unit interval or square.

use std::io::Write;

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};

/// Zeroth-order coefficient of the elliptic operator.
pub const REACTION: f64 = 1.0;

const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Uniform grid `t_n = n τ`, `n = 0..=steps`, on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("time grid needs at least one step".into()));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::Domain(format!("terminal time must be positive, got {t_end}")));
        }
        Ok(Self { t_end, steps })
    }

    /// Accepts explicit nodes, which must start at zero and be equally spaced.
    pub fn from_nodes(nodes: &[f64]) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::Domain("time nodes must start at 0 and contain a step".into()));
        }
        let steps = nodes.len() - 1;
        let grid = Self::new(nodes[steps], steps)?;
        let tol = 1e-9 * grid.tau();
        for (n, &t) in nodes.iter().enumerate() {
            if (t - grid.node(n)).abs() > tol {
                return Err(Error::NonUniformGrid { index: n });
            }
        }
        Ok(grid)
    }

    #[inline]
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    #[inline]
    pub fn node(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_end
        } else {
            n as f64 * self.tau()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |n| self.node(n))
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let tau = self.tau();
        let mut w = vec![tau; self.len()];
        w[0] = 0.5 * tau;
        w[self.steps] = 0.5 * tau;
        w
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }
}

/// Tensor-product grid of `n` nodes per axis on `[0, 1]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceGrid {
    dim: usize,
    n: usize,
}

impl SpaceGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Domain(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 3 {
            return Err(Error::Domain(format!("need at least 3 nodes per axis, got {n}")));
        }
        Ok(Self { dim, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// Total node count.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            1.0
        } else {
            i as f64 * self.h()
        }
    }

    /// Axis indices of node `k`; the first axis runs fastest.
    #[inline]
    pub fn axis_indices(&self, k: usize) -> [usize; 2] {
        if self.dim == 1 {
            [k, 0]
        } else {
            [k % self.n, k / self.n]
        }
    }

    /// Coordinates of node `k`; the second entry is 0 in 1D.
    #[inline]
    pub fn coords(&self, k: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(k);
        if self.dim == 1 {
            [self.axis_coord(i), 0.0]
        } else {
            [self.axis_coord(i), self.axis_coord(j)]
        }
    }

    fn axis_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }

    /// Tensor trapezoidal weights; they sum to `|Ω| = 1`.
    pub fn weights(&self) -> Vec<f64> {
        let w1 = self.axis_weights();
        (0..self.len())
            .map(|k| {
                let [i, j] = self.axis_indices(k);
                if self.dim == 1 {
                    w1[i]
                } else {
                    w1[i] * w1[j]
                }
            })
            .collect()
    }
}

/// Nodal samples of a function on a [`SpaceGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpaceGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpaceGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: SpaceGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x)` where `x = [x1, x2]` (`x2 = 0` in 1D).
    pub fn from_fn(grid: SpaceGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self {
            grid,
            values: (0..grid.len()).map(|k| f(grid.coords(k))).collect(),
        }
    }

    #[inline]
    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Self> {
        same_grid(self.grid, other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    /// One row per node: coordinates then value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.grid.dim == 1 {
            w.write_record(["x", "value"])?;
        } else {
            w.write_record(["x1", "x2", "value"])?;
        }
        for (k, v) in self.values.iter().enumerate() {
            let [x1, x2] = self.grid.coords(k);
            if self.grid.dim == 1 {
                w.write_record([x1.to_string(), v.to_string()])?;
            } else {
                w.write_record([x1.to_string(), x2.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn same_grid(a: SpaceGrid, b: SpaceGrid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// Discrete `L²(Ω)` inner product by the trapezoidal rule.
pub fn inner_product(a: &Field, b: &Field) -> Result<f64> {
    same_grid(a.grid, b.grid)?;
    Ok(a.grid
        .weights()
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(w, (x, y))| w * x * y)
        .sum())
}

pub fn norm_l2(a: &Field) -> f64 {
    inner_product(a, a).expect("same grid").sqrt()
}

/// Samples on `SpaceGrid × TimeGrid`, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: SpaceGrid,
    tgrid: TimeGrid,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: SpaceGrid, tgrid: TimeGrid) -> Self {
        Self {
            grid,
            tgrid,
            values: vec![0.0; grid.len() * tgrid.len()],
        }
    }

    pub fn new(grid: SpaceGrid, tgrid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * tgrid.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { grid, tgrid, values })
    }

    pub fn from_fn(grid: SpaceGrid, tgrid: TimeGrid, f: impl Fn([f64; 2], f64) -> f64) -> Self {
        let mut u = Self::zeros(grid, tgrid);
        for n in 0..tgrid.len() {
            let t = tgrid.node(n);
            for (k, v) in u.at_mut(n).iter_mut().enumerate() {
                *v = f(grid.coords(k), t);
            }
        }
        u
    }

    #[inline]
    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    #[inline]
    pub fn tgrid(&self) -> TimeGrid {
        self.tgrid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Spatial snapshot at time node `n`.
    #[inline]
    pub fn at(&self, n: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[n * m..(n + 1) * m]
    }

    #[inline]
    pub fn at_mut(&mut self, n: usize) -> &mut [f64] {
        let m = self.grid.len();
        &mut self.values[n * m..(n + 1) * m]
    }

    pub fn snapshot(&self, n: usize) -> Field {
        Field {
            grid: self.grid,
            values: self.at(n).to_vec(),
        }
    }

    /// Time history at spatial node `k`.
    pub fn series(&self, k: usize) -> Vec<f64> {
        (0..self.tgrid.len()).map(|n| self.at(n)[k]).collect()
    }

    /// Same samples with the time axis reversed, `t ↦ T - t`.
    pub fn time_reversed(&self) -> Self {
        let mut out = Self::zeros(self.grid, self.tgrid);
        let last = self.tgrid.steps();
        for n in 0..self.tgrid.len() {
            out.at_mut(n).copy_from_slice(self.at(last - n));
        }
        out
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        same_grid(self.grid, other.grid)?;
        if self.tgrid != other.tgrid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.tgrid, other.tgrid
            )));
        }
        Ok(())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid,
            tgrid: self.tgrid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// Space-time trapezoidal `L²(Q)` norm.
    pub fn norm_l2(&self) -> f64 {
        let ws = self.grid.weights();
        let wt = self.tgrid.weights();
        let mut acc = 0.0;
        for (n, w) in wt.iter().enumerate() {
            acc += w * self.at(n).iter().zip(&ws).map(|(v, c)| c * v * v).sum::<f64>();
        }
        acc.sqrt()
    }

    /// Writes the snapshot at time node `n` as `t, x.., value` rows.
    pub fn write_snapshot_csv<W: Write>(&self, n: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let t = self.tgrid.node(n);
        if self.grid.dim == 1 {
            w.write_record(["t", "x", "value"])?;
        } else {
            w.write_record(["t", "x1", "x2", "value"])?;
        }
        for (k, v) in self.at(n).iter().enumerate() {
            let [x1, x2] = self.grid.coords(k);
            let mut rec = vec![t.to_string(), x1.to_string()];
            if self.grid.dim == 2 {
                rec.push(x2.to_string());
            }
            rec.push(v.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Closed axis-aligned box `[lo, hi]` in `[0, 1]^dim`; the second axis is
/// ignored in 1D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Region {
    pub fn interval(a: f64, b: f64) -> Self {
        Self {
            lo: [a, 0.0],
            hi: [b, 1.0],
        }
    }

    pub fn rect(x: [f64; 2], y: [f64; 2]) -> Self {
        Self {
            lo: [x[0], y[0]],
            hi: [x[1], y[1]],
        }
    }

    pub fn contains(&self, dim: usize, p: [f64; 2]) -> bool {
        (0..dim).all(|d| {
            p[d] >= self.lo[d] - MEMBERSHIP_SLACK && p[d] <= self.hi[d] + MEMBERSHIP_SLACK
        })
    }

    fn validate(&self, dim: usize) -> Result<()> {
        for d in 0..dim {
            let (a, b) = (self.lo[d], self.hi[d]);
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
                return Err(Error::Config(format!(
                    "box [{a}, {b}] on axis {d} is not inside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Boxes whose union is `[0,1]^dim` minus the interior of `inner`.
    /// Empty strips (where `inner` touches the boundary) are skipped.
    pub fn complement(dim: usize, inner: Region) -> Vec<Region> {
        let mut out = Vec::new();
        if inner.lo[0] > 0.0 {
            out.push(Region::rect([0.0, inner.lo[0]], [0.0, 1.0]));
        }
        if inner.hi[0] < 1.0 {
            out.push(Region::rect([inner.hi[0], 1.0], [0.0, 1.0]));
        }
        if dim == 2 {
            if inner.lo[1] > 0.0 {
                out.push(Region::rect([0.0, 1.0], [0.0, inner.lo[1]]));
            }
            if inner.hi[1] < 1.0 {
                out.push(Region::rect([0.0, 1.0], [inner.hi[1], 1.0]));
            }
        }
        out
    }
}

/// Nodal indicator of the observation subdomain ω.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    grid: SpaceGrid,
    indicator: Vec<f64>,
}

impl ObservationMask {
    /// Nodes lying in any of the closed `boxes`. Fails when no node is covered.
    pub fn from_boxes(grid: SpaceGrid, boxes: &[Region]) -> Result<Self> {
        for b in boxes {
            b.validate(grid.dim())?;
        }
        let indicator: Vec<f64> = (0..grid.len())
            .map(|k| {
                let p = grid.coords(k);
                if boxes.iter().any(|b| b.contains(grid.dim(), p)) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        if !indicator.contains(&1.0) {
            return Err(Error::Config("observation subdomain contains no grid node".into()));
        }
        Ok(Self { grid, indicator })
    }

    /// Explicit 0/1 indicator; an all-zero indicator is accepted.
    pub fn from_indicator(grid: SpaceGrid, indicator: Vec<f64>) -> Result<Self> {
        if indicator.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: indicator.len(),
            });
        }
        if indicator.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Domain("mask entries must be 0 or 1".into()));
        }
        Ok(Self { grid, indicator })
    }

    pub fn full(grid: SpaceGrid) -> Self {
        Self {
            grid,
            indicator: vec![1.0; grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    #[inline]
    pub fn indicator(&self) -> &[f64] {
        &self.indicator
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|&&v| v == 1.0).count()
    }

    /// `χ_ω · u`.
    pub fn apply(&self, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        same_grid(self.grid, u.grid)?;
        let mut out = u.clone();
        for n in 0..u.tgrid.len() {
            for (v, c) in out.at_mut(n).iter_mut().zip(&self.indicator) {
                *v *= c;
            }
        }
        Ok(out)
    }
}

/// Space-time trapezoidal quadrature of `∫_0^T ∫_ω a b dx dt`.
pub fn masked_inner_product(
    a: &SpaceTimeField,
    b: &SpaceTimeField,
    mask: &ObservationMask,
) -> Result<f64> {
    a.check_compatible(b)?;
    same_grid(a.grid, mask.grid)?;
    let ws: Vec<f64> = a
        .grid
        .weights()
        .iter()
        .zip(&mask.indicator)
        .map(|(w, c)| w * c)
        .collect();
    let wt = a.tgrid.weights();
    let mut acc = 0.0;
    for (n, w) in wt.iter().enumerate() {
        let s: f64 = a
            .at(n)
            .iter()
            .zip(b.at(n))
            .zip(&ws)
            .map(|((x, y), c)| c * x * y)
            .sum();
        acc += w * s;
    }
    Ok(acc)
}

/// `A = -Δ + 1` with mirrored ghost nodes at the boundary.
///
/// Stored as the symmetric matrix `S = W A`, where `W` holds the trapezoidal
/// weights, so that `A` is self-adjoint with respect to [`inner_product`].
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    grid: SpaceGrid,
    weights: Vec<f64>,
    symmetric: CscMatrix<f64>,
}

/// Second-order finite-difference assembly of `-Δ + 1` with Neumann closure.
pub fn assemble_operator(grid: SpaceGrid) -> EllipticOperator {
    let n = grid.nodes_per_axis();
    let h = grid.h();
    let w1 = grid.axis_weights();
    // weighted 1D stiffness: diag [1, 2, .., 2, 1]/h, off-diagonal -1/h
    let stiff = |i: usize, j: usize| -> f64 {
        if i == j {
            if i == 0 || i == n - 1 {
                1.0 / h
            } else {
                2.0 / h
            }
        } else {
            -1.0 / h
        }
    };
    let neighbours = |i: usize| {
        let mut v = vec![i];
        if i > 0 {
            v.push(i - 1);
        }
        if i + 1 < n {
            v.push(i + 1);
        }
        v
    };
    let total = grid.len();
    let mut coo = CooMatrix::new(total, total);
    match grid.dim() {
        1 => {
            for i in 0..n {
                for j in neighbours(i) {
                    let mut v = stiff(i, j);
                    if i == j {
                        v += REACTION * w1[i];
                    }
                    coo.push(i, j, v);
                }
            }
        }
        _ => {
            for k in 0..total {
                let [i, j] = grid.axis_indices(k);
                // K ⊗ M along the first axis, M ⊗ K along the second
                for ii in neighbours(i) {
                    let v = stiff(i, ii) * w1[j];
                    coo.push(k, ii + n * j, v);
                }
                for jj in neighbours(j) {
                    let v = w1[i] * stiff(j, jj);
                    coo.push(k, i + n * jj, v);
                }
                coo.push(k, k, REACTION * w1[i] * w1[j]);
            }
        }
    }
    EllipticOperator {
        grid,
        weights: grid.weights(),
        symmetric: CscMatrix::from(&coo),
    }
}

impl EllipticOperator {
    #[inline]
    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    /// Trapezoidal mass weights `W`.
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The symmetric form `S = W A`.
    #[inline]
    pub fn symmetric_matrix(&self) -> &CscMatrix<f64> {
        &self.symmetric
    }

    /// Dense copy of `A` itself (not symmetric at boundary rows).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::<f64>::from(&self.symmetric);
        for (i, w) in self.weights.iter().enumerate() {
            a.row_mut(i).scale_mut(1.0 / w);
        }
        a
    }

    /// `A u` on raw nodal values.
    pub fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (col, lane) in self.symmetric.col_iter().enumerate() {
            let uc = u[col];
            for (&row, &v) in lane.row_indices().iter().zip(lane.values()) {
                out[row] += v * uc;
            }
        }
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o /= w;
        }
        out
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        same_grid(self.grid, u.grid)?;
        Field::new(self.grid, self.apply_values(&u.values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constants_are_preserved() {
        for dim in [1, 2] {
            let g = SpaceGrid::new(dim, 9).unwrap();
            let op = assemble_operator(g);
            let out = op.apply(&Field::constant(g, 1.0)).unwrap();
            assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn three_node_rows_sum_to_one() {
        let g = SpaceGrid::new(1, 3).unwrap();
        let a = assemble_operator(g).to_dense();
        assert_eq!(a.shape(), (3, 3));
        for i in 0..3 {
            assert!((a.row(i).sum() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_form_is_exactly_symmetric() {
        for dim in [1, 2] {
            let g = SpaceGrid::new(dim, 7).unwrap();
            let op = assemble_operator(g);
            let s = DMatrix::<f64>::from(op.symmetric_matrix());
            assert_eq!(s, s.transpose());
        }
    }

    #[test]
    fn cosine_mode_is_an_approximate_eigenfunction() {
        let g = SpaceGrid::new(1, 201).unwrap();
        let op = assemble_operator(g);
        let u = Field::from_fn(g, |x| (PI * x[0]).cos());
        let au = op.apply(&u).unwrap();
        let expected = u.scaled(PI * PI + 1.0);
        let diff = au.axpy(-1.0, &expected).unwrap();
        assert!(norm_l2(&diff) / norm_l2(&expected) < 1e-4);
    }

    #[test]
    fn inner_product_examples() {
        let g = SpaceGrid::new(1, 41).unwrap();
        let one = Field::constant(g, 1.0);
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(norm_l2(&Field::zeros(g)), 0.0);
        let s = Field::from_fn(g, |x| (PI * x[0]).sin());
        assert!((inner_product(&s, &s).unwrap() - 0.5).abs() < 1e-12);
        let g2 = SpaceGrid::new(2, 41).unwrap();
        let err = inner_product(&one, &Field::constant(g2, 1.0));
        assert!(matches!(err, Err(Error::GridMismatch(_))));
    }

    #[test]
    fn masked_inner_product_examples() {
        let g = SpaceGrid::new(1, 11).unwrap();
        let tg = TimeGrid::new(1.0, 40).unwrap();
        let ones = SpaceTimeField::from_fn(g, tg, |_, _| 1.0);
        let full = ObservationMask::full(g);
        assert!((masked_inner_product(&ones, &ones, &full).unwrap() - 1.0).abs() < 1e-14);
        let empty = ObservationMask::from_indicator(g, vec![0.0; g.len()]).unwrap();
        assert_eq!(masked_inner_product(&ones, &ones, &empty).unwrap(), 0.0);
        let t = SpaceTimeField::from_fn(g, tg, |_, t| t);
        let v = masked_inner_product(&t, &t, &full).unwrap();
        // trapezoid error of ∫ t² is τ²/6
        assert!((v - 1.0 / 3.0).abs() <= tg.tau().powi(2) / 6.0 + 1e-14);
    }

    #[test]
    fn boxes_select_closed_intervals() {
        let g = SpaceGrid::new(1, 41).unwrap();
        let m = ObservationMask::from_boxes(
            g,
            &[Region::interval(0.0, 0.05), Region::interval(0.95, 1.0)],
        )
        .unwrap();
        assert_eq!(m.count(), 6);
        assert!(ObservationMask::from_boxes(g, &[Region::interval(0.51, 0.52)]).is_err());
        assert!(ObservationMask::from_boxes(g, &[Region::interval(0.5, 1.5)]).is_err());
    }

    #[test]
    fn complement_in_two_dimensions() {
        let g = SpaceGrid::new(2, 41).unwrap();
        let inner = Region::rect([0.1, 0.9], [0.1, 0.9]);
        let m = ObservationMask::from_boxes(g, &Region::complement(2, inner)).unwrap();
        // 41² nodes minus the 31² strictly inside (0.1, 0.9)², boundary lines kept
        assert_eq!(m.count(), 41 * 41 - 31 * 31);
        let three_edges = Region::rect([0.0, 0.9], [0.1, 0.9]);
        assert_eq!(Region::complement(2, three_edges).len(), 3);
    }

    #[test]
    fn time_grid_rejects_nonuniform_nodes() {
        assert!(TimeGrid::from_nodes(&[0.0, 0.5, 1.0]).is_ok());
        assert!(matches!(
            TimeGrid::from_nodes(&[0.0, 0.4, 1.0]),
            Err(Error::NonUniformGrid { index: 1 })
        ));
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(SpaceGrid::new(3, 10).is_err());
        assert!(SpaceGrid::new(1, 2).is_err());
    }
}
