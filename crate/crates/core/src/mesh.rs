//! Uniform grids on the unit interval and unit square, grid functions that
//! vanish on the boundary, and the discrete inner products and norms.
//!
//! Every grid has an even number of intervals (`2J` per direction) so that
//! the odd/even node classes used by the Simpson-weighted norms are well
//! defined. Grid functions store the closed grid including the zero
//! boundary; stencils can read neighbours without index guards.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{MeshError, SampleError};
use crate::expr::Expression;
use crate::math;

/// Discrete norm selector.
///
/// `A`, `B` are one-dimensional; `E`, `F` two-dimensional. `B` and `F` are
/// the norms whose squares equal composite Simpson quadrature of `u²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2,
    Inf,
    A,
    B,
    E,
    F,
}

/// Uniform mesh `x_j = j h`, `j = 0..=2J`, `h = 1/(2J)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid1D {
    j: usize,
}

impl Grid1D {
    pub fn new(j: usize) -> Result<Self, MeshError> {
        if j < 2 {
            return Err(MeshError::GridTooCoarse { j });
        }
        Ok(Self { j })
    }

    /// Half the number of intervals.
    pub fn half_intervals(&self) -> usize {
        self.j
    }

    pub fn intervals(&self) -> usize {
        2 * self.j
    }

    pub fn node_count(&self) -> usize {
        2 * self.j + 1
    }

    pub fn interior_count(&self) -> usize {
        2 * self.j - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / (2 * self.j) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 / (2 * self.j) as f64
    }

    /// The grid with twice as many intervals.
    pub fn refined(&self) -> Self {
        Self { j: 2 * self.j }
    }
}

/// Tensor grid on the unit square with steps `h1 = 1/(2 J1)`, `h2 = 1/(2 J2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid2D {
    x: Grid1D,
    y: Grid1D,
}

impl Grid2D {
    pub fn new(j1: usize, j2: usize) -> Result<Self, MeshError> {
        Ok(Self {
            x: Grid1D::new(j1)?,
            y: Grid1D::new(j2)?,
        })
    }

    pub fn square(j: usize) -> Result<Self, MeshError> {
        Self::new(j, j)
    }

    pub fn x_grid(&self) -> Grid1D {
        self.x
    }

    pub fn y_grid(&self) -> Grid1D {
        self.y
    }

    pub fn h1(&self) -> f64 {
        self.x.h()
    }

    pub fn h2(&self) -> f64 {
        self.y.h()
    }

    /// Nodes along x (`2 J1 + 1`).
    pub fn nx(&self) -> usize {
        self.x.node_count()
    }

    /// Nodes along y (`2 J2 + 1`).
    pub fn ny(&self) -> usize {
        self.y.node_count()
    }

    pub fn node_count(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn interior_count(&self) -> usize {
        self.x.interior_count() * self.y.interior_count()
    }

    /// Flat index of node `(i, j)`; `i` runs along x, `j` along y (contiguous).
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny() + j
    }

    pub fn refined(&self) -> Self {
        Self {
            x: self.x.refined(),
            y: self.y.refined(),
        }
    }
}

/// Uniform time levels `t_n = n τ`, `n = 0..=N+1`, with `τ = T/(N+1)` so the
/// last level lands on `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n: usize,
    t_final: f64,
}

impl TimeGrid {
    pub fn new(n: usize, t_final: f64) -> Result<Self, MeshError> {
        if n == 0 || !(t_final > 0.0) || !t_final.is_finite() {
            return Err(MeshError::InvalidTimeGrid);
        }
        Ok(Self { n, t_final })
    }

    /// Number of scheme steps; the run produces levels up to `N + 1`.
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn tau(&self) -> f64 {
        self.t_final / (self.n + 1) as f64
    }

    pub fn t(&self, level: usize) -> f64 {
        if level == self.n + 1 {
            self.t_final
        } else {
            level as f64 * self.tau()
        }
    }
}

/// Nodal field on a [`Grid1D`], zero at both end points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn1D {
    grid: Grid1D,
    values: Vec<f64>,
}

impl GridFn1D {
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    /// Wraps a full nodal array; the end values must already be zero.
    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Result<Self, MeshError> {
        if values.len() != grid.node_count() {
            return Err(MeshError::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        let last = values.len() - 1;
        for index in [0, last] {
            if values[index] != 0.0 {
                return Err(MeshError::NonzeroBoundary {
                    index,
                    value: values[index],
                });
            }
        }
        Ok(Self { grid, values })
    }

    /// Builds a field from interior values `j = 1..2J`.
    pub fn from_interior(grid: Grid1D, interior: &[f64]) -> Result<Self, MeshError> {
        if interior.len() != grid.interior_count() {
            return Err(MeshError::LengthMismatch {
                expected: grid.interior_count(),
                got: interior.len(),
            });
        }
        let mut u = Self::zeros(grid);
        u.interior_mut().copy_from_slice(interior);
        Ok(u)
    }

    /// Samples `f(x)` at interior nodes; the boundary is left at zero.
    pub fn from_fn(grid: Grid1D, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut u = Self::zeros(grid);
        for j in 1..grid.intervals() {
            u.values[j] = f(grid.x(j));
        }
        u
    }

    /// Samples an expression in `(x, t)` at the interior nodes. Boundary
    /// nodes are not evaluated and stay exactly zero.
    pub fn sample(grid: Grid1D, f: &Expression, t: f64) -> Result<Self, SampleError> {
        let mut u = Self::zeros(grid);
        for j in 1..grid.intervals() {
            let x = grid.x(j);
            u.values[j] = f.eval(x, 0.0, t).map_err(|source| SampleError {
                x,
                y: None,
                t,
                source,
            })?;
        }
        Ok(u)
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn interior_mut(&mut self) -> &mut [f64] {
        let n = self.values.len();
        &mut self.values[1..n - 1]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn check_same_grid(&self, other: &Self) -> Result<(), MeshError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(MeshError::GridMismatch)
        }
    }

    /// `h Σ_{j=1}^{2J-1} u_j v_j`.
    pub fn inner(&self, other: &Self) -> Result<f64, MeshError> {
        self.check_same_grid(other)?;
        let s: f64 = self.interior().iter().zip(other.interior()).map(|(a, b)| a * b).sum();
        Ok(self.grid.h() * s)
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64, MeshError> {
        match kind {
            NormKind::L2 => Ok(self.l2()),
            NormKind::Inf => Ok(self.max_abs()),
            NormKind::A => Ok(math::sqrt(self.norm_a_sq())),
            NormKind::B => Ok(math::sqrt(self.norm_b_sq())),
            NormKind::E | NormKind::F => Err(MeshError::NormNotDefined { kind, dim: 1 }),
        }
    }

    pub fn l2_sq(&self) -> f64 {
        self.grid.h() * self.interior().iter().map(|v| v * v).sum::<f64>()
    }

    pub fn l2(&self) -> f64 {
        math::sqrt(self.l2_sq())
    }

    pub fn max_abs(&self) -> f64 {
        self.interior().iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// `‖u‖_A² = 2h Σ_{j=1}^{J} u_{2j-1}²`.
    pub fn norm_a_sq(&self) -> f64 {
        let odd: f64 = self.values.iter().skip(1).step_by(2).map(|v| v * v).sum();
        2.0 * self.grid.h() * odd
    }

    /// `‖u‖_B² = (2/3)‖u‖² + (1/3)‖u‖_A²`.
    pub fn norm_b_sq(&self) -> f64 {
        (2.0 / 3.0) * self.l2_sq() + (1.0 / 3.0) * self.norm_a_sq()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &Self) -> Result<(), MeshError> {
        self.check_same_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MeshError> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }
}

/// Nodal field on a [`Grid2D`], zero on the boundary ring.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl GridFn2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    /// Wraps a row-major nodal array (`index = i * ny + j`). The boundary
    /// ring must already be zero.
    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self, MeshError> {
        if values.len() != grid.node_count() {
            return Err(MeshError::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        for i in 0..nx {
            for j in 0..ny {
                let on_boundary = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                let index = grid.index(i, j);
                if on_boundary && values[index] != 0.0 {
                    return Err(MeshError::NonzeroBoundary {
                        index,
                        value: values[index],
                    });
                }
            }
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut u = Self::zeros(grid);
        let (gx, gy) = (grid.x_grid(), grid.y_grid());
        for i in 1..gx.intervals() {
            for j in 1..gy.intervals() {
                u.values[grid.index(i, j)] = f(gx.x(i), gy.x(j));
            }
        }
        u
    }

    /// Samples an expression in `(x, y, t)` at interior nodes.
    pub fn sample(grid: Grid2D, f: &Expression, t: f64) -> Result<Self, SampleError> {
        let mut u = Self::zeros(grid);
        let (gx, gy) = (grid.x_grid(), grid.y_grid());
        for i in 1..gx.intervals() {
            let x = gx.x(i);
            for j in 1..gy.intervals() {
                let y = gy.x(j);
                u.values[grid.index(i, j)] = f.eval(x, y, t).map_err(|source| SampleError {
                    x,
                    y: Some(y),
                    t,
                    source,
                })?;
            }
        }
        Ok(u)
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Sets an interior value. Panics on boundary indices.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        assert!(
            i > 0 && j > 0 && i < nx - 1 && j < ny - 1,
            "({i}, {j}) is not an interior node"
        );
        let k = self.grid.index(i, j);
        self.values[k] = value;
    }

    fn interior_iter(&self) -> impl Iterator<Item = f64> + '_ {
        let ny = self.grid.ny();
        let nx = self.grid.nx();
        self.values
            .chunks_exact(ny)
            .skip(1)
            .take(nx - 2)
            .flat_map(|row| row[1..row.len() - 1].iter().copied())
    }

    fn check_same_grid(&self, other: &Self) -> Result<(), MeshError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(MeshError::GridMismatch)
        }
    }

    /// `h1 h2 Σ` over interior nodes.
    pub fn inner(&self, other: &Self) -> Result<f64, MeshError> {
        self.check_same_grid(other)?;
        // Boundary entries are zero, so the full sum equals the interior sum.
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.grid.h1() * self.grid.h2() * s)
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64, MeshError> {
        match kind {
            NormKind::L2 => Ok(self.l2()),
            NormKind::Inf => Ok(self.max_abs()),
            NormKind::E => Ok(math::sqrt(self.norm_e_sq())),
            NormKind::F => Ok(math::sqrt(self.norm_f_sq())),
            NormKind::A | NormKind::B => Err(MeshError::NormNotDefined { kind, dim: 2 }),
        }
    }

    pub fn l2_sq(&self) -> f64 {
        self.grid.h1() * self.grid.h2() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn l2(&self) -> f64 {
        math::sqrt(self.l2_sq())
    }

    pub fn max_abs(&self) -> f64 {
        self.interior_iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// `‖u‖_E² = (4/9) h1 h2 Σ_{i,j} (u²_{2i-2,2j-1} + u²_{2i-1,2j-2} + 3 u²_{2i-1,2j-1})`.
    pub fn norm_e_sq(&self) -> f64 {
        let j1 = self.grid.x_grid().half_intervals();
        let j2 = self.grid.y_grid().half_intervals();
        let mut s = 0.0;
        for i in 1..=j1 {
            for j in 1..=j2 {
                let a = self.get(2 * i - 2, 2 * j - 1);
                let b = self.get(2 * i - 1, 2 * j - 2);
                let c = self.get(2 * i - 1, 2 * j - 1);
                s += a * a + b * b + 3.0 * c * c;
            }
        }
        (4.0 / 9.0) * self.grid.h1() * self.grid.h2() * s
    }

    /// `‖u‖_F² = (4/9)‖u‖² + ‖u‖_E²`.
    pub fn norm_f_sq(&self) -> f64 {
        (4.0 / 9.0) * self.l2_sq() + self.norm_e_sq()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn add_scaled(&mut self, c: f64, other: &Self) -> Result<(), MeshError> {
        self.check_same_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MeshError> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    /// Swaps the roles of x and y.
    pub fn transposed(&self) -> Self {
        let grid = Grid2D {
            x: self.grid.y,
            y: self.grid.x,
        };
        let mut out = Self::zeros(grid);
        for i in 0..self.grid.nx() {
            for j in 0..self.grid.ny() {
                out.values[grid.index(j, i)] = self.get(i, j);
            }
        }
        out
    }
}
