//! Compact difference operators and the linear solves of one implicit step.
//!
//! With `T` the Dirichlet second-difference matrix on the interior nodes,
//! the compact operator is `A = I + (h²/12) T` and `D = T`. Both are
//! polynomials in `T`, so they commute; in 2D the same holds direction by
//! direction for `H = A_x B_y` and `Φ = B_y D_x + A_x D_y`. This is what lets
//! one step of the scheme be reduced to a single symmetric positive definite
//! solve `(a A² + ½ D²) U = rhs` (resp. `(a H² + ½ Φ²) U = rhs`).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::SolveError;
use crate::mesh::{Grid1D, Grid2D, GridFn1D, GridFn2D};

const COMPACT_OFF: f64 = 1.0 / 12.0;
const COMPACT_MID: f64 = 10.0 / 12.0;

/// Tridiagonal matrix over interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    /// `sub[i]` multiplies `x[i-1]` in row `i` (`sub[0]` unused).
    pub sub: Vec<f64>,
    pub main: Vec<f64>,
    /// `sup[i]` multiplies `x[i+1]` in row `i` (last entry unused).
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn constant(n: usize, off: f64, mid: f64) -> Self {
        Self {
            sub: vec![off; n],
            main: vec![mid; n],
            sup: vec![off; n],
        }
    }

    /// The compact operator `(1, 10, 1) / 12`.
    pub fn compact(n: usize) -> Self {
        Self::constant(n, COMPACT_OFF, COMPACT_MID)
    }

    /// Three-point second difference `(1, -2, 1) / h²`.
    pub fn second_difference(n: usize, h: f64) -> Self {
        let inv = 1.0 / (h * h);
        Self::constant(n, inv, -2.0 * inv)
    }

    pub fn dim(&self) -> usize {
        self.main.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.main[i] * x[i];
                if i > 0 {
                    s += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas elimination without pivoting; valid for diagonally dominant
    /// matrices such as the compact operator.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.main[0];
        c[0] = self.sup[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.main[i] - self.sub[i] * c[i - 1];
            c[i] = self.sup[i] / denom;
            d[i] = (rhs[i] - self.sub[i] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }
}

/// Precomputed Thomas factors of a constant symmetric tridiagonal matrix,
/// reused for every lane of a 2D sweep.
#[derive(Debug, Clone)]
struct ThomasFactor {
    off: f64,
    c: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl ThomasFactor {
    fn new(n: usize, off: f64, mid: f64) -> Self {
        let mut c = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let denom = mid - off * prev_c;
            inv_denom[i] = 1.0 / denom;
            c[i] = off / denom;
            prev_c = c[i];
        }
        Self { off, c, inv_denom }
    }

    /// Solves in place on a contiguous lane.
    fn solve_lane(&self, d: &mut [f64]) {
        let n = d.len();
        d[0] *= self.inv_denom[0];
        for i in 1..n {
            d[i] = (d[i] - self.off * d[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.c[i] * d[i + 1];
        }
    }
}

// ---------------------------------------------------------------------------
// 1D operators

fn apply_stencil_1d(u: &GridFn1D, off: f64, mid: f64) -> GridFn1D {
    let mut out = GridFn1D::zeros(u.grid());
    let src = u.values();
    let dst = out.values_mut();
    for j in 1..src.len() - 1 {
        dst[j] = off * (src[j - 1] + src[j + 1]) + mid * src[j];
    }
    out
}

/// Compact operator `(u_{j-1} + 10 u_j + u_{j+1}) / 12` at interior nodes.
pub fn apply_a(u: &GridFn1D) -> GridFn1D {
    apply_stencil_1d(u, COMPACT_OFF, COMPACT_MID)
}

/// Second difference `(u_{j+1} - 2 u_j + u_{j-1}) / h²`.
pub fn apply_d(u: &GridFn1D) -> GridFn1D {
    let h = u.grid().h();
    let inv = 1.0 / (h * h);
    apply_stencil_1d(u, inv, -2.0 * inv)
}

/// Inverts the compact operator.
pub fn solve_a(b: &GridFn1D) -> GridFn1D {
    let grid = b.grid();
    let factor = ThomasFactor::new(grid.interior_count(), COMPACT_OFF, COMPACT_MID);
    let mut out = b.clone();
    factor.solve_lane(out.interior_mut());
    out
}

/// Symmetric pentadiagonal `a A² + ½ D²` with its `L D Lᵀ` factorisation.
#[derive(Debug, Clone)]
pub struct StepMatrix1D {
    a: f64,
    grid: Grid1D,
    // Matrix bands: main, first and second super-diagonals.
    m0: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
    // Factor: unit lower bands and pivots.
    l1: Vec<f64>,
    l2: Vec<f64>,
    d: Vec<f64>,
}

// Bands (main, first off, second off) of the square of a constant symmetric
// tridiagonal matrix truncated to n rows.
fn square_bands(n: usize, off: f64, mid: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut main = vec![mid * mid + 2.0 * off * off; n];
    main[0] = mid * mid + off * off;
    main[n - 1] = mid * mid + off * off;
    if n == 1 {
        main[0] = mid * mid;
    }
    (main, vec![2.0 * mid * off; n], vec![off * off; n])
}

impl StepMatrix1D {
    pub fn coefficient(&self) -> f64 {
        self.a
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Matrix-vector product with the assembled bands.
    pub fn apply(&self, u: &GridFn1D) -> GridFn1D {
        let mut out = GridFn1D::zeros(self.grid);
        let x = u.interior();
        let n = x.len();
        let y = out.interior_mut();
        for i in 0..n {
            let mut s = self.m0[i] * x[i];
            if i >= 1 {
                s += self.m1[i - 1] * x[i - 1];
            }
            if i >= 2 {
                s += self.m2[i - 2] * x[i - 2];
            }
            if i + 1 < n {
                s += self.m1[i] * x[i + 1];
            }
            if i + 2 < n {
                s += self.m2[i] * x[i + 2];
            }
            y[i] = s;
        }
        out
    }

    /// Dense copy of the interior matrix, row-major; intended for tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.m0.len();
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            dense[i * n + i] = self.m0[i];
            if i + 1 < n {
                dense[i * n + i + 1] = self.m1[i];
                dense[(i + 1) * n + i] = self.m1[i];
            }
            if i + 2 < n {
                dense[i * n + i + 2] = self.m2[i];
                dense[(i + 2) * n + i] = self.m2[i];
            }
        }
        dense
    }
}

/// Assembles and factorises `a A² + ½ D²` for the interior of `grid`.
pub fn build_step_matrix_1d(a: f64, grid: Grid1D) -> Result<StepMatrix1D, SolveError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(SolveError::InvalidParameter("step coefficient must be positive"));
    }
    let n = grid.interior_count();
    let h = grid.h();
    let inv = 1.0 / (h * h);
    let (a0, a1, a2) = square_bands(n, COMPACT_OFF, COMPACT_MID);
    let (d0, d1, d2) = square_bands(n, inv, -2.0 * inv);
    let combine = |x: Vec<f64>, y: Vec<f64>| -> Vec<f64> {
        x.iter().zip(&y).map(|(p, q)| a * p + 0.5 * q).collect()
    };
    let m0 = combine(a0, d0);
    let m1 = combine(a1, d1);
    let m2 = combine(a2, d2);

    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        if i >= 2 {
            l2[i] = m2[i - 2] / d[i - 2];
        }
        if i >= 1 {
            let mut v = m1[i - 1];
            if i >= 2 {
                v -= l2[i] * d[i - 2] * l1[i - 1];
            }
            l1[i] = v / d[i - 1];
        }
        let mut piv = m0[i];
        if i >= 1 {
            piv -= l1[i] * l1[i] * d[i - 1];
        }
        if i >= 2 {
            piv -= l2[i] * l2[i] * d[i - 2];
        }
        if !(piv > 0.0) {
            return Err(SolveError::NotPositiveDefinite { row: i, pivot: piv });
        }
        d[i] = piv;
    }
    Ok(StepMatrix1D {
        a,
        grid,
        m0,
        m1,
        m2,
        l1,
        l2,
        d,
    })
}

/// Solves `(a A² + ½ D²) u = rhs` with the cached factorisation.
pub fn solve_step_1d(m: &StepMatrix1D, rhs: &GridFn1D) -> GridFn1D {
    assert_eq!(rhs.grid(), m.grid, "right-hand side on a different grid");
    let mut out = rhs.clone();
    let x = out.interior_mut();
    let n = x.len();
    for i in 1..n {
        let mut v = x[i] - m.l1[i] * x[i - 1];
        if i >= 2 {
            v -= m.l2[i] * x[i - 2];
        }
        x[i] = v;
    }
    for i in 0..n {
        x[i] /= m.d[i];
    }
    for i in (0..n.saturating_sub(1)).rev() {
        let mut v = x[i] - m.l1[i + 1] * x[i + 1];
        if i + 2 < n {
            v -= m.l2[i + 2] * x[i + 2];
        }
        x[i] = v;
    }
    out
}

// ---------------------------------------------------------------------------
// 2D operators. Storage is row-major with x rows: index = i * ny + j.

// dst = off * (src[i-1,:] + src[i+1,:]) + mid * src[i,:] on interior rows.
fn sweep_x(src: &[f64], dst: &mut [f64], grid: Grid2D, off: f64, mid: f64) {
    let (nx, ny) = (grid.nx(), grid.ny());
    dst[..ny].fill(0.0);
    dst[(nx - 1) * ny..].fill(0.0);
    for i in 1..nx - 1 {
        let below = &src[(i - 1) * ny..i * ny];
        let here = &src[i * ny..(i + 1) * ny];
        let above = &src[(i + 1) * ny..(i + 2) * ny];
        let out = &mut dst[i * ny..(i + 1) * ny];
        for j in 0..ny {
            out[j] = off * (below[j] + above[j]) + mid * here[j];
        }
        out[0] = 0.0;
        out[ny - 1] = 0.0;
    }
}

// Same stencil along y, within each row.
fn sweep_y(src: &[f64], dst: &mut [f64], grid: Grid2D, off: f64, mid: f64) {
    let (nx, ny) = (grid.nx(), grid.ny());
    dst[..ny].fill(0.0);
    dst[(nx - 1) * ny..].fill(0.0);
    for i in 1..nx - 1 {
        let row = &src[i * ny..(i + 1) * ny];
        let out = &mut dst[i * ny..(i + 1) * ny];
        out[0] = 0.0;
        out[ny - 1] = 0.0;
        for j in 1..ny - 1 {
            out[j] = off * (row[j - 1] + row[j + 1]) + mid * row[j];
        }
    }
}

fn d_coeffs(h: f64) -> (f64, f64) {
    let inv = 1.0 / (h * h);
    (inv, -2.0 * inv)
}

/// Scratch buffers for repeated 2D operator application.
#[derive(Debug, Clone)]
struct Scratch2D {
    t1: Vec<f64>,
    t2: Vec<f64>,
    t3: Vec<f64>,
    t4: Vec<f64>,
}

impl Scratch2D {
    fn new(grid: Grid2D) -> Self {
        let n = grid.node_count();
        Self {
            t1: vec![0.0; n],
            t2: vec![0.0; n],
            t3: vec![0.0; n],
            t4: vec![0.0; n],
        }
    }
}

fn h_into(src: &[f64], dst: &mut [f64], grid: Grid2D, tmp: &mut [f64]) {
    sweep_x(src, tmp, grid, COMPACT_OFF, COMPACT_MID);
    sweep_y(tmp, dst, grid, COMPACT_OFF, COMPACT_MID);
}

fn phi_into(src: &[f64], dst: &mut [f64], grid: Grid2D, tmp: &mut [f64], tmp2: &mut [f64]) {
    let (dx_off, dx_mid) = d_coeffs(grid.h1());
    let (dy_off, dy_mid) = d_coeffs(grid.h2());
    // B_y D_x u
    sweep_x(src, tmp, grid, dx_off, dx_mid);
    sweep_y(tmp, dst, grid, COMPACT_OFF, COMPACT_MID);
    // A_x D_y u
    sweep_y(src, tmp, grid, dy_off, dy_mid);
    sweep_x(tmp, tmp2, grid, COMPACT_OFF, COMPACT_MID);
    for (d, s) in dst.iter_mut().zip(tmp2.iter()) {
        *d += s;
    }
}

/// `H u = A_x B_y u`.
pub fn apply_h(u: &GridFn2D) -> GridFn2D {
    let grid = u.grid();
    let mut out = GridFn2D::zeros(grid);
    let mut tmp = vec![0.0; grid.node_count()];
    h_into(u.values(), out.values_mut(), grid, &mut tmp);
    out
}

/// `Φ u = B_y δ_x² u + A_x δ_y² u`.
pub fn apply_phi(u: &GridFn2D) -> GridFn2D {
    let grid = u.grid();
    let mut out = GridFn2D::zeros(grid);
    let mut tmp = vec![0.0; grid.node_count()];
    let mut tmp2 = vec![0.0; grid.node_count()];
    phi_into(u.values(), out.values_mut(), grid, &mut tmp, &mut tmp2);
    out
}

/// Tridiagonal solver pair inverting `H`: rows along x, then lanes along y.
#[derive(Debug, Clone)]
pub struct CompactSolver2D {
    grid: Grid2D,
    fx: ThomasFactor,
    fy: ThomasFactor,
}

impl CompactSolver2D {
    pub fn new(grid: Grid2D) -> Self {
        Self {
            grid,
            fx: ThomasFactor::new(grid.x_grid().interior_count(), COMPACT_OFF, COMPACT_MID),
            fy: ThomasFactor::new(grid.y_grid().interior_count(), COMPACT_OFF, COMPACT_MID),
        }
    }

    /// Overwrites `u` with `H⁻¹ u`.
    pub fn solve_in_place(&self, u: &mut GridFn2D) {
        assert_eq!(u.grid(), self.grid);
        let grid = self.grid;
        let (nx, ny) = (grid.nx(), grid.ny());
        let v = u.values_mut();
        // x direction: Thomas recursion over whole rows at once.
        let f = &self.fx;
        let m = nx - 2;
        for j in 0..ny {
            v[ny + j] *= f.inv_denom[0];
        }
        for k in 1..m {
            let (prev, cur) = v[k * ny..(k + 2) * ny].split_at_mut(ny);
            let s = f.inv_denom[k];
            for j in 0..ny {
                cur[j] = (cur[j] - f.off * prev[j]) * s;
            }
        }
        for k in (0..m - 1).rev() {
            let (cur, next) = v[(k + 1) * ny..(k + 3) * ny].split_at_mut(ny);
            let c = f.c[k];
            for j in 0..ny {
                cur[j] -= c * next[j];
            }
        }
        // y direction: contiguous lanes.
        for i in 1..nx - 1 {
            self.fy.solve_lane(&mut v[i * ny + 1..(i + 1) * ny - 1]);
        }
    }

    pub fn solve(&self, b: &GridFn2D) -> GridFn2D {
        let mut out = b.clone();
        self.solve_in_place(&mut out);
        out
    }
}

/// Inverts `H`.
pub fn solve_h(b: &GridFn2D) -> GridFn2D {
    CompactSolver2D::new(b.grid()).solve(b)
}

/// Matrix-free `u ↦ a H² u + ½ Φ² u` with a Jacobi preconditioner.
#[derive(Debug, Clone)]
pub struct StepOperator2D {
    a: f64,
    grid: Grid2D,
    inv_diag: Vec<f64>,
}

/// Diagonal of the product of two constant symmetric tridiagonal matrices
/// truncated to `n` rows.
fn product_diagonal(n: usize, (off1, mid1): (f64, f64), (off2, mid2): (f64, f64)) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let neighbours = (i > 0) as usize + (i + 1 < n) as usize;
            mid1 * mid2 + neighbours as f64 * off1 * off2
        })
        .collect()
}

impl StepOperator2D {
    pub fn new(a: f64, grid: Grid2D) -> Result<Self, SolveError> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(SolveError::InvalidParameter("step coefficient must be positive"));
        }
        let nxi = grid.x_grid().interior_count();
        let nyi = grid.y_grid().interior_count();
        let compact = (COMPACT_OFF, COMPACT_MID);
        let dx = d_coeffs(grid.h1());
        let dy = d_coeffs(grid.h2());
        let ax2 = product_diagonal(nxi, compact, compact);
        let dx2 = product_diagonal(nxi, dx, dx);
        let adx = product_diagonal(nxi, compact, dx);
        let by2 = product_diagonal(nyi, compact, compact);
        let dy2 = product_diagonal(nyi, dy, dy);
        let bdy = product_diagonal(nyi, compact, dy);
        let mut inv_diag = vec![0.0; grid.node_count()];
        for i in 0..nxi {
            for j in 0..nyi {
                let h2 = ax2[i] * by2[j];
                let phi2 = dx2[i] * by2[j] + 2.0 * adx[i] * bdy[j] + ax2[i] * dy2[j];
                inv_diag[grid.index(i + 1, j + 1)] = 1.0 / (a * h2 + 0.5 * phi2);
            }
        }
        Ok(Self { a, grid, inv_diag })
    }

    pub fn coefficient(&self) -> f64 {
        self.a
    }

    fn apply_into(&self, src: &[f64], dst: &mut [f64], s: &mut Scratch2D) {
        let grid = self.grid;
        h_into(src, &mut s.t3, grid, &mut s.t1);
        h_into(&s.t3, &mut s.t4, grid, &mut s.t1);
        phi_into(src, &mut s.t3, grid, &mut s.t1, &mut s.t2);
        phi_into(&s.t3, dst, grid, &mut s.t1, &mut s.t2);
        for (d, h2u) in dst.iter_mut().zip(&s.t4) {
            *d = self.a * h2u + 0.5 * *d;
        }
    }

    pub fn apply(&self, u: &GridFn2D) -> GridFn2D {
        assert_eq!(u.grid(), self.grid);
        let mut out = GridFn2D::zeros(self.grid);
        let mut s = Scratch2D::new(self.grid);
        self.apply_into(u.values(), out.values_mut(), &mut s);
        out
    }
}

/// Outcome of an iterative step solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Options for [`solve_step_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `‖r‖ / ‖rhs‖`.
    pub tol: f64,
    /// Iteration cap; `None` means ten times the interior dimension.
    pub max_iterations: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iterations: None,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `(a H² + ½ Φ²) u = rhs` by Jacobi-preconditioned conjugate
/// gradients, starting from `guess` when given.
pub fn solve_step_2d(
    op: &StepOperator2D,
    rhs: &GridFn2D,
    guess: Option<&GridFn2D>,
    opts: CgOptions,
) -> Result<(GridFn2D, CgStats), SolveError> {
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidParameter("tolerance must be positive"));
    }
    let grid = op.grid;
    assert_eq!(rhs.grid(), grid, "right-hand side on a different grid");
    let b = rhs.values();
    let b_norm = libm::sqrt(dot(b, b));
    let mut x = match guess {
        Some(g) => {
            assert_eq!(g.grid(), grid);
            g.clone()
        }
        None => GridFn2D::zeros(grid),
    };
    if b_norm == 0.0 {
        return Ok((
            GridFn2D::zeros(grid),
            CgStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let n = grid.node_count();
    let mut s = Scratch2D::new(grid);
    let mut r = vec![0.0; n];
    op.apply_into(x.values(), &mut r, &mut s);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rel = libm::sqrt(dot(&r, &r)) / b_norm;
    if rel <= opts.tol {
        return Ok((
            x,
            CgStats {
                iterations: 0,
                relative_residual: rel,
            },
        ));
    }
    let mut z: Vec<f64> = r.iter().zip(&op.inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let cap = opts.max_iterations.unwrap_or(10 * grid.interior_count());
    for it in 1..=cap {
        op.apply_into(&p, &mut q, &mut s);
        let alpha = rz / dot(&p, &q);
        let xv = x.values_mut();
        for k in 0..n {
            xv[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        rel = libm::sqrt(dot(&r, &r)) / b_norm;
        if rel <= opts.tol {
            return Ok((
                x,
                CgStats {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        for k in 0..n {
            z[k] = r[k] * op.inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(SolveError::NoConvergence {
        iterations: cap,
        relative_residual: rel,
    })
}
