//! Tensor-product spectral discretization on a rectangle.
//!
//! Periodic grids use a complex Fourier basis on equispaced nodes; Neumann
//! grids use the cosine basis `cos(kπ(x - a)/L)` on cell-centred nodes, where
//! the DCT-II is an exact transform. Coefficients are normalized so that the
//! mode-0 coefficient equals the domain mean in both cases.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Periodic,
    Neumann,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::Neumann => "neumann",
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(BoundaryCondition::Periodic),
            "neumann" => Ok(BoundaryCondition::Neumann),
            other => Err(Error::InvalidParameter(format!("unknown boundary condition {other:?}"))),
        }
    }
}

/// Rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Domain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Domain { x0, x1, y0, y1 }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Domain::new(lo, hi, lo, hi)
    }

    pub fn lx(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn ly(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.lx() * self.ly()
    }
}

struct Plans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

/// Collocation grid with its transform plans and the spectrum of `-Δ`.
pub struct SpatialGrid {
    nx: usize,
    ny: usize,
    domain: Domain,
    bc: BoundaryCondition,
    xs: Vec<f64>,
    ys: Vec<f64>,
    eig: Vec<f64>,
    plans: Plans,
}

impl fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("domain", &self.domain)
            .field("bc", &self.bc)
            .finish()
    }
}

impl PartialEq for SpatialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.domain == other.domain && self.bc == other.bc
    }
}

impl SpatialGrid {
    pub fn new(nx: usize, ny: usize, domain: Domain, bc: BoundaryCondition) -> Result<Arc<Self>> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2×2 nodes, got {nx}×{ny}"
            )));
        }
        if !(domain.lx() > 0.0 && domain.ly() > 0.0) {
            return Err(Error::InvalidParameter(format!("degenerate domain {domain:?}")));
        }
        let nodes = |n: usize, lo: f64, len: f64| -> Vec<f64> {
            let h = len / n as f64;
            (0..n)
                .map(|i| match bc {
                    BoundaryCondition::Periodic => lo + i as f64 * h,
                    BoundaryCondition::Neumann => lo + (i as f64 + 0.5) * h,
                })
                .collect()
        };
        let xs = nodes(nx, domain.x0, domain.lx());
        let ys = nodes(ny, domain.y0, domain.ly());
        let wavenumbers = |n: usize, len: f64| -> Vec<f64> {
            (0..n)
                .map(|i| match bc {
                    BoundaryCondition::Periodic => {
                        let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                        2.0 * PI * k / len
                    }
                    BoundaryCondition::Neumann => PI * i as f64 / len,
                })
                .collect()
        };
        let kx = wavenumbers(nx, domain.lx());
        let ky = wavenumbers(ny, domain.ly());
        let mut eig = Vec::with_capacity(nx * ny);
        for kyv in &ky {
            for kxv in &kx {
                eig.push(kxv * kxv + kyv * kyv);
            }
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        };
        Ok(Arc::new(SpatialGrid {
            nx,
            ny,
            domain,
            bc,
            xs,
            ys,
            eig,
            plans,
        }))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Quadrature weight of every node (both node sets give an equal-weight rule).
    pub fn cell_area(&self) -> f64 {
        self.domain.area() / self.len() as f64
    }

    /// Eigenvalues of `-Δ`, indexed like the coefficients (row-major, `y` outer).
    pub fn spectrum(&self) -> &[f64] {
        &self.eig
    }

    /// Weight of `|c_k|²` in `∫ |f|²` divided by `|Ω|`.
    fn mode_mass(&self, idx: usize) -> f64 {
        match self.bc {
            BoundaryCondition::Periodic => 1.0,
            BoundaryCondition::Neumann => {
                let (i, j) = (idx % self.nx, idx / self.nx);
                let wx = if i == 0 { 1.0 } else { 0.5 };
                let wy = if j == 0 { 1.0 } else { 0.5 };
                wx * wy
            }
        }
    }
}

/// Nodal values on a grid, row-major with `x` varying fastest.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<SpatialGrid>,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: &Arc<SpatialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("field value {v} is not finite")));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn zeros(grid: &Arc<SpatialGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<SpatialGrid>, value: f64) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn<F: FnMut(f64, f64) -> f64>(grid: &Arc<SpatialGrid>, mut f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &y in &grid.ys {
            for &x in &grid.xs {
                values.push(f(x, y));
            }
        }
        Field {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: f64, x: &Field) {
        debug_assert_eq!(self.values.len(), x.values.len());
        self.values.iter_mut().zip(&x.values).for_each(|(s, v)| *s += a * v);
    }

    /// `a · x + b · y`.
    pub fn lin_comb(a: f64, x: &Field, b: f64, y: &Field) -> Field {
        Field {
            grid: Arc::clone(&x.grid),
            values: x.values.iter().zip(&y.values).map(|(u, v)| a * u + b * v).collect(),
        }
    }

    /// `max |self - other|`.
    pub fn max_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Spectral coefficients of a field.
#[derive(Debug, Clone)]
pub enum Coefficients {
    /// Complex Fourier coefficients `c_k` with `f = Σ c_k e^{i k·(x - x0)}`.
    Fourier(Vec<Complex64>),
    /// Cosine coefficients `c_k` with `f = Σ c_k cos(kxπ(x-x0)/Lx) cos(kyπ(y-y0)/Ly)`.
    Cosine(Vec<f64>),
}

impl Coefficients {
    pub fn len(&self) -> usize {
        match self {
            Coefficients::Fourier(c) => c.len(),
            Coefficients::Cosine(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Magnitude of coefficient `idx`.
    pub fn abs(&self, idx: usize) -> f64 {
        match self {
            Coefficients::Fourier(c) => c[idx].norm(),
            Coefficients::Cosine(c) => c[idx].abs(),
        }
    }

    fn scale_by(&mut self, factors: impl Fn(usize) -> f64) {
        match self {
            Coefficients::Fourier(c) => c.iter_mut().enumerate().for_each(|(i, v)| *v *= factors(i)),
            Coefficients::Cosine(c) => c.iter_mut().enumerate().for_each(|(i, v)| *v *= factors(i)),
        }
    }
}

/// Forward transform.
pub fn transform(f: &Field) -> Coefficients {
    let grid = &f.grid;
    match grid.bc {
        BoundaryCondition::Periodic => Coefficients::Fourier(fft2(grid, &f.values)),
        BoundaryCondition::Neumann => Coefficients::Cosine(dct2_2d(grid, &f.values)),
    }
}

/// Inverse transform back to nodal values.
pub fn inverse_transform(grid: &Arc<SpatialGrid>, coeffs: &Coefficients) -> Result<Field> {
    if coeffs.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            actual: coeffs.len(),
        });
    }
    let values = match (grid.bc, coeffs) {
        (BoundaryCondition::Periodic, Coefficients::Fourier(c)) => ifft2(grid, c),
        (BoundaryCondition::Neumann, Coefficients::Cosine(c)) => idct2_2d(grid, c),
        _ => {
            return Err(Error::GridMismatch(
                "coefficient basis does not match the boundary condition".into(),
            ))
        }
    };
    Ok(Field {
        grid: Arc::clone(grid),
        values,
    })
}

/// Apply the Fourier multiplier `m(λ)` where `λ` runs over the spectrum of `-Δ`.
pub fn apply_multiplier(f: &Field, m: impl Fn(f64) -> f64) -> Field {
    let grid = Arc::clone(&f.grid);
    let mut c = transform(f);
    let eig = grid.spectrum();
    c.scale_by(|i| m(eig[i]));
    inverse_transform(&grid, &c).expect("coefficients come from the same grid")
}

/// Solve `(c I - eps2 Δ) u = f` mode by mode.
pub fn solve_shifted_poisson(c: f64, eps2: f64, f: &Field) -> Result<Field> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("shift must be positive, got {c}")));
    }
    if !(eps2 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "diffusion coefficient must be >= 0, got {eps2}"
        )));
    }
    Ok(apply_multiplier(f, |lam| 1.0 / (c + eps2 * lam)))
}

pub fn laplacian(f: &Field) -> Field {
    apply_multiplier(f, |lam| -lam)
}

/// `∫ f g` by the grid quadrature.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    f.check_same_grid(g)?;
    Ok(inner_unchecked(f, g))
}

pub(crate) fn inner_unchecked(f: &Field, g: &Field) -> f64 {
    f.grid.cell_area() * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>()
}

/// `∫ |∇f|²`, evaluated in coefficient space.
pub fn grad_norm_sq(f: &Field) -> f64 {
    let c = transform(f);
    let grid = &f.grid;
    let eig = grid.spectrum();
    grid.domain.area()
        * (0..c.len())
            .map(|i| eig[i] * grid.mode_mass(i) * c.abs(i).powi(2))
            .sum::<f64>()
}

/// `∫ |f|²` from the coefficients (Parseval).
pub fn coefficient_norm_sq(grid: &SpatialGrid, c: &Coefficients) -> f64 {
    grid.domain.area() * (0..c.len()).map(|i| grid.mode_mass(i) * c.abs(i).powi(2)).sum::<f64>()
}

fn transpose<T: Copy>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(src.len());
    for c in 0..cols {
        for r in 0..rows {
            out.push(src[r * cols + c]);
        }
    }
    out
}

fn fft2(grid: &SpatialGrid, values: &[f64]) -> Vec<Complex64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.plans.fwd_x.process(&mut buf);
    let mut t = transpose(&buf, ny, nx);
    grid.plans.fwd_y.process(&mut t);
    let mut out = transpose(&t, nx, ny);
    let norm = 1.0 / (nx * ny) as f64;
    out.iter_mut().for_each(|v| *v *= norm);
    out
}

fn ifft2(grid: &SpatialGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut buf = coeffs.to_vec();
    grid.plans.inv_x.process(&mut buf);
    let mut t = transpose(&buf, ny, nx);
    grid.plans.inv_y.process(&mut t);
    let out = transpose(&t, nx, ny);
    out.into_iter().map(|v| v.re).collect()
}

/// Normalized DCT-II of every length-`n` row in `data`: `x_j = Σ_k c_k cos(πk(j+½)/n)`.
fn dct_rows(fft: &Arc<dyn Fft<f64>>, n: usize, data: &mut [f64]) {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for row in data.chunks_exact_mut(n) {
        // even samples ascending, odd samples descending
        for j in 0..n.div_ceil(2) {
            v[j] = Complex64::new(row[2 * j], 0.0);
        }
        for j in 0..n / 2 {
            v[n - 1 - j] = Complex64::new(row[2 * j + 1], 0.0);
        }
        fft.process(&mut v);
        for k in 0..n {
            let w = Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64));
            let x = (w * v[k]).re;
            row[k] = if k == 0 { x / n as f64 } else { 2.0 * x / n as f64 };
        }
    }
}

/// Inverse of [`dct_rows`].
fn idct_rows(ifft: &Arc<dyn Fft<f64>>, n: usize, data: &mut [f64]) {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let nf = n as f64;
    for row in data.chunks_exact_mut(n) {
        // recover the unnormalized DCT-II values X_k
        let big_x = |k: usize| -> f64 {
            if k == 0 {
                row[0] * nf
            } else if k < n {
                row[k] * nf / 2.0
            } else {
                0.0
            }
        };
        for (k, slot) in v.iter_mut().enumerate().take(n) {
            let z = Complex64::new(big_x(k), -big_x(n - k));
            *slot = Complex64::from_polar(1.0, PI * k as f64 / (2.0 * nf)) * z;
        }
        ifft.process(&mut v);
        for j in 0..n.div_ceil(2) {
            row[2 * j] = v[j].re / nf;
        }
        for j in 0..n / 2 {
            row[2 * j + 1] = v[n - 1 - j].re / nf;
        }
    }
}

fn dct2_2d(grid: &SpatialGrid, values: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut buf = values.to_vec();
    dct_rows(&grid.plans.fwd_x, nx, &mut buf);
    let mut t = transpose(&buf, ny, nx);
    dct_rows(&grid.plans.fwd_y, ny, &mut t);
    transpose(&t, nx, ny)
}

fn idct2_2d(grid: &SpatialGrid, coeffs: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut buf = coeffs.to_vec();
    idct_rows(&grid.plans.inv_x, nx, &mut buf);
    let mut t = transpose(&buf, ny, nx);
    idct_rows(&grid.plans.inv_y, ny, &mut t);
    transpose(&t, nx, ny)
}
