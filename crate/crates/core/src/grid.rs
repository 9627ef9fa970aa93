//! Truncated `(n, xi)` grids, spectral fields and the weighted Sobolev norms.
//!
//! A [`SpectralField`] stores `g_n(xi) = (1/2pi) \int\int g(x,v) e^{-inx - i xi v} dx dv`
//! for `|n| <= n_max` on a uniform, symmetric `xi` grid. With this convention
//! Parseval reads `\int\int |g|^2 dx dv = sum_n \int |g_n(xi)|^2 dxi`, and an
//! `x`-independent function `eta(v)` has `g_0(xi) = \int eta(v) e^{-i xi v} dv`.
//!
//! Everything outside the grid (`|n| > n_max` or `|xi| > xi_max`) is treated
//! as exactly zero, both by interpolation and by the finite-difference
//! operators that realize the velocity weight.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `<x> = (1 + x^2)^{1/2}`.
#[inline]
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Extents of the truncated phase-space grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    n_max: usize,
    xi_max: f64,
    n_xi: usize,
    m0: u32,
}

impl PhaseGrid {
    /// Builds a grid with modes `-n_max..=n_max` and `n_xi` uniform nodes on
    /// `[-xi_max, xi_max]`. `n_xi` must be odd so that `xi = 0` is a node.
    pub fn new(n_max: i64, xi_max: f64, n_xi: i64, m0: i64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidGrid(format!("n_max must be >= 1, got {n_max}")));
        }
        if !(xi_max.is_finite() && xi_max > 0.0) {
            return Err(Error::InvalidGrid(format!("xi_max must be positive, got {xi_max}")));
        }
        if n_xi < 3 {
            return Err(Error::InvalidGrid(format!("n_xi must be >= 3, got {n_xi}")));
        }
        if n_xi % 2 == 0 {
            return Err(Error::InvalidGrid(format!("n_xi must be odd, got {n_xi}")));
        }
        if m0 < 1 {
            return Err(Error::InvalidGrid(format!("m0 must be >= 1, got {m0}")));
        }
        Ok(Self { n_max: n_max as usize, xi_max, n_xi: n_xi as usize, m0: m0 as u32 })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    pub fn n_xi(&self) -> usize {
        self.n_xi
    }

    pub fn m0(&self) -> u32 {
        self.m0
    }

    pub fn dxi(&self) -> f64 {
        2.0 * self.xi_max / (self.n_xi - 1) as f64
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn modes(&self) -> std::ops::RangeInclusive<i32> {
        -(self.n_max as i32)..=self.n_max as i32
    }

    pub fn contains_mode(&self, n: i32) -> bool {
        n.unsigned_abs() as usize <= self.n_max
    }

    /// Row index of mode `n`, if it is on the grid.
    pub fn row_index(&self, n: i32) -> Option<usize> {
        self.contains_mode(n).then(|| (n + self.n_max as i32) as usize)
    }

    pub fn mode_of_row(&self, row: usize) -> i32 {
        row as i32 - self.n_max as i32
    }

    pub fn xi(&self, j: usize) -> f64 {
        // Symmetric construction keeps xi_j = -xi_{N-1-j} bit-exact.
        let c = (self.n_xi - 1) / 2;
        (j as f64 - c as f64) * self.dxi()
    }

    pub fn xi_nodes(&self) -> Vec<f64> {
        (0..self.n_xi).map(|j| self.xi(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.n_modes() * self.n_xi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Four-point Lagrange weights for nodes `-1, 0, 1, 2` at fractional offset `f`.
#[inline]
pub fn cubic_weights(f: f64) -> [f64; 4] {
    let fm1 = f - 1.0;
    let fm2 = f - 2.0;
    let fp1 = f + 1.0;
    [
        -f * fm1 * fm2 / 6.0,
        fp1 * fm1 * fm2 / 2.0,
        -fp1 * f * fm2 / 2.0,
        fp1 * f * fm1 / 6.0,
    ]
}

#[inline]
fn tap(row: &[Complex64], i: isize) -> Complex64 {
    if i < 0 || i as usize >= row.len() {
        Complex64::new(0.0, 0.0)
    } else {
        row[i as usize]
    }
}

/// Precomputed cubic stencil for reading a row at `xi_j - shift` for every node `j`.
///
/// Because the grid is uniform the fractional offset is the same for all `j`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftStencil {
    offset: isize,
    weights: [f64; 4],
    j_lo: usize,
    j_hi: usize,
}

impl ShiftStencil {
    pub fn new(grid: &PhaseGrid, shift: f64) -> Self {
        let dxi = grid.dxi();
        let n = grid.n_xi();
        let a = -shift / dxi;
        let m = a.floor();
        let weights = cubic_weights(a - m);
        // Nodes whose shifted abscissa stays inside [-xi_max, xi_max].
        let lo = (shift / dxi - 1e-9).ceil();
        let hi = ((2.0 * grid.xi_max() + shift) / dxi + 1e-9).floor();
        let (j_lo, j_hi) = if hi < 0.0 || lo > (n - 1) as f64 || lo > hi {
            (1, 0)
        } else {
            (lo.max(0.0) as usize, hi.min((n - 1) as f64) as usize)
        };
        Self { offset: m as isize, weights, j_lo, j_hi }
    }

    /// Interpolated value of `row` at `xi_j - shift`; zero outside the grid.
    #[inline]
    pub fn sample(&self, row: &[Complex64], j: usize) -> Complex64 {
        if j < self.j_lo || j > self.j_hi {
            return Complex64::new(0.0, 0.0);
        }
        let i = j as isize + self.offset;
        let w = &self.weights;
        tap(row, i - 1) * w[0] + tap(row, i) * w[1] + tap(row, i + 1) * w[2] + tap(row, i + 2) * w[3]
    }

    /// Range of nodes whose shifted read is inside the grid (empty if `lo > hi`).
    pub fn valid_range(&self) -> (usize, usize) {
        (self.j_lo, self.j_hi)
    }
}

/// Spectral representation of a function on `T x R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: PhaseGrid,
    real: bool,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: PhaseGrid, real: bool) -> Self {
        Self { grid, real, data: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f(n, xi)` at every node.
    pub fn from_fn(grid: PhaseGrid, real: bool, f: impl Fn(i32, f64) -> Complex64) -> Self {
        let mut out = Self::zeros(grid, real);
        for n in grid.modes() {
            let r = grid.row_index(n).unwrap();
            for j in 0..grid.n_xi() {
                out.data[r * grid.n_xi() + j] = f(n, grid.xi(j));
            }
        }
        out
    }

    pub fn from_values(grid: PhaseGrid, real: bool, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, real, data })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// Whether the field is flagged as the transform of a real function.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.data
    }

    /// Row of mode `n`; panics if `n` is off the grid.
    pub fn row(&self, n: i32) -> &[Complex64] {
        let r = self.grid.row_index(n).expect("mode outside grid");
        let w = self.grid.n_xi();
        &self.data[r * w..(r + 1) * w]
    }

    pub fn row_mut(&mut self, n: i32) -> &mut [Complex64] {
        let r = self.grid.row_index(n).expect("mode outside grid");
        let w = self.grid.n_xi();
        &mut self.data[r * w..(r + 1) * w]
    }

    /// Node value, zero for modes off the grid.
    pub fn get(&self, n: i32, j: usize) -> Complex64 {
        match self.grid.row_index(n) {
            Some(r) => self.data[r * self.grid.n_xi() + j],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Cubic interpolation of `g_n` at an arbitrary `xi`; zero outside the grid.
    pub fn interp(&self, n: i32, xi: f64) -> Complex64 {
        let g = &self.grid;
        if !g.contains_mode(n) || !(xi.abs() <= g.xi_max() * (1.0 + 1e-14)) {
            return Complex64::new(0.0, 0.0);
        }
        let u = (xi + g.xi_max()) / g.dxi();
        let i = u.floor();
        let w = cubic_weights(u - i);
        let i = i as isize;
        let row = self.row(n);
        tap(row, i - 1) * w[0] + tap(row, i) * w[1] + tap(row, i + 1) * w[2] + tap(row, i + 2) * w[3]
    }

    /// Largest violation of `g_{-n}(-xi) = conj(g_n(xi))` over all node pairs.
    pub fn reality_defect(&self) -> f64 {
        let w = self.grid.n_xi();
        let rows = self.grid.n_modes();
        let mut worst = 0.0_f64;
        for r in 0..rows {
            for j in 0..w {
                let a = self.data[r * w + j];
                let b = self.data[(rows - 1 - r) * w + (w - 1 - j)];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Replaces each symmetric pair by its average; returns the defect beforehand.
    pub fn enforce_reality(&mut self) -> f64 {
        let w = self.grid.n_xi();
        let rows = self.grid.n_modes();
        let total = rows * w;
        let mut worst = 0.0_f64;
        for idx in 0..total {
            let mirror = total - 1 - idx;
            if mirror < idx {
                break;
            }
            let a = self.data[idx];
            let b = self.data[mirror];
            worst = worst.max((a - b.conj()).norm());
            if mirror == idx {
                self.data[idx] = Complex64::new(a.re, 0.0);
            } else {
                let avg = (a + b.conj()) * 0.5;
                self.data[idx] = avg;
                self.data[mirror] = avg.conj();
            }
        }
        worst
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += y * a;
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= a;
        }
        out
    }

    pub fn difference(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out.real = self.real && other.real;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Unweighted `L^2(T x R)` norm squared, by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dxi()
    }

    /// `sum |g|^2 dxi` over the outermost `width` nodes at both ends of every row.
    ///
    /// Large values mean the truncated norms are under-resolved.
    pub fn edge_mass(&self, width: usize) -> f64 {
        let w = self.grid.n_xi();
        let width = width.min(w / 2);
        let mut acc = 0.0;
        for r in 0..self.grid.n_modes() {
            let row = &self.data[r * w..(r + 1) * w];
            acc += row[..width].iter().chain(&row[w - width..]).map(|z| z.norm_sqr()).sum::<f64>();
        }
        acc * self.grid.dxi()
    }

    /// Writes the `n,xi,re,im` snapshot CSV (17 significant digits).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,xi,re,im")?;
        let mut line = String::with_capacity(96);
        for n in self.grid.modes() {
            let row = self.row(n);
            for (j, z) in row.iter().enumerate() {
                line.clear();
                write!(line, "{},{:.16e},{:.16e},{:.16e}", n, self.grid.xi(j), z.re, z.im).unwrap();
                writeln!(out, "{line}")?;
            }
        }
        Ok(())
    }

    /// Reads a snapshot written by [`SpectralField::write_csv`] onto `grid`.
    pub fn read_csv<R: BufRead>(grid: PhaseGrid, real: bool, input: R) -> Result<Self> {
        let mut out = Self::zeros(grid, real);
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty snapshot".into()))?
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if header.trim() != "n,xi,re,im" {
            return Err(Error::InvalidArgument(format!("bad snapshot header {header:?}")));
        }
        let mut count = 0usize;
        for line in lines {
            let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::InvalidArgument(format!("bad snapshot row {line:?}")));
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("{s:?}: {e}")))
            };
            let n: i32 = cols[0].trim().parse().map_err(|e| Error::InvalidArgument(format!("{e}")))?;
            if count >= grid.len() {
                return Err(Error::InvalidArgument("too many snapshot rows".into()));
            }
            let r = count / grid.n_xi();
            let j = count % grid.n_xi();
            if grid.mode_of_row(r) != n {
                return Err(Error::InvalidArgument(format!("row {count}: expected mode {}", grid.mode_of_row(r))));
            }
            let xi = parse(cols[1])?;
            if (xi - grid.xi(j)).abs() > 1e-9 * grid.xi_max() {
                return Err(Error::InvalidArgument(format!("row {count}: xi {xi} off-grid")));
            }
            out.data[count] = Complex64::new(parse(cols[2])?, parse(cols[3])?);
            count += 1;
        }
        if count != grid.len() {
            return Err(Error::InvalidArgument(format!("expected {} rows, got {count}", grid.len())));
        }
        Ok(out)
    }
}

/// Sixth-order centered first derivative with zero extension past the ends.
pub fn fd_derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    const C: [f64; 3] = [45.0, -9.0, 1.0];
    let n = values.len() as isize;
    let at = |i: isize| if i < 0 || i >= n { Complex64::new(0.0, 0.0) } else { values[i as usize] };
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, c) in C.iter().enumerate() {
                let m = m as isize + 1;
                acc += (at(i + m) - at(i - m)) * *c;
            }
            acc / (60.0 * h)
        })
        .collect()
}

fn binomial_row(m: u32) -> Vec<f64> {
    let mut row = vec![1.0_f64];
    for k in 1..=m {
        let prev = row[k as usize - 1];
        row.push(prev * (m - k + 1) as f64 / k as f64);
    }
    row
}

/// Weighted Sobolev norm `||f||_{H^n}` with weight `(1 + v^2)^{m0}`.
///
/// Derivatives become multipliers (`d_x -> i n`, `d_v -> i xi`). The weight is
/// expanded as `(1+v^2)^{m0} = sum_j C(m0,j) v^{2j}`, and `||v^j h||` is
/// `||d_xi^j h_hat||`, evaluated with sixth-order centered differences.
pub fn sobolev_norm(f: &SpectralField, n: i32, m0: u32) -> Result<f64> {
    if n < 0 {
        return Err(Error::InvalidArgument(format!("Sobolev index must be >= 0, got {n}")));
    }
    let grid = f.grid();
    if m0 != grid.m0() {
        return Err(Error::WeightMismatch { grid: grid.m0(), requested: m0 });
    }
    let n = n as u32;
    let dxi = grid.dxi();
    let binom = binomial_row(m0);
    let xi = grid.xi_nodes();
    let mut total = 0.0;
    for k in grid.modes() {
        let row = f.row(k);
        if row.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            continue;
        }
        let k2 = (k as f64) * (k as f64);
        for q in 0..=n {
            // sum_{p <= n - q} |k|^{2p}
            let mut pw = 0.0;
            let mut term = 1.0;
            for _ in 0..=(n - q) {
                pw += term;
                term *= k2;
            }
            let mut d: Vec<Complex64> =
                row.iter().zip(&xi).map(|(z, x)| z * x.powi(q as i32)).collect();
            for (j, b) in binom.iter().enumerate() {
                if j > 0 {
                    d = fd_derivative(&d, dxi);
                }
                let s: f64 = d.iter().map(|z| z.norm_sqr()).sum::<f64>() * dxi;
                total += b * pw * s;
            }
        }
    }
    Ok(total.sqrt())
}

/// `\int_R (1 + v^2)^{-m0} dv = pi (2m0-3)!! / (2m0-2)!!`.
pub fn inverse_weight_integral(m0: u32) -> f64 {
    let mut acc = std::f64::consts::PI;
    for m in 1..m0 {
        acc *= (2 * m - 1) as f64 / (2 * m) as f64;
    }
    acc
}

/// Cauchy-Schwarz constant of the pointwise Fourier embedding.
///
/// `|k^a xi^b f_k(xi)| <= (1/2pi) ||f||_{H^n} (\int_T\int_R (1+v^2)^{-m0})^{1/2}`,
/// and the torus contributes a factor `2pi` inside the square root, so
/// `C(m0) = (\int_R (1+v^2)^{-m0} dv / 2pi)^{1/2}` (`1/sqrt(2)` for `m0 = 1`).
pub fn embedding_constant(m0: u32) -> f64 {
    (inverse_weight_integral(m0) / (2.0 * std::f64::consts::PI)).sqrt()
}

/// `(|f_k(xi)|, 2^{n/2} C(m0) <k>^{-alpha} <xi>^{-beta} ||f||_{H^n})` with `n = alpha + beta`.
pub fn embedding_bound(f: &SpectralField, k: i32, xi: f64, alpha: u32, beta: u32) -> Result<(f64, f64)> {
    embedding_bound_with_constant(f, k, xi, alpha, beta, embedding_constant(f.grid().m0()))
}

/// As [`embedding_bound`] with an explicit constant in place of `C(m0)`.
pub fn embedding_bound_with_constant(
    f: &SpectralField,
    k: i32,
    xi: f64,
    alpha: u32,
    beta: u32,
    constant: f64,
) -> Result<(f64, f64)> {
    let grid = f.grid();
    if !(xi.abs() <= grid.xi_max()) {
        return Err(Error::OutOfRange { xi, limit: grid.xi_max() });
    }
    let n = alpha + beta;
    let lhs = f.interp(k, xi).norm();
    let norm = sobolev_norm(f, n as i32, grid.m0())?;
    let rhs = 2f64.powf(n as f64 / 2.0)
        * constant
        * japanese(k as f64).powi(-(alpha as i32))
        * japanese(xi).powi(-(beta as i32))
        * norm;
    Ok((lhs, rhs))
}

/// Largest `lhs / rhs` of [`embedding_bound_with_constant`] over every grid
/// node, every mode and every `alpha + beta <= order`; nodes where `f`
/// vanishes are skipped. Each norm is computed once.
pub fn embedding_worst_ratio(f: &SpectralField, order: u32, constant: f64) -> Result<f64> {
    let grid = f.grid();
    let norms: Vec<f64> = (0..=order).map(|n| sobolev_norm(f, n as i32, grid.m0())).collect::<Result<_>>()?;
    let xi = grid.xi_nodes();
    let mut worst = 0.0_f64;
    for k in grid.modes() {
        let jk = japanese(k as f64);
        for (z, &x) in f.row(k).iter().zip(&xi) {
            let lhs = z.norm();
            if lhs == 0.0 {
                continue;
            }
            let jx = japanese(x);
            for alpha in 0..=order {
                for beta in 0..=(order - alpha) {
                    let n = alpha + beta;
                    let rhs = 2f64.powf(n as f64 / 2.0)
                        * constant
                        * jk.powi(-(alpha as i32))
                        * jx.powi(-(beta as i32))
                        * norms[n as usize];
                    worst = worst.max(lhs / rhs);
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_field(grid: PhaseGrid) -> SpectralField {
        // f(x, v) = e^{-v^2/2} / sqrt(2 pi) has f_0(xi) = e^{-xi^2/2}.
        SpectralField::from_fn(grid, true, |n, xi| {
            if n == 0 {
                Complex64::new((-xi * xi / 2.0).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn grid_nodes_and_spacing() {
        let g = PhaseGrid::new(1, 1.0, 3, 1).unwrap();
        assert_eq!(g.xi_nodes(), vec![-1.0, 0.0, 1.0]);
        let g = PhaseGrid::new(8, 64.0, 1025, 1).unwrap();
        assert_eq!(g.dxi(), 0.125);
        assert_eq!(g.xi(512), 0.0);
        assert_eq!(g.xi(0), -64.0);
        assert_eq!(g.xi(1024), 64.0);
    }

    #[test]
    fn grid_rejects_bad_extents() {
        assert!(PhaseGrid::new(1, 1.0, 4, 1).is_err());
        assert!(PhaseGrid::new(0, 1.0, 5, 1).is_err());
        assert!(PhaseGrid::new(1, 0.0, 5, 1).is_err());
        assert!(PhaseGrid::new(1, -2.0, 5, 1).is_err());
        assert!(PhaseGrid::new(1, 1.0, 5, 0).is_err());
        assert!(PhaseGrid::new(1, 1.0, 1, 1).is_err());
    }

    #[test]
    fn cubic_weights_partition_unity_and_reproduce_cubics() {
        for &f in &[0.0, 0.1, 0.5, 0.77, 1.0] {
            let w = cubic_weights(f);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.3 * x * x * x;
            let approx = w[0] * p(-1.0) + w[1] * p(0.0) + w[2] * p(1.0) + w[3] * p(2.0);
            assert!((approx - p(f)).abs() < 1e-13);
        }
        assert_eq!(cubic_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = PhaseGrid::new(2, 8.0, 65, 1).unwrap();
        let z = SpectralField::zeros(g, true);
        for n in 0..4 {
            assert_eq!(sobolev_norm(&z, n, 1).unwrap(), 0.0);
        }
        assert_eq!(embedding_bound(&z, 1, 0.5, 1, 0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn gaussian_weighted_l2_norm() {
        let g = PhaseGrid::new(1, 32.0, 2049, 1).unwrap();
        let f = gaussian_field(g);
        let exact = (1.5 * PI.sqrt()).sqrt();
        let got = sobolev_norm(&f, 0, 1).unwrap();
        assert!((got - exact).abs() < 1e-9, "{got} vs {exact}");
        assert!((exact - 1.63055).abs() < 1e-5);
    }

    #[test]
    fn norm_rejects_negative_index_and_wrong_weight() {
        let g = PhaseGrid::new(1, 4.0, 17, 1).unwrap();
        let f = gaussian_field(g);
        assert!(sobolev_norm(&f, -1, 1).is_err());
        assert_eq!(sobolev_norm(&f, 1, 2), Err(Error::WeightMismatch { grid: 1, requested: 2 }));
    }

    #[test]
    fn inverse_weight_integrals() {
        assert!((inverse_weight_integral(1) - PI).abs() < 1e-15);
        assert!((inverse_weight_integral(2) - PI / 2.0).abs() < 1e-15);
        assert!((inverse_weight_integral(3) - 3.0 * PI / 8.0).abs() < 1e-15);
        assert!((embedding_constant(1) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn worst_ratio_matches_pointwise_bound() {
        let grid = PhaseGrid::new(1, 4.0, 65, 1).unwrap();
        let f = SpectralField::from_fn(grid, true, |n, xi| {
            Complex64::new((-(xi - 0.3 * n as f64).powi(2)).exp(), 0.0)
        });
        let c = embedding_constant(1);
        let mut worst = 0.0_f64;
        for k in grid.modes() {
            for j in 0..grid.n_xi() {
                for a in 0..=2 {
                    for b in 0..=(2 - a) {
                        let (l, r) = embedding_bound(&f, k, grid.xi(j), a, b).unwrap();
                        worst = worst.max(l / r);
                    }
                }
            }
        }
        let fast = embedding_worst_ratio(&f, 2, c).unwrap();
        assert!((fast - worst).abs() <= 1e-12 * worst, "{fast} vs {worst}");
    }

    #[test]
    fn embedding_out_of_range_rejected() {
        let g = PhaseGrid::new(1, 4.0, 17, 1).unwrap();
        let f = gaussian_field(g);
        assert!(matches!(embedding_bound(&f, 0, 4.5, 0, 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn gaussian_embedding_at_origin_is_tight_but_holds() {
        // |f_0(0)| = 1 and ||f||_{H^0} = (3 sqrt(pi)/2)^{1/2}; with C(1) = 1/sqrt(2)
        // the right-hand side is 1.153.
        let g = PhaseGrid::new(1, 16.0, 513, 1).unwrap();
        let f = gaussian_field(g);
        let (lhs, rhs) = embedding_bound(&f, 0, 0.0, 0, 0).unwrap();
        assert!((lhs - 1.0).abs() < 1e-15);
        assert!(lhs <= rhs && rhs < 1.2);
    }

    #[test]
    fn interpolation_is_exact_on_nodes_and_zero_outside() {
        let g = PhaseGrid::new(1, 4.0, 33, 1).unwrap();
        let f = SpectralField::from_fn(g, false, |n, xi| Complex64::new(n as f64 + xi, xi * xi));
        for j in 0..g.n_xi() {
            assert_eq!(f.interp(1, g.xi(j)), f.get(1, j));
        }
        assert_eq!(f.interp(1, 4.01), Complex64::new(0.0, 0.0));
        assert_eq!(f.interp(2, 0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn shift_stencil_matches_pointwise_interpolation() {
        let g = PhaseGrid::new(1, 6.0, 49, 1).unwrap();
        let f = SpectralField::from_fn(g, false, |_, xi| Complex64::new((-xi * xi / 4.0).exp(), xi.sin()));
        for &s in &[0.0, 0.3, -1.7, 5.9, 12.5, -0.125] {
            let st = ShiftStencil::new(&g, s);
            for j in 0..g.n_xi() {
                let a = st.sample(f.row(1), j);
                let b = f.interp(1, g.xi(j) - s);
                assert!((a - b).norm() < 1e-14, "shift {s} node {j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn reality_enforcement_symmetrizes_pairs() {
        let g = PhaseGrid::new(2, 3.0, 13, 1).unwrap();
        let mut f = SpectralField::from_fn(g, true, |n, xi| Complex64::new(n as f64 * 0.3 + xi, xi - n as f64));
        assert!(f.reality_defect() > 0.1);
        f.enforce_reality();
        assert_eq!(f.reality_defect(), 0.0);
    }

    #[test]
    fn snapshot_csv_round_trip() {
        let g = PhaseGrid::new(1, 2.0, 5, 1).unwrap();
        let f = SpectralField::from_fn(g, false, |n, xi| Complex64::new(1.0 / 3.0 + n as f64, xi.exp()));
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,xi,re,im\n-1,"));
        assert_eq!(text.lines().count(), 1 + g.len());
        let back = SpectralField::read_csv(g, false, buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }
}
