//! Discretization of the periodic channel: Fourier collocation in the
//! periodic direction, finite differences in the vertical, plus the
//! quadrature and norms every other module builds on.
//!
//! The domain is fixed to x1 in [0, 2*pi) with `n1` equispaced nodes and
//! x2 in [0, 1] with `n2` nodes including both walls. All reductions run in
//! a fixed order (compensated per-column sums, then a pairwise tree across
//! columns) so results are bit-identical regardless of thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::stencil;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Uniform grid on the periodic channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n1: usize,
    n2: usize,
    fd_order: usize,
}

impl Grid {
    /// `n1` even and >= 8, `n2` >= 9, `fd_order` 2 or 4.
    pub fn new(n1: usize, n2: usize, fd_order: usize) -> Result<Grid> {
        if n1 < 8 || n1 % 2 != 0 {
            return Err(Error::InvalidParameter(format!("n1 = {n1} must be even and >= 8")));
        }
        if n2 < 9 {
            return Err(Error::InvalidParameter(format!("n2 = {n2} must be >= 9")));
        }
        if fd_order != 2 && fd_order != 4 {
            return Err(Error::InvalidParameter(format!("fd_order = {fd_order} must be 2 or 4")));
        }
        Ok(Grid { n1, n2, fd_order })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn fd_order(&self) -> usize {
        self.fd_order
    }

    pub fn dx1(&self) -> f64 {
        TWO_PI / self.n1 as f64
    }

    pub fn dx2(&self) -> f64 {
        1.0 / (self.n2 - 1) as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        TWO_PI * i as f64 / self.n1 as f64
    }

    pub fn x2(&self, j: usize) -> f64 {
        j as f64 / (self.n2 - 1) as f64
    }

    /// Stored Fourier modes k = 0 ..= n1/2 (real-input half spectrum).
    pub fn modes(&self) -> usize {
        self.n1 / 2 + 1
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

// ---------------------------------------------------------------------------
// deterministic summation helpers

/// Neumaier-compensated sequential sum.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Pairwise (binary-tree) reduction in a fixed order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        compensated_sum(xs.iter().copied())
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

// ---------------------------------------------------------------------------
// FFT plan cache

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(n1: usize) -> Arc<Plans> {
    static CACHE: Lazy<Mutex<HashMap<usize, Arc<Plans>>>> = Lazy::new(|| Mutex::new(HashMap::new()));
    let mut cache = CACHE.lock().unwrap();
    Arc::clone(cache.entry(n1).or_insert_with(|| {
        let mut planner = FftPlanner::new();
        Arc::new(Plans {
            fwd: planner.plan_fft_forward(n1),
            inv: planner.plan_fft_inverse(n1),
        })
    }))
}

// ---------------------------------------------------------------------------
// ScalarField

/// Real samples `v[i][j] = f(x1_i, x2_j)`, row-major with the horizontal
/// index outermost.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n1 {
            let x1 = grid.x1(i);
            for j in 0..grid.n2 {
                values.push(f(x1, grid.x2(j)));
            }
        }
        ScalarField { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.n1,
                grid.n2
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite field values".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.grid.n2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n2 + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// self += c * other
    pub fn axpy(&mut self, c: f64, other: &ScalarField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in self.values.iter_mut() {
            *a *= c;
        }
    }

    pub fn mul_pointwise(&self, other: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        ScalarField { grid: self.grid, values }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        ScalarField { grid: self.grid, values }
    }

    // -- transforms ---------------------------------------------------------

    /// Per-row Fourier coefficients, k = 0 ..= n1/2, normalized so that
    /// cos(k x1) carries 1/2 at mode k.
    pub fn to_modal(&self) -> ModalField {
        let (n1, n2, nm) = (self.grid.n1, self.grid.n2, self.grid.modes());
        let plans = plans(n1);
        let scale = 1.0 / n1 as f64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); nm * n2];
        let mut row = vec![Complex64::new(0.0, 0.0); n1];
        for j in 0..n2 {
            for i in 0..n1 {
                row[i] = Complex64::new(self.values[i * n2 + j], 0.0);
            }
            plans.fwd.process(&mut row);
            for k in 0..nm {
                coeffs[k * n2 + j] = row[k] * scale;
            }
        }
        ModalField { grid: self.grid, coeffs }
    }

    /// Spectral horizontal derivative (exact for resolved trig polynomials;
    /// the Nyquist mode is dropped).
    pub fn ddx1(&self) -> ScalarField {
        self.to_modal().ddx1().to_physical()
    }

    /// Vertical first derivative, order `fd_order` with matching one-sided
    /// rows at the walls.
    pub fn ddx2(&self) -> ScalarField {
        self.vertical_derivative(1)
    }

    /// Vertical `m`-th derivative (m <= 4) at truncation order `fd_order`.
    pub fn vertical_derivative(&self, m: usize) -> ScalarField {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let table = stencil::vertical_stencils(n2, m, self.grid.fd_order, 0);
        let mut out = vec![0.0; self.values.len()];
        for i in 0..n1 {
            table.apply_column(&self.values[i * n2..(i + 1) * n2], &mut out[i * n2..(i + 1) * n2]);
        }
        ScalarField { grid: self.grid, values: out }
    }

    // -- quadrature and norms -------------------------------------------------

    fn quad(&self, term: impl Fn(usize) -> f64) -> f64 {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let dx2 = self.grid.dx2();
        let cols: Vec<f64> = (0..n1)
            .map(|i| {
                compensated_sum((0..n2).map(|j| {
                    let w = if j == 0 || j == n2 - 1 { 0.5 * dx2 } else { dx2 };
                    w * term(i * n2 + j)
                }))
            })
            .collect();
        pairwise_sum(&cols) * self.grid.dx1()
    }

    /// Integral over the channel: rectangle rule in x1 (exact for trig
    /// polynomials) times the trapezoid rule in x2.
    pub fn integrate(&self) -> f64 {
        self.quad(|p| self.values[p])
    }

    /// L2 inner product against `other`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.quad(|p| self.values[p] * other.values[p])
    }

    /// L2 norm restricted to rows `margin .. n2-1-margin` (boundary rows of
    /// solver output hold identities, not PDE residuals).
    pub fn l2_interior(&self, margin: usize) -> f64 {
        let n2 = self.grid.n2;
        self.quad(|p| {
            let j = p % n2;
            if j < margin || j + margin > n2 - 1 {
                0.0
            } else {
                self.values[p] * self.values[p]
            }
        })
        .max(0.0)
        .sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Max |value| over the two wall rows.
    pub fn boundary_linf(&self) -> f64 {
        let n2 = self.grid.n2;
        let mut m = 0.0f64;
        for i in 0..self.grid.n1 {
            m = m.max(self.values[i * n2].abs());
            m = m.max(self.values[i * n2 + n2 - 1].abs());
        }
        m
    }

    pub fn pin_boundary_rows(&mut self, value: f64) {
        let n2 = self.grid.n2;
        for i in 0..self.grid.n1 {
            self.values[i * n2] = value;
            self.values[i * n2 + n2 - 1] = value;
        }
    }

    /// Sobolev norms H^0 ..= H^kmax, each the root-sum-square of the L2 norms
    /// of all mixed derivatives up to that order.
    pub fn sobolev_norms_upto(&self, kmax: usize) -> Result<Vec<f64>> {
        if kmax > 4 {
            return Err(Error::InvalidParameter(format!("H^{kmax} norms unsupported (k <= 4)")));
        }
        let modal = self.to_modal();
        let mut by_order = vec![0.0f64; kmax + 1];
        for a in 0..=kmax {
            let base = if a == 0 { self.clone() } else { modal.ddx1_pow(a).to_physical() };
            let mut cur = base;
            for b in 0..=(kmax - a) {
                if b > 0 {
                    cur = cur.ddx2();
                }
                by_order[a + b] += cur.inner(&cur);
            }
        }
        let mut acc = 0.0;
        Ok(by_order
            .iter()
            .map(|sq| {
                acc += sq;
                acc.max(0.0).sqrt()
            })
            .collect())
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => Ok(self.inner(self).max(0.0).sqrt()),
            NormKind::Hk(k) => Ok(*self
                .sobolev_norms_upto(k)?
                .last()
                .expect("sobolev_norms_upto returns k+1 entries")),
            NormKind::Linf => Ok(self.linf()),
            NormKind::W1Inf => Ok(self.linf().max(self.ddx1().linf()).max(self.ddx2().linf())),
        }
    }

    /// Horizontal average (the k = 0 Fourier coefficient) as a profile.
    pub fn x1_average(&self) -> Profile {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let values = (0..n2)
            .map(|j| compensated_sum((0..n1).map(|i| self.values[i * n2 + j])) / n1 as f64)
            .collect();
        Profile { grid: self.grid, values }
    }
}

/// Norm selector for [`ScalarField::norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    /// H^k for k <= 4; H^0 coincides with L2.
    Hk(usize),
    Linf,
    W1Inf,
}

// ---------------------------------------------------------------------------
// ModalField

/// Half-spectrum Fourier coefficients per vertical row, stored mode-major so
/// each mode's vertical profile is contiguous.
#[derive(Debug, Clone)]
pub struct ModalField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl ModalField {
    pub fn zeros(grid: Grid) -> Self {
        ModalField { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.modes() * grid.n2()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mode(&self, k: usize) -> &[Complex64] {
        let n2 = self.grid.n2;
        &self.coeffs[k * n2..(k + 1) * n2]
    }

    pub fn mode_mut(&mut self, k: usize) -> &mut [Complex64] {
        let n2 = self.grid.n2;
        &mut self.coeffs[k * n2..(k + 1) * n2]
    }

    pub fn to_physical(&self) -> ScalarField {
        let (n1, n2, nm) = (self.grid.n1, self.grid.n2, self.grid.modes());
        let plans = plans(n1);
        let mut values = vec![0.0; n1 * n2];
        let mut row = vec![Complex64::new(0.0, 0.0); n1];
        for j in 0..n2 {
            row[0] = self.coeffs[j];
            for k in 1..nm {
                let c = self.coeffs[k * n2 + j];
                row[k] = c;
                if k != n1 / 2 {
                    row[n1 - k] = c.conj();
                }
            }
            plans.inv.process(&mut row);
            for i in 0..n1 {
                values[i * n2 + j] = row[i].re;
            }
        }
        ScalarField { grid: self.grid, values }
    }

    /// Multiply mode k by (i k); the Nyquist mode is zeroed.
    pub fn ddx1(&self) -> ModalField {
        self.ddx1_pow(1)
    }

    pub fn ddx1_pow(&self, a: usize) -> ModalField {
        let (n1, n2, nm) = (self.grid.n1, self.grid.n2, self.grid.modes());
        let mut out = self.clone();
        for k in 0..nm {
            let factor = if k == n1 / 2 && a > 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k as f64).powu(a as u32)
            };
            for j in 0..n2 {
                out.coeffs[k * n2 + j] = self.coeffs[k * n2 + j] * factor;
            }
        }
        out
    }

    /// 2/3-rule dealiasing: zero every mode with k > n1/3. Idempotent, and
    /// modes k <= n1/3 are left bit-identical.
    pub fn dealias(&self) -> ModalField {
        let (n1, n2, nm) = (self.grid.n1, self.grid.n2, self.grid.modes());
        let cutoff = n1 as f64 / 3.0;
        let mut out = self.clone();
        for k in 0..nm {
            if k as f64 > cutoff {
                for j in 0..n2 {
                    out.coeffs[k * n2 + j] = Complex64::new(0.0, 0.0);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Profile

/// Function of x2 alone, sampled on the vertical nodes.
#[derive(Debug, Clone)]
pub struct Profile {
    grid: Grid,
    values: Vec<f64>,
}

impl Profile {
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n2()).map(|j| f(grid.x2(j))).collect();
        Profile { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n2() {
            return Err(Error::DimensionMismatch(format!(
                "{} profile values for n2 = {}",
                values.len(),
                grid.n2()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite profile values".into()));
        }
        Ok(Profile { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Constant-in-x1 lift to a full field.
    pub fn lift(&self) -> ScalarField {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let mut values = Vec::with_capacity(n1 * n2);
        for _ in 0..n1 {
            values.extend_from_slice(&self.values);
        }
        ScalarField { grid: self.grid, values }
    }

    pub fn derivative(&self) -> Profile {
        let table = stencil::vertical_stencils(self.grid.n2(), 1, self.grid.fd_order(), 0);
        let mut out = vec![0.0; self.values.len()];
        table.apply_column(&self.values, &mut out);
        Profile { grid: self.grid, values: out }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, other: &Profile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n1: usize, n2: usize, p: usize) -> Grid {
        Grid::new(n1, n2, p).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(7, 17, 2).is_err());
        assert!(Grid::new(8, 8, 2).is_err());
        assert!(Grid::new(8, 9, 3).is_err());
        assert!(Grid::new(8, 9, 2).is_ok());
    }

    #[test]
    fn single_mode_has_half_amplitude_coefficient() {
        let g = grid(32, 17, 2);
        let f = ScalarField::from_fn(g, |x1, _| (3.0 * x1).cos());
        let m = f.to_modal();
        for k in 0..g.modes() {
            for j in 0..g.n2() {
                let c = m.mode(k)[j];
                if k == 3 {
                    assert!((c.re - 0.5).abs() < 1e-12 && c.im.abs() < 1e-12);
                } else {
                    assert!(c.norm() < 1e-12, "k={k} leak {c}");
                }
            }
        }
    }

    #[test]
    fn constant_field_is_pure_mean_mode() {
        let g = grid(16, 9, 2);
        let f = ScalarField::from_fn(g, |_, _| 1.0);
        let m = f.to_modal();
        for k in 0..g.modes() {
            for j in 0..g.n2() {
                let c = m.mode(k)[j];
                if k == 0 {
                    assert!((c.re - 1.0).abs() < 1e-14 && c.im.abs() < 1e-14);
                } else {
                    assert!(c.norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn ddx1_differentiates_sine_exactly() {
        let g = grid(32, 17, 2);
        let f = ScalarField::from_fn(g, |x1, _| x1.sin());
        let d = f.ddx1();
        let want = ScalarField::from_fn(g, |x1, _| x1.cos());
        let err = d.sub(&want).linf();
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn ddx1_exact_on_trig_polynomials_below_nyquist() {
        let g = grid(32, 9, 2);
        let f = ScalarField::from_fn(g, |x1, _| {
            (1..16).map(|k| ((k * k % 7) as f64 / 7.0) * (k as f64 * x1 + k as f64).sin()).sum()
        });
        let d = f.ddx1();
        let want = ScalarField::from_fn(g, |x1, _| {
            (1..16)
                .map(|k| ((k * k % 7) as f64 / 7.0) * k as f64 * (k as f64 * x1 + k as f64).cos())
                .sum()
        });
        assert!(d.sub(&want).linf() < 1e-10);
    }

    #[test]
    fn ddx2_exact_on_quadratic() {
        for p in [2usize, 4] {
            let g = grid(8, 17, p);
            let f = ScalarField::from_fn(g, |_, x2| x2 * x2);
            let d = f.ddx2();
            let want = ScalarField::from_fn(g, |_, x2| 2.0 * x2);
            assert!(d.sub(&want).linf() < 1e-11, "fd_order {p}");
        }
    }

    #[test]
    fn ddx2_richardson_convergence_order() {
        // Oracle: observed order from successive grid doublings on sin(pi x2).
        for p in [2usize, 4] {
            let mut errors = Vec::new();
            for n2 in [17usize, 33, 65] {
                let g = grid(8, n2, p);
                let f = ScalarField::from_fn(g, |_, x2| (std::f64::consts::PI * x2).sin());
                let want = ScalarField::from_fn(g, |_, x2| {
                    std::f64::consts::PI * (std::f64::consts::PI * x2).cos()
                });
                errors.push(f.ddx2().sub(&want).linf());
            }
            for w in errors.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order >= p as f64 - 0.1, "fd_order {p}: observed {order}");
            }
        }
    }

    #[test]
    fn integrate_constant_and_odd_mode() {
        let g = grid(32, 33, 2);
        let one = ScalarField::from_fn(g, |_, _| 1.0);
        assert!((one.integrate() - TWO_PI).abs() < 1e-12);
        let s = ScalarField::from_fn(g, |x1, _| x1.sin());
        assert!(s.integrate().abs() < 1e-12);
    }

    #[test]
    fn integrate_separable_product() {
        // integral of sin^2(x1) sin^2(pi x2) = pi * 1/2; sin^2(pi x2) is
        // 1-periodic so the vertical trapezoid rule is exact here.
        let g = grid(32, 33, 2);
        let f = ScalarField::from_fn(g, |x1, x2| {
            (x1.sin() * (std::f64::consts::PI * x2).sin()).powi(2)
        });
        let want = std::f64::consts::PI / 2.0;
        assert!((f.integrate() - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn l2_norm_of_separable_mode() {
        let g = grid(64, 65, 2);
        let f = ScalarField::from_fn(g, |x1, x2| x1.sin() * (std::f64::consts::PI * x2).sin());
        let want = (std::f64::consts::PI / 2.0).sqrt();
        assert!((f.norm(NormKind::L2).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn h0_equals_l2_and_rejects_k5() {
        let g = grid(16, 17, 2);
        let f = ScalarField::from_fn(g, |x1, x2| (2.0 * x1).cos() * x2 * (1.0 - x2));
        let l2 = f.norm(NormKind::L2).unwrap();
        let h0 = f.norm(NormKind::Hk(0)).unwrap();
        assert!((l2 - h0).abs() < 1e-13 * (1.0 + l2));
        assert!(f.norm(NormKind::Hk(5)).is_err());
        assert!(f.norm(NormKind::L2).unwrap() >= 0.0);
        let zero = ScalarField::zeros(g);
        for kind in [NormKind::L2, NormKind::Hk(3), NormKind::Linf, NormKind::W1Inf] {
            assert_eq!(zero.norm(kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn x1_average_drops_oscillation() {
        let g = grid(32, 17, 2);
        let f = ScalarField::from_fn(g, |x1, x2| x1.sin() + x2);
        let avg = f.x1_average();
        for j in 0..g.n2() {
            assert!((avg.get(j) - g.x2(j)).abs() < 1e-13);
        }
    }

    #[test]
    fn dealias_idempotent_and_preserves_low_modes() {
        let g = grid(24, 9, 2);
        let f = ScalarField::from_fn(g, |x1, x2| {
            (1..12).map(|k| (k as f64 * x1).cos() * (1.0 + x2 * k as f64)).sum()
        });
        let m = f.to_modal();
        let d1 = m.dealias();
        let d2 = d1.dealias();
        assert_eq!(d1.coeffs().len(), d2.coeffs().len());
        for (a, b) in d1.coeffs().iter().zip(d2.coeffs()) {
            assert_eq!(a, b);
        }
        let cutoff = g.n1() as f64 / 3.0;
        for k in 0..g.modes() {
            for j in 0..g.n2() {
                if (k as f64) <= cutoff {
                    assert_eq!(d1.mode(k)[j], m.mode(k)[j]);
                } else {
                    assert_eq!(d1.mode(k)[j], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn profile_lift_and_average_roundtrip() {
        let g = grid(16, 17, 2);
        let p = Profile::from_fn(g, |x2| 1.0 - x2 + 0.3 * x2 * x2);
        let lifted = p.lift();
        let back = lifted.x1_average();
        assert!(p.sup_distance(&back) < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn transform_roundtrip(values in proptest::collection::vec(-1.0f64..1.0, 16 * 9)) {
            let g = grid(16, 9, 2);
            let f = ScalarField::from_values(g, values).unwrap();
            let back = f.to_modal().to_physical();
            let scale = f.linf().max(1e-30);
            prop_assert!(back.sub(&f).linf() <= 1e-12 * scale);
        }

        #[test]
        fn integral_of_ddx1_vanishes(values in proptest::collection::vec(-1.0f64..1.0, 16 * 9)) {
            let g = grid(16, 9, 2);
            let f = ScalarField::from_values(g, values).unwrap();
            prop_assert!(f.ddx1().integrate().abs() <= 1e-10);
        }

        #[test]
        fn sobolev_norms_are_monotone(values in proptest::collection::vec(-1.0f64..1.0, 16 * 9)) {
            let g = grid(16, 9, 2);
            let f = ScalarField::from_values(g, values).unwrap();
            let norms = f.sobolev_norms_upto(4).unwrap();
            for k in 1..norms.len() {
                prop_assert!(norms[k] >= norms[k - 1] - 1e-12);
            }
        }
    }
}
