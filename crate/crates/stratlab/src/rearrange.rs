//! Vertical decreasing rearrangement, super-level-set measures, the
//! level-set decomposition of a near-stratified field, and the quadratic
//! energy-gap diagnostics built on them.
//!
//! Measures are normalized by the horizontal period, so a super-level set
//! occupying the whole channel has measure 1 and the rearrangement of a
//! stratified decreasing profile is the profile itself.

use crate::error::Result;
use crate::grid::{compensated_sum, Grid, Profile, ScalarField};

/// Normalized measure of `{f > s}`: cell counting along x2 with linear
/// sub-cell correction, averaged over columns. Nonincreasing in `s`.
pub fn superlevel_measure(f: &ScalarField, s: f64) -> f64 {
    let grid = f.grid();
    let (n1, n2) = (grid.n1(), grid.n2());
    let dx2 = grid.dx2();
    let cols: Vec<f64> = (0..n1)
        .map(|i| {
            let col = &f.values()[i * n2..(i + 1) * n2];
            let mut len = 0.0;
            for j in 0..n2 - 1 {
                let (a, b) = (col[j], col[j + 1]);
                len += dx2
                    * if a > s && b > s {
                        1.0
                    } else if a <= s && b <= s {
                        0.0
                    } else if a > s {
                        (a - s) / (a - b)
                    } else {
                        (b - s) / (b - a)
                    };
            }
            len
        })
        .collect();
    compensated_sum(cols.iter().copied()) / n1 as f64
}

/// Is the field stratified (columns identical) and nonincreasing in x2?
fn stratified_nonincreasing(f: &ScalarField) -> bool {
    let grid = f.grid();
    let (n1, n2) = (grid.n1(), grid.n2());
    let first = &f.values()[..n2];
    for i in 1..n1 {
        if f.values()[i * n2..(i + 1) * n2] != *first {
            return false;
        }
    }
    first.windows(2).all(|w| w[1] <= w[0])
}

/// Vertical decreasing rearrangement: the stratified nonincreasing profile
/// equimeasurable with `f`, realized as the generalized inverse of the
/// super-level-set measure sampled on 2*n2 thresholds. A stratified
/// nonincreasing input is its own rearrangement and is returned as-is, which
/// makes the construction idempotent bit-for-bit.
pub fn vertical_rearrangement(f: &ScalarField) -> Profile {
    let grid = f.grid();
    let n2 = grid.n2();
    if stratified_nonincreasing(f) {
        return Profile::from_values(grid, f.values()[..n2].to_vec())
            .expect("column of a finite field");
    }

    let lo = f.values().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-300 {
        return Profile::from_values(grid, vec![lo; n2]).expect("constant profile");
    }

    let ns = 2 * n2;
    let s_at = |q: usize| lo + (hi - lo) * q as f64 / (ns - 1) as f64;
    let mu: Vec<f64> = (0..ns).map(|q| superlevel_measure(f, s_at(q))).collect();

    let mut values = Vec::with_capacity(n2);
    for j in 0..n2 {
        let x = grid.x2(j);
        let v = if mu[0] <= x {
            lo
        } else {
            // first q with mu[q] <= x; mu is nonincreasing and mu[ns-1] = 0
            let qhi = mu.partition_point(|&m| m > x).min(ns - 1);
            let (m0, m1) = (mu[qhi - 1], mu[qhi]);
            let t = if m0 - m1 > 0.0 { (m0 - x) / (m0 - m1) } else { 1.0 };
            s_at(qhi - 1) + t * (hi - lo) / (ns - 1) as f64
        };
        values.push(v.clamp(lo, hi));
    }
    for j in 1..n2 {
        if values[j] > values[j - 1] {
            values[j] = values[j - 1];
        }
    }
    Profile::from_values(grid, values).expect("rearranged profile is finite")
}

/// Potential energy with height weight: integral of f(x) * x2.
pub fn potential_energy(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let (n1, n2) = (grid.n1(), grid.n2());
    let dx2 = grid.dx2();
    let cols: Vec<f64> = (0..n1)
        .map(|i| {
            let col = &f.values()[i * n2..(i + 1) * n2];
            compensated_sum((0..n2).map(|j| {
                let w = if j == 0 || j == n2 - 1 { 0.5 * dx2 } else { dx2 };
                w * grid.x2(j) * col[j]
            }))
        })
        .collect();
    crate::grid::pairwise_sum(&cols) * grid.dx1()
}

/// Level-set decomposition of a strictly monotone field: for each sampled
/// level s, the height phi(x1, s) splits into its horizontal mean phi1(s)
/// and the zero-mean deviation h(x1, s).
#[derive(Debug, Clone)]
pub struct LevelDecomposition {
    /// Sampled levels, midpoint-inset over the field's value range.
    pub s_grid: Vec<f64>,
    /// Mean level height per s.
    pub phi1: Vec<f64>,
    /// Deviation h(x1_i, s_q) stored as h[q * n1 + i]; zero x1-mean per row.
    pub h: Vec<f64>,
    /// False when some column is not strictly decreasing in x2.
    pub valid: bool,
    /// Offending column when `valid` is false.
    pub bad_column: Option<usize>,
    grid: Grid,
}

impl LevelDecomposition {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Half the quadrature of h^2 over (period) x (value range); the s_grid
    /// is midpoint-inset so this is a midpoint rule in s.
    pub fn half_h_squared(&self) -> f64 {
        let n1 = self.grid.n1();
        let ns = self.s_grid.len();
        if ns < 2 {
            return 0.0;
        }
        let ds = (self.s_grid[1] - self.s_grid[0]).abs();
        let dx1 = self.grid.dx1();
        let rows: Vec<f64> = (0..ns)
            .map(|q| compensated_sum(self.h[q * n1..(q + 1) * n1].iter().map(|v| v * v)))
            .collect();
        0.5 * compensated_sum(rows.into_iter()) * ds * dx1
    }

    /// Max over (x1, s) of |f(x1, phi1(s) + h(x1, s)) - s| with linear
    /// interpolation of f along the column.
    pub fn reconstruction_residual(&self, f: &ScalarField) -> f64 {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let mut worst = 0.0f64;
        for (q, &s) in self.s_grid.iter().enumerate() {
            for i in 0..n1 {
                let y = (self.phi1[q] + self.h[q * n1 + i]).clamp(0.0, 1.0);
                let pos = y * (n2 - 1) as f64;
                let j = (pos.floor() as usize).min(n2 - 2);
                let t = pos - j as f64;
                let v = f.get(i, j) * (1.0 - t) + f.get(i, j + 1) * t;
                worst = worst.max((v - s).abs());
            }
        }
        worst
    }
}

/// Build the level-set decomposition of `f` against the stratified background
/// `rho_s`. Requires every column strictly decreasing in x2; otherwise the
/// result carries `valid = false` and the offending column index.
pub fn decompose_levels(f: &ScalarField, rho_s: &Profile) -> Result<LevelDecomposition> {
    let grid = f.grid();
    grid.same(&rho_s.grid())?;
    let (n1, n2) = (grid.n1(), grid.n2());

    for i in 0..n1 {
        let col = &f.values()[i * n2..(i + 1) * n2];
        if !col.windows(2).all(|w| w[1] < w[0]) {
            return Ok(LevelDecomposition {
                s_grid: Vec::new(),
                phi1: Vec::new(),
                h: Vec::new(),
                valid: false,
                bad_column: Some(i),
                grid,
            });
        }
    }

    let lo = f.values().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ns = 2 * n2;
    let ds = (hi - lo) / ns as f64;
    let s_grid: Vec<f64> = (0..ns).map(|q| lo + (q as f64 + 0.5) * ds).collect();

    let mut phi1 = Vec::with_capacity(ns);
    let mut h = vec![0.0; ns * n1];
    let mut heights = vec![0.0; n1];
    for (q, &s) in s_grid.iter().enumerate() {
        for (i, height) in heights.iter_mut().enumerate() {
            let col = &f.values()[i * n2..(i + 1) * n2];
            *height = column_root(col, grid.dx2(), s);
        }
        let mean = compensated_sum(heights.iter().copied()) / n1 as f64;
        phi1.push(mean);
        for i in 0..n1 {
            h[q * n1 + i] = heights[i] - mean;
        }
    }

    Ok(LevelDecomposition { s_grid, phi1, h, valid: true, bad_column: None, grid })
}

/// Height where a strictly decreasing column crosses level `s`, by binary
/// search over samples and linear interpolation within the cell.
fn column_root(col: &[f64], dx2: f64, s: f64) -> f64 {
    let n2 = col.len();
    if s >= col[0] {
        return 0.0;
    }
    if s <= col[n2 - 1] {
        return (n2 - 1) as f64 * dx2;
    }
    // col is strictly decreasing: find j with col[j] >= s > col[j+1].
    let mut lo = 0usize;
    let mut hi = n2 - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if col[mid] >= s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (col[lo] - s) / (col[lo] - col[hi]);
    (lo as f64 + t) * dx2
}

/// Quadratic energy-gap diagnostics relating a field to its rearrangement.
#[derive(Debug, Clone, Copy)]
pub struct EnergyGap {
    /// E_P(f) - E_P(f*), with f* lifted to a stratified field.
    pub gap: f64,
    /// Squared L2 distance between f and the lifted f*.
    pub dist2: f64,
    /// gap / dist2; zero when dist2 is below tolerance.
    pub ratio: f64,
}

pub fn energy_gap(f: &ScalarField) -> EnergyGap {
    let fstar = vertical_rearrangement(f).lift();
    let gap = potential_energy(f) - potential_energy(&fstar);
    let diff = f.sub(&fstar);
    let dist2 = diff.inner(&diff);
    let ratio = if dist2 < 1e-14 { 0.0 } else { gap / dist2 };
    EnergyGap { gap, dist2, ratio }
}

/// ||d(f)/dx1||_L2 / ||f - f*||_L2; infinity when the denominator is below
/// 1e-14.
pub fn check_gradient_bound(f: &ScalarField) -> f64 {
    let fstar = vertical_rearrangement(f).lift();
    let diff = f.sub(&fstar);
    let denom = diff.inner(&diff).max(0.0).sqrt();
    if denom < 1e-14 {
        return f64::INFINITY;
    }
    let d1 = f.ddx1();
    d1.inner(&d1).max(0.0).sqrt() / denom
}
