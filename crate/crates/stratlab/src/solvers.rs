//! Stream-function recovery for both models: per horizontal Fourier mode a
//! Helmholtz (porous media) or squared-Helmholtz (Stokes, clamped) two-point
//! boundary value problem, solved through cached banded LU factorizations.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::band::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Grid, ModalField, ScalarField, TWO_PI};
use crate::stencil;

/// Which velocity law closes the transport equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ipm,
    Stokes,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::Ipm => write!(f, "ipm"),
            Model::Stokes => write!(f, "stokes"),
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Model> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ipm" => Ok(Model::Ipm),
            "stokes" => Ok(Model::Stokes),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Stream function and induced velocity for one density snapshot.
#[derive(Debug, Clone)]
pub struct StreamSolution {
    pub psi: ScalarField,
    /// u1 = -d(psi)/dx2
    pub u1: ScalarField,
    /// u2 = d(psi)/dx1
    pub u2: ScalarField,
    pub model: Model,
    /// L2 norm of the per-mode algebraic residual A psi_hat - rhs over the
    /// operator (interior) rows; machine-level for a healthy direct solve.
    pub residual_norm: f64,
}

/// Physical-space verification numbers for a returned solution.
#[derive(Debug, Clone, Copy)]
pub struct VelocityResiduals {
    /// L2 norm of the model PDE residual on interior rows.
    pub pde_residual: f64,
    /// L2 norm of du1/dx1 + du2/dx2 on interior rows.
    pub div_residual: f64,
    /// L2 trace norm of psi on the wall rows.
    pub bc_residual: f64,
}

struct ModeSystem {
    lu: BandLu,
    matrix: BandMatrix,
    /// Row equilibration factors: boundary rows are O(1) while operator rows
    /// are O(dx2^-4); without scaling, the LU backward error (~ eps * |A|)
    /// violates the boundary conditions badly enough to cost an order of
    /// observed convergence.
    row_scale: Vec<f64>,
}

/// Factor-once-per-mode solver for a fixed (grid, model) pair.
pub struct StreamSolver {
    grid: Grid,
    model: Model,
    /// Systems for k = 1 .. n1/2 (exclusive); k = 0 is identically zero and
    /// the Nyquist mode is dropped, matching the spectral derivative.
    systems: Vec<ModeSystem>,
}


impl StreamSolver {
    pub fn new(grid: Grid, model: Model) -> Result<Self> {
        let kmax = grid.n1() / 2;
        let systems = (1..kmax)
            .into_par_iter()
            .map(|k| {
                let raw = match model {
                    Model::Ipm => assemble_ipm(grid, k),
                    Model::Stokes => assemble_stokes(grid, k),
                };
                let (matrix, row_scale) = equilibrate_rows(raw);
                let lu = matrix.clone().factor().map_err(|_| Error::SingularMode { mode: k })?;
                Ok(ModeSystem { lu, matrix, row_scale })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StreamSolver { grid, model, systems })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn model(&self) -> Model {
        self.model
    }

    /// Solve for the stream function of `theta` and assemble the velocity.
    pub fn solve(&self, theta: &ScalarField) -> Result<StreamSolution> {
        self.grid.same(&theta.grid())?;
        let n2 = self.grid.n2();
        let kmax = self.grid.n1() / 2;
        let theta_hat = theta.to_modal();
        let mut psi_hat = ModalField::zeros(self.grid);

        // Disjoint per-mode solves; each writes its own coefficient row.
        let results: Vec<(Vec<Complex64>, f64)> = (1..kmax)
            .into_par_iter()
            .map(|k| self.solve_mode(k, theta_hat.mode(k)))
            .collect();
        let mut residuals = Vec::with_capacity(results.len());
        for (k, (mode, rsq)) in results.into_iter().enumerate() {
            psi_hat.mode_mut(k + 1).copy_from_slice(&mode);
            residuals.push(rsq);
        }

        let psi = psi_hat.to_physical();
        let u1 = {
            let mut d = psi.ddx2();
            d.scale(-1.0);
            d
        };
        let u2 = psi_hat.ddx1().to_physical();
        // Parseval with trapezoid weights: modes k >= 1 carry multiplicity 2.
        let residual_norm = (2.0 * TWO_PI * pairwise_sum(&residuals)).max(0.0).sqrt();
        let _ = n2;
        Ok(StreamSolution { psi, u1, u2, model: self.model, residual_norm })
    }

    fn solve_mode(&self, k: usize, theta_mode: &[Complex64]) -> (Vec<Complex64>, f64) {
        let n2 = self.grid.n2();
        let sys = &self.systems[k - 1];
        let margin = boundary_rows(self.model);
        // rhs: -ik theta_hat for the Poisson form, +ik theta_hat for the
        // biharmonic form, zero on boundary-condition rows.
        let sign = match self.model {
            Model::Ipm => -(k as f64),
            Model::Stokes => k as f64,
        };
        let mut re = vec![0.0; n2];
        let mut im = vec![0.0; n2];
        for j in margin..n2 - margin {
            // (i * sign) * (a + ib) = -sign*b + i*sign*a, times the row scale
            // baked into the equilibrated matrix.
            let s = sys.row_scale[j];
            re[j] = -sign * theta_mode[j].im * s;
            im[j] = sign * theta_mode[j].re * s;
        }
        let (rhs_re, rhs_im) = (re.clone(), im.clone());
        sys.lu.solve_in_place(&mut re);
        sys.lu.solve_in_place(&mut im);
        // One round of iterative refinement; the squared-Helmholtz systems
        // reach condition numbers ~ dx2^-4 and lose digits without it.
        for (x, rhs) in [(&mut re, &rhs_re), (&mut im, &rhs_im)] {
            let ax = sys.matrix.matvec(x);
            let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            sys.lu.solve_in_place(&mut r);
            for (xi, ri) in x.iter_mut().zip(&r) {
                *xi += ri;
            }
        }
        // Dirichlet rows are identities up to pivoting roundoff; set them so
        // psi and u2 vanish on the walls exactly.
        for j in [0, n2 - 1] {
            re[j] = 0.0;
            im[j] = 0.0;
        }

        let dx2 = self.grid.dx2();
        let ax_re = sys.matrix.matvec(&re);
        let ax_im = sys.matrix.matvec(&im);
        let mut rsq = 0.0;
        for j in margin..n2 - margin {
            let dr = ax_re[j] - rhs_re[j];
            let di = ax_im[j] - rhs_im[j];
            rsq += (dr * dr + di * di) * dx2;
        }

        let mode: Vec<Complex64> =
            re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
        (mode, rsq)
    }
}

/// Scale every row to unit max-norm; returns the scaled matrix and the
/// per-row factors (also applied to the right-hand side).
fn equilibrate_rows(mut a: BandMatrix) -> (BandMatrix, Vec<f64>) {
    let n = a.n();
    let (kl, ku) = (a.kl(), a.ku());
    let mut scale = vec![1.0; n];
    for i in 0..n {
        let lo = i.saturating_sub(kl);
        let hi = (i + ku).min(n - 1);
        let mut m = 0.0f64;
        for j in lo..=hi {
            m = m.max(a.get(i, j).abs());
        }
        if m > 0.0 {
            let s = 1.0 / m;
            scale[i] = s;
            for j in lo..=hi {
                let v = a.get(i, j);
                if v != 0.0 {
                    a.set(i, j, v * s);
                }
            }
        }
    }
    (a, scale)
}

/// Identity rows at the top/bottom of each per-mode system.
fn boundary_rows(model: Model) -> usize {
    match model {
        Model::Ipm => 1,
        Model::Stokes => 2,
    }
}

/// (d2/dx2^2 - k^2) with Dirichlet rows; interior rows at order `fd_order`.
fn assemble_ipm(grid: Grid, k: usize) -> BandMatrix {
    let n2 = grid.n2();
    let p = grid.fd_order();
    let table = stencil::vertical_stencils(n2, 2, p, 0);
    let half = if p == 4 { 4 } else { 1 };
    let mut a = BandMatrix::zeros(n2, half, half);
    let ksq = (k * k) as f64;
    for j in 1..n2 - 1 {
        let row = &table.rows[j];
        for (w, &c) in row.weights.iter().enumerate() {
            a.add(j, row.start + w, c);
        }
        a.add(j, j, -ksq);
    }
    a.set(0, 0, 1.0);
    a.set(n2 - 1, n2 - 1, 1.0);
    a
}

/// (d2/dx2^2 - k^2)^2 with clamped rows psi = d(psi)/dx2 = 0 at both walls.
/// The squared operator is discretized directly in expanded form,
/// d4/dx2^4 - 2 k^2 d2/dx2^2 + k^4, so every operator row carries the full
/// truncation order. Squaring the Helmholtz band as a matrix product instead
/// amplifies the stencil-family seam by dx2^-2 and costs about one order of
/// observed convergence near the walls.
fn assemble_stokes(grid: Grid, k: usize) -> BandMatrix {
    let n2 = grid.n2();
    let p = grid.fd_order();
    // Skewed rows next to the walls get two extra orders (grid permitting);
    // their one-sided truncation constants are large enough to dominate the
    // global error otherwise.
    let boost = 2.min(n2.saturating_sub(4 + p));
    let t4 = stencil::vertical_stencils(n2, 4, p, boost);
    let t2 = stencil::vertical_stencils(n2, 2, p, boost);
    let reach = t4
        .rows
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let lo = j - r.start.min(j);
            let hi = (r.start + r.weights.len() - 1).saturating_sub(j);
            lo.max(hi)
        })
        .max()
        .unwrap();
    let mut b = BandMatrix::zeros(n2, reach, reach);
    let ksq = (k * k) as f64;
    for j in 2..n2 - 2 {
        let row4 = &t4.rows[j];
        for (w, &c) in row4.weights.iter().enumerate() {
            b.add(j, row4.start + w, c);
        }
        let row2 = &t2.rows[j];
        for (w, &c) in row2.weights.iter().enumerate() {
            b.add(j, row2.start + w, -2.0 * ksq * c);
        }
        b.add(j, j, ksq * ksq);
    }
    b.set(0, 0, 1.0);
    b.set(n2 - 1, n2 - 1, 1.0);
    // Clamped derivative rows: one-sided d/dx2 at each wall, order fd_order+2;
    // an order fd_order+1 row leaves a signed h^5-class term big enough to
    // distort the observed convergence of the whole solve.
    let width = p + 3;
    let dx2 = grid.dx2();
    let nodes: Vec<f64> = (0..width).map(|j| j as f64 * dx2).collect();
    let w_bottom = stencil::fd_weights(0.0, &nodes, 1);
    for (c, &w) in w_bottom.iter().enumerate() {
        b.set(1, c, w);
    }
    let nodes_top: Vec<f64> = (n2 - width..n2).map(|j| j as f64 * dx2).collect();
    let w_top = stencil::fd_weights(1.0, &nodes_top, 1);
    for (c, &w) in w_top.iter().enumerate() {
        b.set(n2 - 2, n2 - width + c, w);
    }
    b
}

/// Sup-norm errors of the manufactured stream solutions on a sequence of
/// vertical resolutions. The porous-media case uses
/// psi = sin(x1) sin(pi x2); the Stokes case uses the clamped
/// psi = sin(x1) sin^2(pi x2), with theta derived symbolically in both.
pub fn manufactured_errors(model: Model, fd_order: usize, n2s: &[usize]) -> Result<Vec<f64>> {
    use std::f64::consts::PI;
    let mut errors = Vec::with_capacity(n2s.len());
    for &n2 in n2s {
        let grid = Grid::new(16, n2, fd_order)?;
        let (theta, want) = match model {
            Model::Ipm => (
                ScalarField::from_fn(grid, |x1, x2| {
                    -(1.0 + PI * PI) * x1.cos() * (PI * x2).sin()
                }),
                ScalarField::from_fn(grid, |x1, x2| x1.sin() * (PI * x2).sin()),
            ),
            Model::Stokes => {
                // lap^2(sin(x1) sin^2(pi y)) = q(y) sin(x1) with
                // q = 1/2 - (8 pi^4 + 4 pi^2 + 1/2) cos(2 pi y)
                let q = |y: f64| {
                    0.5 - (8.0 * PI.powi(4) + 4.0 * PI.powi(2) + 0.5) * (2.0 * PI * y).cos()
                };
                (
                    ScalarField::from_fn(grid, |x1, x2| -x1.cos() * q(x2)),
                    ScalarField::from_fn(grid, |x1, x2| x1.sin() * (PI * x2).sin().powi(2)),
                )
            }
        };
        let sol = StreamSolver::new(grid, model)?.solve(&theta)?;
        errors.push(sol.psi.sub(&want).linf());
    }
    Ok(errors)
}

/// Cached-solver convenience entry point for the porous-media model.
pub fn solve_ipm_stream(theta: &ScalarField) -> Result<StreamSolution> {
    shared_solver(theta.grid(), Model::Ipm)?.solve(theta)
}

/// Cached-solver convenience entry point for the Stokes model.
pub fn solve_stokes_stream(theta: &ScalarField) -> Result<StreamSolution> {
    shared_solver(theta.grid(), Model::Stokes)?.solve(theta)
}

/// Process-wide solver cache keyed by (grid, model).
pub fn shared_solver(grid: Grid, model: Model) -> Result<Arc<StreamSolver>> {
    static CACHE: Lazy<Mutex<HashMap<(Grid, Model), Arc<StreamSolver>>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    let mut cache = CACHE.lock().unwrap();
    if let Some(hit) = cache.get(&(grid, model)) {
        return Ok(Arc::clone(hit));
    }
    let solver = Arc::new(StreamSolver::new(grid, model)?);
    cache.insert((grid, model), Arc::clone(&solver));
    Ok(solver)
}

/// Vertical derivative evaluated two orders above `fd_order` (grid size
/// permitting), so residuals measure the solve's truncation error instead of
/// reproducing the solve's own discrete operator to machine zero.
fn refined_vertical(f: &ScalarField, m: usize) -> ScalarField {
    let grid = f.grid();
    let n2 = grid.n2();
    let mut order = grid.fd_order() + 2;
    while m + order > n2 && order > grid.fd_order() {
        order -= 2;
    }
    let table = stencil::vertical_stencils(n2, m, order, 0);
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.n1() {
        table.apply_column(&f.values()[i * n2..(i + 1) * n2], &mut out[i * n2..(i + 1) * n2]);
    }
    ScalarField::from_values(grid, out).expect("derivative of finite field")
}

/// Recompute the defining PDE residual, the velocity divergence and the
/// wall trace of a returned solution with the grid's differential operators.
pub fn velocity_residuals(sol: &StreamSolution, theta: &ScalarField) -> Result<VelocityResiduals> {
    sol.psi.grid().same(&theta.grid())?;
    let margin = boundary_rows(sol.model);
    let psi_hat = sol.psi.to_modal();
    let d1_theta = theta.ddx1();

    let pde = match sol.model {
        Model::Ipm => {
            // -(psi_11 + psi_22) - theta_1
            let mut lap = psi_hat.ddx1_pow(2).to_physical();
            lap.axpy(1.0, &refined_vertical(&sol.psi, 2));
            lap.scale(-1.0);
            lap.sub(&d1_theta)
        }
        Model::Stokes => {
            // psi_1111 + 2 psi_1122 + psi_2222 - theta_1
            let mut bih = psi_hat.ddx1_pow(4).to_physical();
            bih.axpy(2.0, &refined_vertical(&psi_hat.ddx1_pow(2).to_physical(), 2));
            bih.axpy(1.0, &refined_vertical(&sol.psi, 4));
            bih.sub(&d1_theta)
        }
    };
    let pde_residual = pde.l2_interior(margin);

    let mut div = sol.u1.ddx1();
    div.axpy(1.0, &sol.u2.ddx2());
    let div_residual = div.l2_interior(margin);

    let grid = sol.psi.grid();
    let n2 = grid.n2();
    let trace: Vec<f64> = (0..grid.n1())
        .map(|i| sol.psi.get(i, 0).powi(2) + sol.psi.get(i, n2 - 1).powi(2))
        .collect();
    let bc_residual = (pairwise_sum(&trace) * grid.dx1()).max(0.0).sqrt();

    Ok(VelocityResiduals { pde_residual, div_residual, bc_residual })
}
