//! Time evolution of the density perturbation theta under the model
//! velocity: classical RK4 with the stream function re-solved at every
//! stage, advective products formed in physical space with optional 2/3
//! dealiasing, and wall rows of theta re-pinned each stage.

use std::sync::Arc;

use once_cell::sync::OnceCell;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{Grid, Profile, ScalarField};
use crate::rearrange::vertical_rearrangement;
use crate::solvers::{shared_solver, Model, StreamSolution, StreamSolver};

/// One component of a multi-mode perturbation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CascadeMode {
    pub kx: usize,
    /// vertical wavenumber of the sin(m pi x2) factor
    pub m: usize,
    pub amp: f64,
    pub phase: f64,
}

/// Initial perturbation shapes. The squared-sine envelope vanishes at the
/// walls together with its first vertical derivative; the plain vertical
/// modes vanish at the walls only.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcShape {
    Zero,
    /// epsilon * sin(kx * x1) * sin^2(pi * x2)
    Sine { kx: usize },
    /// epsilon * sin(kx * x1) * sin(m * pi * x2) * sin(pi * x2)
    Mode { kx: usize, m: usize },
    /// Normalized superposition of vertical-mode components; the amplitude
    /// scale is chosen so the sup norm equals epsilon.
    Cascade { modes: Vec<CascadeMode> },
}

impl IcShape {
    pub fn build(&self, grid: Grid, epsilon: f64) -> ScalarField {
        use std::f64::consts::PI;
        match self {
            IcShape::Zero => ScalarField::zeros(grid),
            IcShape::Sine { kx } => ScalarField::from_fn(grid, |x1, x2| {
                epsilon * (*kx as f64 * x1).sin() * (PI * x2).sin().powi(2)
            }),
            IcShape::Mode { kx, m } => ScalarField::from_fn(grid, |x1, x2| {
                epsilon
                    * (*kx as f64 * x1).sin()
                    * (*m as f64 * PI * x2).sin()
                    * (PI * x2).sin()
            }),
            IcShape::Cascade { modes } => {
                let raw = ScalarField::from_fn(grid, |x1, x2| {
                    modes
                        .iter()
                        .map(|c| {
                            c.amp
                                * (c.kx as f64 * x1 + c.phase).sin()
                                * (c.m as f64 * PI * x2).sin()
                                * (PI * x2).sin()
                        })
                        .sum()
                });
                let sup = raw.linf();
                let mut out = raw;
                if sup > 0.0 {
                    out.scale(epsilon / sup);
                }
                out
            }
        }
    }
}

/// Stratified background profile.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoSpec {
    /// 1 - x2
    Linear,
    /// Polynomial in x2, coefficients in ascending order.
    Poly(Vec<f64>),
}

impl RhoSpec {
    pub fn eval(&self, x2: f64) -> f64 {
        match self {
            RhoSpec::Linear => 1.0 - x2,
            RhoSpec::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x2 + ck),
        }
    }

    pub fn eval_derivative(&self, x2: f64) -> f64 {
        match self {
            RhoSpec::Linear => -1.0,
            RhoSpec::Poly(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (p, &ck)| acc * x2 + p as f64 * ck),
        }
    }

    /// gamma = inf over the channel of -d(rho_s)/dx2, sampled densely plus
    /// the endpoints (exact for profiles up to quadratic).
    pub fn gamma(&self) -> f64 {
        let samples = 4096;
        (0..=samples)
            .map(|i| -self.eval_derivative(i as f64 / samples as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Everything needed to launch a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub model: Model,
    pub n1: usize,
    pub n2: usize,
    pub fd_order: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub ic_shape: IcShape,
    pub ic_epsilon: f64,
    pub rho_s: RhoSpec,
    pub dealias: bool,
    pub max_linf: f64,
    pub nan_abort: bool,
    /// Sobolev index k for the ansatz-norm column.
    pub sobolev_k: usize,
    /// Permit non-linear backgrounds for the porous-media model.
    pub experimental_general_rhos: bool,
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n1, self.n2, self.fd_order)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl = {} must be in (0, 1]", self.cfl)));
        }
        if self.t_end <= 0.0 {
            return Err(Error::Config("t_end must be positive".into()));
        }
        if self.sample_dt <= 0.0 || self.sample_dt > self.t_end {
            return Err(Error::Config("sample_dt must be in (0, t_end]".into()));
        }
        if self.ic_epsilon < 0.0 {
            return Err(Error::Config("ic_epsilon must be nonnegative".into()));
        }
        if self.sobolev_k > 4 {
            return Err(Error::Config("sobolev_k must be <= 4".into()));
        }
        if self.rho_s.gamma() <= 0.0 {
            return Err(Error::Config(format!(
                "rho_s must be strictly decreasing: gamma = {}",
                self.rho_s.gamma()
            )));
        }
        if self.model == Model::Ipm
            && self.rho_s != RhoSpec::Linear
            && !self.experimental_general_rhos
        {
            return Err(Error::Config(
                "general rho_s for the ipm model requires experimental_general_rhos = true".into(),
            ));
        }
        Ok(())
    }
}

/// Simulation state: the perturbation, its cached stream solution, the
/// frozen rearrangement target, and the background data.
pub struct SimState {
    pub model: Model,
    pub t: f64,
    pub theta: ScalarField,
    pub step_count: u64,
    rho_s: Profile,
    drho_s: Profile,
    gamma: f64,
    rho0_star: Profile,
    stream: StreamSolution,
    /// -d(rho_s)/dx2 lifted; the source term is this times u2.
    source_profile: ScalarField,
    solver: Arc<StreamSolver>,
    dealias: bool,
    sobolev_k: usize,
    nan_abort: bool,
    last_bc_drift: f64,
    /// Tendency for the current (theta, stream) pair; records and the next
    /// step's first stage share it.
    cached_rhs: OnceCell<ScalarField>,
}

impl SimState {
    pub fn from_config(config: &RunConfig) -> Result<SimState> {
        config.validate()?;
        let grid = config.grid()?;
        let mut theta = config.ic_shape.build(grid, config.ic_epsilon);
        let wall = theta.boundary_linf();
        if wall > 1e-12 * (1.0 + theta.linf()) {
            return Err(Error::Config(format!(
                "initial theta must vanish on the walls (|theta| = {wall} there)"
            )));
        }
        theta.pin_boundary_rows(0.0);

        let rho_s = Profile::from_fn(grid, |x2| config.rho_s.eval(x2));
        let drho_s = Profile::from_fn(grid, |x2| config.rho_s.eval_derivative(x2));
        let gamma = config.rho_s.gamma();
        let mut rho0 = rho_s.lift();
        rho0.axpy(1.0, &theta);
        let rho0_star = vertical_rearrangement(&rho0);
        let source_profile =
            ScalarField::from_fn(grid, |_, x2| -config.rho_s.eval_derivative(x2));
        let solver = shared_solver(grid, config.model)?;
        let stream = solver.solve(&theta)?;
        Ok(SimState {
            model: config.model,
            t: 0.0,
            theta,
            step_count: 0,
            rho_s,
            drho_s,
            gamma,
            rho0_star,
            stream,
            source_profile,
            solver,
            dealias: config.dealias,
            sobolev_k: config.sobolev_k,
            nan_abort: config.nan_abort,
            last_bc_drift: 0.0,
            cached_rhs: OnceCell::new(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.theta.grid()
    }

    pub fn rho_s(&self) -> &Profile {
        &self.rho_s
    }

    pub fn drho_s(&self) -> &Profile {
        &self.drho_s
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho0_star(&self) -> &Profile {
        &self.rho0_star
    }

    pub fn stream(&self) -> &StreamSolution {
        &self.stream
    }

    pub fn sobolev_k(&self) -> usize {
        self.sobolev_k
    }

    pub fn last_bc_drift(&self) -> f64 {
        self.last_bc_drift
    }

    /// rho = rho_s + theta.
    pub fn density(&self) -> ScalarField {
        let mut rho = self.rho_s.lift();
        rho.axpy(1.0, &self.theta);
        rho
    }

    /// Rearrangement of the current density (fresh, not the frozen target).
    pub fn current_rearrangement(&self) -> Profile {
        vertical_rearrangement(&self.density())
    }

    /// Tendency of theta for the current state:
    /// -(u . grad theta) - d(rho_s)/dx2 * u2, with the velocity and the theta
    /// gradients dealiased before the products when enabled. Stratified
    /// states (k = 0 only) are exact fixed points: their velocity vanishes
    /// identically mode by mode.
    pub fn rhs(&self) -> Result<ScalarField> {
        if let Some(hit) = self.cached_rhs.get() {
            return Ok(hit.clone());
        }
        let rhs = tendency(
            &self.theta,
            &self.stream,
            &self.source_profile,
            self.dealias,
            self.nan_abort,
            self.step_count,
        )?;
        Ok(self.cached_rhs.get_or_init(|| rhs).clone())
    }

    /// CFL-limited step size, capped by `sample_dt`.
    pub fn adaptive_dt(&self, cfl: f64, sample_dt: f64) -> f64 {
        let grid = self.grid();
        let lim1 = grid.dx1() / self.stream.u1.linf().max(1e-300);
        let lim2 = grid.dx2() / self.stream.u2.linf().max(1e-300);
        (cfl * lim1.min(lim2)).min(sample_dt)
    }

    /// One classical RK4 step; the stream cache is refreshed and wall rows of
    /// theta re-pinned (drift before pinning is recorded).
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        let k1 = self.rhs()?;
        let k2 = self.stage_rhs(&k1, 0.5 * dt)?;
        let k3 = self.stage_rhs(&k2, 0.5 * dt)?;
        let k4 = self.stage_rhs(&k3, dt)?;

        let mut update = k1;
        update.axpy(2.0, &k2);
        update.axpy(2.0, &k3);
        update.axpy(1.0, &k4);
        self.theta.axpy(dt / 6.0, &update);

        self.last_bc_drift = self.theta.boundary_linf();
        self.theta.pin_boundary_rows(0.0);
        if self.nan_abort && !self.theta.is_finite() {
            return Err(Error::NonFinite { field: "theta", step: self.step_count });
        }
        self.stream = self.solver.solve(&self.theta)?;
        self.cached_rhs = OnceCell::new();
        self.t += dt;
        self.step_count += 1;
        Ok(())
    }

    fn stage_rhs(&self, slope: &ScalarField, dt: f64) -> Result<ScalarField> {
        let mut th = self.theta.clone();
        th.axpy(dt, slope);
        th.pin_boundary_rows(0.0);
        let stream = self.solver.solve(&th)?;
        tendency(&th, &stream, &self.source_profile, self.dealias, self.nan_abort, self.step_count)
    }
}

fn tendency(
    theta: &ScalarField,
    stream: &StreamSolution,
    source_profile: &ScalarField,
    dealias: bool,
    nan_abort: bool,
    step: u64,
) -> Result<ScalarField> {
    let cut = |f: &ScalarField| {
        if dealias {
            f.to_modal().dealias().to_physical()
        } else {
            f.clone()
        }
    };
    let d1_modal = theta.to_modal().ddx1();
    let d1 = if dealias { d1_modal.dealias().to_physical() } else { d1_modal.to_physical() };
    let d2 = cut(&theta.ddx2());
    let u1 = cut(&stream.u1);
    let u2 = cut(&stream.u2);

    let mut rhs = u1.mul_pointwise(&d1);
    rhs.axpy(1.0, &u2.mul_pointwise(&d2));
    rhs.scale(-1.0);
    rhs.axpy(1.0, &source_profile.mul_pointwise(&u2));

    if nan_abort {
        for (field, f) in [("u1", &u1), ("u2", &u2), ("rhs", &rhs)] {
            if !f.is_finite() {
                return Err(Error::NonFinite {
                    field: match field {
                        "u1" => "u1",
                        "u2" => "u2",
                        _ => "rhs",
                    },
                    step,
                });
            }
        }
    }
    Ok(rhs)
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// ||theta||_inf exceeded the guard; the partial series is kept.
    GuardStop { t: f64, linf: f64 },
    /// A non-finite value appeared; the partial series is kept.
    Aborted { t: f64, message: String },
}

/// Result of a run: one diagnostics record per sample time, the
/// rearrangement-drift series, and the final state.
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub drift: Vec<(f64, f64)>,
    pub status: RunStatus,
    pub final_state: SimState,
}

/// How often (in samples) the rearrangement-drift diagnostic is recomputed.
const DRIFT_EVERY: usize = 100;

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, |_, _| Ok(()))
}

/// Run with a per-sample callback (snapshot writers hook in here).
/// Samples land exactly on t = m * sample_dt; the records are equally spaced.
pub fn run_with(
    config: &RunConfig,
    mut on_sample: impl FnMut(usize, &SimState) -> Result<()>,
) -> Result<RunOutput> {
    let mut state = SimState::from_config(config)?;
    let n_samples = (config.t_end / config.sample_dt).round() as usize;
    let mut records = Vec::with_capacity(n_samples + 1);
    let mut drift = Vec::new();

    records.push(diagnostics::record(&state)?);
    on_sample(0, &state)?;
    drift.push((0.0, state.current_rearrangement().sup_distance(state.rho0_star())));

    for m in 1..=n_samples {
        let t_target = m as f64 * config.sample_dt;
        while state.t < t_target - 1e-12 * config.sample_dt {
            let dt = state.adaptive_dt(config.cfl, config.sample_dt).min(t_target - state.t);
            match state.step(dt) {
                Ok(()) => {}
                Err(Error::NonFinite { field, step }) => {
                    let status = RunStatus::Aborted {
                        t: state.t,
                        message: format!("non-finite `{field}` at step {step}"),
                    };
                    return Ok(RunOutput { records, drift, status, final_state: state });
                }
                Err(e) => return Err(e),
            }
            let linf = state.theta.linf();
            if linf > config.max_linf {
                let status = RunStatus::GuardStop { t: state.t, linf };
                return Ok(RunOutput { records, drift, status, final_state: state });
            }
        }
        state.t = t_target;
        records.push(diagnostics::record(&state)?);
        on_sample(m, &state)?;
        if m % DRIFT_EVERY == 0 || m == n_samples {
            drift.push((
                t_target,
                state.current_rearrangement().sup_distance(state.rho0_star()),
            ));
        }
    }
    Ok(RunOutput { records, drift, status: RunStatus::Completed, final_state: state })
}
