//! Time integration of the competitive system.
//!
//! Each step applies θ-implicit diffusion (one tridiagonal solve per
//! component) followed by the semi-implicit absorption update
//!
//! ```text
//! u ← u½ / (1 + dt · v½^p / max(u½, ε_floor))
//! v ← v½ / (1 + dt · u½^q / max(v½, ε_floor))
//! ```
//!
//! which keeps both components nonnegative without a Newton iteration and
//! keeps an identically zero component at zero. Step sizes are chosen by
//! step doubling: a full step is compared against two half steps and the
//! half-step result is kept.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::closed_forms::PowerPair;
use crate::discretization::{laplacian_apply, BoundaryCondition, Field, Grid, Tridiagonal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub pair: PowerPair,
    pub bc: BoundaryCondition,
    pub t_start: f64,
    pub t_end: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    /// Upper bound on accepted steps; infinite by default.
    pub dt_max: f64,
    /// Local error target of the step-doubling controller, relative to
    /// `1 + sup|w|` of each component.
    pub tol_step: f64,
    /// Implicitness of the diffusion: 1 is backward Euler, 0.5 Crank–Nicolson.
    pub theta_scheme: f64,
    pub eps_floor: f64,
}

impl SolverConfig {
    pub fn new(pair: PowerPair, bc: BoundaryCondition, t_start: f64, t_end: f64) -> Self {
        SolverConfig {
            pair,
            bc,
            t_start,
            t_end,
            dt_init: 1e-4,
            dt_min: 1e-14,
            dt_max: f64::INFINITY,
            tol_step: 1e-4,
            theta_scheme: 1.0,
            eps_floor: 1e-300,
        }
    }

    pub fn with_dt_init(mut self, dt: f64) -> Self {
        self.dt_init = dt;
        self
    }

    pub fn with_dt_min(mut self, dt: f64) -> Self {
        self.dt_min = dt;
        self
    }

    pub fn with_dt_max(mut self, dt: f64) -> Self {
        self.dt_max = dt;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_step = tol;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta_scheme = theta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(self.t_start >= 0.0 && self.t_start.is_finite()) {
            return Err(Error::invalid(format!("t_start must be >= 0, got {}", self.t_start)));
        }
        if !(self.t_end > self.t_start && self.t_end.is_finite()) {
            return Err(Error::invalid(format!(
                "t_end ({}) must exceed t_start ({})",
                self.t_end, self.t_start
            )));
        }
        if !positive(self.dt_init) || !positive(self.dt_min) || self.dt_min > self.dt_init {
            return Err(Error::invalid(format!(
                "need 0 < dt_min <= dt_init, got dt_min = {}, dt_init = {}",
                self.dt_min, self.dt_init
            )));
        }
        if !(self.dt_max >= self.dt_min) {
            return Err(Error::invalid(format!("dt_max ({}) is below dt_min", self.dt_max)));
        }
        if !positive(self.tol_step) {
            return Err(Error::invalid(format!("tol_step must be positive, got {}", self.tol_step)));
        }
        if !(0.5..=1.0).contains(&self.theta_scheme) {
            return Err(Error::invalid(format!(
                "theta_scheme must lie in [0.5, 1], got {}",
                self.theta_scheme
            )));
        }
        if !positive(self.eps_floor) {
            return Err(Error::invalid("eps_floor must be a positive number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub v: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time reached by the accepted step.
    pub t: f64,
    pub dt: f64,
    /// Rejections before acceptance.
    pub retries: u32,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Arc<Grid>,
    bc: BoundaryCondition,
    snapshots: Vec<State>,
    steps: Vec<StepRecord>,
}

impl Trajectory {
    /// Assembles a trajectory from externally produced snapshots, e.g. samples of
    /// a closed-form solution. Snapshot times must increase strictly.
    pub fn from_snapshots(grid: Arc<Grid>, bc: BoundaryCondition, snapshots: Vec<State>) -> Result<Self> {
        for s in &snapshots {
            s.u.check_same_grid(&Field::zeros(grid.clone()))?;
            s.v.check_same_grid(&s.u)?;
        }
        if snapshots.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid("snapshot times must increase strictly"));
        }
        Ok(Trajectory {
            grid,
            bc,
            snapshots,
            steps: Vec::new(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn snapshots(&self) -> &[State] {
        &self.snapshots
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &State {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    /// Same trajectory with both components multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Trajectory {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| State {
                t: s.t,
                u: s.u.map(|x| factor * x),
                v: s.v.map(|x| factor * x),
            })
            .collect();
        Trajectory {
            grid: self.grid.clone(),
            bc: self.bc,
            snapshots,
            steps: self.steps.clone(),
        }
    }

    /// Rows `t,node_coordinate,u,v`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "node_coordinate", "u", "v"])?;
        for s in &self.snapshots {
            for ((x, u), v) in self.grid.coords().iter().zip(s.u.values()).zip(s.v.values()) {
                wtr.write_record([s.t.to_string(), x.to_string(), u.to_string(), v.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Rows `t,dt,retries`.
    pub fn write_steps_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "dt", "retries"])?;
        for s in &self.steps {
            wtr.write_record([s.t.to_string(), s.dt.to_string(), s.retries.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Absorption {
    System { p: f64, q: f64 },
    Scalar { big_q: f64 },
    None,
}

impl Absorption {
    fn components(self) -> usize {
        match self {
            Absorption::System { .. } => 2,
            _ => 1,
        }
    }
}

struct Stepper {
    lap: Tridiagonal,
    bc: BoundaryCondition,
    theta: f64,
    eps_floor: f64,
    model: Absorption,
    boundary: Vec<usize>,
}

impl Stepper {
    fn new(grid: &Grid, config: &SolverConfig, model: Absorption) -> Self {
        Stepper {
            lap: grid.laplacian_matrix(config.bc),
            bc: config.bc,
            theta: config.theta_scheme,
            eps_floor: config.eps_floor,
            model,
            boundary: grid.boundary_nodes(),
        }
    }

    fn diffuse(&self, w: &[f64], dt: f64) -> Result<Vec<f64>> {
        let mut rhs = w.to_vec();
        if self.theta < 1.0 {
            let lw = self.lap.apply(w);
            let scale = (1.0 - self.theta) * dt;
            for (r, l) in rhs.iter_mut().zip(lw) {
                *r += scale * l;
            }
        }
        if self.bc == BoundaryCondition::DirichletZero {
            for &i in &self.boundary {
                rhs[i] = 0.0;
            }
        }
        self.lap.shifted_identity(-self.theta * dt).solve(&rhs)
    }

    fn step(&self, comps: &[Vec<f64>], t: f64, dt: f64) -> Result<Vec<Vec<f64>>> {
        let half = comps
            .iter()
            .map(|c| self.diffuse(c, dt))
            .collect::<Result<Vec<_>>>()?;
        if half.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        let eps = self.eps_floor;
        let absorb = |w: f64, sink: f64| w / (1.0 + dt * sink / w.max(eps));
        let out: Vec<Vec<f64>> = match self.model {
            Absorption::System { p, q } => {
                let (uh, vh) = (&half[0], &half[1]);
                let u = uh.iter().zip(vh).map(|(&u, &v)| absorb(u, pos(v).powf(p))).collect();
                let v = vh.iter().zip(uh).map(|(&v, &u)| absorb(v, pos(u).powf(q))).collect();
                vec![u, v]
            }
            Absorption::Scalar { big_q } => {
                vec![half[0].iter().map(|&w| absorb(w, pos(w).powf(big_q))).collect()]
            }
            Absorption::None => half,
        };
        if out.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        Ok(out
            .into_iter()
            .map(|c| c.into_iter().map(|x| x.max(0.0)).collect())
            .collect())
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// One IMEX step of the system from `state` with step `dt`.
pub fn step_imex(state: &State, dt: f64, config: &SolverConfig) -> Result<State> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    state.u.check_same_grid(&state.v)?;
    let grid = state.u.grid().clone();
    let model = Absorption::System {
        p: config.pair.p(),
        q: config.pair.q(),
    };
    let stepper = Stepper::new(&grid, config, model);
    let comps = vec![state.u.values().to_vec(), state.v.values().to_vec()];
    let mut out = stepper.step(&comps, state.t, dt)?.into_iter();
    Ok(State {
        t: state.t + dt,
        u: Field::new(grid.clone(), out.next().unwrap())?,
        v: Field::new(grid, out.next().unwrap())?,
    })
}

fn check_ic(ic: &Field, name: &str) -> Result<()> {
    if !ic.is_finite() {
        return Err(Error::invalid(format!("{name} has non-finite values")));
    }
    if ic.min() < 0.0 {
        return Err(Error::invalid(format!("{name} must be nonnegative")));
    }
    Ok(())
}

fn check_output_times(config: &SolverConfig, output_times: &[f64]) -> Result<()> {
    if output_times.is_empty() {
        return Err(Error::invalid("at least one output time is required"));
    }
    if output_times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("output times must increase strictly"));
    }
    let (first, last) = (output_times[0], output_times[output_times.len() - 1]);
    if !(first > config.t_start && last <= config.t_end) {
        return Err(Error::invalid(format!(
            "output times must lie in ({}, {}]",
            config.t_start, config.t_end
        )));
    }
    Ok(())
}

fn error_norm(coarse: &[Vec<f64>], fine: &[Vec<f64>], tol: f64) -> f64 {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| {
            let scale = tol * (1.0 + f.iter().fold(0.0, |m: f64, x| m.max(x.abs())));
            c.iter().zip(f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
        })
        .fold(0.0, f64::max)
}

fn integrate(
    grid: &Arc<Grid>,
    ics: Vec<Vec<f64>>,
    model: Absorption,
    config: &SolverConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    check_output_times(config, output_times)?;
    debug_assert_eq!(ics.len(), model.components());
    let stepper = Stepper::new(grid, config, model);

    let mut t = config.t_start;
    let mut comps = ics;
    let mut dt = config.dt_init.min(config.dt_max);
    let mut snapshots = Vec::with_capacity(output_times.len());
    let mut steps = Vec::new();

    for &target in output_times {
        while t < target {
            let remaining = target - t;
            let mut h = dt;
            let mut clipped = false;
            if h >= remaining {
                h = remaining;
                clipped = true;
            }
            let mut retries = 0u32;
            loop {
                let full = stepper.step(&comps, t, h)?;
                let mid = stepper.step(&comps, t, 0.5 * h)?;
                let fine = stepper.step(&mid, t + 0.5 * h, 0.5 * h)?;
                let err = error_norm(&full, &fine, config.tol_step);
                if err <= 1.0 {
                    comps = fine;
                    t = if clipped { target } else { t + h };
                    steps.push(StepRecord { t, dt: h, retries });
                    let factor = if err == 0.0 {
                        2.0
                    } else {
                        (0.9 / err.sqrt()).clamp(0.2, 2.0)
                    };
                    if !(clipped && factor >= 1.0) {
                        dt = h * factor;
                    }
                    dt = dt.clamp(config.dt_min, config.dt_max);
                    break;
                }
                retries += 1;
                h *= 0.5;
                clipped = false;
                if h < config.dt_min {
                    return Err(Error::StepUnderflow {
                        t,
                        dt_min: config.dt_min,
                    });
                }
                dt = h;
            }
        }
        snapshots.push(comps.clone());
    }

    let snapshots = output_times
        .iter()
        .zip(snapshots)
        .map(|(&t, comps)| {
            let mut it = comps.into_iter();
            let u = Field::new(grid.clone(), it.next().unwrap())?;
            let v = match it.next() {
                Some(v) => Field::new(grid.clone(), v)?,
                None => u.clone(),
            };
            Ok(State { t, u, v })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Trajectory {
        grid: grid.clone(),
        bc: config.bc,
        snapshots,
        steps,
    })
}

/// Adaptive integration of the system from `(ic_u, ic_v)` at `config.t_start`,
/// with one snapshot per output time.
pub fn solve(ic_u: &Field, ic_v: &Field, config: &SolverConfig, output_times: &[f64]) -> Result<Trajectory> {
    ic_u.check_same_grid(ic_v)?;
    check_ic(ic_u, "ic_u")?;
    check_ic(ic_v, "ic_v")?;
    let model = Absorption::System {
        p: config.pair.p(),
        q: config.pair.q(),
    };
    integrate(
        ic_u.grid(),
        vec![ic_u.values().to_vec(), ic_v.values().to_vec()],
        model,
        config,
        output_times,
    )
}

/// Pure heat equation. Snapshots carry the same field in `u` and `v`.
pub fn heat_solve(ic: &Field, config: &SolverConfig, output_times: &[f64]) -> Result<Trajectory> {
    check_ic(ic, "ic")?;
    integrate(ic.grid(), vec![ic.values().to_vec()], Absorption::None, config, output_times)
}

/// Scalar equation `U_t - ΔU + U^Q = 0`. Snapshots carry `U` in both `u` and `v`.
pub fn scalar_solve(ic: &Field, big_q: f64, config: &SolverConfig, output_times: &[f64]) -> Result<Trajectory> {
    if !(big_q > 0.0 && big_q.is_finite()) {
        return Err(Error::invalid(format!("Q must be positive, got {big_q}")));
    }
    check_ic(ic, "ic")?;
    integrate(
        ic.grid(),
        vec![ic.values().to_vec()],
        Absorption::Scalar { big_q },
        config,
        output_times,
    )
}

/// Discrete residuals of a candidate solution against the discrete operator:
/// `r_u = (u(t+δ) - u(t-δ))/(2δ) - Δ_h u(t) + v(t)^p` and symmetrically for `v`.
pub fn residual_of(
    u: &dyn Fn(f64) -> Field,
    v: &dyn Fn(f64) -> Field,
    pair: &PowerPair,
    bc: BoundaryCondition,
    t: f64,
    dt_probe: f64,
) -> Result<(Field, Field)> {
    if !(dt_probe > 0.0) {
        return Err(Error::invalid("dt_probe must be positive"));
    }
    let (u0, v0) = (u(t), v(t));
    let (u_plus, u_minus) = (u(t + dt_probe), u(t - dt_probe));
    let (v_plus, v_minus) = (v(t + dt_probe), v(t - dt_probe));
    let inv = 1.0 / (2.0 * dt_probe);
    let lu = laplacian_apply(&u0, bc);
    let lv = laplacian_apply(&v0, bc);

    let ru = u_plus
        .zip_with(&u_minus, |a, b| (a - b) * inv)?
        .zip_with(&lu, |d, l| d - l)?
        .zip_with(&v0, |r, w| r + w.powf(pair.p()))?;
    let rv = v_plus
        .zip_with(&v_minus, |a, b| (a - b) * inv)?
        .zip_with(&lv, |d, l| d - l)?
        .zip_with(&u0, |r, w| r + w.powf(pair.q()))?;
    Ok((ru, rv))
}
