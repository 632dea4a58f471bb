//! L1 adaptive controller: state predictor, projection-based adaptation of
//! (ω̂, θ̂, σ̂), and the filtered control law u(s) = -k D(s)(η̂ - k_g r)
//! with D(s) = 1/s. The feedback gain k is queried from a [`GainSource`]
//! every step, so the constant-gain and fuzzy-scheduled controllers share
//! all code.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::integrate::{rk4_step_scalar, TimeGrid};
use crate::plant::{plant_rk4_packed, PlantScenario, PlantState, ScenarioKind};
use crate::ss::{feedforward_gain, lyapunov_solve, place_poles};
use crate::trajectory::{StepRecord, Trajectory};

/// Compact-set bounds of the projection operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBounds {
    pub omega_l: f64,
    pub omega_u: f64,
    pub theta_b: f64,
    pub delta: f64,
    /// Smooth-projection margin fraction; estimates may overshoot their set
    /// by at most this band.
    pub eps_proj: f64,
}

impl Default for ProjectionBounds {
    fn default() -> Self {
        Self {
            omega_l: 0.0,
            omega_u: 10.0,
            theta_b: 10.0,
            delta: 100.0,
            eps_proj: 0.1,
        }
    }
}

impl ProjectionBounds {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.omega_l < self.omega_u) || self.omega_l < 0.0 {
            return Err(Error::InvalidParameter(
                "omega bounds must satisfy 0 <= omega_l < omega_u".into(),
            ));
        }
        if !(self.theta_b > 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidParameter(
                "theta_b and delta must be positive".into(),
            ));
        }
        if !(self.eps_proj > 0.0 && self.eps_proj <= 0.5) {
            return Err(Error::InvalidParameter(
                "eps_proj must lie in (0, 0.5]".into(),
            ));
        }
        Ok(())
    }

    pub fn omega_center(&self) -> f64 {
        0.5 * (self.omega_l + self.omega_u)
    }

    pub fn omega_halfwidth(&self) -> f64 {
        0.5 * (self.omega_u - self.omega_l)
    }

    /// Half-width of the ε-inflated set: r sqrt(1 + ε).
    pub fn inflated(&self, half_width: f64) -> f64 {
        half_width * (1.0 + self.eps_proj).sqrt()
    }
}

/// The projected parameter estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdaptiveEstimates {
    pub omega_hat: f64,
    pub theta_hat: f64,
    pub sigma_hat: f64,
}

impl AdaptiveEstimates {
    pub fn within(&self, bounds: &ProjectionBounds, tol: f64) -> bool {
        let rw = bounds.inflated(bounds.omega_halfwidth());
        let cw = bounds.omega_center();
        (self.omega_hat - cw).abs() <= rw + tol
            && self.theta_hat.abs() <= bounds.inflated(bounds.theta_b) + tol
            && self.sigma_hat.abs() <= bounds.inflated(bounds.delta) + tol
    }
}

/// Smooth projection of the raw adaptation drive `y` for an estimate `theta`
/// confined to |theta - center| <= half_width (inflated by eps).
///
/// Inside the set, or on the boundary region with the drive pointing inward,
/// the drive passes unmodified; otherwise it is scaled by (1 - f) with the
/// convex boundary function f.
pub fn projection(theta: f64, y: f64, center: f64, half_width: f64, eps: f64) -> f64 {
    let r2 = half_width * half_width;
    let f = ((theta - center) * (theta - center) - r2) / (eps * r2);
    if f <= 0.0 {
        return y;
    }
    // f'(theta) has the sign of (theta - center); inward drives pass.
    if (theta - center) * y <= 0.0 {
        return y;
    }
    y * (1.0 - f).max(0.0)
}

/// Default integration substeps per recording interval. The adaptation gain
/// of 1e6 makes the estimation loop far faster than the 0.01 s recording
/// grid; every continuous block advances at dt / SUBSTEPS while the gain
/// query and the trajectory records stay on the recording grid. Set substeps
/// to 1 for the sampled controller that updates only on the recording grid.
/// Case 3 defaults to a finer grid because its feedforward gain (and hence
/// the control magnitude driving the adaptation loop) is about 16x larger.
pub const SUBSTEPS: usize = 500;

/// Default substeps for case 3's stiffer loop.
pub const SUBSTEPS_FAST: usize = 3000;

/// Substep count of the sampled (recording-grid) controller.
pub const SAMPLED_SUBSTEPS: usize = 1;

/// Derived controller data, fixed over a rollout.
#[derive(Debug, Clone)]
pub struct L1Config {
    pub a_m: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub p: Matrix2<f64>,
    pub k_g: f64,
    pub gamma: f64,
    pub bounds: ProjectionBounds,
    pub substeps: usize,
}

impl L1Config {
    /// Pole placement, Lyapunov solve, and feedforward gain for a scenario.
    pub fn from_scenario(scenario: &PlantScenario) -> Result<Self, Error> {
        scenario.bounds.validate()?;
        let (_, a_m) = place_poles(&scenario.a, &scenario.b, &scenario.poles)?;
        let p = lyapunov_solve(&a_m, &scenario.q)?;
        let k_g = feedforward_gain(&a_m, &scenario.b, &scenario.c)?;
        Ok(Self {
            a_m: Matrix2::from_iterator(a_m.iter().copied()),
            b: Vector2::new(scenario.b[0], scenario.b[1]),
            p: Matrix2::from_iterator(p.iter().copied()),
            k_g,
            gamma: scenario.gamma,
            bounds: scenario.bounds,
            substeps: match scenario.kind {
                ScenarioKind::Case3 => SUBSTEPS_FAST,
                _ => SUBSTEPS,
            },
        })
    }
}

/// Mutable controller state carried across steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1State {
    pub x_hat: Vector2<f64>,
    /// Control-law integrator realizing D(s) = 1/s; u = u_int.
    pub u_int: f64,
    pub est: AdaptiveEstimates,
}

impl L1State {
    pub fn zeroed() -> Self {
        Self {
            x_hat: Vector2::zeros(),
            u_int: 0.0,
            est: AdaptiveEstimates::default(),
        }
    }
}

/// Per-step feedback gain query.
pub trait GainSource: Sync {
    fn gain(&self, e: f64, de: f64) -> f64;
}

/// Fixed feedback gain (the baseline controller).
#[derive(Debug, Clone, Copy)]
pub struct ConstantGain(pub f64);

impl GainSource for ConstantGain {
    fn gain(&self, _e: f64, _de: f64) -> f64 {
        self.0
    }
}

/// η̂ = ω̂ u + θ̂ ||x||_inf + σ̂.
pub fn eta_hat(est: &AdaptiveEstimates, x: &Vector2<f64>, u: f64) -> f64 {
    est.omega_hat * u + est.theta_hat * x.amax() + est.sigma_hat
}

/// RK4 advance of the predictor x̂' = A_m x̂ + b(ω̂u + θ̂||x||_inf + σ̂)
/// with (x, u, est) held over the step.
pub fn predictor_step(
    x_hat: &Vector2<f64>,
    x: &Vector2<f64>,
    u: f64,
    est: &AdaptiveEstimates,
    cfg: &L1Config,
    dt: f64,
) -> Vector2<f64> {
    let drive = cfg.b * (est.omega_hat * u + est.theta_hat * x.amax() + est.sigma_hat);
    let deriv = |xh: &Vector2<f64>| cfg.a_m * xh + drive;
    let k1 = deriv(x_hat);
    let k2 = deriv(&(x_hat + k1 * (dt / 2.0)));
    let k3 = deriv(&(x_hat + k2 * (dt / 2.0)));
    let k4 = deriv(&(x_hat + k3 * dt));
    x_hat + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Integrate the three projected adaptation laws over one step, with the
/// prediction error, input, and state norm frozen. The projection acts
/// inside every RK4 stage; a final clamp keeps the estimates inside the
/// ε-inflated sets regardless of step size.
pub fn adaptation_step(
    est: &AdaptiveEstimates,
    x_tilde: &Vector2<f64>,
    x: &Vector2<f64>,
    u: f64,
    cfg: &L1Config,
    dt: f64,
) -> AdaptiveEstimates {
    let xtpb = (x_tilde.transpose() * cfg.p * cfg.b)[0];
    let b = &cfg.bounds;
    let advance = |value: f64, raw_drive: f64, center: f64, half_width: f64| -> f64 {
        let next = rk4_step_scalar(
            |v, _| cfg.gamma * projection(v, raw_drive, center, half_width, b.eps_proj),
            value,
            0.0,
            dt,
        );
        let r = b.inflated(half_width);
        next.clamp(center - r, center + r)
    };
    AdaptiveEstimates {
        omega_hat: advance(
            est.omega_hat,
            -xtpb * u,
            b.omega_center(),
            b.omega_halfwidth(),
        ),
        theta_hat: advance(est.theta_hat, -xtpb * x.amax(), 0.0, b.theta_b),
        sigma_hat: advance(est.sigma_hat, -xtpb, 0.0, b.delta),
    }
}

/// RK4 advance of the control integrator u̇ = -k (η̂ - k_g r) with the
/// integrand frozen over the step. Returns (new integrator state, u).
pub fn control_step(
    u_int: f64,
    eta: f64,
    r: f64,
    k_g: f64,
    k_active: f64,
    dt: f64,
) -> (f64, f64) {
    let next = rk4_step_scalar(|_, _| -k_active * (eta - k_g * r), u_int, 0.0, dt);
    (next, next)
}

/// Outcome of a closed-loop rollout. A divergence is a reportable result,
/// not a failure: the trajectory holds every sample up to the trip point.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutOutcome {
    pub trajectory: Trajectory,
    /// Time at which the divergence detector tripped, if it did.
    pub diverged: Option<f64>,
}

impl RolloutOutcome {
    pub fn completed(&self) -> bool {
        self.diverged.is_none()
    }
}

/// One synchronized closed-loop step at time `t`.
///
/// The control value u(t) = u_int drives the plant, predictor, and
/// adaptation over [t, t+dt]; the control integrator then advances to
/// produce u(t+dt). Returns the record captured at `t`.
#[allow(clippy::too_many_arguments)]
pub fn l1_closed_loop_step(
    scenario: &PlantScenario,
    cfg: &L1Config,
    plant: &PlantState,
    l1: &L1State,
    gain: &dyn GainSource,
    r_t: f64,
    prev_e: Option<f64>,
    t: f64,
    dt: f64,
) -> Result<(PlantState, L1State, StepRecord), Error> {
    let y = scenario.output(&plant.x);
    let e = r_t - y;
    let de = prev_e.map_or(0.0, |pe| (e - pe) / dt);
    let k_active = gain.gain(e, de);
    let u = l1.u_int;
    let record = StepRecord {
        t,
        r: r_t,
        y,
        u,
        e,
        k_f: k_active,
        omega_hat: l1.est.omega_hat,
        theta_hat: l1.est.theta_hat,
        sigma_hat: l1.est.sigma_hat,
        x1: plant.x[0],
        x2: plant.x[1],
        xhat1: l1.x_hat[0],
        xhat2: l1.x_hat[1],
    };
    // Advance every continuous block on the fine grid; the gain and the
    // reference are held over the recording interval.
    let n = cfg.substeps.max(1);
    let h = dt / n as f64;
    let na = plant.x_act.len();
    let nd = plant.x_dist.as_ref().map_or(0, |v| v.len());
    let mut packed = plant.pack_array();
    let mut l1_cur = *l1;
    for j in 0..n {
        let tj = t + j as f64 * h;
        let u = l1_cur.u_int;
        let x = Vector2::new(packed[0], packed[1]);
        plant_rk4_packed(scenario, &mut packed, na, nd, u, tj, h)?;
        let x_tilde = l1_cur.x_hat - x;
        let x_hat_next = predictor_step(&l1_cur.x_hat, &x, u, &l1_cur.est, cfg, h);
        let est_next = adaptation_step(&l1_cur.est, &x_tilde, &x, u, cfg, h);
        let eta = eta_hat(&l1_cur.est, &x, u);
        let (u_int_next, _) = control_step(l1_cur.u_int, eta, r_t, cfg.k_g, k_active, h);
        l1_cur = L1State {
            x_hat: x_hat_next,
            u_int: u_int_next,
            est: est_next,
        };
    }
    Ok((plant.unpack_array(&packed), l1_cur, record))
}

/// Closed loop with the adaptation replaced by exact matched-input knowledge
/// (η = actuator output) and f = 0: the linear loop whose filter design
/// fixes the r-to-y DC gain at 1.
pub fn simulate_linearized<R>(
    scenario: &PlantScenario,
    k: f64,
    grid: &TimeGrid,
    reference: R,
) -> Result<Trajectory, Error>
where
    R: Fn(f64) -> f64,
{
    let mut scenario = scenario.clone();
    scenario.linear = true;
    let cfg = L1Config::from_scenario(&scenario)?;
    let plant = PlantState::initial(&scenario);
    let na = plant.x_act.len();
    let nd = plant.x_dist.as_ref().map_or(0, |v| v.len());
    let mut packed = plant.pack_array();
    let mut u = 0.0;
    let steps = grid.steps();
    let n = cfg.substeps.max(1);
    let h = grid.dt / n as f64;
    let mut traj = Trajectory::with_capacity(steps + 1);
    let mut record = |t: f64, r: f64, u: f64, s: &[f64; 8]| {
        traj.push(StepRecord {
            t,
            r,
            y: scenario.output(&Vector2::new(s[0], s[1])),
            u,
            e: r - scenario.output(&Vector2::new(s[0], s[1])),
            k_f: k,
            omega_hat: 1.0,
            theta_hat: 0.0,
            sigma_hat: 0.0,
            x1: s[0],
            x2: s[1],
            xhat1: s[0],
            xhat2: s[1],
        });
    };
    for i in 0..steps {
        let t = grid.time_at(i);
        let r_t = reference(t);
        record(t, r_t, u, &packed);
        for j in 0..n {
            let tj = t + j as f64 * h;
            let eta: f64 = (0..na)
                .map(|a| scenario.actuator.c[a] * packed[2 + a])
                .sum();
            plant_rk4_packed(&scenario, &mut packed, na, nd, u, tj, h)?;
            (u, _) = control_step(u, eta, r_t, cfg.k_g, k, h);
        }
    }
    let t = grid.time_at(steps);
    record(t, reference(t), u, &packed);
    Ok(traj)
}

/// Full closed-loop rollout over the grid with reference r(t).
pub fn simulate<R>(
    scenario: &PlantScenario,
    gain: &dyn GainSource,
    grid: &TimeGrid,
    reference: R,
) -> Result<RolloutOutcome, Error>
where
    R: Fn(f64) -> f64,
{
    let cfg = L1Config::from_scenario(scenario)?;
    simulate_with_config(scenario, &cfg, gain, grid, reference)
}

/// Rollout with an explicit controller configuration.
pub fn simulate_with_config<R>(
    scenario: &PlantScenario,
    cfg: &L1Config,
    gain: &dyn GainSource,
    grid: &TimeGrid,
    reference: R,
) -> Result<RolloutOutcome, Error>
where
    R: Fn(f64) -> f64,
{
    let mut plant = PlantState::initial(scenario);
    let mut l1 = L1State::zeroed();
    let steps = grid.steps();
    let mut traj = Trajectory::with_capacity(steps + 1);
    let mut prev_e: Option<f64> = None;
    for i in 0..steps {
        let t = grid.time_at(i);
        let r_t = reference(t);
        match l1_closed_loop_step(
            scenario, cfg, &plant, &l1, gain, r_t, prev_e, t, grid.dt,
        ) {
            Ok((p, s, rec)) => {
                prev_e = Some(rec.e);
                traj.push(rec);
                plant = p;
                l1 = s;
            }
            Err(Error::Divergence { t: t_fail, .. })
            | Err(Error::IntegrationFault { t: t_fail }) => {
                return Ok(RolloutOutcome {
                    trajectory: traj,
                    diverged: Some(t_fail),
                });
            }
            Err(other) => return Err(other),
        }
    }
    // Terminal sample at tf.
    let t = grid.time_at(steps);
    let r_t = reference(t);
    let y = scenario.output(&plant.x);
    let e = r_t - y;
    let de = prev_e.map_or(0.0, |pe| (e - pe) / grid.dt);
    traj.push(StepRecord {
        t,
        r: r_t,
        y,
        u: l1.u_int,
        e,
        k_f: gain.gain(e, de),
        omega_hat: l1.est.omega_hat,
        theta_hat: l1.est.theta_hat,
        sigma_hat: l1.est.sigma_hat,
        x1: plant.x[0],
        x2: plant.x[1],
        xhat1: l1.x_hat[0],
        xhat2: l1.x_hat[1],
    });
    Ok(RolloutOutcome {
        trajectory: traj,
        diverged: None,
    })
}
