//! Fixed-step classical RK4 and the shared simulation grid.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Uniform time grid shared by every integrated subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, dt: f64) -> Result<Self, Error> {
        if !(dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if !(tf > t0) {
            return Err(Error::InvalidGrid(format!(
                "tf ({tf}) must be greater than t0 ({t0})"
            )));
        }
        let raw = (tf - t0) / dt;
        let n = raw.round();
        if n < 1.0 || (raw - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "(tf - t0)/dt = {raw} is not an integer step count"
            )));
        }
        Ok(Self { t0, tf, dt })
    }

    /// Number of integration steps; the trajectory holds `steps() + 1` samples.
    pub fn steps(&self) -> usize {
        ((self.tf - self.t0) / self.dt).round() as usize
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }
}

/// One classical 4th-order Runge-Kutta step of `dx/dt = deriv(x, t)`.
///
/// Deterministic for identical inputs; fails if any stage derivative is
/// non-finite.
pub fn rk4_step<F>(deriv: F, x: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>, Error>
where
    F: Fn(&DVector<f64>, f64) -> DVector<f64>,
{
    let check = |k: &DVector<f64>| -> Result<(), Error> {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::IntegrationFault { t })
        }
    };
    let k1 = deriv(x, t);
    check(&k1)?;
    let k2 = deriv(&(x + &k1 * (dt / 2.0)), t + dt / 2.0);
    check(&k2)?;
    let k3 = deriv(&(x + &k2 * (dt / 2.0)), t + dt / 2.0);
    check(&k3)?;
    let k4 = deriv(&(x + &k3 * dt), t + dt);
    check(&k4)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Scalar RK4 step, used by the adaptation laws and the control integrator.
pub fn rk4_step_scalar<F>(deriv: F, x: f64, t: f64, dt: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let k1 = deriv(x, t);
    let k2 = deriv(x + dt / 2.0 * k1, t + dt / 2.0);
    let k3 = deriv(x + dt / 2.0 * k2, t + dt / 2.0);
    let k4 = deriv(x + dt * k3, t + dt);
    x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn zero_derivative_is_identity() {
        let x = dvector![1.0, 2.0];
        let out = rk4_step(|x, _| DVector::zeros(x.len()), &x, 0.0, 0.01).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn exponential_decay_matches_degree_four_taylor() {
        // RK4 on xdot = -x reproduces the degree-4 Taylor polynomial of e^(-dt).
        let out = rk4_step(|x, _| -x.clone(), &dvector![1.0], 0.0, 0.01).unwrap();
        assert_relative_eq!(out[0], 0.9900498337, epsilon = 1e-10);
    }

    #[test]
    fn exact_on_linear_in_time_solution() {
        let out = rk4_step(|x, _| dvector![x[1], 0.0], &dvector![0.0, 1.0], 0.0, 0.5).unwrap();
        assert_relative_eq!(out[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(out[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn non_finite_derivative_reports_time() {
        let err = rk4_step(|_, _| dvector![f64::NAN], &dvector![1.0], 3.5, 0.01).unwrap_err();
        match err {
            Error::IntegrationFault { t } => assert_eq!(t, 3.5),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn fourth_order_convergence() {
        // Integrate xdot = -x over [0, 1]; halving dt shrinks the error ~16x.
        let run = |dt: f64| {
            let mut x = dvector![1.0];
            let n = (1.0 / dt).round() as usize;
            for i in 0..n {
                x = rk4_step(|x, _| -x.clone(), &x, i as f64 * dt, dt).unwrap();
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio >= 12.0, "convergence ratio {ratio} below 4th order");
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.3).is_err());
        let g = TimeGrid::new(0.0, 8.0, 0.01).unwrap();
        assert_eq!(g.steps(), 800);
    }
}
