//! The benchmark plants: double-integrator backbone with a case-specific
//! unknown nonlinearity, a first-order actuator lag on the control channel,
//! and (cases 2 and 3) an unmodeled-dynamics disturbance filter.

use nalgebra::{Complex, DMatrix, DVector, RowDVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::l1::ProjectionBounds;
use crate::ss::{place_poles, realize_siso_tf, StateSpaceModel};

pub const DIVERGENCE_THRESHOLD: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Case1,
    Case2,
    Case3,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Case1 => "case1",
            ScenarioKind::Case2 => "case2",
            ScenarioKind::Case3 => "case3",
        }
    }
}

/// Immutable description of one benchmark scenario: plant matrices, auxiliary
/// dynamics, and every run constant of the controller.
#[derive(Debug, Clone)]
pub struct PlantScenario {
    pub kind: ScenarioKind,
    /// Open-loop backbone [[0,1],[0,0]]; the desired dynamics A_m are placed
    /// from it.
    pub a: DMatrix<f64>,
    /// Simulated plant matrix A_m = A - b K: the benchmark plant carries the
    /// desired closed-loop dynamics, and f is the matched uncertainty on top.
    pub a_m: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    /// First-order lag 75/(s+75) smoothing the control signal.
    pub actuator: StateSpaceModel,
    /// (s-1)/(s^2+3s+2) driven by v = x1 sin(0.2 t) + x2; cases 2 and 3 only.
    pub disturbance: Option<StateSpaceModel>,
    pub poles: [Complex<f64>; 2],
    /// Constant (fallback) feedback gain.
    pub k_const: f64,
    /// Adaptation gain.
    pub gamma: f64,
    pub q: DMatrix<f64>,
    pub bounds: ProjectionBounds,
    /// Fuzzy input weights and switch threshold.
    pub k_p: f64,
    pub k_d: f64,
    pub k_e: f64,
    pub x0: Vector2<f64>,
    /// Zero the matched nonlinearity f, leaving the linear loop (plant,
    /// actuator lag, controller) intact.
    pub linear: bool,
}

impl PlantScenario {
    pub fn new(kind: ScenarioKind) -> Self {
        let actuator = realize_siso_tf(&[75.0], &[1.0, 75.0]).expect("first-order lag");
        let disturbance = match kind {
            ScenarioKind::Case1 => None,
            _ => Some(realize_siso_tf(&[1.0, -1.0], &[1.0, 3.0, 2.0]).expect("z(s) filter")),
        };
        let pole_re = match kind {
            ScenarioKind::Case3 => -84.0,
            _ => -21.0,
        };
        let poles = [
            Complex::new(pole_re, 0.743),
            Complex::new(pole_re, -0.743),
        ];
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DVector::from_column_slice(&[0.0, 1.0]);
        let (_, a_m) = place_poles(&a, &b, &poles).expect("double integrator is controllable");
        Self {
            kind,
            a,
            a_m,
            b,
            // The printed output row [0 1] makes the feedforward gain
            // singular; the position output [1 0] of the original benchmark
            // is used instead.
            c: RowDVector::from_row_slice(&[1.0, 0.0]),
            actuator,
            disturbance,
            poles,
            k_const: 20.0,
            gamma: 1e6,
            q: DMatrix::identity(2, 2),
            bounds: ProjectionBounds::default(),
            k_p: 0.1,
            k_d: 0.05,
            k_e: 0.1,
            x0: Vector2::zeros(),
            linear: false,
        }
    }

    /// Scenario with f zeroed, for checking the ideal-loop DC behavior.
    pub fn linearized(kind: ScenarioKind) -> Self {
        Self {
            linear: true,
            ..Self::new(kind)
        }
    }

    pub fn output(&self, x: &Vector2<f64>) -> f64 {
        self.c[0] * x[0] + self.c[1] * x[1]
    }

    fn nonlinearity(&self, x: &Vector2<f64>, z: f64, t: f64) -> f64 {
        if self.linear {
            return 0.0;
        }
        match self.kind {
            ScenarioKind::Case1 => f_case1(x),
            _ => f_case2(x, z, t),
        }
    }
}

/// Case-1 unknown nonlinearity.
pub fn f_case1(x: &Vector2<f64>) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    2.0 * x1 * x1 + 2.0 * x2 * x2 + x1 * (x1 * x1).sin() + x2 * (x2 * x2).cos()
}

/// Case-2/3 time-variant nonlinearity with the disturbance-channel output z.
pub fn f_case2(x: &Vector2<f64>, z: f64, t: f64) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    ((0.4 * t).sin() + 1.0) * x1 * x1
        + (2.0 * (0.35 * t).cos() + 0.5) * x2 * x2
        + ((0.3 * t).sin() + 0.3) * x1 * (x1 * x1).sin()
        + (0.35 * t).sin() * (0.4 * t).cos()
        + 0.5 * x2 * (x2 * x2 + 0.5 * (0.3 * t).cos()).cos()
        + (0.3 * t).sin() * (0.4 * t).cos() * z * z
}

/// Composite simulation state: plant, actuator lag, optional disturbance
/// filter. Owned by exactly one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub x: Vector2<f64>,
    pub x_act: DVector<f64>,
    pub x_dist: Option<DVector<f64>>,
}

impl PlantState {
    pub fn initial(scenario: &PlantScenario) -> Self {
        Self {
            x: scenario.x0,
            x_act: DVector::zeros(scenario.actuator.order()),
            x_dist: scenario
                .disturbance
                .as_ref()
                .map(|m| DVector::zeros(m.order())),
        }
    }

    /// Current disturbance-channel output z.
    pub fn z(&self, scenario: &PlantScenario) -> f64 {
        match (&scenario.disturbance, &self.x_dist) {
            (Some(m), Some(xd)) => (&m.c * xd)[0],
            _ => 0.0,
        }
    }

    pub(crate) fn pack_array(&self) -> [f64; PACK_CAP] {
        let mut out = [0.0; PACK_CAP];
        out[0] = self.x[0];
        out[1] = self.x[1];
        for (i, v) in self.x_act.iter().enumerate() {
            out[2 + i] = *v;
        }
        if let Some(xd) = &self.x_dist {
            for (i, v) in xd.iter().enumerate() {
                out[2 + self.x_act.len() + i] = *v;
            }
        }
        out
    }

    pub(crate) fn unpack_array(&self, packed: &[f64; PACK_CAP]) -> Self {
        let na = self.x_act.len();
        Self {
            x: Vector2::new(packed[0], packed[1]),
            x_act: DVector::from_iterator(na, (0..na).map(|i| packed[2 + i])),
            x_dist: self.x_dist.as_ref().map(|xd| {
                DVector::from_iterator(xd.len(), (0..xd.len()).map(|i| packed[2 + na + i]))
            }),
        }
    }
}

/// Stack capacity for the packed composite state (2 plant + actuator +
/// disturbance components); generous for the benchmark's 1 + 2 auxiliary
/// states.
pub(crate) const PACK_CAP: usize = 8;

/// RK4 advance of the packed composite state in place. Innermost simulation
/// loop: evaluates the coupled derivative on stack buffers, no allocation.
pub(crate) fn plant_rk4_packed(
    scenario: &PlantScenario,
    s0: &mut [f64; PACK_CAP],
    na: usize,
    nd: usize,
    u: f64,
    t: f64,
    dt: f64,
) -> Result<(), Error> {
    let n = 2 + na + nd;
    debug_assert!(n <= PACK_CAP);
    let act = &scenario.actuator;
    let dist = scenario.disturbance.as_ref();
    // a_m row 2 (row 1 is [0, 1] by construction of the companion form).
    let (am10, am11) = (scenario.a_m[(1, 0)], scenario.a_m[(1, 1)]);

    let deriv = |s: &[f64], out: &mut [f64], time: f64| {
        let x = Vector2::new(s[0], s[1]);
        // Actuator lag driven by u; its output enters the plant.
        let mut act_out = 0.0;
        for i in 0..na {
            let mut d = act.b[i] * u;
            for j in 0..na {
                d += act.a[(i, j)] * s[2 + j];
            }
            out[2 + i] = d;
            act_out += act.c[i] * s[2 + i];
        }
        // Disturbance filter driven by v(t) = x1 sin(0.2 t) + x2.
        let mut z = 0.0;
        if let Some(m) = dist {
            let v = x[0] * (0.2 * time).sin() + x[1];
            for i in 0..nd {
                let mut d = m.b[i] * v;
                for j in 0..nd {
                    d += m.a[(i, j)] * s[2 + na + j];
                }
                out[2 + na + i] = d;
                z += m.c[i] * s[2 + na + i];
            }
        }
        let f = scenario.nonlinearity(&x, z, time);
        out[0] = s[1];
        out[1] = am10 * s[0] + am11 * s[1] + act_out + f;
    };

    let (mut k1, mut k2, mut k3, mut k4) = (
        [0.0; PACK_CAP],
        [0.0; PACK_CAP],
        [0.0; PACK_CAP],
        [0.0; PACK_CAP],
    );
    let mut stage = [0.0; PACK_CAP];
    deriv(&s0[..n], &mut k1, t);
    for i in 0..n {
        stage[i] = s0[i] + 0.5 * dt * k1[i];
    }
    deriv(&stage[..n], &mut k2, t + 0.5 * dt);
    for i in 0..n {
        stage[i] = s0[i] + 0.5 * dt * k2[i];
    }
    deriv(&stage[..n], &mut k3, t + 0.5 * dt);
    for i in 0..n {
        stage[i] = s0[i] + dt * k3[i];
    }
    deriv(&stage[..n], &mut k4, t + dt);
    for i in 0..n {
        s0[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !s0[i].is_finite() {
            return Err(Error::IntegrationFault { t });
        }
    }
    if s0[0].abs().max(s0[1].abs()) > DIVERGENCE_THRESHOLD {
        return Err(Error::Divergence {
            t: t + dt,
            threshold: DIVERGENCE_THRESHOLD,
        });
    }
    Ok(())
}

/// Advance actuator lag, disturbance filter, and plant one RK4 step under the
/// control input u (held constant over the step). Returns the next state and
/// the new output y.
pub fn plant_step(
    scenario: &PlantScenario,
    state: &PlantState,
    u: f64,
    t: f64,
    dt: f64,
) -> Result<(PlantState, f64), Error> {
    let na = state.x_act.len();
    let nd = state.x_dist.as_ref().map_or(0, |v| v.len());
    let mut packed = state.pack_array();
    plant_rk4_packed(scenario, &mut packed, na, nd, u, t, dt)?;
    let next_state = state.unpack_array(&packed);
    let y = scenario.output(&next_state.x);
    Ok((next_state, y))
}
