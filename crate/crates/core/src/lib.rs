//! Simulation and tuning toolkit for a fuzzy-scheduled L1 adaptive controller.
//!
//! The library is organized around the closed loop it simulates:
//!
//! * [`ss`] — state-space primitives: pole placement, Lyapunov solve,
//!   transfer-function realization, feedforward gain.
//! * [`integrate`] — fixed-step RK4 and the simulation time grid.
//! * [`plant`] — the three benchmark plants (double integrator with unknown
//!   nonlinearity, actuator lag, optional unmodeled-dynamics channel).
//! * [`l1`] — state predictor, projection-based adaptation, filtered control
//!   law, and the full closed-loop rollout.
//! * [`fuzzy`] — Mamdani inference scheduling the feedback gain from |e|, |ė|.
//! * [`pso`] — particle swarm optimization of the output membership functions
//!   against a tracking-error + control-effort objective.

pub mod error;
pub mod fuzzy;
pub mod integrate;
pub mod l1;
pub mod plant;
pub mod pso;
pub mod ss;
pub mod trajectory;
pub mod tuned;

pub use error::Error;
pub use fuzzy::{FuzzyGainTuner, MfSet, RuleBase, TriangularMf};
pub use integrate::{rk4_step, rk4_step_scalar, TimeGrid};
pub use l1::{
    simulate, simulate_with_config, AdaptiveEstimates, GainSource, L1Config, L1State,
    ProjectionBounds, RolloutOutcome,
};
pub use plant::{PlantScenario, PlantState, ScenarioKind};
pub use pso::{run_pso, PsoResult, SwarmConfig, ENCODING_BOUNDS};
pub use ss::StateSpaceModel;
pub use trajectory::{StepRecord, Trajectory};
