//! Scenario runner behind the `fuzzyl1` binary: JSON run configs in,
//! trajectory CSVs / tuning results / comparison summaries out.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fuzzy_l1::fuzzy::FuzzyGainTuner;
use fuzzy_l1::integrate::TimeGrid;
use fuzzy_l1::l1::{simulate_with_config, ConstantGain, GainSource, L1Config, RolloutOutcome};
use fuzzy_l1::plant::{PlantScenario, ScenarioKind};
use fuzzy_l1::pso::{decode, run_pso, SwarmConfig};
use fuzzy_l1::trajectory::Trajectory;
use fuzzy_l1::tuned::default_output_set;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io ({path}): {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] fuzzy_l1::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Constant,
    Fuzzy,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Constant => "constant",
            Mode::Fuzzy => "fuzzy",
        }
    }
}

/// Cosine reference r(t) = amplitude * cos(frequency * t).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
}

fn default_amplitude() -> f64 {
    1.0
}
fn default_frequency() -> f64 {
    0.5
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            amplitude: default_amplitude(),
            frequency: default_frequency(),
        }
    }
}

/// Per-key overrides of the built-in scenario constants.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Constant feedback gain (also the fuzzy controller's small-error gain).
    pub k: Option<f64>,
    /// Adaptation gain Γ.
    pub gamma: Option<f64>,
    /// Controller substeps per recording interval.
    pub substeps: Option<usize>,
    pub k_p: Option<f64>,
    pub k_d: Option<f64>,
    pub k_e: Option<f64>,
}

/// Swarm setup for `tune`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSpec {
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    /// Rollout horizon in seconds.
    #[serde(default = "default_tune_duration")]
    pub duration: f64,
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "default_gamma2")]
    pub gamma2: f64,
}

fn default_population() -> usize {
    150
}
fn default_generations() -> usize {
    100
}
fn default_tune_duration() -> f64 {
    8.0
}
fn default_gamma1() -> f64 {
    1.0
}
fn default_gamma2() -> f64 {
    SwarmConfig::default().gamma2
}

impl Default for TuneSpec {
    fn default() -> Self {
        Self {
            population: default_population(),
            generations: default_generations(),
            duration: default_tune_duration(),
            gamma1: default_gamma1(),
            gamma2: default_gamma2(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Simulation horizon in seconds.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub reference: ReferenceSpec,
    /// Tuning RNG seed; `--seed` on the command line wins.
    #[serde(default)]
    pub seed: u64,
    /// Path to a tuning result JSON whose best 9-vector replaces the
    /// built-in output membership set.
    #[serde(default)]
    pub tuner_params: Option<PathBuf>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub tune: TuneSpec,
    #[serde(default)]
    pub overrides: Overrides,
}

fn default_mode() -> Mode {
    Mode::Fuzzy
}
fn default_duration() -> f64 {
    40.0
}
fn default_dt() -> f64 {
    0.01
}

impl RunConfig {
    pub fn scenario_kind(&self) -> Result<ScenarioKind, CliError> {
        match self.scenario.as_str() {
            "case1" => Ok(ScenarioKind::Case1),
            "case2" => Ok(ScenarioKind::Case2),
            "case3" => Ok(ScenarioKind::Case3),
            other => Err(CliError::Config(format!(
                "scenario: expected case1|case2|case3, got {other:?}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario_kind()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Config("dt: must be positive and finite".into()));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(CliError::Config(
                "duration: must be positive and finite".into(),
            ));
        }
        if !(self.reference.frequency.is_finite() && self.reference.amplitude.is_finite()) {
            return Err(CliError::Config("reference: values must be finite".into()));
        }
        if let Some(path) = &self.tuner_params {
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "tuner_params: file {} does not exist",
                    path.display()
                )));
            }
        }
        for (name, v) in [
            ("overrides.k", self.overrides.k),
            ("overrides.gamma", self.overrides.gamma),
            ("overrides.k_p", self.overrides.k_p),
            ("overrides.k_d", self.overrides.k_d),
            ("overrides.k_e", self.overrides.k_e),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!(
                        "{name}: must be positive and finite"
                    )));
                }
            }
        }
        Ok(())
    }

    fn grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(0.0, self.duration, self.dt)?)
    }

    fn l1_config(&self, scenario: &PlantScenario) -> Result<L1Config, CliError> {
        let mut cfg = L1Config::from_scenario(scenario)?;
        if let Some(g) = self.overrides.gamma {
            cfg.gamma = g;
        }
        if let Some(s) = self.overrides.substeps {
            if s < 1 {
                return Err(CliError::Config(
                    "overrides.substeps: must be at least 1".into(),
                ));
            }
            cfg.substeps = s;
        }
        Ok(cfg)
    }

    fn gain(&self, mode: Mode) -> Result<Box<dyn GainSource>, CliError> {
        let k = self.overrides.k.unwrap_or(20.0);
        match mode {
            Mode::Constant => Ok(Box::new(ConstantGain(k))),
            Mode::Fuzzy => {
                let output_set = match &self.tuner_params {
                    Some(path) => {
                        let text = fs::read_to_string(path).map_err(io_err(path))?;
                        let result: TuningResult = serde_json::from_str(&text).map_err(|e| {
                            CliError::Config(format!(
                                "tuner_params {}: {e}",
                                path.display()
                            ))
                        })?;
                        decode(&result.best).0
                    }
                    None => default_output_set(),
                };
                let tuner = FuzzyGainTuner::new(
                    self.overrides.k_p.unwrap_or(0.1),
                    self.overrides.k_d.unwrap_or(0.05),
                    self.overrides.k_e.unwrap_or(0.1),
                    k,
                    output_set,
                )?;
                Ok(Box::new(tuner))
            }
        }
    }
}

/// Parse, validate, and return a run config; unknown keys are rejected.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

/// Shortest-round-trip decimal for every float column; a re-parse recovers
/// the exact bits, so emit -> parse -> emit is byte-identical.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (traj.records.len() + 1));
    out.push_str("t,r,y,u,e,k_f,omega_hat,theta_hat,sigma_hat,x1,x2\n");
    for rec in &traj.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            rec.t,
            rec.r,
            rec.y,
            rec.u,
            rec.e,
            rec.k_f,
            rec.omega_hat,
            rec.theta_hat,
            rec.sigma_hat,
            rec.x1,
            rec.x2
        );
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StatusJson {
    pub diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_fail: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningResult {
    pub seed: u64,
    pub config: SwarmConfig,
    pub best: [f64; 9],
    pub best_value: f64,
    pub decoded: [f64; 15],
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModeSummary {
    pub rms_error: f64,
    pub max_abs_u: f64,
    pub max_abs_e: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompareSummary {
    pub constant: ModeSummary,
    pub fuzzy: ModeSummary,
}

pub fn summarize(outcome: &RolloutOutcome) -> ModeSummary {
    let recs = &outcome.trajectory.records;
    let mut sq = 0.0;
    let mut max_u: f64 = 0.0;
    let mut max_e: f64 = 0.0;
    for rec in recs {
        sq += rec.e * rec.e;
        max_u = max_u.max(rec.u.abs());
        max_e = max_e.max(rec.e.abs());
    }
    ModeSummary {
        rms_error: (sq / recs.len().max(1) as f64).sqrt(),
        max_abs_u: max_u,
        max_abs_e: max_e,
        diverged: outcome.diverged.is_some(),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(dir, name, &text)
}

fn rollout(config: &RunConfig, mode: Mode) -> Result<RolloutOutcome, CliError> {
    let scenario = PlantScenario::new(config.scenario_kind()?);
    let l1_cfg = config.l1_config(&scenario)?;
    let grid = config.grid()?;
    let gain = config.gain(mode)?;
    let reference = config.reference;
    Ok(simulate_with_config(&scenario, &l1_cfg, gain.as_ref(), &grid, |t| {
        reference.amplitude * (reference.frequency * t).cos()
    })?)
}

/// Run one rollout; write trajectory.csv and status.json.
pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<i32, CliError> {
    let outcome = rollout(config, config.mode)?;
    write_file(out_dir, "trajectory.csv", &trajectory_csv(&outcome.trajectory))?;
    write_json(
        out_dir,
        "status.json",
        &StatusJson {
            diverged: outcome.diverged.is_some(),
            t_fail: outcome.diverged,
        },
    )?;
    Ok(match outcome.diverged {
        Some(t) => {
            eprintln!("{} {}: diverged at t = {t}", config.scenario, config.mode.name());
            EXIT_DIVERGED
        }
        None => EXIT_OK,
    })
}

/// Run PSO on the configured scenario; write tuning.json and convergence.csv.
pub fn cmd_tune(config: &RunConfig, out_dir: &Path) -> Result<i32, CliError> {
    let scenario = PlantScenario::new(config.scenario_kind()?);
    let grid = TimeGrid::new(0.0, config.tune.duration, config.dt)?;
    let swarm = SwarmConfig {
        population: config.tune.population,
        generations: config.tune.generations,
        seed: config.seed,
        gamma1: config.tune.gamma1,
        gamma2: config.tune.gamma2,
        substeps: config
            .overrides
            .substeps
            .unwrap_or(SwarmConfig::default().substeps),
        ..SwarmConfig::default()
    };
    let result = run_pso(&swarm, &scenario, &grid)?;
    let mut csv = String::from("generation,best\n");
    for (g, v) in result.history.iter().enumerate() {
        let _ = writeln!(csv, "{g},{v}");
    }
    write_file(out_dir, "convergence.csv", &csv)?;
    write_json(
        out_dir,
        "tuning.json",
        &TuningResult {
            seed: result.seed,
            config: result.config,
            best: result.best,
            best_value: result.best_value,
            decoded: result.decoded,
            history: result.history,
        },
    )?;
    Ok(EXIT_OK)
}

/// Run both controller modes on one scenario; write both trajectory CSVs,
/// per-mode status files, and summary.json.
pub fn cmd_compare(config: &RunConfig, out_dir: &Path) -> Result<i32, CliError> {
    let (const_out, fuzzy_out) = std::thread::scope(|s| {
        let h_const = s.spawn(|| rollout(config, Mode::Constant));
        let h_fuzzy = s.spawn(|| rollout(config, Mode::Fuzzy));
        (
            h_const.join().expect("constant rollout panicked"),
            h_fuzzy.join().expect("fuzzy rollout panicked"),
        )
    });
    let const_out = const_out?;
    let fuzzy_out = fuzzy_out?;
    write_file(
        out_dir,
        "trajectory_constant.csv",
        &trajectory_csv(&const_out.trajectory),
    )?;
    write_file(
        out_dir,
        "trajectory_fuzzy.csv",
        &trajectory_csv(&fuzzy_out.trajectory),
    )?;
    write_json(
        out_dir,
        "summary.json",
        &CompareSummary {
            constant: summarize(&const_out),
            fuzzy: summarize(&fuzzy_out),
        },
    )?;
    // A constant-mode divergence is a reportable outcome, not a failure;
    // only a fuzzy-mode divergence exits nonzero.
    Ok(match fuzzy_out.diverged {
        Some(t) => {
            eprintln!("{} fuzzy: diverged at t = {t}", config.scenario);
            EXIT_DIVERGED
        }
        None => EXIT_OK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fuzzy_l1::trajectory::StepRecord;

    fn record(t: f64) -> StepRecord {
        StepRecord {
            t,
            r: 1.0 / 3.0,
            y: 0.1 + t,
            u: -441.552049,
            e: 2e-17,
            k_f: 20.0,
            omega_hat: 9.999999999,
            theta_hat: -0.3333333333333333,
            sigma_hat: 1e300,
            x1: f64::MIN_POSITIVE,
            x2: -0.0,
            xhat1: 0.0,
            xhat2: 0.0,
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut traj = Trajectory::with_capacity(3);
        for i in 0..3 {
            traj.push(record(i as f64 * 0.01));
        }
        let first = trajectory_csv(&traj);
        let mut reparsed = Trajectory::with_capacity(3);
        for line in first.lines().skip(1) {
            let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(vals.len(), 11);
            reparsed.push(StepRecord {
                t: vals[0],
                r: vals[1],
                y: vals[2],
                u: vals[3],
                e: vals[4],
                k_f: vals[5],
                omega_hat: vals[6],
                theta_hat: vals[7],
                sigma_hat: vals[8],
                x1: vals[9],
                x2: vals[10],
                xhat1: 0.0,
                xhat2: 0.0,
            });
        }
        assert_eq!(trajectory_csv(&reparsed), first);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = serde_json::from_str::<RunConfig>(r#"{"scenario":"case1","foo":1}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("foo"), "{err}");
    }

    #[test]
    fn defaults_fill_minimal_config() {
        let config: RunConfig = serde_json::from_str(r#"{"scenario":"case1"}"#).unwrap();
        config.validate().unwrap();
        assert_eq!(config.duration, 40.0);
        assert_eq!(config.dt, 0.01);
        assert_eq!(config.reference.frequency, 0.5);
        assert_eq!(config.tune.population, 150);
    }

    #[test]
    fn bad_dt_names_the_field() {
        let config: RunConfig =
            serde_json::from_str(r#"{"scenario":"case1","dt":0.0}"#).unwrap();
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("dt"), "{err}");
    }
}
