//! Particle swarm optimization of the nine free output membership-function
//! parameters, scored by a full closed-loop rollout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fuzzy::{FuzzyGainTuner, MfSet, TriangularMf};
use crate::integrate::TimeGrid;
use crate::l1::{simulate_with_config, L1Config, SUBSTEPS};
use crate::plant::PlantScenario;

/// Divergence penalty base; earlier failures score strictly worse.
pub const PENALTY_BASE: f64 = 1e12;

/// Free parameters, in order:
/// (VL_l, VL_c, L_l, L_c, L_h, S_l, S_c, VS_l, VS_c).
pub const ENCODING_BOUNDS: [(f64, f64); 9] = [
    (4.0, 8.0),   // VL_l
    (8.0, 12.0),  // VL_c
    (1.5, 3.0),   // L_l
    (3.0, 6.0),   // L_c
    (6.0, 10.0),  // L_h
    (0.3, 1.5),   // S_l
    (1.5, 4.0),   // S_c
    (0.0, 0.5),   // VS_l
    (0.5, 1.5),   // VS_c
];

/// Expand the 9 free values into the five output triangles through the tie
/// relations VL_h = VL_c, S_h = VL_l, VS_h = L_l, Z_h = S_l, Z_l = Z_c = 0.
/// Any unordered triple is repaired by sorting; the flag reports whether a
/// repair happened.
pub fn decode(p: &[f64; 9]) -> (MfSet, bool) {
    let [vl_l, vl_c, l_l, l_c, l_h, s_l, s_c, vs_l, vs_c] = *p;
    let mut repaired = false;
    let mut triple = |l: f64, c: f64, h: f64| -> TriangularMf {
        if l <= c && c <= h {
            TriangularMf { l, c, h }
        } else {
            repaired = true;
            let mut v = [l, c, h];
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            TriangularMf {
                l: v[0],
                c: v[1],
                h: v[2],
            }
        }
    };
    let set = MfSet::new([
        triple(0.0, 0.0, s_l),
        triple(vs_l, vs_c, l_l),
        triple(s_l, s_c, vl_l),
        triple(l_l, l_c, l_h),
        triple(vl_l, vl_c, vl_c),
    ]);
    (set, repaired)
}

/// Re-extract the nine free values from a decoded set (inverse of [`decode`]
/// for in-bounds, unrepaired particles).
pub fn encode(set: &MfSet) -> [f64; 9] {
    let [_z, vs, s, l, vl] = set.mfs;
    [vl.l, vl.c, l.l, l.c, l.h, s.l, s.c, vs.l, vs.c]
}

pub fn clamp_to_bounds(p: &mut [f64; 9]) {
    for (v, (lo, hi)) in p.iter_mut().zip(ENCODING_BOUNDS.iter()) {
        *v = v.clamp(*lo, *hi);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub population: usize,
    pub generations: usize,
    pub c1: f64,
    pub c2: f64,
    /// Base of the exponential inertia schedule alpha^g.
    pub inertia_alpha: f64,
    /// Recorded from the published settings table; has no defined role.
    pub lambda: f64,
    pub seed: u64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Draw r1, r2 per dimension instead of per particle.
    pub per_dimension_r: bool,
    /// Controller substeps used by the rollout objective.
    pub substeps: usize,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            population: 150,
            generations: 100,
            c1: 2.0,
            c2: 2.0,
            inertia_alpha: 0.99,
            lambda: 10.0,
            seed: 0,
            gamma1: 1.0,
            gamma2: 1e-6,
            per_dimension_r: false,
            substeps: SUBSTEPS,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.population < 2 {
            return Err(Error::InvalidParameter(
                "population must be at least 2".into(),
            ));
        }
        if self.generations < 1 {
            return Err(Error::InvalidParameter(
                "generations must be at least 1".into(),
            ));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::InvalidParameter("c1, c2 must be non-negative".into()));
        }
        if !(self.inertia_alpha > 0.0 && self.inertia_alpha <= 1.0) {
            return Err(Error::InvalidParameter(
                "inertia_alpha must lie in (0, 1]".into(),
            ));
        }
        if self.substeps < 1 {
            return Err(Error::InvalidParameter(
                "substeps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// v' = inertia * v + c1 r1 (x_local - x) + c2 r2 (x_global - x), then
/// clamped componentwise to the bound width.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    v: &[f64; 9],
    x: &[f64; 9],
    x_local: &[f64; 9],
    x_global: &[f64; 9],
    inertia: f64,
    c1: f64,
    c2: f64,
    r1: &[f64; 9],
    r2: &[f64; 9],
) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..9 {
        let width = ENCODING_BOUNDS[i].1 - ENCODING_BOUNDS[i].0;
        let vi = inertia * v[i]
            + c1 * r1[i] * (x_local[i] - x[i])
            + c2 * r2[i] * (x_global[i] - x[i]);
        out[i] = vi.clamp(-width, width);
    }
    out
}

/// x' = x + v', clamped into the constraint box.
pub fn position_update(x: &[f64; 9], v: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..9 {
        out[i] = (x[i] + v[i]).clamp(ENCODING_BOUNDS[i].0, ENCODING_BOUNDS[i].1);
    }
    out
}

/// Objective of one candidate: sum of gamma1 e^2 + gamma2 u^2 over every
/// recorded sample of a fuzzy-mode rollout tracking cos(0.5 t). A diverging
/// rollout receives a penalty that grows the earlier the failure.
pub fn evaluate_objective(
    p: &[f64; 9],
    scenario: &PlantScenario,
    cfg: &L1Config,
    grid: &TimeGrid,
    gamma1: f64,
    gamma2: f64,
) -> f64 {
    let (set, _) = decode(p);
    let tuner = match FuzzyGainTuner::new(
        scenario.k_p,
        scenario.k_d,
        scenario.k_e,
        scenario.k_const,
        set,
    ) {
        Ok(t) => t,
        Err(_) => return PENALTY_BASE + grid.tf,
    };
    match simulate_with_config(scenario, cfg, &tuner, grid, |t| (0.5 * t).cos()) {
        Ok(out) => {
            if let Some(t_fail) = out.diverged {
                PENALTY_BASE + (grid.tf - t_fail)
            } else {
                out.trajectory
                    .records
                    .iter()
                    .map(|rec| gamma1 * rec.e * rec.e + gamma2 * rec.u * rec.u)
                    .sum()
            }
        }
        Err(_) => PENALTY_BASE + grid.tf,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsoResult {
    pub seed: u64,
    pub config: SwarmConfig,
    pub best: [f64; 9],
    pub best_value: f64,
    /// Decoded (l, c, h) triples in label order Z, VS, S, L, VL.
    pub decoded: [f64; 15],
    /// Global best value after each generation; non-increasing.
    pub history: Vec<f64>,
}

/// Run the swarm: initialize uniformly within bounds, then iterate
/// evaluate -> update bests -> velocity/position updates.
///
/// Fitness evaluations run on the rayon pool; results are reduced in
/// particle-index order, so the outcome is independent of worker count.
pub fn run_pso(
    config: &SwarmConfig,
    scenario: &PlantScenario,
    grid: &TimeGrid,
) -> Result<PsoResult, Error> {
    config.validate()?;
    let mut l1_cfg = L1Config::from_scenario(scenario)?;
    l1_cfg.substeps = config.substeps;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.population;
    let mut positions: Vec<[f64; 9]> = (0..n)
        .map(|_| {
            let mut p = [0.0; 9];
            for (v, (lo, hi)) in p.iter_mut().zip(ENCODING_BOUNDS.iter()) {
                *v = rng.gen_range(*lo..=*hi);
            }
            p
        })
        .collect();
    let mut velocities: Vec<[f64; 9]> = vec![[0.0; 9]; n];
    let mut best_local: Vec<([f64; 9], f64)> = vec![([0.0; 9], f64::INFINITY); n];
    let mut best_global: ([f64; 9], f64) = ([0.0; 9], f64::INFINITY);
    let mut history = Vec::with_capacity(config.generations);

    for g in 0..config.generations {
        let values: Vec<f64> = positions
            .par_iter()
            .map(|p| evaluate_objective(p, scenario, &l1_cfg, grid, config.gamma1, config.gamma2))
            .collect();
        for (i, &val) in values.iter().enumerate() {
            if val < best_local[i].1 {
                best_local[i] = (positions[i], val);
            }
            if best_local[i].1 < best_global.1 {
                best_global = best_local[i];
            }
        }
        history.push(best_global.1);
        debug_assert!(positions.iter().all(|p| p
            .iter()
            .zip(ENCODING_BOUNDS.iter())
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)));
        if g + 1 < config.generations {
            let inertia = config.inertia_alpha.powi(g as i32);
            for i in 0..n {
                let (r1, r2) = if config.per_dimension_r {
                    let mut r1 = [0.0; 9];
                    let mut r2 = [0.0; 9];
                    for k in 0..9 {
                        r1[k] = rng.gen_range(0.0..=1.0);
                    }
                    for k in 0..9 {
                        r2[k] = rng.gen_range(0.0..=1.0);
                    }
                    (r1, r2)
                } else {
                    (
                        [rng.gen_range(0.0..=1.0); 9],
                        [rng.gen_range(0.0..=1.0); 9],
                    )
                };
                velocities[i] = velocity_update(
                    &velocities[i],
                    &positions[i],
                    &best_local[i].0,
                    &best_global.0,
                    inertia,
                    config.c1,
                    config.c2,
                    &r1,
                    &r2,
                );
                positions[i] = position_update(&positions[i], &velocities[i]);
            }
        }
    }
    let (set, _) = decode(&best_global.0);
    Ok(PsoResult {
        seed: config.seed,
        config: config.clone(),
        best: best_global.0,
        best_value: best_global.1,
        decoded: set.flatten(),
        history,
    })
}
