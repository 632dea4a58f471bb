//! Frozen tuning result used as the default fuzzy output membership set.
//!
//! Produced by `tune` on case 1 (8 s rollouts, r = cos(0.5 t)) with the
//! seed below; regenerate with the CLI and pass `--tuner-params` to use a
//! different set.

use crate::fuzzy::MfSet;
use crate::pso::decode;

pub const DEFAULT_TUNED_SEED: u64 = 1;

/// Best 9-vector found by the frozen tuning run
/// (VL_l, VL_c, L_l, L_c, L_h, S_l, S_c, VS_l, VS_c):
/// 30 particles, 40 generations, gamma1 = 1, gamma2 = 1e-6.
pub const DEFAULT_TUNED: [f64; 9] = [
    8.0, 8.0, 1.5, 3.0, 9.985103003381235, 1.5, 4.0, 0.5, 1.5,
];

/// Decoded default output membership set.
pub fn default_output_set() -> MfSet {
    decode(&DEFAULT_TUNED).0
}
