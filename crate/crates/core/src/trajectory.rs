//! Time-indexed record of a closed-loop rollout.

use serde::{Deserialize, Serialize};

/// One recorded sample of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub r: f64,
    pub y: f64,
    pub u: f64,
    pub e: f64,
    /// Feedback gain active during this step.
    pub k_f: f64,
    pub omega_hat: f64,
    pub theta_hat: f64,
    pub sigma_hat: f64,
    pub x1: f64,
    pub x2: f64,
    pub xhat1: f64,
    pub xhat2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            records: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, rec: StepRecord) {
        self.records.push(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// RMS of e over t in [t_lo, t_hi].
    pub fn rms_error(&self, t_lo: f64, t_hi: f64) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for rec in &self.records {
            if rec.t >= t_lo && rec.t <= t_hi {
                sum += rec.e * rec.e;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            (sum / n as f64).sqrt()
        }
    }

    /// Max |u| over t in [t_lo, t_hi].
    pub fn max_abs_u(&self, t_lo: f64, t_hi: f64) -> f64 {
        self.records
            .iter()
            .filter(|rec| rec.t >= t_lo && rec.t <= t_hi)
            .map(|rec| rec.u.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_e(&self, t_lo: f64, t_hi: f64) -> f64 {
        self.records
            .iter()
            .filter(|rec| rec.t >= t_lo && rec.t <= t_hi)
            .map(|rec| rec.e.abs())
            .fold(0.0, f64::max)
    }
}
