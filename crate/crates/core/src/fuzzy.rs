//! Mamdani fuzzy inference scheduling the feedback gain from |e| and |ė|.
//!
//! Five triangular labels per variable, min t-norm, max aggregation, centroid
//! defuzzification on a discretized output universe. When |e| falls at or
//! below the switch threshold the constant fallback gain is used instead.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::l1::GainSource;

/// Output universe of the scheduled gain.
pub const OUTPUT_UNIVERSE: (f64, f64) = (0.0, 12.0);
/// Default grid spacing for centroid defuzzification.
pub const DEFAULT_RESOLUTION: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Z,
    Vs,
    S,
    L,
    Vl,
}

pub const LABELS: [Label; 5] = [Label::Z, Label::Vs, Label::S, Label::L, Label::Vl];

/// Triangular membership function with breakpoints l <= c <= h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularMf {
    pub l: f64,
    pub c: f64,
    pub h: f64,
}

impl TriangularMf {
    pub fn new(l: f64, c: f64, h: f64) -> Result<Self, Error> {
        if !(l <= c && c <= h) {
            return Err(Error::InvalidParameter(format!(
                "triangular breakpoints must be ordered, got ({l}, {c}, {h})"
            )));
        }
        Ok(Self { l, c, h })
    }

    /// Piecewise-linear hat; degree 1 at a coincident edge (l = c or c = h).
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.l || x > self.h {
            return 0.0;
        }
        if x <= self.c {
            if self.c == self.l {
                1.0
            } else {
                (x - self.l) / (self.c - self.l)
            }
        } else if self.h == self.c {
            1.0
        } else {
            (self.h - x) / (self.h - self.c)
        }
    }
}

/// Five labeled triangles over one universe, ordered Z, VS, S, L, VL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfSet {
    pub mfs: [TriangularMf; 5],
}

impl MfSet {
    pub fn new(mfs: [TriangularMf; 5]) -> Self {
        Self { mfs }
    }

    /// Ladder over [0, 1] shared by both inputs. The lower knee at 0.08 and
    /// the apex spacing are the declared fixture.
    pub fn input_default() -> Self {
        Self::new([
            TriangularMf { l: 0.0, c: 0.0, h: 0.08 },
            TriangularMf { l: 0.0, c: 0.08, h: 0.31 },
            TriangularMf { l: 0.08, c: 0.31, h: 0.54 },
            TriangularMf { l: 0.31, c: 0.54, h: 1.0 },
            TriangularMf { l: 0.54, c: 1.0, h: 1.0 },
        ])
    }

    pub fn eval_all(&self, x: f64) -> [f64; 5] {
        [
            self.mfs[0].eval(x),
            self.mfs[1].eval(x),
            self.mfs[2].eval(x),
            self.mfs[3].eval(x),
            self.mfs[4].eval(x),
        ]
    }

    /// Centers strictly increasing and every point of [lo, hi] covered by at
    /// least one label (sampled check).
    pub fn validate(&self, lo: f64, hi: f64) -> Result<(), Error> {
        for w in self.mfs.windows(2) {
            if !(w[0].c < w[1].c) {
                return Err(Error::InvalidParameter(
                    "label centers must be strictly increasing".into(),
                ));
            }
        }
        let n = 1000;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            if self.eval_all(x).iter().all(|&d| d == 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "universe point {x} has zero membership in every label"
                )));
            }
        }
        Ok(())
    }

    /// Flat (l, c, h) list in label order, 15 values.
    pub fn flatten(&self) -> [f64; 15] {
        let mut out = [0.0; 15];
        for (i, mf) in self.mfs.iter().enumerate() {
            out[3 * i] = mf.l;
            out[3 * i + 1] = mf.c;
            out[3 * i + 2] = mf.h;
        }
        out
    }
}

/// 5x5 rule table mapping (e-label, ė-label) to an output label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleBase {
    /// Indexed [e][de] with label order Z, VS, S, L, VL.
    pub table: [[Label; 5]; 5],
}

impl RuleBase {
    /// The fixed 25-rule table. Rows below are ė from Z to VL, columns e from
    /// Z to VL.
    pub fn standard() -> Self {
        use Label::*;
        Self {
            table: transpose([
                // de = Z
                [Z, Vs, Vs, S, L],
                // de = VS
                [Vs, Vs, S, L, Vl],
                // de = S
                [Vs, S, L, Vl, Vl],
                // de = L
                [S, L, Vl, Vl, Vl],
                // de = VL
                [L, Vl, Vl, Vl, Vl],
            ]),
        }
    }

    pub fn output(&self, e_label: usize, de_label: usize) -> Label {
        self.table[e_label][de_label]
    }
}

fn transpose(by_de: [[Label; 5]; 5]) -> [[Label; 5]; 5] {
    let mut out = by_de;
    for (i, row) in by_de.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

/// Complete fuzzy gain scheduler: weights, switch threshold, fallback gain,
/// input/output membership sets, rule base, and centroid resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyGainTuner {
    pub k_p: f64,
    pub k_d: f64,
    pub k_e: f64,
    pub k_const: f64,
    pub e_set: MfSet,
    pub de_set: MfSet,
    pub output_set: MfSet,
    pub rules: RuleBase,
    pub resolution: f64,
}

impl FuzzyGainTuner {
    pub fn new(
        k_p: f64,
        k_d: f64,
        k_e: f64,
        k_const: f64,
        output_set: MfSet,
    ) -> Result<Self, Error> {
        if !(k_p > 0.0 && k_d > 0.0) {
            return Err(Error::InvalidParameter(
                "input weights k_p, k_d must be positive".into(),
            ));
        }
        if !(k_e > 0.0) {
            return Err(Error::InvalidParameter(
                "switch threshold k_e must be positive".into(),
            ));
        }
        let e_set = MfSet::input_default();
        e_set.validate(0.0, 1.0)?;
        Ok(Self {
            k_p,
            k_d,
            k_e,
            k_const,
            e_set,
            de_set: e_set,
            output_set,
            rules: RuleBase::standard(),
            resolution: DEFAULT_RESOLUTION,
        })
    }

    /// Fire all 25 rules on normalized inputs; min AND, max aggregation per
    /// output label. Inputs are expected in [0, 1].
    pub fn infer(&self, e_norm: f64, de_norm: f64) -> [f64; 5] {
        let de_e = self.e_set.eval_all(e_norm);
        let de_de = self.de_set.eval_all(de_norm);
        let mut act = [0.0f64; 5];
        for (i, &we) in de_e.iter().enumerate() {
            if we == 0.0 {
                continue;
            }
            for (j, &wd) in de_de.iter().enumerate() {
                let w = we.min(wd);
                if w > 0.0 {
                    let out = self.rules.output(i, j) as usize;
                    act[out] = act[out].max(w);
                }
            }
        }
        act
    }

    /// Centroid of the max-of-clipped-labels aggregate on the discretized
    /// output universe.
    pub fn defuzzify_centroid(&self, activations: &[f64; 5]) -> Result<f64, Error> {
        let (lo, hi) = OUTPUT_UNIVERSE;
        let n = ((hi - lo) / self.resolution).round() as usize;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let mut m = 0.0f64;
            for (k, mf) in self.output_set.mfs.iter().enumerate() {
                if activations[k] > 0.0 {
                    m = m.max(activations[k].min(mf.eval(x)));
                }
            }
            num += x * m;
            den += m;
        }
        if den == 0.0 {
            return Err(Error::NoRuleFired);
        }
        Ok(num / den)
    }

    /// Normalized fuzzy inputs k_p|e|, k_d|ė| clamped to [0, 1].
    pub fn normalize(&self, e: f64, de: f64) -> (f64, f64) {
        (
            (self.k_p * e.abs()).clamp(0.0, 1.0),
            (self.k_d * de.abs()).clamp(0.0, 1.0),
        )
    }

    /// Scheduled gain: fuzzy pipeline when |e| exceeds the switch threshold,
    /// the constant fallback otherwise.
    pub fn select_gain(&self, e: f64, de: f64) -> f64 {
        if e.abs() <= self.k_e {
            return self.k_const;
        }
        let (en, dn) = self.normalize(e, de);
        let act = self.infer(en, dn);
        // Coverage of the input ladder guarantees at least one rule fires.
        self.defuzzify_centroid(&act)
            .expect("input coverage guarantees a fired rule")
    }
}

impl GainSource for FuzzyGainTuner {
    fn gain(&self, e: f64, de: f64) -> f64 {
        self.select_gain(e, de)
    }
}
