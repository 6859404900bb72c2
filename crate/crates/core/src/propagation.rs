//! Distance-dependent propagation: 3-D link distance, piecewise path loss
//! with separate line-of-sight (LoS) and non-line-of-sight (NLoS) branches,
//! and random LoS materialization.
//!
//! Gains are dimensionless linear power ratios; distances are in km. A link's
//! LoS/NLoS state is drawn once per drop from the distance-dependent LoS
//! probability, then reused for uplink training and downlink data of that
//! drop (block fading).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// 3-D separation of a BS-UE pair with planar distance `r_km` and fixed
/// height difference `h_km` between BS antennas and UE antennas.
pub fn dist_3d(r_km: f64, h_km: f64) -> f64 {
    (r_km * r_km + h_km * h_km).sqrt()
}

/// One segment of a piecewise path loss law, valid for 3-D distances up to
/// `max_dist_km`. Each branch is a power law `a * w^-alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSegment {
    /// Upper edge of this segment's 3-D distance range; the last segment must
    /// be unbounded (`f64::INFINITY`).
    pub max_dist_km: f64,
    pub a_los: f64,
    pub alpha_los: f64,
    pub a_nlos: f64,
    pub alpha_nlos: f64,
}

impl PathLossSegment {
    pub(crate) fn gain(&self, w_km: f64, is_los: bool) -> f64 {
        if is_los {
            self.a_los * w_km.powf(-self.alpha_los)
        } else {
            self.a_nlos * w_km.powf(-self.alpha_nlos)
        }
    }
}

/// Probability that a link of 3-D distance `w` is LoS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LosProbabilityModel {
    /// Two-piece exponential form used for urban micro deployments:
    /// `0.5 - min(0.5, 5 e^(-d_far/w)) + min(0.5, 5 e^(-w/d_near))`.
    /// Near-certain LoS below ~d_near, exponentially rare beyond ~d_far.
    TwoPieceExponential { d_far_km: f64, d_near_km: f64 },
    /// Fixed probability regardless of distance (diagnostics and tests).
    Constant { p: f64 },
}

impl LosProbabilityModel {
    pub fn probability(&self, w_km: f64) -> f64 {
        match *self {
            LosProbabilityModel::TwoPieceExponential { d_far_km, d_near_km } => {
                // Each min() saturates at 0.5 on a known side of a distance
                // threshold, so most links need at most one exponential. This
                // runs once per candidate link in the association scan.
                use std::f64::consts::LN_10;
                let far = if w_km >= d_far_km / LN_10 {
                    0.5
                } else {
                    5.0 * (-d_far_km / w_km).exp()
                };
                let near = if w_km <= d_near_km * LN_10 {
                    0.5
                } else {
                    5.0 * (-w_km / d_near_km).exp()
                };
                0.5 - far + near
            }
            LosProbabilityModel::Constant { p } => p,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        match *self {
            LosProbabilityModel::TwoPieceExponential { d_far_km, d_near_km } => {
                if !(d_far_km > 0.0 && d_far_km.is_finite() && d_near_km > 0.0 && d_near_km.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "LoS probability scales must be positive and finite, got d_far={d_far_km} d_near={d_near_km}"
                    )));
                }
            }
            LosProbabilityModel::Constant { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidConfig(format!(
                        "constant LoS probability must lie in [0,1], got {p}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Materialized state of one BS-UE link for one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub dist_2d_km: f64,
    pub dist_3d_km: f64,
    pub is_los: bool,
    /// Linear path gain (<= 1 in any sane configuration).
    pub gain: f64,
}

/// Piecewise LoS/NLoS path loss model plus the LoS probability law and the
/// BS-UE antenna height difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    /// Segments ordered by increasing `max_dist_km`; the last is unbounded.
    pub segments: Vec<PathLossSegment>,
    pub height_diff_km: f64,
    pub los: LosProbabilityModel,
}

impl PathLossModel {
    /// Urban micro defaults: LoS 103.8 + 20.9 log10(w) dB, NLoS
    /// 145.4 + 37.5 log10(w) dB, 8.5 m height difference.
    pub fn urban_micro() -> Self {
        PathLossModel {
            segments: vec![PathLossSegment {
                max_dist_km: f64::INFINITY,
                a_los: 10f64.powf(-10.38),
                alpha_los: 2.09,
                a_nlos: 10f64.powf(-14.54),
                alpha_nlos: 3.75,
            }],
            height_diff_km: 0.0085,
            los: LosProbabilityModel::TwoPieceExponential { d_far_km: 0.156, d_near_km: 0.03 },
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.segments.is_empty() {
            return Err(Error::InvalidConfig("path loss model needs at least one segment".into()));
        }
        let mut prev = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            if s.max_dist_km <= prev {
                return Err(Error::InvalidConfig(format!(
                    "path loss segment {i} upper edge {} does not increase past {prev}",
                    s.max_dist_km
                )));
            }
            prev = s.max_dist_km;
            for (name, v) in [("a_los", s.a_los), ("a_nlos", s.a_nlos)] {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "path loss segment {i}: {name} must be positive and finite, got {v}"
                    )));
                }
            }
            for (name, v) in [("alpha_los", s.alpha_los), ("alpha_nlos", s.alpha_nlos)] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "path loss segment {i}: {name} must be non-negative and finite, got {v}"
                    )));
                }
            }
        }
        if self.segments.last().unwrap().max_dist_km != f64::INFINITY {
            return Err(Error::InvalidConfig("last path loss segment must be unbounded".into()));
        }
        if !(self.height_diff_km >= 0.0) || !self.height_diff_km.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "height difference must be non-negative and finite, got {}",
                self.height_diff_km
            )));
        }
        self.los.validate()
    }

    fn segment_for(&self, w_km: f64) -> &PathLossSegment {
        // Single segment in the default model; linear scan is fine for small N.
        self.segments
            .iter()
            .find(|s| w_km <= s.max_dist_km)
            .expect("last segment is unbounded")
    }

    /// Linear path gain of the given branch at 3-D distance `w_km`.
    /// Distances below the height difference are unreachable for any planar
    /// separation and are rejected.
    pub fn path_loss(&self, w_km: f64, is_los: bool) -> Result<f64, Error> {
        if w_km < self.height_diff_km || !w_km.is_finite() {
            return Err(Error::Domain(format!(
                "3-D distance {w_km} km below the BS-UE height difference {} km",
                self.height_diff_km
            )));
        }
        Ok(self.segment_for(w_km).gain(w_km, is_los))
    }

    pub fn los_probability(&self, w_km: f64) -> f64 {
        self.los.probability(w_km)
    }

    /// Draw the link state for a pair at planar distance `r_km`: lift to 3-D,
    /// flip the LoS coin, evaluate the realized branch.
    pub fn materialize_link(&self, r_km: f64, rng: &mut impl Rng) -> LinkState {
        let w = dist_3d(r_km, self.height_diff_km);
        let p = self.los.probability(w);
        let is_los = rng.random::<f64>() < p;
        LinkState {
            dist_2d_km: r_km,
            dist_3d_km: w,
            is_los,
            gain: self.segment_for(w).gain(w, is_los),
        }
    }

    /// Upper bound on the gain any link at 3-D distance >= `w_km` can realize,
    /// whatever branch it draws. Within a segment both branches decrease with
    /// distance, so the supremum over [w, inf) is attained at `w` or at the
    /// left edge of a later segment.
    pub fn gain_bound_beyond(&self, w_km: f64) -> f64 {
        let w = w_km.max(self.height_diff_km);
        let mut bound: f64 = 0.0;
        let mut prev_edge = 0.0;
        for s in &self.segments {
            if s.max_dist_km >= w {
                let at = w.max(prev_edge);
                bound = bound.max(s.gain(at, true)).max(s.gain(at, false));
            }
            prev_edge = s.max_dist_km;
        }
        bound
    }
}
