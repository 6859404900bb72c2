//! Small-scale fading, uplink pilot transmission with fractional power
//! control, and MMSE channel estimation under pilot contamination.
//!
//! Channels are i.i.d. Rayleigh: an `m`-antenna link with path gain `zeta`
//! has entries CN(0, zeta). Fading is block constant per drop: the vector
//! estimated from the uplink pilot is the one the downlink precoder then
//! faces (TDD reciprocity).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One circularly-symmetric complex Gaussian draw with the given variance.
pub(crate) fn draw_cn(variance: f64, rng: &mut impl Rng) -> Complex64 {
    let sd = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Fading vector of one BS-UE link together with its large-scale gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
    /// Large-scale path gain; per-entry power E|h_i|^2.
    pub gain: f64,
}

/// Draw an `m`-antenna Rayleigh channel with per-entry power `gain`.
pub fn draw_channel(gain: f64, m: usize, rng: &mut impl Rng) -> ChannelVector {
    let entries = (0..m).map(|_| draw_cn(gain, rng)).collect();
    ChannelVector { entries, gain }
}

/// Fractional uplink power control: transmit at `p_baseline * gain^-eps`,
/// fully inverting the path loss at `eps = 1` so the serving BS sees
/// `p_baseline` regardless of distance.
pub fn uplink_tx_power(serving_gain: f64, eps: f64, p_baseline_w: f64) -> Result<f64, Error> {
    if !(serving_gain > 0.0) || !serving_gain.is_finite() {
        return Err(Error::Domain(format!(
            "power control needs a positive finite serving gain, got {serving_gain}"
        )));
    }
    Ok(p_baseline_w * serving_gain.powf(-eps))
}

/// A same-pilot transmission overheard by the observing BS.
pub enum PilotContributor<'a> {
    /// The contributor's fading realization matters elsewhere in the drop
    /// (it is a measured UE), so its drawn vector enters the sum explicitly.
    Explicit { power_w: f64, channel: &'a ChannelVector },
    /// The contributor's fading appears nowhere else; only its mean received
    /// power matters, so it folds into one Gaussian with matching variance.
    /// Statistically identical to an explicit draw.
    Folded { power_w: f64, gain: f64 },
}

/// Received pilot signal at one BS for one pilot sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub vector: Vec<Complex64>,
    /// Sum of `power * gain` over all same-pilot contributors other than the
    /// serving UE; the interference statistic the MMSE filter conditions on.
    pub interference_power_w: f64,
}

/// Observe one pilot: the serving UE's pilot plus every same-pilot UE in
/// other cells, plus thermal noise.
pub fn observe_pilot(
    own_power_w: f64,
    own: &ChannelVector,
    others: &[PilotContributor<'_>],
    noise_w: f64,
    rng: &mut impl Rng,
) -> PilotObservation {
    let m = own.entries.len();
    let own_amp = own_power_w.sqrt();
    let mut vector: Vec<Complex64> = own.entries.iter().map(|&h| own_amp * h).collect();
    let mut interference_power_w = 0.0;
    let mut folded_var = noise_w;
    for c in others {
        match *c {
            PilotContributor::Explicit { power_w, channel } => {
                debug_assert_eq!(channel.entries.len(), m);
                let amp = power_w.sqrt();
                for (y, &h) in vector.iter_mut().zip(&channel.entries) {
                    *y += amp * h;
                }
                interference_power_w += power_w * channel.gain;
            }
            PilotContributor::Folded { power_w, gain } => {
                folded_var += power_w * gain;
                interference_power_w += power_w * gain;
            }
        }
    }
    if folded_var > 0.0 {
        for y in vector.iter_mut() {
            *y += draw_cn(folded_var, rng);
        }
    }
    PilotObservation { vector, interference_power_w }
}

/// Which terms the MMSE denominator carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmseDenominator {
    /// Full second moment of the observation: own signal + contamination +
    /// noise. The textbook linear MMSE filter.
    Standard,
    /// Contamination + noise only, reproducing a variant that drops the own
    /// signal term; biased high, diverges as contamination and noise vanish.
    AsPrinted,
}

/// Channel estimate and its error, `truth = estimate + error`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedChannel {
    pub estimate: Vec<Complex64>,
    pub error: Vec<Complex64>,
}

impl EstimatedChannel {
    /// Perfect channel state information: the estimate is the truth.
    pub fn perfect(truth: &ChannelVector) -> Self {
        EstimatedChannel {
            estimate: truth.entries.clone(),
            error: vec![Complex64::ZERO; truth.entries.len()],
        }
    }
}

/// Scale the pilot observation by the linear MMSE coefficient
/// `sqrt(P) * zeta / denom` for the serving UE's channel.
pub fn mmse_estimate(
    obs: &PilotObservation,
    own_power_w: f64,
    truth: &ChannelVector,
    noise_w: f64,
    mode: MmseDenominator,
) -> Result<EstimatedChannel, Error> {
    let own_term = own_power_w * truth.gain;
    let denom = match mode {
        MmseDenominator::Standard => own_term + obs.interference_power_w + noise_w,
        MmseDenominator::AsPrinted => obs.interference_power_w + noise_w,
    };
    let coeff = own_power_w.sqrt() * truth.gain / denom;
    if !coeff.is_finite() {
        return Err(Error::Domain(format!(
            "MMSE coefficient diverged (denominator {denom}); needs positive noise or interference"
        )));
    }
    let estimate: Vec<Complex64> = obs.vector.iter().map(|&y| coeff * y).collect();
    let error = truth
        .entries
        .iter()
        .zip(&estimate)
        .map(|(&h, &e)| h - e)
        .collect();
    Ok(EstimatedChannel { estimate, error })
}
