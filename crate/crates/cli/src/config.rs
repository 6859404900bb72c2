//! Configuration files: a flat key-value TOML schema with units spelled out
//! in the key names. Everything is converted to linear/watt units here, at
//! parse time, so the simulation core never sees a dB value.

use std::fmt;
use std::path::Path;

use asesim_core::engine::{dbm_to_watts, db_to_linear, DensitySource, SimConfig};
use asesim_core::channel::MmseDenominator;
use asesim_core::metrics::StreamWeighting;
use serde::Deserialize;

/// Errors split by exit code: configuration problems exit 2, runtime
/// failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<asesim_core::Error> for CliError {
    fn from(e: asesim_core::Error) -> Self {
        match e {
            asesim_core::Error::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MmseMode {
    #[default]
    Standard,
    AsPrinted,
}

/// What the ASE area factor counts: every scheduled stream, or one stream
/// per active cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMode {
    #[default]
    Streams,
    Cells,
}

/// Where the active-cell density comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaSource {
    #[default]
    Measured,
    ClosedForm,
}

fn d_q() -> f64 {
    3.5
}
fn d_side() -> f64 {
    4.0
}
fn d_mp() -> usize {
    1
}
fn d_kt() -> usize {
    20
}
fn d_ptx() -> f64 {
    24.0
}
fn d_noise() -> f64 {
    -95.0
}
fn d_pue() -> f64 {
    10.0
}
fn d_eps() -> f64 {
    1.0
}
fn d_true() -> bool {
    true
}
fn d_g0() -> f64 {
    0.0
}
fn d_drops() -> u32 {
    10_000
}
fn d_seed() -> u64 {
    1
}

/// One operating point as written in a config file. The BS split is given
/// either as `antennas_per_bs` or as `bs_density_per_km2` (exactly one).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub antenna_density_per_km2: f64,
    pub antennas_per_bs: Option<u32>,
    pub bs_density_per_km2: Option<f64>,
    pub ue_density_per_km2: f64,
    #[serde(default = "d_q")]
    pub load_model_q: f64,
    #[serde(default = "d_side")]
    pub window_side_km: f64,
    #[serde(default = "d_mp")]
    pub measurement_points: usize,
    #[serde(default = "d_kt")]
    pub pilot_count: usize,
    #[serde(default = "d_ptx")]
    pub p_bs_tx_dbm: f64,
    #[serde(default = "d_noise")]
    pub noise_dbm: f64,
    #[serde(default = "d_pue")]
    pub p_ue_baseline_dbm: f64,
    #[serde(default = "d_eps")]
    pub power_control_eps: f64,
    #[serde(default = "d_true")]
    pub pilot_contamination: bool,
    #[serde(default)]
    pub mmse_denominator: MmseMode,
    #[serde(default = "d_g0")]
    pub gamma0_db: f64,
    #[serde(default)]
    pub density_mode: DensityMode,
    #[serde(default)]
    pub lambda_source: LambdaSource,
    #[serde(default = "d_drops")]
    pub n_drops: u32,
    #[serde(default = "d_seed")]
    pub master_seed: u64,
}

impl FileConfig {
    /// Resolve the antenna split and convert units into a core config.
    pub fn into_sim(self) -> Result<SimConfig, CliError> {
        let budget = match (self.antennas_per_bs, self.bs_density_per_km2) {
            (Some(m), None) => asesim_core::network::DeploymentBudget::from_antennas_per_bs(
                self.antenna_density_per_km2,
                m as usize,
            )?,
            (None, Some(lambda)) => asesim_core::network::DeploymentBudget::from_bs_density(
                self.antenna_density_per_km2,
                lambda,
            )?,
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either antennas_per_bs or bs_density_per_km2, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "the BS split needs antennas_per_bs or bs_density_per_km2".into(),
                ))
            }
        };
        let mut cfg = SimConfig::baseline(
            budget.antenna_density_km2,
            budget.antennas_per_bs,
            self.ue_density_per_km2,
        );
        cfg.load_model_q = self.load_model_q;
        cfg.window = asesim_core::geometry::Window::new(self.window_side_km);
        cfg.measurement_points = self.measurement_points;
        cfg.pilot_count = self.pilot_count;
        cfg.p_bs_tx_w = dbm_to_watts(self.p_bs_tx_dbm);
        cfg.noise_dl_w = dbm_to_watts(self.noise_dbm);
        cfg.noise_ul_w = dbm_to_watts(self.noise_dbm);
        cfg.p_ue_w = dbm_to_watts(self.p_ue_baseline_dbm);
        cfg.power_control_eps = self.power_control_eps;
        cfg.pilot_contamination = self.pilot_contamination;
        cfg.mmse_denominator = match self.mmse_denominator {
            MmseMode::Standard => MmseDenominator::Standard,
            MmseMode::AsPrinted => MmseDenominator::AsPrinted,
        };
        cfg.gamma0_linear = db_to_linear(self.gamma0_db);
        cfg.weighting = match self.density_mode {
            DensityMode::Streams => StreamWeighting::ScheduledStreams,
            DensityMode::Cells => StreamWeighting::ActiveCells,
        };
        cfg.density_source = match self.lambda_source {
            LambdaSource::Measured => DensitySource::Measured,
            LambdaSource::ClosedForm => DensitySource::ClosedForm,
        };
        cfg.n_drops = self.n_drops;
        cfg.master_seed = self.master_seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
}

/// Load, parse, resolve and validate a single-point config file.
pub fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    parse_config(&read_file(path)?)?.into_sim()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "antenna_density_per_km2 = 1000.0\n\
                           antennas_per_bs = 10\n\
                           ue_density_per_km2 = 100.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap().into_sim().unwrap();
        assert_eq!(cfg.bs_density_km2(), 100.0);
        assert_eq!(cfg.load_model_q, 3.5);
        assert_eq!(cfg.window.side_km, 4.0);
        assert_eq!(cfg.pilot_count, 20);
        assert!((cfg.p_bs_tx_w - 0.251188643150958).abs() < 1e-15);
        assert!((cfg.noise_dl_w - 3.16227766016838e-13).abs() < 1e-27);
        assert_eq!(cfg.noise_ul_w, cfg.noise_dl_w);
        assert!((cfg.p_ue_w - 0.01).abs() < 1e-17);
        assert_eq!(cfg.power_control_eps, 1.0);
        assert!(cfg.pilot_contamination);
        assert_eq!(cfg.mmse_denominator, MmseDenominator::Standard);
        assert_eq!(cfg.gamma0_linear, 1.0);
        assert_eq!(cfg.weighting, StreamWeighting::ScheduledStreams);
        assert_eq!(cfg.density_source, DensitySource::Measured);
        assert_eq!(cfg.n_drops, 10_000);
        assert_eq!(cfg.master_seed, 1);
    }

    #[test]
    fn bs_density_route_requires_integer_split() {
        let ok = "antenna_density_per_km2 = 500.0\n\
                  bs_density_per_km2 = 5.0\n\
                  ue_density_per_km2 = 10.0\n";
        let cfg = parse_config(ok).unwrap().into_sim().unwrap();
        assert_eq!(cfg.antennas_per_bs, 100);

        let bad = "antenna_density_per_km2 = 1000.0\n\
                   bs_density_per_km2 = 30.0\n\
                   ue_density_per_km2 = 10.0\n";
        let err = parse_config(bad).unwrap().into_sim().unwrap_err();
        let msg = err.to_string();
        assert!(err.exit_code() == 2);
        assert!(msg.contains("1000") && msg.contains("30"), "unhelpful message: {msg}");
    }

    #[test]
    fn split_must_be_given_exactly_once() {
        let both = format!("{MINIMAL}bs_density_per_km2 = 100.0\n");
        assert!(parse_config(&both).unwrap().into_sim().is_err());
        let neither = "antenna_density_per_km2 = 1000.0\nue_density_per_km2 = 1.0\n";
        assert!(parse_config(neither).unwrap().into_sim().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}p_bs_tx_w = 0.25\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("p_bs_tx_w"));
    }

    #[test]
    fn unit_suffixed_overrides_convert_at_parse_time() {
        let text = format!(
            "{MINIMAL}\
             p_bs_tx_dbm = 30.0\n\
             noise_dbm = -90.0\n\
             gamma0_db = 3.0\n\
             mmse_denominator = \"as-printed\"\n\
             density_mode = \"cells\"\n\
             lambda_source = \"closed-form\"\n\
             pilot_contamination = false\n"
        );
        let cfg = parse_config(&text).unwrap().into_sim().unwrap();
        assert!((cfg.p_bs_tx_w - 1.0).abs() < 1e-12);
        assert!((cfg.noise_dl_w - 1e-12).abs() < 1e-24);
        assert!((cfg.gamma0_linear - 1.99526231496888).abs() < 1e-12);
        assert_eq!(cfg.mmse_denominator, MmseDenominator::AsPrinted);
        assert_eq!(cfg.weighting, StreamWeighting::ActiveCells);
        assert_eq!(cfg.density_source, DensitySource::ClosedForm);
        assert!(!cfg.pilot_contamination);
    }

    #[test]
    fn core_validation_failures_exit_as_config_errors() {
        let text = format!("{MINIMAL}n_drops = 0\n");
        let err = parse_config(&text).unwrap().into_sim().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
