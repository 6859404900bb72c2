//! Parameter sweeps: a base operating point, one or two swept axes, an
//! optional training ablation, and the four built-in presets used by the
//! densification study.

use asesim_core::engine::SimConfig;
use serde::Deserialize;

use crate::config::{CliError, FileConfig};

/// Parameters a sweep axis may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Antennas per BS; with the antenna budget fixed this sets the BS
    /// density to `antenna_density / value`.
    AntennasPerBs,
    UeDensityPerKm2,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub base: FileConfig,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    /// Named ablations re-running the whole grid with one switch toggled;
    /// only "pilot-contamination" is defined.
    #[serde(default)]
    pub ablations: Vec<String>,
}

/// A fully resolved sweep: base point plus axes.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub ablate_pilot_contamination: bool,
}

/// One grid point, ready to run.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub cfg: SimConfig,
}

fn apply(cfg: &mut SimConfig, axis: &Axis, value: f64) -> Result<(), CliError> {
    match axis.parameter {
        SweepParameter::AntennasPerBs => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(CliError::Config(format!(
                    "antennas-per-bs values must be positive integers, got {value}"
                )));
            }
            cfg.antennas_per_bs = value as usize;
        }
        SweepParameter::UeDensityPerKm2 => cfg.ue_density_km2 = value,
    }
    Ok(())
}

impl SweepSpec {
    pub fn from_file(file: SweepFile) -> Result<Self, CliError> {
        let mut ablate = false;
        for name in &file.ablations {
            match name.as_str() {
                "pilot-contamination" => ablate = true,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown ablation {other:?}; available: \"pilot-contamination\""
                    )))
                }
            }
        }
        let spec = SweepSpec {
            base: file.base.into_sim()?,
            axis1: file.axis1,
            axis2: file.axis2,
            ablate_pilot_contamination: ablate,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        for axis in std::iter::once(&self.axis1).chain(self.axis2.as_ref()) {
            if axis.values.is_empty() {
                return Err(CliError::Config("sweep axis has an empty value list".into()));
            }
        }
        if let Some(a2) = &self.axis2 {
            if a2.parameter == self.axis1.parameter {
                return Err(CliError::Config(
                    "the two sweep axes must vary different parameters".into(),
                ));
            }
        }
        // Surface bad grid points now, not hours into a run.
        self.grid().map(|_| ())
    }

    /// Expand to concrete run configurations, ordered axis1-major, then
    /// axis2, with the contamination ablation innermost (on, then off).
    pub fn grid(&self) -> Result<Vec<GridPoint>, CliError> {
        let axis2_values: &[Option<f64>] = &match &self.axis2 {
            Some(a) => a.values.iter().copied().map(Some).collect::<Vec<_>>(),
            None => vec![None],
        };
        let mut out = Vec::new();
        for &v1 in &self.axis1.values {
            for &v2 in axis2_values {
                let mut cfg = self.base.clone();
                apply(&mut cfg, &self.axis1, v1)?;
                if let (Some(a2), Some(v)) = (&self.axis2, v2) {
                    apply(&mut cfg, a2, v)?;
                }
                cfg.validate()?;
                let variants: &[bool] = if self.ablate_pilot_contamination {
                    &[cfg.pilot_contamination, !cfg.pilot_contamination]
                } else {
                    &[cfg.pilot_contamination]
                };
                for &on in variants {
                    let mut c = cfg.clone();
                    c.pilot_contamination = on;
                    out.push(GridPoint { cfg: c });
                }
            }
        }
        Ok(out)
    }
}

const RHO_AXIS: [f64; 10] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 300.0, 600.0];

/// Built-in sweeps of the densification study. `fig1`/`fig2` sweep UE density
/// for a handful of antenna splits at 500 and 1000 antennas/km²; `fig3`
/// sweeps the split against UE density at 1000 antennas/km²; `fig4` is `fig3`
/// with the pilot-contamination ablation.
pub fn preset(name: &str) -> Result<SweepSpec, CliError> {
    let spec = match name {
        "fig1" => SweepSpec {
            base: SimConfig::baseline(500.0, 1, 600.0),
            axis1: Axis {
                parameter: SweepParameter::AntennasPerBs,
                values: vec![100.0, 50.0, 10.0, 5.0, 1.0],
            },
            axis2: Some(Axis {
                parameter: SweepParameter::UeDensityPerKm2,
                values: RHO_AXIS.to_vec(),
            }),
            ablate_pilot_contamination: false,
        },
        "fig2" => SweepSpec {
            base: SimConfig::baseline(1000.0, 1, 600.0),
            axis1: Axis {
                parameter: SweepParameter::AntennasPerBs,
                values: vec![200.0, 100.0, 20.0, 10.0, 2.0, 1.0],
            },
            axis2: Some(Axis {
                parameter: SweepParameter::UeDensityPerKm2,
                values: RHO_AXIS.to_vec(),
            }),
            ablate_pilot_contamination: false,
        },
        "fig3" | "fig4" => SweepSpec {
            base: SimConfig::baseline(1000.0, 1, 600.0),
            axis1: Axis {
                parameter: SweepParameter::AntennasPerBs,
                values: vec![2.0, 4.0, 8.0, 10.0, 16.0, 20.0, 40.0, 100.0, 200.0],
            },
            axis2: Some(Axis {
                parameter: SweepParameter::UeDensityPerKm2,
                values: vec![50.0, 100.0, 300.0, 600.0],
            }),
            ablate_pilot_contamination: name == "fig4",
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown preset {other:?}; available: fig1, fig2, fig3, fig4"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}
