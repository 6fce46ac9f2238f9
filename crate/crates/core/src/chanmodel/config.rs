use std::fmt;

use serde::{Deserialize, Serialize};

use super::{sample_period_to_us, ChannelError};

/// Planar base station array. Antenna index `m = row * cols_azimuth + col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub rows_elevation: usize,
    pub cols_azimuth: usize,
    /// In carrier wavelengths.
    #[serde(default = "default_element_spacing")]
    pub element_spacing: f64,
}

fn default_element_spacing() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn new(rows_elevation: usize, cols_azimuth: usize) -> Self {
        Self {
            rows_elevation,
            cols_azimuth,
            element_spacing: default_element_spacing(),
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.rows_elevation * self.cols_azimuth
    }

    /// Element position in meters. The array lies in the x–z plane centred on
    /// the origin: azimuth runs along x, elevation along z, broadside is +y.
    pub fn element_position(&self, m: usize, wavelength: f64) -> [f64; 3] {
        let row = (m / self.cols_azimuth) as f64;
        let col = (m % self.cols_azimuth) as f64;
        let pitch = self.element_spacing * wavelength;
        [
            (col - (self.cols_azimuth as f64 - 1.0) / 2.0) * pitch,
            0.0,
            (row - (self.rows_elevation as f64 - 1.0) / 2.0) * pitch,
        ]
    }

    /// Antenna indices of the leftmost `cols` azimuth columns across every
    /// elevation row.
    pub fn leftmost_columns(&self, cols: usize) -> Vec<usize> {
        (0..self.rows_elevation)
            .flat_map(|r| (0..cols).map(move |c| r * self.cols_azimuth + c))
            .collect()
    }

    fn validate(&self) -> Result<(), ChannelError> {
        if self.rows_elevation == 0 || self.cols_azimuth == 0 {
            return Err(ChannelError::Config {
                field: "geometry",
                message: "rows_elevation and cols_azimuth must both be >= 1".into(),
            });
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(ChannelError::Config {
                field: "geometry.element_spacing",
                message: format!("must be > 0, got {}", self.element_spacing),
            });
        }
        Ok(())
    }
}

/// A terminal moving in a straight line at constant velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalTrajectory {
    /// Meters.
    pub initial_position: [f64; 3],
    /// Meters per second.
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default = "default_num_antennas")]
    pub num_antennas: usize,
    /// Displacement of the second antenna from the first, in meters. Only
    /// used when `num_antennas == 2`.
    #[serde(default = "default_antenna_offset")]
    pub antenna_offset: [f64; 3],
}

fn default_num_antennas() -> usize {
    1
}

fn default_antenna_offset() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl TerminalTrajectory {
    pub fn new(initial_position: [f64; 3], velocity: [f64; 3]) -> Self {
        Self {
            initial_position,
            velocity,
            num_antennas: 1,
            antenna_offset: default_antenna_offset(),
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Position of antenna `a` at time `time` seconds.
    pub fn antenna_position(&self, a: usize, time: f64) -> [f64; 3] {
        let mut p = [0.0; 3];
        for i in 0..3 {
            p[i] = self.initial_position[i] + time * self.velocity[i];
            if a == 1 {
                p[i] += self.antenna_offset[i];
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModel {
    #[default]
    LosGeometric,
    Jakes,
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelModel::LosGeometric => "los-geometric",
            ChannelModel::Jakes => "jakes",
        })
    }
}

/// Scenario description; its JSON form uses these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: ArrayGeometry,
    pub terminals: Vec<TerminalTrajectory>,
    #[serde(default = "default_num_blocks")]
    pub num_blocks: usize,
    pub num_snapshots: usize,
    /// Seconds between snapshots.
    #[serde(default = "default_sample_period")]
    pub sample_period: f64,
    /// Meters.
    #[serde(default = "default_wavelength")]
    pub carrier_wavelength: f64,
    #[serde(default)]
    pub model: ChannelModel,
    #[serde(default)]
    pub doppler_hz: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Carrier spacing between consecutive resource blocks (LOS model).
    #[serde(default = "default_block_bandwidth")]
    pub block_bandwidth_hz: f64,
    /// Sinusoids per Jakes path.
    #[serde(default = "default_num_sinusoids")]
    pub num_sinusoids: usize,
    #[serde(default = "default_true")]
    pub nyquist_check: bool,
    #[serde(default = "default_max_speed")]
    pub max_speed_mps: f64,
}

fn default_num_blocks() -> usize {
    1
}
fn default_sample_period() -> f64 {
    0.005
}
fn default_wavelength() -> f64 {
    0.081
}
fn default_block_bandwidth() -> f64 {
    300e3
}
fn default_num_sinusoids() -> usize {
    64
}
fn default_true() -> bool {
    true
}
fn default_max_speed() -> f64 {
    8.06
}

impl ScenarioConfig {
    /// LOS scenario with the sounding defaults (5 ms, λ = 0.081 m).
    pub fn los(
        geometry: ArrayGeometry,
        terminals: Vec<TerminalTrajectory>,
        num_snapshots: usize,
    ) -> Self {
        Self {
            geometry,
            terminals,
            num_blocks: 1,
            num_snapshots,
            sample_period: default_sample_period(),
            carrier_wavelength: default_wavelength(),
            model: ChannelModel::LosGeometric,
            doppler_hz: 0.0,
            rng_seed: 0,
            block_bandwidth_hz: default_block_bandwidth(),
            num_sinusoids: default_num_sinusoids(),
            nyquist_check: true,
            max_speed_mps: default_max_speed(),
        }
    }

    /// Total user streams K; dual-antenna terminals count twice.
    pub fn num_streams(&self) -> usize {
        self.terminals.iter().map(|t| t.num_antennas).sum()
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        self.geometry.validate()?;
        if self.terminals.is_empty() {
            return Err(ChannelError::Config {
                field: "terminals",
                message: "at least one terminal is required".into(),
            });
        }
        if let Some(t) = self
            .terminals
            .iter()
            .find(|t| !(1..=2).contains(&t.num_antennas))
        {
            return Err(ChannelError::Config {
                field: "terminals.num_antennas",
                message: format!("must be 1 or 2, got {}", t.num_antennas),
            });
        }
        let streams = self.num_streams();
        let antennas = self.geometry.num_antennas();
        if streams > antennas {
            return Err(ChannelError::TooManyStreams { streams, antennas });
        }
        if self.num_blocks == 0 {
            return Err(ChannelError::Config {
                field: "num_blocks",
                message: "must be >= 1".into(),
            });
        }
        if self.num_snapshots < 2 {
            return Err(ChannelError::Config {
                field: "num_snapshots",
                message: format!("must be >= 2, got {}", self.num_snapshots),
            });
        }
        sample_period_to_us(self.sample_period)?;
        if !(self.carrier_wavelength > 0.0 && self.carrier_wavelength.is_finite()) {
            return Err(ChannelError::ZeroWavelength);
        }
        match self.model {
            ChannelModel::LosGeometric => {
                if !(self.block_bandwidth_hz >= 0.0 && self.block_bandwidth_hz.is_finite()) {
                    return Err(ChannelError::Config {
                        field: "block_bandwidth_hz",
                        message: "must be >= 0".into(),
                    });
                }
                if self.nyquist_check {
                    if let Some((i, t)) = self
                        .terminals
                        .iter()
                        .enumerate()
                        .find(|(_, t)| t.speed() > self.max_speed_mps)
                    {
                        return Err(ChannelError::Config {
                            field: "terminals.velocity",
                            message: format!(
                                "terminal {i} moves at {:.4} m/s, above max_speed_mps {} (spatial Nyquist limit)",
                                t.speed(),
                                self.max_speed_mps
                            ),
                        });
                    }
                }
            }
            ChannelModel::Jakes => {
                if !(self.doppler_hz > 0.0) {
                    return Err(ChannelError::NonPositiveDoppler(self.doppler_hz));
                }
                if self.num_sinusoids == 0 {
                    return Err(ChannelError::Config {
                        field: "num_sinusoids",
                        message: "must be >= 1".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_fill_in() {
        let cfg: ScenarioConfig = serde_json::from_str(
            r#"{
                "geometry": {"rows_elevation": 4, "cols_azimuth": 25},
                "terminals": [{"initial_position": [0, 20, 0], "velocity": [8, 0, 0]}],
                "num_snapshots": 10
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.sample_period, 0.005);
        assert_eq!(cfg.carrier_wavelength, 0.081);
        assert_eq!(cfg.model, ChannelModel::LosGeometric);
        assert_eq!(cfg.geometry.element_spacing, 0.5);
        assert_eq!(cfg.num_sinusoids, 64);
        cfg.validate().unwrap();
    }

    #[test]
    fn model_names_are_kebab_case() {
        let m: ChannelModel = serde_json::from_str("\"jakes\"").unwrap();
        assert_eq!(m, ChannelModel::Jakes);
        assert_eq!(
            serde_json::to_string(&ChannelModel::LosGeometric).unwrap(),
            "\"los-geometric\""
        );
    }

    #[test]
    fn too_many_streams_is_rejected() {
        let mut t = TerminalTrajectory::new([0.0, 10.0, 0.0], [0.0; 3]);
        t.num_antennas = 2;
        let cfg = ScenarioConfig::los(ArrayGeometry::new(1, 3), vec![t, t], 4);
        assert_eq!(
            cfg.validate(),
            Err(ChannelError::TooManyStreams {
                streams: 4,
                antennas: 3
            })
        );
    }

    #[test]
    fn nyquist_speed_limit() {
        let fast = TerminalTrajectory::new([0.0, 10.0, 0.0], [9.0, 0.0, 0.0]);
        let mut cfg = ScenarioConfig::los(ArrayGeometry::new(1, 4), vec![fast], 4);
        assert!(matches!(
            cfg.validate(),
            Err(ChannelError::Config {
                field: "terminals.velocity",
                ..
            })
        ));
        cfg.nyquist_check = false;
        cfg.validate().unwrap();
        // 8.06 m/s over 5 ms stays within half a wavelength
        assert!(8.06 * 0.005 <= 0.081 / 2.0);
    }

    #[test]
    fn element_positions_are_centred() {
        let g = ArrayGeometry::new(2, 3);
        let p0 = g.element_position(0, 0.1);
        let p5 = g.element_position(5, 0.1);
        assert!((p0[0] + 0.05).abs() < 1e-15 && (p0[2] + 0.025).abs() < 1e-15);
        assert!((p5[0] - 0.05).abs() < 1e-15 && (p5[2] - 0.025).abs() < 1e-15);
        assert_eq!(g.leftmost_columns(2), vec![0, 1, 3, 4]);
    }
}
