//! Synthetic channel traces.
//!
//! A [`ChannelTrace`] is a dense `[time][block][user][antenna]` tensor of
//! complex channel coefficients plus the sounding metadata needed to turn
//! sample lags into durations and displacements. Traces come from either a
//! single-ray geometric LOS model with moving terminals ([`generate_los`])
//! or a sum-of-sinusoids Rayleigh model ([`generate_jakes`]), and are
//! persisted in the `MMCT` binary format (see [`format`]).

mod config;
pub mod format;
mod jakes;
mod los;

use num_complex::Complex64;
use thiserror::Error;

use crate::numkit::ComplexMatrix;

pub use config::{ArrayGeometry, ChannelModel, ScenarioConfig, TerminalTrajectory};
pub use format::{read_trace, write_trace, FormatError};
pub use jakes::generate_jakes;
pub use los::generate_los;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid config field `{field}`: {message}")]
    Config {
        field: &'static str,
        message: String,
    },
    #[error("{streams} user streams exceed {antennas} base station antennas (K <= M required)")]
    TooManyStreams { streams: usize, antennas: usize },
    #[error("carrier wavelength must be positive and finite")]
    ZeroWavelength,
    #[error("doppler_hz must be > 0 for the jakes model, got {0}")]
    NonPositiveDoppler(f64),
    #[error("model mismatch: expected {expected}, config has {found}")]
    WrongModel {
        expected: ChannelModel,
        found: ChannelModel,
    },
    #[error("user {user} on block {block} has an all-zero channel")]
    ZeroChannel { user: usize, block: usize },
    #[error("trace shape: {0}")]
    Shape(String),
}

/// Trace dimensions: snapshots T, blocks B, user streams K, antennas M.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceDims {
    pub snapshots: usize,
    pub blocks: usize,
    pub users: usize,
    pub antennas: usize,
}

impl TraceDims {
    pub fn len(&self) -> usize {
        self.snapshots * self.blocks * self.users * self.antennas
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    dims: TraceDims,
    sample_period_us: u32,
    wavelength: f64,
    data: Vec<Complex64>,
}

impl ChannelTrace {
    pub fn new(
        dims: TraceDims,
        sample_period_us: u32,
        wavelength: f64,
        data: Vec<Complex64>,
    ) -> Result<Self, ChannelError> {
        if dims.snapshots == 0 || dims.blocks == 0 || dims.users == 0 || dims.antennas == 0 {
            return Err(ChannelError::Shape(format!(
                "all dimensions must be >= 1, got {dims:?}"
            )));
        }
        if data.len() != dims.len() {
            return Err(ChannelError::Shape(format!(
                "expected {} entries for {dims:?}, got {}",
                dims.len(),
                data.len()
            )));
        }
        if sample_period_us == 0 {
            return Err(ChannelError::Shape("sample period must be >= 1 us".into()));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(ChannelError::ZeroWavelength);
        }
        if let Some(i) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(ChannelError::Shape(format!(
                "non-finite entry at flat index {i}"
            )));
        }
        Ok(Self {
            dims,
            sample_period_us,
            wavelength,
            data,
        })
    }

    pub fn dims(&self) -> TraceDims {
        self.dims
    }

    pub fn sample_period_us(&self) -> u32 {
        self.sample_period_us
    }

    /// Sounding period in seconds.
    pub fn sample_period(&self) -> f64 {
        f64::from(self.sample_period_us) / 1e6
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    fn offset(&self, t: usize, b: usize, k: usize) -> usize {
        let d = &self.dims;
        ((t * d.blocks + b) * d.users + k) * d.antennas
    }

    /// Channel row `h_{k,b}(t)` across all antennas.
    #[inline]
    pub fn user_channel(&self, t: usize, b: usize, k: usize) -> &[Complex64] {
        let o = self.offset(t, b, k);
        &self.data[o..o + self.dims.antennas]
    }

    #[inline]
    pub fn get(&self, t: usize, b: usize, k: usize, m: usize) -> Complex64 {
        self.data[self.offset(t, b, k) + m]
    }

    /// K×M channel matrix `H_b(t)`.
    pub fn snapshot(&self, t: usize, b: usize) -> ComplexMatrix {
        let o = self.offset(t, b, 0);
        let n = self.dims.users * self.dims.antennas;
        ComplexMatrix::new(
            self.dims.users,
            self.dims.antennas,
            self.data[o..o + n].to_vec(),
        )
        .expect("trace entries are finite by construction")
    }

    /// Returns a trace restricted to the given antenna indices, in the given order.
    pub fn select_antennas(&self, antennas: &[usize]) -> Result<ChannelTrace, ChannelError> {
        if antennas.is_empty() {
            return Err(ChannelError::Shape("antenna selection is empty".into()));
        }
        if let Some(&bad) = antennas.iter().find(|&&m| m >= self.dims.antennas) {
            return Err(ChannelError::Shape(format!(
                "antenna {bad} out of range for M = {}",
                self.dims.antennas
            )));
        }
        let dims = TraceDims {
            antennas: antennas.len(),
            ..self.dims
        };
        let mut data = Vec::with_capacity(dims.len());
        for t in 0..dims.snapshots {
            for b in 0..dims.blocks {
                for k in 0..dims.users {
                    let row = self.user_channel(t, b, k);
                    data.extend(antennas.iter().map(|&m| row[m]));
                }
            }
        }
        ChannelTrace::new(dims, self.sample_period_us, self.wavelength, data)
    }

    /// Multiplies every entry of user `k` on block `b` by `factor`.
    pub fn scale_user(&mut self, b: usize, k: usize, factor: Complex64) {
        for t in 0..self.dims.snapshots {
            let o = self.offset(t, b, k);
            for z in &mut self.data[o..o + self.dims.antennas] {
                *z *= factor;
            }
        }
    }

    /// Mean over snapshots of `‖h_{k,b}(t)‖² / M`.
    pub fn mean_user_power(&self, b: usize, k: usize) -> f64 {
        let m = self.dims.antennas as f64;
        let total: f64 = (0..self.dims.snapshots)
            .map(|t| {
                self.user_channel(t, b, k)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    / m
            })
            .sum();
        total / self.dims.snapshots as f64
    }
}

/// Scales every (user, block) channel by one real constant so that the mean
/// over snapshots of `‖h‖²/M` is 1.
pub fn normalize(trace: &ChannelTrace) -> Result<ChannelTrace, ChannelError> {
    let mut out = trace.clone();
    let d = trace.dims();
    for b in 0..d.blocks {
        for k in 0..d.users {
            let p = trace.mean_user_power(b, k);
            if !(p > 0.0 && p.is_finite()) {
                return Err(ChannelError::ZeroChannel { user: k, block: b });
            }
            out.scale_user(b, k, Complex64::new(1.0 / p.sqrt(), 0.0));
        }
    }
    Ok(out)
}

/// Dispatches on `config.model`.
pub fn generate(config: &ScenarioConfig) -> Result<ChannelTrace, ChannelError> {
    match config.model {
        ChannelModel::LosGeometric => generate_los(config),
        ChannelModel::Jakes => generate_jakes(config),
    }
}

pub(crate) fn sample_period_to_us(seconds: f64) -> Result<u32, ChannelError> {
    let us = (seconds * 1e6).round();
    if !(seconds > 0.0) || !(1.0..=f64::from(u32::MAX)).contains(&us) {
        return Err(ChannelError::Config {
            field: "sample_period",
            message: format!("must be a positive duration of at least 1 us, got {seconds}"),
        });
    }
    Ok(us as u32)
}
