//! Channel aging metrics.
//!
//! - temporal correlation profiles and the coherence time at a threshold,
//! - the terminal displacement at 10% decorrelation for azimuth sub-arrays,
//! - the expected sum-rate `γ(Δ) = E{C_Δ(t) / C(t)}` under stale decoders,
//! - natural cubic spline trend curves.
//!
//! The correlation metric is the normalized absolute inner product
//! `|⟨h(t), h(t+L)⟩| / (‖h(t)‖ ‖h(t+L)‖)`, averaged over users, blocks and
//! start times.

mod spline;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chanmodel::{ChannelError, ChannelTrace};
use crate::detect::{
    decoders_for_trace, noise_power_for_snr, rates_with_decoders, DecoderKind, DelayMode,
    DetectError,
};
use crate::numkit::inner;

pub use spline::{cubic_trend, NaturalCubicSpline, SplineError};

/// Correlation threshold matching 10% decorrelation.
pub const D10_THRESHOLD: f64 = 0.9;

/// Decoder delay (in samples) of the γ reference rate.
pub const REFERENCE_DELAY: usize = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgingError {
    #[error("max lag {max_lag} must be below the {snapshots} available snapshots")]
    LagTooLarge { max_lag: usize, snapshots: usize },
    #[error("azimuth size {size} exceeds the {available} available columns")]
    SizeTooLarge { size: usize, available: usize },
    #[error("{antennas} antennas cannot be split into {rows} elevation rows")]
    BadGeometry { antennas: usize, rows: usize },
    #[error("speed must be > 0, got {0}")]
    NonPositiveSpeed(f64),
    #[error("profile is empty or malformed: {0}")]
    BadProfile(String),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationProfile {
    /// Seconds.
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    /// Meters moved per sample, when the terminal speed is known.
    pub distance_per_lag: Option<f64>,
}

impl CorrelationProfile {
    pub fn new(lags: Vec<f64>, values: Vec<f64>) -> Result<Self, AgingError> {
        if lags.is_empty() || lags.len() != values.len() {
            return Err(AgingError::BadProfile(format!(
                "{} lags vs {} values",
                lags.len(),
                values.len()
            )));
        }
        if lags.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AgingError::BadProfile(
                "lags must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            lags,
            values,
            distance_per_lag: None,
        })
    }

    pub fn with_speed(mut self, speed: f64, sample_period: f64) -> Self {
        self.distance_per_lag = Some(speed * sample_period);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceTime {
    /// Seconds; `f64::INFINITY` when the profile never drops below threshold.
    pub seconds: f64,
    pub crossed: bool,
}

/// Mean normalized correlation between snapshots `lag` apart, over the
/// given antenna subset (all antennas when `None`).
pub fn correlation_at_lag(trace: &ChannelTrace, antennas: Option<&[usize]>, lag: usize) -> f64 {
    let d = trace.dims();
    assert!(lag < d.snapshots, "lag {lag} out of range");
    let pick = |t: usize, b: usize, k: usize| -> Vec<num_complex::Complex64> {
        let row = trace.user_channel(t, b, k);
        match antennas {
            Some(idx) => idx.iter().map(|&m| row[m]).collect(),
            None => row.to_vec(),
        }
    };
    let per_start: Vec<(f64, usize)> = (0..d.snapshots - lag)
        .into_par_iter()
        .map(|t| {
            let mut acc = 0.0;
            let mut count = 0;
            for b in 0..d.blocks {
                for k in 0..d.users {
                    let (a, c) = (pick(t, b, k), pick(t + lag, b, k));
                    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    let nc: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    if na > 0.0 && nc > 0.0 {
                        acc += inner(&a, &c).norm() / (na * nc);
                        count += 1;
                    }
                }
            }
            (acc, count)
        })
        .collect();
    let (sum, count) = per_start
        .iter()
        .fold((0.0, 0), |(s, n), &(a, c)| (s + a, n + c));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn lag_seconds(trace: &ChannelTrace, lag: usize) -> f64 {
    (lag as u64 * u64::from(trace.sample_period_us())) as f64 / 1e6
}

pub fn temporal_correlation(
    trace: &ChannelTrace,
    max_lag: usize,
) -> Result<CorrelationProfile, AgingError> {
    temporal_correlation_subset(trace, None, max_lag)
}

pub fn temporal_correlation_subset(
    trace: &ChannelTrace,
    antennas: Option<&[usize]>,
    max_lag: usize,
) -> Result<CorrelationProfile, AgingError> {
    let snapshots = trace.dims().snapshots;
    if max_lag >= snapshots {
        return Err(AgingError::LagTooLarge { max_lag, snapshots });
    }
    let values = (0..=max_lag)
        .map(|l| correlation_at_lag(trace, antennas, l))
        .collect();
    let lags = (0..=max_lag).map(|l| lag_seconds(trace, l)).collect();
    CorrelationProfile::new(lags, values)
}

/// First lag where the profile drops below `threshold`, linearly
/// interpolated between the bracketing samples.
pub fn coherence_time(profile: &CorrelationProfile, threshold: f64) -> CoherenceTime {
    let v = &profile.values;
    match v.iter().position(|&x| x < threshold) {
        None => CoherenceTime {
            seconds: f64::INFINITY,
            crossed: false,
        },
        Some(0) => CoherenceTime {
            seconds: profile.lags[0],
            crossed: true,
        },
        Some(i) => {
            let (l0, l1) = (profile.lags[i - 1], profile.lags[i]);
            let frac = (v[i - 1] - threshold) / (v[i - 1] - v[i]);
            CoherenceTime {
                seconds: l0 + (l1 - l0) * frac,
                crossed: true,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct D10Point {
    pub m_azimuth: usize,
    /// Seconds until 10% decorrelation, infinite if never reached.
    pub coherence_time: f64,
    /// Terminal displacement in carrier wavelengths, infinite if never reached.
    pub distance_wavelengths: f64,
    pub crossed: bool,
}

/// Displacement at 10% decorrelation for each azimuth sub-array.
///
/// Sub-arrays take the leftmost `size` columns across every elevation row;
/// antenna `m` sits at row `m / cols`, column `m % cols`.
pub fn d10_vs_azimuth(
    trace: &ChannelTrace,
    rows_elevation: usize,
    azimuth_sizes: &[usize],
    speed: f64,
) -> Result<Vec<D10Point>, AgingError> {
    if !(speed > 0.0) {
        return Err(AgingError::NonPositiveSpeed(speed));
    }
    let cols = azimuth_columns(trace, rows_elevation)?;
    azimuth_sizes
        .iter()
        .map(|&size| {
            let antennas = leftmost_columns(rows_elevation, cols, size)?;
            let threshold_time = scan_coherence(trace, &antennas, D10_THRESHOLD);
            Ok(D10Point {
                m_azimuth: size,
                coherence_time: threshold_time.seconds,
                distance_wavelengths: threshold_time.seconds * speed / trace.wavelength(),
                crossed: threshold_time.crossed,
            })
        })
        .collect()
}

pub fn azimuth_columns(trace: &ChannelTrace, rows_elevation: usize) -> Result<usize, AgingError> {
    let antennas = trace.dims().antennas;
    if rows_elevation == 0 || antennas % rows_elevation != 0 {
        return Err(AgingError::BadGeometry {
            antennas,
            rows: rows_elevation,
        });
    }
    Ok(antennas / rows_elevation)
}

pub fn leftmost_columns(
    rows_elevation: usize,
    cols: usize,
    size: usize,
) -> Result<Vec<usize>, AgingError> {
    if size == 0 || size > cols {
        return Err(AgingError::SizeTooLarge {
            size,
            available: cols,
        });
    }
    Ok((0..rows_elevation)
        .flat_map(|r| (0..size).map(move |c| r * cols + c))
        .collect())
}

// Walks lags upward and stops at the first crossing; same interpolation as
// `coherence_time` on the full profile.
fn scan_coherence(trace: &ChannelTrace, antennas: &[usize], threshold: f64) -> CoherenceTime {
    let mut lags = vec![0.0];
    let mut values = vec![correlation_at_lag(trace, Some(antennas), 0)];
    for lag in 1..trace.dims().snapshots {
        lags.push(lag_seconds(trace, lag));
        values.push(correlation_at_lag(trace, Some(antennas), lag));
        if values[lag] < threshold {
            break;
        }
    }
    coherence_time(
        &CorrelationProfile {
            lags,
            values,
            distance_per_lag: None,
        },
        threshold,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedRateCurve {
    pub decoder: DecoderKind,
    /// Requested delays in samples.
    pub deltas: Vec<usize>,
    /// Effective delays in seconds.
    pub delta_seconds: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// `γ(Δ)`: mean over (t, b) of `C_Δ(b,t) / C_ref(b,t)`, with the reference
/// decoder one sample old. Every Δ is averaged over the same set of times,
/// those with `t ≥` the largest effective delay.
pub fn expected_rate(
    trace: &ChannelTrace,
    kind: DecoderKind,
    snr_db: f64,
    deltas: &[usize],
) -> Result<ExpectedRateCurve, AgingError> {
    let snapshots = trace.dims().snapshots;
    let mode = DelayMode::MinOneSample;
    let effective: Vec<usize> = deltas.iter().map(|&d| mode.effective_delay(d)).collect();
    let t_start = effective
        .iter()
        .copied()
        .chain([REFERENCE_DELAY])
        .max()
        .unwrap();
    if t_start >= snapshots {
        return Err(DetectError::TraceTooShort {
            snapshots,
            delay: t_start,
        }
        .into());
    }
    let noise = noise_power_for_snr(snr_db);
    let decoders = decoders_for_trace(trace, kind)?;
    let reference = rates_with_decoders(trace, &decoders, REFERENCE_DELAY, t_start, noise)?;

    let mut gamma = Vec::with_capacity(deltas.len());
    for &delay in &effective {
        let rates = rates_with_decoders(trace, &decoders, delay, t_start, noise)?;
        let (sum, n) = rates
            .iter()
            .zip(&reference)
            .filter(|(_, r)| r.sum_rate > 0.0)
            .fold((0.0, 0usize), |(s, n), (c, r)| {
                (s + c.sum_rate / r.sum_rate, n + 1)
            });
        gamma.push(if n == 0 { f64::NAN } else { sum / n as f64 });
    }
    Ok(ExpectedRateCurve {
        decoder: kind,
        deltas: deltas.to_vec(),
        delta_seconds: effective.iter().map(|&d| lag_seconds(trace, d)).collect(),
        gamma,
    })
}

/// Seconds to milliseconds, rounded to the nanosecond so sounding-grid lags
/// print cleanly.
pub fn seconds_to_ms(s: f64) -> f64 {
    if s.is_finite() {
        (s * 1e9).round() / 1e6
    } else {
        s
    }
}

/// Header `lag_ms,correlation`.
pub fn write_profile_csv<W: Write>(profile: &CorrelationProfile, mut out: W) -> io::Result<()> {
    writeln!(out, "lag_ms,correlation")?;
    for (l, v) in profile.lags.iter().zip(&profile.values) {
        writeln!(out, "{},{}", seconds_to_ms(*l), v)?;
    }
    out.flush()
}

/// Header `delta_ms,gamma_<kind>...`; all curves must share the same deltas.
pub fn write_gamma_csv<W: Write>(curves: &[ExpectedRateCurve], mut out: W) -> io::Result<()> {
    write!(out, "delta_ms")?;
    for c in curves {
        write!(out, ",gamma_{}", c.decoder)?;
    }
    writeln!(out)?;
    let Some(first) = curves.first() else {
        return out.flush();
    };
    for (i, d) in first.delta_seconds.iter().enumerate() {
        write!(out, "{}", seconds_to_ms(*d))?;
        for c in curves {
            write!(out, ",{}", c.gamma[i])?;
        }
        writeln!(out)?;
    }
    out.flush()
}
