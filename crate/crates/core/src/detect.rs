//! Linear uplink detection and delayed-decoder sum-rate.
//!
//! Decoders are stored as K×M matrices whose row `i` is the decode vector
//! `w_i`, applied as the plain (unconjugated) product `h_i · w_iᵀ`. With
//! that convention ZF is `W = conj((H Hᴴ)⁻¹ H)`, which gives
//! `H Wᵀ = I`, and MF is `W = conj(H) / M`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chanmodel::ChannelTrace;
use crate::numkit::{dot, ComplexMatrix, NumError, DEFAULT_PIVOT_TOL};

/// Number of evenly spaced bins in [`RateSummary::cdf`].
pub const DEFAULT_CDF_BINS: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("channel Gram matrix is singular at pivot {pivot}")]
    SingularChannel { pivot: usize },
    #[error("{streams} user streams exceed {antennas} antennas")]
    TooManyStreams { streams: usize, antennas: usize },
    #[error("noise power must be > 0, got {0}")]
    NonPositiveNoise(f64),
    #[error("trace has {snapshots} snapshots, too short for a decoder delay of {delay}")]
    TraceTooShort { snapshots: usize, delay: usize },
    #[error("rate series is empty")]
    EmptySeries,
    #[error(transparent)]
    Shape(NumError),
}

impl From<NumError> for DetectError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::SingularMatrix { pivot } => DetectError::SingularChannel { pivot },
            other => DetectError::Shape(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Zf,
    Mf,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 2] = [DecoderKind::Zf, DecoderKind::Mf];

    pub fn as_str(&self) -> &'static str {
        match self {
            DecoderKind::Zf => "zf",
            DecoderKind::Mf => "mf",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zf" => Ok(DecoderKind::Zf),
            "mf" => Ok(DecoderKind::Mf),
            _ => Err(format!("unknown decoder `{s}`, expected zf or mf")),
        }
    }
}

/// How a requested delay of zero samples is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayMode {
    /// A decoder is never applied to the snapshot it was derived from:
    /// Δ = 0 becomes a one-sample delay.
    #[default]
    MinOneSample,
    /// Δ is used as given, including Δ = 0.
    Exact,
}

impl DelayMode {
    pub fn effective_delay(&self, delta_samples: usize) -> usize {
        match self {
            DelayMode::MinOneSample => delta_samples.max(1),
            DelayMode::Exact => delta_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub time_index: usize,
    pub block_index: usize,
    /// bits/s/Hz
    pub sum_rate: f64,
    pub per_user_sinr: Vec<f64>,
    pub per_user_rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    pub decoder: DecoderKind,
    pub delta_samples: usize,
    pub effective_delay: usize,
    pub snr_db: f64,
    pub noise_power: f64,
    pub num_users: usize,
    /// Ordered by time, then block.
    pub points: Vec<RatePoint>,
}

/// Noise power giving the requested average SNR for unit-power channels and
/// unit decoded signal gain.
pub fn noise_power_for_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// K×M decoding matrix; row `i` is the decode vector for user `i`.
pub fn decoder_matrix(h: &ComplexMatrix, kind: DecoderKind) -> Result<ComplexMatrix, DetectError> {
    let (k, m) = (h.rows(), h.cols());
    if k > m {
        return Err(DetectError::TooManyStreams {
            streams: k,
            antennas: m,
        });
    }
    match kind {
        DecoderKind::Mf => Ok(h.conj().scale(1.0 / m as f64)),
        DecoderKind::Zf => {
            let gram = h.matmul(&h.hermitian())?;
            let gram_inv = gram.invert(DEFAULT_PIVOT_TOL)?;
            Ok(gram_inv.matmul(h)?.conj())
        }
    }
}

/// Achievable sum-rate of the current channel under (possibly stale)
/// decoder weights. The returned point has zero time/block indices.
pub fn sum_rate(
    h_now: &ComplexMatrix,
    w_then: &ComplexMatrix,
    noise_power: f64,
) -> Result<RatePoint, DetectError> {
    if !(noise_power > 0.0) {
        return Err(DetectError::NonPositiveNoise(noise_power));
    }
    if (h_now.rows(), h_now.cols()) != (w_then.rows(), w_then.cols()) {
        return Err(NumError::DimensionMismatch {
            left_rows: h_now.rows(),
            left_cols: h_now.cols(),
            right_rows: w_then.rows(),
            right_cols: w_then.cols(),
        }
        .into());
    }
    let k = h_now.rows();
    let mut per_user_sinr = Vec::with_capacity(k);
    for i in 0..k {
        let h_i = h_now.row(i);
        let mut signal = 0.0;
        let mut interference = 0.0;
        for j in 0..k {
            let g = dot(h_i, w_then.row(j)).norm_sqr();
            if i == j {
                signal = g;
            } else {
                interference += g;
            }
        }
        per_user_sinr.push(signal / (interference + noise_power));
    }
    let per_user_rate: Vec<f64> = per_user_sinr.iter().map(|s| (1.0 + s).log2()).collect();
    Ok(RatePoint {
        time_index: 0,
        block_index: 0,
        sum_rate: per_user_rate.iter().sum(),
        per_user_sinr,
        per_user_rate,
    })
}

/// Decoders for every snapshot of a trace, indexed `t * B + b`.
pub fn decoders_for_trace(
    trace: &ChannelTrace,
    kind: DecoderKind,
) -> Result<Vec<ComplexMatrix>, DetectError> {
    let d = trace.dims();
    (0..d.snapshots * d.blocks)
        .into_par_iter()
        .map(|i| decoder_matrix(&trace.snapshot(i / d.blocks, i % d.blocks), kind))
        .collect()
}

/// Applies precomputed decoders with a fixed delay to times `t_start..T`.
pub(crate) fn rates_with_decoders(
    trace: &ChannelTrace,
    decoders: &[ComplexMatrix],
    delay: usize,
    t_start: usize,
    noise_power: f64,
) -> Result<Vec<RatePoint>, DetectError> {
    let d = trace.dims();
    debug_assert!(t_start >= delay);
    (t_start * d.blocks..d.snapshots * d.blocks)
        .into_par_iter()
        .map(|i| {
            let (t, b) = (i / d.blocks, i % d.blocks);
            let mut p = sum_rate(
                &trace.snapshot(t, b),
                &decoders[(t - delay) * d.blocks + b],
                noise_power,
            )?;
            p.time_index = t;
            p.block_index = b;
            Ok(p)
        })
        .collect()
}

/// Sum-rate over every block and every `t ≥ Δ_eff` of a trace, with the
/// decoder for time `t` derived from snapshot `t - Δ_eff`.
pub fn evaluate_series(
    trace: &ChannelTrace,
    kind: DecoderKind,
    snr_db: f64,
    delta_samples: usize,
    mode: DelayMode,
) -> Result<RateSeries, DetectError> {
    let d = trace.dims();
    let delay = mode.effective_delay(delta_samples);
    if delay >= d.snapshots {
        return Err(DetectError::TraceTooShort {
            snapshots: d.snapshots,
            delay,
        });
    }
    let noise_power = noise_power_for_snr(snr_db);
    let decoders = decoders_for_trace(trace, kind)?;
    let points = rates_with_decoders(trace, &decoders, delay, delay, noise_power)?;
    Ok(RateSeries {
        decoder: kind,
        delta_samples,
        effective_delay: delay,
        snr_db,
        noise_power,
        num_users: d.users,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub median_sum_rate: f64,
    /// Median over users of each user's median rate.
    pub median_per_user_rate: f64,
    /// `10 log10` of the mean linear SINR over all points and users.
    pub mean_sinr_db: f64,
    /// `(rate, P[sum_rate <= rate])` on evenly spaced rates.
    pub cdf: Vec<(f64, f64)>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Empirical CDF sampled at `bins` evenly spaced values between the min and
/// max. Constant data collapses to a single step.
pub fn empirical_cdf(values: &[f64], bins: usize) -> Vec<(f64, f64)> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let n = v.len() as f64;
    if lo == hi || bins < 2 {
        return vec![(hi, 1.0)];
    }
    (0..bins)
        .map(|j| {
            let x = if j == bins - 1 {
                hi
            } else {
                lo + (hi - lo) * j as f64 / (bins - 1) as f64
            };
            (x, v.partition_point(|&r| r <= x) as f64 / n)
        })
        .collect()
}

pub fn summarize(series: &RateSeries, cdf_bins: usize) -> Result<RateSummary, DetectError> {
    if series.points.is_empty() {
        return Err(DetectError::EmptySeries);
    }
    let sums: Vec<f64> = series.points.iter().map(|p| p.sum_rate).collect();
    let user_medians: Vec<f64> = (0..series.num_users)
        .map(|u| {
            let rates: Vec<f64> = series.points.iter().map(|p| p.per_user_rate[u]).collect();
            median(&rates).unwrap()
        })
        .collect();
    let (sinr_total, sinr_count) = series
        .points
        .iter()
        .flat_map(|p| p.per_user_sinr.iter())
        .fold((0.0, 0usize), |(s, n), &x| (s + x, n + 1));
    Ok(RateSummary {
        median_sum_rate: median(&sums).unwrap(),
        median_per_user_rate: median(&user_medians).unwrap_or(f64::NAN),
        mean_sinr_db: 10.0 * (sinr_total / sinr_count as f64).log10(),
        cdf: empirical_cdf(&sums, cdf_bins),
    })
}

/// Header `t,b,sum_rate,sinr_user_0..sinr_user_{K-1}`.
pub fn write_series_csv<W: Write>(series: &RateSeries, mut out: W) -> io::Result<()> {
    write!(out, "t,b,sum_rate")?;
    for u in 0..series.num_users {
        write!(out, ",sinr_user_{u}")?;
    }
    writeln!(out)?;
    for p in &series.points {
        write!(out, "{},{},{}", p.time_index, p.block_index, p.sum_rate)?;
        for s in &p.per_user_sinr {
            write!(out, ",{s}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Key/value rows under a `key,value` header.
pub fn write_summary_csv<W: Write>(
    series: &RateSeries,
    summary: &RateSummary,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "key,value")?;
    writeln!(out, "decoder,{}", series.decoder)?;
    writeln!(out, "snr_db,{}", series.snr_db)?;
    writeln!(out, "noise_power,{}", series.noise_power)?;
    writeln!(out, "delta_samples,{}", series.delta_samples)?;
    writeln!(out, "effective_delay,{}", series.effective_delay)?;
    writeln!(out, "num_points,{}", series.points.len())?;
    writeln!(out, "median_sum_rate,{}", summary.median_sum_rate)?;
    writeln!(out, "median_per_user_rate,{}", summary.median_per_user_rate)?;
    writeln!(out, "mean_sinr_db,{}", summary.mean_sinr_db)?;
    out.flush()
}

pub fn write_cdf_csv<W: Write>(cdf: &[(f64, f64)], mut out: W) -> io::Result<()> {
    writeln!(out, "sum_rate,probability")?;
    for (x, p) in cdf {
        writeln!(out, "{x},{p}")?;
    }
    out.flush()
}
