//! OFDM training overhead for a massive MIMO uplink.
//!
//! The coherence bandwidth and coherence time are turned into a grid of
//! `N_smooth` subcarriers by `N_slot` symbols (`τ_c = N_smooth · N_slot`
//! samples). One pilot symbol trains `N_smooth` users, so training `K`
//! users costs `N_train = ⌈K / N_smooth⌉` symbols, and the overhead is
//! `100 · N_train / N_slot` percent.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OverheadError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("velocity must be > 0, got {0}")]
    NonPositiveVelocity(f64),
    #[error("cannot train {users} users at {velocity} m/s: coherence interval holds only {tau_c} samples")]
    Infeasible {
        velocity: f64,
        users: usize,
        tau_c: u64,
    },
    #[error("no d10 entry for azimuth size {0}")]
    MissingD10(usize),
    #[error("d10 for azimuth size {m_azimuth} must be positive and finite, got {value}")]
    BadD10 { m_azimuth: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    /// B_c in Hz.
    pub coherence_bandwidth: f64,
    /// B_s in Hz.
    pub subcarrier_bandwidth: f64,
    /// T_s in seconds.
    pub symbol_duration: f64,
    pub system_subcarriers: usize,
    /// Users to train; `None` means half the antennas, `rows · M_azimuth / 2`.
    pub users_to_train: Option<usize>,
    /// Elevation rows used to turn an azimuth size into an antenna count.
    pub elevation_rows: usize,
    /// Reference coherence time in seconds.
    pub tc_reference: f64,
    /// Speed at which `tc_reference` holds, m/s.
    pub v_reference: f64,
    /// Fixed coherence time in seconds for every velocity and array size,
    /// bypassing both the reference scaling and any d10 table.
    pub coherence_time_override: Option<f64>,
}

impl Default for OverheadModel {
    fn default() -> Self {
        Self {
            coherence_bandwidth: 300e3,
            subcarrier_bandwidth: 15e3,
            symbol_duration: 71.4e-6,
            system_subcarriers: 1200,
            users_to_train: None,
            elevation_rows: 4,
            tc_reference: 0.125,
            // 29 km/h
            v_reference: 8.0556,
            coherence_time_override: None,
        }
    }
}

impl OverheadModel {
    pub fn validate(&self) -> Result<(), OverheadError> {
        let positive = [
            ("coherence_bandwidth", self.coherence_bandwidth),
            ("subcarrier_bandwidth", self.subcarrier_bandwidth),
            ("symbol_duration", self.symbol_duration),
            ("tc_reference", self.tc_reference),
            ("v_reference", self.v_reference),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OverheadError::InvalidModel(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.subcarrier_bandwidth > self.coherence_bandwidth {
            return Err(OverheadError::InvalidModel(format!(
                "subcarrier bandwidth {} exceeds coherence bandwidth {}",
                self.subcarrier_bandwidth, self.coherence_bandwidth
            )));
        }
        if let Some(tc) = self.coherence_time_override {
            if !(tc > 0.0 && tc.is_finite()) {
                return Err(OverheadError::InvalidModel(format!(
                    "coherence time override must be positive, got {tc}"
                )));
            }
        }
        if self.system_subcarriers == 0
            || self.elevation_rows == 0
            || self.users_to_train == Some(0)
        {
            return Err(OverheadError::InvalidModel(
                "system_subcarriers, elevation_rows and users_to_train must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn users_for(&self, m_azimuth: usize) -> usize {
        self.users_to_train
            .unwrap_or_else(|| (self.elevation_rows * m_azimuth / 2).max(1))
    }

    /// Coherence distance implied by the reference point, meters.
    pub fn reference_distance(&self) -> f64 {
        self.tc_reference * self.v_reference
    }
}

/// `⌊B_c / B_s⌋`.
pub fn n_smooth(model: &OverheadModel) -> u64 {
    (model.coherence_bandwidth / model.subcarrier_bandwidth).floor() as u64
}

/// Coherence time at speed `v`, keeping the coherence distance of the
/// reference point fixed.
pub fn coherence_time_at_velocity(model: &OverheadModel, v: f64) -> Result<f64, OverheadError> {
    if !(v > 0.0) {
        return Err(OverheadError::NonPositiveVelocity(v));
    }
    Ok(model.tc_reference * model.v_reference / v)
}

/// `⌊T_c / T_s⌋`.
pub fn n_slot(model: &OverheadModel, t_c: f64) -> u64 {
    (t_c / model.symbol_duration).floor() as u64
}

/// `⌈users / n_smooth⌉` pilot symbols.
pub fn n_train(users: u64, n_smooth: u64) -> u64 {
    users.div_ceil(n_smooth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverheadPoint {
    pub m_azimuth: usize,
    /// m/s
    pub velocity: f64,
    /// Seconds.
    pub coherence_time: f64,
    pub n_smooth: u64,
    pub n_slot: u64,
    pub tau_c: u64,
    pub n_train: u64,
    pub overhead_percent: f64,
}

/// Single point for a given coherence time.
pub fn overhead_point(
    model: &OverheadModel,
    m_azimuth: usize,
    velocity: f64,
    coherence_time: f64,
) -> Result<OverheadPoint, OverheadError> {
    let smooth = n_smooth(model);
    let slot = n_slot(model, coherence_time);
    let tau_c = smooth * slot;
    let users = model.users_for(m_azimuth);
    if tau_c < users as u64 || slot == 0 {
        return Err(OverheadError::Infeasible {
            velocity,
            users,
            tau_c,
        });
    }
    let train = n_train(users as u64, smooth);
    Ok(OverheadPoint {
        m_azimuth,
        velocity,
        coherence_time,
        n_smooth: smooth,
        n_slot: slot,
        tau_c,
        n_train: train,
        overhead_percent: train as f64 / slot as f64 * 100.0,
    })
}

/// Overhead for every (azimuth size, velocity) pair, size-major.
///
/// With a d10 table the coherence distance for each size is
/// `d10 · wavelength`; without one every size uses the reference distance.
pub fn overhead_curve(
    model: &OverheadModel,
    velocities: &[f64],
    azimuth_sizes: &[usize],
    d10_table: Option<&[(usize, f64)]>,
    wavelength: f64,
) -> Result<Vec<OverheadPoint>, OverheadError> {
    model.validate()?;
    if let Some(&v) = velocities.iter().find(|&&v| !(v > 0.0)) {
        return Err(OverheadError::NonPositiveVelocity(v));
    }
    let table: Option<BTreeMap<usize, f64>> = d10_table.map(|t| t.iter().copied().collect());
    let mut out = Vec::with_capacity(velocities.len() * azimuth_sizes.len());
    for &size in azimuth_sizes {
        let distance = match &table {
            None => model.reference_distance(),
            Some(t) => {
                let d10 = *t.get(&size).ok_or(OverheadError::MissingD10(size))?;
                if !(d10 > 0.0 && d10.is_finite()) {
                    return Err(OverheadError::BadD10 {
                        m_azimuth: size,
                        value: d10,
                    });
                }
                d10 * wavelength
            }
        };
        for &v in velocities {
            let tc = model.coherence_time_override.unwrap_or(distance / v);
            out.push(overhead_point(model, size, v, tc)?);
        }
    }
    Ok(out)
}

/// Header `m_azimuth,velocity_mps,tc_ms,n_smooth,n_slot,tau_c,n_train,overhead_percent`.
pub fn write_overhead_csv<W: Write>(points: &[OverheadPoint], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "m_azimuth,velocity_mps,tc_ms,n_smooth,n_slot,tau_c,n_train,overhead_percent"
    )?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6}",
            p.m_azimuth,
            p.velocity,
            p.coherence_time * 1e3,
            p.n_smooth,
            p.n_slot,
            p.tau_c,
            p.n_train,
            p.overhead_percent
        )?;
    }
    out.flush()
}
