use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{ChannelError, ChannelModel, ChannelTrace, ScenarioConfig, TraceDims, SPEED_OF_LIGHT};

/// Single-ray LOS channel: `exp(-j 2π ‖x_k(t) - p_m‖ / λ_b)`.
///
/// Block `b` sits `b * block_bandwidth_hz` above the carrier, so its
/// wavelength is slightly shorter than the carrier's. Entries are unit
/// modulus; call [`super::normalize`] to apply the power convention.
pub fn generate_los(config: &ScenarioConfig) -> Result<ChannelTrace, ChannelError> {
    if config.model != ChannelModel::LosGeometric {
        return Err(ChannelError::WrongModel {
            expected: ChannelModel::LosGeometric,
            found: config.model,
        });
    }
    config.validate()?;

    let geometry = config.geometry;
    let lambda = config.carrier_wavelength;
    let dims = TraceDims {
        snapshots: config.num_snapshots,
        blocks: config.num_blocks,
        users: config.num_streams(),
        antennas: geometry.num_antennas(),
    };
    let period_us = super::sample_period_to_us(config.sample_period)?;
    let period = f64::from(period_us) / 1e6;

    let elements: Vec<[f64; 3]> = (0..dims.antennas)
        .map(|m| geometry.element_position(m, lambda))
        .collect();
    let streams: Vec<(usize, usize)> = config
        .terminals
        .iter()
        .enumerate()
        .flat_map(|(i, t)| (0..t.num_antennas).map(move |a| (i, a)))
        .collect();
    let carrier = SPEED_OF_LIGHT / lambda;
    let block_wavelengths: Vec<f64> = (0..dims.blocks)
        .map(|b| SPEED_OF_LIGHT / (carrier + b as f64 * config.block_bandwidth_hz))
        .collect();

    let slices: Vec<Vec<Complex64>> = (0..dims.snapshots * dims.blocks)
        .into_par_iter()
        .map(|slice| {
            let (t, b) = (slice / dims.blocks, slice % dims.blocks);
            let time = t as f64 * period;
            let wavenumber = 2.0 * PI / block_wavelengths[b];
            let mut out = Vec::with_capacity(dims.users * dims.antennas);
            for &(term, ant) in &streams {
                let x = config.terminals[term].antenna_position(ant, time);
                for p in &elements {
                    let d = ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2) + (x[2] - p[2]).powi(2))
                        .sqrt();
                    out.push(Complex64::from_polar(1.0, -wavenumber * d));
                }
            }
            out
        })
        .collect();

    ChannelTrace::new(dims, period_us, lambda, slices.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmodel::{ArrayGeometry, TerminalTrajectory};

    #[test]
    fn broadside_far_field_has_common_phase() {
        let t = TerminalTrajectory::new([0.0, 1e7, 0.0], [0.0; 3]);
        let cfg = ScenarioConfig::los(ArrayGeometry::new(2, 8), vec![t], 2);
        let tr = generate_los(&cfg).unwrap();
        let h = tr.user_channel(0, 0, 0);
        // symmetric elements share a distance exactly; all others agree to
        // within the planar-limit error
        for z in h {
            assert!((z / h[0] - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn static_terminal_repeats_snapshots() {
        let t = TerminalTrajectory::new([3.0, 12.0, 1.0], [0.0; 3]);
        let cfg = ScenarioConfig::los(ArrayGeometry::new(2, 4), vec![t], 5);
        let tr = generate_los(&cfg).unwrap();
        for s in 1..5 {
            assert_eq!(tr.user_channel(s, 0, 0), tr.user_channel(0, 0, 0));
        }
    }

    #[test]
    fn entries_are_unit_modulus() {
        let mut t = TerminalTrajectory::new([-4.0, 15.0, 0.0], [8.0, 0.0, 0.0]);
        t.num_antennas = 2;
        let mut cfg = ScenarioConfig::los(ArrayGeometry::new(2, 6), vec![t], 20);
        cfg.num_blocks = 3;
        let tr = generate_los(&cfg).unwrap();
        assert_eq!(tr.dims().users, 2);
        for z in tr.as_slice() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn blocks_differ_in_frequency() {
        let t = TerminalTrajectory::new([-4.0, 15.0, 0.0], [0.0; 3]);
        let mut cfg = ScenarioConfig::los(ArrayGeometry::new(1, 4), vec![t], 2);
        cfg.num_blocks = 2;
        let tr = generate_los(&cfg).unwrap();
        assert_ne!(tr.user_channel(0, 0, 0), tr.user_channel(0, 1, 0));
        cfg.block_bandwidth_hz = 0.0;
        let tr = generate_los(&cfg).unwrap();
        assert_eq!(tr.user_channel(0, 0, 0), tr.user_channel(0, 1, 0));
    }

    #[test]
    fn rejects_jakes_config() {
        let t = TerminalTrajectory::new([0.0, 15.0, 0.0], [0.0; 3]);
        let mut cfg = ScenarioConfig::los(ArrayGeometry::new(1, 4), vec![t], 2);
        cfg.model = ChannelModel::Jakes;
        assert!(matches!(
            generate_los(&cfg),
            Err(ChannelError::WrongModel { .. })
        ));
    }

    #[test]
    fn zero_wavelength_is_an_error() {
        let t = TerminalTrajectory::new([0.0, 15.0, 0.0], [0.0; 3]);
        let mut cfg = ScenarioConfig::los(ArrayGeometry::new(1, 4), vec![t], 2);
        cfg.carrier_wavelength = 0.0;
        assert_eq!(generate_los(&cfg), Err(ChannelError::ZeroWavelength));
    }
}
