use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ChannelError, ChannelModel, ChannelTrace, ScenarioConfig, TraceDims};

/// Sum-of-sinusoids Rayleigh fading, one independent process per
/// (block, user, antenna) path:
///
/// ```text
/// h(t) = N^{-1/2} Σ_n exp(j (2π f_D cos(α_n) t + φ_n)),   α_n = 2π (n + θ) / N
/// ```
///
/// `θ ~ U[0,1)` rotates the uniformly spaced arrival angles and the `φ_n`
/// are independent uniform phases. Averaged over θ the autocorrelation is
/// exactly `J₀(2π f_D τ)`. Each path draws from its own ChaCha stream keyed
/// by the path index, so output does not depend on scheduling.
pub fn generate_jakes(config: &ScenarioConfig) -> Result<ChannelTrace, ChannelError> {
    if config.model != ChannelModel::Jakes {
        return Err(ChannelError::WrongModel {
            expected: ChannelModel::Jakes,
            found: config.model,
        });
    }
    config.validate()?;

    let dims = TraceDims {
        snapshots: config.num_snapshots,
        blocks: config.num_blocks,
        users: config.num_streams(),
        antennas: config.geometry.num_antennas(),
    };
    let period_us = super::sample_period_to_us(config.sample_period)?;
    let period = f64::from(period_us) / 1e6;
    let n_sin = config.num_sinusoids;
    let amp = 1.0 / (n_sin as f64).sqrt();
    let n_paths = dims.blocks * dims.users * dims.antennas;

    let paths: Vec<Vec<Complex64>> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(path as u64);
            let rotation: f64 = rng.gen();
            let tones: Vec<(f64, f64)> = (0..n_sin)
                .map(|n| {
                    let alpha = 2.0 * PI * (n as f64 + rotation) / n_sin as f64;
                    let phase = rng.gen::<f64>() * 2.0 * PI;
                    (2.0 * PI * config.doppler_hz * alpha.cos(), phase)
                })
                .collect();
            (0..dims.snapshots)
                .map(|t| {
                    let time = t as f64 * period;
                    let sum: Complex64 = tones
                        .iter()
                        .map(|&(w, phi)| Complex64::from_polar(1.0, w * time + phi))
                        .sum();
                    sum * amp
                })
                .collect()
        })
        .collect();

    // path index = (b*K + k)*M + m, storage is t-major
    let mut data = vec![Complex64::new(0.0, 0.0); dims.len()];
    for (path, samples) in paths.iter().enumerate() {
        for (t, &z) in samples.iter().enumerate() {
            data[t * n_paths + path] = z;
        }
    }
    ChannelTrace::new(dims, period_us, config.carrier_wavelength, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmodel::{ArrayGeometry, TerminalTrajectory};

    fn jakes_config(antennas: usize, snapshots: usize, seed: u64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::los(
            ArrayGeometry::new(1, antennas),
            vec![TerminalTrajectory::new([0.0, 10.0, 0.0], [0.0; 3])],
            snapshots,
        );
        cfg.model = ChannelModel::Jakes;
        cfg.doppler_hz = 10.0;
        cfg.rng_seed = seed;
        cfg
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = generate_jakes(&jakes_config(8, 16, 42)).unwrap();
        let b = generate_jakes(&jakes_config(8, 16, 42)).unwrap();
        assert_eq!(a, b);
        let c = generate_jakes(&jakes_config(8, 16, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn paths_are_distinct() {
        let tr = generate_jakes(&jakes_config(4, 4, 7)).unwrap();
        assert_ne!(tr.get(1, 0, 0, 0), tr.get(1, 0, 0, 1));
    }

    #[test]
    fn rejects_non_positive_doppler() {
        let mut cfg = jakes_config(2, 4, 0);
        cfg.doppler_hz = 0.0;
        assert_eq!(
            generate_jakes(&cfg),
            Err(ChannelError::NonPositiveDoppler(0.0))
        );
    }

    #[test]
    fn mean_power_near_unity() {
        let tr = generate_jakes(&jakes_config(2000, 2, 3)).unwrap();
        let p: f64 =
            tr.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / tr.as_slice().len() as f64;
        assert!((p - 1.0).abs() < 0.1, "{p}");
    }

    #[test]
    fn first_bessel_zero_decorrelates() {
        // lag of 38.3 ms puts 2π f_D τ at the first zero of J₀ (≈ 2.4048)
        let mut cfg = jakes_config(10_000, 2, 11);
        cfg.sample_period = 0.0383;
        let tr = generate_jakes(&cfg).unwrap();
        let m = tr.dims().antennas;
        let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
        for a in 0..m {
            let (h0, h1) = (tr.get(0, 0, 0, a), tr.get(1, 0, 0, a));
            num += h0 * h1.conj();
            den += h0.norm_sqr();
        }
        let rho = (num / den).norm();
        assert!(rho < 0.05, "{rho}");
    }
}
