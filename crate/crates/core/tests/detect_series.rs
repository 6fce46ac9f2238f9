mod common;

use mimo_aging::chanmodel::{generate_los, normalize};
use mimo_aging::detect::{
    decoder_matrix, evaluate_series, noise_power_for_snr, sum_rate, summarize, DecoderKind,
    DelayMode,
};
use mimo_aging::numkit::ComplexMatrix;
use num_complex::Complex64;

fn pseudo_random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut state = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    ComplexMatrix::from_fn(rows, cols, |_, _| Complex64::new(next(), next())).unwrap()
}

/// SINR written out term by term from the channel rows and decoder rows.
fn direct_sum_rate(h: &ComplexMatrix, w: &ComplexMatrix, noise: f64) -> f64 {
    let (k, m) = (h.rows(), h.cols());
    let gain = |i: usize, j: usize| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..m {
            acc += h.get(i, a) * w.get(j, a);
        }
        acc.norm_sqr()
    };
    (0..k)
        .map(|i| {
            let interference: f64 = (0..k).filter(|&j| j != i).map(|j| gain(i, j)).sum();
            (1.0 + gain(i, i) / (interference + noise)).log2()
        })
        .sum()
}

#[test]
fn sum_rate_matches_term_by_term_sinr() {
    for seed in 0..20 {
        let h_then = pseudo_random_matrix(4, 12, seed);
        let h_now = pseudo_random_matrix(4, 12, seed + 1000);
        for kind in DecoderKind::ALL {
            let w = decoder_matrix(&h_then, kind).unwrap();
            let noise = noise_power_for_snr(10.0);
            let p = sum_rate(&h_now, &w, noise).unwrap();
            let oracle = direct_sum_rate(&h_now, &w, noise);
            assert!(
                (p.sum_rate - oracle).abs() < 1e-9 * oracle.max(1.0),
                "{kind}: {} vs {oracle}",
                p.sum_rate
            );
            let per_user: f64 = p.per_user_rate.iter().sum();
            assert!((per_user - p.sum_rate).abs() < 1e-12);
        }
    }
}

#[test]
fn static_zf_series_is_flat_at_interference_free_rate() {
    let trace = common::static_trace(20);
    let series =
        evaluate_series(&trace, DecoderKind::Zf, 30.0, 0, DelayMode::MinOneSample).unwrap();
    assert_eq!(series.effective_delay, 1);
    assert_eq!(series.points.len(), 19);
    let first = &series.points[0];
    for p in &series.points {
        assert!((p.sum_rate - first.sum_rate).abs() < 1e-9);
    }
    let noise = noise_power_for_snr(30.0);
    // normalized constant-modulus rows: unit ZF gain, SINR = 1/N
    let expected = 8.0 * (1.0 + 1.0 / noise).log2();
    assert!((first.sum_rate - expected).abs() < 1e-6 * expected);
    for s in &first.per_user_sinr {
        assert!((s * noise - 1.0).abs() < 1e-6);
    }
}

#[test]
fn exact_mode_zero_delay_summary_median() {
    let trace = common::static_trace(10);
    let series = evaluate_series(&trace, DecoderKind::Zf, 30.0, 0, DelayMode::Exact).unwrap();
    assert_eq!(series.effective_delay, 0);
    assert_eq!(series.points.len(), 10);
    let summary = summarize(&series, 16).unwrap();
    let expected = 8.0 * 1001f64.log2();
    assert!((summary.median_sum_rate - expected).abs() < 1e-6 * expected);
    assert!((summary.mean_sinr_db - 30.0).abs() < 1e-6);
    assert_eq!(summary.cdf.last().unwrap().1, 1.0);
}

#[test]
fn stale_zf_loses_rate_on_moving_terminals() {
    let trace = common::street_trace(8.0, 200);
    let mean = |delta| {
        let s = evaluate_series(
            &trace,
            DecoderKind::Zf,
            30.0,
            delta,
            DelayMode::MinOneSample,
        )
        .unwrap();
        s.points.iter().map(|p| p.sum_rate).sum::<f64>() / s.points.len() as f64
    };
    let (r1, r4) = (mean(1), mean(4));
    assert!(r4 <= r1, "Δ=4 {r4} vs Δ=1 {r1}");
}

#[test]
fn single_user_mf_is_interference_free() {
    let mut cfg = common::street_config(0.0, 5);
    cfg.terminals.truncate(1);
    let trace = normalize(&generate_los(&cfg).unwrap()).unwrap();
    let series =
        evaluate_series(&trace, DecoderKind::Mf, 20.0, 0, DelayMode::MinOneSample).unwrap();
    let expected = (1.0 + 1.0 / noise_power_for_snr(20.0)).log2();
    for p in &series.points {
        assert!((p.sum_rate - expected).abs() < 1e-9);
    }
}

#[test]
fn mf_self_gain_near_unity() {
    let trace = common::street_trace(8.0, 40);
    for t in [0, 20, 39] {
        let h = trace.snapshot(t, 0);
        let w = decoder_matrix(&h, DecoderKind::Mf).unwrap();
        for i in 0..h.rows() {
            let mut g = Complex64::new(0.0, 0.0);
            for a in 0..h.cols() {
                g += h.get(i, a) * w.get(i, a);
            }
            assert!((0.9..=1.1).contains(&g.norm()), "user {i}: {}", g.norm());
        }
    }
}

#[test]
fn too_short_trace_is_rejected() {
    let trace = common::static_trace(3);
    assert!(evaluate_series(&trace, DecoderKind::Zf, 30.0, 3, DelayMode::MinOneSample).is_err());
}
