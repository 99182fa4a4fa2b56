use std::collections::BTreeMap;

use proptest::prelude::*;

use stablewave::estimator::{
    alpha_hat, estimate_trace, holder_diagnostic, holder_slope, inverse_alpha_hat, max_abs,
    normalized_log_max, summarize, RowFlag, TraceSource,
};
use stablewave::lfsm::{SamplePath, SimConfig, Simulator};
use stablewave::stats;
use stablewave::wavelet::{analyze, builtin_wavelet, WaveletPyramid};
use stablewave::Error;

fn pyramid(levels: Vec<(u32, Vec<f64>)>) -> WaveletPyramid {
    WaveletPyramid::from_levels(levels.into_iter().collect::<BTreeMap<_, _>>(), "synthetic").unwrap()
}

/// `d_{j,k} = ±2^{−j(H−1/α)}` with alternating signs.
fn fixed_point_pyramid(h: f64, alpha: f64, levels: std::ops::RangeInclusive<u32>) -> WaveletPyramid {
    pyramid(
        levels
            .map(|j| {
                let scale = 2f64.powf(-(j as f64) * (h - 1.0 / alpha));
                (j, (0..1usize << j).map(|k| if k % 2 == 0 { scale } else { -scale }).collect())
            })
            .collect(),
    )
}

#[test]
fn max_abs_examples() {
    let p = pyramid(vec![(0, vec![-0.3]), (2, vec![0.5, -2.0, 1.0, 0.0]), (1, vec![0.0; 2])]);
    assert_eq!(max_abs(&p, 2).unwrap(), 2.0);
    assert_eq!(max_abs(&p, 0).unwrap(), 0.3);
    assert_eq!(max_abs(&p, 1).unwrap(), 0.0);
    assert!(matches!(alpha_hat(0.0, 1, 0.8), Err(Error::Domain(_))));
    assert!(matches!(max_abs(&p, 5), Err(Error::MissingLevel(5))));
}

#[test]
fn alpha_hat_examples() {
    assert!((alpha_hat(2f64.powi(-4), 10, 0.9).unwrap() - 2.0).abs() < 1e-14);
    assert!((inverse_alpha_hat(2f64.powi(-4), 10, 0.9).unwrap() - 0.5).abs() < 1e-15);
    assert!(matches!(alpha_hat(-1.0, 3, 0.8), Err(Error::Domain(_))));
    assert!(matches!(alpha_hat(1.0, 0, 0.8), Err(Error::Domain(_))));
    assert!(matches!(alpha_hat(1.0, 3, 1.2), Err(Error::Domain(_))));
    assert!(matches!(alpha_hat(2f64.powi(-30), 10, 0.8), Err(Error::Numeric(_))));
}

#[test]
fn theoretical_scale_is_a_fixed_point() {
    for h in [0.7, 0.8, 0.9] {
        for alpha in [1.2, 1.25, 1.5, 1.8, 2.0] {
            if h <= 1.0 / alpha {
                continue;
            }
            for j in 1..=20 {
                let d = 2f64.powf(-(j as f64) * (h - 1.0 / alpha));
                let a = alpha_hat(d, j, h).unwrap();
                assert!((a - alpha).abs() < 1e-12, "H={h} α={alpha} j={j}: {a}");
            }
        }
    }
}

#[test]
fn synthetic_pyramid_gives_constant_trace() {
    let trace = estimate_trace(&fixed_point_pyramid(0.8, 1.5, 1..=10), 0.8).unwrap();
    assert_eq!(trace.rows.len(), 10);
    assert_eq!(trace.h_used, 0.8);
    assert_eq!(trace.wavelet, "synthetic");
    assert_eq!(trace.source, TraceSource::External("external".into()));
    for r in &trace.rows {
        assert_eq!(r.flag, RowFlag::Ok);
        assert!((r.alpha_hat - 1.5).abs() < 1e-12, "j={}", r.j);
        assert!(r.d_j > 0.0);
    }
    assert_eq!(trace.n_flagged(), 0);
}

#[test]
fn empty_range_gives_empty_trace() {
    let trace = estimate_trace(&pyramid(vec![]), 0.8).unwrap();
    assert!(trace.rows.is_empty());
    assert!(summarize(&[trace], false).is_empty());
}

#[test]
fn coarse_level_and_flag_names() {
    let trace = estimate_trace(&fixed_point_pyramid(0.8, 1.5, 0..=2), 0.8).unwrap();
    assert_eq!(trace.row(0).unwrap().flag, RowFlag::CoarseLevel);
    assert!(trace.row(0).unwrap().alpha_hat.is_nan());
    assert_eq!(RowFlag::CoarseLevel.to_string(), "coarse_level");
    assert_eq!(RowFlag::NonPositiveDenominator.to_string(), "nonpositive_denominator");
    assert_eq!(RowFlag::OutOfRange.to_string(), "out_of_range");
    assert!(estimate_trace(&pyramid(vec![]), 1.0).is_err());
}

#[test]
fn summaries_keep_out_of_range_and_drop_invalid() {
    let a = estimate_trace(&fixed_point_pyramid(0.8, 1.5, 1..=3), 0.8).unwrap();
    let b = estimate_trace(&fixed_point_pyramid(0.8, 1.2, 1..=3), 0.8).unwrap();
    let c = estimate_trace(&pyramid(vec![(1, vec![0.0; 2]), (2, vec![8.0; 4]), (3, vec![1e-9; 8])]), 0.8)
        .unwrap();
    let s = summarize(&[a.clone(), b.clone(), c.clone()], false);
    assert_eq!(s.len(), 3);
    // level 1: c is zero_max
    assert_eq!((s[0].n_valid, s[0].n_flagged), (2, 1));
    // level 2: c gives 1/(0.8 + 1.5) < 1, out of range but kept
    assert_eq!((s[1].n_valid, s[1].n_flagged), (3, 1));
    assert!((s[1].median - 1.2).abs() < 1e-12);
    // level 3: c has a nonpositive denominator
    assert_eq!((s[2].n_valid, s[2].n_flagged), (2, 1));
    let clamped = summarize(&[c.clone(), c.clone(), c], true);
    assert_eq!(clamped[1].median, 1.0);
    assert_eq!(clamped[1].iqr, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_a_level_shifts_the_inverse_estimate(
        seed in proptest::collection::vec(0.01f64..10.0, 16),
        c in -0.5f64..0.5,
        j in 1u32..=4,
        h in 0.55f64..0.95,
    ) {
        let level: Vec<f64> = seed.iter().take(1 << j).enumerate()
            .map(|(k, v)| if k % 3 == 0 { -v } else { *v }).collect();
        let mut p = pyramid(vec![(j, level)]);
        let before = inverse_alpha_hat(max_abs(&p, j).unwrap(), j, h).unwrap();
        p.scale_level(j, 2f64.powf(-(j as f64) * c));
        let after = inverse_alpha_hat(max_abs(&p, j).unwrap(), j, h).unwrap();
        prop_assert!((after - before + c).abs() < 1e-12, "{} {} {}", before, after, c);
    }

    #[test]
    fn subset_maximum_is_dominated(values in proptest::collection::vec(-100.0f64..100.0, 64)) {
        let full = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for jp in 0..6u32 {
            let sub = values[..1 << jp].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(sub <= full);
        }
        let p = pyramid(vec![(6, values)]);
        prop_assert_eq!(max_abs(&p, 6).unwrap(), full);
    }
}

#[test]
fn holder_toy_power_law() {
    let n = 1usize << 12;
    let values: Vec<f64> = (0..=n).map(|k| (k as f64 / n as f64).powf(0.3)).collect();
    let slope = holder_slope(&values, &[1, 2, 4, 8, 16, 32, 64, 128]).unwrap();
    assert!((slope - 0.3).abs() < 0.02, "{slope}");
    let c = SimConfig::new(0.8, 1.5, n, 1, 0).unwrap();
    let path = SamplePath::from_values(values, c).unwrap();
    assert_eq!(holder_diagnostic(&path, &[1, 2, 4, 8]).unwrap(), holder_slope(&path.values, &[1, 2, 4, 8]).unwrap());
    let flat = SamplePath::from_values(vec![2.0; n + 1], c).unwrap();
    assert!(matches!(holder_diagnostic(&flat, &[1, 2]), Err(Error::DegenerateFit(_))));
}

fn median_holder_slope(config: SimConfig, n_paths: u64, lags: &[usize]) -> f64 {
    let sim = Simulator::new(config).unwrap();
    let slopes: Vec<f64> =
        (0..n_paths).map(|r| holder_diagnostic(&sim.replicate(r).unwrap(), lags).unwrap()).collect();
    stats::median(&slopes).unwrap()
}

#[test]
fn holder_slope_of_simulated_lfsm() {
    let lags: Vec<usize> = (0..10).map(|i| 1 << i).collect();
    let c = SimConfig::new(0.8, 1.5, 1 << 18, 8, 77).unwrap();
    let m = median_holder_slope(c, 50, &lags);
    assert!((m - (0.8 - 1.0 / 1.5)).abs() < 0.05, "median slope {m}");
}

#[test]
fn holder_slope_of_brownian_motion() {
    let lags: Vec<usize> = (0..10).map(|i| 1 << i).collect();
    let c = SimConfig::generator_regime(0.5, 2.0, 1 << 16, 1, 78).unwrap();
    let m = median_holder_slope(c, 50, &lags);
    assert!((m - 0.5).abs() < 0.07, "median slope {m}");
}

#[test]
fn normalized_log_max_approaches_the_critical_exponent() {
    let (h, alpha) = (0.8, 1.5);
    let target = h - 1.0 / alpha;
    let levels = [4u32, 6, 8, 10, 12];
    let psi = builtin_wavelet("trig2").unwrap();
    let sim = Simulator::new(SimConfig::new(h, alpha, 1 << 16, 8, 79).unwrap()).unwrap();
    let mut by_level = vec![Vec::new(); levels.len()];
    for r in 0..40 {
        let p = analyze(&sim.replicate(r).unwrap(), &psi, 4, 12, 4).unwrap();
        for (slot, &j) in by_level.iter_mut().zip(&levels) {
            slot.push(normalized_log_max(max_abs(&p, j).unwrap(), j).unwrap());
        }
    }
    let eps: Vec<f64> =
        by_level.iter().map(|v| (stats::median(v).unwrap() - target).abs()).collect();
    assert!(eps.windows(2).all(|w| w[1] < w[0]), "ε_j {eps:?}");
    assert!(normalized_log_max(0.0, 3).is_err());
}
