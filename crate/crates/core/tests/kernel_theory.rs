use stablewave::kernel::{
    decomposition, g_scale_direct, g_scale_param, phi_decay_fit, phi_eval, r_scale_direct,
    r_scale_param, representation_check, representation_study, window_count, AlphaMassTable,
    ByPartsEvaluator, Kernel, DEFAULT_PHI_RESOLUTION,
};
use stablewave::lfsm::SimConfig;
use stablewave::quad::trapezoid;
use stablewave::stable::{geometric_grid, integral_alpha_mass, Quadrature, Support};
use stablewave::stats;
use stablewave::wavelet::builtin_wavelet;

/// `∫₀¹ y^{2/15} (sin 2πy − 2 sin 4πy) dy`, 30-digit adaptive quadrature.
const PHI0_TRIG2: f64 = 0.009_790_339_758_958_312;

fn kernel(h: f64, alpha: f64, name: &str, res: usize) -> Kernel {
    Kernel::new(h, alpha, builtin_wavelet(name).unwrap(), res).unwrap()
}

#[test]
fn phi_at_zero_matches_fine_quadrature() {
    let psi = builtin_wavelet("trig2").unwrap();
    let d = 0.8 - 1.0 / 1.5;
    let oracle = trapezoid(|y| y.powf(d) * psi.eval(y), 0.0, 1.0, 1 << 22);
    assert!((oracle - PHI0_TRIG2).abs() < 1e-12, "{oracle}");
    let v = phi_eval(0.0, 0.8, 1.5, &psi, 1 << 16).unwrap();
    assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    let coarse = phi_eval(0.0, 0.8, 1.5, &psi, 1 << 10).unwrap();
    assert!((coarse - oracle).abs() < 1e-5, "{coarse}");
}

#[test]
fn phi_vanishes_right_of_one() {
    for name in ["trig2", "poly-bump"] {
        let k = kernel(0.8, 1.5, name, DEFAULT_PHI_RESOLUTION);
        for x in [1.0, 1.0 + 1e-12, 1.5, 2.0, 100.0] {
            assert_eq!(k.eval(x), 0.0, "{name} x={x}");
        }
        assert!(k.eval(0.5) != 0.0);
        assert!(k.profile(&geometric_grid(1.0, 64.0, 20)).support_respected());
    }
    assert!(phi_eval(0.0, 0.8, 1.5, &builtin_wavelet("trig2").unwrap(), 512).is_err());
}

#[test]
fn phi_is_continuous_across_route_boundaries() {
    let k = kernel(0.8, 1.5, "poly-bump", 1 << 14);
    for x0 in [-1.0f64, 0.0] {
        let gap = (k.eval(x0 - 1e-9) - k.eval(x0 + 1e-9)).abs();
        assert!(gap < 1e-7, "x0={x0}: {gap}");
    }
    assert!(k.eval(1.0 - 1e-6).abs() < 1e-5);
}

#[test]
fn decay_slope_examples() {
    let grid = geometric_grid(-16.0, -4096.0, 40);
    for (h, alpha, exponent) in [(0.8, 1.5, -1.8667), (0.9, 1.25, -1.9)] {
        let k = kernel(h, alpha, "poly-bump", DEFAULT_PHI_RESOLUTION);
        assert!((-k.decay_exponent() - exponent).abs() < 1e-4);
        let fit = phi_decay_fit(&k, &grid).unwrap();
        assert!((fit.slope - exponent).abs() < 0.02, "H={h} α={alpha}: {}", fit.slope);
        assert!(fit.c1_hat > 0.0);
    }
}

#[test]
fn trig2_decays_one_order_faster() {
    // ∫t²ψ = 0 for trig2, so the first surviving term is one power further down
    let k = kernel(0.8, 1.5, "trig2", DEFAULT_PHI_RESOLUTION);
    let fit = phi_decay_fit(&k, &geometric_grid(-16.0, -4096.0, 40)).unwrap();
    assert!((fit.slope + k.decay_exponent() + 1.0).abs() < 0.05, "{}", fit.slope);
}

#[test]
fn decay_fit_rejects_bad_grids() {
    let k = kernel(0.8, 1.5, "poly-bump", DEFAULT_PHI_RESOLUTION);
    assert!(phi_decay_fit(&k, &geometric_grid(-16.0, -4096.0, 5)).is_err());
    assert!(phi_decay_fit(&k, &geometric_grid(-0.5, -4096.0, 10)).is_err());
    let linear: Vec<f64> = (0..10).map(|i| -2.0 - i as f64).collect();
    assert!(phi_decay_fit(&k, &linear).is_err());
}

#[test]
fn by_parts_form_agrees_with_direct_quadrature() {
    let (h, alpha) = (0.8, 1.5);
    let poly = builtin_wavelet("poly-bump").unwrap();
    let direct = kernel(h, alpha, "poly-bump", 1 << 18);
    let by_parts = ByPartsEvaluator::new(h, alpha, &poly);
    for x in [-1.5, -10.0, -16.0, -100.0, -4096.0] {
        let (a, b) = (direct.eval(x), by_parts.eval(x));
        assert!(((a - b) / b).abs() < 1e-8, "poly-bump x={x}: {a:e} vs {b:e}");
    }
    let trig2 = builtin_wavelet("trig2").unwrap();
    let a = phi_eval(-10.0, h, alpha, &trig2, 1 << 20).unwrap();
    let b = ByPartsEvaluator::new(h, alpha, &trig2).eval(-10.0);
    assert!(((a - b) / b).abs() < 1e-8, "trig2: {a:e} vs {b:e}");
}

#[test]
fn second_primitive_vanishes_at_one() {
    let by_parts = ByPartsEvaluator::new(0.8, 1.5, &builtin_wavelet("trig2").unwrap());
    let max = by_parts.second_primitive().fold(0.0, |m: f64, (_, v)| m.max(v.abs()));
    assert!(max > 1e-3);
    // ψ^{(-2)}(y) = (sin 4πy)/(8π²) − (sin 2πy)/(4π²) for trig2
    let pi = std::f64::consts::PI;
    for (y, v) in by_parts.second_primitive() {
        let exact = (4.0 * pi * y).sin() / (8.0 * pi * pi) - (2.0 * pi * y).sin() / (4.0 * pi * pi);
        assert!((v - exact).abs() < 1e-12, "y={y}");
    }
}

#[test]
fn envelope_holds_out_of_sample() {
    for name in ["trig2", "poly-bump"] {
        let k = kernel(0.8, 1.5, name, DEFAULT_PHI_RESOLUTION);
        let env = k.envelope();
        // offsets chosen off the fitting grid
        let mut grid: Vec<f64> = (0..17_000).map(|i| 0.999_7 - i as f64 / 1000.0 - 1.3e-4).collect();
        grid.extend(geometric_grid(-16.3, -16_000.0, 300));
        let worst = grid
            .iter()
            .map(|&x| k.eval(x).abs() * (1.0 + x.abs()).powf(env.exponent) / env.constant)
            .fold(0.0, f64::max);
        assert!(worst <= 1.0, "{name}: {worst}");
        assert!(worst > 0.9, "{name}: envelope constant is loose, {worst}");
    }
}

#[test]
fn window_counts_follow_the_floor() {
    for (j, delta, e) in [(8, 0.25, 4), (9, 0.25, 4), (12, 0.25, 8), (16, 0.25, 16), (10, 0.3, 8)] {
        assert_eq!(window_count(j, delta), e, "j={j} δ={delta}");
    }
    for j in 1..=99 {
        assert_eq!(window_count(j, 0.01), 1);
    }
}

#[test]
fn local_scale_grows_with_the_window() {
    let k = kernel(0.8, 1.5, "trig2", 1 << 10);
    let quad = Quadrature::new(1 << 10).unwrap();
    let table = AlphaMassTable::new(&k, 64, quad).unwrap();
    let locals: Vec<f64> = (1..=64).map(|e| table.local(e)).collect();
    assert!(locals.windows(2).all(|w| w[1] >= w[0]));
    // same j, larger δ, larger e_j
    let j = 12;
    let small = g_scale_param(&k, j, 0.1, quad).unwrap();
    let large = g_scale_param(&k, j, 0.3, quad).unwrap();
    assert!(window_count(j, 0.3) > window_count(j, 0.1));
    assert!(large >= small);
    for e in [1, 5, 64] {
        assert!((table.local(e) + table.far(e) - table.total()).abs() < 1e-14 * table.total());
    }
}

#[test]
fn local_mass_converges_to_the_full_line() {
    let (h, alpha) = (0.8, 1.5);
    let k = kernel(h, alpha, "trig2", 1 << 10);
    let quad = Quadrature::new(1 << 10).unwrap();
    // oracle: two long intervals at their own resolutions plus the envelope
    // bound on what lies beyond
    let env = k.envelope();
    let lo = -16384.0;
    let mass = |lo: f64, hi: f64, res: usize| {
        integral_alpha_mass(|x| k.eval(x), Support::Interval { lo, hi }, alpha, Quadrature::new(res).unwrap())
            .unwrap()
    };
    let body = mass(-16.0, 1.0, 1 << 12) + mass(-256.0, -16.0, 1 << 5) + mass(lo, -256.0, 1 << 2);
    let p = alpha * env.exponent;
    let beyond = env.constant.powf(alpha) * (1.0 - lo).powf(1.0 - p) / (p - 1.0);
    assert!(beyond < 1e-6 * body, "{beyond} {body}");
    let table = AlphaMassTable::new(&k, 64, quad).unwrap();
    assert!((table.total() / body - 1.0).abs() < 1e-6, "{} vs {body}", table.total());

    let gaps: Vec<f64> = [8, 12, 16, 20, 24]
        .iter()
        .map(|&j| {
            let g = g_scale_param(&k, j, 0.25, quad).unwrap();
            1.0 - 2f64.powi(j as i32) * g.powf(alpha) / body
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps.iter().all(|&g| g >= -1e-6), "{gaps:?}");
    assert!(gaps[4] < 1e-3, "{gaps:?}");
}

#[test]
fn far_scale_is_bounded_and_dominated() {
    let k = kernel(0.8, 1.5, "trig2", DEFAULT_PHI_RESOLUTION);
    let levels: Vec<u32> = (8..=16).collect();
    let diags = decomposition(&k, 0.25, &levels, Quadrature::new(1 << 10).unwrap()).unwrap();
    for d in &diags {
        assert_eq!(d.e_j, window_count(d.j, 0.25));
        assert!(d.bound_holds(), "j={}: {} > {}", d.j, d.r_scale, d.r_bound);
        assert!(d.asymptotics_engaged());
    }
    let x: Vec<f64> = diags.iter().map(|d| d.j as f64).collect();
    let y: Vec<f64> = diags.iter().map(|d| d.log2_ratio()).collect();
    let (slope, _) = stats::linear_fit(&x, &y).unwrap();
    assert!(slope < -0.1, "log2(r/g) slope {slope}");
}

#[test]
fn scale_params_match_batch_diagnostics() {
    let k = kernel(0.8, 1.5, "poly-bump", DEFAULT_PHI_RESOLUTION);
    let quad = Quadrature::new(1 << 10).unwrap();
    let d = &decomposition(&k, 0.25, &[10], quad).unwrap()[0];
    let g = g_scale_param(&k, 10, 0.25, quad).unwrap();
    let (r, bound) = r_scale_param(&k, 10, 0.25, quad).unwrap();
    assert!((g / d.g_scale - 1.0).abs() < 1e-12);
    assert_eq!((r, bound), (d.r_scale, d.r_bound));
    // G and R split the whole coefficient: g^α + r^α = 2^{-j} ∫|Φ|^α
    let total = AlphaMassTable::new(&k, 1, quad).unwrap().total();
    let sum = g.powf(1.5) + r.powf(1.5);
    assert!((sum / (total / 1024.0) - 1.0).abs() < 1e-10, "{sum}");
    assert!(g_scale_param(&k, 0, 0.25, quad).is_err());
    assert!(g_scale_param(&k, 4, 0.4, quad).is_err());
    assert!(r_scale_param(&k, 4, 0.0, quad).is_err());
}

#[test]
fn tiny_delta_is_reported_as_pre_asymptotic() {
    let k = kernel(0.8, 1.5, "trig2", DEFAULT_PHI_RESOLUTION);
    let diags = decomposition(&k, 0.01, &[4, 8, 12], Quadrature::new(1 << 10).unwrap()).unwrap();
    for d in &diags {
        assert_eq!(d.e_j, 1);
        assert!(!d.asymptotics_engaged());
    }
    // with a one-cell window the far part never shrinks relative to the local one
    let first = diags[0].log2_ratio();
    for d in &diags {
        assert!((d.log2_ratio() - first).abs() < 1e-12, "j={}", d.j);
    }
}

#[test]
fn direct_definitions_match_closed_forms() {
    let k = kernel(0.8, 1.5, "trig2", DEFAULT_PHI_RESOLUTION);
    let j = 6;
    let quad = Quadrature::new(1 << 10).unwrap();
    let g = g_scale_param(&k, j, 0.25, quad).unwrap();
    let (r, _) = r_scale_param(&k, j, 0.25, quad).unwrap();
    let coarse = kernel(0.8, 1.5, "trig2", 1 << 10);
    let (rc, _) = r_scale_param(&coarse, j, 0.25, Quadrature::new(1 << 12).unwrap()).unwrap();
    for l in [0, 3] {
        let gd = g_scale_direct(&k, j, 0.25, l, Quadrature::new(3 << (8 + j)).unwrap()).unwrap();
        assert!((gd / g - 1.0).abs() < 1e-6, "G l={l}: {gd} vs {g}");
        let rd = r_scale_direct(
            &coarse,
            j,
            0.25,
            l,
            Quadrature::new(3 << (9 + j)).unwrap(),
            Quadrature::new(1 << 9).unwrap(),
        )
        .unwrap();
        assert!((rd / rc - 1.0).abs() < 1e-6, "R l={l}: {rd} vs {rc}");
    }
    assert!((rc / r - 1.0).abs() < 1e-3, "{rc} vs {r}");
}

#[test]
fn representation_at_fixed_position() {
    let c = SimConfig::new(0.8, 1.5, 1 << 14, 8, 31).unwrap();
    let psi = builtin_wavelet("trig2").unwrap();
    let rep = representation_check(&c, &psi, 6, 10, 2000).unwrap();
    assert!((0.9..=1.1).contains(&rep.ratio()), "ratio {}", rep.ratio());
    assert!(representation_check(&c, &psi, 6, 10, 100).is_err());
}

#[test]
fn gaussian_coefficients_have_root_two_spread() {
    let c = SimConfig::generator_regime(0.7, 2.0, 1 << 12, 8, 41).unwrap();
    let psi = builtin_wavelet("trig2").unwrap();
    let report = representation_study(&c, &psi, &[5], None, 600, 7).unwrap();
    let level = &report.levels[0];
    let ratio = level.std_dev / (2f64.sqrt() * level.theoretical_scale);
    assert!((ratio - 1.0).abs() < 0.03, "sd ratio {ratio}");
}
