//! The coefficient kernel `Φ(x) = ∫_0^1 (y − x)_+^d ψ(y) dy`, `d = H − 1/α`,
//! and the scale parameters it induces.
//!
//! Every wavelet coefficient of the process is a stable integral against a
//! dilated, shifted copy of `Φ`:
//! `d_{j,k} = 2^{-jd} ∫ Φ(2^j s − k) Z_α(ds)`. `Φ` vanishes on `[1, ∞)` and
//! decays at `-∞` no slower than `(1 + |x|)^{-(2 + 1/α − H)}`. This module
//! evaluates `Φ`, fits that decay, splits the stable integral at
//! `x = 1 − e_j` (`e_j = ⌊2^{jδ}⌋`) into a local part `G` and a far part `R`,
//! and compares simulated coefficients with the representation.

use crate::error::{Error, Result};
use crate::lfsm::{SimConfig, Simulator};
use crate::quad::GaussLegendre;
use crate::stable::{empirical_scale, integral_alpha_mass, Envelope, Quadrature, RngStream, Support};
use crate::stats;
use crate::wavelet::{analyze, WaveletSpec};

/// Default trapezoid resolution of a single `Φ` evaluation.
pub const DEFAULT_PHI_RESOLUTION: usize = 1 << 12;
/// Default δ of the `G`/`R` split.
pub const DEFAULT_DELTA: f64 = 0.25;
/// Relative α-mass left beyond the truncation point of `R`.
pub const R_TAIL_TOLERANCE: f64 = 1e-12;

/// `Φ_{H,α}` for a fixed wavelet.
#[derive(Clone, Debug)]
pub struct Kernel {
    h: f64,
    alpha: f64,
    psi: WaveletSpec,
    resolution: usize,
}

impl Kernel {
    /// Requires `1 < α ≤ 2`, `1/α < H < 1` and `resolution ≥ 2^10`.
    pub fn new(h: f64, alpha: f64, psi: WaveletSpec, resolution: usize) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (1, 2], got {alpha}")));
        }
        if !(h > 1.0 / alpha && h < 1.0) {
            return Err(Error::Domain(format!("H must lie in (1/alpha, 1), got {h}")));
        }
        if resolution < 1 << 10 {
            return Err(Error::Resolution(format!("Φ resolution must be >= 1024, got {resolution}")));
        }
        Ok(Self { h, alpha, psi, resolution })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn psi(&self) -> &WaveletSpec {
        &self.psi
    }

    /// `d = H − 1/α`.
    pub fn exponent(&self) -> f64 {
        self.h - 1.0 / self.alpha
    }

    /// `2 + 1/α − H`, the guaranteed decay rate at `-∞`.
    pub fn decay_exponent(&self) -> f64 {
        2.0 - self.exponent()
    }

    /// Trapezoid evaluation of `Φ(x)`.
    ///
    /// * `x ≥ 1`: exactly zero.
    /// * `0 ≤ x < 1`: the mesh of `[x, 1]` starts at the kink `y = x`, and
    ///   `ψ(x)(y−x)^d` is integrated in closed form.
    /// * `x ≤ −1`: the first-order Taylor part of `(y−x)^d` in `y` is removed
    ///   before integrating; it integrates to zero against `ψ`, and removing it
    ///   avoids the `|x|^2` cancellation of the raw integrand.
    pub fn eval(&self, x: f64) -> f64 {
        let d = self.exponent();
        let psi = &self.psi;
        let n = self.resolution;
        if x >= 1.0 {
            return 0.0;
        }
        if x >= 0.0 {
            let px = psi.eval(x);
            let h = (1.0 - x) / n as f64;
            let mut acc = 0.5 * (1.0 - x).powf(d) * (psi.eval(1.0) - px);
            for i in 1..n {
                let y = x + i as f64 * h;
                acc += (y - x).powf(d) * (psi.eval(y) - px);
            }
            return acc * h + px * (1.0 - x).powf(d + 1.0) / (d + 1.0);
        }
        let h = 1.0 / n as f64;
        if x > -1.0 {
            let mut acc = 0.5 * ((-x).powf(d) * psi.eval(0.0) + (1.0 - x).powf(d) * psi.eval(1.0));
            for i in 1..n {
                let y = i as f64 * h;
                acc += (y - x).powf(d) * psi.eval(y);
            }
            return acc * h;
        }
        let ax = -x;
        let scale = ax.powf(d);
        // (1 + r)^d − 1 − d r with r = y/|x|
        let remainder = |y: f64| {
            let r = y / ax;
            (d * r.ln_1p()).exp_m1() - d * r
        };
        let mut acc = 0.5 * (remainder(0.0) * psi.eval(0.0) + remainder(1.0) * psi.eval(1.0));
        for i in 1..n {
            let y = i as f64 * h;
            acc += remainder(y) * psi.eval(y);
        }
        scale * acc * h
    }

    /// Samples `Φ` on `grid`.
    pub fn profile(&self, grid: &[f64]) -> KernelProfile {
        KernelProfile {
            h: self.h,
            alpha: self.alpha,
            wavelet: self.psi.name().to_string(),
            samples: grid.iter().map(|&x| (x, self.eval(x))).collect(),
            quad_resolution: self.resolution,
        }
    }

    /// Envelope constant `ĉ₁ = sup |Φ(x)| (1+|x|)^{2+1/α−H}` over `[−2^14, 1]`.
    /// The weighted profile is sampled with step 1/64 on `[−16, 1]` and
    /// geometrically further out, then every sampled local maximum is
    /// refined by golden-section search between its neighbours.
    pub fn envelope(&self) -> Envelope {
        let p = self.decay_exponent();
        let weighted = |x: f64| self.eval(x).abs() * (1.0 + x.abs()).powf(p);
        let mut grid: Vec<f64> = (0..=17 * 64).map(|i| 1.0 - i as f64 / 64.0).collect();
        grid.extend((1..=80).map(|i| -16.0 * 2f64.powf(i as f64 * 10.0 / 80.0)));
        let w: Vec<f64> = grid.iter().map(|&x| weighted(x)).collect();
        let mut best = w.iter().cloned().fold(0.0, f64::max);
        for i in 1..grid.len() - 1 {
            if w[i] > 0.0 && w[i] >= w[i - 1] && w[i] >= w[i + 1] {
                best = best.max(golden_max(&weighted, grid[i + 1], grid[i - 1]));
            }
        }
        Envelope { constant: best, exponent: p }
    }
}

/// Largest value of `f` found by golden-section search on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.max(fd);
    for _ in 0..48 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

/// `Φ_{H,α}(x)` by trapezoid quadrature at `resolution` subintervals.
pub fn phi_eval(x: f64, h: f64, alpha: f64, psi: &WaveletSpec, resolution: usize) -> Result<f64> {
    Ok(Kernel::new(h, alpha, psi.clone(), resolution)?.eval(x))
}

/// Independent route to `Φ(x)` for `x < 0` after two integrations by parts:
/// `Φ(x) = d(d−1) ∫_0^1 (y−x)^{d−2} ψ^{(−2)}(y) dy`, with
/// `ψ^{(−2)}(y) = ∫_0^y (y−u) ψ(u) du`. Both integrals use composite
/// Gauss–Legendre rules, and the inner primitive is tabulated once at the
/// outer nodes.
#[derive(Clone, Debug)]
pub struct ByPartsEvaluator {
    d: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    second_primitive: Vec<f64>,
}

impl ByPartsEvaluator {
    pub fn new(h: f64, alpha: f64, psi: &WaveletSpec) -> Self {
        const PANELS: usize = 32;
        let gl = GaussLegendre::new(24);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let width = 1.0 / PANELS as f64;
        for p in 0..PANELS {
            let lo = p as f64 * width;
            for (x, w) in gl.rule_on(lo, lo + width) {
                nodes.push(x);
                weights.push(w);
            }
        }
        let inner = GaussLegendre::new(24);
        let second_primitive = nodes
            .iter()
            .map(|&y| {
                let panels = ((y / width).ceil() as usize).max(1);
                inner.composite(0.0, y, panels, |u| (y - u) * psi.eval(u))
            })
            .collect();
        Self { d: h - 1.0 / alpha, nodes, weights, second_primitive }
    }

    /// `Φ(x)`; only meaningful for `x < 0`.
    pub fn eval(&self, x: f64) -> f64 {
        let d = self.d;
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.second_primitive)
            .map(|((&y, &w), &p)| w * (y - x).powf(d - 2.0) * p)
            .sum();
        d * (d - 1.0) * s
    }

    /// `ψ^{(−2)}` at the internal nodes, as `(y, value)` pairs.
    pub fn second_primitive(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.second_primitive.iter().copied())
    }
}

/// `Φ` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelProfile {
    pub h: f64,
    pub alpha: f64,
    pub wavelet: String,
    pub samples: Vec<(f64, f64)>,
    pub quad_resolution: usize,
}

impl KernelProfile {
    /// Every sample at `x ≥ 1` is exactly zero.
    pub fn support_respected(&self) -> bool {
        self.samples.iter().filter(|(x, _)| *x >= 1.0).all(|(_, v)| *v == 0.0)
    }

    /// `max |Φ(x)| (1+|x|)^{2+1/α−H}` over the samples.
    pub fn envelope_constant(&self) -> f64 {
        let p = 2.0 + 1.0 / self.alpha - self.h;
        self.samples
            .iter()
            .map(|&(x, v)| v.abs() * (1.0 + x.abs()).powf(p))
            .fold(0.0, f64::max)
    }
}

/// Result of [`phi_decay_fit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Least-squares slope of `ln|Φ|` against `ln(1+|x|)`.
    pub slope: f64,
    /// `max |Φ(x)| (1+|x|)^{2+1/α−H}` over the fit grid.
    pub c1_hat: f64,
}

/// Fits the power-law decay of `Φ` on a geometric grid inside `(−∞, −1]`.
pub fn phi_decay_fit(kernel: &Kernel, x_grid: &[f64]) -> Result<DecayFit> {
    if x_grid.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs >= 8 grid points, got {}",
            x_grid.len()
        )));
    }
    if x_grid.iter().any(|&x| !(x <= -1.0)) {
        return Err(Error::Domain("decay grid must lie in (-inf, -1]".into()));
    }
    let ratios: Vec<f64> = x_grid.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().any(|r| (r - ratios[0]).abs() > 1e-9 * ratios[0]) || ratios[0] == 1.0 {
        return Err(Error::Domain("decay grid must be geometrically spaced".into()));
    }
    let profile = kernel.profile(x_grid);
    if profile.samples.iter().any(|(_, v)| *v == 0.0 || !v.is_finite()) {
        return Err(Error::DegenerateFit("Φ vanishes on the decay grid".into()));
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = profile
        .samples
        .iter()
        .map(|&(x, v)| ((1.0 + x.abs()).ln(), v.abs().ln()))
        .unzip();
    let (slope, _) = stats::linear_fit(&lx, &ly)?;
    Ok(DecayFit { slope, c1_hat: profile.envelope_constant() })
}

/// `e_j = ⌊2^{jδ}⌋`.
pub fn window_count(j: u32, delta: f64) -> u64 {
    2f64.powf(j as f64 * delta).floor() as u64
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1/3), got {delta}")));
    }
    Ok(())
}

/// α-masses `∫|Φ|^α` over the unit pieces `[−i, 1−i]`, `i < pieces.len()`,
/// plus the remaining left tail. Splits at any `1 − e` with `e ≤ pieces.len()`
/// are sums of these.
#[derive(Clone, Debug)]
pub struct AlphaMassTable {
    pieces: Vec<f64>,
    tail: f64,
    pub envelope: Envelope,
}

impl AlphaMassTable {
    pub fn new(kernel: &Kernel, max_window: u64, quad: Quadrature) -> Result<Self> {
        let alpha = kernel.alpha();
        let f = |x: f64| kernel.eval(x);
        let pieces = (0..max_window.max(1))
            .map(|i| {
                let hi = 1.0 - i as f64;
                integral_alpha_mass(f, Support::Interval { lo: hi - 1.0, hi }, alpha, quad)
            })
            .collect::<Result<Vec<f64>>>()?;
        let envelope = kernel.envelope();
        let hi = 1.0 - pieces.len() as f64;
        let near = integral_alpha_mass(f, Support::Interval { lo: hi - 1.0, hi }, alpha, quad)?;
        // relative tolerance is taken against the whole-line mass, which the pieces bound below
        let known: f64 = pieces.iter().sum::<f64>() + near;
        let rel = R_TAIL_TOLERANCE * known / near.max(f64::MIN_POSITIVE);
        let tail = integral_alpha_mass(
            f,
            Support::LeftTail { hi: hi - 1.0, envelope, rel_tol: rel },
            alpha,
            quad,
        )? + near;
        Ok(Self { pieces, tail, envelope })
    }

    /// `∫_{1−e}^{1} |Φ|^α`.
    pub fn local(&self, e: u64) -> f64 {
        self.pieces[..e as usize].iter().sum()
    }

    /// `∫_{−∞}^{1−e} |Φ|^α`.
    pub fn far(&self, e: u64) -> f64 {
        self.pieces[e as usize..].iter().sum::<f64>() + self.tail
    }

    /// `∫_{−∞}^{1} |Φ|^α`.
    pub fn total(&self) -> f64 {
        self.far(0)
    }

    pub fn max_window(&self) -> u64 {
        self.pieces.len() as u64
    }
}

/// Scale parameters of the local/far split at one scale `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompositionDiagnostic {
    pub delta: f64,
    pub j: u32,
    pub e_j: u64,
    /// `‖G_{j,l e_j}‖_α`.
    pub g_scale: f64,
    /// `‖R_{j,l e_j}‖_α`.
    pub r_scale: f64,
    /// `(c₆ 2^{−jα(2δ + 1/α − δH)})^{1/α}` with `c₆ = ĉ₁^α 2^{α(2−H)} / (α(2−H))`.
    pub r_bound: f64,
}

impl DecompositionDiagnostic {
    pub fn bound_holds(&self) -> bool {
        self.r_scale <= self.r_bound
    }

    /// False while `e_j = 1`: the local window is a single unit and the far
    /// part is not yet small.
    pub fn asymptotics_engaged(&self) -> bool {
        self.e_j > 1
    }

    pub fn log2_ratio(&self) -> f64 {
        (self.r_scale / self.g_scale).log2()
    }
}

/// Batch computation of [`DecompositionDiagnostic`]s sharing one α-mass table.
pub fn decomposition(
    kernel: &Kernel,
    delta: f64,
    levels: &[u32],
    quad: Quadrature,
) -> Result<Vec<DecompositionDiagnostic>> {
    check_delta(delta)?;
    if levels.iter().any(|&j| j < 1) {
        return Err(Error::Domain("scales must satisfy j >= 1".into()));
    }
    let max_e = levels.iter().map(|&j| window_count(j, delta)).max().unwrap_or(1);
    let table = AlphaMassTable::new(kernel, max_e, quad)?;
    Ok(levels.iter().map(|&j| diagnostic_from_table(kernel, &table, delta, j)).collect())
}

fn diagnostic_from_table(
    kernel: &Kernel,
    table: &AlphaMassTable,
    delta: f64,
    j: u32,
) -> DecompositionDiagnostic {
    let alpha = kernel.alpha();
    let h = kernel.h();
    let e_j = window_count(j, delta);
    let dyadic = 2f64.powi(-(j as i32));
    let g_scale = (dyadic * table.local(e_j)).powf(1.0 / alpha);
    let r_scale = (dyadic * table.far(e_j)).powf(1.0 / alpha);
    let c6 = table.envelope.constant.powf(alpha) * 2f64.powf(alpha * (2.0 - h))
        / (alpha * (2.0 - h));
    let r_bound_alpha =
        c6 * 2f64.powf(-(j as f64) * alpha * (2.0 * delta + 1.0 / alpha - delta * h));
    DecompositionDiagnostic { delta, j, e_j, g_scale, r_scale, r_bound: r_bound_alpha.powf(1.0 / alpha) }
}

/// `‖G_{j,l e_j}‖_α = (2^{−j} ∫_{1−e_j}^{1} |Φ|^α)^{1/α}`; independent of `l`.
pub fn g_scale_param(kernel: &Kernel, j: u32, delta: f64, quad: Quadrature) -> Result<f64> {
    check_delta(delta)?;
    if j < 1 {
        return Err(Error::Domain("j must be >= 1".into()));
    }
    let e = window_count(j, delta);
    let mass = integral_alpha_mass(
        |x| kernel.eval(x),
        Support::Interval { lo: 1.0 - e as f64, hi: 1.0 },
        kernel.alpha(),
        quad,
    )?;
    Ok((2f64.powi(-(j as i32)) * mass).powf(1.0 / kernel.alpha()))
}

/// `(‖R_{j,l e_j}‖_α, bound)`; see [`DecompositionDiagnostic::r_bound`].
pub fn r_scale_param(kernel: &Kernel, j: u32, delta: f64, quad: Quadrature) -> Result<(f64, f64)> {
    let d = decomposition(kernel, delta, &[j], quad)?;
    Ok((d[0].r_scale, d[0].r_bound))
}

/// Scale of `G_{j,l e_j}` straight from its definition: the stable integral
/// of `s ↦ Φ(2^j s − l e_j)` over `[((l−1)e_j + 1) 2^{−j}, (l e_j + 1) 2^{−j}]`.
/// `quad` is in units of `s`.
pub fn g_scale_direct(kernel: &Kernel, j: u32, delta: f64, l: u64, quad: Quadrature) -> Result<f64> {
    check_delta(delta)?;
    let e = window_count(j, delta) as f64;
    let two_j = 2f64.powi(j as i32);
    let shift = l as f64 * e;
    let lo = ((l as f64 - 1.0) * e + 1.0) / two_j;
    let hi = (l as f64 * e + 1.0) / two_j;
    crate::stable::integral_scale(
        |s| kernel.eval(two_j * s - shift),
        Support::Interval { lo, hi },
        kernel.alpha(),
        quad,
    )
}

/// Scale of `R_{j,l e_j}` from its definition: the stable integral of
/// `s ↦ Φ(2^j s − l e_j)` over `s ≤ ((l−1)e_j + 1) 2^{−j}`. The unit of `s`
/// next to the window is integrated with `near` (in units of `s`), the rest
/// of the left tail with `far`.
pub fn r_scale_direct(
    kernel: &Kernel,
    j: u32,
    delta: f64,
    l: u64,
    near: Quadrature,
    far: Quadrature,
) -> Result<f64> {
    check_delta(delta)?;
    let e = window_count(j, delta) as f64;
    let two_j = 2f64.powi(j as i32);
    let shift = l as f64 * e;
    let hi = ((l as f64 - 1.0) * e + 1.0) / two_j;
    let split = (hi - 1.0).min(-1.0);
    let f = |s: f64| kernel.eval(two_j * s - shift);
    let alpha = kernel.alpha();
    let env = kernel.envelope();
    // (1 + |2^j s − l e|) ≥ (1 + |s|) on the tail, so the x-envelope bounds f in s
    let inner = integral_alpha_mass(f, Support::Interval { lo: split, hi }, alpha, near)?;
    let tail = integral_alpha_mass(
        f,
        Support::LeftTail { hi: split, envelope: env, rel_tol: R_TAIL_TOLERANCE },
        alpha,
        far,
    )?;
    Ok((inner + tail).powf(1.0 / alpha))
}

/// Empirical versus representation scale of the level-`j` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRepresentation {
    pub j: u32,
    /// Quantile-matched SαS scale of `d_{j,k}` pooled over `k` and replicates.
    pub empirical_scale: f64,
    /// `2^{−j(H−1/α)} · ‖Φ(2^j · − k)‖_α = 2^{−jH} (∫|Φ|^α)^{1/α}`.
    pub theoretical_scale: f64,
    /// Sample standard deviation of the pooled coefficients.
    pub std_dev: f64,
}

impl LevelRepresentation {
    pub fn ratio(&self) -> f64 {
        self.empirical_scale / self.theoretical_scale
    }

    /// Empirical scale divided by the scale of the stable integral
    /// `∫Φ(2^j s − k) Z_α(ds)`; behaves like `2^{−j(H−1/α)}`.
    pub fn prefactor(&self, kernel_scale: f64, alpha: f64) -> f64 {
        self.empirical_scale / (2f64.powf(-(self.j as f64) / alpha) * kernel_scale)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationReport {
    pub levels: Vec<LevelRepresentation>,
    /// `(∫_{−∞}^{1} |Φ|^α)^{1/α}`.
    pub kernel_scale: f64,
    pub h: f64,
    pub alpha: f64,
    pub replicates: usize,
}

impl RepresentationReport {
    /// `prefactor(j+1) / prefactor(j)` for consecutive levels, to be compared
    /// with `2^{−(H−1/α)}`.
    pub fn adjacent_prefactor_ratios(&self) -> Vec<(u32, f64)> {
        self.levels
            .windows(2)
            .map(|w| {
                let a = w[0].prefactor(self.kernel_scale, self.alpha);
                let b = w[1].prefactor(self.kernel_scale, self.alpha);
                (w[0].j, b / a)
            })
            .collect()
    }
}

/// Coefficients `d_{j,k}` of `n_replicates` simulated paths, for each level in
/// `levels` and, when `k` is given, only that position.
pub fn simulated_coefficients(
    config: &SimConfig,
    psi: &WaveletSpec,
    levels: &[u32],
    k: Option<usize>,
    n_replicates: usize,
    oversample: u32,
) -> Result<Vec<Vec<f64>>> {
    let j_min = *levels.iter().min().ok_or_else(|| Error::Domain("no levels".into()))?;
    let j_max = *levels.iter().max().unwrap();
    let sim = Simulator::new(*config)?;
    let mut pooled = vec![Vec::new(); levels.len()];
    for r in 0..n_replicates {
        let path = sim.path(RngStream::new(config.seed, r as u64))?;
        let pyramid = analyze(&path, psi, j_min, j_max, oversample)?;
        for (slot, &j) in pooled.iter_mut().zip(levels) {
            let level = pyramid.level(j).ok_or(Error::MissingLevel(j))?;
            match k {
                Some(k) => slot.push(*level.get(k).ok_or_else(|| {
                    Error::Alignment(format!("k = {k} outside level {j}"))
                })?),
                None => slot.extend_from_slice(level),
            }
        }
    }
    Ok(pooled)
}

/// Compares simulated coefficient scales with the stable-integral
/// representation, level by level. With `k = None` all positions of a level
/// are pooled (they share one law by stationarity of increments).
pub fn representation_study(
    config: &SimConfig,
    psi: &WaveletSpec,
    levels: &[u32],
    k: Option<usize>,
    n_replicates: usize,
    oversample: u32,
) -> Result<RepresentationReport> {
    if n_replicates < 500 {
        return Err(Error::InsufficientData(format!(
            "representation check needs >= 500 replicates, got {n_replicates}"
        )));
    }
    let kernel = Kernel::new(config.h, config.alpha, psi.clone(), DEFAULT_PHI_RESOLUTION)?;
    let quad = Quadrature::new(1 << 9)?;
    let kernel_scale = AlphaMassTable::new(&kernel, 1, quad)?.total().powf(1.0 / config.alpha);
    let coeffs = simulated_coefficients(config, psi, levels, k, n_replicates, oversample)?;
    let mut out = Vec::with_capacity(levels.len());
    for (&j, c) in levels.iter().zip(&coeffs) {
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (c.len() - 1) as f64;
        out.push(LevelRepresentation {
            j,
            empirical_scale: empirical_scale(c, config.alpha)?,
            theoretical_scale: 2f64.powf(-(j as f64) * config.h) * kernel_scale,
            std_dev: var.sqrt(),
        });
    }
    Ok(RepresentationReport {
        levels: out,
        kernel_scale,
        h: config.h,
        alpha: config.alpha,
        replicates: n_replicates,
    })
}

/// Single-position check at `(j, k)`.
pub fn representation_check(
    config: &SimConfig,
    psi: &WaveletSpec,
    j: u32,
    k: usize,
    n_replicates: usize,
) -> Result<LevelRepresentation> {
    let oversample = config.level().saturating_sub(j);
    let report = representation_study(config, psi, &[j], Some(k), n_replicates, oversample)?;
    Ok(report.levels.into_iter().next().expect("one level requested"))
}
