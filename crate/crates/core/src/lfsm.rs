//! Moving-average simulation of linear fractional stable motion on `[0, 1]`.
//!
//! The stochastic integral `X(t) = ∫ {(t-s)_+^d - (-s)_+^d} Z_α(ds)`,
//! `d = H - 1/α`, is replaced by a midpoint Riemann sum on the mesh `1/N`,
//! with the history truncated at `s = -M`. Writing `g(i) = ((i + 1/2)/N)^d`
//! for `i ≥ 0` and `g(i) = 0` otherwise, the increment over cell `k` is
//!
//! ```text
//! X(k/N) - X((k-1)/N) = Σ_m a_{k-1-m} ξ_m,   a_0 = g(0),  a_i = g(i) - g(i-1),
//! ```
//!
//! where `ξ_m` is the innovation on `[m/N, (m+1)/N)`, SαS with scale
//! `N^{-1/α}`. The increments form one linear convolution, done by FFT, and
//! the path is their running sum from `X(0) = 0`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::stable::{sas_fill, RngStream, StableLaw};

/// Default kernel memory in unit lengths.
pub const DEFAULT_TRUNCATION: u32 = 8;

/// Largest weight vector `N (M + 1)` accepted by default.
pub const DEFAULT_MAX_WEIGHTS: usize = 1 << 25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub h: f64,
    pub alpha: f64,
    pub n_grid: usize,
    pub truncation: u32,
    pub seed: u64,
}

impl SimConfig {
    /// Inference regime: `1 < α < 2` and `1/α < H < 1`.
    pub fn new(h: f64, alpha: f64, n_grid: usize, truncation: u32, seed: u64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (1, 2), got {alpha}")));
        }
        if !(h > 1.0 / alpha && h < 1.0) {
            return Err(Error::Domain(format!(
                "H must lie in (1/alpha, 1) = ({}, 1), got {h}",
                1.0 / alpha
            )));
        }
        Self::check_mesh(n_grid, truncation)?;
        Ok(Self { h, alpha, n_grid, truncation, seed })
    }

    /// Generator-only regime used by test oracles: `1 < α ≤ 2` and
    /// `1/α ≤ H < 1`, which admits fractional Brownian motion (`α = 2`) and
    /// Brownian motion (`α = 2, H = 1/2`).
    pub fn generator_regime(
        h: f64,
        alpha: f64,
        n_grid: usize,
        truncation: u32,
        seed: u64,
    ) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (1, 2], got {alpha}")));
        }
        if !(h >= 1.0 / alpha && h < 1.0) {
            return Err(Error::Domain(format!("H must lie in [1/alpha, 1), got {h}")));
        }
        Self::check_mesh(n_grid, truncation)?;
        Ok(Self { h, alpha, n_grid, truncation, seed })
    }

    fn check_mesh(n_grid: usize, truncation: u32) -> Result<()> {
        if n_grid < 2 || !n_grid.is_power_of_two() {
            return Err(Error::Domain(format!(
                "n_grid must be a power of two >= 2, got {n_grid}"
            )));
        }
        if truncation < 1 {
            return Err(Error::Domain("truncation must be >= 1".into()));
        }
        Ok(())
    }

    /// Kernel exponent `H - 1/α`.
    pub fn exponent(&self) -> f64 {
        self.h - 1.0 / self.alpha
    }

    pub fn n_weights(&self) -> usize {
        self.n_grid * (self.truncation as usize + 1)
    }

    /// `log2(n_grid)`.
    pub fn level(&self) -> u32 {
        self.n_grid.trailing_zeros()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One simulated path, `values[k] = X(k / N)` for `k = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub config: SimConfig,
    /// Substream that produced the innovations.
    pub stream: RngStream,
}

impl SamplePath {
    /// Wraps externally supplied samples on a dyadic grid.
    pub fn from_values(values: Vec<f64>, config: SimConfig) -> Result<Self> {
        if values.len() != config.n_grid + 1 {
            return Err(Error::Alignment(format!(
                "expected {} samples for n_grid = {}, got {}",
                config.n_grid + 1,
                config.n_grid,
                values.len()
            )));
        }
        Ok(Self { values, config, stream: RngStream::new(config.seed, 0) })
    }

    pub fn n_grid(&self) -> usize {
        self.values.len() - 1
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_grid() as f64;
        (0..self.values.len()).map(move |k| k as f64 / n)
    }
}

fn g(d: f64, n: f64, i: usize) -> f64 {
    ((i as f64 + 0.5) / n).powf(d)
}

/// Increment weights `a_0 .. a_{N(M+1)-1}`.
pub fn ma_weights(config: &SimConfig) -> Vec<f64> {
    let d = config.exponent();
    let n = config.n_grid as f64;
    let len = config.n_weights();
    let mut out = Vec::with_capacity(len);
    let mut prev = 0.0;
    for i in 0..len {
        let cur = g(d, n, i);
        out.push(cur - prev);
        prev = cur;
    }
    out
}

/// Coefficients `c_m` of `X(k/N) = Σ_m c_m ξ_m` for cells `m = -NM .. k-1`,
/// i.e. the kernel section `f_{k/N}` at the cell midpoints. Index 0 is `m = -NM`.
pub fn kernel_section(config: &SimConfig, k: usize) -> Vec<f64> {
    let d = config.exponent();
    let n = config.n_grid as f64;
    let nm = config.n_grid as i64 * config.truncation as i64;
    (-nm..k as i64)
        .map(|m| {
            let s = (m as f64 + 0.5) / n;
            let t = k as f64 / n;
            (t - s).max(0.0).powf(d) - if s < 0.0 { (-s).powf(d) } else { 0.0 }
        })
        .collect()
}

/// Reusable simulator: the weight spectrum and FFT plans are computed once
/// per configuration and shared across replicates.
pub struct Simulator {
    config: SimConfig,
    fft_len: usize,
    weight_spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    innovation: StableLaw,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("config", &self.config)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        Self::with_cap(config, DEFAULT_MAX_WEIGHTS)
    }

    pub fn with_cap(config: SimConfig, max_weights: usize) -> Result<Self> {
        let len = config.n_weights();
        if len > max_weights {
            return Err(Error::Resource(format!(
                "N (M + 1) = {len} exceeds the cap of {max_weights}"
            )));
        }
        // outputs needed sit at indices NM .. NM + N - 1 < L, so L + N points
        // keep them free of wrap-around
        let fft_len = (len + config.n_grid).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut weight_spectrum = vec![Complex64::new(0.0, 0.0); fft_len];
        for (slot, w) in weight_spectrum.iter_mut().zip(ma_weights(&config)) {
            slot.re = w;
        }
        forward.process(&mut weight_spectrum);
        let innovation =
            StableLaw::new(config.alpha, (config.n_grid as f64).powf(-1.0 / config.alpha))?;
        Ok(Self { config, fft_len, weight_spectrum, forward, inverse, innovation })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Innovations `ξ_{-NM} .. ξ_{N-1}` drawn in index order from `stream`.
    pub fn innovations(&self, stream: RngStream) -> Result<Vec<f64>> {
        let mut xi = vec![0.0; self.config.n_weights()];
        sas_fill(&self.innovation, &mut stream.rng(), &mut xi)?;
        Ok(xi)
    }

    /// Path driven by `stream`.
    pub fn path(&self, stream: RngStream) -> Result<SamplePath> {
        let xi = self.innovations(stream)?;
        let values = self.path_from_innovations(&xi);
        Ok(SamplePath { values, config: self.config, stream })
    }

    /// Replicate `index` of this configuration's seed.
    pub fn replicate(&self, index: u64) -> Result<SamplePath> {
        self.path(RngStream::new(self.config.seed, index))
    }

    /// Deterministic map from innovations to path values.
    pub fn path_from_innovations(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.config.n_grid;
        let nm = n * self.config.truncation as usize;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (slot, &x) in buf.iter_mut().zip(xi) {
            slot.re = x;
        }
        self.forward.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(&self.weight_spectrum) {
            *b *= w;
        }
        self.inverse.process(&mut buf);
        let norm = 1.0 / self.fft_len as f64;
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for k in 1..=n {
            acc += buf[nm + k - 1].re * norm;
            values.push(acc);
        }
        values
    }
}

/// One path for `config` from stream `(config.seed, 0)`.
pub fn simulate_path(config: &SimConfig) -> Result<SamplePath> {
    Simulator::new(*config)?.replicate(0)
}

/// α-mass of the `t = 1` kernel dropped by the truncation at `s = -M`,
/// `∫_{-∞}^{-M} |(1-s)^d - (-s)^d|^α ds`, by Gauss–Legendre on geometric panels.
pub fn truncated_alpha_mass(h: f64, alpha: f64, truncation: u32) -> f64 {
    let d = h - 1.0 / alpha;
    let gl = crate::quad::GaussLegendre::new(20);
    let f = |s: f64| {
        let u = -s;
        // (1+u)^d - u^d, computed without cancellation
        let diff = u.powf(d) * ((d * (1.0 / u).ln_1p()).exp_m1());
        diff.abs().powf(alpha)
    };
    let mut total = 0.0;
    let mut lo = truncation as f64;
    for _ in 0..200 {
        let hi = lo * 2.0;
        let piece = gl.integrate(-hi, -lo, f);
        total += piece;
        if piece < 1e-16 * total {
            break;
        }
        lo = hi;
    }
    total
}

/// Empirical comparison of increment scales at two lags.
#[derive(Clone, Debug, PartialEq)]
pub struct LagRatio {
    pub h1: f64,
    pub h2: f64,
    /// `ŝ(h1) / ŝ(h2)`.
    pub ratio: f64,
    /// `(h1 / h2)^H`.
    pub expected: f64,
    /// `ratio / expected - 1`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<LagRatio>,
}

/// Pooled increments `X(t + h) - X(t)` over all paths and all grid `t`.
pub fn pooled_increments(paths: &[SamplePath], lag: usize) -> Vec<f64> {
    paths
        .iter()
        .flat_map(|p| p.values.windows(lag + 1).map(|w| w[lag] - w[0]).collect::<Vec<_>>())
        .collect()
}

fn lag_in_samples(h: f64, n: usize) -> Result<usize> {
    let steps = h * n as f64;
    let rounded = steps.round();
    if !(h > 0.0) || (steps - rounded).abs() > 1e-9 * steps.max(1.0) || rounded < 1.0 {
        return Err(Error::Alignment(format!("lag {h} is not a multiple of the mesh 1/{n}")));
    }
    if rounded as usize > n {
        return Err(Error::Alignment(format!("lag {h} exceeds the unit interval")));
    }
    Ok(rounded as usize)
}

/// For each `(h1, h2)`, compares the ratio of empirical increment scales with
/// `(h1/h2)^H`. Scales are estimated by the median of absolute increments,
/// which is proportional to the SαS scale at fixed α.
pub fn increment_scaling_check(paths: &[SamplePath], lag_pairs: &[(f64, f64)]) -> Result<ScalingReport> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InsufficientData("no paths supplied".into()))?;
    let config = first.config;
    if paths.iter().any(|p| p.config != config.with_seed(p.config.seed)) {
        return Err(Error::Alignment("paths do not share a configuration".into()));
    }
    let n = config.n_grid;
    let scale = |h: f64| -> Result<f64> {
        let lag = lag_in_samples(h, n)?;
        let inc: Vec<f64> = pooled_increments(paths, lag).into_iter().map(f64::abs).collect();
        crate::stats::median(&inc)
            .ok_or_else(|| Error::InsufficientData("no increments".into()))
    };
    let mut rows = Vec::with_capacity(lag_pairs.len());
    for &(h1, h2) in lag_pairs {
        let (s1, s2) = (scale(h1)?, scale(h2)?);
        let ratio = if h1 == h2 { 1.0 } else { s1 / s2 };
        let expected = (h1 / h2).powf(config.h);
        rows.push(LagRatio { h1, h2, ratio, expected, deviation: ratio / expected - 1.0 });
    }
    Ok(ScalingReport { rows })
}
