//! Symmetric α-stable variates, seeded substreams, and the scale calculus of
//! stable stochastic integrals.
//!
//! The scale parameter convention is the usual one: `Y ~ SαS(α, σ)` has
//! characteristic function `exp(-σ^α |u|^α)`, so `α = 2` is a centred Gaussian
//! with variance `2σ²` and `α = 1` is Cauchy with scale `σ`. For a
//! deterministic `f`, `∫ f dZ_α` is SαS with `σ^α = ∫ |f|^α`.

use std::f64::consts::PI;

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::stats;

/// Generator behind every [`RngStream`].
pub type StreamRng = ChaCha8Rng;

/// Parameters of a symmetric α-stable law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableLaw {
    alpha: f64,
    scale: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("scale must be finite and >= 0, got {scale}")));
        }
        Ok(Self { alpha, scale })
    }

    /// Unit-scale law.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Distribution<f64> for StableLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * standard_variate(self.alpha, rng)
    }
}

/// Chambers–Mallows–Stuck transform specialised to zero skewness.
fn standard_variate<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v = PI * (u - 0.5);
    let w: f64 = rng.sample(Exp1);
    let a = alpha;
    (a * v).sin() / v.cos().powf(1.0 / a) * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a)
}

/// One draw from `law`.
pub fn sas_sample<R: Rng + ?Sized>(law: &StableLaw, rng: &mut R) -> Result<f64> {
    if law.scale <= 0.0 {
        return Err(Error::Domain("sampling requires a positive scale".into()));
    }
    Ok(law.sample(rng))
}

/// Fills `out` with i.i.d. draws, in index order.
pub fn sas_fill<R: Rng + ?Sized>(law: &StableLaw, rng: &mut R, out: &mut [f64]) -> Result<()> {
    if law.scale <= 0.0 {
        return Err(Error::Domain("sampling requires a positive scale".into()));
    }
    for x in out.iter_mut() {
        *x = law.sample(rng);
    }
    Ok(())
}

/// A reproducible substream: `(seed, stream_index)` fully determines the
/// variate sequence.
///
/// The 256-bit ChaCha8 key is four consecutive SplitMix64 outputs started
/// at `seed`; `stream_index` is used verbatim as the ChaCha stream id, so
/// distinct indices never share a keystream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    pub fn rng(&self) -> StreamRng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// SplitMix64 step (Steele, Lea & Flood). Advances `state` and returns the
/// avalanche-mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Power-law bound `|f(x)| ≤ constant · (1 + |x|)^(-exponent)` used to
/// truncate left-infinite supports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope {
    pub constant: f64,
    pub exponent: f64,
}

impl Envelope {
    /// `∫_{-∞}^{-t} (constant (1+|x|)^(-exponent))^α dx` for `t ≥ 0`.
    pub fn alpha_tail(&self, alpha: f64, t: f64) -> f64 {
        let q = self.exponent * alpha - 1.0;
        self.constant.powf(alpha) * (1.0 + t).powf(-q) / q
    }

    /// Smallest `t ≥ 0` with `alpha_tail(alpha, t) ≤ mass`.
    pub fn truncation_point(&self, alpha: f64, mass: f64) -> f64 {
        let q = self.exponent * alpha - 1.0;
        let t = (self.constant.powf(alpha) / (q * mass)).powf(1.0 / q) - 1.0;
        t.max(0.0)
    }
}

/// Where an integrand lives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    Interval { lo: f64, hi: f64 },
    /// `(-∞, hi]`; the part below the truncation point carries at most
    /// `rel_tol` of the α-mass according to `envelope`.
    LeftTail { hi: f64, envelope: Envelope, rel_tol: f64 },
}

/// Composite trapezoid with `resolution` subintervals per unit length.
/// On a left tail the far part is integrated in the variable
/// `v = ln(1 + a - x)` with the same density per unit of `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub resolution: usize,
}

impl Quadrature {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Resolution("quadrature resolution must be positive".into()));
        }
        Ok(Self { resolution })
    }

    fn panels(&self, length: f64) -> usize {
        ((length * self.resolution as f64).ceil() as usize).max(1)
    }
}

/// `∫ |f|^α` over `support`.
pub fn integral_alpha_mass<F: Fn(f64) -> f64>(
    f: F,
    support: Support,
    alpha: f64,
    quad: Quadrature,
) -> Result<f64> {
    let g = |x: f64| -> Result<f64> {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("integrand is not finite at {x}: {v}")));
        }
        Ok(v.abs().powf(alpha))
    };
    match support {
        Support::Interval { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
            }
            uniform_trapezoid(&g, lo, hi, quad.panels(hi - lo))
        }
        Support::LeftTail { hi, envelope, rel_tol } => {
            if !(envelope.exponent * alpha > 1.0) {
                return Err(Error::Domain(
                    "envelope is not α-integrable at -∞".into(),
                ));
            }
            // near part: [a, hi] with a ≤ -1 and at least one unit long
            let a = (hi - 1.0).min(-1.0);
            let near = uniform_trapezoid(&g, a, hi, quad.panels(hi - a))?;
            // the total is at least `near`, so this truncation point is conservative
            let t = envelope
                .truncation_point(alpha, rel_tol * near.max(f64::MIN_POSITIVE))
                .min(1e15);
            if t <= -a {
                return Ok(near);
            }
            // x = a - (e^v - 1) maps v ∈ [0, ln(1 + t + a)] onto [-t, a]
            let v_max = (1.0 + t + a).ln();
            let h = |v: f64| -> Result<f64> {
                let e = v.exp();
                Ok(e * g(a - (e - 1.0))?)
            };
            let far = uniform_trapezoid(&h, 0.0, v_max, quad.panels(v_max))?;
            Ok(near + far)
        }
    }
}

fn uniform_trapezoid<G: Fn(f64) -> Result<f64>>(g: &G, a: f64, b: f64, n: usize) -> Result<f64> {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (g(a)? + g(b)?);
    for i in 1..n {
        acc += g(a + i as f64 * h)?;
    }
    Ok(acc * h)
}

/// Scale parameter `(∫ |f|^α)^{1/α}` of the stable integral `∫ f dZ_α`.
pub fn integral_scale<F: Fn(f64) -> f64>(
    f: F,
    support: Support,
    alpha: f64,
    quad: Quadrature,
) -> Result<f64> {
    Ok(integral_alpha_mass(f, support, alpha, quad)?.powf(1.0 / alpha))
}

/// `P(|Y| ≤ y)` for unit-scale SαS, by inverting the characteristic function:
/// `(2/π) ∫_0^∞ sin(u y)/u · exp(-u^α) du`.
pub fn sas_abs_cdf(alpha: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    // exp(-u^α) < 1e-20 beyond u_max
    let u_max = 46.0f64.powf(1.0 / alpha);
    let gl = GaussLegendre::new(24);
    let panels = 64 + (u_max * y * 4.0).ceil() as usize;
    let f = |u: f64| {
        let s = if u == 0.0 { y } else { (u * y).sin() / u };
        s * (-u.powf(alpha)).exp()
    };
    // the u^α term is not smooth at 0; resolve the first unit finely
    let head_end = 1.0f64.min(u_max);
    let head = gl.composite(0.0, head_end, 32, f);
    let tail = gl.composite(head_end, u_max, panels, f);
    (2.0 / PI * (head + tail)).clamp(0.0, 1.0)
}

/// Inverse of [`sas_abs_cdf`] by bisection.
pub fn sas_abs_quantile(alpha: f64, q: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while sas_abs_cdf(alpha, hi) < q {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if sas_abs_cdf(alpha, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Quantile-matching estimate of the SαS scale: `median|x| / median|Y₁|`.
pub fn empirical_scale(samples: &[f64], alpha: f64) -> Result<f64> {
    let abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    let m = stats::median(&abs)
        .ok_or_else(|| Error::InsufficientData("no samples for scale estimate".into()))?;
    Ok(m / sas_abs_quantile(alpha, 0.5))
}

/// Log-log fit of the empirical tail `P̂(|Y| > t)` against `t`.
///
/// Grid points with no exceedances are dropped. Returns `(slope, intercept)`
/// of `ln P̂ = slope · ln t + intercept`; for SαS data the slope estimates -α.
pub fn tail_index_fit(samples: &[f64], t_grid: &[f64]) -> Result<(f64, f64)> {
    const MIN_SAMPLES: usize = 100_000;
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "tail fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    check_grid(t_grid)?;
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len() as f64;
    let probs: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            let below = abs.partition_point(|&v| v <= t);
            (abs.len() - below) as f64 / n
        })
        .collect();
    tail_fit_from_probabilities(t_grid, &probs)
}

/// Same fit from precomputed tail probabilities; zero entries are dropped.
pub fn tail_fit_from_probabilities(t_grid: &[f64], probs: &[f64]) -> Result<(f64, f64)> {
    check_grid(t_grid)?;
    let (x, y): (Vec<f64>, Vec<f64>) = t_grid
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&t, &p)| (t.ln(), p.ln()))
        .unzip();
    if x.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than two grid points with non-empty tails".into(),
        ));
    }
    stats::linear_fit(&x, &y)
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|&t| !(t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("t_grid must be positive and increasing".into()));
    }
    Ok(())
}

/// `n` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (r * i as f64).exp()).collect()
}
