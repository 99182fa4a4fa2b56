//! Analyzing wavelets on `[0, 1]` and the coefficient pyramid of a sampled path.
//!
//! A wavelet here is any continuous `ψ` supported in `[0, 1]` with
//! `∫ψ = ∫tψ = 0`; no orthonormality or filter-bank structure is assumed.
//! Coefficients are computed in the centred form
//!
//! ```text
//! d_{j,k} = ∫_0^1 {X((k + u) 2^{-j}) - X(k 2^{-j})} ψ(u) du
//! ```
//!
//! with the path taken piecewise linear between its samples. The quadrature
//! weights are the exact moments of `ψ` against the hat functions of the
//! window mesh, so affine paths are annihilated to rounding.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lfsm::{SamplePath, SimConfig};
use crate::quad::{cumulative_trapezoid, gregory, trapezoid, GaussLegendre};
use crate::stable::RngStream;

/// Default bound on `|∫ψ|` and `|∫tψ|` accepted at construction.
pub const DEFAULT_MOMENT_TOLERANCE: f64 = 1e-8;
/// Trapezoid resolution of the construction-time moment check.
pub const ADMISSIBILITY_RESOLUTION: usize = 1 << 16;
/// Default number of path samples per coefficient window is `2^DEFAULT_OVERSAMPLE`.
pub const DEFAULT_OVERSAMPLE: u32 = 4;

type WaveletFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct WaveletSpec {
    name: String,
    f: WaveletFn,
    moment_tolerance: f64,
}

impl fmt::Debug for WaveletSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveletSpec")
            .field("name", &self.name)
            .field("moment_tolerance", &self.moment_tolerance)
            .finish()
    }
}

impl WaveletSpec {
    /// Builds an admissible wavelet, rejecting `f` unless it vanishes at both
    /// ends, has its first two moments below `moment_tolerance` and is not
    /// identically zero.
    pub fn new<F>(name: &str, f: F, moment_tolerance: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let psi = Self::unchecked(name, f);
        let psi = Self { moment_tolerance, ..psi };
        psi.admissibility()?;
        Ok(psi)
    }

    /// Wraps `f` without any admissibility check. Only meant for diagnostics
    /// on functions that are expected to fail them.
    pub fn unchecked<F>(name: &str, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.to_string(), f: Arc::new(f), moment_tolerance: f64::INFINITY }
    }

    fn admissibility(&self) -> Result<()> {
        let fail = |reason: String| Error::Inadmissible { name: self.name.clone(), reason };
        let tol = self.moment_tolerance;
        let (left, right) = ((self.f)(0.0), (self.f)(1.0));
        if left.abs() > tol || right.abs() > tol {
            return Err(fail(format!("does not vanish at the ends: ψ(0) = {left}, ψ(1) = {right}")));
        }
        for order in 0..2 {
            let m = moment_check(self, order, ADMISSIBILITY_RESOLUTION);
            if !(m.abs() <= tol) {
                return Err(fail(format!("moment of order {order} is {m:e}, tolerance {tol:e}")));
            }
        }
        let energy = trapezoid(|t| self.eval(t).powi(2), 0.0, 1.0, ADMISSIBILITY_RESOLUTION);
        if !(energy > 0.0) {
            return Err(fail("identically zero".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn moment_tolerance(&self) -> f64 {
        self.moment_tolerance
    }

    /// `ψ(t)`, zero outside `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        if (0.0..=1.0).contains(&t) {
            (self.f)(t)
        } else {
            0.0
        }
    }
}

pub const BUILTIN_WAVELETS: [&str; 2] = ["trig2", "poly-bump"];

/// `"trig2"`: `sin 2πt − 2 sin 4πt`.
/// `"poly-bump"`: `t(1−t)(t² + q₁t + q₀)` with `q₀, q₁` fixed by the two
/// moment conditions.
pub fn builtin_wavelet(name: &str) -> Result<WaveletSpec> {
    match name {
        "trig2" => WaveletSpec::new(
            "trig2",
            |t| (2.0 * PI * t).sin() - 2.0 * (4.0 * PI * t).sin(),
            DEFAULT_MOMENT_TOLERANCE,
        ),
        "poly-bump" => {
            let (q0, q1) = poly_bump_coefficients();
            WaveletSpec::new(
                "poly-bump",
                move |t| t * (1.0 - t) * (t * t + q1 * t + q0),
                DEFAULT_MOMENT_TOLERANCE,
            )
        }
        other => Err(Error::UnknownWavelet(other.to_string())),
    }
}

/// `(q₀, q₁)` solving `∫ t^r · t(1−t)(t² + q₁t + q₀) dt = 0` for `r = 0, 1`.
pub fn poly_bump_coefficients() -> (f64, f64) {
    // ∫_0^1 t^m · t(1-t) dt = 1 / ((m+2)(m+3))
    let b = |m: i32| 1.0 / (((m + 2) * (m + 3)) as f64);
    // r = 0: b0 q0 + b1 q1 = -b2 ;  r = 1: b1 q0 + b2 q1 = -b3
    let det = b(0) * b(2) - b(1) * b(1);
    let q0 = (-b(2) * b(2) + b(1) * b(3)) / det;
    let q1 = (-b(0) * b(3) + b(1) * b(2)) / det;
    (q0, q1)
}

/// `∫_0^1 t^order ψ(t) dt` by the end-corrected trapezoid rule.
pub fn moment_check(psi: &WaveletSpec, order: u32, resolution: usize) -> f64 {
    gregory(|t| t.powi(order as i32) * psi.eval(t), 0.0, 1.0, resolution)
}

/// Cumulative-trapezoid samples of `ψ^{(-order)}` on the uniform grid of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Antiderivative {
    pub order: u8,
    pub step: f64,
    pub values: Vec<f64>,
}

impl Antiderivative {
    /// Linear interpolation of the samples; zero outside `[0, 1]`.
    pub fn at(&self, z: f64) -> f64 {
        if !(0.0..=1.0).contains(&z) {
            return 0.0;
        }
        let pos = z / self.step;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Whether the primitives vanish at `z = 1`, i.e. have compact support in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportReport {
    pub first_at_one: f64,
    pub second_at_one: f64,
    pub tolerance: f64,
}

impl SupportReport {
    pub fn first_compact(&self) -> bool {
        self.first_at_one.abs() <= self.tolerance
    }

    pub fn second_compact(&self) -> bool {
        self.second_at_one.abs() <= self.tolerance
    }

    pub fn is_compact(&self) -> bool {
        self.first_compact() && self.second_compact()
    }
}

pub fn antiderivative(
    psi: &WaveletSpec,
    order: u8,
    resolution: usize,
    tolerance: f64,
) -> Result<(Antiderivative, SupportReport)> {
    if !(order == 1 || order == 2) {
        return Err(Error::Domain(format!("antiderivative order must be 1 or 2, got {order}")));
    }
    if resolution == 0 {
        return Err(Error::Resolution("resolution must be positive".into()));
    }
    let h = 1.0 / resolution as f64;
    let samples: Vec<f64> = (0..=resolution).map(|i| psi.eval(i as f64 * h)).collect();
    let first = cumulative_trapezoid(&samples, h);
    let second = cumulative_trapezoid(&first, h);
    let report = SupportReport {
        first_at_one: first[resolution],
        second_at_one: second[resolution],
        tolerance,
    };
    let values = if order == 1 { first } else { second };
    Ok((Antiderivative { order, step: h, values }, report))
}

/// Where a pyramid came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathProvenance {
    pub config: SimConfig,
    pub stream: RngStream,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletPyramid {
    levels: BTreeMap<u32, Vec<f64>>,
    pub source: Option<PathProvenance>,
    pub wavelet: String,
}

impl WaveletPyramid {
    /// Builds a pyramid from explicit levels; level `j` must hold `2^j`
    /// finite coefficients.
    pub fn from_levels(levels: BTreeMap<u32, Vec<f64>>, wavelet: &str) -> Result<Self> {
        for (&j, coeffs) in &levels {
            if j >= usize::BITS - 1 || coeffs.len() != 1usize << j {
                return Err(Error::Alignment(format!(
                    "level {j} must hold 2^{j} coefficients, got {}",
                    coeffs.len()
                )));
            }
            if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
                return Err(Error::Numeric(format!("non-finite coefficient {bad} at level {j}")));
            }
        }
        Ok(Self { levels, source: None, wavelet: wavelet.to_string() })
    }

    pub fn level(&self, j: u32) -> Option<&[f64]> {
        self.levels.get(&j).map(Vec::as_slice)
    }

    pub fn levels(&self) -> impl Iterator<Item = (u32, &[f64])> {
        self.levels.iter().map(|(&j, c)| (j, c.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Multiplies every coefficient of level `j` by `factor`.
    pub fn scale_level(&mut self, j: u32, factor: f64) {
        if let Some(c) = self.levels.get_mut(&j) {
            c.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

/// Weights `w_i = ∫ hat_i(u) ψ(u) du`, `i = 0..=m`, for the uniform mesh of
/// `[0, 1]` with `m` cells.
pub fn window_weights(psi: &WaveletSpec, m: usize) -> Vec<f64> {
    let gl = GaussLegendre::new(12);
    let h = 1.0 / m as f64;
    let mut w = vec![0.0; m + 1];
    for i in 0..m {
        let lo = i as f64 * h;
        let hi = lo + h;
        w[i] += gl.integrate(lo, hi, |u| (1.0 - (u - lo) / h) * psi.eval(u));
        w[i + 1] += gl.integrate(lo, hi, |u| ((u - lo) / h) * psi.eval(u));
    }
    w
}

/// Coefficients `d_{j,k}` for `j_min ≤ j ≤ j_max`, `0 ≤ k < 2^j`.
///
/// Requires a dyadic mesh with at least `2^oversample` cells per window at
/// the finest level and `oversample ≥ 3`.
pub fn analyze(
    path: &SamplePath,
    psi: &WaveletSpec,
    j_min: u32,
    j_max: u32,
    oversample: u32,
) -> Result<WaveletPyramid> {
    let n = path.n_grid();
    if n < 1 || !n.is_power_of_two() {
        return Err(Error::Alignment(format!("path mesh {n} is not a power of two")));
    }
    if oversample < 3 {
        return Err(Error::Resolution(format!("oversample must be >= 3, got {oversample}")));
    }
    if j_min > j_max {
        return Err(Error::Domain(format!("j_min = {j_min} exceeds j_max = {j_max}")));
    }
    let log_n = n.trailing_zeros();
    if j_max + oversample > log_n {
        return Err(Error::Resolution(format!(
            "j_max = {j_max} with oversample {oversample} needs N >= 2^{}, path has N = 2^{log_n}",
            j_max + oversample
        )));
    }
    let x = &path.values;
    let mut levels = BTreeMap::new();
    for j in j_min..=j_max {
        let m = n >> j;
        let w = window_weights(psi, m);
        let coeffs: Vec<f64> = (0..1usize << j)
            .map(|k| {
                let base = k * m;
                let origin = x[base];
                w.iter().zip(&x[base..=base + m]).map(|(wi, xi)| wi * (xi - origin)).sum()
            })
            .collect();
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Numeric(format!("non-finite coefficient {bad} at level {j}")));
        }
        levels.insert(j, coeffs);
    }
    Ok(WaveletPyramid {
        levels,
        source: Some(PathProvenance { config: path.config, stream: path.stream }),
        wavelet: psi.name().to_string(),
    })
}
