//! The wavelet-max estimator of the stability index.
//!
//! With `D_j = max_k |d_{j,k}|` and `H` known,
//! `1/α̂_j = H + log(D_j) / (j log 2)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::lfsm::SamplePath;
use crate::stats;
use crate::wavelet::{PathProvenance, WaveletPyramid};

/// `D_j = max_k |d_{j,k}|`.
pub fn max_abs(pyramid: &WaveletPyramid, j: u32) -> Result<f64> {
    let level = pyramid.level(j).ok_or(Error::MissingLevel(j))?;
    Ok(level.iter().fold(0.0, |m, d| m.max(d.abs())))
}

/// `1/(H + log(D_j)/(j log 2))`, unclamped.
pub fn alpha_hat(d_j: f64, j: u32, h: f64) -> Result<f64> {
    let inv = inverse_alpha_hat(d_j, j, h)?;
    if !(inv > 0.0) {
        return Err(Error::Numeric(format!(
            "H + log2(D_j)/j = {inv} is not positive at j = {j}"
        )));
    }
    Ok(1.0 / inv)
}

/// `H + log(D_j)/(j log 2)`.
pub fn inverse_alpha_hat(d_j: f64, j: u32, h: f64) -> Result<f64> {
    if !(d_j > 0.0) || !d_j.is_finite() {
        return Err(Error::Domain(format!("D_j must be positive and finite, got {d_j}")));
    }
    if j < 1 {
        return Err(Error::Domain("j must be >= 1".into()));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!("H must lie in (0, 1), got {h}")));
    }
    Ok(h + d_j.ln() / (j as f64 * std::f64::consts::LN_2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowFlag {
    Ok,
    /// Finite estimate outside `(1, 2]`.
    OutOfRange,
    /// `H + log2(D_j)/j ≤ 0`.
    NonPositiveDenominator,
    /// `D_j = 0`.
    ZeroMax,
    /// `j = 0`, where the estimator is undefined.
    CoarseLevel,
}

impl RowFlag {
    /// Rows with these flags carry no estimate.
    pub fn is_invalid(self) -> bool {
        matches!(self, Self::NonPositiveDenominator | Self::ZeroMax | Self::CoarseLevel)
    }
}

impl fmt::Display for RowFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ok => "ok",
            Self::OutOfRange => "out_of_range",
            Self::NonPositiveDenominator => "nonpositive_denominator",
            Self::ZeroMax => "zero_max",
            Self::CoarseLevel => "coarse_level",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub j: u32,
    pub d_j: f64,
    /// `NaN` for invalid rows.
    pub alpha_hat: f64,
    pub flag: RowFlag,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceSource {
    Simulated(PathProvenance),
    External(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateTrace {
    pub rows: Vec<TraceRow>,
    pub h_used: f64,
    pub wavelet: String,
    pub source: TraceSource,
}

impl EstimateTrace {
    pub fn row(&self, j: u32) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.j == j)
    }

    /// Estimates of the rows that carry one, out-of-range values included.
    pub fn valid_estimates(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.rows.iter().filter(|r| !r.flag.is_invalid()).map(|r| (r.j, r.alpha_hat))
    }

    pub fn n_flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.flag != RowFlag::Ok).count()
    }
}

fn row(j: u32, d_j: f64, h: f64) -> TraceRow {
    let (alpha_hat, flag) = if j == 0 {
        (f64::NAN, RowFlag::CoarseLevel)
    } else if d_j == 0.0 {
        (f64::NAN, RowFlag::ZeroMax)
    } else {
        match alpha_hat(d_j, j, h) {
            Ok(a) if a > 1.0 && a <= 2.0 => (a, RowFlag::Ok),
            Ok(a) => (a, RowFlag::OutOfRange),
            Err(_) => (f64::NAN, RowFlag::NonPositiveDenominator),
        }
    };
    TraceRow { j, d_j, alpha_hat, flag }
}

/// One row per level of `pyramid`.
pub fn estimate_trace(pyramid: &WaveletPyramid, h: f64) -> Result<EstimateTrace> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!("H must lie in (0, 1), got {h}")));
    }
    let rows = pyramid
        .levels()
        .map(|(j, c)| row(j, c.iter().fold(0.0, |m: f64, d| m.max(d.abs())), h))
        .collect();
    let source = match pyramid.source {
        Some(p) => TraceSource::Simulated(p),
        None => TraceSource::External("external".into()),
    };
    Ok(EstimateTrace { rows, h_used: h, wavelet: pyramid.wavelet.clone(), source })
}

/// Median and IQR of `α̂_j` across traces, plus the number of non-`Ok` rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSummary {
    pub j: u32,
    pub median: f64,
    pub iqr: f64,
    pub n_flagged: usize,
    pub n_valid: usize,
}

/// Per-level summaries over many traces. Invalid rows are excluded from the
/// median and IQR; out-of-range rows are kept. With `clamp`, estimates are
/// projected onto `[1, 2]` before summarising.
pub fn summarize(traces: &[EstimateTrace], clamp: bool) -> Vec<LevelSummary> {
    let mut by_level: std::collections::BTreeMap<u32, (Vec<f64>, usize)> = Default::default();
    for t in traces {
        for r in &t.rows {
            let e = by_level.entry(r.j).or_default();
            if r.flag != RowFlag::Ok {
                e.1 += 1;
            }
            if !r.flag.is_invalid() {
                e.0.push(if clamp { r.alpha_hat.clamp(1.0, 2.0) } else { r.alpha_hat });
            }
        }
    }
    by_level
        .into_iter()
        .map(|(j, (v, n_flagged))| LevelSummary {
            j,
            median: stats::median(&v).unwrap_or(f64::NAN),
            iqr: stats::iqr(&v).unwrap_or(f64::NAN),
            n_flagged,
            n_valid: v.len(),
        })
        .collect()
}

/// `−log2(D_j)/j`, the empirical counterpart of `H − 1/α`.
pub fn normalized_log_max(d_j: f64, j: u32) -> Result<f64> {
    if !(d_j > 0.0) || j < 1 {
        return Err(Error::Domain(format!("need D_j > 0 and j >= 1, got {d_j}, {j}")));
    }
    Ok(-d_j.log2() / j as f64)
}

/// Slope of `log2 max_t |X(t + 2^{-m}) − X(t)|` against `−m`; estimates the
/// critical Hölder exponent `H − 1/α`. `lags` are in samples and must be
/// powers of two below the mesh size.
pub fn holder_slope(values: &[f64], lags: &[usize]) -> Result<f64> {
    let n = values.len().saturating_sub(1);
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Alignment(format!("mesh {n} is not a power of two")));
    }
    if lags.len() < 2 {
        return Err(Error::InsufficientData("need at least two lags".into()));
    }
    let mut xs = Vec::with_capacity(lags.len());
    let mut ys = Vec::with_capacity(lags.len());
    for &lag in lags {
        if lag == 0 || !lag.is_power_of_two() || lag >= n {
            return Err(Error::Alignment(format!("lag {lag} is not a dyadic divisor of {n}")));
        }
        let m = (n / lag).trailing_zeros() as f64;
        let sup = values
            .iter()
            .zip(&values[lag..])
            .map(|(a, b)| (b - a).abs())
            .fold(0.0, f64::max);
        if sup == 0.0 {
            return Err(Error::DegenerateFit(format!("path is constant at lag {lag}")));
        }
        xs.push(-m);
        ys.push(sup.log2());
    }
    stats::linear_fit(&xs, &ys).map(|(slope, _)| slope)
}

pub fn holder_diagnostic(path: &SamplePath, lags: &[usize]) -> Result<f64> {
    holder_slope(&path.values, lags)
}
