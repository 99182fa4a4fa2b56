//! Experiment configuration, seeding and the five run modes.
//!
//! A configuration is a flat `key = value` file; `#` starts a comment.
//! Command-line overrides are applied afterwards, so the last assignment of
//! a key wins. Every replicate `r` of a Monte Carlo run draws from the
//! stream [`derive_seed`]`(seed, r)`, which makes the report independent of
//! the number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{estimate_trace, summarize, EstimateTrace, LevelSummary};
use crate::kernel::{decomposition, phi_decay_fit, AlphaMassTable, Kernel, DEFAULT_DELTA, DEFAULT_PHI_RESOLUTION};
use crate::lfsm::{SimConfig, Simulator, DEFAULT_TRUNCATION};
use crate::stable::{geometric_grid, Quadrature, RngStream};
use crate::wavelet::{analyze, builtin_wavelet, PathProvenance, WaveletPyramid, DEFAULT_OVERSAMPLE};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Analyze,
    Estimate,
    Theory,
    Mc,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Self::Simulate,
            "analyze" => Self::Analyze,
            "estimate" => Self::Estimate,
            "theory" => Self::Theory,
            "mc" => Self::Mc,
            other => {
                return Err(Error::Config(format!(
                    "unknown mode `{other}` (expected simulate, analyze, estimate, theory or mc)"
                )))
            }
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Simulate => "simulate",
            Self::Analyze => "analyze",
            Self::Estimate => "estimate",
            Self::Theory => "theory",
            Self::Mc => "mc",
        })
    }
}

/// Keys accepted in configuration files and as `--key value` overrides.
pub const KEYS: [&str; 15] = [
    "mode", "h", "alpha", "n_grid", "truncation", "seed", "wavelet", "j_min", "j_max", "delta",
    "replicates", "out", "threads", "oversample", "phi_resolution",
];

/// Raw assignments with the place they came from, for diagnostics.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, String)>,
}

impl RawConfig {
    /// Parses `key = value` lines.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{origin}:{}: expected `key = value`, got `{line}`", i + 1))
            })?;
            raw.set(key.trim(), value.trim(), &format!("{origin}:{}", i + 1))?;
        }
        Ok(raw)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("{origin}: unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), (value.to_string(), origin.to_string()));
        Ok(())
    }

    /// Applies `--key value` / `--key=value` pairs.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, args: &[S]) -> Result<()> {
        let mut it = args.iter().map(AsRef::as_ref);
        while let Some(arg) = it.next() {
            let body = arg.strip_prefix("--").ok_or_else(|| {
                Error::Config(format!("override `{arg}` must look like --key value"))
            })?;
            let (key, value) = match body.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| {
                        Error::Config(format!("override --{body} is missing its value"))
                    })?;
                    (body.to_string(), v.to_string())
                }
            };
            self.set(&key.replace('-', "_"), &value, &format!("--{key}"))?;
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, origin)) => v.parse().map(Some).map_err(|_| {
                Error::Config(format!("{origin}: field `{key}` has invalid value `{v}`"))
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &str, mode: Mode) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("field `{key}` is required in mode {mode}")))
    }
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub sim: SimConfig,
    pub wavelet: String,
    pub j_min: u32,
    pub j_max: u32,
    pub delta: f64,
    pub replicates: usize,
    pub out_path: PathBuf,
    pub threads: usize,
    pub oversample: u32,
    pub phi_resolution: usize,
}

impl ExperimentConfig {
    /// Validates `raw`; every failure is a [`Error::Config`] or
    /// [`Error::UnknownWavelet`].
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mode: Mode = raw
            .get::<String>("mode")?
            .ok_or_else(|| Error::Config("field `mode` is required".into()))?
            .parse()?;
        let h: f64 = raw.require("h", mode)?;
        let alpha: f64 = raw.require("alpha", mode)?;
        let out_path: PathBuf = raw.require("out", mode)?;
        let theory = mode == Mode::Theory;
        let n_grid: usize = if theory {
            raw.get("n_grid")?.unwrap_or(1 << 14)
        } else {
            raw.require("n_grid", mode)?
        };
        let seed: u64 = if theory { raw.get("seed")?.unwrap_or(0) } else { raw.require("seed", mode)? };
        let truncation = raw.get("truncation")?.unwrap_or(DEFAULT_TRUNCATION);
        let sim = SimConfig::new(h, alpha, n_grid, truncation, seed)
            .map_err(|e| Error::Config(e.to_string()))?;
        let wavelet: String = raw.get("wavelet")?.unwrap_or_else(|| "trig2".into());
        builtin_wavelet(&wavelet)?;
        let oversample: u32 = raw.get("oversample")?.unwrap_or(DEFAULT_OVERSAMPLE);
        let needs_levels = matches!(mode, Mode::Analyze | Mode::Estimate | Mode::Mc | Mode::Theory);
        let (j_min, j_max) = if needs_levels {
            (raw.require("j_min", mode)?, raw.require("j_max", mode)?)
        } else {
            (raw.get("j_min")?.unwrap_or(1), raw.get("j_max")?.unwrap_or(1))
        };
        let delta: f64 = raw.get("delta")?.unwrap_or(DEFAULT_DELTA);
        let replicates: usize = if mode == Mode::Mc {
            raw.require("replicates", mode)?
        } else {
            raw.get("replicates")?.unwrap_or(1)
        };
        let threads: usize = raw.get("threads")?.unwrap_or(1);
        let phi_resolution: usize = raw.get("phi_resolution")?.unwrap_or(DEFAULT_PHI_RESOLUTION);

        let cfg = Self {
            mode,
            sim,
            wavelet,
            j_min,
            j_max,
            delta,
            replicates,
            out_path,
            threads,
            oversample,
            phi_resolution,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.needs_levels() {
            if self.j_min > self.j_max {
                return bad(format!("j_min = {} exceeds j_max = {}", self.j_min, self.j_max));
            }
            if matches!(self.mode, Mode::Estimate | Mode::Mc | Mode::Theory) && self.j_min < 1 {
                return bad("j_min must be >= 1 in this mode".into());
            }
        }
        if matches!(self.mode, Mode::Analyze | Mode::Estimate | Mode::Mc) {
            if self.oversample < 3 {
                return bad(format!("oversample must be >= 3, got {}", self.oversample));
            }
            if self.j_max + self.oversample > self.sim.level() {
                return bad(format!(
                    "j_max + oversample = {} exceeds log2(n_grid) = {}",
                    self.j_max + self.oversample,
                    self.sim.level()
                ));
            }
        }
        if self.mode == Mode::Theory && !(self.delta > 0.0 && self.delta < 1.0 / 3.0) {
            return bad(format!("delta must lie in (0, 1/3), got {}", self.delta));
        }
        if self.threads == 0 {
            return bad("threads must be >= 1".into());
        }
        if self.phi_resolution < 1 << 10 {
            return bad("phi_resolution must be >= 1024".into());
        }
        Ok(())
    }

    fn needs_levels(&self) -> bool {
        self.mode != Mode::Simulate
    }

    /// Normalised `key=value` lines describing this configuration.
    pub fn echo(&self) -> Vec<(String, String)> {
        let s = &self.sim;
        [
            ("mode", self.mode.to_string()),
            ("h", s.h.to_string()),
            ("alpha", s.alpha.to_string()),
            ("n_grid", s.n_grid.to_string()),
            ("truncation", s.truncation.to_string()),
            ("seed", s.seed.to_string()),
            ("wavelet", self.wavelet.clone()),
            ("j_min", self.j_min.to_string()),
            ("j_max", self.j_max.to_string()),
            ("delta", self.delta.to_string()),
            ("replicates", self.replicates.to_string()),
            ("out", self.out_path.display().to_string()),
            ("threads", self.threads.to_string()),
            ("oversample", self.oversample.to_string()),
            ("phi_resolution", self.phi_resolution.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Stream of replicate `replicate` under master seed `master`.
///
/// The ChaCha8 key is four SplitMix64 outputs seeded with `master` and the
/// replicate index is the ChaCha stream id, so `(master, replicate)` pairs
/// map to distinct keystreams.
pub fn derive_seed(master: u64, replicate: u64) -> RngStream {
    RngStream::new(master, replicate)
}

/// Per-level Monte Carlo summary plus provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct McReport {
    pub levels: Vec<LevelSummary>,
    /// Same summaries with estimates projected onto `[1, 2]`.
    pub clamped: Vec<LevelSummary>,
    pub replicates: usize,
    pub config: Vec<(String, String)>,
    pub version: &'static str,
}

/// One replicate of the `mc` pipeline.
pub fn replicate_trace(sim: &Simulator, cfg: &ExperimentConfig, index: u64) -> Result<EstimateTrace> {
    let psi = builtin_wavelet(&cfg.wavelet)?;
    let path = sim.path(derive_seed(cfg.sim.seed, index))?;
    let pyramid = analyze(&path, &psi, cfg.j_min, cfg.j_max, cfg.oversample)?;
    estimate_trace(&pyramid, cfg.sim.h)
}

/// Runs all replicates on a pool of `cfg.threads` workers. Results are
/// gathered in replicate order before aggregation.
pub fn monte_carlo(cfg: &ExperimentConfig) -> Result<McReport> {
    let traces = if cfg.replicates == 0 {
        Vec::new()
    } else {
        let sim = Simulator::new(cfg.sim)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?;
        pool.install(|| {
            (0..cfg.replicates as u64)
                .into_par_iter()
                .map(|r| replicate_trace(&sim, cfg, r))
                .collect::<Result<Vec<_>>>()
        })?
    };
    Ok(McReport {
        levels: summarize(&traces, false),
        clamped: summarize(&traces, true),
        replicates: traces.len(),
        config: cfg.echo(),
        version: VERSION,
    })
}

/// One row of the theory report.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryRow {
    pub quantity: &'static str,
    pub j: Option<u32>,
    pub delta: f64,
    pub value: f64,
    pub bound: Option<f64>,
}

/// Kernel decay and the local/far decomposition for `j_min ..= j_max`.
pub fn theory_rows(cfg: &ExperimentConfig) -> Result<Vec<TheoryRow>> {
    let psi = builtin_wavelet(&cfg.wavelet)?;
    let kernel = Kernel::new(cfg.sim.h, cfg.sim.alpha, psi, cfg.phi_resolution)?;
    let quad = Quadrature::new(1 << 10)?;
    let fit = phi_decay_fit(&kernel, &geometric_grid(-16.0, -4096.0, 25))?;
    let delta = cfg.delta;
    let mut rows = vec![
        TheoryRow { quantity: "decay_slope", j: None, delta, value: fit.slope, bound: Some(-kernel.decay_exponent()) },
        TheoryRow { quantity: "c1_hat", j: None, delta, value: kernel.envelope().constant, bound: None },
        TheoryRow {
            quantity: "phi_alpha_mass",
            j: None,
            delta,
            value: AlphaMassTable::new(&kernel, 1, quad)?.total(),
            bound: None,
        },
    ];
    let levels: Vec<u32> = (cfg.j_min..=cfg.j_max).collect();
    for d in decomposition(&kernel, delta, &levels, quad)? {
        let j = Some(d.j);
        rows.push(TheoryRow { quantity: "e_j", j, delta, value: d.e_j as f64, bound: None });
        rows.push(TheoryRow { quantity: "g_scale", j, delta, value: d.g_scale, bound: None });
        rows.push(TheoryRow { quantity: "r_scale", j, delta, value: d.r_scale, bound: Some(d.r_bound) });
        rows.push(TheoryRow { quantity: "log2_r_over_g", j, delta, value: d.log2_ratio(), bound: None });
    }
    Ok(rows)
}

/// Shortest decimal string that parses back to `x` exactly; exponent form
/// outside `[1e-5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_path_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "x"]).map_err(csv_err)?;
    let n = (values.len() - 1) as f64;
    for (k, x) in values.iter().enumerate() {
        w.write_record([fmt_f64(k as f64 / n), fmt_f64(*x)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pyramid_csv(path: &Path, pyramid: &WaveletPyramid) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["j", "k", "d"]).map_err(csv_err)?;
    for (j, level) in pyramid.levels() {
        for (k, d) in level.iter().enumerate() {
            w.write_record([j.to_string(), k.to_string(), fmt_f64(*d)]).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &EstimateTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["j", "D_j", "alpha_hat", "flag"]).map_err(csv_err)?;
    for r in &trace.rows {
        w.write_record([r.j.to_string(), fmt_f64(r.d_j), fmt_f64(r.alpha_hat), r.flag.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_theory_csv(path: &Path, rows: &[TheoryRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["quantity", "j", "delta", "value", "bound"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.quantity.to_string(),
            r.j.map(|j| j.to_string()).unwrap_or_default(),
            fmt_f64(r.delta),
            fmt_f64(r.value),
            opt_f64(r.bound),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mc_csv(path: &Path, report: &McReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["j", "alpha_hat_median", "alpha_hat_iqr", "n_flagged"]).map_err(csv_err)?;
    for s in &report.levels {
        w.write_record([s.j.to_string(), fmt_f64(s.median), fmt_f64(s.iqr), s.n_flagged.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `<out>.meta` next to an `mc` report.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_mc_meta(path: &Path, report: &McReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "tool=stablewave")?;
    writeln!(w, "version={}", report.version)?;
    for (k, v) in &report.config {
        writeln!(w, "config.{k}={v}")?;
    }
    writeln!(w, "replicates_completed={}", report.replicates)?;
    for s in &report.clamped {
        writeln!(w, "clamped.{}.median={}", s.j, fmt_f64(s.median))?;
        writeln!(w, "clamped.{}.iqr={}", s.j, fmt_f64(s.iqr))?;
    }
    w.flush()?;
    Ok(())
}

/// What a run produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Executes `cfg` and writes its output files.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let out = &cfg.out_path;
    let mut outcome = RunOutcome { files: vec![out.clone()], warnings: Vec::new() };
    match cfg.mode {
        Mode::Simulate => {
            let path = Simulator::new(cfg.sim)?.path(derive_seed(cfg.sim.seed, 0))?;
            write_path_csv(out, &path.values)?;
        }
        Mode::Analyze | Mode::Estimate => {
            let psi = builtin_wavelet(&cfg.wavelet)?;
            let path = Simulator::new(cfg.sim)?.path(derive_seed(cfg.sim.seed, 0))?;
            let mut pyramid = analyze(&path, &psi, cfg.j_min, cfg.j_max, cfg.oversample)?;
            pyramid.source = Some(PathProvenance { config: cfg.sim, stream: path.stream });
            if cfg.mode == Mode::Analyze {
                write_pyramid_csv(out, &pyramid)?;
            } else {
                write_trace_csv(out, &estimate_trace(&pyramid, cfg.sim.h)?)?;
            }
        }
        Mode::Theory => write_theory_csv(out, &theory_rows(cfg)?)?,
        Mode::Mc => {
            if cfg.replicates == 0 {
                outcome.warnings.push("replicates = 0: writing an empty report".into());
            }
            let report = monte_carlo(cfg)?;
            write_mc_csv(out, &report)?;
            let meta = meta_path(out);
            write_mc_meta(&meta, &report)?;
            outcome.files.push(meta);
        }
    }
    Ok(outcome)
}
