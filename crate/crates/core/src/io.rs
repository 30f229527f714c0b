//! File formats: JSON reports with round-trip float formatting, the solution
//! snapshot, and the TOML run configuration.
//!
//! # Snapshot layout
//!
//! A snapshot is one JSON object:
//!
//! ```text
//! {
//!   "format": "hesslab-snapshot",
//!   "version": 1,
//!   "layout": "row-major (x1, y1, ..., xn, yn), last axis fastest",
//!   "n": 2, "N": 16, "k": 2,
//!   "problem": { manufactured problem parameters },
//!   "amplitude_used": ..., "spec_id": "...",
//!   "diagnostics": { max_lambda1, max_grad, min_lambda_n, residual_inf, ... },
//!   "u": [ N^(2n) values ]
//! }
//! ```
//!
//! Entry `i` of `u` sits at the grid point whose coordinate along axis `a`
//! is `(i / N^(2n - 1 - a)) % N`, times `h = 1 / N`, with axes ordered
//! `x1, y1, ..., xn, yn`. The problem is rebuilt from `problem`, `n` and `N`
//! when the snapshot is read back.

use std::io::Write;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::cone::{default_big_k, ConeConstraints, SearchConfig};
use crate::error::{Error, Result};
use crate::monitor::TestFunctionParams;
use crate::solve::{
    manufactured_problem, Diagnostics, Manufactured, ManufacturedParams, NewtonConfig, TorusGrid, TorusSolution,
    Variant,
};

/// Formats a float with 17 significant digits, enough to round-trip any
/// `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// JSON formatter that writes every float with 17 significant digits and
/// otherwise defers to the wrapped formatter. Non-finite values become
/// `null`.
struct RoundTrip<F>(F);

impl<F: Formatter> Formatter for RoundTrip<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.0.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(writer)
    }
}

fn serialize_with<T: Serialize + ?Sized, F: Formatter>(value: &T, formatter: F) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, RoundTrip(formatter));
    value.serialize(&mut ser).map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(out).map_err(|e| Error::Format(e.to_string()))
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut text = serialize_with(value, PrettyFormatter::new())?;
    text.push('\n');
    Ok(text)
}

/// Single-line JSON, no trailing newline.
pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serialize_with(value, CompactFormatter)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub const SNAPSHOT_FORMAT: &str = "hesslab-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const SNAPSHOT_LAYOUT: &str = "row-major (x1, y1, ..., xn, yn), last axis fastest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub layout: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    pub k: usize,
    pub problem: ManufacturedParams,
    pub amplitude_used: f64,
    pub spec_id: String,
    pub diagnostics: Diagnostics,
    pub u: Vec<f64>,
}

impl Snapshot {
    pub fn new(solution: &TorusSolution, params: &ManufacturedParams, manufactured: &Manufactured) -> Self {
        Self {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            layout: SNAPSHOT_LAYOUT.into(),
            n: solution.grid.n(),
            size: solution.grid.size(),
            k: params.k,
            problem: *params,
            amplitude_used: manufactured.amplitude,
            spec_id: solution.spec_id.clone(),
            diagnostics: solution.diagnostics,
            u: solution.u.clone(),
        }
    }

    /// Parses and validates a snapshot document.
    pub fn parse(text: &str) -> Result<Self> {
        let snap: Snapshot = from_json(text)?;
        snap.validate()?;
        Ok(snap)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if self.format != SNAPSHOT_FORMAT {
            return bad(format!("unexpected format tag `{}`", self.format));
        }
        if self.version != SNAPSHOT_VERSION {
            return bad(format!("unsupported snapshot version {}", self.version));
        }
        if self.layout != SNAPSHOT_LAYOUT {
            return bad(format!("unsupported layout `{}`", self.layout));
        }
        let grid = self.grid()?;
        if self.k != self.problem.k {
            return bad(format!("k = {} disagrees with problem k = {}", self.k, self.problem.k));
        }
        if self.k < 1 || self.k > self.n {
            return bad(format!("need 1 <= k <= n, got k = {}, n = {}", self.k, self.n));
        }
        if self.u.len() != grid.len() {
            return bad(format!("u has {} entries, grid has {}", self.u.len(), grid.len()));
        }
        if self.u.iter().any(|v| !v.is_finite()) {
            return bad("u contains non-finite values".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.n, self.size).map_err(|e| Error::Format(e.to_string()))
    }

    /// Rebuilds the manufactured problem and checks that it matches the
    /// recorded amplitude.
    pub fn rebuild(&self) -> Result<Manufactured> {
        let m = manufactured_problem(&self.grid()?, &self.problem)?;
        if m.amplitude != self.amplitude_used {
            return Err(Error::Format(format!(
                "rebuilt amplitude {} differs from recorded {}",
                m.amplitude, self.amplitude_used
            )));
        }
        Ok(m)
    }

    pub fn solution(&self) -> Result<TorusSolution> {
        Ok(TorusSolution {
            grid: self.grid()?,
            u: self.u.clone(),
            spec_id: self.spec_id.clone(),
            diagnostics: self.diagnostics,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 2, size: 16 }
    }
}

/// Manufactured problem parameters; the seed comes from the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub k: usize,
    pub amplitude: f64,
    pub mu: f64,
    pub nu: f64,
    pub eps: f64,
    pub q2: f64,
    pub variant: Variant,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        let p = ManufacturedParams::default();
        Self {
            k: p.k,
            amplitude: p.amplitude,
            mu: p.mu,
            nu: p.nu,
            eps: p.eps,
            q2: p.q2,
            variant: p.variant,
        }
    }
}

impl ProblemConfig {
    pub fn params(&self, seed: u64) -> ManufacturedParams {
        ManufacturedParams {
            k: self.k,
            amplitude: self.amplitude,
            mu: self.mu,
            nu: self.nu,
            eps: self.eps,
            q2: self.q2,
            seed,
            variant: self.variant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Initial guess `u0 = initial_scale * u*`.
    pub initial_scale: f64,
    /// Continuity steps; a direct solve when absent.
    pub continuity: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            initial_scale: 0.0,
            continuity: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeConfig {
    pub n: usize,
    pub k: usize,
    /// Semi-convexity floor `A`.
    pub floor: f64,
    pub sigma_band: [f64; 2],
    pub eps0: f64,
    /// `K`; `(k + 1)^2` when absent.
    pub big_k: Option<f64>,
    pub delta0: f64,
    /// Leading entries excluded from the weighted tail of the `lu` margin.
    pub l: usize,
    pub lu_eps: f64,
    /// Constant `C` of the `iqc0` margin.
    pub iqc0_c: f64,
    /// Cases for `margins` and rows for `sample`.
    pub samples: usize,
    pub samples_per_level: usize,
    pub restarts: usize,
    /// Pinned `lambda_1` for `margins`; located as `threshold_factor` times
    /// the empirical threshold when absent.
    pub lambda1: Option<f64>,
    pub threshold_factor: f64,
}

impl Default for ConeConfig {
    fn default() -> Self {
        Self {
            n: 3,
            k: 2,
            floor: 1.0,
            sigma_band: [0.5, 2.0],
            eps0: 0.1,
            big_k: None,
            delta0: 0.1,
            l: 1,
            lu_eps: 0.1,
            iqc0_c: 1.0,
            samples: 1000,
            samples_per_level: 200,
            restarts: 100,
            lambda1: None,
            threshold_factor: 4.0,
        }
    }
}

impl ConeConfig {
    pub fn constraints(&self) -> Result<ConeConstraints> {
        ConeConstraints::new(self.n, self.k, self.floor, self.sigma_band)
    }

    pub fn big_k(&self) -> f64 {
        self.big_k.unwrap_or_else(|| default_big_k(self.k))
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints()?;
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(Error::Parameter(format!("eps0 must lie in (0, 1), got {}", self.eps0)));
        }
        if !(self.big_k() > 0.0) || !(self.threshold_factor >= 1.0) {
            return Err(Error::Parameter("K must be positive and threshold_factor at least 1".into()));
        }
        if let Some(level) = self.lambda1 {
            if !(level > 0.0 && level.is_finite()) {
                return Err(Error::Parameter(format!("lambda1 must be positive, got {level}")));
            }
        }
        if self.samples_per_level == 0 {
            return Err(Error::Parameter("samples_per_level must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Full run configuration, read from TOML. Every section is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub problem: ProblemConfig,
    pub newton: NewtonConfig,
    pub solve: SolveConfig,
    pub monitor: TestFunctionParams,
    pub cone: ConeConfig,
    pub search: SearchConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid.n, self.grid.size)
    }

    pub fn manufactured_params(&self) -> ManufacturedParams {
        self.problem.params(self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.newton.validate()?;
        self.cone.validate()?;
        let p = &self.problem;
        if p.k < 1 || p.k > self.grid.n {
            return Err(Error::Parameter(format!("problem k = {} outside 1..={}", p.k, self.grid.n)));
        }
        if !(p.amplitude.is_finite() && p.mu > 0.0 && p.nu >= 0.0 && p.eps > 0.0 && p.q2 >= 0.0) {
            return Err(Error::Parameter(format!("invalid problem parameters {p:?}")));
        }
        if !self.solve.initial_scale.is_finite() || self.solve.continuity == Some(0) {
            return Err(Error::Parameter("initial_scale must be finite and continuity positive".into()));
        }
        let m = &self.monitor;
        if !(m.n_exp > 1.0) || m.lambda.is_some_and(|l| !(l > m.n_exp)) {
            return Err(Error::Parameter(format!("monitor needs Lambda > N > 1, got {m:?}")));
        }
        Ok(())
    }
}
