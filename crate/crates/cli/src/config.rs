//! Run configuration: a TOML document describing one pipeline.

use std::fmt;
use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use oudisp_core::field::{read_field, ComplexField, Gauge, GaussianState, GridSpec};
use oudisp_core::lti::SystemSpec;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckSystem,
    Propagate,
    DispersiveScan,
    UncertaintyScan,
    OscillatorCompare,
    KernelCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckSystem => "check-system",
            Command::Propagate => "propagate",
            Command::DispersiveScan => "dispersive-scan",
            Command::UncertaintyScan => "uncertainty-scan",
            Command::OscillatorCompare => "oscillator-compare",
            Command::KernelCheck => "kernel-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// `Q = I`, `B = -I` on `R^dim`.
    Ou {
        #[serde(default = "one")]
        dim: usize,
    },
    /// Kinetic system on `R^n × R^n`.
    Kolmogorov {
        #[serde(default = "one")]
        n: usize,
    },
    SmoluchowskiKramers,
    /// Explicit row-major matrices.
    Custom {
        q: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
    },
}

fn one() -> usize {
    1
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::Ou { dim: 1 }
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemSpec, Failure> {
        match self {
            SystemConfig::Ou { dim } => {
                check_size("system.dim", *dim)?;
                Ok(SystemSpec::ornstein_uhlenbeck(*dim))
            }
            SystemConfig::Kolmogorov { n } => {
                check_size("system.n", *n)?;
                Ok(SystemSpec::kolmogorov(*n))
            }
            SystemConfig::SmoluchowskiKramers => Ok(SystemSpec::smoluchowski_kramers()),
            SystemConfig::Custom { q, b } => {
                let q = matrix("system.q", q)?;
                let b = matrix("system.b", b)?;
                SystemSpec::new(q, b).map_err(|e| Failure::invalid("system", e.to_string()))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            SystemConfig::Ou { dim } => format!("ou(dim={dim})"),
            SystemConfig::Kolmogorov { n } => format!("kolmogorov(n={n})"),
            SystemConfig::SmoluchowskiKramers => "smoluchowski-kramers".into(),
            SystemConfig::Custom { q, .. } => format!("custom(dim={})", q.len()),
        }
    }
}

fn check_size(field: &str, n: usize) -> Result<(), Failure> {
    if n == 0 || n > 8 {
        return Err(Failure::invalid(field, format!("{n} is not in 1..=8")));
    }
    Ok(())
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, Failure> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Failure::invalid(field, "must be a non-empty square matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub extent: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dim: 1,
            extent: 16.0,
            points: 1024,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, Failure> {
        GridSpec::new(self.dim, self.extent, self.points)
            .map_err(|e| Failure::invalid("grid", e.to_string()))
    }
}

/// Initial data in the `φ` gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Datum {
    /// `c e^{-β|x|² + |x|²/4}`, i.e. `ψ = c e^{-β|x|²}`.
    Gaussian {
        beta: [f64; 2],
        #[serde(default = "unit")]
        amplitude: [f64; 2],
    },
    /// `He_{k₁}(x₁)⋯He_{k_m}(x_m)`.
    Hermite { index: Vec<usize> },
    /// A field file; must be in the `φ` gauge.
    File { path: PathBuf },
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

impl Datum {
    pub fn label(&self) -> String {
        match self {
            Datum::Gaussian { beta, .. } => format!("gaussian({}{:+}i)", beta[0], beta[1]),
            Datum::Hermite { index } => {
                let ks: Vec<String> = index.iter().map(|k| k.to_string()).collect();
                format!("hermite({})", ks.join(","))
            }
            Datum::File { path } => format!("file({})", path.display()),
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<ComplexField, Failure> {
        match self {
            Datum::Gaussian { beta, amplitude } => {
                let state = GaussianState::new(
                    Complex64::new(beta[0], beta[1]),
                    Complex64::new(amplitude[0], amplitude[1]),
                )
                .map_err(|e| Failure::invalid("datum.beta", e.to_string()))?;
                Ok(state.eval_phi(grid))
            }
            Datum::Hermite { index } => {
                if index.len() != grid.dim() {
                    return Err(Failure::invalid(
                        "datum.index",
                        format!(
                            "{} indices for a {}-dimensional grid",
                            index.len(),
                            grid.dim()
                        ),
                    ));
                }
                let index = index.clone();
                Ok(ComplexField::from_fn(*grid, Gauge::Phi, move |x| {
                    let v: f64 = index
                        .iter()
                        .zip(x)
                        .map(|(&k, &xi)| hermite(k, xi))
                        .product();
                    Complex64::new(v, 0.0)
                }))
            }
            Datum::File { path } => {
                let file = std::fs::File::open(path).map_err(|e| {
                    Failure::invalid("datum.path", format!("{}: {e}", path.display()))
                })?;
                let field = read_field(std::io::BufReader::new(file))
                    .map_err(|e| Failure::invalid("datum.path", e.to_string()))?;
                if field.grid() != grid {
                    return Err(Failure::invalid(
                        "datum.path",
                        "field file grid differs from the configured grid",
                    ));
                }
                field
                    .require_gauge(Gauge::Phi)
                    .map_err(|e| Failure::invalid("datum.path", e.to_string()))?;
                Ok(field)
            }
        }
    }
}

/// Probabilists' Hermite polynomial by the three-term recurrence.
fn hermite(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Chirp, Bluestein scaled DFT, chirp.
    Czt,
    /// Chirp, direct scaled DFT sum, chirp.
    Direct,
    /// Direct quadrature of the kernel integral.
    Quadrature,
    /// Hermite expansion.
    Hermite,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Czt => "czt",
            Engine::Direct => "direct",
            Engine::Quadrature => "quadrature",
            Engine::Hermite => "hermite",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Report path; standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyConfig {
    pub states: usize,
    pub samples: usize,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        UncertaintyConfig {
            states: 200,
            samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub datum: Vec<Datum>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_ps")]
    pub ps: Vec<f64>,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub uncertainty: UncertaintyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_times() -> Vec<f64> {
    vec![1.0]
}

fn default_ps() -> Vec<f64> {
    vec![1.0, 4.0 / 3.0, 1.5, 2.0]
}

fn default_engine() -> Engine {
    Engine::Czt
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            system: SystemConfig::default(),
            grid: GridConfig::default(),
            datum: Vec::new(),
            times: default_times(),
            ps: default_ps(),
            engine: default_engine(),
            seed: 0,
            uncertainty: UncertaintyConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::invalid("config", e.message().to_string()))
    }

    /// TOML integers are signed, so seeds above `i64::MAX` are rejected here.
    pub fn to_toml(&self) -> Result<String, Failure> {
        toml::to_string(self).map_err(|e| Failure::invalid("config", e.to_string()))
    }

    /// Checks field-level constraints that serde cannot express.
    pub fn validate(&self) -> Result<(), Failure> {
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Failure::invalid("times", "entries must be finite"));
        }
        if self.ps.iter().any(|p| !(1.0..=2.0).contains(p)) {
            return Err(Failure::invalid("ps", "entries must lie in [1, 2]"));
        }
        let needs_data = matches!(
            self.command,
            Command::Propagate | Command::DispersiveScan | Command::OscillatorCompare
        );
        if needs_data && self.datum.is_empty() {
            return Err(Failure::invalid("datum", "at least one datum is required"));
        }
        if needs_data && self.times.is_empty() {
            return Err(Failure::invalid("times", "at least one time is required"));
        }
        Ok(())
    }
}
