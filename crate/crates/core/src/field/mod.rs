//! Tensor-product grids, complex fields and the two gauges `φ` and
//! `ψ = e^{-|x|²/4} φ`.

mod fourier;
mod gaussian;
mod io;

pub use fourier::{
    alias_phase, fourier_at_scaled, gaussian_fourier, ComplexGaussian, FourierEngine, ScaledDft,
    ALIAS_LIMIT,
};
pub use gaussian::{GaussianSamples, GaussianState, BETA_MARGIN, TAIL_TOL};
pub use io::{read_field, write_field, FIELD_MAGIC};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Uniform grid on `[-L, L)^m`, `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    extent: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, extent: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} is not 1, 2 or 3"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent {extent} must be positive"
            )));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points} must be a power of two >= 16"
            )));
        }
        Ok(Self {
            dim,
            extent,
            points,
        })
    }

    /// `L=16, N=1024` for m=1; `L=8, N=256` for m=2; `L=6, N=64` for m=3.
    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            1 => Self::new(1, 16.0, 1024),
            2 => Self::new(2, 8.0, 256),
            3 => Self::new(3, 6.0, 64),
            _ => Err(Error::InvalidGrid(format!(
                "dimension {dim} is not 1, 2 or 3"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    /// Total number of samples, `N^m`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^m` of the trapezoid rule.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.extent + j as f64 * self.spacing()
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coord(j)).collect()
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rest % self.points;
            rest /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &j| acc * self.points + j)
    }

    /// Coordinates of the sample at `flat`.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coord(idx[a]);
        }
        x
    }

    pub fn radius_sq(&self, flat: usize) -> f64 {
        self.point(flat)[..self.dim].iter().map(|v| v * v).sum()
    }

    /// Flat index of the reflected point `-x`, when it lies on the grid.
    pub fn reflect(&self, flat: usize) -> Option<usize> {
        let idx = self.multi_index(flat);
        let mut out = [0; 3];
        for a in 0..self.dim {
            if idx[a] == 0 {
                return None;
            }
            out[a] = self.points - idx[a];
        }
        Some(self.flat_index(&out[..self.dim]))
    }
}

/// Which representation a field's samples hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    Phi,
    Psi,
}

impl Gauge {
    pub fn name(self) -> &'static str {
        match self {
            Gauge::Phi => "phi",
            Gauge::Psi => "psi",
        }
    }
}

/// Complex samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    samples: Vec<Complex64>,
    gauge: Gauge,
}

impl ComplexField {
    pub fn new(grid: GridSpec, gauge: Gauge, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.len()
            )));
        }
        if samples
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self {
            grid,
            samples,
            gauge,
        })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn<F>(grid: GridSpec, gauge: Gauge, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let m = grid.dim();
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|k| f(&grid.point(k)[..m]))
            .collect();
        Self {
            grid,
            samples,
            gauge,
        }
    }

    pub(crate) fn from_parts(grid: GridSpec, gauge: Gauge, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self {
            grid,
            samples,
            gauge,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn require_gauge(&self, expected: Gauge) -> Result<()> {
        if self.gauge == expected {
            Ok(())
        } else {
            Err(Error::GaugeMismatch {
                expected: expected.name(),
                found: self.gauge.name(),
            })
        }
    }

    /// `ψ = e^{-|x|²/4} φ`.
    pub fn to_psi_gauge(&self) -> Result<Self> {
        self.require_gauge(Gauge::Phi)?;
        Ok(self.reweighted(-0.25, Gauge::Psi))
    }

    /// `φ = e^{|x|²/4} ψ`.
    pub fn from_psi_gauge(&self) -> Result<Self> {
        self.require_gauge(Gauge::Psi)?;
        Ok(self.reweighted(0.25, Gauge::Phi))
    }

    fn reweighted(&self, c: f64, gauge: Gauge) -> Self {
        let grid = self.grid;
        let samples = self
            .samples
            .par_iter()
            .enumerate()
            .map(|(k, z)| z * (c * grid.radius_sq(k)).exp())
            .collect();
        Self::from_parts(grid, gauge, samples)
    }

    /// Pointwise product with a function of position.
    pub fn multiply_by<F>(&self, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let grid = self.grid;
        let m = grid.dim();
        let samples = self
            .samples
            .par_iter()
            .enumerate()
            .map(|(k, z)| z * f(&grid.point(k)[..m]))
            .collect();
        Self::from_parts(grid, self.gauge, samples)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_parts(
            self.grid,
            self.gauge,
            self.samples.iter().map(|z| z * c).collect(),
        )
    }

    /// Trapezoid `L²(dx)` norm.
    pub fn norm_l2(&self) -> f64 {
        self.norm_lp(2.0)
    }

    /// `L²(dγ)` norm with `dγ = (2π)^{-m/2} e^{-|x|²/2} dx`.
    pub fn norm_gauss(&self) -> f64 {
        let m = self.grid.dim() as f64;
        let grid = self.grid;
        let sum: f64 = self
            .samples
            .par_iter()
            .enumerate()
            .map(|(k, z)| z.norm_sqr() * (-0.5 * grid.radius_sq(k)).exp())
            .sum();
        (sum * grid.cell_volume() * (2.0 * PI).powf(-m / 2.0)).sqrt()
    }

    /// Trapezoid `L^p` norm; `p = ∞` is the grid maximum.
    pub fn norm_lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        let sum: f64 = self.samples.par_iter().map(|z| z.norm().powf(p)).sum();
        (sum * self.grid.cell_volume()).powf(1.0 / p)
    }
}

/// Applies `f` to every line of the tensor along `axis`.
pub(crate) fn map_lines<F>(data: &[Complex64], grid: &GridSpec, axis: usize, f: F) -> Vec<Complex64>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Sync,
{
    let n = grid.points();
    let m = grid.dim();
    let stride = n.pow((m - 1 - axis) as u32);
    let outer = n.pow(axis as u32);
    let starts: Vec<usize> = (0..outer)
        .flat_map(|o| (0..stride).map(move |i| o * n * stride + i))
        .collect();
    let lines: Vec<Vec<Complex64>> = starts
        .par_iter()
        .map(|&s| {
            let line: Vec<Complex64> = (0..n).map(|k| data[s + k * stride]).collect();
            f(&line)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for (s, line) in starts.iter().zip(lines) {
        for (k, v) in line.into_iter().enumerate() {
            out[s + k * stride] = v;
        }
    }
    out
}
