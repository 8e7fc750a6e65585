//! Closed-form parabolic kernels and heat evolution by kernel quadrature.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Gauge};
use crate::lti::{covariance_gramian, matrix_exp, SystemSpec, TOL_PD};

/// One evaluation of a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSample {
    pub value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

/// Transition density `G(x, y, t)` of `∂t - tr(Q∇²) - ⟨Bx, ∇⟩` at a fixed time.
#[derive(Debug, Clone)]
pub struct HormanderKernel {
    t: f64,
    flow: DMatrix<f64>,
    qt: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl HormanderKernel {
    pub fn new(sys: &SystemSpec, t: f64) -> Result<Self> {
        let qt = covariance_gramian(sys, t)?;
        let min_eig = SymmetricEigen::new(qt.clone()).eigenvalues.min();
        if min_eig <= TOL_PD * qt.norm() {
            return Err(Error::NotHypoelliptic { t, min_eig });
        }
        let chol = Cholesky::new(qt.clone()).ok_or(Error::NotHypoelliptic { t, min_eig })?;
        let m = sys.dim() as f64;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let flow = matrix_exp(&(sys.b() * t))?;
        Ok(Self {
            t,
            flow,
            qt,
            chol,
            log_norm: -0.5 * m * (4.0 * PI).ln() - 0.5 * log_det,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn gramian(&self) -> &DMatrix<f64> {
        &self.qt
    }

    /// `e^{tB}`.
    pub fn flow(&self) -> &DMatrix<f64> {
        &self.flow
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = DVector::from_column_slice(y) - &self.flow * DVector::from_column_slice(x);
        let quad = d.dot(&self.chol.solve(&d));
        (self.log_norm - quad / 4.0).exp()
    }

    pub fn sample(&self, x: &[f64], y: &[f64]) -> KernelSample {
        KernelSample {
            value: self.eval(x, y),
            x: x.to_vec(),
            y: y.to_vec(),
            t: self.t,
        }
    }
}

fn check_point(p: &[f64], m: usize, what: &'static str) -> Result<()> {
    if p.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {} coordinates, expected {m}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    if t <= 0.0 {
        return Err(Error::OutOfRange(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// `(4π)^{-m/2} det Q(t)^{-1/2} exp(-⟨Q(t)⁻¹(y - e^{tB}x), y - e^{tB}x⟩/4)`.
pub fn hormander_kernel(sys: &SystemSpec, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_point(x, sys.dim(), "x")?;
    check_point(y, sys.dim(), "y")?;
    Ok(HormanderKernel::new(sys, t)?.eval(x, y))
}

/// Fundamental solution of `∂t - Δ_x - ⟨x, ∇_y⟩` on `R^n × R^n`, from
/// `(x, y)` to `(x̄, ȳ)`.
pub fn kolmogorov_kernel(x: &[f64], y: &[f64], xbar: &[f64], ybar: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    let n = x.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty point".into()));
    }
    check_point(y, n, "y")?;
    check_point(xbar, n, "xbar")?;
    check_point(ybar, n, "ybar")?;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..n {
        dx += (x[i] - xbar[i]).powi(2);
        dy += ((y[i] - ybar[i]) / t + 0.5 * (x[i] + xbar[i])).powi(2);
    }
    let nf = n as f64;
    let log_norm = 0.5 * nf * 3f64.ln() - nf * (2.0 * PI).ln() - 2.0 * nf * t.ln();
    Ok((log_norm - (dx + 12.0 * dy) / (4.0 * t)).exp())
}

/// Mehler kernel with frequency `ω`; at `ω = 1/4` it is the Ornstein-Uhlenbeck
/// transition density.
pub fn mehler_kernel(omega: f64, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::OutOfRange(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let m = x.len();
    check_point(y, m, "y")?;
    let r = omega.sqrt();
    let s = (2.0 * t * r).sinh();
    let mf = m as f64;
    let (grow, shrink) = ((t * r).exp(), (-t * r).exp());
    let d2: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (grow * b - shrink * a).powi(2))
        .sum();
    let log_norm = -0.5 * mf * (4.0 * PI).ln() + mf * t * r + 0.5 * mf * (2.0 * r / s).ln();
    Ok((log_norm - r / (2.0 * s) * d2).exp())
}

/// `u(x, t) = ∫ G(x, y, t) φ(y) dy` by the trapezoid rule on the field's grid.
pub fn heat_evolve(sys: &SystemSpec, phi: &ComplexField, t: f64) -> Result<ComplexField> {
    phi.require_gauge(Gauge::Phi)?;
    let grid = *phi.grid();
    let m = grid.dim();
    if sys.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "system of dimension {} on a grid of dimension {m}",
            sys.dim()
        )));
    }
    let kernel = HormanderKernel::new(sys, t)?;
    let h = grid.spacing();
    let min_eig = SymmetricEigen::new(kernel.qt.clone()).eigenvalues.min();
    let width = (2.0 * min_eig).sqrt();
    if width < 3.0 * h {
        return Err(Error::GridTooCoarse { width, spacing: h });
    }

    if is_diagonal(&kernel.qt) && is_diagonal(&kernel.flow) {
        return Ok(evolve_separable(&kernel, phi));
    }

    let dv = grid.cell_volume();
    let data = phi.samples();
    let samples = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in data.iter().enumerate() {
                let y = grid.point(j);
                acc += v * kernel.eval(&x[..m], &y[..m]);
            }
            acc * dv
        })
        .collect();
    ComplexField::new(grid, Gauge::Phi, samples)
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)].abs() <= 1e-15 * scale))
}

fn evolve_separable(kernel: &HormanderKernel, phi: &ComplexField) -> ComplexField {
    let grid = *phi.grid();
    let axis = grid.axis();
    let h = grid.spacing();
    let mut data = phi.samples().to_vec();
    for a in 0..grid.dim() {
        let e = kernel.flow[(a, a)];
        let q = kernel.qt[(a, a)];
        let norm = h / (4.0 * PI * q).sqrt();
        let weights: Vec<f64> = axis
            .iter()
            .flat_map(|&x| {
                axis.iter()
                    .map(move |&y| norm * (-(y - e * x).powi(2) / (4.0 * q)).exp())
            })
            .collect();
        let n = axis.len();
        data = crate::field::map_lines(&data, &grid, a, |line| {
            (0..n)
                .map(|i| {
                    weights[i * n..(i + 1) * n]
                        .iter()
                        .zip(line)
                        .map(|(w, v)| v * *w)
                        .sum()
                })
                .collect()
        });
    }
    ComplexField::from_parts(grid, Gauge::Phi, data)
}
