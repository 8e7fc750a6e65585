//! The unitary group `e^{it𝓛}`, `𝓛 = Δ - ⟨x, ∇⟩`, on `φ`-gauge fields, and
//! the imaginary harmonic oscillator `e^{itH}`, `H = Δ - |x|²/4`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{
    alias_phase, fourier_at_scaled, map_lines, ComplexField, FourierEngine, Gauge, GaussianState,
    GridSpec, ALIAS_LIMIT,
};

/// Distance to `πZ`, in `|sin t|`, below which the closed formulas are not used.
pub const TAU_SING: f64 = 1e-6;
/// Largest Hermite truncation order per axis.
pub const MAX_HERMITE_ORDER: usize = 128;
/// Fraction of the coefficient energy allowed in the top band before warning.
pub const HERMITE_TAIL_TOL: f64 = 1e-10;

/// Which half-period a reduced time lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Within [`TAU_SING`] of `2πZ`; the propagator is the identity.
    Identity,
    /// `(0, π)`.
    JPlus,
    /// `(π, 2π)`.
    JMinus,
}

/// A time with its reduction modulo `2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePoint {
    t: f64,
    reduced: f64,
    k_period: i64,
    branch: Branch,
}

impl TimePoint {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFinite("t"));
        }
        let k_period = (t / TAU).floor();
        let reduced = t - k_period * TAU;
        let (s, c) = reduced.sin_cos();
        let branch = if s.abs() < TAU_SING {
            if c < 0.0 {
                return Err(Error::SingularTime { t, tau: TAU_SING });
            }
            Branch::Identity
        } else if reduced < PI {
            Branch::JPlus
        } else {
            Branch::JMinus
        };
        Ok(Self {
            t,
            reduced,
            k_period: k_period as i64,
            branch,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `t - 2πk` in `[0, 2π)`.
    pub fn reduced(&self) -> f64 {
        self.reduced
    }

    pub fn k_period(&self) -> i64 {
        self.k_period
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Per-axis factor `(4π)^{-1/2} e^{it/2} / (e^{iπ/4} (sin t)^{1/2})` on `J⁺`,
    /// with `e^{i3π/4}` and `|sin t|` on `J⁻`, at the reduced time.
    fn axis_prefactor(&self) -> Complex64 {
        let r = self.reduced;
        let s = r.sin().abs();
        let branch_phase = match self.branch {
            Branch::JMinus => 3.0 * PI / 4.0,
            _ => PI / 4.0,
        };
        Complex64::cis(r / 2.0 - branch_phase) / (4.0 * PI * s).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ChirpFt,
    Quadrature,
    Hermite,
}

/// `e^{it𝓛}φ` on the grid of `phi`.
pub fn propagate(phi: &ComplexField, t: &TimePoint, method: Method) -> Result<ComplexField> {
    phi.require_gauge(Gauge::Phi)?;
    match method {
        Method::ChirpFt => propagate_chirp(phi, t, FourierEngine::Czt),
        Method::Quadrature => propagate_quadrature(phi, t),
        Method::Hermite => {
            let order = default_hermite_order(phi.grid().dim());
            Ok(hermite_synthesize(&hermite_analyze(phi, order)?, t.t()))
        }
    }
}

/// [`propagate`] at several times, in parallel.
pub fn propagate_batch(
    phi: &ComplexField,
    times: &[TimePoint],
    method: Method,
) -> Vec<Result<ComplexField>> {
    times
        .par_iter()
        .map(|t| propagate(phi, t, method))
        .collect()
}

fn check_alias(grid: &GridSpec, t: &TimePoint) -> Result<()> {
    let r = t.reduced();
    let phase = alias_phase(1.0 / r.tan(), 1.0 / (4.0 * PI * r.sin()), grid);
    if phase > ALIAS_LIMIT {
        return Err(Error::GridAliasing {
            phase,
            limit: ALIAS_LIMIT,
        });
    }
    Ok(())
}

/// Chirp, Fourier transform at `x/(4π sin t)`, chirp.
pub fn propagate_chirp(
    phi: &ComplexField,
    t: &TimePoint,
    engine: FourierEngine,
) -> Result<ComplexField> {
    phi.require_gauge(Gauge::Phi)?;
    if t.branch() == Branch::Identity {
        return Ok(phi.clone());
    }
    let grid = *phi.grid();
    check_alias(&grid, t)?;
    let r = t.reduced();
    let c = 1.0 / r.tan() / 4.0;
    let chirp = |x: &[f64]| Complex64::cis(c * x.iter().map(|v| v * v).sum::<f64>());
    let g = phi.to_psi_gauge()?.multiply_by(chirp);
    let transformed = fourier_at_scaled(&g, 1.0 / (4.0 * PI * r.sin()), engine)?;
    let pref = t.axis_prefactor().powu(grid.dim() as u32);
    let psi = transformed.multiply_by(|x| pref * chirp(x));
    ComplexField::from_parts(grid, Gauge::Psi, psi.into_samples()).from_psi_gauge()
}

/// Trapezoid evaluation of the oscillatory integral against `φ` with kernel
/// `exp(i|e^{it/2}y - e^{-it/2}x|²/(4 sin t))`, one axis at a time.
pub fn propagate_quadrature(phi: &ComplexField, t: &TimePoint) -> Result<ComplexField> {
    phi.require_gauge(Gauge::Phi)?;
    if t.branch() == Branch::Identity {
        return Ok(phi.clone());
    }
    let grid = *phi.grid();
    check_alias(&grid, t)?;
    let r = t.reduced();
    let s = r.sin();
    let (half_fwd, half_back) = (Complex64::cis(r / 2.0), Complex64::cis(-r / 2.0));
    let weight = t.axis_prefactor() * grid.spacing();
    let axis = grid.axis();
    let n = axis.len();
    let kernel: Vec<Complex64> = axis
        .par_iter()
        .flat_map_iter(|&x| {
            axis.iter().map(move |&y| {
                let d = half_fwd * y - half_back * x;
                weight * (Complex64::i() * d * d / (4.0 * s)).exp()
            })
        })
        .collect();
    let mut data = phi.samples().to_vec();
    for a in 0..grid.dim() {
        data = map_lines(&data, &grid, a, |line| apply_dense(&kernel, n, line));
    }
    ComplexField::new(grid, Gauge::Phi, data)
}

fn apply_dense(mat: &[Complex64], n: usize, line: &[Complex64]) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            mat[i * n..(i + 1) * n]
                .iter()
                .zip(line)
                .map(|(k, v)| k * v)
                .sum()
        })
        .collect()
}

/// Image of a Gaussian under `e^{it𝓛}` in dimension `m`.
///
/// With `A' = β₀ - i cot t/4`: `β(t) = 1/(16 A' sin²t) - i cot t/4` and
/// `c(t) = c₀ · P(t) · (π/A')^{m/2}`, `P` the branch prefactor.
pub fn propagate_gaussian(s0: &GaussianState, t: &TimePoint, m: usize) -> Result<GaussianState> {
    if t.branch() == Branch::Identity {
        return Ok(*s0);
    }
    let r = t.reduced();
    let s = r.sin();
    let ic = Complex64::new(0.0, 1.0 / r.tan() / 4.0);
    let a_prime = s0.beta() - ic;
    let beta = 1.0 / (16.0 * a_prime * s * s) - ic;
    let axis = t.axis_prefactor() * (PI / a_prime).sqrt();
    GaussianState::new(beta, s0.amplitude() * axis.powu(m as u32))
}

/// Default truncation order per axis.
pub fn default_hermite_order(m: usize) -> usize {
    match m {
        1 => 64,
        2 => 32,
        _ => 16,
    }
}

/// Coefficients of `φ` in the tensor Hermite basis.
///
/// Stored against the `L²(dγ)`-orthonormal functions `He_k/√k!` (products
/// over axes), `k_a = 0..=order`, row-major.
#[derive(Debug, Clone)]
pub struct HermiteCoeffs {
    order: usize,
    grid: GridSpec,
    coeffs: Vec<Complex64>,
    truncation_warning: bool,
}

impl HermiteCoeffs {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Orthonormal-basis coefficients.
    pub fn normalized(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn truncation_warning(&self) -> bool {
        self.truncation_warning
    }

    /// Coefficient of `Π_a He_{k_a}(x_a)`.
    pub fn he_coefficient(&self, k: &[usize]) -> Complex64 {
        let width = self.order + 1;
        let flat = k.iter().fold(0, |acc, &j| acc * width + j);
        let fact: f64 = k.iter().map(|&j| ln_factorial(j)).sum();
        self.coeffs[flat] * (-0.5 * fact).exp()
    }
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `g_k(x_j) = He_k(x_j) e^{-x_j²/4} / √k!`, laid out `[k][j]`.
fn hermite_functions(axis: &[f64], order: usize) -> Vec<f64> {
    let n = axis.len();
    let mut g = vec![0.0; (order + 1) * n];
    for (j, &x) in axis.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = (-x * x / 4.0).exp();
        g[j] = cur;
        for k in 0..order {
            let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
            prev = cur;
            cur = next;
            g[(k + 1) * n + j] = cur;
        }
    }
    g
}

/// Applies `mat` (`rows × shape[axis]`) along `axis` of a row-major tensor.
fn contract_axis(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    mat: &[Complex64],
    rows: usize,
) -> (Vec<Complex64>, Vec<usize>) {
    let cols = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = rows;
    let out: Vec<Complex64> = (0..outer)
        .into_par_iter()
        .flat_map_iter(|o| {
            let base = o * cols * inner;
            (0..rows).flat_map(move |r| {
                (0..inner).map(move |i| {
                    (0..cols)
                        .map(|c| mat[r * cols + c] * data[base + c * inner + i])
                        .sum::<Complex64>()
                })
            })
        })
        .collect();
    (out, out_shape)
}

/// Hermite coefficients of a `φ`-gauge field by trapezoid inner products
/// against `dγ`.
pub fn hermite_analyze(phi: &ComplexField, order: usize) -> Result<HermiteCoeffs> {
    phi.require_gauge(Gauge::Phi)?;
    if order == 0 || order > MAX_HERMITE_ORDER {
        return Err(Error::OutOfRange(format!(
            "Hermite order {order} must lie in 1..={MAX_HERMITE_ORDER}"
        )));
    }
    let grid = *phi.grid();
    let m = grid.dim();
    let w = grid.spacing() / (2.0 * PI).sqrt();
    let g: Vec<Complex64> = hermite_functions(&grid.axis(), order)
        .into_iter()
        .map(|v| Complex64::new(v * w, 0.0))
        .collect();
    let psi = phi.to_psi_gauge()?;
    let mut data = psi.into_samples();
    let mut shape = vec![grid.points(); m];
    for a in 0..m {
        (data, shape) = contract_axis(&data, &shape, a, &g, order + 1);
    }
    let band = order + 1 - (order + 1) / 8;
    let width = order + 1;
    let (mut total, mut tail) = (0.0, 0.0);
    for (flat, c) in data.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        let mut rest = flat;
        let mut top = 0;
        for _ in 0..m {
            top = top.max(rest % width);
            rest /= width;
        }
        if top >= band {
            tail += e;
        }
    }
    Ok(HermiteCoeffs {
        order,
        grid,
        coeffs: data,
        truncation_warning: tail > HERMITE_TAIL_TOL * total,
    })
}

/// `Σ_k c_k e^{-i|k|t} He_k`, sampled on the analysis grid; valid for every real `t`.
pub fn hermite_synthesize(c: &HermiteCoeffs, t: f64) -> ComplexField {
    let grid = c.grid;
    let m = grid.dim();
    let width = c.order + 1;
    let n = grid.points();
    let phased: Vec<Complex64> = c
        .coeffs
        .iter()
        .enumerate()
        .map(|(flat, v)| {
            let mut rest = flat;
            let mut degree = 0;
            for _ in 0..m {
                degree += rest % width;
                rest /= width;
            }
            v * Complex64::cis(-(degree as f64) * t)
        })
        .collect();
    let g = hermite_functions(&grid.axis(), c.order);
    let gt: Vec<Complex64> = (0..n)
        .flat_map(|j| (0..width).map(move |k| (j, k)))
        .map(|(j, k)| Complex64::new(g[k * n + j], 0.0))
        .collect();
    let mut data = phased;
    let mut shape = vec![width; m];
    for a in 0..m {
        (data, shape) = contract_axis(&data, &shape, a, &gt, n);
    }
    ComplexField::from_parts(grid, Gauge::Psi, data)
        .from_psi_gauge()
        .expect("synthesized field is in the psi gauge")
}

/// Which formula evaluates `e^{itH}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscillatorRoute {
    /// `e^{-|x|²/4 - imt/2} e^{it𝓛}(e^{|·|²/4} u₀)`.
    Gauge,
    /// Direct quadrature of the oscillator kernel.
    Kernel,
}

/// `e^{itH} u₀` for a flat (`ψ`-gauge) field `u₀`.
pub fn oscillator_propagate(
    u0: &ComplexField,
    t: &TimePoint,
    route: OscillatorRoute,
) -> Result<ComplexField> {
    u0.require_gauge(Gauge::Psi)?;
    let m = u0.grid().dim() as f64;
    let phase = Complex64::cis(-m * t.t() / 2.0);
    match route {
        OscillatorRoute::Gauge => {
            let f = propagate_chirp(&u0.from_psi_gauge()?, t, FourierEngine::Czt)?;
            Ok(f.to_psi_gauge()?.scale(phase))
        }
        OscillatorRoute::Kernel => {
            // The kernel carries e^{imr/2} at the reduced time r.
            let period = Complex64::cis(-m * (t.t() - t.reduced()) / 2.0);
            if t.branch() == Branch::Identity {
                return Ok(u0.scale(phase));
            }
            oscillator_kernel(u0, t).map(|u| u.scale(period))
        }
    }
}

fn oscillator_kernel(u0: &ComplexField, t: &TimePoint) -> Result<ComplexField> {
    let grid = *u0.grid();
    check_alias(&grid, t)?;
    let r = t.reduced();
    let s = r.sin();
    let (half_fwd, half_back) = (Complex64::cis(r / 2.0), Complex64::cis(-r / 2.0));
    let weight = t.axis_prefactor() * Complex64::cis(-r / 2.0) * grid.spacing();
    let axis = grid.axis();
    let n = axis.len();
    let kernel: Vec<Complex64> = axis
        .par_iter()
        .flat_map_iter(|&x| {
            axis.iter().map(move |&y| {
                let d = half_fwd * y - half_back * x;
                let exponent = Complex64::i() * d * d / (4.0 * s) - x * x / 4.0 + y * y / 4.0;
                weight * exponent.exp()
            })
        })
        .collect();
    let mut data = u0.samples().to_vec();
    for a in 0..grid.dim() {
        data = map_lines(&data, &grid, a, |line| apply_dense(&kernel, n, line));
    }
    ComplexField::new(grid, Gauge::Psi, data)
}

/// `max |i B + 2mA - 4A²|x|² + |x|²/4|` over the grid: the residual of
/// `i h_t + Δh - |∇h|² = -|x|²/4` for `h = A|x|² + Bt`.
pub fn riccati_residual_with(grid: &GridSpec, a: Complex64, b: Complex64) -> f64 {
    let m = grid.dim() as f64;
    (0..grid.len())
        .map(|k| {
            let r2 = grid.radius_sq(k);
            (Complex64::i() * b + 2.0 * m * a - 4.0 * a * a * r2 + r2 / 4.0).norm()
        })
        .fold(0.0, f64::max)
}

/// Residual of the quadratic ansatz `A = 1/4`, `B = im/2` over the grid and
/// the given times.
pub fn riccati_residual(grid: &GridSpec, t_samples: &[f64]) -> f64 {
    let a = Complex64::new(0.25, 0.0);
    let b = Complex64::new(0.0, grid.dim() as f64 / 2.0);
    // h_t = B does not depend on t, so each time gives the same residual.
    t_samples
        .iter()
        .map(|_| riccati_residual_with(grid, a, b))
        .fold(0.0, f64::max)
}
