//! Fourier transform `𝓕g(ξ) = ∫ e^{-2πi<ξ,x>} g(x) dx` sampled at scaled
//! grid points `ξ_k = scale · x_k`.
//!
//! The scaled points rarely coincide with DFT bins, so the production path
//! is a Bluestein chirp-z factorization per axis. The O(N²) direct sum is
//! kept as an independent engine.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{map_lines, ComplexField, GridSpec};
use crate::error::{Error, Result};

/// Largest accepted per-step phase increment, as a fraction of π.
pub const ALIAS_LIMIT: f64 = 0.9 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierEngine {
    Czt,
    Direct,
}

/// Per-step phase bound `|c|·L·h/2 + 2π|scale|·L·h` for an integrand
/// `e^{i c |x|²/4}·g` under the kernel `e^{-2πi<ξ,x>}`, `ξ = scale·x`.
pub fn alias_phase(chirp_rate: f64, scale: f64, grid: &GridSpec) -> f64 {
    let lh = grid.extent() * grid.spacing();
    chirp_rate.abs() * lh / 2.0 + 2.0 * PI * scale.abs() * lh
}

/// Samples of `𝓕g` at `ξ_k = scale · x_k`, on the grid of `g`.
pub fn fourier_at_scaled(
    g: &ComplexField,
    scale: f64,
    engine: FourierEngine,
) -> Result<ComplexField> {
    if !(scale.is_finite() && scale != 0.0) {
        return Err(Error::OutOfRange(format!(
            "scale {scale} must be finite and nonzero"
        )));
    }
    let grid = *g.grid();
    let phase = alias_phase(0.0, scale, &grid);
    if phase > ALIAS_LIMIT {
        return Err(Error::GridAliasing {
            phase,
            limit: ALIAS_LIMIT,
        });
    }
    let dft = ScaledDft::new(&grid, scale);
    let mut data = g.samples().to_vec();
    for axis in 0..grid.dim() {
        data = match engine {
            FourierEngine::Czt => map_lines(&data, &grid, axis, |line| dft.czt(line)),
            FourierEngine::Direct => map_lines(&data, &grid, axis, |line| dft.direct(line)),
        };
    }
    Ok(ComplexField::from_parts(grid, g.gauge(), data))
}

/// One-dimensional `S_k = h Σ_j g_j e^{-2πi ξ_k y_j}` with `y_j = -L + jh`
/// and `ξ_k = scale · y_k`.
pub struct ScaledDft {
    n: usize,
    h: f64,
    y0: f64,
    xi0: f64,
    dxi: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    chirp_hat: Vec<Complex64>,
}

impl ScaledDft {
    pub fn new(grid: &GridSpec, scale: f64) -> Self {
        let n = grid.points();
        let h = grid.spacing();
        let y0 = -grid.extent();
        let xi0 = y0 * scale;
        let dxi = h * scale;
        let size = 2 * n;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        let ifft = planner.plan_fft_inverse(size);

        // kj = (k² + j² - (k-j)²)/2, so the kernel e^{-2πi α kj} factors
        // into two chirps and a convolution with e^{iπα n²}.
        let alpha = dxi * h;
        let mut chirp = vec![Complex64::new(0.0, 0.0); size];
        for k in 0..n {
            let c = Complex64::cis(PI * alpha * (k * k) as f64);
            chirp[k] = c;
            if k > 0 {
                chirp[size - k] = c;
            }
        }
        fft.process(&mut chirp);
        Self {
            n,
            h,
            y0,
            xi0,
            dxi,
            fft,
            ifft,
            chirp_hat: chirp,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Bluestein evaluation, O(N log N).
    pub fn czt(&self, line: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let size = 2 * n;
        let alpha = self.dxi * self.h;
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (j, (b, g)) in buf.iter_mut().zip(line).enumerate() {
            let jf = j as f64;
            let phase = -2.0 * PI * self.xi0 * self.h * jf - PI * alpha * jf * jf;
            *b = g * Complex64::cis(phase);
        }
        self.fft.process(&mut buf);
        for (b, c) in buf.iter_mut().zip(&self.chirp_hat) {
            *b *= c;
        }
        self.ifft.process(&mut buf);
        let norm = self.h / size as f64;
        (0..n)
            .map(|k| {
                let kf = k as f64;
                let phase = -2.0 * PI * (self.xi0 * self.y0 + self.dxi * self.y0 * kf)
                    - PI * alpha * kf * kf;
                buf[k] * Complex64::cis(phase) * norm
            })
            .collect()
    }

    /// Direct summation, O(N²).
    pub fn direct(&self, line: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|k| {
                let xi = self.xi0 + k as f64 * self.dxi;
                let sum: Complex64 = line
                    .iter()
                    .enumerate()
                    .map(|(j, g)| {
                        let y = self.y0 + j as f64 * self.h;
                        g * Complex64::cis(-2.0 * PI * xi * y)
                    })
                    .sum();
                sum * self.h
            })
            .collect()
    }
}

/// The Gaussian pair `(4π)^{-m/2} det(A)^{-1/2} e^{-<A⁻¹x,x>/4}` ⟷
/// `e^{-4π²<Aξ,ξ>}` for complex symmetric `A` with `Re A ≥ 0`.
///
/// `√det A` is the product of principal roots of the eigenvalues, which all
/// lie in the closed right half-plane; along `(1-s)I + sA` this is the branch
/// that stays positive on real positive-definite matrices.
#[derive(Debug, Clone)]
pub struct ComplexGaussian {
    a: DMatrix<Complex64>,
    a_inv: DMatrix<Complex64>,
    sqrt_det: Complex64,
}

impl ComplexGaussian {
    pub fn new(a: DMatrix<Complex64>) -> Result<Self> {
        let m = a.nrows();
        if m == 0 || !a.is_square() {
            return Err(Error::DimensionMismatch(
                "A must be a nonempty square matrix".into(),
            ));
        }
        if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("A"));
        }
        let scale = a.norm();
        if (&a - a.transpose()).norm() > 1e-12 * scale {
            return Err(Error::OutOfRange("A is not symmetric".into()));
        }
        let re = a.map(|z| z.re);
        let min_re = nalgebra::SymmetricEigen::new(re).eigenvalues.min();
        if min_re < -1e-12 * scale {
            return Err(Error::OutOfRange(format!(
                "Re A has negative eigenvalue {min_re:e}"
            )));
        }
        let eig = Schur::try_new(a.clone(), f64::EPSILON, 1000 * m)
            .and_then(|s| s.eigenvalues())
            .ok_or_else(|| Error::NoConvergence("eigenvalues of A".into()))?;
        let max_abs = eig.iter().map(|l| l.norm()).fold(0.0, f64::max);
        if eig.iter().any(|l| l.norm() <= 1e-14 * max_abs) || max_abs == 0.0 {
            return Err(Error::SingularA);
        }
        let sqrt_det = eig.iter().map(|l| l.sqrt()).product();
        let a_inv = a.clone().try_inverse().ok_or(Error::SingularA)?;
        Ok(Self { a, a_inv, sqrt_det })
    }

    /// `c·I_m`.
    pub fn isotropic(c: Complex64, m: usize) -> Result<Self> {
        Self::new(DMatrix::from_diagonal_element(m, m, c))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn sqrt_det(&self) -> Complex64 {
        self.sqrt_det
    }

    fn bilinear(m: &DMatrix<Complex64>, v: &[f64]) -> Complex64 {
        let n = m.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += m[(i, j)] * v[i] * v[j];
            }
        }
        acc
    }

    /// `e^{-4π² <Aξ, ξ>}`.
    pub fn frequency(&self, xi: &[f64]) -> Complex64 {
        (-4.0 * PI * PI * Self::bilinear(&self.a, xi)).exp()
    }

    /// `(4π)^{-m/2} / √det A · e^{-<A⁻¹x, x>/4}`.
    pub fn spatial(&self, x: &[f64]) -> Complex64 {
        let m = self.dim() as f64;
        (4.0 * PI).powf(-m / 2.0) / self.sqrt_det * (-Self::bilinear(&self.a_inv, x) / 4.0).exp()
    }
}

/// `e^{-4π²<Aξ,ξ>}`; see [`ComplexGaussian`] for the spatial side.
pub fn gaussian_fourier(a: DMatrix<Complex64>, xi: &[f64]) -> Result<Complex64> {
    Ok(ComplexGaussian::new(a)?.frequency(xi))
}
