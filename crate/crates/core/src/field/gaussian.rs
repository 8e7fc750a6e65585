use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ComplexField, Gauge, GridSpec};
use crate::error::{Error, Result};

/// Smallest accepted `Re β`.
pub const BETA_MARGIN: f64 = 1e-14;
/// Relative size of the sample at `|x| = L` above which a tail warning is raised.
pub const TAIL_TOL: f64 = 1e-14;

/// Isotropic Gaussian `ψ(x) = c·e^{-β|x|²}` in the ψ-gauge, `Re β > 0`.
///
/// In the φ-gauge this is `c·e^{-(β - 1/4)|x|²}`; the extremizer family
/// `φ = e^{-α|x|² + |x|²/4}` corresponds to `β = α`, `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    beta: Complex64,
    amplitude: Complex64,
}

/// Grid samples of a [`GaussianState`] and whether its tail reaches the edge.
#[derive(Debug, Clone)]
pub struct GaussianSamples {
    pub field: ComplexField,
    pub tail_warning: bool,
}

impl GaussianState {
    pub fn new(beta: Complex64, amplitude: Complex64) -> Result<Self> {
        if !(beta.re.is_finite() && beta.im.is_finite()) {
            return Err(Error::NonFinite("beta"));
        }
        if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
            return Err(Error::NonFinite("amplitude"));
        }
        if beta.re <= BETA_MARGIN {
            return Err(Error::OutOfRange(format!(
                "Re beta = {:e} must exceed {BETA_MARGIN:e}",
                beta.re
            )));
        }
        Ok(Self { beta, amplitude })
    }

    /// The datum `φ(x) = e^{-α|x|² + |x|²/4}`.
    pub fn extremizer(alpha: Complex64) -> Result<Self> {
        Self::new(alpha, Complex64::new(1.0, 0.0))
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    /// `ψ` at squared radius `r2`.
    pub fn psi_at(&self, r2: f64) -> Complex64 {
        self.amplitude * (-self.beta * r2).exp()
    }

    /// `φ = e^{|x|²/4} ψ` at squared radius `r2`.
    pub fn phi_at(&self, r2: f64) -> Complex64 {
        self.amplitude * (-(self.beta - 0.25) * r2).exp()
    }

    /// ψ-gauge samples on `grid`.
    pub fn eval(&self, grid: &GridSpec) -> GaussianSamples {
        let field = ComplexField::from_fn(*grid, Gauge::Psi, |x| {
            self.psi_at(x.iter().map(|v| v * v).sum())
        });
        let edge = (-self.beta.re * grid.extent().powi(2)).exp();
        GaussianSamples {
            field,
            tail_warning: edge > TAIL_TOL,
        }
    }

    /// φ-gauge samples on `grid`.
    pub fn eval_phi(&self, grid: &GridSpec) -> ComplexField {
        ComplexField::from_fn(*grid, Gauge::Phi, |x| {
            self.phi_at(x.iter().map(|v| v * v).sum())
        })
    }

    /// Closed-form Ornstein-Uhlenbeck heat flow `e^{τ𝓛}` of the state, `𝓛 = Δ - ⟨x, ∇⟩`,
    /// continued to complex `τ`.
    ///
    /// With `a = β - 1/4` the φ-gauge exponent and `w = 1 + 2a(1 - e^{-2τ})`,
    /// the flow is `a ↦ a e^{-2τ}/w`, `c ↦ c w^{-m/2}` (principal branch).
    pub fn parabolic_flow(&self, tau: Complex64, m: usize) -> Result<Self> {
        let a = self.beta - 0.25;
        let decay = (-2.0 * tau).exp();
        let w = 1.0 + 2.0 * a * (1.0 - decay);
        if w.norm() == 0.0 {
            return Err(Error::SingularA);
        }
        let beta = a * decay / w + 0.25;
        let amplitude = self.amplitude * w.powf(-(m as f64) / 2.0);
        Self::new(beta, amplitude)
    }

    /// Exact `‖ψ‖_{L^p(R^m)}`; `p = ∞` gives `|c|`.
    pub fn norm_lp(&self, p: f64, m: usize) -> f64 {
        let c = self.amplitude.norm();
        if p.is_infinite() {
            return c;
        }
        c * (PI / (p * self.beta.re)).powf(m as f64 / (2.0 * p))
    }
}
