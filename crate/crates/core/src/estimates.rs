//! Dispersive `L^p → L^{p'}` bounds and Gaussian uncertainty thresholds.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ComplexField, GaussianState};
use crate::propagator::{propagate, propagate_gaussian, Method, TimePoint, TAU_SING};

/// Threshold on `a b sin² s`.
pub const HARDY_THRESHOLD: f64 = 1.0 / 16.0;

/// One dispersive comparison at `(p, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRecord {
    pub p: f64,
    pub p_prime: f64,
    pub t: f64,
    /// `‖e^{-|·|²/4} f(·, t)‖_{p'}`.
    pub lhs: f64,
    /// `C_p (4π|sin t|)^{-m(1/2 - 1/p')} ‖e^{-|·|²/4} φ‖_p`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Gaussian decay rates at times `0` and `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyRecord {
    pub beta0: Complex64,
    pub s: f64,
    pub a_max: f64,
    pub b_max: f64,
    /// `a_max · b_max · sin² s`.
    pub product: f64,
    pub threshold: f64,
}

fn check_p(p: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} must lie in [1, 2]")));
    }
    Ok(())
}

/// Conjugate exponent; `p = 1` gives infinity.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Decay exponent `m(1/2 - 1/p')`.
pub fn decay_exponent(p: f64, m: usize) -> f64 {
    m as f64 * (1.0 / p - 0.5)
}

/// `(p^{1/p} / p'^{1/p'})^{m/2}`, equal to 1 at `p = 1` and `p = 2`.
pub fn hausdorff_young_constant(p: f64, m: usize) -> Result<f64> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(1.0);
    }
    let q = conjugate_exponent(p);
    let ratio = p.powf(1.0 / p) / q.powf(1.0 / q);
    Ok(ratio.powf(m as f64 / 2.0))
}

/// Right-hand side of the dispersive bound for a datum with
/// `‖e^{-|·|²/4} φ‖_p = norm_p`.
pub fn dispersive_rhs(p: f64, m: usize, t: f64, norm_p: f64) -> Result<f64> {
    let c = hausdorff_young_constant(p, m)?;
    let s = t.sin().abs();
    if s < TAU_SING {
        return Err(Error::SingularTime { t, tau: TAU_SING });
    }
    Ok(c * (4.0 * PI * s).powf(-decay_exponent(p, m)) * norm_p)
}

/// Compares both sides of the dispersive bound for `phi` at time `t`.
pub fn dispersive_report(phi: &ComplexField, p: f64, t: &TimePoint) -> Result<DispersionRecord> {
    dispersive_report_with(phi, p, t, Method::ChirpFt)
}

pub fn dispersive_report_with(
    phi: &ComplexField,
    p: f64,
    t: &TimePoint,
    method: Method,
) -> Result<DispersionRecord> {
    check_p(p)?;
    let f = propagate(phi, t, method)?;
    dispersive_record(phi, &f, p, t.t())
}

/// Record for a solution `f = e^{it𝓛}φ` computed elsewhere.
pub fn dispersive_record(
    phi: &ComplexField,
    f: &ComplexField,
    p: f64,
    t: f64,
) -> Result<DispersionRecord> {
    check_p(p)?;
    let m = phi.grid().dim();
    let q = conjugate_exponent(p);
    let lhs = f.to_psi_gauge()?.norm_lp(q);
    let rhs = dispersive_rhs(p, m, t, phi.to_psi_gauge()?.norm_lp(p))?;
    Ok(DispersionRecord {
        p,
        p_prime: q,
        t,
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// Dispersive records over every `(datum, p, t)`, datum-major.
pub fn dispersive_scan(
    data: &[ComplexField],
    ps: &[f64],
    ts: &[f64],
) -> Result<Vec<DispersionRecord>> {
    let lattice: Vec<(usize, f64, f64)> = (0..data.len())
        .flat_map(|d| {
            ps.iter()
                .flat_map(move |&p| ts.iter().map(move |&t| (d, p, t)))
        })
        .collect();
    lattice
        .par_iter()
        .map(|&(d, p, t)| dispersive_report(&data[d], p, &TimePoint::new(t)?))
        .collect()
}

/// Envelope `e^{(m/p')t} / (1 - e^{-2t})^{m(1/2 - 1/p')}` of the friction
/// estimate, with unit constant.
pub fn friction_bound_curve(p: f64, m: usize, t: f64) -> Result<f64> {
    check_p(p)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::OutOfRange(format!("t = {t} must be positive")));
    }
    let inv_q = 1.0 - 1.0 / p;
    let growth = m as f64 * inv_q * t;
    Ok((growth - decay_exponent(p, m) * (-(-2.0 * t).exp_m1()).ln()).exp())
}

/// Decay rates of the Gaussian solution with `ψ(0) = e^{-β₀|x|²}` at times
/// `0` and `s`.
pub fn uncertainty_product(beta0: Complex64, s: f64) -> Result<UncertaintyRecord> {
    let tp = TimePoint::new(s)?;
    let state = GaussianState::new(beta0, Complex64::new(1.0, 0.0))?;
    let a_max = beta0.re;
    let b_max = propagate_gaussian(&state, &tp, 1)?.beta().re;
    Ok(UncertaintyRecord {
        beta0,
        s,
        a_max,
        b_max,
        product: a_max * b_max * s.sin().powi(2),
        threshold: HARDY_THRESHOLD,
    })
}

/// Whether decay rates `a` at time 0 and `b` at time `s` force the solution
/// to vanish: `a b sin² s ≥ 1/16`, never at `s ∈ πZ`.
pub fn hardy_predicate(a: f64, b: f64, s: f64) -> Result<bool> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::OutOfRange(format!(
            "decay rates must be positive, got a = {a}, b = {b}"
        )));
    }
    let sin2 = s.sin().powi(2);
    if sin2.sqrt() < TAU_SING {
        return Ok(false);
    }
    Ok(a * b * sin2 >= HARDY_THRESHOLD)
}

/// `(a, b, s) ↦ (a, 16π² b sin² s)`, after which the Fourier-side test is
/// `a b' ≥ π²`.
pub fn hardy_reduction(a: f64, b: f64, s: f64) -> (f64, f64) {
    (a, 16.0 * PI * PI * b * s.sin().powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Gauge, GridSpec};
    use approx::assert_relative_eq;

    #[test]
    fn constant_endpoints() {
        for m in 1..=3 {
            assert_eq!(hausdorff_young_constant(1.0, m).unwrap(), 1.0);
            assert_relative_eq!(
                hausdorff_young_constant(2.0, m).unwrap(),
                1.0,
                epsilon = 1e-15
            );
        }
        assert!(hausdorff_young_constant(2.5, 1).is_err());
        assert!(hausdorff_young_constant(0.9, 1).is_err());
    }

    #[test]
    fn constant_at_four_thirds() {
        // (4/3)^{3/4} / 4^{1/4}, then the square root for m = 1.
        let inner: f64 = (4.0f64 / 3.0).powf(0.75) / 4f64.powf(0.25);
        assert_relative_eq!(
            hausdorff_young_constant(4.0 / 3.0, 1).unwrap(),
            inner.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            hausdorff_young_constant(4.0 / 3.0, 2).unwrap(),
            inner,
            max_relative = 1e-15
        );
    }

    #[test]
    fn l2_ratio_is_one() {
        let grid = GridSpec::new(1, 16.0, 1024).unwrap();
        let phi =
            ComplexField::from_fn(grid, Gauge::Phi, |x| Complex64::new(x[0].cos(), 0.3 * x[0]));
        for t in [0.4, 1.7, 4.0] {
            let r = dispersive_report(&phi, 2.0, &TimePoint::new(t).unwrap()).unwrap();
            assert_relative_eq!(r.ratio, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn non_gaussian_is_strict() {
        let grid = GridSpec::new(1, 16.0, 1024).unwrap();
        let phi = ComplexField::from_fn(grid, Gauge::Phi, |x| {
            Complex64::new(x[0].powi(3) - 3.0 * x[0], 0.0)
        });
        let r = dispersive_report(&phi, 1.0, &TimePoint::new(0.5).unwrap()).unwrap();
        assert!(r.ratio < 1.0);
        assert!(r.p_prime.is_infinite());
    }

    #[test]
    fn chirp_matched_gaussian_attains_the_bound() {
        let grid = GridSpec::new(1, 16.0, 2048).unwrap();
        for (p, t) in [(4.0 / 3.0, 1.0_f64), (1.0, 0.5), (1.5, 2.0)] {
            let alpha = Complex64::new(0.5, 1.0 / t.tan() / 4.0);
            let phi = GaussianState::extremizer(alpha).unwrap().eval_phi(&grid);
            let r = dispersive_report(&phi, p, &TimePoint::new(t).unwrap()).unwrap();
            assert_relative_eq!(r.ratio, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn real_gaussian_ratio_has_closed_form() {
        // Ratio (α/|α - i cot t/4|)^{m(1/2 - 1/p')} for real α.
        let grid = GridSpec::new(1, 16.0, 2048).unwrap();
        let (alpha, p, t) = (0.5f64, 4.0 / 3.0, 1.0f64);
        let phi = GaussianState::extremizer(Complex64::new(alpha, 0.0))
            .unwrap()
            .eval_phi(&grid);
        let r = dispersive_report(&phi, p, &TimePoint::new(t).unwrap()).unwrap();
        let chirp = 1.0 / t.tan() / 4.0;
        let expected = (alpha / alpha.hypot(chirp)).powf(decay_exponent(p, 1));
        assert_relative_eq!(r.ratio, expected, max_relative = 1e-8);
    }

    #[test]
    fn friction_envelope() {
        for t in [0.3, 1.0, 2.5] {
            assert_relative_eq!(
                friction_bound_curve(2.0, 3, t).unwrap(),
                (1.5 * t).exp(),
                max_relative = 1e-14
            );
        }
        let t = 1e-6;
        assert_relative_eq!(
            friction_bound_curve(1.0, 1, t).unwrap(),
            (2.0 * t).powf(-0.5),
            max_relative = 1e-5
        );
        let e2 = (-2.0f64).exp();
        assert_relative_eq!(
            friction_bound_curve(1.0, 2, 1.0).unwrap(),
            1.0 / (1.0 - e2),
            max_relative = 1e-14
        );
        assert!(friction_bound_curve(1.0, 1, 0.0).is_err());
    }

    #[test]
    fn uncertainty_examples() {
        for b0 in [0.05, 0.25, 1.0, 7.0] {
            let r = uncertainty_product(Complex64::new(b0, 0.0), PI / 2.0).unwrap();
            assert_relative_eq!(r.product, 1.0 / 16.0, max_relative = 1e-14);
        }
        let r = uncertainty_product(Complex64::new(0.25, 0.0), PI / 4.0).unwrap();
        assert_relative_eq!(r.product, 1.0 / 32.0, max_relative = 1e-14);
        let r = uncertainty_product(Complex64::new(0.25, 0.0), 1e-3).unwrap();
        assert!(r.product < 1e-6);
        assert_eq!(
            uncertainty_product(Complex64::new(0.25, 0.0), PI)
                .unwrap_err()
                .name(),
            "SingularTime"
        );
    }

    #[test]
    fn uncertainty_matches_grid_decay() {
        let grid = GridSpec::new(1, 16.0, 1024).unwrap();
        let beta0 = Complex64::new(0.25, 0.0);
        let s = PI / 4.0;
        let r = uncertainty_product(beta0, s).unwrap();
        let phi = GaussianState::new(beta0, Complex64::new(1.0, 0.0))
            .unwrap()
            .eval_phi(&grid);
        let f = propagate(&phi, &TimePoint::new(s).unwrap(), Method::ChirpFt).unwrap();
        let psi = f.to_psi_gauge().unwrap();
        // Gaussian decay rate read off from |ψ(0)|/|ψ(x)| at x = 2.
        let k0 = 512;
        let k2 = k0 + 64;
        let rate = (psi.samples()[k0].norm() / psi.samples()[k2].norm()).ln() / 4.0;
        assert_relative_eq!(rate, r.b_max, max_relative = 1e-9);
    }

    #[test]
    fn hardy_truth_table() {
        assert!(hardy_predicate(0.25, 0.25, PI / 2.0).unwrap());
        assert!(!hardy_predicate(0.25, 0.25, PI / 4.0).unwrap());
        assert!(!hardy_predicate(100.0, 100.0, PI).unwrap());
        assert!(!hardy_predicate(100.0, 100.0, 0.0).unwrap());
        assert!(hardy_predicate(0.0, 1.0, 1.0).is_err());
        let (a, b) = hardy_reduction(0.25, 0.25, PI / 2.0);
        assert_relative_eq!(a * b, PI * PI, max_relative = 1e-15);
    }
}
