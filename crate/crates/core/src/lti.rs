//! Linear drift-diffusion systems `tr(Q ∇²) + <Bx, ∇>`.
//!
//! Covariance Gramians are computed with the Van Loan block exponential:
//! the upper-right block of `exp(t [[B, Q], [0, -Bᵀ]])` equals
//! `∫₀ᵗ e^{(t-s)B} Q e^{-sBᵀ} ds`, and right-multiplying by `e^{tBᵀ}` gives
//! `Q(t) = ∫₀ᵗ e^{sB} Q e^{sBᵀ} ds`.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative positivity threshold for Gramians and Kalman singular values.
pub const TOL_PD: f64 = 1e-10;
/// Relative tolerance on negative eigenvalues of the diffusion matrix.
pub const TOL_PSD: f64 = 1e-12;
/// Relative tolerance on the asymmetry of the diffusion matrix.
pub const TOL_SYM: f64 = 1e-12;
/// Relative residual accepted for the Lyapunov solve.
pub const TOL_LYAP: f64 = 1e-10;
/// Largest dimension handled by the dense solvers.
pub const MAX_DIM: usize = 16;

// Real parts this close to zero (relative to ‖B‖) are reported as zero.
const EIG_SNAP: f64 = 1e-12;
// Largest exponent magnitude before e^x overflows an f64.
const EXP_LIMIT: f64 = 700.0;

/// The pair (Q, B) defining the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    q: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl SystemSpec {
    pub fn new(q: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let m = q.nrows();
        if m == 0 || !q.is_square() || b.shape() != (m, m) {
            return Err(Error::DimensionMismatch(format!(
                "Q is {:?} and B is {:?}; both must be m x m with m >= 1",
                q.shape(),
                b.shape()
            )));
        }
        if m > MAX_DIM {
            return Err(Error::DimensionMismatch(format!(
                "dimension {m} exceeds the dense-solver cap {MAX_DIM}"
            )));
        }
        if !all_finite(&q) {
            return Err(Error::NonFinite("Q"));
        }
        if !all_finite(&b) {
            return Err(Error::NonFinite("B"));
        }
        let scale = q.norm();
        if (&q - q.transpose()).norm() > TOL_SYM * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::OutOfRange("Q is not symmetric".into()));
        }
        let q = symmetrize(&q);
        let min_eig = SymmetricEigen::new(q.clone()).eigenvalues.min();
        let tol = TOL_PSD * scale;
        if min_eig < -tol {
            return Err(Error::NonPsdInput { min_eig, tol });
        }
        Ok(Self { q, b })
    }

    /// `Q = I_m`, `B = -I_m`: the Ornstein-Uhlenbeck operator `Δ - <x, ∇>`.
    pub fn ornstein_uhlenbeck(m: usize) -> Self {
        Self {
            q: DMatrix::identity(m, m),
            b: -DMatrix::identity(m, m),
        }
    }

    /// Kolmogorov's kinetic operator on `(v, x) ∈ R^n × R^n`:
    /// `Q = diag(I_n, 0)`, `B = [[0, 0], [I_n, 0]]`.
    pub fn kolmogorov(n: usize) -> Self {
        let m = 2 * n;
        let mut q = DMatrix::zeros(m, m);
        let mut b = DMatrix::zeros(m, m);
        for i in 0..n {
            q[(i, i)] = 1.0;
            b[(n + i, i)] = 1.0;
        }
        Self { q, b }
    }

    /// The Smoluchowski-Kramers system `Q = diag(1, 0)`, `B = [[-2, -2], [1, 0]]`.
    pub fn smoluchowski_kramers() -> Self {
        Self {
            q: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            b: DMatrix::from_row_slice(2, 2, &[-2.0, -2.0, 1.0, 0.0]),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
}

/// Gramian diagnostics at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoReport {
    pub t: f64,
    pub qt: DMatrix<f64>,
    pub det_qt: f64,
    pub min_eig: f64,
    pub kalman_rank: usize,
    pub hypoelliptic: bool,
    pub spectral_abscissa: f64,
    pub has_invariant_measure: bool,
}

impl HypoReport {
    /// Whether the Kalman rank test alone says the system is controllable.
    pub fn kalman_full_rank(&self) -> bool {
        self.kalman_rank == self.qt.nrows()
    }
}

/// Stationary Gaussian of a stable system.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMeasure {
    pub q_inf: DMatrix<f64>,
    /// `ln((4π)^{-m/2} det(Q∞)^{-1/2})`.
    pub log_normalizer: f64,
}

impl InvariantMeasure {
    /// Density of `(4π)^{-m/2} det(Q∞)^{-1/2} exp(-<Q∞⁻¹x, x>/4)` at `x`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let chol = self
            .q_inf
            .clone()
            .cholesky()
            .expect("Q_inf is positive definite by construction");
        let quad = x.dot(&chol.solve(&x));
        (self.log_normalizer - quad / 4.0).exp()
    }
}

/// `e^M` by scaling and squaring with a diagonal Padé approximant of
/// degree 3, 5, 7, 9 or 13 (Higham's 2005 selection thresholds).
pub fn matrix_exp(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(
            "matrix_exp needs a square matrix".into(),
        ));
    }
    if !all_finite(m) {
        return Err(Error::NonFinite("matrix"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let norm1 = one_norm(m);

    const THETA: [(usize, f64); 4] = [
        (3, 1.495_585_217_958_292e-2),
        (5, 2.539_398_330_063_23e-1),
        (7, 9.504_178_996_162_932e-1),
        (9, 2.097_847_961_257_068),
    ];
    for (degree, theta) in THETA {
        if norm1 <= theta {
            return pade_low(m, degree);
        }
    }

    const THETA_13: f64 = 5.371_920_351_148_152;
    let s = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    if s > 1000 {
        return Err(Error::Overflow(format!("matrix norm {norm1:e} too large")));
    }
    let scaled = m / 2f64.powi(s);
    let mut x = pade_13(&scaled)?;
    for _ in 0..s {
        x = &x * &x;
    }
    if !all_finite(&x) {
        return Err(Error::Overflow("matrix exponential overflowed".into()));
    }
    Ok(x)
}

fn pade_low(a: &DMatrix<f64>, degree: usize) -> Result<DMatrix<f64>> {
    let c: &[f64] = match degree {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17_297_280.0,
            8_648_640.0,
            1_995_840.0,
            277_200.0,
            25_200.0,
            1_512.0,
            56.0,
            1.0,
        ],
        9 => &[
            17_643_225_600.0,
            8_821_612_800.0,
            2_075_673_600.0,
            302_702_400.0,
            30_270_240.0,
            2_162_160.0,
            110_880.0,
            3_960.0,
            90.0,
            1.0,
        ],
        _ => unreachable!("unsupported Padé degree"),
    };
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    // Even powers A^0, A^2, A^4, ...
    let mut pow = ident.clone();
    let mut u_inner = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for k in 0..=degree / 2 {
        v += &pow * c[2 * k];
        u_inner += &pow * c[2 * k + 1];
        pow = &pow * &a2;
    }
    let u = a * u_inner;
    pade_solve(&u, &v)
}

fn pade_13(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * B[13] + &a4 * B[11] + &a2 * B[9];
    let u_inner = &a6 * u_hi + &a6 * B[7] + &a4 * B[5] + &a2 * B[3] + &ident * B[1];
    let u = a * u_inner;
    let v_hi = &a6 * B[12] + &a4 * B[10] + &a2 * B[8];
    let v = &a6 * v_hi + &a6 * B[6] + &a4 * B[4] + &a2 * B[2] + &ident * B[0];
    pade_solve(&u, &v)
}

fn pade_solve(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Overflow("Padé denominator is singular".into()))
}

/// `Q(t) = ∫₀ᵗ e^{sB} Q e^{sBᵀ} ds`.
///
/// The Van Loan block exponential is evaluated on a step `t/2^k` with
/// `‖B‖ t/2^k ≤ 1/2`; the result is then doubled `k` times with
/// `Q(2s) = Q(s) + e^{sB} Q(s) e^{sBᵀ}`. On long horizons the block
/// exponential alone pairs a growing and a decaying factor and cancels.
pub fn covariance_gramian(sys: &SystemSpec, t: f64) -> Result<DMatrix<f64>> {
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    if t <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "Gramian time must be positive, got {t}"
        )));
    }
    let m = sys.dim();
    let growth = max_abs_real_eig(sys.b())?;
    if t * growth > EXP_LIMIT {
        return Err(Error::Overflow(format!(
            "t * max|Re λ(B)| = {:e} overflows the block exponential",
            t * growth
        )));
    }
    let reach = t * sys.b().norm();
    let doublings = if reach > 0.5 {
        (reach / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let step = t / 2f64.powi(doublings);

    let mut block = DMatrix::zeros(2 * m, 2 * m);
    block.view_mut((0, 0), (m, m)).copy_from(sys.b());
    block.view_mut((0, m), (m, m)).copy_from(sys.q());
    block
        .view_mut((m, m), (m, m))
        .copy_from(&(-sys.b().transpose()));
    let e = matrix_exp(&(block * step))?;
    let mut flow = e.view((0, 0), (m, m)).into_owned();
    let mut qt = symmetrize(&(e.view((0, m), (m, m)) * flow.transpose()));
    for _ in 0..doublings {
        qt = symmetrize(&(&qt + &flow * &qt * flow.transpose()));
        flow = &flow * &flow;
    }
    if !all_finite(&qt) {
        return Err(Error::Overflow("Gramian is not finite".into()));
    }
    Ok(qt)
}

/// Gramian positivity, Kalman rank and stability diagnostics at time `t`.
pub fn hypoellipticity_check(sys: &SystemSpec, t: f64) -> Result<HypoReport> {
    let qt = covariance_gramian(sys, t)?;
    let eig = SymmetricEigen::new(qt.clone());
    let min_eig = eig.eigenvalues.min();
    let det_qt = qt.determinant();
    let hypoelliptic = min_eig > TOL_PD * qt.norm();

    let kalman_rank = kalman_rank(sys);
    let spectral_abscissa = spectral_abscissa(sys.b())?;
    Ok(HypoReport {
        t,
        det_qt,
        min_eig,
        kalman_rank,
        hypoelliptic,
        spectral_abscissa,
        has_invariant_measure: spectral_abscissa < 0.0,
        qt,
    })
}

/// Rank of `[C, BC, ..., B^{m-1}C]` with `C` the PSD square root of `Q`.
///
/// A singular value `σ` counts when `σ² > TOL_PD · σ_max²`, the threshold the
/// Gramian test applies to eigenvalues of `Q(t)`.
pub fn kalman_rank(sys: &SystemSpec) -> usize {
    let m = sys.dim();
    let c = psd_sqrt(sys.q());
    let mut ctrb = DMatrix::zeros(m, m * m);
    let mut block = c;
    for k in 0..m {
        ctrb.view_mut((0, k * m), (m, m)).copy_from(&block);
        block = sys.b() * block;
    }
    let sv = ctrb.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s * s > TOL_PD * smax * smax).count()
}

/// Symmetric PSD square root. Eigenvalues below the rounding floor
/// `m ε λ_max` are treated as zero.
pub fn psd_sqrt(q: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(q));
    let floor = q.nrows() as f64 * f64::EPSILON * eig.eigenvalues.max().max(0.0);
    let roots = eig
        .eigenvalues
        .map(|l| if l > floor { l.sqrt() } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `max Re λ` over the spectrum of `B`.
pub fn spectral_abscissa(b: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(b)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn eigenvalues(b: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !b.is_square() {
        return Err(Error::DimensionMismatch(
            "eigenvalues of a non-square matrix".into(),
        ));
    }
    if !all_finite(b) {
        return Err(Error::NonFinite("B"));
    }
    let n = b.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let max_iter = 1000 * n;
    // Defective matrices (nilpotent drifts) can stall the shifted QR on B
    // while Bᵀ or an orthogonally rotated copy converges immediately.
    let candidates = [b.clone(), b.transpose(), {
        let rot = fixed_rotation(n);
        rot.transpose() * b * rot
    }];
    let raw = candidates
        .into_iter()
        .find_map(|c| Schur::try_new(c, f64::EPSILON, max_iter))
        .ok_or_else(|| Error::NoConvergence("Schur iteration did not converge".into()))?
        .complex_eigenvalues();
    let snap = EIG_SNAP * b.norm().max(1.0);
    Ok(raw
        .iter()
        .map(|l| {
            let re = if l.re.abs() <= snap { 0.0 } else { l.re };
            Complex64::new(re, l.im)
        })
        .collect())
}

// Orthogonal factor of a fixed well-conditioned matrix.
fn fixed_rotation(n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| {
        ((i * 7 + j * 3 + 1) as f64).sin() + if i == j { 2.0 } else { 0.0 }
    });
    m.qr().q()
}

fn max_abs_real_eig(b: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(b)?
        .iter()
        .map(|l| l.re.abs())
        .fold(0.0, f64::max))
}

/// Solves `B X + X Bᵀ = -Q` for a stable drift.
pub fn invariant_measure(sys: &SystemSpec) -> Result<InvariantMeasure> {
    let abscissa = spectral_abscissa(sys.b())?;
    if abscissa >= 0.0 {
        return Err(Error::NoInvariantMeasure { abscissa });
    }
    let m = sys.dim();
    let q_inf = solve_lyapunov(sys.b(), sys.q())?;
    let chol = q_inf.clone().cholesky().filter(|c| {
        let d = c.l_dirty().diagonal();
        d.min() > TOL_PD.sqrt() * d.max()
    });
    let Some(chol) = chol else {
        return Err(Error::NotHypoelliptic {
            t: f64::INFINITY,
            min_eig: SymmetricEigen::new(q_inf).eigenvalues.min(),
        });
    };
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let log_normalizer = -(m as f64) / 2.0 * (4.0 * std::f64::consts::PI).ln() - 0.5 * log_det;
    Ok(InvariantMeasure {
        q_inf,
        log_normalizer,
    })
}

/// Dense Kronecker solve of `A X + X Aᵀ = -Q`, `X` symmetrized.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    let ident = DMatrix::<f64>::identity(m, m);
    // Column-major vec: vec(AX) = (I ⊗ A) vec X, vec(XAᵀ) = (A ⊗ I) vec X.
    let op = ident.kronecker(a) + a.kronecker(&ident);
    let rhs = DVector::from_iterator(m * m, q.iter().map(|v| -v));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or(Error::NoInvariantMeasure { abscissa: 0.0 })?;
    let x = symmetrize(&DMatrix::from_column_slice(m, m, sol.as_slice()));
    let residual = (a * &x + &x * a.transpose() + q).norm();
    if residual > TOL_LYAP * q.norm().max(1.0) {
        return Err(Error::Overflow(format!(
            "Lyapunov residual {residual:e} too large"
        )));
    }
    Ok(x)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
