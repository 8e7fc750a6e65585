//! One pipeline per subcommand, each producing a [`Report`].

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use oudisp_core::estimates::{dispersive_record, hardy_predicate, uncertainty_product};
use oudisp_core::field::{write_field, ComplexField, FourierEngine, GridSpec};
use oudisp_core::kernels::{kolmogorov_kernel, mehler_kernel, HormanderKernel};
use oudisp_core::lti::{hypoellipticity_check, SystemSpec};
use oudisp_core::propagator::{
    oscillator_propagate, propagate, propagate_chirp, riccati_residual, Branch, Method,
    OscillatorRoute, TimePoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Command, Datum, Engine, RunConfig, SystemConfig};
use crate::failure::Failure;
use crate::report::{Cell, Report};

/// Everything a run produced.
pub struct Outcome {
    pub report: Report,
    /// Field files to write, keyed by file name.
    pub fields: Vec<(String, ComplexField)>,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, Failure> {
    cfg.validate()?;
    let report_only = |report| Outcome {
        report,
        fields: Vec::new(),
    };
    match cfg.command {
        Command::CheckSystem => check_system(cfg).map(report_only),
        Command::Propagate => propagate_all(cfg),
        Command::DispersiveScan => dispersive_scan(cfg).map(report_only),
        Command::UncertaintyScan => uncertainty_scan(cfg).map(report_only),
        Command::OscillatorCompare => oscillator_compare(cfg).map(report_only),
        Command::KernelCheck => kernel_check(cfg).map(report_only),
    }
}

/// Field file names for `propagate`, placed beside the report.
pub fn field_path(report: Option<&Path>, name: &str) -> PathBuf {
    match report.and_then(Path::parent) {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

fn field_name(report: Option<&Path>, datum: usize, time: usize) -> String {
    let stem = report
        .and_then(Path::file_stem)
        .map_or("propagate".to_string(), |s| {
            s.to_string_lossy().into_owned()
        });
    format!("{stem}-d{datum}-t{time}.oufield")
}

fn time_point(t: f64) -> Result<TimePoint, Failure> {
    TimePoint::new(t).map_err(|e| Failure::from_core("times", e))
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Identity => "identity",
        Branch::JPlus => "J+",
        Branch::JMinus => "J-",
    }
}

pub fn evolve(
    phi: &ComplexField,
    t: &TimePoint,
    engine: Engine,
) -> oudisp_core::Result<ComplexField> {
    match engine {
        Engine::Czt => propagate_chirp(phi, t, FourierEngine::Czt),
        Engine::Direct => propagate_chirp(phi, t, FourierEngine::Direct),
        Engine::Quadrature => propagate(phi, t, Method::Quadrature),
        Engine::Hermite => propagate(phi, t, Method::Hermite),
    }
}

fn sample_data(cfg: &RunConfig, grid: &GridSpec) -> Result<Vec<ComplexField>, Failure> {
    cfg.datum.iter().map(|d| d.sample(grid)).collect()
}

fn labels(data: &[Datum]) -> Vec<String> {
    data.iter().map(Datum::label).collect()
}

fn check_system(cfg: &RunConfig) -> Result<Report, Failure> {
    let sys = cfg.system.build()?;
    let mut report = Report::new(
        Command::CheckSystem.name(),
        &[
            "system",
            "t",
            "dim",
            "det_qt",
            "min_eig",
            "kalman_rank",
            "hypoelliptic",
            "spectral_abscissa",
            "has_invariant_measure",
        ],
    );
    for &t in &cfg.times {
        let r = hypoellipticity_check(&sys, t).map_err(|e| Failure::from_core("times", e))?;
        report.push(vec![
            cfg.system.label().into(),
            t.into(),
            sys.dim().into(),
            r.det_qt.into(),
            r.min_eig.into(),
            r.kalman_rank.into(),
            r.hypoelliptic.into(),
            r.spectral_abscissa.into(),
            r.has_invariant_measure.into(),
        ]);
    }
    Ok(report)
}

fn lattice(n_data: usize, n_times: usize) -> Vec<(usize, usize)> {
    (0..n_data)
        .flat_map(|d| (0..n_times).map(move |k| (d, k)))
        .collect()
}

fn propagate_all(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let grid = cfg.grid.build()?;
    let data = sample_data(cfg, &grid)?;
    let names = labels(&cfg.datum);
    let times = cfg
        .times
        .iter()
        .map(|&t| time_point(t))
        .collect::<Result<Vec<_>, _>>()?;
    let solved = lattice(data.len(), times.len())
        .par_iter()
        .map(|&(d, k)| evolve(&data[d], &times[k], cfg.engine).map(|f| (d, k, f)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new(
        Command::Propagate.name(),
        &[
            "datum",
            "label",
            "t",
            "reduced_t",
            "branch",
            "engine",
            "norm_gauss_in",
            "norm_gauss_out",
            "field",
        ],
    );
    let mut fields = Vec::with_capacity(solved.len());
    for (d, k, f) in solved {
        let name = field_name(cfg.output.path.as_deref(), d, k);
        let tp = &times[k];
        report.push(vec![
            d.into(),
            names[d].clone().into(),
            tp.t().into(),
            tp.reduced().into(),
            branch_name(tp.branch()).into(),
            cfg.engine.to_string().into(),
            data[d].norm_gauss().into(),
            f.norm_gauss().into(),
            name.clone().into(),
        ]);
        fields.push((name, f));
    }
    Ok(Outcome { report, fields })
}

fn dispersive_scan(cfg: &RunConfig) -> Result<Report, Failure> {
    let grid = cfg.grid.build()?;
    let data = sample_data(cfg, &grid)?;
    let names = labels(&cfg.datum);
    let records = lattice(data.len(), cfg.times.len())
        .par_iter()
        .map(|&(d, k)| {
            let tp = time_point(cfg.times[k])?;
            let f = evolve(&data[d], &tp, cfg.engine)?;
            cfg.ps
                .iter()
                .map(|&p| {
                    dispersive_record(&data[d], &f, p, tp.t())
                        .map(|r| (d, r))
                        .map_err(|e| Failure::from_core("ps", e))
                })
                .collect::<Result<Vec<_>, Failure>>()
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let mut report = Report::new(
        Command::DispersiveScan.name(),
        &["datum", "label", "p", "p_prime", "t", "lhs", "rhs", "ratio"],
    );
    for (d, r) in records.into_iter().flatten() {
        report.push(vec![
            d.into(),
            names[d].clone().into(),
            r.p.into(),
            r.p_prime.into(),
            r.t.into(),
            r.lhs.into(),
            r.rhs.into(),
            r.ratio.into(),
        ]);
    }
    Ok(report)
}

/// Random `β₀` with `Re β₀ ∈ [1e-3, 5)`, `Im β₀ ∈ [-5, 5)`, and times with
/// `|sin s| ≥ 1e-3`, drawn in a fixed order from `seed`.
pub fn uncertainty_lattice(
    seed: u64,
    states: usize,
    samples: usize,
) -> Vec<(usize, Complex64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(states * samples);
    for i in 0..states {
        let beta0 = Complex64::new(rng.gen_range(1e-3..5.0), rng.gen_range(-5.0..5.0));
        for _ in 0..samples {
            let mut s = rng.gen_range(0.0..TAU);
            while s.sin().abs() < 1e-3 {
                s = rng.gen_range(0.0..TAU);
            }
            out.push((i, beta0, s));
        }
    }
    out
}

fn uncertainty_scan(cfg: &RunConfig) -> Result<Report, Failure> {
    let cases = uncertainty_lattice(cfg.seed, cfg.uncertainty.states, cfg.uncertainty.samples);
    let records = cases
        .par_iter()
        .map(|&(i, beta0, s)| {
            let r = uncertainty_product(beta0, s)?;
            let forced = hardy_predicate(r.a_max, r.b_max, s)?;
            Ok((i, r, forced))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut report = Report::new(
        Command::UncertaintyScan.name(),
        &[
            "state",
            "beta0_re",
            "beta0_im",
            "s",
            "a_max",
            "b_max",
            "product",
            "threshold",
            "forces_zero",
        ],
    );
    for (i, r, forced) in records {
        report.push(vec![
            i.into(),
            r.beta0.re.into(),
            r.beta0.im.into(),
            r.s.into(),
            r.a_max.into(),
            r.b_max.into(),
            r.product.into(),
            r.threshold.into(),
            forced.into(),
        ]);
    }
    Ok(report)
}

/// Relative `L²` difference of `a` from `b` on the ball `|x| ≤ radius`.
pub fn l2_rel_diff_within(a: &ComplexField, b: &ComplexField, radius: f64) -> f64 {
    let grid = a.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for (j, (x, y)) in a.samples().iter().zip(b.samples()).enumerate() {
        if grid.radius_sq(j) <= radius * radius {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    (num / den).sqrt()
}

fn oscillator_compare(cfg: &RunConfig) -> Result<Report, Failure> {
    let grid = cfg.grid.build()?;
    let data = sample_data(cfg, &grid)?
        .iter()
        .map(|phi| phi.to_psi_gauge())
        .collect::<Result<Vec<_>, _>>()?;
    let names = labels(&cfg.datum);
    let rows = lattice(data.len(), cfg.times.len())
        .par_iter()
        .map(|&(d, k)| {
            let tp = time_point(cfg.times[k])?;
            let a = oscillator_propagate(&data[d], &tp, OscillatorRoute::Gauge)?;
            let b = oscillator_propagate(&data[d], &tp, OscillatorRoute::Kernel)?;
            let diff = l2_rel_diff_within(&a, &b, grid.extent() / 2.0);
            let riccati = riccati_residual(&grid, &[tp.t()]);
            Ok(vec![
                Cell::from(d),
                names[d].clone().into(),
                tp.t().into(),
                branch_name(tp.branch()).into(),
                data[d].norm_l2().into(),
                a.norm_l2().into(),
                b.norm_l2().into(),
                diff.into(),
                riccati.into(),
            ])
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut report = Report::new(
        Command::OscillatorCompare.name(),
        &[
            "datum",
            "label",
            "t",
            "branch",
            "norm_in",
            "norm_gauge",
            "norm_kernel",
            "route_rel_diff",
            "riccati_residual",
        ],
    );
    for row in rows {
        report.push(row);
    }
    Ok(report)
}

fn kernel_check(cfg: &RunConfig) -> Result<Report, Failure> {
    let sys: SystemSpec = cfg.system.build()?;
    let grid = cfg.grid.build()?;
    if grid.dim() != sys.dim() {
        return Err(Failure::invalid(
            "grid.dim",
            format!(
                "{} does not match the system dimension {}",
                grid.dim(),
                sys.dim()
            ),
        ));
    }
    let m = grid.dim();
    let origin = vec![0.0; m];
    let points: Vec<Vec<f64>> = (0..grid.len())
        .map(|j| grid.point(j)[..m].to_vec())
        .collect();
    let dv = grid.cell_volume();

    let mut report = Report::new(
        Command::KernelCheck.name(),
        &["t", "kernel", "mass", "mass_err", "max_rel_diff"],
    );
    for &t in &cfg.times {
        let g = HormanderKernel::new(&sys, t).map_err(|e| Failure::from_core("times", e))?;
        let reference: Vec<f64> = points.par_iter().map(|y| g.eval(&origin, y)).collect();
        let mass = reference.iter().sum::<f64>() * dv;
        report.push(vec![
            t.into(),
            "hormander".into(),
            mass.into(),
            (mass - 1.0).abs().into(),
            0.0.into(),
        ]);

        let counterpart: Option<(&str, Vec<f64>)> = match cfg.system {
            SystemConfig::Ou { .. } => Some((
                "mehler",
                points
                    .par_iter()
                    .map(|y| mehler_kernel(0.25, &origin, y, t))
                    .collect::<oudisp_core::Result<_>>()?,
            )),
            SystemConfig::Kolmogorov { n } => Some((
                "kolmogorov",
                points
                    .par_iter()
                    .map(|y| kolmogorov_kernel(&origin[..n], &origin[n..], &y[..n], &y[n..], t))
                    .collect::<oudisp_core::Result<_>>()?,
            )),
            _ => None,
        };
        if let Some((name, values)) = counterpart {
            let mass = values.iter().sum::<f64>() * dv;
            let diff = values
                .iter()
                .zip(&reference)
                .filter(|(_, r)| **r > 1e-200)
                .map(|(v, r)| (v - r).abs() / r)
                .fold(0.0, f64::max);
            report.push(vec![
                t.into(),
                name.into(),
                mass.into(),
                (mass - 1.0).abs().into(),
                diff.into(),
            ]);
        }
    }
    Ok(report)
}

/// Writes `field` in the binary field format.
pub fn save_field(path: &Path, field: &ComplexField) -> Result<(), Failure> {
    let file =
        std::fs::File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    write_field(field, &mut w).map_err(|e| Failure::Io(e.to_string()))?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}
