//! ε-sweeps: configuration, per-ε solves on a worker pool, power-series fits
//! of the recorded functionals and the comparison of each fitted `a₀` with
//! the value predicted by the limiting problem.

mod config;
mod fit;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bie::{eval_u_tilde, DirichletProblem};
use crate::error::{Error, Result};
use crate::functionals::{compute_record, limit_energy, FunctionalRecord, Quantity, CSV_COLUMNS};
use crate::scalar::Real;

pub use config::{
    CheckSection, DatumSection, EpsSection, FitSection, HoleSection, LatticeSection, OracleSection,
    OutputSection, ProbeSection, SolverSection, SourceSection, SweepConfig,
};
pub use fit::{fit_power_series, FitReport};

/// Solves at every `ε` of the config, largest first.
pub fn run_sweep<T: Real>(cfg: &SweepConfig, oracle: bool) -> Result<Vec<FunctionalRecord<T>>> {
    cfg.validate()?;
    let problem = cfg.problem::<T>()?;
    let probes = cfg.probes::<T>();
    let grid = cfg.oracle_grid(oracle);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.sweep.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut records = pool.install(|| {
        cfg.sweep
            .eps
            .par_iter()
            .map(|eps| {
                let e = T::lit(*eps);
                problem
                    .solve(e)
                    .and_then(|r| compute_record(&r, &probes, grid))
                    .map_err(|source| Error::SweepPoint {
                        eps: *eps,
                        source: Box::new(source),
                    })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by(|a, b| b.eps.partial_cmp(&a.eps).expect("finite eps"));
    Ok(records)
}

/// One solve at `eps`.
pub fn solve_point<T: Real>(
    cfg: &SweepConfig,
    eps: f64,
    oracle: bool,
) -> Result<FunctionalRecord<T>> {
    let problem = cfg.problem::<T>()?;
    let r = problem.solve(T::lit(eps))?;
    compute_record(&r, &cfg.probes(), cfg.oracle_grid(oracle))
}

/// `ε → 0` values of every recorded quantity, from the limiting problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperLimits {
    pub xi: f64,
    pub mean_j: f64,
    pub energy_g: f64,
    pub energy_total: f64,
    pub u_probe: f64,
    pub u_rescaled_probe: f64,
}

impl PaperLimits {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Xi => self.xi,
            Quantity::MeanJ => self.mean_j,
            Quantity::EnergyG => self.energy_g,
            Quantity::EnergyTotal => self.energy_total,
            Quantity::UProbe => self.u_probe,
            Quantity::URescaledProbe => self.u_rescaled_probe,
        }
    }
}

pub fn paper_limits<T: Real>(cfg: &SweepConfig) -> Result<PaperLimits> {
    limits_of(&cfg.problem::<T>()?, cfg)
}

fn limits_of<T: Real>(problem: &DirichletProblem<T>, cfg: &SweepConfig) -> Result<PaperLimits> {
    let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
    let lim = problem.limit()?;
    let probes = cfg.probes::<T>();
    let xi = lim.xi_tilde;
    let g = limit_energy(&lim)?;
    let src = &problem.source;
    Ok(PaperLimits {
        xi: f(xi),
        mean_j: f(xi * problem.kernel.lattice().meas()),
        energy_g: f(g),
        energy_total: f(g + src.dirichlet_energy_pq()),
        u_probe: f(xi + src.eval_pq(probes.x)),
        u_rescaled_probe: f(eval_u_tilde(&lim, probes.t)? + xi + src.eval_pq(problem.p)),
    })
}

/// Result of one `[[check]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub quantity: Quantity,
    pub predicted_limit: f64,
    pub paper_limit: f64,
    pub abs_gap: f64,
    /// Largest admissible gap.
    pub threshold: f64,
    pub passed: bool,
}

/// Fits of every quantity and the outcome of each configured check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub limits: PaperLimits,
    pub fits: Vec<FitReport>,
    pub checks: Vec<CheckOutcome>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Fits every quantity with the configured degree and evaluates the checks.
/// Fits are skipped when the sweep is too short for them.
pub fn analyze<T: Real>(cfg: &SweepConfig, records: &[FunctionalRecord<T>]) -> Result<SweepReport> {
    let limits = paper_limits::<T>(cfg)?;
    let degree = cfg.fit.degree;
    let mut fits = Vec::new();
    if records.len() >= degree + 2 {
        for q in Quantity::ALL {
            let limit = cfg
                .check
                .iter()
                .find(|c| c.quantity == q)
                .and_then(|c| c.paper_limit)
                .unwrap_or(limits.get(q));
            fits.push(fit_power_series(records, q, degree, T::lit(limit))?);
        }
    }
    let mut checks = Vec::new();
    for c in &cfg.check {
        let fit = fits
            .iter()
            .find(|f| f.quantity == c.quantity)
            .ok_or_else(|| Error::DegenerateSweep(format!("no fit for {}", c.quantity.name())))?;
        let paper_limit = c.paper_limit.unwrap_or(limits.get(c.quantity));
        let abs_gap = (fit.predicted_limit - paper_limit).abs();
        let threshold = if c.relative {
            c.tolerance * paper_limit.abs()
        } else {
            c.tolerance
        };
        checks.push(CheckOutcome {
            quantity: c.quantity,
            predicted_limit: fit.predicted_limit,
            paper_limit,
            abs_gap,
            threshold,
            passed: abs_gap <= threshold,
        });
    }
    Ok(SweepReport {
        limits,
        fits,
        checks,
    })
}

pub fn records_csv<T: Real>(records: &[FunctionalRecord<T>]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn summary_text<T: Real>(records: &[FunctionalRecord<T>], report: &SweepReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "sweep over {} values of eps", records.len());
    for r in records {
        let _ = writeln!(s, "  eps = {:.4e}  residual = {:.2e}", r.eps, r.residual);
    }
    let _ = writeln!(
        s,
        "\nfits (degree {}):",
        report.fits.first().map_or(0, |f| f.degree)
    );
    for f in &report.fits {
        let _ = writeln!(
            s,
            "  {:<17} a0 = {:+.10e}  limit = {:+.10e}  gap = {:.3e}  max residual = {:.3e}  a0 bound = {:.3e}  loo = {:.3e}",
            f.quantity.name(),
            f.predicted_limit,
            f.paper_limit,
            f.abs_gap,
            f.max_residual,
            f.a0_bound,
            f.loo_shift()
        );
    }
    if !report.checks.is_empty() {
        let _ = writeln!(s, "\nchecks:");
    }
    for c in &report.checks {
        let _ = writeln!(
            s,
            "  [{}] {:<17} gap {:.3e} (allowed {:.3e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.quantity.name(),
            c.abs_gap,
            c.threshold
        );
    }
    let _ = writeln!(
        s,
        "\n{}",
        if report.passed() {
            "all checks passed"
        } else {
            "some checks FAILED"
        }
    );
    s
}

/// Writes `records.csv`, `records.json`, `fits.json` and `summary.txt` into
/// `dir` and returns the written paths.
pub fn report<T: Real + Serialize>(
    dir: &Path,
    records: &[FunctionalRecord<T>],
    report: &SweepReport,
) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let json =
        |v: serde_json::Result<String>| v.map_err(|e| Error::Config(format!("serialization: {e}")));
    let files = [
        ("records.csv", records_csv(records)),
        ("records.json", json(serde_json::to_string_pretty(records))?),
        ("fits.json", json(serde_json::to_string_pretty(report))?),
        ("summary.txt", summary_text(records, report)),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
