use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use perforated_core::functionals::{dipole_moments, limit_energy};
use perforated_core::sweep::{
    analyze, paper_limits, report, run_sweep, solve_point, summary_text, SweepConfig,
};
use perforated_core::{eval_sn, Lattice, PeriodicKernel, Vec2};

#[derive(Parser)]
#[command(
    name = "perforated",
    version,
    about = "Periodic Dirichlet problem with a small hole: solves, sweeps and limit checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve at one eps and print the record as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Also run the volume quadrature oracles.
        #[arg(long)]
        oracle: bool,
    },
    /// Run the configured sweep, write the report and gate on the checks.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        oracle: bool,
        /// Worker threads, overriding `[sweep] jobs`.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print a table of periodic kernel properties.
    KernelCheck {
        /// Cell side lengths.
        #[arg(long, num_args = 2, default_values_t = [1.0, 1.0])]
        q: Vec<f64>,
    },
    /// Solve only the limiting problem and print its data.
    Limits {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &std::path::Path) -> Result<SweepConfig> {
    Ok(SweepConfig::load(path)?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve {
            config,
            eps,
            oracle,
        } => {
            let cfg = load(&config)?;
            let record = solve_point::<f64>(&cfg, eps, oracle)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
            Ok(true)
        }
        Command::Sweep {
            config,
            out,
            oracle,
            jobs,
        } => {
            let mut cfg = load(&config)?;
            if let Some(j) = jobs {
                cfg.sweep.jobs = j;
            }
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let records = run_sweep::<f64>(&cfg, oracle)?;
            let rep = analyze(&cfg, &records)?;
            report(&dir, &records, &rep)
                .with_context(|| format!("writing report to {}", dir.display()))?;
            print!("{}", summary_text(&records, &rep));
            println!("report written to {}", dir.display());
            Ok(rep.passed())
        }
        Command::KernelCheck { q } => kernel_check(q[0], q[1]),
        Command::Limits { config } => {
            let cfg = load(&config)?;
            limits(&cfg)?;
            Ok(true)
        }
    }
}

fn kernel_check(q1: f64, q2: f64) -> Result<bool> {
    let lattice = Lattice::new(q1, q2)?;
    let k = PeriodicKernel::new(lattice, 1e-12)?;
    let cfg = k.config();
    let other = PeriodicKernel::new_with_eta(lattice, 2.0 * cfg.eta, 1e-12)?;
    let samples = [
        Vec2::new(0.31 * q1, 0.17 * q2),
        Vec2::new(0.5 * q1, 0.5 * q2),
        Vec2::new(0.02 * q1, -0.01 * q2),
    ];
    let mut even: f64 = 0.0;
    let mut periodic: f64 = 0.0;
    let mut eta: f64 = 0.0;
    let mut harmonic: f64 = 0.0;
    for x in samples {
        let v = k.eval_sqn(x)?;
        even = even.max((v - k.eval_sqn(-x)?).abs());
        for shift in [
            lattice.point(1, 0),
            lattice.point(0, 1),
            lattice.point(-2, 3),
        ] {
            periodic = periodic.max((v - k.eval_sqn(x + shift)?).abs());
        }
        eta = eta.max((v - other.eval_sqn(x)?).abs());
        if x.norm() > 0.1 * lattice.min_q() {
            harmonic = harmonic.max(k.harmonicity_defect(x, 1e-3)?.abs());
        }
    }
    let y = [0.37, -1.2];
    let mut scaling: f64 = 0.0;
    for e in [0.5f64, 1e-2, 1e-4] {
        let lhs = eval_sn(&[e * y[0], e * y[1]])?;
        scaling = scaling.max((lhs - eval_sn(&y)? - e.ln() / (2.0 * PI)).abs());
    }
    let mean = k.cell_mean()?.abs();
    let rows = [
        ("evenness S(x) - S(-x)", even, 1e-10),
        ("periodicity S(x) - S(x + z q)", periodic, 1e-10),
        ("cell mean", mean, 1e-10),
        ("harmonicity defect, h = 1e-3", harmonic, 1e-4),
        ("eta independence", eta, 2e-12),
        ("log scaling S(e x) - S(x) - ln(e)/2pi", scaling, 1e-14),
    ];
    println!(
        "lattice {q1} x {q2}, eta = {:.6}, real cutoff {}, spectral cutoff {}",
        cfg.eta, cfg.real_cutoff, cfg.spectral_cutoff
    );
    println!(
        "{:<40} {:>12} {:>10}  status",
        "property", "defect", "bound"
    );
    let mut ok = true;
    for (name, v, bound) in rows {
        let pass = v < bound;
        ok &= pass;
        println!(
            "{name:<40} {v:>12.3e} {bound:>10.0e}  {}",
            if pass { "ok" } else { "FAIL" }
        );
    }
    Ok(ok)
}

fn limits(cfg: &SweepConfig) -> Result<()> {
    let problem = cfg.problem::<f64>()?;
    let lim = problem.limit()?;
    let tau = &lim.tau0.values;
    let lo = tau.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tau.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "tau0: min {lo:.12e}  max {hi:.12e}  integral {:.12e}",
        lim.tau0.integral()
    );
    println!("xi~ (solve)        {:+.15e}", lim.xi_tilde);
    println!("xi~ (tau0 pairing) {:+.15e}", lim.xi_tilde_closed_form);
    let d = dipole_moments(&lim)?;
    let b = d.coefficient();
    println!(
        "trace moment   ({:+.12e}, {:+.12e})",
        d.trace_moment.x, d.trace_moment.y
    );
    println!(
        "flux moment    ({:+.12e}, {:+.12e})",
        d.flux_moment.x, d.flux_moment.y
    );
    println!(
        "density moment ({:+.12e}, {:+.12e})",
        d.density_moment.x, d.density_moment.y
    );
    println!(
        "dipole coefficient ({:+.12e}, {:+.12e}), identity defect {:.3e}",
        b.x, b.y, d.defect
    );
    println!("limit energy {:.15e}", limit_energy(&lim)?);
    let l = paper_limits::<f64>(cfg)?;
    println!("predicted limits:");
    println!("{}", serde_json::to_string_pretty(&l)?);
    Ok(())
}
