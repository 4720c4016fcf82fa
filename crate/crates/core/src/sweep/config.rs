use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bie::{DirichletDatum, DirichletProblem};
use crate::error::{Error, Result};
use crate::functionals::{Probes, Quantity};
use crate::geometry::ShapeSpec;
use crate::kernel::{Lattice, PeriodicKernel};
use crate::scalar::Real;
use crate::source::{PeriodicSource, SourceMode};
use crate::vec2::Vec2;

/// Sweep configuration as read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub hole: HoleSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub g: DatumSection,
    #[serde(default)]
    pub source: Vec<SourceSection>,
    pub sweep: EpsSection,
    #[serde(default)]
    pub probes: ProbeSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub check: Vec<CheckSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub q: [f64; 2],
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { q: [1.0, 1.0] }
    }
}

/// `shape` is `disk`, `ellipse` or `star`; see [`ShapeSpec::from_params`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSection {
    pub shape: String,
    pub params: Vec<f64>,
    pub p: [f64; 2],
}

impl Default for HoleSection {
    fn default() -> Self {
        Self {
            shape: "disk".into(),
            params: vec![1.0],
            p: [0.5, 0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub nodes: usize,
    pub kernel_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            nodes: 128,
            kernel_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSection {
    #[serde(default, rename = "const")]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

/// `cos · cos(2πk·x) + sin · sin(2πk·x)` with `k = q⁻¹z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub z: [i64; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSection {
    pub eps: Vec<f64>,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub x: [f64; 2],
    pub t: [f64; 2],
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            x: [0.1, 0.1],
            t: [2.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub degree: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { degree: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    256
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            enabled: false,
            grid: default_grid(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("sweep-out"),
        }
    }
}

/// Gate on the gap between a fitted `a₀` and its predicted limit.
/// `paper_limit` overrides the value computed from the limiting problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub quantity: Quantity,
    pub tolerance: f64,
    #[serde(default)]
    pub relative: bool,
    #[serde(default)]
    pub paper_limit: Option<f64>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let eps = &self.sweep.eps;
        if eps.is_empty() {
            return Err(Error::Config("eps list is empty".into()));
        }
        if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config("eps values must be positive".into()));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eps list must be strictly decreasing".into()));
        }
        if self.fit.degree >= eps.len() {
            return Err(Error::Config(format!(
                "fit degree {} needs more than {} eps values",
                self.fit.degree,
                eps.len()
            )));
        }
        if !self.check.is_empty() && eps.len() < self.fit.degree + 2 {
            return Err(Error::Config(format!(
                "checks need at least {} eps values",
                self.fit.degree + 2
            )));
        }
        if self.solver.nodes < 8 || !self.solver.nodes.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "node count {} must be even and at least 8",
                self.solver.nodes
            )));
        }
        for c in &self.check {
            if !(c.tolerance >= 0.0) {
                return Err(Error::Config(format!(
                    "tolerance for {} must be non-negative",
                    c.quantity.name()
                )));
            }
        }
        let config = |e: Error| Error::Config(e.to_string());
        let lattice = self.lattice::<f64>().map_err(config)?;
        let curve = self
            .shape::<f64>()
            .and_then(|s| s.curve(self.solver.nodes))
            .map_err(config)?;
        let p = Vec2::new(self.hole.p[0], self.hole.p[1]);
        // the largest ε decides containment
        curve
            .scaled(&lattice, p, eps[0])
            .map_err(|e| Error::Config(format!("eps = {}: {e}", eps[0])))?;
        self.source_for(lattice).map_err(config)?;
        Ok(())
    }

    pub fn lattice<T: Real>(&self) -> Result<Lattice<T>> {
        Lattice::new(T::lit(self.lattice.q[0]), T::lit(self.lattice.q[1]))
    }

    pub fn shape<T: Real>(&self) -> Result<ShapeSpec<T>> {
        let params: Vec<T> = self.hole.params.iter().map(|v| T::lit(*v)).collect();
        ShapeSpec::from_params(&self.hole.shape, &params)
    }

    pub fn datum<T: Real>(&self) -> DirichletDatum<T> {
        DirichletDatum {
            constant: T::lit(self.g.constant),
            cos: self.g.cos.iter().map(|v| T::lit(*v)).collect(),
            sin: self.g.sin.iter().map(|v| T::lit(*v)).collect(),
        }
    }

    fn source_for<T: Real>(&self, lattice: Lattice<T>) -> Result<PeriodicSource<T>> {
        PeriodicSource::new(
            lattice,
            self.source.iter().map(|s| SourceMode {
                z: s.z,
                c_cos: T::lit(s.cos),
                c_sin: T::lit(s.sin),
            }),
        )
    }

    pub fn probes<T: Real>(&self) -> Probes<T> {
        let v = |a: [f64; 2]| Vec2::new(T::lit(a[0]), T::lit(a[1]));
        Probes {
            x: v(self.probes.x),
            t: v(self.probes.t),
        }
    }

    pub fn oracle_grid(&self, force: bool) -> Option<usize> {
        (self.oracle.enabled || force).then_some(self.oracle.grid)
    }

    /// The problem described by the config, with a freshly calibrated kernel.
    pub fn problem<T: Real>(&self) -> Result<DirichletProblem<T>> {
        let lattice = self.lattice()?;
        let kernel = Arc::new(PeriodicKernel::new(
            lattice,
            T::lit(self.solver.kernel_tol),
        )?);
        let p = Vec2::new(T::lit(self.hole.p[0]), T::lit(self.hole.p[1]));
        Ok(DirichletProblem::new(
            kernel,
            self.shape()?,
            p,
            self.datum(),
            self.source_for(lattice)?,
        )
        .with_nodes(self.solver.nodes))
    }
}
