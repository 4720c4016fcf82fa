//! Boundary-integral solver for the Dirichlet problem for the Poisson equation
//! in a periodically perforated plane, with the small-hole asymptotics of its
//! solution, energy and cell mean.

pub mod bie;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod scalar;
pub mod source;
pub mod special;
pub mod sweep;
pub mod trig;
pub mod vec2;

pub use bie::{DirichletDatum, DirichletProblem, SolveResult};
pub use error::{Error, Result};
pub use functionals::{FunctionalRecord, Quantity};
pub use geometry::ShapeSpec;
pub use kernel::{eval_sn, grad_sn, EwaldConfig, Lattice, PeriodicKernel};
pub use scalar::Real;
pub use source::PeriodicSource;
pub use sweep::{FitReport, SweepConfig};
pub use vec2::{Sym2, Vec2};

pub type Lattice64 = Lattice<f64>;
pub type PeriodicKernel64 = PeriodicKernel<f64>;
pub type Point = Vec2<f64>;
pub type Problem = DirichletProblem<f64>;
pub type Record = FunctionalRecord<f64>;
