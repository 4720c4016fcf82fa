//! Functionals of the solution: point values, the cell Dirichlet energy and
//! the cell mean, computed from boundary data.
//!
//! With `u = U + P_q[f]`, `U = w_q[μ] + ξ`, and `Û(t) = U(p + εt)`:
//!
//! ```text
//! ∫_{Q∖Ω_ε} |∇u|² = G + ∫_Q |∇P_q[f]|²,
//! G = −∮ Γ ∂_νÛ dσ − 2∮ P_q[f](p + εt) ∂_νÛ dσ − ε² ∫_Ω |∇P_q[f](p + εt)|² dt,
//! ∫_{Q∖Ω_ε} u = ε² J̃ + ξ(|Q| − ε²|Ω|) − ε² ∫_Ω P_q[f](p + εt) dt,
//! J̃ = ∮∮ θ(s) ν(t)·ν(s) [S_2(t − s) + R(ε(t − s))] dσ_s dσ_t.
//! ```

mod oracle;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bie::{normal_derivatives, LimitData, SolveResult};
use crate::error::{Error, Result};
use crate::geometry::{HoleCurve, ShapeSpec};
use crate::kernel::PeriodicKernel;
use crate::scalar::Real;
use crate::special::gauss_legendre_on;
use crate::trig::log_weights;
use crate::vec2::Vec2;

pub use oracle::{energy_volume_oracle, mean_volume_oracle, LayerField};

/// Largest accepted log-ε coefficient in the mean, relative to `∮|θ|`.
pub const LOG_EPS_TOLERANCE: f64 = 1e-8;

/// Normal derivatives are extrapolated from offsets `h, 2h, 4h` with
/// `h` this fraction of the hole diameter.
pub const NORMAL_STEP: f64 = 2.5e-4;

fn normal_step<T: Real>(curve: &HoleCurve<T>) -> T {
    T::lit(NORMAL_STEP) * curve.diameter()
}

/// Probe points: `x` in the cell, `t` in rescaled coordinates around the hole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probes<T> {
    pub x: Vec2<T>,
    pub t: Vec2<T>,
}

impl<T: Real> Default for Probes<T> {
    fn default() -> Self {
        Self {
            x: Vec2::new(T::lit(0.1), T::lit(0.1)),
            t: Vec2::new(T::lit(2.0), T::zero()),
        }
    }
}

/// `u(x) = w_q[μ](x) + ξ + P_q[f](x)`.
pub fn eval_u<T: Real>(result: &SolveResult<T>, x: Vec2<T>) -> Result<T> {
    let layer = result.layer();
    let t = layer.to_rescaled(x);
    if layer.shape().contains(t) {
        return Err(Error::InsideHole(format!("x = ({}, {})", x.x, x.y)));
    }
    Ok(layer.double_layer(x)? + result.xi + result.source.eval_pq(x))
}

/// `u(p + εt)`, evaluated through the free-space split around the hole.
pub fn eval_u_rescaled<T: Real>(result: &SolveResult<T>, t: Vec2<T>) -> Result<T> {
    let layer = result.layer();
    if layer.shape().contains(t) {
        return Err(Error::InsideHole(format!("t = ({}, {})", t.x, t.y)));
    }
    Ok(layer.double_layer_rescaled(t)?
        + result.xi
        + result.source.eval_pq(result.p + t * result.eps))
}

/// `∫_Ω F(t) dt` by Gauss–Legendre in the radial variable and the
/// trapezoidal rule in angle, 32 × 32, over the star-shaped hole.
pub fn hole_integral<T: Real>(shape: &ShapeSpec<T>, f: impl Fn(Vec2<T>) -> T) -> T {
    let (rho, w) = gauss_legendre_on(32, T::zero(), T::one());
    let m = 32;
    let step = T::TAU() / T::from_usize_lossy(m);
    let mut acc = T::zero();
    for i in 0..m {
        let pt = shape.point(step * T::from_usize_lossy(i));
        let jac = pt.x.cross(pt.dx);
        for (r, wr) in rho.iter().zip(&w) {
            acc += f(pt.x * *r) * *r * jac * *wr;
        }
    }
    acc * step
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts<T> {
    /// `∫_{Q∖Ω_ε} |∇u|²`.
    pub energy_total: T,
    /// The factor `G`.
    pub energy_g: T,
    /// `−∮ Γ ∂_νÛ dσ`.
    pub g_sharp: T,
    /// `−2∮ P_q[f](p + εt) ∂_νÛ dσ`.
    pub g_one: T,
    /// `ε² ∫_Ω |∇P_q[f](p + εt)|² dt`.
    pub correction: T,
    pub source_energy: T,
}

/// Cell Dirichlet energy by reduction to the hole boundary.
pub fn energy<T: Real>(result: &SolveResult<T>) -> Result<EnergyParts<T>> {
    let curve = result.curve();
    let layer = result.layer();
    let (p, eps) = (result.p, result.eps);
    let boundary: Vec<T> = result
        .boundary_data
        .iter()
        .map(|g| *g - result.xi)
        .collect();
    let dn = normal_derivatives(curve, &boundary, normal_step(curve), |t| {
        layer.double_layer_rescaled(t)
    })?;
    let trace = result.source.trace_pq_on_scaled(p, eps, curve)?;
    let mut g_sharp = T::zero();
    let mut g_one = T::zero();
    for i in 0..curve.len() {
        let w = curve.weights()[i];
        g_sharp -= w * dn[i] * result.boundary_data[i];
        g_one -= T::lit(2.0) * w * trace[i] * dn[i];
    }
    let correction =
        eps * eps * hole_integral(curve.spec(), |t| result.source.grad_pq(p + t * eps).norm2());
    let energy_g = g_sharp + g_one - correction;
    let source_energy = result.source.dirichlet_energy_pq();
    Ok(EnergyParts {
        energy_total: energy_g + source_energy,
        energy_g,
        g_sharp,
        g_one,
        correction,
        source_energy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanParts<T> {
    /// The factor `J`, equal to `∫_{Q∖Ω_ε} u`.
    pub mean_j: T,
    /// `J + ∫_Q P_q[f]`, the same number since `P_q[f]` has zero cell mean.
    pub total: T,
    /// `J̃`, the double boundary integral.
    pub j_sharp: T,
    /// Coefficient of `ε² ln ε` that would enter `J` through `S_2(εx)`; it vanishes because `∮ν dσ = 0`.
    pub log_eps_coefficient: T,
    /// `ε² ∫_Ω P_q[f](p + εt) dt`.
    pub correction: T,
}

/// Cell mean `∫_{Q∖Ω_ε} u` from boundary integrals.
pub fn mean_integral<T: Real>(result: &SolveResult<T>) -> Result<MeanParts<T>> {
    let c = result.curve();
    let n = c.len();
    let theta = &result.density.values;
    let eps = result.eps;
    let kernel = &result.kernel;
    let rk: Vec<T> = log_weights(n);
    let step = T::TAU() / T::from_usize_lossy(n);
    let four_pi = T::lit(4.0) * T::PI();
    // θ_j ν_j |γ'_j|, the parametric density of the inner integral
    let f: Vec<Vec2<T>> = (0..n)
        .map(|j| c.normals()[j] * (theta[j] * c.speeds()[j]))
        .collect();
    let rows: Vec<(T, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ti = c.nodes()[i];
            let half = T::from_usize_lossy(i) * step / T::lit(2.0);
            let mut inner = Vec2::zero();
            let mut regular = T::zero();
            for j in 0..n {
                let smooth = if i == j {
                    c.speeds()[i].powi(2).ln()
                } else {
                    let s = (half - T::from_usize_lossy(j) * step / T::lit(2.0)).sin();
                    ((ti - c.nodes()[j]).norm2() / (T::lit(4.0) * s * s)).ln()
                };
                inner += f[j] * ((rk[i.abs_diff(j)] + step * smooth) / four_pi);
                if j >= i {
                    let r = kernel.eval_rn((ti - c.nodes()[j]) * eps)?;
                    let sym =
                        c.normals()[i].dot(c.normals()[j]) * c.weights()[i] * c.weights()[j] * r;
                    regular += if j == i {
                        sym * theta[i]
                    } else {
                        sym * (theta[i] + theta[j])
                    };
                }
            }
            Ok((c.weights()[i] * c.normals()[i].dot(inner), regular))
        })
        .collect::<Result<_>>()?;
    let j_sharp = rows.iter().map(|(a, b)| *a + *b).sum::<T>();
    let mut nsum = Vec2::zero();
    let mut tsum = Vec2::zero();
    for k in 0..n {
        nsum += c.normals()[k] * c.weights()[k];
        tsum += c.normals()[k] * (c.weights()[k] * theta[k]);
    }
    let log_eps_coefficient = nsum.dot(tsum) / T::TAU();
    let scale = result
        .density
        .values
        .iter()
        .zip(c.weights())
        .map(|(a, w)| a.abs() * *w)
        .sum::<T>()
        .max(T::one());
    if log_eps_coefficient.abs() > T::lit(LOG_EPS_TOLERANCE) * scale {
        return Err(Error::Inconsistent(format!(
            "log ε coefficient {log_eps_coefficient:e} does not cancel"
        )));
    }
    let p = result.p;
    let correction = eps * eps * hole_integral(c.spec(), |t| result.source.eval_pq(p + t * eps));
    let meas = kernel.lattice().meas();
    let mean_j = eps * eps * j_sharp + result.xi * (meas - eps * eps * c.area()) - correction;
    Ok(MeanParts {
        mean_j,
        total: mean_j + result.source.cell_mean_pq(),
        j_sharp,
        log_eps_coefficient,
        correction,
    })
}

/// Exterior normal derivative of `ũ` at the nodes of the limiting boundary.
pub fn limit_normal_derivative<T: Real>(limit: &LimitData<T>) -> Result<Vec<T>> {
    let curve = limit.curve();
    normal_derivatives(curve, &limit.boundary_values(), normal_step(curve), |t| {
        limit.layer().free_double_layer(t)
    })
}

/// `∫_{ℝ²∖Ω} |∇ũ|² = −∮ ũ ∂_νũ dσ`.
pub fn limit_energy<T: Real>(limit: &LimitData<T>) -> Result<T> {
    let dn = limit_normal_derivative(limit)?;
    let w = limit.curve().weights();
    Ok(-limit
        .boundary_values()
        .iter()
        .zip(&dn)
        .zip(w)
        .map(|((u, d), w)| *u * *d * *w)
        .sum::<T>())
}

/// Boundary moments of the limiting profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleMoments<T> {
    /// `∮ ν ũ dσ`.
    pub trace_moment: Vec2<T>,
    /// `∮ s ∂ũ/∂ν dσ`.
    pub flux_moment: Vec2<T>,
    /// `−∮ ν θ̃ dσ`.
    pub density_moment: Vec2<T>,
    /// `|trace − flux − density|`.
    pub defect: T,
}

impl<T: Real> DipoleMoments<T> {
    /// Coefficient `b` of the far field `u(x) ≈ Ξ + P_q[f](x) + ε b·∇S_q(x − p)`.
    pub fn coefficient(&self) -> Vec2<T> {
        self.trace_moment - self.flux_moment
    }

    /// `ε b·∇S_q(x − p)`.
    pub fn far_field(
        &self,
        kernel: &Arc<PeriodicKernel<T>>,
        p: Vec2<T>,
        eps: T,
        x: Vec2<T>,
    ) -> Result<T> {
        Ok(kernel.grad_sqn(x - p)?.dot(self.coefficient()) * eps)
    }
}

pub fn dipole_moments<T: Real>(limit: &LimitData<T>) -> Result<DipoleMoments<T>> {
    let c = limit.curve();
    let dn = limit_normal_derivative(limit)?;
    let u = limit.boundary_values();
    let mut trace_moment = Vec2::zero();
    let mut flux_moment = Vec2::zero();
    let mut density_moment = Vec2::zero();
    for i in 0..c.len() {
        let w = c.weights()[i];
        trace_moment += c.normals()[i] * (u[i] * w);
        flux_moment += c.nodes()[i] * (dn[i] * w);
        density_moment -= c.normals()[i] * (limit.theta_tilde.values[i] * w);
    }
    let defect = (trace_moment - flux_moment - density_moment).norm();
    Ok(DipoleMoments {
        trace_moment,
        flux_moment,
        density_moment,
        defect,
    })
}

/// Scalar columns of a [`FunctionalRecord`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "xi")]
    Xi,
    #[serde(rename = "mean_J")]
    MeanJ,
    #[serde(rename = "energy_G")]
    EnergyG,
    #[serde(rename = "energy_total")]
    EnergyTotal,
    #[serde(rename = "u_probe")]
    UProbe,
    #[serde(rename = "u_rescaled_probe")]
    URescaledProbe,
}

impl Quantity {
    pub const ALL: [Quantity; 6] = [
        Self::Xi,
        Self::MeanJ,
        Self::EnergyG,
        Self::EnergyTotal,
        Self::UProbe,
        Self::URescaledProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Xi => "xi",
            Self::MeanJ => "mean_J",
            Self::EnergyG => "energy_G",
            Self::EnergyTotal => "energy_total",
            Self::UProbe => "u_probe",
            Self::URescaledProbe => "u_rescaled_probe",
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown quantity `{s}`")))
    }
}

/// Everything reported for one `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRecord<T> {
    pub eps: T,
    pub u_probe: T,
    pub u_rescaled_probe: T,
    pub xi: T,
    pub energy_total: T,
    #[serde(rename = "energy_G")]
    pub energy_g: T,
    #[serde(rename = "mean_J")]
    pub mean_j: T,
    pub oracle_energy: Option<T>,
    pub oracle_mean: Option<T>,
    pub residual: T,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "eps",
    "u_probe",
    "u_rescaled_probe",
    "xi",
    "energy_total",
    "energy_G",
    "mean_J",
    "oracle_energy",
    "oracle_mean",
    "residual",
];

impl<T: Real> FunctionalRecord<T> {
    pub fn get(&self, q: Quantity) -> T {
        match q {
            Quantity::Xi => self.xi,
            Quantity::MeanJ => self.mean_j,
            Quantity::EnergyG => self.energy_g,
            Quantity::EnergyTotal => self.energy_total,
            Quantity::UProbe => self.u_probe,
            Quantity::URescaledProbe => self.u_rescaled_probe,
        }
    }

    /// One CSV line, 17 significant digits, empty fields for absent oracles.
    pub fn csv_row(&self) -> String {
        let f = |v: T| format!("{v:.16e}");
        let o = |v: Option<T>| v.map(f).unwrap_or_default();
        [
            f(self.eps),
            f(self.u_probe),
            f(self.u_rescaled_probe),
            f(self.xi),
            f(self.energy_total),
            f(self.energy_g),
            f(self.mean_j),
            o(self.oracle_energy),
            o(self.oracle_mean),
            f(self.residual),
        ]
        .join(",")
    }
}

/// Evaluates every functional of one solve; the volume oracles run when
/// `oracle_grid` is given.
pub fn compute_record<T: Real>(
    result: &SolveResult<T>,
    probes: &Probes<T>,
    oracle_grid: Option<usize>,
) -> Result<FunctionalRecord<T>> {
    let e = energy(result)?;
    let m = mean_integral(result)?;
    let (oracle_energy, oracle_mean) = match oracle_grid {
        Some(grid) => (
            Some(energy_volume_oracle(result, grid)?),
            Some(mean_volume_oracle(result, grid)?),
        ),
        None => (None, None),
    };
    Ok(FunctionalRecord {
        eps: result.eps,
        u_probe: eval_u(result, probes.x)?,
        u_rescaled_probe: eval_u_rescaled(result, probes.t)?,
        xi: result.xi,
        energy_total: e.energy_total,
        energy_g: e.energy_g,
        mean_j: m.mean_j,
        oracle_energy,
        oracle_mean,
        residual: result.residual,
    })
}
