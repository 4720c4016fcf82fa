//! Second-kind boundary integral equations for the perforated cell.
//!
//! With `x = p + εt` on the hole and `θ(t) = μ(p + εt)`, the periodic
//! Dirichlet problem is reduced to
//!
//! ```text
//! −½θ(t) + ∮ K(t,s) θ(s) dσ_s − ε ∮ ∇R(ε(t − s))·ν(s) θ(s) dσ_s + ξ = Γ(t),   ∮ θ dσ = 0,
//! K(t,s) = ν(s)·(s − t) / (2π|s − t|²),   Γ(t) = g(t) − P_q[f](p + εt),
//! ```
//!
//! discretized by the trapezoidal rule on the reference boundary. At `ε = 0`
//! the same system is the limiting equation.

mod layer;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{HoleCurve, ShapeSpec};
use crate::kernel::PeriodicKernel;
use crate::linalg::{Lu, Matrix};
use crate::scalar::Real;
use crate::source::PeriodicSource;
use crate::vec2::Vec2;

pub use layer::{normal_derivatives, LayerEvaluator};

/// Dirichlet datum on the reference boundary as a Fourier series in the
/// boundary parameter: `g(θ) = constant + Σ_k cos[k−1] cos kθ + sin[k−1] sin kθ`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirichletDatum<T> {
    pub constant: T,
    pub cos: Vec<T>,
    pub sin: Vec<T>,
}

impl<T: Real> DirichletDatum<T> {
    pub fn constant(c: T) -> Self {
        Self {
            constant: c,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn eval(&self, theta: T) -> T {
        let mut v = self.constant;
        for (k, a) in self.cos.iter().enumerate() {
            v += *a * (T::from_usize_lossy(k + 1) * theta).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            v += *b * (T::from_usize_lossy(k + 1) * theta).sin();
        }
        v
    }

    /// Values at the nodes of `curve`.
    pub fn sample(&self, curve: &HoleCurve<T>) -> Vec<T> {
        (0..curve.len())
            .map(|i| self.eval(curve.theta(i)))
            .collect()
    }
}

/// Nodal values of a density together with the curve carrying them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryDensity<T> {
    pub curve: HoleCurve<T>,
    pub values: Vec<T>,
}

impl<T: Real> BoundaryDensity<T> {
    /// `∮ values dσ` by the curve's quadrature.
    pub fn integral(&self) -> T {
        self.values
            .iter()
            .zip(self.curve.weights())
            .map(|(v, w)| *v * *w)
            .sum()
    }

    /// `∮ values · other dσ`.
    pub fn pair(&self, other: &[T]) -> T {
        self.values
            .iter()
            .zip(other)
            .zip(self.curve.weights())
            .map(|((a, b), w)| *a * *b * *w)
            .sum()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Free-space double-layer kernel `K(t_i, s_j) w_j` with its diagonal limit.
fn free_entry<T: Real>(c: &HoleCurve<T>, i: usize, j: usize) -> T {
    let four_pi = T::lit(4.0) * T::PI();
    if i == j {
        return c.curvatures()[i] * c.weights()[i] / four_pi;
    }
    let d = c.nodes()[j] - c.nodes()[i];
    c.normals()[j].dot(d) / (T::TAU() * d.norm2()) * c.weights()[j]
}

/// Bordered Nyström matrix on the reference curve; `kernel` adds the
/// periodic remainder at scale `eps`.
fn assemble<T: Real>(
    kernel: Option<&PeriodicKernel<T>>,
    c: &HoleCurve<T>,
    eps: T,
) -> Result<Matrix<T>> {
    let n = c.len();
    let half = T::lit(0.5);
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![T::zero(); n + 1];
            for (j, r) in row.iter_mut().take(n).enumerate() {
                let mut v = free_entry(c, i, j);
                if let Some(k) = kernel {
                    if i != j {
                        let g = k.grad_rn((c.nodes()[i] - c.nodes()[j]) * eps)?;
                        v -= eps * g.dot(c.normals()[j]) * c.weights()[j];
                    }
                }
                *r = v;
            }
            row[i] -= half;
            row[n] = T::one();
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut m = Matrix::zeros(n + 1, n + 1);
    for (i, row) in rows.into_iter().enumerate() {
        m.row_mut(i).copy_from_slice(&row);
    }
    m.row_mut(n)[..n].copy_from_slice(c.weights());
    Ok(m)
}

fn factor_checked<T: Real>(m: &Matrix<T>, limit: T) -> Result<Lu<T>> {
    let lu = Lu::factor(m)?;
    let cond = lu.condition_estimate();
    if !(cond <= limit) {
        return Err(Error::IllConditioned(
            cond.to_f64().unwrap_or(f64::INFINITY),
        ));
    }
    Ok(lu)
}

/// Condition estimates above this are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// The `(N+1)×(N+1)` system for `(μ, ξ)` on a hole placed in the cell.
/// The hole's center and scale are read from `scaled`; an unplaced curve is
/// treated as `p = 0`, `ε = 1`.
pub fn assemble_periodic_system<T: Real>(
    kernel: &PeriodicKernel<T>,
    scaled: &HoleCurve<T>,
) -> Result<Matrix<T>> {
    let eps = scaled.scale().unwrap_or_else(T::one);
    let reference = scaled.spec().curve(scaled.len())?;
    assemble(Some(kernel), &reference, eps)
}

/// Solution of the periodic Dirichlet problem at one `ε`.
pub struct SolveResult<T: Real> {
    pub eps: T,
    pub p: Vec2<T>,
    /// Rescaled density `θ(t) = μ(p + εt)` on the reference curve.
    pub density: BoundaryDensity<T>,
    pub scaled: HoleCurve<T>,
    /// The constant `ξ` of the representation `u = w_q[μ] + ξ + P_q[f]`.
    pub xi: T,
    pub g: DirichletDatum<T>,
    pub g_nodes: Vec<T>,
    /// Right-hand side `g(t_i) − P_q[f](p + εt_i)`.
    pub boundary_data: Vec<T>,
    pub source: PeriodicSource<T>,
    /// Largest boundary-condition defect at the parameter midpoints.
    pub residual: T,
    pub kernel: Arc<PeriodicKernel<T>>,
    layer: LayerEvaluator<T>,
}

impl<T: Real> SolveResult<T> {
    pub fn curve(&self) -> &HoleCurve<T> {
        &self.density.curve
    }

    pub fn layer(&self) -> &LayerEvaluator<T> {
        &self.layer
    }

    pub fn nodes(&self) -> usize {
        self.density.values.len()
    }
}

/// Everything that defines the problem apart from `ε`.
#[derive(Clone, Debug)]
pub struct DirichletProblem<T: Real> {
    pub kernel: Arc<PeriodicKernel<T>>,
    pub shape: ShapeSpec<T>,
    pub p: Vec2<T>,
    pub g: DirichletDatum<T>,
    pub source: PeriodicSource<T>,
    pub nodes: usize,
    pub residual_tol: T,
}

impl<T: Real> DirichletProblem<T> {
    pub fn new(
        kernel: Arc<PeriodicKernel<T>>,
        shape: ShapeSpec<T>,
        p: Vec2<T>,
        g: DirichletDatum<T>,
        source: PeriodicSource<T>,
    ) -> Self {
        Self {
            kernel,
            shape,
            p,
            g,
            source,
            nodes: 128,
            residual_tol: T::default_residual_tol(),
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    /// Solves at `eps`, doubling the node count once if the midpoint residual
    /// exceeds the tolerance.
    pub fn solve(&self, eps: T) -> Result<SolveResult<T>> {
        if self.source.lattice() != self.kernel.lattice() {
            return Err(Error::InvalidSource(
                "source and kernel use different lattices".into(),
            ));
        }
        let first = self.solve_with(eps, self.nodes)?;
        if first.residual <= self.residual_tol {
            return Ok(first);
        }
        let second = self.solve_with(eps, 2 * self.nodes)?;
        if second.residual <= self.residual_tol {
            return Ok(second);
        }
        Err(Error::Accuracy {
            residual: second.residual.to_f64().unwrap_or(f64::NAN),
            tolerance: self.residual_tol.to_f64().unwrap_or(f64::NAN),
            nodes: 2 * self.nodes,
        })
    }

    /// Solves at `eps` with exactly `n` nodes, without the residual gate.
    pub fn solve_with(&self, eps: T, n: usize) -> Result<SolveResult<T>> {
        let lattice = *self.kernel.lattice();
        let curve = self.shape.curve(n)?;
        let scaled = curve.scaled(&lattice, self.p, eps)?;
        let g_nodes = self.g.sample(&curve);
        let trace = self.source.trace_pq_on_scaled(self.p, eps, &curve)?;
        let boundary_data: Vec<T> = g_nodes.iter().zip(&trace).map(|(g, p)| *g - *p).collect();
        let m = assemble(Some(&self.kernel), &curve, eps)?;
        let lu = factor_checked(&m, T::lit(CONDITION_LIMIT))?;
        let mut rhs = boundary_data.clone();
        rhs.push(T::zero());
        let mut sol = lu.solve(&rhs);
        let xi = sol.pop().expect("bordered system");
        let layer = LayerEvaluator::new(
            Some(self.kernel.clone()),
            curve.clone(),
            self.p,
            eps,
            sol.clone(),
        );
        let residual = self.midpoint_residual(&layer, xi)?;
        Ok(SolveResult {
            eps,
            p: self.p,
            density: BoundaryDensity { curve, values: sol },
            scaled,
            xi,
            g: self.g.clone(),
            g_nodes,
            boundary_data,
            source: self.source.clone(),
            residual,
            kernel: self.kernel.clone(),
            layer,
        })
    }

    /// Largest defect of the integral equation at the parameter midpoints,
    /// with the density interpolated trigonometrically.
    fn midpoint_residual(&self, layer: &LayerEvaluator<T>, xi: T) -> Result<T> {
        let c = layer.curve();
        let n = c.len();
        let eps = layer.eps();
        let theta = layer.density();
        let step = T::TAU() / T::from_usize_lossy(n);
        let defects: Vec<T> = (0..n)
            .into_par_iter()
            .map(|i| {
                let phi = step * (T::from_usize_lossy(i) + T::lit(0.5));
                let t = self.shape.point(phi).x;
                let mut acc = T::zero();
                for j in 0..n {
                    let d = c.nodes()[j] - t;
                    let mut k = c.normals()[j].dot(d) / (T::TAU() * d.norm2());
                    k -= eps * self.kernel.grad_rn(-d * eps)?.dot(c.normals()[j]);
                    acc += k * theta[j] * c.weights()[j];
                }
                let lhs = -layer.series().eval(phi) * T::lit(0.5) + acc + xi;
                let rhs = self.g.eval(phi) - self.source.eval_pq(self.p + t * eps);
                Ok((lhs - rhs).abs())
            })
            .collect::<Result<_>>()?;
        Ok(defects.into_iter().fold(T::zero(), T::max))
    }

    /// Limiting data with `g₀ = g` and `f₀ = f`.
    pub fn limit(&self) -> Result<LimitData<T>> {
        let curve = self.shape.curve(self.nodes)?;
        let g0 = self.g.sample(&curve);
        solve_limiting_equation(&curve, &g0, self.source.eval_pq(self.p))
    }
}

/// Solves the periodic Dirichlet problem `Δu = f` off the holes,
/// `u(x) = g((x − p)/ε)` on `∂Ω_{p,ε}`.
pub fn solve_periodic_dirichlet<T: Real>(
    problem: &DirichletProblem<T>,
    eps: T,
) -> Result<SolveResult<T>> {
    problem.solve(eps)
}

/// Normalized null density of `−½τ(t) + ∮ ∇S_2(t − s)·ν(t) τ(s) dσ_s`.
pub fn compute_tau0<T: Real>(curve: &HoleCurve<T>) -> Result<BoundaryDensity<T>> {
    let n = curve.len();
    let four_pi = T::lit(4.0) * T::PI();
    let mut m = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        let row = m.row_mut(i);
        for j in 0..n {
            row[j] = if i == j {
                curve.curvatures()[i] * curve.weights()[i] / four_pi - T::lit(0.5)
            } else {
                let d = curve.nodes()[i] - curve.nodes()[j];
                curve.normals()[i].dot(d) / (T::TAU() * d.norm2()) * curve.weights()[j]
            };
        }
        row[n] = T::one();
    }
    m.row_mut(n)[..n].copy_from_slice(curve.weights());
    let lu = factor_checked(&m, T::lit(CONDITION_LIMIT)).map_err(|e| match e {
        Error::IllConditioned(c) => Error::Degenerate(format!(
            "null space is not one-dimensional (condition {c:e})"
        )),
        Error::SingularMatrix(k) => {
            Error::Degenerate(format!("singular bordered system at pivot {k}"))
        }
        other => other,
    })?;
    let mut rhs = vec![T::zero(); n + 1];
    rhs[n] = T::one();
    let mut tau = lu.solve(&rhs);
    let lambda = tau.pop().expect("bordered system");
    let scale = tau.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if lambda.abs() > T::lit(1e-8) * scale.max(T::one()) {
        return Err(Error::Degenerate(format!(
            "bordering multiplier {lambda:e} does not vanish"
        )));
    }
    Ok(BoundaryDensity {
        curve: curve.clone(),
        values: tau,
    })
}

/// Solution of the limiting (`ε = 0`) problem.
pub struct LimitData<T: Real> {
    pub tau0: BoundaryDensity<T>,
    pub theta_tilde: BoundaryDensity<T>,
    /// `ξ̃` from the bordered solve.
    pub xi_tilde: T,
    /// `∮ g₀ τ₀ dσ − P_q[f₀](p)`.
    pub xi_tilde_closed_form: T,
    pub g0_nodes: Vec<T>,
    pub pq_f0_at_p: T,
    layer: LayerEvaluator<T>,
}

impl<T: Real> LimitData<T> {
    pub fn curve(&self) -> &HoleCurve<T> {
        &self.theta_tilde.curve
    }

    pub fn layer(&self) -> &LayerEvaluator<T> {
        &self.layer
    }

    /// Boundary values of `ũ`: `g₀ − P_q[f₀](p) − ξ̃`.
    pub fn boundary_values(&self) -> Vec<T> {
        self.g0_nodes
            .iter()
            .map(|g| *g - self.pq_f0_at_p - self.xi_tilde)
            .collect()
    }
}

/// Solves `−½θ − ∮ ∇S_2(t − s)·ν(s) θ(s) dσ_s + ξ = g₀ − P_q[f₀](p)` with `∮θ = 0`
/// and cross-checks `ξ̃` against `∮ g₀ τ₀ dσ − P_q[f₀](p)`.
pub fn solve_limiting_equation<T: Real>(
    curve: &HoleCurve<T>,
    g0_nodes: &[T],
    pq_f0_at_p: T,
) -> Result<LimitData<T>> {
    let n = curve.len();
    assert_eq!(g0_nodes.len(), n);
    let m = assemble(None, curve, T::zero())?;
    let lu = factor_checked(&m, T::lit(CONDITION_LIMIT))?;
    let mut rhs: Vec<T> = g0_nodes.iter().map(|g| *g - pq_f0_at_p).collect();
    rhs.push(T::zero());
    let mut theta = lu.solve(&rhs);
    let xi_tilde = theta.pop().expect("bordered system");
    let tau0 = compute_tau0(curve)?;
    let xi_tilde_closed_form = tau0.pair(g0_nodes) - pq_f0_at_p;
    let scale = g0_nodes
        .iter()
        .fold(pq_f0_at_p.abs(), |a, v| a.max(v.abs()))
        .max(T::one());
    if (xi_tilde - xi_tilde_closed_form).abs() > T::lit(1e-9) * scale {
        return Err(Error::Inconsistent(format!(
            "limiting constant {xi_tilde:e} differs from the τ₀ pairing {xi_tilde_closed_form:e}"
        )));
    }
    let layer = LayerEvaluator::new(None, curve.clone(), Vec2::zero(), T::zero(), theta.clone());
    Ok(LimitData {
        tau0,
        theta_tilde: BoundaryDensity {
            curve: curve.clone(),
            values: theta,
        },
        xi_tilde,
        xi_tilde_closed_form,
        g0_nodes: g0_nodes.to_vec(),
        pq_f0_at_p,
        layer,
    })
}

/// `ũ(t) = −∮ ∇S_2(t − s)·ν(s) θ̃(s) dσ_s` for `t` outside the hole.
pub fn eval_u_tilde<T: Real>(limit: &LimitData<T>, t: Vec2<T>) -> Result<T> {
    if limit.curve().spec().contains(t) {
        return Err(Error::InsideHole(format!("({}, {})", t.x, t.y)));
    }
    limit.layer.free_double_layer(t)
}

/// Periodic double layer `w_q[μ](x)` of a density on a placed hole.
pub fn eval_wq<T: Real>(
    kernel: &Arc<PeriodicKernel<T>>,
    scaled: &HoleCurve<T>,
    density: &[T],
    x: Vec2<T>,
) -> Result<T> {
    placed_layer(kernel, scaled, density)?.double_layer(x)
}

/// Periodic simple layer `v_q[μ](x)` of a density on a placed hole.
pub fn eval_vq<T: Real>(
    kernel: &Arc<PeriodicKernel<T>>,
    scaled: &HoleCurve<T>,
    density: &[T],
    x: Vec2<T>,
) -> Result<T> {
    placed_layer(kernel, scaled, density)?.single_layer(x)
}

fn placed_layer<T: Real>(
    kernel: &Arc<PeriodicKernel<T>>,
    scaled: &HoleCurve<T>,
    density: &[T],
) -> Result<LayerEvaluator<T>> {
    let reference = scaled.spec().curve(scaled.len())?;
    let p = scaled.center().unwrap_or_else(Vec2::zero);
    let eps = scaled.scale().unwrap_or_else(T::one);
    Ok(LayerEvaluator::new(
        Some(kernel.clone()),
        reference,
        p,
        eps,
        density.to_vec(),
    ))
}

#[cfg(test)]
mod tests;
