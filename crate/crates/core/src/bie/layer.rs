//! Evaluation of layer potentials carried by the rescaled hole, accurate up
//! to the boundary.
//!
//! A point `x` of the cell is written `x = p + εt`. The periodic double layer
//! then splits into the free-space double layer in `t` and a smooth remainder:
//!
//! ```text
//! w_q[μ](p + εt) = D[θ](t) − ε Σ_j ∇R(ε(t − s_j))·ν_j θ_j w_j
//! D[θ](t) = ∮ ν(s)·(s − t) / (2π|s − t|²) θ(s) dσ_s
//! ```
//!
//! `D` is evaluated on a ladder of trigonometrically upsampled copies of the
//! boundary, picking the coarsest copy whose node spacing is small against
//! the distance to the curve, and with the density value at the closest node
//! subtracted. `D[1]` is 1 inside the hole and 0 outside.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::{HoleCurve, ShapeSpec};
use crate::kernel::{s2, PeriodicKernel};
use crate::scalar::Real;
use crate::trig::TrigSeries;
use crate::vec2::{Sym2, Vec2};

/// Distance to the curve, in node spacings, required on a ladder level.
const LADDER_RATIO: f64 = 5.0;
/// Distance, in node spacings, beyond which plain quadrature with the
/// periodic kernel is used.
const FAR_RATIO: f64 = 8.0;
/// Upsampled levels never exceed this many nodes.
const MAX_LEVEL_NODES: usize = 1 << 17;

struct Level<T> {
    nodes: Vec<Vec2<T>>,
    normals: Vec<Vec2<T>>,
    weights: Vec<T>,
    density: Vec<T>,
    spacing: T,
}

/// A density on the reference boundary `∂Ω` placed at `p + ε∂Ω`.
pub struct LayerEvaluator<T: Real> {
    kernel: Option<Arc<PeriodicKernel<T>>>,
    curve: HoleCurve<T>,
    p: Vec2<T>,
    eps: T,
    density: Vec<T>,
    series: TrigSeries<T>,
    levels: Vec<OnceLock<Level<T>>>,
}

impl<T: Real> LayerEvaluator<T> {
    /// `curve` is the reference (unscaled) boundary. Without a kernel only the
    /// free-space potentials in `t` are available.
    pub fn new(
        kernel: Option<Arc<PeriodicKernel<T>>>,
        curve: HoleCurve<T>,
        p: Vec2<T>,
        eps: T,
        density: Vec<T>,
    ) -> Self {
        assert_eq!(curve.len(), density.len());
        let series = TrigSeries::from_samples(&density);
        let mut count = 1;
        while curve.len() << count <= MAX_LEVEL_NODES {
            count += 1;
        }
        let levels = (0..count).map(|_| OnceLock::new()).collect();
        Self {
            kernel,
            curve,
            p,
            eps,
            density,
            series,
            levels,
        }
    }

    pub fn curve(&self) -> &HoleCurve<T> {
        &self.curve
    }

    pub fn density(&self) -> &[T] {
        &self.density
    }

    pub fn series(&self) -> &TrigSeries<T> {
        &self.series
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn center(&self) -> Vec2<T> {
        self.p
    }

    pub fn shape(&self) -> &ShapeSpec<T> {
        self.curve.spec()
    }

    fn level(&self, l: usize) -> &Level<T> {
        self.levels[l].get_or_init(|| {
            if l == 0 {
                return Level {
                    nodes: self.curve.nodes().to_vec(),
                    normals: self.curve.normals().to_vec(),
                    weights: self.curve.weights().to_vec(),
                    density: self.density.clone(),
                    spacing: self.curve.max_spacing(),
                };
            }
            let m = self.curve.len() << l;
            let c = self.curve.spec().curve(m).expect("shape already validated");
            Level {
                spacing: c.max_spacing(),
                nodes: c.nodes().to_vec(),
                normals: c.normals().to_vec(),
                weights: c.weights().to_vec(),
                density: self.series.resample(m),
            }
        })
    }

    /// Smallest distance from `t` to the nodes of level `l`, and the closest node.
    fn nearest(&self, l: usize, t: Vec2<T>) -> (T, usize) {
        let lvl = self.level(l);
        let (j, d2) = lvl.nodes.iter().map(|s| (*s - t).norm2()).enumerate().fold(
            (0, T::infinity()),
            |acc, (j, d)| if d < acc.1 { (j, d) } else { acc },
        );
        (d2.sqrt(), j)
    }

    /// Approximate distance from `t` to the reference curve.
    pub fn distance(&self, t: Vec2<T>) -> T {
        let mut l = 0;
        loop {
            let (d, _) = self.nearest(l, t);
            if d >= T::lit(LADDER_RATIO) * self.level(l).spacing || l + 1 == self.levels.len() {
                return d;
            }
            l += 1;
        }
    }

    fn pick_level(&self, t: Vec2<T>) -> Result<(usize, usize)> {
        let base = self.level(0).spacing;
        for l in 0..self.levels.len() {
            let (d, j) = self.nearest(l, t);
            if d >= T::lit(LADDER_RATIO) * self.level(l).spacing {
                return Ok((l, j));
            }
            if l + 1 == self.levels.len() {
                if d < T::lit(1e-3) * base {
                    return Err(Error::NearBoundary {
                        distance: d.to_f64().unwrap_or(f64::NAN),
                    });
                }
                return Ok((l, j));
            }
        }
        unreachable!()
    }

    /// Free-space double layer `D[θ](t)`, inside or outside the hole.
    pub fn free_double_layer(&self, t: Vec2<T>) -> Result<T> {
        let (l, j0) = self.pick_level(t)?;
        let lvl = self.level(l);
        let anchor = lvl.density[j0];
        let mut acc = T::zero();
        for k in 0..lvl.nodes.len() {
            let d = lvl.nodes[k] - t;
            acc += lvl.normals[k].dot(d) / d.norm2() * (lvl.density[k] - anchor) * lvl.weights[k];
        }
        let inside = if self.shape().contains(t) {
            anchor
        } else {
            T::zero()
        };
        Ok(acc / T::TAU() + inside)
    }

    /// Gradient in `t` of [`free_double_layer`](Self::free_double_layer).
    pub fn free_double_layer_grad(&self, t: Vec2<T>) -> Result<Vec2<T>> {
        let (l, j0) = self.pick_level(t)?;
        let lvl = self.level(l);
        let anchor = lvl.density[j0];
        let two = T::lit(2.0);
        let mut acc = Vec2::zero();
        for k in 0..lvl.nodes.len() {
            let d = lvl.nodes[k] - t;
            let r2 = d.norm2();
            let nu = lvl.normals[k];
            let g = (d * (two * nu.dot(d) / r2) - nu) / r2;
            acc += g * ((lvl.density[k] - anchor) * lvl.weights[k]);
        }
        Ok(acc / T::TAU())
    }

    /// Free-space single layer `∮ S_2(t − s) θ(s) dσ_s`.
    pub fn free_single_layer(&self, t: Vec2<T>) -> Result<T> {
        let (l, _) = self.pick_level(t)?;
        let lvl = self.level(l);
        Ok((0..lvl.nodes.len())
            .map(|k| s2(t - lvl.nodes[k]) * lvl.density[k] * lvl.weights[k])
            .sum())
    }

    fn kernel(&self) -> &PeriodicKernel<T> {
        self.kernel
            .as_deref()
            .expect("periodic potentials need a periodic kernel")
    }

    /// `Σ_j ∇R(ε(t − s_j))·ν_j θ_j w_j` on the base nodes.
    fn regular_double(&self, t: Vec2<T>) -> Result<T> {
        let k = self.kernel();
        let c = &self.curve;
        let mut acc = T::zero();
        for j in 0..c.len() {
            let g = k.grad_rn((t - c.nodes()[j]) * self.eps)?;
            acc += g.dot(c.normals()[j]) * self.density[j] * c.weights()[j];
        }
        Ok(acc)
    }

    fn regular_double_grad(&self, t: Vec2<T>) -> Result<Vec2<T>> {
        let k = self.kernel();
        let c = &self.curve;
        let mut acc = Vec2::zero();
        for j in 0..c.len() {
            let h: Sym2<T> = k.hess_rn((t - c.nodes()[j]) * self.eps)?;
            acc += h.apply(c.normals()[j]) * (self.density[j] * c.weights()[j]);
        }
        Ok(acc * self.eps)
    }

    fn regular_single(&self, t: Vec2<T>) -> Result<T> {
        let k = self.kernel();
        let c = &self.curve;
        let mut acc = T::zero();
        for j in 0..c.len() {
            acc += k.eval_rn((t - c.nodes()[j]) * self.eps)? * self.density[j] * c.weights()[j];
        }
        Ok(acc)
    }

    /// Periodic double layer at `p + εt`, through the free-space split.
    pub fn double_layer_rescaled(&self, t: Vec2<T>) -> Result<T> {
        let free = self.free_double_layer(t)?;
        if self.kernel.is_none() || self.eps == T::zero() {
            return Ok(free);
        }
        Ok(free - self.eps * self.regular_double(t)?)
    }

    /// Gradient in `t` of [`double_layer_rescaled`](Self::double_layer_rescaled).
    pub fn double_layer_rescaled_grad(&self, t: Vec2<T>) -> Result<Vec2<T>> {
        let free = self.free_double_layer_grad(t)?;
        if self.kernel.is_none() || self.eps == T::zero() {
            return Ok(free);
        }
        Ok(free - self.regular_double_grad(t)? * self.eps)
    }

    /// Periodic single layer at `p + εt`.
    pub fn single_layer_rescaled(&self, t: Vec2<T>) -> Result<T> {
        let total: T = self
            .density
            .iter()
            .zip(self.curve.weights())
            .map(|(a, w)| *a * *w)
            .sum();
        let free = self.free_single_layer(t)?;
        let log = self.eps.ln() / T::TAU() * total;
        Ok(self.eps * (free + log + self.regular_single(t)?))
    }

    /// `−Σ_j ∇S_q(x − y_j)·ν_j μ_j ε w_j`, plain quadrature on the base nodes.
    pub fn double_layer_direct(&self, x: Vec2<T>) -> Result<T> {
        let k = self.kernel();
        let c = &self.curve;
        let mut acc = T::zero();
        for j in 0..c.len() {
            let y = self.p + c.nodes()[j] * self.eps;
            acc += k.grad_sqn(x - y)?.dot(c.normals()[j]) * self.density[j] * c.weights()[j];
        }
        Ok(-acc * self.eps)
    }

    pub fn double_layer_direct_grad(&self, x: Vec2<T>) -> Result<Vec2<T>> {
        let k = self.kernel();
        let c = &self.curve;
        let mut acc = Vec2::zero();
        for j in 0..c.len() {
            let y = self.p + c.nodes()[j] * self.eps;
            acc += k.hess_sqn(x - y)?.apply(c.normals()[j]) * (self.density[j] * c.weights()[j]);
        }
        Ok(-acc * self.eps)
    }

    pub fn single_layer_direct(&self, x: Vec2<T>) -> Result<T> {
        let k = self.kernel();
        let c = &self.curve;
        let mut acc = T::zero();
        for j in 0..c.len() {
            let y = self.p + c.nodes()[j] * self.eps;
            acc += k.eval_sqn(x - y)? * self.density[j] * c.weights()[j];
        }
        Ok(acc * self.eps)
    }

    /// Rescaled coordinate of the translate of `x` nearest to the hole.
    pub fn to_rescaled(&self, x: Vec2<T>) -> Vec2<T> {
        let lattice = self.kernel().lattice();
        lattice.reduce(x - self.p) / self.eps
    }

    /// Whether `x` is far enough from the hole for plain quadrature.
    fn is_far(&self, t: Vec2<T>) -> bool {
        let (d, _) = self.nearest(0, t);
        d >= T::lit(FAR_RATIO) * self.level(0).spacing
    }

    /// Periodic double layer `w_q[μ](x)` at any `x` off the boundary.
    pub fn double_layer(&self, x: Vec2<T>) -> Result<T> {
        let t = self.to_rescaled(x);
        if self.is_far(t) {
            self.double_layer_direct(x)
        } else {
            self.double_layer_rescaled(t)
        }
    }

    /// Gradient in `x` of [`double_layer`](Self::double_layer).
    pub fn double_layer_grad(&self, x: Vec2<T>) -> Result<Vec2<T>> {
        let t = self.to_rescaled(x);
        if self.is_far(t) {
            self.double_layer_direct_grad(x)
        } else {
            Ok(self.double_layer_rescaled_grad(t)? / self.eps)
        }
    }

    /// Periodic single layer `v_q[μ](x)`.
    pub fn single_layer(&self, x: Vec2<T>) -> Result<T> {
        let t = self.to_rescaled(x);
        if self.is_far(t) {
            self.single_layer_direct(x)
        } else {
            self.single_layer_rescaled(t)
        }
    }
}

/// Lagrange weights for the derivative at 0 of the cubic through offsets
/// `0, h, 2h, 4h`, and the lower-order estimates used as a convergence check.
pub(crate) fn one_sided_derivative<T: Real>(v: [T; 4], h: T, floor: T) -> Result<T> {
    let [u0, u1, u2, u4] = v;
    let d1 = (u1 - u0) / h;
    let d2 = (T::lit(-3.0) * u0 + T::lit(4.0) * u1 - u2) / (T::lit(2.0) * h);
    let d3 = (T::lit(-21.0) * u0 + T::lit(32.0) * u1 - T::lit(12.0) * u2 + u4) / (T::lit(12.0) * h);
    if (d3 - d2).abs() > (d2 - d1).abs() + floor {
        return Err(Error::DerivativeAccuracy(format!(
            "extrapolated normal derivatives {d1:e}, {d2:e}, {d3:e} do not settle"
        )));
    }
    Ok(d3)
}

/// Outward normal derivatives at the nodes of `curve` of a field `u` given
/// its boundary values, by one-sided extrapolation from the exterior.
pub fn normal_derivatives<T: Real>(
    curve: &HoleCurve<T>,
    boundary: &[T],
    h: T,
    u: impl Fn(Vec2<T>) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let floor = T::lit(1e-9) * boundary.iter().fold(T::one(), |m, v| m.max(v.abs()));
    (0..curve.len())
        .into_par_iter()
        .map(|i| {
            let s = curve.nodes()[i];
            let n = curve.normals()[i];
            let u1 = u(s + n * h)?;
            let u2 = u(s + n * (h + h))?;
            let u4 = u(s + n * (T::lit(4.0) * h))?;
            one_sided_derivative([boundary[i], u1, u2, u4], h, floor / h)
        })
        .collect()
}
