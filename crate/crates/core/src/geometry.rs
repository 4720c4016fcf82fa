//! Hole shapes, their trapezoidal discretizations, and the scaled holes
//! `p + ε∂Ω` placed in the periodicity cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Lattice;
use crate::scalar::Real;
use crate::vec2::Vec2;

/// Analytic star-shaped hole containing the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec<T> {
    Disk {
        radius: T,
    },
    Ellipse {
        a: T,
        b: T,
    },
    /// `r(θ) = r0 + Σ_k cos[k−1] cos kθ + sin[k−1] sin kθ`.
    Star {
        r0: T,
        cos: Vec<T>,
        sin: Vec<T>,
    },
}

/// Point and first two derivatives of a parametrization.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint<T> {
    pub x: Vec2<T>,
    pub dx: Vec2<T>,
    pub ddx: Vec2<T>,
}

impl<T: Real> ShapeSpec<T> {
    /// Builds a shape from a config name and parameter list:
    /// `disk: [r]`, `ellipse: [a, b]`, `star: [r0, c1, s1, c2, s2, ...]`.
    pub fn from_params(kind: &str, params: &[T]) -> Result<Self> {
        let spec = match (kind, params) {
            ("disk", [r]) => Self::Disk { radius: *r },
            ("ellipse", [a, b]) => Self::Ellipse { a: *a, b: *b },
            ("star", [r0, rest @ ..]) if rest.len() % 2 == 0 => Self::Star {
                r0: *r0,
                cos: rest.iter().step_by(2).copied().collect(),
                sin: rest.iter().skip(1).step_by(2).copied().collect(),
            },
            _ => {
                return Err(Error::InvalidShape(format!(
                    "cannot build `{kind}` from {} parameters",
                    params.len()
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v > T::zero() && v.is_finite();
        match self {
            Self::Disk { radius } if !ok(*radius) => Err(Error::InvalidShape(format!(
                "radius {radius} is not positive"
            ))),
            Self::Ellipse { a, b } if !ok(*a) || !ok(*b) => Err(Error::InvalidShape(format!(
                "semi-axes ({a}, {b}) must be positive"
            ))),
            Self::Star { cos, sin, .. } => {
                if cos.len() != sin.len() {
                    return Err(Error::InvalidShape(
                        "star needs as many sine as cosine coefficients".into(),
                    ));
                }
                let m = 4096;
                let step = T::TAU() / T::from_usize_lossy(m);
                for i in 0..m {
                    let r = self.radius(step * T::from_usize_lossy(i)).0;
                    if !ok(r) {
                        return Err(Error::InvalidShape(format!(
                            "radial function is {r} at sample {i}"
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Radial function of a star shape and its first two derivatives.
    fn radius(&self, theta: T) -> (T, T, T) {
        match self {
            Self::Star { r0, cos, sin } => {
                let (mut r, mut dr, mut ddr) = (*r0, T::zero(), T::zero());
                for (k, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let kf = T::from_usize_lossy(k + 1);
                    let (s, c) = (kf * theta).sin_cos();
                    r += *a * c + *b * s;
                    dr += kf * (*b * c - *a * s);
                    ddr -= kf * kf * (*a * c + *b * s);
                }
                (r, dr, ddr)
            }
            _ => unreachable!("radius is only defined for star shapes"),
        }
    }

    pub fn point(&self, theta: T) -> CurvePoint<T> {
        let (s, c) = theta.sin_cos();
        let e = Vec2::new(c, s);
        let f = Vec2::new(-s, c);
        match self {
            Self::Disk { radius } => CurvePoint {
                x: e * *radius,
                dx: f * *radius,
                ddx: -e * *radius,
            },
            Self::Ellipse { a, b } => CurvePoint {
                x: Vec2::new(*a * c, *b * s),
                dx: Vec2::new(-*a * s, *b * c),
                ddx: Vec2::new(-*a * c, -*b * s),
            },
            Self::Star { .. } => {
                let (r, dr, ddr) = self.radius(theta);
                CurvePoint {
                    x: e * r,
                    dx: e * dr + f * r,
                    ddx: e * (ddr - r) + f * (dr + dr),
                }
            }
        }
    }

    /// Whether `t` lies strictly inside the hole.
    pub fn contains(&self, t: Vec2<T>) -> bool {
        match self {
            Self::Disk { radius } => t.norm() < *radius,
            Self::Ellipse { a, b } => (t.x / *a).powi(2) + (t.y / *b).powi(2) < T::one(),
            Self::Star { .. } => t.norm() < self.radius(t.y.atan2(t.x)).0,
        }
    }

    /// Largest distance from the origin to the curve, sampled finely.
    pub fn max_radius(&self) -> T {
        let m = 2048;
        let step = T::TAU() / T::from_usize_lossy(m);
        (0..m)
            .map(|i| self.point(step * T::from_usize_lossy(i)).x.norm())
            .fold(T::zero(), T::max)
    }

    /// Smallest distance from the origin to the curve, sampled finely.
    pub fn min_radius(&self) -> T {
        let m = 2048;
        let step = T::TAU() / T::from_usize_lossy(m);
        (0..m)
            .map(|i| self.point(step * T::from_usize_lossy(i)).x.norm())
            .fold(T::infinity(), T::min)
    }

    /// Samples the boundary at `n` equispaced parameters.
    pub fn curve(&self, n: usize) -> Result<HoleCurve<T>> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidShape(format!(
                "node count {n} must be even and at least 16"
            )));
        }
        self.validate()?;
        HoleCurve::sample(self, n)
    }
}

/// Trapezoidal discretization of a hole boundary, optionally placed at
/// `p + ε t` in the cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HoleCurve<T> {
    spec: ShapeSpec<T>,
    nodes: Vec<Vec2<T>>,
    tangents: Vec<Vec2<T>>,
    normals: Vec<Vec2<T>>,
    speeds: Vec<T>,
    weights: Vec<T>,
    curvatures: Vec<T>,
    center: Option<Vec2<T>>,
    scale: Option<T>,
}

/// Outcome of [`HoleCurve::containment_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContainmentReport<T> {
    pub inside: bool,
    pub min_margin: T,
    pub worst_node: usize,
}

impl<T: Real> HoleCurve<T> {
    fn sample(spec: &ShapeSpec<T>, n: usize) -> Result<Self> {
        let step = T::TAU() / T::from_usize_lossy(n);
        let mut c = Self {
            spec: spec.clone(),
            nodes: Vec::with_capacity(n),
            tangents: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            speeds: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            curvatures: Vec::with_capacity(n),
            center: None,
            scale: None,
        };
        for i in 0..n {
            let pt = spec.point(step * T::from_usize_lossy(i));
            let speed = pt.dx.norm();
            if !(speed > T::zero()) {
                return Err(Error::InvalidShape(format!(
                    "parametrization is singular at node {i}"
                )));
            }
            c.nodes.push(pt.x);
            c.tangents.push(pt.dx);
            c.normals.push(pt.dx.perp_cw() / speed);
            c.speeds.push(speed);
            c.weights.push(step * speed);
            c.curvatures
                .push(pt.dx.cross(pt.ddx) / (speed * speed * speed));
        }
        Ok(c)
    }

    pub fn spec(&self) -> &ShapeSpec<T> {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec2<T>] {
        &self.nodes
    }

    /// Parameter derivatives `γ'(θ_i)`.
    pub fn tangents(&self) -> &[Vec2<T>] {
        &self.tangents
    }

    pub fn normals(&self) -> &[Vec2<T>] {
        &self.normals
    }

    pub fn speeds(&self) -> &[T] {
        &self.speeds
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn curvatures(&self) -> &[T] {
        &self.curvatures
    }

    pub fn center(&self) -> Option<Vec2<T>> {
        self.center
    }

    pub fn scale(&self) -> Option<T> {
        self.scale
    }

    /// Parameter of node `i`.
    pub fn theta(&self, i: usize) -> T {
        T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(self.len())
    }

    pub fn length(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Enclosed area `½∮ (x − p) × dx`.
    pub fn area(&self) -> T {
        let p = self.center.unwrap_or_else(Vec2::zero);
        let step = T::TAU() / T::from_usize_lossy(self.len());
        let s: T = self
            .nodes
            .iter()
            .zip(&self.tangents)
            .map(|(x, dx)| (*x - p).cross(*dx))
            .sum();
        s * step / T::lit(2.0)
    }

    /// `Σ ν_i w_i`, the discrete `∮ ν dσ`.
    pub fn normal_sum(&self) -> Vec2<T> {
        let mut s = Vec2::zero();
        for (n, w) in self.normals.iter().zip(&self.weights) {
            s += *n * *w;
        }
        s
    }

    /// Largest distance between two nodes.
    pub fn diameter(&self) -> T {
        let mut d = T::zero();
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                d = d.max((*a - *b).norm2());
            }
        }
        d.sqrt()
    }

    /// Largest gap between consecutive nodes along the curve.
    pub fn max_spacing(&self) -> T {
        let step = T::TAU() / T::from_usize_lossy(self.len());
        self.speeds.iter().copied().fold(T::zero(), T::max) * step
    }

    pub fn containment_check(&self, lattice: &Lattice<T>) -> ContainmentReport<T> {
        let (worst_node, min_margin) = self
            .nodes
            .iter()
            .map(|x| lattice.margin(*x))
            .enumerate()
            .fold(
                (0, T::infinity()),
                |acc, (i, m)| if m < acc.1 { (i, m) } else { acc },
            );
        let inside = min_margin >= T::lit(1e-6) * lattice.min_q();
        ContainmentReport {
            inside,
            min_margin,
            worst_node,
        }
    }

    /// The hole `p + ε∂Ω`: nodes move, weights scale by `ε`, curvatures by `1/ε`.
    pub fn scaled(&self, lattice: &Lattice<T>, p: Vec2<T>, eps: T) -> Result<Self> {
        if !(eps > T::zero()) {
            return Err(Error::InvalidShape(format!("scale {eps} must be positive")));
        }
        let out = Self {
            spec: self.spec.clone(),
            nodes: self.nodes.iter().map(|t| p + *t * eps).collect(),
            tangents: self.tangents.iter().map(|t| *t * eps).collect(),
            normals: self.normals.clone(),
            speeds: self.speeds.iter().map(|s| *s * eps).collect(),
            weights: self.weights.iter().map(|w| *w * eps).collect(),
            curvatures: self.curvatures.iter().map(|k| *k / eps).collect(),
            center: Some(p),
            scale: Some(eps),
        };
        let report = out.containment_check(lattice);
        if !report.inside {
            return Err(Error::Containment {
                node: report.worst_node,
                margin: report.min_margin.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn disk_geometry() {
        let c = ShapeSpec::Disk { radius: 1.0f64 }.curve(64).unwrap();
        assert!((c.length() - TAU).abs() < 1e-12 * TAU);
        for (x, n) in c.nodes().iter().zip(c.normals()) {
            assert!((*x - *n).norm() < 1e-15);
            assert!((n.norm() - 1.0).abs() < 1e-14);
        }
        assert!(c.normal_sum().norm() < 1e-10);
        assert!(c.curvatures().iter().all(|k| (k - 1.0).abs() < 1e-14));
        assert!((c.area() - PI).abs() < 1e-13);
        assert!((c.diameter() - 2.0).abs() < 1e-14);
    }

    // Perimeter of the ellipse with semi-axes 2 and 1, computed with mpmath
    // as 8·E(3/4) (complete elliptic integral of the second kind).
    #[test]
    fn ellipse_perimeter() {
        let c = ShapeSpec::Ellipse { a: 2.0f64, b: 1.0 }.curve(128).unwrap();
        assert!((c.length() - 9.688_448_220_547_68).abs() < 1e-10);
        assert!(c.normal_sum().norm() < 1e-10);
        assert!((c.area() - 2.0 * PI).abs() < 1e-12);
        // curvature at the end of the major axis is a/b² = 2
        assert!((c.curvatures()[0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn star_shape_derivatives_match_finite_differences() {
        let spec = ShapeSpec::from_params("star", &[1.0f64, 0.2, 0.1, 0.0, -0.05]).unwrap();
        let h = 1e-5;
        for theta in [0.3, 2.0, 5.5] {
            let p = spec.point(theta);
            let fd = (spec.point(theta + h).x - spec.point(theta - h).x) / (2.0 * h);
            assert!((fd - p.dx).norm() < 1e-9);
            let fdd = (spec.point(theta + h).dx - spec.point(theta - h).dx) / (2.0 * h);
            assert!((fdd - p.ddx).norm() < 1e-9);
        }
        let c = spec.curve(128).unwrap();
        let c2 = spec.curve(256).unwrap();
        assert!((c.length() - c2.length()).abs() < 1e-10);
        assert!((c.normal_sum() - c2.normal_sum()).norm() < 1e-10);
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(ShapeSpec::from_params("star", &[0.5, 0.6, 0.0]).is_err());
        assert!(ShapeSpec::from_params("disk", &[-1.0]).is_err());
        assert!(ShapeSpec::from_params("ellipse", &[1.0]).is_err());
        assert!(ShapeSpec::from_params("blob", &[1.0]).is_err());
        assert!(ShapeSpec::Disk { radius: 1.0 }.curve(15).is_err());
        assert!(ShapeSpec::Disk { radius: 1.0 }.curve(8).is_err());
    }

    #[test]
    fn scaling_into_the_cell() {
        let lat = Lattice::<f64>::unit();
        let c = ShapeSpec::Disk { radius: 1.0 }.curve(64).unwrap();
        let p = Vec2::new(0.5, 0.5);
        let s = c.scaled(&lat, p, 0.1).unwrap();
        assert!((s.length() - 0.2 * PI).abs() < 1e-13);
        assert!(s.curvatures().iter().all(|k| (k - 10.0).abs() < 1e-12));
        assert!((s.area() - 0.01 * PI).abs() < 1e-15);
        for (x, t) in s.nodes().iter().zip(c.nodes()) {
            assert!(((*x - p) / 0.1 - *t).norm() < 1e-14);
        }
        let s3 = c.scaled(&lat, p, 0.3).unwrap();
        assert!(s3.nodes().iter().all(|x| x.x > 0.2 - 1e-15
            && x.x < 0.8 + 1e-15
            && x.y > 0.2 - 1e-15
            && x.y < 0.8 + 1e-15));
        assert!(s3.containment_check(&lat).inside);
        assert!(matches!(
            c.scaled(&lat, p, 0.6),
            Err(Error::Containment { .. })
        ));
    }

    #[test]
    fn containment_reports_the_offending_node() {
        let lat = Lattice::unit();
        let c = ShapeSpec::Disk { radius: 1.0 }.curve(64).unwrap();
        let shifted = c
            .scaled(&Lattice::new(10.0, 10.0).unwrap(), Vec2::new(0.8, 0.5), 0.3)
            .unwrap();
        let report = shifted.containment_check(&lat);
        assert!(!report.inside);
        assert_eq!(report.worst_node, 0);
        assert!(report.min_margin < 0.0);
    }

    #[test]
    fn containment_test_for_points() {
        let e = ShapeSpec::Ellipse { a: 2.0, b: 1.0 };
        assert!(e.contains(Vec2::new(1.9, 0.0)));
        assert!(!e.contains(Vec2::new(0.0, 1.1)));
        let s = ShapeSpec::from_params("star", &[1.0, 0.3, 0.0]).unwrap();
        assert!(s.contains(Vec2::new(1.25, 0.0)));
        assert!(!s.contains(Vec2::new(-0.75, 0.0)));
    }
}
