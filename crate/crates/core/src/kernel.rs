//! Free-space and periodic fundamental solutions of the Laplacian in the
//! plane, with the regular part `R = S_q − S_2` continued across the origin.
//!
//! The periodic kernel uses the Ewald split
//!
//! ```text
//! S_q(x) = −(1/4π) Σ_z E1(η|x − qz|²) + 1/(4η|Q|)
//!          − (1/|Q|) Σ_{k≠0} cos(2πk·x) e^{−π²|k|²/η} / (4π²|k|²)
//! ```
//!
//! with `k` running over the reciprocal lattice `(z₁/q₁, z₂/q₂)`. The constant
//! term makes the cell mean vanish.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{ein, exp_int_e1, phi1, phi1_prime};
use crate::vec2::{Sym2, Vec2};

/// Exponent beyond which screened terms are dropped (`e^{-40} ≈ 4e-18`).
const PRUNE: f64 = 40.0;

/// Rectangular periodicity cell `Q = (0, q₁) × (0, q₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice<T> {
    q: Vec2<T>,
    meas: T,
}

impl<T: Real> Lattice<T> {
    pub fn new(q1: T, q2: T) -> Result<Self> {
        if !(q1 > T::zero() && q2 > T::zero()) || !q1.is_finite() || !q2.is_finite() {
            return Err(Error::InvalidLattice(format!(
                "cell lengths must be positive, got ({q1}, {q2})"
            )));
        }
        Ok(Self {
            q: Vec2::new(q1, q2),
            meas: q1 * q2,
        })
    }

    pub fn unit() -> Self {
        Self {
            q: Vec2::new(T::one(), T::one()),
            meas: T::one(),
        }
    }

    #[inline]
    pub fn q(&self) -> Vec2<T> {
        self.q
    }

    #[inline]
    pub fn meas(&self) -> T {
        self.meas
    }

    pub fn min_q(&self) -> T {
        self.q.x.min(self.q.y)
    }

    /// Translate of `x` lying in the cell centered at the origin.
    pub fn reduce(&self, x: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            x.x - self.q.x * (x.x / self.q.x).round(),
            x.y - self.q.y * (x.y / self.q.y).round(),
        )
    }

    /// Distance from `x` to the nearest lattice point.
    pub fn distance_to_lattice(&self, x: Vec2<T>) -> T {
        self.reduce(x).norm()
    }

    /// Lattice point `q z`.
    #[inline]
    pub fn point(&self, z1: i64, z2: i64) -> Vec2<T> {
        Vec2::new(self.q.x * T::lit(z1 as f64), self.q.y * T::lit(z2 as f64))
    }

    /// Smallest distance from `x` to the boundary of `Q` (negative outside).
    pub fn margin(&self, x: Vec2<T>) -> T {
        x.x.min(self.q.x - x.x).min(x.y).min(self.q.y - x.y)
    }
}

/// Free-space fundamental solution `S_n` for `n = x.len()`.
pub fn eval_sn<T: Real>(x: &[T]) -> Result<T> {
    let r2: T = x.iter().map(|v| *v * *v).sum();
    match x.len() {
        2 | 3 if r2 == T::zero() => {
            Err(Error::SingularPoint("S_n is singular at the origin".into()))
        }
        2 => Ok(r2.ln() / (T::lit(4.0) * T::PI())),
        3 => Ok(-T::one() / (T::lit(4.0) * T::PI() * r2.sqrt())),
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// Gradient `x / (s_n |x|ⁿ)` of [`eval_sn`].
pub fn grad_sn<T: Real>(x: &[T]) -> Result<Vec<T>> {
    let r2: T = x.iter().map(|v| *v * *v).sum();
    let denom = match x.len() {
        2 | 3 if r2 == T::zero() => {
            return Err(Error::SingularPoint("S_n is singular at the origin".into()))
        }
        2 => T::TAU() * r2,
        3 => T::lit(4.0) * T::PI() * r2 * r2.sqrt(),
        n => return Err(Error::UnsupportedDimension(n)),
    };
    Ok(x.iter().map(|v| *v / denom).collect())
}

#[inline]
pub(crate) fn s2<T: Real>(x: Vec2<T>) -> T {
    x.norm2().ln() / (T::lit(4.0) * T::PI())
}

#[cfg(test)]
pub(crate) fn grad_s2<T: Real>(x: Vec2<T>) -> Vec2<T> {
    x / (T::TAU() * x.norm2())
}

/// Splitting parameter and truncation of the Ewald sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EwaldConfig<T> {
    pub eta: T,
    pub real_cutoff: usize,
    pub spectral_cutoff: usize,
    pub target_tol: T,
}

impl<T: Real> EwaldConfig<T> {
    /// `η = π/|Q|` with cutoffs grown until they are self-consistent to `target_tol`.
    pub fn calibrated(lattice: &Lattice<T>, target_tol: T) -> Result<Self> {
        Self::calibrated_with_eta(lattice, T::PI() / lattice.meas(), target_tol)
    }

    pub fn calibrated_with_eta(lattice: &Lattice<T>, eta: T, target_tol: T) -> Result<Self> {
        let mut cfg = Self {
            eta,
            real_cutoff: 1,
            spectral_cutoff: 1,
            target_tol,
        };
        let mut last = T::infinity();
        for _ in 0..40 {
            last = cfg.consistency_defect(lattice);
            if last < target_tol {
                return Ok(cfg);
            }
            cfg.real_cutoff += 1;
            cfg.spectral_cutoff += 1;
        }
        Err(Error::KernelAccuracy {
            target: target_tol.to_f64().unwrap_or(f64::NAN),
            achieved: last.to_f64().unwrap_or(f64::NAN),
        })
    }

    /// Largest change in value or gradient when both cutoffs grow by one,
    /// at two reference points of the cell.
    pub fn consistency_defect(&self, lattice: &Lattice<T>) -> T {
        let bigger = Self {
            real_cutoff: self.real_cutoff + 1,
            spectral_cutoff: self.spectral_cutoff + 1,
            ..*self
        };
        let a = PeriodicKernel::unchecked(*lattice, *self);
        let b = PeriodicKernel::unchecked(*lattice, bigger);
        let q = lattice.q();
        let refs = [
            Vec2::new(q.x * T::lit(0.5), q.y * T::lit(0.5)),
            Vec2::new(q.x * T::lit(0.9), q.y * T::lit(0.85)),
        ];
        refs.iter()
            .map(|&x| {
                let dv = (a.sq_unchecked(x) - b.sq_unchecked(x)).abs();
                let dg = (a.grad_sq_unchecked(x) - b.grad_sq_unchecked(x)).norm();
                dv.max(dg)
            })
            .fold(T::zero(), T::max)
    }
}

#[derive(Clone, Copy, Debug)]
struct Mode<T> {
    z1: i64,
    z2: i64,
    k: Vec2<T>,
    /// `2 e^{−π²|k|²/η} / (|Q| |k|²)`; the factor 2 folds in the mode `−k`.
    amp: T,
}

/// q-periodic fundamental solution with precomputed spectral modes.
#[derive(Clone, Debug)]
pub struct PeriodicKernel<T> {
    lattice: Lattice<T>,
    cfg: EwaldConfig<T>,
    modes: Vec<Mode<T>>,
    kmax: (i64, i64),
    images: (i64, i64),
    /// Constant `R(0)`-type offset `1/(4η|Q|)`.
    background: T,
    guard: T,
}

impl<T: Real> PeriodicKernel<T> {
    /// Kernel with the default splitting and `target_tol`.
    pub fn new(lattice: Lattice<T>, target_tol: T) -> Result<Self> {
        Ok(Self::unchecked(
            lattice,
            EwaldConfig::calibrated(&lattice, target_tol)?,
        ))
    }

    pub fn new_with_eta(lattice: Lattice<T>, eta: T, target_tol: T) -> Result<Self> {
        Ok(Self::unchecked(
            lattice,
            EwaldConfig::calibrated_with_eta(&lattice, eta, target_tol)?,
        ))
    }

    /// Kernel with an explicit configuration, rejected unless self-consistent.
    pub fn with_config(lattice: Lattice<T>, cfg: EwaldConfig<T>) -> Result<Self> {
        let defect = cfg.consistency_defect(&lattice);
        if !(defect < cfg.target_tol) {
            return Err(Error::KernelAccuracy {
                target: cfg.target_tol.to_f64().unwrap_or(f64::NAN),
                achieved: defect.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self::unchecked(lattice, cfg))
    }

    fn unchecked(lattice: Lattice<T>, cfg: EwaldConfig<T>) -> Self {
        let q = lattice.q();
        let ell = lattice.meas().sqrt();
        let lf = T::from_usize_lossy(cfg.real_cutoff);
        let kf = T::from_usize_lossy(cfg.spectral_cutoff);
        let images = (
            (lf * ell / q.x).ceil().to_i64().unwrap(),
            (lf * ell / q.y).ceil().to_i64().unwrap(),
        );
        let kmax = (
            (kf * q.x / ell).ceil().to_i64().unwrap(),
            (kf * q.y / ell).ceil().to_i64().unwrap(),
        );
        let pi2_over_eta = T::PI() * T::PI() / cfg.eta;
        let mut modes = Vec::new();
        for z1 in 0..=kmax.0 {
            for z2 in -kmax.1..=kmax.1 {
                if z1 == 0 && z2 <= 0 {
                    continue;
                }
                let k = Vec2::new(T::lit(z1 as f64) / q.x, T::lit(z2 as f64) / q.y);
                let k2 = k.norm2();
                let expo = pi2_over_eta * k2;
                if expo > T::lit(PRUNE) {
                    continue;
                }
                let amp = T::lit(2.0) * (-expo).exp() / (lattice.meas() * k2);
                modes.push(Mode { z1, z2, k, amp });
            }
        }
        Self {
            lattice,
            cfg,
            modes,
            kmax,
            images,
            background: T::one() / (T::lit(4.0) * cfg.eta * lattice.meas()),
            guard: T::lit(1e-12) * lattice.min_q(),
        }
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    pub fn config(&self) -> &EwaldConfig<T> {
        &self.cfg
    }

    pub fn target_tol(&self) -> T {
        self.cfg.target_tol
    }

    /// `(cos 2πk·x, sin 2πk·x)` for every stored mode, in mode order.
    fn phases(&self, x: Vec2<T>) -> Vec<(T, T)> {
        let q = self.lattice.q();
        let (k1, k2) = (self.kmax.0 as usize, self.kmax.1 as usize);
        let powers = |theta: T, n: usize| -> Vec<(T, T)> {
            let (s, c) = theta.sin_cos();
            let mut out = Vec::with_capacity(n + 1);
            let (mut ck, mut sk) = (T::one(), T::zero());
            for _ in 0..=n {
                out.push((ck, sk));
                let nc = ck * c - sk * s;
                sk = sk * c + ck * s;
                ck = nc;
            }
            out
        };
        let e1 = powers(T::TAU() * x.x / q.x, k1);
        let e2 = powers(T::TAU() * x.y / q.y, k2);
        self.modes
            .iter()
            .map(|m| {
                let (c1, s1) = e1[m.z1 as usize];
                let (c2, mut s2) = e2[m.z2.unsigned_abs() as usize];
                if m.z2 < 0 {
                    s2 = -s2;
                }
                (c1 * c2 - s1 * s2, s1 * c2 + c1 * s2)
            })
            .collect()
    }

    fn check_off_lattice(&self, x: Vec2<T>) -> Result<Vec2<T>> {
        let r = self.lattice.reduce(x);
        if r.norm() <= self.guard {
            return Err(Error::SingularPoint(format!(
                "({}, {}) lies on the lattice",
                x.x, x.y
            )));
        }
        Ok(r)
    }

    /// Image range covering `x` when it is not reduced to the centered cell.
    fn image_range(&self, x: Vec2<T>) -> (i64, i64) {
        let q = self.lattice.q();
        (
            self.images.0 + (x.x.abs() / q.x).ceil().to_i64().unwrap_or(0),
            self.images.1 + (x.y.abs() / q.y).ceil().to_i64().unwrap_or(0),
        )
    }

    /// Real-space sum over images, skipping `z = 0` when `skip_origin`.
    fn real_space<A>(
        &self,
        x: Vec2<T>,
        skip_origin: bool,
        mut acc: A,
        mut f: impl FnMut(&mut A, Vec2<T>, T, T),
    ) -> A {
        let (m1, m2) = self.image_range(x);
        let eta = self.cfg.eta;
        let prune = T::lit(PRUNE);
        for z1 in -m1..=m1 {
            for z2 in -m2..=m2 {
                if skip_origin && z1 == 0 && z2 == 0 {
                    continue;
                }
                let d = x - self.lattice.point(z1, z2);
                let r2 = d.norm2();
                let s = eta * r2;
                if s > prune {
                    continue;
                }
                f(&mut acc, d, r2, s);
            }
        }
        acc
    }

    fn spectral_value(&self, x: Vec2<T>) -> T {
        let ph = self.phases(x);
        let sum: T = self
            .modes
            .iter()
            .zip(&ph)
            .map(|(m, (c, _))| m.amp * *c)
            .sum();
        -sum / (T::lit(4.0) * T::PI() * T::PI())
    }

    fn spectral_grad(&self, x: Vec2<T>) -> Vec2<T> {
        let ph = self.phases(x);
        let mut g = Vec2::zero();
        for (m, (_, s)) in self.modes.iter().zip(&ph) {
            g += m.k * (m.amp * *s);
        }
        g / T::TAU()
    }

    fn spectral_hess(&self, x: Vec2<T>) -> Sym2<T> {
        let ph = self.phases(x);
        let mut h = Sym2::zero();
        for (m, (c, _)) in self.modes.iter().zip(&ph) {
            let a = m.amp * *c;
            h += Sym2 {
                xx: m.k.x * m.k.x * a,
                xy: m.k.x * m.k.y * a,
                yy: m.k.y * m.k.y * a,
            };
        }
        h
    }

    fn sq_unchecked(&self, x: Vec2<T>) -> T {
        let four_pi = T::lit(4.0) * T::PI();
        let real = self.real_space(x, false, T::zero(), |acc, _, _, s| *acc += exp_int_e1(s));
        -real / four_pi + self.background + self.spectral_value(x)
    }

    fn grad_sq_unchecked(&self, x: Vec2<T>) -> Vec2<T> {
        let real = self.real_space(x, false, Vec2::zero(), |acc, d, r2, s| {
            *acc += d * ((-s).exp() / r2)
        });
        real / T::TAU() + self.spectral_grad(x)
    }

    fn real_hess_term(&self, d: Vec2<T>, r2: T, s: T) -> Sym2<T> {
        let two = T::lit(2.0);
        let f = (-s).exp() / (T::TAU() * r2);
        let c = two / r2 + two * self.cfg.eta;
        Sym2 {
            xx: f * (T::one() - c * d.x * d.x),
            xy: -f * c * d.x * d.y,
            yy: f * (T::one() - c * d.y * d.y),
        }
    }

    /// `S_q(x)` with zero cell mean.
    pub fn eval_sqn(&self, x: Vec2<T>) -> Result<T> {
        let r = self.check_off_lattice(x)?;
        Ok(self.sq_unchecked(r))
    }

    pub fn grad_sqn(&self, x: Vec2<T>) -> Result<Vec2<T>> {
        let r = self.check_off_lattice(x)?;
        Ok(self.grad_sq_unchecked(r))
    }

    pub fn hess_sqn(&self, x: Vec2<T>) -> Result<Sym2<T>> {
        let r = self.check_off_lattice(x)?;
        let mut h = self.real_space(r, false, Sym2::zero(), |acc, d, r2, s| {
            *acc += self.real_hess_term(d, r2, s)
        });
        h += self.spectral_hess(r);
        Ok(h)
    }

    fn check_regular(&self, x: Vec2<T>) -> Result<()> {
        let r = self.lattice.reduce(x);
        if (r - x).norm() > self.guard && r.norm() <= self.guard {
            return Err(Error::SingularPoint(format!(
                "({}, {}) lies on a nonzero lattice point",
                x.x, x.y
            )));
        }
        Ok(())
    }

    /// Regular part `R(x) = S_q(x) − S_2(x)`, including `x = 0`.
    pub fn eval_rn(&self, x: Vec2<T>) -> Result<T> {
        self.check_regular(x)?;
        let four_pi = T::lit(4.0) * T::PI();
        let eta = self.cfg.eta;
        let real = self.real_space(x, true, T::zero(), |acc, _, _, s| *acc += exp_int_e1(s));
        let origin = (T::euler_gamma() + eta.ln() - ein(eta * x.norm2())) / four_pi;
        Ok(origin - real / four_pi + self.background + self.spectral_value(x))
    }

    pub fn grad_rn(&self, x: Vec2<T>) -> Result<Vec2<T>> {
        self.check_regular(x)?;
        let eta = self.cfg.eta;
        let real = self.real_space(x, true, Vec2::zero(), |acc, d, r2, s| {
            *acc += d * ((-s).exp() / r2)
        });
        let origin = x * (-eta * phi1(eta * x.norm2()) / T::TAU());
        Ok(origin + real / T::TAU() + self.spectral_grad(x))
    }

    pub fn hess_rn(&self, x: Vec2<T>) -> Result<Sym2<T>> {
        self.check_regular(x)?;
        let eta = self.cfg.eta;
        let s0 = eta * x.norm2();
        let (p, dp) = (phi1(s0), phi1_prime(s0));
        let f = -eta / T::TAU();
        let c = T::lit(2.0) * eta * dp;
        let origin = Sym2 {
            xx: f * (p + c * x.x * x.x),
            xy: f * c * x.x * x.y,
            yy: f * (p + c * x.y * x.y),
        };
        let mut h = self.real_space(x, true, origin, |acc, d, r2, s| {
            *acc += self.real_hess_term(d, r2, s)
        });
        h += self.spectral_hess(x);
        Ok(h)
    }

    /// Five-point Laplacian of `S_q` at `x` plus `1/|Q|`.
    pub fn harmonicity_defect(&self, x: Vec2<T>, h: T) -> Result<T> {
        let ex = Vec2::new(h, T::zero());
        let ey = Vec2::new(T::zero(), h);
        let c = self.eval_sqn(x)?;
        let lap = (self.eval_sqn(x + ex)?
            + self.eval_sqn(x - ex)?
            + self.eval_sqn(x + ey)?
            + self.eval_sqn(x - ey)?
            - T::lit(4.0) * c)
            / (h * h);
        Ok(lap + T::one() / self.lattice.meas())
    }

    /// `∫_Q S_q` over the centered cell: the logarithm in closed form and
    /// `R` by 48 × 48 Gauss–Legendre. Zero under the adopted normalization.
    pub fn cell_mean(&self) -> Result<T> {
        let q = self.lattice.q();
        let (a, b) = (q.x / T::lit(2.0), q.y / T::lit(2.0));
        // ∫₀^a∫₀^b ln(x² + y²) dy dx
        let quarter = a * b * ((a * a + b * b).ln() - T::lit(3.0))
            + a * a * (b / a).atan()
            + b * b * (a / b).atan();
        let log_part = quarter / T::PI();
        let (xs, wx) = crate::special::gauss_legendre_on(48, -a, a);
        let (ys, wy) = crate::special::gauss_legendre_on(48, -b, b);
        let mut r_part = T::zero();
        for (x, u) in xs.iter().zip(&wx) {
            for (y, v) in ys.iter().zip(&wy) {
                r_part += *u * *v * self.eval_rn(Vec2::new(*x, *y))?;
            }
        }
        Ok(log_part + r_part)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gauss_legendre_on;
    use std::f64::consts::{E, PI};

    fn unit() -> PeriodicKernel<f64> {
        PeriodicKernel::new(Lattice::unit(), 1e-12).unwrap()
    }

    #[test]
    fn free_space_values() {
        assert_eq!(eval_sn(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((eval_sn(&[E, 0.0]).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-16);
        assert!((eval_sn(&[1.0, 0.0, 0.0]).unwrap() + 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert!(matches!(eval_sn(&[0.0, 0.0]), Err(Error::SingularPoint(_))));
        assert!(matches!(
            eval_sn(&[1.0, 0.0, 0.0, 0.0]),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn free_space_gradients() {
        let g = grad_sn(&[1.0, 0.0]).unwrap();
        assert!((g[0] - 1.0 / (2.0 * PI)).abs() < 1e-16 && g[1] == 0.0);
        let g = grad_sn(&[0.0, 2.0]).unwrap();
        assert!(g[0] == 0.0 && (g[1] - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let a = grad_sn(&[0.3f64, 0.7]).unwrap();
        let b = grad_sn(&[-0.3, -0.7]).unwrap();
        assert!((a[0] + b[0]).abs() < 1e-16 && (a[1] + b[1]).abs() < 1e-16);
        assert!(grad_sn(&[0.0, 0.0, 0.0]).is_err());
        // central differences in 3-D
        let x = [0.4f64, -0.2, 0.9];
        let g = grad_sn(&x).unwrap();
        let h = 1e-5;
        for j in 0..3 {
            let (mut p, mut m) = (x, x);
            p[j] += h;
            m[j] -= h;
            let fd = (eval_sn(&p).unwrap() - eval_sn(&m).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn log_scaling_identity() {
        let x = [0.37f64, -1.2];
        for eps in [0.5f64, 0.01, 1e-4] {
            let lhs = eval_sn(&[eps * x[0], eps * x[1]]).unwrap();
            let rhs = eval_sn(&x).unwrap() + eps.ln() / (2.0 * PI);
            assert!((lhs - rhs).abs() < 1e-15);
        }
        let y = [0.3f64, 0.1, -0.4];
        let lhs = eval_sn(&[0.1 * y[0], 0.1 * y[1], 0.1 * y[2]]).unwrap();
        assert!((lhs - eval_sn(&y).unwrap() / 0.1).abs() < 1e-14);
    }

    #[test]
    fn periodic_symmetries() {
        let k = unit();
        let x = Vec2::new(0.31, 0.17);
        let v = k.eval_sqn(x).unwrap();
        assert!((v - k.eval_sqn(-x).unwrap()).abs() < 1e-12);
        assert!((v - k.eval_sqn(x + Vec2::new(1.0, 0.0)).unwrap()).abs() < 1e-12);
        let y = Vec2::new(0.2, 0.4);
        let g = k.grad_sqn(y).unwrap();
        assert!((g + k.grad_sqn(-y).unwrap()).norm() < 1e-12);
        assert!((g - k.grad_sqn(y + Vec2::new(0.0, 1.0)).unwrap()).norm() < 1e-12);
        assert!(k.eval_sqn(Vec2::new(2.0, -1.0)).is_err());
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let k = unit();
        let x = Vec2::new(0.33, 0.11);
        let h = 1e-4;
        let g = k.grad_sqn(x).unwrap();
        let fd = Vec2::new(
            (k.eval_sqn(x + Vec2::new(h, 0.0)).unwrap()
                - k.eval_sqn(x - Vec2::new(h, 0.0)).unwrap())
                / (2.0 * h),
            (k.eval_sqn(x + Vec2::new(0.0, h)).unwrap()
                - k.eval_sqn(x - Vec2::new(0.0, h)).unwrap())
                / (2.0 * h),
        );
        assert!((g - fd).norm() / g.norm() < 1e-5);
        let hs = k.hess_sqn(x).unwrap();
        let gx = (k.grad_sqn(x + Vec2::new(h, 0.0)).unwrap()
            - k.grad_sqn(x - Vec2::new(h, 0.0)).unwrap())
            / (2.0 * h);
        assert!((gx.x - hs.xx).abs() < 1e-6 && (gx.y - hs.xy).abs() < 1e-6);
        // Laplacian of S_q is −1/|Q| off the lattice
        assert!((hs.trace() + 1.0).abs() < 1e-11);
    }

    #[test]
    fn harmonicity_defect_is_small_and_second_order() {
        let k = unit();
        for x in [Vec2::new(0.4, 0.3), Vec2::new(0.5, 0.5)] {
            assert!(k.harmonicity_defect(x, 1e-3).unwrap().abs() < 1e-4);
        }
        let x = Vec2::new(0.3, 0.2);
        let d1 = k.harmonicity_defect(x, 4e-2).unwrap().abs();
        let d2 = k.harmonicity_defect(x, 2e-2).unwrap().abs();
        let ratio = d1 / d2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn regular_part_is_continuous_and_consistent() {
        let k = unit();
        let r0 = k.eval_rn(Vec2::zero()).unwrap();
        let mut prev = f64::INFINITY;
        for t in [1e-2, 1e-3, 1e-4] {
            let d = (k.eval_rn(Vec2::new(t, 0.0)).unwrap() - r0).abs();
            assert!(d < prev);
            prev = d;
        }
        let x = Vec2::new(0.1, 0.05);
        assert!((k.eval_rn(x).unwrap() - k.eval_rn(-x).unwrap()).abs() < 1e-13);
        let y = Vec2::new(0.25, 0.25);
        let sum = k.eval_rn(y).unwrap() + eval_sn(&[0.25, 0.25]).unwrap();
        assert!((sum - k.eval_sqn(y).unwrap()).abs() < 1e-12);
        assert!(k.grad_rn(Vec2::zero()).unwrap().norm() < 1e-15);
        let g = k.grad_rn(y).unwrap() + grad_s2(y);
        assert!((g - k.grad_sqn(y).unwrap()).norm() < 1e-12);
        // ΔR = −1/|Q| everywhere in the centered cell, including 0
        assert!((k.hess_rn(Vec2::zero()).unwrap().trace() + 1.0).abs() < 1e-11);
        assert!((k.hess_rn(x).unwrap().trace() + 1.0).abs() < 1e-11);
    }

    #[test]
    fn regular_part_rejects_other_lattice_points() {
        let k = unit();
        assert!(k.eval_rn(Vec2::new(1.0, 0.0)).is_err());
        assert!(k.eval_rn(Vec2::new(0.7, 0.0)).is_ok());
    }

    // ∫_{[-a,a]²} ln(x²+y²) = 4a²(ln(2a²) − 3 + π/2), so the free-space part of
    // the cell integral is known in closed form and R is integrated by Gauss rules.
    #[test]
    fn zero_cell_mean() {
        let k = unit();
        let a: f64 = 0.5;
        let s2_part = 4.0 * a * a * ((2.0 * a * a).ln() - 3.0 + PI / 2.0) / (4.0 * PI);
        let (x, w) = gauss_legendre_on(48, -a, a);
        let mut r_part = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (yj, wj) in x.iter().zip(&w) {
                r_part += wi * wj * k.eval_rn(Vec2::new(*xi, *yj)).unwrap();
            }
        }
        assert!(
            (s2_part + r_part).abs() < 1e-11,
            "mean {}",
            s2_part + r_part
        );
        assert!((k.cell_mean().unwrap() - (s2_part + r_part)).abs() < 1e-14);
        let rect = PeriodicKernel::new(Lattice::new(2.0f64, 0.5).unwrap(), 1e-12).unwrap();
        assert!(rect.cell_mean().unwrap().abs() < 1e-10);
    }

    #[test]
    fn splitting_parameter_independence() {
        let lat = Lattice::unit();
        let a = unit();
        let b = PeriodicKernel::new_with_eta(lat, 2.0 * PI, 1e-12).unwrap();
        for x in [
            Vec2::new(0.31, 0.17),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.02, -0.01),
        ] {
            assert!((a.eval_sqn(x).unwrap() - b.eval_sqn(x).unwrap()).abs() < 2e-12);
            assert!((a.grad_sqn(x).unwrap() - b.grad_sqn(x).unwrap()).norm() < 2e-12);
        }
    }

    #[test]
    fn rectangular_cell() {
        let lat = Lattice::new(2.0f64, 0.5).unwrap();
        let k = PeriodicKernel::new(lat, 1e-12).unwrap();
        let x = Vec2::new(0.3, 0.1);
        assert!(
            (k.eval_sqn(x).unwrap() - k.eval_sqn(x + Vec2::new(2.0, 0.5)).unwrap()).abs() < 1e-12
        );
        assert!(
            k.harmonicity_defect(Vec2::new(0.7, 0.2), 1e-3)
                .unwrap()
                .abs()
                < 1e-4
        );
        assert!(Lattice::<f64>::new(0.0, 1.0).is_err());
    }

    #[test]
    fn explicit_config_is_validated() {
        let lat = Lattice::unit();
        let bad = EwaldConfig {
            eta: PI,
            real_cutoff: 1,
            spectral_cutoff: 1,
            target_tol: 1e-12,
        };
        assert!(matches!(
            PeriodicKernel::with_config(lat, bad),
            Err(Error::KernelAccuracy { .. })
        ));
        let good = EwaldConfig::calibrated(&lat, 1e-12).unwrap();
        assert!(PeriodicKernel::with_config(lat, good).is_ok());
    }

    #[test]
    fn single_precision_kernel() {
        let k = PeriodicKernel::<f32>::new(Lattice::unit(), 2e-6).unwrap();
        let x = Vec2::new(0.31f32, 0.17);
        assert!((k.eval_sqn(x).unwrap() - k.eval_sqn(-x).unwrap()).abs() < 1e-5);
        let k64 = unit();
        let v64 = k64.eval_sqn(Vec2::new(0.31, 0.17)).unwrap();
        assert!((k.eval_sqn(x).unwrap() as f64 - v64).abs() < 1e-5);
    }
}
