//! Volume quadrature of `|∇u|²` and `u` over the perforated cell, used as an
//! independent check of the boundary-reduced functionals.
//!
//! A smooth cutoff `χ(|x − p|)`, equal to 1 near the hole and 0 beyond
//! `ρ₂ < dist(p, ∂Q)`, splits the integral. `(1 − χ)F` is smooth and periodic
//! and is integrated by the trapezoidal rule on an `m × m` grid. `χF` is
//! integrated in the coordinates `x = p + ερ γ(φ)`, `ρ ≥ 1`, with graded
//! Gauss–Legendre panels in `ρ` and the trapezoidal rule in `φ`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::bie::SolveResult;
use crate::error::{Error, Result};
use crate::kernel::Lattice;
use crate::scalar::Real;
use crate::special::{gauss_legendre_on, phi1, phi1_prime, smooth_step};
use crate::vec2::Vec2;

/// Terms with Gaussian exponent above this are dropped.
const CUTOFF: f64 = 40.0;

struct Mode<T> {
    k: Vec2<T>,
    index: [i64; 2],
    amp: T,
    b: Complex<T>,
}

/// Periodic double layer `−Σ_j d_j·∇S_q(x − y_j)` of point dipoles, by an
/// Ewald split whose spectral part is summed over the sources once.
pub struct LayerField<T> {
    lattice: Lattice<T>,
    eta: T,
    points: Vec<Vec2<T>>,
    dipoles: Vec<Vec2<T>>,
    modes: Vec<Mode<T>>,
    max_index: [i64; 2],
}

/// Value and gradient of a field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue<T> {
    pub value: T,
    pub grad: Vec2<T>,
}

impl<T: Real> LayerField<T> {
    pub fn new(lattice: Lattice<T>, points: Vec<Vec2<T>>, dipoles: Vec<Vec2<T>>) -> Self {
        assert_eq!(points.len(), dipoles.len());
        let eta = T::lit(16.0) * T::PI() / lattice.meas();
        let q = lattice.q();
        let cutoff = T::lit(CUTOFF);
        let kmax = (cutoff * eta).sqrt() / T::PI();
        let a_max = (kmax * q.x).ceil().to_i64().unwrap_or(0);
        let b_max = (kmax * q.y).ceil().to_i64().unwrap_or(0);
        let mut modes = Vec::new();
        for a in 0..=a_max {
            for b in -b_max..=b_max {
                if a == 0 && b <= 0 {
                    continue;
                }
                let k = Vec2::new(T::lit(a as f64) / q.x, T::lit(b as f64) / q.y);
                let k2 = k.norm2();
                let expo = T::PI() * T::PI() * k2 / eta;
                if expo > cutoff {
                    continue;
                }
                // the ±k pair of ∇S_q contributes 2·k sin(2πk·x) e^{−π²k²/η} / (2π|Q|k²)
                let amp = T::lit(2.0) * (-expo).exp() / (T::TAU() * lattice.meas() * k2);
                let mut b_k = Complex::new(T::zero(), T::zero());
                for (y, d) in points.iter().zip(&dipoles) {
                    b_k += Complex::from_polar(k.dot(*d), -T::TAU() * k.dot(*y));
                }
                modes.push(Mode {
                    k,
                    index: [a, b],
                    amp,
                    b: b_k,
                });
            }
        }
        Self {
            lattice,
            eta,
            points,
            dipoles,
            modes,
            max_index: [a_max, b_max],
        }
    }

    /// Full periodic field.
    pub fn eval(&self, x: Vec2<T>) -> FieldValue<T> {
        self.sum(x, false)
    }

    /// The field with the free-space kernel `S_2(x − y_j)` of each source removed.
    pub fn eval_regular(&self, x: Vec2<T>) -> FieldValue<T> {
        self.sum(x, true)
    }

    fn sum(&self, x: Vec2<T>, regular: bool) -> FieldValue<T> {
        let two_pi = T::TAU();
        let eta = self.eta;
        let q = self.lattice.q();
        let reach2 = T::lit(CUTOFF) / eta;
        let reach = reach2.sqrt();
        let mut value = T::zero();
        let mut grad = Vec2::zero();
        for (y, d) in self.points.iter().zip(&self.dipoles) {
            let r0 = x - *y;
            let z1 = ((r0.x - reach) / q.x).ceil().to_i64().unwrap_or(0)
                ..=((r0.x + reach) / q.x).floor().to_i64().unwrap_or(0);
            for i in z1 {
                let z2 = ((r0.y - reach) / q.y).ceil().to_i64().unwrap_or(0)
                    ..=((r0.y + reach) / q.y).floor().to_i64().unwrap_or(0);
                for j in z2 {
                    let r = r0 - self.lattice.point(i, j);
                    let r2 = r.norm2();
                    if r2 > reach2 {
                        continue;
                    }
                    let s = eta * r2;
                    let rd = r.dot(*d);
                    if regular && i == 0 && j == 0 {
                        // −d·∇R₀ with ∇R₀ = −η φ₁(s) r / 2π
                        let f1 = phi1(s);
                        value += eta * f1 * rd / two_pi;
                        grad += (*d * f1 + r * (T::lit(2.0) * eta * phi1_prime(s) * rd))
                            * (eta / two_pi);
                    } else {
                        let e = (-s).exp() / (two_pi * r2);
                        value -= e * rd;
                        let c = (T::lit(2.0) / r2 + T::lit(2.0) * eta) * rd;
                        grad -= (*d - r * c) * e;
                    }
                }
            }
        }
        // e^{2πi a x₁/q₁} and e^{2πi b x₂/q₂} by repeated multiplication
        let [a_max, b_max] = self.max_index;
        let e1 = Complex::from_polar(T::one(), two_pi * x.x / q.x);
        let e2 = Complex::from_polar(T::one(), two_pi * x.y / q.y);
        let mut pa = Vec::with_capacity(a_max as usize + 1);
        let mut acc = Complex::new(T::one(), T::zero());
        for _ in 0..=a_max {
            pa.push(acc);
            acc *= e1;
        }
        let mut pb = vec![Complex::new(T::one(), T::zero()); 2 * b_max as usize + 1];
        let mut acc = Complex::new(T::one(), T::zero());
        let e2c = e2.conj();
        let mut accm = Complex::new(T::one(), T::zero());
        for b in 1..=b_max as usize {
            acc *= e2;
            accm *= e2c;
            pb[b_max as usize + b] = acc;
            pb[b_max as usize - b] = accm;
        }
        for m in &self.modes {
            let phase = pa[m.index[0] as usize] * pb[(m.index[1] + b_max) as usize] * m.b;
            value -= m.amp * phase.im;
            grad -= m.k * (m.amp * two_pi * phase.re);
        }
        FieldValue { value, grad }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Integrand {
    Energy,
    Mean,
}

/// `∫_{Q∖Ω_{p,ε}} |∇u|²` by volume quadrature on an `m × m` grid, `m ≥ 256`.
pub fn energy_volume_oracle<T: Real>(result: &SolveResult<T>, m: usize) -> Result<T> {
    volume_integral(result, m, Integrand::Energy)
}

/// `∫_{Q∖Ω_{p,ε}} u` by volume quadrature on an `m × m` grid, `m ≥ 256`.
pub fn mean_volume_oracle<T: Real>(result: &SolveResult<T>, m: usize) -> Result<T> {
    volume_integral(result, m, Integrand::Mean)
}

fn volume_integral<T: Real>(result: &SolveResult<T>, m: usize, what: Integrand) -> Result<T> {
    if m < 256 {
        return Err(Error::Config(format!("oracle grid {m} is below 256")));
    }
    let lattice = *result.kernel.lattice();
    let q = lattice.q();
    let (p, eps, xi) = (result.p, result.eps, result.xi);
    let curve = result.curve();
    let shape = curve.spec();
    let layer = result.layer();
    let theta = &result.density.values;
    let points: Vec<Vec2<T>> = curve.nodes().iter().map(|s| p + *s * eps).collect();
    let dipoles: Vec<Vec2<T>> = (0..curve.len())
        .map(|j| curve.normals()[j] * (eps * curve.weights()[j] * theta[j]))
        .collect();
    let field = LayerField::new(lattice, points, dipoles);

    let rho1 = eps * (shape.max_radius() + T::lit(8.0) * curve.max_spacing());
    let rho2 = T::lit(0.95) * lattice.min_q() / T::lit(2.0);
    if rho1 >= rho2 {
        return Err(Error::Config("hole too large for the volume oracle".into()));
    }
    let chi = |r: T| T::one() - smooth_step((r - rho1) / (rho2 - rho1));
    let integrand = |u: T, g: Vec2<T>| match what {
        Integrand::Energy => g.norm2(),
        Integrand::Mean => u,
    };
    let src = &result.source;

    let mf = T::from_usize_lossy(m);
    let far: T = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut acc = T::zero();
            for b in 0..m {
                let x = p + Vec2::new(
                    q.x * ((T::from_usize_lossy(a) + T::lit(0.5)) / mf - T::lit(0.5)),
                    q.y * ((T::from_usize_lossy(b) + T::lit(0.5)) / mf - T::lit(0.5)),
                );
                let c = T::one() - chi((x - p).norm());
                if c == T::zero() {
                    continue;
                }
                let w = field.eval(x);
                acc += c * integrand(w.value + xi + src.eval_pq(x), w.grad + src.grad_pq(x));
            }
            acc
        })
        .collect::<Vec<T>>()
        .into_iter()
        .sum::<T>()
        * lattice.meas()
        / (mf * mf);

    let rho_out = rho2 / (eps * shape.min_radius());
    let panels = 8;
    let per_panel = 12 + m / 32;
    let mut radial = Vec::new();
    for k in 0..panels {
        let lo = rho_out.powf(T::from_usize_lossy(k) / T::from_usize_lossy(panels));
        let hi = rho_out.powf(T::from_usize_lossy(k + 1) / T::from_usize_lossy(panels));
        let (r, w) = gauss_legendre_on(per_panel, lo, hi);
        radial.extend(r.into_iter().zip(w));
    }
    let step = T::TAU() / mf;
    let near: T = (0..m)
        .into_par_iter()
        .map(|i| -> Result<T> {
            let pt = shape.point(step * T::from_usize_lossy(i));
            let jac = pt.x.cross(pt.dx) * eps * eps;
            let mut acc = T::zero();
            for (rho, wr) in &radial {
                let t = pt.x * *rho;
                let x = p + t * eps;
                let c = chi((x - p).norm());
                if c == T::zero() {
                    continue;
                }
                let reg = field.eval_regular(x);
                let f = match what {
                    Integrand::Energy => {
                        let g = layer.free_double_layer_grad(t)? / eps + reg.grad + src.grad_pq(x);
                        integrand(T::zero(), g)
                    }
                    Integrand::Mean => {
                        let u = layer.free_double_layer(t)? + reg.value + xi + src.eval_pq(x);
                        integrand(u, Vec2::zero())
                    }
                };
                acc += c * f * *rho * jac * *wr;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .sum::<T>()
        * step;
    Ok(far + near)
}
