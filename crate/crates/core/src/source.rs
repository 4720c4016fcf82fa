//! Band-limited q-periodic sources with zero cell mean and their periodic
//! Newtonian potential `P_q[f]`, the zero-mean solution of `ΔP = f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HoleCurve;
use crate::kernel::Lattice;
use crate::scalar::Real;
use crate::vec2::Vec2;

/// One Fourier mode `c_cos cos(2πk·x) + c_sin sin(2πk·x)`, `k = q⁻¹z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceMode<T> {
    pub z: [i64; 2],
    pub c_cos: T,
    pub c_sin: T,
}

/// Finite trigonometric sum with no constant mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSource<T> {
    lattice: Lattice<T>,
    modes: Vec<SourceMode<T>>,
}

impl<T: Real> PeriodicSource<T> {
    pub fn empty(lattice: Lattice<T>) -> Self {
        Self {
            lattice,
            modes: Vec::new(),
        }
    }

    /// Builds a source, folding `z` and `−z` into one canonical mode and
    /// merging repeats. A `z = 0` mode would carry a nonzero cell mean and is rejected.
    pub fn new(
        lattice: Lattice<T>,
        modes: impl IntoIterator<Item = SourceMode<T>>,
    ) -> Result<Self> {
        let mut merged: Vec<SourceMode<T>> = Vec::new();
        for m in modes {
            if m.z == [0, 0] {
                return Err(Error::InvalidSource(
                    "the mode z = 0 has nonzero cell mean".into(),
                ));
            }
            let flip = m.z[0] < 0 || (m.z[0] == 0 && m.z[1] < 0);
            let canon = if flip {
                SourceMode {
                    z: [-m.z[0], -m.z[1]],
                    c_cos: m.c_cos,
                    c_sin: -m.c_sin,
                }
            } else {
                m
            };
            match merged.iter_mut().find(|e| e.z == canon.z) {
                Some(e) => {
                    e.c_cos += canon.c_cos;
                    e.c_sin += canon.c_sin;
                }
                None => merged.push(canon),
            }
        }
        Ok(Self {
            lattice,
            modes: merged,
        })
    }

    /// Single cosine mode, e.g. `cos(2πx₁)` for `z = [1, 0]`.
    pub fn cosine(lattice: Lattice<T>, z: [i64; 2], amplitude: T) -> Result<Self> {
        Self::new(
            lattice,
            [SourceMode {
                z,
                c_cos: amplitude,
                c_sin: T::zero(),
            }],
        )
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    pub fn modes(&self) -> &[SourceMode<T>] {
        &self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn wavevector(&self, z: [i64; 2]) -> Vec2<T> {
        let q = self.lattice.q();
        Vec2::new(T::lit(z[0] as f64) / q.x, T::lit(z[1] as f64) / q.y)
    }

    /// `(k, cos 2πk·x, sin 2πk·x)` for each mode.
    fn terms(&self, x: Vec2<T>) -> impl Iterator<Item = (&SourceMode<T>, Vec2<T>, T, T)> + '_ {
        self.modes.iter().map(move |m| {
            let k = self.wavevector(m.z);
            let (s, c) = (T::TAU() * k.dot(x)).sin_cos();
            (m, k, c, s)
        })
    }

    pub fn eval_f(&self, x: Vec2<T>) -> T {
        self.terms(x)
            .map(|(m, _, c, s)| m.c_cos * c + m.c_sin * s)
            .sum()
    }

    pub fn eval_pq(&self, x: Vec2<T>) -> T {
        let four_pi2 = T::lit(4.0) * T::PI() * T::PI();
        self.terms(x)
            .map(|(m, k, c, s)| -(m.c_cos * c + m.c_sin * s) / (four_pi2 * k.norm2()))
            .sum()
    }

    pub fn grad_pq(&self, x: Vec2<T>) -> Vec2<T> {
        let two_pi = T::TAU();
        let mut g = Vec2::zero();
        for (m, k, c, s) in self.terms(x) {
            // d/dx of −(a cos + b sin)/(4π²|k|²) = 2πk (a sin − b cos)/(4π²|k|²)
            g += k * ((m.c_cos * s - m.c_sin * c) / (two_pi * k.norm2()));
        }
        g
    }

    /// `P_q[f](p + ε t_i)` at every node `t_i` of the reference curve.
    pub fn trace_pq_on_scaled(&self, p: Vec2<T>, eps: T, curve: &HoleCurve<T>) -> Result<Vec<T>> {
        if eps != T::zero() {
            curve.scaled(&self.lattice, p, eps)?;
        }
        Ok(curve
            .nodes()
            .iter()
            .map(|&t| self.eval_pq(p + t * eps))
            .collect())
    }

    /// `∫_Q |∇P_q[f]|²` by Parseval.
    pub fn dirichlet_energy_pq(&self) -> T {
        let denom = T::lit(8.0) * T::PI() * T::PI();
        let sum: T = self
            .modes
            .iter()
            .map(|m| {
                (m.c_cos * m.c_cos + m.c_sin * m.c_sin) / (denom * self.wavevector(m.z).norm2())
            })
            .sum();
        sum * self.lattice.meas()
    }

    /// `∫_Q P_q[f]`, zero because `P_q[f]` has no constant mode.
    pub fn cell_mean_pq(&self) -> T {
        T::zero()
    }
}
