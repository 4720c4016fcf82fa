//! Trigonometric interpolation of periodic nodal data and the logarithmic
//! product quadrature used for weakly singular boundary integrals.

use crate::scalar::Real;

/// Real trigonometric interpolant of samples at `θ_i = 2πi/N`, `N` even.
///
/// `f(θ) = a₀ + Σ_{k=1}^{N/2} (a_k cos kθ + b_k sin kθ)`, with the Nyquist
/// coefficient halved so that the interpolant is real and symmetric.
#[derive(Clone, Debug)]
pub struct TrigSeries<T> {
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Real> TrigSeries<T> {
    pub fn from_samples(values: &[T]) -> Self {
        let n = values.len();
        assert!(
            n >= 2 && n.is_multiple_of(2),
            "trigonometric interpolation needs an even sample count"
        );
        let half = n / 2;
        let nf = T::from_usize_lossy(n);
        let step = T::TAU() / nf;
        let mut cos = vec![T::zero(); half + 1];
        let mut sin = vec![T::zero(); half + 1];
        for (i, &v) in values.iter().enumerate() {
            let th = step * T::from_usize_lossy(i);
            let (s1, c1) = th.sin_cos();
            let (mut sk, mut ck) = (T::zero(), T::one());
            for k in 0..=half {
                cos[k] += v * ck;
                sin[k] += v * sk;
                let next_c = ck * c1 - sk * s1;
                sk = sk * c1 + ck * s1;
                ck = next_c;
            }
        }
        let two = T::lit(2.0);
        cos[0] /= nf;
        sin[0] = T::zero();
        for k in 1..half {
            cos[k] = cos[k] * two / nf;
            sin[k] = sin[k] * two / nf;
        }
        cos[half] /= nf;
        sin[half] = T::zero();
        Self { cos, sin }
    }

    /// Highest retained wavenumber.
    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn eval(&self, theta: T) -> T {
        let (s1, c1) = theta.sin_cos();
        let (mut sk, mut ck) = (T::zero(), T::one());
        let mut acc = T::zero();
        for (a, b) in self.cos.iter().zip(&self.sin) {
            acc += *a * ck + *b * sk;
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        acc
    }

    /// Derivative in `θ`; the Nyquist term is dropped.
    pub fn eval_derivative(&self, theta: T) -> T {
        let (s1, c1) = theta.sin_cos();
        let (mut sk, mut ck) = (T::zero(), T::one());
        let mut acc = T::zero();
        let last = self.degree();
        for k in 0..last {
            let kf = T::from_usize_lossy(k);
            acc += kf * (self.sin[k] * ck - self.cos[k] * sk);
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        acc
    }

    /// Samples the interpolant on `m` equispaced nodes.
    pub fn resample(&self, m: usize) -> Vec<T> {
        let step = T::TAU() / T::from_usize_lossy(m);
        (0..m)
            .map(|i| self.eval(step * T::from_usize_lossy(i)))
            .collect()
    }
}

/// Weights `R_k` of the product rule
/// `∫₀^{2π} ln(4 sin²((t_i − τ)/2)) φ(τ) dτ ≈ Σ_j R_{|i−j|} φ(τ_j)`
/// on `N = 2n` equispaced nodes.
pub fn log_weights<T: Real>(n_nodes: usize) -> Vec<T> {
    assert!(n_nodes >= 2 && n_nodes.is_multiple_of(2));
    let n = n_nodes / 2;
    let nf = T::from_usize_lossy(n);
    let pi = T::PI();
    (0..n_nodes)
        .map(|k| {
            let kf = T::from_usize_lossy(k);
            let mut s = T::zero();
            for m in 1..n {
                let mf = T::from_usize_lossy(m);
                s += (mf * kf * pi / nf).cos() / mf;
            }
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            -T::lit(2.0) * pi / nf * s - pi / (nf * nf) * sign
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn interpolant_reproduces_band_limited_data() {
        let f = |t: f64| 0.3 + (2.0 * t).cos() - 0.7 * (5.0 * t).sin();
        let n = 32;
        let samples: Vec<f64> = (0..n).map(|i| f(TAU * i as f64 / n as f64)).collect();
        let s = TrigSeries::from_samples(&samples);
        for t in [0.1, 1.3, 4.0] {
            assert!((s.eval(t) - f(t)).abs() < 1e-13);
            let df = -2.0 * (2.0 * t).sin() - 3.5 * (5.0 * t).cos();
            assert!((s.eval_derivative(t) - df).abs() < 1e-12);
        }
        let up = s.resample(96);
        for (i, v) in up.iter().enumerate() {
            assert!((v - f(TAU * i as f64 / 96.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolation_is_exact_at_nodes_with_nyquist_content() {
        let samples = [1.0, -1.0, 1.0, -1.0, 2.0, 0.0];
        let s = TrigSeries::from_samples(&samples);
        for (i, v) in samples.iter().enumerate() {
            assert!((s.eval(TAU * i as f64 / 6.0) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn log_weights_integrate_fourier_modes() {
        // ∫ ln(4 sin²((t−τ)/2)) cos(mτ) dτ = −(2π/m) cos(mt) for m ≥ 1, and 0 for m = 0.
        let n = 64;
        let w = log_weights::<f64>(n);
        let nodes: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        for m in 0..20usize {
            for i in [0, 5, 17] {
                let approx: f64 = (0..n)
                    .map(|j| {
                        w[(i as isize - j as isize).unsigned_abs()] * (m as f64 * nodes[j]).cos()
                    })
                    .sum();
                let exact = if m == 0 {
                    0.0
                } else {
                    -TAU / m as f64 * (m as f64 * nodes[i]).cos()
                };
                assert!((approx - exact).abs() < 1e-12, "m={m}: {approx} vs {exact}");
            }
        }
    }
}
