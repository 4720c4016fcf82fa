//! Special functions and quadrature rules.

use crate::scalar::Real;

/// Entire part of the exponential integral, `Ein(s) = E1(s) + ln s + γ`.
///
/// Evaluated by its alternating power series for moderate `s`, where the
/// series is well conditioned; beyond that through [`exp_int_e1`].
pub fn ein<T: Real>(s: T) -> T {
    if s <= T::lit(2.0) {
        let mut term = s;
        let mut sum = s;
        let mut k = 1usize;
        loop {
            k += 1;
            let kf = T::from_usize_lossy(k);
            term = -term * s * (kf - T::one()) / (kf * kf);
            sum += term;
            if term.abs() <= T::epsilon() * sum.abs().max(T::min_positive_value()) || k > 200 {
                break;
            }
        }
        sum
    } else {
        exp_int_e1(s) + s.ln() + T::euler_gamma()
    }
}

/// Exponential integral `E1(s) = ∫_s^∞ e^{-u}/u du` for `s > 0`.
pub fn exp_int_e1<T: Real>(s: T) -> T {
    debug_assert!(s > T::zero());
    if s <= T::one() {
        return ein(s) - s.ln() - T::euler_gamma();
    }
    if s > T::lit(700.0) {
        return T::zero();
    }
    // Modified Lentz evaluation of the continued fraction.
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = s + T::one();
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..500 {
        let fi = T::from_usize_lossy(i);
        let an = -fi * fi;
        b += T::lit(2.0);
        d = T::one() / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    h * (-s).exp()
}

/// `(1 - e^{-s}) / s`, continuous at `s = 0`.
pub fn phi1<T: Real>(s: T) -> T {
    if s.abs() < T::lit(1e-3) {
        // 1 - s/2 + s^2/6 - s^3/24
        T::one() - s / T::lit(2.0) + s * s / T::lit(6.0) - s * s * s / T::lit(24.0)
    } else {
        -(-s).exp_m1() / s
    }
}

/// Derivative of [`phi1`], `(e^{-s}(1 + s) - 1) / s^2`.
pub fn phi1_prime<T: Real>(s: T) -> T {
    if s.abs() < T::lit(0.05) {
        // Σ_{k≥1} k (-s)^{k-1} (-1) / (k+1)!
        let mut sum = T::zero();
        let mut fact = T::one(); // (k+1)!
        let mut pow = T::one(); // s^{k-1}
        for k in 1..12usize {
            fact *= T::from_usize_lossy(k + 1);
            let sign = if k % 2 == 1 { -T::one() } else { T::one() };
            sum += sign * T::from_usize_lossy(k) * pow / fact;
            pow *= s;
        }
        sum
    } else {
        ((-s).exp() * (T::one() + s) - T::one()) / (s * s)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= T::lit(4.0) * T::epsilon() {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let wi = T::lit(2.0) / ((T::one() - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    (
        x.into_iter().map(|xi| mid + half * xi).collect(),
        w.into_iter().map(|wi| wi * half).collect(),
    )
}

fn legendre_with_derivative<T: Real>(n: usize, z: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = z;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * z * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let dp = nf * (z * p1 - p0) / (z * z - T::one());
    (p1, dp)
}

/// C-infinity step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let a = (-T::one() / x).exp();
    let b = (-T::one() / (T::one() - x)).exp();
    a / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from mpmath (expint(1, s)).
    #[test]
    fn e1_matches_reference_values() {
        let cases = [
            (0.01f64, 4.037_929_576_538_114),
            (0.5, 0.559_773_594_776_160_8),
            (1.0, 0.219_383_934_395_520_27),
            (2.5, 0.024_914_917_870_269_736),
            (10.0, 4.156_968_929_685_324e-6),
        ];
        for (s, expected) in cases {
            let got = exp_int_e1(s);
            assert!(
                ((got - expected) / expected).abs() < 1e-14,
                "E1({s}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn ein_continuous_across_branch() {
        let below = ein(2.0f64 - 1e-12);
        let above = ein(2.0f64 + 1e-12);
        assert!((below - above).abs() < 1e-11);
        assert!((ein(1e-8f64) - (1e-8 - 2.5e-17)).abs() < 1e-22);
    }

    #[test]
    fn phi1_branches_agree() {
        for s in [1e-3f64, 0.05] {
            let lo = phi1(s * (1.0 - 1e-13));
            let hi = phi1(s * (1.0 + 1e-13));
            assert!((lo - hi).abs() < 1e-12);
            let lo = phi1_prime(s * (1.0 - 1e-13));
            let hi = phi1_prime(s * (1.0 + 1e-13));
            assert!((lo - hi).abs() < 1e-12);
        }
        assert!((phi1_prime(0.0f64) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre::<f64>(7);
        // degree 12 monomial: ∫_{-1}^{1} x^12 = 2/13
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((v - 2.0 / 13.0).abs() < 1e-15);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_step_is_monotone_partition() {
        let mut prev = 0.0f64;
        for i in 0..=100 {
            let v = smooth_step(i as f64 / 100.0);
            assert!(v >= prev);
            assert!((v + smooth_step(1.0 - i as f64 / 100.0) - 1.0).abs() < 1e-15);
            prev = v;
        }
    }
}
