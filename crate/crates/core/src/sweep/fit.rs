use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{FunctionalRecord, Quantity};
use crate::linalg::{least_squares, Matrix};
use crate::scalar::Real;

const RANK_TOL: f64 = 1e-12;

/// Least-squares power series `Σ a_j ε^j` of one quantity over a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub quantity: Quantity,
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub max_residual: f64,
    /// `max − min` of the fitted values.
    pub value_range: f64,
    /// `a₀`, the value continued to `ε = 0`.
    pub predicted_limit: f64,
    pub paper_limit: f64,
    pub abs_gap: f64,
    /// `max_residual · ‖e₀ᵀA⁺‖₁`: how far residual-sized noise can move `a₀`.
    pub a0_bound: f64,
    /// `|a₀ − a₀⁽ⁱ⁾|` with sample `i` left out, in record order.
    pub loo_shifts: Vec<f64>,
}

impl FitReport {
    pub fn loo_shift(&self) -> f64 {
        self.loo_shifts.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn gap(&self) -> f64 {
        (self.predicted_limit - self.paper_limit).abs()
    }

    pub fn relative_residual(&self) -> f64 {
        if self.value_range > 0.0 {
            self.max_residual / self.value_range
        } else {
            self.max_residual
        }
    }
}

/// Polynomial fit in `ε` with columns scaled by the largest `ε`. No `ε = 0`
/// sample is ever added.
pub fn fit_power_series<T: Real>(
    records: &[FunctionalRecord<T>],
    quantity: Quantity,
    degree: usize,
    paper_limit: T,
) -> Result<FitReport> {
    let eps: Vec<T> = records.iter().map(|r| r.eps).collect();
    let y: Vec<T> = records.iter().map(|r| r.get(quantity)).collect();
    if records.len() < degree + 2 {
        return Err(Error::DegenerateSweep(format!(
            "{} samples for a degree {degree} fit of {}",
            records.len(),
            quantity.name()
        )));
    }
    let (coefficients, residuals, pinv) = solve_fit(&eps, &y, degree)?;
    let a0 = coefficients[0];
    let max_residual = residuals.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    let lo = y.iter().copied().fold(T::infinity(), T::min);
    let hi = y.iter().copied().fold(T::neg_infinity(), T::max);
    let a0_bound = max_residual * pinv.iter().map(|v| v.abs()).sum::<T>();
    let mut loo_shifts = Vec::with_capacity(records.len());
    for i in 0..records.len() {
        let e: Vec<T> = eps
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| *v)
            .collect();
        let v: Vec<T> = y
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| *v)
            .collect();
        let (c, _, _) = solve_fit(&e, &v, degree)?;
        loo_shifts.push(f((c[0] - a0).abs()));
    }
    let predicted_limit = f(a0);
    let paper_limit = f(paper_limit);
    Ok(FitReport {
        quantity,
        degree,
        coefficients: coefficients.into_iter().map(f).collect(),
        max_residual: f(max_residual),
        value_range: f(hi - lo),
        predicted_limit,
        paper_limit,
        abs_gap: (predicted_limit - paper_limit).abs(),
        a0_bound: f(a0_bound),
        loo_shifts,
    })
}

fn f<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

fn solve_fit<T: Real>(eps: &[T], y: &[T], degree: usize) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let scale = eps.iter().fold(T::zero(), |m, e| m.max(e.abs()));
    if scale == T::zero() {
        return Err(Error::DegenerateSweep("all eps are zero".into()));
    }
    let cols = degree + 1;
    let mut a = Matrix::zeros(eps.len(), cols);
    for (i, e) in eps.iter().enumerate() {
        let s = *e / scale;
        let mut v = T::one();
        for j in 0..cols {
            a.set(i, j, v);
            v *= s;
        }
    }
    let ls = least_squares(&a, y, T::lit(RANK_TOL))?;
    let mut c = ls.coefficients;
    let mut unscale = T::one();
    for cj in c.iter_mut() {
        *cj /= unscale;
        unscale *= scale;
    }
    Ok((c, ls.residuals, ls.pinv_first_row))
}
