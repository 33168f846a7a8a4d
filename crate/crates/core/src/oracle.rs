//! Independent linear-programming route to the sample support function.
//!
//! The discrete analog of the sharp identified set puts weights
//! `f_i in [0, 1]` with `sum f_i = n p` on the treated-selected units. The
//! support value in direction `u` is the optimum of
//! `max (1/(n p)) sum <u, Y_i> f_i`. For this box-and-one-sum LP a threshold
//! solution is optimal: every unit strictly above the threshold gets weight
//! one and the tied units at the threshold share the remaining mass. This
//! module finds the threshold by selection rather than a full sort, so it
//! does not share code with the estimator it checks.

use crate::embed::dot;
use crate::error::{Error, Result};
use crate::selection::{EmbeddedDataset, TrimFraction};

/// Optimal LP weights for objective coefficients `z` and total mass `mass`.
pub fn lp_weights(z: &[f64], mass: f64) -> Vec<f64> {
    let n = z.len();
    let k = (mass.ceil() as usize).clamp(1, n);
    let mut scratch = z.to_vec();
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    let threshold = *kth;
    let above = z.iter().filter(|v| **v > threshold).count();
    let tied = z.iter().filter(|v| **v == threshold).count();
    let share = (mass - above as f64) / tied as f64;
    z.iter()
        .map(|v| {
            if *v > threshold {
                1.0
            } else if *v == threshold {
                share
            } else {
                0.0
            }
        })
        .collect()
}

fn projections(data: &EmbeddedDataset, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), got: u.len() });
    }
    let rows = data.selected_outcomes(true);
    if rows.is_empty() {
        return Err(Error::EmptyCell("treated-selected"));
    }
    Ok(rows.iter().map(|y| dot(u, y)).collect())
}

/// LP optimum `max (1/(n p)) sum <u, Psi(Y_i)> f_i`.
pub fn lp_support_oracle(data: &EmbeddedDataset, u: &[f64], p: TrimFraction) -> Result<f64> {
    let z = projections(data, u)?;
    let mass = z.len() as f64 * p.p_hat;
    let f = lp_weights(&z, mass);
    Ok(z.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() / mass)
}

/// The attainable mean `(1/(n p)) sum f_i* Psi(Y_i)` at the LP optimum for `u`.
pub fn lp_attainable_point(data: &EmbeddedDataset, u: &[f64], p: TrimFraction) -> Result<Vec<f64>> {
    let z = projections(data, u)?;
    let mass = z.len() as f64 * p.p_hat;
    let f = lp_weights(&z, mass);
    let mut point = vec![0.0; data.dim()];
    for (y, w) in data.selected_outcomes(true).iter().zip(&f) {
        for (acc, c) in point.iter_mut().zip(y.iter()) {
            *acc += w * c;
        }
    }
    point.iter_mut().for_each(|c| *c /= mass);
    Ok(point)
}
