//! Selection-model estimators: the trimming fraction, the point-identified
//! control mean and the trimmed-mean support function over direction grids.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{ceil_rank, dot, EmbeddedVector};
use crate::error::{Error, Result};
use crate::grid::DirectionGrid;

/// Treated-selected cells below this size trigger a warning.
pub const SMALL_CELL: usize = 30;

/// One experimental unit after embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub id: String,
    pub treated: bool,
    pub selected: bool,
    /// Present exactly when `selected`.
    pub outcome: Option<EmbeddedVector>,
    /// Discrete covariate stratum, if any.
    pub stratum: Option<String>,
}

impl Unit {
    pub fn new(id: impl Into<String>, treated: bool, outcome: Option<Vec<f64>>) -> Self {
        Self {
            id: id.into(),
            treated,
            selected: outcome.is_some(),
            outcome: outcome.map(EmbeddedVector),
            stratum: None,
        }
    }

    pub fn with_stratum(mut self, stratum: impl Into<String>) -> Self {
        self.stratum = Some(stratum.into());
        self
    }
}

/// Units with treatment flag, selection flag and embedded outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedDataset {
    units: Vec<Unit>,
    dim: usize,
}

impl EmbeddedDataset {
    pub fn new(units: Vec<Unit>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadDimension("embedding dimension must be positive".into()));
        }
        for (i, u) in units.iter().enumerate() {
            match (&u.outcome, u.selected) {
                (Some(v), true) if v.dim() != dim => {
                    return Err(Error::InvalidDataset(format!(
                        "unit {i} has outcome dimension {} (expected {dim})",
                        v.dim()
                    )))
                }
                (Some(v), true) if v.iter().any(|c| !c.is_finite()) => {
                    return Err(Error::InvalidDataset(format!("unit {i} has a non-finite outcome")))
                }
                (Some(_), false) => {
                    return Err(Error::InvalidDataset(format!("unit {i} is unselected but has an outcome")))
                }
                (None, true) => {
                    return Err(Error::InvalidDataset(format!("unit {i} is selected but has no outcome")))
                }
                _ => {}
            }
        }
        Ok(Self { units, dim })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    fn count(&self, treated: bool, selected: Option<bool>) -> usize {
        self.units
            .iter()
            .filter(|u| u.treated == treated && selected.is_none_or(|s| u.selected == s))
            .count()
    }

    pub fn n_treated(&self) -> usize {
        self.count(true, None)
    }

    pub fn n_control(&self) -> usize {
        self.count(false, None)
    }

    pub fn n_treated_selected(&self) -> usize {
        self.count(true, Some(true))
    }

    pub fn n_control_selected(&self) -> usize {
        self.count(false, Some(true))
    }

    /// Embedded outcomes of selected units in the given arm, in unit order.
    pub fn selected_outcomes(&self, treated: bool) -> Vec<&[f64]> {
        self.units
            .iter()
            .filter(|u| u.treated == treated)
            .filter_map(|u| u.outcome.as_deref())
            .collect()
    }

    /// Subset of units, keeping the embedding dimension.
    pub fn filter(&self, keep: impl Fn(&Unit) -> bool) -> Self {
        Self { units: self.units.iter().filter(|u| keep(u)).cloned().collect(), dim: self.dim }
    }

    /// Resample by unit indices (with repetition).
    pub fn resample(&self, indices: &[usize]) -> Self {
        Self { units: indices.iter().map(|&i| self.units[i].clone()).collect(), dim: self.dim }
    }

    /// Applies a coordinate map to every outcome.
    pub fn map_outcomes(&self, dim: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let units = self
            .units
            .iter()
            .map(|u| Unit { outcome: u.outcome.as_deref().map(|v| EmbeddedVector(f(v))), ..u.clone() })
            .collect();
        Self::new(units, dim)
    }

    /// Distinct stratum labels in sorted order (`None` if no unit carries one).
    pub fn strata(&self) -> Option<Vec<String>> {
        let labels: std::collections::BTreeSet<&str> =
            self.units.iter().filter_map(|u| u.stratum.as_deref()).collect();
        if labels.is_empty() {
            None
        } else {
            Some(labels.into_iter().map(str::to_owned).collect())
        }
    }
}

/// Share `p` of the treated-selected population attributable to the always-observed group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimFraction {
    pub p_hat: f64,
    /// The raw ratio exceeded one and was clipped.
    pub clipped: bool,
}

impl TrimFraction {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!("trimming fraction must lie in (0, 1], got {p}")));
        }
        Ok(Self { p_hat: p, clipped: false })
    }

    /// Ratio of retention rates, clipped to one.
    pub fn from_retention(control: f64, treated: f64) -> Result<Self> {
        if !(treated > 0.0) {
            return Err(Error::ZeroSelection);
        }
        let ratio = control / treated;
        if !(ratio > 0.0) {
            return Err(Error::EmptyCell("control-selected"));
        }
        Ok(if ratio > 1.0 {
            Self { p_hat: 1.0, clipped: true }
        } else {
            Self { p_hat: ratio, clipped: false }
        })
    }
}

/// `p_hat = P(S=1|D=0) / P(S=1|D=1)` by sample frequencies.
pub fn estimate_p(data: &EmbeddedDataset) -> Result<TrimFraction> {
    let (n1, n0) = (data.n_treated(), data.n_control());
    if n0 == 0 {
        return Err(Error::EmptyArm("control"));
    }
    if n1 == 0 {
        return Err(Error::EmptyArm("treated"));
    }
    let (n11, n01) = (data.n_treated_selected(), data.n_control_selected());
    if n11 == 0 {
        return Err(Error::ZeroSelection);
    }
    TrimFraction::from_retention(n01 as f64 / n0 as f64, n11 as f64 / n1 as f64)
}

fn coordinate_mean(rows: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r.iter()) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= rows.len() as f64);
    acc
}

/// Coordinatewise mean of embedded outcomes among control-selected units.
pub fn estimate_mu0(data: &EmbeddedDataset) -> Result<EmbeddedVector> {
    let rows = data.selected_outcomes(false);
    if rows.is_empty() {
        return Err(Error::EmptyCell("control-selected"));
    }
    Ok(EmbeddedVector(coordinate_mean(&rows, data.dim())))
}

/// Mean of treated-selected embedded outcomes.
pub fn treated_selected_mean(data: &EmbeddedDataset) -> Result<EmbeddedVector> {
    let rows = data.selected_outcomes(true);
    if rows.is_empty() {
        return Err(Error::EmptyCell("treated-selected"));
    }
    Ok(EmbeddedVector(coordinate_mean(&rows, data.dim())))
}

/// How the upper `p` share of projections is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrimRule {
    /// Full weight on the top `floor(n p)` values, fractional weight on the next.
    #[default]
    Fractional,
    /// Indicator `z >= Q(1 - p)` with the `ceil(n q)`-th order statistic.
    Indicator,
}

/// Sorts descending by value, ties by original position.
fn sort_descending(values: &mut [f64]) {
    values.sort_by(|a, b| b.total_cmp(a));
}

/// Fractional upper-trimmed mean of `values` keeping mass `keep` in (0, 1].
///
/// Equals `max (1/(n keep)) sum z_i f_i` over `f_i in [0, 1]`, `sum f_i = n keep`.
pub fn upper_trimmed_mean(values: &[f64], keep: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut z = values.to_vec();
    sort_descending(&mut z);
    Ok(trimmed_sorted(&z, keep))
}

/// Sum in order of increasing magnitude, so that negating every value
/// negates the result exactly.
pub(crate) fn symmetric_sum(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        // equal magnitudes enter as one signed multiple
        let m = v[i].abs();
        let mut count = 0i64;
        while i < v.len() && v[i].abs() == m {
            count += if v[i] < 0.0 { -1 } else { 1 };
            i += 1;
        }
        total += count as f64 * m;
    }
    total
}

/// Fractional trimmed mean on values already sorted descending.
pub(crate) fn trimmed_sorted(z: &[f64], keep: f64) -> f64 {
    let n = z.len();
    let mass = n as f64 * keep;
    let full = (mass.floor() as usize).min(n);
    if full == n {
        return symmetric_sum(z) / n as f64;
    }
    let mut total: f64 = z[..full].iter().sum();
    let frac = mass - full as f64;
    if full < n && frac > 0.0 {
        total += frac * z[full];
    }
    total / mass
}

/// Indicator-form trimmed mean: average of values at or above the
/// `ceil(n keep)`-th largest value.
pub fn indicator_trimmed_mean(values: &[f64], keep: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut z = values.to_vec();
    sort_descending(&mut z);
    let threshold = z[ceil_rank(z.len(), keep) - 1];
    let kept: Vec<f64> = z.into_iter().filter(|v| *v >= threshold).collect();
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

fn trimmed(values: &[f64], keep: f64, rule: TrimRule) -> Result<f64> {
    match rule {
        TrimRule::Fractional => upper_trimmed_mean(values, keep),
        TrimRule::Indicator => indicator_trimmed_mean(values, keep),
    }
}

fn check_direction(data_dim: usize, u: &[f64]) -> Result<()> {
    if u.len() != data_dim {
        return Err(Error::DimensionMismatch { expected: data_dim, got: u.len() });
    }
    Ok(())
}

/// Sample support function `sigma(u)` of the identified set: the upper
/// `p`-trimmed mean of `<u, Psi(Y)>` over treated-selected units.
pub fn trimmed_support(data: &EmbeddedDataset, u: &[f64], p: TrimFraction) -> Result<f64> {
    trimmed_support_with(data, u, p, TrimRule::Fractional)
}

pub fn trimmed_support_with(data: &EmbeddedDataset, u: &[f64], p: TrimFraction, rule: TrimRule) -> Result<f64> {
    check_direction(data.dim(), u)?;
    let rows = data.selected_outcomes(true);
    if rows.is_empty() {
        return Err(Error::EmptyCell("treated-selected"));
    }
    let z: Vec<f64> = rows.iter().map(|y| dot(u, y)).collect();
    trimmed(&z, p.p_hat, rule)
}

/// Support-function values over a direction grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportProfile {
    pub grid: DirectionGrid,
    pub sigma: Vec<f64>,
    pub variance: Option<Vec<f64>>,
    pub p: TrimFraction,
    /// A point known to satisfy every constraint (the treated-selected mean).
    pub witness: Option<Vec<f64>>,
}

/// Support profile from raw outcome rows (treated-selected or contaminated sample).
pub fn profile_from_rows(rows: &[&[f64]], grid: &DirectionGrid, keep: f64, rule: TrimRule) -> Result<SupportProfile> {
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(r) = rows.iter().find(|r| r.len() != grid.dim()) {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: r.len() });
    }
    let sigma = grid
        .directions()
        .par_iter()
        .map(|u| {
            let z: Vec<f64> = rows.iter().map(|y| dot(u, y)).collect();
            trimmed(&z, keep, rule)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SupportProfile {
        grid: grid.clone(),
        sigma,
        variance: None,
        p: TrimFraction { p_hat: keep, clipped: false },
        witness: Some(coordinate_mean(rows, grid.dim())),
    })
}

/// `sigma[i] = trimmed_support(data, grid[i], p)` for every grid direction.
pub fn support_profile(data: &EmbeddedDataset, grid: &DirectionGrid, p: TrimFraction) -> Result<SupportProfile> {
    support_profile_with(data, grid, p, TrimRule::Fractional)
}

pub fn support_profile_with(
    data: &EmbeddedDataset,
    grid: &DirectionGrid,
    p: TrimFraction,
    rule: TrimRule,
) -> Result<SupportProfile> {
    if grid.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), got: grid.dim() });
    }
    let rows = data.selected_outcomes(true);
    if rows.is_empty() {
        return Err(Error::EmptyCell("treated-selected"));
    }
    if rows.len() < SMALL_CELL {
        warn!("only {} treated-selected units; trimmed means are noisy", rows.len());
    }
    let mut profile = profile_from_rows(&rows, grid, p.p_hat, rule)?;
    profile.p = p;
    Ok(profile)
}

/// Nonnegative stratum weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumWeights {
    strata: Vec<(String, f64)>,
}

impl StratumWeights {
    pub fn new(strata: Vec<(String, f64)>) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::Config("no strata".into()));
        }
        if strata.iter().any(|(_, w)| !(*w >= 0.0)) {
            return Err(Error::Config("stratum weights must be nonnegative".into()));
        }
        let total: f64 = strata.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("stratum weights sum to {total}")));
        }
        Ok(Self { strata })
    }

    pub fn strata(&self) -> &[(String, f64)] {
        &self.strata
    }

    /// `w_x = P(X = x | S = 1, D = 0)` estimated by sample frequencies.
    pub fn from_control_selected(data: &EmbeddedDataset) -> Result<Self> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for u in data.units().iter().filter(|u| !u.treated && u.selected) {
            let label = u.stratum.clone().ok_or_else(|| Error::InvalidDataset(format!("unit {} has no stratum", u.id)))?;
            *counts.entry(label).or_default() += 1;
        }
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(Error::EmptyCell("control-selected"));
        }
        let mut strata: Vec<(String, f64)> =
            counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect();
        // absorb rounding so the weights sum to one exactly
        let rest: f64 = strata[1..].iter().map(|(_, w)| w).sum();
        strata[0].1 = 1.0 - rest;
        Self::new(strata)
    }
}

/// `sigma = sum_x w_x sigma_x` over per-stratum profiles on a shared grid.
///
/// The reported trimming fraction is the weighted mean of the stratum fractions.
pub fn stratified_support(profiles: &[SupportProfile], weights: &StratumWeights) -> Result<SupportProfile> {
    let first = profiles.first().ok_or(Error::EmptySample)?;
    if profiles.len() != weights.strata().len() {
        return Err(Error::Config(format!(
            "{} profiles but {} stratum weights",
            profiles.len(),
            weights.strata().len()
        )));
    }
    if profiles.iter().any(|p| p.grid != first.grid) {
        return Err(Error::GridMismatch);
    }
    let n = first.sigma.len();
    let mut sigma = vec![0.0; n];
    let mut witness = first.witness.as_ref().map(|w| vec![0.0; w.len()]);
    let mut p_hat = 0.0;
    for (profile, (_, w)) in profiles.iter().zip(weights.strata()) {
        for (s, v) in sigma.iter_mut().zip(&profile.sigma) {
            *s += w * v;
        }
        match (&mut witness, &profile.witness) {
            (Some(acc), Some(x)) => acc.iter_mut().zip(x).for_each(|(a, v)| *a += w * v),
            _ => witness = None,
        }
        p_hat += w * profile.p.p_hat;
    }
    Ok(SupportProfile {
        grid: first.grid.clone(),
        sigma,
        variance: None,
        p: TrimFraction { p_hat: p_hat.clamp(f64::MIN_POSITIVE, 1.0), clipped: profiles.iter().any(|p| p.p.clipped) },
        witness,
    })
}

/// Covariate-stratified profile: per-stratum `p_hat` and trimmed means,
/// combined with control-selected stratum frequencies.
pub fn stratified_profile(data: &EmbeddedDataset, grid: &DirectionGrid, rule: TrimRule) -> Result<SupportProfile> {
    let weights = StratumWeights::from_control_selected(data)?;
    let profiles = weights
        .strata()
        .iter()
        .map(|(label, _)| {
            let cell = data.filter(|u| u.stratum.as_deref() == Some(label.as_str()));
            let p = estimate_p(&cell)?;
            support_profile_with(&cell, grid, p, rule)
        })
        .collect::<Result<Vec<_>>>()?;
    stratified_support(&profiles, &weights)
}

/// Support value under the contaminated-data model: upper trimmed mean of the
/// projections keeping the top `1 - lambda` mass.
pub fn contaminated_support(samples: &[f64], lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::BadLambda(lambda));
    }
    upper_trimmed_mean(samples, 1.0 - lambda)
}

/// Contaminated-data support profile of outcome rows over a grid.
pub fn contaminated_profile(rows: &[&[f64]], grid: &DirectionGrid, lambda: f64) -> Result<SupportProfile> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::BadLambda(lambda));
    }
    profile_from_rows(rows, grid, 1.0 - lambda, TrimRule::Fractional)
}
