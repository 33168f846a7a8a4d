//! Bootstrap inference for the identified set: resampled support profiles,
//! variance estimation, the sup-t statistic and its critical value, the
//! confidence region, and the joint region with the control mean.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{ceil_rank, dot};
use crate::error::{Error, Result};
use crate::grid::DirectionGrid;
use crate::region::{build_region, HalfspaceRegion};
use crate::rng::{stream_rng, DOMAIN_BOOTSTRAP, DOMAIN_VARIANCE};
use crate::selection::{
    estimate_mu0, estimate_p, support_profile_with, EmbeddedDataset, SupportProfile, TrimFraction, TrimRule,
};

/// Redraws allowed per replicate before giving up on a degenerate resample.
pub const MAX_REDRAWS: usize = 100;
/// Smallest admissible variance estimate.
pub const MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    /// `n` times the variance of a preliminary round of bootstrap replicates.
    #[default]
    Bootstrap,
    /// Delta-method plug-in for the trimmed mean with estimated trimming fraction.
    AnalyticPlugin,
}

impl std::str::FromStr for VarianceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bootstrap" => Ok(VarianceMode::Bootstrap),
            "analytic-plugin" => Ok(VarianceMode::AnalyticPlugin),
            other => Err(Error::Config(format!("unknown variance mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Replications `B` for the critical value.
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub variance_mode: VarianceMode,
    /// Replications of the preliminary variance round.
    pub variance_replications: usize,
    /// Re-estimate `p` on every resample.
    pub recompute_p: bool,
    pub rule: TrimRule,
    /// Also build the joint region with the control mean.
    pub joint: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replications: 300,
            alpha: 0.05,
            seed: 0,
            variance_mode: VarianceMode::Bootstrap,
            variance_replications: 200,
            recompute_p: true,
            rule: TrimRule::Fractional,
            joint: true,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("bootstrap replications must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.variance_mode == VarianceMode::Bootstrap && self.variance_replications < 2 {
            return Err(Error::Config("variance round needs at least 2 replications".into()));
        }
        Ok(())
    }
}

/// One bootstrap draw: resampled support values and control-selected mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub p: TrimFraction,
    pub sigma: Vec<f64>,
    pub control_mean: Vec<f64>,
}

/// Data prepared once for fast multinomial-weight bootstrap replicates.
///
/// Treated-selected projections are sorted once per direction; a replicate
/// only reweights them by resampling multiplicities.
struct Engine<'a> {
    data: &'a EmbeddedDataset,
    grid: &'a DirectionGrid,
    p: TrimFraction,
    recompute_p: bool,
    rule: TrimRule,
    /// Position in `data.units()` of every treated-selected unit.
    ts_units: Vec<usize>,
    /// Per direction: projections sorted descending with their treated-selected index.
    sorted: Vec<Vec<(f64, u32)>>,
    cs_units: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(data: &'a EmbeddedDataset, grid: &'a DirectionGrid, p: TrimFraction, recompute_p: bool, rule: TrimRule) -> Result<Self> {
        if grid.dim() != data.dim() {
            return Err(Error::DimensionMismatch { expected: data.dim(), got: grid.dim() });
        }
        let ts_units: Vec<usize> = (0..data.len()).filter(|&i| data.units()[i].treated && data.units()[i].selected).collect();
        let cs_units: Vec<usize> =
            (0..data.len()).filter(|&i| !data.units()[i].treated && data.units()[i].selected).collect();
        if ts_units.is_empty() {
            return Err(Error::EmptyCell("treated-selected"));
        }
        let outcomes: Vec<&[f64]> = ts_units.iter().map(|&i| data.units()[i].outcome.as_deref().expect("selected")).collect();
        let sorted = grid
            .directions()
            .par_iter()
            .map(|u| {
                let mut z: Vec<(f64, u32)> = outcomes.iter().enumerate().map(|(k, y)| (dot(u, y), k as u32)).collect();
                z.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                z
            })
            .collect();
        Ok(Self { data, grid, p, recompute_p, rule, ts_units, sorted, cs_units })
    }

    /// Multiplicities of a with-replacement resample of all units, redrawn
    /// while a required cell is empty.
    fn draw_counts(&self, seed: u64, domain: u64, b: usize) -> Result<Vec<u32>> {
        let n = self.data.len();
        let units = self.data.units();
        let mut rng = stream_rng(seed, domain, b as u64);
        for _ in 0..=MAX_REDRAWS {
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            let (mut n1, mut n0, mut n11, mut n01) = (0u32, 0u32, 0u32, 0u32);
            for (u, c) in units.iter().zip(&counts) {
                match (u.treated, u.selected) {
                    (true, true) => {
                        n1 += c;
                        n11 += c
                    }
                    (true, false) => n1 += c,
                    (false, true) => {
                        n0 += c;
                        n01 += c
                    }
                    (false, false) => n0 += c,
                }
            }
            let need_control = self.recompute_p || !self.cs_units.is_empty();
            if n1 > 0 && n11 > 0 && (!need_control || (n0 > 0 && n01 > 0)) {
                return Ok(counts);
            }
        }
        Err(Error::DegenerateResample(b))
    }

    fn replicate(&self, seed: u64, domain: u64, b: usize) -> Result<Replicate> {
        let counts = self.draw_counts(seed, domain, b)?;
        let units = self.data.units();
        let ts_counts: Vec<u32> = self.ts_units.iter().map(|&i| counts[i]).collect();
        let n11: u32 = ts_counts.iter().sum();
        let p = if self.recompute_p {
            let (mut n1, mut n0, mut n01) = (0u32, 0u32, 0u32);
            for (u, c) in units.iter().zip(&counts) {
                if u.treated {
                    n1 += c;
                } else {
                    n0 += c;
                    if u.selected {
                        n01 += c;
                    }
                }
            }
            TrimFraction::from_retention(n01 as f64 / n0 as f64, n11 as f64 / n1 as f64)?
        } else {
            self.p
        };
        let sigma = self.sorted.iter().map(|z| weighted_trim(z, &ts_counts, n11, p.p_hat, self.rule)).collect();

        let mut control_mean = vec![0.0; self.data.dim()];
        let mut n01 = 0u32;
        for &i in &self.cs_units {
            let c = counts[i];
            if c > 0 {
                n01 += c;
                let y = units[i].outcome.as_deref().expect("selected");
                for (m, v) in control_mean.iter_mut().zip(y) {
                    *m += c as f64 * v;
                }
            }
        }
        if n01 > 0 {
            control_mean.iter_mut().for_each(|m| *m /= n01 as f64);
        }
        Ok(Replicate { p, sigma, control_mean })
    }

    fn replicates(&self, seed: u64, domain: u64, count: usize) -> Result<Vec<Replicate>> {
        (0..count).into_par_iter().map(|b| self.replicate(seed, domain, b)).collect()
    }

    fn profile_of(&self, r: Replicate) -> SupportProfile {
        SupportProfile { grid: self.grid.clone(), sigma: r.sigma, variance: None, p: r.p, witness: None }
    }
}

/// Trimmed mean of descending-sorted projections under integer multiplicities.
fn weighted_trim(sorted: &[(f64, u32)], counts: &[u32], total: u32, keep: f64, rule: TrimRule) -> f64 {
    match rule {
        TrimRule::Fractional => {
            let target = total as f64 * keep;
            let mut remaining = target;
            let mut acc = 0.0;
            for &(v, k) in sorted {
                let c = counts[k as usize] as f64;
                if c == 0.0 {
                    continue;
                }
                if c >= remaining {
                    acc += remaining * v;
                    break;
                }
                acc += c * v;
                remaining -= c;
            }
            acc / target
        }
        TrimRule::Indicator => {
            let rank_from_top = ceil_rank(total as usize, keep);
            let mut seen = 0usize;
            let mut threshold = f64::NEG_INFINITY;
            for &(v, k) in sorted {
                seen += counts[k as usize] as usize;
                if seen >= rank_from_top {
                    threshold = v;
                    break;
                }
            }
            let (mut acc, mut mass) = (0.0, 0.0);
            for &(v, k) in sorted {
                if v < threshold {
                    break;
                }
                let c = counts[k as usize] as f64;
                acc += c * v;
                mass += c;
            }
            acc / mass
        }
    }
}

/// `B` bootstrap support profiles. Replicate `b` depends only on `(seed, b)`.
pub fn bootstrap_profiles(
    data: &EmbeddedDataset,
    grid: &DirectionGrid,
    recompute_p: bool,
    replications: usize,
    seed: u64,
) -> Result<Vec<SupportProfile>> {
    if replications == 0 {
        return Ok(Vec::new());
    }
    let p = estimate_p(data)?;
    let engine = Engine::new(data, grid, p, recompute_p, TrimRule::Fractional)?;
    Ok(engine.replicates(seed, DOMAIN_BOOTSTRAP, replications)?.into_iter().map(|r| engine.profile_of(r)).collect())
}

fn sample_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)
}

fn check_variance(v: &[f64], what: &str) -> Result<()> {
    if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(**x >= MIN_VARIANCE)) {
        return Err(Error::DegenerateVariance(format!("{what} variance {x:e} at index {i}")));
    }
    Ok(())
}

/// Delta-method variance of `sqrt(n) (sigma_hat(u) - sigma(u))` for one direction:
/// the trimmed-mean term plus the term from estimating `p`.
fn plugin_variance(sorted_desc: &[f64], p: f64, n: usize, n1: usize, n0: usize, n01: usize) -> f64 {
    let n11 = sorted_desc.len();
    let mass = n11 as f64 * p;
    let full = (mass.floor() as usize).min(n11);
    let frac = mass - full as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for z in &sorted_desc[..full] {
        s1 += z;
        s2 += z * z;
    }
    let boundary = if full < n11 { sorted_desc[full] } else { sorted_desc[n11 - 1] };
    if full < n11 && frac > 0.0 {
        s1 += frac * boundary;
        s2 += frac * boundary * boundary;
    }
    let sigma = s1 / mass;
    let tail_var = (s2 / mass - sigma * sigma).max(0.0);
    let trimmed_term = (tail_var + (1.0 - p) * (boundary - sigma).powi(2)) / p;
    let v_upper = trimmed_term * n as f64 / n11 as f64;

    let var_p = p_variance(p, n, n1, n0, n11, n01);
    let dsigma_dp = (boundary - sigma) / p;
    v_upper + dsigma_dp * dsigma_dp * var_p
}

/// Asymptotic variance of `sqrt(n) (p_hat - p)`.
fn p_variance(p: f64, n: usize, n1: usize, n0: usize, n11: usize, n01: usize) -> f64 {
    let (pi1, pi0) = (n1 as f64 / n as f64, n0 as f64 / n as f64);
    let (s_1, s_0) = (n11 as f64 / n1 as f64, n01 as f64 / n0 as f64);
    p * p * ((1.0 - s_0) / (s_0 * pi0) + (1.0 - s_1) / (s_1 * pi1))
}

/// Support-function and control-mean variances.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    /// `V_sigma(u)` per grid direction.
    pub sigma: Vec<f64>,
    /// `V_0(j)` per coordinate of the control-selected mean.
    pub control: Vec<f64>,
}

fn variance_estimate(data: &EmbeddedDataset, grid: &DirectionGrid, config: &BootstrapConfig) -> Result<VarianceEstimate> {
    let n = data.len();
    if data.n_treated_selected() < 2 {
        return Err(Error::DegenerateVariance("fewer than two treated-selected units".into()));
    }
    let p = estimate_p(data)?;
    match config.variance_mode {
        VarianceMode::Bootstrap => {
            let engine = Engine::new(data, grid, p, config.recompute_p, config.rule)?;
            let reps = engine.replicates(config.seed, DOMAIN_VARIANCE, config.variance_replications)?;
            let sigma = (0..grid.len())
                .map(|i| n as f64 * sample_variance(reps.iter().map(|r| r.sigma[i])))
                .collect();
            let control = (0..data.dim())
                .map(|j| n as f64 * sample_variance(reps.iter().map(|r| r.control_mean[j])))
                .collect();
            Ok(VarianceEstimate { sigma, control })
        }
        VarianceMode::AnalyticPlugin => {
            let (n1, n0, n01) = (data.n_treated(), data.n_control(), data.n_control_selected());
            let rows = data.selected_outcomes(true);
            let sd_p = (p_variance(p.p_hat, n, n1, n0, rows.len(), n01) / n as f64).sqrt();
            if 1.0 - p.p_hat < 2.0 * sd_p {
                log::warn!(
                    "p_hat = {:.4} is within two standard errors of 1; the delta-method variance is unreliable there",
                    p.p_hat
                );
            }
            let sigma = grid
                .directions()
                .par_iter()
                .map(|u| {
                    let mut z: Vec<f64> = rows.iter().map(|y| dot(u, y)).collect();
                    z.sort_by(|a, b| b.total_cmp(a));
                    plugin_variance(&z, p.p_hat, n, n1, n0, n01)
                })
                .collect();
            let controls = data.selected_outcomes(false);
            let control = if controls.len() < 2 {
                vec![0.0; data.dim()]
            } else {
                (0..data.dim())
                    .map(|j| sample_variance(controls.iter().map(|y| y[j])) * n as f64 / controls.len() as f64)
                    .collect()
            };
            Ok(VarianceEstimate { sigma, control })
        }
    }
}

/// Per-direction variance `V_sigma(u)` of the support-function estimator.
pub fn variance_profile(data: &EmbeddedDataset, grid: &DirectionGrid, config: &BootstrapConfig) -> Result<Vec<f64>> {
    let v = variance_estimate(data, grid, config)?;
    check_variance(&v.sigma, "support-function")?;
    Ok(v.sigma)
}

/// `T(b) = max_u (sigma_b(u) - sigma_hat(u)) / sqrt(V(u) / n)`.
pub fn sup_t_statistics(original: &SupportProfile, boots: &[SupportProfile], variance: &[f64], n: usize) -> Result<Vec<f64>> {
    if variance.len() != original.sigma.len() {
        return Err(Error::GridMismatch);
    }
    boots
        .iter()
        .map(|b| {
            if b.grid != original.grid {
                return Err(Error::GridMismatch);
            }
            Ok(sup_t(&b.sigma, &original.sigma, variance, n))
        })
        .collect()
}

fn sup_t(boot: &[f64], original: &[f64], variance: &[f64], n: usize) -> f64 {
    boot.iter()
        .zip(original)
        .zip(variance)
        .map(|((b, s), v)| (b - s) / (v / n as f64).sqrt())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The `ceil(B (1 - alpha))`-th order statistic of the statistics.
pub fn critical_value(t_stats: &[f64], alpha: f64) -> Result<f64> {
    if t_stats.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = t_stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[ceil_rank(sorted.len(), 1.0 - alpha) - 1])
}

/// Offsets `sigma_hat(u) + cv sqrt(V(u) / n)`.
pub fn confidence_region(profile: &SupportProfile, variance: &[f64], cv: f64, n: usize) -> Result<HalfspaceRegion> {
    if !cv.is_finite() {
        return Err(Error::DegenerateVariance(format!("critical value {cv}")));
    }
    if variance.len() != profile.sigma.len() {
        return Err(Error::GridMismatch);
    }
    let base = build_region(profile)?;
    let offsets = profile
        .sigma
        .iter()
        .zip(variance)
        .map(|(s, v)| s + cv * (v / n as f64).sqrt())
        .collect();
    base.with_offsets(offsets)
}

/// Joint confidence statement for the control mean and the identified set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRegion {
    pub critical_value: f64,
    /// Control-selected embedded mean.
    pub center: Vec<f64>,
    pub control_variance: Vec<f64>,
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
    pub region: HalfspaceRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub n: usize,
    pub p: TrimFraction,
    pub profile: SupportProfile,
    pub variance: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub critical_value: f64,
    pub region: HalfspaceRegion,
    pub joint: Option<JointRegion>,
}

/// Full inference: estimate, variance, bootstrap, critical value and regions.
/// A pure function of `(data, grid, config)`.
pub fn infer(data: &EmbeddedDataset, grid: &DirectionGrid, config: &BootstrapConfig) -> Result<InferenceResult> {
    config.validate()?;
    let n = data.len();
    let p = estimate_p(data)?;
    let mut profile = support_profile_with(data, grid, p, config.rule)?;
    let variance = variance_estimate(data, grid, config)?;
    check_variance(&variance.sigma, "support-function")?;
    profile.variance = Some(variance.sigma.clone());

    let engine = Engine::new(data, grid, p, config.recompute_p, config.rule)?;
    let reps = engine.replicates(config.seed, DOMAIN_BOOTSTRAP, config.replications)?;
    let t_stats: Vec<f64> = reps.iter().map(|r| sup_t(&r.sigma, &profile.sigma, &variance.sigma, n)).collect();
    let cv = critical_value(&t_stats, config.alpha)?;
    let region = confidence_region(&profile, &variance.sigma, cv, n)?;

    let joint = if config.joint {
        let center = estimate_mu0(data)?.into_inner();
        check_variance(&variance.control, "control-mean")?;
        let joint_t: Vec<f64> = reps
            .iter()
            .zip(&t_stats)
            .map(|(r, t)| {
                let box_t = r
                    .control_mean
                    .iter()
                    .zip(&center)
                    .zip(&variance.control)
                    .map(|((b, c), v)| (b - c).abs() / (v / n as f64).sqrt())
                    .fold(f64::NEG_INFINITY, f64::max);
                box_t.max(*t)
            })
            .collect();
        let jcv = critical_value(&joint_t, config.alpha)?;
        let half: Vec<f64> = variance.control.iter().map(|v| jcv * (v / n as f64).sqrt()).collect();
        Some(JointRegion {
            critical_value: jcv,
            box_lower: center.iter().zip(&half).map(|(c, h)| c - h).collect(),
            box_upper: center.iter().zip(&half).map(|(c, h)| c + h).collect(),
            center,
            control_variance: variance.control,
            region: confidence_region(&profile, &variance.sigma, jcv, n)?,
        })
    } else {
        None
    };

    Ok(InferenceResult { n, p, variance: variance.sigma, profile, t_stats, critical_value: cv, region, joint })
}

/// Joint region `(control-mean box, enlarged region)`.
pub fn joint_region(data: &EmbeddedDataset, grid: &DirectionGrid, config: &BootstrapConfig) -> Result<JointRegion> {
    let config = BootstrapConfig { joint: true, ..config.clone() };
    Ok(infer(data, grid, &config)?.joint.expect("joint requested"))
}
