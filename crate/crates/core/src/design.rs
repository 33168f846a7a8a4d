//! Synthetic experimental designs with attrition.
//!
//! Every unit draws its assignment, its selection uniform and its outcome
//! from its own random stream, so unit `i` is the same across designs that
//! share a seed. Selection is `U_i < retention(D_i)`: lowering a retention
//! rate only removes units.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embed::{aitchison_embed, quantile_embed, CompositionPoint, ProbabilityGrid};
use crate::error::{Error, Result};
use crate::grid::DirectionGrid;
use crate::io::{RawDataset, RawUnit, Space};
use crate::rng::{stream_rng, DOMAIN_DESIGN, DOMAIN_SIMULATION};
use crate::selection::{profile_from_rows, SupportProfile, TrimFraction, TrimRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignName {
    /// Three-part time-use compositions from a logistic-normal law.
    AtusLike,
    /// Twenty nightly sleep durations per unit from a unit-specific normal.
    SleepLike,
    /// Scalar normal outcomes.
    Custom,
}

impl std::str::FromStr for DesignName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atus-like" => Ok(DesignName::AtusLike),
            "sleep-like" => Ok(DesignName::SleepLike),
            "custom" => Ok(DesignName::Custom),
            other => Err(Error::Config(format!("unknown design {other:?}"))),
        }
    }
}

/// Retention rates `P(S = 1 | D = 1)` and `P(S = 1 | D = 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Retention {
    pub treated: f64,
    pub control: f64,
}

/// Missing fields in a serialized design take the defaults of its named preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "DesignFields")]
pub struct DesignSpec {
    pub name: DesignName,
    pub n: usize,
    pub retention: Retention,
    /// Share of units assigned to treatment.
    pub treated_share: f64,
    /// Treatment shift: in additive log-ratio coordinates (atus-like), hours
    /// (sleep-like) or outcome units (custom).
    pub effect: Vec<f64>,
    /// Additive log-ratio mean `(ln(x1/x3), ln(x2/x3))` (atus-like).
    pub alr_mean: [f64; 2],
    /// Additive log-ratio covariance, row-major (atus-like).
    pub alr_cov: [f64; 4],
    /// Mean and between-unit sd of unit locations (sleep-like).
    pub location: (f64, f64),
    /// Median and log-sd of unit scales (sleep-like).
    pub scale: (f64, f64),
    /// Draws per unit (sleep-like).
    pub draws: usize,
    /// Mean and sd (custom).
    pub normal: (f64, f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFields {
    #[serde(default = "default_name")]
    name: DesignName,
    n: Option<usize>,
    retention: Option<Retention>,
    treated_share: Option<f64>,
    effect: Option<Vec<f64>>,
    alr_mean: Option<[f64; 2]>,
    alr_cov: Option<[f64; 4]>,
    location: Option<(f64, f64)>,
    scale: Option<(f64, f64)>,
    draws: Option<usize>,
    normal: Option<(f64, f64)>,
}

fn default_name() -> DesignName {
    DesignName::AtusLike
}

impl From<DesignFields> for DesignSpec {
    fn from(f: DesignFields) -> Self {
        let base = Self::preset(f.name);
        Self {
            name: f.name,
            n: f.n.unwrap_or(base.n),
            retention: f.retention.unwrap_or(base.retention),
            treated_share: f.treated_share.unwrap_or(base.treated_share),
            effect: f.effect.unwrap_or(base.effect),
            alr_mean: f.alr_mean.unwrap_or(base.alr_mean),
            alr_cov: f.alr_cov.unwrap_or(base.alr_cov),
            location: f.location.unwrap_or(base.location),
            scale: f.scale.unwrap_or(base.scale),
            draws: f.draws.unwrap_or(base.draws),
            normal: f.normal.unwrap_or(base.normal),
        }
    }
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self::atus_like(1397, 0.90, 0.85)
    }
}

impl DesignSpec {
    /// Default design for each name.
    pub fn preset(name: DesignName) -> Self {
        match name {
            DesignName::AtusLike => Self::atus_like(1397, 0.90, 0.85),
            DesignName::SleepLike => Self::sleep_like(302),
            DesignName::Custom => Self::custom(1000, 0.90, 0.85),
        }
    }

    /// Logistic-normal compositions centered at shares (0.63, 0.295, 0.075).
    pub fn atus_like(n: usize, treated_retention: f64, control_retention: f64) -> Self {
        Self {
            name: DesignName::AtusLike,
            n,
            retention: Retention { treated: treated_retention, control: control_retention },
            treated_share: 0.5,
            effect: vec![0.0, 0.0],
            alr_mean: [(0.63f64 / 0.075).ln(), (0.295f64 / 0.075).ln()],
            alr_cov: [0.30, 0.20, 0.20, 0.45],
            location: (6.0, 0.7),
            scale: (0.9, 0.3),
            draws: 20,
            normal: (0.0, 1.0),
        }
    }

    /// Nightly sleep hours with attrition 10.7% (treated) and 12.5% (control).
    pub fn sleep_like(n: usize) -> Self {
        Self {
            name: DesignName::SleepLike,
            retention: Retention { treated: 1.0 - 0.107, control: 1.0 - 0.125 },
            effect: vec![0.0],
            ..Self::atus_like(n, 1.0, 1.0)
        }
    }

    /// Scalar standard normal outcomes.
    pub fn custom(n: usize, treated_retention: f64, control_retention: f64) -> Self {
        Self { name: DesignName::Custom, effect: vec![0.0], ..Self::atus_like(n, treated_retention, control_retention) }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.retention;
        for v in [r.treated, r.control] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("retention rates must lie in (0, 1], got {v}")));
            }
        }
        if r.treated < r.control {
            log::warn!("control retention exceeds treated retention; the trimming fraction will be clipped");
        }
        if !(self.treated_share > 0.0 && self.treated_share < 1.0) {
            return Err(Error::Config("treated share must lie in (0, 1)".into()));
        }
        let effect_len = if self.name == DesignName::AtusLike { 2 } else { 1 };
        if self.effect.len() != effect_len {
            return Err(Error::Config(format!("effect needs {effect_len} coordinates")));
        }
        if self.name == DesignName::SleepLike && self.draws == 0 {
            return Err(Error::Config("sleep-like design needs at least one draw per unit".into()));
        }
        let [a, b, _, d] = self.alr_cov;
        if !(a > 0.0 && a * d - b * b > 0.0) {
            return Err(Error::Config("alr covariance must be positive definite".into()));
        }
        Ok(())
    }

    /// Population trimming fraction `control / treated` retention.
    pub fn p_true(&self) -> f64 {
        (self.retention.control / self.retention.treated).min(1.0)
    }

    pub fn space(&self) -> Space {
        match self.name {
            DesignName::AtusLike => Space::Compositional,
            DesignName::SleepLike => Space::Distribution,
            DesignName::Custom => Space::Scalar,
        }
    }

    fn cholesky(&self) -> [f64; 3] {
        let [a, b, _, d] = self.alr_cov;
        let l11 = a.sqrt();
        let l21 = b / l11;
        [l11, l21, (d - l21 * l21).sqrt()]
    }

    /// One outcome draw; `treated` applies the effect.
    fn outcome<R: Rng>(&self, rng: &mut R, treated: bool) -> Vec<f64> {
        let shift = |j: usize| if treated { self.effect[j] } else { 0.0 };
        match self.name {
            DesignName::AtusLike => {
                let [l11, l21, l22] = self.cholesky();
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let a1 = self.alr_mean[0] + shift(0) + l11 * z1;
                let a2 = self.alr_mean[1] + shift(1) + l21 * z1 + l22 * z2;
                let m = a1.max(a2).max(0.0);
                let w = [(a1 - m).exp(), (a2 - m).exp(), (-m).exp()];
                let total: f64 = w.iter().sum();
                let mut parts: Vec<f64> = w.iter().map(|x| x / total).collect();
                // keep the closure exact in floating point
                parts[0] = 1.0 - parts[1] - parts[2];
                parts
            }
            DesignName::SleepLike => {
                let loc = self.location.0 + shift(0) + self.location.1 * rng.sample::<f64, _>(StandardNormal);
                let sd = self.scale.0 * (self.scale.1 * rng.sample::<f64, _>(StandardNormal)).exp();
                let night = Normal::new(loc, sd).expect("finite scale");
                (0..self.draws).map(|_| night.sample(rng)).collect()
            }
            DesignName::Custom => {
                vec![self.normal.0 + shift(0) + self.normal.1 * rng.sample::<f64, _>(StandardNormal)]
            }
        }
    }
}

/// Draws a dataset from the design. Deterministic in `(spec, seed)`.
pub fn generate_design(spec: &DesignSpec, seed: u64) -> Result<RawDataset> {
    spec.validate()?;
    let units = (0..spec.n)
        .map(|i| {
            let mut rng = stream_rng(seed, DOMAIN_DESIGN, i as u64);
            let treated = rng.random::<f64>() < spec.treated_share;
            let u: f64 = rng.random();
            let outcome = spec.outcome(&mut rng, treated);
            let retention = if treated { spec.retention.treated } else { spec.retention.control };
            let selected = u < retention;
            RawUnit {
                id: format!("u{}", i + 1),
                treated,
                selected,
                values: if selected { outcome } else { Vec::new() },
                covariate: None,
            }
        })
        .collect();
    let width = match spec.name {
        DesignName::AtusLike => 3,
        _ => 1,
    };
    Ok(RawDataset { space: spec.space(), width, covariate: None, units })
}

/// Large-sample outcome draws in embedded coordinates: clr for atus-like,
/// quantile curves on `qgrid` for sleep-like, the value for custom.
pub fn embedded_draws(spec: &DesignSpec, treated: bool, draws: usize, seed: u64, qgrid: Option<&ProbabilityGrid>) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    use rayon::prelude::*;
    (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, DOMAIN_SIMULATION, i as u64);
            let y = spec.outcome(&mut rng, treated);
            match spec.name {
                DesignName::AtusLike => Ok(aitchison_embed(&CompositionPoint::new(y)?)?.0),
                DesignName::SleepLike => {
                    let g = qgrid.ok_or_else(|| Error::Config("sleep-like design needs a probability grid".into()))?;
                    Ok(quantile_embed(&y, g)?.values)
                }
                DesignName::Custom => Ok(y),
            }
        })
        .collect()
}

/// Plug-in support profile of the population identified set: the true
/// trimming fraction applied to `draws` treated outcomes.
pub fn truth_profile(spec: &DesignSpec, grid: &DirectionGrid, draws: usize, seed: u64, qgrid: Option<&ProbabilityGrid>) -> Result<SupportProfile> {
    let rows = embedded_draws(spec, true, draws, seed, qgrid)?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let mut profile = profile_from_rows(&refs, grid, spec.p_true(), TrimRule::Fractional)?;
    profile.p = TrimFraction::new(spec.p_true())?;
    Ok(profile)
}

/// Large-sample control mean in embedded coordinates.
pub fn truth_control_mean(spec: &DesignSpec, draws: usize, seed: u64, qgrid: Option<&ProbabilityGrid>) -> Result<Vec<f64>> {
    let rows = embedded_draws(spec, false, draws, seed, qgrid)?;
    let d = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; d];
    for r in &rows {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
    Ok(mean)
}
