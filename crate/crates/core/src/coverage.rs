//! Monte Carlo coverage of bootstrap confidence regions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DirectionGrid;
use crate::inference::{infer, BootstrapConfig};
use crate::rng::{derive_seed, DOMAIN_SIMULATION};
use crate::selection::EmbeddedDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub replications: usize,
    pub covered: usize,
    pub coverage: f64,
    /// Mean width of the confidence region's projection on each axis.
    pub mean_widths: Vec<f64>,
    /// Mean critical value.
    pub mean_critical_value: f64,
}

/// Runs `replications` inferences on datasets from `make_data(r)` and counts
/// how often the region dominates the true support function on every grid
/// direction. Replication `r` bootstraps with a seed derived from
/// `(config.seed, r)`.
pub fn coverage_simulation<F>(
    make_data: F,
    truth_sigma: &[f64],
    grid: &DirectionGrid,
    replications: usize,
    config: &BootstrapConfig,
) -> Result<CoverageSummary>
where
    F: Fn(usize) -> Result<EmbeddedDataset> + Sync,
{
    if truth_sigma.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    if replications == 0 {
        return Err(Error::Config("coverage needs at least one replication".into()));
    }
    let outcomes = (0..replications)
        .into_par_iter()
        .map(|r| {
            let data = make_data(r)?;
            let cfg = BootstrapConfig { seed: derive_seed(config.seed, DOMAIN_SIMULATION, r as u64), ..config.clone() };
            let result = infer(&data, grid, &cfg)?;
            let covered = truth_sigma.iter().zip(result.region.offsets()).all(|(t, o)| t <= o);
            let widths: Vec<f64> = result.region.project_all()?.iter().map(|(lo, hi)| hi - lo).collect();
            Ok((covered, widths, result.critical_value))
        })
        .collect::<Result<Vec<_>>>()?;
    let covered = outcomes.iter().filter(|o| o.0).count();
    let d = grid.dim();
    let mut mean_widths = vec![0.0; d];
    for (_, w, _) in &outcomes {
        mean_widths.iter_mut().zip(w).for_each(|(m, x)| *m += x / replications as f64);
    }
    Ok(CoverageSummary {
        replications,
        covered,
        coverage: covered as f64 / replications as f64,
        mean_widths,
        mean_critical_value: outcomes.iter().map(|o| o.2).sum::<f64>() / replications as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{generate_design, truth_profile, DesignSpec};
    use crate::grid::GridScheme;
    use crate::io::Embedding;

    #[test]
    fn scalar_coverage_is_reasonable() {
        let spec = DesignSpec::custom(400, 0.9, 0.8);
        let grid = DirectionGrid::new(1, GridScheme::EqualAngle, 2, 0).unwrap();
        let truth = truth_profile(&spec, &grid, 400_000, 99, None).unwrap();
        let config = BootstrapConfig { replications: 200, variance_replications: 100, seed: 4, ..Default::default() };
        let make = |r: usize| generate_design(&spec, 1000 + r as u64)?.embed(&Embedding::Scalar);
        let s = coverage_simulation(make, &truth.sigma, &grid, 60, &config).unwrap();
        assert!(s.coverage >= 0.8, "{s:?}");
        assert!(s.mean_widths[0] > 0.0);
    }
}
