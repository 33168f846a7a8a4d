//! Benchmark fixtures.

use objbounds::design::{generate_design, DesignSpec};
use objbounds::io::Embedding;
use objbounds::{DirectionGrid, EmbeddedDataset, GridScheme, ProbabilityGrid};

/// Embedded atus-like compositions with retention (0.90, 0.85).
pub fn compositional(n: usize, seed: u64) -> EmbeddedDataset {
    generate_design(&DesignSpec::atus_like(n, 0.90, 0.85), seed)
        .and_then(|raw| raw.embed(&Embedding::Aitchison))
        .expect("atus-like design embeds")
}

/// Sleep-like quantile curves on the 17-point grid.
pub fn distributional(n: usize, seed: u64) -> EmbeddedDataset {
    let grid = ProbabilityGrid::regular(0.10, 0.90, 0.05).expect("valid grid");
    generate_design(&DesignSpec::sleep_like(n), seed)
        .and_then(|raw| raw.embed(&Embedding::Quantile(grid)))
        .expect("sleep-like design embeds")
}

pub fn grid(d: usize, n: usize) -> DirectionGrid {
    DirectionGrid::new(d, GridScheme::auto(d), n, 0).expect("valid grid")
}
