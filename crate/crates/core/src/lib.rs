//! Sharp bounds on treatment effects for random-object outcomes under sample
//! selection.
//!
//! Outcomes living in a metric space (compositions, distributions, intervals,
//! covariance matrices, graph Laplacians) are mapped by an isometric
//! embedding into a Euclidean space. There the identified set for the mean
//! outcome of always-observed treated units is a convex set whose support
//! function is an upper-trimmed mean of projections. This crate estimates that
//! set on a finite direction grid, builds bootstrap confidence regions, and
//! turns them into effect summaries.
//!
//! ```
//! use objbounds::{DirectionGrid, EmbeddedDataset, GridScheme, Unit};
//! use objbounds::{build_region, estimate_p, support_profile};
//!
//! let units = vec![
//!     Unit::new("a", true, Some(vec![1.0])),
//!     Unit::new("b", true, Some(vec![2.0])),
//!     Unit::new("c", true, Some(vec![3.0])),
//!     Unit::new("d", true, Some(vec![4.0])),
//!     Unit::new("e", false, Some(vec![0.0])),
//!     Unit::new("f", false, None),
//! ];
//! let data = EmbeddedDataset::new(units, 1).unwrap();
//! let p = estimate_p(&data).unwrap();
//! assert_eq!(p.p_hat, 0.5);
//! let grid = DirectionGrid::new(1, GridScheme::EqualAngle, 2, 0).unwrap();
//! let region = build_region(&support_profile(&data, &grid, p).unwrap()).unwrap();
//! assert_eq!(region.project_interval(0).unwrap(), (1.5, 3.5));
//! ```

pub mod coverage;
pub mod design;
pub mod effects;
pub mod embed;
pub mod error;
pub mod grid;
pub mod inference;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod region;
pub mod report;
pub mod rng;
pub mod selection;

pub use embed::*;
pub use error::{EmbedError, Error, Result};
pub use grid::{DirectionGrid, GridScheme};
pub use inference::{
    bootstrap_profiles, confidence_region, critical_value, infer, joint_region, sup_t_statistics, variance_profile,
    BootstrapConfig, InferenceResult, JointRegion, VarianceMode,
};
pub use oracle::{lp_attainable_point, lp_support_oracle};
pub use region::{build_region, vertices_2d, HalfspaceRegion, Polygon2D};
pub use selection::*;
