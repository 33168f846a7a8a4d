//! Finite direction grids on the unit sphere.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embed::norm;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, DOMAIN_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    /// Equally spaced angles (d <= 2).
    EqualAngle,
    /// Fibonacci lattice on the 2-sphere (d = 3).
    Fibonacci,
    /// Normalized standard Gaussian draws (any d).
    Gaussian,
    /// Caller-supplied directions.
    Custom,
}

impl GridScheme {
    /// Default scheme for dimension `d`.
    pub fn auto(d: usize) -> Self {
        match d {
            0..=2 => GridScheme::EqualAngle,
            3 => GridScheme::Fibonacci,
            _ => GridScheme::Gaussian,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridScheme::EqualAngle => "equal-angle",
            GridScheme::Fibonacci => "fibonacci",
            GridScheme::Gaussian => "gaussian",
            GridScheme::Custom => "custom",
        }
    }
}

impl std::str::FromStr for GridScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal-angle" => Ok(GridScheme::EqualAngle),
            "fibonacci" => Ok(GridScheme::Fibonacci),
            "gaussian" => Ok(GridScheme::Gaussian),
            other => Err(Error::Config(format!("unknown grid scheme {other:?}"))),
        }
    }
}

/// Unit directions on `S^{d-1}`. Always contains `+e_j` and `-e_j` for every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    dim: usize,
    directions: Vec<Vec<f64>>,
    scheme: GridScheme,
    seed: u64,
}

fn snap_to_axis(v: &mut [f64]) {
    if let Some(j) = v.iter().position(|c| (c.abs() - 1.0).abs() <= 1e-12) {
        let sign = v[j].signum();
        if v.iter().enumerate().all(|(i, c)| i == j || c.abs() <= 1e-12) {
            v.iter_mut().for_each(|c| *c = 0.0);
            v[j] = sign;
        }
    }
}

fn axis(d: usize, j: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[j] = sign;
    e
}

impl DirectionGrid {
    /// Builds `n` directions in `R^d` by `scheme` and appends any missing axis directions.
    pub fn new(d: usize, scheme: GridScheme, n: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::BadDimension("dimension must be at least 1".into()));
        }
        if n < 2 * d {
            return Err(Error::BadDimension(format!("need at least {} directions in dimension {d}, got {n}", 2 * d)));
        }
        let raw: Vec<Vec<f64>> = if d == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            match scheme {
                GridScheme::EqualAngle if d == 2 => (0..n)
                    .map(|i| {
                        let (s, c) = (std::f64::consts::TAU * i as f64 / n as f64).sin_cos();
                        vec![c, s]
                    })
                    .collect(),
                GridScheme::Fibonacci if d == 3 => fibonacci_lattice(n),
                GridScheme::Gaussian => (0..n).map(|i| gaussian_direction(d, seed, i as u64)).collect(),
                GridScheme::Custom => {
                    return Err(Error::BadDimension("custom grids are built with from_directions".into()))
                }
                other => {
                    return Err(Error::BadDimension(format!(
                        "scheme {} does not apply in dimension {d}",
                        other.name()
                    )))
                }
            }
        };
        Ok(Self::assemble(d, raw, scheme, seed))
    }

    /// Grid from explicit directions; each is normalized and axis directions are appended.
    pub fn from_directions(d: usize, directions: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::BadDimension("dimension must be at least 1".into()));
        }
        let mut raw = Vec::with_capacity(directions.len());
        for v in directions {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            let n = norm(&v);
            if !(n > 1e-12) || !n.is_finite() {
                return Err(Error::BadDimension("direction has zero norm".into()));
            }
            raw.push(v.into_iter().map(|c| c / n).collect());
        }
        Ok(Self::assemble(d, raw, GridScheme::Custom, 0))
    }

    fn assemble(d: usize, mut raw: Vec<Vec<f64>>, scheme: GridScheme, seed: u64) -> Self {
        raw.iter_mut().for_each(|v| snap_to_axis(v));
        for j in 0..d {
            for sign in [1.0, -1.0] {
                let e = axis(d, j, sign);
                if !raw.contains(&e) {
                    raw.push(e);
                }
            }
        }
        Self { dim: d, directions: raw, scheme, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of `+e_axis` (`positive`) or `-e_axis` in the grid.
    pub fn axis_index(&self, axis: usize, positive: bool) -> Option<usize> {
        if axis >= self.dim {
            return None;
        }
        let e = self::axis(self.dim, axis, if positive { 1.0 } else { -1.0 });
        self.directions.iter().position(|v| *v == e)
    }
}

fn fibonacci_lattice(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            let v = [r * c, r * s, z];
            let nv = norm(&v);
            v.iter().map(|x| x / nv).collect()
        })
        .collect()
}

fn gaussian_direction(d: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, DOMAIN_GRID, index);
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_are_exact_axes() {
        let g = DirectionGrid::new(2, GridScheme::EqualAngle, 4, 0).unwrap();
        assert_eq!(
            g.directions(),
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]]
        );
    }

    #[test]
    fn fibonacci_has_axes_appended_and_unit_norms() {
        let g = DirectionGrid::new(3, GridScheme::Fibonacci, 100, 0).unwrap();
        assert_eq!(g.len(), 106);
        for v in g.directions() {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        for j in 0..3 {
            assert!(g.axis_index(j, true).is_some());
            assert!(g.axis_index(j, false).is_some());
        }
    }

    #[test]
    fn gaussian_grid_is_deterministic() {
        let a = DirectionGrid::new(5, GridScheme::Gaussian, 50, 42).unwrap();
        let b = DirectionGrid::new(5, GridScheme::Gaussian, 50, 42).unwrap();
        let c = DirectionGrid::new(5, GridScheme::Gaussian, 50, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 60);
    }

    #[test]
    fn bad_dimensions() {
        assert!(matches!(DirectionGrid::new(0, GridScheme::Gaussian, 4, 0), Err(Error::BadDimension(_))));
        assert!(matches!(DirectionGrid::new(3, GridScheme::Fibonacci, 5, 0), Err(Error::BadDimension(_))));
        assert!(matches!(DirectionGrid::new(4, GridScheme::Fibonacci, 50, 0), Err(Error::BadDimension(_))));
    }

    #[test]
    fn scalar_grid() {
        let g = DirectionGrid::new(1, GridScheme::Gaussian, 10, 0).unwrap();
        assert_eq!(g.directions(), &[vec![1.0], vec![-1.0]]);
    }
}
