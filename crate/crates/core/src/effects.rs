//! Treatment-effect summaries: embedded effect regions, coordinate and
//! decoded projections, geodesic paths, distributional bands and the naive
//! componentwise comparison.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embed::{aitchison_inverse, dot, helmert_basis, norm, ObjectSpace, ProbabilityGrid};
use crate::error::{Error, Result};
use crate::region::{HalfspaceRegion, Polygon2D};
use crate::rng::{stream_rng, DOMAIN_HIT_AND_RUN};
use crate::selection::{upper_trimmed_mean, TrimFraction};

/// The control mean as a point or as a coordinatewise confidence box.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlMean<'a> {
    Point(&'a [f64]),
    Box { lower: &'a [f64], upper: &'a [f64] },
}

/// Region of embedded differences `v - mu0` for `v` in `region`.
pub fn embedded_effect_region(region: &HalfspaceRegion, mu0: ControlMean<'_>) -> Result<HalfspaceRegion> {
    match mu0 {
        ControlMean::Point(v) => region.minkowski_diff_point(v),
        ControlMean::Box { lower, upper } => region.minkowski_diff_box(lower, upper),
    }
}

/// Axis-`j` projection of `region`, shifted by the control mean's coordinate.
pub fn projection_effect(region: &HalfspaceRegion, mu0: &[f64], axis: usize) -> Result<(f64, f64)> {
    if mu0.len() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: mu0.len() });
    }
    let (lo, hi) = region.project_interval(axis)?;
    Ok((lo - mu0[axis], hi - mu0[axis]))
}

/// Re-expresses a region over `R^k` in the coordinates of an orthonormal
/// basis of a subspace: `<u, B^T w> <= c` becomes `<B u, w> <= c`.
///
/// Directions orthogonal to the subspace are dropped after checking that the
/// subspace origin satisfies them.
pub fn restrict_to_basis(region: &HalfspaceRegion, basis: &[Vec<f64>]) -> Result<HalfspaceRegion> {
    if basis.iter().any(|b| b.len() != region.dim()) {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: basis.first().map_or(0, Vec::len) });
    }
    let mut dirs = Vec::with_capacity(region.len());
    let mut offs = Vec::with_capacity(region.len());
    for (u, o) in region.directions().iter().zip(region.offsets()) {
        let bu: Vec<f64> = basis.iter().map(|b| dot(b, u)).collect();
        let len = norm(&bu);
        if len <= 1e-9 {
            if *o < -1e-9 {
                return Err(Error::EmptyRegion);
            }
            continue;
        }
        dirs.push(bu.iter().map(|c| c / len).collect());
        offs.push(o / len);
    }
    HalfspaceRegion::new(dirs, offs)
}

/// Ilr (Helmert) plane form of a clr-coordinate region of `k`-part compositions.
pub fn clr_region_to_ilr(region: &HalfspaceRegion) -> Result<HalfspaceRegion> {
    restrict_to_basis(region, &helmert_basis(region.dim()))
}

fn share(ilr: &[f64], basis: &[Vec<f64>], j: usize) -> f64 {
    let clr = crate::embed::clr_from_ilr(ilr, basis);
    let m = clr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = clr.iter().map(|c| (c - m).exp()).sum();
    (clr[j] - m).exp() / total
}

/// Range of every decoded share over an ilr-plane polygon of 3-part compositions.
///
/// `1 / share_j` is a sum of exponentials of affine functions, hence convex:
/// the minimum share sits at a vertex, and along each edge the share is
/// unimodal, so its maximum is found by golden-section search per edge.
pub fn decoded_share_ranges(polygon: &Polygon2D) -> Vec<(f64, f64)> {
    let basis = helmert_basis(3);
    let verts = &polygon.vertices;
    (0..3)
        .map(|j| {
            let f = |p: [f64; 2]| share(&p, &basis, j);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (i, a) in verts.iter().enumerate() {
                let b = verts[(i + 1) % verts.len()];
                lo = lo.min(f(*a));
                hi = hi.max(edge_max(|t| f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])));
            }
            (lo, hi)
        })
        .collect()
}

fn edge_max(f: impl Fn(f64) -> f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    f(0.0).max(f(1.0)).max(fc).max(fd)
}

/// Decoded share ranges over clr points sampled from a region (any `k`).
pub fn decoded_share_ranges_sampled(samples: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let first = samples.first().ok_or(Error::EmptySample)?;
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); first.len()];
    for s in samples {
        let x = aitchison_inverse(s)?;
        for (r, v) in ranges.iter_mut().zip(x.parts()) {
            r.0 = r.0.min(*v);
            r.1 = r.1.max(*v);
        }
    }
    Ok(ranges)
}

/// Hit-and-run walk inside a bounded half-space region, started at `start`.
/// Returns `n` points, one every `thin` steps. Deterministic in `seed`.
pub fn hit_and_run(region: &HalfspaceRegion, start: &[f64], n: usize, thin: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let d = region.dim();
    if start.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: start.len() });
    }
    let scale = start.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    if !region.contains(start, 1e-8 * scale)? {
        return Err(Error::EmptyRegion);
    }
    let mut rng = stream_rng(seed, DOMAIN_HIT_AND_RUN, 0);
    let mut x = start.to_vec();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..thin.max(1) {
            let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let len = norm(&dir);
            if len == 0.0 {
                continue;
            }
            dir.iter_mut().for_each(|c| *c /= len);
            let (mut tmin, mut tmax) = (f64::NEG_INFINITY, f64::INFINITY);
            for (u, o) in region.directions().iter().zip(region.offsets()) {
                let a = dot(u, &dir);
                let slack = (o - dot(u, &x)).max(0.0);
                if a > 1e-15 {
                    tmax = tmax.min(slack / a);
                } else if a < -1e-15 {
                    tmin = tmin.max(slack / a);
                }
            }
            if !tmin.is_finite() || !tmax.is_finite() {
                return Err(Error::BadDimension("hit-and-run requires a bounded region".into()));
            }
            if tmax <= tmin {
                continue;
            }
            let t = rng.random_range(tmin..=tmax);
            x.iter_mut().zip(&dir).for_each(|(xi, di)| *xi += t * di);
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Points of the geodesic `Psi^{-1}((1 - t) a + t b)` on a grid of `t` values.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSample<O> {
    pub t: Vec<f64>,
    pub points: Vec<O>,
    /// Embedded endpoint `b`.
    pub endpoint: Vec<f64>,
}

/// Geodesic between two embedded points, decoded through the space.
pub fn geodesic<S: ObjectSpace>(space: &S, mu0: &[f64], mu1: &[f64], t_grid: &[f64]) -> Result<GeodesicSample<S::Object>> {
    for v in [mu0, mu1] {
        if v.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: v.len() });
        }
        if !space.in_image(v) {
            return Err(crate::EmbedError::NotInImage("point outside the embedding image".into()).into());
        }
    }
    let points = t_grid
        .iter()
        .map(|&t| {
            let v: Vec<f64> = mu0.iter().zip(mu1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            Ok(space.decode(&v)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeodesicSample { t: t_grid.to_vec(), points, endpoint: mu1.to_vec() })
}

/// Geodesics from `mu0` to points drawn uniformly-in-the-limit from `region`
/// by a hit-and-run walk started at `witness`.
pub fn geodesic_effect_set<S: ObjectSpace>(
    space: &S,
    mu0: &[f64],
    region: &HalfspaceRegion,
    witness: &[f64],
    n_samples: usize,
    seed: u64,
    t_grid: &[f64],
) -> Result<Vec<GeodesicSample<S::Object>>> {
    if n_samples == 0 {
        return Ok(Vec::new());
    }
    let thin = 10 * region.dim();
    hit_and_run(region, witness, n_samples, thin, seed)?
        .iter()
        .map(|v| geodesic(space, mu0, v, t_grid))
        .collect()
}

/// Step-function band `[L(q), U(q)]` for a quantile function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBand {
    pub grid: ProbabilityGrid,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Set when the cumulative-max adjustment changed some value by more than `1e-6`.
    pub adjusted: bool,
}

fn cumulative_max(v: &mut [f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..v.len() {
        if v[i] < v[i - 1] {
            worst = worst.max(v[i - 1] - v[i]);
            v[i] = v[i - 1];
        }
    }
    worst
}

impl QuantileBand {
    /// `L(q) = s_j^l` on `[q_j, q_{j+1})`; `-inf` below the first grid point.
    pub fn lower_at(&self, q: f64) -> f64 {
        let pts = self.grid.points();
        match pts.iter().rposition(|&g| g <= q) {
            Some(j) => self.lower[j],
            None => f64::NEG_INFINITY,
        }
    }

    /// `U(q) = s_{j+1}^u` on `(q_j, q_{j+1}]`; `+inf` above the last grid point.
    pub fn upper_at(&self, q: f64) -> f64 {
        let pts = self.grid.points();
        match pts.iter().position(|&g| g >= q) {
            Some(j) => self.upper[j],
            None => f64::INFINITY,
        }
    }

    /// Whether `curve[j]` lies in `[L(q_j), U(q_j)]` at every grid point.
    pub fn contains_curve(&self, curve: &[f64], tol: f64) -> bool {
        curve.len() == self.lower.len()
            && curve.iter().zip(self.lower.iter().zip(&self.upper)).all(|(c, (l, u))| *l - tol <= *c && *c <= *u + tol)
    }

    pub fn is_monotone(&self) -> bool {
        self.lower.windows(2).all(|w| w[0] <= w[1]) && self.upper.windows(2).all(|w| w[0] <= w[1])
    }

    /// `q,lower,upper` rows at the grid points.
    pub fn to_csv(&self) -> String {
        use crate::report::fmt_g12;
        let mut out = String::from("q,lower,upper\n");
        for ((q, l), u) in self.grid.points().iter().zip(&self.lower).zip(&self.upper) {
            out.push_str(&format!("{},{},{}\n", fmt_g12(*q), fmt_g12(*l), fmt_g12(*u)));
        }
        out
    }
}

/// Band from the axis projections of a region over quantile coordinates.
pub fn quantile_band(region: &HalfspaceRegion, grid: &ProbabilityGrid) -> Result<QuantileBand> {
    if region.dim() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: region.dim() });
    }
    let (mut lower, mut upper): (Vec<f64>, Vec<f64>) = region.project_all()?.into_iter().unzip();
    let worst = cumulative_max(&mut lower).max(cumulative_max(&mut upper));
    if worst > 1e-6 {
        log::warn!("band projections not monotone; largest cumulative-max adjustment {worst:e}");
    }
    Ok(QuantileBand { grid: grid.clone(), lower, upper, adjusted: worst > 1e-6 })
}

/// Classical scalar Lee bounds applied to each raw component separately.
pub fn naive_lee_componentwise(rows: &[&[f64]], p: TrimFraction) -> Result<Vec<(f64, f64)>> {
    let k = rows.first().ok_or(Error::EmptySample)?.len();
    (0..k)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let neg: Vec<f64> = col.iter().map(|v| -v).collect();
            Ok((-upper_trimmed_mean(&neg, p.p_hat)?, upper_trimmed_mean(&col, p.p_hat)?))
        })
        .collect()
}
