//! Half-space representation of identified sets and confidence regions.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::embed::dot;
use crate::error::{Error, Result};
use crate::selection::SupportProfile;

/// `{v : <u_i, v> <= offset_i for all i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceRegion {
    dim: usize,
    directions: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl HalfspaceRegion {
    pub fn new(directions: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let dim = directions.first().map(Vec::len).ok_or(Error::EmptyRegion)?;
        if directions.len() != offsets.len() {
            return Err(Error::DimensionMismatch { expected: directions.len(), got: offsets.len() });
        }
        for u in &directions {
            if u.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: u.len() });
            }
            if (dot(u, u).sqrt() - 1.0).abs() > 1e-9 {
                return Err(Error::BadDimension("region directions must be unit vectors".into()));
            }
        }
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::EmptyRegion);
        }
        Ok(Self { dim, directions, offsets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Same directions, new offsets.
    pub fn with_offsets(&self, offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() != self.offsets.len() {
            return Err(Error::DimensionMismatch { expected: self.offsets.len(), got: offsets.len() });
        }
        Ok(Self { dim: self.dim, directions: self.directions.clone(), offsets })
    }

    fn axis_offset(&self, axis: usize, positive: bool) -> Result<f64> {
        let sign = if positive { 1.0 } else { -1.0 };
        self.directions
            .iter()
            .position(|u| u.iter().enumerate().all(|(i, c)| if i == axis { *c == sign } else { *c == 0.0 }))
            .map(|i| self.offsets[i])
            .ok_or(Error::MissingAxisDirection { axis, sign: if positive { '+' } else { '-' } })
    }

    /// True iff `<u_i, v> <= offset_i + tol` for every constraint.
    pub fn contains(&self, v: &[f64], tol: f64) -> Result<bool> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(self.directions.iter().zip(&self.offsets).all(|(u, o)| dot(u, v) <= o + tol))
    }

    /// Largest constraint violation of `v` (negative when strictly inside).
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        self.directions
            .iter()
            .zip(&self.offsets)
            .map(|(u, o)| dot(u, v) - o)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(-offset(-e_j), offset(+e_j))`.
    pub fn project_interval(&self, axis: usize) -> Result<(f64, f64)> {
        if axis >= self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: axis + 1 });
        }
        Ok((-self.axis_offset(axis, false)?, self.axis_offset(axis, true)?))
    }

    /// Projection intervals for every coordinate axis.
    pub fn project_all(&self) -> Result<Vec<(f64, f64)>> {
        (0..self.dim).map(|j| self.project_interval(j)).collect()
    }

    /// Translation by `-v`: `{w : w + v in region}`.
    pub fn minkowski_diff_point(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        let offsets = self.directions.iter().zip(&self.offsets).map(|(u, o)| o - dot(u, v)).collect();
        self.with_offsets(offsets)
    }

    /// `{a - b : a in region, b in box}` via support functions:
    /// offsets grow by `sigma_box(-u)`.
    pub fn minkowski_diff_box(&self, lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != self.dim || upper.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: lower.len().min(upper.len()) });
        }
        let offsets = self
            .directions
            .iter()
            .zip(&self.offsets)
            .map(|(u, o)| {
                let support: f64 = u
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(ui, (lo, hi))| (-ui * lo).max(-ui * hi))
                    .sum();
                o + support
            })
            .collect();
        self.with_offsets(offsets)
    }

    /// Pointwise offset dominance on a shared grid: `self ⊆ other`.
    pub fn offsets_within(&self, other: &Self) -> Result<bool> {
        if self.directions != other.directions {
            return Err(Error::GridMismatch);
        }
        Ok(self.offsets.iter().zip(&other.offsets).all(|(a, b)| a <= b))
    }
}

/// Half-space region with offsets equal to the profile's support values.
/// The profile witness, when present, certifies nonemptiness.
pub fn build_region(profile: &SupportProfile) -> Result<HalfspaceRegion> {
    if profile.sigma.len() != profile.grid.len() || profile.sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::EmptyRegion);
    }
    let region = HalfspaceRegion::new(profile.grid.directions().to_vec(), profile.sigma.clone())?;
    if let Some(w) = &profile.witness {
        let scale = w.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        if !region.contains(w, 1e-9 * scale)? {
            return Err(Error::EmptyRegion);
        }
    }
    Ok(region)
}

/// Convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2D {
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon2D {
    pub fn is_convex(&self, tol: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return true;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            cross([b[0] - a[0], b[1] - a[1]], [c[0] - b[0], c[1] - b[1]]) >= -tol
        })
    }

    /// `x,y` rows, first vertex repeated to close the ring.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for v in self.vertices.iter().chain(self.vertices.first()) {
            out.push_str(&format!("{},{}\n", crate::report::fmt_g12(v[0]), crate::report::fmt_g12(v[1])));
        }
        out
    }

    /// Min and max of coordinate `axis` over the vertices.
    pub fn coordinate_range(&self, axis: usize) -> (f64, f64) {
        self.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[axis]), hi.max(v[axis])))
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    normal: [f64; 2],
    offset: f64,
    angle: f64,
}

impl HalfPlane {
    /// Boundary direction with the feasible side on its left.
    fn dir(&self) -> [f64; 2] {
        [-self.normal[1], self.normal[0]]
    }

    fn outside(&self, p: [f64; 2], eps: f64) -> bool {
        self.normal[0] * p[0] + self.normal[1] * p[1] > self.offset + eps
    }

    fn intersect(&self, other: &HalfPlane) -> Option<[f64; 2]> {
        let det = self.normal[0] * other.normal[1] - self.normal[1] * other.normal[0];
        if det.abs() < 1e-15 {
            return None;
        }
        Some([
            (self.offset * other.normal[1] - other.offset * self.normal[1]) / det,
            (self.normal[0] * other.offset - other.normal[0] * self.offset) / det,
        ])
    }
}

/// Angular gap below which two half-planes are treated as parallel.
const PARALLEL_GAP: f64 = 1e-9;

/// Vertices of a bounded two-dimensional half-space region.
///
/// Half-planes are sorted by boundary angle, near-parallel ones merged
/// (keeping the tighter), and intersected incrementally with a deque.
pub fn vertices_2d(region: &HalfspaceRegion) -> Result<Polygon2D> {
    if region.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: region.dim() });
    }
    let scale = region.offsets().iter().fold(1.0f64, |m, o| m.max(o.abs()));
    let eps = 1e-12 * scale;

    let mut planes: Vec<HalfPlane> = region
        .directions()
        .iter()
        .zip(region.offsets())
        .map(|(u, &offset)| {
            let hp = HalfPlane { normal: [u[0], u[1]], offset, angle: 0.0 };
            let d = hp.dir();
            HalfPlane { angle: d[1].atan2(d[0]), ..hp }
        })
        .collect();
    planes.sort_by(|a, b| a.angle.total_cmp(&b.angle).then(a.offset.total_cmp(&b.offset)));
    let mut merged: Vec<HalfPlane> = Vec::with_capacity(planes.len());
    for hp in planes {
        match merged.last() {
            Some(last) if (hp.angle - last.angle).abs() < PARALLEL_GAP => {
                if hp.offset < last.offset {
                    *merged.last_mut().expect("nonempty") = hp;
                }
            }
            _ => merged.push(hp),
        }
    }
    if merged.len() > 1 {
        let (first, last) = (merged[0], merged[merged.len() - 1]);
        if (first.angle + std::f64::consts::TAU - last.angle).abs() < PARALLEL_GAP {
            if last.offset < first.offset {
                merged[0] = last;
            }
            merged.pop();
        }
    }

    let mut dq: VecDeque<HalfPlane> = VecDeque::with_capacity(merged.len());
    let corner = |a: &HalfPlane, b: &HalfPlane| a.intersect(b);
    for hp in merged {
        while dq.len() >= 2 {
            match corner(&dq[dq.len() - 2], &dq[dq.len() - 1]) {
                Some(p) if hp.outside(p, eps) => {
                    dq.pop_back();
                }
                _ => break,
            }
        }
        while dq.len() >= 2 {
            match corner(&dq[0], &dq[1]) {
                Some(p) if hp.outside(p, eps) => {
                    dq.pop_front();
                }
                _ => break,
            }
        }
        if let Some(last) = dq.back() {
            // antiparallel neighbours with disjoint strips mean an empty region
            if cross(last.dir(), hp.dir()).abs() < 1e-15 && last.offset + hp.offset < -eps {
                return Err(Error::EmptyRegion);
            }
        }
        dq.push_back(hp);
    }
    while dq.len() >= 3 {
        match corner(&dq[dq.len() - 2], &dq[dq.len() - 1]) {
            Some(p) if dq[0].outside(p, eps) => {
                dq.pop_back();
            }
            _ => break,
        }
    }
    while dq.len() >= 3 {
        match corner(&dq[0], &dq[1]) {
            Some(p) if dq[dq.len() - 1].outside(p, eps) => {
                dq.pop_front();
            }
            _ => break,
        }
    }
    if dq.len() < 3 {
        return Err(Error::EmptyRegion);
    }

    let n = dq.len();
    let mut vertices: Vec<[f64; 2]> = Vec::with_capacity(n);
    for i in 0..n {
        if let Some(p) = corner(&dq[i], &dq[(i + 1) % n]) {
            let dup = vertices
                .last()
                .is_some_and(|q| (q[0] - p[0]).abs() <= 1e-12 * scale && (q[1] - p[1]).abs() <= 1e-12 * scale);
            if !dup {
                vertices.push(p);
            }
        }
    }
    while vertices.len() > 1 {
        let (a, b) = (vertices[0], vertices[vertices.len() - 1]);
        if (a[0] - b[0]).abs() <= 1e-12 * scale && (a[1] - b[1]).abs() <= 1e-12 * scale {
            vertices.pop();
        } else {
            break;
        }
    }
    let tol = 1e-8 * scale;
    for v in &vertices {
        if !region.contains(v, tol)? {
            return Err(Error::EmptyRegion);
        }
    }
    if vertices.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(Polygon2D { vertices })
}
