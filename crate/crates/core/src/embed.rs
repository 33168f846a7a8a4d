//! Isometric embeddings of outcome spaces into Euclidean coordinates.
//!
//! Each supported metric space has a map `embed` into a closed convex subset
//! of a finite-dimensional coordinate space and an inverse `decode` on that
//! image. Means, trimmed means and geodesics are computed on the embedded
//! coordinates and pulled back through the inverse.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::EmbedError;

type Result<T> = std::result::Result<T, EmbedError>;

/// Tolerance for image-membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Tolerance for compositions summing to one.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Coordinates of an object in the embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddedVector(pub Vec<f64>);

impl EmbeddedVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for EmbeddedVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for EmbeddedVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A composition: nonnegative shares summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionPoint {
    parts: Vec<f64>,
}

impl CompositionPoint {
    pub fn new(parts: Vec<f64>) -> Result<Self> {
        if parts.len() < 2 {
            return Err(EmbedError::InvalidComposition(format!(
                "need at least 2 parts, got {}",
                parts.len()
            )));
        }
        if let Some((i, &v)) = parts.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(EmbedError::InvalidComposition(format!("part {i} is {v}")));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL * parts.len() as f64 {
            return Err(EmbedError::InvalidComposition(format!("parts sum to {total}")));
        }
        Ok(Self { parts })
    }

    /// Closes arbitrary positive weights onto the simplex.
    pub fn closure(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(EmbedError::InvalidComposition(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// Centered log-ratio coordinates `log(x_j / g(x))`, `g` the geometric mean.
pub fn aitchison_embed(x: &CompositionPoint) -> Result<EmbeddedVector> {
    if let Some((index, &value)) = x.parts.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(EmbedError::ZeroComponent { index, value });
    }
    let logs: Vec<f64> = x.parts.iter().map(|v| v.ln()).collect();
    let log_g = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(EmbeddedVector(logs.into_iter().map(|l| l - log_g).collect()))
}

/// Inverse of [`aitchison_embed`]: softmax of the coordinates.
pub fn aitchison_inverse(v: &[f64]) -> Result<CompositionPoint> {
    if v.len() < 2 {
        return Err(EmbedError::NotInImage(format!("need at least 2 coordinates, got {}", v.len())));
    }
    let total: f64 = v.iter().sum();
    if total.abs() > MEMBERSHIP_TOL {
        return Err(EmbedError::NotInImage(format!("coordinates sum to {total}")));
    }
    let shift = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = v.iter().map(|c| (c - shift).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(CompositionPoint { parts: w.into_iter().map(|c| c / z).collect() })
}

/// Orthonormal (Helmert) basis of the sum-zero subspace of `R^k`, as `k-1`
/// column vectors of length `k`.
pub fn helmert_basis(k: usize) -> Vec<Vec<f64>> {
    (1..k)
        .map(|j| {
            let scale = 1.0 / ((j * (j + 1)) as f64).sqrt();
            (0..k)
                .map(|i| match i.cmp(&j) {
                    std::cmp::Ordering::Less => scale,
                    std::cmp::Ordering::Equal => -(j as f64) * scale,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Isometric log-ratio coordinates: Helmert coordinates of the clr vector.
pub fn ilr_from_clr(clr: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    basis.iter().map(|h| dot(h, clr)).collect()
}

pub fn clr_from_ilr(ilr: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let k = basis.first().map_or(ilr.len() + 1, Vec::len);
    let mut out = vec![0.0; k];
    for (c, h) in ilr.iter().zip(basis) {
        for (o, hv) in out.iter_mut().zip(h) {
            *o += c * hv;
        }
    }
    out
}

/// The barycenter `(1/sqrt(k), ..., 1/sqrt(k))` of the positive orthant of the sphere.
pub fn sphere_barycenter(k: usize) -> Vec<f64> {
    vec![1.0 / (k as f64).sqrt(); k]
}

fn check_reference(mu: &[f64]) -> Result<()> {
    if mu.iter().any(|m| *m < 0.0 || !m.is_finite()) || (norm(mu) - 1.0).abs() > 1e-10 {
        return Err(EmbedError::BadReference);
    }
    Ok(())
}

/// `Log_mu(sqrt(x))`: square-root map onto the sphere followed by the
/// logarithmic map into the tangent space at `mu`. Zero parts are allowed.
pub fn sphere_embed(x: &CompositionPoint, mu: &[f64]) -> Result<EmbeddedVector> {
    check_reference(mu)?;
    if mu.len() != x.len() {
        return Err(EmbedError::DimensionMismatch { expected: mu.len(), got: x.len() });
    }
    let s: Vec<f64> = x.parts.iter().map(|v| v.sqrt()).collect();
    let c = dot(&s, mu).clamp(-1.0, 1.0);
    if c <= -1.0 + 1e-12 {
        return Err(EmbedError::AntipodalPoint);
    }
    let w: Vec<f64> = s.iter().zip(mu).map(|(si, mi)| si - c * mi).collect();
    let wn = norm(&w);
    if wn < 1e-300 {
        return Ok(EmbeddedVector::zeros(mu.len()));
    }
    let theta = c.acos();
    Ok(EmbeddedVector(w.into_iter().map(|wi| theta * wi / wn).collect()))
}

/// `Exp_mu(v)` squared componentwise.
pub fn sphere_inverse(v: &[f64], mu: &[f64]) -> Result<CompositionPoint> {
    check_reference(mu)?;
    if mu.len() != v.len() {
        return Err(EmbedError::DimensionMismatch { expected: mu.len(), got: v.len() });
    }
    let tangency = dot(mu, v);
    if tangency.abs() > MEMBERSHIP_TOL {
        return Err(EmbedError::NotTangent(tangency));
    }
    let theta = norm(v);
    let point: Vec<f64> = if theta < 1e-300 {
        mu.to_vec()
    } else {
        let (sin, cos) = theta.sin_cos();
        mu.iter().zip(v).map(|(m, vi)| cos * m + sin * vi / theta).collect()
    };
    let sq: Vec<f64> = point.iter().map(|p| p * p).collect();
    let total: f64 = sq.iter().sum();
    Ok(CompositionPoint { parts: sq.into_iter().map(|p| p / total).collect() })
}

/// Strictly increasing evaluation probabilities in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityGrid(Vec<f64>);

impl ProbabilityGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(EmbedError::BadGrid("no evaluation points".into()));
        }
        if points.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(EmbedError::BadGrid("points must lie in (0, 1)".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EmbedError::BadGrid("points must be strictly increasing".into()));
        }
        Ok(Self(points))
    }

    /// `start, start + step, ..., end` (inclusive, rounded to 1e-12).
    pub fn regular(start: f64, end: f64, step: f64) -> Result<Self> {
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        let pts = (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect();
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Trapezoidal quadrature weights of the grid on `[q_1, q_k]`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let q = &self.0;
        let k = q.len();
        if k == 1 {
            return vec![1.0];
        }
        (0..k)
            .map(|j| {
                let left = if j == 0 { q[0] } else { q[j - 1] };
                let right = if j + 1 == k { q[k - 1] } else { q[j + 1] };
                (right - left) / 2.0
            })
            .collect()
    }
}

impl TryFrom<Vec<f64>> for ProbabilityGrid {
    type Error = EmbedError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityGrid> for Vec<f64> {
    fn from(g: ProbabilityGrid) -> Self {
        g.0
    }
}

/// A quantile function evaluated on a probability grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileCurve {
    pub grid: ProbabilityGrid,
    pub values: Vec<f64>,
}

impl QuantileCurve {
    pub fn new(grid: ProbabilityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(EmbedError::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.windows(2).any(|w| w[1] < w[0] - MEMBERSHIP_TOL) {
            return Err(EmbedError::NotInImage("quantile values decrease".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn embed(&self) -> EmbeddedVector {
        EmbeddedVector(self.values.clone())
    }

    /// Grid-weighted L2 distance approximating the 2-Wasserstein distance.
    pub fn distance(&self, other: &QuantileCurve) -> Result<f64> {
        if self.grid != other.grid {
            return Err(EmbedError::BadGrid("curves live on different grids".into()));
        }
        weighted_distance(&self.values, &other.values, &self.grid.trapezoid_weights())
    }
}

/// Rank of the left-continuous inverse CDF: `ceil(n q)`, clamped to `[1, n]`.
///
/// A relative slack of 1e-9 absorbs products like `20 * 0.15` that land one
/// ulp above an integer.
pub fn ceil_rank(n: usize, q: f64) -> usize {
    let x = n as f64 * q;
    let r = (x - 1e-9 * x.abs().max(1.0)).ceil();
    (r.max(1.0) as usize).min(n)
}

/// Empirical quantile curve using the `ceil(n q)`-th order statistic.
pub fn quantile_embed(samples: &[f64], grid: &ProbabilityGrid) -> Result<QuantileCurve> {
    if samples.is_empty() {
        return Err(EmbedError::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let values = grid.points().iter().map(|&q| sorted[ceil_rank(n, q) - 1]).collect();
    Ok(QuantileCurve { grid: grid.clone(), values })
}

/// A compact interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPoint {
    pub lower: f64,
    pub upper: f64,
}

impl IntervalPoint {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(EmbedError::InvertedInterval { lower, upper });
        }
        Ok(Self { lower, upper })
    }
}

/// Support function of the interval at directions -1 and +1: `(-lower, upper)`.
pub fn interval_embed(x: &IntervalPoint) -> Result<EmbeddedVector> {
    if !(x.lower <= x.upper) {
        return Err(EmbedError::InvertedInterval { lower: x.lower, upper: x.upper });
    }
    Ok(EmbeddedVector(vec![-x.lower, x.upper]))
}

pub fn interval_inverse(v: &[f64]) -> Result<IntervalPoint> {
    if v.len() != 2 {
        return Err(EmbedError::DimensionMismatch { expected: 2, got: v.len() });
    }
    if v[0] + v[1] < -MEMBERSHIP_TOL {
        return Err(EmbedError::NotInImage(format!("s(-1) + s(1) = {} < 0", v[0] + v[1])));
    }
    let lower = -v[0];
    Ok(IntervalPoint { lower, upper: v[1].max(lower) })
}

fn square_matrix(entries: &[f64]) -> Result<DMatrix<f64>> {
    let m = (entries.len() as f64).sqrt().round() as usize;
    if m * m != entries.len() || m == 0 {
        return Err(EmbedError::DimensionMismatch { expected: m * m, got: entries.len() });
    }
    Ok(DMatrix::from_row_slice(m, m, entries))
}

fn is_symmetric(a: &DMatrix<f64>) -> bool {
    let scale = a.amax().max(1.0);
    let m = a.nrows();
    (0..m).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= 1e-10 * scale))
}

fn flatten_row_major(a: &DMatrix<f64>) -> Vec<f64> {
    let m = a.nrows();
    (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect()
}

/// Symmetric positive (semi)definite matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdPoint {
    pub m: usize,
    pub entries: Vec<f64>,
}

impl SpdPoint {
    pub fn new(m: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != m * m {
            return Err(EmbedError::DimensionMismatch { expected: m * m, got: entries.len() });
        }
        if !is_symmetric(&DMatrix::from_row_slice(m, m, &entries)) {
            return Err(EmbedError::NotSymmetric);
        }
        Ok(Self { m, entries })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let m = diag.len();
        let mut entries = vec![0.0; m * m];
        for (i, d) in diag.iter().enumerate() {
            entries[i * m + i] = *d;
        }
        Self { m, entries }
    }
}

/// Metric on symmetric positive matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "exponent")]
pub enum SpdMode {
    /// Power-Frobenius metric `d_F(A^p, B^p)`.
    Power(f64),
    /// Log-Euclidean metric `d_F(log A, log B)`.
    Log,
}

fn spectral_map(a: DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a);
    let mapped = eig.eigenvalues.map(f);
    &eig.eigenvectors * DMatrix::from_diagonal(&mapped) * eig.eigenvectors.transpose()
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

pub fn spd_embed(x: &SpdPoint, mode: SpdMode) -> Result<EmbeddedVector> {
    let a = DMatrix::from_row_slice(x.m, x.m, &x.entries);
    if !is_symmetric(&a) {
        return Err(EmbedError::NotSymmetric);
    }
    let a = symmetrize(a);
    let scale = a.amax().max(1.0);
    let min_eig = SymmetricEigen::new(a.clone()).eigenvalues.min();
    let mapped = match mode {
        SpdMode::Log => {
            if min_eig <= 0.0 {
                return Err(EmbedError::NotPositiveDefinite(min_eig));
            }
            spectral_map(a, f64::ln)
        }
        SpdMode::Power(p) => {
            if min_eig < -1e-10 * scale {
                return Err(EmbedError::NotPositiveSemidefinite(min_eig));
            }
            spectral_map(a, |l| l.max(0.0).powf(p))
        }
    };
    Ok(EmbeddedVector(flatten_row_major(&symmetrize(mapped))))
}

pub fn spd_inverse(v: &[f64], mode: SpdMode) -> Result<SpdPoint> {
    let a = square_matrix(v)?;
    if !is_symmetric(&a) {
        return Err(EmbedError::NotInImage("embedded matrix is not symmetric".into()));
    }
    let a = symmetrize(a);
    let m = a.nrows();
    let out = match mode {
        SpdMode::Log => spectral_map(a, f64::exp),
        SpdMode::Power(p) => {
            let scale = a.amax().max(1.0);
            let min_eig = SymmetricEigen::new(a.clone()).eigenvalues.min();
            if min_eig < -1e-10 * scale {
                return Err(EmbedError::NotInImage(format!("eigenvalue {min_eig} < 0")));
            }
            spectral_map(a, |l| l.max(0.0).powf(1.0 / p))
        }
    };
    Ok(SpdPoint { m, entries: flatten_row_major(&symmetrize(out)) })
}

/// Graph Laplacian of a weighted undirected network with weights in `[0, W]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianPoint {
    pub m: usize,
    pub entries: Vec<f64>,
}

impl LaplacianPoint {
    pub fn new(m: usize, entries: Vec<f64>, max_weight: f64) -> Result<Self> {
        check_laplacian(m, &entries, max_weight)?;
        Ok(Self { m, entries })
    }

    /// Builds the Laplacian from a symmetric weight matrix (diagonal ignored).
    pub fn from_weights(m: usize, weights: &[f64]) -> Self {
        let mut entries = vec![0.0; m * m];
        for p in 0..m {
            let mut deg = 0.0;
            for q in 0..m {
                if p != q {
                    entries[p * m + q] = -weights[p * m + q];
                    deg += weights[p * m + q];
                }
            }
            entries[p * m + p] = deg;
        }
        Self { m, entries }
    }

    pub fn embed(&self) -> EmbeddedVector {
        EmbeddedVector(self.entries.clone())
    }
}

pub fn check_laplacian(m: usize, entries: &[f64], max_weight: f64) -> Result<()> {
    if entries.len() != m * m {
        return Err(EmbedError::DimensionMismatch { expected: m * m, got: entries.len() });
    }
    for p in 0..m {
        let row = &entries[p * m..(p + 1) * m];
        let sum: f64 = row.iter().sum();
        if sum.abs() > 1e-10 {
            return Err(EmbedError::NotLaplacian(format!("row {p} sums to {sum}")));
        }
        for q in 0..m {
            if (entries[p * m + q] - entries[q * m + p]).abs() > 1e-10 {
                return Err(EmbedError::NotLaplacian("not symmetric".into()));
            }
            let l = entries[p * m + q];
            if p != q && !(l <= MEMBERSHIP_TOL && l >= -max_weight - MEMBERSHIP_TOL) {
                return Err(EmbedError::NotLaplacian(format!("entry ({p},{q}) = {l} outside [-W, 0]")));
            }
        }
    }
    Ok(())
}

/// Euclidean distance between embedded coordinates.
pub fn embedded_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Weighted distance `sqrt(sum_j w_j (a_j - b_j)^2)`.
pub fn weighted_distance(a: &[f64], b: &[f64], weights: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() != weights.len() {
        return Err(EmbedError::DimensionMismatch { expected: weights.len(), got: a.len().min(b.len()) });
    }
    Ok(a.iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| w * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// A metric space with an isometric embedding into `R^d` and a closed convex image.
pub trait ObjectSpace: Sync {
    type Object: Clone + Send;

    fn dim(&self) -> usize;
    fn embed(&self, x: &Self::Object) -> Result<EmbeddedVector>;
    fn decode(&self, v: &[f64]) -> Result<Self::Object>;
    fn in_image(&self, v: &[f64]) -> bool;
}

/// Compositions under the Aitchison metric, in clr coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aitchison {
    pub k: usize,
}

impl ObjectSpace for Aitchison {
    type Object = CompositionPoint;

    fn dim(&self) -> usize {
        self.k
    }
    fn embed(&self, x: &CompositionPoint) -> Result<EmbeddedVector> {
        aitchison_embed(x)
    }
    fn decode(&self, v: &[f64]) -> Result<CompositionPoint> {
        aitchison_inverse(v)
    }
    fn in_image(&self, v: &[f64]) -> bool {
        v.len() == self.k && v.iter().sum::<f64>().abs() <= MEMBERSHIP_TOL
    }
}

/// Compositions under the Aitchison metric, in `k-1` ilr (Helmert) coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AitchisonIlr {
    basis: Vec<Vec<f64>>,
}

impl AitchisonIlr {
    pub fn new(k: usize) -> Self {
        Self { basis: helmert_basis(k) }
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn to_clr(&self, v: &[f64]) -> Vec<f64> {
        clr_from_ilr(v, &self.basis)
    }

    pub fn from_clr(&self, clr: &[f64]) -> Vec<f64> {
        ilr_from_clr(clr, &self.basis)
    }
}

impl ObjectSpace for AitchisonIlr {
    type Object = CompositionPoint;

    fn dim(&self) -> usize {
        self.basis.len()
    }
    fn embed(&self, x: &CompositionPoint) -> Result<EmbeddedVector> {
        Ok(EmbeddedVector(self.from_clr(&aitchison_embed(x)?)))
    }
    fn decode(&self, v: &[f64]) -> Result<CompositionPoint> {
        if v.len() != self.dim() {
            return Err(EmbedError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        aitchison_inverse(&self.to_clr(v))
    }
    fn in_image(&self, v: &[f64]) -> bool {
        v.len() == self.dim()
    }
}

/// Compositions with zeros: square-root map and the sphere log map at `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSpace {
    pub mu: Vec<f64>,
}

impl SphereSpace {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        check_reference(&mu)?;
        Ok(Self { mu })
    }

    pub fn barycentric(k: usize) -> Self {
        Self { mu: sphere_barycenter(k) }
    }
}

impl ObjectSpace for SphereSpace {
    type Object = CompositionPoint;

    fn dim(&self) -> usize {
        self.mu.len()
    }
    fn embed(&self, x: &CompositionPoint) -> Result<EmbeddedVector> {
        sphere_embed(x, &self.mu)
    }
    fn decode(&self, v: &[f64]) -> Result<CompositionPoint> {
        sphere_inverse(v, &self.mu)
    }
    fn in_image(&self, v: &[f64]) -> bool {
        v.len() == self.mu.len() && dot(&self.mu, v).abs() <= MEMBERSHIP_TOL
    }
}

/// One-dimensional distributions under the 2-Wasserstein metric, projected to
/// quantiles on a probability grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSpace {
    pub grid: ProbabilityGrid,
}

impl ObjectSpace for QuantileSpace {
    type Object = QuantileCurve;

    fn dim(&self) -> usize {
        self.grid.len()
    }
    fn embed(&self, x: &QuantileCurve) -> Result<EmbeddedVector> {
        if x.grid != self.grid {
            return Err(EmbedError::BadGrid("curve grid differs from space grid".into()));
        }
        Ok(x.embed())
    }
    fn decode(&self, v: &[f64]) -> Result<QuantileCurve> {
        QuantileCurve::new(self.grid.clone(), v.to_vec())
    }
    fn in_image(&self, v: &[f64]) -> bool {
        v.len() == self.grid.len() && v.windows(2).all(|w| w[1] >= w[0] - MEMBERSHIP_TOL)
    }
}

/// Intervals under the support-function `L2` metric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntervalSpace;

impl ObjectSpace for IntervalSpace {
    type Object = IntervalPoint;

    fn dim(&self) -> usize {
        2
    }
    fn embed(&self, x: &IntervalPoint) -> Result<EmbeddedVector> {
        interval_embed(x)
    }
    fn decode(&self, v: &[f64]) -> Result<IntervalPoint> {
        interval_inverse(v)
    }
    fn in_image(&self, v: &[f64]) -> bool {
        v.len() == 2 && v[0] + v[1] >= -MEMBERSHIP_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdSpace {
    pub m: usize,
    pub mode: SpdMode,
}

impl ObjectSpace for SpdSpace {
    type Object = SpdPoint;

    fn dim(&self) -> usize {
        self.m * self.m
    }
    fn embed(&self, x: &SpdPoint) -> Result<EmbeddedVector> {
        if x.m != self.m {
            return Err(EmbedError::DimensionMismatch { expected: self.m, got: x.m });
        }
        spd_embed(x, self.mode)
    }
    fn decode(&self, v: &[f64]) -> Result<SpdPoint> {
        spd_inverse(v, self.mode)
    }
    fn in_image(&self, v: &[f64]) -> bool {
        v.len() == self.dim() && spd_inverse(v, self.mode).is_ok()
    }
}

/// Graph Laplacians under the Frobenius metric (identity embedding).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianSpace {
    pub m: usize,
    pub max_weight: f64,
}

impl ObjectSpace for LaplacianSpace {
    type Object = LaplacianPoint;

    fn dim(&self) -> usize {
        self.m * self.m
    }
    fn embed(&self, x: &LaplacianPoint) -> Result<EmbeddedVector> {
        check_laplacian(self.m, &x.entries, self.max_weight)?;
        Ok(x.embed())
    }
    fn decode(&self, v: &[f64]) -> Result<LaplacianPoint> {
        check_laplacian(self.m, v, self.max_weight)?;
        Ok(LaplacianPoint { m: self.m, entries: v.to_vec() })
    }
    fn in_image(&self, v: &[f64]) -> bool {
        check_laplacian(self.m, v, self.max_weight).is_ok()
    }
}

/// Real-valued outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalarSpace;

impl ObjectSpace for ScalarSpace {
    type Object = f64;

    fn dim(&self) -> usize {
        1
    }
    fn embed(&self, x: &f64) -> Result<EmbeddedVector> {
        Ok(EmbeddedVector(vec![*x]))
    }
    fn decode(&self, v: &[f64]) -> Result<f64> {
        match v {
            [x] => Ok(*x),
            _ => Err(EmbedError::DimensionMismatch { expected: 1, got: v.len() }),
        }
    }
    fn in_image(&self, v: &[f64]) -> bool {
        v.len() == 1
    }
}
