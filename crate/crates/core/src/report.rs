//! Deterministic JSON and CSV reports.
//!
//! Every float is rounded to 12 significant digits and printed in its
//! shortest round-trip form, so identical inputs give identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::InferenceResult;
use crate::region::HalfspaceRegion;
use crate::selection::SupportProfile;

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// `%.12g`-style text: 12 significant digits, shortest form.
pub fn fmt_g12(x: f64) -> String {
    format!("{}", round12(x))
}

fn round_all(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round12).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointReport {
    pub critical_value: f64,
    pub center: Vec<f64>,
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
    pub offsets: Vec<f64>,
}

/// JSON report of an identified set and, when available, its confidence region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub p_hat: f64,
    pub p_clipped: bool,
    pub alpha: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    pub seed: u64,
    pub grid_scheme: String,
    pub directions: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub variance: Option<Vec<f64>>,
    pub critical_value: Option<f64>,
    pub offsets: Vec<f64>,
    pub joint: Option<JointReport>,
}

impl RegionReport {
    /// Report for a point estimate without inference; offsets equal `sigma`.
    pub fn from_profile(profile: &SupportProfile, seed: u64) -> Self {
        Self {
            p_hat: round12(profile.p.p_hat),
            p_clipped: profile.p.clipped,
            alpha: None,
            b: None,
            seed,
            grid_scheme: profile.grid.scheme().name().to_string(),
            directions: profile.grid.directions().iter().map(|u| round_all(u)).collect(),
            sigma: round_all(&profile.sigma),
            variance: profile.variance.as_deref().map(round_all),
            critical_value: None,
            offsets: round_all(&profile.sigma),
            joint: None,
        }
    }

    pub fn from_inference(result: &InferenceResult, alpha: f64, seed: u64) -> Self {
        let mut report = Self::from_profile(&result.profile, seed);
        report.alpha = Some(alpha);
        report.b = Some(result.t_stats.len());
        report.variance = Some(round_all(&result.variance));
        report.critical_value = Some(round12(result.critical_value));
        report.offsets = round_all(result.region.offsets());
        report.joint = result.joint.as_ref().map(|j| JointReport {
            critical_value: round12(j.critical_value),
            center: round_all(&j.center),
            box_lower: round_all(&j.box_lower),
            box_upper: round_all(&j.box_upper),
            offsets: round_all(j.region.offsets()),
        });
        report
    }

    /// Region with the reported directions and offsets.
    pub fn region(&self) -> Result<HalfspaceRegion> {
        HalfspaceRegion::new(self.directions.clone(), self.offsets.clone())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::Error::Io(format!("{}: {e}", path.display())))
    }
}

/// One line of the projection table: point estimate, projected identified
/// set, projected confidence set and naive componentwise bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub component: String,
    pub control_mean: f64,
    pub set: (f64, f64),
    pub ci: Option<(f64, f64)>,
    pub naive: Option<(f64, f64)>,
}

fn opt_pair(v: Option<(f64, f64)>) -> (String, String) {
    v.map(|(a, b)| (fmt_g12(a), fmt_g12(b))).unwrap_or_default()
}

/// CSV with columns `component,control_mean,set_lo,set_hi,ci_lo,ci_hi,naive_lo,naive_hi`.
pub fn projection_table_csv(rows: &[ProjectionRow]) -> String {
    let mut out = String::from("component,control_mean,set_lo,set_hi,ci_lo,ci_hi,naive_lo,naive_hi\n");
    for r in rows {
        let (ci_lo, ci_hi) = opt_pair(r.ci);
        let (nv_lo, nv_hi) = opt_pair(r.naive);
        out.push_str(&format!(
            "{},{},{},{},{ci_lo},{ci_hi},{nv_lo},{nv_hi}\n",
            r.component,
            fmt_g12(r.control_mean),
            fmt_g12(r.set.0),
            fmt_g12(r.set.1)
        ));
    }
    out
}
