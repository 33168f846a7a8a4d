//! End-to-end runs: embed a raw dataset, estimate the identified set,
//! optionally bootstrap it and derive effects, and write report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::effects::{
    clr_region_to_ilr, decoded_share_ranges, decoded_share_ranges_sampled, embedded_effect_region, geodesic_effect_set,
    hit_and_run, naive_lee_componentwise, quantile_band, ControlMean,
};
use crate::embed::{
    aitchison_inverse, helmert_basis, ilr_from_clr, interval_inverse, spd_inverse, Aitchison, ObjectSpace,
    ProbabilityGrid, SpdMode, SphereSpace,
};
use crate::error::{Error, Result};
use crate::grid::{DirectionGrid, GridScheme};
use crate::inference::{infer, BootstrapConfig, InferenceResult, VarianceMode};
use crate::io::{Embedding, RawDataset, Space};
use crate::region::{build_region, vertices_2d, HalfspaceRegion, Polygon2D};
use crate::report::{fmt_g12, projection_table_csv, ProjectionRow, RegionReport};
use crate::selection::{
    contaminated_profile, estimate_mu0, estimate_p, stratified_profile, support_profile_with, EmbeddedDataset,
    SupportProfile, TrimFraction, TrimRule,
};

/// Run configuration, typically read from TOML and overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub space: Space,
    /// Evaluation probabilities for distributional outcomes.
    pub eval_grid: Vec<f64>,
    pub alpha: f64,
    /// Bootstrap replications `B`.
    pub bootstrap: usize,
    /// Grid size `N` before axis directions are appended.
    pub directions: usize,
    /// Grid scheme; chosen from the dimension when absent.
    pub scheme: Option<GridScheme>,
    pub seed: u64,
    pub variance_mode: VarianceMode,
    pub variance_replications: usize,
    /// Trailing CSV column holding a discrete covariate.
    pub covariate: Option<String>,
    /// Contamination level; switches to the contaminated-data model.
    pub lambda: Option<f64>,
    pub trim_rule: TrimRule,
    /// Power-Frobenius exponent for `spd`; log-Euclidean when absent.
    pub spd_power: Option<f64>,
    /// Largest admissible edge weight for `network`.
    pub max_weight: f64,
    /// Sphere reference point for `compositional-zeros`; the barycenter when absent.
    pub sphere_reference: Option<Vec<f64>>,
    /// Hit-and-run draws for decoded projections (`k > 3`) and geodesics.
    pub samples: usize,
    /// Geodesic evaluation points in `[0, 1]`.
    pub geodesic_t: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            space: Space::Compositional,
            eval_grid: ProbabilityGrid::regular(0.10, 0.90, 0.05).expect("valid grid").points().to_vec(),
            alpha: 0.05,
            bootstrap: 300,
            directions: 200,
            scheme: None,
            seed: 0,
            variance_mode: VarianceMode::Bootstrap,
            variance_replications: 200,
            covariate: None,
            lambda: None,
            trim_rule: TrimRule::Fractional,
            spd_power: None,
            max_weight: 1.0,
            sphere_reference: None,
            samples: 2000,
            geodesic_t: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.bootstrap == 0 {
            return Err(Error::Config("bootstrap replications must be at least 1".into()));
        }
        if let Some(l) = self.lambda {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::BadLambda(l));
            }
        }
        if self.geodesic_t.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Config("geodesic t values must lie in [0, 1]".into()));
        }
        if self.space == Space::Distribution {
            ProbabilityGrid::new(self.eval_grid.clone()).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn embedding(&self) -> Result<Embedding> {
        Ok(match self.space {
            Space::Compositional => Embedding::Aitchison,
            Space::CompositionalZeros => Embedding::Sphere(self.sphere_reference.clone()),
            Space::Distribution => {
                Embedding::Quantile(ProbabilityGrid::new(self.eval_grid.clone()).map_err(|e| Error::Config(e.to_string()))?)
            }
            Space::Interval => Embedding::Interval,
            Space::Network => Embedding::Laplacian { max_weight: self.max_weight },
            Space::Spd => Embedding::Spd(self.spd_mode()),
            Space::Scalar => Embedding::Scalar,
        })
    }

    fn spd_mode(&self) -> SpdMode {
        self.spd_power.map_or(SpdMode::Log, SpdMode::Power)
    }

    pub fn grid(&self, d: usize) -> Result<DirectionGrid> {
        DirectionGrid::new(d, self.scheme.unwrap_or(GridScheme::auto(d)), self.directions, self.seed)
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            replications: self.bootstrap,
            alpha: self.alpha,
            seed: self.seed,
            variance_mode: self.variance_mode,
            variance_replications: self.variance_replications,
            recompute_p: true,
            rule: self.trim_rule,
            joint: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Estimate,
    Infer,
    Effects,
}

/// Everything computed by a run, before writing.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub data: EmbeddedDataset,
    pub profile: SupportProfile,
    pub region: HalfspaceRegion,
    pub inference: Option<InferenceResult>,
    /// Control-selected embedded mean (absent under contamination).
    pub mu0: Option<Vec<f64>>,
}

/// Estimation and, for later stages, inference.
pub fn analyze(config: &RunConfig, raw: &RawDataset, stage: Stage) -> Result<Analysis> {
    config.validate()?;
    let embedding = config.embedding()?;
    if raw.space != config.space && embedding.space() != raw.space {
        return Err(Error::Config(format!("dataset is {} but the run is {}", raw.space.name(), config.space.name())));
    }
    let data = raw.embed(&embedding)?;
    let grid = config.grid(data.dim())?;
    if (config.lambda.is_some() || config.covariate.is_some()) && stage > Stage::Estimate {
        return Err(Error::Config("bootstrap inference covers the plain selection model only".into()));
    }
    let (profile, mu0) = if let Some(lambda) = config.lambda {
        let rows: Vec<&[f64]> = data.units().iter().filter_map(|u| u.outcome.as_deref()).collect();
        (contaminated_profile(&rows, &grid, lambda)?, None)
    } else if config.covariate.is_some() {
        (stratified_profile(&data, &grid, config.trim_rule)?, Some(estimate_mu0(&data)?.into_inner()))
    } else {
        let p = estimate_p(&data)?;
        (support_profile_with(&data, &grid, p, config.trim_rule)?, Some(estimate_mu0(&data)?.into_inner()))
    };
    let region = build_region(&profile)?;
    let inference = if stage >= Stage::Infer { Some(infer(&data, &grid, &config.bootstrap_config())?) } else { None };
    Ok(Analysis { data, profile, region, inference, mu0 })
}

/// Files written by a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOutput {
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    dir: &'a Path,
    out: PipelineOutput,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.out.files.push(path);
        Ok(())
    }
}

/// Embedded region for 3-part compositions as an ilr-plane polygon.
fn ilr_polygon(region: &HalfspaceRegion) -> Result<Polygon2D> {
    vertices_2d(&clr_region_to_ilr(region)?)
}

/// `y1,y2,y3,x,y` rows: shares and ternary-plot coordinates around the ring.
fn ternary_csv(polygon: &Polygon2D) -> Result<String> {
    let basis = helmert_basis(3);
    let mut out = String::from("y1,y2,y3,x,y\n");
    for v in polygon.vertices.iter().chain(polygon.vertices.first()) {
        let c = aitchison_inverse(&crate::embed::clr_from_ilr(v, &basis))?;
        let s = c.parts();
        let x = s[1] + 0.5 * s[2];
        let y = s[2] * 3f64.sqrt() / 2.0;
        let _ = writeln!(out, "{},{},{},{},{}", fmt_g12(s[0]), fmt_g12(s[1]), fmt_g12(s[2]), fmt_g12(x), fmt_g12(y));
    }
    Ok(out)
}

/// Component ranges reported in the projection table: decoded shares for
/// compositions, embedded coordinates otherwise.
fn component_ranges(config: &RunConfig, region: &HalfspaceRegion, witness: &[f64], seed: u64) -> Result<Vec<(f64, f64)>> {
    match config.space {
        Space::Compositional if region.dim() == 3 => Ok(decoded_share_ranges(&ilr_polygon(region)?)),
        Space::Compositional => {
            let ilr = clr_region_to_ilr(region)?;
            let basis = helmert_basis(region.dim());
            let start = ilr_from_clr(witness, &basis);
            let draws = hit_and_run(&ilr, &start, config.samples.max(1), 10 * ilr.dim(), seed)?;
            let clr: Vec<Vec<f64>> = draws.iter().map(|w| crate::embed::clr_from_ilr(w, &basis)).collect();
            decoded_share_ranges_sampled(&clr)
        }
        _ => region.project_all(),
    }
}

fn component_names(config: &RunConfig, dim: usize) -> Vec<String> {
    match config.space {
        Space::Compositional | Space::CompositionalZeros => (1..=dim).map(|j| format!("y{j}")).collect(),
        Space::Distribution => config.eval_grid.iter().map(|q| format!("q{}", fmt_g12(*q))).collect(),
        Space::Interval => vec!["neg_lower".into(), "upper".into()],
        Space::Scalar => vec!["y".into()],
        Space::Network | Space::Spd => {
            let m = (dim as f64).sqrt().round() as usize;
            (0..dim).map(|k| format!("e{}_{}", k / m + 1, k % m + 1)).collect()
        }
    }
}

/// The control mean in the table's coordinates.
fn control_in_table_coords(config: &RunConfig, mu0: &[f64]) -> Result<Vec<f64>> {
    match config.space {
        Space::Compositional => Ok(aitchison_inverse(mu0)?.parts().to_vec()),
        _ => Ok(mu0.to_vec()),
    }
}

/// Raw treated-selected outcome rows for the naive componentwise bounds.
fn naive_bounds(config: &RunConfig, raw: &RawDataset, data: &EmbeddedDataset, p: TrimFraction) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<&[f64]> = match config.space {
        Space::Compositional | Space::Scalar => {
            raw.units.iter().filter(|u| u.treated && u.selected).map(|u| u.values.as_slice()).collect()
        }
        _ => data.selected_outcomes(true),
    };
    naive_lee_componentwise(&rows, p)
}

/// Decodes an embedded point to flat object coordinates for CSV output.
fn decode_flat(config: &RunConfig, v: &[f64]) -> Result<Vec<f64>> {
    Ok(match config.space {
        Space::Compositional => Aitchison { k: v.len() }.decode(v)?.parts().to_vec(),
        Space::CompositionalZeros => {
            let space = match &config.sphere_reference {
                Some(mu) => SphereSpace::new(mu.clone())?,
                None => SphereSpace::barycentric(v.len()),
            };
            space.decode(v)?.parts().to_vec()
        }
        Space::Interval => {
            let x = interval_inverse(v)?;
            vec![x.lower, x.upper]
        }
        Space::Spd => spd_inverse(v, config.spd_mode())?.entries,
        Space::Distribution | Space::Network | Space::Scalar => v.to_vec(),
    })
}

fn in_image(config: &RunConfig, v: &[f64]) -> bool {
    decode_flat(config, v).is_ok()
}

/// Runs the pipeline up to `stage` and writes its files into `out_dir`:
/// `region.json`, `projections.csv`, plot data, and for the effects stage
/// `effect_region.json`, `effects.csv` and `geodesics.csv`.
pub fn run_pipeline(config: &RunConfig, raw: &RawDataset, out_dir: &Path, stage: Stage) -> Result<PipelineOutput> {
    let analysis = analyze(config, raw, stage)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut w = Writer { dir: out_dir, out: PipelineOutput::default() };
    let Analysis { data, profile, region, inference, mu0 } = &analysis;

    let report = match inference {
        Some(inf) => RegionReport::from_inference(inf, config.alpha, config.seed),
        None => RegionReport::from_profile(profile, config.seed),
    };
    w.write("region.json", &report.to_json())?;

    let witness = profile.witness.clone().unwrap_or_else(|| vec![0.0; data.dim()]);
    let set = component_ranges(config, region, &witness, config.seed)?;
    let ci = match inference {
        Some(inf) => Some(component_ranges(config, &inf.region, &witness, config.seed)?),
        None => None,
    };
    let naive = if config.lambda.is_none() && config.covariate.is_none() {
        Some(naive_bounds(config, raw, data, profile.p)?)
    } else {
        None
    };
    let names = component_names(config, set.len());
    let control = match mu0 {
        Some(m) => control_in_table_coords(config, m)?,
        None => vec![f64::NAN; set.len()],
    };
    let rows: Vec<ProjectionRow> = (0..set.len())
        .map(|j| ProjectionRow {
            component: names[j].clone(),
            control_mean: control[j],
            set: set[j],
            ci: ci.as_ref().map(|c| c[j]),
            naive: naive.as_ref().and_then(|n| n.get(j).copied()),
        })
        .collect();
    w.write("projections.csv", &projection_table_csv(&rows))?;

    match config.space {
        Space::Compositional if data.dim() == 3 => {
            let poly = ilr_polygon(region)?;
            w.write("polygon.csv", &poly.to_csv())?;
            w.write("ternary.csv", &ternary_csv(&poly)?)?;
            if let Some(inf) = inference {
                let poly = ilr_polygon(&inf.region)?;
                w.write("polygon_ci.csv", &poly.to_csv())?;
                w.write("ternary_ci.csv", &ternary_csv(&poly)?)?;
            }
        }
        Space::Distribution => {
            let qgrid = ProbabilityGrid::new(config.eval_grid.clone()).map_err(|e| Error::Config(e.to_string()))?;
            w.write("band.csv", &quantile_band(region, &qgrid)?.to_csv())?;
            if let Some(inf) = inference {
                w.write("band_ci.csv", &quantile_band(&inf.region, &qgrid)?.to_csv())?;
            }
        }
        _ if data.dim() == 2 => {
            w.write("polygon.csv", &vertices_2d(region)?.to_csv())?;
            if let Some(inf) = inference {
                w.write("polygon_ci.csv", &vertices_2d(&inf.region)?.to_csv())?;
            }
        }
        _ => {}
    }

    if stage == Stage::Effects {
        let inf = inference.as_ref().expect("effects stage runs inference");
        let mu0 = mu0.as_ref().expect("plain model has a control mean");
        let joint = inf.joint.as_ref().expect("joint region requested");
        let effect = embedded_effect_region(&joint.region, ControlMean::Box { lower: &joint.box_lower, upper: &joint.box_upper })?;
        let mut effect_report = report.clone();
        effect_report.offsets = effect.offsets().iter().copied().map(crate::report::round12).collect();
        effect_report.joint = None;
        w.write("effect_region.json", &effect_report.to_json())?;

        let point = embedded_effect_region(region, ControlMean::Point(mu0))?;
        let control = control_in_table_coords(config, mu0)?;
        let set_shift: Vec<(f64, f64)> = if config.space == Space::Compositional {
            set.iter().zip(&control).map(|((lo, hi), c)| (lo - c, hi - c)).collect()
        } else {
            point.project_all()?
        };
        let mut csv = String::from("component,effect_lo,effect_hi\n");
        for (name, (lo, hi)) in names.iter().zip(&set_shift) {
            let _ = writeln!(csv, "{name},{},{}", fmt_g12(*lo), fmt_g12(*hi));
        }
        w.write("effects.csv", &csv)?;

        let samples = geodesic_samples(config, mu0, region, &witness)?;
        w.write("geodesics.csv", &samples)?;
    }
    Ok(w.out)
}

/// Long-format geodesic paths from the control mean to sampled set points:
/// `sample,t,c1,...` with decoded object coordinates.
fn geodesic_samples(config: &RunConfig, mu0: &[f64], region: &HalfspaceRegion, witness: &[f64]) -> Result<String> {
    struct Flat<'a>(&'a RunConfig, usize);
    impl ObjectSpace for Flat<'_> {
        type Object = Vec<f64>;
        fn dim(&self) -> usize {
            self.1
        }
        fn embed(&self, x: &Vec<f64>) -> std::result::Result<crate::EmbeddedVector, crate::EmbedError> {
            Ok(crate::EmbeddedVector(x.clone()))
        }
        fn decode(&self, v: &[f64]) -> std::result::Result<Vec<f64>, crate::EmbedError> {
            decode_flat(self.0, v).map_err(|e| match e {
                Error::Embed(inner) => inner,
                other => crate::EmbedError::NotInImage(other.to_string()),
            })
        }
        fn in_image(&self, v: &[f64]) -> bool {
            in_image(self.0, v)
        }
    }
    let n = config.samples.min(200);
    let space = Flat(config, region.dim());
    let paths = match config.space {
        Space::Compositional | Space::CompositionalZeros => {
            // the set lives in the image subspace; walk there and map back
            let basis = match config.space {
                Space::Compositional => helmert_basis(region.dim()),
                _ => tangent_basis(config, region.dim())?,
            };
            let sub = crate::effects::restrict_to_basis(region, &basis)?;
            let start: Vec<f64> = basis.iter().map(|b| crate::embed::dot(b, witness)).collect();
            hit_and_run(&sub, &start, n, 10 * sub.dim(), config.seed)?
                .iter()
                .map(|w| {
                    let v: Vec<f64> = (0..region.dim()).map(|i| basis.iter().zip(w).map(|(b, c)| b[i] * c).sum()).collect();
                    crate::effects::geodesic(&space, mu0, &v, &config.geodesic_t)
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => geodesic_effect_set(&space, mu0, region, witness, n, config.seed, &config.geodesic_t)?,
    };
    let width = paths.first().and_then(|p| p.points.first()).map_or(0, Vec::len);
    let mut out = String::from("sample,t");
    (1..=width).for_each(|j| {
        let _ = write!(out, ",c{j}");
    });
    out.push('\n');
    for (s, path) in paths.iter().enumerate() {
        for (t, pt) in path.t.iter().zip(&path.points) {
            let cells: Vec<String> = pt.iter().map(|v| fmt_g12(*v)).collect();
            let _ = writeln!(out, "{},{},{}", s + 1, fmt_g12(*t), cells.join(","));
        }
    }
    Ok(out)
}

/// Orthonormal basis of the tangent space at the sphere reference point.
fn tangent_basis(config: &RunConfig, k: usize) -> Result<Vec<Vec<f64>>> {
    let mu = match &config.sphere_reference {
        Some(m) => m.clone(),
        None => crate::embed::sphere_barycenter(k),
    };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..k {
        let mut v = vec![0.0; k];
        v[j] = 1.0;
        for b in std::iter::once(&mu).chain(basis.iter()) {
            let c = crate::embed::dot(b, &v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let len = crate::embed::norm(&v);
        if len > 1e-8 {
            basis.push(v.into_iter().map(|x| x / len).collect());
        }
        if basis.len() == k - 1 {
            break;
        }
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{generate_design, DesignSpec};

    #[test]
    fn compositional_run_writes_files() {
        let raw = generate_design(&DesignSpec::atus_like(400, 0.9, 0.85), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig { bootstrap: 50, variance_replications: 50, directions: 60, samples: 20, ..Default::default() };
        let out = run_pipeline(&config, &raw, dir.path(), Stage::Effects).unwrap();
        let names: Vec<String> = out.files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        for f in ["region.json", "projections.csv", "polygon.csv", "ternary.csv", "ternary_ci.csv", "effects.csv", "geodesics.csv"] {
            assert!(names.contains(&f.to_string()), "{f} missing");
        }
        let ternary = std::fs::read_to_string(dir.path().join("ternary.csv")).unwrap();
        for line in ternary.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert!(v[..3].iter().all(|s| *s > 0.0));
            assert!((v[0] + v[1] + v[2] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn scalar_run_reports_lee_bounds() {
        let text = "unit_id,D,S,y\na,1,1,1\nb,1,1,2\nc,1,1,3\nd,1,1,4\ne,0,1,0\nf,0,0,\n";
        let raw = crate::io::parse_raw(text, Space::Scalar, None).unwrap();
        let config = RunConfig { space: Space::Scalar, ..Default::default() };
        let a = analyze(&config, &raw, Stage::Estimate).unwrap();
        assert_eq!(a.region.project_interval(0).unwrap(), (1.5, 3.5));
    }

    #[test]
    fn inference_rejects_covariate_models() {
        let raw = generate_design(&DesignSpec::custom(100, 0.9, 0.8), 1).unwrap();
        let config = RunConfig { space: Space::Scalar, lambda: Some(0.1), ..Default::default() };
        assert!(analyze(&config, &raw, Stage::Estimate).is_ok());
        assert_eq!(analyze(&config, &raw, Stage::Infer).unwrap_err().exit_code(), 4);
    }
}
