//! CSV datasets: raw outcomes per unit, one schema per outcome space.
//!
//! | space | header |
//! |---|---|
//! | compositional, compositional-zeros | `unit_id,D,S,y1,...,yk` |
//! | distribution | `unit_id,D,S,value` (one row per draw) |
//! | interval | `unit_id,D,S,lower,upper` |
//! | network, spd | `unit_id,D,S,m,e1,...,e{m*m}` (row-major) |
//! | scalar | `unit_id,D,S,y` |
//!
//! Outcome cells are empty when `S = 0`. An optional discrete covariate
//! occupies one extra trailing column.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{
    aitchison_embed, interval_embed, quantile_embed, sphere_barycenter, sphere_embed, spd_embed, CompositionPoint,
    EmbeddedVector, IntervalPoint, LaplacianPoint, ProbabilityGrid, SpdMode, SpdPoint,
};
use crate::error::{Error, Result};
use crate::selection::{EmbeddedDataset, Unit};

/// Outcome space of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    Compositional,
    CompositionalZeros,
    Distribution,
    Interval,
    Network,
    Spd,
    Scalar,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Compositional => "compositional",
            Space::CompositionalZeros => "compositional-zeros",
            Space::Distribution => "distribution",
            Space::Interval => "interval",
            Space::Network => "network",
            Space::Spd => "spd",
            Space::Scalar => "scalar",
        }
    }
}

impl std::str::FromStr for Space {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "compositional" => Space::Compositional,
            "compositional-zeros" => Space::CompositionalZeros,
            "distribution" => Space::Distribution,
            "interval" => Space::Interval,
            "network" => Space::Network,
            "spd" => Space::Spd,
            "scalar" => Space::Scalar,
            other => return Err(Error::Config(format!("unknown space {other:?}"))),
        })
    }
}

/// One unit with its raw outcome numbers (parts, draws, bounds or matrix entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawUnit {
    pub id: String,
    pub treated: bool,
    pub selected: bool,
    /// Empty when not selected.
    pub values: Vec<f64>,
    pub covariate: Option<String>,
}

/// A dataset as stored on disk, before embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub space: Space,
    /// Parts `k` (compositional), side `m` (matrices); unused otherwise.
    pub width: usize,
    pub covariate: Option<String>,
    pub units: Vec<RawUnit>,
}

/// Embedding parameters per space.
#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    Aitchison,
    /// Sphere log map at `mu`; the barycenter when `None`.
    Sphere(Option<Vec<f64>>),
    Quantile(ProbabilityGrid),
    Interval,
    /// Graph Laplacians with edge weights in `[0, max_weight]`.
    Laplacian { max_weight: f64 },
    Spd(SpdMode),
    Scalar,
}

impl Embedding {
    pub fn space(&self) -> Space {
        match self {
            Embedding::Aitchison => Space::Compositional,
            Embedding::Sphere(_) => Space::CompositionalZeros,
            Embedding::Quantile(_) => Space::Distribution,
            Embedding::Interval => Space::Interval,
            Embedding::Laplacian { .. } => Space::Network,
            Embedding::Spd(_) => Space::Spd,
            Embedding::Scalar => Space::Scalar,
        }
    }

    fn apply(&self, values: &[f64], width: usize) -> std::result::Result<EmbeddedVector, crate::EmbedError> {
        match self {
            Embedding::Aitchison => aitchison_embed(&CompositionPoint::new(values.to_vec())?),
            Embedding::Sphere(mu) => {
                let bary;
                let mu = match mu {
                    Some(m) => m.as_slice(),
                    None => {
                        bary = sphere_barycenter(values.len());
                        &bary
                    }
                };
                sphere_embed(&CompositionPoint::new(values.to_vec())?, mu)
            }
            Embedding::Quantile(grid) => Ok(quantile_embed(values, grid)?.embed()),
            Embedding::Interval => interval_embed(&IntervalPoint::new(values[0], values[1])?),
            Embedding::Laplacian { max_weight } => Ok(LaplacianPoint::new(width, values.to_vec(), *max_weight)?.embed()),
            Embedding::Spd(mode) => spd_embed(&SpdPoint::new(width, values.to_vec())?, *mode),
            Embedding::Scalar => Ok(EmbeddedVector(values.to_vec())),
        }
    }

    /// Embedding dimension for outcomes of the given raw width.
    pub fn dim(&self, width: usize) -> usize {
        match self {
            Embedding::Aitchison | Embedding::Sphere(_) => width,
            Embedding::Quantile(grid) => grid.len(),
            Embedding::Interval => 2,
            Embedding::Laplacian { .. } | Embedding::Spd(_) => width * width,
            Embedding::Scalar => 1,
        }
    }
}

impl RawDataset {
    /// Applies the embedding to every selected unit; errors carry the unit's position.
    pub fn embed(&self, embedding: &Embedding) -> Result<EmbeddedDataset> {
        if embedding.space() != self.space
            && !matches!((embedding.space(), self.space), (Space::Compositional | Space::CompositionalZeros, Space::Compositional | Space::CompositionalZeros) | (Space::Network | Space::Spd, Space::Network | Space::Spd))
        {
            return Err(Error::Config(format!(
                "embedding for {} does not apply to a {} dataset",
                embedding.space().name(),
                self.space.name()
            )));
        }
        let dim = embedding.dim(self.width);
        let units = self
            .units
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let outcome = if u.selected {
                    Some(embedding.apply(&u.values, self.width).map_err(|source| Error::EmbedAt { row: i + 1, source })?.0)
                } else {
                    None
                };
                let mut unit = Unit::new(u.id.clone(), u.treated, outcome);
                unit.stratum = u.covariate.clone();
                Ok(unit)
            })
            .collect::<Result<Vec<_>>>()?;
        EmbeddedDataset::new(units, dim)
    }

    fn header(&self) -> String {
        let mut h = String::from("unit_id,D,S");
        match self.space {
            Space::Compositional | Space::CompositionalZeros => (1..=self.width).for_each(|j| {
                let _ = write!(h, ",y{j}");
            }),
            Space::Distribution => h.push_str(",value"),
            Space::Interval => h.push_str(",lower,upper"),
            Space::Network | Space::Spd => {
                h.push_str(",m");
                (1..=self.width * self.width).for_each(|j| {
                    let _ = write!(h, ",e{j}");
                });
            }
            Space::Scalar => h.push_str(",y"),
        }
        if let Some(c) = &self.covariate {
            h.push(',');
            h.push_str(c);
        }
        h
    }

    /// CSV text in the space's schema. Floats use shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        let blanks = match self.space {
            Space::Compositional | Space::CompositionalZeros => self.width,
            Space::Distribution | Space::Scalar => 1,
            Space::Interval => 2,
            Space::Network | Space::Spd => 1 + self.width * self.width,
        };
        for u in &self.units {
            let prefix = format!("{},{},{}", u.id, u.treated as u8, u.selected as u8);
            let tail = u.covariate.as_ref().map(|c| format!(",{c}")).unwrap_or_default();
            if !u.selected {
                let _ = writeln!(out, "{prefix}{}{tail}", ",".repeat(blanks));
                continue;
            }
            let fields: Vec<String> = u.values.iter().map(|v| format!("{v}")).collect();
            match self.space {
                Space::Distribution => {
                    for f in &fields {
                        let _ = writeln!(out, "{prefix},{f}{tail}");
                    }
                }
                Space::Network | Space::Spd => {
                    let _ = writeln!(out, "{prefix},{},{}{tail}", self.width, fields.join(","));
                }
                _ => {
                    let _ = writeln!(out, "{prefix},{}{tail}", fields.join(","));
                }
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn schema_err(row: usize, message: impl Into<String>) -> Error {
    Error::Schema { row, message: message.into() }
}

fn parse_flag(s: &str, row: usize, name: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(schema_err(row, format!("{name} must be 0 or 1, got {other:?}"))),
    }
}

fn parse_float(s: &str, row: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| schema_err(row, format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(schema_err(row, format!("non-finite value {s:?}")));
    }
    Ok(v)
}

fn expected_header(space: Space, names: &[String], covariate: Option<&str>) -> Result<usize> {
    let body_end = names.len() - covariate.map_or(0, |_| 1);
    if let Some(c) = covariate {
        if names.last().map(String::as_str) != Some(c) {
            return Err(schema_err(1, format!("last column must be the covariate {c:?}")));
        }
    }
    let body = &names[..body_end];
    if body.len() < 4 || body[0] != "unit_id" || body[1] != "D" || body[2] != "S" {
        return Err(schema_err(1, "header must start with unit_id,D,S"));
    }
    let rest: Vec<&str> = body[3..].iter().map(String::as_str).collect();
    let numbered = |prefix: &str, r: &[&str]| r.iter().enumerate().all(|(j, n)| *n == format!("{prefix}{}", j + 1));
    let width = match space {
        Space::Compositional | Space::CompositionalZeros if numbered("y", &rest) && rest.len() >= 2 => rest.len(),
        Space::Distribution if rest == ["value"] => 1,
        Space::Interval if rest == ["lower", "upper"] => 2,
        Space::Scalar if rest == ["y"] => 1,
        Space::Network | Space::Spd if rest[0] == "m" && numbered("e", &rest[1..]) => {
            let count = rest.len() - 1;
            let m = (count as f64).sqrt().round() as usize;
            if m * m != count || m == 0 {
                return Err(schema_err(1, format!("{count} matrix entries is not a square count")));
            }
            m
        }
        _ => return Err(schema_err(1, format!("header does not match the {} schema", space.name()))),
    };
    Ok(width)
}

/// Reads a raw dataset in the schema of `space`.
pub fn read_raw(path: &Path, space: Space, covariate: Option<&str>) -> Result<RawDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_raw(&text, space, covariate)
}

/// Parses CSV text in the schema of `space`. Row numbers in errors are file line numbers.
pub fn parse_raw(text: &str, space: Space, covariate: Option<&str>) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| schema_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let width = expected_header(space, &names, covariate)?;
    let n_fields = names.len();
    let n_outcome = n_fields - 3 - covariate.map_or(0, |_| 1);

    let mut units: Vec<RawUnit> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            schema_err(row, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != n_fields {
            return Err(schema_err(row, format!("expected {n_fields} fields, got {}", record.len())));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(schema_err(row, "empty unit_id"));
        }
        let treated = parse_flag(&record[1], row, "D")?;
        let selected = parse_flag(&record[2], row, "S")?;
        let cells: Vec<&str> = (3..3 + n_outcome).map(|j| &record[j]).collect();
        let cov = covariate.map(|_| record[n_fields - 1].to_string());
        if cov.as_deref() == Some("") {
            return Err(schema_err(row, "empty covariate"));
        }
        if !selected {
            if cells.iter().any(|c| !c.is_empty()) {
                return Err(schema_err(row, "outcome fields present for an unselected unit"));
            }
        } else if cells.iter().any(|c| c.is_empty()) {
            return Err(schema_err(row, "missing outcome field for a selected unit"));
        }
        let values: Vec<f64> = if selected {
            let numeric = match space {
                Space::Network | Space::Spd => {
                    let m: usize = cells[0].parse().map_err(|_| schema_err(row, format!("bad matrix size {:?}", cells[0])))?;
                    if m != width {
                        return Err(schema_err(row, format!("m = {m} but the header has {width}x{width} entries")));
                    }
                    &cells[1..]
                }
                _ => &cells[..],
            };
            numeric.iter().map(|c| parse_float(c, row)).collect::<Result<_>>()?
        } else {
            Vec::new()
        };

        if space == Space::Distribution {
            if let Some(&k) = index.get(&id) {
                let u: &mut RawUnit = &mut units[k];
                if u.treated != treated || u.selected != selected || u.covariate != cov {
                    return Err(schema_err(row, format!("unit {id:?} changes D, S or covariate between rows")));
                }
                if !selected {
                    return Err(schema_err(row, format!("unselected unit {id:?} has more than one row")));
                }
                u.values.extend(values);
                continue;
            }
        } else if index.contains_key(&id) {
            return Err(schema_err(row, format!("duplicate unit_id {id:?}")));
        }
        index.insert(id.clone(), units.len());
        units.push(RawUnit { id, treated, selected, values, covariate: cov });
    }
    Ok(RawDataset { space, width, covariate: covariate.map(str::to_string), units })
}

/// Reads and embeds a dataset.
pub fn read_dataset(path: &Path, embedding: &Embedding, covariate: Option<&str>) -> Result<EmbeddedDataset> {
    read_raw(path, embedding.space(), covariate)?.embed(embedding)
}
