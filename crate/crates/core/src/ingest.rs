//! Long-form monthly observation files and grid assembly.
//!
//! Every input file is delimited text with the header
//! `pixel_id,lon,lat,year,month,variable,value`, one observation per row.
//! Files are merged, filtered to the bounding box and time range, and
//! assembled into a [`PixelGrid`] with gap-free aligned series. A requested
//! `VPD` variable that is absent from the data is derived from `TMP` and
//! `VAP`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marginal::Orientation;
use crate::series::{MonthlyTimeSeries, Pixel, PixelGrid, SeriesError, TimeStamp};

/// Temperature (°C) at which the Magnus-type formula has its pole.
pub const SVP_POLE: f64 = -237.3;

pub const VPD: &str = "VPD";
pub const TMP: &str = "TMP";
pub const VAP: &str = "VAP";

pub const HEADER: [&str; 7] = ["pixel_id", "lon", "lat", "year", "month", "variable", "value"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("temperature {0} °C is at or below the pole of the vapor pressure formula")]
    DomainError(f64),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, row {row}: {reason}")]
    ParseError { path: String, row: u64, reason: String },
    #[error("pixel '{pixel}', variable '{variable}': missing month {stamp}")]
    GapError {
        pixel: String,
        variable: String,
        stamp: TimeStamp,
    },
    #[error("pixel '{pixel}': {reason}")]
    AlignmentError { pixel: String, reason: String },
    #[error("invalid dataset field '{field}': {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("no pixel left after filtering")]
    NoPixels,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Saturated vapor pressure in hPa for a temperature in °C.
pub fn svp(tmp: f64) -> Result<f64, IngestError> {
    if !(tmp > SVP_POLE) {
        return Err(IngestError::DomainError(tmp));
    }
    Ok(6.1078 * 10f64.powf(7.5 * tmp / (tmp + 237.3)))
}

/// Vapor pressure deficit `svp(tmp) - vap` in hPa.
pub fn vpd(tmp: f64, vap: f64) -> Result<f64, IngestError> {
    Ok(svp(tmp)? - vap)
}

/// Half-open box `[west, east) x [south, north)` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub west: f64,
    pub east: f64,
    pub south: f64,
    pub north: f64,
}

impl BoundingBox {
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        lon >= self.west && lon < self.east && lat >= self.south && lat < self.north
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    #[serde(default = "positive")]
    pub orientation: Orientation,
    /// File holding this variable's rows, in addition to the shared files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

fn positive() -> Orientation {
    Orientation::Positive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    /// Files that may hold rows of any variable.
    #[serde(default)]
    pub files: Vec<PathBuf>,
    pub variables: Vec<VariableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<TimeStamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<TimeStamp>,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), IngestError> {
        let invalid = |field: &str, reason: String| IngestError::InvalidSpec {
            field: field.to_string(),
            reason,
        };
        if self.variables.is_empty() {
            return Err(invalid("dataset.variables", "at least one variable is required".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, v) in self.variables.iter().enumerate() {
            if v.name.trim().is_empty() {
                return Err(invalid(&format!("dataset.variables[{i}].name"), "empty name".into()));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(invalid(&format!("dataset.variables[{i}].name"), format!("'{}' listed twice", v.name)));
            }
        }
        if self.all_files().is_empty() {
            return Err(invalid("dataset.files", "no input file given".into()));
        }
        if let Some(b) = &self.bbox {
            if !(b.west < b.east) {
                return Err(invalid("dataset.bbox", format!("west {} must be below east {}", b.west, b.east)));
            }
            if !(b.south < b.north) {
                return Err(invalid("dataset.bbox", format!("south {} must be below north {}", b.south, b.north)));
            }
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            if s > e {
                return Err(invalid("dataset.end", format!("{e} precedes start {s}")));
            }
        }
        Ok(())
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn all_files(&self) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self.files.clone();
        for f in self.variables.iter().filter_map(|v| v.file.clone()) {
            if !out.contains(&f) {
                out.push(f);
            }
        }
        out
    }

    /// Makes relative file paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.files.iter_mut().for_each(fix);
        self.variables.iter_mut().filter_map(|v| v.file.as_mut()).for_each(fix);
    }

    fn in_range(&self, t: TimeStamp) -> bool {
        self.start.is_none_or(|s| t >= s) && self.end.is_none_or(|e| t <= e)
    }
}

/// One row of the long-form format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub pixel_id: String,
    pub lon: f64,
    pub lat: f64,
    pub year: i32,
    pub month: u32,
    pub variable: String,
    pub value: f64,
}

/// Parses long-form rows. `source` names the input in error messages; row
/// numbers count the header as row 1.
pub fn read_observations<R: Read>(reader: R, source: &str) -> Result<Vec<Observation>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let parse = |row: u64, reason: String| IngestError::ParseError {
        path: source.to_string(),
        row,
        reason,
    };
    let headers = rdr.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(parse(1, format!("header must be '{}'", HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Observation>().enumerate() {
        let row = i as u64 + 2;
        let obs = rec.map_err(|e| parse(row, e.to_string()))?;
        if !(1..=12).contains(&obs.month) {
            return Err(parse(row, format!("month {} outside 1..=12", obs.month)));
        }
        if !obs.value.is_finite() || !obs.lon.is_finite() || !obs.lat.is_finite() {
            return Err(parse(row, "non-finite number".into()));
        }
        if obs.pixel_id.is_empty() || obs.variable.is_empty() {
            return Err(parse(row, "empty pixel_id or variable".into()));
        }
        out.push(obs);
    }
    Ok(out)
}

pub fn read_observations_file(path: &Path) -> Result<Vec<Observation>, IngestError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: name.clone(),
        source,
    })?;
    read_observations(std::io::BufReader::new(file), &name)
}

/// Writes observations in the long-form format. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_observations<W: Write>(writer: W, rows: &[Observation]) -> Result<(), IngestError> {
    let io = |e: csv::Error| IngestError::Io {
        path: "<output>".into(),
        source: std::io::Error::other(e),
    };
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    if rows.is_empty() {
        w.write_record(HEADER).map_err(io)?;
    }
    w.flush().map_err(|source| IngestError::Io {
        path: "<output>".into(),
        source,
    })
}

/// Flattens a grid back to long-form rows (pixel, variable, time order).
pub fn grid_observations(grid: &PixelGrid) -> Vec<Observation> {
    let mut rows = Vec::new();
    for p in grid.pixels() {
        for var in grid.variables() {
            let s = &p.series[var];
            for (t, v) in s.stamps().iter().zip(s.values()) {
                rows.push(Observation {
                    pixel_id: p.id.clone(),
                    lon: p.lon,
                    lat: p.lat,
                    year: t.year(),
                    month: t.month(),
                    variable: var.clone(),
                    value: *v,
                });
            }
        }
    }
    rows
}

pub fn write_grid<W: Write>(writer: W, grid: &PixelGrid) -> Result<(), IngestError> {
    write_observations(writer, &grid_observations(grid))
}

struct PixelRows {
    lon: f64,
    lat: f64,
    vars: HashMap<String, BTreeMap<TimeStamp, f64>>,
}

/// Reads every file of the dataset and assembles the grid.
pub fn load_grid(spec: &DatasetSpec) -> Result<PixelGrid, IngestError> {
    spec.validate()?;
    let files = spec.all_files();
    let parsed: Vec<Vec<Observation>> = files
        .par_iter()
        .map(|p| read_observations_file(p))
        .collect::<Result<_, _>>()?;
    let sources: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    assemble_grid(spec, parsed.iter().zip(&sources).map(|(rows, name)| (name.as_str(), rows.as_slice())))
}

/// Grid assembly from already parsed files, given as `(source name, rows)`.
pub fn assemble_grid<'a>(
    spec: &DatasetSpec,
    files: impl IntoIterator<Item = (&'a str, &'a [Observation])>,
) -> Result<PixelGrid, IngestError> {
    spec.validate()?;
    let wanted = spec.variable_names();
    let derive_vpd = wanted.iter().any(|v| v == VPD);
    let keep_var = |v: &str| wanted.iter().any(|w| w == v) || (derive_vpd && (v == TMP || v == VAP));

    let mut order: Vec<String> = Vec::new();
    let mut pixels: HashMap<String, PixelRows> = HashMap::new();
    for (source, rows) in files {
        for (i, obs) in rows.iter().enumerate() {
            let row = i as u64 + 2;
            let parse = |reason: String| IngestError::ParseError {
                path: source.to_string(),
                row,
                reason,
            };
            if !keep_var(&obs.variable) || spec.bbox.is_some_and(|b| !b.contains(obs.lon, obs.lat)) {
                continue;
            }
            let t = TimeStamp::new(obs.year, obs.month)?;
            if !spec.in_range(t) {
                continue;
            }
            let px = pixels.entry(obs.pixel_id.clone()).or_insert_with(|| {
                order.push(obs.pixel_id.clone());
                PixelRows {
                    lon: obs.lon,
                    lat: obs.lat,
                    vars: HashMap::new(),
                }
            });
            if px.lon != obs.lon || px.lat != obs.lat {
                return Err(parse(format!(
                    "pixel '{}' was first seen at ({}, {})",
                    obs.pixel_id, px.lon, px.lat
                )));
            }
            let series = px.vars.entry(obs.variable.clone()).or_default();
            if series.insert(t, obs.value).is_some() {
                return Err(parse(format!("duplicate {} value for '{}' at {t}", obs.variable, obs.pixel_id)));
            }
        }
    }
    if order.is_empty() {
        return Err(IngestError::NoPixels);
    }
    order.sort();

    let mut axis: Option<(TimeStamp, TimeStamp)> = spec.start.zip(spec.end);
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let mut px = pixels.remove(&id).expect("pixel recorded");
        if derive_vpd && !px.vars.contains_key(VPD) {
            let derived = derive_vpd_series(&id, &px)?;
            px.vars.insert(VPD.to_string(), derived);
        }
        let mut series = BTreeMap::new();
        for var in &wanted {
            let obs = px.vars.get(var).ok_or_else(|| IngestError::AlignmentError {
                pixel: id.clone(),
                reason: format!("variable '{var}' has no observations"),
            })?;
            let first = *obs.keys().next().expect("non-empty");
            let last = *obs.keys().next_back().expect("non-empty");
            let (start, end) = match axis {
                Some(a) => a,
                None => {
                    let a = (spec.start.unwrap_or(first), spec.end.unwrap_or(last));
                    axis = Some(a);
                    a
                }
            };
            if spec.start.is_none() && first != start || spec.end.is_none() && last != end {
                return Err(IngestError::AlignmentError {
                    pixel: id.clone(),
                    reason: format!("'{var}' spans {first}..{last}, other series span {start}..{end}"),
                });
            }
            let n = start.months_until(&end) + 1;
            let mut values = Vec::with_capacity(n as usize);
            for k in 0..n {
                let t = start.add_months(k);
                match obs.get(&t) {
                    Some(v) => values.push(*v),
                    None => {
                        return Err(IngestError::GapError {
                            pixel: id.clone(),
                            variable: var.clone(),
                            stamp: t,
                        })
                    }
                }
            }
            series.insert(var.clone(), MonthlyTimeSeries::from_start(var.clone(), start, values)?);
        }
        out.push(Pixel {
            id,
            lon: px.lon,
            lat: px.lat,
            series,
        });
    }
    Ok(PixelGrid::new(wanted, out)?)
}

fn derive_vpd_series(id: &str, px: &PixelRows) -> Result<BTreeMap<TimeStamp, f64>, IngestError> {
    let missing = |var: &str| IngestError::AlignmentError {
        pixel: id.to_string(),
        reason: format!("VPD requested but neither VPD nor {var} is present"),
    };
    let tmp = px.vars.get(TMP).ok_or_else(|| missing(TMP))?;
    let vap = px.vars.get(VAP).ok_or_else(|| missing(VAP))?;
    let mut out = BTreeMap::new();
    for (t, &temp) in tmp {
        match vap.get(t) {
            Some(&v) => {
                out.insert(*t, vpd(temp, v)?);
            }
            None => {
                return Err(IngestError::GapError {
                    pixel: id.to_string(),
                    variable: VAP.to_string(),
                    stamp: *t,
                })
            }
        }
    }
    if let Some(t) = vap.keys().find(|t| !tmp.contains_key(t)) {
        return Err(IngestError::GapError {
            pixel: id.to_string(),
            variable: TMP.to_string(),
            stamp: *t,
        });
    }
    Ok(out)
}
