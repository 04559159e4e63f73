//! Delimited output files. Undefined values are written as `NA`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use drought_core::analytics::{AreaSeries, DroughtEvent};
use drought_core::index::{classify, IndexMethod, IndexSeries};
use drought_core::series::TimeStamp;

use crate::CliError;

pub const NA: &str = "NA";
pub const INDEX_HEADER: &str = "pixel_id,lon,lat,year,month,index,scale,value,category";

/// Location of one pixel in an output table.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMeta {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
}

/// All pixels of one index kind at one time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexTable {
    pub label: String,
    pub pixels: Vec<PixelMeta>,
    pub series: Vec<IndexSeries>,
}

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), |v| v.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn write_index_table(path: &Path, table: &IndexTable) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "{INDEX_HEADER}").map_err(io)?;
    for (p, s) in table.pixels.iter().zip(&table.series) {
        for (t, v) in s.stamps().iter().zip(&s.values) {
            let cat = v.map_or(NA, |x| classify(x).code());
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                p.id,
                p.lon,
                p.lat,
                t.year(),
                t.month(),
                table.label,
                s.scale,
                num(*v),
                cat
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn method_of(label: &str) -> Option<IndexMethod> {
    if label.starts_with("SI_") {
        Some(IndexMethod::Si)
    } else {
        label.parse().ok()
    }
}

/// Reads a file written by [`write_index_table`]. Every pixel must cover the
/// same consecutive stamps.
pub fn read_index_table(path: &Path) -> Result<IndexTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |line: usize, reason: String| CliError::Data(format!("{}, line {line}: {reason}", path.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == INDEX_HEADER => {}
        _ => return Err(bad(1, format!("header must be '{INDEX_HEADER}'"))),
    }
    let mut label: Option<String> = None;
    let mut pixels: Vec<PixelMeta> = Vec::new();
    let mut series: Vec<IndexSeries> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 {
            return Err(bad(n, format!("expected 9 fields, got {}", f.len())));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| bad(n, format!("'{s}': {e}")));
        let (lon, lat) = (parse_f(f[1])?, parse_f(f[2])?);
        let year: i32 = f[3].parse().map_err(|e| bad(n, format!("year: {e}")))?;
        let month: u32 = f[4].parse().map_err(|e| bad(n, format!("month: {e}")))?;
        let stamp = TimeStamp::new(year, month).map_err(|e| bad(n, e.to_string()))?;
        let scale: usize = f[6].parse().map_err(|e| bad(n, format!("scale: {e}")))?;
        let value = if f[7] == NA { None } else { Some(parse_f(f[7])?) };
        match &label {
            None => label = Some(f[5].to_string()),
            Some(l) if l != f[5] => return Err(bad(n, format!("index '{}' mixed with '{l}'", f[5]))),
            _ => {}
        }
        let method = method_of(f[5]).ok_or_else(|| bad(n, format!("unknown index '{}'", f[5])))?;
        if pixels.last().is_none_or(|p| p.id != f[0]) {
            if pixels.iter().any(|p| p.id == f[0]) {
                return Err(bad(n, format!("rows of pixel '{}' are not contiguous", f[0])));
            }
            pixels.push(PixelMeta {
                id: f[0].to_string(),
                lon,
                lat,
            });
            series.push(IndexSeries {
                start: stamp,
                values: Vec::new(),
                scale,
                method,
                weights: None,
            });
        }
        let s = series.last_mut().expect("pushed above");
        let expected = s.start.add_months(s.values.len() as i64);
        if stamp != expected {
            return Err(bad(n, format!("expected {expected}, found {stamp}")));
        }
        s.values.push(value);
    }
    let label = label.ok_or_else(|| bad(1, "no data rows".into()))?;
    if let Some(i) = series
        .iter()
        .position(|s| s.start != series[0].start || s.len() != series[0].len())
    {
        return Err(CliError::Data(format!(
            "{}: pixel '{}' is not aligned with '{}'",
            path.display(),
            pixels[i].id,
            pixels[0].id
        )));
    }
    Ok(IndexTable { label, pixels, series })
}

pub fn write_area(path: &Path, area: &AreaSeries) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "year,month,fraction").map_err(io)?;
    for (t, f) in area.stamps().iter().zip(&area.fraction) {
        writeln!(w, "{},{},{}", t.year(), t.month(), num(*f)).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_events(path: &Path, events: &[DroughtEvent]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "window_start,window_end,peak_stamp,peak_fraction").map_err(io)?;
    for e in events {
        writeln!(w, "{},{},{},{}", e.window.0, e.window.1, e.peak_stamp, e.peak_fraction).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_tau_map(path: &Path, pixels: &[PixelMeta], tau: &[Option<f64>]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "pixel_id,lon,lat,tau").map_err(io)?;
    for (p, t) in pixels.iter().zip(tau) {
        writeln!(w, "{},{},{},{}", p.id, p.lon, p.lat, num(*t)).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// File-name-safe version of an identifier.
pub fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
