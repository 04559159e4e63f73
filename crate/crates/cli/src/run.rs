//! The `si`, `smi` and `analyze` commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use drought_core::analytics::{area_affected, peak_extent, tau_map};
use drought_core::index::{si, smi_a, smi_m, smi_n, CopulaData, IndexMethod, IndexSeries, RosenblattData};
use drought_core::ingest::load_grid;
use drought_core::marginal::{fit_marginal, MarginalModel};
use drought_core::series::{Pixel, PixelGrid};
use drought_core::vine::{fit_vine, VineModel};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{
    read_index_table, sanitize, write_area, write_events, write_index_table, write_tau_map, IndexTable, PixelMeta,
};
use crate::CliError;

/// Persisted state of one pixel: its marginal fits and, for `smi`, the vine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelModel {
    pub pixel_id: String,
    pub lon: f64,
    pub lat: f64,
    pub marginals: Vec<MarginalModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vine: Option<VineModel>,
}

impl PixelModel {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub pixels_ok: usize,
    /// `(pixel id, reason)` for every failed pixel.
    pub failures: Vec<(String, String)>,
}

impl Report {
    pub fn all_failed(&self) -> bool {
        self.pixels_ok == 0 && !self.failures.is_empty()
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
}

fn meta(p: &Pixel) -> PixelMeta {
    PixelMeta {
        id: p.id.clone(),
        lon: p.lon,
        lat: p.lat,
    }
}

fn fit_marginals(cfg: &RunConfig, grid: &PixelGrid, pixel: &Pixel) -> Result<Vec<MarginalModel>, String> {
    let ds = cfg.dataset().map_err(|e| e.to_string())?;
    ds.variables
        .iter()
        .zip(grid.variables())
        .map(|(spec, name)| {
            let order = cfg.arma_order(name);
            fit_marginal(&pixel.series[name], spec.orientation, order.p, order.q)
                .map_err(|e| format!("variable {name}: {e}"))
        })
        .collect()
}

fn load(cfg: &RunConfig) -> Result<PixelGrid, CliError> {
    let grid = load_grid(cfg.dataset()?).map_err(|e| CliError::Data(e.to_string()))?;
    let t = grid.stamps().len();
    if let Some(&l) = cfg.scales.iter().find(|&&l| l > t) {
        return Err(CliError::Config {
            field: "scales".into(),
            reason: format!("time scale {l} exceeds the {t} months of data"),
        });
    }
    info!("loaded {} pixels x {} variables x {t} months", grid.pixels().len(), grid.variables().len());
    Ok(grid)
}

fn write_model(dir: &Path, model: &PixelModel) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.toml", sanitize(&model.pixel_id)));
    let text = toml::to_string(model).map_err(|e| CliError::Numerical(format!("serializing model: {e}")))?;
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn write_warnings(out: &Path, failures: &[(String, String)]) -> Result<Option<PathBuf>, CliError> {
    if failures.is_empty() {
        return Ok(None);
    }
    let path = out.join("warnings.txt");
    let text: String = failures.iter().map(|(id, why)| format!("{id}: {why}\n")).collect();
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(Some(path))
}

type PixelResult = Result<(PixelModel, Vec<(String, Vec<IndexSeries>)>), String>;

/// Collects per-pixel results into one table per (label, scale) and writes
/// tables, models and warnings.
fn finish(cfg: &RunConfig, out: &Path, pixels: &[Pixel], results: Vec<PixelResult>) -> Result<Report, CliError> {
    let models_dir = out.join("models");
    fs::create_dir_all(&models_dir).map_err(|e| CliError::io(&models_dir, e))?;
    let mut report = Report::default();
    let mut tables: BTreeMap<(String, usize), IndexTable> = BTreeMap::new();
    for (pixel, result) in pixels.iter().zip(results) {
        match result {
            Ok((model, indices)) => {
                write_model(&models_dir, &model)?;
                for (label, per_scale) in indices {
                    for s in per_scale {
                        let t = tables.entry((label.clone(), s.scale)).or_insert_with(|| IndexTable {
                            label: label.clone(),
                            pixels: Vec::new(),
                            series: Vec::new(),
                        });
                        t.pixels.push(meta(pixel));
                        t.series.push(s);
                    }
                }
                report.pixels_ok += 1;
            }
            Err(reason) => {
                warn!("pixel {}: {reason}", pixel.id);
                report.failures.push((pixel.id.clone(), reason));
            }
        }
    }
    // keep the configured scale order within each label
    let order = |l: usize| cfg.scales.iter().position(|&x| x == l).unwrap_or(usize::MAX);
    let mut keys: Vec<(String, usize)> = tables.keys().cloned().collect();
    keys.sort_by_key(|(label, l)| (label.clone(), order(*l)));
    for key in keys {
        let table = &tables[&key];
        let path = out.join(format!("{}_l{}.csv", sanitize(&key.0), key.1));
        write_index_table(&path, table)?;
        report.files.push(path);
    }
    report.files.extend(write_warnings(out, &report.failures)?);
    Ok(report)
}

/// Univariate index per pixel, variable and time scale.
pub fn cmd_si(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    cfg.validate_si()?;
    let grid = load(cfg)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let results: Vec<PixelResult> = pool(cfg.threads)?.install(|| {
        grid.pixels()
            .par_iter()
            .map(|pixel| {
                let marginals = fit_marginals(cfg, &grid, pixel)?;
                let mut indices = Vec::new();
                for m in &marginals {
                    let per_scale = cfg
                        .scales
                        .iter()
                        .map(|&l| si(m.start, &m.z, l).map_err(|e| e.to_string()))
                        .collect::<Result<Vec<_>, _>>()?;
                    indices.push((format!("SI_{}", m.variable), per_scale));
                }
                Ok((
                    PixelModel {
                        pixel_id: pixel.id.clone(),
                        lon: pixel.lon,
                        lat: pixel.lat,
                        marginals,
                        vine: None,
                    },
                    indices,
                ))
            })
            .collect()
    });
    finish(cfg, out, grid.pixels(), results)
}

fn smi_pixel(cfg: &RunConfig, grid: &PixelGrid, pixel: &Pixel) -> PixelResult {
    let marginals = fit_marginals(cfg, grid, pixel)?;
    let d = marginals.len();
    let u = CopulaData::from_marginals(&marginals).map_err(|e| e.to_string())?;
    let vine = fit_vine(
        u.columns(),
        &cfg.structure(d),
        grid.variables(),
        &cfg.vine.candidates(),
        cfg.vine.pretest(),
    )
    .map_err(|e| format!("vine: {e}"))?;
    let v = RosenblattData::from_vine(&vine, &u).map_err(|e| e.to_string())?;
    let w = cfg.weights_or_equal(d);
    let mut indices = Vec::new();
    for &method in &cfg.methods {
        let per_scale = cfg
            .scales
            .iter()
            .map(|&l| match method {
                IndexMethod::SmiA => smi_a(&v, &w, l),
                IndexMethod::SmiM => smi_m(&v, l),
                IndexMethod::SmiN => smi_n(&u, &w, l),
                IndexMethod::Si => unreachable!("rejected by validation"),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("{method}: {e}"))?;
        indices.push((method.label().to_string(), per_scale));
    }
    Ok((
        PixelModel {
            pixel_id: pixel.id.clone(),
            lon: pixel.lon,
            lat: pixel.lat,
            marginals,
            vine: Some(vine),
        },
        indices,
    ))
}

/// Multivariate indices: marginals, vine fit, Rosenblatt transform, then the
/// configured SMI variants per time scale.
pub fn cmd_smi(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    cfg.validate_smi()?;
    let grid = load(cfg)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let results: Vec<PixelResult> =
        pool(cfg.threads)?.install(|| grid.pixels().par_iter().map(|p| smi_pixel(cfg, &grid, p)).collect());
    finish(cfg, out, grid.pixels(), results)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| sanitize(&s.to_string_lossy())).unwrap_or_else(|| "index".into())
}

/// Area fractions, event peaks and tau maps from earlier index files.
pub fn cmd_analyze(cfg: &RunConfig, extra: &[PathBuf], out: &Path) -> Result<Report, CliError> {
    cfg.validate_analyze()?;
    let mut inputs = cfg.analyze.area.clone();
    inputs.extend(extra.iter().cloned());
    if inputs.is_empty() && cfg.analyze.tau.is_empty() {
        return Err(CliError::Config {
            field: "analyze".into(),
            reason: "no index files given".into(),
        });
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let analytics = |e: drought_core::analytics::AnalyticsError| CliError::Data(e.to_string());
    let mut report = Report::default();
    for path in &inputs {
        let table = read_index_table(path)?;
        let area = area_affected(&table.series, &cfg.analyze.categories).map_err(analytics)?;
        let name = stem(path);
        let area_path = out.join(format!("area_{name}.csv"));
        write_area(&area_path, &area)?;
        report.files.push(area_path);
        if !cfg.analyze.windows.is_empty() {
            let events = cfg
                .analyze
                .windows
                .iter()
                .map(|w| peak_extent(&area, (w.start, w.end)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(analytics)?;
            let ev_path = out.join(format!("events_{name}.csv"));
            write_events(&ev_path, &events)?;
            report.files.push(ev_path);
        }
        report.pixels_ok = report.pixels_ok.max(table.pixels.len());
    }
    for [a, b] in &cfg.analyze.tau {
        let (ta, tb) = (read_index_table(a)?, read_index_table(b)?);
        if ta.pixels.iter().map(|p| &p.id).ne(tb.pixels.iter().map(|p| &p.id)) {
            return Err(CliError::Data(format!(
                "{} and {} cover different pixels",
                a.display(),
                b.display()
            )));
        }
        let taus = pool(cfg.threads)?.install(|| tau_map(&ta.series, &tb.series)).map_err(analytics)?;
        let path = out.join(format!("tau_{}__{}.csv", stem(a), stem(b)));
        write_tau_map(&path, &ta.pixels, &taus)?;
        report.files.push(path);
        report.pixels_ok = report.pixels_ok.max(ta.pixels.len());
    }
    Ok(report)
}
