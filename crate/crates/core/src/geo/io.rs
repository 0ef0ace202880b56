//! Insolation and yield CSV loaders, and the run output writers.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dispatch::{InsolationSeries, DAYS_PER_YEAR};
use crate::error::{io_err, ModelError, Result};
use crate::model::TradeRegime;

use super::anchors::AnchorTable;
use super::eval::{CellIssue, EvaluationRun, Grid, GridCell, LatitudeProfile};

/// kWh/kWp per kWh/m^2 of horizontal irradiation, used when no yield file is
/// supplied.
pub const DEFAULT_PERFORMANCE_RATIO: f64 = 0.8;
pub const SIGNIFICANT_DIGITS: usize = 6;

/// Cell key at micro-degree resolution.
fn key(lat: f64, lon: f64) -> (i64, i64) {
    ((lat * 1e6).round() as i64, (lon * 1e6).round() as i64)
}

#[derive(Debug, Deserialize)]
struct InsolationRow {
    lat: f64,
    lon: f64,
    day: i64,
    #[serde(alias = "ghi_kwh_m2_day")]
    ghi: f64,
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

/// Reads `lat,lon,day,ghi` rows (day 1..365, kWh/m^2/day). Cells with missing
/// days are rejected with a report; malformed rows and duplicate days fail.
/// Yields default to `DEFAULT_PERFORMANCE_RATIO` times the annual GHI.
pub fn read_insolation_csv<R: Read>(reader: R) -> Result<Grid> {
    let mut groups: BTreeMap<(i64, i64), (f64, f64, Vec<Option<f64>>)> = BTreeMap::new();
    for (i, row) in csv_reader(reader).deserialize::<InsolationRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| ModelError::Data(format!("insolation row {line}: {e}")))?;
        if !(row.lat.is_finite() && row.lon.is_finite() && row.lat.abs() <= 90.0 && row.lon.abs() <= 360.0) {
            return Err(ModelError::Data(format!("insolation row {line}: bad coordinates")));
        }
        if !(1..=DAYS_PER_YEAR as i64).contains(&row.day) {
            return Err(ModelError::Data(format!("insolation row {line}: day {} outside 1..365", row.day)));
        }
        if !(row.ghi.is_finite() && row.ghi >= 0.0) {
            return Err(ModelError::Data(format!("insolation row {line}: ghi {} must be >= 0", row.ghi)));
        }
        let entry = groups
            .entry(key(row.lat, row.lon))
            .or_insert_with(|| (row.lat, row.lon, vec![None; DAYS_PER_YEAR]));
        let slot = &mut entry.2[row.day as usize - 1];
        if slot.is_some() {
            return Err(ModelError::Data(format!(
                "insolation row {line}: duplicate day {} for cell ({}, {})",
                row.day, row.lat, row.lon
            )));
        }
        *slot = Some(row.ghi);
    }
    let mut grid = Grid::default();
    for (lat, lon, days) in groups.into_values() {
        let missing: Vec<usize> = days.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(d, _)| d + 1).collect();
        if !missing.is_empty() {
            grid.rejected.push(CellIssue {
                lat,
                lon,
                outside_domain: false,
                reason: format!("cell ({lat}, {lon}) is missing days {}", summarize_days(&missing)),
            });
            continue;
        }
        let series = InsolationSeries::new(days.into_iter().flatten().collect())?.with_source("csv");
        let ep = series.annual_total() * DEFAULT_PERFORMANCE_RATIO;
        grid.cells.push(GridCell::from_series(lat, lon, series, ep)?);
    }
    sort_cells(&mut grid.cells);
    Ok(grid)
}

fn sort_cells(cells: &mut [GridCell]) {
    cells.sort_by(|a, b| a.lat.total_cmp(&b.lat).then(a.lon.total_cmp(&b.lon)));
}

fn summarize_days(days: &[usize]) -> String {
    const SHOWN: usize = 8;
    let head: Vec<String> = days.iter().take(SHOWN).map(|d| d.to_string()).collect();
    if days.len() > SHOWN {
        format!("{} and {} more", head.join(", "), days.len() - SHOWN)
    } else {
        head.join(", ")
    }
}

pub fn load_insolation_csv(path: &Path) -> Result<Grid> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_insolation_csv(file).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: ModelError) -> ModelError {
    match e {
        ModelError::Data(m) => ModelError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

/// Writes every cell that carries a series, with full precision.
pub fn write_insolation_csv<W: Write>(cells: &[GridCell], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| ModelError::Data(e.to_string());
    w.write_record(["lat", "lon", "day", "ghi"]).map_err(csv_err)?;
    for c in cells {
        let Some(series) = &c.series else { continue };
        for (d, v) in series.values().iter().enumerate() {
            w.write_record([c.lat.to_string(), c.lon.to_string(), (d + 1).to_string(), v.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| ModelError::Data(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct YieldRow {
    lat: f64,
    lon: f64,
    kwh_per_kwp_year: f64,
}

/// Reads `lat,lon,kwh_per_kwp_year` rows.
pub fn read_yield_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64, f64)>> {
    let mut seen = std::collections::BTreeSet::new();
    csv_reader(reader)
        .deserialize::<YieldRow>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| ModelError::Data(format!("yield row {}: {e}", i + 2)))?;
            if !(r.kwh_per_kwp_year.is_finite() && r.kwh_per_kwp_year > 0.0) {
                return Err(ModelError::Data(format!("yield row {}: yield must be > 0", i + 2)));
            }
            if !seen.insert(key(r.lat, r.lon)) {
                return Err(ModelError::Data(format!("yield row {}: duplicate cell ({}, {})", i + 2, r.lat, r.lon)));
            }
            Ok((r.lat, r.lon, r.kwh_per_kwp_year))
        })
        .collect()
}

pub fn load_yield_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_yield_csv(file).map_err(|e| with_path(path, e))
}

/// Replaces the default yields; returns how many cells had no yield row.
pub fn apply_yields(grid: &mut Grid, yields: &[(f64, f64, f64)]) -> usize {
    let table: BTreeMap<_, _> = yields.iter().map(|&(lat, lon, y)| (key(lat, lon), y)).collect();
    let mut unmatched = 0;
    for c in &mut grid.cells {
        match table.get(&key(c.lat, c.lon)) {
            Some(&y) => c.yield_ep = y,
            None => unmatched += 1,
        }
    }
    unmatched
}

/// Decimal text with `digits` significant digits; plain notation for
/// moderate magnitudes, exponent notation otherwise.
pub fn format_significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci.split_once('e').map_or(0, |(_, e)| e.parse().unwrap_or(0));
    if (-4..15).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn sig(x: f64) -> String {
    format_significant(x, SIGNIFICANT_DIGITS)
}

fn opt_sig(x: Option<f64>) -> String {
    x.map(sig).unwrap_or_default()
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFiles {
    pub regime_csvs: Vec<PathBuf>,
    pub profile_csv: PathBuf,
    pub manifest: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    label: &'a str,
    input_hash: &'a str,
    config: &'a super::eval::RunConfig,
    baseload: &'a crate::model::BaseloadBackupCost,
    estar: f64,
    anchors: &'a AnchorTable,
    cells_evaluated: usize,
    issues: &'a [CellIssue],
    profile_notes: &'a [String],
    files: Vec<String>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn regime_csv_name(regime: TradeRegime) -> String {
    format!("{}.csv", regime.as_str())
}

/// Per-regime raster CSVs, latitude profile CSV, and `manifest.json`.
/// Byte-identical for identical runs.
pub fn write_outputs(run: &EvaluationRun, profile: &LatitudeProfile, anchors: &AnchorTable, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut regime_csvs = Vec::new();
    for &regime in &run.config.regimes {
        let mut text = String::from("lat,lon,beta,unit_cost,wtp\n");
        for c in &run.cells {
            if let Some(r) = c.get(regime) {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    sig(c.lat),
                    sig(c.lon),
                    sig(r.beta_star),
                    sig(r.unit_cost),
                    opt_sig(r.wtp)
                ));
            }
        }
        let path = dir.join(regime_csv_name(regime));
        write_file(&path, text.as_bytes())?;
        regime_csvs.push(path);
    }

    let mut text = String::from("lat_lo,lat_hi,cells");
    for r in &profile.regimes {
        text.push_str(&format!(",{r}_beta,{r}_unit_cost,{r}_wtp"));
    }
    text.push('\n');
    for row in &profile.rows {
        text.push_str(&format!("{},{},{}", sig(row.lat_lo), sig(row.lat_hi), row.cells));
        for m in &row.regimes {
            text.push_str(&format!(",{},{},{}", sig(m.beta_star), sig(m.unit_cost), opt_sig(m.wtp)));
        }
        text.push('\n');
    }
    let profile_csv = dir.join("latitude_profile.csv");
    write_file(&profile_csv, text.as_bytes())?;

    let mut files: Vec<String> = run.config.regimes.iter().map(|&r| regime_csv_name(r)).collect();
    files.push("latitude_profile.csv".into());
    let manifest = Manifest {
        label: &run.label,
        input_hash: &run.input_hash,
        config: &run.config,
        baseload: &run.baseload,
        estar: run.estar,
        anchors,
        cells_evaluated: run.cells.len(),
        issues: &run.issues,
        profile_notes: &profile.notes,
        files,
    };
    let manifest_path = dir.join("manifest.json");
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| ModelError::Data(e.to_string()))?;
    json.push(b'\n');
    write_file(&manifest_path, &json)?;
    Ok(OutputFiles {
        regime_csvs,
        profile_csv,
        manifest: manifest_path,
    })
}

/// One row of a regime CSV as read back.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct RasterRow {
    pub lat: f64,
    pub lon: f64,
    pub beta: f64,
    pub unit_cost: f64,
    pub wtp: Option<f64>,
}

pub fn read_regime_csv(path: &Path) -> Result<Vec<RasterRow>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    csv_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| ModelError::Data(format!("{}: {e}", path.display()))))
        .collect()
}
