//! Result files: CSV tables, one JSON summary per run, SVG plots.
//!
//! Every CSV file opens with comment lines carrying the tool version and the
//! resolved run config as JSON, so `--config <file>.csv` re-runs it. Column
//! schemas are the field names of the row types serialized here.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use plotters::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::experiment::ScanResult;
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Prefix of the CSV comment line holding the run config.
pub const CONFIG_COMMENT_PREFIX: &str = "# config: ";
const VERSION_COMMENT_PREFIX: &str = "# dgue ";

/// Provenance shared by every result file of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl RunInfo {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: "dgue".into(),
            version: VERSION.into(),
            command: command.into(),
            seed: config.seed,
            config: config.clone(),
        }
    }
}

/// JSON summary: run provenance plus command-specific results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    #[serde(flatten)]
    pub info: RunInfo,
    pub results: T,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))
}

pub fn write_json<T: Serialize>(path: &Path, info: &RunInfo, results: &T) -> Result<()> {
    let summary = Summary { info: info.clone(), results };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_error(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Summary<T>> {
    let file = File::open(path).map_err(io_error(path))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Writes the resolved config as TOML.
pub fn write_config(path: &Path, config: &RunConfig) -> Result<()> {
    let text = format!("# dgue {VERSION} resolved configuration\n{}", config.to_toml());
    std::fs::write(path, text).map_err(io_error(path))
}

pub fn write_csv<T: Serialize>(path: &Path, info: &RunInfo, rows: &[T]) -> Result<()> {
    let mut file = File::create(path).map_err(io_error(path))?;
    writeln!(file, "{VERSION_COMMENT_PREFIX}{} {}", info.version, info.command).map_err(io_error(path))?;
    writeln!(file, "{CONFIG_COMMENT_PREFIX}{}", serde_json::to_string(&info.config)?)
        .map_err(io_error(path))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(io_error(path))?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`], returning the embedded config (if
/// present) and the rows.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<(Option<RunConfig>, Vec<T>)> {
    let file = File::open(path).map_err(io_error(path))?;
    let mut config = None;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_error(path))?;
        if !line.starts_with('#') {
            break;
        }
        if let Some(json) = line.strip_prefix(CONFIG_COMMENT_PREFIX) {
            config = Some(serde_json::from_str(json)?);
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok((config, rows))
}

/// Log-log plot of one scan: estimates with ±1σ error bars, the fitted line,
/// and a dashed reference line of slope `reference_slope` through the
/// geometric centre of the data.
pub fn plot_scan(path: &Path, scan: &ScanResult, reference_slope: Option<f64>, title: &str) -> Result<()> {
    let points: Vec<(f64, f64, f64, f64)> = scan
        .estimates
        .iter()
        .map(|e| {
            let lo = (e.total_iq - e.std_error).max(e.total_iq * 1e-3);
            ((e.n as f64).ln(), e.total_iq.ln(), lo.ln(), (e.total_iq + e.std_error).ln())
        })
        .collect();
    if points.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    let (x_min, x_max) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y_min, y_max) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.2), b.max(p.3)));
    let x_pad = 0.08 * (x_max - x_min).max(0.1);
    let y_pad = 0.12 * (y_max - y_min).max(0.1);
    let x_range = (x_min - x_pad)..(x_max + x_pad);
    let y_range = (y_min - y_pad)..(y_max + y_pad);

    let draw = || -> std::result::Result<(), Box<dyn std::error::Error>> {
        let root = SVGBackend::new(path, (720, 540)).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(16)
            .x_label_area_size(44)
            .y_label_area_size(64)
            .build_cartesian_2d(x_range.clone(), y_range.clone())?;
        chart
            .configure_mesh()
            .x_desc("ln N")
            .y_desc(format!("ln I_q  (q = {})", scan.q))
            .draw()?;

        let fit = |x: f64| scan.intercept + scan.slope * x;
        chart
            .draw_series(LineSeries::new(
                [x_range.start, x_range.end].map(|x| (x, fit(x))),
                BLUE.stroke_width(2),
            ))?
            .label(format!("least squares: slope {:.3} ± {:.3}", scan.slope, scan.slope_stderr))
            .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], BLUE.stroke_width(2)));

        if let Some(a) = reference_slope {
            let n = points.len() as f64;
            let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
            let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
            chart
                .draw_series(DashedLineSeries::new(
                    [x_range.start, x_range.end].map(|x| (x, cy + a * (x - cx))),
                    8,
                    6,
                    RED.stroke_width(2),
                ))?
                .label(format!("predicted slope {a:.3}"))
                .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], RED.stroke_width(2)));
        }

        chart.draw_series(
            points.iter().map(|&(x, _, lo, hi)| ErrorBar::new_vertical(x, lo, (lo + hi) / 2.0, hi, BLACK.filled(), 8)),
        )?;
        chart.draw_series(points.iter().map(|&(x, y, _, _)| Circle::new((x, y), 4, BLACK.filled())))?;
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::UpperRight)
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })
}
