//! Metrics CSV and SVG trend plots.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::experiment::{running_average, EpisodeMetrics, TrainingLog};
use crate::world::DoneReason;

pub const CSV_HEADER: [&str; 7] = [
    "episode",
    "coverage",
    "collisions",
    "steps",
    "total_reward",
    "epsilon",
    "terminal_reason",
];

pub const DEFAULT_WINDOW: usize = 50;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: row {row}: {msg}")]
    Row {
        path: PathBuf,
        row: usize,
        msg: String,
    },
    #[error("cannot plot an empty series")]
    EmptySeries,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes one row per episode. Fractions carry six decimals and lines end
/// with `\n`, so equal metrics always produce equal bytes.
pub fn write_metrics<W: Write>(metrics: &[EpisodeMetrics], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for m in metrics {
        w.write_record([
            m.episode.to_string(),
            format!("{:.6}", m.coverage),
            m.collisions.to_string(),
            m.steps.to_string(),
            m.total_reward.to_string(),
            format!("{:.6}", m.epsilon),
            m.terminal_reason.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_csv(log: &TrainingLog, path: &Path) -> Result<(), ReportError> {
    write_episodes_csv(&log.episodes, path)
}

pub fn write_episodes_csv(metrics: &[EpisodeMetrics], path: &Path) -> Result<(), ReportError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_metrics(metrics, BufWriter::new(file)).map_err(csv_err(path))
}

/// Reads a metrics CSV back. Values carry the six-decimal rounding of the file.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<EpisodeMetrics>, ReportError> {
    let mut text = String::new();
    File::open(path)
        .map_err(io_err(path))?
        .read_to_string(&mut text)
        .map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(ReportError::Row {
            path: path.to_path_buf(),
            row: 0,
            msg: format!("unexpected header, expected {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |msg: &str| ReportError::Row {
            path: path.to_path_buf(),
            row: i + 1,
            msg: msg.to_string(),
        };
        let field = |k: usize| rec.get(k).ok_or_else(|| bad("missing field"));
        let terminal_reason = match field(6)? {
            "budget_exhausted" => DoneReason::BudgetExhausted,
            "full_coverage" => DoneReason::FullCoverage,
            _ => return Err(bad("unknown terminal_reason")),
        };
        let number = |k: usize| -> Result<f64, ReportError> {
            field(k)?
                .parse::<f64>()
                .map_err(|_| bad("malformed number"))
        };
        let integer = |k: usize| -> Result<i64, ReportError> {
            field(k)?
                .parse::<i64>()
                .map_err(|_| bad("malformed integer"))
        };
        let count = |k: usize| -> Result<u32, ReportError> {
            u32::try_from(integer(k)?).map_err(|_| bad("count out of range"))
        };
        out.push(EpisodeMetrics {
            episode: u64::try_from(integer(0)?).map_err(|_| bad("negative episode"))?,
            coverage: number(1)?,
            collisions: count(2)?,
            steps: count(3)?,
            total_reward: integer(4)?,
            epsilon: number(5)?,
            terminal_reason,
            newly_visited: 0,
        });
    }
    Ok(out)
}

/// What a plot shows; fixes colour, labels and y-range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Green, y axis fixed to [0, 1].
    Coverage,
    /// Red, y axis from 0 to the largest averaged value.
    Collisions,
}

impl PlotKind {
    pub fn color(self) -> &'static str {
        match self {
            PlotKind::Coverage => "green",
            PlotKind::Collisions => "red",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PlotKind::Coverage => "coverage",
            PlotKind::Collisions => "collisions",
        }
    }
}

pub const SVG_WIDTH: f64 = 640.0;
pub const SVG_HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 48.0;

/// Plot area as (left, top, right, bottom) in SVG user units.
pub fn plot_area() -> (f64, f64, f64, f64) {
    (
        MARGIN_LEFT,
        MARGIN_TOP,
        SVG_WIDTH - MARGIN_RIGHT,
        SVG_HEIGHT - MARGIN_BOTTOM,
    )
}

fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

/// Standalone SVG line chart of the trailing `window` average of `series`.
pub fn render_svg(series: &[f64], window: usize, kind: PlotKind) -> Result<String, ReportError> {
    if series.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let smooth = running_average(series, window.max(1));
    let (y_min, y_max) = match kind {
        PlotKind::Coverage => (0.0, 1.0),
        PlotKind::Collisions => (
            0.0,
            nice_ceiling(smooth.iter().copied().fold(0.0, f64::max)),
        ),
    };
    let (left, top, right, bottom) = plot_area();
    let n = smooth.len();
    let x_of = |i: usize| {
        if n == 1 {
            left
        } else {
            left + (right - left) * i as f64 / (n - 1) as f64
        }
    };
    let y_of = |v: f64| bottom - (bottom - top) * ((v - y_min) / (y_max - y_min)).clamp(0.0, 1.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{} (running average, window {})</text>"#,
        (left + right) / 2.0,
        kind.label(),
        window
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{left:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{bottom:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{bottom:.2}" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = y_min + (y_max - y_min) * f64::from(k) / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 4.0,
            left - 6.0,
            y + 4.0,
            trim_number(v)
        );
    }
    for (i, label) in [(0, "0".to_string()), (n - 1, (n - 1).to_string())] {
        let x = x_of(i);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            bottom + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">episode</text>"#,
        (left + right) / 2.0,
        SVG_HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        kind.label()
    );
    let points: Vec<String> = smooth
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
        kind.color(),
        points.join(" ")
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

pub fn render_plot_svg(
    series: &[f64],
    window: usize,
    kind: PlotKind,
    path: &Path,
) -> Result<(), ReportError> {
    let svg = render_svg(series, window, kind)?;
    std::fs::write(path, svg).map_err(io_err(path))
}

/// Parses the `points` attribute of the chart's polyline.
pub fn polyline_points(svg: &str) -> Option<Vec<(f64, f64)>> {
    let start = svg.find("<polyline")?;
    let rest = &svg[start..];
    let attr = rest.find("points=\"")? + "points=\"".len();
    let end = rest[attr..].find('"')? + attr;
    rest[attr..end]
        .split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(',')?;
            Some((x.parse().ok()?, y.parse().ok()?))
        })
        .collect()
}
