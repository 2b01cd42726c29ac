//! Static SVG line charts of CSV columns.
//!
//! A plot spec is a small `key = value` file:
//!
//! ```text
//! [plot]
//! columns = energy, dissipation
//! # x = t
//! # log_scale = false
//! # title = ...
//! # output = energy.svg
//! ```
//!
//! The output is a function of the CSV and the spec only: coordinates are
//! printed with fixed precision and nothing time- or host-dependent is
//! embedded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{CliError, CliResult};
use crate::output::{write_file, Table};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub columns: Vec<String>,
    pub x: String,
    pub log_scale: bool,
    pub title: Option<String>,
    pub output: Option<PathBuf>,
}

impl PlotSpec {
    pub fn parse(text: &str) -> CliResult<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("plot spec: {e}")))?;
        for (section, props) in ini.iter() {
            if section.is_some_and(|s| s != "plot") {
                return Err(CliError::Config(format!("plot spec: unknown section [{}]", section.unwrap_or_default())));
            }
            for (key, _) in props.iter() {
                if !["columns", "x", "log_scale", "title", "output"].contains(&key) {
                    return Err(CliError::Config(format!("plot spec: unknown key `{key}`")));
                }
            }
        }
        let get = |key: &str| {
            ini.get_from(Some("plot"), key)
                .or_else(|| ini.get_from(None::<String>, key))
                .map(str::trim)
        };
        let columns: Vec<String> = get("columns")
            .ok_or_else(|| CliError::Config("plot spec: missing required key `columns`".into()))?
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if columns.is_empty() {
            return Err(CliError::Config("plot spec: `columns` lists no column".into()));
        }
        let log_scale = match get("log_scale") {
            None | Some("false") | Some("no") | Some("0") => false,
            Some("true") | Some("yes") | Some("1") => true,
            Some(other) => {
                return Err(CliError::Config(format!("plot spec: log_scale must be true or false, got `{other}`")))
            }
        };
        Ok(Self {
            columns,
            x: get("x").unwrap_or("t").to_string(),
            log_scale,
            title: get("title").map(str::to_string),
            output: get("output").map(PathBuf::from),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read plot spec {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Ticks on a linear axis at multiples of 1, 2 or 5 times a power of ten.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the chart.
pub fn render_svg(table: &Table, spec: &PlotSpec) -> CliResult<String> {
    let unknown = |c: &str| CliError::Config(format!("unknown column `{c}` (available: {})", table.columns.join(", ")));
    let xs = table.column(&spec.x).ok_or_else(|| unknown(&spec.x))?;
    let series: Vec<(String, Vec<f64>)> = spec
        .columns
        .iter()
        .map(|c| table.column(c).map(|v| (c.clone(), v)).ok_or_else(|| unknown(c)))
        .collect::<CliResult<_>>()?;

    let usable = |y: f64| y.is_finite() && (!spec.log_scale || y > 0.0);
    let map_y = |y: f64| if spec.log_scale { y.log10() } else { y };

    let (mut x_lo, mut x_hi) = xs.iter().filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    if x_hi <= x_lo {
        (x_lo, x_hi) = (x_lo - 0.5, x_lo + 0.5);
    }
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, ys) in &series {
        for &y in ys.iter().filter(|y| usable(**y)) {
            y_lo = y_lo.min(map_y(y));
            y_hi = y_hi.max(map_y(y));
        }
    }
    if !y_lo.is_finite() {
        (y_lo, y_hi) = if spec.log_scale { (-1.0, 1.0) } else { (0.0, 1.0) };
    }
    if spec.log_scale {
        y_lo = y_lo.floor();
        y_hi = y_hi.ceil();
        if y_hi <= y_lo {
            y_hi = y_lo + 1.0;
        }
    } else if y_hi <= y_lo {
        let pad = if y_lo == 0.0 { 1.0 } else { 0.5 * y_lo.abs() };
        (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |v: f64| MARGIN_TOP + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    if let Some(title) = &spec.title {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
            MARGIN_LEFT + plot_w / 2.0,
            escape(title)
        );
    }
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>"
    );

    let _ = writeln!(s, "<g class=\"x-ticks\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">");
    for t in linear_ticks(x_lo, x_hi) {
        let x = px(t);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/><text x=\"{x:.2}\" y=\"{:.2}\">{}</text>",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0,
            MARGIN_TOP + plot_h + 18.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, "<g class=\"y-ticks\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">");
    let y_ticks: Vec<(f64, String)> = if spec.log_scale {
        (y_lo as i64..=y_hi as i64).map(|k| (k as f64, format!("1e{k}"))).collect()
    } else {
        linear_ticks(y_lo, y_hi).into_iter().map(|t| (t, fmt_tick(t))).collect()
    };
    for (v, label) in y_ticks {
        let y = py(v);
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN_LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{:.2}\" y=\"{:.2}\">{label}</text>",
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(&spec.x)
    );

    for (i, (name, ys)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(x, y)| x.is_finite() && usable(**y))
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(map_y(*y))))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" data-column=\"{}\" points=\"{}\"/>",
            escape(name),
            points.join(" ")
        );
        let ly = MARGIN_TOP + 16.0 * i as f64 + 10.0;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            s,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{colour}\" stroke-width=\"2\"/><text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Where the SVG goes: the spec's `output` (relative to `dir`, or to the CSV's
/// directory when `dir` is absent), else `<csv stem>.svg`.
pub fn output_path(csv: &Path, spec: &PlotSpec, dir: Option<&Path>) -> PathBuf {
    let base = dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
    let name = spec.output.clone().unwrap_or_else(|| {
        let stem = csv.file_stem().map_or_else(|| "plot".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from(format!("{stem}.svg"))
    });
    if name.is_absolute() {
        name
    } else {
        base.join(name)
    }
}

pub fn plot(csv: &Path, spec: &PlotSpec, dir: Option<&Path>) -> CliResult<PathBuf> {
    let table = Table::read(csv)?;
    let svg = render_svg(&table, spec)?;
    let path = output_path(csv, spec, dir);
    write_file(&path, &svg)?;
    Ok(path)
}
