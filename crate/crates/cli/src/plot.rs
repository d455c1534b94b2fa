//! Static SVG scatter plots from CSV tables.
//!
//! Each group is drawn as translucent points plus a line through its
//! per-`x` medians. Non-finite values (failed runs) and, on log axes,
//! non-positive values are left out and counted in a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use crate::{median, CliError};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    pub group: Option<String>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: Option<String>,
}

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

type Series = BTreeMap<String, Vec<(f64, f64)>>;

/// Renders `input` as an SVG document.
pub fn plot_csv<R: Read>(input: R, spec: &PlotSpec) -> Result<String, CliError> {
    let (series, skipped) = read_series(input, spec)?;
    Ok(render(&series, skipped, spec))
}

fn schema(line: u64, message: impl Into<String>) -> CliError {
    CliError::Schema {
        line,
        message: message.into(),
    }
}

fn read_series<R: Read>(input: R, spec: &PlotSpec) -> Result<(Series, usize), CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers().map_err(csv_schema)?.clone();
    let mut series = Series::new();
    if headers.is_empty() {
        return Ok((series, 0));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(1, format!("missing column `{name}`")))
    };
    let xi = column(&spec.x)?;
    let yi = column(&spec.y)?;
    let gi = spec.group.as_deref().map(column).transpose()?;

    let mut skipped = 0;
    for record in reader.records() {
        let record = record.map_err(csv_schema)?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |i: usize, name: &str| {
            let field = record.get(i).unwrap_or("");
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| schema(line, format!("column `{name}`: not a number: `{field}`")))
        };
        let (x, y) = (number(xi, &spec.x)?, number(yi, &spec.y)?);
        let usable = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
        if !usable(x, spec.log_x) || !usable(y, spec.log_y) {
            skipped += 1;
            continue;
        }
        let group = gi.map_or_else(String::new, |i| record.get(i).unwrap_or("").to_string());
        series.entry(group).or_default().push((x, y));
    }
    Ok((series, skipped))
}

fn csv_schema(e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. } => schema(line, e.to_string()),
        _ => CliError::Csv(e),
    }
}

/// Maps data coordinates to the plotting area.
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, pixel_lo: f64, pixel_hi: f64) -> Self {
        let t = |v: f64| if log { v.log10() } else { v };
        let (mut lo, mut hi) = values.map(t).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo > hi {
            (lo, hi) = (0.0, 1.0);
        } else if lo == hi {
            (lo, hi) = (lo - 1.0, hi + 1.0);
        } else {
            let pad = 0.05 * (hi - lo);
            (lo, hi) = (lo - pad, hi + pad);
        }
        Axis {
            lo,
            hi,
            log,
            pixel_lo,
            pixel_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        self.pixel_lo + (t - self.lo) / (self.hi - self.lo) * (self.pixel_hi - self.pixel_lo)
    }

    /// Tick positions in data units with their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                return (a..=b).map(|e| (10f64.powi(e), format!("1e{e}"))).collect();
            }
            // less than a decade: fall back to linear ticks in log space
            return linear_ticks(self.lo, self.hi)
                .into_iter()
                .map(|t| (10f64.powf(t), format_tick(10f64.powf(t))))
                .collect();
        }
        linear_ticks(self.lo, self.hi)
            .into_iter()
            .map(|t| (t, format_tick(t)))
            .collect()
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|f| f * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|j| j as f64 * step).collect()
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn render(series: &Series, skipped: usize, spec: &PlotSpec) -> String {
    let points = || series.values().flatten();
    let ax = Axis::new(points().map(|p| p.0), spec.log_x, LEFT, WIDTH - RIGHT);
    let ay = Axis::new(points().map(|p| p.1), spec.log_y, HEIGHT - BOTTOM, TOP);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    if skipped > 0 {
        let _ = writeln!(s, "<!-- {skipped} rows without a plottable value were skipped -->");
    }
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(title) = &spec.title {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(title)
        );
    }

    // axes, ticks and grid
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks">"#);
    for (v, label) in ax.ticks() {
        let px = ax.map(v);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="black"/><line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{y1}" stroke="#dddddd"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y0 + 5.0,
            y0 + 18.0,
            escape(&label)
        );
    }
    for (v, label) in ay.ticks() {
        let py = ay.map(v);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        s,
        r#"<text class="ylabel" transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(&spec.y)
    );

    // data
    for (idx, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" data-name="{}" fill="{color}">"#, escape(name));
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill-opacity="0.45"/>"#,
                ax.map(x),
                ay.map(y)
            );
        }
        let mut by_x: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        for &(x, y) in pts {
            // order-preserving key for finite floats
            let key = if x >= 0.0 { x.to_bits() ^ (1 << 63) } else { !x.to_bits() };
            by_x.entry(key).or_insert_with(|| (x, Vec::new())).1.push(y);
        }
        let path: Vec<String> = by_x
            .values()
            .map(|(x, ys)| format!("{:.2},{:.2}", ax.map(*x), ay.map(median(ys))))
            .collect();
        if path.len() > 1 {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        let _ = writeln!(s, "</g>");
    }

    // legend
    if series.keys().any(|k| !k.is_empty()) {
        let _ = writeln!(s, r#"<g class="legend">"#);
        for (idx, name) in series.keys().enumerate() {
            let ly = TOP + 10.0 + 20.0 * idx as f64;
            let lx = WIDTH - RIGHT + 15.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{:.2}" width="12" height="12" fill="{}"/><text x="{}" y="{:.2}">{}</text>"#,
                ly - 10.0,
                PALETTE[idx % PALETTE.len()],
                lx + 18.0,
                ly,
                escape(name)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PlotSpec {
        PlotSpec {
            x: "m".into(),
            y: "err".into(),
            group: Some("method".into()),
            ..PlotSpec::default()
        }
    }

    #[test]
    fn linear_ticks_are_round() {
        let t = linear_ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().enumerate().all(|(j, v)| (v - 0.2 * j as f64).abs() < 1e-12));
        assert_eq!(linear_ticks(3.0, 47.0), vec![10.0, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn groups_are_sorted_and_labelled() {
        let csv = "m,method,err\n10,b,1\n10,a,2\n20,a,3\n";
        let svg = plot_csv(csv.as_bytes(), &spec()).unwrap();
        let a = svg.find(r#"data-name="a""#).unwrap();
        let b = svg.find(r#"data-name="b""#).unwrap();
        assert!(a < b);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn skipped_values_are_counted() {
        let csv = "m,method,err\n10,a,inf\n20,a,0\n30,a,1\n";
        let svg = plot_csv(csv.as_bytes(), &PlotSpec { log_y: true, ..spec() }).unwrap();
        assert!(svg.contains("<!-- 2 rows"));
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn labels_are_escaped() {
        let csv = "m,method,err\n1,<a&b>,1\n";
        let svg = plot_csv(csv.as_bytes(), &spec()).unwrap();
        assert!(svg.contains("&lt;a&amp;b&gt;"));
    }
}
