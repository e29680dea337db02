//! Building blocks of the `survdiff` command.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use survdiff::{km_survival, order_with_censoring, StepCurve, TwoSampleData};

/// A failure with its process exit code: 2 for bad input, 3 when the
/// statistic is undefined for the data.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<survdiff::Error> for CliError {
    fn from(e: survdiff::Error) -> Self {
        Self {
            code: if e.is_degenerate() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<survdiff_sim::Error> for CliError {
    fn from(e: survdiff_sim::Error) -> Self {
        match e {
            survdiff_sim::Error::Core(core) => core.into(),
            other => Self::data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    time: f64,
    event: i64,
    group: i64,
}

/// Reads a `time,event,group` file.
pub fn read_data(path: &Path) -> Result<TwoSampleData, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    parse_data(file).map_err(|e| CliError {
        code: e.code,
        message: format!("{}: {}", path.display(), e.message),
    })
}

pub fn parse_data<R: std::io::Read>(input: R) -> Result<TwoSampleData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("schema error: {e}")))?;
    for column in ["time", "event", "group"] {
        if !headers.iter().any(|h| h == column) {
            return Err(CliError::data(format!(
                "schema error: missing column `{column}`"
            )));
        }
    }
    let (mut times, mut events, mut groups) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row =
            row.map_err(|e| CliError::data(format!("schema error on data row {}: {e}", line + 1)))?;
        times.push(row.time);
        events.push(row.event);
        groups.push(row.group);
    }
    TwoSampleData::from_columns(&times, &events, &groups)
        .map_err(|e| CliError::data(format!("schema error: {e}")))
}

/// Kaplan-Meier curve of each group.
pub fn group_curves(data: &TwoSampleData) -> [StepCurve; 2] {
    [
        km_survival(&order_with_censoring(&data.group0)),
        km_survival(&order_with_censoring(&data.group1)),
    ]
}

/// `group,t,survival` rows; each curve starts at `(0, 1)`.
pub fn write_curves_csv<W: Write>(curves: &[StepCurve; 2], mut out: W) -> std::io::Result<()> {
    writeln!(out, "group,t,survival")?;
    for (g, curve) in curves.iter().enumerate() {
        writeln!(out, "{g},0,{}", curve.initial)?;
        for (t, s) in curve.knots.iter().zip(&curve.values) {
            writeln!(out, "{g},{t},{s}")?;
        }
    }
    Ok(())
}

/// Static step chart of the two curves.
pub fn curves_svg(curves: &[StepCurve; 2], title: &str) -> String {
    let (width, height, margin) = (640.0, 400.0, 50.0);
    let t_max = curves
        .iter()
        .filter_map(|c| c.knots.last().copied())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let x = |t: f64| margin + t / t_max * (width - 2.0 * margin);
    let y = |s: f64| height - margin - s * (height - 2.0 * margin);
    let colors = ["#1f77b4", "#d62728"];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#,
        x0 = x(0.0),
        x1 = x(t_max),
        y0 = y(0.0),
        y1 = y(1.0)
    );
    for k in 0..=4 {
        let s = k as f64 / 4.0;
        let t = t_max * s;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{s:.2}</text>"#,
            x(0.0) - 6.0,
            y(s) + 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            x(t),
            y(0.0) + 16.0,
            format_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">time</text>"#,
        width / 2.0,
        height - 10.0
    );
    for (g, curve) in curves.iter().enumerate() {
        let mut d = format!("M{:.2},{:.2}", x(0.0), y(curve.initial));
        let mut level = curve.initial;
        for (&t, &s) in curve.knots.iter().zip(&curve.values) {
            let _ = write!(d, " L{:.2},{:.2} L{:.2},{:.2}", x(t), y(level), x(t), y(s));
            level = s;
        }
        let _ = write!(d, " L{:.2},{:.2}", x(t_max), y(level));
        let _ = writeln!(
            svg,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            colors[g]
        );
        let ly = margin + 18.0 * g as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#,
            width - 150.0,
            width - 125.0,
            colors[g]
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">group {g}</text>"#,
            width - 118.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(t: f64) -> String {
    if t >= 10.0 || t == 0.0 {
        format!("{t:.0}")
    } else {
        format!("{t:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
