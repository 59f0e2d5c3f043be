//! Deterministic SVG scatter plots.

use std::collections::BTreeSet;
use std::fmt::Write;

use cmca_core::dataio::CategoricalTable;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Rows,
    CategoryCoordinates,
    CategoryLoadings,
}

impl PlotKind {
    pub fn file_stem(self) -> &'static str {
        match self {
            PlotKind::Rows => "rows",
            PlotKind::CategoryCoordinates => "category_coordinates",
            PlotKind::CategoryLoadings => "category_loadings",
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rows" => Ok(PlotKind::Rows),
            "category_coordinates" => Ok(PlotKind::CategoryCoordinates),
            "category_loadings" => Ok(PlotKind::CategoryLoadings),
            other => Err(format!(
                "unknown plot kind `{other}` (expected rows, category_coordinates or category_loadings)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleMode {
    #[default]
    Any,
    All,
}

fn default_match_label() -> String {
    "match".into()
}

fn default_other_label() -> String {
    "other".into()
}

/// Colors rows whose response is in `levels` on any (or all) of
/// `variables`.
///
/// ```json
/// { "variables": ["eu"], "levels": ["5"], "mode": "any",
///   "label": "pro_eu", "other_label": "rest" }
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorRule {
    pub variables: Vec<String>,
    pub levels: Vec<String>,
    #[serde(default)]
    pub mode: RuleMode,
    #[serde(default = "default_match_label")]
    pub label: String,
    #[serde(default = "default_other_label")]
    pub other_label: String,
}

impl ColorRule {
    /// Checks the rule against the table's schema and returns, per rule
    /// variable, its column index.
    pub fn resolve(&self, table: &CategoricalTable) -> Result<Vec<usize>, String> {
        if self.variables.is_empty() || self.levels.is_empty() {
            return Err("color rule needs at least one variable and one level".into());
        }
        let columns = self
            .variables
            .iter()
            .map(|v| {
                table
                    .variable_index(v)
                    .ok_or_else(|| format!("color rule names unknown variable `{v}`"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for level in &self.levels {
            let known = columns
                .iter()
                .any(|&c| table.schemas()[c].levels.iter().any(|l| l == level));
            if !known {
                return Err(format!(
                    "color rule level `{level}` occurs in none of its variables"
                ));
            }
        }
        Ok(columns)
    }

    /// Class label of every row of `table`.
    pub fn classify(&self, table: &CategoricalTable) -> Result<Vec<String>, String> {
        let columns = self.resolve(table)?;
        let levels: BTreeSet<&str> = self.levels.iter().map(String::as_str).collect();
        Ok((0..table.n_rows())
            .map(|r| {
                let mut hits = columns.iter().map(|&c| levels.contains(table.level(r, c)));
                let matched = match self.mode {
                    RuleMode::Any => hits.any(|h| h),
                    RuleMode::All => hits.all(|h| h),
                };
                if matched {
                    self.label.clone()
                } else {
                    self.other_label.clone()
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    /// None draws a one-dimensional strip.
    pub y: Option<f64>,
    pub class: String,
    /// Drawn next to the marker when present.
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlotError {
    NoPoints,
    NonFinite(usize),
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::NoPoints => write!(f, "nothing to plot"),
            PlotError::NonFinite(i) => write!(f, "point {i} has a non-finite coordinate"),
        }
    }
}

impl std::error::Error for PlotError {}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    "#bcbd22", "#7f7f7f",
];
const OTHER_COLOR: &str = "#c8c8c8";

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps [lo, hi] onto a pixel span, padding by 5% and widening degenerate
/// ranges.
fn axis(values: impl Iterator<Item = f64>, from: f64, to: f64) -> impl Fn(f64) -> f64 {
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
        let pad = lo.abs().max(1.0);
        lo -= pad;
        hi += pad;
    }
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);
    move |v| from + (v - lo) / (hi - lo) * (to - from)
}

/// Renders a scatter plot. Legend entries follow first appearance and show
/// class sizes; a class named `other_class` is drawn in grey.
pub fn render_scatter(
    points: &[ScatterPoint],
    figure: &Figure,
    other_class: Option<&str>,
) -> Result<String, PlotError> {
    if points.is_empty() {
        return Err(PlotError::NoPoints);
    }
    if let Some(i) = points
        .iter()
        .position(|p| !p.x.is_finite() || p.y.is_some_and(|y| !y.is_finite()))
    {
        return Err(PlotError::NonFinite(i));
    }

    let mut classes: Vec<(&str, usize)> = Vec::new();
    for p in points {
        match classes.iter_mut().find(|(c, _)| *c == p.class) {
            Some((_, n)) => *n += 1,
            None => classes.push((&p.class, 1)),
        }
    }
    let mut colors = Vec::with_capacity(classes.len());
    let mut next = 0;
    for (c, _) in &classes {
        if Some(*c) == other_class {
            colors.push(OTHER_COLOR);
        } else {
            colors.push(PALETTE[next % PALETTE.len()]);
            next += 1;
        }
    }
    let color_of = |class: &str| colors[classes.iter().position(|(c, _)| *c == class).unwrap()];

    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let sx = axis(points.iter().map(|p| p.x), x0, x1);
    let sy = axis(points.iter().map(|p| p.y.unwrap_or(0.0)), y0, y1);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        (x0 + x1) / 2.0,
        escape(&figure.title)
    );

    // Frame and zero lines.
    let _ = writeln!(
        s,
        "<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>",
        x1 - x0,
        y0 - y1
    );
    let (zx, zy) = (sx(0.0), sy(0.0));
    if (x0..=x1).contains(&zx) {
        let _ = writeln!(
            s,
            "<line x1=\"{zx:.2}\" y1=\"{y1:.2}\" x2=\"{zx:.2}\" y2=\"{y0:.2}\" stroke=\"#ddd\"/>"
        );
    }
    if figure.y_label.is_some() && (y1..=y0).contains(&zy) {
        let _ = writeln!(
            s,
            "<line x1=\"{x0:.2}\" y1=\"{zy:.2}\" x2=\"{x1:.2}\" y2=\"{zy:.2}\" stroke=\"#ddd\"/>"
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 20.0,
        escape(&figure.x_label)
    );
    if let Some(y_label) = &figure.y_label {
        let cy = (y0 + y1) / 2.0;
        let _ = writeln!(
            s,
            "<text x=\"24\" y=\"{cy:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 24 {cy:.2})\">{}</text>",
            escape(y_label)
        );
    }

    s.push_str("<g stroke=\"none\" fill-opacity=\"0.8\">\n");
    for p in points {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{}\"/>",
            sx(p.x),
            sy(p.y.unwrap_or(0.0)),
            color_of(&p.class)
        );
    }
    s.push_str("</g>\n");
    if points.iter().any(|p| p.label.is_some()) {
        s.push_str("<g font-size=\"9\" fill=\"#333\">\n");
        for p in points {
            if let Some(label) = &p.label {
                let _ = writeln!(
                    s,
                    "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
                    sx(p.x) + 5.0,
                    sy(p.y.unwrap_or(0.0)) - 4.0,
                    escape(label)
                );
            }
        }
        s.push_str("</g>\n");
    }

    s.push_str("<g class=\"legend\">\n");
    for (i, (class, n)) in classes.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/>",
            x1 + 16.0,
            y - 9.0,
            colors[i]
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{y:.2}\">{} ({n})</text>",
            x1 + 32.0,
            escape(class)
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure() -> Figure {
        Figure {
            title: "t".into(),
            x_label: "cPC1".into(),
            y_label: Some("cPC2".into()),
        }
    }

    fn point(x: f64, y: f64, class: &str) -> ScatterPoint {
        ScatterPoint {
            x,
            y: Some(y),
            class: class.into(),
            label: None,
        }
    }

    #[test]
    fn single_point_has_one_marker() {
        let svg = render_scatter(&[point(0.0, 0.0, "a")], &figure(), None).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains(">cPC1<") && svg.contains(">cPC2<"));
        assert!(svg.contains("a (1)"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let pts: Vec<_> = (0..20)
            .map(|i| point(i as f64 * 0.37, (i * i) as f64 * -0.01, ["x", "y"][i % 2]))
            .collect();
        let a = render_scatter(&pts, &figure(), None).unwrap();
        let b = render_scatter(&pts, &figure(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn legend_follows_first_appearance() {
        let pts = [
            point(0.0, 0.0, "UKIP"),
            point(1.0, 1.0, "Con"),
            point(2.0, 0.0, "UKIP"),
        ];
        let svg = render_scatter(&pts, &figure(), None).unwrap();
        let ukip = svg.find("UKIP (2)").unwrap();
        let con = svg.find("Con (1)").unwrap();
        assert!(ukip < con);
    }

    #[test]
    fn rejects_empty_and_non_finite_input() {
        assert_eq!(
            render_scatter(&[], &figure(), None),
            Err(PlotError::NoPoints)
        );
        let pts = [point(0.0, 0.0, "a"), point(f64::NAN, 0.0, "a")];
        assert_eq!(
            render_scatter(&pts, &figure(), None),
            Err(PlotError::NonFinite(1))
        );
    }

    #[test]
    fn labels_are_escaped() {
        let svg = render_scatter(&[point(1.0, 2.0, "a<b & c")], &figure(), None).unwrap();
        assert!(svg.contains("a&lt;b &amp; c (1)"));
    }

    #[test]
    fn color_rule_counts() {
        let rows: Vec<Vec<&str>> = (0..10)
            .map(|i| vec![if i % 4 == 0 { "5" } else { "1" }, "x"])
            .collect();
        let groups = vec!["g"; 10];
        let t =
            CategoricalTable::from_rows(&["eu", "other"], &rows, "party", &groups, "99").unwrap();
        let rule: ColorRule =
            serde_json::from_str(r#"{"variables": ["eu"], "levels": ["5"]}"#).unwrap();
        let classes = rule.classify(&t).unwrap();
        // Rows 0, 4 and 8.
        assert_eq!(classes.iter().filter(|c| *c == "match").count(), 3);
        assert_eq!(classes.iter().filter(|c| *c == "other").count(), 7);

        let bad: ColorRule =
            serde_json::from_str(r#"{"variables": ["nope"], "levels": ["5"]}"#).unwrap();
        assert!(bad.classify(&t).is_err());
        let bad: ColorRule =
            serde_json::from_str(r#"{"variables": ["eu"], "levels": ["7"]}"#).unwrap();
        assert!(bad.classify(&t).is_err());
    }

    #[test]
    fn all_mode_requires_every_variable() {
        let rows = vec![vec!["5", "5"], vec!["5", "1"], vec!["1", "1"]];
        let t =
            CategoricalTable::from_rows(&["a", "b"], &rows, "g", &["x", "x", "x"], "99").unwrap();
        let rule = ColorRule {
            variables: vec!["a".into(), "b".into()],
            levels: vec!["5".into()],
            mode: RuleMode::All,
            label: "both".into(),
            other_label: "rest".into(),
        };
        assert_eq!(rule.classify(&t).unwrap(), vec!["both", "rest", "rest"]);
    }
}
