use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Minimal SVG line chart with linear axes.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            bottom + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}"{dash}/><text x="{}" y="{}">{}</text>"#,
            right - 150.0,
            right - 130.0,
            right - 124.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Chart of mean Ŵ against iteration for every (method, d) group of a
/// `summary.csv`, with dashed ground-truth lines.
pub fn plot_summary(summary_csv: &Path, out_svg: &Path) -> Result<()> {
    let file = std::fs::File::open(summary_csv).map_err(|e| Error::io(summary_csv, e))?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv(format!("summary is missing column {name}")))
    };
    let (cm, cd, ci, cw, cg, cs) = (
        col("method")?,
        col("d")?,
        col("iteration")?,
        col("mean_w_hat")?,
        col("ground_truth")?,
        col("status")?,
    );
    let mut groups: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    let mut truths: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if &rec[cs] != "ok" {
            continue;
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::Csv(format!("bad number {:?} in summary", &rec[i])))
        };
        let d = num(cd)? as usize;
        let k = num(ci)?;
        groups
            .entry((rec[cm].to_owned(), d))
            .or_default()
            .push((k, num(cw)?));
        let truth = num(cg)?;
        let e = truths.entry(d).or_insert((truth, k));
        e.1 = e.1.max(k);
    }
    if groups.is_empty() {
        return Err(Error::Csv("summary has no plottable rows".into()));
    }
    let mut series: Vec<Series> = groups
        .into_iter()
        .map(|((m, d), points)| Series {
            label: format!("{m} d={d}"),
            points,
            dashed: false,
        })
        .collect();
    for (d, (truth, last)) in truths {
        if truth.is_finite() {
            series.push(Series {
                label: format!("truth d={d}"),
                points: vec![(1.0, truth), (last, truth)],
                dashed: true,
            });
        }
    }
    let svg = render_svg(
        "Estimated Wasserstein distance",
        "iteration",
        "mean W hat",
        &series,
    );
    write_atomic(out_svg, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_contains_series() {
        let s = vec![
            Series {
                label: "a<b".into(),
                points: vec![(1.0, 2.0), (2.0, 1.0)],
                dashed: false,
            },
            Series {
                label: "t".into(),
                points: vec![(1.0, 1.5), (2.0, 1.5)],
                dashed: true,
            },
        ];
        let svg = render_svg("x", "i", "w", &s);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_chart_still_renders() {
        let svg = render_svg("x", "i", "w", &[]);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn summary_plot() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("summary.csv");
        std::fs::write(
            &csv,
            "method,d,iteration,mean_w_hat,sd_w_hat,replications,ground_truth,status\n\
             ppmm,2,1,3,0,1,2.5,ok\nppmm,2,2,2.6,0,1,2.5,ok\nppmm,2,0,NaN,NaN,0,2.5,failed:eigen:rep001\n",
        )
        .unwrap();
        let out = dir.path().join("plot.svg");
        plot_summary(&csv, &out).unwrap();
        let svg = std::fs::read_to_string(out).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(plot_summary(&dir.path().join("missing.csv"), &dir.path().join("x.svg")).is_err());
    }
}
