//! SVG line charts rendered from already-written CSV files.
//!
//! Plots only ever read CSV output, so enabling them cannot change any
//! simulation result.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// A chart request: one x column and one or more y columns of a CSV file.
#[derive(Debug, Clone)]
pub struct ChartSpec<'a> {
    pub title: &'a str,
    pub x: &'a str,
    pub y: &'a [&'a str],
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Multiplier applied to y values (e.g. 1e6 for µA).
    pub y_scale: f64,
}

fn read_columns(csv_path: &Path, spec: &ChartSpec<'_>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Plot(format!("column `{name}` missing in {}", csv_path.display()))
        })
    };
    let xi = col(spec.x)?;
    let yis = spec.y.iter().map(|n| col(n)).collect::<Result<Vec<_>>>()?;
    let mut xs = Vec::new();
    let mut ys = vec![Vec::new(); yis.len()];
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Plot(format!("bad number `{s}`: {e}")))
    };
    for rec in rdr.records() {
        let rec = rec?;
        xs.push(parse(&rec[xi])?);
        for (k, &yi) in yis.iter().enumerate() {
            ys[k].push(parse(&rec[yi])? * spec.y_scale);
        }
    }
    Ok((xs, ys))
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders `spec` from `csv_path` into an SVG at `svg_path`.
pub fn chart_from_csv(csv_path: &Path, svg_path: &Path, spec: &ChartSpec<'_>) -> Result<()> {
    let (xs, ys) = read_columns(csv_path, spec)?;
    let (x0, x1) = bounds(xs.iter().copied());
    let (y0, y1) = bounds(ys.iter().flatten().copied());
    let err = |e: &dyn std::fmt::Display| Error::Plot(e.to_string());

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (900, 540)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| err(&e))?;
        let mut chart = ChartBuilder::on(&root)
            .caption(spec.title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(|e| err(&e))?;
        chart
            .configure_mesh()
            .x_desc(spec.x_label)
            .y_desc(spec.y_label)
            .draw()
            .map_err(|e| err(&e))?;
        for (k, (name, col)) in spec.y.iter().zip(&ys).enumerate() {
            let color = Palette99::pick(k).to_rgba();
            chart
                .draw_series(LineSeries::new(
                    xs.iter().copied().zip(col.iter().copied()),
                    color.stroke_width(2),
                ))
                .map_err(|e| err(&e))?
                .label(*name)
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 18, y)], color));
        }
        if spec.y.len() > 1 {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| err(&e))?;
        }
        root.present().map_err(|e| err(&e))?;
    }
    write_atomic(svg_path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_svg() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("a.csv");
        std::fs::write(&csv, "x,y,z\n0,1,2\n1,3,1\n2,2,0\n").unwrap();
        let svg = dir.path().join("a.svg");
        chart_from_csv(
            &csv,
            &svg,
            &ChartSpec {
                title: "t",
                x: "x",
                y: &["y", "z"],
                x_label: "x",
                y_label: "y",
                y_scale: 1.0,
            },
        )
        .unwrap();
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg"));
        let missing = ChartSpec {
            title: "t",
            x: "x",
            y: &["nope"],
            x_label: "",
            y_label: "",
            y_scale: 1.0,
        };
        assert!(chart_from_csv(&csv, &svg, &missing).is_err());
    }
}
