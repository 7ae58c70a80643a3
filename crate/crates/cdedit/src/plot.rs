//! SVG line charts of benchmark series.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use crate::bench::BenchResult;

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

/// One line per algorithm: mean time against the axis value.
pub fn write_svg(results: &[BenchResult], path: &Path, title: &str) -> Result<(), Box<dyn std::error::Error>> {
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in results {
        series.entry(r.algorithm.as_str()).or_default().push((r.value as f64, r.mean_ms));
    }
    let x_max = results.iter().map(|r| r.value as f64).fold(1.0, f64::max);
    let y_max = results.iter().map(|r| r.mean_ms).fold(1e-3, f64::max) * 1.1;
    let x_label = results.first().map(|r| r.axis.to_string()).unwrap_or_default();

    let root = SVGBackend::new(path, (960, 600)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..x_max * 1.05, 0.0..y_max)?;
    chart.configure_mesh().x_desc(x_label).y_desc("mean ms").draw()?;
    for (i, (name, mut points)) in series.into_iter().enumerate() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(points.iter().copied(), color.stroke_width(2)))?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
        chart.draw_series(points.iter().map(|&p| Circle::new(p, 3, color.filled())))?;
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    root.present()?;
    Ok(())
}
