//! Infidelity-versus-parameter plots.

use std::path::Path;

use plotters::prelude::*;
use serde::Deserialize;

use crate::{CliError, Result};

/// Lenient view of `report.json`; undefined estimates are stored as `null`.
#[derive(Debug, Clone, Deserialize)]
struct PlotDocument {
    sweep_axis: Option<String>,
    config: PlotConfig,
    experiments: Vec<PlotExperiment>,
}

#[derive(Debug, Clone, Deserialize)]
struct PlotConfig {
    name: String,
}

#[derive(Debug, Clone, Deserialize)]
struct PlotExperiment {
    sweep_value: Option<f64>,
    report: PlotReport,
}

#[derive(Debug, Clone, Deserialize)]
struct PlotReport {
    process_fidelity: PlotEstimate,
    stochastic_fidelity: PlotEstimate,
    oracle: Option<PlotOracle>,
    reference_oracle: Option<PlotOracle>,
}

#[derive(Debug, Clone, Deserialize)]
struct PlotEstimate {
    mean: Option<f64>,
    std: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct PlotOracle {
    process_fidelity: f64,
    stochastic_fidelity: f64,
}

/// One plotted series: `(x, y, σ)` with `σ = 0` for exact values.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
    pub estimated: bool,
}

fn series_of(doc: &PlotDocument) -> Vec<Series> {
    let x = |i: usize, e: &PlotExperiment| e.sweep_value.unwrap_or(i as f64);
    let est = |label: &str, pick: fn(&PlotReport) -> &PlotEstimate| Series {
        label: label.into(),
        points: doc
            .experiments
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                let p = pick(&e.report);
                Some((x(i, e), 1.0 - p.mean?, p.std.unwrap_or(0.0)))
            })
            .collect(),
        estimated: true,
    };
    let exact = |label: &str, pick: fn(&PlotReport) -> Option<f64>| Series {
        label: label.into(),
        points: doc
            .experiments
            .iter()
            .enumerate()
            .filter_map(|(i, e)| Some((x(i, e), 1.0 - pick(&e.report)?, 0.0)))
            .collect(),
        estimated: false,
    };
    let mut out = vec![
        est("1 - F estimate", |r| &r.process_fidelity),
        est("1 - F_sto estimate", |r| &r.stochastic_fidelity),
        exact("1 - F exact", |r| r.oracle.as_ref().map(|o| o.process_fidelity)),
        exact("1 - F_sto exact", |r| r.oracle.as_ref().map(|o| o.stochastic_fidelity)),
        exact("1 - F exact, unlifted", |r| {
            r.reference_oracle.as_ref().map(|o| o.process_fidelity)
        }),
    ];
    out.retain(|s| !s.points.is_empty());
    out
}

/// Maps values to plot coordinates, logarithmic when every value is positive.
#[derive(Debug, Clone, Copy)]
struct Axis {
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let mut any = false;
        let mut positive = true;
        for v in values {
            any = true;
            positive &= v > 0.0;
        }
        Self { log: any && positive }
    }

    fn map(self, v: f64) -> f64 {
        if self.log {
            v.log10()
        } else {
            v
        }
    }

    fn label(self, v: f64) -> String {
        if self.log {
            format!("{:.1e}", 10f64.powf(v))
        } else {
            format!("{v:.3}")
        }
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { 0.5 };
    (lo - pad, hi + pad)
}

fn draw(path: &Path, title: &str, x_label: &str, series: &[Series]) -> std::result::Result<(), String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let xa = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ya = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let ys = |y: f64| ya.map(y);
    let lo = |(_, y, s): (f64, f64, f64)| if ya.log && y - s <= 0.0 { y } else { y - s };

    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| xa.map(p.0)))
        .collect();
    let yv: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().flat_map(|&p| [ys(lo(p)), ys(p.1 + p.2)]))
        .filter(|v| v.is_finite())
        .collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1) = padded(min(&xs), max(&xs));
    let (y0, y1) = if yv.is_empty() {
        (0.0, 1.0)
    } else {
        padded(min(&yv), max(&yv))
    };

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(48)
        .y_label_area_size(72)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc("infidelity")
        .x_label_formatter(&|v| xa.label(*v))
        .y_label_formatter(&|v| ya.label(*v))
        .draw()
        .map_err(|e| err(&e))?;

    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let pts: Vec<(f64, f64)> = s.points.iter().map(|p| (xa.map(p.0), ys(p.1))).collect();
        let line = if s.estimated {
            color.stroke_width(2)
        } else {
            color.stroke_width(1)
        };
        chart
            .draw_series(LineSeries::new(pts.clone(), line))
            .map_err(|e| err(&e))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        if s.estimated {
            chart
                .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                .map_err(|e| err(&e))?;
            chart
                .draw_series(s.points.iter().map(|&p| {
                    ErrorBar::new_vertical(xa.map(p.0), ys(lo(p)), ys(p.1), ys(p.1 + p.2), color.stroke_width(1), 6)
                }))
                .map_err(|e| err(&e))?;
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))
}

/// Renders the infidelity sweep stored in `report` to `out` as SVG.
pub fn plot_report(report: &Path, out: &Path) -> Result<()> {
    let doc: PlotDocument = crate::output::read_json(report)?;
    let series = series_of(&doc);
    let x_label = doc.sweep_axis.clone().unwrap_or_else(|| "sweep point".into());
    draw(out, &doc.config.name, &x_label, &series).map_err(CliError::Plot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> PlotDocument {
        serde_json::from_str(
            r#"{
            "sweep_axis": "dp",
            "config": {"name": "t"},
            "experiments": [
              {"sweep_value": 0.001, "report": {
                 "process_fidelity": {"mean": 0.99, "std": 0.001},
                 "stochastic_fidelity": {"mean": 0.995, "std": null},
                 "oracle": {"process_fidelity": 0.991, "stochastic_fidelity": 0.996},
                 "reference_oracle": null}},
              {"sweep_value": 0.01, "report": {
                 "process_fidelity": {"mean": null, "std": null},
                 "stochastic_fidelity": {"mean": 0.95, "std": 0.01},
                 "oracle": null, "reference_oracle": null}}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn undefined_estimates_are_skipped() {
        let s = series_of(&doc());
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].points.len(), 1);
        assert_eq!(s[1].points.len(), 2);
        assert!((s[0].points[0].1 - 0.01).abs() < 1e-12);
        assert_eq!(s[0].points[0].2, 0.001);
    }

    #[test]
    fn positive_sweeps_use_log_axes() {
        assert!(Axis::fit([1e-3, 1e-2].into_iter()).log);
        assert!(!Axis::fit([-0.01, 0.0].into_iter()).log);
        assert!(!Axis::fit(std::iter::empty()).log);
    }

    #[test]
    fn renders_svg() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("p.svg");
        draw(&out, "t", "dp", &series_of(&doc())).unwrap();
        let text = std::fs::read_to_string(out).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("infidelity"));
    }
}
