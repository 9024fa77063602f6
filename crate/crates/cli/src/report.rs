//! Summary tables, the printed summary block, CSV output and SVG charts.

use std::fmt::Write as _;
use std::io::Write;

use mixpower::engine::{power_summary, CurveResult, How, PowerRow, SimResult, SummaryError};
use serde::{Deserialize, Serialize};

use crate::runspec::SummarySpec;

/// Output of a `power` or `curve` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Results {
    Power(SimResult),
    Curve(CurveResult),
}

impl Results {
    pub fn cells(&self) -> &[SimResult] {
        match self {
            Results::Power(r) => std::slice::from_ref(r),
            Results::Curve(c) => &c.cells,
        }
    }
}

/// Contents of `results.json`: the raw results and the summary settings
/// needed to reproduce the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub summary: SummarySpec,
    pub result: Results,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryKind {
    Power,
    Curve,
}

/// Power table plus the metadata printed above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub kind: SummaryKind,
    pub s: usize,
    pub n_values: Vec<usize>,
    /// Estimated SNR per outcome model.
    pub snr: Vec<f64>,
    pub inference: String,
    pub crit: String,
    pub how: How,
    pub thres: Vec<f64>,
    pub failed: usize,
    pub rows: Vec<PowerRow>,
}

pub fn summarize(results: &Results, spec: &SummarySpec) -> Result<SummaryTable, SummaryError> {
    let cells = results.cells();
    let rows = power_summary(cells, &spec.crit, &spec.thres, spec.how)?;
    let (kind, n_values, snr) = match results {
        Results::Power(r) => (SummaryKind::Power, vec![r.n], vec![r.snr.snr]),
        Results::Curve(c) => (
            SummaryKind::Curve,
            c.n_values.clone(),
            c.snr.iter().map(|e| e.snr).collect(),
        ),
    };
    Ok(SummaryTable {
        kind,
        s: cells.first().map_or(0, |c| c.s),
        n_values,
        snr,
        inference: cells.first().map(|c| c.inference.clone()).unwrap_or_default(),
        crit: spec.crit.clone(),
        how: spec.how,
        thres: spec.thres.clone(),
        failed: cells.iter().map(|c| c.n_errors).sum(),
        rows,
    })
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Copy)]
enum Align {
    Left,
    Right,
}

fn markdown_table(header: &[&str], align: &[Align], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|j| {
            rows.iter()
                .map(|r| r[j].chars().count())
                .chain([header[j].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let cell = |text: &str, j: usize| match align[j] {
        Align::Left => format!("{text:<w$} ", w = widths[j]),
        Align::Right => format!(" {text:>w$}", w = widths[j]),
    };
    let line = |cells: Vec<String>| format!("|{}|\n", cells.join("|"));
    let mut out = line(header.iter().enumerate().map(|(j, h)| cell(h, j)).collect());
    out.push_str(&line(
        (0..header.len())
            .map(|j| match align[j] {
                Align::Left => format!(":{}", "-".repeat(widths[j])),
                Align::Right => format!("{}:", "-".repeat(widths[j])),
            })
            .collect(),
    ));
    for r in rows {
        out.push_str(&line(r.iter().enumerate().map(|(j, c)| cell(c, j)).collect()));
    }
    out
}

/// The printed summary block.
pub fn render_text(table: &SummaryTable) -> String {
    let curve = table.kind == SummaryKind::Curve;
    let mut out = String::new();
    let title = if curve {
        "POWER CURVE ANALYSIS SUMMARY"
    } else {
        "POWER ANALYSIS SUMMARY"
    };
    let snr: Vec<String> = table.snr.iter().map(|v| format!("{v:.2}")).collect();
    let _ = writeln!(out, "\t*** {title} ***");
    let _ = writeln!(out, "Number of Monte Carlo simulations: {}", table.s);
    let _ = writeln!(out, "Number of observations in each simulation: {}", join(&table.n_values));
    if curve {
        let _ = writeln!(
            out,
            "Data generating process estimated SNR (for each outcome model): {}",
            snr.join(" ")
        );
    } else {
        let _ = writeln!(out, "Data generating process estimated SNR: {}", snr.join(" "));
    }
    let _ = writeln!(out, "Inference model: {}", table.inference);
    let _ = writeln!(out, "Significance criterion: {}", table.crit);
    let _ = writeln!(out, "Significance threshold: {}", join(&table.thres));
    if table.how == How::Greater {
        let _ = writeln!(out, "Detection rule: criterion >= threshold");
    }
    if table.failed > 0 {
        let _ = writeln!(out, "Failed iterations (excluded): {}", table.failed);
    }
    out.push('\n');

    let sweep = table.thres.len() > 1;
    let mut header = vec!["", "power"];
    let mut align = vec![Align::Left, Align::Right];
    if sweep {
        header.push("thres");
        align.push(Align::Right);
    }
    if curve {
        header.extend(["n", "snr"]);
        align.extend([Align::Right, Align::Right]);
    }
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.effect.clone(), format!("{:.3}", r.power)];
            if sweep {
                v.push(r.threshold.to_string());
            }
            if curve {
                v.push(r.n.to_string());
                v.push(format!("{:.2}", r.snr));
            }
            v
        })
        .collect();
    out.push_str(&markdown_table(&header, &align, &rows));
    out
}

/// Machine-readable summary, one line per table row.
pub fn write_summary_csv<W: Write>(table: &SummaryTable, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "inference",
        "effect",
        "outcome",
        "cell",
        "n",
        "snr",
        "threshold",
        "power",
        "se",
        "successes",
    ])?;
    for r in &table.rows {
        w.write_record([
            r.inference.clone(),
            r.effect.clone(),
            r.outcome.clone(),
            r.cell.to_string(),
            r.n.to_string(),
            format!("{:.4}", r.snr),
            r.threshold.to_string(),
            r.power.to_string(),
            r.se.to_string(),
            r.successes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

struct Panel {
    title: String,
    series: Vec<Series>,
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];
const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 280.0;
const LEFT: f64 = 56.0;
const TOP: f64 = 36.0;
const PLOT_W: f64 = 280.0;
const PLOT_H: f64 = 190.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn effects(rows: &[PowerRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.effect) {
            out.push(r.effect.clone());
        }
    }
    out
}

/// Line chart of power against a numeric x value, one panel per effect.
/// Output depends only on the inputs.
fn line_chart(panels: &[Panel], x_label: &str) -> String {
    let mut xs: Vec<f64> = panels
        .iter()
        .flat_map(|p| p.series.iter().flat_map(|s| s.points.iter().map(|pt| pt.0)))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (lo, hi) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    };
    let sx = |x: f64| LEFT + (x - lo) / (hi - lo) * PLOT_W;
    let sy = |y: f64| TOP + (1.0 - y) * PLOT_H;
    let legend_rows = panels.iter().map(|p| p.series.len()).max().unwrap_or(0);
    let width = PANEL_W * panels.len().max(1) as f64;
    let height = PANEL_H + 16.0 * legend_rows as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        let _ = writeln!(s, r#"<g transform="translate({:.0},0)">"#, k as f64 * PANEL_W);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            LEFT + PLOT_W / 2.0,
            escape(&panel.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{PLOT_W:.1}" height="{PLOT_H:.1}" fill="none" stroke="#333333"/>"##
        );
        for i in 0..=4 {
            let y = i as f64 / 4.0;
            let py = sy(y);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#dddddd"/>"##,
                LEFT + PLOT_W
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.2}</text>"#,
                LEFT - 6.0,
                py + 4.0
            );
        }
        for &x in &xs {
            let px = sx(x);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="#333333"/>"##,
                TOP + PLOT_H,
                TOP + PLOT_H + 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{x}</text>"#,
                TOP + PLOT_H + 16.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + PLOT_W / 2.0,
            TOP + PLOT_H + 34.0,
            escape(x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">power</text>"#,
            TOP + PLOT_H / 2.0,
            TOP + PLOT_H / 2.0
        );
        for (j, series) in panel.series.iter().enumerate() {
            let color = PALETTE[j % PALETTE.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
            for &(x, y) in &series.points {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
            let ly = TOP + PLOT_H + 52.0 + 16.0 * j as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{LEFT:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
                ly - 4.0,
                LEFT + 20.0,
                ly - 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#,
                LEFT + 26.0,
                escape(&series.label)
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// Power against n at the first threshold: one panel per effect, one line
/// per outcome model labelled by its estimated SNR.
pub fn power_curve_svg(table: &SummaryTable) -> String {
    let t0 = table.thres[0];
    let rows: Vec<&PowerRow> = table.rows.iter().filter(|r| r.threshold == t0).collect();
    let n_outcomes = table.snr.len().max(1);
    let panels: Vec<Panel> = effects(&table.rows)
        .into_iter()
        .map(|effect| {
            let series = (0..n_outcomes)
                .filter_map(|yi| {
                    let points: Vec<(f64, f64)> = rows
                        .iter()
                        .filter(|r| r.effect == effect && r.cell % n_outcomes == yi)
                        .map(|r| (r.n as f64, r.power))
                        .collect();
                    (!points.is_empty()).then(|| Series {
                        label: format!("SNR {:.2}", table.snr[yi.min(table.snr.len() - 1)]),
                        points,
                    })
                })
                .collect();
            Panel {
                title: effect,
                series,
            }
        })
        .collect();
    line_chart(&panels, "n")
}

/// Power against threshold: one panel per effect, one line per grid cell.
pub fn threshold_sweep_svg(table: &SummaryTable) -> String {
    let panels: Vec<Panel> = effects(&table.rows)
        .into_iter()
        .map(|effect| {
            let mut cells: Vec<usize> = Vec::new();
            for r in table.rows.iter().filter(|r| r.effect == effect) {
                if !cells.contains(&r.cell) {
                    cells.push(r.cell);
                }
            }
            let series = cells
                .into_iter()
                .map(|c| {
                    let rows: Vec<&PowerRow> = table
                        .rows
                        .iter()
                        .filter(|r| r.effect == effect && r.cell == c)
                        .collect();
                    Series {
                        label: format!("n = {}, SNR {:.2}", rows[0].n, rows[0].snr),
                        points: rows.iter().map(|r| (r.threshold, r.power)).collect(),
                    }
                })
                .collect();
            Panel {
                title: effect,
                series,
            }
        })
        .collect();
    line_chart(&panels, &format!("{} threshold", table.crit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mixpower::engine::{ErrorHandling, Iteration};
    use mixpower::inference::CritResult;
    use mixpower::snr::SnrEstimate;
    use std::time::Duration;

    fn cell(cell: usize, n: usize, snr: f64, values: &[f64]) -> SimResult {
        SimResult {
            inference: "F-test".into(),
            outcome: "f".into(),
            family: "gaussian".into(),
            predictors: "cvine".into(),
            s: values.len(),
            n,
            seed: 1,
            cell,
            ymod_index: cell % 2,
            n_index: cell / 2,
            errorhandling: ErrorHandling::Remove,
            snr: SnrEstimate { snr, se: 0.0, m: 10, r: 2 },
            results: values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut c = CritResult::default();
                    c.insert("pval", "F-test", *v);
                    Iteration { iteration: i, criteria: c }
                })
                .collect(),
            errors: vec![],
            n_errors: 0,
            elapsed: Duration::ZERO,
        }
    }

    fn curve() -> Results {
        Results::Curve(CurveResult {
            n_values: vec![50, 100],
            outcomes: vec!["a".into(), "b".into()],
            snr: vec![
                SnrEstimate { snr: 0.18, se: 0.0, m: 10, r: 2 },
                SnrEstimate { snr: 0.08, se: 0.0, m: 10, r: 2 },
            ],
            cells: vec![
                cell(0, 50, 0.18, &[0.01, 0.2, 0.04, 0.07]),
                cell(1, 50, 0.08, &[0.5, 0.2, 0.04, 0.07]),
                cell(2, 100, 0.18, &[0.01, 0.02, 0.04, 0.07]),
                cell(3, 100, 0.08, &[0.01, 0.2, 0.4, 0.07]),
            ],
        })
    }

    fn spec(thres: Vec<f64>) -> SummarySpec {
        SummarySpec {
            crit: "pval".into(),
            thres,
            how: How::Lesser,
        }
    }

    #[test]
    fn curve_text_block() {
        let t = summarize(&curve(), &spec(vec![0.05])).unwrap();
        let text = render_text(&t);
        let expected = "\t*** POWER CURVE ANALYSIS SUMMARY ***
Number of Monte Carlo simulations: 4
Number of observations in each simulation: 50 100
Data generating process estimated SNR (for each outcome model): 0.18 0.08
Inference model: F-test
Significance criterion: pval
Significance threshold: 0.05

|       | power|   n|  snr|
|:------|-----:|---:|----:|
|F-test | 0.500|  50| 0.18|
|F-test | 0.250|  50| 0.08|
|F-test | 0.750| 100| 0.18|
|F-test | 0.250| 100| 0.08|
";
        assert_eq!(text, expected);
    }

    #[test]
    fn single_cell_single_threshold_is_one_row() {
        let r = Results::Power(cell(0, 100, 0.28, &[0.01, 0.2]));
        let t = summarize(&r, &spec(vec![0.05])).unwrap();
        assert_eq!(t.rows.len(), 1);
        let text = render_text(&t);
        assert!(text.starts_with("\t*** POWER ANALYSIS SUMMARY ***\n"));
        assert!(text.contains("Data generating process estimated SNR: 0.28\n"));
        assert!(text.ends_with("|       | power|\n|:------|-----:|\n|F-test | 0.500|\n"));
    }

    #[test]
    fn svg_is_deterministic_and_has_points() {
        let t = summarize(&curve(), &spec(vec![0.01, 0.05, 0.1, 0.5])).unwrap();
        let a = threshold_sweep_svg(&t);
        assert_eq!(a, threshold_sweep_svg(&t));
        // 4 cells × 4 thresholds plotted in the single effect panel.
        assert_eq!(a.matches("<circle").count(), 16);
        let p = power_curve_svg(&t);
        assert_eq!(p.matches("<polyline").count(), 2);
        assert_eq!(p.matches("<circle").count(), 4);
        assert!(p.contains("SNR 0.18") && p.contains("SNR 0.08"));
    }

    #[test]
    fn csv_rows_and_precision() {
        let t = summarize(&curve(), &spec(vec![0.05])).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "F-test,F-test,f,0,50,0.1800,0.05,0.5,0.25,4");
    }

    #[test]
    fn results_file_round_trip() {
        let file = ResultsFile {
            summary: spec(vec![0.05, 0.1]),
            result: curve(),
        };
        let json = serde_json::to_string_pretty(&file).unwrap();
        let back: ResultsFile = serde_json::from_str(&json).unwrap();
        assert_eq!(
            summarize(&back.result, &back.summary).unwrap(),
            summarize(&file.result, &file.summary).unwrap()
        );
    }
}
