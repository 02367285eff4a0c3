//! Results tables, summary statistics and static SVG boxplots.
//!
//! Quantiles use linear interpolation between order statistics: for sorted `x[0..m]` the
//! `q`-quantile is `x[k] + (h - k)(x[k+1] - x[k])` with `h = q (m - 1)`, `k = floor(h)`.
//! Whiskers reach the most extreme observations within `1.5 IQR` of the quartiles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::dgp::{DgpKind, Task};
use crate::error::{Error, Result};
use crate::harness::grid::GridPoint;
use crate::harness::replicate::{ExperimentResult, Method};

pub const RESULTS_COLUMNS: [&str; 9] = [
    "dgp",
    "n",
    "replication",
    "method",
    "i",
    "j",
    "error",
    "sparsity",
    "seed",
];

pub const SUMMARY_COLUMNS: [&str; 11] = [
    "dgp",
    "n",
    "method",
    "count",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "whisker_low",
    "whisker_high",
];

pub fn write_results<W: Write>(results: &[ExperimentResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_COLUMNS)?;
    for r in results {
        let (i, j) = match r.chosen {
            Some(p) => (p.i.to_string(), p.j.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.dgp.to_string(),
            r.n.to_string(),
            r.replication.to_string(),
            r.method.to_string(),
            i,
            j,
            r.error.to_string(),
            r.sparsity.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec
        .get(k)
        .ok_or_else(|| Error::Parse(format!("missing column '{}'", RESULTS_COLUMNS[k])))?;
    raw.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("column '{}': '{raw}': {e}", RESULTS_COLUMNS[k])))
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<ExperimentResult>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().ne(RESULTS_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!(
            "results header must be '{}'",
            RESULTS_COLUMNS.join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let chosen = if rec.get(4).is_some_and(|s| !s.trim().is_empty()) {
            Some(GridPoint {
                i: field(&rec, 4)?,
                j: field(&rec, 5)?,
            })
        } else {
            None
        };
        out.push(ExperimentResult {
            dgp: field::<DgpKind>(&rec, 0)?,
            n: field(&rec, 1)?,
            replication: field(&rec, 2)?,
            method: field::<Method>(&rec, 3)?,
            chosen,
            error: field(&rec, 6)?,
            sparsity: field(&rec, 7)?,
            seed: field(&rec, 8)?,
        });
    }
    Ok(out)
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let k = h.floor() as usize;
    if k + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[k] + (h - k as f64) * (sorted[k + 1] - sorted[k])
}

/// Five-number summary plus whisker ends of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

impl BoxStats {
    pub fn from_sample(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&v, 0.25);
        let q3 = quantile_sorted(&v, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let whisker_low = v.iter().copied().find(|&x| x >= lo_fence).unwrap_or(v[0]);
        let whisker_high = v
            .iter()
            .rev()
            .copied()
            .find(|&x| x <= hi_fence)
            .unwrap_or(v[v.len() - 1]);
        Some(Self {
            count: v.len(),
            min: v[0],
            q1,
            median: quantile_sorted(&v, 0.5),
            q3,
            max: v[v.len() - 1],
            whisker_low,
            whisker_high,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dgp: DgpKind,
    pub n: usize,
    pub method: Method,
    pub stats: BoxStats,
}

/// One summary row per `(dgp, n, method)`, sorted by those keys.
pub fn summarize(results: &[ExperimentResult]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(DgpKind, usize, Method), Vec<f64>> = BTreeMap::new();
    for r in results {
        groups.entry((r.dgp, r.n, r.method)).or_default().push(r.error);
    }
    groups
        .into_iter()
        .filter_map(|((dgp, n, method), errors)| {
            BoxStats::from_sample(&errors).map(|stats| SummaryRow {
                dgp,
                n,
                method,
                stats,
            })
        })
        .collect()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        let s = r.stats;
        w.write_record([
            r.dgp.to_string(),
            r.n.to_string(),
            r.method.to_string(),
            s.count.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
            s.whisker_low.to_string(),
            s.whisker_high.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const SVG_W: f64 = 760.0;
const SVG_H: f64 = 460.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 60.0;

fn method_color(m: Method) -> &'static str {
    match m {
        Method::Spdnn => "#1f77b4",
        Method::Npdnn => "#ff7f0e",
    }
}

/// Geometry of one drawn box, in data units, as written to the figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawnBox {
    pub n: usize,
    pub method: Method,
    pub stats: BoxStats,
}

/// Boxplot of one DGP grouped by `n`, with one box per method. Returns the SVG document and
/// the boxes drawn.
pub fn boxplot_svg(dgp: DgpKind, results: &[ExperimentResult]) -> (String, Vec<DrawnBox>) {
    let summary: Vec<SummaryRow> = summarize(results)
        .into_iter()
        .filter(|r| r.dgp == dgp)
        .collect();
    let boxes: Vec<DrawnBox> = summary
        .iter()
        .map(|r| DrawnBox {
            n: r.n,
            method: r.method,
            stats: r.stats,
        })
        .collect();
    let ns: Vec<usize> = {
        let mut v: Vec<usize> = boxes.iter().map(|b| b.n).collect();
        v.dedup();
        v
    };
    let errors: Vec<f64> = results
        .iter()
        .filter(|r| r.dgp == dgp)
        .map(|r| r.error)
        .collect();
    let (mut lo, mut hi) = errors
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let y_of = |v: f64| MARGIN_T + plot_h * (hi - v) / (hi - lo);
    let group_w = plot_w / ns.len().max(1) as f64;
    let box_w = group_w * 0.28;

    let ylabel = match dgp.task() {
        Task::Regression => "empirical L2 error",
        Task::Binary => "empirical excess risk",
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="16">{dgp}: {ylabel}</text>"#,
        MARGIN_L + plot_w / 2.0
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{:.2}" stroke="black"/>"#,
        MARGIN_T + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_L}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    );
    for k in 0..=5 {
        let v = lo + (hi - lo) * k as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.4}</text>"#,
            MARGIN_L - 5.0,
            MARGIN_L - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{ylabel}</text>"#,
        MARGIN_T + plot_h / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#,
        MARGIN_L + plot_w / 2.0,
        SVG_H - 15.0
    );

    for (g, &n) in ns.iter().enumerate() {
        let cx = MARGIN_L + group_w * (g as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#,
            MARGIN_T + plot_h + 20.0
        );
        for b in boxes.iter().filter(|b| b.n == n) {
            let offset = match b.method {
                Method::Spdnn => -0.55,
                Method::Npdnn => 0.55,
            };
            let x = cx + offset * box_w;
            let st = b.stats;
            let color = method_color(b.method);
            let _ = writeln!(
                s,
                r#"<g class="box" data-n="{n}" data-method="{}" data-whisker-low="{}" data-q1="{}" data-median="{}" data-q3="{}" data-whisker-high="{}">"#,
                b.method, st.whisker_low, st.q1, st.median, st.q3, st.whisker_high
            );
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                y_of(st.whisker_high),
                y_of(st.q3)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                y_of(st.q1),
                y_of(st.whisker_low)
            );
            for v in [st.whisker_low, st.whisker_high] {
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
                    x - box_w / 4.0,
                    y_of(v),
                    x + box_w / 4.0,
                    y_of(v)
                );
            }
            let top = y_of(st.q3);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{top:.2}" width="{box_w:.2}" height="{:.2}" fill="{color}" fill-opacity="0.6" stroke="black"/>"#,
                x - box_w / 2.0,
                (y_of(st.q1) - top).max(0.5)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
                x - box_w / 2.0,
                y_of(st.median),
                x + box_w / 2.0,
                y_of(st.median)
            );
            for r in results
                .iter()
                .filter(|r| r.dgp == dgp && r.n == n && r.method == b.method)
                .filter(|r| r.error < st.whisker_low || r.error > st.whisker_high)
            {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="none" stroke="{color}"/>"#,
                    y_of(r.error)
                );
            }
            let _ = writeln!(s, "</g>");
        }
    }

    for (k, m) in [Method::Spdnn, Method::Npdnn].into_iter().enumerate() {
        let y = MARGIN_T + 10.0 + 22.0 * k as f64;
        let x = SVG_W - MARGIN_R + 20.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="14" height="14" fill="{}" fill-opacity="0.6" stroke="black"/><text x="{:.2}" y="{:.2}">{m}</text>"#,
            method_color(m),
            x + 20.0,
            y + 11.0
        );
    }
    let _ = writeln!(s, "</svg>");
    (s, boxes)
}

/// Writes `results.csv`, `summary.csv` and one `boxplot_<dgp>.svg` per DGP present.
pub fn write_report(results: &[ExperimentResult], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let path = out_dir.join("results.csv");
    write_results(results, std::fs::File::create(&path)?)?;
    written.push(path);

    let path = out_dir.join("summary.csv");
    write_summary(&summarize(results), std::fs::File::create(&path)?)?;
    written.push(path);

    let mut dgps: Vec<DgpKind> = results.iter().map(|r| r.dgp).collect();
    dgps.sort();
    dgps.dedup();
    for dgp in dgps {
        let (svg, _) = boxplot_svg(dgp, results);
        let path = out_dir.join(format!("boxplot_{}.svg", dgp.name().to_ascii_lowercase()));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_of_one_to_five() {
        let s = BoxStats::from_sample(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert_eq!((s.whisker_low, s.whisker_high), (1.0, 5.0));
    }

    #[test]
    fn interpolated_quantile() {
        let v = [1.0, 2.0, 4.0, 8.0];
        // h = 0.25 * 3 = 0.75 -> 1 + 0.75 * 1
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 1.0), 8.0);
    }

    #[test]
    fn whiskers_exclude_outliers() {
        let s = BoxStats::from_sample(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
        assert_eq!(s.whisker_high, 5.0);
        assert_eq!(s.max, 100.0);
    }

    #[test]
    fn empty_summary() {
        assert!(summarize(&[]).is_empty());
        let mut buf = Vec::new();
        write_summary(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), SUMMARY_COLUMNS.join(","));
    }
}
