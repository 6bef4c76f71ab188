//! Report files: `metrics.json`, `table.tsv` and `travel.svg`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{aggregate, episode_metrics, EpisodeMetrics, PipelineMetrics};
use crate::error::{Error, Result};
use crate::trace::read_trace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub pipelines: Vec<PipelineMetrics>,
    pub episodes: Vec<EpisodeMetrics>,
}

impl Report {
    pub fn new(mut episodes: Vec<EpisodeMetrics>) -> Self {
        episodes.sort_by(|a, b| a.pipeline.cmp(&b.pipeline).then(a.seed.cmp(&b.seed)));
        Self { pipelines: aggregate(&episodes), episodes }
    }

    pub fn pipeline(&self, label: &str) -> Option<&PipelineMetrics> {
        self.pipelines.iter().find(|p| p.pipeline == label)
    }
}

/// Computes episode metrics from every `<dir>/<pipeline>/<seed>.trace`.
pub fn load_metrics(dir: &Path) -> Result<Vec<EpisodeMetrics>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let sub = entry?.path();
        if !sub.is_dir() {
            continue;
        }
        for f in std::fs::read_dir(&sub)? {
            let p = f?.path();
            if p.extension().is_some_and(|e| e == "trace") {
                paths.push(p);
            }
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::MalformedTrace(format!("no traces under {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let read = read_trace(p)?;
            for w in &read.warnings {
                log::warn!("{}: {w}", p.display());
            }
            episode_metrics(&read.records)
        })
        .collect()
}

type Row = (&'static str, fn(&PipelineMetrics) -> String);

/// Table with one column per pipeline and one row per metric.
pub fn render_table(pipelines: &[PipelineMetrics]) -> String {
    let mut s = String::from("metric");
    for p in pipelines {
        s.push('\t');
        s.push_str(&p.pipeline);
    }
    s.push('\n');
    let rows: [Row; 8] = [
        ("Episodes", |p| p.episodes.to_string()),
        ("No. of planning steps", |p| p.planning_steps.to_string()),
        ("No. of lane change decisions", |p| p.lane_change_decisions.to_string()),
        ("No. of lane changes assisted by MPC Builder", |p| p.assisted.to_string()),
        ("No. of lane changes rejected by MPC Builder", |p| p.rejected.to_string()),
        ("Success rate", |p| p.success_rate()),
        ("Safe lane-changing rate [%]", |p| format!("{:.1}", p.safe_rate())),
        ("Mean travel distance [m]", |p| format!("{:.1}", p.mean_travel)),
    ];
    for (name, f) in rows {
        s.push_str(name);
        for p in pipelines {
            s.push('\t');
            s.push_str(&f(p));
        }
        s.push('\n');
    }
    s
}

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Grouped bar chart of per-episode travel distance, one color per pipeline.
pub fn render_travel_svg(pipelines: &[PipelineMetrics]) -> String {
    let mut seeds: Vec<u64> = pipelines.iter().flat_map(|p| p.travel.iter().map(|t| t.0)).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let (w, h) = (80.0 + 40.0 * seeds.len().max(1) as f64, 320.0);
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let max = pipelines.iter().flat_map(|p| p.travel.iter().map(|t| t.1)).fold(1.0_f64, f64::max);
    let y_of = |v: f64| top + plot_h * (1.0 - v.max(0.0) / max);
    let group_w = plot_w / seeds.len().max(1) as f64;
    let bar_w = 0.8 * group_w / pipelines.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{left}" y="18">Travel distance per episode [m]</text>"#);
    for i in 0..=4 {
        let v = max * i as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, w - right);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.0}</text>"#, left - 4.0, y + 4.0);
    }
    for (gi, seed) in seeds.iter().enumerate() {
        let gx = left + group_w * gi as f64 + 0.1 * group_w;
        for (pi, p) in pipelines.iter().enumerate() {
            if let Some(&(_, v)) = p.travel.iter().find(|t| t.0 == *seed) {
                let x = gx + bar_w * pi as f64;
                let y = y_of(v);
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.1}" y="{y:.1}" width="{bar_w:.1}" height="{:.1}" fill="{}"><title>{} seed {seed}: {v:.1} m</title></rect>"#,
                    top + plot_h - y,
                    PALETTE[pi % PALETTE.len()],
                    p.pipeline
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{seed}</text>"#,
            gx + 0.4 * group_w,
            top + plot_h + 14.0
        );
    }
    for (pi, p) in pipelines.iter().enumerate() {
        let color = PALETTE[pi % PALETTE.len()];
        let y = y_of(p.mean_travel);
        let _ = writeln!(
            s,
            r#"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-dasharray="4 3"/>"#,
            w - right
        );
        let ly = h - 14.0;
        let lx = left + 150.0 * pi as f64;
        let _ = writeln!(s, r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#, ly - 9.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}">{} (mean {:.0} m)</text>"#,
            lx + 14.0,
            p.pipeline,
            p.mean_travel
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the three report files into `dir`.
pub fn write_report(dir: &Path, report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(report)? + "\n")?;
    std::fs::write(dir.join("table.tsv"), render_table(&report.pipelines))?;
    std::fs::write(dir.join("travel.svg"), render_travel_svg(&report.pipelines))?;
    Ok(())
}
