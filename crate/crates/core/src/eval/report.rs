//! Report files: `report.json`, per-model `roc_<id>.csv` / `pr_<id>.csv`
//! and the `roc_overlay.svg` / `pr_overlay.svg` renderings. Every file
//! carries the run configuration (CSV `#` comment lines, SVG `<metadata>`).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    auc, confusion, metrics, pr_curve, roc_curve, Averaging, ConfusionMatrix, CurvePoints, FoldReport, MetricsReport,
};
use crate::classifiers::{argmax, ProbaRow};
use crate::corpus::{ClassCounts, Dataset, Label};
use crate::error::{Error, Result};
use crate::pipeline::TextModel;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub model_id: String,
    pub counts: ClassCounts,
    pub confusion: ConfusionMatrix,
    pub micro: MetricsReport,
    #[serde(rename = "macro")]
    pub macro_: MetricsReport,
    pub per_class: MetricsReport,
    pub auc: f64,
    pub roc: CurvePoints,
    pub pr: CurvePoints,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kfold: Option<FoldReport>,
}

impl ModelEval {
    fn build(model_id: &str, c: ConfusionMatrix, scores: &[f64], truth: &[Label]) -> Result<ModelEval> {
        let mut per_class = [0usize; 2];
        for l in truth {
            per_class[l.index()] += 1;
        }
        Ok(ModelEval {
            model_id: model_id.to_string(),
            counts: ClassCounts {
                total: truth.len(),
                per_class,
            },
            confusion: c,
            micro: metrics(&c, Averaging::Micro)?,
            macro_: metrics(&c, Averaging::Macro)?,
            per_class: metrics(&c, Averaging::PerClass)?,
            auc: auc(scores, truth)?,
            roc: roc_curve(scores, truth)?,
            pr: pr_curve(scores, truth)?,
            kfold: None,
        })
    }

    /// Metrics and curves from probability rows; curves use P(class 1).
    pub fn from_rows(model_id: &str, rows: &[ProbaRow], truth: &[Label]) -> Result<ModelEval> {
        let preds: Vec<Label> = rows.iter().map(argmax).collect();
        let scores: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        Self::build(model_id, confusion(&preds, truth)?, &scores, truth)
    }

    /// Pooled out-of-fold evaluation with the fold report attached.
    pub fn from_kfold(model_id: &str, d: &Dataset, fold: FoldReport) -> Result<ModelEval> {
        let mut e = Self::build(model_id, fold.pooled, &fold.oof_scores, &d.labels())?;
        e.kfold = Some(fold);
        Ok(e)
    }
}

/// Queries `model` on every record of `d` and evaluates the answers.
pub fn evaluate(model: &dyn TextModel, d: &Dataset) -> Result<ModelEval> {
    let texts: Vec<String> = d.records.iter().map(|r| r.text.clone()).collect();
    let rows = model.predict_proba_texts(&texts)?;
    ModelEval::from_rows(model.model_id(), &rows, &d.labels())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    /// Effective run configuration, echoed verbatim.
    pub config: serde_json::Value,
    pub seed: u64,
    pub models: Vec<ModelEval>,
}

impl Report {
    pub fn new(config: serde_json::Value, seed: u64, models: Vec<ModelEval>) -> Self {
        Report {
            format_version: REPORT_FORMAT_VERSION,
            config,
            seed,
            models,
        }
    }

    pub fn from_json(s: &str) -> Result<Report> {
        let r: Report = serde_json::from_str(s)?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                expected: REPORT_FORMAT_VERSION,
                found: r.format_version,
            });
        }
        Ok(r)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Roc,
    Pr,
}

impl CurveKind {
    fn prefix(self) -> &'static str {
        match self {
            CurveKind::Roc => "roc",
            CurveKind::Pr => "pr",
        }
    }

    fn axes(self) -> (&'static str, &'static str) {
        match self {
            CurveKind::Roc => ("false positive rate", "true positive rate"),
            CurveKind::Pr => ("recall", "precision"),
        }
    }

    fn curve(self, m: &ModelEval) -> &CurvePoints {
        match self {
            CurveKind::Roc => &m.roc,
            CurveKind::Pr => &m.pr,
        }
    }
}

/// File-name-safe rendering of a model id.
pub fn file_stem(model_id: &str) -> String {
    model_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn curve_csv(kind: CurveKind, m: &ModelEval, config: &str, seed: u64) -> String {
    let c = kind.curve(m);
    let (x, y) = match kind {
        CurveKind::Roc => ("fpr", "tpr"),
        CurveKind::Pr => ("recall", "precision"),
    };
    let mut s = String::new();
    let _ = writeln!(s, "# config: {config}");
    let _ = writeln!(s, "# seed: {seed}");
    let _ = writeln!(s, "# model_id: {}", m.model_id);
    let _ = writeln!(s, "# area: {} ({})", c.area, c.area_rule);
    let _ = writeln!(s, "{x},{y},threshold");
    for (i, p) in c.points.iter().enumerate() {
        match i.checked_sub(1).map(|j| c.thresholds[j]) {
            Some(t) => writeln!(s, "{},{},{}", p[0], p[1], t),
            None => writeln!(s, "{},{},", p[0], p[1]),
        }
        .unwrap();
    }
    s
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Curves of several models on one unit-square plot.
pub fn render_overlay_svg(kind: CurveKind, curves: &[(&str, &CurvePoints)], metadata: &str) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 56.0;
    let span = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + x * span;
    let py = |y: f64| SIZE - MARGIN - y * span;
    let (xlabel, ylabel) = kind.axes();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", xml_escape(metadata));
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#,
            px(t),
            SIZE - MARGIN + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t}</text>"#,
            MARGIN - 6.0,
            py(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xlabel}</text>"#,
        SIZE / 2.0,
        SIZE - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{ylabel}</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    if kind == CurveKind::Roc {
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4 4"/>"##,
            px(0.0),
            py(0.0),
            px(1.0),
            py(1.0)
        );
    }
    for (i, (id, c)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p[0]), py(p[1])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let lx = match kind {
            CurveKind::Roc => px(0.45),
            CurveKind::Pr => px(0.05),
        };
        let ly = match kind {
            CurveKind::Roc => py(0.0) - 16.0 * (curves.len() - i) as f64,
            CurveKind::Pr => ly + span * 0.55,
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}">{} (area {:.4})</text>"#,
            lx + 24.0,
            xml_escape(id),
            c.area
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the report files into `dir` (created if needed) and returns the
/// written paths.
pub fn write_report_files(dir: &Path, report: &Report) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config = serde_json::to_string(&report.config)?;
    let mut written = vec![write(dir.join("report.json"), &report.to_json()?)?];
    for kind in [CurveKind::Roc, CurveKind::Pr] {
        for m in &report.models {
            let name = format!("{}_{}.csv", kind.prefix(), file_stem(&m.model_id));
            written.push(write(dir.join(name), &curve_csv(kind, m, &config, report.seed))?);
        }
        let curves: Vec<(&str, &CurvePoints)> = report
            .models
            .iter()
            .map(|m| (m.model_id.as_str(), kind.curve(m)))
            .collect();
        let meta = serde_json::json!({ "config": report.config, "seed": report.seed });
        let svg = render_overlay_svg(kind, &curves, &meta.to_string());
        written.push(write(dir.join(format!("{}_overlay.svg", kind.prefix())), &svg)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_eval(id: &str) -> ModelEval {
        let rows = [[0.1, 0.9], [0.3, 0.7], [0.6, 0.4], [0.8, 0.2], [0.45, 0.55]];
        let truth: Vec<Label> = [1, 1, 0, 0, 0].iter().map(|&i| Label::from_index(i).unwrap()).collect();
        ModelEval::from_rows(id, &rows, &truth).unwrap()
    }

    #[test]
    fn eval_from_rows() {
        let e = sample_eval("m");
        assert_eq!(
            e.confusion,
            ConfusionMatrix {
                tp: 2,
                fp: 1,
                fn_: 0,
                tn: 2
            }
        );
        assert_eq!(e.micro.accuracy, 0.8);
        assert_eq!(e.auc, 1.0);
        assert_eq!(e.counts.per_class, [3, 2]);
    }

    #[test]
    fn report_round_trip_and_files() {
        let r = Report::new(
            serde_json::json!({"seed": 3, "algo": "x"}),
            3,
            vec![sample_eval("a b"), sample_eval("c")],
        );
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);

        let dir = tempfile::tempdir().unwrap();
        let files = write_report_files(dir.path(), &r).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            [
                "report.json",
                "roc_a_b.csv",
                "roc_c.csv",
                "roc_overlay.svg",
                "pr_a_b.csv",
                "pr_c.csv",
                "pr_overlay.svg"
            ]
        );
        let csv = std::fs::read_to_string(dir.path().join("roc_c.csv")).unwrap();
        assert!(csv.starts_with("# config: {\"algo\":\"x\",\"seed\":3}\n"));
        assert!(csv.contains("fpr,tpr,threshold\n0,0,\n"));
        let svg = std::fs::read_to_string(dir.path().join("pr_overlay.svg")).unwrap();
        assert!(svg.contains("<metadata>{&quot;config&quot;"));
        assert_eq!(svg.matches("<polyline").count(), 2);

        // Same report, same bytes.
        let dir2 = tempfile::tempdir().unwrap();
        write_report_files(dir2.path(), &r).unwrap();
        for n in &names {
            assert_eq!(
                std::fs::read(dir.path().join(n)).unwrap(),
                std::fs::read(dir2.path().join(n)).unwrap()
            );
        }
    }

    #[test]
    fn version_checked() {
        let mut r = Report::new(serde_json::Value::Null, 0, vec![]);
        r.format_version = 9;
        let s = serde_json::to_string(&r).unwrap();
        assert!(matches!(
            Report::from_json(&s),
            Err(Error::FormatVersion { found: 9, .. })
        ));
    }
}
