//! CSV and Markdown renderings of score reports and leaderboards.

use std::io::{self, Write};

use stereobench_core::metrics::{LeaderboardEntry, ScoreReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Self::Csv),
            "md" | "markdown" => Some(Self::Markdown),
            _ => None,
        }
    }
}

/// `PSNR: 31.2456, SSIM: 0.9123`; identical submissions print `inf`.
pub fn summary_line(report: &ScoreReport) -> String {
    format!("PSNR: {:.4}, SSIM: {:.4}", report.mean_psnr_db(), report.mean_ssim())
}

/// Columns `scene, view, psnr_db, ssim`, one row per image, then a `mean`
/// row. Values use shortest round-trip formatting, so the mean can be
/// recomputed exactly from the rows.
pub fn write_csv(report: &ScoreReport, w: impl Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scene", "view", "psnr_db", "ssim"])?;
    for s in report.images() {
        out.write_record([
            s.scene.padded(),
            s.view.to_string(),
            s.metric.psnr_db.to_string(),
            s.metric.ssim.to_string(),
        ])?;
    }
    out.write_record([
        "mean".to_string(),
        "all".to_string(),
        report.mean_psnr_db().to_string(),
        report.mean_ssim().to_string(),
    ])?;
    out.flush()
}

pub fn write_markdown(report: &ScoreReport, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "| Scene | View | PSNR (RGB) | SSIM |")?;
    writeln!(w, "|---|---|---:|---:|")?;
    for s in report.images() {
        writeln!(
            w,
            "| {} | {} | {:.4} | {:.4} |",
            s.scene, s.view, s.metric.psnr_db, s.metric.ssim
        )?;
    }
    writeln!(
        w,
        "| **Mean** ({} scenes) | | **{:.4}** | **{:.4}** |",
        report.scene_count(),
        report.mean_psnr_db(),
        report.mean_ssim()
    )
}

pub fn write_report(report: &ScoreReport, format: ReportFormat, w: impl Write) -> io::Result<()> {
    match format {
        ReportFormat::Csv => write_csv(report, w),
        ReportFormat::Markdown => write_markdown(report, w),
    }
}

pub fn leaderboard_markdown(entries: &[LeaderboardEntry]) -> String {
    let mut s = String::from("| Rank | Team | PSNR (RGB) |\n|---:|---|---:|\n");
    for e in entries {
        s += &format!("| {} | {} | {:.4} |\n", e.rank, e.team, e.psnr_db);
    }
    s
}
