//! Report output: CSV tables (round-trippable) and SVG figures.

use super::experiment::SweepReport;
use super::metrics::MetricsReport;
use super::svg;
use std::path::{Path, PathBuf};

/// Reads a saved metrics.json back.
pub fn load_metrics(path: &Path) -> std::io::Result<MetricsReport> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

/// Per-seed table with an aggregate row. Floats print in shortest
/// round-trip form so reading the file back reproduces the exact values.
pub fn write_metrics_csv(report: &MetricsReport, path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["env", "method", "seed", "mean_reward", "win_rate", "best_pool_score"])?;
    for s in &report.per_seed {
        w.write_record([
            report.env.as_str(),
            report.method.as_str(),
            &s.seed.to_string(),
            &s.mean_reward.to_string(),
            &s.win_rate.to_string(),
            &s.best_pool_score.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.write_record([
        report.env.as_str(),
        report.method.as_str(),
        "all",
        &report.mean_reward.to_string(),
        &report.win_rate.to_string(),
        "",
    ])?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsCsvRow {
    pub env: String,
    pub method: String,
    pub seed: String,
    pub mean_reward: f64,
    pub win_rate: f64,
    pub best_pool_score: Option<f64>,
}

pub fn read_metrics_csv(path: &Path) -> std::io::Result<Vec<MetricsCsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        out.push(MetricsCsvRow {
            env: record[0].to_string(),
            method: record[1].to_string(),
            seed: record[2].to_string(),
            mean_reward: record[3].parse().unwrap_or(f64::NAN),
            win_rate: record[4].parse().unwrap_or(f64::NAN),
            best_pool_score: if record[5].is_empty() { None } else { record[5].parse().ok() },
        });
    }
    Ok(out)
}

/// Step-indexed belief curves.
pub fn write_curves_csv(report: &MetricsReport, path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "entropy", "map_accuracy", "mass_on_true"])?;
    for (t, e) in report.entropy_curve.iter().enumerate() {
        w.write_record([
            t.to_string(),
            e.to_string(),
            report.map_accuracy_curve[t].to_string(),
            report.mass_on_true_curve[t].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Figures for a set of reports: reward bars with CI whiskers (one group
/// per report) and belief-entropy curves, each as an image + CSV pair.
pub fn emit_plots(reports: &[&MetricsReport], out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let bars: Vec<(String, f64, Option<(f64, f64)>)> = reports
        .iter()
        .map(|r| {
            (
                format!("{} {} ({:.0}%)", r.env, r.method, r.win_rate * 100.0),
                r.mean_reward,
                Some(r.reward_ci),
            )
        })
        .collect();
    let bar_path = out_dir.join("reward_bars.svg");
    std::fs::write(&bar_path, svg::bar_chart("Mean episode reward", "reward", &bars))?;
    written.push(bar_path);
    let csv_path = out_dir.join("reward_bars.csv");
    {
        let mut w = csv::Writer::from_path(&csv_path)?;
        w.write_record(["env", "method", "mean_reward", "ci_lo", "ci_hi", "win_rate"])?;
        for r in reports {
            w.write_record([
                r.env.as_str(),
                r.method.as_str(),
                &r.mean_reward.to_string(),
                &r.reward_ci.0.to_string(),
                &r.reward_ci.1.to_string(),
                &r.win_rate.to_string(),
            ])?;
        }
        w.flush()?;
    }
    written.push(csv_path);

    let entropy_series: Vec<(String, Vec<(f64, f64)>)> = reports
        .iter()
        .filter(|r| !r.entropy_curve.is_empty())
        .map(|r| {
            (
                format!("{} {}", r.env, r.method),
                r.entropy_curve.iter().enumerate().map(|(t, e)| (t as f64, *e)).collect(),
            )
        })
        .collect();
    if !entropy_series.is_empty() {
        let path = out_dir.join("belief_entropy.svg");
        std::fs::write(&path, svg::line_chart("Belief entropy by step", "entropy (nats)", &entropy_series))?;
        written.push(path);
        let path = out_dir.join("belief_entropy.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["label", "step", "entropy"])?;
        for (label, pts) in &entropy_series {
            for (x, y) in pts {
                w.write_record([label.as_str(), &x.to_string(), &y.to_string()])?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Reward-versus-x sweep figure plus table (one row per x).
pub fn write_sweep(sweep: &SweepReport, x_label: &str, out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let pts: Vec<(f64, f64)> = sweep.rows.iter().map(|r| (r.x, r.report.mean_reward)).collect();
    let path = out_dir.join("reward_vs_x.svg");
    std::fs::write(
        &path,
        svg::line_chart(&format!("Reward vs {x_label}"), "mean reward", &[("reward".to_string(), pts)]),
    )?;
    written.push(path);
    let path = out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["x", "label", "mean_reward", "ci_lo", "ci_hi", "win_rate"])?;
    for row in &sweep.rows {
        w.write_record([
            &row.x.to_string(),
            &row.label,
            &row.report.mean_reward.to_string(),
            &row.report.reward_ci.0.to_string(),
            &row.report.reward_ci.1.to_string(),
            &row.report.win_rate.to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::metrics::SeedSummary;
    use super::*;

    fn report() -> MetricsReport {
        MetricsReport {
            env: "empty-6x6".into(),
            method: "ground-truth".into(),
            per_seed: vec![
                SeedSummary {
                    seed: 0,
                    mean_reward: 0.8533333333333333,
                    win_rate: 1.0,
                    episode_rewards: vec![0.86, 0.85, 0.85],
                    best_pool_score: Some(-1.25e-3),
                },
                SeedSummary {
                    seed: 1,
                    mean_reward: 0.91,
                    win_rate: 1.0,
                    episode_rewards: vec![0.91],
                    best_pool_score: None,
                },
            ],
            mean_reward: 0.8816666666666666,
            reward_ci: (0.8533333333333333, 0.91),
            win_rate: 1.0,
            win_ci: (1.0, 1.0),
            entropy_curve: vec![1.2, 0.7, 0.1],
            map_accuracy_curve: vec![0.2, 0.7, 1.0],
            mass_on_true_curve: vec![0.3, 0.8, 1.0],
            warnings: vec![],
        }
    }

    #[test]
    fn metrics_csv_round_trips_exact_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let r = report();
        write_metrics_csv(&r, &path).unwrap();
        let rows = read_metrics_csv(&path).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].mean_reward, r.per_seed[0].mean_reward);
        assert_eq!(rows[0].best_pool_score, r.per_seed[0].best_pool_score);
        assert_eq!(rows[2].mean_reward, r.mean_reward);
        assert_eq!(rows[2].seed, "all");
    }

    #[test]
    fn plots_exist_for_multiple_reports() {
        let dir = tempfile::tempdir().unwrap();
        let a = report();
        let mut b = report();
        b.env = "corners-10x10".into();
        let mut c = report();
        c.env = "lava-10x10".into();
        let mut d = report();
        d.env = "fourrooms-19x19".into();
        let files = emit_plots(&[&a, &b, &c, &d], dir.path()).unwrap();
        assert!(files.iter().any(|f| f.ends_with("reward_bars.svg")));
        let svg_text = std::fs::read_to_string(dir.path().join("reward_bars.svg")).unwrap();
        assert_eq!(svg_text.matches("<rect x=").count(), 4, "four bar groups");
        assert!(files.iter().all(|f| f.exists()));
    }

    #[test]
    fn entropy_curve_has_one_point_per_step() {
        let dir = tempfile::tempdir().unwrap();
        let r = report();
        emit_plots(&[&r], dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("belief_entropy.csv")).unwrap();
        // Header + 3 steps.
        assert_eq!(text.lines().count(), 4);
    }
}
