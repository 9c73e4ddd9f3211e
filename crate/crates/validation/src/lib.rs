//! Reporting helpers for the acceptance target: one PASS/FAIL line per
//! criterion, indented detail lines, and a process exit code.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rofa_sim::output::curve;
use rofa_sim::MetricRow;

#[derive(Default)]
pub struct Report {
    failed: Vec<String>,
    total: usize,
}

impl Report {
    pub fn check(&mut self, id: &str, what: &str, pass: bool, detail: impl AsRef<str>) -> bool {
        self.total += 1;
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id}] {what}: {}", detail.as_ref());
        if !pass {
            self.failed.push(id.to_string());
        }
        pass
    }

    pub fn note(&self, line: impl AsRef<str>) {
        println!("       {}", line.as_ref());
    }

    pub fn finish(self) -> ExitCode {
        println!(
            "acceptance: {} of {} criteria passed{}",
            self.total - self.failed.len(),
            self.total,
            if self.failed.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", self.failed.join(", "))
            }
        );
        if self.failed.is_empty() {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

/// A metric averaged over the given users, as `(x, y)` points.
pub fn pooled(rows: &[MetricRow], variant: &str, users: &[u8], metric: &str) -> Vec<(f64, f64)> {
    let curves: Vec<_> = users.iter().map(|&u| curve(rows, variant, u, metric)).collect();
    let first = &curves[0];
    (0..first.len())
        .map(|i| {
            let y = curves.iter().map(|c| c[i].1).sum::<f64>() / curves.len() as f64;
            (first[i].0, y)
        })
        .collect()
}

/// The metric at one x value, if present.
pub fn value_at(rows: &[MetricRow], variant: &str, user: u8, metric: &str, x: f64) -> Option<f64> {
    curve(rows, variant, user, metric)
        .into_iter()
        .find(|p| (p.0 - x).abs() < 1e-9)
        .map(|p| p.1)
}

pub fn fmt_curve(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(x, y)| format!("{x}:{y:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(user: u8, x: f64, v: f64) -> MetricRow {
        MetricRow {
            scenario: "s".into(),
            variant: "v".into(),
            user,
            x_axis: "x".into(),
            x_value: x,
            metric: "m".into(),
            value: v,
            trials: 1,
        }
    }

    #[test]
    fn pooling_averages_users() {
        let rows = vec![row(1, 0.0, 1.0), row(2, 0.0, 3.0), row(1, 1.0, 0.0), row(2, 1.0, 2.0)];
        assert_eq!(pooled(&rows, "v", &[1, 2], "m"), vec![(0.0, 2.0), (1.0, 1.0)]);
        assert_eq!(value_at(&rows, "v", 2, "m", 1.0), Some(2.0));
        assert_eq!(value_at(&rows, "v", 2, "m", 5.0), None);
    }

    #[test]
    fn report_counts_failures() {
        let mut r = Report::default();
        assert!(r.check("x", "ok", true, ""));
        assert!(!r.check("y", "bad", false, ""));
        assert_eq!(r.failed, vec!["y".to_string()]);
    }
}
