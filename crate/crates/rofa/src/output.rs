//! Result rows and CSV emission.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::Result;

pub const CSV_HEADER: &str = "scenario,variant,user,x_axis,x_value,metric,value,trials";

/// One summary value. `user` is 0 for rows that are not per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scenario: String,
    pub variant: String,
    pub user: u8,
    pub x_axis: String,
    pub x_value: f64,
    pub metric: String,
    pub value: f64,
    pub trials: usize,
}

fn key_cmp(a: &MetricRow, b: &MetricRow) -> Ordering {
    (&a.variant, a.user, &a.x_axis)
        .cmp(&(&b.variant, b.user, &b.x_axis))
        .then(a.x_value.total_cmp(&b.x_value))
        .then(a.metric.cmp(&b.metric))
}

/// Output order: variant, user, axis, x, metric.
pub fn sort_rows(rows: &mut [MetricRow]) {
    rows.sort_by(key_cmp);
}

pub fn write_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Collects rows for one scenario.
#[derive(Debug)]
pub struct RowSink {
    scenario: String,
    rows: Vec<MetricRow>,
}

impl RowSink {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            rows: Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, variant: &str, user: u8, x_axis: &str, x: f64, metric: &str, value: f64, trials: usize) {
        self.rows.push(MetricRow {
            scenario: self.scenario.clone(),
            variant: variant.to_string(),
            user,
            x_axis: x_axis.to_string(),
            x_value: x,
            metric: metric.to_string(),
            value,
            trials,
        });
    }

    pub fn into_rows(self) -> Vec<MetricRow> {
        self.rows
    }
}

/// Rows matching `variant`, `user` and `metric`, as `(x, value)` sorted by x.
pub fn curve(rows: &[MetricRow], variant: &str, user: u8, metric: &str) -> Vec<(f64, f64)> {
    let mut c: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.variant == variant && r.user == user && r.metric == metric)
        .map(|r| (r.x_value, r.value))
        .collect();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    c
}
