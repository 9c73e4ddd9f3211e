//! Monte Carlo runners, one per experiment kind.
//!
//! Trials run in parallel and come back in trial order; every statistic is
//! computed afterwards, sequentially, so output does not depend on the
//! thread count.

mod evm;
mod probe;
mod residual;
mod trigger;
mod uplink;

use rayon::prelude::*;

use rofa_core::metrics::{mean, median};

use crate::config::{Experiment, Scenario};
use crate::output::{MetricRow, RowSink};
use crate::sim::UserOutcome;
use crate::Result;

pub(crate) fn run(s: &Scenario) -> Result<Vec<MetricRow>> {
    let mut sink = RowSink::new(&s.name);
    match &s.experiment {
        Experiment::ResidualCfo(e) => residual::run(s, e, &mut sink)?,
        Experiment::Evm(e) => evm::run(s, e, &mut sink)?,
        Experiment::Uplink(e) => uplink::run(s, e, &mut sink)?,
        Experiment::CoherenceProbe(e) => probe::run(s, e, &mut sink)?,
        Experiment::TriggerOffset(e) => trigger::run(s, e, &mut sink)?,
    }
    Ok(sink.into_rows())
}

fn par_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Running totals of one user's outcomes at one sweep point.
#[derive(Debug, Default)]
struct Tally {
    packets: usize,
    info_bits: usize,
    bit_errors: usize,
    coded_bits: usize,
    raw_errors: usize,
    crc_fail: usize,
    unsynced: usize,
    snr: Vec<f64>,
    residual: Vec<f64>,
    evm: Vec<f64>,
}

impl Tally {
    fn add(&mut self, o: &UserOutcome) {
        self.packets += 1;
        self.info_bits += o.info_bits;
        self.bit_errors += o.bit_errors;
        self.coded_bits += o.coded_bits;
        self.raw_errors += o.raw_errors;
        self.crc_fail += usize::from(!o.crc_ok);
        self.unsynced += usize::from(!o.synced);
        self.snr.extend(o.ul_snr_db);
        self.residual.extend(o.residual_hz);
        self.evm.extend(o.evm);
    }

    fn emit(&self, sink: &mut RowSink, variant: &str, user: u8, axis: &str, x: f64) {
        let n = self.packets;
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        sink.push(variant, user, axis, x, "ber", ratio(self.bit_errors, self.info_bits), n);
        sink.push(variant, user, axis, x, "raw_ber", ratio(self.raw_errors, self.coded_bits), n);
        sink.push(variant, user, axis, x, "per", ratio(self.crc_fail, n), n);
        sink.push(variant, user, axis, x, "sync_failure_rate", ratio(self.unsynced, n), n);
        if let Some(m) = mean(&self.snr) {
            sink.push(variant, user, axis, x, "ul_snr_db_measured", m, n);
        }
        if let Some(m) = median(&self.residual) {
            sink.push(variant, user, axis, x, "residual_cfo_hz_median", m, n);
        }
        // Per-packet EVM scales with 1/|h| of the zero-forcing estimate, whose
        // second moment diverges, so the pooled RMS is reported but the
        // per-packet mean is the headline statistic.
        if let Some(m) = mean(&self.evm) {
            sink.push(variant, user, axis, x, "evm", m, n);
            let sq: Vec<f64> = self.evm.iter().map(|e| e * e).collect();
            sink.push(variant, user, axis, x, "evm_rms", mean(&sq).unwrap_or(m).sqrt(), n);
        }
        if let Some(m) = median(&self.evm) {
            sink.push(variant, user, axis, x, "evm_median", m, n);
        }
    }
}
