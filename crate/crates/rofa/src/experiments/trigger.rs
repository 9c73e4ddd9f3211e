use std::collections::BTreeMap;

use rand::Rng;

use rofa_core::channel::{add_awgn, superimpose};
use rofa_core::framing::{FrameTiming, LayoutParams};
use rofa_core::packet::assemble_dl;
use rofa_core::sync_rx::{auto_trigger, detect_dl_start, schedule_ul_start, SampleClock};
use rofa_core::{db_to_linear, Complex64};

use super::par_trials;
use crate::config::{Detection, Scenario, TriggerSpec};
use crate::output::RowSink;
use crate::sim::{trial_rng, Radio, LEAD};
use crate::Result;

const VARIANT: &str = "auto-trigger";

pub(super) fn run(s: &Scenario, spec: &TriggerSpec, sink: &mut RowSink) -> Result<()> {
    let radio = Radio::new(&s.phy)?;
    let dl_slot = radio.dl_packet(s.phy.n_mltf, None)?.layout.duration() as i64;
    let ul_slot = ((2 + radio.format.n_symbols(3)) * (radio.n_fft + radio.cp_len)) as i64;
    let base = FrameTiming::new(1_000, dl_slot, ul_slot, radio.guard as i64)?;
    // a short DL packet is enough to exercise the detector
    let preamble = assemble_dl(
        &LayoutParams {
            n_fft: radio.n_fft,
            cp_len: radio.cp_len,
            n_data: 2,
            n_ci: 0,
            n_mltf: 0,
            mltf_gap: 2,
        },
        &radio.training,
        &[],
        &[],
    )?;

    let offsets: Vec<Option<i64>> = par_trials(s.trials, |k| {
        let mut rng = trial_rng(s.seed, 0, k);
        let skew = rng.random_range(-spec.max_skew..=spec.max_skew);
        let jitter = match spec.detection {
            Detection::Model { p_zero } => {
                let u: f64 = rng.random();
                Some(if u < p_zero {
                    0
                } else if u < p_zero + 0.5 * (1.0 - p_zero) {
                    -1
                } else {
                    1
                })
            }
            Detection::Detector { snr_db } => {
                let mut buf = superimpose(&[(&preamble.samples, LEAD as i64)]);
                buf.resize(buf.len() + 2 * radio.n_fft, Complex64::new(0.0, 0.0));
                add_awgn(&mut buf, 1.0 / db_to_linear(snr_db), &mut rng);
                detect_dl_start(&buf, &radio.training, &radio.detector())
                    .ok()
                    .map(|d| d as i64 - LEAD as i64)
            }
        };
        Ok(jitter.map(|e| {
            let frame = FrameTiming {
                t_dl_start: base.t_dl_start + k as i64 * base.period(),
                ..base
            };
            let ap = auto_trigger(frame.t_dl_start, frame.dl_to_ul(), k as u64);
            let clock = SampleClock::new(1, skew);
            let detected = clock.to_local(frame.t_dl_start) + e;
            let (_, global) = schedule_ul_start(detected, &frame, &clock);
            global - ap.t_ul
        }))
    })?;

    let n = offsets.len();
    let hits: Vec<i64> = offsets.iter().flatten().copied().collect();
    let mut hist: BTreeMap<i64, usize> = (-1..=1).map(|o| (o, 0)).collect();
    for &o in &hits {
        *hist.entry(o).or_default() += 1;
    }
    for (o, c) in hist {
        sink.push(VARIANT, 1, "offset_samples", o as f64, "fraction", c as f64 / n as f64, n);
    }
    let x = spec.max_skew as f64;
    let within = hits.iter().filter(|o| o.abs() <= 1).count();
    sink.push(VARIANT, 1, "max_skew_samples", x, "within_one_sample", within as f64 / n as f64, n);
    let worst = hits.iter().map(|o| o.abs()).max().unwrap_or(0);
    sink.push(VARIANT, 1, "max_skew_samples", x, "max_abs_offset", worst as f64, n);
    sink.push(VARIANT, 1, "max_skew_samples", x, "miss_rate", (n - hits.len()) as f64 / n as f64, n);
    Ok(())
}
