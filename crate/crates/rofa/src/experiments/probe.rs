use rofa_core::cfo::{angle, lagged_correlation};
use rofa_core::channel::{noise_var_for_snr, step_drift, traverse, Direction, DriftModel, LinkModel};
use rofa_core::metrics::mean;
use rofa_core::packet::assemble_probe;

use super::par_trials;
use crate::config::{ProbeSpec, Scenario};
use crate::output::RowSink;
use crate::sim::{trial_rng, Radio};
use crate::Result;

/// Per round: true UL CFO, A-to-B estimate, B-to-A estimate (rad/sample).
type Round = (f64, f64, f64);

pub(super) fn run(s: &Scenario, spec: &ProbeSpec, sink: &mut RowSink) -> Result<()> {
    let radio = Radio::new(&s.phy)?;
    let probe = assemble_probe(&radio.training, spec.n_lts)?;
    let n = radio.n_fft;
    let first = radio.training.stf.len();
    let span = (spec.n_lts - 1) * n;
    let k = s.oscillator_factor;
    let link0 = LinkModel {
        noise_var: noise_var_for_snr(1.0, spec.snr_db),
        drift: Some(DriftModel {
            step: s.phy.freq(spec.drift_step).abs() * k,
            bound: s.phy.freq(spec.drift_bound).abs() * k,
            nominal: s.phy.freq(spec.cfo) * k,
        }),
        ..LinkModel::ideal(s.phy.freq(spec.cfo) * k)
    };
    // B is the UL side: B-to-A sees +cfo, A-to-B sees -cfo
    let estimate = |rx: &[rofa_core::Complex64]| -> Result<f64> {
        Ok(angle(lagged_correlation(rx, first, first + n, span)?) / n as f64)
    };

    let runs: Vec<Vec<Round>> = par_trials(s.trials, |t| {
        let mut rng = trial_rng(s.seed, 0, t);
        let mut link = link0.clone();
        let mut rounds = Vec::with_capacity(spec.rounds);
        for r in 0..spec.rounds {
            if r > 0 {
                link = step_drift(&link, &mut rng);
            }
            let ab = estimate(&traverse(&link, Direction::Dl, &probe.samples, &mut rng))?;
            let ba = estimate(&traverse(&link, Direction::Ul, &probe.samples, &mut rng))?;
            rounds.push((link.cfo, ab, ba));
        }
        Ok(rounds)
    })?;

    let trials = runs.len();
    let hz = |v: f64| radio.hz(v);
    for r in 0..spec.rounds {
        let x = r as f64;
        let col = |f: &dyn Fn(&Round) -> f64| -> f64 {
            mean(&runs.iter().map(|run| f(&run[r])).collect::<Vec<_>>()).unwrap_or(0.0)
        };
        sink.push("a-to-b", 0, "round", x, "relative_cfo_hz", col(&|p| hz(p.1)), trials);
        sink.push("a-to-b", 0, "round", x, "true_cfo_hz", col(&|p| hz(-p.0)), trials);
        sink.push("a-to-b", 0, "round", x, "estimation_error_hz", col(&|p| hz((p.1 + p.0).abs())), trials);
        sink.push("b-to-a", 0, "round", x, "relative_cfo_hz", col(&|p| hz(p.2)), trials);
        sink.push("b-to-a", 0, "round", x, "true_cfo_hz", col(&|p| hz(p.0)), trials);
        sink.push("b-to-a", 0, "round", x, "estimation_error_hz", col(&|p| hz((p.2 - p.0).abs())), trials);
        sink.push("pair", 0, "round", x, "reciprocity_error_hz", col(&|p| hz((p.1 + p.2).abs())), trials);
    }

    // largest excursion over the run, worst trial
    let spread = |f: &dyn Fn(&Round) -> f64| -> f64 {
        runs.iter()
            .map(|run| {
                let (lo, hi) = run.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
                hi - lo
            })
            .fold(0.0, f64::max)
    };
    let x = spec.rounds as f64;
    sink.push("a-to-b", 0, "rounds", x, "max_variation_hz", hz(spread(&|p| p.1)), trials);
    sink.push("b-to-a", 0, "rounds", x, "max_variation_hz", hz(spread(&|p| p.2)), trials);
    sink.push("pair", 0, "rounds", x, "true_max_variation_hz", hz(spread(&|p| p.0)), trials);
    Ok(())
}
